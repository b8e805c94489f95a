//! Search for violations of the inequality when the input alphabet has three
//! or more symbols.

use serde::{Deserialize, Serialize};

use super::kernel::MarginKernel;
use super::{lhs_value, margin, rhs_value, Gate, GateJoint, MARGIN_TOL};
use crate::error::{Error, Result};
use crate::info::{BroadcastChannel, JointPmf};
use crate::search::{lattice_size, pattern_refine, scan_top_k, OptimizerConfig, SimplexLattice};

/// Upper bound on kernel evaluations per auxiliary alphabet pair.
const EVAL_BUDGET: u64 = 15_000_000;
const STARTS: usize = 4;
/// Largest auxiliary alphabet searched; `|X|^(|U||V|)` gates grow too fast beyond.
const MAX_AUX: usize = 3;

/// A point with negative margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub witness: GateJoint,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Coverage of one `(|U|, |V|)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetRun {
    pub u_size: usize,
    pub v_size: usize,
    pub gates: usize,
    pub subdivisions: u32,
    pub points: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSearch {
    /// Most negative point found, if its margin is below `-MARGIN_TOL`.
    pub witness: Option<Violation>,
    pub min_margin: f64,
    pub runs: Vec<AlphabetRun>,
}

fn gate_from_index(nu: usize, nv: usize, nx: usize, mut g: usize) -> Gate {
    let table = (0..nu * nv)
        .map(|_| {
            let x = g % nx;
            g /= nx;
            x
        })
        .collect();
    Gate::new(nu, nv, nx, table).expect("digits lie in the alphabet")
}

/// Scans every deterministic gate `{0..|U|-1} x {0..|V|-1} -> X` for
/// `2 <= |U|, |V| <= min(|X|, 3)` together with a `p(u,v)` lattice, refines the most
/// negative candidates and returns the worst point found.
pub fn search_violation(bc: &BroadcastChannel, cfg: &OptimizerConfig) -> Result<ViolationSearch> {
    cfg.validate()?;
    let nx = bc.input_size();
    if nx < 3 {
        return Err(Error::InvalidParameter(format!(
            "violation search needs at least 3 input symbols, got {nx}; binary channels are covered by verification"
        )));
    }
    let mut runs = Vec::new();
    let mut best: Option<Violation> = None;
    let max_aux = nx.min(MAX_AUX);
    for nu in 2..=max_aux {
        for nv in 2..=max_aux {
            let cells = nu * nv;
            let gates = nx.checked_pow(cells as u32).filter(|&g| g as u64 <= EVAL_BUDGET);
            let Some(gates) = gates else { continue };
            let mut n = cfg.subdivisions();
            while n > 1 && gates as u64 * lattice_size(cells, n) > EVAL_BUDGET {
                n -= 1;
            }
            let lattice = SimplexLattice::new(cells, n);
            let count = gates * lattice.len();
            let top = scan_top_k(
                count,
                STARTS,
                || (MarginKernel::new(bc), vec![0.0; cells], vec![0usize; cells]),
                |(k, p, table), i| {
                    let (mut g, point) = (i / lattice.len(), i % lattice.len());
                    for t in table.iter_mut() {
                        *t = g % nx;
                        g /= nx;
                    }
                    lattice.write_point(point, 1.0, p);
                    -k.eval_gate(nu, nv, p, table).margin()
                },
            );
            let mut settings = cfg.refine_settings();
            settings.initial_step = 1.0 / n as f64;
            let mut run_min = f64::INFINITY;
            for s in top {
                let gate = gate_from_index(nu, nv, nx, s.index / lattice.len());
                let start = lattice.point(s.index % lattice.len(), 1.0);
                let mut k = MarginKernel::new(bc);
                let (_, p) = pattern_refine(start, &[cells], &settings, |x| {
                    -k.eval_gate(nu, nv, x, gate.table()).margin()
                });
                let total: f64 = p.iter().sum();
                let p = p.iter().map(|m| m.max(0.0) / total).collect();
                let witness = GateJoint::new(JointPmf::new(vec![nu, nv], p)?, gate)?;
                let v = Violation {
                    lhs: lhs_value(&witness, bc)?,
                    rhs: rhs_value(&witness.induced_px(), bc)?,
                    margin: margin(&witness, bc)?,
                    witness,
                };
                run_min = run_min.min(v.margin);
                if best.as_ref().is_none_or(|b| v.margin < b.margin) {
                    best = Some(v);
                }
            }
            runs.push(AlphabetRun {
                u_size: nu,
                v_size: nv,
                gates,
                subdivisions: n,
                points: count,
                min_margin: run_min,
            });
        }
    }
    let min_margin = best.as_ref().map_or(f64::INFINITY, |b| b.margin);
    Ok(ViolationSearch {
        witness: best.filter(|b| b.margin < -MARGIN_TOL),
        min_margin,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_digits_cover_the_table() {
        // base-3 digits 1, 2, 0, 1, least significant first
        let g = gate_from_index(2, 2, 3, 34);
        assert_eq!(g.table(), &[1, 2, 0, 1]);
    }
}
