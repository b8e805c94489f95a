//! Verification of the inequality on one binary-input channel.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gate::{gate_canonicalize, CanonicalCase, CaseId, Gate};
use super::kernel::MarginKernel;
use super::maximize::{search_gate, Candidate, GateSearch};
use super::{margin_triple, lhs_triple, MARGIN_TOL};
use crate::error::Result;
use crate::info::{BroadcastChannel, JointPmf};
use crate::search::{pattern_refine, scan_top_k, OptimizerConfig, SimplexLattice};

/// Lattice points per axis of the unrestricted `p(u,v,x)` oracle.
pub const ORACLE_POINTS_PER_AXIS: usize = 17;

/// Outcome for one of the 16 binary gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub gate: String,
    pub gate_id: u8,
    pub canonical: CanonicalCase,
    pub max_lhs: f64,
    pub argmax: super::GateJoint,
    pub rhs_at_argmax: f64,
    /// `rhs_at_argmax - max_lhs`.
    pub margin: f64,
    /// Smallest margin located anywhere for this gate.
    pub min_margin: f64,
    pub min_margin_point: super::GateJoint,
}

/// The unrestricted search over `p(u,v,x)` with binary `U`, `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub points: usize,
    pub min_margin: f64,
    /// `p(u,v,x)` at the minimum, row-major `(u, v, x)`.
    pub argmin: Vec<f64>,
    pub lhs_at_argmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMetadata {
    pub config: OptimizerConfig,
    pub canonical_runs: usize,
    pub lattice_points_per_run: usize,
    pub refine_starts: usize,
    pub oracle_points_per_axis: usize,
    pub total_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub channel_digest: String,
    pub per_gate_results: Vec<GateResult>,
    pub oracle: OracleResult,
    pub global_min_margin: f64,
    pub holds: bool,
    pub search_metadata: SearchMetadata,
}

impl VerificationReport {
    /// The gate result with the smallest margin at the left-side maximizer.
    pub fn tightest_gate(&self) -> &GateResult {
        self.per_gate_results
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("sixteen gates")
    }
}

/// Searches all 16 gates (through their canonical cases) plus the coarse
/// unrestricted oracle and reports the smallest margin found.
pub fn verify_binary_channel(bc: &BroadcastChannel, cfg: &OptimizerConfig) -> Result<VerificationReport> {
    bc.require_binary()?;
    cfg.validate()?;

    let mut runs: BTreeMap<(CaseId, bool, bool), GateSearch> = BTreeMap::new();
    let mut per_gate_results = Vec::with_capacity(16);
    for g in Gate::all_binary() {
        let c = gate_canonicalize(&g)?;
        let key = (c.case_id, c.relabeling.swap_uv, c.relabeling.flip_x);
        if let std::collections::btree_map::Entry::Vacant(e) = runs.entry(key) {
            let channel = c.relabeling.transport_channel(bc);
            let run = search_gate(&channel, &c.case_id.representative(), cfg, None)?;
            e.insert(run);
        }
        let run = &runs[&key];
        let pull = |cand: &Candidate| -> Result<Candidate> {
            let p = c.relabeling.pull_back_puv(&cand.point.puv_array());
            Candidate::evaluate(super::GateJoint::binary(p, g.clone())?, bc)
        };
        let best = pull(&run.max_lhs)?;
        let worst = pull(&run.min_margin)?;
        // the transported maximizer may land a hair away; keep the better of both
        let min_margin = worst.margin.min(best.margin);
        let min_point = if worst.margin <= best.margin {
            worst.point
        } else {
            best.point.clone()
        };
        per_gate_results.push(GateResult {
            gate: g.name(),
            gate_id: g.binary_id().expect("binary gate"),
            canonical: c,
            max_lhs: best.lhs,
            argmax: best.point,
            rhs_at_argmax: best.rhs,
            margin: best.rhs - best.lhs,
            min_margin,
            min_margin_point: min_point,
        });
    }

    let oracle = triple_oracle(bc, cfg)?;
    let global_min_margin = per_gate_results
        .iter()
        .map(|r| r.min_margin.min(r.margin))
        .fold(oracle.min_margin, f64::min);

    let lattice_points_per_run = runs.values().next().map_or(0, |r| r.lattice_points);
    let refine_starts = runs.values().map(|r| r.refine_starts).sum::<usize>() + 1;
    let search_metadata = SearchMetadata {
        config: *cfg,
        canonical_runs: runs.len(),
        lattice_points_per_run,
        refine_starts,
        oracle_points_per_axis: ORACLE_POINTS_PER_AXIS,
        total_points: runs.len() * lattice_points_per_run + oracle.points,
    };
    Ok(VerificationReport {
        channel_digest: bc.digest(),
        per_gate_results,
        oracle,
        global_min_margin,
        holds: global_min_margin >= -MARGIN_TOL,
        search_metadata,
    })
}

fn triple_oracle(bc: &BroadcastChannel, cfg: &OptimizerConfig) -> Result<OracleResult> {
    const CELLS: usize = 8;
    let lattice = SimplexLattice::new(CELLS, (ORACLE_POINTS_PER_AXIS - 1) as u32);
    let top = scan_top_k(
        lattice.len(),
        1,
        || (MarginKernel::new(bc), vec![0.0; CELLS]),
        |(k, p), i| {
            lattice.write_point(i, 1.0, p);
            -k.eval_triple(2, 2, p).margin()
        },
    );
    let start = lattice.point(top[0].index, 1.0);
    let mut k = MarginKernel::new(bc);
    let mut settings = cfg.refine_settings();
    settings.initial_step = 1.0 / (ORACLE_POINTS_PER_AXIS - 1) as f64;
    let (_, p) = pattern_refine(start, &[CELLS], &settings, |x| -k.eval_triple(2, 2, x).margin());
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|m| m.max(0.0) / total).collect();
    let joint = JointPmf::new(vec![2, 2, 2], p.clone())?;
    Ok(OracleResult {
        points: lattice.len(),
        min_margin: margin_triple(&joint, bc)?,
        lhs_at_argmin: lhs_triple(&joint, bc)?,
        argmin: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::TransitionMatrix;

    #[test]
    fn ss1_channel_is_tight_everywhere() {
        let y = TransitionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]], 0.0).unwrap();
        let z = TransitionMatrix::from_rows(&[vec![0.8, 0.2], vec![0.8, 0.2]], 0.0).unwrap();
        let bc = BroadcastChannel::new(y, z).unwrap();
        let r = verify_binary_channel(&bc, &OptimizerConfig::with_grid(11)).unwrap();
        assert!(r.holds);
        assert!(r.global_min_margin.abs() < 1e-12, "{}", r.global_min_margin);
        assert_eq!(r.per_gate_results.len(), 16);
        for g in &r.per_gate_results {
            assert!(g.max_lhs.abs() < 1e-12);
            assert_eq!(g.margin, g.rhs_at_argmax - g.max_lhs);
        }
    }

    #[test]
    fn non_binary_channel_is_rejected() {
        let y = TransitionMatrix::identity(3).unwrap();
        let bc = BroadcastChannel::new(y.clone(), y).unwrap();
        assert!(verify_binary_channel(&bc, &OptimizerConfig::default()).is_err());
    }
}
