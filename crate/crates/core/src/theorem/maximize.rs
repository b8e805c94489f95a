//! Lattice scan plus pattern refinement of the left side for a fixed gate.

use serde::{Deserialize, Serialize};

use super::kernel::{MarginKernel, SidePair};
use super::{lhs_value, margin, rhs_value, Gate, GateJoint};
use crate::error::{Error, Result};
use crate::info::{BroadcastChannel, Distribution, JointPmf, INGEST_TOL};
use crate::search::{pattern_refine, OptimizerConfig, SimplexLattice, TopK};

/// Best lattice points kept as refinement starts (vertices are always added).
const LATTICE_STARTS: usize = 3;

/// One located point, re-evaluated through the validated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: GateJoint,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Candidate {
    pub(crate) fn evaluate(point: GateJoint, bc: &BroadcastChannel) -> Result<Self> {
        let lhs = lhs_value(&point, bc)?;
        let rhs = rhs_value(&point.induced_px(), bc)?;
        Ok(Self {
            margin: margin(&point, bc)?,
            point,
            lhs,
            rhs,
        })
    }
}

/// Result of one gate search: the largest left side and the smallest margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSearch {
    pub max_lhs: Candidate,
    pub min_margin: Candidate,
    pub lattice_points: usize,
    pub refine_starts: usize,
}

/// The feasible `p(u,v)` set as a product of scaled simplices.
///
/// Without a fixed `p(x)` this is one simplex over all cells; with one, the
/// cells are grouped by gate output and each group carries mass `p(x)`.
struct BlockSpace {
    cells: usize,
    /// Cell indices in block order.
    order: Vec<usize>,
    sizes: Vec<usize>,
    totals: Vec<f64>,
    lattices: Vec<SimplexLattice>,
    len: usize,
}

impl BlockSpace {
    fn new(gate: &Gate, fixed_px: Option<&Distribution>, subdivisions: u32) -> Result<Self> {
        let cells = gate.u_size() * gate.v_size();
        let (order, sizes, totals) = match fixed_px {
            None => ((0..cells).collect(), vec![cells], vec![1.0]),
            Some(px) => {
                if px.alphabet_size() != gate.x_size() {
                    return Err(Error::DimensionMismatch {
                        context: "fixed p(x) vs gate range",
                        expected: gate.x_size(),
                        found: px.alphabet_size(),
                    });
                }
                let mut order = Vec::new();
                let mut sizes = Vec::new();
                let mut totals = Vec::new();
                for x in 0..gate.x_size() {
                    let members: Vec<usize> =
                        (0..cells).filter(|&c| gate.table()[c] == x).collect();
                    let mass = px.masses()[x];
                    if members.is_empty() {
                        if mass > INGEST_TOL {
                            return Err(Error::Infeasible(format!(
                                "gate {} never outputs {x} but p(x={x}) = {mass}",
                                gate.name()
                            )));
                        }
                        continue;
                    }
                    sizes.push(members.len());
                    totals.push(mass);
                    order.extend(members);
                }
                (order, sizes, totals)
            }
        };
        let lattices: Vec<SimplexLattice> = sizes
            .iter()
            .zip(&totals)
            .map(|(&s, &t)| SimplexLattice::new(s, if t > 0.0 { subdivisions } else { 0 }))
            .collect();
        let len = lattices.iter().map(SimplexLattice::len).product();
        Ok(Self {
            cells,
            order,
            sizes,
            totals,
            lattices,
            len,
        })
    }

    /// Writes lattice point `i` (block order) into `out`.
    fn write_blocked(&self, mut i: usize, out: &mut [f64]) {
        let mut offset = self.cells;
        for b in (0..self.lattices.len()).rev() {
            let l = &self.lattices[b];
            offset -= self.sizes[b];
            l.write_point(i % l.len(), self.totals[b], &mut out[offset..offset + self.sizes[b]]);
            i /= l.len();
        }
    }

    fn to_natural(&self, blocked: &[f64], out: &mut [f64]) {
        for (k, &c) in self.order.iter().enumerate() {
            out[c] = blocked[k];
        }
    }

    /// Every vertex of the product of simplices, in block order.
    fn vertices(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cells]];
        let mut offset = 0;
        for (b, &size) in self.sizes.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * size);
            for v in &out {
                for k in 0..size {
                    let mut w = v.clone();
                    w[offset + k] = self.totals[b];
                    next.push(w);
                }
            }
            out = next;
            offset += size;
        }
        out
    }
}

fn joint_from(gate: &Gate, natural: &[f64]) -> Result<GateJoint> {
    let total: f64 = natural.iter().sum();
    let masses = natural.iter().map(|m| m.max(0.0) / total).collect();
    GateJoint::new(JointPmf::new(vec![gate.u_size(), gate.v_size()], masses)?, gate.clone())
}

/// Best lattice point of the left side for a fixed gate and input
/// distribution, without refinement. `None` when the gate cannot induce `px`.
pub(crate) fn lattice_max_lhs(
    kernel: &mut MarginKernel,
    gate: &Gate,
    px: &Distribution,
    subdivisions: u32,
) -> Result<Option<(f64, Vec<f64>)>> {
    let space = match BlockSpace::new(gate, Some(px), subdivisions) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let cells = space.cells;
    let (mut blocked, mut natural) = (vec![0.0; cells], vec![0.0; cells]);
    let mut best: Option<(f64, usize)> = None;
    for i in 0..space.len {
        space.write_blocked(i, &mut blocked);
        space.to_natural(&blocked, &mut natural);
        let v = kernel.eval_gate(gate.u_size(), gate.v_size(), &natural, gate.table()).lhs;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    Ok(best.map(|(v, i)| {
        space.write_blocked(i, &mut blocked);
        space.to_natural(&blocked, &mut natural);
        (v, natural)
    }))
}

/// Searches `p(u,v)` for one gate, tracking both the largest left side and
/// the smallest margin.
pub(crate) fn search_gate(
    bc: &BroadcastChannel,
    gate: &Gate,
    cfg: &OptimizerConfig,
    fixed_px: Option<&Distribution>,
) -> Result<GateSearch> {
    cfg.validate()?;
    if gate.x_size() != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "gate range vs channel input",
            expected: bc.input_size(),
            found: gate.x_size(),
        });
    }
    let space = BlockSpace::new(gate, fixed_px, cfg.subdivisions())?;
    let (nu, nv) = (gate.u_size(), gate.v_size());
    let table = gate.table();
    let cells = space.cells;

    let eval = |k: &mut MarginKernel, blocked: &[f64], natural: &mut [f64]| -> SidePair {
        space.to_natural(blocked, natural);
        k.eval_gate(nu, nv, natural, table)
    };

    let (top_lhs, top_margin) = {
        use rayon::prelude::*;
        const CHUNK: usize = 4096;
        let chunks = space.len.div_ceil(CHUNK);
        let parts: Vec<(TopK, TopK)> = (0..chunks)
            .into_par_iter()
            .map_init(
                || (MarginKernel::new(bc), vec![0.0; cells], vec![0.0; cells]),
                |(k, blocked, natural), c| {
                    let mut a = TopK::new(LATTICE_STARTS);
                    let mut b = TopK::new(LATTICE_STARTS);
                    for i in c * CHUNK..((c + 1) * CHUNK).min(space.len) {
                        space.write_blocked(i, blocked);
                        let s = eval(k, blocked, natural);
                        a.push(crate::search::Scored { value: s.lhs, index: i });
                        b.push(crate::search::Scored { value: -s.margin(), index: i });
                    }
                    (a, b)
                },
            )
            .collect();
        let mut a = TopK::new(LATTICE_STARTS);
        let mut b = TopK::new(LATTICE_STARTS);
        for (pa, pb) in parts {
            a.merge(pa);
            b.merge(pb);
        }
        (a.into_vec(), b.into_vec())
    };

    let settings = cfg.refine_settings();
    let vertices = space.vertices();
    let starts_for = |top: &[crate::search::Scored]| -> Vec<Vec<f64>> {
        let mut starts: Vec<Vec<f64>> = top
            .iter()
            .map(|s| {
                let mut p = vec![0.0; cells];
                space.write_blocked(s.index, &mut p);
                p
            })
            .collect();
        starts.extend(vertices.iter().cloned());
        starts
    };
    let refine = |starts: Vec<Vec<f64>>, score: fn(SidePair) -> f64| -> Vec<f64> {
        let mut k = MarginKernel::new(bc);
        let mut natural = vec![0.0; cells];
        let mut best: Option<(f64, Vec<f64>)> = None;
        for s in starts {
            let (v, p) = pattern_refine(s, &space.sizes, &settings, |x| {
                score(eval(&mut k, x, &mut natural))
            });
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, p));
            }
        }
        let (_, blocked) = best.expect("start set is never empty");
        let mut out = vec![0.0; cells];
        space.to_natural(&blocked, &mut out);
        out
    };

    let lhs_starts = starts_for(&top_lhs);
    let margin_starts = starts_for(&top_margin);
    let refine_starts = lhs_starts.len() + margin_starts.len();
    let best_lhs = refine(lhs_starts, |s| s.lhs);
    let worst_margin = refine(margin_starts, |s| -s.margin());

    Ok(GateSearch {
        max_lhs: Candidate::evaluate(joint_from(gate, &best_lhs)?, bc)?,
        min_margin: Candidate::evaluate(joint_from(gate, &worst_margin)?, bc)?,
        lattice_points: space.len,
        refine_starts,
    })
}

/// Largest `I(U;Y) + I(V;Z) - I(U;V)` over `p(u,v)` for a fixed gate.
///
/// With `fixed_px` the search is restricted to joints inducing that input
/// distribution. Returns the value re-evaluated at the reported maximizer.
pub fn max_lhs_for_gate(
    bc: &BroadcastChannel,
    g: &Gate,
    cfg: &OptimizerConfig,
    fixed_px: Option<&Distribution>,
) -> Result<(f64, GateJoint)> {
    let s = search_gate(bc, g, cfg, fixed_px)?;
    Ok((s.max_lhs.lhs, s.max_lhs.point))
}

/// Smallest margin over `p(u,v)` for a fixed gate.
pub fn min_margin_for_gate(
    bc: &BroadcastChannel,
    g: &Gate,
    cfg: &OptimizerConfig,
    fixed_px: Option<&Distribution>,
) -> Result<(f64, GateJoint)> {
    let s = search_gate(bc, g, cfg, fixed_px)?;
    Ok((s.min_margin.margin, s.min_margin.point))
}
