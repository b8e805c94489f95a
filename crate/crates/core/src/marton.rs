//! Sum-rate functionals for binary-input broadcast channels: Marton's inner
//! bound with a common auxiliary `W`, randomized time division, and a lower
//! estimate of the `(U, V)` outer bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{
    channel_mutual_information, conditional_mutual_information, mutual_information, neg_plogp,
    observe, BroadcastChannel, Distribution, JointPmf,
};
use crate::search::{
    maximize_concave_unit, pattern_refine, scan_top_k, OptimizerConfig, SimplexLattice,
};
use crate::theorem::kernel::MarginKernel;
use crate::theorem::{lattice_max_lhs, Gate};

const STARTS: usize = 3;
/// Auxiliary alphabet size for the outer-bound estimate.
pub const OUTER_AUX: usize = 3;
/// Lattice subdivisions cap for the outer-bound scan.
const OUTER_SUBDIVISIONS: u32 = 6;
const OUTER_STARTS: usize = 8;
const OUTER_EVALUATIONS: usize = 400_000;
/// One gate per orbit of `U`/`V` complementation, which keeps `p(x)` and the
/// channel fixed.
const GATE_ORBITS: [u8; 7] = [
    Gate::ZERO,
    Gate::ONE,
    Gate::PASS_U,
    Gate::PASS_V,
    Gate::AND,
    Gate::OR,
    Gate::XOR,
];

/// A joint `p(w, x)` with binary `W` and `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtdPoint {
    joint_wx: JointPmf,
}

impl RtdPoint {
    pub fn new(joint_wx: JointPmf) -> Result<Self> {
        if joint_wx.dims() != [2, 2] {
            return Err(Error::DimensionMismatch {
                context: "p(w,x) for time division",
                expected: 4,
                found: joint_wx.masses().len(),
            });
        }
        Ok(Self { joint_wx })
    }

    /// `P(W=0) = p0`, `P(X=1|W=0) = q0`, `P(X=1|W=1) = q1`.
    pub fn from_params(p0: f64, q0: f64, q1: f64) -> Result<Self> {
        let p1 = 1.0 - p0;
        Self::new(JointPmf::new(
            vec![2, 2],
            vec![p0 * (1.0 - q0), p0 * q0, p1 * (1.0 - q1), p1 * q1],
        )?)
    }

    pub fn joint_wx(&self) -> &JointPmf {
        &self.joint_wx
    }
}

/// `min{I(W;Y), I(W;Z)} + P(W=0) I(X;Y|W=0) + P(W=1) I(X;Z|W=1)`.
pub fn rtd_objective(pt: &RtdPoint, bc: &BroadcastChannel) -> Result<f64> {
    bc.require_binary()?;
    let j = &pt.joint_wx;
    let common = mutual_information(&observe(j, 1, bc.to_y())?)?
        .min(mutual_information(&observe(j, 1, bc.to_z())?)?);
    let mut value = common;
    for (w, ch) in [(0, bc.to_y()), (1, bc.to_z())] {
        let pw = j.get(&[w, 0]) + j.get(&[w, 1]);
        if pw > 0.0 {
            let px = Distribution::new(vec![j.get(&[w, 0]) / pw, j.get(&[w, 1]) / pw])?;
            value += pw * channel_mutual_information(&px, ch)?;
        }
    }
    Ok(value)
}

/// Per-`w` conditional output statistics for binary `W` and `X`.
struct Mixer {
    y: [Vec<f64>; 2],
    z: [Vec<f64>; 2],
    hy_rows: [f64; 2],
    hz_rows: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct Slices {
    q: [f64; 2],
    hy: [f64; 2],
    hz: [f64; 2],
}

fn mixture_entropy(rows: &[Vec<f64>; 2], q: f64) -> f64 {
    rows[0]
        .iter()
        .zip(&rows[1])
        .map(|(a, b)| neg_plogp((1.0 - q) * a + q * b))
        .sum()
}

impl Mixer {
    fn new(bc: &BroadcastChannel) -> Self {
        let y = [bc.to_y().row(0).to_vec(), bc.to_y().row(1).to_vec()];
        let z = [bc.to_z().row(0).to_vec(), bc.to_z().row(1).to_vec()];
        let h = |r: &[Vec<f64>; 2]| [crate::info::entropy_of(&r[0]), crate::info::entropy_of(&r[1])];
        Self {
            hy_rows: h(&y),
            hz_rows: h(&z),
            y,
            z,
        }
    }

    fn slices(&self, q0: f64, q1: f64) -> Slices {
        Slices {
            q: [q0, q1],
            hy: [mixture_entropy(&self.y, q0), mixture_entropy(&self.y, q1)],
            hz: [mixture_entropy(&self.z, q0), mixture_entropy(&self.z, q1)],
        }
    }

    /// `I(X;Y|W=w)` and `I(X;Z|W=w)`.
    fn iy(&self, s: &Slices, w: usize) -> f64 {
        s.hy[w] - (1.0 - s.q[w]) * self.hy_rows[0] - s.q[w] * self.hy_rows[1]
    }

    fn iz(&self, s: &Slices, w: usize) -> f64 {
        s.hz[w] - (1.0 - s.q[w]) * self.hz_rows[0] - s.q[w] * self.hz_rows[1]
    }

    /// `min{I(W;Y), I(W;Z)}` at `P(W=0) = p0`.
    fn common(&self, s: &Slices, p0: f64) -> f64 {
        let p1 = 1.0 - p0;
        let qm = p0 * s.q[0] + p1 * s.q[1];
        let iwy = mixture_entropy(&self.y, qm) - p0 * s.hy[0] - p1 * s.hy[1];
        let iwz = mixture_entropy(&self.z, qm) - p0 * s.hz[0] - p1 * s.hz[1];
        iwy.min(iwz)
    }

    /// Maximizes `common(p0) + p0 a0 + (1 - p0) a1`, which is concave in `p0`.
    fn best_split(&self, s: &Slices, a0: f64, a1: f64) -> (f64, f64) {
        maximize_concave_unit(|p0| self.common(s, p0) + p0 * a0 + (1.0 - p0) * a1)
    }

    fn rtd_best(&self, q0: f64, q1: f64) -> (f64, f64) {
        let s = self.slices(q0, q1);
        self.best_split(&s, self.iy(&s, 0), self.iz(&s, 1))
    }
}

fn q_grid(n: u32) -> Vec<f64> {
    (0..=n).map(|j| j as f64 / n as f64).collect()
}

/// Largest time-division sum rate over `p(w, x)`.
///
/// For fixed conditionals `p(x|w)` the objective is concave in `P(W=0)`,
/// which is maximized exactly; the conditionals are scanned on a grid and
/// refined by pattern search.
pub fn rtd_sum_rate_max(bc: &BroadcastChannel, cfg: &OptimizerConfig) -> Result<(f64, RtdPoint)> {
    bc.require_binary()?;
    cfg.validate()?;
    let mixer = Mixer::new(bc);
    let qs = q_grid(cfg.subdivisions());
    let m = qs.len();
    let top = scan_top_k(m * m, STARTS, || (), |_, i| mixer.rtd_best(qs[i / m], qs[i % m]).1);
    let settings = cfg.refine_settings();
    let mut best: Option<(f64, [f64; 2])> = None;
    for s in top {
        let (q0, q1) = (qs[s.index / m], qs[s.index % m]);
        let (v, x) = pattern_refine(vec![1.0 - q0, q0, 1.0 - q1, q1], &[2, 2], &settings, |x| {
            mixer.rtd_best(x[1], x[3]).1
        });
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, [x[1], x[3]]));
        }
    }
    let [q0, q1] = best.expect("non-empty start set").1;
    let (p0, _) = mixer.rtd_best(q0, q1);
    let point = RtdPoint::from_params(p0, q0, q1)?;
    Ok((rtd_objective(&point, bc)?, point))
}

/// A Marton auxiliary structure with binary `W`: `p(w)`, and for each `w` a
/// binary gate `X = f_w(U, V)` with a distribution `p(u, v | w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartonWitness {
    pub pw: Distribution,
    pub per_w_gate: Vec<u8>,
    pub per_w_puv: Vec<Distribution>,
}

impl MartonWitness {
    pub fn new(pw: Distribution, per_w_gate: Vec<u8>, per_w_puv: Vec<Distribution>) -> Result<Self> {
        let n = pw.alphabet_size();
        if per_w_gate.len() != n || per_w_puv.len() != n {
            return Err(Error::DimensionMismatch {
                context: "per-w gates and p(u,v|w)",
                expected: n,
                found: per_w_gate.len().min(per_w_puv.len()),
            });
        }
        if let Some(g) = per_w_gate.iter().find(|&&g| g >= 16) {
            return Err(Error::InvalidGate(format!("binary gate id {g} out of range")));
        }
        if let Some(d) = per_w_puv.iter().find(|d| d.alphabet_size() != 4) {
            return Err(Error::DimensionMismatch {
                context: "p(u,v|w)",
                expected: 4,
                found: d.alphabet_size(),
            });
        }
        Ok(Self {
            pw,
            per_w_gate,
            per_w_puv,
        })
    }

    /// From the table `cells[4w + 2u + v] = p(w, u, v)`.
    fn from_cells(cells: &[f64], gates: [u8; 2]) -> Result<Self> {
        let total: f64 = cells.iter().sum();
        let mut pw = Vec::with_capacity(2);
        let mut puvs = Vec::with_capacity(2);
        for w in 0..2 {
            let slice: Vec<f64> = cells[4 * w..4 * w + 4].iter().map(|c| c.max(0.0) / total).collect();
            let mass: f64 = slice.iter().sum();
            pw.push(mass);
            puvs.push(if mass > 0.0 {
                crate::info::validate_distribution(
                    &slice.iter().map(|c| c / mass).collect::<Vec<_>>(),
                    crate::info::INGEST_TOL,
                )?
            } else {
                Distribution::uniform(4)?
            });
        }
        Self::new(
            crate::info::validate_distribution(&pw, crate::info::INGEST_TOL)?,
            gates.to_vec(),
            puvs,
        )
    }

    /// The joint `p(u, v, w, x)`.
    pub fn compose(&self) -> Result<JointPmf> {
        let nw = self.pw.alphabet_size();
        let gates: Vec<Gate> = self.per_w_gate.iter().map(|&g| Gate::binary(g)).collect();
        JointPmf::from_fn(vec![2, 2, nw, 2], |i| {
            let (u, v, w, x) = (i[0], i[1], i[2], i[3]);
            if gates[w].eval(u, v) == x {
                self.pw.masses()[w] * self.per_w_puv[w].masses()[2 * u + v]
            } else {
                0.0
            }
        })
    }
}

/// `min{I(W;Y), I(W;Z)} + I(U;Y|W) + I(V;Z|W) - I(U;V|W)` for `p(u, v, w, x)`.
pub fn marton_objective(joint_uvwx: &JointPmf, bc: &BroadcastChannel) -> Result<f64> {
    if joint_uvwx.rank() != 4 || joint_uvwx.dims()[3] != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "marton joint p(u,v,w,x)",
            expected: bc.input_size(),
            found: joint_uvwx.dims().get(3).copied().unwrap_or(0),
        });
    }
    let jy = observe(joint_uvwx, 3, bc.to_y())?;
    let jz = observe(joint_uvwx, 3, bc.to_z())?;
    let common = mutual_information(&jy.marginal(&[2, 3]))?
        .min(mutual_information(&jz.marginal(&[2, 3]))?);
    Ok(common + conditional_mutual_information(&jy.marginal(&[0, 3, 2]))?
        + conditional_mutual_information(&jz.marginal(&[1, 3, 2]))?
        - conditional_mutual_information(&joint_uvwx.marginal(&[0, 1, 2]))?)
}

/// Fast Marton objective on `cells[4w + 2u + v]` with fixed gates.
struct MartonKernel<'a> {
    mixer: &'a Mixer,
    kernel: MarginKernel,
    tables: [Vec<usize>; 2],
}

impl MartonKernel<'_> {
    fn eval(&mut self, cells: &[f64]) -> f64 {
        let mut pw = [0.0; 2];
        let mut q = [0.0; 2];
        let mut lhs = 0.0;
        for w in 0..2 {
            let slice = &cells[4 * w..4 * w + 4];
            pw[w] = slice.iter().sum();
            if pw[w] <= 0.0 {
                continue;
            }
            let cond = [slice[0] / pw[w], slice[1] / pw[w], slice[2] / pw[w], slice[3] / pw[w]];
            lhs += pw[w] * self.kernel.eval_gate(2, 2, &cond, &self.tables[w]).lhs;
            q[w] = (0..4).filter(|&k| self.tables[w][k] == 1).map(|k| cond[k]).sum();
        }
        let total = pw[0] + pw[1];
        let s = self.mixer.slices(q[0], q[1]);
        self.mixer.common(&s, pw[0] / total) + lhs / total
    }
}

/// Largest Marton sum rate with binary `W` and deterministic gates per `w`.
///
/// For every grid value of `P(X=1|W=w)` the best gate and `p(u,v|w)` are
/// tabulated; the split `P(W=0)` is then optimized exactly for each pair of
/// grid values and the best candidates are refined jointly over `p(w,u,v)`.
/// The time-division optimum, embedded as a Marton witness, is always one of
/// the refinement starts.
pub fn marton_sum_rate_max(bc: &BroadcastChannel, cfg: &OptimizerConfig) -> Result<(f64, MartonWitness)> {
    bc.require_binary()?;
    cfg.validate()?;
    let mixer = Mixer::new(bc);
    let n = cfg.subdivisions();
    let qs = q_grid(n);
    let m = qs.len();

    // best left side per conditional input distribution
    let table: Vec<(f64, u8, Vec<f64>)> = qs
        .par_iter()
        .map_init(
            || MarginKernel::new(bc),
            |kernel, &q| -> Result<(f64, u8, Vec<f64>)> {
                let px = Distribution::new(vec![1.0 - q, q])?;
                let mut best: Option<(f64, u8, Vec<f64>)> = None;
                for id in GATE_ORBITS {
                    if let Some((v, puv)) = lattice_max_lhs(kernel, &Gate::binary(id), &px, n)? {
                        if best.as_ref().is_none_or(|b| v > b.0) {
                            best = Some((v, id, puv));
                        }
                    }
                }
                Ok(best.expect("the pass gates induce every p(x)"))
            },
        )
        .collect::<Result<_>>()?;

    let top = scan_top_k(m * m, STARTS, || (), |_, i| {
        let (j0, j1) = (i / m, i % m);
        let s = mixer.slices(qs[j0], qs[j1]);
        mixer.best_split(&s, table[j0].0, table[j1].0).1
    });

    let mut starts: Vec<([u8; 2], Vec<f64>)> = top
        .iter()
        .map(|s| {
            let (j0, j1) = (s.index / m, s.index % m);
            let sl = mixer.slices(qs[j0], qs[j1]);
            let (p0, _) = mixer.best_split(&sl, table[j0].0, table[j1].0);
            let cells = table[j0].2.iter().map(|c| p0 * c)
                .chain(table[j1].2.iter().map(|c| (1.0 - p0) * c))
                .collect();
            ([table[j0].1, table[j1].1], cells)
        })
        .collect();
    let (_, rtd) = rtd_sum_rate_max(bc, cfg)?;
    let j = rtd.joint_wx().masses();
    starts.push((
        [Gate::PASS_U, Gate::PASS_V],
        vec![j[0], 0.0, j[1], 0.0, j[2], j[3], 0.0, 0.0],
    ));

    let settings = cfg.refine_settings();
    let mut best: Option<(f64, MartonWitness)> = None;
    for (gates, cells) in starts {
        let mut k = MartonKernel {
            mixer: &mixer,
            kernel: MarginKernel::new(bc),
            tables: gates.map(|g| Gate::binary(g).table().to_vec()),
        };
        let (_, x) = pattern_refine(cells, &[8], &settings, |x| k.eval(x));
        let witness = MartonWitness::from_cells(&x, gates)?;
        let value = marton_objective(&witness.compose()?, bc)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, witness));
        }
    }
    Ok(best.expect("non-empty start set"))
}

/// `min{ I(U;Y) + I(V;Z|U), I(V;Z) + I(U;Y|V) }` for `p(u, v, x)`.
pub fn outer_bound_objective(joint_uvx: &JointPmf, bc: &BroadcastChannel) -> Result<f64> {
    if joint_uvx.rank() != 3 || joint_uvx.dims()[2] != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "outer bound joint p(u,v,x)",
            expected: bc.input_size(),
            found: joint_uvx.dims().get(2).copied().unwrap_or(0),
        });
    }
    let jy = observe(joint_uvx, 2, bc.to_y())?;
    let jz = observe(joint_uvx, 2, bc.to_z())?;
    let first = mutual_information(&jy.marginal(&[0, 2]))?
        + conditional_mutual_information(&jz.marginal(&[1, 2, 0]))?;
    let second = mutual_information(&jz.marginal(&[1, 2]))?
        + conditional_mutual_information(&jy.marginal(&[0, 2, 1]))?;
    Ok(first.min(second))
}

/// Fast outer-bound objective on `cells[(u nv + v) nx + x]`.
struct OuterKernel {
    nu: usize,
    nv: usize,
    nx: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    ny: usize,
    nz: usize,
    uvy: Vec<f64>,
    uvz: Vec<f64>,
    scratch: Vec<f64>,
}

impl OuterKernel {
    fn new(bc: &BroadcastChannel, nu: usize, nv: usize) -> Self {
        let nx = bc.input_size();
        let flat = |m: &crate::info::TransitionMatrix| -> Vec<f64> {
            (0..nx).flat_map(|x| m.row(x).to_vec()).collect()
        };
        let (ny, nz) = (bc.to_y().output_size(), bc.to_z().output_size());
        Self {
            nu,
            nv,
            nx,
            y: flat(bc.to_y()),
            z: flat(bc.to_z()),
            ny,
            nz,
            uvy: vec![0.0; nu * nv * ny],
            uvz: vec![0.0; nu * nv * nz],
            scratch: vec![0.0; nu.max(nv) + nu * nv],
        }
    }

    /// Entropies `H(O), H(UO), H(VO), H(UVO)` of a table `t[(u nv + v) no + o]`.
    fn parts(&mut self, t: &[f64], no: usize) -> [f64; 4] {
        let (nu, nv) = (self.nu, self.nv);
        let mut h = [0.0, 0.0, 0.0, crate::info::entropy_of(t)];
        for o in 0..no {
            let mut po = 0.0;
            for u in 0..nu {
                let pu: f64 = (0..nv).map(|v| t[(u * nv + v) * no + o]).sum();
                h[1] += neg_plogp(pu);
                po += pu;
            }
            h[0] += neg_plogp(po);
            for v in 0..nv {
                let pv: f64 = (0..nu).map(|u| t[(u * nv + v) * no + o]).sum();
                h[2] += neg_plogp(pv);
            }
        }
        h
    }

    fn eval(&mut self, cells: &[f64]) -> f64 {
        let (nx, k) = (self.nx, self.nu * self.nv);
        let fill = |out: &mut [f64], ch: &[f64], no: usize| {
            out.iter_mut().for_each(|p| *p = 0.0);
            for c in 0..k {
                for x in 0..nx {
                    let m = cells[c * nx + x];
                    if m > 0.0 {
                        for o in 0..no {
                            out[c * no + o] += m * ch[x * no + o];
                        }
                    }
                }
            }
        };
        let mut uvy = std::mem::take(&mut self.uvy);
        let mut uvz = std::mem::take(&mut self.uvz);
        fill(&mut uvy, &self.y, self.ny);
        fill(&mut uvz, &self.z, self.nz);
        let [h_y, h_uy, h_vy, h_uvy] = self.parts(&uvy, self.ny);
        let [h_z, h_uz, h_vz, h_uvz] = self.parts(&uvz, self.nz);
        self.uvy = uvy;
        self.uvz = uvz;
        for c in 0..k {
            self.scratch[c] = cells[c * nx..(c + 1) * nx].iter().sum();
        }
        let h_uv = crate::info::entropy_of(&self.scratch[..k]);
        let first = h_y - h_uy + h_uv + h_uz - h_uvz;
        let second = h_z - h_vz + h_uv + h_vy - h_uvy;
        first.min(second)
    }
}

/// Lower estimate of the outer-bound sum rate with `|U| = |V| = 3`.
///
/// Not a certified maximum: the auxiliary alphabets are fixed and the search
/// is a coarse lattice scan followed by local refinement. Binary auxiliaries
/// are too small here; on the skew-symmetric channel they stay below the
/// inner bound.
pub fn outer_bound_sum_rate_estimate(
    bc: &BroadcastChannel,
    cfg: &OptimizerConfig,
) -> Result<(f64, JointPmf)> {
    bc.require_binary()?;
    cfg.validate()?;
    let cells = OUTER_AUX * OUTER_AUX * bc.input_size();
    let n = cfg.subdivisions().min(OUTER_SUBDIVISIONS);
    let lattice = SimplexLattice::new(cells, n);
    let top = scan_top_k(
        lattice.len(),
        OUTER_STARTS,
        || (OuterKernel::new(bc, OUTER_AUX, OUTER_AUX), vec![0.0; cells]),
        |(k, p), i| {
            lattice.write_point(i, 1.0, p);
            k.eval(p)
        },
    );
    let mut settings = cfg.refine_settings();
    settings.initial_step = 1.0 / n as f64;
    settings.max_evaluations = OUTER_EVALUATIONS;
    let mut best: Option<(f64, JointPmf)> = None;
    for s in top {
        let mut k = OuterKernel::new(bc, OUTER_AUX, OUTER_AUX);
        let (_, x) = pattern_refine(lattice.point(s.index, 1.0), &[cells], &settings, |x| k.eval(x));
        let total: f64 = x.iter().sum();
        let joint = JointPmf::new(
            vec![OUTER_AUX, OUTER_AUX, bc.input_size()],
            x.iter().map(|c| c.max(0.0) / total).collect(),
        )?;
        let value = outer_bound_objective(&joint, bc)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, joint));
        }
    }
    Ok(best.expect("non-empty start set"))
}
