//! First- and second-order optimality conditions of
//! `f = H(U,V) - H(U,Y) - H(V,Z)` on the AND and XOR gates, turned into
//! executable certificates.
//!
//! All quantities here are in nats: the closed-form Hessian entries such as
//! `-1/p00` are derivatives of natural logarithms.
//!
//! Channel notation: `a = p(y|x=0)`, `â = p(y|x=1)`, `b = p(z|x=0)`, `b̂ = p(z|x=1)`.

mod sweep;
mod xor;

use serde::{Deserialize, Serialize};

pub use sweep::{
    and_stationary_sweep, xor_stationary_sweep, AndStationaryPoint, AndSweep, EdgeSummary,
    SweepConfig, XorSweep, XorSweepPoint, XorVerdict,
};
pub use xor::{
    xor_degeneracy_classifier, xor_first_order_residuals, xor_gradient, xor_hessian, XorClass,
    XorClassification, XorPerturbation, XorResiduals,
};

use crate::error::{Error, Result};
use crate::info::{induced_pairs, BroadcastChannel, INTERNAL_TOL};
use crate::theorem::{Gate, GateJoint};

/// Gradient norm below which a point counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-8;
/// Margin on `det G` and on the slacks of the first-order system.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// `max_i |a_i - â_i|` at or below this marks the receiver as input independent.
pub const DEGENERATE_TOL: f64 = 1e-9;
/// Largest `|p00 p11 - p01 p10|` accepted for an XOR point that passes all first-order conditions.
pub const DETERMINANT_TOL: f64 = 1e-6;

/// Masses at or below this are treated as zero when identifying an edge.
const ZERO_MASS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub stationary: f64,
    pub certificate: f64,
    pub degenerate: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            stationary: STATIONARY_TOL,
            certificate: CERTIFICATE_TOL,
            degenerate: DEGENERATE_TOL,
        }
    }
}

/// `p(u,v)` under the AND gate, parameterized by `p11 = P(X=1)` and the free pair `(p10, p01)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndPoint {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
}

impl AndPoint {
    pub fn new(p11: f64, p10: f64, p01: f64) -> Result<Self> {
        for (name, v) in [("p11", p11), ("p10", p10), ("p01", p01)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not a probability")));
            }
        }
        if !(p11 > 0.0 && p11 < 1.0) {
            return Err(Error::InvalidParameter(format!("p11 must lie in (0,1), got {p11}")));
        }
        if 1.0 - p11 - p10 - p01 < -INTERNAL_TOL {
            return Err(Error::SumDeviation { sum: p11 + p10 + p01 });
        }
        Ok(Self { p11, p10, p01 })
    }

    pub fn p00(&self) -> f64 {
        (1.0 - self.p11 - self.p10 - self.p01).max(0.0)
    }

    /// Masses in `(u,v)` order `[p00, p01, p10, p11]`.
    pub fn masses(&self) -> [f64; 4] {
        [self.p00(), self.p01, self.p10, self.p11]
    }

    pub fn is_interior(&self) -> bool {
        self.masses().iter().all(|&m| m > 0.0)
    }

    pub fn gate_joint(&self) -> Result<GateJoint> {
        GateJoint::binary(self.masses(), Gate::binary(Gate::AND))
    }
}

/// Symmetric 2x2 matrix of second derivatives in `(p10, p01)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianG {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl HessianG {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }
}

/// Multiplicative direction `q = p (1 + eps L)` with `L11 = 0` and `P(X=0)` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPerturbation {
    pub l00: f64,
    pub l01: f64,
    pub l10: f64,
}

/// Binary channel rows `a, â, b, b̂`.
pub(crate) struct Rows<'a> {
    pub a: &'a [f64],
    pub ah: &'a [f64],
    pub b: &'a [f64],
    pub bh: &'a [f64],
}

impl<'a> Rows<'a> {
    pub fn of(bc: &'a BroadcastChannel) -> Result<Self> {
        bc.require_binary()?;
        Ok(Self {
            a: bc.to_y().row(0),
            ah: bc.to_y().row(1),
            b: bc.to_z().row(0),
            bh: bc.to_z().row(1),
        })
    }

    pub fn positive(bc: &'a BroadcastChannel) -> Result<Self> {
        let rows = Self::of(bc)?;
        for (which, m) in [("to_y", bc.to_y()), ("to_z", bc.to_z())] {
            for row in 0..2 {
                if let Some(col) = m.row(row).iter().position(|&p| p <= 0.0) {
                    return Err(Error::ZeroChannelEntry { which, row, col });
                }
            }
        }
        Ok(rows)
    }

    pub fn asymmetry_y(&self) -> f64 {
        max_abs_diff(self.a, self.ah)
    }

    pub fn asymmetry_z(&self) -> f64 {
        max_abs_diff(self.b, self.bh)
    }
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

impl LyapunovPerturbation {
    /// Checks `p00 L00 + p01 L01 + p10 L10 = 0`.
    pub fn new(pt: &AndPoint, l00: f64, l01: f64, l10: f64) -> Result<Self> {
        let drift = pt.p00() * l00 + pt.p01 * l01 + pt.p10 * l10;
        let scale = l00.abs().max(l01.abs()).max(l10.abs()).max(1.0);
        if !drift.is_finite() || drift.abs() > INTERNAL_TOL * scale {
            return Err(Error::InvalidParameter(format!(
                "perturbation changes P(X=0) at rate {drift:e}"
            )));
        }
        Ok(Self { l00, l01, l10 })
    }

    fn weights(&self) -> [f64; 4] {
        [self.l00, self.l01, self.l10, 0.0]
    }

    /// Conditional expectations `E[L|U=u,Y=y]` and `E[L|V=v,Z=z]` with the pair masses.
    fn conditional(&self, pt: &AndPoint, rows: &Rows) -> Vec<(f64, f64)> {
        let p = pt.masses();
        let l = self.weights();
        let mut out = Vec::new();
        // cells (u,v) -> x under AND; index u*2+v
        let x_of = |c: usize| usize::from(c == 3);
        for (side, n) in [(0usize, rows.a.len()), (1, rows.b.len())] {
            for own in 0..2 {
                for o in 0..n {
                    let (mut mass, mut weighted) = (0.0, 0.0);
                    for other in 0..2 {
                        let c = if side == 0 { own * 2 + other } else { other * 2 + own };
                        let row = match (side, x_of(c)) {
                            (0, 0) => rows.a,
                            (0, _) => rows.ah,
                            (_, 0) => rows.b,
                            _ => rows.bh,
                        };
                        let m = p[c] * row[o];
                        mass += m;
                        weighted += m * l[c];
                    }
                    if mass > 0.0 {
                        out.push((mass, weighted / mass));
                    }
                }
            }
        }
        out
    }

    /// `d/deps f(p(1 + eps L))` at `eps = 0`:
    /// `H_L(U,V) - H_{E[L|U,Y]}(U,Y) - H_{E[L|V,Z]}(V,Z)`.
    pub fn first_derivative(&self, pt: &AndPoint, bc: &BroadcastChannel) -> Result<f64> {
        let rows = Rows::of(bc)?;
        let p = pt.masses();
        let l = self.weights();
        let h_uv: f64 = (0..4).filter(|&c| p[c] > 0.0).map(|c| -p[c] * l[c] * p[c].ln()).sum();
        let pairs: f64 = self
            .conditional(pt, &rows)
            .iter()
            .map(|&(m, e)| -m * e * m.ln())
            .sum();
        Ok(h_uv - pairs)
    }

    /// `d^2/deps^2 f(p(1 + eps L))` at `eps = 0`:
    /// `-E[L^2] + E[E[L|U,Y]^2] + E[E[L|V,Z]^2]`.
    pub fn second_derivative(&self, pt: &AndPoint, bc: &BroadcastChannel) -> Result<f64> {
        let rows = Rows::of(bc)?;
        let p = pt.masses();
        let l = self.weights();
        let own: f64 = (0..4).map(|c| p[c] * l[c] * l[c]).sum();
        let pairs: f64 = self.conditional(pt, &rows).iter().map(|&(m, e)| m * e * e).sum();
        Ok(pairs - own)
    }
}

/// `f = H(U,V) - H(U,Y) - H(V,Z)` in nats, evaluated through the generic joint machinery.
pub fn and_objective(pt: &AndPoint, bc: &BroadcastChannel) -> Result<f64> {
    bc.require_binary()?;
    let joint = pt.gate_joint()?.to_triple();
    let (uy, vz, _) = induced_pairs(&joint, bc)?;
    let uv = joint.marginal(&[0, 1]);
    Ok((uv.entropy() - uy.entropy() - vz.entropy()) * std::f64::consts::LN_2)
}

fn require_interior(pt: &AndPoint) -> Result<()> {
    if !pt.is_interior() {
        return Err(Error::BoundaryPoint(format!(
            "AND point {:?} has a zero mass",
            pt.masses()
        )));
    }
    Ok(())
}

/// Gradient of `f` from raw masses; callers guarantee interior masses and positive rows.
pub(crate) fn and_gradient_raw(p00: f64, p10: f64, p01: f64, p11: f64, rows: &Rows) -> (f64, f64) {
    let sy: f64 = rows
        .a
        .iter()
        .zip(rows.ah)
        .map(|(&a, &ah)| a * (a * (p00 + p01) / (a * p10 + ah * p11)).ln())
        .sum();
    let sz: f64 = rows
        .b
        .iter()
        .zip(rows.bh)
        .map(|(&b, &bh)| b * (b * (p00 + p10) / (b * p01 + bh * p11)).ln())
        .sum();
    ((p00 / p10).ln() - sy, (p00 / p01).ln() - sz)
}

/// `(df/dp10, df/dp01)` with `p11` fixed and `p00` absorbing the change.
pub fn and_gradient(pt: &AndPoint, bc: &BroadcastChannel) -> Result<(f64, f64)> {
    require_interior(pt)?;
    let rows = Rows::positive(bc)?;
    Ok(and_gradient_raw(pt.p00(), pt.p10, pt.p01, pt.p11, &rows))
}

pub fn and_hessian(pt: &AndPoint, bc: &BroadcastChannel) -> Result<HessianG> {
    require_interior(pt)?;
    let rows = Rows::positive(bc)?;
    let [p00, p01, p10, p11] = pt.masses();
    let sy: f64 = rows.a.iter().zip(rows.ah).map(|(&a, &ah)| a * a / (a * p10 + ah * p11)).sum();
    let sz: f64 = rows.b.iter().zip(rows.bh).map(|(&b, &bh)| b * b / (b * p01 + bh * p11)).sum();
    Ok(HessianG {
        g11: -1.0 / p00 - 1.0 / p10 + 1.0 / (p00 + p01) + sy,
        g12: -1.0 / p00,
        g22: -1.0 / p00 - 1.0 / p01 + 1.0 / (p00 + p10) + sz,
    })
}

/// Jensen gaps at a point: `sum a_i^2 (p00+p01)/(a_i p10 + â_i p11) - p00/p10` and the
/// `b` analog. Both are non-negative wherever the corresponding gradient entry vanishes.
pub fn and_concavity_gaps(pt: &AndPoint, bc: &BroadcastChannel) -> Result<[f64; 2]> {
    require_interior(pt)?;
    let rows = Rows::positive(bc)?;
    let [p00, p01, p10, p11] = pt.masses();
    let sy: f64 = rows
        .a
        .iter()
        .zip(rows.ah)
        .map(|(&a, &ah)| a * a * (p00 + p01) / (a * p10 + ah * p11))
        .sum();
    let sz: f64 = rows
        .b
        .iter()
        .zip(rows.bh)
        .map(|(&b, &bh)| b * b * (p00 + p10) / (b * p01 + bh * p11))
        .sum();
    Ok([sy - p00 / p10, sz - p00 / p01])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AndVerdict {
    RejectedSaddle,
    DegenerateChannel,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndCertificate {
    pub verdict: AndVerdict,
    pub gradient: [f64; 2],
    pub gradient_norm: f64,
    pub hessian: HessianG,
    pub det: f64,
    pub asymmetry_y: f64,
    pub asymmetry_z: f64,
}

/// Classifies a stationary interior point of the AND case.
pub fn and_interior_certificate(
    pt: &AndPoint,
    bc: &BroadcastChannel,
    tol: &CertificateTolerances,
) -> Result<AndCertificate> {
    let (g10, g01) = and_gradient(pt, bc)?;
    let norm = g10.hypot(g01);
    if !(norm <= tol.stationary) {
        return Err(Error::NotStationary { norm, tol: tol.stationary });
    }
    let hessian = and_hessian(pt, bc)?;
    let rows = Rows::positive(bc)?;
    let (asymmetry_y, asymmetry_z) = (rows.asymmetry_y(), rows.asymmetry_z());
    let det = hessian.det();
    let verdict = if asymmetry_y <= tol.degenerate && asymmetry_z <= tol.degenerate {
        AndVerdict::DegenerateChannel
    } else if det < -tol.certificate {
        AndVerdict::RejectedSaddle
    } else {
        AndVerdict::Inconclusive
    };
    Ok(AndCertificate {
        verdict,
        gradient: [g10, g01],
        gradient_norm: norm,
        hessian,
        det,
        asymmetry_y,
        asymmetry_z,
    })
}

/// Which of the three free masses vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCase {
    P00Zero,
    P01Zero,
    P10Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeResidual {
    pub case: EdgeCase,
    /// The displayed gap (cases `p01 = 0`, `p10 = 0`) or the second-derivative
    /// excess with unit weights (case `p00 = 0`); positive means no local maximum.
    pub value: f64,
    /// Case `p00 = 0` only: the excess along the admissible direction
    /// `(L10, L01) = (p01, -p10)`.
    pub valid_direction_excess: Option<f64>,
}

/// Residual certifying that an edge point of the AND case is not a local maximum.
pub fn and_edge_residuals(pt: &AndPoint, bc: &BroadcastChannel) -> Result<EdgeResidual> {
    let rows = Rows::positive(bc)?;
    let [p00, p01, p10, p11] = pt.masses();
    let zero = [p00, p01, p10].map(|m| m <= ZERO_MASS);
    if zero.iter().filter(|&&z| z).count() != 1 {
        return Err(Error::WrongBoundaryPattern(format!(
            "exactly one of p00, p01, p10 must vanish, got ({p00}, {p01}, {p10})"
        )));
    }
    let gap = |w: &[f64], wh: &[f64], m: f64| -> f64 {
        w.iter().zip(wh).map(|(&a, &ah)| a * ((a * m + ah * p11) / (a * m)).ln()).sum()
    };
    let excess = |w: &[f64], wh: &[f64], m: f64| -> f64 {
        w.iter().zip(wh).map(|(&a, &ah)| a * a * m * m / (a * m + ah * p11)).sum()
    };
    Ok(if zero[0] {
        let (ey, ez) = (excess(rows.a, rows.ah, p10), excess(rows.b, rows.bh, p01));
        EdgeResidual {
            case: EdgeCase::P00Zero,
            value: ey + ez,
            valid_direction_excess: Some(p01 * p01 * ey + p10 * p10 * ez),
        }
    } else if zero[1] {
        EdgeResidual {
            case: EdgeCase::P01Zero,
            value: gap(rows.a, rows.ah, p10),
            valid_direction_excess: None,
        }
    } else {
        EdgeResidual {
            case: EdgeCase::P10Zero,
            value: gap(rows.b, rows.bh, p01),
            valid_direction_excess: None,
        }
    })
}

fn check_step(step: f64, room: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !(room > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {step} leaves the feasible region"
        )));
    }
    Ok(())
}

/// Central differences of `evaluate` in `(p10, p01)` at fixed `p11`.
pub fn finite_difference_gradient<F: Fn(&AndPoint) -> f64>(
    evaluate: F,
    pt: &AndPoint,
    step: f64,
) -> Result<(f64, f64)> {
    let [p00, p01, p10, p11] = pt.masses();
    check_step(step, p00.min(p01).min(p10) - step)?;
    let at = |d10: f64, d01: f64| evaluate(&AndPoint { p11, p10: p10 + d10, p01: p01 + d01 });
    Ok((
        (at(step, 0.0) - at(-step, 0.0)) / (2.0 * step),
        (at(0.0, step) - at(0.0, -step)) / (2.0 * step),
    ))
}

/// Central second differences of `evaluate` in `(p10, p01)` at fixed `p11`.
pub fn finite_difference_hessian<F: Fn(&AndPoint) -> f64>(
    evaluate: F,
    pt: &AndPoint,
    step: f64,
) -> Result<HessianG> {
    let [p00, p01, p10, p11] = pt.masses();
    check_step(step, (p00 - 2.0 * step).min(p01 - step).min(p10 - step))?;
    let at = |d10: f64, d01: f64| evaluate(&AndPoint { p11, p10: p10 + d10, p01: p01 + d01 });
    let h2 = step * step;
    let c = at(0.0, 0.0);
    Ok(HessianG {
        g11: (at(step, 0.0) - 2.0 * c + at(-step, 0.0)) / h2,
        g12: (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * h2),
        g22: (at(0.0, step) - 2.0 * c + at(0.0, -step)) / h2,
    })
}
