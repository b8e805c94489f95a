//! First-order conditions for `X = U xor V` at fixed `P(X=0)`.

use serde::{Deserialize, Serialize};

use super::Rows;
use crate::error::{Error, Result};
use crate::info::{BroadcastChannel, JointPmf, INTERNAL_TOL};

/// Additive direction `p(u,v,x) + eps lambda(u,v,x)` around an XOR joint,
/// stored row-major as `4u + 2v + x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorPerturbation {
    pub lambda: [f64; 8],
}

/// Cells off the XOR support: `(0,0,1)`, `(0,1,0)`, `(1,0,0)`, `(1,1,1)`.
const OFF_SUPPORT: [usize; 4] = [1, 2, 4, 7];

impl XorPerturbation {
    pub fn new(lambda: [f64; 8]) -> Result<Self> {
        if let Some(&i) = OFF_SUPPORT.iter().find(|&&i| !(lambda[i] >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "lambda at cell {i} must be non-negative, the base mass there is zero"
            )));
        }
        for x in 0..2 {
            let s: f64 = (0..4).map(|c| lambda[2 * c + x]).sum();
            if !(s.abs() <= INTERNAL_TOL) {
                return Err(Error::InvalidParameter(format!(
                    "lambda changes P(X={x}) at rate {s:e}"
                )));
            }
        }
        Ok(Self { lambda })
    }

    /// One-sided derivative in nats of the left side at the XOR joint `puv` along `lambda`.
    pub fn first_derivative(&self, puv: [f64; 4], bc: &BroadcastChannel) -> Result<f64> {
        let rows = Rows::positive(bc)?;
        if puv.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::BoundaryPoint(format!("XOR point {puv:?} has a zero mass")));
        }
        let base = |c: usize, x: usize| if ((c >> 1) ^ (c & 1)) == x { puv[c] } else { 0.0 };
        let rate = |h: f64, p: f64| -h * p.ln();
        let mut d = 0.0;
        for c in 0..4 {
            d += rate(self.lambda[2 * c] + self.lambda[2 * c + 1], puv[c]);
        }
        for (side, w, wh) in [(0usize, rows.a, rows.ah), (1, rows.b, rows.bh)] {
            for own in 0..2 {
                for o in 0..w.len() {
                    let (mut p, mut h) = (0.0, 0.0);
                    for other in 0..2 {
                        let c = if side == 0 { own * 2 + other } else { other * 2 + own };
                        for x in 0..2 {
                            let t = if x == 0 { w[o] } else { wh[o] };
                            p += base(c, x) * t;
                            h += self.lambda[2 * c + x] * t;
                        }
                    }
                    d -= rate(h, p);
                }
            }
        }
        Ok(d)
    }
}

/// Residuals of the first-order system at an interior XOR point.
///
/// `e1`, `e2` are the derivatives along the two directions that stay on the
/// gate (`p00 -> p11` and `p01 -> p10`); every local maximum has both zero.
/// `slack[k]` is minus the derivative along the four directions that leave the
/// gate, each of which must be non-positive at a local maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorResiduals {
    pub e1: f64,
    pub e2: f64,
    pub slack: [f64; 4],
    /// `p00 p11 - p01 p10`.
    pub det: f64,
}

impl XorResiduals {
    pub fn equality_norm(&self) -> f64 {
        self.e1.hypot(self.e2)
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Equalities within `eq_tol` and every slack at least `-slack_tol`.
    pub fn passes(&self, eq_tol: f64, slack_tol: f64) -> bool {
        self.equality_norm() <= eq_tol && self.min_slack() >= -slack_tol
    }
}

struct Sums {
    a: f64,
    ah: f64,
    b: f64,
    bh: f64,
}

/// `sum a_i log(Pa0/Pa1)`, `sum â_i log(Pa0/Pa1)` and the `Z` analogs where
/// `Pa0 = p(U=0, y_i)`, `Pa1 = p(U=1, y_i)`, `Pb0 = p(V=0, z_i)`, `Pb1 = p(V=1, z_i)`.
fn log_ratio_sums(p: [f64; 4], rows: &Rows) -> Sums {
    let [p00, p01, p10, p11] = p;
    let (mut a_sum, mut ah_sum, mut b_sum, mut bh_sum) = (0.0, 0.0, 0.0, 0.0);
    for (&a, &ah) in rows.a.iter().zip(rows.ah) {
        let r = ((a * p00 + ah * p01) / (a * p11 + ah * p10)).ln();
        a_sum += a * r;
        ah_sum += ah * r;
    }
    for (&b, &bh) in rows.b.iter().zip(rows.bh) {
        let r = ((b * p00 + bh * p10) / (b * p11 + bh * p01)).ln();
        b_sum += b * r;
        bh_sum += bh * r;
    }
    Sums { a: a_sum, ah: ah_sum, b: b_sum, bh: bh_sum }
}

fn interior(puv: &JointPmf) -> Result<[f64; 4]> {
    if puv.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            context: "XOR p(u,v)",
            expected: 4,
            found: puv.masses().len(),
        });
    }
    let m = puv.masses();
    let p = [m[0], m[1], m[2], m[3]];
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::BoundaryPoint(format!("XOR point {p:?} has a zero mass")));
    }
    Ok(p)
}

/// `(e1, e2)` from raw interior masses `[p00, p01, p10, p11]`.
pub fn xor_gradient(p: [f64; 4], bc: &BroadcastChannel) -> Result<(f64, f64)> {
    let rows = Rows::positive(bc)?;
    Ok(gradient_raw(p, &rows))
}

fn gradient_raw(p: [f64; 4], rows: &Rows) -> (f64, f64) {
    let [p00, p01, p10, p11] = p;
    let s = log_ratio_sums(p, rows);
    ((p00 / p11).ln() - s.a - s.b, (p01 / p10).ln() - s.ah + s.bh)
}

/// Derivative of `(e1, e2)` along the same two on-gate directions, row-major `[[11, 12], [21, 22]]`.
pub fn xor_hessian(p: [f64; 4], bc: &BroadcastChannel) -> Result<[[f64; 2]; 2]> {
    let rows = Rows::positive(bc)?;
    Ok(hessian_raw(p, &rows))
}

fn hessian_raw(p: [f64; 4], rows: &Rows) -> [[f64; 2]; 2] {
    let [p00, p01, p10, p11] = p;
    let (mut h11, mut h12, mut h22) = (-1.0 / p00 - 1.0 / p11, 0.0, -1.0 / p01 - 1.0 / p10);
    for (&a, &ah) in rows.a.iter().zip(rows.ah) {
        let w = 1.0 / (a * p00 + ah * p01) + 1.0 / (a * p11 + ah * p10);
        h11 += a * a * w;
        h12 += a * ah * w;
        h22 += ah * ah * w;
    }
    for (&b, &bh) in rows.b.iter().zip(rows.bh) {
        let w = 1.0 / (b * p00 + bh * p10) + 1.0 / (b * p11 + bh * p01);
        h11 += b * b * w;
        h12 -= b * bh * w;
        h22 += bh * bh * w;
    }
    [[h11, h12], [h12, h22]]
}

pub(crate) fn residuals_raw(p: [f64; 4], rows: &Rows) -> XorResiduals {
    let [p00, p01, p10, p11] = p;
    let s = log_ratio_sums(p, rows);
    let (e1, e2) = gradient_raw(p, rows);
    XorResiduals {
        e1,
        e2,
        slack: [
            s.b - (p00 / p01).ln(),
            s.a - (p00 / p10).ln(),
            -s.bh - (p01 / p00).ln(),
            s.ah - (p01 / p11).ln(),
        ],
        det: p00 * p11 - p01 * p10,
    }
}

pub(crate) fn newton_step(p: [f64; 4], rows: &Rows) -> (f64, f64) {
    let (e1, e2) = gradient_raw(p, rows);
    let [[h11, h12], [_, h22]] = hessian_raw(p, rows);
    let det = h11 * h22 - h12 * h12;
    (-(h22 * e1 - h12 * e2) / det, -(h11 * e2 - h12 * e1) / det)
}

pub fn xor_first_order_residuals(puv: &JointPmf, bc: &BroadcastChannel) -> Result<XorResiduals> {
    let p = interior(puv)?;
    let rows = Rows::positive(bc)?;
    Ok(residuals_raw(p, &rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum XorClass {
    ChannelDegenerate,
    UniformIndependent,
    NotLocalMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorClassification {
    pub class: XorClass,
    /// `max_i |(a_i p00 + â_i p01)/(a_i p11 + â_i p10) - p00/p10|`.
    pub ratio_residual_y: f64,
    /// `max_i |(b_i p00 + b̂_i p10)/(b_i p11 + b̂_i p01) - p00/p01|`.
    pub ratio_residual_z: f64,
    /// `max_i |(p10 - p11)(a_i - â_i)|`.
    pub product_residual_y: f64,
    /// `max_i |(p01 - p11)(b_i - b̂_i)|`.
    pub product_residual_z: f64,
    pub uniform_deviation: f64,
}

/// Sorts a point of the XOR case into the degenerate families or rejects it.
pub fn xor_degeneracy_classifier(
    puv: &JointPmf,
    bc: &BroadcastChannel,
    tol: f64,
) -> Result<XorClassification> {
    if puv.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            context: "XOR p(u,v)",
            expected: 4,
            found: puv.masses().len(),
        });
    }
    let rows = Rows::of(bc)?;
    let m = puv.masses();
    let (p00, p01, p10, p11) = (m[0], m[1], m[2], m[3]);
    let worst = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(0.0f64, |acc, v| if v.is_nan() { f64::INFINITY } else { acc.max(v.abs()) })
    };
    let ratio_residual_y = worst(&mut rows.a.iter().zip(rows.ah).map(|(&a, &ah)| {
        (a * p00 + ah * p01) / (a * p11 + ah * p10) - p00 / p10
    }));
    let ratio_residual_z = worst(&mut rows.b.iter().zip(rows.bh).map(|(&b, &bh)| {
        (b * p00 + bh * p10) / (b * p11 + bh * p01) - p00 / p01
    }));
    let product_residual_y = worst(&mut rows.a.iter().zip(rows.ah).map(|(&a, &ah)| (p10 - p11) * (a - ah)));
    let product_residual_z = worst(&mut rows.b.iter().zip(rows.bh).map(|(&b, &bh)| (p01 - p11) * (b - bh)));
    let uniform_deviation = worst(&mut m.iter().map(|&p| p - 0.25));
    let class = if rows.asymmetry_y() <= tol || rows.asymmetry_z() <= tol {
        XorClass::ChannelDegenerate
    } else if [ratio_residual_y, ratio_residual_z, product_residual_y, product_residual_z, uniform_deviation]
        .iter()
        .all(|&r| r <= tol)
    {
        XorClass::UniformIndependent
    } else {
        XorClass::NotLocalMax
    };
    Ok(XorClassification {
        class,
        ratio_residual_y,
        ratio_residual_z,
        product_residual_y,
        product_residual_z,
        uniform_deviation,
    })
}
