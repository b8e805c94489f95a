//! Deterministic sweeps that locate interior stationary points and certify each one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::xor::{newton_step, residuals_raw, xor_degeneracy_classifier, XorClass, XorClassification, XorResiduals};
use super::{
    and_concavity_gaps, and_edge_residuals, and_gradient_raw, and_interior_certificate, AndCertificate,
    AndPoint, AndVerdict, CertificateTolerances, EdgeCase, Rows, DETERMINANT_TOL,
};
use crate::error::{Error, Result};
use crate::info::{BroadcastChannel, JointPmf};

const BISECTION_STEPS: usize = 200;
const NEWTON_STEPS: usize = 100;
const NEWTON_TARGET: f64 = 1e-13;
const DUPLICATE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Number of fixed `P(X)` levels, spaced `j/(levels+1)`.
    pub levels: usize,
    /// Samples of the outer scan on each level.
    pub scan_points: usize,
    /// Newton starts per axis on each XOR level.
    pub starts_per_axis: usize,
    pub tolerances: CertificateTolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            levels: 9,
            scan_points: 256,
            starts_per_axis: 6,
            tolerances: CertificateTolerances::default(),
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.scan_points < 2 || self.starts_per_axis == 0 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs levels >= 1, scan_points >= 2 and starts_per_axis >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    fn level_values(&self) -> Vec<f64> {
        (1..=self.levels).map(|j| j as f64 / (self.levels + 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndStationaryPoint {
    pub point: AndPoint,
    pub certificate: AndCertificate,
    pub concavity_gaps: [f64; 2],
}

/// Smallest edge residual seen for one boundary pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub case: EdgeCase,
    pub samples: usize,
    pub min_value: f64,
    pub argmin: AndPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndSweep {
    pub channel_digest: String,
    pub levels: Vec<f64>,
    pub points: Vec<AndStationaryPoint>,
    /// Sign changes whose bisection did not reach the stationarity tolerance.
    pub unconverged: Vec<AndPoint>,
    pub edges: Vec<EdgeSummary>,
    pub inconclusive: usize,
}

impl AndSweep {
    pub fn all_certified(&self) -> bool {
        self.inconclusive == 0 && self.unconverged.is_empty()
    }
}

/// Root of the decreasing map `p10 -> df/dp10` on `(0, 1 - p11 - p01)`.
fn solve_p10(p11: f64, p01: f64, rows: &Rows) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0 - p11 - p01);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pt = AndPoint { p11, p10: mid, p01 };
        let (g10, _) = and_gradient_raw(pt.p00(), mid, p01, p11, rows);
        if g10 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `df/dp01` along the curve where `df/dp10 = 0`.
fn curve_residual(p11: f64, p01: f64, rows: &Rows) -> (f64, AndPoint) {
    let p10 = solve_p10(p11, p01, rows);
    let pt = AndPoint { p11, p10, p01 };
    if !pt.is_interior() {
        return (f64::NAN, pt);
    }
    (and_gradient_raw(pt.p00(), p10, p01, p11, rows).1, pt)
}

struct AndLevel {
    points: Vec<AndStationaryPoint>,
    unconverged: Vec<AndPoint>,
    edges: Vec<EdgeSummary>,
}

fn and_level(bc: &BroadcastChannel, rows: &Rows, p11: f64, cfg: &SweepConfig) -> Result<AndLevel> {
    let m = 1.0 - p11;
    let k = cfg.scan_points;
    // cosine spacing clusters samples near both ends of the segment
    let grid: Vec<f64> = (0..k)
        .map(|i| m * 0.5 * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / k as f64).cos()))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p01| curve_residual(p11, p01, rows).0).collect();
    let mut points = Vec::new();
    let mut unconverged = Vec::new();
    for i in 0..k - 1 {
        let (ra, rb) = (values[i], values[i + 1]);
        if !(ra.is_finite() && rb.is_finite()) || ra.signum() == rb.signum() && ra != 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let up = ra < 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (r, _) = curve_residual(p11, mid, rows);
            if (r < 0.0) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (_, pt) = curve_residual(p11, 0.5 * (lo + hi), rows);
        if !pt.is_interior() {
            continue;
        }
        match and_interior_certificate(&pt, bc, &cfg.tolerances) {
            Ok(certificate) => points.push(AndStationaryPoint {
                point: pt,
                concavity_gaps: and_concavity_gaps(&pt, bc)?,
                certificate,
            }),
            Err(Error::NotStationary { .. }) => unconverged.push(pt),
            Err(e) => return Err(e),
        }
    }

    let n = (k / 4).max(2);
    let mut edges = Vec::new();
    for case in [EdgeCase::P00Zero, EdgeCase::P01Zero, EdgeCase::P10Zero] {
        let mut best: Option<EdgeSummary> = None;
        for i in 0..n {
            let t = m * (i as f64 + 0.5) / n as f64;
            let pt = match case {
                EdgeCase::P00Zero => AndPoint { p11, p10: t, p01: m - t },
                EdgeCase::P01Zero => AndPoint { p11, p10: t, p01: 0.0 },
                EdgeCase::P10Zero => AndPoint { p11, p10: 0.0, p01: t },
            };
            let v = and_edge_residuals(&pt, bc)?.value;
            if best.is_none_or(|b| v < b.min_value) {
                best = Some(EdgeSummary { case, samples: n, min_value: v, argmin: pt });
            }
        }
        edges.extend(best);
    }
    Ok(AndLevel { points, unconverged, edges })
}

/// Locates interior stationary points of the AND case on each `P(X=1)` level by
/// bisection along the curve `df/dp10 = 0`, certifies each one, and records the
/// smallest edge residual of each boundary pattern.
pub fn and_stationary_sweep(bc: &BroadcastChannel, cfg: &SweepConfig) -> Result<AndSweep> {
    cfg.validate()?;
    Rows::positive(bc)?;
    let levels = cfg.level_values();
    let per_level: Vec<AndLevel> = levels
        .par_iter()
        .map(|&p11| and_level(bc, &Rows::positive(bc)?, p11, cfg))
        .collect::<Result<_>>()?;
    let mut sweep = AndSweep {
        channel_digest: bc.digest(),
        levels,
        points: Vec::new(),
        unconverged: Vec::new(),
        edges: Vec::new(),
        inconclusive: 0,
    };
    for level in per_level {
        sweep.points.extend(level.points);
        sweep.unconverged.extend(level.unconverged);
        for e in level.edges {
            match sweep.edges.iter_mut().find(|s| s.case == e.case) {
                Some(s) => {
                    s.samples += e.samples;
                    if e.min_value < s.min_value {
                        s.min_value = e.min_value;
                        s.argmin = e.argmin;
                    }
                }
                None => sweep.edges.push(e),
            }
        }
    }
    sweep.inconclusive = sweep
        .points
        .iter()
        .filter(|p| p.certificate.verdict == AndVerdict::Inconclusive)
        .count();
    Ok(sweep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum XorVerdict {
    /// Some off-gate direction increases the left side: not a local maximum.
    RejectedFirstOrder,
    /// All first-order conditions hold and `|p00 p11 - p01 p10|` is within tolerance.
    DeterminantZero,
    /// All first-order conditions hold on a degenerate channel or at the uniform point.
    Degenerate,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSweepPoint {
    /// `[p00, p01, p10, p11]`.
    pub puv: [f64; 4],
    pub residuals: XorResiduals,
    /// Both on-gate curvatures negative: a local maximum along the gate.
    pub on_gate_maximum: bool,
    pub survives: bool,
    pub classification: XorClassification,
    pub verdict: XorVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSweep {
    pub channel_digest: String,
    pub levels: Vec<f64>,
    pub points: Vec<XorSweepPoint>,
    pub survivors: usize,
    pub inconclusive: usize,
}

fn xor_masses(s: f64, p00: f64, p01: f64) -> [f64; 4] {
    [p00, p01, (1.0 - s) - p01, s - p00]
}

fn newton(s: f64, start: (f64, f64), rows: &Rows) -> Option<[f64; 4]> {
    let norm = |p: [f64; 4]| {
        let r = residuals_raw(p, rows);
        r.e1.hypot(r.e2)
    };
    let (mut p00, mut p01) = start;
    let mut p = xor_masses(s, p00, p01);
    let mut current = norm(p);
    for _ in 0..NEWTON_STEPS {
        if current <= NEWTON_TARGET {
            break;
        }
        let (d1, d2) = newton_step(p, rows);
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let q = xor_masses(s, p00 - scale * d1, p01 - scale * d2);
            if q.iter().all(|&m| m > 0.0) {
                let n = norm(q);
                if n < current {
                    p00 -= scale * d1;
                    p01 -= scale * d2;
                    p = q;
                    current = n;
                    moved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
    }
    current.is_finite().then_some(p)
}

fn xor_level(bc: &BroadcastChannel, rows: &Rows, s: f64, cfg: &SweepConfig) -> Result<Vec<XorSweepPoint>> {
    let k = cfg.starts_per_axis;
    let tol = &cfg.tolerances;
    let mut found: Vec<[f64; 4]> = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let start = (s * (i as f64 + 0.5) / k as f64, (1.0 - s) * (j as f64 + 0.5) / k as f64);
            let Some(p) = newton(s, start, rows) else { continue };
            let r = residuals_raw(p, rows);
            if !(r.equality_norm() <= tol.stationary) {
                continue;
            }
            let seen = found
                .iter()
                .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL));
            if !seen {
                found.push(p);
            }
        }
    }
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    found
        .into_iter()
        .map(|p| {
            let residuals = residuals_raw(p, rows);
            let [[h11, h12], [_, h22]] = super::xor::xor_hessian(p, bc)?;
            let survives = residuals.passes(tol.stationary, tol.certificate);
            let classification = xor_degeneracy_classifier(&JointPmf::new(vec![2, 2], p.to_vec())?, bc, tol.degenerate)?;
            let verdict = if !survives {
                XorVerdict::RejectedFirstOrder
            } else if classification.class != XorClass::NotLocalMax {
                XorVerdict::Degenerate
            } else if residuals.det.abs() <= DETERMINANT_TOL {
                XorVerdict::DeterminantZero
            } else {
                XorVerdict::Inconclusive
            };
            Ok(XorSweepPoint {
                puv: p,
                residuals,
                on_gate_maximum: h11 < 0.0 && h11 * h22 - h12 * h12 > 0.0,
                survives,
                classification,
                verdict,
            })
        })
        .collect()
}

/// Locates interior stationary points of the XOR case on each `P(X=0)` level by
/// damped Newton iteration from a grid of starts and checks the off-gate
/// first-order conditions at each one.
pub fn xor_stationary_sweep(bc: &BroadcastChannel, cfg: &SweepConfig) -> Result<XorSweep> {
    cfg.validate()?;
    Rows::positive(bc)?;
    let levels = cfg.level_values();
    let per_level: Vec<Vec<XorSweepPoint>> = levels
        .par_iter()
        .map(|&s| xor_level(bc, &Rows::positive(bc)?, s, cfg))
        .collect::<Result<_>>()?;
    let points: Vec<XorSweepPoint> = per_level.into_iter().flatten().collect();
    Ok(XorSweep {
        channel_digest: bc.digest(),
        levels,
        survivors: points.iter().filter(|p| p.survives).count(),
        inconclusive: points.iter().filter(|p| p.verdict == XorVerdict::Inconclusive).count(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::TransitionMatrix;

    fn generic() -> BroadcastChannel {
        BroadcastChannel::new(
            TransitionMatrix::from_rows(&[vec![0.5, 0.3, 0.2], vec![0.1, 0.2, 0.7]], 1e-12).unwrap(),
            TransitionMatrix::from_rows(&[vec![0.85, 0.15], vec![0.25, 0.75]], 1e-12).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn and_curve_solves_first_equation() {
        let bc = generic();
        let rows = Rows::positive(&bc).unwrap();
        let (_, pt) = curve_residual(0.4, 0.2, &rows);
        let (g10, _) = super::super::and_gradient(&pt, &bc).unwrap();
        assert!(g10.abs() < 1e-10, "{g10}");
        let gaps = and_concavity_gaps(&pt, &bc).unwrap();
        assert!(gaps[0] >= -1e-10);
    }

    #[test]
    fn xor_sweep_finds_the_uniform_point() {
        let bc = generic();
        let sweep = xor_stationary_sweep(&bc, &SweepConfig::default()).unwrap();
        assert_eq!(sweep.inconclusive, 0);
        assert!(sweep
            .points
            .iter()
            .any(|p| p.survives && p.classification.class == XorClass::UniformIndependent));
    }

    #[test]
    fn and_sweep_is_certified() {
        let bc = generic();
        let sweep = and_stationary_sweep(&bc, &SweepConfig::default()).unwrap();
        assert!(sweep.all_certified(), "{:?}", sweep.unconverged);
        assert_eq!(sweep.edges.len(), 3);
        assert!(sweep.edges.iter().all(|e| e.min_value > 0.0));
        for p in &sweep.points {
            assert_eq!(p.certificate.verdict, AndVerdict::RejectedSaddle);
        }
    }
}
