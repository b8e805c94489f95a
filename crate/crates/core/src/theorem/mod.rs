//! The binary-input inequality
//!
//! ```text
//! I(U;Y) + I(V;Z) - I(U;V) <= max{ I(X;Y), I(X;Z) }
//! ```
//!
//! for `(U,V) -> X -> (Y,Z)`: exact evaluation of both sides, search for the
//! worst case over deterministic gates `X = f(U,V)`, verification reports and
//! the counterexample search for larger input alphabets.

mod counterexample;
mod gate;
pub mod kernel;
mod maximize;
mod verify;

use serde::{Deserialize, Serialize};

pub use counterexample::{search_violation, Violation, ViolationSearch};
pub use gate::{gate_canonicalize, CanonicalCase, CaseId, Gate, Relabeling};
pub use maximize::{max_lhs_for_gate, min_margin_for_gate, Candidate, GateSearch};
pub(crate) use maximize::lattice_max_lhs;
pub use verify::{
    verify_binary_channel, GateResult, OracleResult, SearchMetadata, VerificationReport,
    ORACLE_POINTS_PER_AXIS,
};

use crate::error::{Error, Result};
use crate::info::{
    channel_mutual_information, entropy_of, induced_pairs, mutual_information, BroadcastChannel,
    Distribution, JointPmf,
};

/// Margins at or above this value count as "the inequality holds".
pub const MARGIN_TOL: f64 = 1e-9;

/// A distribution on `(U, V)` together with the gate producing `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateJoint {
    puv: JointPmf,
    gate: Gate,
}

impl GateJoint {
    pub fn new(puv: JointPmf, gate: Gate) -> Result<Self> {
        if puv.dims() != [gate.u_size(), gate.v_size()] {
            return Err(Error::DimensionMismatch {
                context: "gate joint p(u,v)",
                expected: gate.u_size() * gate.v_size(),
                found: puv.masses().len(),
            });
        }
        Ok(Self { puv, gate })
    }

    /// Binary `(U, V)` with masses `[p00, p01, p10, p11]`.
    pub fn binary(puv: [f64; 4], gate: Gate) -> Result<Self> {
        Self::new(JointPmf::new(vec![2, 2], puv.to_vec())?, gate)
    }

    pub fn puv(&self) -> &JointPmf {
        &self.puv
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    /// `[p00, p01, p10, p11]`; panics for non-binary auxiliaries.
    pub fn puv_array(&self) -> [f64; 4] {
        let m = self.puv.masses();
        [m[0], m[1], m[2], m[3]]
    }

    /// The joint `p(u, v, x)` with `x = f(u, v)`.
    pub fn to_triple(&self) -> JointPmf {
        let g = &self.gate;
        JointPmf::from_fn(vec![g.u_size(), g.v_size(), g.x_size()], |i| {
            if g.eval(i[0], i[1]) == i[2] {
                self.puv.get(&[i[0], i[1]])
            } else {
                0.0
            }
        })
        .expect("gate joint composes to a valid pmf")
    }

    pub fn induced_px(&self) -> Distribution {
        let mut px = vec![0.0; self.gate.x_size()];
        for u in 0..self.gate.u_size() {
            for v in 0..self.gate.v_size() {
                px[self.gate.eval(u, v)] += self.puv.get(&[u, v]);
            }
        }
        Distribution::new(px).expect("marginal of a valid pmf")
    }

    /// Moves a binary gate joint along a relabeling.
    pub fn transport(&self, r: &Relabeling) -> Result<GateJoint> {
        GateJoint::binary(r.transport_puv(&self.puv_array()), r.transport_gate(&self.gate))
    }
}

fn check_input(gj: &GateJoint, bc: &BroadcastChannel) -> Result<()> {
    if gj.gate.x_size() != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "gate range vs channel input",
            expected: bc.input_size(),
            found: gj.gate.x_size(),
        });
    }
    Ok(())
}

/// `I(U;Y) + I(V;Z) - I(U;V)` for a general joint `p(u, v, x)`.
pub fn lhs_triple(joint_uvx: &JointPmf, bc: &BroadcastChannel) -> Result<f64> {
    let (uy, vz, _) = induced_pairs(joint_uvx, bc)?;
    let uv = joint_uvx.marginal(&[0, 1]);
    Ok(mutual_information(&uy)? + mutual_information(&vz)? - mutual_information(&uv)?)
}

/// `max{ I(X;Y), I(X;Z) }` for a general joint `p(u, v, x)`.
pub fn margin_triple(joint_uvx: &JointPmf, bc: &BroadcastChannel) -> Result<f64> {
    let px = joint_uvx.axis_distribution(2);
    Ok(rhs_value(&px, bc)? - lhs_triple(joint_uvx, bc)?)
}

/// Left side `I(U;Y) + I(V;Z) - I(U;V)` in bits.
pub fn lhs_value(gj: &GateJoint, bc: &BroadcastChannel) -> Result<f64> {
    check_input(gj, bc)?;
    lhs_triple(&gj.to_triple(), bc)
}

/// Right side `max{ I(X;Y), I(X;Z) }` in bits.
pub fn rhs_value(px: &Distribution, bc: &BroadcastChannel) -> Result<f64> {
    let iy = channel_mutual_information(px, bc.to_y())?;
    let iz = channel_mutual_information(px, bc.to_z())?;
    Ok(iy.max(iz))
}

/// `rhs - lhs`; non-negative for every binary-input channel.
pub fn margin(gj: &GateJoint, bc: &BroadcastChannel) -> Result<f64> {
    check_input(gj, bc)?;
    Ok(rhs_value(&gj.induced_px(), bc)? - lhs_value(gj, bc)?)
}

/// `H(U|Y) + H(V|Z) - min{ H(UV|Y), H(UV|Z) }` for a gate joint.
pub fn equivalent_form_margin(gj: &GateJoint, bc: &BroadcastChannel) -> Result<f64> {
    check_input(gj, bc)?;
    equivalent_form_margin_triple(&gj.to_triple(), bc)
}

/// Conditional-entropy form evaluated on `p(u, v, x)`; requires `X` to be a
/// deterministic function of `(U, V)` on the support.
pub fn equivalent_form_margin_triple(joint_uvx: &JointPmf, bc: &BroadcastChannel) -> Result<f64> {
    if joint_uvx.rank() != 3 || joint_uvx.dims()[2] != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "equivalent form joint",
            expected: bc.input_size(),
            found: *joint_uvx.dims().last().unwrap_or(&0),
        });
    }
    let (nu, nv, nx) = (joint_uvx.dims()[0], joint_uvx.dims()[1], joint_uvx.dims()[2]);
    for u in 0..nu {
        for v in 0..nv {
            let support = (0..nx).filter(|&x| joint_uvx.get(&[u, v, x]) > 0.0).count();
            if support > 1 {
                return Err(Error::InvalidGate(format!(
                    "X is not a deterministic function of (U,V) at (u,v)=({u},{v})"
                )));
            }
        }
    }
    // p(u, v, out) through one receiver, then conditional entropies directly
    let through = |ch: &crate::info::TransitionMatrix| -> Vec<f64> {
        let no = ch.output_size();
        let mut t = vec![0.0; nu * nv * no];
        for u in 0..nu {
            for v in 0..nv {
                for x in 0..nx {
                    let m = joint_uvx.get(&[u, v, x]);
                    if m > 0.0 {
                        for o in 0..no {
                            t[(u * nv + v) * no + o] += m * ch.prob(x, o);
                        }
                    }
                }
            }
        }
        t
    };
    let cond = |t: &[f64], no: usize| -> (f64, f64, f64) {
        // returns H(U|out), H(V|out), H(UV|out)
        let mut pu = vec![0.0; nu * no];
        let mut pv = vec![0.0; nv * no];
        let mut po = vec![0.0; no];
        for u in 0..nu {
            for v in 0..nv {
                for o in 0..no {
                    let m = t[(u * nv + v) * no + o];
                    pu[u * no + o] += m;
                    pv[v * no + o] += m;
                    po[o] += m;
                }
            }
        }
        let h_o = entropy_of(&po);
        (
            entropy_of(&pu) - h_o,
            entropy_of(&pv) - h_o,
            entropy_of(t) - h_o,
        )
    };
    let (h_u_y, _, h_uv_y) = cond(&through(bc.to_y()), bc.to_y().output_size());
    let (_, h_v_z, h_uv_z) = cond(&through(bc.to_z()), bc.to_z().output_size());
    Ok(h_u_y + h_v_z - h_uv_y.min(h_uv_z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::TransitionMatrix;

    fn identity_bc() -> BroadcastChannel {
        let id = TransitionMatrix::identity(2).unwrap();
        BroadcastChannel::new(id.clone(), id).unwrap()
    }

    fn noise_row() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]], 0.0).unwrap()
    }

    #[test]
    fn and_gate_uniform_on_identity_channels() {
        let gj = GateJoint::binary([0.25; 4], Gate::binary(Gate::AND)).unwrap();
        let bc = identity_bc();
        let lhs = lhs_value(&gj, &bc).unwrap();
        assert!((lhs - 0.622556).abs() < 1e-6, "{lhs}");
        let m = margin(&gj, &bc).unwrap();
        assert!((m - 0.188722).abs() < 1e-6, "{m}");
        let e = equivalent_form_margin(&gj, &bc).unwrap();
        assert!((e - m).abs() < 1e-12);
    }

    #[test]
    fn const_gate_margin_is_uv_information() {
        let puv = [0.4, 0.1, 0.1, 0.4];
        let gj = GateJoint::binary(puv, Gate::binary(Gate::ZERO)).unwrap();
        let bc = identity_bc();
        let iuv = mutual_information(&JointPmf::new(vec![2, 2], puv.to_vec()).unwrap()).unwrap();
        assert!((lhs_value(&gj, &bc).unwrap() + iuv).abs() < 1e-14);
        assert!((margin(&gj, &bc).unwrap() - iuv).abs() < 1e-14);
        assert!((equivalent_form_margin(&gj, &bc).unwrap() - iuv).abs() < 1e-12);
    }

    #[test]
    fn u_independent_of_x_leaves_v_term() {
        // X = V, U independent of V
        let puv = [0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4];
        let gj = GateJoint::binary(puv, Gate::binary(Gate::PASS_V)).unwrap();
        let bc = identity_bc();
        let (_, vz, _) = induced_pairs(&gj.to_triple(), &bc).unwrap();
        let ivz = mutual_information(&vz).unwrap();
        assert!((lhs_value(&gj, &bc).unwrap() - ivz).abs() < 1e-12);
        assert!(margin(&gj, &bc).unwrap() >= -1e-12);
    }

    #[test]
    fn rhs_examples() {
        let bc = BroadcastChannel::new(noise_row(), noise_row()).unwrap();
        assert!(rhs_value(&Distribution::uniform(2).unwrap(), &bc).unwrap().abs() < 1e-12);
        assert_eq!(
            rhs_value(&Distribution::uniform(2).unwrap(), &identity_bc()).unwrap(),
            1.0
        );
    }

    #[test]
    fn rhs_on_z_channel_matches_closed_form() {
        // Z-channel: 0 -> 0, 1 -> 0 w.p. 1/2; uniform input
        let z = TransitionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]], 0.0).unwrap();
        let bc = BroadcastChannel::new(z.clone(), z).unwrap();
        let closed = entropy_of(&[0.75, 0.25]) - 0.5;
        let v = rhs_value(&Distribution::uniform(2).unwrap(), &bc).unwrap();
        assert!((v - closed).abs() < 1e-14);
    }

    #[test]
    fn equivalent_form_rejects_randomized_x() {
        let j = JointPmf::from_fn(vec![2, 2, 2], |_| 0.125).unwrap();
        assert!(matches!(
            equivalent_form_margin_triple(&j, &identity_bc()),
            Err(Error::InvalidGate(_))
        ));
    }

    #[test]
    fn mismatched_gate_range_is_rejected() {
        let gj = GateJoint::new(
            JointPmf::new(vec![2, 2], vec![0.25; 4]).unwrap(),
            Gate::new(2, 2, 3, vec![0, 1, 2, 0]).unwrap(),
        )
        .unwrap();
        assert!(lhs_value(&gj, &identity_bc()).is_err());
    }

    #[test]
    fn kernel_matches_validated_path() {
        let y = TransitionMatrix::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]], 1e-12).unwrap();
        let z = TransitionMatrix::from_rows(&[vec![0.55, 0.45], vec![0.05, 0.95]], 0.0).unwrap();
        let bc = BroadcastChannel::new(y, z).unwrap();
        let mut k = kernel::MarginKernel::new(&bc);
        let puv = [0.1, 0.2, 0.3, 0.4];
        for g in Gate::all_binary() {
            let gj = GateJoint::binary(puv, g.clone()).unwrap();
            let fast = k.eval_gate(2, 2, &puv, g.table());
            assert!((fast.lhs - lhs_value(&gj, &bc).unwrap()).abs() < 1e-12);
            assert!((fast.margin() - margin(&gj, &bc).unwrap()).abs() < 1e-12);
            let t = gj.to_triple();
            let tri = k.eval_triple(2, 2, t.masses());
            assert!((tri.lhs - fast.lhs).abs() < 1e-12);
        }
    }
}
