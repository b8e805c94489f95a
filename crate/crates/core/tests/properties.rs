mod common;

use binbc::info::{
    conditional_mutual_information, entropy, kl_divergence, mutual_information, observe, BroadcastChannel,
    Distribution, JointPmf, TransitionMatrix,
};
use binbc::marton::{rtd_objective, RtdPoint};
use binbc::sampling::{bssc, random_channel, random_gate_joint, Seed};
use binbc::stationarity::{
    and_concavity_gaps, and_edge_residuals, and_gradient, and_hessian, xor_first_order_residuals, AndPoint,
    LyapunovPerturbation,
};
use binbc::theorem::{
    equivalent_form_margin, gate_canonicalize, lhs_value, margin, margin_triple, Gate, GateJoint,
};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero total", |w| {
        let t: f64 = w.iter().sum();
        (t > 1e-6).then(|| w.iter().map(|x| x / t).collect())
    })
}

fn interior_simplex(n: usize, floor: f64) -> impl Strategy<Value = Vec<f64>> {
    simplex(n).prop_map(move |p| p.iter().map(|x| floor + (1.0 - n as f64 * floor) * x).collect())
}

fn matrix(nx: usize, no: usize) -> impl Strategy<Value = TransitionMatrix> {
    prop::collection::vec(simplex(no), nx).prop_map(|rows| TransitionMatrix::from_rows(&rows, 1e-12).unwrap())
}

fn binary_channel() -> impl Strategy<Value = BroadcastChannel> {
    (2usize..=4, 2usize..=4)
        .prop_flat_map(|(ny, nz)| (matrix(2, ny), matrix(2, nz)))
        .prop_map(|(y, z)| BroadcastChannel::new(y, z).unwrap())
}

fn positive_channel() -> impl Strategy<Value = BroadcastChannel> {
    (2usize..=3, 2usize..=3)
        .prop_flat_map(|(ny, nz)| {
            let rows = |n| prop::collection::vec(interior_simplex(n, 0.02), 2);
            (rows(ny), rows(nz))
        })
        .prop_map(|(y, z)| {
            BroadcastChannel::new(
                TransitionMatrix::from_rows(&y, 1e-12).unwrap(),
                TransitionMatrix::from_rows(&z, 1e-12).unwrap(),
            )
            .unwrap()
        })
}

fn gate_joint() -> impl Strategy<Value = GateJoint> {
    (simplex(4), 0u8..16).prop_map(|(p, id)| GateJoint::binary([p[0], p[1], p[2], p[3]], Gate::binary(id)).unwrap())
}

fn and_point(floor: f64) -> impl Strategy<Value = AndPoint> {
    interior_simplex(4, floor).prop_map(|m| AndPoint::new(m[3], m[2], m[1]).unwrap())
}

proptest! {
    #[test]
    fn entropy_is_bounded(p in (1usize..9).prop_flat_map(simplex)) {
        let d = Distribution::new(p.clone()).unwrap();
        let h = entropy(&d);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (p.len() as f64).log2() + 1e-12);
        prop_assert!((d.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kl_is_nonnegative(p in simplex(5), q in interior_simplex(5, 1e-3)) {
        let kl = kl_divergence(&Distribution::new(p).unwrap(), &Distribution::new(q).unwrap()).unwrap();
        prop_assert!(kl >= -1e-12);
    }

    #[test]
    fn mutual_information_is_symmetric_and_nonnegative(p in simplex(12)) {
        let j = JointPmf::new(vec![3, 4], p.clone()).unwrap();
        let t = JointPmf::from_fn(vec![4, 3], |i| p[i[1] * 4 + i[0]]).unwrap();
        let i = mutual_information(&j).unwrap();
        prop_assert!(i >= -1e-12);
        prop_assert!((i - mutual_information(&t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn chain_rule(p in simplex(12)) {
        // I(A;BC) = I(A;C) + I(A;B|C)
        let j = JointPmf::new(vec![2, 3, 2], p).unwrap();
        let a_bc = JointPmf::new(vec![2, 6], j.masses().to_vec()).unwrap();
        let lhs = mutual_information(&a_bc).unwrap();
        let rhs = mutual_information(&j.marginal(&[0, 2])).unwrap() + conditional_mutual_information(&j).unwrap();
        prop_assert!(conditional_mutual_information(&j).unwrap() >= -1e-12);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn data_processing(p in simplex(8), bc in binary_channel()) {
        let j = JointPmf::new(vec![2, 2, 2], p).unwrap();
        let ux = j.marginal(&[0, 2]);
        let vx = j.marginal(&[1, 2]);
        let uy = observe(&ux, 1, bc.to_y()).unwrap();
        let vz = observe(&vx, 1, bc.to_z()).unwrap();
        let px = j.axis_distribution(2);
        let ixy = mutual_information(&binbc::info::push_through(&px, bc.to_y()).unwrap()).unwrap();
        let ixz = mutual_information(&binbc::info::push_through(&px, bc.to_z()).unwrap()).unwrap();
        let iuy = mutual_information(&uy).unwrap();
        let ivz = mutual_information(&vz).unwrap();
        prop_assert!(iuy <= mutual_information(&ux).unwrap() + 1e-10);
        prop_assert!(iuy <= ixy + 1e-10);
        prop_assert!(ivz <= mutual_information(&vx).unwrap() + 1e-10);
        prop_assert!(ivz <= ixz + 1e-10);
    }

    #[test]
    fn margin_is_nonnegative_on_gates(gj in gate_joint(), bc in binary_channel()) {
        prop_assert!(margin(&gj, &bc).unwrap() >= -1e-9);
    }

    #[test]
    fn margin_is_nonnegative_on_triples(p in simplex(8), bc in binary_channel()) {
        let j = JointPmf::new(vec![2, 2, 2], p).unwrap();
        prop_assert!(margin_triple(&j, &bc).unwrap() >= -1e-9);
    }

    #[test]
    fn equivalent_form_agrees(gj in gate_joint(), bc in binary_channel()) {
        let a = margin(&gj, &bc).unwrap();
        prop_assert!((equivalent_form_margin(&gj, &bc).unwrap() - a).abs() <= 1e-10);
    }

    #[test]
    fn canonicalization_preserves_sides(gj in gate_joint(), bc in binary_channel()) {
        let c = gate_canonicalize(gj.gate()).unwrap();
        let moved = gj.transport(&c.relabeling).unwrap();
        let image = c.relabeling.transport_channel(&bc);
        prop_assert_eq!(moved.gate(), &c.case_id.representative());
        prop_assert!((lhs_value(&moved, &image).unwrap() - lhs_value(&gj, &bc).unwrap()).abs() <= 1e-12);
        prop_assert!((margin(&moved, &image).unwrap() - margin(&gj, &bc).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn rtd_never_exceeds_the_better_receiver_plus_split(
        r in simplex(4), bc in binary_channel()
    ) {
        let (p0, q0, q1) = (r[0] + r[1], r[1] / (r[0] + r[1]).max(1e-300), r[2] / (r[2] + r[3]).max(1e-300));
        prop_assume!(p0 > 1e-9 && p0 < 1.0 - 1e-9);
        let v = rtd_objective(&RtdPoint::from_params(p0, q0, q1).unwrap(), &bc).unwrap();
        prop_assert!((v - common::rtd_value(p0, q0, q1, &bc)).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn and_gradient_matches_differences(pt in and_point(0.05), bc in positive_channel()) {
        let (g10, g01) = and_gradient(&pt, &bc).unwrap();
        let f = |d10: f64, d01: f64| {
            binbc::stationarity::and_objective(&AndPoint { p11: pt.p11, p10: pt.p10 + d10, p01: pt.p01 + d01 }, &bc).unwrap()
        };
        let h = 1e-6;
        let fd10 = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let fd01 = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        prop_assert!((g10 - fd10).abs() <= 1e-6 * g10.abs().max(1.0));
        prop_assert!((g01 - fd01).abs() <= 1e-6 * g01.abs().max(1.0));
    }

    #[test]
    fn and_hessian_diagonal_is_negative(pt in and_point(1e-3), bc in positive_channel()) {
        let g = and_hessian(&pt, &bc).unwrap();
        prop_assert!(g.g11 < 0.0 && g.g22 < 0.0);
        prop_assert_eq!(g.g12, -1.0 / pt.p00());
    }

    #[test]
    fn lyapunov_second_derivative_matches_objective(pt in and_point(0.05), bc in positive_channel(), t in 0.0f64..1.0) {
        // L01 free, L10 = t, L00 fixed by the constraint
        let [p00, p01, p10, _] = pt.masses();
        let (l01, l10) = (t - 0.5, 0.5 * t);
        let l00 = -(p01 * l01 + p10 * l10) / p00;
        let l = LyapunovPerturbation::new(&pt, l00, l01, l10).unwrap();
        let f = |e: f64| {
            let q = AndPoint { p11: pt.p11, p10: p10 * (1.0 + e * l10), p01: p01 * (1.0 + e * l01) };
            binbc::stationarity::and_objective(&q, &bc).unwrap()
        };
        let h = 1e-4;
        let fd1 = (f(h) - f(-h)) / (2.0 * h);
        let fd2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let d1 = l.first_derivative(&pt, &bc).unwrap();
        let d2 = l.second_derivative(&pt, &bc).unwrap();
        prop_assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0));
        prop_assert!((d2 - fd2).abs() <= 1e-4 * d2.abs().max(1.0));
    }

    #[test]
    fn xor_slacks_telescope(p in interior_simplex(4, 1e-3), bc in positive_channel()) {
        let r = xor_first_order_residuals(&JointPmf::new(vec![2, 2], p.clone()).unwrap(), &bc).unwrap();
        let ratio = (p[1] * p[2] / (p[0] * p[3])).ln();
        prop_assert!((r.slack[0] + r.slack[1] + r.e1 - ratio).abs() <= 1e-10);
        prop_assert!((r.slack[2] + r.slack[3] + r.e2 + ratio).abs() <= 1e-10);
    }

    #[test]
    fn concavity_gap_where_first_equation_holds(
        p11 in 0.05f64..0.6, frac in 0.05f64..0.95, bc in positive_channel()
    ) {
        let p01 = frac * (1.0 - p11) * 0.9;
        let g10 = |p10: f64| and_gradient(&AndPoint { p11, p10, p01 }, &bc).unwrap().0;
        // df/dp10 decreases from +inf to -inf on the open interval
        let (mut lo, mut hi) = (1e-14, 1.0 - p11 - p01 - 1e-14);
        prop_assume!(g10(lo) > 0.0 && g10(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g10(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        let pt = AndPoint::new(p11, 0.5 * (lo + hi), p01).unwrap();
        prop_assert!(and_concavity_gaps(&pt, &bc).unwrap()[0] >= -1e-10);
    }

    #[test]
    fn edge_residuals_are_positive(m in interior_simplex(3, 0.02), which in 0usize..3, bc in positive_channel()) {
        let pt = match which {
            0 => AndPoint::new(m[0], m[1], m[2]).unwrap(),
            1 => AndPoint::new(m[0], m[1], 0.0).unwrap(),
            _ => AndPoint::new(m[0], 0.0, m[1]).unwrap(),
        };
        let r = and_edge_residuals(&pt, &bc).unwrap();
        prop_assert!(r.value > 0.0);
        if let Some(excess) = r.valid_direction_excess {
            prop_assert!(excess > 0.0);
        }
    }

    #[test]
    fn samplers_are_pure(seed in any::<u64>(), ny in 2usize..5, nz in 2usize..5) {
        prop_assert_eq!(random_channel(ny, nz, Seed(seed)).unwrap(), random_channel(ny, nz, Seed(seed)).unwrap());
        prop_assert_eq!(random_gate_joint(Seed(seed)), random_gate_joint(Seed(seed)));
        let bc = random_channel(ny, nz, Seed(seed)).unwrap();
        prop_assert_eq!(bc.input_size(), 2);
    }
}

#[test]
fn bssc_half_is_mirror_symmetric() {
    // exact after also relabeling the outputs of both receivers
    let bc = bssc(0.5).unwrap();
    let m = bc.flip_inputs().swap_receivers();
    let m = BroadcastChannel::new(m.to_y().permute_outputs(&[1, 0]), m.to_z().permute_outputs(&[1, 0])).unwrap();
    assert_eq!(m, bc);
}

#[test]
fn concavity_gap_closes_on_degenerate_channel() {
    let y = TransitionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]], 1e-12).unwrap();
    let z = TransitionMatrix::from_rows(&[vec![0.6, 0.4], vec![0.6, 0.4]], 1e-12).unwrap();
    let bc = BroadcastChannel::new(y, z).unwrap();
    // with a = â the first equation reduces to p00 p11 = p01 p10
    let (p11, p01) = (0.2, 0.3);
    let p10 = (1.0 - p11 - p01) * p11 / (p11 + p01);
    let pt = AndPoint::new(p11, p10, p01).unwrap();
    assert!(and_gradient(&pt, &bc).unwrap().0.abs() < 1e-12);
    assert!(and_concavity_gaps(&pt, &bc).unwrap()[0].abs() < 1e-12);
}
