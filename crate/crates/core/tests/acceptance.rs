//! End-to-end acceptance run. Prints one line per criterion and exits non-zero
//! if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use binbc::info::BroadcastChannel;
use binbc::marton::{marton_sum_rate_max, outer_bound_sum_rate_estimate, rtd_sum_rate_max};
use binbc::sampling::{blackwell, bssc, random_channel, random_gate_joint, uniform_simplex, Seed};
use binbc::search::OptimizerConfig;
use binbc::stationarity::{
    and_gradient, and_hessian, and_objective, and_stationary_sweep, finite_difference_gradient,
    finite_difference_hessian, xor_stationary_sweep, AndPoint, AndVerdict, SweepConfig, XorClass,
};
use binbc::theorem::{
    equivalent_form_margin, gate_canonicalize, margin, max_lhs_for_gate, search_violation, verify_binary_channel,
    Gate, GateJoint,
};
use common::Tensor;

const SIZES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

/// Sum rates on the binary skew-symmetric channel with skew 1/2.
const BSSC_MARTON: f64 = 0.3616428844;
const BSSC_OUTER: f64 = 0.3725562489;
const GOLDEN_TOL: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn sized_channel(i: u64, seed: u64) -> BroadcastChannel {
    let (ny, nz) = SIZES[(i % 4) as usize];
    random_channel(ny, nz, Seed(seed)).unwrap()
}

fn hunt() -> Verdict {
    let cfg = OptimizerConfig::default();
    let (mut worst, mut worst_seed, mut bad) = (f64::INFINITY, 0, 0);
    for i in 0..1000u64 {
        let r = verify_binary_channel(&sized_channel(i, i), &cfg).unwrap();
        if r.global_min_margin < -1e-9 {
            bad += 1;
        }
        if r.global_min_margin < worst {
            worst = r.global_min_margin;
            worst_seed = i;
        }
    }
    check(bad == 0, format!("1000 channels, {bad} below -1e-9, min margin {worst:.3e} (seed {worst_seed})"))
}

fn marton_matches_time_division() -> Verdict {
    let cfg = OptimizerConfig::default();
    let mut channels: Vec<BroadcastChannel> = (0..100u64).map(|i| sized_channel(i, 5000 + i)).collect();
    channels.push(bssc(0.5).unwrap());
    let (mut gap, mut dominance) = (0.0f64, true);
    for bc in &channels {
        let (rtd, _) = rtd_sum_rate_max(bc, &cfg).unwrap();
        let (marton, _) = marton_sum_rate_max(bc, &cfg).unwrap();
        gap = gap.max((marton - rtd).abs());
        dominance &= rtd <= marton + 1e-9;
    }
    check(
        gap <= 1e-4 && dominance,
        format!("101 channels, max |marton - rtd| = {gap:.3e}, rtd <= marton everywhere: {dominance}"),
    )
}

fn bssc_gap() -> Verdict {
    let cfg = OptimizerConfig::default();
    let bc = bssc(0.5).unwrap();
    let (marton, _) = marton_sum_rate_max(&bc, &cfg).unwrap();
    let (outer, w) = outer_bound_sum_rate_estimate(&bc, &cfg).unwrap();
    let (nu, nv) = (w.dims()[0], w.dims()[1]);
    let recheck = Tensor::of_channel(w.masses(), nu, nv, &bc).outer();
    let pass = outer - marton >= 1e-3
        && (marton - BSSC_MARTON).abs() <= GOLDEN_TOL
        && (outer - BSSC_OUTER).abs() <= GOLDEN_TOL
        && (recheck - outer).abs() <= 1e-12;
    check(pass, format!("marton {marton:.10}, outer {outer:.10}, gap {:.3e}", outer - marton))
}

fn blackwell_failure() -> Verdict {
    let bc = blackwell();
    let r = search_violation(&bc, &OptimizerConfig::default()).unwrap();
    match r.witness {
        Some(v) => {
            let g = v.witness.gate();
            let recheck = Tensor::of_channel(v.witness.to_triple().masses(), g.u_size(), g.v_size(), &bc).margin();
            check(
                v.margin <= -1e-3 && (recheck - v.margin).abs() <= 1e-12,
                format!("witness margin {:.6} with |U|={} |V|={}", v.margin, g.u_size(), g.v_size()),
            )
        }
        None => check(false, format!("no witness, min margin {:.3e}", r.min_margin)),
    }
}

fn derivative_oracles() -> Verdict {
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for c in 0..20u64 {
        let bc = sized_channel(c, 7000 + c);
        let mut rng = Seed(8000 + c).rng();
        let f = |p: &AndPoint| and_objective(p, &bc).unwrap();
        for _ in 0..100 {
            let m: Vec<f64> = uniform_simplex(&mut rng, 4).iter().map(|x| 0.05 + 0.8 * x).collect();
            let pt = AndPoint::new(m[3], m[2], m[1]).unwrap();
            let (g10, g01) = and_gradient(&pt, &bc).unwrap();
            let (f10, f01) = finite_difference_gradient(f, &pt, 1e-6).unwrap();
            let h = and_hessian(&pt, &bc).unwrap();
            let fh = finite_difference_hessian(f, &pt, 1e-4).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
            worst_g = worst_g.max(rel(g10, f10)).max(rel(g01, f01));
            worst_h = worst_h.max(rel(h.g11, fh.g11)).max(rel(h.g12, fh.g12)).max(rel(h.g22, fh.g22));
        }
    }
    check(
        worst_g <= 1e-6 && worst_h <= 1e-4,
        format!("2000 points, worst relative error gradient {worst_g:.2e}, hessian {worst_h:.2e}"),
    )
}

fn certificates() -> Verdict {
    let cfg = SweepConfig::default();
    let (mut and_points, mut saddles, mut survivors, mut ok_survivors, mut inconclusive) = (0, 0, 0, 0, 0);
    let mut unconverged = 0;
    for c in 0..20u64 {
        let bc = sized_channel(c, 1000 + c);
        let a = and_stationary_sweep(&bc, &cfg).unwrap();
        and_points += a.points.len();
        saddles += a.points.iter().filter(|p| p.certificate.verdict == AndVerdict::RejectedSaddle).count();
        unconverged += a.unconverged.len();
        inconclusive += a.inconclusive;
        let x = xor_stationary_sweep(&bc, &cfg).unwrap();
        inconclusive += x.inconclusive;
        for p in x.points.iter().filter(|p| p.survives) {
            survivors += 1;
            if p.residuals.det.abs() <= 1e-6 || p.classification.class != XorClass::NotLocalMax {
                ok_survivors += 1;
            }
        }
    }
    check(
        saddles == and_points && ok_survivors == survivors && inconclusive == 0 && unconverged == 0,
        format!(
            "AND {saddles}/{and_points} saddles, XOR {ok_survivors}/{survivors} survivors explained, \
             {inconclusive} inconclusive, {unconverged} unconverged"
        ),
    )
}

fn identities() -> Verdict {
    let (mut worst_eq, mut worst_canon, mut worst_dual) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000u64 {
        let bc = sized_channel(i, 9000 + i);
        let gj = random_gate_joint(Seed(i));
        let m = margin(&gj, &bc).unwrap();
        worst_eq = worst_eq.max((equivalent_form_margin(&gj, &bc).unwrap() - m).abs());
    }
    for id in 0..16u8 {
        for s in 0..20u64 {
            let bc = sized_channel(s, 11_000 + s);
            let p = uniform_simplex(&mut Seed(12_000 + 16 * s + id as u64).rng(), 4);
            let gj = GateJoint::binary([p[0], p[1], p[2], p[3]], Gate::binary(id)).unwrap();
            let c = gate_canonicalize(gj.gate()).unwrap();
            let moved = gj.transport(&c.relabeling).unwrap();
            let image = c.relabeling.transport_channel(&bc);
            worst_canon = worst_canon.max((margin(&moved, &image).unwrap() - margin(&gj, &bc).unwrap()).abs());
        }
    }
    let cfg = OptimizerConfig::default();
    for s in 0..5u64 {
        let bc = sized_channel(s, 13_000 + s);
        let (or, _) = max_lhs_for_gate(&bc, &Gate::binary(Gate::OR), &cfg, None).unwrap();
        let (and, _) = max_lhs_for_gate(&bc.flip_inputs(), &Gate::binary(Gate::AND), &cfg, None).unwrap();
        worst_dual = worst_dual.max((or - and).abs());
    }
    check(
        worst_eq <= 1e-10 && worst_canon <= 1e-12 && worst_dual <= 1e-9,
        format!("equivalent form {worst_eq:.1e}, canonicalization {worst_canon:.1e}, OR/AND duality {worst_dual:.1e}"),
    )
}

fn tightness() -> Verdict {
    let r = verify_binary_channel(&bssc(0.5).unwrap(), &OptimizerConfig::default()).unwrap();
    let non_const = r
        .per_gate_results
        .iter()
        .filter(|g| g.gate_id != Gate::ZERO && g.gate_id != Gate::ONE)
        .map(|g| g.min_margin)
        .fold(f64::INFINITY, f64::min);
    check(
        r.global_min_margin <= 1e-3,
        format!("min margin {:.3e}, over non-constant gates {non_const:.3e}", r.global_min_margin),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, hunt),
        (2, marton_matches_time_division),
        (3, bssc_gap),
        (4, blackwell_failure),
        (5, derivative_oracles),
        (6, certificates),
        (7, identities),
        (8, tightness),
    ];
    let mut failures = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {status} ({:.1} s) {}", start.elapsed().as_secs_f64(), v.detail);
        failures += usize::from(!v.pass);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
