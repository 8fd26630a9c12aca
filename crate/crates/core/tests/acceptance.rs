//! Acceptance checks. Runs as a plain binary (`harness = false`) so that
//! each criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hapsim::cmg::{self, CmgState, FlywheelSpec};
use hapsim::harness::{
    run_condition, tracking_metrics, zero_crossings, ConditionTrace, Rig, SwingProfile,
};
use hapsim::impedance::{measurement_conditions, Condition, ConditionName};
use hapsim::plant::{simulate, PlantParams, PlantState, TorqueInput};
use hapsim::sdanalysis::{
    factor_summary, normalized_criterion, varimax, FactorSummary, VarimaxOptions,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_hapsim");

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn noiseless_run(name: ConditionName) -> ConditionTrace {
    run_condition(
        &Condition::canonical(name),
        &SwingProfile::default(),
        &Rig::noiseless(),
    )
    .expect("run completes")
}

fn tracking_fidelity() -> Outcome {
    let start = Instant::now();
    let profile = SwingProfile::default();
    let mut worst: f64 = 0.0;
    for name in &ConditionName::ALL[..4] {
        let trace = noiseless_run(*name);
        check(!trace.truncated, || format!("{name} truncated"))?;
        let m = tracking_metrics(&trace).map_err(|e| e.to_string())?;
        check(m.normalized_rmse <= 0.10, || {
            format!("{name}: normalized_rmse {}", m.normalized_rmse)
        })?;
        worst = worst.max(m.normalized_rmse);

        if *name == ConditionName::IncreasedInertia {
            let t: Vec<f64> = trace.samples.iter().map(|s| s.t).collect();
            let tau: Vec<f64> = trace.samples.iter().map(|s| s.tau_desired).collect();
            let crossings = zero_crossings(&t, &tau);
            for i in 0..profile.n_swings {
                let a = profile.swing_start(i);
                let b = a + profile.swing_duration();
                let inside = crossings.iter().filter(|&&c| c > a && c < b).count();
                check(inside >= 1, || format!("swing {i}: desired torque never changes sign"))?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 5.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!("worst normalized RMSE {worst:.2e}, sign change in every swing, {secs:.2} s"))
}

fn elastic_ring() -> Outcome {
    let trace = noiseless_run(ConditionName::ElasticityIncrease);
    let m = tracking_metrics(&trace).map_err(|e| e.to_string())?;
    let p = Condition::canonical(ConditionName::ElasticityIncrease).params;
    // analytic mass-spring-damper on the tip inertia
    let wn = (p.k_r / p.tip_inertia).sqrt();
    let zeta = p.c_r / (2.0 * (p.k_r * p.tip_inertia).sqrt());
    let fd = wn * (1.0 - zeta * zeta).sqrt() / (2.0 * std::f64::consts::PI);
    let tau_decay = 2.0 * p.tip_inertia / p.c_r;

    let hz = m.dominant_oscillation_hz.ok_or("no oscillation frequency")?;
    let decay = m.ring_decay_s.ok_or("no decay estimate")?;
    check((hz - 2.0).abs() <= 0.05 * 2.0, || format!("ring {hz} Hz not within 5% of 2.0"))?;
    check((hz - fd).abs() <= 0.05 * fd, || format!("ring {hz} Hz vs analytic {fd}"))?;
    check((decay - tau_decay).abs() <= 0.10 * tau_decay, || {
        format!("decay {decay} s vs analytic {tau_decay} s")
    })?;
    Ok(format!(
        "ring {hz:.4} Hz (analytic {fd:.4}), decay {decay:.3} s (analytic {tau_decay:.3})"
    ))
}

fn sign_structure() -> Outcome {
    let mut samples = 0usize;
    let mut rigs = vec![Rig::noiseless()];
    for seed in 0..3 {
        let mut r = Rig::default();
        r.imu.seed = seed;
        rigs.push(r);
    }
    for rig in &rigs {
        for cond in &measurement_conditions()[..4] {
            let trace = run_condition(cond, &SwingProfile::default(), rig).map_err(|e| e.to_string())?;
            for s in &trace.samples {
                let (di, dd) = (cond.params.delta_inertia, cond.params.delta_damping);
                let product = if di != 0.0 {
                    s.tau_desired * s.omega_dot * di.signum()
                } else {
                    s.tau_desired * s.omega * dd.signum()
                };
                check(product <= 0.0, || {
                    format!("{} at t={}: sign violated ({product})", cond.name, s.t)
                })?;
                samples += 1;
            }
        }
    }
    Ok(format!("0 violations over {samples} samples"))
}

fn cmg_inverse() -> Outcome {
    let spec = FlywheelSpec::default();
    let rate_limit = cmg::DEFAULT_RATE_LIMIT;
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (-std::f64::consts::PI..std::f64::consts::PI, -0.9..0.9f64)
        .prop_filter("away from singularity", |(phi, _)| phi.sin().abs() >= 0.05);
    runner
        .run(&strategy, |(phi, frac)| {
            let tau = frac * cmg::torque_envelope(phi, &spec, rate_limit);
            let cmd = cmg::inverse_gimbal_rate(tau, phi, &spec, rate_limit);
            let state = CmgState {
                phi,
                phi_rate: cmd.rate,
                ..CmgState::default()
            };
            let back = cmg::forward_torque(&state, &spec);
            prop_assert!(!cmd.saturated);
            prop_assert!((back - tau).abs() <= 1e-9 * tau.abs().max(1e-12));
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let mut checked = 0usize;
    for cond in measurement_conditions() {
        for rig in [Rig::noiseless(), Rig::default()] {
            let trace = run_condition(&cond, &SwingProfile::default(), &rig).map_err(|e| e.to_string())?;
            for (s, g) in trace.samples.iter().zip(&trace.gimbal) {
                check(s.tau_achieved.abs() <= g.envelope * (1.0 + 1e-12), || {
                    format!("{} t={}: |τ| {} > envelope {}", cond.name, s.t, s.tau_achieved, g.envelope)
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("10000 random cases within 1e-9; {checked} harness samples within envelope"))
}

fn integrator() -> Outcome {
    let smooth = |t: f64| 0.01 * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin());
    let final_state = |dt: f64, damping: f64| -> PlantState {
        let params = PlantParams {
            time_step: dt,
            damping_inherent: damping,
            ..PlantParams::default()
        };
        let mut source = |s: &PlantState| Ok(TorqueInput::human(smooth(s.time)));
        *simulate(&params, PlantState::at_rest(), &mut source, 1.0)
            .expect("runs")
            .last()
            .unwrap()
    };
    let mut worst: f64 = 0.0;
    for damping in [0.0, 1e-3] {
        let a = final_state(1e-3, damping);
        let b = final_state(5e-4, damping);
        for (x, y, what) in [(a.omega, b.omega, "omega"), (a.theta, b.theta, "theta")] {
            let rel = (x - y).abs() / y.abs();
            check(rel < 2e-3, || format!("halving dt moves final {what} by {rel:.2e}"))?;
            worst = worst.max(rel);
        }
    }

    // work–energy over consecutive 1000-step windows
    let params = PlantParams::default();
    let mut source = |s: &PlantState| Ok(TorqueInput::human(smooth(s.time)));
    let states = simulate(&params, PlantState::at_rest(), &mut source, 5.0).expect("runs");
    let mut worst_energy: f64 = 0.0;
    for window in states.chunks(1000).filter(|w| w.len() == 1000) {
        let mut work = 0.0;
        for pair in window.windows(2) {
            work += smooth(pair[0].time) * (pair[1].theta - pair[0].theta);
        }
        let i = params.inertia_total;
        let d_ke = window[999].kinetic_energy(i) - window[0].kinetic_energy(i);
        let rel = (d_ke - work).abs() / work.abs();
        check(rel <= 5e-3, || format!("energy mismatch {rel:.2e} in a 1000-step window"))?;
        worst_energy = worst_energy.max(rel);
    }
    Ok(format!(
        "dt-halving change {:.3}%, energy mismatch {:.3}% per 1000 steps",
        worst * 100.0,
        worst_energy * 100.0
    ))
}

fn run_bin(args: &[&str]) -> Result<String, String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "hapsim {} failed ({}): {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn congruences(dir: &Path) -> Result<Vec<f64>, String> {
    let text = fs::read_to_string(dir.join("congruence.csv")).map_err(|e| e.to_string())?;
    text.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

fn factor_recovery() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for (noise, bound) in [("0.3", 0.95), ("0", 0.999)] {
        let dir = tmp.path().join(format!("noise-{noise}"));
        let ratings = dir.join("ratings.csv");
        let model = dir.join("ratings.model.json");
        let out = dir.join("analysis");
        let ratings_s = ratings.to_str().unwrap();
        run_bin(&["synth", "--out", ratings_s, "--observations", "200", "--noise", noise, "--seed", "7"])?;
        let rows = fs::read_to_string(&ratings).map_err(|e| e.to_string())?.lines().count() - 1;
        check(rows == 200, || format!("{rows} data rows"))?;
        run_bin(&[
            "analyze",
            ratings_s,
            "--factors",
            "4",
            "--method",
            "pca",
            "--out",
            out.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
        ])?;
        let phi = congruences(&out)?;
        check(phi.len() == 4, || format!("{} factors aligned", phi.len()))?;
        let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
        check(min >= bound, || format!("noise {noise}: min congruence {min} < {bound}"))?;
        report.push(format!("σ={noise}: min congruence {min:.5}"));
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!("{}, {secs:.2} s", report.join("; ")))
}

/// Global maximum of the normalized varimax criterion over planar rotations,
/// by a 1e-4 rad grid on [0, π/2) refined with golden-section search.
fn brute_force_varimax(l: &DMatrix<f64>) -> f64 {
    let rotate = |a: f64| {
        let (s, c) = a.sin_cos();
        let t = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        normalized_criterion(&(l * t))
    };
    let quarter = std::f64::consts::FRAC_PI_2;
    let steps = (quarter / 1e-4).ceil() as usize;
    let (mut best_a, mut best) = (0.0, f64::NEG_INFINITY);
    for i in 0..steps {
        let a = i as f64 * 1e-4;
        let v = rotate(a);
        if v > best {
            best = v;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = (best_a - 1e-4, best_a + 1e-4);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if rotate(m1) < rotate(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(rotate(0.5 * (lo + hi)))
}

fn varimax_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_crit, mut worst_comm, mut worst_orth): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..100 {
        let p = rng.random_range(4..=12);
        let l = DMatrix::from_fn(p, 2, |_, _| rng.random_range(-0.95..0.95));
        let v = varimax(&l, &VarimaxOptions::default()).map_err(|e| e.to_string())?;
        let oracle = brute_force_varimax(&l);
        let diff = (v.criterion() - oracle).abs();
        check(diff <= 1e-8, || format!("case {case}: criterion {} vs oracle {oracle}", v.criterion()))?;

        let comm_err = l
            .row_iter()
            .zip(v.loadings.row_iter())
            .map(|(a, b)| (a.norm_squared() - b.norm_squared()).abs())
            .fold(0.0, f64::max);
        let orth = (v.rotation.transpose() * &v.rotation - DMatrix::identity(2, 2)).abs().max();
        check(comm_err <= 1e-10, || format!("case {case}: communality drift {comm_err}"))?;
        check(orth <= 1e-10, || format!("case {case}: orthogonality error {orth}"))?;
        worst_crit = worst_crit.max(diff);
        worst_comm = worst_comm.max(comm_err);
        worst_orth = worst_orth.max(orth);
    }
    Ok(format!(
        "100 matrices: criterion gap {worst_crit:.1e}, communality {worst_comm:.1e}, orthogonality {worst_orth:.1e}"
    ))
}

fn summary_arithmetic() -> Outcome {
    let ss = vec![2.283029, 1.221785, 0.982619, 0.821623];
    let printed_pct = [0.326147, 0.174541, 0.140374, 0.117375];
    let printed_cum = [0.326147, 0.500688, 0.641062, 0.758437];
    let s = FactorSummary::from_ss(ss.clone(), 7);
    for j in 0..4 {
        check((s.pct_variance[j] - printed_pct[j]).abs() <= 1e-6, || {
            format!("factor {}: {} vs printed {}", j + 1, s.pct_variance[j], printed_pct[j])
        })?;
        check((s.cumulative[j] - printed_cum[j]).abs() <= 1e-6, || {
            format!("factor {}: cumulative {} vs printed {}", j + 1, s.cumulative[j], printed_cum[j])
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = rng.random_range(2..=12);
        let k = rng.random_range(1..=p);
        let l = DMatrix::from_fn(p, k, |_, _| rng.random_range(-1.0..1.0));
        let s = factor_summary(&l);
        let mut running = 0.0;
        for j in 0..k {
            check(s.pct_variance[j] == s.ss_loadings[j] / p as f64, || "pct != ss/n".into())?;
            running += s.pct_variance[j];
            check(s.cumulative[j] == running, || "cumulative is not the running sum".into())?;
        }
    }
    Ok(format!(
        "{:.6}/7 = {:.6}, cumulative {:.6}; 200 random loadings exact",
        ss[0], s.pct_variance[0], s.cumulative[3]
    ))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let root = tmp.path().join(run);
        let r = |p: &str| root.join(p).to_str().unwrap().to_owned();
        run_bin(&["measure", "--out", &r("measure"), "--seed", "11"])?;
        run_bin(&["synth", "--out", &r("synth/ratings.csv"), "--seed", "11", "--round"])?;
        run_bin(&["analyze", &r("synth/ratings.csv"), "--out", &r("analyze"), "--factors", "4", "--method", "pca"])?;
        runs.push(root);
    }
    for sub in ["measure", "synth", "analyze"] {
        let a = dir_bytes(&runs[0].join(sub));
        let b = dir_bytes(&runs[1].join(sub));
        check(!a.is_empty(), || format!("{sub} wrote nothing"))?;
        check(a == b, || format!("{sub}: outputs differ between runs"))?;
        counts.push(format!("{sub} {} files", a.len()));
    }
    Ok(format!("byte-identical: {}", counts.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("torque-tracking fidelity", tracking_fidelity),
        ("elastic ring", elastic_ring),
        ("sign structure", sign_structure),
        ("CMG inverse consistency", cmg_inverse),
        ("integrator convergence", integrator),
        ("factor recovery", factor_recovery),
        ("varimax correctness", varimax_oracle),
        ("summary arithmetic", summary_arithmetic),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} — {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
