//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use weaklab::cli::{execute, execute_sweep, fitted_error_order, sweep_grid, RunConfig};
use weaklab::engines::{
    heisenberg_moment, run_fock, run_joint_exact, run_single_exact, Coupling, EngineOptions, EngineTag,
    JointCoupling, MeasurementRecord, MomentTag, SingleCoupling,
};
use weaklab::pointer::{build_fock, GaussianPointer};
use weaklab::qcore::{c, Observable, QuantumState, C64};
use weaklab::scenarios::{build_hardy, build_imaginary, build_three_box, preset, Scenario, PRESET_NAMES};
use weaklab::weakvalues::{direct_joint_weak_value, extract_single};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Criterion = fn() -> Result<Outcome, weaklab::Error>;

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn pointer(sigma: f64) -> GaussianPointer {
    GaussianPointer::with_sigma(sigma).unwrap()
}

fn pointer_integrals() -> Result<Outcome, weaklab::Error> {
    let (worst, dt) = timed(|| -> Result<f64, weaklab::Error> {
        let mut worst: f64 = 0.0;
        for (sigma, hbar, n_max) in [(1.0, 1.0, 2), (1.0, 1.0, 40), (0.7, 1.3, 40), (2.5, 0.5, 10)] {
            let f = build_fock(&GaussianPointer::new(sigma, hbar)?, n_max)?;
            let px = f.vacuum_expectation(&(f.p() * f.x()));
            let xp = f.vacuum_expectation(&(f.x() * f.p()));
            worst = worst.max((px - c(0.0, -hbar / 2.0)).norm()).max((xp - c(0.0, hbar / 2.0)).norm());
        }
        Ok(worst)
    });
    let worst = worst?;
    Ok(outcome(
        worst <= 1e-12 && dt < Duration::from_millis(100),
        format!("max |<PX>+i hbar/2|, |<XP>-i hbar/2| = {worst:.2e} (tol 1e-12), {:.3}s (limit 0.1s)", dt.as_secs_f64()),
    ))
}

fn three_box_extraction() -> Result<Outcome, weaklab::Error> {
    let expected = [("P1", 1.0), ("P2", 1.0), ("P3", -1.0)];
    let (results, dt) = timed(|| -> Result<Vec<(f64, f64)>, weaklab::Error> {
        let s = build_three_box();
        expected
            .iter()
            .map(|&(label, want)| {
                let cpl = SingleCoupling::new(s.observable(label)?.clone(), 0.01, pointer(1.0))?;
                let rec = run_single_exact(&s.i, &s.f, &cpl, &EngineOptions::default())?;
                let w = extract_single(&rec, &cpl)?.value;
                Ok((w.re, (w - c(want, 0.0)).norm()))
            })
            .collect()
    });
    let results = results?;
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let p3 = results[2].0;
    Ok(outcome(
        worst <= 1e-3 && p3 < 0.0 && dt < Duration::from_secs(1),
        format!(
            "extracted ({:.6}, {:.6}, {:.6}), max err {worst:.2e} (tol 1e-3), {:.3}s (limit 1s)",
            results[0].0,
            results[1].0,
            p3,
            dt.as_secs_f64()
        ),
    ))
}

fn imaginary_part() -> Result<Outcome, weaklab::Error> {
    let s = build_imaginary();
    let a = s.observable("sigma_z")?.clone();
    let k = 0.01;
    let run = |sigma: f64| -> Result<(MeasurementRecord, C64), weaklab::Error> {
        let cpl = SingleCoupling::new(a.clone(), k * sigma, pointer(sigma))?;
        let rec = run_single_exact(&s.i, &s.f, &cpl, &EngineOptions::default())?;
        let w = extract_single(&rec, &cpl)?.value;
        Ok((rec, w))
    };
    let (_, w) = run(1.0)?;
    let err = (w - c(0.0, 1.0)).norm();

    // Fixed K, pointer width doubled.
    let fixed = |sigma: f64| -> Result<f64, weaklab::Error> {
        let cpl = SingleCoupling::new(a.clone(), k, pointer(sigma))?;
        Ok(run_single_exact(&s.i, &s.f, &cpl, &EngineOptions::default())?.px_mean)
    };
    let ratio = fixed(2.0)? / fixed(1.0)?;
    Ok(outcome(
        err <= 1e-3 && (ratio - 0.25).abs() <= 0.05 * 0.25,
        format!(
            "extracted {:.6}{:+.6}i, err {err:.2e} (tol 1e-3); px_mean(2s)/px_mean(s) = {ratio:.6} (0.25 +- 5%)",
            w.re, w.im
        ),
    ))
}

fn hardy_joint() -> Result<Outcome, weaklab::Error> {
    let expected = [("N_Oe", "N_Op", 0.0), ("N_Oe", "N_NOp", 1.0), ("N_NOe", "N_Op", 1.0), ("N_NOe", "N_NOp", -1.0)];
    let (results, dt) = timed(|| -> Result<Vec<(f64, f64)>, weaklab::Error> {
        expected
            .iter()
            .map(|&(a, b, want)| {
                let cfg = RunConfig::joint(build_hardy(), a, b, EngineTag::Exact, 0.01, 1.0);
                let r = execute(&cfg)?;
                Ok((r.extracted.value.re, (r.extracted.value - c(want, 0.0)).norm()))
            })
            .collect()
    });
    let results = results?;
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let values: Vec<String> = results.iter().map(|r| format!("{:.6}", r.0)).collect();
    Ok(outcome(
        worst <= 1e-3 && dt < Duration::from_secs(5),
        format!("extracted ({}), max err {worst:.2e} (tol 1e-3), {:.3}s (limit 5s)", values.join(", "), dt.as_secs_f64()),
    ))
}

fn noncommuting_scenario() -> Result<Scenario, weaklab::Error> {
    let mut s = build_three_box();
    s.name = "noncommuting".into();
    s.i = QuantumState::from_real(&[1.0, 1.0])?;
    s.f = QuantumState::from_real(&[0.3f64.cos(), 0.3f64.sin()])?;
    s.observables.clear();
    s.expected.clear();
    s.observables.insert("sigma_x".into(), Observable::pauli_x());
    s.observables.insert("sigma_z".into(), Observable::pauli_z());
    Ok(s)
}

fn noncommuting_joint() -> Result<Outcome, weaklab::Error> {
    let s = noncommuting_scenario()?;
    let (r, dt) = timed(|| execute(&RunConfig::joint(s.clone(), "sigma_x", "sigma_z", EngineTag::Fock, 0.01, 1.0)));
    let r = r?;
    let direct = direct_joint_weak_value(&Observable::pauli_x(), &Observable::pauli_z(), &s.i, &s.f)?;
    let err = (r.extracted.value - direct).norm();
    Ok(outcome(
        err <= 1e-3 && dt < Duration::from_secs(30),
        format!(
            "extracted {:.3e}{:+.3e}i vs direct {:.3e}{:+.3e}i, err {err:.2e} (tol 1e-3), {:.3}s (limit 30s)",
            r.extracted.value.re,
            r.extracted.value.im,
            direct.re,
            direct.im,
            dt.as_secs_f64()
        ),
    ))
}

/// `½ Kx Ky Re[⟨i|f⟩⟨f|(AB+BA)/2|i⟩ + ⟨i|A|f⟩⟨f|B|i⟩]` from raw amplitudes.
fn closed_form_oracle(i: &[C64], f: &[C64], a: &[Vec<C64>], b: &[Vec<C64>], kx: f64, ky: f64) -> f64 {
    let n = i.len();
    let apply = |m: &[Vec<C64>], v: &[C64]| -> Vec<C64> {
        (0..n).map(|r| (0..n).map(|k| m[r][k] * v[k]).sum()).collect()
    };
    let braket = |u: &[C64], v: &[C64]| -> C64 { u.iter().zip(v).map(|(x, y)| x.conj() * y).sum() };
    let ab_i = apply(a, &apply(b, i));
    let ba_i = apply(b, &apply(a, i));
    let sym: Vec<C64> = ab_i.iter().zip(&ba_i).map(|(x, y)| (x + y) * 0.5).collect();
    let t1 = braket(i, f) * braket(f, &sym);
    let t2 = braket(i, &apply(a, f)) * braket(f, &apply(b, i));
    0.5 * kx * ky * (t1 + t2).re
}

fn rows(o: &Observable) -> Vec<Vec<C64>> {
    let m = o.matrix();
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| m[(r, k)]).collect()).collect()
}

fn perturbative_structure() -> Result<Outcome, weaklab::Error> {
    let hardy = build_hardy();
    let spin = preset("spin")?;
    let nc = noncommuting_scenario()?;
    let cases: [(&Scenario, &str, &str, f64, f64, f64); 4] = [
        (&hardy, "N_NOe", "N_NOp", 0.2, 0.2, 1.0),
        (&hardy, "N_Oe", "N_NOp", 0.1, 0.3, 0.8),
        (&spin, "sigma_x", "sigma_z", 0.25, 0.15, 1.0),
        (&nc, "sigma_x", "sigma_z", 0.3, 0.3, 1.3),
    ];
    let (mut odd, mut second): (f64, f64) = (0.0, 0.0);
    for (s, a, b, kx, ky, sigma) in cases {
        let (oa, ob) = (s.observable(a)?, s.observable(b)?);
        let cpl = JointCoupling::new(oa.clone(), ob.clone(), kx, ky, pointer(sigma), pointer(sigma))?;
        let terms = heisenberg_moment(&s.i, &s.f, &cpl, MomentTag::Oxy, 4)?;
        odd = odd.max(terms[1].abs()).max(terms[3].abs());
        let i: Vec<C64> = s.i.amplitudes().iter().copied().collect();
        let f: Vec<C64> = s.f.amplitudes().iter().copied().collect();
        let oracle = closed_form_oracle(&i, &f, &rows(oa), &rows(ob), kx, ky);
        second = second.max((terms[2] - oracle).abs());
    }
    Ok(outcome(
        odd <= 1e-12 && second <= 1e-12,
        format!("max |order 1|, |order 3| = {odd:.2e}; max |order 2 - closed form| = {second:.2e} (tol 1e-12)"),
    ))
}

fn sweep_slope(cfg: RunConfig) -> Result<f64, weaklab::Error> {
    let grid = sweep_grid(1e-3, 1e-1, 20, true)?;
    let reports = execute_sweep(&cfg, &grid)?;
    let pts: Vec<(f64, f64)> = grid.iter().zip(&reports).map(|(&k, r)| (k, r.abs_err())).collect();
    Ok(fitted_error_order(&pts))
}

fn convergence_order() -> Result<Outcome, weaklab::Error> {
    let p3 = sweep_slope(RunConfig::single(build_three_box(), "P3", EngineTag::Exact, 1e-3, 1.0))?;
    let nono = sweep_slope(RunConfig::joint(build_hardy(), "N_NOe", "N_NOp", EngineTag::Exact, 1e-3, 1.0))?;
    Ok(outcome(
        p3 >= 1.7 && nono >= 1.7,
        format!("fitted slopes: three-box P3 {p3:.4}, Hardy NO*NO {nono:.4} (min 1.7)"),
    ))
}

fn engine_agreement() -> Result<Outcome, weaklab::Error> {
    let opts = EngineOptions::default();
    let k = 0.05;
    let diff = |x: &MeasurementRecord, y: &MeasurementRecord| {
        x.moments().iter().zip(y.moments()).fold((x.ps_prob - y.ps_prob).abs(), |acc, (a, b)| acc.max((a - b).abs()))
    };
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for name in PRESET_NAMES {
        let s = preset(name)?;
        for obs in s.observables.values() {
            let cpl = SingleCoupling::new(obs.clone(), k, pointer(1.0))?;
            let exact = run_single_exact(&s.i, &s.f, &cpl, &opts)?;
            let fock = run_fock(&s.i, &s.f, &Coupling::Single(cpl), 40, &opts)?;
            worst = worst.max(diff(&exact, &fock));
            runs += 1;
        }
    }
    let hardy = build_hardy();
    for (a, b) in [("N_Oe", "N_Op"), ("N_Oe", "N_NOp"), ("N_NOe", "N_Op"), ("N_NOe", "N_NOp")] {
        let cpl = JointCoupling::new(hardy.observable(a)?.clone(), hardy.observable(b)?.clone(), k, k, pointer(1.0), pointer(1.0))?;
        let exact = run_joint_exact(&hardy.i, &hardy.f, &cpl, &opts)?;
        let fock = run_fock(&hardy.i, &hardy.f, &Coupling::Joint(cpl), 40, &opts)?;
        worst = worst.max(diff(&exact, &fock));
        runs += 1;
    }
    Ok(outcome(worst <= 1e-6, format!("{runs} runs, max moment difference {worst:.2e} (tol 1e-6)")))
}

fn validate_command() -> Result<Outcome, weaklab::Error> {
    let out = Command::new(env!("CARGO_BIN_EXE_weaklab"))
        .arg("validate")
        .output()
        .map_err(|e| weaklab::Error::Io(e.to_string()))?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary = stdout.lines().last().unwrap_or("").to_string();
    let covers = ["pointer.", "series.", "engines.exact_vs_fock", "presets.self_consistency"]
        .iter()
        .all(|p| stdout.contains(p));
    Ok(outcome(
        out.status.code() == Some(0) && covers,
        format!("exit {:?}, {summary}", out.status.code()),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("pointer integral identities", pointer_integrals),
        ("single extraction, three-box", three_box_extraction),
        ("imaginary part", imaginary_part),
        ("joint extraction, Hardy", hardy_joint),
        ("joint extraction, noncommuting", noncommuting_joint),
        ("perturbative structure", perturbative_structure),
        ("convergence order", convergence_order),
        ("engine cross-validation", engine_agreement),
        ("validate command", validate_command),
    ];
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failures += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, n + 1, o.detail);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
