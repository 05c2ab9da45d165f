//! Built-in invariant checks run by `weaklab validate`.

use std::fmt;

use crate::engines::{
    heisenberg_moment, run_fock, run_joint_exact, run_single_exact, second_order_xy_closed_form, Coupling,
    EngineOptions, JointCoupling, MeasurementRecord, MomentTag, SingleCoupling,
};
use crate::error::Result;
use crate::pointer::{build_fock, gaussian_overlap, moment_p, moment_x, GaussianPointer};
use crate::qcore::{c, commutator_norm, C64};
use crate::scenarios::{preset, Scenario, PRESET_NAMES};
use crate::weakvalues::{direct_joint_weak_value, direct_weak_value};

pub const POINTER_INTEGRAL_TOL: f64 = 1e-12;
pub const QUADRATURE_TOL: f64 = 1e-8;
pub const PARITY_TOL: f64 = 1e-12;
pub const CROSS_ENGINE_TOL: f64 = 1e-6;
pub const PRESET_TOL: f64 = 1e-12;
pub const CROSS_ENGINE_K_OVER_SIGMA: f64 = 0.05;
pub const CROSS_ENGINE_N_MAX: usize = 40;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(name: impl Into<String>, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured <= tolerance, measured, tolerance, detail: detail.into() }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: false, measured: f64::NAN, tolerance: f64::NAN, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {:<40} measured={:.3e} tol={:.0e}", self.name, self.measured, self.tolerance)?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

fn from_result(name: &str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(name, format!("error: {e}")))
}

fn fmt_c(z: C64) -> String {
    format!("{:+.6e}{:+.6e}i", z.re, z.im)
}

pub fn pointer_integrals() -> Vec<Check> {
    let mut out = Vec::new();
    for (sigma, hbar, n_max) in [(1.0, 1.0, 2), (0.7, 1.3, 40)] {
        let name = format!("pointer.vacuum_integrals[s={sigma},hbar={hbar},n={n_max}]");
        out.push(from_result(&name, (|| {
            let f = build_fock(&GaussianPointer::new(sigma, hbar)?, n_max)?;
            let px = f.vacuum_expectation(&(f.p() * f.x()));
            let xp = f.vacuum_expectation(&(f.x() * f.p()));
            let xx = f.vacuum_expectation(&(f.x() * f.x()));
            let err = (px - c(0.0, -hbar / 2.0))
                .norm()
                .max((xp - c(0.0, hbar / 2.0)).norm())
                .max((xx.re - sigma * sigma).abs());
            Ok(Check::within(
                &name,
                err,
                POINTER_INTEGRAL_TOL,
                format!("<PX>={} (-i hbar/2) <XP>={} (+i hbar/2)", fmt_c(px), fmt_c(xp)),
            ))
        })()));
    }
    out.push(from_result("pointer.closed_form_vs_quadrature", (|| {
        let p = GaussianPointer::new(0.9, 1.0)?;
        let s = p.sigma();
        let mut worst: f64 = 0.0;
        for (a, b) in [(0.0, 0.0), (1.0, -1.0), (2.5, 0.3), (-3.0, 1.7), (0.1, 0.3)] {
            let (d1, d2) = (a * s, b * s);
            let (ov, mx, mp) = midpoint_integrals(&p, d1, d2);
            worst = worst
                .max((ov - gaussian_overlap(d1, d2, &p)).abs())
                .max((mx - moment_x(d1, d2, &p)).abs())
                .max((mp - moment_p(d1, d2, &p).im).abs());
        }
        Ok(Check::within("pointer.closed_form_vs_quadrature", worst, QUADRATURE_TOL, "midpoint rule, +-10 sigma, 20001 cells"))
    })()));
    out
}

/// Overlap, position and (imaginary part of) momentum integrals by the
/// midpoint rule, with a central-difference derivative.
fn midpoint_integrals(p: &GaussianPointer, d1: f64, d2: f64) -> (f64, f64, f64) {
    let n = 20001;
    let half = 10.0 * p.sigma();
    let h = 2.0 * half / n as f64;
    let dh = 1e-5;
    let (mut ov, mut mx, mut mp) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let x = -half + (k as f64 + 0.5) * h;
        let g1 = p.wavefunction(d1, x);
        let g2 = p.wavefunction(d2, x);
        let dg2 = (p.wavefunction(d2, x + dh) - p.wavefunction(d2, x - dh)) / (2.0 * dh);
        ov += g1 * g2;
        mx += g1 * x * g2;
        mp += -p.hbar() * g1 * dg2;
    }
    (ov * h, mx * h, mp * h)
}

fn joint_for(s: &Scenario, a: &str, b: &str, k: f64, sigma: f64) -> Result<JointCoupling> {
    let p = GaussianPointer::with_sigma(sigma)?;
    JointCoupling::new(s.observable(a)?.clone(), s.observable(b)?.clone(), k, k, p, p)
}

pub fn series_parity() -> Vec<Check> {
    let cases: [(&str, &str, &str, f64, f64); 3] = [
        ("hardy", "N_NOe", "N_NOp", 0.2, 1.0),
        ("hardy", "N_Oe", "N_Op", 0.3, 0.8),
        ("spin", "sigma_x", "sigma_z", 0.25, 1.0),
    ];
    let mut out = Vec::new();
    for (scenario, a, b, k, sigma) in cases {
        let tag = format!("{scenario}:{a}*{b}");
        let name = format!("series.parity[{tag}]");
        out.push(from_result(&name, (|| {
            let s = preset(scenario)?;
            let cpl = joint_for(&s, a, b, k, sigma)?;
            let terms = heisenberg_moment(&s.i, &s.f, &cpl, MomentTag::Oxy, 4)?;
            let odd = terms[1].abs().max(terms[3].abs());
            Ok(Check::within(
                &name,
                odd,
                PARITY_TOL,
                format!("order1={:.3e} order3={:.3e}", terms[1], terms[3]),
            ))
        })()));
        let name = format!("series.second_order_closed_form[{tag}]");
        out.push(from_result(&name, (|| {
            let s = preset(scenario)?;
            let cpl = joint_for(&s, a, b, k, sigma)?;
            let terms = heisenberg_moment(&s.i, &s.f, &cpl, MomentTag::Oxy, 2)?;
            let closed = second_order_xy_closed_form(&s.i, &s.f, &cpl)?;
            Ok(Check::within(
                &name,
                (terms[2] - closed).abs(),
                PARITY_TOL,
                format!("series={:.6e} closed={:.6e}", terms[2], closed),
            ))
        })()));
    }
    out
}

fn max_record_diff(x: &MeasurementRecord, y: &MeasurementRecord) -> f64 {
    let moments = x.moments().iter().zip(y.moments()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    moments.max((x.ps_prob - y.ps_prob).abs())
}

/// Every single observable and every commuting pair in the presets.
pub fn cross_engine_cases() -> Vec<(String, Option<String>, String)> {
    let mut cases = Vec::new();
    for name in PRESET_NAMES {
        let Ok(s) = preset(name) else { continue };
        for label in s.observables.keys() {
            cases.push((name.to_string(), None, label.clone()));
        }
    }
    for (a, b) in [("N_Oe", "N_Op"), ("N_Oe", "N_NOp"), ("N_NOe", "N_Op"), ("N_NOe", "N_NOp")] {
        cases.push(("hardy".to_string(), Some(a.to_string()), b.to_string()));
    }
    cases
}

pub fn engine_cross_validation() -> Vec<Check> {
    let sigma = 1.0;
    let k = CROSS_ENGINE_K_OVER_SIGMA * sigma;
    let opts = EngineOptions::default();
    cross_engine_cases()
        .into_iter()
        .map(|(scenario, a, b)| {
            let label = match &a {
                Some(a) => format!("{scenario}:{a}*{b}"),
                None => format!("{scenario}:{b}"),
            };
            let name = format!("engines.exact_vs_fock[{label}]");
            from_result(&name, (|| {
                let s = preset(&scenario)?;
                let (exact, fock) = match &a {
                    Some(a) => {
                        let cpl = joint_for(&s, a, &b, k, sigma)?;
                        let exact = run_joint_exact(&s.i, &s.f, &cpl, &opts)?;
                        let fock = run_fock(&s.i, &s.f, &Coupling::Joint(cpl), CROSS_ENGINE_N_MAX, &opts)?;
                        (exact, fock)
                    }
                    None => {
                        let cpl = SingleCoupling::new(s.observable(&b)?.clone(), k, GaussianPointer::with_sigma(sigma)?)?;
                        let exact = run_single_exact(&s.i, &s.f, &cpl, &opts)?;
                        let fock = run_fock(&s.i, &s.f, &Coupling::Single(cpl), CROSS_ENGINE_N_MAX, &opts)?;
                        (exact, fock)
                    }
                };
                Ok(Check::within(&name, max_record_diff(&exact, &fock), CROSS_ENGINE_TOL, "K/sigma=0.05, n_max=40"))
            })())
        })
        .collect()
}

pub fn preset_self_consistency() -> Vec<Check> {
    PRESET_NAMES
        .iter()
        .map(|&name| {
            let check = format!("presets.self_consistency[{name}]");
            from_result(&check, (|| {
                let s = preset(name)?;
                let mut worst: f64 = 0.0;
                for (label, e) in &s.expected {
                    let direct = direct_weak_value(s.observable(label)?, &s.i, &s.f)?;
                    worst = worst.max((direct - e.value).norm());
                }
                // Joint Hardy entries must also agree with the two-factor evaluator.
                if name == "hardy" {
                    for (a, b) in [("N_Oe", "N_Op"), ("N_Oe", "N_NOp"), ("N_NOe", "N_Op"), ("N_NOe", "N_NOp")] {
                        let (oa, ob) = (s.observable(a)?, s.observable(b)?);
                        if commutator_norm(oa, ob)? > 0.0 {
                            worst = f64::INFINITY;
                        }
                        let joint = direct_joint_weak_value(oa, ob, &s.i, &s.f)?;
                        let label = format!("{a}_{}", b);
                        worst = worst.max((joint - s.expected[&label].value).norm());
                    }
                }
                Ok(Check::within(&check, worst, PRESET_TOL, format!("{} expected values", s.expected.len())))
            })())
        })
        .collect()
}

pub fn run_all() -> Vec<Check> {
    let mut checks = pointer_integrals();
    checks.extend(series_parity());
    checks.extend(engine_cross_validation());
    checks.extend(preset_self_consistency());
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_all();
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(checks.len() >= 20);
    }
}
