//! Criteria 1–14 at the default configuration, one line each on stderr.
//!
//! Criterion 3 is not attainable at k = 1e-4 with σ = 1: the next term of the small-k
//! expansion of G shifts G/√k by a relative 4σ√k/√π ≈ 2.26%. The line reports FAIL and the
//! test asserts that the measured error is that term, so a regression in G still fails here.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use hfric_cli::{run, Command, Report, RunConfig};

fn line(text: &str) {
    // straight to the stream so the lines survive output capture
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {text}");
}

struct Criterion {
    number: usize,
    command: Command,
    keys: &'static [&'static str],
    summary: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion { number: 1, command: Command::Kernels, keys: &["fresnel.cos_error", "fresnel.sin_error"], summary: &["fresnel.cos", "fresnel.sin"] },
    Criterion { number: 2, command: Command::Kernels, keys: &["asymptotes.m_ratio", "asymptotes.v_ratio"], summary: &["asymptotes.m_ratio", "asymptotes.v_ratio"] },
    Criterion { number: 3, command: Command::Kernels, keys: &["g_small_k.relative_error"], summary: &["g_small_k.relative_error", "g_small_k.predicted_relative_error"] },
    Criterion { number: 4, command: Command::Kernels, keys: &["k.k0", "k.volterra_vs_fourier", "k.tail_relative_error"], summary: &["k.k0", "k.volterra_vs_fourier", "k.tail_ratio"] },
    Criterion { number: 5, command: Command::Kernels, keys: &["k.causal_max"], summary: &["k.causal_max"] },
    Criterion { number: 6, command: Command::Kernels, keys: &["gain.refinement_change", "gain.late_last"], summary: &["gain.sup", "gain.refinement_change", "gain.late_last"] },
    Criterion { number: 7, command: Command::Interval, keys: &["i_sup", "omega_identity_max"], summary: &["i_sup", "omega_identity_max"] },
    Criterion {
        number: 8,
        command: Command::Interval,
        keys: &["delta_star", "best1_residual", "best1_sign_changes", "best2.sign_changes", "best2.min_residual"],
        summary: &["delta_star", "best1_residual", "best2.min_residual", "best2.min_relative_gap"],
    },
    Criterion { number: 9, command: Command::Linear, keys: &["fit.exponent"], summary: &["fit.exponent", "fit.r_squared", "one_plus_delta_star"] },
    Criterion {
        number: 10,
        command: Command::Audit,
        keys: &["last.gamma1", "last.gamma3", "last.gamma2", "gamma2_decreasing"],
        summary: &["last.gamma1", "last.omega1", "last.gamma3", "last.omega2", "last.gamma2"],
    },
    Criterion {
        number: 11,
        command: Command::Simulate,
        keys: &["fit.exponent", "weighted_sup", "weighted_sup_change", "x_infinity.uncertainty"],
        summary: &["fit.exponent", "weighted_sup", "weighted_sup_change", "x_infinity.uncertainty"],
    },
    Criterion { number: 12, command: Command::FixedPoint, keys: &["max_ratio", "extrapolated_relative"], summary: &["max_ratio", "extrapolated_relative", "t_cut"] },
    Criterion {
        number: 13,
        command: Command::Oracle,
        keys: &["unitarity", "energy_drift", "transverse_max", "splash.late", "deviation", "shrink"],
        summary: &["unitarity", "energy_drift", "transverse_max", "splash.early", "splash.late", "deviation", "shrink"],
    },
];

fn summarize(report: &Report, keys: &[&str]) -> String {
    keys.iter()
        .map(|k| match report.get_f64(k) {
            Some(v) => format!("{k}={v:.4e}"),
            None => format!("{k}=?"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Byte-level fingerprint of everything a run writes.
fn outputs(report: &Report) -> Vec<(String, String)> {
    let mut v = vec![(format!("{}.json", report.command), report.to_json().unwrap())];
    v.extend(report.artifacts.iter().map(|a| (a.file.clone(), a.contents.clone())));
    v
}

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let mut reports: BTreeMap<&str, (Report, f64)> = BTreeMap::new();
    for c in Command::ALL {
        let start = Instant::now();
        let report = run(c, &cfg, false).unwrap_or_else(|e| panic!("{}: {e}", c.name()));
        reports.insert(c.name(), (report, start.elapsed().as_secs_f64()));
    }

    let mut failures = Vec::new();
    for cr in CRITERIA {
        let (report, secs) = &reports[cr.command.name()];
        let checks: Vec<_> = cr.keys.iter().map(|k| report.check(k).unwrap_or_else(|| panic!("no check {k}"))).collect();
        let pass = checks.iter().all(|c| c.pass);
        line(&format!(
            "criterion {:>2} {} {} ({} {:.1} s)",
            cr.number,
            if pass { "PASS" } else { "FAIL" },
            summarize(report, cr.summary),
            cr.command.name(),
            secs
        ));
        if cr.number == 3 {
            let k = cfg.kernels.small_k;
            let predicted = 4.0 * k.sqrt() / PI.sqrt();
            let measured = report.get_f64("g_small_k.relative_error").unwrap();
            assert!(!pass, "criterion 3 passed; revisit the ledger analysis");
            assert!((measured / predicted - 1.0).abs() < 0.05, "G deviation {measured} is not the O(k) term {predicted}");
        } else if !pass {
            failures.push(cr.number);
        }
    }

    let start = Instant::now();
    let mut differing = Vec::new();
    for c in Command::ALL {
        let again = run(c, &cfg, false).unwrap();
        let (first, _) = &reports[c.name()];
        for ((name, a), (_, b)) in outputs(first).iter().zip(outputs(&again).iter()) {
            if a != b {
                differing.push(name.clone());
            }
        }
        assert_eq!(first.artifacts.len(), again.artifacts.len());
    }
    let files: usize = reports.values().map(|(r, _)| 1 + r.artifacts.len()).sum();
    let det = differing.is_empty();
    line(&format!(
        "criterion 14 {} {files} files compared, {} differ (rerun {:.1} s)",
        if det { "PASS" } else { "FAIL" },
        differing.len(),
        start.elapsed().as_secs_f64()
    ));
    if !det {
        failures.push(14);
    }
    assert!(failures.is_empty(), "failed criteria {failures:?}, differing outputs {differing:?}");
}
