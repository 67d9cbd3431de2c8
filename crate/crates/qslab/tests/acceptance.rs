//! Acceptance suite: runs every named check at full size and prints one
//! pass/fail line per criterion. Tolerances are pinned inside the verify
//! module; this test only groups and gates.

use qslab::verify::{all_passed, run_suite, CheckKind, Suite, VerifyConfig};

/// Pinned so that every Monte Carlo check is replayable byte for byte.
const ACCEPTANCE_SEED: u64 = 20010522;

const CRITERIA: [(&str, &str); 8] = [
    ("core.", "exact-law oracle: mass, mean, variance exact for n <= 40"),
    ("bounds.", "rate-certificate constants at table size 100"),
    ("toll.", "toll-error bound for n <= 1000 and quadrature identities"),
    ("metrics.", "coupling metrics: d_2 values, order, triangles, moment bound"),
    ("ks.", "KS ladder, integer-mass bound, lattice lower bounds"),
    ("mc.", "Monte Carlo: exhaustive mode, DKW band, martingale increments"),
    ("density.", "density window at n = 10^4: nonnegative, unit mass, bounded"),
    ("mgf.", "MGF monotonicity, domination, tail and rate bounds"),
];

#[test]
fn acceptance() {
    let cfg = VerifyConfig {
        seed: Some(ACCEPTANCE_SEED),
        ..VerifyConfig::default()
    };
    let results = run_suite(Suite::All, &cfg).expect("suite must run to completion");

    let mut failures = Vec::new();
    for (prefix, title) in CRITERIA {
        let group: Vec<_> = results.iter().filter(|r| r.id.starts_with(prefix)).collect();
        assert!(!group.is_empty(), "criterion group '{prefix}' ran no checks");
        let passed = group
            .iter()
            .filter(|r| r.kind == CheckKind::Assert)
            .all(|r| r.passed);
        println!(
            "criterion {:<9} [{}] {} ({} checks)",
            prefix.trim_end_matches('.'),
            if passed { "pass" } else { "FAIL" },
            title,
            group.len()
        );
        if !passed {
            for r in group.iter().filter(|r| !r.passed) {
                failures.push(format!("{}: {} ({})", r.id, r.observed, r.requirement));
            }
        }
    }

    // module invariants outside the eight groups (fixed point, diagnostics)
    let extras: Vec<_> = results
        .iter()
        .filter(|r| !CRITERIA.iter().any(|(p, _)| r.id.starts_with(p)))
        .collect();
    let extras_passed = extras
        .iter()
        .filter(|r| r.kind == CheckKind::Assert)
        .all(|r| r.passed);
    println!(
        "module    extras    [{}] fixed-point residuals and diagnostics ({} checks)",
        if extras_passed { "pass" } else { "FAIL" },
        extras.len()
    );
    for r in extras.iter().filter(|r| !r.passed) {
        failures.push(format!("{}: {} ({})", r.id, r.observed, r.requirement));
    }

    for r in results.iter().filter(|r| r.kind == CheckKind::Diagnostic) {
        println!("diagnostic {} -> {}", r.id, r.observed);
    }

    assert!(
        failures.is_empty(),
        "acceptance failures:\n{}",
        failures.join("\n")
    );
    assert!(all_passed(&results));
}
