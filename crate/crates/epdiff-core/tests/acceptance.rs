//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them on success).
//! Every tolerance is pinned inside the verify module; this file only maps
//! criteria to suites and formats the verdict.

use epdiff_core::verify::{self, VerifySummary};

const SEED: u64 = 42;

fn report(criterion: &str, label: &str, summaries: &[VerifySummary]) {
    let mut worst: f64 = 0.0;
    let mut failing: Vec<String> = Vec::new();
    let mut total = 0usize;
    for s in summaries {
        for c in &s.checks {
            total += 1;
            let rel = if c.tolerance > 0.0 {
                c.residual / c.tolerance
            } else {
                c.residual
            };
            if rel.is_finite() {
                worst = worst.max(rel);
            }
            if !c.pass {
                failing.push(format!("{} (residual {:.3e}, tol {:.1e})", c.name, c.residual, c.tolerance));
            }
        }
    }
    if failing.is_empty() {
        println!("acceptance {criterion} ({label}): PASS [{total} checks, worst residual/tol {worst:.2e}]");
    } else {
        println!("acceptance {criterion} ({label}): FAIL {failing:?}");
    }
    assert!(failing.is_empty(), "{criterion} failed: {failing:?}");
}

#[test]
fn criterion_1_algebraic_identities() {
    let s = verify::suite_commutators(SEED).expect("suite runs");
    report("criterion 1", "Leibniz/Jacobi/Rec identities and symmetry", &[s]);
}

#[test]
fn criterion_2_splitting_oracle() {
    let s = verify::suite_splitting(SEED).expect("suite runs");
    report("criterion 2", "Type I/II splitting reproduces the recurrence", &[s]);
}

#[test]
fn criterion_3_appendix_formulas() {
    let s = verify::suite_appendix(SEED).expect("suite runs");
    report("criterion 3", "subset-sum symbol formulas", &[s]);
}

#[test]
fn criterion_4_boundedness_probe() {
    let s = verify::suite_probe(SEED).expect("suite runs");
    report("criterion 4", "commutator ratio flat across N", &[s]);
}

#[test]
fn criterion_5_conjugation_smoothness() {
    let s = verify::suite_conjugation(SEED).expect("suite runs");
    report("criterion 5", "Gateaux derivatives match commutator formulas", &[s]);
}

#[test]
fn criterion_6_geodesics() {
    let s = verify::suite_geodesics(SEED).expect("suite runs");
    report("criterion 6", "steady states, conservation, convergence, E-L gap", &[s]);
}

#[test]
fn criterion_7_metric_structure() {
    let s = verify::suite_metric(SEED).expect("suite runs");
    report("criterion 7", "metric symmetry and right-invariance", &[s]);
}

#[test]
fn criterion_8_shooting() {
    let s = verify::suite_shooting(SEED).expect("suite runs");
    report("criterion 8", "translation and self-generated target recovery", &[s]);
}

#[test]
fn criterion_9_long_run_proxy() {
    let s = verify::suite_longrun(SEED).expect("suite runs");
    report("criterion 9", "bounded H^s norm over T = 10 (observation, not proof)", &[s]);
}
