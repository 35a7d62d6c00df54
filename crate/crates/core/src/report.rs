//! Full reproduction-and-audit run: every headline number of the five
//! explicit scenarios plus the general-n matrix/formula agreement, collected
//! into one pass/fail table with a discrepancy ledger.

use serde::Serialize;

use crate::bounds::{
    classical_bound_formula, deterministic_max, mixed_bound, quantum_optimum_formula,
};
use crate::error::Result;
use crate::functionals::{functional_value, joint_probability_tensor, raw_correlator, NetworkAssembly};
use crate::noise::{critical_visibility_empirical, critical_visibility_formula, scaling_check};
use crate::scenario::{ScenarioKind, ScenarioSpec};
use crate::sig12;
use crate::sos::{constraint_table, gamma_expectation, gamma_perturbation_audit, residuals};

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub description: String,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub discrepancies: Vec<String>,
    pub passed: bool,
}

struct Criterion {
    id: String,
    description: String,
    checks: Vec<CheckLine>,
}

impl Criterion {
    fn new(id: &str, description: &str) -> Self {
        Criterion {
            id: id.to_string(),
            description: description.to_string(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, expected: f64, actual: f64, tolerance: f64) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            expected: sig12(expected),
            actual: sig12(actual),
            tolerance,
            pass: (expected - actual).abs() <= tolerance,
        });
    }

    /// A check that passes when `actual` exceeds `threshold`.
    fn check_exceeds(&mut self, name: &str, threshold: f64, actual: f64) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            expected: sig12(threshold),
            actual: sig12(actual),
            tolerance: 0.0,
            pass: actual > threshold,
        });
    }

    fn finish(self) -> CriterionResult {
        let passed = self.checks.iter().all(|c| c.pass);
        CriterionResult {
            id: self.id,
            description: self.description,
            checks: self.checks,
            passed,
        }
    }
}

fn spec(kind: ScenarioKind, n: usize) -> ScenarioSpec {
    ScenarioSpec::new(kind, n).expect("valid scenario")
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn explicit_scenarios() -> [(ScenarioKind, usize); 5] {
    [
        (ScenarioKind::StandardBilocal, 2),
        (ScenarioKind::BilocalI, 3),
        (ScenarioKind::BilocalII, 3),
        (ScenarioKind::TrilocalI, 3),
        (ScenarioKind::TrilocalII, 3),
    ]
}

/// Run the whole audit. Deterministic for a fixed seed.
pub fn acceptance_report(seed: u64) -> Result<AcceptanceReport> {
    let mut criteria = Vec::new();

    // 1. standard bilocal value and bounds
    {
        let mut c = Criterion::new("1", "standard bilocal: value 2√2, bound 2 three ways");
        let sc = spec(ScenarioKind::StandardBilocal, 2);
        let value = functional_value(&NetworkAssembly::optimal_assembly(&sc)?)?.total;
        c.check("functional value", 2.0 * SQRT2, value, 1e-9);
        c.check("formula bound", 2.0, classical_bound_formula(&sc), 1e-9);
        c.check(
            "deterministic max",
            2.0,
            deterministic_max(&sc)?.value,
            1e-9,
        );
        c.check("mixed bound", 2.0, mixed_bound(&sc, 1e-10)?.value, 1e-9);
        criteria.push(c.finish());
    }

    // 2. four-input/three-input bilocal
    {
        let mut c = Criterion::new("2", "bilocal-I n=3: value 6, bounds 2√6 and 4");
        let sc = spec(ScenarioKind::BilocalI, 3);
        let value = functional_value(&NetworkAssembly::optimal_assembly(&sc)?)?.total;
        c.check("functional value", 6.0, value, 1e-9);
        c.check(
            "formula bound",
            2.0 * 6f64.sqrt(),
            classical_bound_formula(&sc),
            1e-12,
        );
        c.check(
            "mixed bound",
            2.0 * 6f64.sqrt(),
            mixed_bound(&sc, 1e-8)?.value,
            1e-6,
        );
        c.check("deterministic max", 4.0, deterministic_max(&sc)?.value, 0.0);
        criteria.push(c.finish());
    }

    // 3. four-input bilocal with four-setting central party
    {
        let mut c = Criterion::new("3", "bilocal-II n=3: value 4[3(2+√2)]^(1/4), bound 6");
        let sc = spec(ScenarioKind::BilocalII, 3);
        let expected = 4.0 * (3.0 * (2.0 + SQRT2)).powf(0.25);
        let value = functional_value(&NetworkAssembly::optimal_assembly(&sc)?)?.total;
        c.check("functional value", expected, value, 1e-6);
        c.check("formula bound", 6.0, classical_bound_formula(&sc), 1e-12);
        c.check("mixed bound", 6.0, mixed_bound(&sc, 1e-8)?.value, 1e-6);
        criteria.push(c.finish());
    }

    // 4. trilocal-I with the reference-value audit
    {
        let mut c = Criterion::new(
            "4",
            "trilocal-I n=3: value 4[2√3(1+√2)]^(1/3), quoted 7.23 flagged, bound 2·6^(2/3)",
        );
        let sc = spec(ScenarioKind::TrilocalI, 3);
        let closed_form = 4.0 * (2.0 * 3f64.sqrt() * (1.0 + SQRT2)).powf(1.0 / 3.0);
        let value = functional_value(&NetworkAssembly::optimal_assembly(&sc)?)?.total;
        c.check("functional value", closed_form, value, 1e-9);
        c.check_exceeds("distance from quoted 7.23", 0.5, (value - 7.23).abs());
        c.check(
            "formula bound",
            2.0 * 6f64.powf(2.0 / 3.0),
            classical_bound_formula(&sc),
            1e-12,
        );
        c.check(
            "mixed bound",
            2.0 * 6f64.powf(2.0 / 3.0),
            mixed_bound(&sc, 1e-8)?.value,
            1e-6,
        );
        criteria.push(c.finish());
    }

    // 5. three-input trilocal
    {
        let mut c = Criterion::new("5", "trilocal-II n=3: value 6, bound 2·15^(1/3)");
        let sc = spec(ScenarioKind::TrilocalII, 3);
        let value = functional_value(&NetworkAssembly::optimal_assembly(&sc)?)?.total;
        c.check("functional value", 6.0, value, 1e-9);
        c.check(
            "formula bound",
            2.0 * 15f64.powf(1.0 / 3.0),
            classical_bound_formula(&sc),
            1e-12,
        );
        let det = 12f64.powf(1.0 / 3.0) + 4f64.powf(1.0 / 3.0);
        c.check("deterministic max", det, deterministic_max(&sc)?.value, 1e-9);
        criteria.push(c.finish());
    }

    // 6. general-n matrix/formula agreement
    {
        let mut c = Criterion::new("6", "general n: generated assemblies match closed forms");
        for n in 2..=6 {
            let sc = spec(ScenarioKind::BilocalI, n);
            let value = functional_value(&NetworkAssembly::generated(&sc)?)?.total;
            c.check(
                &format!("bilocal-I n={n}"),
                quantum_optimum_formula(&sc),
                value,
                1e-8,
            );
        }
        for n in 2..=4 {
            let sc = spec(ScenarioKind::BilocalII, n);
            let value = functional_value(&NetworkAssembly::generated(&sc)?)?.total;
            c.check(
                &format!("bilocal-II n={n}"),
                quantum_optimum_formula(&sc),
                value,
                1e-8,
            );
        }
        criteria.push(c.finish());
    }

    // 7. certificates: residuals, gamma, perturbation audit, constraint tables
    {
        let mut c = Criterion::new("7", "certificates hold at every explicit optimum");
        for (kind, n) in explicit_scenarios() {
            let sc = spec(kind, n);
            let assembly = NetworkAssembly::optimal_assembly_product_bob(&sc)?;
            let max_residual = residuals(&assembly)?.into_iter().fold(0.0, f64::max);
            c.check(&format!("{kind} max residual"), 0.0, max_residual, 1e-9);
            let gamma = gamma_expectation(&assembly)?;
            c.check(&format!("{kind} gamma"), 0.0, gamma, 1e-9);
            let table = constraint_table(&assembly.edges, &sc)?;
            c.check(
                &format!("{kind} constraint table"),
                0.0,
                if table.pass { 0.0 } else { table.max_deviation },
                0.0,
            );
        }
        let audit = gamma_perturbation_audit(
            &spec(ScenarioKind::StandardBilocal, 2),
            1000,
            0.5,
            seed,
        )?;
        c.check(
            "min gamma over 1000 perturbations",
            audit.min_gamma.max(0.0),
            audit.min_gamma,
            1e-9,
        );
        criteria.push(c.finish());
    }

    // 8. noise thresholds and the scaling law
    {
        let mut c = Criterion::new("8", "critical visibilities and scaling law");
        let expectations = [
            (ScenarioKind::StandardBilocal, 2, std::f64::consts::FRAC_1_SQRT_2),
            (ScenarioKind::BilocalI, 3, (2f64 / 3.0).sqrt()),
            (
                ScenarioKind::BilocalII,
                3,
                6.0 / (4.0 * (3.0 * (2.0 + SQRT2)).powf(0.25)),
            ),
            (
                ScenarioKind::TrilocalI,
                3,
                2.0 * 6f64.powf(2.0 / 3.0)
                    / (4.0 * (2.0 * 3f64.sqrt() * (1.0 + SQRT2)).powf(1.0 / 3.0)),
            ),
            (
                ScenarioKind::TrilocalII,
                3,
                (5f64 / 9.0).powf(1.0 / 3.0),
            ),
        ];
        for (kind, n, expected) in expectations {
            let sc = spec(kind, n);
            let empirical = critical_visibility_empirical(&sc, 1e-6)?
                .value()
                .expect("all explicit scenarios violate at v=1");
            c.check(&format!("{kind} empirical v_c"), expected, empirical, 2e-6);
            c.check(
                &format!("{kind} formula v_c"),
                expected,
                critical_visibility_formula(&sc),
                1e-9,
            );
        }
        let sc = spec(ScenarioKind::TrilocalI, 3);
        let empirical = critical_visibility_empirical(&sc, 1e-6)?.value().unwrap();
        c.check_exceeds(
            "trilocal-I distance from quoted 0.92",
            0.05,
            (empirical - 0.92).abs(),
        );
        for (kind, n) in explicit_scenarios() {
            let dev = scaling_check(&spec(kind, n), 20, seed)?;
            c.check(&format!("{kind} scaling deviation"), 0.0, dev, 1e-9);
        }
        criteria.push(c.finish());
    }

    // 9. probability normalization and correlator reconstruction
    {
        let mut c = Criterion::new("9", "probability tensors normalize and match correlators");
        for (kind, n) in explicit_scenarios() {
            let sc = spec(kind, n);
            let assembly = NetworkAssembly::optimal_assembly(&sc)?;
            let parties = sc.parties_in_setting_order();
            let mut worst_norm = 0.0f64;
            let mut worst_corr = 0.0f64;
            let counts: Vec<usize> = parties.iter().map(|p| sc.settings(*p)).collect();
            let mut tuple = vec![0usize; parties.len()];
            loop {
                let table = joint_probability_tensor(&assembly, &tuple)?;
                let sum: f64 = table.probabilities.iter().sum();
                worst_norm = worst_norm.max((sum - 1.0).abs());
                let direct = raw_correlator(&assembly, &tuple)?;
                worst_corr = worst_corr.max((table.correlator - direct).abs());
                let mut pos = tuple.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    tuple[pos] += 1;
                    if tuple[pos] < counts[pos] {
                        break;
                    }
                    tuple[pos] = 0;
                }
                if tuple.iter().all(|&t| t == 0) {
                    break;
                }
            }
            c.check(&format!("{kind} normalization"), 0.0, worst_norm, 1e-12);
            c.check(&format!("{kind} correlator"), 0.0, worst_corr, 1e-12);
        }
        criteria.push(c.finish());
    }

    // 10. determinism of seeded runs
    {
        let mut c = Criterion::new("10", "seeded runs are bit-reproducible");
        let sc = spec(ScenarioKind::StandardBilocal, 2);
        let a = gamma_perturbation_audit(&sc, 50, 0.5, seed)?;
        let b = gamma_perturbation_audit(&sc, 50, 0.5, seed)?;
        c.check(
            "gamma audit rerun",
            a.min_gamma,
            b.min_gamma,
            0.0,
        );
        let m1 = mixed_bound(&sc, 1e-9)?.value;
        let m2 = mixed_bound(&sc, 1e-9)?.value;
        c.check("mixed bound rerun", m1, m2, 0.0);
        criteria.push(c.finish());
    }

    let discrepancies = discrepancy_ledger();
    let passed = criteria.iter().all(|c: &CriterionResult| c.passed);
    Ok(AcceptanceReport {
        seed,
        criteria,
        discrepancies,
        passed,
    })
}

/// Known inconsistencies between quoted reference numbers and the values the
/// validated machinery produces.
pub fn discrepancy_ledger() -> Vec<String> {
    vec![
        "trilocal-I optimum: the quoted 4(2√3+√6)^(1/3) ≈ 7.23 does not match the \
         evaluated optimum; the closed form 4[2√3(1+√2)]^(1/3) ≈ 8.1192 does."
            .to_string(),
        "trilocal-I critical visibility: the quoted ≈ 0.92 is consistent only with \
         the 7.23 value; the validated machinery gives ≈ 0.8134 by both formula and \
         bisection."
            .to_string(),
        "bilocal-II critical visibility: the quoted closed form (3/4)√(3−3/√2) ≈ 0.703 \
         equals v_c² rather than v_c; the threshold is its square root ≈ 0.8385."
            .to_string(),
        "trilocal-II third-party combination rows: the row set (+++),(+−+),(+−−) \
         printed alongside the inequality contradicts the optimality constraint \
         D1 − D2 + D3 = 0 (it would annihilate the optimal state); the consistent \
         rows are (+++),(++−),(+−−)."
            .to_string(),
        "trilocal-I linear identity: the printed D4 − √2·D1 − D2 = 0 fails at the \
         explicit observables; the derivation gives D2 − D4 − √2·D1 = 0, which holds."
            .to_string(),
    ]
}

/// One line per criterion, for terminal output.
pub fn format_table(report: &AcceptanceReport) -> String {
    let mut out = String::new();
    for c in &report.criteria {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("[{status}] criterion {:>2}: {}\n", c.id, c.description));
        for check in c.checks.iter().filter(|c| !c.pass) {
            out.push_str(&format!(
                "       FAILED {}: expected {} got {} (tol {})\n",
                check.name, check.expected, check.actual, check.tolerance
            ));
        }
    }
    out.push_str("discrepancy ledger:\n");
    for d in &report.discrepancies {
        out.push_str(&format!("  - {d}\n"));
    }
    out.push_str(if report.passed {
        "result: ALL CRITERIA PASS\n"
    } else {
        "result: FAILURES PRESENT\n"
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_serialization_is_deterministic() {
        let a = serde_json::to_string(&acceptance_report(42).unwrap()).unwrap();
        let b = serde_json::to_string(&acceptance_report(42).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
