//! Werner-noise robustness: noisy network assembly, the visibility scaling
//! law, and critical visibilities by closed formula and by bisection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{classical_bound_formula, quantum_optimum_formula};
use crate::error::{Error, Result};
use crate::functionals::{functional_value, NetworkAssembly};
use crate::scenario::{ScenarioKind, ScenarioSpec};

/// Paper-optimal assembly with per-source Werner visibilities.
pub fn noisy_assembly(spec: &ScenarioSpec, visibilities: &[f64]) -> Result<NetworkAssembly> {
    NetworkAssembly::optimal_assembly(spec)?.with_visibilities(visibilities)
}

/// Functional value of the noisy assembly at the given visibilities.
pub fn noisy_value(spec: &ScenarioSpec, visibilities: &[f64]) -> Result<f64> {
    Ok(functional_value(&noisy_assembly(spec, visibilities)?)?.total)
}

/// Max deviation of the evaluated value from
/// (Π_k v_k^pairs_k)^(1/r) · value(1) over seeded random visibility tuples.
pub fn scaling_check(spec: &ScenarioSpec, samples: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let base = NetworkAssembly::optimal_assembly(spec)?;
    let pure_value = functional_value(&base)?.total;
    let edges = spec.edges();
    let root = spec.root() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let vis: Vec<f64> = edges.iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let value = functional_value(&base.clone().with_visibilities(&vis)?)?.total;
        let factor: f64 = edges
            .iter()
            .zip(&vis)
            .map(|(e, v)| v.powi(e.pairs as i32))
            .product();
        let predicted = factor.powf(1.0 / root) * pure_value;
        worst = worst.max((value - predicted).abs());
    }
    Ok(worst)
}

/// Uniform critical visibility from the closed-form threshold inequalities:
/// v^E with E the total pair count equals the right-hand side below.
pub fn critical_visibility_formula(spec: &ScenarioSpec) -> f64 {
    let n = spec.n() as f64;
    let ni = spec.n() as i32;
    let pi = std::f64::consts::PI;
    let central = {
        let k = (spec.n() - 1) / 2;
        let mut acc: f64 = 1.0;
        for i in 0..k {
            acc = acc * (spec.n() - 1 - i) as f64 / (i + 1) as f64;
        }
        acc
    };
    let rhs = match spec.kind() {
        ScenarioKind::StandardBilocal => 0.5,
        ScenarioKind::BilocalI => {
            2f64.powi(1 - ni) * n.sqrt() * (1.0 - 1.0 / n) * central / (pi / (2.0 * n)).cos()
        }
        ScenarioKind::BilocalII => {
            n.sqrt() * 2f64.powi(1 - ni) * (1.0 - 2f64.powi(1 - ni)) * central
                / (pi / 2f64.powi(ni)).cos()
        }
        ScenarioKind::TrilocalI => {
            let floor_term = (1u128 << (2 * spec.n() - 3)) as f64;
            n.sqrt()
                * 2f64.powi(2 * (1 - ni))
                * (1.0 - 2f64.powi(1 - ni))
                * central
                * floor_term
                * (pi / 2f64.powi(ni)).tan()
        }
        ScenarioKind::TrilocalII => {
            let floor_term = (spec.n() * spec.n()).div_ceil(2) as f64;
            2f64.powi(1 - ni) / n.sqrt() * (1.0 - 1.0 / n) * central * floor_term
                * (pi / (2.0 * n)).tan()
        }
    };
    rhs.powf(1.0 / spec.total_pairs() as f64)
}

#[derive(Clone, Debug, Serialize)]
pub enum CriticalVisibility {
    Crossing(f64),
    /// The pure value never exceeds the classical bound.
    NoViolation,
}

impl CriticalVisibility {
    pub fn value(&self) -> Option<f64> {
        match self {
            CriticalVisibility::Crossing(v) => Some(*v),
            CriticalVisibility::NoViolation => None,
        }
    }
}

/// Uniform visibility where the functional value crosses the classical bound,
/// found by bisection (the value is monotone in v by the scaling law).
pub fn critical_visibility_empirical(spec: &ScenarioSpec, tol: f64) -> Result<CriticalVisibility> {
    if tol < 1e-10 {
        return Err(Error::Domain("bisection tolerance below 1e-10".into()));
    }
    let bound = classical_bound_formula(spec);
    let base = NetworkAssembly::optimal_assembly(spec)?;
    let value_at = |v: f64| -> Result<f64> {
        let vis = vec![v; spec.edges().len()];
        Ok(functional_value(&base.clone().with_visibilities(&vis)?)?.total)
    };
    if value_at(1.0)? <= bound {
        return Ok(CriticalVisibility::NoViolation);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if value_at(mid)? > bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalVisibility::Crossing(0.5 * (lo + hi)))
}

#[derive(Clone, Debug, Serialize)]
pub struct NoisePoint {
    pub v: f64,
    pub value: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseCurve {
    pub scenario: String,
    pub n: usize,
    pub points: Vec<NoisePoint>,
    pub v_critical_empirical: Option<f64>,
    pub v_critical_formula: f64,
    /// Per-source pair counts: the exponents entering the scaling law.
    pub pair_exponents: Vec<usize>,
}

/// Uniform-visibility sweep plus bisection refinement.
pub fn noise_curve(spec: &ScenarioSpec, samples: usize, refine_tol: f64) -> Result<NoiseCurve> {
    if samples < 2 {
        return Err(Error::Domain("noise curve needs at least 2 samples".into()));
    }
    let bound = classical_bound_formula(spec);
    let base = NetworkAssembly::optimal_assembly(spec)?;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let v = i as f64 / (samples - 1) as f64;
        let vis = vec![v; spec.edges().len()];
        let value = functional_value(&base.clone().with_visibilities(&vis)?)?.total;
        points.push(NoisePoint {
            v,
            value,
            bound,
            violated: value > bound,
        });
    }
    let critical = critical_visibility_empirical(spec, refine_tol)?;
    Ok(NoiseCurve {
        scenario: spec.kind().name().to_string(),
        n: spec.n(),
        points,
        v_critical_empirical: critical.value(),
        v_critical_formula: critical_visibility_formula(spec),
        pair_exponents: spec.edges().iter().map(|e| e.pairs).collect(),
    })
}

impl NoiseCurve {
    /// CSV export: fixed header, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("v,value,bound,violated\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_sig(p.v),
                format_sig(p.value),
                format_sig(p.bound),
                p.violated
            ));
        }
        out
    }
}

fn format_sig(x: f64) -> String {
    format!("{}", crate::sig12(x))
}

/// v_c predicted by the already-validated machinery: the bound/optimum ratio
/// raised to r/E.
pub fn critical_visibility_ratio(spec: &ScenarioSpec) -> f64 {
    let ratio = classical_bound_formula(spec) / quantum_optimum_formula(spec);
    ratio.powf(spec.root() as f64 / spec.total_pairs() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ScenarioKind, n: usize) -> ScenarioSpec {
        ScenarioSpec::new(kind, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn full_visibility_reproduces_pure_optimum() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::TrilocalII, 3),
        ] {
            let sc = spec(kind, n);
            let vis = vec![1.0; sc.edges().len()];
            let noisy = noisy_value(&sc, &vis).unwrap();
            let pure = functional_value(&NetworkAssembly::optimal_assembly(&sc).unwrap())
                .unwrap()
                .total;
            assert!(close(noisy, pure, 1e-10), "{kind:?}");
        }
    }

    #[test]
    fn bilocal_i_scaling_law_example() {
        let value = noisy_value(&spec(ScenarioKind::BilocalI, 3), &[0.9, 0.9]).unwrap();
        assert!(close(value, 5.4, 1e-10), "value = {value}");
    }

    #[test]
    fn zero_visibility_gives_zero() {
        let value = noisy_value(&spec(ScenarioKind::BilocalI, 3), &[0.0, 0.0]).unwrap();
        assert!(close(value, 0.0, 1e-12));
    }

    #[test]
    fn trilocal_scaling_law_example() {
        let value = noisy_value(&spec(ScenarioKind::TrilocalII, 3), &[0.8, 0.9, 0.7]).unwrap();
        let expected = (0.8f64 * 0.9 * 0.7).powf(1.0 / 3.0) * 6.0;
        assert!(close(value, expected, 1e-10));
    }

    #[test]
    fn scaling_check_tight_for_single_pair_scenarios() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::BilocalII, 3),
            (ScenarioKind::TrilocalI, 3),
            (ScenarioKind::TrilocalII, 3),
        ] {
            let dev = scaling_check(&spec(kind, n), 20, 42).unwrap();
            assert!(dev < 1e-9, "{kind:?} n={n}: deviation {dev}");
        }
    }

    #[test]
    fn critical_visibility_formulas() {
        assert!(close(
            critical_visibility_formula(&spec(ScenarioKind::StandardBilocal, 2)),
            std::f64::consts::FRAC_1_SQRT_2,
            1e-12
        ));
        assert!(close(
            critical_visibility_formula(&spec(ScenarioKind::BilocalI, 3)),
            (2f64 / 3.0).sqrt(),
            1e-12
        ));
        assert!(close(
            critical_visibility_formula(&spec(ScenarioKind::TrilocalII, 3)),
            (5f64 / 9.0).powf(1.0 / 3.0),
            1e-12
        ));
        // the threshold inequalities agree with the bound/optimum ratio
        for kind in ScenarioKind::all() {
            let n = if kind == ScenarioKind::StandardBilocal { 2 } else { 3 };
            let sc = spec(kind, n);
            assert!(
                close(
                    critical_visibility_formula(&sc),
                    critical_visibility_ratio(&sc),
                    1e-12
                ),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn empirical_thresholds_match_formula() {
        for kind in ScenarioKind::all() {
            let n = if kind == ScenarioKind::StandardBilocal { 2 } else { 3 };
            let sc = spec(kind, n);
            let empirical = critical_visibility_empirical(&sc, 1e-6)
                .unwrap()
                .value()
                .unwrap();
            let formula = critical_visibility_formula(&sc);
            assert!(
                close(empirical, formula, 2e-6),
                "{kind:?}: empirical {empirical} vs formula {formula}"
            );
            assert!(empirical > 0.5 && empirical < 1.0);
        }
    }

    #[test]
    fn trilocal_i_threshold_contradicts_quoted_value() {
        let sc = spec(ScenarioKind::TrilocalI, 3);
        let empirical = critical_visibility_empirical(&sc, 1e-6)
            .unwrap()
            .value()
            .unwrap();
        assert!((empirical - 0.92).abs() > 0.05, "empirical = {empirical}");
        assert!(close(empirical, 0.813359, 1e-4), "empirical = {empirical}");
    }

    #[test]
    fn noise_curve_shape_and_monotonicity() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::TrilocalII, 3),
        ] {
            let curve = noise_curve(&spec(kind, n), 101, 1e-6).unwrap();
            assert_eq!(curve.points.len(), 101);
            for pair in curve.points.windows(2) {
                assert!(pair[1].value >= pair[0].value - 1e-10, "{kind:?}");
            }
            let flips: usize = curve
                .points
                .windows(2)
                .filter(|p| p[0].violated != p[1].violated)
                .count();
            assert_eq!(flips, 1, "{kind:?}: violated flag must flip exactly once");
        }
        let curve = noise_curve(&spec(ScenarioKind::StandardBilocal, 2), 101, 1e-6).unwrap();
        assert!(close(
            curve.v_critical_empirical.unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            2e-6
        ));
        let csv = curve.to_csv();
        assert!(csv.starts_with("v,value,bound,violated\n"));
        assert_eq!(csv.lines().count(), 102);
        assert!(matches!(
            noise_curve(&spec(ScenarioKind::StandardBilocal, 2), 1, 1e-6),
            Err(Error::Domain(_))
        ));
    }
}
