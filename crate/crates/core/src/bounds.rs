//! Classical (multi-source) bounds by closed formula, exhaustive
//! deterministic-strategy enumeration, and concave maximization over
//! independent per-party mixtures; plus the closed-form optimal quantum
//! values for every scenario family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{Party, ScenarioKind, ScenarioSpec};
use crate::schemes::{coefficient_scheme, SignMatrix};

/// Enumeration caps: per-party settings and total strategy tuples.
pub const MAX_ENUM_SETTINGS: usize = 24;
pub const MAX_ENUM_TOTAL: u128 = 1 << 26;

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Central binomial factor C(n−1, ⌊(n−1)/2⌋).
fn central_binomial(n: usize) -> f64 {
    binomial((n - 1) as u64, ((n - 1) / 2) as u64) as f64
}

/// Classical bound of the functional over source-independent models.
pub fn classical_bound_formula(spec: &ScenarioSpec) -> f64 {
    let n = spec.n() as f64;
    let ni = spec.n();
    match spec.kind() {
        ScenarioKind::StandardBilocal => 2.0,
        ScenarioKind::BilocalI => (2.0 * n * (n - 1.0) * central_binomial(ni)).sqrt(),
        ScenarioKind::BilocalII => {
            let settings = (1u128 << (ni - 1)) as f64;
            (2.0 * n * (settings - 1.0) * central_binomial(ni)).sqrt()
        }
        ScenarioKind::TrilocalI => {
            let settings = (1u128 << (ni - 1)) as f64;
            // ⌊2^(2n−3) + 1/2⌋ is exactly 2^(2n−3) for every n ≥ 2
            let floor_term = (1u128 << (2 * ni - 3)) as f64;
            (2.0 * n * (settings - 1.0) * central_binomial(ni) * floor_term).powf(1.0 / 3.0)
        }
        ScenarioKind::TrilocalII => {
            let floor_term = (ni * ni).div_ceil(2) as f64;
            (2.0 * n * (n - 1.0) * central_binomial(ni) * floor_term).powf(1.0 / 3.0)
        }
    }
}

/// Closed-form optimal quantum value of each scenario family.
pub fn quantum_optimum_formula(spec: &ScenarioSpec) -> f64 {
    let n = spec.n() as f64;
    let ni = spec.n() as i32;
    let pi = std::f64::consts::PI;
    match spec.kind() {
        ScenarioKind::StandardBilocal => 2.0 * 2f64.sqrt(),
        ScenarioKind::BilocalI => (2f64.powi(ni) * n.powf(1.5) * (pi / (2.0 * n)).cos()).sqrt(),
        ScenarioKind::BilocalII => {
            (2f64.powi(2 * ni - 1) * n.sqrt() * (pi / 2f64.powi(ni)).cos()).sqrt()
        }
        ScenarioKind::TrilocalI => {
            let cot = 1.0 / (pi / 2f64.powi(ni)).tan();
            2f64.powi(ni - 1) * (2.0 * n.sqrt() * cot).powf(1.0 / 3.0)
        }
        ScenarioKind::TrilocalII => {
            let cot = 1.0 / (pi / (2.0 * n)).tan();
            (2f64.powi(ni) * n.powf(2.5) * cot).powf(1.0 / 3.0)
        }
    }
}

/// Optimal quantum values of the two single-source ingredients the general-n
/// argument multiplies: the 2^(n−1)-input functional and the n-settings chain.
pub fn ingredient_optima(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let pow = (1u128 << (n - 1)) as f64;
    let rac = pow * nf.sqrt();
    let chain = 2.0 * nf * (std::f64::consts::PI / (2.0 * nf)).cos();
    (rac, chain)
}

/// The absolute combination values one ±1 assignment induces, term by term.
pub type Profile = Vec<i64>;

fn profile_of(matrix: &SignMatrix, strategy_bits: usize) -> Profile {
    let m = matrix.width();
    matrix
        .rows()
        .iter()
        .map(|row| {
            let mut acc = 0i64;
            for (k, &sign) in row.iter().enumerate() {
                if sign != 0 {
                    let s = if (strategy_bits >> (m - 1 - k)) & 1 == 0 {
                        1i64
                    } else {
                        -1i64
                    };
                    acc += sign as i64 * s;
                }
            }
            acc.abs()
        })
        .collect()
}

fn strategy_signs(m: usize, bits: usize) -> Vec<i8> {
    (0..m)
        .map(|k| if (bits >> (m - 1 - k)) & 1 == 0 { 1 } else { -1 })
        .collect()
}

/// Deduplicated profile set of one party, by exhaustive ±1 enumeration.
pub fn deterministic_profiles(spec: &ScenarioSpec, party: Party) -> Result<Vec<Profile>> {
    let scheme = coefficient_scheme(spec)?;
    let matrix = scheme.party(party);
    let m = matrix.width();
    if m > MAX_ENUM_SETTINGS {
        return Err(Error::Capacity {
            context: "deterministic_profiles",
            requested: m as u128,
            limit: MAX_ENUM_SETTINGS as u128,
        });
    }
    let mut set = std::collections::BTreeSet::new();
    for bits in 0..(1usize << m) {
        set.insert(profile_of(matrix, bits));
    }
    Ok(set.into_iter().collect())
}

/// Largest row-sum any deterministic strategy reaches for one party.
pub fn profile_sum_max(spec: &ScenarioSpec, party: Party) -> Result<i64> {
    Ok(deterministic_profiles(spec, party)?
        .iter()
        .map(|p| p.iter().sum())
        .max()
        .unwrap_or(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct DeterministicMax {
    pub value: f64,
    /// Lexicographically smallest maximizing assignment per edge party.
    pub strategies: Vec<(Party, Vec<i8>)>,
}

/// Max of the functional over pure strategy tuples.
pub fn deterministic_max(spec: &ScenarioSpec) -> Result<DeterministicMax> {
    let scheme = coefficient_scheme(spec)?;
    let parties = spec.edge_parties();
    let widths: Vec<usize> = parties.iter().map(|p| scheme.party(*p).width()).collect();
    let total: u128 = widths.iter().map(|&m| 1u128 << m).product();
    if total > MAX_ENUM_TOTAL || widths.iter().any(|&m| m > MAX_ENUM_SETTINGS) {
        return Err(Error::Capacity {
            context: "deterministic_max",
            requested: total,
            limit: MAX_ENUM_TOTAL,
        });
    }
    let per_party_profiles: Vec<Vec<Profile>> = parties
        .iter()
        .zip(&widths)
        .map(|(p, &m)| {
            (0..(1usize << m))
                .map(|bits| profile_of(scheme.party(*p), bits))
                .collect()
        })
        .collect();

    let terms = spec.terms();
    let inv_root = 1.0 / spec.root() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_bits: Vec<usize> = vec![0; parties.len()];
    let mut counter = vec![0usize; parties.len()];
    loop {
        let mut value = 0.0;
        for j in 0..terms {
            let mut product = 1i64;
            for (k, profiles) in per_party_profiles.iter().enumerate() {
                product *= profiles[counter[k]][j];
            }
            if product != 0 {
                value += (product as f64).powf(inv_root);
            }
        }
        if value > best + 1e-12 {
            best = value;
            best_bits.copy_from_slice(&counter);
        }
        // mixed-radix increment; the last party steps fastest, so tuples
        // enumerate in lexicographic order
        let mut pos = parties.len();
        let wrapped = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            counter[pos] += 1;
            if counter[pos] < (1usize << widths[pos]) {
                break false;
            }
            counter[pos] = 0;
        };
        if wrapped {
            let strategies = parties
                .iter()
                .zip(&widths)
                .zip(&best_bits)
                .map(|((p, &m), &bits)| (*p, strategy_signs(m, bits)))
                .collect();
            return Ok(DeterministicMax {
                value: best,
                strategies,
            });
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedBound {
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Per party: the supporting profiles and their mixture weights.
    pub weights: Vec<(Party, Vec<(Profile, f64)>)>,
}

/// Maximize Σ_j (Π_k u_kj)^(1/r) over independent per-party mixtures of
/// deterministic profiles, by conditional-gradient iteration with away steps
/// and exact vertex oracles. Stops when the duality gap drops below `tol`.
pub fn mixed_bound(spec: &ScenarioSpec, tol: f64) -> Result<MixedBound> {
    let parties = spec.edge_parties();
    let vertex_sets: Vec<Vec<Vec<f64>>> = parties
        .iter()
        .map(|p| {
            deterministic_profiles(spec, *p).map(|profiles| {
                profiles
                    .iter()
                    .map(|prof| prof.iter().map(|&x| x as f64).collect())
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let terms = spec.terms();
    let root = spec.root() as f64;
    let inv_root = 1.0 / root;
    let eps = 1e-12;

    let objective = |points: &[Vec<f64>]| -> f64 {
        (0..terms)
            .map(|j| {
                let product: f64 = points.iter().map(|u| u[j]).product();
                if product <= 0.0 {
                    0.0
                } else {
                    product.powf(inv_root)
                }
            })
            .sum()
    };

    let n_parties = parties.len();
    let mut weights: Vec<Vec<f64>> = vertex_sets
        .iter()
        .map(|vs| vec![1.0 / vs.len() as f64; vs.len()])
        .collect();
    let point = |weights: &[Vec<f64>]| -> Vec<Vec<f64>> {
        weights
            .iter()
            .zip(&vertex_sets)
            .map(|(w, vs)| {
                let mut u = vec![0.0; terms];
                for (wi, v) in w.iter().zip(vs) {
                    for j in 0..terms {
                        u[j] += wi * v[j];
                    }
                }
                u
            })
            .collect()
    };

    let max_iterations = 2_000_000usize;
    let mut points = point(&weights);
    for iteration in 0..max_iterations {
        // smoothed supergradient per party
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(n_parties);
        for k in 0..n_parties {
            let mut g = vec![0.0; terms];
            for (j, slot) in g.iter_mut().enumerate() {
                let smoothed: f64 = points.iter().map(|u| u[j] + eps).product();
                *slot = inv_root * smoothed.powf(inv_root) / (points[k][j] + eps);
            }
            grads.push(g);
        }

        let dot = |g: &[f64], v: &[f64]| -> f64 { g.iter().zip(v).map(|(a, b)| a * b).sum() };

        let mut gap = 0.0;
        let mut best_move: Option<(usize, usize, bool, f64, f64)> = None; // party, vertex, away, derivative, gamma_max
        for k in 0..n_parties {
            let here = dot(&grads[k], &points[k]);
            let (mut fw_idx, mut fw_score) = (0usize, f64::NEG_INFINITY);
            for (i, v) in vertex_sets[k].iter().enumerate() {
                let score = dot(&grads[k], v);
                if score > fw_score {
                    fw_score = score;
                    fw_idx = i;
                }
            }
            gap += fw_score - here;
            let fw_derivative = fw_score - here;
            if best_move
                .map(|(_, _, _, d, _)| fw_derivative > d)
                .unwrap_or(true)
            {
                best_move = Some((k, fw_idx, false, fw_derivative, 1.0));
            }
            // away step from the worst active vertex
            let mut away: Option<(usize, f64)> = None;
            for (i, v) in vertex_sets[k].iter().enumerate() {
                if weights[k][i] > 1e-14 {
                    let score = dot(&grads[k], v);
                    if away.map(|(_, s)| score < s).unwrap_or(true) {
                        away = Some((i, score));
                    }
                }
            }
            if let Some((a_idx, a_score)) = away {
                let w = weights[k][a_idx];
                if w < 1.0 - 1e-14 {
                    let derivative = here - a_score;
                    let gamma_max = w / (1.0 - w);
                    if best_move
                        .map(|(_, _, _, d, _)| derivative > d)
                        .unwrap_or(true)
                    {
                        best_move = Some((k, a_idx, true, derivative, gamma_max));
                    }
                }
            }
        }

        if gap < tol {
            let value = objective(&points);
            let out_weights = parties
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let support: Vec<(Profile, f64)> = vertex_sets[k]
                        .iter()
                        .zip(&weights[k])
                        .filter(|(_, &w)| w > 1e-9)
                        .map(|(v, &w)| (v.iter().map(|&x| x.round() as i64).collect(), w))
                        .collect();
                    (*p, support)
                })
                .collect();
            return Ok(MixedBound {
                value,
                gap,
                iterations: iteration,
                weights: out_weights,
            });
        }

        let (k, idx, away, derivative, gamma_max) = best_move.expect("some move exists");
        if derivative <= 0.0 {
            // no ascent direction left; report the certified gap
            return Err(Error::NonConvergence { gap, iterations: iteration });
        }

        // exact line search on the concave 1D section
        let base = points[k].clone();
        let direction: Vec<f64> = if away {
            (0..terms).map(|j| base[j] - vertex_sets[k][idx][j]).collect()
        } else {
            (0..terms).map(|j| vertex_sets[k][idx][j] - base[j]).collect()
        };
        let eval = |gamma: f64, points: &mut [Vec<f64>]| -> f64 {
            for j in 0..terms {
                points[k][j] = (base[j] + gamma * direction[j]).max(0.0);
            }
            objective(points)
        };
        let (mut lo, mut hi) = (0.0f64, gamma_max);
        for _ in 0..90 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let f1 = eval(m1, &mut points);
            let f2 = eval(m2, &mut points);
            if f1 < f2 {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let gamma = 0.5 * (lo + hi);
        eval(gamma, &mut points);
        if away {
            for (i, w) in weights[k].iter_mut().enumerate() {
                *w *= 1.0 + gamma;
                if i == idx {
                    *w -= gamma;
                }
                *w = w.max(0.0);
            }
        } else {
            for (i, w) in weights[k].iter_mut().enumerate() {
                *w *= 1.0 - gamma;
                if i == idx {
                    *w += gamma;
                }
            }
        }
        // renormalize against drift
        let sum: f64 = weights[k].iter().sum();
        for w in &mut weights[k] {
            *w /= sum;
        }
        points = point(&weights);
    }
    Err(Error::NonConvergence {
        gap: f64::NAN,
        iterations: max_iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub scenario: String,
    pub n: usize,
    pub formula: f64,
    pub deterministic: Option<DeterministicMax>,
    pub mixed: Option<MixedBound>,
    pub profile_sum_max: Vec<(Party, i64)>,
    /// Set when the mixture optimum falls short of the formula by > 1e-6.
    pub gap_flag: bool,
}

/// Three-way bound computation. Enumeration methods are skipped (None) when
/// the scenario has no matrix-level combination rows.
pub fn bound_report(spec: &ScenarioSpec, tol: f64) -> Result<BoundReport> {
    let formula = classical_bound_formula(spec);
    let (deterministic, mixed, sums) = match coefficient_scheme(spec) {
        Ok(_) => {
            let det = deterministic_max(spec)?;
            let mix = mixed_bound(spec, tol)?;
            let sums = spec
                .edge_parties()
                .iter()
                .map(|p| Ok((*p, profile_sum_max(spec, *p)?)))
                .collect::<Result<Vec<_>>>()?;
            (Some(det), Some(mix), sums)
        }
        Err(_) => (None, None, Vec::new()),
    };
    let gap_flag = mixed
        .as_ref()
        .map(|m| formula - m.value > 1e-6)
        .unwrap_or(false);
    Ok(BoundReport {
        scenario: spec.kind().name().to_string(),
        n: spec.n(),
        formula,
        deterministic,
        mixed,
        profile_sum_max: sums,
        gap_flag,
    })
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
    fn formula_bounds_explicit_values() {
        assert_eq!(
            classical_bound_formula(&spec(ScenarioKind::StandardBilocal, 2)),
            2.0
        );
        assert!(close(
            classical_bound_formula(&spec(ScenarioKind::BilocalI, 3)),
            2.0 * 6f64.sqrt(),
            1e-14
        ));
        assert!(close(
            classical_bound_formula(&spec(ScenarioKind::BilocalII, 3)),
            6.0,
            1e-12
        ));
        assert!(close(
            classical_bound_formula(&spec(ScenarioKind::TrilocalI, 3)),
            2.0 * 6f64.powf(2.0 / 3.0),
            1e-12
        ));
        assert!(close(
            classical_bound_formula(&spec(ScenarioKind::TrilocalII, 3)),
            2.0 * 15f64.powf(1.0 / 3.0),
            1e-12
        ));
    }

    #[test]
    fn quantum_optimum_family_consistency() {
        assert!(close(
            quantum_optimum_formula(&spec(ScenarioKind::BilocalI, 2)),
            2.0 * 2f64.sqrt(),
            1e-12
        ));
        assert!(close(
            quantum_optimum_formula(&spec(ScenarioKind::BilocalI, 3)),
            6.0,
            1e-12
        ));
        assert!(close(
            quantum_optimum_formula(&spec(ScenarioKind::BilocalII, 3)),
            4.0 * (3.0 * (2.0 + 2f64.sqrt())).powf(0.25),
            1e-12
        ));
        assert!(close(
            quantum_optimum_formula(&spec(ScenarioKind::TrilocalI, 3)),
            4.0 * (2.0 * 3f64.sqrt() * (1.0 + 2f64.sqrt())).powf(1.0 / 3.0),
            1e-12
        ));
        assert!(close(
            quantum_optimum_formula(&spec(ScenarioKind::TrilocalII, 3)),
            6.0,
            1e-12
        ));
    }

    #[test]
    fn violation_holds_for_all_supported_n() {
        for kind in ScenarioKind::all() {
            let range = if kind == ScenarioKind::StandardBilocal {
                2..=2
            } else {
                2..=12
            };
            for n in range {
                let sc = spec(kind, n);
                let q = quantum_optimum_formula(&sc);
                let c = classical_bound_formula(&sc);
                assert!(q > c, "{kind:?} n={n}: quantum {q} <= classical {c}");
            }
        }
    }

    #[test]
    fn profiles_match_hand_enumeration() {
        let sc = spec(ScenarioKind::BilocalI, 3);
        let alice = deterministic_profiles(&sc, Party::Alice).unwrap();
        let expected: Vec<Profile> = vec![
            vec![0, 0, 0],
            vec![0, 0, 4],
            vec![0, 4, 0],
            vec![2, 2, 2],
            vec![4, 0, 0],
        ];
        assert_eq!(alice, expected);

        let charlie = deterministic_profiles(&sc, Party::Charlie).unwrap();
        let expected: Vec<Profile> = vec![
            vec![0, 0, 0],
            vec![0, 2, 2],
            vec![2, 0, 2],
            vec![2, 2, 0],
        ];
        assert_eq!(charlie, expected);

        let std2 = spec(ScenarioKind::StandardBilocal, 2);
        for party in [Party::Alice, Party::Charlie] {
            let profiles = deterministic_profiles(&std2, party).unwrap();
            assert_eq!(profiles, vec![vec![0, 2], vec![2, 0]]);
        }
    }

    #[test]
    fn deterministic_maxima() {
        let std2 = deterministic_max(&spec(ScenarioKind::StandardBilocal, 2)).unwrap();
        assert!(close(std2.value, 2.0, 1e-12));
        assert!(std2.strategies.iter().all(|(_, s)| s.iter().all(|&x| x == 1)));

        let b1 = deterministic_max(&spec(ScenarioKind::BilocalI, 3)).unwrap();
        assert!(close(b1.value, 4.0, 1e-12));

        let t2 = deterministic_max(&spec(ScenarioKind::TrilocalII, 3)).unwrap();
        let expected = 12f64.powf(1.0 / 3.0) + 4f64.powf(1.0 / 3.0);
        assert!(close(t2.value, expected, 1e-12));
    }

    #[test]
    fn mixed_bounds_attain_formula_for_explicit_scenarios() {
        for (kind, tol) in [
            (ScenarioKind::StandardBilocal, 1e-9),
            (ScenarioKind::BilocalI, 1e-6),
            (ScenarioKind::BilocalII, 1e-6),
            (ScenarioKind::TrilocalI, 1e-6),
            (ScenarioKind::TrilocalII, 1e-6),
        ] {
            let n = if kind == ScenarioKind::StandardBilocal { 2 } else { 3 };
            let sc = spec(kind, n);
            let mix = mixed_bound(&sc, 1e-8).unwrap();
            let formula = classical_bound_formula(&sc);
            assert!(
                close(mix.value, formula, tol),
                "{kind:?}: mixed {} vs formula {formula}",
                mix.value
            );
        }
    }

    #[test]
    fn bound_ordering_invariant() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::BilocalI, 4),
            (ScenarioKind::BilocalII, 3),
            (ScenarioKind::TrilocalI, 3),
            (ScenarioKind::TrilocalII, 3),
        ] {
            let sc = spec(kind, n);
            let det = deterministic_max(&sc).unwrap().value;
            let mix = mixed_bound(&sc, 1e-8).unwrap().value;
            let formula = classical_bound_formula(&sc);
            assert!(det <= mix + 1e-9, "{kind:?} n={n}");
            assert!(mix <= formula + 1e-9, "{kind:?} n={n}");
        }
    }

    #[test]
    fn formula_equals_profile_sum_product_root() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::BilocalII, 3),
            (ScenarioKind::TrilocalI, 3),
            (ScenarioKind::TrilocalII, 3),
        ] {
            let sc = spec(kind, n);
            let product: f64 = sc
                .edge_parties()
                .iter()
                .map(|p| profile_sum_max(&sc, *p).unwrap() as f64)
                .product();
            let expected = product.powf(1.0 / sc.root() as f64);
            assert!(
                close(classical_bound_formula(&sc), expected, 1e-9),
                "{kind:?} n={n}"
            );
        }
    }

    #[test]
    fn enumeration_capacity_errors() {
        assert!(matches!(
            deterministic_profiles(&spec(ScenarioKind::BilocalI, 6), Party::Alice),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            deterministic_max(&spec(ScenarioKind::BilocalI, 6)),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial(1, 0), 1);
        assert_eq!(binomial(2, 1), 2);
        assert_eq!(binomial(11, 5), 462);
        assert_eq!(binomial(4, 5), 0);
    }
}
