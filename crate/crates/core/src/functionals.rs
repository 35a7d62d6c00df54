//! Assembles states and observables into a network and evaluates correlators,
//! joint probability tensors, per-term combination values and the nonlinear
//! functionals Σ_j |I_j|^(1/r).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{
    assemble, bell_pairs, werner_pairs, CMatrix, DensityOp, Ket, QubitLayout,
};
use crate::scenario::{Party, ScenarioSpec};
use crate::schemes::{
    bob_product_observables, coefficient_scheme, combination_operator, optimal_observables,
    CoefficientScheme, PartyObservables,
};

#[derive(Clone, Debug)]
pub enum NetworkState {
    Pure(Ket),
    Mixed(DensityOp),
}

impl NetworkState {
    pub fn dim(&self) -> usize {
        match self {
            NetworkState::Pure(k) => k.dim(),
            NetworkState::Mixed(r) => r.dim(),
        }
    }

    /// All functional evaluation goes through the density-operator path.
    pub fn to_density(&self) -> DensityOp {
        match self {
            NetworkState::Pure(k) => k.projector(),
            NetworkState::Mixed(r) => r.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&Ket> {
        match self {
            NetworkState::Pure(k) => Some(k),
            NetworkState::Mixed(_) => None,
        }
    }
}

/// A fully specified network: scenario, layout, shared state, coefficient
/// scheme, edge observables and Bob's per-edge observable factors.
#[derive(Clone, Debug)]
pub struct NetworkAssembly {
    pub spec: ScenarioSpec,
    pub layout: QubitLayout,
    pub state: NetworkState,
    pub visibilities: Vec<f64>,
    pub scheme: CoefficientScheme,
    pub edges: Vec<PartyObservables>,
    /// `bob[j][e]` acts on Bob's block for edge e in term j.
    pub bob: Vec<Vec<CMatrix>>,
}

fn tensor_amplitudes(parts: &[&Ket]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for part in parts {
        acc = acc
            .iter()
            .flat_map(|a| part.amplitudes().iter().map(move |b| a * b))
            .collect();
    }
    acc
}

fn kron_density(parts: &[DensityOp]) -> Result<DensityOp> {
    let mut acc = CMatrix::identity(1);
    for part in parts {
        acc = crate::quantum::kron(&acc, part.matrix())?;
    }
    Ok(DensityOp::trusted(acc))
}

/// Pure network state: one maximally entangled block of pairs per edge.
pub fn pure_network_state(spec: &ScenarioSpec) -> Result<Ket> {
    let pairs: Vec<Ket> = spec
        .edges()
        .iter()
        .map(|e| bell_pairs(e.pairs))
        .collect::<Result<_>>()?;
    let refs: Vec<&Ket> = pairs.iter().collect();
    Ket::new(tensor_amplitudes(&refs))
}

/// Werner network state with one visibility per source.
pub fn werner_network_state(spec: &ScenarioSpec, visibilities: &[f64]) -> Result<DensityOp> {
    let edges = spec.edges();
    if visibilities.len() != edges.len() {
        return Err(Error::Shape {
            context: "werner_network_state",
            expected: edges.len(),
            actual: visibilities.len(),
        });
    }
    let parts: Vec<DensityOp> = edges
        .iter()
        .zip(visibilities)
        .map(|(e, &v)| werner_pairs(e.pairs, v))
        .collect::<Result<_>>()?;
    kron_density(&parts)
}

impl NetworkAssembly {
    /// The optimal assembly: explicit observable sets where they exist,
    /// generated chain/anticommuting sets otherwise, pure entangled state.
    pub fn optimal_assembly(spec: &ScenarioSpec) -> Result<Self> {
        spec.matrix_level()?;
        let scheme = coefficient_scheme(spec)?;
        let observables = optimal_observables(spec)?;
        let layout = spec.layout()?;
        let state = pure_network_state(spec)?;
        let bob = match observables.explicit_bob {
            Some(b) => b,
            None => bob_product_observables(&scheme, &observables.edges, &state, &layout)?,
        };
        let n_edges = spec.edges().len();
        Ok(NetworkAssembly {
            spec: spec.clone(),
            layout,
            state: NetworkState::Pure(state),
            visibilities: vec![1.0; n_edges],
            scheme,
            edges: observables.edges,
            bob,
        })
    }

    /// Assembly built entirely from the general chain/anticommuting-set
    /// constructors, bypassing the fixed n=3 observable tables.
    pub fn generated(spec: &ScenarioSpec) -> Result<Self> {
        spec.matrix_level()?;
        let scheme = crate::schemes::generated_coefficient_scheme(spec)?;
        let observables = crate::schemes::generated_observables(spec)?;
        let layout = spec.layout()?;
        let state = pure_network_state(spec)?;
        let bob = bob_product_observables(&scheme, &observables.edges, &state, &layout)?;
        let n_edges = spec.edges().len();
        Ok(NetworkAssembly {
            spec: spec.clone(),
            layout,
            state: NetworkState::Pure(state),
            visibilities: vec![1.0; n_edges],
            scheme,
            edges: observables.edges,
            bob,
        })
    }

    /// Same construction but with Bob rebuilt from the optimal products even
    /// when an explicit Bob exists.
    pub fn optimal_assembly_product_bob(spec: &ScenarioSpec) -> Result<Self> {
        let mut assembly = Self::optimal_assembly(spec)?;
        let state = assembly
            .state
            .as_pure()
            .expect("optimal assembly is pure")
            .clone();
        assembly.bob = bob_product_observables(
            &assembly.scheme,
            &assembly.edges,
            &state,
            &assembly.layout,
        )?;
        Ok(assembly)
    }

    /// Assembly with caller-provided edge observables (audit path); Bob is
    /// rebuilt from the products without the involution gate.
    pub fn with_edge_observables(
        spec: &ScenarioSpec,
        edges: Vec<PartyObservables>,
    ) -> Result<Self> {
        spec.matrix_level()?;
        let scheme = coefficient_scheme(spec)?;
        let expected: Vec<Party> = spec.edge_parties();
        let provided: Vec<Party> = edges.iter().map(|o| o.party).collect();
        if expected != provided {
            return Err(Error::Domain(format!(
                "edge observables must cover parties {expected:?} in order, got {provided:?}"
            )));
        }
        for (obs, edge) in edges.iter().zip(spec.edges()) {
            let want = 1usize << edge.pairs;
            if obs.dim() != want {
                return Err(Error::Shape {
                    context: "edge observable dimension",
                    expected: want,
                    actual: obs.dim(),
                });
            }
            if obs.count() != spec.settings(obs.party) {
                return Err(Error::Shape {
                    context: "edge observable count",
                    expected: spec.settings(obs.party),
                    actual: obs.count(),
                });
            }
        }
        let layout = spec.layout()?;
        let state = pure_network_state(spec)?;
        let bob = crate::schemes::bob_product_observables_lenient(&scheme, &edges, &state, &layout)?;
        let n_edges = spec.edges().len();
        Ok(NetworkAssembly {
            spec: spec.clone(),
            layout,
            state: NetworkState::Pure(state),
            visibilities: vec![1.0; n_edges],
            scheme,
            edges,
            bob,
        })
    }

    /// Replace the shared state by Werner states of the given visibilities.
    pub fn with_visibilities(mut self, visibilities: &[f64]) -> Result<Self> {
        for &v in visibilities {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("visibility {v} outside [0,1]")));
            }
        }
        self.state = NetworkState::Mixed(werner_network_state(&self.spec, visibilities)?);
        self.visibilities = visibilities.to_vec();
        Ok(self)
    }

    /// Full-space embedded combination operator of one edge party for term j.
    pub fn edge_combination(&self, party: Party, j: usize) -> Result<CMatrix> {
        let obs = self
            .edges
            .iter()
            .find(|o| o.party == party)
            .ok_or_else(|| Error::Domain(format!("party {party} is not an edge party")))?;
        let combo = combination_operator(self.scheme.party(party).row(j), obs)?;
        let block = self
            .layout
            .find(party.label(), "edge")
            .expect("layout holds every edge party");
        crate::quantum::embed(&combo, &self.layout, block)
    }

    /// Full-space operator for term j: every block carries its factor.
    fn term_operator(&self, j: usize) -> Result<CMatrix> {
        let combos: Vec<CMatrix> = self
            .edges
            .iter()
            .map(|obs| combination_operator(self.scheme.party(obs.party).row(j), obs))
            .collect::<Result<_>>()?;
        let mut assignments: Vec<Option<&CMatrix>> = vec![None; self.layout.blocks().len()];
        for (e, (obs, combo)) in self.edges.iter().zip(&combos).enumerate() {
            let edge_block = self
                .layout
                .find(obs.party.label(), "edge")
                .expect("edge block");
            let bob_block = self
                .layout
                .find(Party::Bob.label(), &format!("with-{}", obs.party.label()))
                .expect("bob block");
            assignments[edge_block] = Some(combo);
            assignments[bob_block] = Some(&self.bob[j][e]);
        }
        assemble(&self.layout, &assignments)
    }

    /// Raw full-space observable of one party at one setting (Bob expands to
    /// the product of his per-edge factors).
    pub fn setting_observable(&self, party: Party, setting: usize) -> Result<CMatrix> {
        if party == Party::Bob {
            return crate::schemes::bob_full_observable(
                &self.bob[setting],
                &self.layout,
                &self.spec,
            );
        }
        let obs = self
            .edges
            .iter()
            .find(|o| o.party == party)
            .ok_or_else(|| Error::Domain(format!("party {party} is not in this network")))?;
        if setting >= obs.count() {
            return Err(Error::Domain(format!(
                "setting {setting} out of range for party {party}"
            )));
        }
        let block = self
            .layout
            .find(party.label(), "edge")
            .expect("edge block");
        crate::quantum::embed(&obs.observables[setting], &self.layout, block)
    }
}

/// Signed per-term values and the nonlinear total Σ_j |I_j|^(1/r).
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalResult {
    pub scenario: String,
    pub n: usize,
    pub root: u32,
    pub terms: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub total: f64,
}

/// I_j = ⟨Ã_j ⊗ B_j ⊗ C̃_j [⊗ D̃_j]⟩.
pub fn term_value(assembly: &NetworkAssembly, j: usize) -> Result<f64> {
    if j >= assembly.spec.terms() {
        return Err(Error::Domain(format!("term index {j} out of range")));
    }
    let op = assembly.term_operator(j)?;
    assembly.state.to_density().expectation(&op)
}

/// Evaluate every term and the total.
pub fn functional_value(assembly: &NetworkAssembly) -> Result<FunctionalResult> {
    let terms: Vec<f64> = (0..assembly.spec.terms())
        .map(|j| term_value(assembly, j))
        .collect::<Result<_>>()?;
    let root = assembly.spec.root();
    let magnitudes: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
    let total = magnitudes
        .iter()
        .map(|&m| if m == 0.0 { 0.0 } else { m.powf(1.0 / root as f64) })
        .sum();
    Ok(FunctionalResult {
        scenario: assembly.spec.kind().name().to_string(),
        n: assembly.spec.n(),
        root,
        terms,
        magnitudes,
        total,
    })
}

/// Joint outcome distribution for one setting tuple.
#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityTable {
    pub settings: Vec<usize>,
    /// Outcome index packs the per-party bits in setting order a,b,c(,d).
    pub probabilities: Vec<f64>,
    pub correlator: f64,
}

/// P(outcomes | settings) via projective measurements (I ± O)/2, plus the
/// (−1)-weighted correlator reconstructed from the table.
pub fn joint_probability_tensor(
    assembly: &NetworkAssembly,
    settings: &[usize],
) -> Result<ProbabilityTable> {
    let parties = assembly.spec.parties_in_setting_order();
    if settings.len() != parties.len() {
        return Err(Error::Shape {
            context: "joint_probability_tensor",
            expected: parties.len(),
            actual: settings.len(),
        });
    }
    for (party, &s) in parties.iter().zip(settings) {
        if s >= assembly.spec.settings(*party) {
            return Err(Error::Domain(format!(
                "setting {s} out of range for party {party}"
            )));
        }
    }
    // Per-party block factors. Every observable acts on its own blocks, so
    // each projector product (I ± O)/2 ⋯ expands exactly into 2^p subset
    // expectations of kron-assembled operators.
    let mut block_factors: Vec<Vec<(usize, CMatrix)>> = Vec::with_capacity(parties.len());
    for (party, &s) in parties.iter().zip(settings) {
        if *party == Party::Bob {
            let factors = assembly
                .spec
                .edges()
                .iter()
                .zip(&assembly.bob[s])
                .map(|(edge, f)| {
                    let block = assembly
                        .layout
                        .find(Party::Bob.label(), &format!("with-{}", edge.party.label()))
                        .expect("bob block");
                    (block, f.clone())
                })
                .collect();
            block_factors.push(factors);
        } else {
            let obs = assembly
                .edges
                .iter()
                .find(|o| o.party == *party)
                .expect("edge party present");
            let block = assembly
                .layout
                .find(party.label(), "edge")
                .expect("edge block");
            block_factors.push(vec![(block, obs.observables[s].clone())]);
        }
    }

    let rho = assembly.state.to_density();
    let n_parties = parties.len();
    let n_outcomes = 1usize << n_parties;

    // expectation of the product of the observables in each party subset
    let mut subset_expectations = vec![0.0f64; n_outcomes];
    for (subset, slot) in subset_expectations.iter_mut().enumerate() {
        let mut assignments: Vec<Option<&CMatrix>> = vec![None; assembly.layout.blocks().len()];
        for (k, factors) in block_factors.iter().enumerate() {
            if (subset >> (n_parties - 1 - k)) & 1 == 1 {
                for (block, factor) in factors {
                    assignments[*block] = Some(factor);
                }
            }
        }
        let op = assemble(&assembly.layout, &assignments)?;
        *slot = rho.expectation(&op)?;
    }

    let mut probabilities = Vec::with_capacity(n_outcomes);
    let mut correlator_from_probs = 0.0;
    let scale = 1.0 / n_outcomes as f64;
    for outcome in 0..n_outcomes {
        let mut p = 0.0;
        for (subset, expectation) in subset_expectations.iter().enumerate() {
            // sign = Π_{k in subset} (−1)^(outcome bit k)
            let sign_bits = (outcome & subset).count_ones();
            let sign = if sign_bits % 2 == 0 { 1.0 } else { -1.0 };
            p += sign * expectation;
        }
        p *= scale;
        let parity = (outcome as u32).count_ones();
        correlator_from_probs += if parity.is_multiple_of(2) { p } else { -p };
        probabilities.push(p);
    }

    Ok(ProbabilityTable {
        settings: settings.to_vec(),
        probabilities,
        correlator: correlator_from_probs,
    })
}

/// Direct operator expectation ⟨A_x B_j C_z (D_w)⟩ for cross-checks.
pub fn raw_correlator(assembly: &NetworkAssembly, settings: &[usize]) -> Result<f64> {
    let parties = assembly.spec.parties_in_setting_order();
    let mut op = CMatrix::identity(assembly.state.dim());
    for (party, &s) in parties.iter().zip(settings) {
        op = op.matmul(&assembly.setting_observable(*party, s)?);
    }
    assembly.state.to_density().expectation(&op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli_x, pauli_z};
    use crate::scenario::ScenarioKind;

    fn spec(kind: ScenarioKind, n: usize) -> ScenarioSpec {
        ScenarioSpec::new(kind, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn combination_operator_simple_row() {
        let obs =
            PartyObservables::new(Party::Alice, vec![pauli_z(), pauli_x()]).unwrap();
        let combo = combination_operator(&[1, 1], &obs).unwrap();
        assert!(combo.max_abs_diff(&pauli_z().add(&pauli_x())) < 1e-15);
    }

    #[test]
    fn standard_bilocal_terms_and_total() {
        let assembly =
            NetworkAssembly::optimal_assembly(&spec(ScenarioKind::StandardBilocal, 2)).unwrap();
        // the explicit two-setting Bob keeps the sign structure visible
        assert!(close(term_value(&assembly, 0).unwrap(), 2.0, 1e-12));
        assert!(close(term_value(&assembly, 1).unwrap(), -2.0, 1e-12));
        let result = functional_value(&assembly).unwrap();
        assert!(close(result.total, 2.0 * 2f64.sqrt(), 1e-12));
    }

    #[test]
    fn bilocal_i_n3_reaches_six() {
        let assembly = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalI, 3)).unwrap();
        let result = functional_value(&assembly).unwrap();
        assert!(close(result.total, 6.0, 1e-12), "total = {}", result.total);
        // each |I_j| is the ω-product (4/√3)·√3 = 4
        for m in &result.magnitudes {
            assert!(close(*m, 4.0, 1e-12), "per-term magnitude = {m}");
        }
    }

    #[test]
    fn trilocal_ii_n3_reaches_six() {
        let assembly = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::TrilocalII, 3)).unwrap();
        let result = functional_value(&assembly).unwrap();
        assert!(close(result.total, 6.0, 1e-12), "total = {}", result.total);
    }

    #[test]
    fn generated_sets_are_value_equivalent_to_explicit_ones() {
        // different rows and observables (a local gauge apart), same totals
        let sc = spec(ScenarioKind::BilocalI, 3);
        let generated = functional_value(&NetworkAssembly::generated(&sc).unwrap()).unwrap();
        assert!(close(generated.total, 6.0, 1e-12));

        let sc = spec(ScenarioKind::BilocalII, 3);
        let generated = functional_value(&NetworkAssembly::generated(&sc).unwrap()).unwrap();
        let explicit = functional_value(&NetworkAssembly::optimal_assembly(&sc).unwrap()).unwrap();
        assert!(close(generated.total, explicit.total, 1e-12));
    }

    #[test]
    fn flipping_bob_negates_a_term() {
        let mut assembly =
            NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalI, 3)).unwrap();
        let before = term_value(&assembly, 1).unwrap();
        assembly.bob[1][0] = assembly.bob[1][0].scale(-1.0);
        let after = term_value(&assembly, 1).unwrap();
        assert!(close(before, -after, 1e-12));
    }

    #[test]
    fn functional_invariant_under_row_permutation_and_row_sign() {
        let base = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalI, 3)).unwrap();
        let reference = functional_value(&base).unwrap().total;

        // permute j-terms across all parties together
        let mut permuted = base.clone();
        {
            let scheme = &mut permuted.scheme;
            for (_, matrix) in &mut scheme.per_party {
                matrix.rows.rotate_left(1);
            }
            permuted.bob.rotate_left(1);
        }
        let value = functional_value(&permuted).unwrap().total;
        assert!(close(value, reference, 1e-12));

        // flip the sign of one row for exactly one party
        let mut flipped = base.clone();
        for s in &mut flipped.scheme.per_party[0].1.rows[2] {
            *s = -*s;
        }
        let value = functional_value(&flipped).unwrap().total;
        assert!(close(value, reference, 1e-12));
    }

    #[test]
    fn visibility_multilinearity() {
        let sc = spec(ScenarioKind::BilocalI, 3);
        let pure = NetworkAssembly::optimal_assembly(&sc).unwrap();
        let noisy = NetworkAssembly::optimal_assembly(&sc)
            .unwrap()
            .with_visibilities(&[0.7, 0.4])
            .unwrap();
        for j in 0..sc.terms() {
            let full = term_value(&pure, j).unwrap();
            let dimmed = term_value(&noisy, j).unwrap();
            assert!(close(dimmed, 0.7 * 0.4 * full, 1e-10));
        }
    }

    #[test]
    fn correlators_are_physical() {
        let assembly = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalII, 3)).unwrap();
        let sc = &assembly.spec;
        for x in 0..sc.settings(Party::Alice) {
            for j in 0..sc.settings(Party::Bob) {
                for z in 0..sc.settings(Party::Charlie) {
                    let c = raw_correlator(&assembly, &[x, j, z]).unwrap();
                    assert!(c.abs() <= 1.0 + 1e-12, "correlator {c} at ({x},{j},{z})");
                }
            }
        }
    }

    #[test]
    fn probability_tensor_deterministic_product_state() {
        // all-σz observables on |0...0⟩: a single outcome carries the mass
        let sc = spec(ScenarioKind::StandardBilocal, 2);
        let scheme = coefficient_scheme(&sc).unwrap();
        let layout = sc.layout().unwrap();
        let edges = vec![
            PartyObservables::new(Party::Alice, vec![pauli_z(), pauli_z()]).unwrap(),
            PartyObservables::new(Party::Charlie, vec![pauli_z(), pauli_z()]).unwrap(),
        ];
        let assembly = NetworkAssembly {
            spec: sc.clone(),
            layout,
            state: NetworkState::Pure(Ket::basis(16, 0)),
            visibilities: vec![1.0, 1.0],
            scheme,
            edges,
            bob: vec![
                vec![pauli_z(), pauli_z()],
                vec![pauli_z(), pauli_z()],
            ],
        };
        let table = joint_probability_tensor(&assembly, &[0, 0, 0]).unwrap();
        assert!(close(table.probabilities[0], 1.0, 1e-12));
        assert!(table.probabilities[1..].iter().all(|p| p.abs() < 1e-12));
        assert!(close(table.correlator, 1.0, 1e-12));
    }

    #[test]
    fn probability_tensor_bell_pair_parity_structure() {
        // All-σz measurements on two Bell pairs: a and c are uniform and b is
        // their parity, so P(a,b,c) = 1/4 exactly when b = a XOR c.
        let sc = spec(ScenarioKind::StandardBilocal, 2);
        let scheme = coefficient_scheme(&sc).unwrap();
        let layout = sc.layout().unwrap();
        let edges = vec![
            PartyObservables::new(Party::Alice, vec![pauli_z(), pauli_z()]).unwrap(),
            PartyObservables::new(Party::Charlie, vec![pauli_z(), pauli_z()]).unwrap(),
        ];
        let assembly = NetworkAssembly {
            spec: sc.clone(),
            layout,
            state: NetworkState::Pure(pure_network_state(&sc).unwrap()),
            visibilities: vec![1.0, 1.0],
            scheme,
            edges,
            bob: vec![
                vec![pauli_z(), pauli_z()],
                vec![pauli_z(), pauli_z()],
            ],
        };
        let table = joint_probability_tensor(&assembly, &[0, 0, 0]).unwrap();
        for outcome in 0..8usize {
            let (a, b, c) = ((outcome >> 2) & 1, (outcome >> 1) & 1, outcome & 1);
            let expected = if b == (a ^ c) { 0.25 } else { 0.0 };
            assert!(
                close(table.probabilities[outcome], expected, 1e-12),
                "P({a},{b},{c}) = {}",
                table.probabilities[outcome]
            );
        }
    }

    #[test]
    fn probability_normalization_and_correlator_consistency() {
        let assembly = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalI, 3)).unwrap();
        let sc = &assembly.spec;
        for x in 0..sc.settings(Party::Alice) {
            for j in 0..sc.settings(Party::Bob) {
                for z in 0..sc.settings(Party::Charlie) {
                    let table = joint_probability_tensor(&assembly, &[x, j, z]).unwrap();
                    let sum: f64 = table.probabilities.iter().sum();
                    assert!(close(sum, 1.0, 1e-12));
                    let direct = raw_correlator(&assembly, &[x, j, z]).unwrap();
                    assert!(close(table.correlator, direct, 1e-12));
                }
            }
        }
    }

    #[test]
    fn zero_visibility_kills_the_functional() {
        let assembly = NetworkAssembly::optimal_assembly(&spec(ScenarioKind::BilocalI, 3))
            .unwrap()
            .with_visibilities(&[0.0, 0.0])
            .unwrap();
        let result = functional_value(&assembly).unwrap();
        assert!(close(result.total, 0.0, 1e-12));
    }
}
