//! Coefficient schemes (the sign patterns of the unnormalized combinations)
//! and the optimal observables for every party: explicit qubit sets for the
//! n=2/n=3 scenarios, chain and anticommuting-set constructions for general n,
//! and Bob's product observables.

use crate::error::{Error, Result};
use crate::quantum::{pauli_x, pauli_y, pauli_z, CMatrix, Ket, QubitLayout};
use crate::scenario::{Party, ScenarioKind, ScenarioSpec};

/// Involution tolerance for constructed observables.
pub const OBSERVABLE_TOL: f64 = 1e-10;

/// The chain-set angles sin(π/8) and cos(π/8).
#[derive(Clone, Copy, Debug)]
pub struct ChainAngles {
    pub r: f64,
    pub t: f64,
}

impl ChainAngles {
    pub fn new() -> Self {
        let s = std::f64::consts::SQRT_2;
        ChainAngles {
            r: 0.5 * (2.0 - s).sqrt(),
            t: 0.5 * (2.0 + s).sqrt(),
        }
    }
}

impl Default for ChainAngles {
    fn default() -> Self {
        Self::new()
    }
}

/// A signed integer matrix: row j gives the coefficients of combination j
/// over one party's observables. Entries are −1, 0 or +1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    pub(crate) rows: Vec<Vec<i32>>,
}

impl SignMatrix {
    pub fn new(rows: Vec<Vec<i32>>) -> Result<Self> {
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Domain("sign matrix rows must be nonempty and equal length".into()));
        }
        if rows
            .iter()
            .any(|r| r.iter().any(|&s| !(-1..=1).contains(&s)))
        {
            return Err(Error::Domain("sign matrix entries must be in {-1,0,+1}".into()));
        }
        if rows.iter().any(|r| r.iter().all(|&s| s == 0)) {
            return Err(Error::Domain("sign matrix has an all-zero row".into()));
        }
        Ok(SignMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<i32>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[i32] {
        &self.rows[j]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }
}

/// Per-party sign matrices, in the scenario's edge order.
#[derive(Clone, Debug)]
pub struct CoefficientScheme {
    spec: ScenarioSpec,
    pub(crate) per_party: Vec<(Party, SignMatrix)>,
}

impl CoefficientScheme {
    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn party(&self, party: Party) -> &SignMatrix {
        &self
            .per_party
            .iter()
            .find(|(p, _)| *p == party)
            .expect("scheme holds every edge party")
            .1
    }

    pub fn parties(&self) -> Vec<Party> {
        self.per_party.iter().map(|(p, _)| *p).collect()
    }
}

/// Chain rows over m settings: row j couples settings j and j+1, and the wrap
/// row carries −1 on the wrapped index.
fn chain_rows(m: usize) -> Vec<Vec<i32>> {
    let mut rows = Vec::with_capacity(m);
    for j in 0..m {
        let mut row = vec![0i32; m];
        if j + 1 < m {
            row[j] = 1;
            row[j + 1] = 1;
        } else {
            row[m - 1] = 1;
            row[0] = -1;
        }
        rows.push(row);
    }
    rows
}

/// Bit strings indexing the 2^(n−1)-input party: the representative of each
/// complement pair with leading bit 0, ordered by the remaining bits.
fn rac_bit_strings(n: usize) -> Vec<Vec<u8>> {
    let count = 1usize << (n - 1);
    (0..count)
        .map(|x| {
            let mut bits = vec![0u8; n];
            for (pos, bit) in bits.iter_mut().enumerate().skip(1) {
                *bit = ((x >> (n - 1 - pos)) & 1) as u8;
            }
            bits
        })
        .collect()
}

/// Rows for the party whose combinations select bit positions: row j has
/// column signs (−1)^(bit j of string x).
fn rac_rows(n: usize) -> Vec<Vec<i32>> {
    let strings = rac_bit_strings(n);
    (0..n)
        .map(|j| {
            strings
                .iter()
                .map(|y| if y[j] == 0 { 1 } else { -1 })
                .collect()
        })
        .collect()
}

/// Rows for the party whose combinations are indexed by bit strings: row j
/// has column signs (−1)^(bit z of string j).
fn rac_rows_transposed(n: usize) -> Vec<Vec<i32>> {
    rac_bit_strings(n)
        .iter()
        .map(|y| {
            y.iter()
                .map(|&bit| if bit == 0 { 1 } else { -1 })
                .collect()
        })
        .collect()
}

/// The chain/bit-string combination rows for any bilocal scenario, ignoring
/// the fixed n=3 tables.
pub fn generated_coefficient_scheme(spec: &ScenarioSpec) -> Result<CoefficientScheme> {
    let n = spec.n();
    let per_party = match spec.kind() {
        ScenarioKind::BilocalI => vec![
            (Party::Alice, SignMatrix::new(rac_rows(n))?),
            (Party::Charlie, SignMatrix::new(chain_rows(n))?),
        ],
        ScenarioKind::BilocalII => vec![
            (Party::Alice, SignMatrix::new(chain_rows(1 << (n - 1)))?),
            (Party::Charlie, SignMatrix::new(rac_rows_transposed(n))?),
        ],
        kind => {
            return Err(Error::Capability(format!(
                "no generated combination rows for {kind}"
            )));
        }
    };
    Ok(CoefficientScheme {
        spec: spec.clone(),
        per_party,
    })
}

/// The chain and anticommuting-set observables for any bilocal scenario.
pub fn generated_observables(spec: &ScenarioSpec) -> Result<ScenarioObservables> {
    let edges = match spec.kind() {
        ScenarioKind::BilocalI => vec![
            with_party(rac_observables(spec.n())?, Party::Alice),
            with_party(chain_observables(spec.n())?, Party::Charlie),
        ],
        ScenarioKind::BilocalII => vec![
            with_party(chain_observables(1 << (spec.n() - 1))?, Party::Alice),
            PartyObservables::new(Party::Charlie, anticommuting_set(spec.n())?)?,
        ],
        kind => {
            return Err(Error::Capability(format!(
                "no generated observable construction for {kind}"
            )));
        }
    };
    Ok(ScenarioObservables {
        edges,
        explicit_bob: None,
    })
}

/// The sign tensors defining the combinations for each scenario. The five
/// n=2/n=3 scenarios carry fixed row tables; general-n bilocal scenarios use
/// the chain and bit-string constructions.
pub fn coefficient_scheme(spec: &ScenarioSpec) -> Result<CoefficientScheme> {
    let n = spec.n();
    let per_party: Vec<(Party, SignMatrix)> = match (spec.kind(), n) {
        (ScenarioKind::StandardBilocal, _) => vec![
            (Party::Alice, SignMatrix::new(vec![vec![1, 1], vec![1, -1]])?),
            (Party::Charlie, SignMatrix::new(vec![vec![1, 1], vec![-1, 1]])?),
        ],
        (ScenarioKind::BilocalI, 3) => vec![
            (
                Party::Alice,
                SignMatrix::new(vec![
                    vec![1, 1, 1, -1],
                    vec![1, 1, -1, 1],
                    vec![1, -1, 1, 1],
                ])?,
            ),
            (Party::Charlie, SignMatrix::new(chain_rows(3))?),
        ],
        (ScenarioKind::BilocalI, _) => return generated_coefficient_scheme(spec),
        (ScenarioKind::BilocalII, 3) => vec![
            (Party::Alice, SignMatrix::new(chain_rows(4))?),
            (
                Party::Charlie,
                SignMatrix::new(vec![
                    vec![1, 1, 1],
                    vec![1, 1, -1],
                    vec![1, -1, 1],
                    vec![-1, 1, 1],
                ])?,
            ),
        ],
        (ScenarioKind::BilocalII, _) => return generated_coefficient_scheme(spec),
        (ScenarioKind::TrilocalI, 3) => vec![
            (Party::Alice, SignMatrix::new(chain_rows(4))?),
            (
                Party::Charlie,
                SignMatrix::new(vec![
                    vec![1, 1, 1],
                    vec![1, 1, -1],
                    vec![1, -1, 1],
                    vec![-1, 1, 1],
                ])?,
            ),
            (
                Party::Diana,
                SignMatrix::new(vec![
                    vec![1, 1, 1, 1],
                    vec![1, 1, 1, -1],
                    vec![1, 1, -1, -1],
                    vec![1, -1, -1, -1],
                ])?,
            ),
        ],
        (ScenarioKind::TrilocalII, 3) => vec![
            (
                Party::Alice,
                SignMatrix::new(vec![
                    vec![1, 1, 1, -1],
                    vec![1, 1, -1, 1],
                    vec![1, -1, 1, 1],
                ])?,
            ),
            (Party::Charlie, SignMatrix::new(chain_rows(3))?),
            // Third row pattern fixed by the optimality constraint
            // D1 − D2 + D3 = 0: the combination rows must stay off it.
            (
                Party::Diana,
                SignMatrix::new(vec![
                    vec![1, 1, 1],
                    vec![1, 1, -1],
                    vec![1, -1, -1],
                ])?,
            ),
        ],
        (kind, _) => {
            return Err(Error::Capability(format!(
                "{kind} combination rows are defined only for n=3; \
                 the closed-form bound/optimum families cover general n"
            )));
        }
    };
    Ok(CoefficientScheme {
        spec: spec.clone(),
        per_party,
    })
}

/// Dichotomic observables for one party, all on the same block dimension.
#[derive(Clone, Debug)]
pub struct PartyObservables {
    pub party: Party,
    pub observables: Vec<CMatrix>,
}

impl PartyObservables {
    pub fn new(party: Party, observables: Vec<CMatrix>) -> Result<Self> {
        let dim = observables
            .first()
            .map(|o| o.dim())
            .ok_or_else(|| Error::Domain("party needs at least one observable".into()))?;
        for (k, o) in observables.iter().enumerate() {
            if o.dim() != dim {
                return Err(Error::Shape {
                    context: "party observables",
                    expected: dim,
                    actual: o.dim(),
                });
            }
            if !o.is_hermitian(OBSERVABLE_TOL) {
                return Err(Error::Contract(format!(
                    "observable {k} of party {party} is not Hermitian"
                )));
            }
            let square = o.matmul(o);
            if square.max_abs_diff(&CMatrix::identity(dim)) > OBSERVABLE_TOL {
                return Err(Error::Contract(format!(
                    "observable {k} of party {party} is not an involution"
                )));
            }
        }
        Ok(PartyObservables { party, observables })
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }

    pub fn count(&self) -> usize {
        self.observables.len()
    }
}

/// n mutually anticommuting Hermitian involutions on ⌊n/2⌋ qubits, built as
/// the usual ladder of Pauli strings (X and Y on successive qubits behind a
/// Z prefix, plus the all-Z string when n is odd).
pub fn anticommuting_set(n: usize) -> Result<Vec<CMatrix>> {
    if n == 0 {
        return Err(Error::Domain("anticommuting_set needs n >= 1".into()));
    }
    let qubits = (n / 2).max(1);
    if 1usize << qubits > crate::quantum::MAX_DIM {
        return Err(Error::Capacity {
            context: "anticommuting_set",
            requested: 1u128 << qubits,
            limit: crate::quantum::MAX_DIM as u128,
        });
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let position = k / 2;
        let mut factors: Vec<CMatrix> = Vec::with_capacity(qubits);
        for q in 0..qubits {
            if q < position {
                factors.push(pauli_z());
            } else if q == position && k < 2 * qubits {
                factors.push(if k % 2 == 0 { pauli_x() } else { pauli_y() });
            } else if k == 2 * qubits {
                // odd n: the all-Z string
                factors.push(pauli_z());
            } else {
                factors.push(CMatrix::identity(2));
            }
        }
        let refs: Vec<&CMatrix> = factors.iter().collect();
        out.push(crate::quantum::kron_all(&refs)?);
    }
    Ok(out)
}

/// 2^(n−1) observables n^(−1/2) Σ_j (−1)^(y_j) O_j over an anticommuting set,
/// one per leading-bit-0 bit string.
pub fn rac_observables(n: usize) -> Result<PartyObservables> {
    if n < 2 {
        return Err(Error::Domain("rac_observables needs n >= 2".into()));
    }
    let generators = anticommuting_set(n)?;
    let dim = generators[0].dim();
    let norm = 1.0 / (n as f64).sqrt();
    let observables = rac_bit_strings(n)
        .iter()
        .map(|y| {
            let mut acc = CMatrix::zeros(dim);
            for (j, g) in generators.iter().enumerate() {
                let sign = if y[j] == 0 { 1.0 } else { -1.0 };
                acc = acc.add(&g.scale(sign * norm));
            }
            acc
        })
        .collect();
    PartyObservables::new(Party::Alice, observables)
}

/// Single-qubit observables cos(θ_k) σz + sin(θ_k) σx at θ_k = (k−1)π/m.
pub fn chain_observables(m: usize) -> Result<PartyObservables> {
    if m < 2 {
        return Err(Error::Domain("chain_observables needs >= 2 settings".into()));
    }
    let observables = (0..m)
        .map(|k| {
            let theta = k as f64 * std::f64::consts::PI / m as f64;
            pauli_z()
                .scale(theta.cos())
                .add(&pauli_x().scale(theta.sin()))
        })
        .collect();
    PartyObservables::new(Party::Charlie, observables)
}

fn with_party(mut obs: PartyObservables, party: Party) -> PartyObservables {
    obs.party = party;
    obs
}

fn real_qubit(x: f64, z: f64) -> CMatrix {
    pauli_x().scale(x).add(&pauli_z().scale(z))
}

/// Optimal observable sets for the edge parties, and for Bob where an
/// explicit set exists. General-n bilocal scenarios fall back to the chain
/// and anticommuting-set constructors; trilocal scenarios are fixed at n=3.
pub struct ScenarioObservables {
    pub edges: Vec<PartyObservables>,
    /// Bob's observables as per-edge single-block factors, when an explicit
    /// set exists. Otherwise Bob comes from `bob_product_observables`.
    pub explicit_bob: Option<Vec<Vec<CMatrix>>>,
}

pub fn optimal_observables(spec: &ScenarioSpec) -> Result<ScenarioObservables> {
    let angles = ChainAngles::new();
    let (r, t) = (angles.r, angles.t);
    let sqrt3 = 3f64.sqrt();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    // the n=3 four-setting set at angles π/8, 3π/8, 5π/8, 7π/8
    let rt_chain = || -> Result<Vec<CMatrix>> {
        Ok(vec![
            real_qubit(r, t),
            real_qubit(t, r),
            real_qubit(t, -r),
            real_qubit(r, -t),
        ])
    };
    // the symmetric trine around σz
    let trine = || -> Vec<CMatrix> {
        vec![
            pauli_z(),
            real_qubit(sqrt3 / 2.0, 0.5),
            real_qubit(sqrt3 / 2.0, -0.5),
        ]
    };
    // the four balanced Pauli combinations (±σx ±σy +σz)/√3 and companions
    let diagonal_four = || -> Vec<CMatrix> {
        let s = 1.0 / sqrt3;
        let combo = |cx: f64, cy: f64, cz: f64| {
            pauli_x()
                .scale(cx * s)
                .add(&pauli_y().scale(cy * s))
                .add(&pauli_z().scale(cz * s))
        };
        vec![
            combo(1.0, 1.0, 1.0),
            combo(1.0, 1.0, -1.0),
            combo(1.0, -1.0, 1.0),
            combo(-1.0, 1.0, 1.0),
        ]
    };

    match (spec.kind(), spec.n()) {
        (ScenarioKind::StandardBilocal, _) => {
            let plus = real_qubit(inv_sqrt2, inv_sqrt2);
            let minus = real_qubit(-inv_sqrt2, inv_sqrt2);
            let edge = vec![plus.clone(), minus.clone()];
            Ok(ScenarioObservables {
                edges: vec![
                    PartyObservables::new(Party::Alice, edge.clone())?,
                    PartyObservables::new(Party::Charlie, edge)?,
                ],
                explicit_bob: Some(vec![
                    vec![pauli_z(), pauli_z()],
                    vec![pauli_x(), pauli_x()],
                ]),
            })
        }
        (ScenarioKind::BilocalI, 3) => Ok(ScenarioObservables {
            edges: vec![
                PartyObservables::new(Party::Alice, diagonal_four())?,
                PartyObservables::new(Party::Charlie, trine())?,
            ],
            explicit_bob: None,
        }),
        (ScenarioKind::BilocalI, _) => generated_observables(spec),
        (ScenarioKind::BilocalII, 3) => Ok(ScenarioObservables {
            edges: vec![
                PartyObservables::new(Party::Alice, rt_chain()?)?,
                PartyObservables::new(Party::Charlie, vec![pauli_x(), pauli_y(), pauli_z()])?,
            ],
            explicit_bob: None,
        }),
        (ScenarioKind::BilocalII, _) => generated_observables(spec),
        (ScenarioKind::TrilocalI, 3) => Ok(ScenarioObservables {
            edges: vec![
                PartyObservables::new(Party::Alice, rt_chain()?)?,
                PartyObservables::new(Party::Charlie, vec![pauli_x(), pauli_y(), pauli_z()])?,
                PartyObservables::new(
                    Party::Diana,
                    vec![
                        real_qubit(-t, r),
                        real_qubit(-t, -r),
                        real_qubit(-r, -t),
                        real_qubit(r, -t),
                    ],
                )?,
            ],
            explicit_bob: None,
        }),
        (ScenarioKind::TrilocalII, 3) => Ok(ScenarioObservables {
            edges: vec![
                PartyObservables::new(Party::Alice, diagonal_four())?,
                PartyObservables::new(Party::Charlie, trine())?,
                PartyObservables::new(
                    Party::Diana,
                    vec![
                        real_qubit(-sqrt3 / 2.0, 0.5),
                        real_qubit(-sqrt3 / 2.0, -0.5),
                        pauli_z().scale(-1.0),
                    ],
                )?,
            ],
            explicit_bob: None,
        }),
        (kind, n) => Err(Error::Capability(format!(
            "no explicit observable set for {kind} at n={n}"
        ))),
    }
}

/// Unnormalized combination Σ_k S(j,k)·O_k on the party block.
pub fn combination_operator(row: &[i32], observables: &PartyObservables) -> Result<CMatrix> {
    if row.len() != observables.count() {
        return Err(Error::Shape {
            context: "combination_operator",
            expected: observables.count(),
            actual: row.len(),
        });
    }
    let dim = observables.dim();
    let mut acc = CMatrix::zeros(dim);
    for (sign, o) in row.iter().zip(&observables.observables) {
        match sign {
            0 => {}
            s => acc = acc.add(&o.scale(*s as f64)),
        }
    }
    Ok(acc)
}

/// Bob's product observables: for each term j, the tensor product over edges
/// of the transposed normalized combination. Each factor must square to the
/// identity (this holds exactly at the optimum conditions).
pub fn bob_product_observables(
    scheme: &CoefficientScheme,
    edges: &[PartyObservables],
    state: &Ket,
    layout: &QubitLayout,
) -> Result<Vec<Vec<CMatrix>>> {
    bob_factors(scheme, edges, state, layout, true)
}

/// Same construction without the involution gate, for auditing third-party
/// observable sets away from the optimum.
pub fn bob_product_observables_lenient(
    scheme: &CoefficientScheme,
    edges: &[PartyObservables],
    state: &Ket,
    layout: &QubitLayout,
) -> Result<Vec<Vec<CMatrix>>> {
    bob_factors(scheme, edges, state, layout, false)
}

fn bob_factors(
    scheme: &CoefficientScheme,
    edges: &[PartyObservables],
    state: &Ket,
    layout: &QubitLayout,
    strict: bool,
) -> Result<Vec<Vec<CMatrix>>> {
    let spec = scheme.spec();
    let terms = spec.terms();
    let mut result: Vec<Vec<CMatrix>> = Vec::with_capacity(terms);
    for j in 0..terms {
        let mut factors = Vec::with_capacity(edges.len());
        for obs in edges {
            let row = scheme.party(obs.party).row(j);
            let combo = combination_operator(row, obs)?;
            let block = layout
                .find(obs.party.label(), "edge")
                .expect("layout holds every edge party");
            let embedded = crate::quantum::embed(&combo, layout, block)?;
            let omega = state.action_norm(&embedded)?;
            if omega < 1e-12 {
                return Err(Error::Degenerate(format!(
                    "combination {j} of party {} annihilates the state",
                    obs.party
                )));
            }
            let normalized = combo.scale(1.0 / omega);
            let factor = normalized.transpose();
            if strict {
                let dev = factor
                    .matmul(&factor)
                    .max_abs_diff(&CMatrix::identity(factor.dim()));
                if dev > 1e-8 {
                    return Err(Error::Contract(format!(
                        "Bob factor for term {j}, edge {} deviates from an involution by {dev:.3e}",
                        obs.party
                    )));
                }
            }
            factors.push(factor);
        }
        result.push(factors);
    }
    Ok(result)
}

/// Full-space observable from Bob's per-edge factors (identity on edge blocks).
pub fn bob_full_observable(
    factors: &[CMatrix],
    layout: &QubitLayout,
    spec: &ScenarioSpec,
) -> Result<CMatrix> {
    let mut assignments: Vec<Option<&CMatrix>> = vec![None; layout.blocks().len()];
    for (edge, factor) in spec.edges().iter().zip(factors) {
        let block = layout
            .find(Party::Bob.label(), &format!("with-{}", edge.party.label()))
            .expect("layout holds Bob's block per edge");
        assignments[block] = Some(factor);
    }
    crate::quantum::assemble(layout, &assignments)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.matmul(b).add(&b.matmul(a))
}
