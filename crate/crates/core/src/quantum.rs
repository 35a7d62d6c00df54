//! Dense complex linear algebra over ordered qubit blocks: tensor products,
//! embeddings, Bell and Werner state constructors, expectations and action norms.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension any constructor will allocate.
pub const MAX_DIM: usize = 1 << 14;

/// Hermiticity tolerance for operators entering expectation values.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Norm / trace tolerance for state constructors.
pub const NORM_TOL: f64 = 1e-12;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major dense storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C_ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C_ONE;
        }
        m
    }

    /// Build from rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            data.extend_from_slice(row);
        }
        CMatrix { dim, data }
    }

    /// Real matrix convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let converted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&converted)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, factor: f64) -> CMatrix {
        let data = self.data.iter().map(|a| a * factor).collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale_complex(&self, factor: Complex64) -> CMatrix {
        let data = self.data.iter().map(|a| a * factor).collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C_ZERO {
                    continue;
                }
                let row = &other.data[k * d..(k + 1) * d];
                let target = &mut out.data[i * d..(i + 1) * d];
                for (t, b) in target.iter_mut().zip(row) {
                    *t += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    /// Plain (computational basis) transpose, no conjugation.
    pub fn transpose(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim;
        for i in 0..d {
            for j in i..d {
                if (self.data[i * d + j] - self.data[j * d + i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix-vector product.
    pub fn apply(&self, vector: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(vector.len(), self.dim, "vector length must match dim");
        let d = self.dim;
        let mut out = vec![C_ZERO; d];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = C_ZERO;
            let row = &self.data[i * d..(i + 1) * d];
            for (a, v) in row.iter().zip(vector) {
                acc += a * v;
            }
            *slot = acc;
        }
        out
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi sweeps, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let mut a = self.clone();
        let scale = self.max_abs().max(1.0);
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..d {
                for q in (p + 1)..d {
                    off = off.max(a.get(p, q).norm());
                }
            }
            if off < 1e-14 * scale {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    jacobi_rotate(&mut a, p, q);
                }
            }
        }
        let mut eigs: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }
}

/// One complex Jacobi rotation zeroing the (p,q) off-diagonal element.
fn jacobi_rotate(a: &mut CMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag;
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let zeta = (aqq - app) / (2.0 * mag);
    // the small-magnitude root of t² − 2ζt − 1 = 0
    let t = if zeta >= 0.0 {
        -1.0 / (zeta + (zeta * zeta + 1.0).sqrt())
    } else {
        1.0 / (-zeta + (zeta * zeta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let d = a.dim();
    // columns: A <- A V with V_pp = c, V_pq = -s·phase, V_qp = s·conj(phase), V_qq = c
    for r in 0..d {
        let arp = a.get(r, p);
        let arq = a.get(r, q);
        a.set(r, p, arp * c + arq * s * phase.conj());
        a.set(r, q, -arp * s * phase + arq * c);
    }
    // rows: A <- V† A
    for r in 0..d {
        let apr = a.get(p, r);
        let aqr = a.get(q, r);
        a.set(p, r, apr * c + aqr * s * phase);
        a.set(q, r, -apr * s * phase.conj() + aqr * c);
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[
        vec![C_ZERO, C_ONE],
        vec![C_ONE, C_ZERO],
    ])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[
        vec![C_ZERO, Complex64::new(0.0, -1.0)],
        vec![Complex64::new(0.0, 1.0), C_ZERO],
    ])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows(&[
        vec![C_ONE, C_ZERO],
        vec![C_ZERO, Complex64::new(-1.0, 0.0)],
    ])
}

/// Single-qubit dichotomic observable cosθ σz + sinθ (cosφ σx + sinφ σy).
pub fn bloch_observable(theta: f64, phi: f64) -> CMatrix {
    pauli_z()
        .scale(theta.cos())
        .add(&pauli_x().scale(theta.sin() * phi.cos()))
        .add(&pauli_y().scale(theta.sin() * phi.sin()))
}

/// Kronecker product. Entry ((i·db+k),(j·db+l)) = a(i,j)·b(k,l).
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let dim = a.dim() as u128 * b.dim() as u128;
    if dim > MAX_DIM as u128 {
        return Err(Error::Capacity {
            context: "kron",
            requested: dim,
            limit: MAX_DIM as u128,
        });
    }
    let (da, db) = (a.dim(), b.dim());
    let d = da * db;
    let mut out = CMatrix::zeros(d);
    for i in 0..da {
        for j in 0..da {
            let aij = a.get(i, j);
            if aij == C_ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out.set(i * db + k, j * db + l, aij * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product over a sequence of factors, left to right.
pub fn kron_all(factors: &[&CMatrix]) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Ordered qubit blocks, one per (party, role) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitLayout {
    blocks: Vec<LayoutBlock>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutBlock {
    pub party: String,
    pub role: String,
    pub qubits: usize,
}

impl QubitLayout {
    pub fn new(blocks: Vec<LayoutBlock>) -> Result<Self> {
        if blocks.iter().any(|b| b.qubits == 0) {
            return Err(Error::Domain("layout blocks need at least one qubit".into()));
        }
        let total: usize = blocks.iter().map(|b| b.qubits).sum();
        if 1usize << total > MAX_DIM {
            return Err(Error::Capacity {
                context: "layout",
                requested: 1u128 << total,
                limit: MAX_DIM as u128,
            });
        }
        Ok(QubitLayout { blocks })
    }

    pub fn blocks(&self) -> &[LayoutBlock] {
        &self.blocks
    }

    pub fn total_qubits(&self) -> usize {
        self.blocks.iter().map(|b| b.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn block_dim(&self, block: usize) -> usize {
        1 << self.blocks[block].qubits
    }

    /// Index of the block carrying the given (party, role) pair, if present.
    pub fn find(&self, party: &str, role: &str) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.party == party && b.role == role)
    }
}

/// Operator acting as `op` on one block of the layout and identity elsewhere.
pub fn embed(op: &CMatrix, layout: &QubitLayout, block: usize) -> Result<CMatrix> {
    let expected = layout.block_dim(block);
    if op.dim() != expected {
        return Err(Error::Shape {
            context: "embed",
            expected,
            actual: op.dim(),
        });
    }
    let before: usize = layout.blocks()[..block].iter().map(|b| b.qubits).sum();
    let after: usize = layout.blocks()[block + 1..].iter().map(|b| b.qubits).sum();
    let left = CMatrix::identity(1 << before);
    let right = CMatrix::identity(1 << after);
    kron_all(&[&left, op, &right])
}

/// Kronecker product over blocks, with identity on blocks left unassigned.
pub fn assemble(layout: &QubitLayout, assignments: &[Option<&CMatrix>]) -> Result<CMatrix> {
    assert_eq!(assignments.len(), layout.blocks().len());
    let identities: Vec<CMatrix> = layout
        .blocks()
        .iter()
        .map(|b| CMatrix::identity(1 << b.qubits))
        .collect();
    let factors: Vec<&CMatrix> = assignments
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            Some(op) => {
                assert_eq!(op.dim(), layout.block_dim(i), "block operator dim mismatch");
                *op
            }
            None => &identities[i],
        })
        .collect();
    kron_all(&factors)
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!(
                "ket norm {norm} deviates from 1 beyond {NORM_TOL}"
            )));
        }
        Ok(Ket { amplitudes })
    }

    /// Computational basis state |index⟩ in the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![C_ZERO; dim];
        amplitudes[index] = C_ONE;
        Ket { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ⟨ψ|O|ψ⟩ for Hermitian O; errors on shape or Hermiticity violations.
    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        check_expectation_input(self.dim(), op)?;
        let applied = op.apply(&self.amplitudes);
        let value: Complex64 = self
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum();
        discard_imaginary(value)
    }

    /// ‖O|ψ⟩‖₂.
    pub fn action_norm(&self, op: &CMatrix) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::Shape {
                context: "action_norm",
                expected: self.dim(),
                actual: op.dim(),
            });
        }
        let applied = op.apply(&self.amplitudes);
        Ok(applied.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
    }

    /// Rank-one projector |ψ⟩⟨ψ|.
    pub fn projector(&self) -> DensityOp {
        let d = self.dim();
        let mut m = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amplitudes[i] * self.amplitudes[j].conj());
            }
        }
        DensityOp { matrix: m }
    }
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    matrix: CMatrix,
}

impl DensityOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_hermitian(NORM_TOL) {
            return Err(Error::Contract("density operator is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::Contract(format!(
                "density operator trace {tr} deviates from 1"
            )));
        }
        let min_eig = matrix
            .hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -1e-10 {
            return Err(Error::Contract(format!(
                "density operator has negative eigenvalue {min_eig}"
            )));
        }
        Ok(DensityOp { matrix })
    }

    /// Constructor for states valid by construction; validates cheaply in debug builds.
    pub(crate) fn trusted(matrix: CMatrix) -> Self {
        debug_assert!(matrix.is_hermitian(1e-9));
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-9);
        DensityOp { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.hermitian_eigenvalues()
    }

    /// Tr(ρO) for Hermitian O.
    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        check_expectation_input(self.dim(), op)?;
        let d = self.dim();
        let mut value = C_ZERO;
        for i in 0..d {
            for j in 0..d {
                value += self.matrix.get(i, j) * op.get(j, i);
            }
        }
        discard_imaginary(value)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }
}

fn check_expectation_input(state_dim: usize, op: &CMatrix) -> Result<()> {
    if op.dim() != state_dim {
        return Err(Error::Shape {
            context: "expectation",
            expected: state_dim,
            actual: op.dim(),
        });
    }
    if !op.is_hermitian(HERMITICITY_TOL) {
        return Err(Error::Contract(
            "expectation of a non-Hermitian operator".into(),
        ));
    }
    Ok(())
}

fn discard_imaginary(value: Complex64) -> Result<f64> {
    if value.im.abs() > HERMITICITY_TOL {
        return Err(Error::Contract(format!(
            "expectation has imaginary residue {}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Tensor power of maximally entangled pairs (|00⟩+|11⟩)/√2, one per pair,
/// with qubit i of the left block paired with qubit i of the right block.
pub fn bell_pairs(n_pairs: usize) -> Result<Ket> {
    if n_pairs == 0 {
        return Err(Error::Domain("bell_pairs needs at least one pair".into()));
    }
    let block = 1usize << n_pairs;
    let dim = (block as u128) * (block as u128);
    if dim > MAX_DIM as u128 {
        return Err(Error::Capacity {
            context: "bell_pairs",
            requested: dim,
            limit: MAX_DIM as u128,
        });
    }
    let mut amplitudes = vec![C_ZERO; block * block];
    let amp = 1.0 / (block as f64).sqrt();
    for k in 0..block {
        amplitudes[k * block + k] = Complex64::new(amp, 0.0);
    }
    Ket::new(amplitudes)
}

/// Two-qubit Werner state v·|Φ⁺⟩⟨Φ⁺| + (1−v)·I/4.
pub fn werner(v: f64) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("visibility {v} outside [0,1]")));
    }
    let pure = bell_pairs(1)?.projector();
    let mut m = CMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            let mut entry = pure.matrix().get(i, j) * v;
            if i == j {
                entry += Complex64::new((1.0 - v) / 4.0, 0.0);
            }
            m.set(i, j, entry);
        }
    }
    Ok(DensityOp::trusted(m))
}

/// N-fold tensor power of the two-qubit Werner state, reordered so the party
/// qubits form one contiguous block and the partner qubits the other, matching
/// the `bell_pairs` pairing convention.
pub fn werner_pairs(n_pairs: usize, v: f64) -> Result<DensityOp> {
    let w = werner(v)?;
    if n_pairs == 1 {
        return Ok(w);
    }
    let block = 1usize << n_pairs;
    let dim = block * block;
    if (dim as u128) > MAX_DIM as u128 {
        return Err(Error::Capacity {
            context: "werner_pairs",
            requested: dim as u128,
            limit: MAX_DIM as u128,
        });
    }
    let mut m = CMatrix::zeros(dim);
    for a in 0..block {
        for b in 0..block {
            for a2 in 0..block {
                for b2 in 0..block {
                    let mut entry = C_ONE;
                    for i in 0..n_pairs {
                        let shift = n_pairs - 1 - i;
                        let row = ((a >> shift) & 1) * 2 + ((b >> shift) & 1);
                        let col = ((a2 >> shift) & 1) * 2 + ((b2 >> shift) & 1);
                        entry *= w.matrix().get(row, col);
                        if entry == C_ZERO {
                            break;
                        }
                    }
                    m.set(a * block + b, a2 * block + b2, entry);
                }
            }
        }
    }
    Ok(DensityOp::trusted(m))
}
