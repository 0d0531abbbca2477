//! Target states, overlaps, reduced density matrices and two-qubit concurrence.
//!
//! Subsystems are indexed with the atom at `0` and cavity modes at `1..=N`.
//! Reduced matrices use a product basis over the kept subsystems in
//! ascending index order, first subsystem most significant; the atom's local
//! index is 0 for `g` and 1 for `e`, a mode's local index is its photon number.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock_space::{inner_product, AtomLevel, Basis, BasisState, StateVector};

/// Subsystem index of the atom.
pub const ATOM: usize = 0;

pub const DENSITY_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted in a density matrix.
pub const NEGATIVITY_TOLERANCE: f64 = -1e-10;
/// Eigenvalues below this are rounding noise in the concurrence routine.
const EIGEN_FLOOR: f64 = 1e-14;
const MAX_REDUCED_DIM: usize = 4096;

/// Positive semidefinite, unit-trace matrix over a set of retained subsystems.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    labels: Vec<usize>,
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(labels: Vec<usize>, dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(Error::InvalidParameter("one local dimension per label is required".into()));
        }
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "{}x{} matrix for local dimensions {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = DensityMatrix { labels, dims, matrix };
        rho.check()?;
        Ok(rho)
    }

    fn check(&self) -> Result<()> {
        if self.matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonPhysical("non-finite entries".into()));
        }
        let herm = (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::NonPhysical(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(Error::NonPhysical(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < NEGATIVITY_TOLERANCE {
            return Err(Error::NonPhysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `|ψ⟩⟨ψ|` for a vector already expressed in the product basis of `dims`.
    pub fn pure(labels: Vec<usize>, dims: Vec<usize>, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero vector".into()));
        }
        let v = psi.unscale(norm);
        DensityMatrix::new(labels, dims, &v * v.adjoint())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// tr ρ².
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).diagonal().iter().map(|z| z.re).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev: Vec<f64> = hermitian_eigen(&self.matrix)?.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        DensityMatrix::new(self.labels.clone(), self.dims.clone(), u * &self.matrix * u.adjoint())
    }

    /// `{"labels": [...], "matrix": [[[re, im], ...], ...]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump<'a> {
            labels: &'a [usize],
            matrix: Vec<Vec<[f64; 2]>>,
        }
        let matrix = self
            .matrix
            .row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        serde_json::to_value(Dump { labels: &self.labels, matrix }).expect("density matrix serializes")
    }
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
    let sym = (m + m.adjoint()).unscale(2.0);
    SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("Hermitian eigensolver did not converge".into()))
}

fn require_modes(basis: &Basis, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("target states need at least one mode".into()));
    }
    if n > basis.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "basis has {} modes, target needs {n}",
            basis.n_modes()
        )));
    }
    Ok(())
}

/// `(|10…0⟩ + |01…0⟩ + … + |0…01⟩)/√n ⊗ |g⟩` over the first `n` modes,
/// real positive amplitudes.
pub fn w_state(n: usize, basis: &Arc<Basis>) -> Result<StateVector> {
    require_modes(basis, n)?;
    let modes = basis.n_modes();
    let singles: Vec<BasisState> =
        (0..n).map(|i| BasisState::single_photon(AtomLevel::Ground, modes, i)).collect();
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    StateVector::superposition(basis.clone(), singles.iter().map(|s| (s, amp)))
}

/// `(|0…0⟩ + |1…1⟩)/√2 ⊗ |g⟩` over the first `n` modes.
pub fn ghz_state(n: usize, basis: &Arc<Basis>) -> Result<StateVector> {
    require_modes(basis, n)?;
    if let Some(cap) = basis.excitation_cap() {
        if (cap as usize) < n {
            return Err(Error::InvalidParameter(format!("excitation cap {cap} cannot hold {n} photons")));
        }
    }
    let modes = basis.n_modes();
    let vacuum = BasisState::vacuum(AtomLevel::Ground, modes);
    let mut full = vacuum.clone();
    full.occupations[..n].iter_mut().for_each(|x| *x = 1);
    let amp = Complex64::new(0.5f64.sqrt(), 0.0);
    StateVector::superposition(basis.clone(), [(&vacuum, amp), (&full, amp)])
}

/// `|⟨psi|phi⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(inner_product(psi, phi)?.norm_sqr().clamp(0.0, 1.0))
}

/// Probability of finding the atom in `|g⟩` and the field in `|W_n⟩`.
pub fn success_probability(psi: &StateVector, n: usize) -> Result<f64> {
    Ok(w_overlap(psi, n, AtomLevel::Ground)?.norm_sqr().clamp(0.0, 1.0))
}

/// `⟨W_n|ρ_field|W_n⟩`: W fidelity of the field with the atom traced out.
/// Never smaller than [`success_probability`].
pub fn field_w_fidelity(psi: &StateVector, n: usize) -> Result<f64> {
    let g = w_overlap(psi, n, AtomLevel::Ground)?.norm_sqr();
    let e = w_overlap(psi, n, AtomLevel::Excited)?.norm_sqr();
    Ok((g + e).clamp(0.0, 1.0))
}

fn w_overlap(psi: &StateVector, n: usize, atom: AtomLevel) -> Result<Complex64> {
    let basis = psi.basis();
    require_modes(basis, n)?;
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|i| psi.amplitude(&BasisState::single_photon(atom, basis.n_modes(), i)) * scale)
        .sum())
}

fn local_dim(basis: &Basis, subsystem: usize) -> usize {
    if subsystem == ATOM {
        2
    } else {
        basis.n_max() as usize + 1
    }
}

fn local_index(state: &BasisState, subsystem: usize) -> usize {
    if subsystem == ATOM {
        state.atom.excitation() as usize
    } else {
        state.occupations[subsystem - 1] as usize
    }
}

/// Reduced density matrix of `psi` on the subsystems in `keep`.
pub fn partial_trace(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let basis = psi.basis();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep set is empty".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidParameter(format!("duplicate subsystem in {keep:?}")));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k > basis.n_modes()) {
        return Err(Error::InvalidParameter(format!(
            "subsystem {bad} out of range (atom 0, modes 1..={})",
            basis.n_modes()
        )));
    }
    let dims: Vec<usize> = kept.iter().map(|&k| local_dim(basis, k)).collect();
    let dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if dim > MAX_REDUCED_DIM {
        return Err(Error::TruncationTooLarge { dim, limit: MAX_REDUCED_DIM });
    }
    let traced: Vec<usize> = (0..=basis.n_modes()).filter(|k| !kept.contains(k)).collect();

    // Group amplitudes by the configuration of the traced-out subsystems;
    // each group contributes one outer product.
    let mut groups: BTreeMap<Vec<usize>, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (state, &amp) in basis.states().iter().zip(psi.amplitudes().iter()) {
        if amp.re == 0.0 && amp.im == 0.0 {
            continue;
        }
        let key: Vec<usize> = traced.iter().map(|&k| local_index(state, k)).collect();
        let row = kept
            .iter()
            .zip(&dims)
            .fold(0usize, |acc, (&k, &d)| acc * d + local_index(state, k));
        groups.entry(key).or_default().push((row, amp));
    }
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for members in groups.values() {
        for &(r, a) in members {
            for &(c, b) in members {
                rho[(r, c)] += a * b.conj();
            }
        }
    }
    DensityMatrix::new(kept, dims, rho)
}

/// `σ_y ⊗ σ_y` in the two-qubit computational basis.
fn sigma_yy() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 3)] = Complex64::new(-1.0, 0.0);
    m[(1, 2)] = Complex64::new(1.0, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m[(3, 0)] = Complex64::new(-1.0, 0.0);
    m
}

/// Wootters concurrence of a two-qubit state.
///
/// The λᵢ are taken from the Hermitian matrix `√ρ ρ̃ √ρ`, which shares its
/// spectrum with `ρρ̃`, where `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.local_dims() != [2, 2] {
        return Err(Error::InvalidParameter(format!(
            "concurrence needs two qubits, got local dimensions {:?}",
            rho.local_dims()
        )));
    }
    let eig = hermitian_eigen(rho.matrix())?;
    let mut root = eig.eigenvectors.clone();
    for (k, mut col) in root.column_iter_mut().enumerate() {
        let p = eig.eigenvalues[k];
        col *= Complex64::new(if p > EIGEN_FLOOR { p.sqrt() } else { 0.0 }, 0.0);
    }
    let sqrt_rho = &root * eig.eigenvectors.adjoint();
    let yy = sigma_yy();
    let flipped = &yy * rho.matrix().conjugate() * &yy;
    let m = &sqrt_rho * flipped * &sqrt_rho;
    let mut lambdas: Vec<f64> = hermitian_eigen(&m)?
        .eigenvalues
        .iter()
        .map(|&x| if x > EIGEN_FLOOR { x.sqrt() } else { 0.0 })
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.clamp(0.0, 1.0))
}

/// Concurrence between modes `i` and `j` (1-based) with everything else traced out.
pub fn pair_concurrence(psi: &StateVector, i: usize, j: usize) -> Result<f64> {
    if i == ATOM || j == ATOM {
        return Err(Error::InvalidParameter("pair indices refer to modes, which start at 1".into()));
    }
    concurrence(&partial_trace(psi, &[i, j])?)
}
