use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_space::{same_basis, AtomLevel, Basis, BasisState, StateVector};

/// Maximum elementwise deviation `|H_ij − conj(H_ji)|` accepted as Hermitian.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used when deciding resonance and identical couplings.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    /// Frame rotating at the atomic frequency ω₀ for both atom and fields.
    #[default]
    Interaction,
}

/// Physical parameters of the atom–multimode Hamiltonian (ħ = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega_atom: f64,
    omega_modes: Vec<f64>,
    couplings: Vec<f64>,
    frame: Frame,
}

impl ModelParams {
    pub fn new(omega_atom: f64, omega_modes: Vec<f64>, couplings: Vec<f64>, frame: Frame) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidParameter("at least one mode is required".into()));
        }
        if omega_modes.len() != couplings.len() {
            return Err(Error::InvalidParameter(format!(
                "{} mode frequencies for {} couplings",
                omega_modes.len(),
                couplings.len()
            )));
        }
        if !omega_atom.is_finite() || omega_modes.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("frequencies must be finite".into()));
        }
        if couplings.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(Error::InvalidParameter("couplings must be finite and positive".into()));
        }
        Ok(ModelParams { omega_atom, omega_modes, couplings, frame })
    }

    /// `n` identical resonant modes with coupling `epsilon`, interaction frame.
    pub fn resonant(n_modes: usize, epsilon: f64) -> Result<Self> {
        ModelParams::new(0.0, vec![0.0; n_modes], vec![epsilon; n_modes], Frame::Interaction)
    }

    /// Resonant modes with individual couplings, interaction frame.
    pub fn resonant_with_couplings(couplings: Vec<f64>) -> Result<Self> {
        ModelParams::new(0.0, vec![0.0; couplings.len()], couplings, Frame::Interaction)
    }

    /// Identical couplings, every mode detuned by `detuning` from the atom.
    pub fn detuned(n_modes: usize, epsilon: f64, omega_atom: f64, detuning: f64) -> Result<Self> {
        ModelParams::new(
            omega_atom,
            vec![omega_atom + detuning; n_modes],
            vec![epsilon; n_modes],
            Frame::Interaction,
        )
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Sets ω₀ and moves every mode frequency by the same amount, keeping detunings.
    pub fn with_omega_atom(mut self, omega_atom: f64) -> Self {
        let shift = omega_atom - self.omega_atom;
        self.omega_atom = omega_atom;
        self.omega_modes.iter_mut().for_each(|w| *w += shift);
        self
    }

    pub fn n_modes(&self) -> usize {
        self.couplings.len()
    }

    pub fn omega_atom(&self) -> f64 {
        self.omega_atom
    }

    pub fn omega_modes(&self) -> &[f64] {
        &self.omega_modes
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// √(Σ εᵢ²), the Rabi frequency of the bright mode.
    pub fn collective_coupling(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Every ωᵢ equals ω₀.
    pub fn is_resonant(&self) -> bool {
        let g_max = self.couplings.iter().cloned().fold(0.0, f64::max);
        self.omega_modes.iter().all(|&w| {
            let scale = w.abs().max(self.omega_atom.abs()).max(g_max);
            (w - self.omega_atom).abs() <= RESONANCE_TOLERANCE * scale
        })
    }

    /// Every ωᵢ equals ω₀ and every εᵢ equals ε₁.
    pub fn is_resonant_identical(&self) -> bool {
        let g0 = self.couplings[0];
        self.is_resonant()
            && self
                .couplings
                .iter()
                .all(|&g| (g - g0).abs() <= RESONANCE_TOLERANCE * g.max(g0))
    }
}

/// Dense Hermitian matrix on a truncated basis.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    basis: Arc<Basis>,
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    pub fn new(basis: Arc<Basis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = HermitianOperator::from_matrix_unchecked(basis, matrix)?;
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::NotHermitian(defect));
        }
        Ok(op)
    }

    /// Checks only the shape. Used to probe the validation suite with
    /// deliberately broken operators.
    pub fn from_matrix_unchecked(basis: Arc<Basis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "{}x{} matrix for basis dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        Ok(HermitianOperator { basis, matrix })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Element by basis labels.
    pub fn element(&self, row: &BasisState, col: &BasisState) -> Result<Complex64> {
        Ok(self.matrix[(self.basis.require(row)?, self.basis.require(col)?)])
    }

    /// max |H_ij − conj(H_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry modulus of `[self, other]`.
    pub fn commutator_max(&self, other: &HermitianOperator) -> Result<f64> {
        same_basis(&self.basis, &other.basis)?;
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(c.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// ⟨ψ|H|ψ⟩ (real for Hermitian H).
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        same_basis(&self.basis, psi.basis())?;
        Ok(psi.amplitudes().dotc(&(&self.matrix * psi.amplitudes())).re)
    }

    /// Debug dump: `{"dim": n, "entries": [[row, col, re, im], ...]}`, nonzeros in row-major order.
    pub fn to_json_value(&self) -> serde_json::Value {
        let n = self.dim();
        let mut entries = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let z = self.matrix[(r, c)];
                if z.re != 0.0 || z.im != 0.0 {
                    entries.push(serde_json::json!([r, c, z.re, z.im]));
                }
            }
        }
        serde_json::json!({ "dim": n, "entries": entries })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

/// Builds `H = ω₀s_z + Σωᵢaᵢ⁺aᵢ + Σεᵢ(aᵢs₊ + aᵢ⁺s₋)` on `basis`.
///
/// In the interaction frame the free part is measured relative to ω₀,
/// leaving `Σ(ωᵢ − ω₀)aᵢ⁺aᵢ` plus the coupling; for resonant modes only
/// the coupling survives.
pub fn build_hamiltonian(params: &ModelParams, basis: &Arc<Basis>) -> Result<HermitianOperator> {
    if params.n_modes() != basis.n_modes() {
        return Err(Error::BasisMismatch(format!(
            "parameters describe {} modes, basis has {}",
            params.n_modes(),
            basis.n_modes()
        )));
    }
    let dim = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, state) in basis.states().iter().enumerate() {
        let mut diag = match params.frame {
            Frame::Lab => match state.atom {
                AtomLevel::Excited => 0.5 * params.omega_atom,
                AtomLevel::Ground => -0.5 * params.omega_atom,
            },
            Frame::Interaction => 0.0,
        };
        for (i, &n) in state.occupations.iter().enumerate() {
            let w = match params.frame {
                Frame::Lab => params.omega_modes[i],
                Frame::Interaction => params.omega_modes[i] - params.omega_atom,
            };
            diag += w * n as f64;
        }
        h[(k, k)] = Complex64::new(diag, 0.0);

        // aᵢ s₊ |g, nᵢ⟩ = √nᵢ |e, nᵢ − 1⟩ and its Hermitian conjugate.
        if state.atom == AtomLevel::Ground {
            for (i, &n) in state.occupations.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let mut target = state.clone();
                target.atom = AtomLevel::Excited;
                target.occupations[i] -= 1;
                if let Some(t) = basis.index_of(&target) {
                    let g = Complex64::new(params.couplings[i] * (n as f64).sqrt(), 0.0);
                    h[(t, k)] += g;
                    h[(k, t)] += g;
                }
            }
        }
    }
    HermitianOperator::new(basis.clone(), h)
}

/// Diagonal `N̂ = |e⟩⟨e| + Σaᵢ⁺aᵢ`.
pub fn excitation_operator(basis: &Arc<Basis>) -> HermitianOperator {
    let diag = DVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|s| Complex64::new(s.excitation() as f64, 0.0)),
    );
    HermitianOperator { basis: basis.clone(), matrix: DMatrix::from_diagonal(&diag) }
}

/// Maps an interaction-frame state at time `t` to the lab frame by applying
/// `exp(−iω₀(s_z + Σaᵢ⁺aᵢ)t)`, which commutes with the interaction-frame
/// Hamiltonian.
pub fn interaction_to_lab(psi: &StateVector, omega_atom: f64, t: f64) -> StateVector {
    let amps = DVector::from_iterator(
        psi.basis().dim(),
        psi.basis().states().iter().zip(psi.amplitudes().iter()).map(|(s, a)| {
            let m = s.excitation() as f64 - 0.5;
            a * Complex64::from_polar(1.0, -omega_atom * m * t)
        }),
    );
    StateVector::from_parts_unchecked(psi.basis().clone(), amps)
}
