//! Analytic single-excitation dynamics from `|e, 0…0⟩`.
//!
//! Only the symmetric ("bright") field combination couples to the atom, so
//! the motion is a two-level Rabi oscillation between `|e, 0…0⟩` and
//! `Σ εᵢ|g, 1ᵢ⟩ / Ω` at frequency `Ω = √(Σεᵢ²)`.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use super::hamiltonian::{Frame, ModelParams};
use crate::error::{Error, Result};
use crate::fock_space::{AtomLevel, Basis, BasisState, StateVector};

/// Identical resonant couplings: `cos(√N εt)` on `|e,0…0⟩` and
/// `−i sin(√N εt)/√N` on each `|g,1ᵢ⟩`, on the single-excitation basis.
pub fn evolve_closed_form(params: &ModelParams, t: f64) -> Result<StateVector> {
    evolve_closed_form_in(params, &Basis::single_excitation(params.n_modes())?, t)
}

/// As [`evolve_closed_form`], placed on any basis that contains the
/// single-excitation states.
pub fn evolve_closed_form_in(params: &ModelParams, basis: &Arc<Basis>, t: f64) -> Result<StateVector> {
    if !params.is_resonant_identical() {
        return Err(Error::NotResonant(
            "closed form needs equal couplings and ωᵢ = ω₀; use the general closed form or the numeric propagator".into(),
        ));
    }
    evolve_closed_form_general_in(params, basis, t)
}

/// Resonant modes with arbitrary positive couplings: `cos(Ωt)` on
/// `|e,0…0⟩` and `−i(εᵢ/Ω) sin(Ωt)` on `|g,1ᵢ⟩`, `Ω = √(Σεᵢ²)`.
pub fn evolve_closed_form_general(params: &ModelParams, t: f64) -> Result<StateVector> {
    evolve_closed_form_general_in(params, &Basis::single_excitation(params.n_modes())?, t)
}

pub fn evolve_closed_form_general_in(params: &ModelParams, basis: &Arc<Basis>, t: f64) -> Result<StateVector> {
    if !params.is_resonant() {
        return Err(Error::NotResonant("detuned modes have no closed form here; use the numeric propagator".into()));
    }
    if params.frame() != Frame::Interaction {
        return Err(Error::InvalidParameter("closed-form evolution is expressed in the interaction frame".into()));
    }
    if basis.n_modes() != params.n_modes() {
        return Err(Error::BasisMismatch(format!(
            "parameters describe {} modes, basis has {}",
            params.n_modes(),
            basis.n_modes()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    let n = params.n_modes();
    let omega = params.collective_coupling();
    let (s, c) = (omega * t).sin_cos();
    let mut amps = DVector::zeros(basis.dim());
    amps[basis.require(&BasisState::vacuum(AtomLevel::Excited, n))?] = Complex64::new(c, 0.0);
    for (i, &g) in params.couplings().iter().enumerate() {
        let k = basis.require(&BasisState::single_photon(AtomLevel::Ground, n, i))?;
        amps[k] = Complex64::new(0.0, -g / omega * s);
    }
    Ok(StateVector::from_parts_unchecked(basis.clone(), amps))
}
