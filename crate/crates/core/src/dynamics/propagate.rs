//! Dense numerical propagation `ψ(t) = exp(−iHt)ψ(0)`.
//!
//! Two independent routes are provided. The default diagonalizes the
//! Hermitian matrix once (`H = V diag(λ) V†`) and reuses the eigenbasis for
//! every time; the alternative is a degree-13 Padé approximant with scaling
//! and squaring applied to the general complex matrix `−iHt`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::hamiltonian::HermitianOperator;
use crate::error::{Error, Result};
use crate::fock_space::{same_basis, StateVector};

/// Largest norm drift tolerated before renormalizing; beyond it the
/// propagation is reported as defective.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PropagatorMethod {
    #[default]
    Spectral,
    PadeScalingSquaring,
}

#[derive(Clone, Debug)]
enum Kernel {
    Spectral { energies: DVector<f64>, vectors: DMatrix<Complex64> },
    Pade { hamiltonian: DMatrix<Complex64> },
}

/// Time-evolution operator factory for a fixed Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator {
    op: HermitianOperator,
    kernel: Kernel,
}

impl Propagator {
    pub fn new(h: &HermitianOperator, method: PropagatorMethod) -> Result<Self> {
        let kernel = match method {
            PropagatorMethod::Spectral => {
                let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 0)
                    .ok_or_else(|| Error::Decomposition("Hermitian eigensolver did not converge".into()))?;
                Kernel::Spectral { energies: eig.eigenvalues, vectors: eig.eigenvectors }
            }
            PropagatorMethod::PadeScalingSquaring => Kernel::Pade { hamiltonian: h.matrix().clone() },
        };
        Ok(Propagator { op: h.clone(), kernel })
    }

    pub fn spectral(h: &HermitianOperator) -> Result<Self> {
        Propagator::new(h, PropagatorMethod::Spectral)
    }

    pub fn method(&self) -> PropagatorMethod {
        match self.kernel {
            Kernel::Spectral { .. } => PropagatorMethod::Spectral,
            Kernel::Pade { .. } => PropagatorMethod::PadeScalingSquaring,
        }
    }

    /// Eigenvalues of H, available for the spectral route.
    pub fn energies(&self) -> Option<&DVector<f64>> {
        match &self.kernel {
            Kernel::Spectral { energies, .. } => Some(energies),
            Kernel::Pade { .. } => None,
        }
    }

    /// The full matrix `exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> Result<DMatrix<Complex64>> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(DMatrix::identity(self.op.dim(), self.op.dim()));
        }
        let u = match &self.kernel {
            Kernel::Spectral { energies, vectors } => {
                let mut scaled = vectors.clone();
                for (k, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= Complex64::from_polar(1.0, -energies[k] * t);
                }
                scaled * vectors.adjoint()
            }
            Kernel::Pade { hamiltonian } => expm(&(hamiltonian * Complex64::new(0.0, -t))),
        };
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("propagator matrix".into()));
        }
        Ok(u)
    }

    /// Evolves `psi0` by time `t`, renormalizing small drift and rejecting large drift.
    pub fn apply(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        same_basis(self.op.basis(), psi0.basis())?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(psi0.clone());
        }
        let evolved = match &self.kernel {
            Kernel::Spectral { energies, vectors } => {
                let mut c = vectors.ad_mul(psi0.amplitudes());
                for (k, ck) in c.iter_mut().enumerate() {
                    *ck *= Complex64::from_polar(1.0, -energies[k] * t);
                }
                vectors * c
            }
            Kernel::Pade { .. } => self.unitary(t)? * psi0.amplitudes(),
        };
        finish(psi0, evolved)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be finite, got {t}")))
    }
}

fn finish(psi0: &StateVector, amps: DVector<Complex64>) -> Result<StateVector> {
    if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("evolved amplitudes".into()));
    }
    let norm = amps.norm();
    let drift = (norm - 1.0).abs();
    if drift > NORM_DRIFT_TOLERANCE {
        return Err(Error::NormDrift { drift, tolerance: NORM_DRIFT_TOLERANCE });
    }
    Ok(StateVector::from_parts_unchecked(psi0.basis().clone(), amps.unscale(norm)))
}

/// `exp(−iHt)·psi0` via spectral decomposition of `H`.
pub fn propagate_numeric(h: &HermitianOperator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Propagator::spectral(h)?.apply(psi0, t)
}

pub fn propagate_with(
    method: PropagatorMethod,
    h: &HermitianOperator,
    psi0: &StateVector,
    t: f64,
) -> Result<StateVector> {
    Propagator::new(h, method)?.apply(psi0, t)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound below which the unscaled [13/13] approximant is accurate to
/// double precision.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential of a general complex matrix by scaling and squaring
/// with a [13/13] Padé approximant.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm1.is_finite() {
        return DMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN));
    }
    let squarings = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.unscale(2f64.powi(squarings));

    let b = PADE13.map(|x| Complex64::new(x, 0.0));
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::hamiltonian::{build_hamiltonian, Frame, ModelParams};
    use crate::fock_space::{build_basis, initial_state, Basis};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn max_gap(a: &StateVector, b: &StateVector) -> f64 {
        (a.amplitudes() - b.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_time_is_identity() {
        let basis = Basis::single_excitation(3).unwrap();
        let h = build_hamiltonian(&ModelParams::resonant(3, 1.0).unwrap(), &basis).unwrap();
        let psi0 = initial_state(&basis).unwrap();
        for method in [PropagatorMethod::Spectral, PropagatorMethod::PadeScalingSquaring] {
            let psi = propagate_with(method, &h, &psi0, 0.0).unwrap();
            assert_eq!(psi.amplitudes(), psi0.amplitudes(), "{method:?}");
            let u = Propagator::new(&h, method).unwrap().unitary(0.0).unwrap();
            assert_eq!(u, DMatrix::identity(basis.dim(), basis.dim()));
        }
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-30.0, 2.0)]));
        let e = expm(&d);
        assert_abs_diff_eq!(e[(0, 0)].re, 1f64.exp(), epsilon = 1e-14);
        let z = Complex64::new(-30.0, 2.0).exp();
        assert!((e[(1, 1)] - z).norm() < 1e-25);
        let mut nil = DMatrix::<Complex64>::zeros(2, 2);
        nil[(0, 1)] = Complex64::new(3.0, 0.0);
        let e = expm(&nil);
        assert!((e[(0, 1)] - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        assert!((e[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_level_rotation() {
        // H = ε σₓ on {|g,1⟩, |e,0⟩}: amplitudes cos(εt), −i sin(εt).
        let basis = Basis::single_excitation(1).unwrap();
        let h = build_hamiltonian(&ModelParams::resonant(1, 2.0).unwrap(), &basis).unwrap();
        let psi0 = initial_state(&basis).unwrap();
        let t = 0.3;
        for method in [PropagatorMethod::Spectral, PropagatorMethod::PadeScalingSquaring] {
            let psi = propagate_with(method, &h, &psi0, t).unwrap();
            assert!((psi.amplitudes()[2] - Complex64::new((0.6f64).cos(), 0.0)).norm() < 1e-14);
            assert!((psi.amplitudes()[1] - Complex64::new(0.0, -(0.6f64).sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn non_finite_time_is_rejected() {
        let basis = Basis::single_excitation(1).unwrap();
        let h = build_hamiltonian(&ModelParams::resonant(1, 1.0).unwrap(), &basis).unwrap();
        let psi0 = initial_state(&basis).unwrap();
        assert!(propagate_numeric(&h, &psi0, f64::NAN).is_err());
        assert!(propagate_numeric(&h, &psi0, f64::INFINITY).is_err());
    }

    #[test]
    fn overflowing_parameters_are_reported() {
        let basis = Basis::single_excitation(2).unwrap();
        let h = build_hamiltonian(&ModelParams::resonant(2, 1e300).unwrap(), &basis).unwrap();
        let psi0 = initial_state(&basis).unwrap();
        let err = propagate_with(PropagatorMethod::PadeScalingSquaring, &h, &psi0, 1e10).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn lab_and_interaction_moduli_agree() {
        let basis = build_basis(3, 2, None).unwrap();
        let int = ModelParams::resonant(3, 0.8).unwrap().with_omega_atom(12.0);
        let lab = int.clone().with_frame(Frame::Lab);
        let psi0 = initial_state(&basis).unwrap();
        let h_int = build_hamiltonian(&int, &basis).unwrap();
        let h_lab = build_hamiltonian(&lab, &basis).unwrap();
        for t in [0.1, 1.0, 2.7] {
            let a = propagate_numeric(&h_int, &psi0, t).unwrap();
            let b = propagate_numeric(&h_lab, &psi0, t).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes().iter()) {
                assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-10);
            }
            let mapped = crate::dynamics::interaction_to_lab(&a, 12.0, t);
            assert!(max_gap(&mapped, &b) < 1e-10);
        }
    }

    fn random_case() -> impl Strategy<Value = (HermitianOperator, StateVector, f64, f64)> {
        (1usize..4, 1u32..3, any::<bool>()).prop_flat_map(|(n, n_max, lab)| {
            let basis = build_basis(n, n_max, None).unwrap();
            let dim = basis.dim();
            (
                -5.0f64..5.0,
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.05f64..3.0, n),
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim),
                0.0f64..10.0,
                0.0f64..10.0,
            )
                .prop_filter_map("nonzero state", move |(w0, ws, gs, amps, t1, t2)| {
                    let frame = if lab { Frame::Lab } else { Frame::Interaction };
                    let h = build_hamiltonian(&ModelParams::new(w0, ws, gs, frame).unwrap(), &basis).unwrap();
                    let amps = DVector::from_iterator(dim, amps.into_iter().map(|(r, i)| Complex64::new(r, i)));
                    let psi = StateVector::normalized(basis.clone(), amps).ok()?;
                    Some((h, psi, t1, t2))
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unitarity_and_composition((h, psi, t1, t2) in random_case()) {
            for method in [PropagatorMethod::Spectral, PropagatorMethod::PadeScalingSquaring] {
                let p = Propagator::new(&h, method).unwrap();
                let u = p.unitary(t1).unwrap();
                let raw = &u * psi.amplitudes();
                prop_assert!((raw.norm() - 1.0).abs() <= NORM_DRIFT_TOLERANCE);
                let stepwise = p.apply(&p.apply(&psi, t1).unwrap(), t2).unwrap();
                let direct = p.apply(&psi, t1 + t2).unwrap();
                prop_assert!(max_gap(&stepwise, &direct) <= 1e-9);
            }
        }

        #[test]
        fn spectral_and_pade_agree((h, psi, t1, _t2) in random_case()) {
            let a = propagate_with(PropagatorMethod::Spectral, &h, &psi, t1).unwrap();
            let b = propagate_with(PropagatorMethod::PadeScalingSquaring, &h, &psi, t1).unwrap();
            prop_assert!(max_gap(&a, &b) <= 1e-9);
        }
    }
}
