//! Invariant suite run by `wstate validate`: each check reports the worst
//! measured deviation next to its tolerance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    build_hamiltonian, evolve_closed_form, excitation_operator, Frame, HermitianOperator, ModelParams,
    Propagator, HERMITICITY_TOLERANCE, NORM_DRIFT_TOLERANCE,
};
use crate::entanglement::{ghz_state, pair_concurrence, w_state};
use crate::error::Result;
use crate::fock_space::{build_basis, initial_state, AtomLevel, Basis, BasisState, StateVector};
use crate::protocol::{
    coupling_disorder_sweep, optimal_time, run_protocol, timing_error_sweep, SweepParameter, SweepSpec,
};

pub const CONSERVATION_TOLERANCE: f64 = 1e-13;
pub const COMPOSITION_TOLERANCE: f64 = 1e-9;
pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const RABI_PERIOD_TOLERANCE: f64 = 1e-6;
pub const W_FIDELITY_TOLERANCE: f64 = 1e-9;
pub const W_CONCURRENCE_TOLERANCE: f64 = 1e-9;
pub const GHZ_CONCURRENCE_TOLERANCE: f64 = 1e-12;
pub const TIMING_LAW_TOLERANCE: f64 = 1e-8;

/// Deliberate defects used to prove the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Negates one coupling matrix element without touching its transpose.
    FlipHamiltonianSign,
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub seed: u64,
    pub random_draws: usize,
    pub oracle_draws: usize,
    pub fault: Option<Fault>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { seed: 0, random_draws: 50, oracle_draws: 100, fault: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            measured,
            tolerance,
            passed: measured.is_finite() && measured <= tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &str, tolerance: f64, err: crate::Error) -> Check {
        Check { name: name.into(), measured: f64::NAN, tolerance, passed: false, detail: err.to_string() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationSummary {
    pub checks_run: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl ValidationSummary {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

pub fn run_validation(opts: &ValidationOptions) -> ValidationSummary {
    let mut checks = Vec::new();
    let mut push = |name: &str, tol: f64, r: Result<Check>| {
        checks.push(r.unwrap_or_else(|e| Check::failed(name, tol, e)));
    };
    push("hermiticity", HERMITICITY_TOLERANCE, check_hermiticity(opts));
    push("excitation_conservation", CONSERVATION_TOLERANCE, check_conservation(opts));
    push("unitarity", NORM_DRIFT_TOLERANCE, check_unitarity(opts));
    push("composition", COMPOSITION_TOLERANCE, check_composition(opts));
    push("oracle_equivalence", ORACLE_TOLERANCE, check_oracle(opts));
    push("rabi_period", RABI_PERIOD_TOLERANCE, check_rabi_period());
    push("w_generation", W_FIDELITY_TOLERANCE, check_w_generation());
    push("w_pair_concurrence", W_CONCURRENCE_TOLERANCE, check_w_concurrence());
    push("ghz_pair_concurrence", GHZ_CONCURRENCE_TOLERANCE, check_ghz_concurrence());
    push("timing_law", TIMING_LAW_TOLERANCE, check_timing_law());
    push("sweep_determinism", 0.0, check_determinism(opts));
    let passed = checks.iter().filter(|c| c.passed).count();
    ValidationSummary { checks_run: checks.len(), passed, failed: checks.len() - passed, checks }
}

/// Random parameters over a random truncation, either frame.
pub fn random_model(rng: &mut impl Rng) -> Result<(ModelParams, std::sync::Arc<Basis>)> {
    let n = rng.random_range(1..=4);
    let n_max = rng.random_range(1..=2);
    let cap = if rng.random_bool(0.5) { Some(rng.random_range(1..=3)) } else { None };
    let frame = if rng.random_bool(0.5) { Frame::Lab } else { Frame::Interaction };
    let params = ModelParams::new(
        rng.random_range(-5.0..5.0),
        (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
        (0..n).map(|_| rng.random_range(0.05..3.0)).collect(),
        frame,
    )?;
    Ok((params, build_basis(n, n_max, cap)?))
}

/// A random normalized state on `basis`.
pub fn random_state(rng: &mut impl Rng, basis: &std::sync::Arc<Basis>) -> Result<StateVector> {
    let amps = nalgebra::DVector::from_iterator(
        basis.dim(),
        (0..basis.dim()).map(|_| num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
    );
    StateVector::normalized(basis.clone(), amps)
}

fn inject(h: HermitianOperator, fault: Option<Fault>) -> Result<HermitianOperator> {
    match fault {
        None => Ok(h),
        Some(Fault::FlipHamiltonianSign) => {
            let basis = h.basis().clone();
            let mut m = h.into_matrix();
            let n = m.nrows();
            if let Some((r, c)) = (0..n).flat_map(|r| (0..r).map(move |c| (r, c))).find(|&(r, c)| m[(r, c)].norm() > 0.0) {
                m[(r, c)] = -m[(r, c)];
            }
            HermitianOperator::from_matrix_unchecked(basis, m)
        }
    }
}

fn check_hermiticity(opts: &ValidationOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    for _ in 0..opts.random_draws {
        let (params, basis) = random_model(&mut rng)?;
        let h = inject(build_hamiltonian(&params, &basis)?, opts.fault)?;
        worst = worst.max(h.hermiticity_defect());
    }
    Ok(Check::at_most("hermiticity", worst, HERMITICITY_TOLERANCE, format!("{} random Hamiltonians", opts.random_draws)))
}

fn check_conservation(opts: &ValidationOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let mut worst = 0.0f64;
    for _ in 0..opts.random_draws {
        let (params, basis) = random_model(&mut rng)?;
        let h = build_hamiltonian(&params, &basis)?;
        worst = worst.max(h.commutator_max(&excitation_operator(&basis))?);
    }
    Ok(Check::at_most("excitation_conservation", worst, CONSERVATION_TOLERANCE, "max |[H, N]| entry"))
}

fn check_unitarity(opts: &ValidationOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let mut worst = 0.0f64;
    for _ in 0..opts.random_draws {
        let (params, basis) = random_model(&mut rng)?;
        let h = build_hamiltonian(&params, &basis)?;
        let psi = random_state(&mut rng, &basis)?;
        let t = rng.random_range(0.0..10.0);
        let raw = Propagator::spectral(&h)?.unitary(t)? * psi.amplitudes();
        worst = worst.max((raw.norm() - 1.0).abs());
    }
    Ok(Check::at_most("unitarity", worst, NORM_DRIFT_TOLERANCE, "norm drift before renormalization"))
}

fn check_composition(opts: &ValidationOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let mut worst = 0.0f64;
    for _ in 0..opts.random_draws {
        let (params, basis) = random_model(&mut rng)?;
        let p = Propagator::spectral(&build_hamiltonian(&params, &basis)?)?;
        let psi = random_state(&mut rng, &basis)?;
        let (t1, t2) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let two_step = p.apply(&p.apply(&psi, t1)?, t2)?;
        let one_step = p.apply(&psi, t1 + t2)?;
        worst = worst.max(max_gap(&two_step, &one_step));
    }
    Ok(Check::at_most("composition", worst, COMPOSITION_TOLERANCE, "U(t2)U(t1) vs U(t1+t2)"))
}

fn check_oracle(opts: &ValidationOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(4));
    let mut worst = 0.0f64;
    for _ in 0..opts.oracle_draws {
        let n = rng.random_range(1..=6);
        let eps = rng.random_range(0.1..10.0);
        let t = rng.random_range(0.0..4.0 * PI / eps);
        worst = worst.max(closed_vs_numeric_gap(n, eps, t)?);
    }
    Ok(Check::at_most("oracle_equivalence", worst, ORACLE_TOLERANCE, format!("{} resonant draws", opts.oracle_draws)))
}

/// Largest per-amplitude difference between the closed form and the
/// numeric propagator for identical resonant couplings.
pub fn closed_vs_numeric_gap(n: usize, epsilon: f64, t: f64) -> Result<f64> {
    let params = ModelParams::resonant(n, epsilon)?;
    let closed = evolve_closed_form(&params, t)?;
    let basis = closed.basis().clone();
    let numeric = Propagator::spectral(&build_hamiltonian(&params, &basis)?)?.apply(&initial_state(&basis)?, t)?;
    Ok(max_gap(&closed, &numeric))
}

fn max_gap(a: &StateVector, b: &StateVector) -> f64 {
    (a.amplitudes() - b.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Oscillation periods of the `|e,0…0⟩` component, measured from the
/// numeric propagator by locating sign changes and bisecting them.
#[derive(Clone, Debug, Serialize)]
pub struct RabiMeasurement {
    pub n: usize,
    pub epsilon: f64,
    /// Full cycle of the interaction-frame amplitude ⟨e,0…0|ψ(t)⟩.
    pub amplitude_period: f64,
    /// Fundamental period of the population |⟨e,0…0|ψ(t)⟩|², half the above.
    pub population_period: f64,
    /// max |P(t + 2π/(√N ε)) − P(t)| over the sampling grid.
    pub population_shift_defect: f64,
}

pub fn measure_rabi_period(n: usize, epsilon: f64) -> Result<RabiMeasurement> {
    let basis = Basis::single_excitation(n)?;
    let p = Propagator::spectral(&build_hamiltonian(&ModelParams::resonant(n, epsilon)?, &basis)?)?;
    let psi0 = initial_state(&basis)?;
    let excited = BasisState::vacuum(AtomLevel::Excited, n);
    let amplitude = |t: f64| -> Result<f64> { Ok(p.apply(&psi0, t)?.amplitude(&excited).re) };

    // Scan a window that holds at least two full cycles for any N ≥ 1.
    let t_max = 6.0 * PI / epsilon;
    let steps = 6007;
    let dt = t_max / steps as f64;
    let mut crossings = Vec::new();
    let mut prev = amplitude(0.0)?;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let cur = amplitude(t)?;
        if cur == 0.0 {
            crossings.push(t);
        } else if prev != 0.0 && (prev > 0.0) != (cur > 0.0) {
            crossings.push(bisect(&amplitude, t - dt, t)?);
        }
        prev = cur;
        if crossings.len() == 5 {
            break;
        }
    }
    if crossings.len() < 5 {
        return Err(crate::Error::Decomposition(format!("found only {} amplitude zeros", crossings.len())));
    }
    // Zeros alternate in crossing direction: z0 and z2 bound one full amplitude
    // cycle, consecutive zeros bound one population cycle.
    let amplitude_period = ((crossings[2] - crossings[0]) + (crossings[4] - crossings[2])) / 2.0;
    let population_period = (crossings[4] - crossings[0]) / 4.0;

    let shift = 2.0 * PI / ((n as f64).sqrt() * epsilon);
    let mut defect = 0.0f64;
    for k in 0..200 {
        let t = k as f64 * shift / 200.0;
        let a = p.apply(&psi0, t)?.probability(&excited);
        let b = p.apply(&psi0, t + shift)?.probability(&excited);
        defect = defect.max((a - b).abs());
    }
    Ok(RabiMeasurement { n, epsilon, amplitude_period, population_period, population_shift_defect: defect })
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_rabi_period() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let m = measure_rabi_period(n, 1.0)?;
        let expected = 2.0 * PI / (n as f64).sqrt();
        worst = worst
            .max((m.amplitude_period - expected).abs() / expected)
            .max((2.0 * m.population_period - expected).abs() / expected)
            .max(m.population_shift_defect);
    }
    Ok(Check::at_most(
        "rabi_period",
        worst,
        RABI_PERIOD_TOLERANCE,
        "relative error of the 2π/(√N ε) cycle, N = 1..6",
    ))
}

fn check_w_generation() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let out = run_protocol(n, 1.0)?;
        worst = worst.max((out.success_prob - 1.0).abs());
        let basis = out.state.basis().clone();
        let h = build_hamiltonian(&ModelParams::resonant(n, 1.0)?, &basis)?;
        let numeric = Propagator::spectral(&h)?.apply(&initial_state(&basis)?, out.t_star)?;
        worst = worst.max((crate::entanglement::success_probability(&numeric, n)? - 1.0).abs());
    }
    Ok(Check::at_most("w_generation", worst, W_FIDELITY_TOLERANCE, "|1 − P(W ⊗ g)| at t*, N = 1..8"))
}

fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |i| ((i + 1)..=n).map(move |j| (i, j)))
}

fn check_w_concurrence() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 3..=8 {
        let w = w_state(n, &Basis::qubit_modes(n)?)?;
        for (i, j) in all_pairs(n) {
            worst = worst.max((pair_concurrence(&w, i, j)? - 2.0 / n as f64).abs());
        }
    }
    Ok(Check::at_most("w_pair_concurrence", worst, W_CONCURRENCE_TOLERANCE, "|C − 2/n|, n = 3..8, all pairs"))
}

fn check_ghz_concurrence() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 3..=8 {
        let ghz = ghz_state(n, &Basis::qubit_modes(n)?)?;
        for (i, j) in all_pairs(n) {
            worst = worst.max(pair_concurrence(&ghz, i, j)?);
        }
    }
    Ok(Check::at_most("ghz_pair_concurrence", worst, GHZ_CONCURRENCE_TOLERANCE, "C, n = 3..8, all pairs"))
}

fn check_timing_law() -> Result<Check> {
    let n = 3;
    let t_star = optimal_time(n, 1.0)?;
    let spec = SweepSpec::new(SweepParameter::TimingError, SweepSpec::linspace(-t_star / 2.0, t_star / 2.0, 41));
    let res = timing_error_sweep(n, 1.0, &spec)?;
    let worst = res
        .rows
        .iter()
        .map(|r| (r.fidelity_mean - (3f64.sqrt() * r.x).cos().powi(2)).abs())
        .fold(0.0, f64::max);
    Ok(Check::at_most("timing_law", worst, TIMING_LAW_TOLERANCE, "|F − cos²(√n ε δ)| over 41 points"))
}

fn check_determinism(opts: &ValidationOptions) -> Result<Check> {
    let spec = SweepSpec::new(SweepParameter::CouplingDisorder, vec![0.0, 0.05, 0.2])
        .with_trials(50)
        .with_seed(opts.seed);
    let a = coupling_disorder_sweep(3, 1.0, &spec)?.to_csv();
    let b = coupling_disorder_sweep(3, 1.0, &spec)?.to_csv();
    let differing = a.bytes().zip(b.bytes()).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    Ok(Check::at_most("sweep_determinism", differing as f64, 0.0, "differing CSV bytes between reruns"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let summary = run_validation(&ValidationOptions::default());
        for c in &summary.checks {
            assert!(c.passed, "{} measured {:e} > {:e}: {}", c.name, c.measured, c.tolerance, c.detail);
        }
        assert_eq!(summary.checks_run, summary.passed);
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = ValidationOptions { fault: Some(Fault::FlipHamiltonianSign), ..Default::default() };
        let summary = run_validation(&opts);
        let herm = summary.checks.iter().find(|c| c.name == "hermiticity").unwrap();
        assert!(!herm.passed);
        assert_eq!(summary.failed, 1);
    }

    #[test]
    fn rabi_measurement_values() {
        let m = measure_rabi_period(4, 2.0).unwrap();
        assert!((m.amplitude_period - PI / 2.0).abs() < 1e-9);
        assert!((m.population_period - PI / 4.0).abs() < 1e-9);
        assert!(m.population_shift_defect < 1e-12);
    }
}
