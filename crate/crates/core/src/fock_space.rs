//! Truncated Hilbert space of one two-level atom coupled to `N` bosonic modes.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis dimension accepted unless a caller raises the limit.
pub const DEFAULT_MAX_DIM: usize = 16384;

/// Allowed deviation of a state's 2-norm from one.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomLevel {
    Ground,
    Excited,
}

impl AtomLevel {
    pub fn excitation(self) -> u32 {
        match self {
            AtomLevel::Ground => 0,
            AtomLevel::Excited => 1,
        }
    }

    fn symbol(self) -> char {
        match self {
            AtomLevel::Ground => 'g',
            AtomLevel::Excited => 'e',
        }
    }
}

/// Occupation-number label: atomic level plus photon count per mode.
///
/// The derived ordering compares the atom level first, then the occupations
/// lexicographically from mode 1 to mode N. `Basis` relies on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub atom: AtomLevel,
    pub occupations: Vec<u32>,
}

impl BasisState {
    pub fn new(atom: AtomLevel, occupations: Vec<u32>) -> Self {
        BasisState { atom, occupations }
    }

    /// `|level, 0…0⟩`.
    pub fn vacuum(atom: AtomLevel, n_modes: usize) -> Self {
        BasisState::new(atom, vec![0; n_modes])
    }

    /// `|level⟩` with a single photon in `mode` (zero-based).
    pub fn single_photon(atom: AtomLevel, n_modes: usize, mode: usize) -> Self {
        let mut occupations = vec![0; n_modes];
        occupations[mode] = 1;
        BasisState::new(atom, occupations)
    }

    pub fn n_modes(&self) -> usize {
        self.occupations.len()
    }

    /// Atomic excitation plus total photon number.
    pub fn excitation(&self) -> u32 {
        self.atom.excitation() + self.occupations.iter().sum::<u32>()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},", self.atom.symbol())?;
        if self.occupations.iter().all(|&n| n < 10) {
            for n in &self.occupations {
                write!(f, "{n}")?;
            }
        } else {
            let parts: Vec<String> = self.occupations.iter().map(|n| n.to_string()).collect();
            write!(f, "{}", parts.join(" "))?;
        }
        write!(f, "⟩")
    }
}

/// The three numbers that fully determine a truncated basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub n_modes: usize,
    pub n_max: u32,
    pub excitation_cap: Option<u32>,
}

/// Ordered, indexed list of basis states.
#[derive(Clone, Debug)]
pub struct Basis {
    spec: BasisSpec,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Basis {}

/// Builds the truncated basis with the default dimension limit.
pub fn build_basis(n_modes: usize, n_max: u32, excitation_cap: Option<u32>) -> Result<Arc<Basis>> {
    Basis::build(n_modes, n_max, excitation_cap, DEFAULT_MAX_DIM)
}

impl Basis {
    /// Enumerates every `(atom, occupations)` pair with `0 ≤ nᵢ ≤ n_max` and,
    /// if a cap is given, total excitation at most `cap`. Fails with
    /// `TruncationTooLarge` once the count passes `max_dim`.
    pub fn build(
        n_modes: usize,
        n_max: u32,
        excitation_cap: Option<u32>,
        max_dim: usize,
    ) -> Result<Arc<Basis>> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be at least 1".into()));
        }
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        let spec = BasisSpec { n_modes, n_max, excitation_cap };
        let mut states = Vec::new();
        let mut occupations = vec![0u32; n_modes];
        for atom in [AtomLevel::Ground, AtomLevel::Excited] {
            let budget = match excitation_cap {
                Some(cap) if cap < atom.excitation() => continue,
                Some(cap) => Some(cap - atom.excitation()),
                None => None,
            };
            enumerate(atom, 0, budget, n_max, &mut occupations, &mut states, max_dim)?;
        }
        let index = states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        Ok(Arc::new(Basis { spec, states, index }))
    }

    /// `n_max = 1`, `excitation_cap = 1`: the sector the ideal protocol lives in.
    pub fn single_excitation(n_modes: usize) -> Result<Arc<Basis>> {
        build_basis(n_modes, 1, Some(1))
    }

    /// Every field mode a qubit, no excitation cap.
    pub fn qubit_modes(n_modes: usize) -> Result<Arc<Basis>> {
        build_basis(n_modes, 1, None)
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes
    }

    pub fn n_max(&self) -> u32 {
        self.spec.n_max
    }

    pub fn excitation_cap(&self) -> Option<u32> {
        self.spec.excitation_cap
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &BasisState {
        &self.states[k]
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn contains(&self, state: &BasisState) -> bool {
        self.index.contains_key(state)
    }

    pub(crate) fn require(&self, state: &BasisState) -> Result<usize> {
        self.index_of(state).ok_or_else(|| Error::MissingState(state.to_string()))
    }
}

fn enumerate(
    atom: AtomLevel,
    mode: usize,
    budget: Option<u32>,
    n_max: u32,
    occupations: &mut Vec<u32>,
    out: &mut Vec<BasisState>,
    max_dim: usize,
) -> Result<()> {
    if mode == occupations.len() {
        if out.len() == max_dim {
            return Err(Error::TruncationTooLarge { dim: max_dim + 1, limit: max_dim });
        }
        out.push(BasisState::new(atom, occupations.clone()));
        return Ok(());
    }
    let top = budget.map_or(n_max, |b| b.min(n_max));
    for n in 0..=top {
        occupations[mode] = n;
        enumerate(atom, mode + 1, budget.map(|b| b - n), n_max, occupations, out, max_dim)?;
    }
    occupations[mode] = 0;
    Ok(())
}

/// Normalized complex amplitudes over a basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<Basis>,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized within `NORM_TOLERANCE`.
    pub fn new(basis: Arc<Basis>, amplitudes: DVector<Complex64>) -> Result<Self> {
        check_len(&basis, amplitudes.len())?;
        check_finite(&amplitudes)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
        }
        Ok(StateVector { basis, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(basis: Arc<Basis>, amplitudes: DVector<Complex64>) -> Result<Self> {
        check_len(&basis, amplitudes.len())?;
        check_finite(&amplitudes)?;
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize the zero vector".into()));
        }
        Ok(StateVector { basis, amplitudes: amplitudes.unscale(norm) })
    }

    /// Builds a normalized superposition from `(state, amplitude)` pairs.
    pub fn superposition<'a, I>(basis: Arc<Basis>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a BasisState, Complex64)>,
    {
        let mut amps = DVector::zeros(basis.dim());
        for (state, amp) in terms {
            amps[basis.require(state)?] += amp;
        }
        StateVector::normalized(basis, amps)
    }

    pub fn basis_state(basis: Arc<Basis>, state: &BasisState) -> Result<Self> {
        let k = basis.require(state)?;
        let mut amps = DVector::zeros(basis.dim());
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(StateVector { basis, amplitudes: amps })
    }

    pub(crate) fn from_parts_unchecked(basis: Arc<Basis>, amplitudes: DVector<Complex64>) -> Self {
        debug_assert_eq!(basis.dim(), amplitudes.len());
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    /// Amplitude on `state`; zero when the state lies outside the truncation.
    pub fn amplitude(&self, state: &BasisState) -> Complex64 {
        self.basis
            .index_of(state)
            .map_or(Complex64::new(0.0, 0.0), |k| self.amplitudes[k])
    }

    pub fn probability(&self, state: &BasisState) -> f64 {
        self.amplitude(state).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Total probability of the atom being found in `level`.
    pub fn atom_population(&self, level: AtomLevel) -> f64 {
        self.basis
            .states()
            .iter()
            .zip(self.amplitudes.iter())
            .filter(|(s, _)| s.atom == level)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        inner_product(self, other)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StateVectorJson::from(self))?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(StateVectorJson::from(self)).expect("state vector serializes")
    }

    /// Parses the JSON form, rebuilding the basis from its spec.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StateVectorJson = serde_json::from_str(text)?;
        let basis = build_basis(raw.basis.n_modes, raw.basis.n_max, raw.basis.excitation_cap)?;
        let amps = DVector::from_iterator(
            raw.amplitudes.len(),
            raw.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        StateVector::new(basis, amps)
    }
}

#[derive(Serialize, Deserialize)]
struct StateVectorJson {
    basis: BasisSpec,
    amplitudes: Vec<[f64; 2]>,
}

impl From<&StateVector> for StateVectorJson {
    fn from(psi: &StateVector) -> Self {
        StateVectorJson {
            basis: psi.basis.spec(),
            amplitudes: psi.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

fn check_len(basis: &Basis, len: usize) -> Result<()> {
    if basis.dim() != len {
        return Err(Error::BasisMismatch(format!(
            "{len} amplitudes for a basis of dimension {}",
            basis.dim()
        )));
    }
    Ok(())
}

fn check_finite(amps: &DVector<Complex64>) -> Result<()> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("state amplitudes".into()))
    }
}

pub(crate) fn same_basis(a: &Basis, b: &Basis) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch(format!("{:?} vs {:?}", a.spec(), b.spec())));
    }
    Ok(())
}

/// Unit amplitude on `|e, 0…0⟩`: excited atom, all cavities in vacuum.
pub fn initial_state(basis: &Arc<Basis>) -> Result<StateVector> {
    let start = BasisState::vacuum(AtomLevel::Excited, basis.n_modes());
    StateVector::basis_state(basis.clone(), &start)
}

/// ⟨a|b⟩, conjugate-linear in the first argument.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    same_basis(&a.basis, &b.basis)?;
    Ok(a.amplitudes.dotc(&b.amplitudes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn labels(basis: &Basis) -> Vec<String> {
        basis.states().iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_mode_single_excitation() {
        let b = build_basis(1, 1, Some(1)).unwrap();
        assert_eq!(labels(&b), ["|g,0⟩", "|g,1⟩", "|e,0⟩"]);
    }

    #[test]
    fn three_modes_single_excitation() {
        let b = build_basis(3, 1, Some(1)).unwrap();
        assert_eq!(b.dim(), 5);
        assert_eq!(labels(&b), ["|g,000⟩", "|g,001⟩", "|g,010⟩", "|g,100⟩", "|e,000⟩"]);
    }

    #[test]
    fn two_modes_uncapped() {
        let b = build_basis(2, 1, None).unwrap();
        assert_eq!(b.dim(), 8);
        let mut sorted = b.states().to_vec();
        sorted.sort();
        assert_eq!(sorted, b.states());
    }

    #[test]
    fn cap_zero_has_only_ground_vacuum() {
        let b = build_basis(3, 2, Some(0)).unwrap();
        assert_eq!(labels(&b), ["|g,000⟩"]);
        assert!(matches!(initial_state(&b), Err(Error::MissingState(_))));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(build_basis(0, 1, None), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_basis(2, 0, None), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            build_basis(14, 1, None),
            Err(Error::TruncationTooLarge { limit: DEFAULT_MAX_DIM, .. })
        ));
        // 2^14 is exactly the limit and must be accepted.
        assert_eq!(build_basis(13, 1, None).unwrap().dim(), 16384);
        assert!(Basis::build(3, 1, None, 15).is_err());
        assert_eq!(Basis::build(3, 1, None, 16).unwrap().dim(), 16);
    }

    #[test]
    fn large_capped_space_is_cheap() {
        let b = build_basis(400, 1, Some(1)).unwrap();
        assert_eq!(b.dim(), 402);
    }

    #[test]
    fn initial_state_is_excited_vacuum() {
        for n in [1, 3] {
            let b = Basis::single_excitation(n).unwrap();
            let psi = initial_state(&b).unwrap();
            assert_eq!(psi.amplitude(&BasisState::vacuum(AtomLevel::Excited, n)), Complex64::new(1.0, 0.0));
            assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(psi.atom_population(AtomLevel::Excited), 1.0);
        }
    }

    #[test]
    fn orthogonal_basis_states() {
        let b = Basis::single_excitation(3).unwrap();
        let e = initial_state(&b).unwrap();
        let g = StateVector::basis_state(b.clone(), &BasisState::single_photon(AtomLevel::Ground, 3, 0)).unwrap();
        assert_eq!(inner_product(&e, &g).unwrap(), Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(inner_product(&e, &e).unwrap().re, 1.0);
    }

    #[test]
    fn w_overlap_with_two_mode_superposition() {
        let b = Basis::single_excitation(3).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let singles: Vec<BasisState> =
            (0..3).map(|i| BasisState::single_photon(AtomLevel::Ground, 3, i)).collect();
        let w = StateVector::superposition(b.clone(), singles.iter().map(|s| (s, one))).unwrap();
        let phi = StateVector::superposition(b.clone(), singles[..2].iter().map(|s| (s, one))).unwrap();
        let got = inner_product(&w, &phi).unwrap();

        // Brute-force oracle: explicit sum over the five basis labels.
        let w_amp = |s: &BasisState| if s.atom == AtomLevel::Ground && s.excitation() == 1 { 1.0 / 3f64.sqrt() } else { 0.0 };
        let phi_amp = |s: &BasisState| {
            if s.atom == AtomLevel::Ground && (s.occupations == [1, 0, 0] || s.occupations == [0, 1, 0]) {
                1.0 / 2f64.sqrt()
            } else {
                0.0
            }
        };
        let oracle: f64 = b.states().iter().map(|s| w_amp(s) * phi_amp(s)).sum();
        assert_abs_diff_eq!(oracle, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(got.re, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let a = initial_state(&Basis::single_excitation(2).unwrap()).unwrap();
        let b = initial_state(&Basis::single_excitation(3).unwrap()).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn constructors_enforce_norm() {
        let b = Basis::single_excitation(1).unwrap();
        let amps = DVector::from_element(3, Complex64::new(1.0, 0.0));
        assert!(StateVector::new(b.clone(), amps.clone()).is_err());
        let psi = StateVector::normalized(b.clone(), amps).unwrap();
        assert!((psi.norm() - 1.0).abs() <= NORM_TOLERANCE);
        assert!(StateVector::normalized(b.clone(), DVector::zeros(3)).is_err());
        assert!(StateVector::new(b, DVector::zeros(4)).is_err());
    }

    #[test]
    fn json_layout() {
        let b = Basis::single_excitation(1).unwrap();
        let psi = initial_state(&b).unwrap();
        assert_eq!(
            psi.to_json().unwrap(),
            r#"{"basis":{"n_modes":1,"n_max":1,"excitation_cap":1},"amplitudes":[[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#
        );
        let uncapped = initial_state(&Basis::qubit_modes(1).unwrap()).unwrap();
        assert!(uncapped.to_json().unwrap().contains(r#""excitation_cap":null"#));
    }

    fn random_state() -> impl Strategy<Value = StateVector> {
        (1usize..4, 1u32..3, prop::option::of(0u32..4))
            .prop_filter("need an excited vacuum", |(_, _, cap)| cap.map_or(true, |c| c >= 1))
            .prop_flat_map(|(n, n_max, cap)| {
                let basis = build_basis(n, n_max, cap).unwrap();
                let dim = basis.dim();
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
                    "nonzero",
                    move |v| {
                        let amps = DVector::from_iterator(dim, v.into_iter().map(|(r, i)| Complex64::new(r, i)));
                        StateVector::normalized(basis.clone(), amps).ok()
                    },
                )
            })
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..5, n_max in 1u32..4, cap in prop::option::of(0u32..5)) {
            let b = build_basis(n, n_max, cap).unwrap();
            for (k, s) in b.states().iter().enumerate() {
                prop_assert_eq!(b.index_of(s), Some(k));
                prop_assert_eq!(s.n_modes(), n);
                prop_assert!(s.occupations.iter().all(|&x| x <= n_max));
                if let Some(c) = cap { prop_assert!(s.excitation() <= c); }
            }
            prop_assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn single_excitation_dimension(n in 1usize..40) {
            prop_assert_eq!(build_basis(n, 1, Some(1)).unwrap().dim(), n + 2);
        }

        #[test]
        fn inner_product_is_conjugate_symmetric(pair in random_state().prop_flat_map(|a| {
            let basis = a.basis().clone();
            let dim = basis.dim();
            (Just(a), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("nonzero", move |v| {
                let amps = DVector::from_iterator(dim, v.into_iter().map(|(r, i)| Complex64::new(r, i)));
                StateVector::normalized(basis.clone(), amps).ok()
            }))
        })) {
            let (a, b) = pair;
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-14);
            prop_assert!((a.norm() - 1.0).abs() <= NORM_TOLERANCE);
            prop_assert!((inner_product(&a, &a).unwrap().re - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn json_round_trip(psi in random_state()) {
            let back = StateVector::from_json(&psi.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.basis().spec(), psi.basis().spec());
            prop_assert_eq!(back.amplitudes(), psi.amplitudes());
        }
    }
}
