//! Single-photon two-mode formalism for the crossed beams.
//!
//! A photon at the intersection is `c1 |1>_1 + c2 |1>_2` over the two
//! momentum modes `p1`, `p2`. A free crossing conserves momentum and leaves
//! the amplitudes alone. A wire at a dark-fringe centre can supply
//! `dp = p2 - p1`:
//!
//! * clamped wire: the recoil is shared with the whole apparatus, no record
//!   survives and the photon leaves in an equal-weight superposition;
//! * free wire: the recoil could be read out, so the interaction acts as a
//!   momentum measurement and the photon leaves in a definite mode.
//!
//! The wire operator as usually written (both exchange terms with a plus
//! sign) is not unitary. The clamped map here is its minimal unitary
//! completion, the real Hadamard-type mixer
//! `(c1, c2) -> ((c1 + c2)/sqrt2, (c1 - c2)/sqrt2)`, which sends `|1>_1` to
//! `(|1>_1 + |1>_2)/sqrt2` exactly. [`PhaseConvention::IPhase`] selects the
//! self-inverse beam-splitter variant `[[1, i], [-i, -1]]/sqrt2` instead.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::obstruction::WireSpec;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
pub const DUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeState {
    pub c1: Complex64,
    pub c2: Complex64,
}

impl TwoModeState {
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        let s = Self { c1, c2 };
        s.check_normalized()?;
        Ok(s)
    }

    /// Photon definitely in mode 1 (`p1`).
    pub fn mode_1() -> Self {
        Self {
            c1: Complex64::new(1.0, 0.0),
            c2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn mode_2() -> Self {
        Self {
            c1: Complex64::new(0.0, 0.0),
            c2: Complex64::new(1.0, 0.0),
        }
    }

    pub fn basis(mode: Mode) -> Self {
        match mode {
            Mode::One => Self::mode_1(),
            Mode::Two => Self::mode_2(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORMALIZATION_TOLERANCE || !n.is_finite() {
            return Err(Error::Unnormalized(n));
        }
        Ok(())
    }

    /// Born-rule click probabilities `(|c1|^2, |c2|^2)`.
    pub fn probabilities(&self) -> (f64, f64) {
        (self.c1.norm_sqr(), self.c2.norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn other(self) -> Self {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }
}

/// Phase convention of the clamped-wire mixer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// `[[1, 1], [1, -1]] / sqrt2`
    #[default]
    Hadamard,
    /// `[[1, i], [-i, -1]] / sqrt2`
    IPhase,
}

impl PhaseConvention {
    pub fn apply(self, s: &TwoModeState) -> TwoModeState {
        let h = FRAC_1_SQRT_2;
        match self {
            PhaseConvention::Hadamard => TwoModeState {
                c1: (s.c1 + s.c2) * h,
                c2: (s.c1 - s.c2) * h,
            },
            PhaseConvention::IPhase => {
                let i = Complex64::i();
                TwoModeState {
                    c1: (s.c1 + i * s.c2) * h,
                    c2: (-i * s.c1 - s.c2) * h,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Erased,
    Stored,
}

/// Momentum handed to the photon by the wire, as a symbolic multiple of `dp = p2 - p1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    Zero,
    PlusDeltaP,
    MinusDeltaP,
}

/// What the wire retains about the photon's momentum exchange.
///
/// An erased record's transfer tag carries no information; only
/// [`MomentumRecord::transfer`] exposes it, and only for stored records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumRecord {
    pub kind: RecordKind,
    transfer: Transfer,
}

impl MomentumRecord {
    pub fn erased() -> Self {
        Self {
            kind: RecordKind::Erased,
            transfer: Transfer::Zero,
        }
    }

    /// An erased record carrying an arbitrary (meaningless) tag.
    pub fn erased_with_tag(transfer: Transfer) -> Self {
        Self {
            kind: RecordKind::Erased,
            transfer,
        }
    }

    pub fn stored(transfer: Transfer) -> Self {
        Self {
            kind: RecordKind::Stored,
            transfer,
        }
    }

    pub fn transfer(&self) -> Option<Transfer> {
        match self.kind {
            RecordKind::Stored => Some(self.transfer),
            RecordKind::Erased => None,
        }
    }

    pub fn is_stored(&self) -> bool {
        self.kind == RecordKind::Stored
    }
}

/// Free crossing: momentum conserved, modes never mix.
pub fn free_propagate(state: &TwoModeState) -> TwoModeState {
    *state
}

/// Photon-wire interaction at a dark-fringe centre.
///
/// Clamped wires apply the unitary mixer of `convention` and erase the
/// record. Free wires act as a momentum measurement: the photon's mode is
/// drawn from `|c_i|^2`, then it keeps (`Zero`) or switches
/// (`PlusDeltaP` for 1 -> 2, `MinusDeltaP` for 2 -> 1) with probability 1/2,
/// and the record is stored.
pub fn wire_interact<R: Rng + ?Sized>(
    state: &TwoModeState,
    wire: &WireSpec,
    convention: PhaseConvention,
    rng: &mut R,
) -> Result<(TwoModeState, MomentumRecord)> {
    state.check_normalized()?;
    if wire.clamped {
        return Ok((convention.apply(state), MomentumRecord::erased()));
    }
    let incoming = if rng.random::<f64>() < state.c1.norm_sqr() {
        Mode::One
    } else {
        Mode::Two
    };
    let switch = rng.random::<f64>() < 0.5;
    let (out, transfer) = match (incoming, switch) {
        (m, false) => (m, Transfer::Zero),
        (Mode::One, true) => (Mode::Two, Transfer::PlusDeltaP),
        (Mode::Two, true) => (Mode::One, Transfer::MinusDeltaP),
    };
    Ok((TwoModeState::basis(out), MomentumRecord::stored(transfer)))
}

/// Born-rule detection: detector 1 with probability `|c1|^2`.
pub fn detect<R: Rng + ?Sized>(state: &TwoModeState, rng: &mut R) -> Mode {
    let p1 = state.c1.norm_sqr() / state.norm_sqr();
    if rng.random::<f64>() < p1 {
        Mode::One
    } else {
        Mode::Two
    }
}

/// Which-way information `K`.
///
/// A stored record lets the path be traced back through momentum
/// conservation, so `K = 1`. Otherwise `K` is the predictability
/// `|P(1) - P(2)|` of the click distribution for a photon of known source.
pub fn which_way_k(record: &MomentumRecord, clicks: (f64, f64)) -> Result<f64> {
    let (p1, p2) = clicks;
    let in_range = |p: f64| (0.0..=1.0).contains(&p);
    if !(in_range(p1) && in_range(p2)) || (p1 + p2 - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::param(
            "click_distribution",
            format!("({p1}, {p2}) is not a probability pair"),
        ));
    }
    Ok(if record.is_stored() {
        1.0
    } else {
        (p1 - p2).abs()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityRecord {
    #[serde(rename = "k")]
    pub k: f64,
    #[serde(rename = "v")]
    pub v: f64,
    pub k2_plus_v2: f64,
    pub satisfied: bool,
}

/// Evaluate `K^2 + V^2 <= 1` with tolerance [`DUALITY_TOLERANCE`].
pub fn duality_check(k: f64, v: f64) -> Result<DualityRecord> {
    for (name, x) in [("k", k), ("v", v)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param(name, format!("{x} is outside [0, 1]")));
        }
    }
    let sum = k * k + v * v;
    Ok(DualityRecord {
        k,
        v,
        k2_plus_v2: sum,
        satisfied: sum <= 1.0 + DUALITY_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario: &'static str,
    #[serde(flatten)]
    pub duality: DualityRecord,
    /// Counterfactual rows that the apparatus cannot realise.
    pub excluded: bool,
}

/// The four canonical cases: free crossing, opaque screen, photons
/// scattered by a clamped dark-fringe wire, and the counterfactual wire
/// whose recoil could be read.
pub fn scenario_table(convention: PhaseConvention) -> Vec<ScenarioRow> {
    // free crossing: mode preserved, click distribution (1, 0); fringes are
    // present in the field but the photon distribution stays Gaussian
    let free = free_propagate(&TwoModeState::mode_1());
    let k_free = which_way_k(&MomentumRecord::erased(), free.probabilities())
        .expect("basis state probabilities");

    // opaque screen: localisation inside a fringe spreads momentum over
    // more than p2 - p1, so the source cannot be read off
    let k_screen = which_way_k(&MomentumRecord::erased(), (0.5, 0.5)).expect("fair split");

    let clamped_wire = WireSpec::default();
    let (scattered, record) = wire_interact(
        &TwoModeState::mode_1(),
        &clamped_wire,
        convention,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .expect("normalized basis state");
    let k_clamped = which_way_k(&record, scattered.probabilities()).expect("unitary output");

    let k_readable = which_way_k(&MomentumRecord::stored(Transfer::PlusDeltaP), (0.0, 1.0))
        .expect("basis click distribution");

    let row = |scenario, k, v, excluded| ScenarioRow {
        scenario,
        duality: duality_check(k, v).expect("k and v in range"),
        excluded,
    };
    vec![
        row("free_crossing", k_free, 0.0, false),
        row("opaque_screen", k_screen, 1.0, false),
        row("clamped_wire_interacting", k_clamped, 1.0, false),
        row("readable_wire_counterfactual", k_readable, 1.0, true),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn clamped() -> WireSpec {
        WireSpec::default()
    }

    fn free() -> WireSpec {
        WireSpec {
            clamped: false,
            ..WireSpec::default()
        }
    }

    #[test]
    fn free_crossing_is_identity() {
        for s in [
            TwoModeState::mode_1(),
            TwoModeState::mode_2(),
            TwoModeState::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap(),
        ] {
            assert_eq!(free_propagate(&s), s);
        }
    }

    #[test]
    fn clamped_wire_gives_equal_superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, rec) = wire_interact(
            &TwoModeState::mode_1(),
            &clamped(),
            PhaseConvention::Hadamard,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.c1, c(FRAC_1_SQRT_2, 0.0));
        assert_eq!(out.c2, c(FRAC_1_SQRT_2, 0.0));
        assert_eq!(rec.kind, RecordKind::Erased);
        assert_eq!(rec.transfer(), None);
    }

    #[test]
    fn two_clamped_wires_undo_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plus = TwoModeState::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
        let (out, _) =
            wire_interact(&plus, &clamped(), PhaseConvention::Hadamard, &mut rng).unwrap();
        assert!((out.c1 - c(1.0, 0.0)).norm() < 1e-15);
        assert!(out.c2.norm() < 1e-15);
    }

    #[test]
    fn iphase_convention_is_self_inverse_and_balanced() {
        let s = TwoModeState::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let once = PhaseConvention::IPhase.apply(&s);
        let twice = PhaseConvention::IPhase.apply(&once);
        assert!((twice.c1 - s.c1).norm() < 1e-15 && (twice.c2 - s.c2).norm() < 1e-15);
        let (p1, p2) = PhaseConvention::IPhase
            .apply(&TwoModeState::mode_1())
            .probabilities();
        assert_eq!(p1, p2);
    }

    #[test]
    fn unnormalized_input_rejected() {
        let bad = TwoModeState {
            c1: c(1.0, 0.0),
            c2: c(1.0, 0.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            wire_interact(&bad, &clamped(), PhaseConvention::Hadamard, &mut rng),
            Err(Error::Unnormalized(_))
        ));
        assert!(TwoModeState::new(c(0.5, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn free_wire_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut switched = 0u64;
        for _ in 0..n {
            let (out, rec) = wire_interact(
                &TwoModeState::mode_1(),
                &free(),
                PhaseConvention::Hadamard,
                &mut rng,
            )
            .unwrap();
            match rec.transfer() {
                Some(Transfer::Zero) => assert_eq!(out, TwoModeState::mode_1()),
                Some(Transfer::PlusDeltaP) => {
                    assert_eq!(out, TwoModeState::mode_2());
                    switched += 1;
                }
                other => panic!("unexpected record {other:?}"),
            }
        }
        // chi-square with one degree of freedom, 3 sigma => chi2 < 9
        let expected = n as f64 / 2.0;
        let chi2 = 2.0 * (switched as f64 - expected).powi(2) / expected;
        assert!(chi2 < 9.0, "chi2 = {chi2}");
    }

    #[test]
    fn free_wire_from_mode_two_records_minus_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = false;
        for _ in 0..100 {
            let (out, rec) = wire_interact(
                &TwoModeState::mode_2(),
                &free(),
                PhaseConvention::Hadamard,
                &mut rng,
            )
            .unwrap();
            if rec.transfer() == Some(Transfer::MinusDeltaP) {
                assert_eq!(out, TwoModeState::mode_1());
                seen = true;
            }
        }
        assert!(seen);
    }

    #[test]
    fn detection_certainty_and_fairness() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!((0..1000).all(|_| detect(&TwoModeState::mode_1(), &mut rng) == Mode::One));
        assert!((0..1000).all(|_| detect(&TwoModeState::mode_2(), &mut rng) == Mode::Two));
        let plus = PhaseConvention::Hadamard.apply(&TwoModeState::mode_1());
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| detect(&plus, &mut rng) == Mode::One)
            .count() as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn which_way_endpoints() {
        assert_eq!(
            which_way_k(&MomentumRecord::stored(Transfer::Zero), (0.5, 0.5)).unwrap(),
            1.0
        );
        assert_eq!(
            which_way_k(&MomentumRecord::erased(), (0.5, 0.5)).unwrap(),
            0.0
        );
        assert!((which_way_k(&MomentumRecord::erased(), (0.9, 0.1)).unwrap() - 0.8).abs() < 1e-15);
        assert!(which_way_k(&MomentumRecord::erased(), (0.9, 0.3)).is_err());
    }

    #[test]
    fn erased_tag_is_invisible() {
        for t in [Transfer::Zero, Transfer::PlusDeltaP, Transfer::MinusDeltaP] {
            let rec = MomentumRecord::erased_with_tag(t);
            assert_eq!(rec.transfer(), None);
            assert_eq!(
                which_way_k(&rec, (0.7, 0.3)).unwrap().to_bits(),
                which_way_k(&MomentumRecord::erased(), (0.7, 0.3))
                    .unwrap()
                    .to_bits()
            );
        }
    }

    #[test]
    fn duality_cases() {
        assert!(duality_check(1.0, 0.0).unwrap().satisfied);
        assert!(duality_check(0.0, 1.0).unwrap().satisfied);
        let r = duality_check(1.0, 1.0).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.k2_plus_v2, 2.0);
        assert!(duality_check(1.1, 0.0).is_err());
        assert!(duality_check(0.0, -0.1).is_err());
    }

    #[test]
    fn scenario_table_rows() {
        for conv in [PhaseConvention::Hadamard, PhaseConvention::IPhase] {
            let t = scenario_table(conv);
            let find = |name: &str| t.iter().find(|r| r.scenario == name).unwrap();
            let r = find("free_crossing");
            assert_eq!(
                (r.duality.k, r.duality.v, r.duality.satisfied),
                (1.0, 0.0, true)
            );
            let r = find("opaque_screen");
            assert_eq!(
                (r.duality.k, r.duality.v, r.duality.satisfied),
                (0.0, 1.0, true)
            );
            let r = find("clamped_wire_interacting");
            assert_eq!(
                (r.duality.k, r.duality.v, r.duality.satisfied),
                (0.0, 1.0, true)
            );
            let r = find("readable_wire_counterfactual");
            assert_eq!(
                (r.duality.k, r.duality.v, r.duality.satisfied),
                (1.0, 1.0, false)
            );
            assert!(r.excluded);
            assert_eq!(r.duality.k2_plus_v2, 2.0);
        }
    }
}
