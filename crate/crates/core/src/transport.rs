//! Seeded Monte Carlo over single photons.
//!
//! Each photon draws its source mode, then either crosses freely or, with
//! probability `interacting_fraction`, scatters off the wire before being
//! detected. Photon `i` uses its own ChaCha stream `i` under the run seed,
//! so results do not depend on how the ensemble is sharded.
//!
//! Visibility is assigned per subpopulation rather than measured: the end
//! detectors resolve modes, not positions. Photons that never approach the
//! wire keep the Gaussian distribution (`V = 0`); photons steered off a
//! clamped dark-fringe wire join the fringe pattern (`V = 1`). A free wire
//! cannot be localised better than one fringe period (see
//! [`crate::heisenberg`]), so its scattered photons carry no fringe
//! contrast (`V = 0`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::obstruction::WireSpec;
use crate::quantum::{
    self, duality_check, which_way_k, DualityRecord, Mode, MomentumRecord, PhaseConvention,
    TwoModeState,
};

/// Fraction of photons passing close enough to the wire to interact.
pub const DEFAULT_INTERACTING_FRACTION: f64 = 0.12;

/// Chi-square threshold for a 4-sigma band with one degree of freedom.
pub const SYMMETRY_CHI2_THRESHOLD: f64 = 16.0;

/// How photons are selected for interaction with the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Gating {
    /// Fixed probability `interacting_fraction`.
    Bernoulli,
    /// Probability equal to the Gaussian beam power within `radius` of the
    /// wire axis.
    Spatial { waist: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub photon_count: u64,
    /// Probability that a photon enters in mode 1.
    pub source_split: f64,
    pub interacting_fraction: f64,
    pub wire: Option<WireSpec>,
    pub seed: u64,
    pub convention: PhaseConvention,
    pub gating: Gating,
    /// Per-photon probability of classical absorption or diffraction out of
    /// the detectors (hybrid mode). Requires a wire.
    pub classical_loss: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            photon_count: 100_000,
            source_split: 0.5,
            interacting_fraction: DEFAULT_INTERACTING_FRACTION,
            wire: Some(WireSpec::default()),
            seed: 0,
            convention: PhaseConvention::Hadamard,
            gating: Gating::Bernoulli,
            classical_loss: 0.0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.photon_count == 0 {
            return Err(Error::param("photon_count", "must be at least 1"));
        }
        let unit = |name, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{p} is not a probability")))
            }
        };
        unit("source_split", self.source_split)?;
        unit("interacting_fraction", self.interacting_fraction)?;
        unit("classical_loss", self.classical_loss)?;
        if let Some(w) = &self.wire {
            w.validate()?;
        } else if self.classical_loss > 0.0 {
            return Err(Error::param("classical_loss", "requires a wire"));
        }
        if let Gating::Spatial { waist, radius } = self.gating {
            if !(waist > 0.0) || !(radius >= 0.0) {
                return Err(Error::param(
                    "gating",
                    "spatial gating needs waist > 0, radius >= 0",
                ));
            }
        }
        Ok(())
    }

    /// Probability that a photon interacts with the wire.
    pub fn interaction_probability(&self) -> f64 {
        match (&self.wire, self.gating) {
            (None, _) => 0.0,
            (Some(_), Gating::Bernoulli) => self.interacting_fraction,
            (Some(w), Gating::Spatial { waist, radius }) => {
                gaussian_power_fraction(waist, w.center - radius, w.center + radius)
            }
        }
    }
}

/// Fraction of a Gaussian beam's power (intensity `exp(-2 y^2 / w^2)`) in `[a, b]`.
pub fn gaussian_power_fraction(waist: f64, a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 / waist;
    0.5 * (libm::erf(s * b) - libm::erf(s * a))
}

/// Interaction radius around `center` that captures `target` of the beam power.
pub fn calibrate_interaction_radius(waist: f64, center: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param(
            "interacting_fraction",
            "target must lie in (0, 1)",
        ));
    }
    let f = |r: f64| gaussian_power_fraction(waist, center - r, center + r) - target;
    let (mut lo, mut hi) = (0.0, waist);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 * waist {
            return Err(Error::Calibration("interaction radius diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * waist {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonClass {
    Free,
    Interacting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub detector_1: u64,
    pub detector_2: u64,
    pub lost: u64,
}

impl Counts {
    pub fn detected(&self) -> u64 {
        self.detector_1 + self.detector_2
    }

    pub fn total(&self) -> u64 {
        self.detected() + self.lost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subpopulation {
    pub class: PhotonClass,
    pub count: u64,
    pub counts: Counts,
    /// Detected photons that arrived in the mode opposite to their source.
    pub switched: u64,
    #[serde(flatten)]
    pub duality: DualityRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub photon_count: u64,
    pub counts: Counts,
    pub subpopulations: Vec<Subpopulation>,
    pub seed_echo: u64,
}

impl RunReport {
    pub fn subpopulation(&self, class: PhotonClass) -> Option<&Subpopulation> {
        self.subpopulations.iter().find(|s| s.class == class)
    }

    pub fn all_satisfied(&self) -> bool {
        self.subpopulations.iter().all(|s| s.duality.satisfied)
    }
}

// [class][source][outcome] with outcome 0 = detector 1, 1 = detector 2, 2 = lost
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally([[[u64; 3]; 2]; 2]);

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for c in 0..2 {
            for s in 0..2 {
                for o in 0..3 {
                    self.0[c][s][o] += other.0[c][s][o];
                }
            }
        }
        self
    }
}

fn mode_slot(m: Mode) -> usize {
    match m {
        Mode::One => 0,
        Mode::Two => 1,
    }
}

struct Photon {
    class: PhotonClass,
    source: Mode,
    outcome: Option<Mode>,
}

fn simulate_photon(
    config: &EnsembleConfig,
    p_interact: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Photon> {
    let source = if rng.random::<f64>() < config.source_split {
        Mode::One
    } else {
        Mode::Two
    };
    let absorbed = config.classical_loss > 0.0 && rng.random::<f64>() < config.classical_loss;
    let interacts = match config.wire {
        Some(_) if p_interact > 0.0 => rng.random::<f64>() < p_interact,
        _ => false,
    };
    let class = if interacts {
        PhotonClass::Interacting
    } else {
        PhotonClass::Free
    };
    if absorbed {
        return Ok(Photon {
            class,
            source,
            outcome: None,
        });
    }
    let incoming = TwoModeState::basis(source);
    let outgoing = match (interacts, &config.wire) {
        (true, Some(wire)) => quantum::wire_interact(&incoming, wire, config.convention, rng)?.0,
        _ => quantum::free_propagate(&incoming),
    };
    Ok(Photon {
        class,
        source,
        outcome: Some(quantum::detect(&outgoing, rng)),
    })
}

/// Analytic `(K, V)` for a photon class, from the post-interaction state of
/// each source mode.
fn class_duality(
    config: &EnsembleConfig,
    class: PhotonClass,
    sources: &[(Mode, u64)],
) -> Result<DualityRecord> {
    let clamped = config.wire.map(|w| w.clamped).unwrap_or(true);
    let mut weighted = 0.0;
    let mut total = 0u64;
    for &(source, n) in sources.iter().filter(|(_, n)| *n > 0) {
        let incoming = TwoModeState::basis(source);
        let k = match class {
            PhotonClass::Free => which_way_k(
                &MomentumRecord::erased(),
                quantum::free_propagate(&incoming).probabilities(),
            )?,
            PhotonClass::Interacting if clamped => which_way_k(
                &MomentumRecord::erased(),
                config.convention.apply(&incoming).probabilities(),
            )?,
            PhotonClass::Interacting => {
                which_way_k(&MomentumRecord::stored(quantum::Transfer::Zero), (1.0, 0.0))?
            }
        };
        weighted += k * n as f64;
        total += n;
    }
    let k = if total == 0 {
        0.0
    } else {
        weighted / total as f64
    };
    let v = match class {
        PhotonClass::Interacting if clamped => 1.0,
        _ => 0.0,
    };
    duality_check(k, v)
}

fn run_range(
    config: &EnsembleConfig,
    p_interact: f64,
    base: &ChaCha8Rng,
    lo: u64,
    hi: u64,
) -> Result<Tally> {
    let mut tally = Tally::default();
    for i in lo..hi {
        let mut rng = base.clone();
        rng.set_stream(i);
        let photon = simulate_photon(config, p_interact, &mut rng)?;
        let c = match photon.class {
            PhotonClass::Free => 0,
            PhotonClass::Interacting => 1,
        };
        let o = photon.outcome.map(mode_slot).unwrap_or(2);
        tally.0[c][mode_slot(photon.source)][o] += 1;
    }
    Ok(tally)
}

/// Run the ensemble split into `shards` contiguous photon ranges.
pub fn run_ensemble_sharded(config: &EnsembleConfig, shards: usize) -> Result<RunReport> {
    config.validate()?;
    let n = config.photon_count;
    let shards = (shards.max(1) as u64).min(n);
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let p_interact = config.interaction_probability();
    let bounds: Vec<(u64, u64)> = (0..shards)
        .map(|s| (n * s / shards, n * (s + 1) / shards))
        .collect();
    let tally = bounds
        .par_iter()
        .map(|&(lo, hi)| run_range(config, p_interact, &base, lo, hi))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    build_report(config, &tally)
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<RunReport> {
    run_ensemble_sharded(config, 64)
}

fn build_report(config: &EnsembleConfig, tally: &Tally) -> Result<RunReport> {
    let mut counts = Counts::default();
    let mut subpopulations = Vec::new();
    for (c, class) in [PhotonClass::Free, PhotonClass::Interacting]
        .into_iter()
        .enumerate()
    {
        let t = &tally.0[c];
        let mut sc = Counts::default();
        let mut switched = 0;
        for (s, row) in t.iter().enumerate() {
            sc.detector_1 += row[0];
            sc.detector_2 += row[1];
            sc.lost += row[2];
            // source 1 arriving at detector 2, or source 2 at detector 1
            switched += row[1 - s];
        }
        counts.detector_1 += sc.detector_1;
        counts.detector_2 += sc.detector_2;
        counts.lost += sc.lost;
        if sc.total() == 0 {
            continue;
        }
        let sources = [
            (Mode::One, t[0].iter().sum::<u64>()),
            (Mode::Two, t[1].iter().sum::<u64>()),
        ];
        subpopulations.push(Subpopulation {
            class,
            count: sc.total(),
            counts: sc,
            switched,
            duality: class_duality(config, class, &sources)?,
        });
    }
    Ok(RunReport {
        photon_count: config.photon_count,
        counts,
        subpopulations,
        seed_echo: config.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryTest {
    pub chi2: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Chi-square of the detector split against an even split of the detected photons.
pub fn detector_symmetry_test(report: &RunReport, config: &EnsembleConfig) -> Result<SymmetryTest> {
    if report.seed_echo != config.seed || report.photon_count != config.photon_count {
        return Err(Error::MismatchedRuns(
            "report was not produced by this config".into(),
        ));
    }
    if !config.wire.map(|w| w.clamped).unwrap_or(false) || config.source_split != 0.5 {
        return Err(Error::MismatchedRuns(
            "symmetry test needs a clamped wire and source_split = 0.5".into(),
        ));
    }
    let n = report.counts.detected() as f64;
    if n == 0.0 {
        return Err(Error::MismatchedRuns("no detected photons".into()));
    }
    let d = report.counts.detector_1 as f64 - report.counts.detector_2 as f64;
    let chi2 = d * d / n;
    Ok(SymmetryTest {
        chi2,
        threshold: SYMMETRY_CHI2_THRESHOLD,
        pass: chi2 <= SYMMETRY_CHI2_THRESHOLD,
    })
}

/// `|detected_with - detected_without| / N` for two runs of equal size.
pub fn count_conservation_check(with_wire: &RunReport, without_wire: &RunReport) -> Result<f64> {
    if with_wire.photon_count != without_wire.photon_count {
        return Err(Error::MismatchedRuns(format!(
            "photon counts differ: {} vs {}",
            with_wire.photon_count, without_wire.photon_count
        )));
    }
    let a = with_wire.counts.detected() as f64;
    let b = without_wire.counts.detected() as f64;
    Ok((a - b).abs() / with_wire.photon_count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: u64) -> EnsembleConfig {
        EnsembleConfig {
            photon_count: n,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(run_ensemble(&config(0)).is_err());
        assert!(run_ensemble(&EnsembleConfig {
            source_split: 1.5,
            ..config(10)
        })
        .is_err());
        assert!(run_ensemble(&EnsembleConfig {
            wire: None,
            classical_loss: 0.1,
            ..config(10)
        })
        .is_err());
    }

    #[test]
    fn no_wire_keeps_which_way() {
        let r = run_ensemble(&EnsembleConfig {
            wire: None,
            ..config(20_000)
        })
        .unwrap();
        assert_eq!(r.subpopulations.len(), 1);
        let free = r.subpopulation(PhotonClass::Free).unwrap();
        assert_eq!((free.duality.k, free.duality.v), (1.0, 0.0));
        assert_eq!(free.switched, 0);
        assert_eq!(r.counts.lost, 0);
    }

    #[test]
    fn zero_fraction_matches_no_wire() {
        let a = run_ensemble(&EnsembleConfig {
            wire: None,
            ..config(5_000)
        })
        .unwrap();
        let b = run_ensemble(&EnsembleConfig {
            interacting_fraction: 0.0,
            ..config(5_000)
        })
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clamped_wire_is_lossless() {
        let r = run_ensemble(&config(20_000)).unwrap();
        assert_eq!(r.counts.lost, 0);
        assert_eq!(r.counts.total(), 20_000);
        let i = r.subpopulation(PhotonClass::Interacting).unwrap();
        assert_eq!((i.duality.k, i.duality.v), (0.0, 1.0));
        assert!(r.all_satisfied());
    }

    #[test]
    fn free_wire_stores_which_way() {
        let w = WireSpec {
            clamped: false,
            ..WireSpec::default()
        };
        let r = run_ensemble(&EnsembleConfig {
            wire: Some(w),
            ..config(20_000)
        })
        .unwrap();
        let i = r.subpopulation(PhotonClass::Interacting).unwrap();
        assert_eq!((i.duality.k, i.duality.v), (1.0, 0.0));
        assert!(r.all_satisfied());
    }

    #[test]
    fn shard_count_is_irrelevant() {
        let c = config(10_007);
        let a = run_ensemble_sharded(&c, 1).unwrap();
        for s in [2, 3, 17, 1000] {
            assert_eq!(run_ensemble_sharded(&c, s).unwrap(), a);
        }
    }

    #[test]
    fn spatial_gating_radius_matches_target() {
        let r = calibrate_interaction_radius(500.0, 0.0, 0.12).unwrap();
        assert!((gaussian_power_fraction(500.0, -r, r) - 0.12).abs() < 1e-12);
        let c = EnsembleConfig {
            gating: Gating::Spatial {
                waist: 500.0,
                radius: r,
            },
            ..config(10)
        };
        assert!((c.interaction_probability() - 0.12).abs() < 1e-12);
    }

    #[test]
    fn symmetry_test_requires_matching_config() {
        let c = config(1000);
        let r = run_ensemble(&c).unwrap();
        assert!(detector_symmetry_test(&r, &EnsembleConfig { seed: 1, ..c }).is_err());
        assert!(detector_symmetry_test(
            &r,
            &EnsembleConfig {
                source_split: 0.4,
                ..c
            }
        )
        .is_err());
        assert!(detector_symmetry_test(&r, &c).is_ok());
    }

    #[test]
    fn conservation_requires_equal_sizes() {
        let a = run_ensemble(&config(100)).unwrap();
        let b = run_ensemble(&config(200)).unwrap();
        assert!(count_conservation_check(&a, &b).is_err());
        assert_eq!(count_conservation_check(&a, &a).unwrap(), 0.0);
    }
}
