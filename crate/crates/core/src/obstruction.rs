//! Thin opaque wires in the intersection plane and Fraunhofer propagation
//! to the two end detectors.
//!
//! The far-field amplitude is the direct discrete sum
//! `A(theta) = sum_j E(y_j) exp(-i k theta y_j) dy`. With that normalisation
//! `|A|^2 / lambda` is power per radian, so detector counts are in the
//! same units as the intersection-plane power `sum |E|^2 dy`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{self, BeamPair, ComplexField, GridSpec};

/// Wire diameter used in the crossed-beam experiment, micrometres.
pub const DEFAULT_WIRE_DIAMETER_UM: f64 = 17.0;
pub const MIN_ACCEPTANCE_SAMPLES: usize = 32;
pub const DEFAULT_ACCEPTANCE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WireSpec {
    /// Transverse position of the wire axis, micrometres.
    pub center: f64,
    pub diameter: f64,
    /// Rigidly attached to the apparatus (recoil absorbed by the whole setup).
    pub clamped: bool,
}

impl Default for WireSpec {
    fn default() -> Self {
        Self {
            center: 0.0,
            diameter: DEFAULT_WIRE_DIAMETER_UM,
            clamped: true,
        }
    }
}

impl WireSpec {
    pub fn new(center: f64, diameter: f64, clamped: bool) -> Result<Self> {
        let wire = Self {
            center,
            diameter,
            clamped,
        };
        wire.validate()?;
        Ok(wire)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(Error::param("wire_diameter", "must be positive"));
        }
        if !self.center.is_finite() {
            return Err(Error::param("wire_center", "must be finite"));
        }
        Ok(())
    }

    /// Thin-wire regime: the wire must be narrower than one fringe.
    pub fn validate_for(&self, beams: &BeamPair) -> Result<()> {
        self.validate()?;
        let l = field::fringe_spacing(beams)?;
        if self.diameter >= l {
            return Err(Error::param(
                "wire_diameter",
                format!(
                    "{} um is not thinner than the fringe spacing {l} um",
                    self.diameter
                ),
            ));
        }
        Ok(())
    }

    pub fn at(&self, center: f64) -> Self {
        Self { center, ..*self }
    }

    fn interval(&self, shift: f64) -> (f64, f64) {
        let c = self.center + shift;
        (c - 0.5 * self.diameter, c + 0.5 * self.diameter)
    }
}

/// A set of parallel wires sharing a common misalignment offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireComb {
    pub wires: Vec<WireSpec>,
    pub misalignment: f64,
}

impl WireComb {
    pub fn new(wires: Vec<WireSpec>, misalignment: f64) -> Result<Self> {
        let comb = Self {
            wires,
            misalignment,
        };
        comb.validate()?;
        Ok(comb)
    }

    pub fn empty() -> Self {
        Self {
            wires: Vec::new(),
            misalignment: 0.0,
        }
    }

    pub fn single(wire: WireSpec) -> Self {
        Self {
            wires: vec![wire],
            misalignment: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.wires {
            w.validate()?;
        }
        let mut iv = self.intervals();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in iv.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::OverlappingWires(pair[1].0));
            }
        }
        Ok(())
    }

    /// Occupied `[lo, hi]` intervals after misalignment.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.wires
            .iter()
            .map(|w| w.interval(self.misalignment))
            .collect()
    }
}

/// Per-sample transmission. Cells partially covered by a wire transmit
/// their uncovered fraction.
pub fn transmission(field: &ComplexField, comb: &WireComb) -> Result<Vec<f64>> {
    comb.validate()?;
    let (lo, hi) = field.extent();
    let intervals = comb.intervals();
    for &(a, b) in &intervals {
        if a < lo || b > hi {
            return Err(Error::WireOutsideWindow {
                lo: a,
                hi: b,
                window_lo: lo,
                window_hi: hi,
            });
        }
    }
    let dy = field.spacing;
    let mut t = vec![1.0; field.len()];
    for &(a, b) in &intervals {
        let first = (((a - field.origin) / dy) - 0.5).floor().max(0.0) as usize;
        let last = ((((b - field.origin) / dy) + 0.5).ceil() as usize).min(field.len() - 1);
        for (j, tj) in t.iter_mut().enumerate().take(last + 1).skip(first) {
            let y = field.position(j);
            let covered = (b.min(y + 0.5 * dy) - a.max(y - 0.5 * dy)).max(0.0);
            *tj -= covered / dy;
        }
    }
    for tj in &mut t {
        *tj = tj.clamp(0.0, 1.0);
    }
    Ok(t)
}

/// Field multiplied by the wire mask.
pub fn apply_mask(field: &ComplexField, comb: &WireComb) -> Result<ComplexField> {
    let t = transmission(field, comb)?;
    Ok(field.with_samples(field.samples.iter().zip(&t).map(|(e, t)| e * t).collect()))
}

/// The complementary aperture: the part of the field the wires remove.
pub fn complement(field: &ComplexField, comb: &WireComb) -> Result<ComplexField> {
    let t = transmission(field, comb)?;
    Ok(field.with_samples(
        field
            .samples
            .iter()
            .zip(&t)
            .map(|(e, t)| e * (1.0 - t))
            .collect(),
    ))
}

/// Far-field amplitudes sampled at a set of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub angles: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub wavelength: f64,
}

impl FarField {
    /// Total power over the sampled angles (trapezoid rule on a sorted grid).
    pub fn power(&self) -> f64 {
        trapezoid(&self.angles, &self.amplitudes) / self.wavelength
    }
}

/// Discrete Fraunhofer transform of `field` at the given angles (radians).
pub fn farfield(field: &ComplexField, angles: &[f64]) -> FarField {
    let k = 2.0 * std::f64::consts::PI / field.wavelength;
    // zero samples contribute exact zeros, so skipping them leaves every
    // sum bit-identical while making narrow complementary fields cheap
    let support: Vec<(f64, Complex64)> = field
        .positions()
        .zip(&field.samples)
        .filter(|(_, e)| **e != Complex64::new(0.0, 0.0))
        .map(|(y, e)| (y, *e))
        .collect();
    let dy = field.spacing;
    let amplitudes = angles
        .par_iter()
        .map(|&theta| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(y, e) in &support {
                let (s, c) = (-k * theta * y).sin_cos();
                acc += e * Complex64::new(c, s);
            }
            acc * dy
        })
        .collect();
    FarField {
        angles: angles.to_vec(),
        amplitudes,
        wavelength: field.wavelength,
    }
}

/// Angular acceptance of the two end detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorPlane {
    /// Detector 1 interval, around the beam-1 direction `+a/2`.
    pub acceptance_1: (f64, f64),
    /// Detector 2 interval, around the beam-2 direction `-a/2`.
    pub acceptance_2: (f64, f64),
    pub samples_per_detector: usize,
}

impl DetectorPlane {
    /// Half-angle `a/4` around each beam direction.
    pub fn default_for(beams: &BeamPair) -> Self {
        Self::with_half_angle(beams, 0.25 * beams.crossing_angle)
    }

    pub fn with_half_angle(beams: &BeamPair, half: f64) -> Self {
        let d = 0.5 * beams.crossing_angle;
        Self {
            acceptance_1: (d - half, d + half),
            acceptance_2: (-d - half, -d + half),
            samples_per_detector: DEFAULT_ACCEPTANCE_SAMPLES,
        }
    }

    pub fn validate(&self, beams: &BeamPair) -> Result<()> {
        let d = 0.5 * beams.crossing_angle;
        let (a, b) = (self.acceptance_1, self.acceptance_2);
        if !(a.0 < a.1 && b.0 < b.1) {
            return Err(Error::param("acceptance", "intervals must be nonempty"));
        }
        if !(a.0 <= d && d <= a.1) || !(b.0 <= -d && -d <= b.1) {
            return Err(Error::param(
                "acceptance",
                "each interval must contain its beam direction",
            ));
        }
        if a.0 < b.1 && b.0 < a.1 {
            return Err(Error::param("acceptance", "intervals overlap"));
        }
        if self.samples_per_detector < MIN_ACCEPTANCE_SAMPLES {
            return Err(Error::UnresolvedAcceptance {
                detector: 1,
                samples: self.samples_per_detector,
                required: MIN_ACCEPTANCE_SAMPLES,
            });
        }
        Ok(())
    }

    /// Uniform angle samples over both acceptances, detector 2 first so the
    /// grid is ascending.
    pub fn angle_grid(&self) -> Vec<f64> {
        let n = self.samples_per_detector;
        let lin =
            |(lo, hi): (f64, f64)| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
        let mut out: Vec<f64> = lin(self.acceptance_2)
            .chain(lin(self.acceptance_1))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

fn trapezoid(angles: &[f64], amps: &[Complex64]) -> f64 {
    angles
        .windows(2)
        .zip(amps.windows(2))
        .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0].norm_sqr() + a[1].norm_sqr()))
        .sum()
}

/// Power entering each detector: `integral |A|^2 d theta / lambda` over its acceptance.
pub fn detector_counts(ff: &FarField, plane: &DetectorPlane) -> Result<(f64, f64)> {
    let mut counts = [0.0; 2];
    for (slot, (detector, (lo, hi))) in counts
        .iter_mut()
        .zip([(1u8, plane.acceptance_1), (2u8, plane.acceptance_2)])
    {
        let eps = 1e-12 * (hi - lo);
        let idx: Vec<usize> = (0..ff.angles.len())
            .filter(|&i| ff.angles[i] >= lo - eps && ff.angles[i] <= hi + eps)
            .collect();
        let unresolved = Error::UnresolvedAcceptance {
            detector,
            samples: idx.len(),
            required: MIN_ACCEPTANCE_SAMPLES,
        };
        if idx.len() < MIN_ACCEPTANCE_SAMPLES {
            return Err(unresolved);
        }
        let (first, last) = (idx[0], idx[idx.len() - 1]);
        let step = (hi - lo) / (idx.len() - 1) as f64;
        if ff.angles[first] - lo > step + eps || hi - ff.angles[last] > step + eps {
            return Err(unresolved);
        }
        *slot = trapezoid(&ff.angles[first..=last], &ff.amplitudes[first..=last]) / ff.wavelength;
    }
    Ok((counts[0], counts[1]))
}

/// Precomputed unmasked field and far field for repeated mask evaluations.
///
/// Masked far fields are formed as `A_unmasked - A_complement`; the
/// complement is nonzero only under the wires, so each mask costs a few
/// dozen samples per angle.
#[derive(Debug, Clone)]
pub struct Bench {
    pub field: ComplexField,
    pub plane: DetectorPlane,
    angles: Vec<f64>,
    unmasked: FarField,
    baseline: (f64, f64),
}

/// Detector counts and loss for one mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaskOutcome {
    pub count_1: f64,
    pub count_2: f64,
    /// `1 - (count_1 + count_2) / (unmasked count_1 + count_2)`; unclamped.
    pub loss_fraction: f64,
    /// Power removed at the intersection plane, relative to the unmasked
    /// detected power.
    pub absorbed_fraction: f64,
}

impl MaskOutcome {
    /// Light scattered out of both acceptances by diffraction.
    pub fn diffracted_fraction(&self) -> f64 {
        self.loss_fraction - self.absorbed_fraction
    }
}

impl Bench {
    pub fn new(field: ComplexField, plane: DetectorPlane) -> Result<Self> {
        let angles = plane.angle_grid();
        let unmasked = farfield(&field, &angles);
        let baseline = detector_counts(&unmasked, &plane)?;
        if !(baseline.0 + baseline.1 > 0.0) {
            return Err(Error::param("field", "no power reaches the detectors"));
        }
        Ok(Self {
            field,
            plane,
            angles,
            unmasked,
            baseline,
        })
    }

    pub fn for_beams(beams: &BeamPair, grid: &GridSpec, plane: &DetectorPlane) -> Result<Self> {
        plane.validate(beams)?;
        Self::new(field::superpose_on(beams, grid)?, *plane)
    }

    pub fn baseline(&self) -> (f64, f64) {
        self.baseline
    }

    pub fn unmasked(&self) -> &FarField {
        &self.unmasked
    }

    pub fn masked_farfield(&self, comb: &WireComb) -> Result<FarField> {
        let strip = complement(&self.field, comb)?;
        let removed = farfield(&strip, &self.angles);
        Ok(FarField {
            angles: self.angles.clone(),
            amplitudes: self
                .unmasked
                .amplitudes
                .iter()
                .zip(&removed.amplitudes)
                .map(|(a, b)| a - b)
                .collect(),
            wavelength: self.field.wavelength,
        })
    }

    pub fn evaluate(&self, comb: &WireComb) -> Result<MaskOutcome> {
        let ff = self.masked_farfield(comb)?;
        let (c1, c2) = detector_counts(&ff, &self.plane)?;
        let t = transmission(&self.field, comb)?;
        let removed: f64 = self
            .field
            .samples
            .iter()
            .zip(&t)
            .map(|(e, t)| e.norm_sqr() * (1.0 - t * t))
            .sum::<f64>()
            * self.field.spacing;
        let total = self.baseline.0 + self.baseline.1;
        Ok(MaskOutcome {
            count_1: c1,
            count_2: c2,
            loss_fraction: 1.0 - (c1 + c2) / total,
            absorbed_fraction: removed / total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub wire_center: f64,
    pub count_1: f64,
    pub count_2: f64,
    /// Raw loss; may be slightly negative from discretisation.
    pub loss_fraction: f64,
    pub absorbed_fraction: f64,
}

impl ScanRow {
    fn from_outcome(wire_center: f64, o: MaskOutcome) -> Self {
        Self {
            wire_center,
            count_1: o.count_1,
            count_2: o.count_2,
            loss_fraction: o.loss_fraction,
            absorbed_fraction: o.absorbed_fraction,
        }
    }

    /// Loss as shown in reports: small negative values clamp to zero.
    pub fn reported_loss(&self) -> f64 {
        self.loss_fraction.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Unmasked detector counts the losses are relative to.
    pub baseline: (f64, f64),
}

impl ScanResult {
    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss_fraction).collect()
    }
}

/// Scan one wire across the given positions on a prepared [`Bench`].
pub fn scan_on(bench: &Bench, wire: &WireSpec, positions: &[f64]) -> Result<ScanResult> {
    if positions.is_empty() {
        return Err(Error::param(
            "positions",
            "scan needs at least one position",
        ));
    }
    let rows = positions
        .par_iter()
        .map(|&y| {
            let o = bench.evaluate(&WireComb::single(wire.at(y)))?;
            Ok(ScanRow::from_outcome(y, o))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        rows,
        baseline: bench.baseline(),
    })
}

/// Wire scan on the default grid for `beams` and `wire`.
pub fn scan_wire(
    beams: &BeamPair,
    wire: &WireSpec,
    plane: &DetectorPlane,
    positions: &[f64],
) -> Result<ScanResult> {
    wire.validate_for(beams)?;
    let grid = GridSpec::default_for(beams, wire.diameter);
    scan_on(&Bench::for_beams(beams, &grid, plane)?, wire, positions)
}

/// Loss with beam 2 switched off and the wire in place.
pub fn blocked_beam_loss(beams: &BeamPair, wire: &WireSpec, plane: &DetectorPlane) -> Result<f64> {
    Ok(blocked_beam_outcome(beams, wire, plane)?.loss_fraction)
}

pub fn blocked_beam_outcome(
    beams: &BeamPair,
    wire: &WireSpec,
    plane: &DetectorPlane,
) -> Result<MaskOutcome> {
    wire.validate_for(beams)?;
    let single = beams.single_beam();
    let grid = GridSpec::default_for(&single, wire.diameter);
    Bench::for_beams(&single, &grid, plane)?.evaluate(&WireComb::single(*wire))
}

/// Wires of the given diameter at every detected dark fringe, shifted by
/// `misalignment`. Returns one row keyed by the misalignment.
pub fn comb_at_dark_fringes(
    beams: &BeamPair,
    plane: &DetectorPlane,
    diameter: f64,
    misalignment: f64,
) -> Result<ScanResult> {
    let template = WireSpec::new(0.0, diameter, true)?;
    template.validate_for(beams)?;
    let grid = GridSpec::default_for(beams, diameter);
    let bench = Bench::for_beams(beams, &grid, plane)?;
    comb_on(&bench, diameter, misalignment)
}

pub fn comb_on(bench: &Bench, diameter: f64, misalignment: f64) -> Result<ScanResult> {
    let comb = dark_fringe_comb(&bench.field, diameter, misalignment)?;
    let o = bench.evaluate(&comb)?;
    Ok(ScanResult {
        rows: vec![ScanRow::from_outcome(misalignment, o)],
        baseline: bench.baseline(),
    })
}

/// Comb with one wire per detected dark fringe; wires that would leave the
/// window after misalignment are dropped.
pub fn dark_fringe_comb(
    field: &ComplexField,
    diameter: f64,
    misalignment: f64,
) -> Result<WireComb> {
    let geometry = field::locate_fringes(field)?;
    let (lo, hi) = field.extent();
    let wires = geometry
        .dark_positions
        .iter()
        .filter(|&&y| {
            let c = y + misalignment;
            c - 0.5 * diameter >= lo && c + 0.5 * diameter <= hi
        })
        .map(|&y| WireSpec {
            center: y,
            diameter,
            clamped: true,
        })
        .collect::<Vec<_>>();
    if wires.is_empty() {
        return Err(Error::FringeDetection(
            "no dark fringes for the comb".into(),
        ));
    }
    WireComb::new(wires, misalignment)
}

/// Waist at which the blocked-beam loss reaches a target, with the
/// two-beam bright-fringe loss at that waist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub waist: f64,
    pub blocked_loss: f64,
    pub bright_fringe_loss: f64,
    pub iterations: usize,
}

pub const CALIBRATION_TOLERANCE: f64 = 1e-4;

/// Solve for the waist giving `target` blocked-beam loss by bisection.
///
/// Loss falls monotonically with waist, so the bracket is grown
/// geometrically from the current waist before bisecting.
pub fn calibrate_waist(
    beams: &BeamPair,
    wire: &WireSpec,
    plane: &DetectorPlane,
    target: f64,
) -> Result<Calibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("target_loss", "must lie in (0, 1)"));
    }
    let min_waist = (10.0 * beams.wavelength).max(2.0 * wire.diameter);
    let loss_at = |w: f64| -> Result<f64> {
        let b = BeamPair { waist: w, ..*beams };
        blocked_beam_loss(&b, wire, plane)
    };

    let mut iterations = 0;
    let start = beams.waist.max(min_waist);
    let f0 = loss_at(start)? - target;
    let (mut lo, mut hi) = (start, start);
    if f0 > 0.0 {
        loop {
            hi *= 2.0;
            iterations += 1;
            if loss_at(hi)? - target <= 0.0 {
                break;
            }
            if iterations > 40 {
                return Err(Error::Calibration(
                    "target loss not reached at large waist".into(),
                ));
            }
        }
    } else {
        loop {
            lo = (lo * 0.5).max(min_waist);
            iterations += 1;
            if loss_at(lo)? - target >= 0.0 {
                break;
            }
            if lo <= min_waist {
                return Err(Error::Calibration(format!(
                    "target loss {target} exceeds the loss at the minimum waist {min_waist} um"
                )));
            }
        }
    }

    let mut best = (start, f0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = loss_at(mid)? - target;
        iterations += 1;
        if f.abs() < best.1.abs() {
            best = (mid, f);
        }
        if f.abs() <= 0.1 * CALIBRATION_TOLERANCE || hi - lo <= 1e-9 * mid {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.1.abs() > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(format!(
            "bisection stalled at waist {} um with loss error {}",
            best.0, best.1
        )));
    }
    let calibrated = BeamPair {
        waist: best.0,
        ..*beams
    };
    let bright = calibrated.bright_fringe_near(wire.center);
    let grid = GridSpec::default_for(&calibrated, wire.diameter);
    let bench = Bench::for_beams(&calibrated, &grid, plane)?;
    let bright_loss = bench
        .evaluate(&WireComb::single(wire.at(bright)))?
        .loss_fraction;
    Ok(Calibration {
        waist: best.0,
        blocked_loss: best.1 + target,
        bright_fringe_loss: bright_loss,
        iterations,
    })
}

/// Period of a uniformly sampled curve from its autocorrelation: the
/// first positive peak after the first negative lobe.
pub fn autocorrelation_period(values: &[f64], step: f64) -> Option<f64> {
    let n = values.len();
    if n < 8 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let acf = |lag: usize| -> f64 {
        (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() / (n - lag) as f64
    };
    let max_lag = n * 3 / 4;
    let first_negative = (1..max_lag).find(|&lag| acf(lag) < 0.0)?;
    let values: Vec<f64> = (0..=max_lag).map(acf).collect();
    (first_negative..max_lag)
        .find(|&lag| {
            values[lag] > 0.0 && values[lag] >= values[lag - 1] && values[lag] >= values[lag + 1]
        })
        .map(|lag| lag as f64 * step)
}

/// Uniform positions `start, start + step, ...` up to and including `stop`.
pub fn positions(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::param("scan_step", "need step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}
