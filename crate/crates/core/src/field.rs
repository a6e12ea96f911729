//! Classical two-beam field at the intersection plane.
//!
//! The field is sampled on a 1-D transverse axis `y` (micrometres) normal
//! to the fringes:
//!
//! ```text
//! E(y) = G(y) * [exp(+i k y a/2) + r exp(-i k y a/2 + i phi)],   G(y) = exp(-y^2 / w^2)
//! ```
//!
//! with `k = 2 pi / lambda`, crossing angle `a`, amplitude ratio `r` and
//! relative phase `phi`. The intensity fringes have period `l = lambda / a`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::extrema;

pub const DEFAULT_WAVELENGTH_UM: f64 = 0.633;
pub const DEFAULT_CROSSING_ANGLE: f64 = 0.01;
pub const DEFAULT_WAIST_UM: f64 = 500.0;
pub const MIN_SAMPLES: usize = 16;

/// Minimum samples per fringe period accepted by [`superpose`].
pub const MIN_SAMPLES_PER_FRINGE: f64 = 8.0;

/// Minima of the compensated profile below this fraction of the adjacent
/// maxima count as dark fringes.
pub const DARK_THRESHOLD: f64 = 1e-3;

// Compensation divides by |G|^2; samples where it has dropped below this
// fraction of its peak are excluded from fringe analysis.
const ENVELOPE_FLOOR: f64 = 1e-4;

/// Physical parameters of the two crossing beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamPair {
    /// Wavelength in micrometres.
    pub wavelength: f64,
    /// Full angle between the beams, radians.
    pub crossing_angle: f64,
    /// 1/e^2 intensity half-width of the Gaussian envelope, micrometres.
    pub waist: f64,
    /// Amplitude of beam 2 relative to beam 1.
    pub amplitude_ratio: f64,
    /// Phase of beam 2 relative to beam 1 at y = 0, radians.
    pub relative_phase: f64,
}

impl Default for BeamPair {
    fn default() -> Self {
        Self {
            wavelength: DEFAULT_WAVELENGTH_UM,
            crossing_angle: DEFAULT_CROSSING_ANGLE,
            waist: DEFAULT_WAIST_UM,
            amplitude_ratio: 1.0,
            relative_phase: 0.0,
        }
    }
}

/// Which beam components to include when building a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamSelect {
    Both,
    First,
    Second,
}

impl BeamPair {
    pub fn new(
        wavelength: f64,
        crossing_angle: f64,
        waist: f64,
        amplitude_ratio: f64,
        relative_phase: f64,
    ) -> Result<Self> {
        let beams = Self {
            wavelength,
            crossing_angle,
            waist,
            amplitude_ratio,
            relative_phase,
        };
        beams.validate()?;
        Ok(beams)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::param("wavelength", "must be positive"));
        }
        if !(self.crossing_angle > 0.0 && self.crossing_angle < 0.2) {
            return Err(Error::param(
                "crossing_angle",
                "must lie in (0, 0.2) rad (small-angle regime)",
            ));
        }
        if !(self.waist >= 10.0 * self.wavelength && self.waist.is_finite()) {
            return Err(Error::param("waist", "must be at least 10 wavelengths"));
        }
        if !(self.amplitude_ratio >= 0.0 && self.amplitude_ratio.is_finite()) {
            return Err(Error::param("amplitude_ratio", "must be >= 0"));
        }
        if !self.relative_phase.is_finite() {
            return Err(Error::param("relative_phase", "must be finite"));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Transverse wavenumber of each beam, `k a / 2`.
    pub fn transverse_wavenumber(&self) -> f64 {
        0.5 * self.wavenumber() * self.crossing_angle
    }

    /// Gaussian amplitude envelope `G(y)`.
    pub fn envelope(&self, y: f64) -> f64 {
        (-(y * y) / (self.waist * self.waist)).exp()
    }

    pub fn amplitude(&self, y: f64, select: BeamSelect) -> Complex64 {
        let q = self.transverse_wavenumber() * y;
        let g = self.envelope(y);
        let first = Complex64::from_polar(g, q);
        let second = Complex64::from_polar(g * self.amplitude_ratio, -q + self.relative_phase);
        match select {
            BeamSelect::Both => first + second,
            BeamSelect::First => first,
            BeamSelect::Second => second,
        }
    }

    /// The same geometry with beam 2 switched off.
    pub fn single_beam(&self) -> Self {
        Self {
            amplitude_ratio: 0.0,
            ..*self
        }
    }

    /// Positions of the compensated-intensity minima, `k a y - phi = pi (mod 2 pi)`.
    pub fn dark_fringe_near(&self, y: f64) -> f64 {
        let l = self.crossing_angle.recip() * self.wavelength;
        let first = (PI + self.relative_phase) / (2.0 * self.transverse_wavenumber());
        first + ((y - first) / l).round() * l
    }

    pub fn bright_fringe_near(&self, y: f64) -> f64 {
        let l = self.crossing_angle.recip() * self.wavelength;
        let first = self.relative_phase / (2.0 * self.transverse_wavenumber());
        first + ((y - first) / l).round() * l
    }
}

/// Sampling of the intersection plane: a symmetric window around y = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Full width of the window, micrometres.
    pub window: f64,
    pub samples: usize,
}

impl GridSpec {
    /// Six waists wide; spacing fine enough for 32 samples per fringe and
    /// 16 samples across a wire of the given diameter.
    pub fn default_for(beams: &BeamPair, wire_diameter: f64) -> Self {
        let l = beams.wavelength / beams.crossing_angle;
        let spacing = (l / 32.0).min(wire_diameter / 16.0);
        let window = 6.0 * beams.waist;
        let mut samples = (window / spacing).ceil() as usize + 1;
        if samples % 2 == 0 {
            samples += 1;
        }
        Self {
            window,
            samples: samples.max(MIN_SAMPLES + 1),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.window / (self.samples - 1) as f64
    }
}

/// Complex scalar amplitude on a uniform transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub samples: Vec<Complex64>,
    /// Coordinate of the first sample, micrometres.
    pub origin: f64,
    /// Grid step, micrometres.
    pub spacing: f64,
    pub wavelength: f64,
    /// Envelope amplitude `|G(y)|` per sample, used for fringe compensation.
    /// All ones for fields that were not built from a [`BeamPair`].
    pub envelope: Vec<f64>,
}

impl ComplexField {
    pub fn new(
        samples: Vec<Complex64>,
        origin: f64,
        spacing: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::param(
                "samples",
                format!("need at least {MIN_SAMPLES}"),
            ));
        }
        if !(spacing > 0.0) {
            return Err(Error::param("spacing", "must be positive"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::param("wavelength", "must be positive"));
        }
        let envelope = vec![1.0; samples.len()];
        Ok(Self {
            samples,
            origin,
            spacing,
            wavelength,
            envelope,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.position(j))
    }

    /// Extent covered by the sample cells, `[origin - dy/2, last + dy/2]`.
    pub fn extent(&self) -> (f64, f64) {
        let half = 0.5 * self.spacing;
        (self.origin - half, self.position(self.len() - 1) + half)
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.origin + self.position(self.len() - 1))
    }

    /// Integrated power `sum |E|^2 dy`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|e| e.norm_sqr()).sum::<f64>() * self.spacing
    }

    /// A field on the same grid with different samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        assert_eq!(samples.len(), self.len());
        Self {
            samples,
            ..self.clone()
        }
    }
}

/// Sampled two-beam superposition over `[-window/2, window/2]`.
pub fn superpose(beams: &BeamPair, window: f64, sample_count: usize) -> Result<ComplexField> {
    superpose_component(beams, window, sample_count, BeamSelect::Both)
}

pub fn superpose_component(
    beams: &BeamPair,
    window: f64,
    sample_count: usize,
    select: BeamSelect,
) -> Result<ComplexField> {
    beams.validate()?;
    if sample_count < MIN_SAMPLES {
        return Err(Error::param(
            "samples",
            format!("need at least {MIN_SAMPLES}"),
        ));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::param("window", "must be positive"));
    }
    let spacing = window / (sample_count - 1) as f64;
    let limit = fringe_spacing(beams)? / MIN_SAMPLES_PER_FRINGE;
    if spacing > limit {
        return Err(Error::AliasedGrid { spacing, limit });
    }
    let origin = -0.5 * window;
    let (samples, envelope): (Vec<_>, Vec<_>) = (0..sample_count)
        .into_par_iter()
        .map(|j| {
            let y = origin + j as f64 * spacing;
            (beams.amplitude(y, select), beams.envelope(y))
        })
        .unzip();
    Ok(ComplexField {
        samples,
        origin,
        spacing,
        wavelength: beams.wavelength,
        envelope,
    })
}

/// Superposition on a [`GridSpec`].
pub fn superpose_on(beams: &BeamPair, grid: &GridSpec) -> Result<ComplexField> {
    superpose(beams, grid.window, grid.samples)
}

pub fn intensity(field: &ComplexField) -> Vec<f64> {
    field.samples.iter().map(|e| e.norm_sqr()).collect()
}

/// Intensity divided by the envelope intensity `|G|^2`.
pub fn compensated_intensity(field: &ComplexField) -> Vec<f64> {
    field
        .samples
        .iter()
        .zip(&field.envelope)
        .map(|(e, g)| e.norm_sqr() / (g * g))
        .collect()
}

/// Fringe period `l = lambda / a`.
pub fn fringe_spacing(beams: &BeamPair) -> Result<f64> {
    if beams.crossing_angle == 0.0 {
        return Err(Error::NoFringeConfiguration);
    }
    Ok(beams.wavelength / beams.crossing_angle)
}

/// Michelson contrast `(I_max - I_min) / (I_max + I_min)` of a profile.
///
/// Interior extrema are refined to sub-sample precision, so a sampled
/// sinusoid yields its exact contrast even when no sample falls on a null.
/// Pass an envelope-compensated profile to measure pure fringe contrast.
pub fn visibility(profile: &[f64]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::param("intensity_profile", "must not be empty"));
    }
    if profile.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::param(
            "intensity_profile",
            "values must be finite and nonnegative",
        ));
    }
    let (mut lo, mut hi) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if hi == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    for e in extrema::local_extrema(profile, 1e-9 * hi) {
        if e.is_max {
            hi = hi.max(e.value);
        } else {
            lo = lo.min(e.value);
        }
    }
    let lo = lo.max(0.0);
    Ok(((hi - lo) / (hi + lo)).clamp(0.0, 1.0))
}

/// Visibility of the compensated profile over the central `+-period`
/// of the field window.
pub fn fringe_visibility(field: &ComplexField, period: f64) -> Result<f64> {
    let centre = field.centre();
    let comp = compensated_intensity(field);
    let central: Vec<f64> = field
        .positions()
        .zip(comp)
        .filter(|(y, _)| (y - centre).abs() <= period)
        .map(|(_, c)| c)
        .collect();
    if central.len() < 5 {
        return Err(Error::param(
            "period",
            "central window holds fewer than 5 samples",
        ));
    }
    visibility(&central)
}

/// Measured fringe geometry of a sampled field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeGeometry {
    /// Measured fringe period, micrometres.
    pub spacing_l: f64,
    pub dark_positions: Vec<f64>,
    pub bright_positions: Vec<f64>,
}

/// Locate minima and maxima of the envelope-compensated intensity.
pub fn locate_fringes(field: &ComplexField) -> Result<FringeGeometry> {
    let peak_env = field.envelope.iter().cloned().fold(0.0, f64::max);
    let floor = ENVELOPE_FLOOR * peak_env * peak_env;
    let valid: Vec<usize> = (0..field.len())
        .filter(|&j| field.envelope[j].powi(2) >= floor)
        .collect();
    let (start, end) = match (valid.first(), valid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            return Err(Error::FringeDetection(
                "envelope vanishes on the grid".into(),
            ))
        }
    };
    let comp: Vec<f64> = compensated_intensity(field)[start..=end].to_vec();
    let (cmin, cmax) = comp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(cmax > 0.0) || (cmax - cmin) / (cmax + cmin) < 1e-6 {
        return Err(Error::FringeDetection("no fringe contrast".into()));
    }
    let ext = extrema::local_extrema(&comp, 1e-9 * cmax);
    let to_y = |idx: f64| field.origin + (start as f64 + idx) * field.spacing;

    let minima: Vec<(f64, f64)> = ext
        .iter()
        .filter(|e| !e.is_max)
        .map(|e| (to_y(e.index), e.value))
        .collect();
    let maxima: Vec<(f64, f64)> = ext
        .iter()
        .filter(|e| e.is_max)
        .map(|e| (to_y(e.index), e.value))
        .collect();
    if minima.len() < 2 {
        return Err(Error::FringeDetection(
            "fewer than two minima in the window".into(),
        ));
    }
    let spacing_l = (minima[minima.len() - 1].0 - minima[0].0) / (minima.len() - 1) as f64;

    let dark_positions = minima
        .iter()
        .filter(|(y, v)| {
            let before = maxima.iter().rev().find(|(my, _)| my < y).map(|m| m.1);
            let after = maxima.iter().find(|(my, _)| my > y).map(|m| m.1);
            let reference = match (before, after) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => cmax,
            };
            *v < DARK_THRESHOLD * reference
        })
        .map(|(y, _)| *y)
        .collect();
    Ok(FringeGeometry {
        spacing_l,
        dark_positions,
        bright_positions: maxima.iter().map(|m| m.0).collect(),
    })
}
