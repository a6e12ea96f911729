//! Position uncertainty of a free wire.
//!
//! A wire that deflects a photon between the beams absorbs `dp_y = p a`
//! with `p = h / lambda`. Reading that momentum localises the wire no better
//! than `dy = h / dp_y = lambda / a`, which is exactly one fringe period.
//!
//! Momenta are carried in units of `h` as an (angle, wavelength) pair and
//! lengths as (wavelength, angle), so `h` cancels symbolically and the
//! identity `dy = l` holds bit-for-bit rather than to rounding.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{self, BeamPair};

/// Momentum `h * angle / wavelength`, in units of h per micrometre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Momentum {
    pub angle: f64,
    pub wavelength: f64,
}

impl Momentum {
    /// Photon momentum `h / lambda`.
    pub fn photon(wavelength: f64) -> Self {
        Self {
            angle: 1.0,
            wavelength,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            angle: self.angle * factor,
            ..self
        }
    }

    /// Value in h/um.
    pub fn value(&self) -> f64 {
        self.angle / self.wavelength
    }

    /// The conjugate length `h / p`.
    pub fn conjugate_length(&self) -> Length {
        Length {
            wavelength: self.wavelength,
            angle: self.angle,
        }
    }
}

/// Length `wavelength / angle`, micrometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Length {
    pub wavelength: f64,
    pub angle: f64,
}

impl Length {
    pub fn value(&self) -> f64 {
        self.wavelength / self.angle
    }

    /// `length * momentum` in units of h.
    pub fn action(&self, p: &Momentum) -> f64 {
        (self.wavelength * p.angle) / (self.angle * p.wavelength)
    }
}

/// Momentum `dp_y = p a` supplied by the wire, in h/um.
pub fn deflection_momentum(wavelength: f64, crossing_angle: f64) -> Result<f64> {
    Ok(deflection(wavelength, crossing_angle)?.value())
}

fn deflection(wavelength: f64, crossing_angle: f64) -> Result<Momentum> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::param("wavelength", "must be positive"));
    }
    if !(crossing_angle >= 0.0 && crossing_angle.is_finite()) {
        return Err(Error::param("crossing_angle", "must be nonnegative"));
    }
    Ok(Momentum::photon(wavelength).scaled(crossing_angle))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyReport {
    /// `p = h / lambda`, h/um.
    pub photon_momentum: f64,
    /// `dp_y = p a`, h/um.
    pub deflection_momentum: f64,
    /// Lower bound `h / dp_y`, micrometres.
    pub wire_position_uncertainty: f64,
    pub fringe_spacing: f64,
    /// `dy >= l`.
    pub spans_fringe: bool,
    /// `dy / l`.
    pub ratio: f64,
    /// `dy * dp_y` in units of h.
    pub uncertainty_product: f64,
}

pub fn uncertainty_report(beams: &BeamPair) -> Result<UncertaintyReport> {
    beams.validate()?;
    let p = Momentum::photon(beams.wavelength);
    let dp = deflection(beams.wavelength, beams.crossing_angle)?;
    let dy = dp.conjugate_length();
    let l = field::fringe_spacing(beams)?;
    let dy_value = dy.value();
    Ok(UncertaintyReport {
        photon_momentum: p.value(),
        deflection_momentum: dp.value(),
        wire_position_uncertainty: dy_value,
        fringe_spacing: l,
        spans_fringe: dy_value >= l,
        ratio: dy_value / l,
        uncertainty_product: dy.action(&dp),
    })
}
