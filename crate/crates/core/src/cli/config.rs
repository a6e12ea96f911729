//! Flat `key = value` run configuration.
//!
//! Values come from an optional `--config` file and are overridden by
//! `--key value` flags. Every key is known up front; unknown keys and
//! malformed values are rejected before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::CliError;
use crate::field::{self, BeamPair, GridSpec};
use crate::obstruction::{self, DetectorPlane, WireSpec, DEFAULT_ACCEPTANCE_SAMPLES};
use crate::quantum::PhaseConvention;
use crate::transport::{self, EnsembleConfig, Gating};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fringes,
    Scan,
    Blocked,
    Comb,
    Photons,
    Duality,
    Uncertainty,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Fringes,
        Scenario::Scan,
        Scenario::Blocked,
        Scenario::Comb,
        Scenario::Photons,
        Scenario::Duality,
        Scenario::Uncertainty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fringes => "fringes",
            Scenario::Scan => "scan",
            Scenario::Blocked => "blocked",
            Scenario::Comb => "comb",
            Scenario::Photons => "photons",
            Scenario::Duality => "duality",
            Scenario::Uncertainty => "uncertainty",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Scenario::Photons | Scenario::Duality | Scenario::Uncertainty => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Stdout,
    File(PathBuf),
}

/// Keys accepted in config files and as `--key value` flags.
pub const KEYS: &[&str] = &[
    "wavelength",
    "crossing_angle",
    "waist",
    "amplitude_ratio",
    "relative_phase",
    "window",
    "samples",
    "wire_center",
    "wire_diameter",
    "clamped",
    "acceptance_half_angle",
    "angle_samples",
    "scan_start",
    "scan_stop",
    "scan_step",
    "positions",
    "misalignment",
    "misalignment_steps",
    "target_loss",
    "photon_count",
    "source_split",
    "interacting_fraction",
    "wire",
    "convention",
    "gating",
    "interaction_radius",
    "classical_loss",
    "counterfactual_readable_wire",
    "format",
    "output",
    "seed",
];

/// Keys that may appear as bare flags meaning `true`.
const BOOLEAN_KEYS: &[&str] = &["clamped", "wire", "counterfactual_readable_wire"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Key {
                key,
                reason: "unknown key".into(),
            });
        }
        self.entries.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn merge_file(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| CliError::Key {
                key: key.into(),
                reason: format!("cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn get_bool(&self, key: &'static str) -> Result<Option<bool>, CliError> {
        match self.entries.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true" | "1" | "yes") => Ok(Some(true)),
            Some("false" | "0" | "no") => Ok(Some(false)),
            Some(v) => Err(CliError::Key {
                key: key.into(),
                reason: format!("`{v}` is not a boolean"),
            }),
        }
    }
}

/// Split command-line arguments into scenario, config file and key/value overrides.
pub fn parse_args(args: &[String]) -> Result<(Scenario, RawConfig), CliError> {
    let mut iter = args.iter().peekable();
    let scenario: Scenario = iter
        .next()
        .ok_or_else(|| CliError::Usage("missing scenario".into()))?
        .parse()?;
    let mut overrides = Vec::new();
    let mut config_path = None;
    while let Some(arg) = iter.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("unexpected argument `{arg}`")))?;
        let (key, inline) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (key.to_string(), None),
        };
        let norm = key.replace('-', "_");
        let value = match inline {
            Some(v) => v,
            None if BOOLEAN_KEYS.contains(&norm.as_str())
                && iter.peek().is_none_or(|next| next.starts_with("--")) =>
            {
                "true".to_string()
            }
            None => iter
                .next()
                .ok_or_else(|| CliError::Key {
                    key: norm.clone(),
                    reason: "missing value".into(),
                })?
                .clone(),
        };
        if norm == "config" {
            config_path = Some(value);
        } else {
            overrides.push((norm, value));
        }
    }
    let mut raw = RawConfig::default();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config `{path}`: {e}")))?;
        raw.merge_file(&text)?;
    }
    for (k, v) in overrides {
        raw.set(&k, &v)?;
    }
    Ok((scenario, raw))
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub beams: BeamPair,
    pub wire: WireSpec,
    pub grid: GridSpec,
    pub plane: DetectorPlane,
    pub positions: Vec<f64>,
    pub misalignment: f64,
    pub misalignment_steps: usize,
    pub target_loss: Option<f64>,
    pub ensemble: EnsembleConfig,
    pub counterfactual: bool,
    pub format: Format,
    pub output: Output,
    pub seed: u64,
    echo: BTreeMap<&'static str, String>,
}

fn key_err(key: &str, e: impl fmt::Display) -> CliError {
    CliError::Key {
        key: key.into(),
        reason: e.to_string(),
    }
}

impl RunConfig {
    pub fn resolve(scenario: Scenario, raw: &RawConfig) -> Result<Self, CliError> {
        let d = BeamPair::default();
        let beams = BeamPair {
            wavelength: raw.get("wavelength")?.unwrap_or(d.wavelength),
            crossing_angle: raw.get("crossing_angle")?.unwrap_or(d.crossing_angle),
            waist: raw.get("waist")?.unwrap_or(d.waist),
            amplitude_ratio: raw.get("amplitude_ratio")?.unwrap_or(d.amplitude_ratio),
            relative_phase: raw.get("relative_phase")?.unwrap_or(d.relative_phase),
        };
        beams.validate().map_err(|e| key_of(&e, "beams"))?;
        let l = field::fringe_spacing(&beams).map_err(|e| key_err("crossing_angle", e))?;

        let default_center = match scenario {
            // the scattering analysis places the wire on a dark fringe
            Scenario::Photons => beams.dark_fringe_near(0.0),
            _ => 0.0,
        };
        let wire = WireSpec {
            center: raw.get("wire_center")?.unwrap_or(default_center),
            diameter: raw
                .get("wire_diameter")?
                .unwrap_or(obstruction::DEFAULT_WIRE_DIAMETER_UM),
            clamped: raw.get_bool("clamped")?.unwrap_or(true),
        };
        wire.validate_for(&beams)
            .map_err(|e| key_of(&e, "wire_diameter"))?;

        let default_grid = GridSpec::default_for(&beams, wire.diameter);
        let grid = GridSpec {
            window: raw.get("window")?.unwrap_or(default_grid.window),
            samples: raw.get("samples")?.unwrap_or(default_grid.samples),
        };
        if !(grid.window > 0.0) {
            return Err(key_err("window", "must be positive"));
        }
        if grid.samples < field::MIN_SAMPLES {
            return Err(key_err(
                "samples",
                format!("need at least {}", field::MIN_SAMPLES),
            ));
        }
        if grid.spacing() > l / field::MIN_SAMPLES_PER_FRINGE {
            return Err(key_err(
                "samples",
                format!(
                    "grid spacing {} um aliases the {l} um fringes",
                    grid.spacing()
                ),
            ));
        }

        let half = raw
            .get("acceptance_half_angle")?
            .unwrap_or(0.25 * beams.crossing_angle);
        let mut plane = DetectorPlane::with_half_angle(&beams, half);
        plane.samples_per_detector = raw
            .get("angle_samples")?
            .unwrap_or(DEFAULT_ACCEPTANCE_SAMPLES);
        plane
            .validate(&beams)
            .map_err(|e| key_of(&e, "acceptance_half_angle"))?;

        let positions = match raw.entries.get("positions") {
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| key_err("positions", e)))
                .collect::<Result<Vec<_>, _>>()?,
            None => obstruction::positions(
                raw.get("scan_start")?.unwrap_or(-2.0 * l),
                raw.get("scan_stop")?.unwrap_or(2.0 * l),
                raw.get("scan_step")?.unwrap_or(l / 32.0),
            )
            .map_err(|e| key_err("scan_step", e))?,
        };
        if scenario == Scenario::Scan && positions.is_empty() {
            return Err(key_err("positions", "scan needs at least one position"));
        }
        let half_window = 0.5 * grid.window;
        if let Some(p) = positions
            .iter()
            .find(|p| p.abs() + 0.5 * wire.diameter > half_window)
        {
            if scenario == Scenario::Scan {
                return Err(key_err(
                    "positions",
                    format!("{p} um lies outside the window"),
                ));
            }
        }
        if scenario != Scenario::Photons && wire.center.abs() + 0.5 * wire.diameter > half_window {
            return Err(key_err("wire_center", "wire lies outside the window"));
        }

        let misalignment = raw.get("misalignment")?.unwrap_or(0.0);
        let misalignment_steps: usize = raw.get("misalignment_steps")?.unwrap_or(1);
        if misalignment_steps == 0 {
            return Err(key_err("misalignment_steps", "must be at least 1"));
        }
        let target_loss: Option<f64> = raw.get("target_loss")?;
        if let Some(t) = target_loss {
            if !(t > 0.0 && t < 1.0) {
                return Err(key_err("target_loss", "must lie in (0, 1)"));
            }
        }

        let seed = raw.get("seed")?.unwrap_or(0u64);
        let convention = match raw.entries.get("convention").map(String::as_str) {
            None | Some("hadamard") => PhaseConvention::Hadamard,
            Some("i-phase" | "i_phase" | "iphase") => PhaseConvention::IPhase,
            Some(v) => {
                return Err(key_err(
                    "convention",
                    format!("`{v}` is not hadamard or i-phase"),
                ))
            }
        };
        let interacting_fraction = raw
            .get("interacting_fraction")?
            .unwrap_or(transport::DEFAULT_INTERACTING_FRACTION);
        let gating = match raw.entries.get("gating").map(String::as_str) {
            None | Some("bernoulli") => Gating::Bernoulli,
            Some("spatial") => {
                let radius = match raw.get("interaction_radius")? {
                    Some(r) => r,
                    None => transport::calibrate_interaction_radius(
                        beams.waist,
                        wire.center,
                        interacting_fraction,
                    )
                    .map_err(|e| key_err("interacting_fraction", e))?,
                };
                Gating::Spatial {
                    waist: beams.waist,
                    radius,
                }
            }
            Some(v) => {
                return Err(key_err(
                    "gating",
                    format!("`{v}` is not bernoulli or spatial"),
                ))
            }
        };
        let ensemble = EnsembleConfig {
            photon_count: raw.get("photon_count")?.unwrap_or(100_000),
            source_split: raw.get("source_split")?.unwrap_or(0.5),
            interacting_fraction,
            wire: raw.get_bool("wire")?.unwrap_or(true).then_some(wire),
            seed,
            convention,
            gating,
            classical_loss: raw.get("classical_loss")?.unwrap_or(0.0),
        };
        ensemble
            .validate()
            .map_err(|e| key_of(&e, "photon_count"))?;

        let format = match raw.entries.get("format").map(String::as_str) {
            None => scenario.default_format(),
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(v) => return Err(key_err("format", format!("`{v}` is not csv or json"))),
        };
        let output = match raw.entries.get("output").map(String::as_str) {
            None | Some("-") => Output::Stdout,
            Some(p) => Output::File(PathBuf::from(p)),
        };
        let counterfactual = raw
            .get_bool("counterfactual_readable_wire")?
            .unwrap_or(false);

        let mut cfg = Self {
            scenario,
            beams,
            wire,
            grid,
            plane,
            positions,
            misalignment,
            misalignment_steps,
            target_loss,
            ensemble,
            counterfactual,
            format,
            output,
            seed,
            echo: BTreeMap::new(),
        };
        cfg.echo = cfg.build_echo(raw);
        Ok(cfg)
    }

    /// Effective values of every key that influences this scenario.
    pub fn echo(&self) -> &BTreeMap<&'static str, String> {
        &self.echo
    }

    fn build_echo(&self, raw: &RawConfig) -> BTreeMap<&'static str, String> {
        use super::output::num;
        let mut e = BTreeMap::new();
        let b = &self.beams;
        e.insert("wavelength", num(b.wavelength));
        e.insert("crossing_angle", num(b.crossing_angle));
        e.insert("waist", num(b.waist));
        e.insert("amplitude_ratio", num(b.amplitude_ratio));
        e.insert("relative_phase", num(b.relative_phase));
        e.insert("seed", self.seed.to_string());
        e.insert(
            "format",
            match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
            .to_string(),
        );
        let wire_keys = |e: &mut BTreeMap<&'static str, String>| {
            e.insert("wire_center", num(self.wire.center));
            e.insert("wire_diameter", num(self.wire.diameter));
            e.insert("clamped", self.wire.clamped.to_string());
        };
        let optics_keys = |e: &mut BTreeMap<&'static str, String>| {
            e.insert("window", num(self.grid.window));
            e.insert("samples", self.grid.samples.to_string());
            e.insert(
                "acceptance_half_angle",
                num(0.5 * (self.plane.acceptance_1.1 - self.plane.acceptance_1.0)),
            );
            e.insert("angle_samples", self.plane.samples_per_detector.to_string());
        };
        match self.scenario {
            Scenario::Fringes => {
                e.insert("window", num(self.grid.window));
                e.insert("samples", self.grid.samples.to_string());
            }
            Scenario::Scan => {
                optics_keys(&mut e);
                wire_keys(&mut e);
                let list: Vec<String> = self.positions.iter().map(|p| num(*p)).collect();
                e.insert("positions", list.join(","));
            }
            Scenario::Blocked => {
                optics_keys(&mut e);
                wire_keys(&mut e);
                if let Some(t) = self.target_loss {
                    e.insert("target_loss", num(t));
                }
            }
            Scenario::Comb => {
                optics_keys(&mut e);
                e.insert("wire_diameter", num(self.wire.diameter));
                e.insert("misalignment", num(self.misalignment));
                e.insert("misalignment_steps", self.misalignment_steps.to_string());
            }
            Scenario::Photons => {
                wire_keys(&mut e);
                let c = &self.ensemble;
                e.insert("photon_count", c.photon_count.to_string());
                e.insert("source_split", num(c.source_split));
                e.insert("interacting_fraction", num(c.interacting_fraction));
                e.insert("wire", c.wire.is_some().to_string());
                e.insert("classical_loss", num(c.classical_loss));
                e.insert(
                    "convention",
                    match c.convention {
                        PhaseConvention::Hadamard => "hadamard",
                        PhaseConvention::IPhase => "i-phase",
                    }
                    .to_string(),
                );
                match c.gating {
                    Gating::Bernoulli => {
                        e.insert("gating", "bernoulli".into());
                    }
                    Gating::Spatial { radius, .. } => {
                        e.insert("gating", "spatial".into());
                        e.insert("interaction_radius", num(radius));
                    }
                }
                e.insert(
                    "counterfactual_readable_wire",
                    self.counterfactual.to_string(),
                );
            }
            Scenario::Duality => {
                e.insert(
                    "convention",
                    raw.entries
                        .get("convention")
                        .cloned()
                        .unwrap_or_else(|| "hadamard".into()),
                );
                e.insert(
                    "counterfactual_readable_wire",
                    self.counterfactual.to_string(),
                );
            }
            Scenario::Uncertainty => {}
        }
        e
    }
}

/// Attribute a simulation validation error to the offending key where possible.
fn key_of(e: &crate::Error, fallback: &str) -> CliError {
    match e {
        crate::Error::InvalidParameter { name, reason } => key_err(name, reason),
        other => key_err(fallback, other),
    }
}
