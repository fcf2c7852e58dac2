//! Flat `key = value` run configuration.
//!
//! Lines are either blank, full-line `#` comments, or `key = value` with
//! dotted key prefixes (`constants.*`, `potential.*`, `grid.*`, `solver.*`,
//! `absorber.*`, `scan.*`, `weights.*`, `fit.*`, `output.*`). Every violated
//! invariant is reported with the offending key name and, when the value
//! came from the file, its line number. Unknown and duplicate keys are
//! errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use qbounce::analysis::{
    GridPolicy, PopulationWeights, DEFAULT_CEILING_DIFFUSENESS, DEFAULT_CEILING_V0_PEV,
    DEFAULT_Z0_STEP_UM, POPULATION_COUNT,
};
use qbounce::constants::METER_PER_UM;
use qbounce::transmission::{AbsorberModel, EntranceDensity};
use qbounce::PhysicalConstants;

use crate::error::{CliError, CliResult};

/// Reference calibration values for the `appendix` scenario: the published
/// chain at the 15 µm slit (area, attenuation, step length, entrance
/// density, cavity length) and the slit widths of its comparison table.
pub mod reference {
    pub const AREA: f64 = 0.0173;
    pub const K_PER_CM: f64 = 0.54991;
    pub const DELTA_X_CM: f64 = 0.0320259;
    pub const N_MAX: f64 = 0.3;
    pub const CAVITY_CM: f64 = 10.0;
    pub const SLITS_UM: [f64; 3] = [15.0, 20.0, 30.0];
}

/// One centimetre in metres.
pub const METER_PER_CM: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Spectrum,
    Scan,
    Fit,
    Appendix,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Scan => "scan",
            Scenario::Fit => "fit",
            Scenario::Appendix => "appendix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Box,
    Gravity,
    GravityAbsorber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Populations,
    Threshold,
}

/// Fully validated run configuration, SI units throughout.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub constants: PhysicalConstants,
    pub potential_kind: PotentialKind,
    /// Box width, m.
    pub box_width: f64,
    /// Slit width for single-configuration scenarios, m.
    pub slit: f64,
    /// Absorber ceiling height, J.
    pub v0: f64,
    /// Absorber ceiling edge softness, m.
    pub diffuseness: f64,
    pub n_points: usize,
    pub z_max_factor: f64,
    /// Explicit grid extent override, m.
    pub z_max_override: Option<f64>,
    pub n_states: usize,
    pub absorber: AbsorberModel,
    /// Scan slit widths, m, strictly increasing.
    pub slits: Vec<f64>,
    pub weights: PopulationWeights,
    pub fit_mode: FitMode,
    /// Threshold-fit scan resolution, µm.
    pub z0_step_um: f64,
    pub out_dir: PathBuf,
    pub data_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn grid_policy(&self) -> GridPolicy {
        GridPolicy {
            n_points: self.n_points,
            z_max_factor: self.z_max_factor,
        }
    }
}

fn key_error(key: &str, line: Option<usize>, msg: impl AsRef<str>) -> CliError {
    match line {
        Some(l) => CliError::Config(format!("{key} (line {l}): {}", msg.as_ref())),
        None => CliError::Config(format!("{key}: {}", msg.as_ref())),
    }
}

/// Raw key/value entries with line numbers, duplicate-checked.
struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {line_no}: expected `key = value`, got {trimmed:?}"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {line_no}: empty key")));
            }
            if let Some((_, first)) = entries.get(&key) {
                return Err(CliError::Config(format!(
                    "line {line_no}: duplicate key {key:?} (first set on line {first})"
                )));
            }
            entries.insert(key, (value, line_no));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn finish(self) -> CliResult<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(CliError::Config(format!(
                "unknown key {key:?} (line {line})"
            )));
        }
        Ok(())
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CliResult<(f64, Option<usize>)> {
        match self.take(key) {
            Some((v, line)) => {
                let x = v.parse::<f64>().map_err(|_| {
                    key_error(key, Some(line), format!("{v:?} is not a number"))
                })?;
                Ok((x, Some(line)))
            }
            None => Ok((default, None)),
        }
    }

    fn f64_opt(&mut self, key: &str) -> CliResult<Option<(f64, usize)>> {
        match self.take(key) {
            Some((v, line)) => {
                let x = v.parse::<f64>().map_err(|_| {
                    key_error(key, Some(line), format!("{v:?} is not a number"))
                })?;
                Ok(Some((x, line)))
            }
            None => Ok(None),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> CliResult<(usize, Option<usize>)> {
        match self.take(key) {
            Some((v, line)) => {
                let x = v.parse::<usize>().map_err(|_| {
                    key_error(key, Some(line), format!("{v:?} is not a count"))
                })?;
                Ok((x, Some(line)))
            }
            None => Ok((default, None)),
        }
    }
}

fn ensure_positive(key: &str, line: Option<usize>, value: f64) -> CliResult<f64> {
    if !value.is_finite() || value <= 0.0 {
        return Err(key_error(
            key,
            line,
            format!("must be finite and > 0, got {value}"),
        ));
    }
    Ok(value)
}

/// Parse and validate a configuration for one scenario. `text` is `None`
/// when no config file was given: every key takes its documented default.
pub fn load_config(
    scenario: Scenario,
    text: Option<&str>,
    data_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
) -> CliResult<RunConfig> {
    let mut raw = RawConfig::parse(text.unwrap_or(""))?;

    // constants.*
    let (hbar, hl) = raw.f64_or("constants.hbar", qbounce::constants::HBAR)?;
    let (mass, ml) = raw.f64_or("constants.mass", qbounce::constants::NEUTRON_MASS)?;
    let (g, gl) = raw.f64_or("constants.g", qbounce::constants::STANDARD_GRAVITY)?;
    ensure_positive("constants.hbar", hl, hbar)?;
    ensure_positive("constants.mass", ml, mass)?;
    ensure_positive("constants.g", gl, g)?;
    let constants = PhysicalConstants::new(hbar, mass, g)
        .map_err(|e| CliError::Config(format!("constants: {e}")))?;

    // potential.*
    let default_kind = match scenario {
        Scenario::Spectrum => "gravity",
        _ => "gravity_absorber",
    };
    let potential_kind = match raw.take("potential.kind") {
        None => default_kind.to_string(),
        Some((v, _)) => v,
    };
    let potential_kind = match potential_kind.as_str() {
        "box" => PotentialKind::Box,
        "gravity" => PotentialKind::Gravity,
        "gravity_absorber" => PotentialKind::GravityAbsorber,
        other => {
            return Err(CliError::Config(format!(
                "potential.kind: expected box | gravity | gravity_absorber, got {other:?}"
            )))
        }
    };

    let (box_width_um, bl) = raw.f64_or("potential.box_width_um", 15.0)?;
    ensure_positive("potential.box_width_um", bl, box_width_um)?;
    let (slit_um, sl) = raw.f64_or("potential.slit_um", 15.0)?;
    ensure_positive("potential.slit_um", sl, slit_um)?;
    let (v0_pev, vl) = raw.f64_or("potential.v0_pev", DEFAULT_CEILING_V0_PEV)?;
    ensure_positive("potential.v0_pev", vl, v0_pev)?;
    let (diffuseness_um, dl) =
        raw.f64_or("potential.diffuseness_um", DEFAULT_CEILING_DIFFUSENESS / METER_PER_UM)?;
    ensure_positive("potential.diffuseness_um", dl, diffuseness_um)?;

    // grid.* and solver.*
    let (n_points, nl) = raw.usize_or("grid.n_points", 4000)?;
    if n_points < 16 {
        return Err(key_error(
            "grid.n_points",
            nl,
            format!("must be >= 16, got {n_points}"),
        ));
    }
    let (z_max_factor, fl) = raw.f64_or("grid.z_max_factor", 4.0)?;
    if !z_max_factor.is_finite() || z_max_factor <= 1.0 {
        return Err(key_error(
            "grid.z_max_factor",
            fl,
            format!("must be finite and > 1, got {z_max_factor}"),
        ));
    }
    let z_max_override = match raw.f64_opt("grid.z_max_um")? {
        Some((v, line)) => {
            ensure_positive("grid.z_max_um", Some(line), v)?;
            Some(v * METER_PER_UM)
        }
        None => None,
    };
    let (n_states, stl) = raw.usize_or("solver.n_states", 4)?;
    if n_states < 1 || n_states > 10 {
        return Err(key_error(
            "solver.n_states",
            stl,
            format!("must be in 1..=10, got {n_states}"),
        ));
    }

    // absorber.*
    let (delta_x_cm, dxl) = raw.f64_or("absorber.delta_x_cm", reference::DELTA_X_CM)?;
    ensure_positive("absorber.delta_x_cm", dxl, delta_x_cm)?;
    let (cavity_cm, cl) = raw.f64_or("absorber.cavity_cm", reference::CAVITY_CM)?;
    ensure_positive("absorber.cavity_cm", cl, cavity_cm)?;
    let n_max_model = match raw.take("absorber.n_max_model") {
        None => "constant".to_string(),
        Some((v, _)) => v,
    };
    let n_max = match n_max_model.as_str() {
        "constant" => {
            let (value, vl2) = raw.f64_or("absorber.n_max_value", reference::N_MAX)?;
            if !value.is_finite() || value < 0.0 {
                return Err(key_error(
                    "absorber.n_max_value",
                    vl2,
                    format!("must be finite and >= 0, got {value}"),
                ));
            }
            EntranceDensity::Constant(value)
        }
        "power_law" => {
            let (scale, sl2) = raw.f64_or("absorber.n_max_scale", 0.01)?;
            let (exponent, el2) = raw.f64_or("absorber.n_max_exponent", 1.5)?;
            if !scale.is_finite() || scale < 0.0 {
                return Err(key_error(
                    "absorber.n_max_scale",
                    sl2,
                    format!("must be finite and >= 0, got {scale}"),
                ));
            }
            if !exponent.is_finite() {
                return Err(key_error(
                    "absorber.n_max_exponent",
                    el2,
                    format!("must be finite, got {exponent}"),
                ));
            }
            EntranceDensity::PowerLaw { scale, exponent }
        }
        other => {
            return Err(CliError::Config(format!(
                "absorber.n_max_model: expected constant | power_law, got {other:?}"
            )))
        }
    };
    let absorber = AbsorberModel::new(
        delta_x_cm * METER_PER_CM,
        cavity_cm * METER_PER_CM,
        n_max,
    )
    .map_err(|e| CliError::Config(format!("absorber.delta_x_cm / absorber.cavity_cm: {e}")))?;

    // scan.* — explicit list wins over a range
    let slits_um: Vec<f64> = match raw.take("scan.slits_um") {
        Some((v, line)) => {
            let list = v
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        key_error(
                            "scan.slits_um",
                            Some(line),
                            format!("{:?} is not a number", tok.trim()),
                        )
                    })
                })
                .collect::<CliResult<Vec<f64>>>()?;
            if list.is_empty() {
                return Err(key_error("scan.slits_um", Some(line), "empty slit list"));
            }
            for w in list.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(key_error(
                        "scan.slits_um",
                        Some(line),
                        format!("must be strictly increasing ({} then {})", w[0], w[1]),
                    ));
                }
            }
            if list[0] <= 0.0 {
                return Err(key_error(
                    "scan.slits_um",
                    Some(line),
                    "slit widths must be > 0",
                ));
            }
            list
        }
        None => {
            let (lo, lol) = raw.f64_or("scan.slit_min_um", 10.0)?;
            let (hi, hil) = raw.f64_or("scan.slit_max_um", 40.0)?;
            let (step, stl2) = raw.f64_or("scan.slit_step_um", 1.0)?;
            ensure_positive("scan.slit_min_um", lol, lo)?;
            ensure_positive("scan.slit_step_um", stl2, step)?;
            if !(hi > lo) {
                return Err(key_error(
                    "scan.slit_max_um",
                    hil,
                    format!("must exceed scan.slit_min_um = {lo}, got {hi}"),
                ));
            }
            let count = ((hi - lo) / step).floor() as usize + 1;
            (0..count).map(|i| lo + i as f64 * step).collect()
        }
    };
    let slits: Vec<f64> = slits_um.iter().map(|&s| s * METER_PER_UM).collect();

    // weights.*
    let weights = match raw.take("weights.c") {
        None => PopulationWeights::single(1),
        Some((v, line)) => {
            let list = v
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        key_error(
                            "weights.c",
                            Some(line),
                            format!("{:?} is not a number", tok.trim()),
                        )
                    })
                })
                .collect::<CliResult<Vec<f64>>>()?;
            if list.len() != POPULATION_COUNT {
                return Err(key_error(
                    "weights.c",
                    Some(line),
                    format!("expected {POPULATION_COUNT} weights, got {}", list.len()),
                ));
            }
            let mut c = [0.0; POPULATION_COUNT];
            c.copy_from_slice(&list);
            PopulationWeights::new(c)
                .map_err(|e| key_error("weights.c", Some(line), e.to_string()))?
        }
    };

    // fit.*
    let fit_mode = match raw.take("fit.mode") {
        None => FitMode::Populations,
        Some((v, line)) => match v.as_str() {
            "populations" => FitMode::Populations,
            "threshold" => FitMode::Threshold,
            other => {
                return Err(key_error(
                    "fit.mode",
                    Some(line),
                    format!("expected populations | threshold, got {other:?}"),
                ))
            }
        },
    };
    let (z0_step_um, zl) = raw.f64_or("fit.z0_step_um", DEFAULT_Z0_STEP_UM)?;
    ensure_positive("fit.z0_step_um", zl, z0_step_um)?;
    if z0_step_um > 0.1 {
        return Err(key_error(
            "fit.z0_step_um",
            zl,
            format!("threshold scan resolution must be <= 0.1 µm, got {z0_step_um}"),
        ));
    }

    // output.*
    let out_dir = match (out_dir, raw.take("output.dir")) {
        (Some(dir), _) => dir,
        (None, Some((v, _))) => PathBuf::from(v),
        (None, None) => PathBuf::from("out"),
    };

    raw.finish()?;

    if scenario == Scenario::Fit && data_path.is_none() {
        return Err(CliError::Config(
            "fit scenario requires --data PATH".to_string(),
        ));
    }
    if let Some(path) = &data_path {
        if !path.exists() {
            return Err(CliError::Config(format!(
                "data file {} does not exist",
                path.display()
            )));
        }
    }

    Ok(RunConfig {
        scenario,
        constants,
        potential_kind,
        box_width: box_width_um * METER_PER_UM,
        slit: slit_um * METER_PER_UM,
        v0: v0_pev * qbounce::constants::JOULE_PER_PEV,
        diffuseness: diffuseness_um * METER_PER_UM,
        n_points,
        z_max_factor,
        z_max_override,
        n_states,
        absorber,
        slits,
        weights,
        fit_mode,
        z0_step_um,
        out_dir,
        data_path,
    })
}
