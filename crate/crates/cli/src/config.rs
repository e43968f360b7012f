//! Run configuration: one TOML file with a section per stage, plus
//! `--set section.key=value` overrides.

use std::path::{Path, PathBuf};

use qtransport::defaults;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub morse: MorseConfig,
    pub kernel: KernelConfig,
    pub fit: FitConfig,
    pub optimize: OptimizeConfig,
    pub survival: SurvivalConfig,
    pub adiabaticity: AdiabaticityConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorseConfig {
    pub depth: f64,
    pub width: f64,
    pub mass: f64,
    /// `a_κ` table on `linspace(0, kappa_max, kappa_points)`.
    pub kappa_max: f64,
    pub kappa_points: usize,
}

impl Default for MorseConfig {
    fn default() -> Self {
        Self {
            depth: 0.5,
            width: 1.0,
            mass: 1.0,
            kappa_max: 6.0,
            kappa_points: 241,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub t_max: f64,
    pub n: usize,
    /// Spectrum table on `linspace(-omega_max, omega_max, spectrum_points)`.
    pub omega_max: f64,
    pub spectrum_points: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            t_max: defaults::KERNEL_T_MAX,
            n: defaults::KERNEL_SAMPLES,
            omega_max: 8.0,
            spectrum_points: 801,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub window: [f64; 2],
    /// Starting point `[a1, b1, c1, d1, w1, w2]`; heuristic when absent.
    pub init: Option<[f64; 6]>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            window: [defaults::FIT_WINDOW.0, defaults::FIT_WINDOW.1],
            init: None,
        }
    }
}

/// Transport duration: a fixed number or the fluence-matched time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Fixed(f64),
    Named(HorizonRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonRule {
    FluenceMatched,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub lambda: f64,
    pub p_dot0: f64,
    pub horizon: Horizon,
    pub fluence_target: f64,
    pub horizon_cap: f64,
    /// `[lo, hi]`, log-spaced; same sign.
    pub lambda_sweep: Option<[f64; 2]>,
    pub sweep_points: usize,
    pub trajectory_points: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            lambda: defaults::LAMBDA,
            p_dot0: defaults::P_DOT0,
            horizon: Horizon::Named(HorizonRule::FluenceMatched),
            fluence_target: defaults::FLUENCE_TARGET,
            horizon_cap: defaults::HORIZON_CAP,
            lambda_sweep: None,
            sweep_points: defaults::LAMBDA_SWEEP_POINTS,
            trajectory_points: 401,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurvivalConfig {
    pub dkappa: f64,
    pub points: usize,
    /// Whitespace table `k ReV ImV Omega`.
    pub mode_table: Option<PathBuf>,
    /// Mode index for the one-phonon and superposition initial states.
    pub k0: Option<usize>,
    /// Evaluate the superposition initial state; needs a mode table.
    pub superposition: bool,
    /// Keep the trap at rest instead of using the optimal trajectory.
    pub zero_trajectory: bool,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        Self {
            dkappa: defaults::DKAPPA,
            points: defaults::SURVIVAL_POINTS,
            mode_table: None,
            k0: None,
            superposition: false,
            zero_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticityConfig {
    pub margin: f64,
    pub kappa_max: f64,
    pub kappa_points: usize,
    pub time_points: usize,
}

impl Default for AdiabaticityConfig {
    fn default() -> Self {
        Self {
            margin: defaults::ADIABATIC_MARGIN,
            kappa_max: 3.0,
            kappa_points: 60,
            time_points: 101,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            svg: false,
        }
    }
}

/// Parses `a.b=value`; the value is read as a TOML literal, or as a bare
/// string when that fails.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {spec:?}")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad key path {path:?}")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = table;
    for key in &keys[..keys.len() - 1] {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key:?} in {path:?} is not a section")))?;
    }
    cursor.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Reads `path` (defaults when `None`), applies overrides, validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        // relative mode-table paths are taken from the config file's directory
        if let (Some(cfg), Some(table)) = (path, config.survival.mode_table.as_mut()) {
            if table.is_relative() {
                if let Some(dir) = cfg.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let positive = |name: &str, x: f64| -> Result<(), CliError> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("morse.depth", self.morse.depth)?;
        positive("morse.width", self.morse.width)?;
        positive("morse.mass", self.morse.mass)?;
        if !(self.morse.kappa_max >= 0.0) || self.morse.kappa_points == 0 {
            return bad("morse.kappa_max must be >= 0 and morse.kappa_points >= 1".into());
        }
        positive("kernel.t_max", self.kernel.t_max)?;
        positive("kernel.omega_max", self.kernel.omega_max)?;
        if self.kernel.n < 2 || self.kernel.spectrum_points == 0 {
            return bad("kernel.n must be >= 2 and kernel.spectrum_points >= 1".into());
        }
        let [w0, w1] = self.fit.window;
        if !(w0 >= 0.0 && w1 > w0 && w1 <= self.kernel.t_max) {
            return bad(format!("fit.window [{w0}, {w1}] must lie inside [0, kernel.t_max]"));
        }
        if self.optimize.lambda == 0.0 || !self.optimize.lambda.is_finite() {
            return bad("optimize.lambda must be non-zero".into());
        }
        if self.optimize.p_dot0 == 0.0 || !self.optimize.p_dot0.is_finite() {
            return bad("optimize.p_dot0 must be non-zero".into());
        }
        if let Horizon::Fixed(t) = self.optimize.horizon {
            positive("optimize.horizon", t)?;
        }
        positive("optimize.fluence_target", self.optimize.fluence_target)?;
        positive("optimize.horizon_cap", self.optimize.horizon_cap)?;
        if let Some([lo, hi]) = self.optimize.lambda_sweep {
            if lo == 0.0 || hi == 0.0 || (lo > 0.0) != (hi > 0.0) {
                return bad("optimize.lambda_sweep ends must be non-zero with equal sign".into());
            }
            if self.optimize.sweep_points == 0 {
                return bad("optimize.sweep_points must be >= 1".into());
            }
        }
        if self.optimize.trajectory_points < 2 {
            return bad("optimize.trajectory_points must be >= 2".into());
        }
        positive("survival.dkappa", self.survival.dkappa)?;
        if self.survival.points < 2 {
            return bad("survival.points must be >= 2".into());
        }
        match &self.survival.mode_table {
            Some(p) if !p.is_file() => {
                return bad(format!("survival.mode_table {} does not exist", p.display()));
            }
            None if self.survival.superposition || self.survival.k0.is_some() => {
                return bad("survival.superposition and survival.k0 need survival.mode_table".into());
            }
            _ => {}
        }
        if self.survival.superposition && self.survival.k0.is_none() {
            return bad("survival.superposition needs survival.k0".into());
        }
        positive("adiabaticity.margin", self.adiabaticity.margin)?;
        positive("adiabaticity.kappa_max", self.adiabaticity.kappa_max)?;
        if self.adiabaticity.kappa_points == 0 || self.adiabaticity.time_points == 0 {
            return bad("adiabaticity grids need at least one point".into());
        }
        Ok(())
    }

    /// Canonical TOML text, used for hashing and embedding in reports.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(c.optimize.horizon, Horizon::Named(HorizonRule::FluenceMatched));
        assert_eq!(c.kernel.n, 1600);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = RunConfig::load(
            None,
            &["optimize.lambda=-0.1".into(), "optimize.horizon=5".into(), "output.directory=elsewhere".into()],
        )
        .unwrap();
        assert_eq!(c.optimize.lambda, -0.1);
        assert_eq!(c.optimize.horizon, Horizon::Fixed(5.0));
        assert_eq!(c.output.directory, PathBuf::from("elsewhere"));
        let named = RunConfig::load(None, &["optimize.horizon=fluence-matched".into()]).unwrap();
        assert_eq!(named.optimize.horizon, Horizon::Named(HorizonRule::FluenceMatched));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::load(None, &["optimize.lamda=1".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(RunConfig::load(None, &["nosuch.key=1".into()]), Err(CliError::Config(_))));
    }

    #[test]
    fn superposition_without_table_is_a_config_error() {
        let err = RunConfig::load(None, &["survival.superposition=true".into(), "survival.k0=0".into()]);
        assert!(matches!(err, Err(CliError::Config(_))));
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
        let c = RunConfig::load(Some(&path), &[]).unwrap();
        assert_eq!(c.canonical(), RunConfig::default().canonical());
    }

    #[test]
    fn canonical_round_trips() {
        let c = RunConfig::load(None, &["fit.init=[0.5, 0.6, -0.1, 0.05, 0.37, 0.14]".into()]).unwrap();
        let back: RunConfig = toml::from_str(&c.canonical()).unwrap();
        assert_eq!(back.canonical(), c.canonical());
    }
}
