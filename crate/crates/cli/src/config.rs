//! Run configuration: defaults, then a TOML file, then `TRANSLAB_*`
//! environment variables, then command-line flags. Unknown keys are rejected
//! at every layer.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "TRANSLAB_";
const SECTIONS: [&str; 4] = ["integrator", "bowl", "catenoid", "verify"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub curvature: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub plots: bool,
    pub integrator: IntegratorSection,
    pub bowl: BowlSection,
    pub catenoid: CatenoidSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            curvature: None,
            out: PathBuf::from("translab-out"),
            seed: 0,
            plots: true,
            integrator: IntegratorSection::default(),
            bowl: BowlSection::default(),
            catenoid: CatenoidSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
    pub event_tolerance: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = translab::Integrator::default();
        Self {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_step: None,
            min_step: d.min_step,
            max_steps: d.max_steps,
            event_tolerance: d.event_tolerance,
        }
    }
}

impl IntegratorSection {
    pub fn build(&self) -> translab::Integrator {
        translab::Integrator {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            min_step: self.min_step,
            max_steps: self.max_steps,
            event_tolerance: self.event_tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeChoice {
    Auto,
    Nondegenerate,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BowlSection {
    pub rmax: f64,
    pub regime: RegimeChoice,
    pub fit_window: Option<[f64; 2]>,
    pub samples: usize,
    pub eps0: f64,
}

impl Default for BowlSection {
    fn default() -> Self {
        Self { rmax: 500.0, regime: RegimeChoice::Auto, fit_window: None, samples: 1500, eps0: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatenoidSection {
    /// Neck radius.
    pub radius: f64,
    pub rmax: f64,
    /// Slope angle (radians) at which the neck chart hands off.
    pub handoff: f64,
    pub fit_window: Option<[f64; 2]>,
    pub samples: usize,
    /// Neck chart height cap in units of the radius.
    pub neck_cap: f64,
}

impl Default for CatenoidSection {
    fn default() -> Self {
        Self { radius: 1.0, rmax: 200.0, handoff: PI / 8.0, fit_window: None, samples: 400, neck_cap: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Homogeneity,
    Monotonicity,
    Implicit,
    Ordering,
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub suite: Suite,
    /// Random samples for the homogeneity and monotonicity suites.
    pub samples: usize,
    /// Random ordered initial-slope pairs for the ordering suite.
    pub pairs: usize,
    pub r0: f64,
    pub r_end: f64,
    /// Points on the ordering and barrier grids.
    pub grid: usize,
    pub barrier_range: [f64; 2],
    pub cone_range: [f64; 2],
    /// Amplitude of the power barrier.
    pub power_amplitude: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            samples: 100,
            pairs: 50,
            r0: 1.0,
            r_end: 100.0,
            grid: 400,
            barrier_range: [1.0, 1e3],
            cone_range: [1e-3, 1e3],
            power_amplitude: 1.0,
        }
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_scalar(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Table built from `TRANSLAB_<SECTION>_<KEY>` and `TRANSLAB_<KEY>` variables.
pub fn env_table(vars: impl IntoIterator<Item = (String, String)>) -> Table {
    let mut table = Table::new();
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let rest = rest.to_ascii_lowercase();
        let value = parse_scalar(&raw);
        let section = SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_")));
        match section {
            Some(s) => {
                let key = rest[s.len() + 1..].to_string();
                let entry = table.entry(s.to_string()).or_insert_with(|| Value::Table(Table::new()));
                if let Value::Table(t) = entry {
                    t.insert(key, value);
                }
            }
            None => {
                table.insert(rest, value);
            }
        }
    }
    table
}

/// Builds the configuration from the optional file, the environment and the
/// command-line overrides.
pub fn load(file: Option<&Path>, env: Table, flags: Table) -> Result<RunConfig, CliError> {
    let mut table = Table::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed: Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, parsed);
    }
    merge(&mut table, env);
    merge(&mut table, flags);
    let cfg: RunConfig = Value::Table(table).try_into().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

fn window(name: &str, w: Option<[f64; 2]>) -> Result<(), CliError> {
    match w {
        Some([lo, hi]) if !(lo > 0.0 && hi > lo && hi.is_finite()) => {
            Err(CliError::Config(format!("{name} must satisfy 0 < lo < hi, got [{lo}, {hi}]")))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let i = &self.integrator;
        positive("integrator.rel_tol", i.rel_tol)?;
        positive("integrator.abs_tol", i.abs_tol)?;
        positive("integrator.min_step", i.min_step)?;
        positive("integrator.event_tolerance", i.event_tolerance)?;
        if let Some(m) = i.max_step {
            positive("integrator.max_step", m)?;
        }
        i.build().validate().map_err(|e| CliError::Config(e.to_string()))?;
        let b = &self.bowl;
        positive("bowl.rmax", b.rmax)?;
        positive("bowl.eps0", b.eps0)?;
        if b.rmax <= b.eps0 {
            return Err(CliError::Config(format!("bowl.rmax = {} must exceed bowl.eps0 = {}", b.rmax, b.eps0)));
        }
        if b.samples < 2 {
            return Err(CliError::Config("bowl.samples must be at least 2".into()));
        }
        window("bowl.fit_window", b.fit_window)?;
        let c = &self.catenoid;
        positive("catenoid.radius", c.radius)?;
        positive("catenoid.rmax", c.rmax)?;
        positive("catenoid.neck_cap", c.neck_cap)?;
        if !(c.handoff > 0.0 && c.handoff < PI / 4.0) {
            return Err(CliError::Config(format!("catenoid.handoff must lie in (0, pi/4), got {}", c.handoff)));
        }
        if c.rmax <= c.radius {
            return Err(CliError::Config(format!("catenoid.rmax = {} must exceed the radius", c.rmax)));
        }
        if c.samples < 2 {
            return Err(CliError::Config("catenoid.samples must be at least 2".into()));
        }
        window("catenoid.fit_window", c.fit_window)?;
        let v = &self.verify;
        positive("verify.r0", v.r0)?;
        positive("verify.r_end", v.r_end)?;
        positive("verify.power_amplitude", v.power_amplitude)?;
        if v.r_end <= v.r0 {
            return Err(CliError::Config("verify.r_end must exceed verify.r0".into()));
        }
        if v.grid < 2 || v.samples == 0 || v.pairs == 0 {
            return Err(CliError::Config(
                "verify.grid >= 2, verify.samples >= 1 and verify.pairs >= 1 required".into(),
            ));
        }
        window("verify.barrier_range", Some(v.barrier_range))?;
        window("verify.cone_range", Some(v.cone_range))?;
        Ok(())
    }

    pub fn curvature(&self) -> Result<translab::Curvature, CliError> {
        let key = self
            .curvature
            .as_deref()
            .ok_or_else(|| CliError::Config("a curvature key is required (--curvature or `curvature =`)".into()))?;
        translab::Curvature::from_key(key).map_err(|e| CliError::Config(format!("curvature key {key:?}: {e}")))
    }
}
