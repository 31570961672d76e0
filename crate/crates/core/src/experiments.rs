//! Scenario definitions: the two continuous toy models, the Bloch and
//! Anderson lattice experiments, custom potentials, and disorder ensembles.
//!
//! Configs are JSON. Only `kind` is required; every other field falls back
//! to the defaults of its kind. [`ExperimentConfig::resolve`] fills in every
//! value explicitly (relative factors such as `g_factor` become absolute
//! values) and the resolved form is what a run manifest stores, so a
//! manifest can be loaded back as a config and reproduces the same files.
//!
//! ```json
//! { "kind": "bloch", "lattice": { "g_factor": 3, "beta_factor": 4 } }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::continuous::{
    check_nonnegative, check_positive, gaussian_packet, run_continuous, RunOptions, RunResult, SlkParams,
};
use crate::discrete::{run_discrete, sine_packet, DiscreteSlkParams, LatticeRunOptions, SinePacket};
use crate::error::{Error, Result};
use crate::integrator::Scheme;
use crate::observables::vacuum_overlap;
use crate::output::{self, fmt_f64, write_file};
use crate::potentials::{
    anderson_disorder, double_well, linear_tilt, toy1_ground_state, toy1_potential, DisorderSpec, DoubleWellParams,
    PotentialField, TripleGaussianGroundState,
};
use crate::spectral::{spectrum, SpectrumResult, LATTICE_HOPPING};
use crate::state::{Domain, Grid1D, Lattice, WaveFunction, DEFAULT_RELATIVE_RHO_FLOOR};

pub const DEFAULT_SEED: u64 = 42;
pub const MANIFEST_VERSION: u32 = 1;
/// Region used for the W−V diagnostic, relative to `max ρ`.
pub const W_COMPARISON_RELATIVE_RHO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Toy1,
    Toy2,
    Bloch,
    Anderson,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Toy1 => "toy1",
            ExperimentKind::Toy2 => "toy2",
            ExperimentKind::Bloch => "bloch",
            ExperimentKind::Anderson => "anderson",
            ExperimentKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: Option<u64>,
    /// Never written to manifests.
    pub output_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub continuous: Option<ContinuousConfig>,
    pub toy1: Option<Toy1Config>,
    pub toy2: Option<Toy2Config>,
    pub lattice: Option<LatticeConfig>,
    pub custom: Option<CustomConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousConfig {
    pub nu: Option<f64>,
    pub beta: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub rho_floor: Option<f64>,
    pub subtract_mean_phase: Option<bool>,
    pub scheme: Option<Scheme>,
    pub record_every: Option<usize>,
    /// 0 keeps only the initial and final snapshots.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toy1Config {
    pub a: Option<f64>,
    pub sigma_plus: Option<f64>,
    pub sigma_minus: Option<f64>,
    pub sigma_0: Option<f64>,
    pub c_plus: Option<f64>,
    pub c_minus: Option<f64>,
    pub c_0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toy2Config {
    pub a_plus: Option<f64>,
    pub a_minus: Option<f64>,
    pub v0: Option<f64>,
    pub delta: Option<f64>,
    pub initial_center: Option<f64>,
    pub initial_sigma: Option<f64>,
}

/// `g`, `beta` and `sigma` may instead be given as multiples of `g₀ = 2/s`
/// (`g_factor`, `beta_factor`) and `σ₀ = (10/s)^{3/2}` (`sigma_factor`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub s: Option<usize>,
    pub epsilon: Option<usize>,
    /// Read as a real so that a non-integer value is reported as such.
    pub k: Option<f64>,
    pub g: Option<f64>,
    pub g_factor: Option<f64>,
    pub beta: Option<f64>,
    pub beta_factor: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_factor: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub delta: Option<usize>,
    pub record_every: Option<usize>,
    /// 0 keeps only the initial and final density profiles.
    pub snapshot_every: Option<usize>,
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    /// Two-column `x,V` CSV with a header line.
    pub potential_file: Option<PathBuf>,
    pub domain: Option<CustomDomain>,
    pub initial: Option<InitialState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomDomain {
    Grid,
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian { center: f64, sigma: f64 },
    SinePacket { epsilon: usize, k: usize },
}

/// Named presets.
pub const PRESETS: &[(&str, &str)] = &[
    ("toy1", "triple-Gaussian ground state, nu=1, beta=0.5, t_max=50"),
    ("toy2", "asymmetric double well, nu=1, beta=0.3, t_max=50"),
    ("bloch-free", "lattice s=100, g=0, beta=0"),
    ("bloch-tilt", "lattice s=100, g=3g0, beta=0"),
    ("bloch-friction", "lattice s=100, g=3g0, beta=4g0"),
    ("anderson-free", "disordered lattice, g=0, beta=0, sigma=2sigma0"),
    (
        "anderson-friction",
        "disordered lattice, g=3g0, beta=4g0, sigma=2sigma0",
    ),
];

/// The simulation a resolved config describes.
#[derive(Debug, Clone)]
pub enum Plan {
    Continuous {
        v: PotentialField,
        psi0: WaveFunction,
        params: SlkParams,
        reference: WaveFunction,
        record_every: usize,
        snapshot_every: usize,
    },
    Lattice {
        v: PotentialField,
        psi0: WaveFunction,
        params: DiscreteSlkParams,
        delta: usize,
        record_every: usize,
        snapshot_every: usize,
    },
}

impl Plan {
    pub fn potential(&self) -> &PotentialField {
        match self {
            Plan::Continuous { v, .. } | Plan::Lattice { v, .. } => v,
        }
    }

    /// Hopping or `ν` for the spectral oracle.
    pub fn oracle_parameter(&self) -> f64 {
        match self {
            Plan::Continuous { params, .. } => params.nu,
            Plan::Lattice { .. } => LATTICE_HOPPING,
        }
    }

    /// Runs the propagator. Without snapshots only the endpoints are kept.
    pub fn simulate(&self, with_snapshots: bool) -> Result<RunResult> {
        let cadence = |every: usize| (with_snapshots && every > 0).then_some(every);
        match self {
            Plan::Continuous {
                v,
                psi0,
                params,
                reference,
                record_every,
                snapshot_every,
            } => run_continuous(
                psi0,
                v,
                params,
                &RunOptions {
                    record_every: *record_every,
                    snapshot_every: cadence(*snapshot_every),
                    reference: Some(reference.clone()),
                },
            ),
            Plan::Lattice {
                v,
                psi0,
                params,
                delta,
                record_every,
                snapshot_every,
            } => run_discrete(
                psi0,
                v,
                params,
                &LatticeRunOptions {
                    record_every: *record_every,
                    snapshot_every: cadence(*snapshot_every),
                    delta: *delta,
                },
            ),
        }
    }
}

/// A config with every value explicit, the plan it describes, and derived
/// quantities worth recording.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub plan: Plan,
    pub derived: Map<String, Value>,
}

fn config_error_from_path<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> Error {
    let path = err.path().to_string();
    Error::config(path, err.into_inner().to_string())
}

fn strip_nulls(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.retain(|_, v| !v.is_null());
            map.values_mut().for_each(strip_nulls);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: None,
            output_dir: None,
            grid: None,
            continuous: None,
            toy1: None,
            toy2: None,
            lattice: None,
            custom: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let lattice = |g: f64, beta: f64| LatticeConfig {
            g_factor: Some(g),
            beta_factor: Some(beta),
            ..LatticeConfig::default()
        };
        let mut cfg = match name {
            "toy1" => Self::new(ExperimentKind::Toy1),
            "toy2" => Self::new(ExperimentKind::Toy2),
            "bloch-free" | "anderson-free" => {
                let kind = if name == "bloch-free" {
                    ExperimentKind::Bloch
                } else {
                    ExperimentKind::Anderson
                };
                let mut cfg = Self::new(kind);
                cfg.lattice = Some(lattice(0.0, 0.0));
                cfg
            }
            "bloch-tilt" => {
                let mut cfg = Self::new(ExperimentKind::Bloch);
                cfg.lattice = Some(lattice(3.0, 0.0));
                cfg
            }
            "bloch-friction" | "anderson-friction" => {
                let kind = if name == "bloch-friction" {
                    ExperimentKind::Bloch
                } else {
                    ExperimentKind::Anderson
                };
                let mut cfg = Self::new(kind);
                cfg.lattice = Some(lattice(3.0, 4.0));
                cfg
            }
            other => {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                return Err(Error::config(
                    "preset",
                    format!("unknown preset `{other}`; available: {}", names.join(", ")),
                ));
            }
        };
        if cfg.kind == ExperimentKind::Anderson {
            cfg.seed = Some(DEFAULT_SEED);
        }
        Ok(cfg)
    }

    /// Parses a config, or the `config` member of a run manifest.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let value: Value = serde_path_to_error::deserialize(&mut de).map_err(config_error_from_path)?;
        Self::from_value(value)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let value = match value {
            Value::Object(mut map) if map.contains_key("manifest_version") => map
                .remove("config")
                .ok_or_else(|| Error::config("config", "manifest has no config"))?,
            other => other,
        };
        serde_path_to_error::deserialize(value).map_err(config_error_from_path)
    }

    /// JSON form with absent fields omitted.
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        strip_nulls(&mut v);
        v
    }

    /// Applies `dotted.path=value` overrides in order. Values parse as JSON
    /// where possible and as bare strings otherwise; unknown keys are
    /// rejected.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut root = self.to_value();
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item, "override must have the form key=value"))?;
            let key = key.trim();
            if key.is_empty() || key.split('.').any(str::is_empty) {
                return Err(Error::config(item, "empty key in override"));
            }
            let value = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut root;
            let parts: Vec<&str> = key.split('.').collect();
            for (depth, part) in parts.iter().enumerate() {
                let map = match node {
                    Value::Object(map) => map,
                    _ => return Err(Error::config(parts[..depth].join("."), "not a section")),
                };
                if depth + 1 == parts.len() {
                    map.insert(part.to_string(), value.clone());
                    break;
                }
                node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            }
        }
        Self::from_value(root)
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        match self.kind {
            ExperimentKind::Toy1 | ExperimentKind::Toy2 => self.resolve_toy(),
            ExperimentKind::Bloch | ExperimentKind::Anderson => self.resolve_lattice(),
            ExperimentKind::Custom => self.resolve_custom(),
        }
    }

    fn reject_sections(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("grid", self.grid.is_some()),
            ("continuous", self.continuous.is_some()),
            ("toy1", self.toy1.is_some()),
            ("toy2", self.toy2.is_some()),
            ("lattice", self.lattice.is_some()),
            ("custom", self.custom.is_some()),
        ];
        for (name, is_present) in present {
            if is_present && !allowed.contains(&name) {
                return Err(Error::config(
                    name,
                    format!("section does not apply to kind `{}`", self.kind.name()),
                ));
            }
        }
        Ok(())
    }

    fn resolve_toy(&self) -> Result<Resolved> {
        let toy = if self.kind == ExperimentKind::Toy1 {
            "toy1"
        } else {
            "toy2"
        };
        self.reject_sections(&["grid", "continuous", toy])?;
        let gc = self.grid.clone().unwrap_or_default();
        let grid_cfg = GridConfig {
            x_min: Some(gc.x_min.unwrap_or(-10.0)),
            x_max: Some(gc.x_max.unwrap_or(10.0)),
            n: Some(gc.n.unwrap_or(1024)),
        };
        let grid = Grid1D::new(grid_cfg.x_min.unwrap(), grid_cfg.x_max.unwrap(), grid_cfg.n.unwrap())
            .map_err(|e| Error::config("grid", e.to_string()))?;
        let default_beta = if self.kind == ExperimentKind::Toy1 { 0.5 } else { 0.3 };
        let (cont, params, record_every, snapshot_every) = resolve_continuous(self.continuous.as_ref(), default_beta)?;

        let mut config = Self::new(self.kind);
        config.seed = self.seed;
        config.grid = Some(grid_cfg);
        config.continuous = Some(cont);
        let mut derived = Map::new();
        derived.insert("dx".into(), grid.dx().into());
        derived.insert("steps".into(), params.steps().into());

        let (v, psi0, reference) = if self.kind == ExperimentKind::Toy1 {
            let t = self.toy1.clone().unwrap_or_default();
            let d = TripleGaussianGroundState::default();
            let p = TripleGaussianGroundState {
                a: t.a.unwrap_or(d.a),
                sigma_plus: t.sigma_plus.unwrap_or(d.sigma_plus),
                sigma_minus: t.sigma_minus.unwrap_or(d.sigma_minus),
                sigma_0: t.sigma_0.unwrap_or(d.sigma_0),
                c_plus: t.c_plus.unwrap_or(d.c_plus),
                c_minus: t.c_minus.unwrap_or(d.c_minus),
                c_0: t.c_0.unwrap_or(d.c_0),
            };
            config.toy1 = Some(Toy1Config {
                a: Some(p.a),
                sigma_plus: Some(p.sigma_plus),
                sigma_minus: Some(p.sigma_minus),
                sigma_0: Some(p.sigma_0),
                c_plus: Some(p.c_plus),
                c_minus: Some(p.c_minus),
                c_0: Some(p.c_0),
            });
            let reference = toy1_ground_state(&p, &grid)?;
            let v = toy1_potential(&p, params.nu, &grid)?;
            let psi0 = gaussian_packet(&grid, -p.a, p.sigma_minus)?;
            derived.insert("initial_center".into(), (-p.a).into());
            derived.insert("initial_sigma".into(), p.sigma_minus.into());
            (v, psi0, reference)
        } else {
            let t = self.toy2.clone().unwrap_or_default();
            let d = DoubleWellParams::default();
            let p = DoubleWellParams {
                a_plus: t.a_plus.unwrap_or(d.a_plus),
                a_minus: t.a_minus.unwrap_or(d.a_minus),
                v0: t.v0.unwrap_or(d.v0),
                delta: t.delta.unwrap_or(d.delta),
            };
            let center = t.initial_center.unwrap_or(p.a_plus);
            let sigma = t.initial_sigma.unwrap_or(0.5);
            if !center.is_finite() {
                return Err(Error::param("toy2.initial_center", "must be finite"));
            }
            check_positive("toy2.initial_sigma", sigma)?;
            config.toy2 = Some(Toy2Config {
                a_plus: Some(p.a_plus),
                a_minus: Some(p.a_minus),
                v0: Some(p.v0),
                delta: Some(p.delta),
                initial_center: Some(center),
                initial_sigma: Some(sigma),
            });
            let v = double_well(&p, &grid)?;
            let reference = spectrum(&v, params.nu, 1)?.ground_state;
            let psi0 = gaussian_packet(&grid, center, sigma)?;
            (v, psi0, reference)
        };
        Ok(Resolved {
            config,
            plan: Plan::Continuous {
                v,
                psi0,
                params,
                reference,
                record_every,
                snapshot_every,
            },
            derived,
        })
    }

    fn resolve_lattice(&self) -> Result<Resolved> {
        self.reject_sections(&["lattice"])?;
        let lc = self.lattice.clone().unwrap_or_default();
        let s = lc.s.unwrap_or(100);
        let lattice = Lattice::new(s).map_err(|e| Error::config("lattice.s", e.to_string()))?;
        if s < 3 {
            return Err(Error::param("lattice.s", format!("need s >= 3, got {s}")));
        }
        let epsilon = lc.epsilon.unwrap_or(17);
        let k = match lc.k {
            Some(k) => k,
            None => (epsilon as f64 - 1.0) / 2.0,
        };
        if !(k.is_finite() && k.fract() == 0.0) {
            let how = if lc.k.is_some() {
                "given"
            } else {
                "defaulted from (epsilon - 1)/2"
            };
            return Err(Error::param(
                "lattice.k",
                format!("k must be an integer, got {k} ({how})"),
            ));
        }
        if k < 1.0 || k > epsilon as f64 {
            return Err(Error::param(
                "lattice.k",
                format!("need 1 <= k <= epsilon = {epsilon}, got {k}"),
            ));
        }
        let k = k as usize;

        let anderson = self.kind == ExperimentKind::Anderson;
        let g0 = 2.0 / s as f64;
        let sigma0 = (10.0 / s as f64).powf(1.5);
        let g = pick_scaled("lattice.g", lc.g, lc.g_factor, g0, 0.0)?;
        let beta = pick_scaled("lattice.beta", lc.beta, lc.beta_factor, g0, 0.0)?;
        let sigma = pick_scaled(
            "lattice.sigma",
            lc.sigma,
            lc.sigma_factor,
            sigma0,
            if anderson { 2.0 * sigma0 } else { 0.0 },
        )?;
        check_nonnegative("lattice.sigma", sigma)?;
        if !g.is_finite() {
            return Err(Error::param("lattice.g", "must be finite"));
        }
        let horizon = if anderson { 20.0 } else { 4.0 } * s as f64;
        let params = DiscreteSlkParams {
            beta,
            dt: lc.dt.unwrap_or(0.02),
            t_max: lc.t_max.unwrap_or(horizon),
            scheme: lc.scheme.unwrap_or_default(),
        };
        params.validate()?;
        let delta = lc.delta.unwrap_or(2 * epsilon);
        if delta == 0 || delta >= s {
            return Err(Error::param(
                "lattice.delta",
                format!("need 1 <= delta < s = {s}, got {delta}"),
            ));
        }
        let record_every = lc.record_every.unwrap_or_else(|| steps_for(0.1, params.dt));
        if record_every == 0 {
            return Err(Error::param("lattice.record_every", "must be positive"));
        }
        let snapshot_every = lc
            .snapshot_every
            .unwrap_or_else(|| steps_for(if anderson { 2.0 } else { 1.0 }, params.dt));

        let seed = if sigma > 0.0 {
            Some(self.seed.unwrap_or(DEFAULT_SEED))
        } else {
            self.seed
        };
        let mut v = linear_tilt(g, &lattice);
        if sigma > 0.0 {
            let disorder = anderson_disorder(
                &DisorderSpec {
                    sigma,
                    seed: seed.unwrap_or(DEFAULT_SEED),
                },
                &lattice,
            )?;
            v = v.add(&disorder)?;
        }
        let psi0 = sine_packet(&SinePacket { epsilon, k }, &lattice)?;

        let mut config = Self::new(self.kind);
        config.seed = seed;
        config.lattice = Some(LatticeConfig {
            s: Some(s),
            epsilon: Some(epsilon),
            k: Some(k as f64),
            g: Some(g),
            beta: Some(beta),
            sigma: Some(sigma),
            dt: Some(params.dt),
            t_max: Some(params.t_max),
            delta: Some(delta),
            record_every: Some(record_every),
            snapshot_every: Some(snapshot_every),
            scheme: Some(params.scheme),
            ..LatticeConfig::default()
        });
        let mut derived = Map::new();
        derived.insert("g0".into(), g0.into());
        derived.insert("sigma0".into(), sigma0.into());
        derived.insert("steps".into(), params.steps().into());
        Ok(Resolved {
            config,
            plan: Plan::Lattice {
                v,
                psi0,
                params,
                delta,
                record_every,
                snapshot_every,
            },
            derived,
        })
    }

    fn resolve_custom(&self) -> Result<Resolved> {
        let cc = self
            .custom
            .clone()
            .ok_or_else(|| Error::config("custom", "section is required for kind `custom`"))?;
        let file = cc
            .potential_file
            .clone()
            .ok_or_else(|| Error::config("custom.potential_file", "required"))?;
        let domain = cc.domain.unwrap_or(CustomDomain::Grid);
        let initial = cc.initial.ok_or_else(|| Error::config("custom.initial", "required"))?;
        let text = fs::read_to_string(&file)
            .map_err(|e| Error::config("custom.potential_file", format!("{}: {e}", file.display())))?;
        let (xs, vs) = output::parse_potential_csv(&text)?;

        let mut config = Self::new(ExperimentKind::Custom);
        config.seed = self.seed;
        let mut derived = Map::new();
        let plan = match domain {
            CustomDomain::Grid => {
                self.reject_sections(&["continuous", "custom"])?;
                let n = xs.len();
                if n < 3 {
                    return Err(Error::config("custom.potential_file", "need at least 3 grid points"));
                }
                let grid = Grid1D::new(xs[0], xs[n - 1], n)
                    .map_err(|e| Error::config("custom.potential_file", e.to_string()))?;
                let dx = grid.dx();
                if let Some(i) = (0..n).find(|&i| (xs[i] - grid.x(i)).abs() > 1e-9 * dx.max(xs[i].abs())) {
                    return Err(Error::config(
                        "custom.potential_file",
                        format!("grid points must be equally spaced; row {} has x = {}", i + 1, xs[i]),
                    ));
                }
                let v =
                    PotentialField::new(grid, vs).map_err(|e| Error::config("custom.potential_file", e.to_string()))?;
                let psi0 = match initial {
                    InitialState::Gaussian { center, sigma } => {
                        if !center.is_finite() {
                            return Err(Error::param("custom.initial.gaussian.center", "must be finite"));
                        }
                        check_positive("custom.initial.gaussian.sigma", sigma)?;
                        gaussian_packet(&grid, center, sigma)?
                    }
                    InitialState::SinePacket { .. } => {
                        return Err(Error::config(
                            "custom.initial",
                            "a grid run needs a gaussian initial state",
                        ))
                    }
                };
                let (cont, params, record_every, snapshot_every) = resolve_continuous(self.continuous.as_ref(), 0.0)?;
                config.continuous = Some(cont);
                derived.insert("dx".into(), dx.into());
                derived.insert("steps".into(), params.steps().into());
                let reference = spectrum(&v, params.nu, 1)?.ground_state;
                Plan::Continuous {
                    v,
                    psi0,
                    params,
                    reference,
                    record_every,
                    snapshot_every,
                }
            }
            CustomDomain::Lattice => {
                self.reject_sections(&["lattice", "custom"])?;
                let s = xs.len();
                if let Some(i) = xs.iter().enumerate().position(|(i, &x)| x != (i + 1) as f64) {
                    return Err(Error::config(
                        "custom.potential_file",
                        format!(
                            "lattice sites must be labelled 1, 2, ..., s; row {} has x = {}",
                            i + 1,
                            xs[i]
                        ),
                    ));
                }
                let lattice = Lattice::new(s).map_err(|e| Error::config("custom.potential_file", e.to_string()))?;
                let v = PotentialField::new(lattice, vs)
                    .map_err(|e| Error::config("custom.potential_file", e.to_string()))?;
                let lc = self.lattice.clone().unwrap_or_default();
                for (name, set) in [
                    ("s", lc.s.is_some()),
                    ("epsilon", lc.epsilon.is_some()),
                    ("k", lc.k.is_some()),
                    ("g", lc.g.is_some() || lc.g_factor.is_some()),
                    ("sigma", lc.sigma.is_some() || lc.sigma_factor.is_some()),
                    ("beta_factor", lc.beta_factor.is_some()),
                ] {
                    if set {
                        return Err(Error::config(
                            format!("lattice.{name}"),
                            "does not apply to custom runs",
                        ));
                    }
                }
                let (psi0, default_delta) = match initial {
                    InitialState::SinePacket { epsilon, k } => {
                        (sine_packet(&SinePacket { epsilon, k }, &lattice)?, 2 * epsilon)
                    }
                    InitialState::Gaussian { .. } => {
                        return Err(Error::config(
                            "custom.initial",
                            "a lattice run needs a sine_packet initial state",
                        ))
                    }
                };
                let params = DiscreteSlkParams {
                    beta: lc.beta.unwrap_or(0.0),
                    dt: lc.dt.unwrap_or(0.02),
                    t_max: lc.t_max.unwrap_or(4.0 * s as f64),
                    scheme: lc.scheme.unwrap_or_default(),
                };
                params.validate()?;
                let delta = lc.delta.unwrap_or(default_delta.min(s - 1));
                if delta == 0 || delta >= s {
                    return Err(Error::param(
                        "lattice.delta",
                        format!("need 1 <= delta < s = {s}, got {delta}"),
                    ));
                }
                let record_every = lc.record_every.unwrap_or_else(|| steps_for(0.1, params.dt));
                if record_every == 0 {
                    return Err(Error::param("lattice.record_every", "must be positive"));
                }
                let snapshot_every = lc.snapshot_every.unwrap_or_else(|| steps_for(1.0, params.dt));
                config.lattice = Some(LatticeConfig {
                    beta: Some(params.beta),
                    dt: Some(params.dt),
                    t_max: Some(params.t_max),
                    delta: Some(delta),
                    record_every: Some(record_every),
                    snapshot_every: Some(snapshot_every),
                    scheme: Some(params.scheme),
                    ..LatticeConfig::default()
                });
                derived.insert("steps".into(), params.steps().into());
                Plan::Lattice {
                    v,
                    psi0,
                    params,
                    delta,
                    record_every,
                    snapshot_every,
                }
            }
        };
        config.custom = Some(CustomConfig {
            potential_file: Some(file),
            domain: Some(domain),
            initial: Some(initial),
        });
        Ok(Resolved { config, plan, derived })
    }
}

/// Absolute value, or factor times `unit`, or the default.
fn pick_scaled(field: &str, absolute: Option<f64>, factor: Option<f64>, unit: f64, default: f64) -> Result<f64> {
    let v = match (absolute, factor) {
        (Some(_), Some(_)) => {
            return Err(Error::param(
                field,
                format!("set either `{field}` or `{field}_factor`, not both"),
            ));
        }
        (Some(v), None) => v,
        (None, Some(f)) => f * unit,
        (None, None) => default,
    };
    if !v.is_finite() {
        return Err(Error::param(field, "must be finite"));
    }
    Ok(v)
}

fn steps_for(interval: f64, dt: f64) -> usize {
    ((interval / dt).round() as usize).max(1)
}

fn resolve_continuous(
    c: Option<&ContinuousConfig>,
    default_beta: f64,
) -> Result<(ContinuousConfig, SlkParams, usize, usize)> {
    let c = c.cloned().unwrap_or_default();
    let params = SlkParams {
        nu: c.nu.unwrap_or(1.0),
        beta: c.beta.unwrap_or(default_beta),
        dt: c.dt.unwrap_or(0.005),
        t_max: c.t_max.unwrap_or(50.0),
        rho_floor: c.rho_floor.unwrap_or(DEFAULT_RELATIVE_RHO_FLOOR),
        subtract_mean_phase: c.subtract_mean_phase.unwrap_or(true),
        scheme: c.scheme.unwrap_or_default(),
    };
    params.validate()?;
    let record_every = c.record_every.unwrap_or_else(|| steps_for(0.1, params.dt));
    if record_every == 0 {
        return Err(Error::param("continuous.record_every", "must be positive"));
    }
    let snapshot_every = c.snapshot_every.unwrap_or_else(|| steps_for(5.0, params.dt));
    let resolved = ContinuousConfig {
        nu: Some(params.nu),
        beta: Some(params.beta),
        dt: Some(params.dt),
        t_max: Some(params.t_max),
        rho_floor: Some(params.rho_floor),
        subtract_mean_phase: Some(params.subtract_mean_phase),
        scheme: Some(params.scheme),
        record_every: Some(record_every),
        snapshot_every: Some(snapshot_every),
    };
    Ok((resolved, params, record_every, snapshot_every))
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub generator: String,
    pub command: String,
    pub config: Value,
    pub derived: Map<String, Value>,
    /// Paths relative to the output directory, in write order.
    pub files: Vec<String>,
    pub diagnostics: Map<String, Value>,
}

impl Manifest {
    fn new(command: &str, resolved: &Resolved) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            generator: concat!("slk ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            config: resolved.config.to_value(),
            derived: resolved.derived.clone(),
            files: Vec::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_file(&self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Removes snapshot files left by an earlier run so the directory
    /// matches the manifest.
    fn clear_snapshots(&self) -> Result<()> {
        let dir = self.dir.join("snapshots");
        let Ok(entries) = fs::read_dir(&dir) else {
            return Ok(());
        };
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with("t_") && name.ends_with(".csv") {
                fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            }
        }
        Ok(())
    }

    fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.files = self.files;
        manifest.files.push("manifest.json".into());
        write_file(&self.dir.join("manifest.json"), &manifest.to_json())?;
        Ok(manifest)
    }
}

fn output_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.output_dir
        .as_deref()
        .ok_or_else(|| Error::config("output_dir", "no output directory given"))
}

fn insert_f64(map: &mut Map<String, Value>, key: &str, v: f64) {
    map.insert(key.into(), v.into());
}

/// Runs one experiment and writes its files into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let resolved = cfg.resolve()?;
    let run = resolved.plan.simulate(true)?;
    let mut manifest = Manifest::new("run", &resolved);
    let mut w = Writer::new(dir)?;
    let v = resolved.plan.potential();
    w.write("potential.csv", &output::potential_csv(v))?;
    w.write("series.csv", &output::series_csv(&run.series))?;

    let d = &mut manifest.diagnostics;
    let last = run.series.len() - 1;
    insert_f64(d, "final_time", run.series.times[last]);
    insert_f64(d, "final_norm", run.series.norm[last]);
    insert_f64(d, "final_energy", run.series.energy[last]);
    insert_f64(d, "max_energy_increase", run.series.max_energy_increase());
    d.insert("unconverged_steps".into(), run.unconverged_steps.into());

    match &resolved.plan {
        Plan::Continuous { params, .. } => {
            let grid = match v.domain() {
                Domain::Grid(g) => *g,
                Domain::Lattice(_) => unreachable!("continuous plan on a grid"),
            };
            w.clear_snapshots()?;
            for snap in &run.snapshots {
                let name = format!("snapshots/{}", output::snapshot_file_name(snap.t));
                w.write(&name, &output::snapshot_csv(snap, &grid, v))?;
            }
            let overlap = run.series.overlap.as_ref().expect("continuous runs record overlap");
            insert_f64(d, "final_overlap", overlap[last]);
            let oracle = spectrum(v, params.nu, 1)?;
            insert_f64(d, "oracle_ground_energy", oracle.eigenvalues[0]);
            if let Some(snap) = run.snapshots.last() {
                if let Some(wf) = &snap.w {
                    let rho = &snap.density_phase.rho;
                    let rho_max = rho.iter().copied().fold(0.0, f64::max);
                    insert_f64(
                        d,
                        "final_w_max_deviation",
                        wf.max_deviation_where(v, rho, W_COMPARISON_RELATIVE_RHO * rho_max),
                    );
                }
            }
        }
        Plan::Lattice { .. } => {
            let lattice = match v.domain() {
                Domain::Lattice(l) => *l,
                Domain::Grid(_) => unreachable!("lattice plan on a lattice"),
            };
            w.write("density_map.csv", &output::density_map_csv(&run.snapshots, &lattice))?;
            let arrival = run.series.arrival_prob.as_ref().expect("lattice runs record arrival");
            insert_f64(d, "final_arrival_prob", arrival[last]);
            insert_f64(d, "max_arrival_prob", arrival.iter().copied().fold(0.0, f64::max));
        }
    }
    w.finish(manifest)
}

/// Lowest `count` eigenvalues and the ground state of the configured
/// Hamiltonian.
pub fn spectrum_of(cfg: &ExperimentConfig, count: usize) -> Result<(Resolved, SpectrumResult)> {
    if count == 0 {
        return Err(Error::param("count", "must be positive"));
    }
    let resolved = cfg.resolve()?;
    let plan = &resolved.plan;
    let count = count.min(plan.potential().domain().len());
    let spec = spectrum(plan.potential(), plan.oracle_parameter(), count)?;
    Ok((resolved, spec))
}

/// Writes `spectrum.csv`, `ground_state.csv` and `potential.csv`.
pub fn run_spectrum(cfg: &ExperimentConfig, count: usize) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let (resolved, spec) = spectrum_of(cfg, count)?;
    let mut manifest = Manifest::new("spectrum", &resolved);
    let mut w = Writer::new(dir)?;
    w.write("potential.csv", &output::potential_csv(resolved.plan.potential()))?;
    w.write("spectrum.csv", &output::spectrum_csv(&spec))?;
    w.write("ground_state.csv", &output::ground_state_csv(&spec))?;
    manifest.derived.insert("count".into(), spec.n_computed.into());
    insert_f64(&mut manifest.diagnostics, "ground_energy", spec.eigenvalues[0]);
    insert_f64(&mut manifest.diagnostics, "residual", spec.residual);
    if let Plan::Continuous { reference, .. } = &resolved.plan {
        insert_f64(
            &mut manifest.diagnostics,
            "reference_overlap",
            vacuum_overlap(&spec.ground_state, reference)?,
        );
    }
    w.finish(manifest)
}

/// Arrival-probability curves of a disorder ensemble and their pointwise
/// quartiles.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
    /// One curve per realization, in seed order.
    pub arrival: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub lower_quartile: Vec<f64>,
    pub upper_quartile: Vec<f64>,
}

impl EnsembleResult {
    /// Per-realization maximum over the horizon.
    pub fn max_arrival(&self) -> Vec<f64> {
        self.arrival
            .iter()
            .map(|c| c.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    pub fn final_arrival(&self) -> Vec<f64> {
        self.arrival
            .iter()
            .map(|c| *c.last().expect("non-empty curve"))
            .collect()
    }
}

/// Linear-interpolation quantile of a sample (the type 7 rule: position
/// `q·(n−1)` in the sorted data).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Runs `n` realizations with seeds `seed, seed+1, …` in parallel.
pub fn disorder_ensemble(cfg: &ExperimentConfig, n: usize) -> Result<EnsembleResult> {
    if n == 0 {
        return Err(Error::param("realizations", "must be positive"));
    }
    if !matches!(cfg.kind, ExperimentKind::Bloch | ExperimentKind::Anderson) {
        return Err(Error::config(
            "kind",
            "ensembles need a lattice kind (bloch or anderson)",
        ));
    }
    let base = cfg.resolve()?.config.seed.unwrap_or(DEFAULT_SEED);
    let seeds: Vec<u64> = (0..n as u64).map(|i| base.wrapping_add(i)).collect();
    let runs: Vec<Result<RunResult>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.seed = Some(seed);
            c.resolve()?.plan.simulate(false)
        })
        .collect();
    let mut arrival = Vec::with_capacity(n);
    let mut times = Vec::new();
    for run in runs {
        let run = run?;
        times = run.series.times;
        arrival.push(run.series.arrival_prob.expect("lattice runs record arrival"));
    }
    let column = |j: usize| arrival.iter().map(|c| c[j]).collect::<Vec<f64>>();
    let stats = |q: f64| (0..times.len()).map(|j| quantile(&column(j), q)).collect();
    Ok(EnsembleResult {
        median: stats(0.5),
        lower_quartile: stats(0.25),
        upper_quartile: stats(0.75),
        seeds,
        times,
        arrival,
    })
}

/// Writes `ensemble_curves.csv`, `ensemble_stats.csv` and
/// `ensemble_summary.csv`.
pub fn run_ensemble(cfg: &ExperimentConfig, n: usize) -> Result<(Manifest, EnsembleResult)> {
    let dir = output_dir(cfg)?;
    let result = disorder_ensemble(cfg, n)?;
    let resolved = cfg.resolve()?;
    let mut manifest = Manifest::new("ensemble", &resolved);
    manifest.derived.insert("realizations".into(), n.into());
    manifest.derived.insert("seeds".into(), result.seeds.clone().into());
    let mut w = Writer::new(dir)?;

    let mut curves = String::from("t");
    for seed in &result.seeds {
        curves.push_str(&format!(",seed_{seed}"));
    }
    curves.push('\n');
    for (j, t) in result.times.iter().enumerate() {
        curves.push_str(&fmt_f64(*t));
        for c in &result.arrival {
            curves.push(',');
            curves.push_str(&fmt_f64(c[j]));
        }
        curves.push('\n');
    }
    w.write("ensemble_curves.csv", &curves)?;

    let mut stats = String::from("t,median,q25,q75\n");
    for j in 0..result.times.len() {
        stats.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(result.times[j]),
            fmt_f64(result.median[j]),
            fmt_f64(result.lower_quartile[j]),
            fmt_f64(result.upper_quartile[j])
        ));
    }
    w.write("ensemble_stats.csv", &stats)?;

    let max = result.max_arrival();
    let fin = result.final_arrival();
    let mut summary = String::from("seed,max_arrival_prob,final_arrival_prob\n");
    for (i, seed) in result.seeds.iter().enumerate() {
        summary.push_str(&format!("{seed},{},{}\n", fmt_f64(max[i]), fmt_f64(fin[i])));
    }
    w.write("ensemble_summary.csv", &summary)?;

    insert_f64(&mut manifest.diagnostics, "median_max_arrival_prob", median(&max));
    insert_f64(&mut manifest.diagnostics, "median_final_arrival_prob", median(&fin));
    let manifest = w.finish(manifest)?;
    Ok((manifest, result))
}
