//! Run configuration: a flat TOML file with nested sections. Unknown keys
//! are rejected so hyper-parameter typos fail loudly. All randomness flows
//! from the single top-level `seed`.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use qesn::tuning::{Objective, TuningGrid};
use qesn::{Activation, EmbeddingSpec, Lorenz96Config64, QesnConfig64, ReservoirSpec64};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed for every random draw the run makes.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; created if absent. Overridden by `--output`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker thread cap. Overridden by `--threads`; defaults to machine
    /// parallelism.
    pub threads: Option<usize>,
    pub data: Option<DataSection>,
    #[serde(default)]
    pub lorenz96: Lorenz96Section,
    #[serde(default)]
    pub reservoir: ReservoirSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub windows: Option<WindowsSection>,
    pub eof: Option<EofSection>,
    pub grid: Option<GridSection>,
}

fn default_output() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Plain response matrix CSV (`time,v1,...`).
    pub responses: Option<PathBuf>,
    /// Gridded field CSV with lat/lon metadata lines.
    pub gridded: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lorenz96Section {
    pub n_sites: usize,
    pub forcing: f64,
    pub dt: f64,
    pub substeps: usize,
    pub sigma_eta: f64,
    pub n_periods: usize,
    pub burn_in: usize,
}

impl Default for Lorenz96Section {
    fn default() -> Self {
        let d = Lorenz96Config64::default();
        Lorenz96Section {
            n_sites: d.n_sites,
            forcing: d.forcing,
            dt: d.dt,
            substeps: d.substeps,
            sigma_eta: d.sigma_eta,
            n_periods: d.n_periods,
            burn_in: d.burn_in,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirSection {
    pub n_h: usize,
    pub nu: f64,
    pub pi_w: f64,
    pub pi_u: f64,
    pub a_w: f64,
    pub a_u: f64,
    pub alpha: f64,
    pub activation: ActivationName,
}

impl Default for ReservoirSection {
    fn default() -> Self {
        let d = ReservoirSpec64::default();
        ReservoirSection {
            n_h: d.n_h,
            nu: d.nu,
            pi_w: d.pi_w,
            pi_u: d.pi_u,
            a_w: d.a_w,
            a_u: d.a_u,
            alpha: d.alpha,
            activation: ActivationName::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    Tanh,
    Identity,
}

impl From<ActivationName> for Activation {
    fn from(a: ActivationName) -> Activation {
        match a {
            ActivationName::Tanh => Activation::Tanh,
            ActivationName::Identity => Activation::Identity,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub lead: usize,
    pub tau: usize,
    pub m: usize,
    pub include_intercept: bool,
    pub normalize: bool,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            lead: 6,
            tau: 1,
            m: 4,
            include_intercept: true,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub r_v: f64,
    pub k: usize,
    pub n_f: usize,
    pub include_quadratic: bool,
    pub include_embedding: bool,
    pub add_residual_noise: bool,
    pub washout: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            r_v: 0.001,
            k: 500,
            n_f: 99,
            include_quadratic: true,
            include_embedding: true,
            add_residual_noise: true,
            washout: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    /// Training rows are `0..train_end`.
    pub train_end: usize,
    /// Validation window length for `tune`; the window starts at
    /// `train_end`.
    pub validation_len: Option<usize>,
    /// First forecast time for `forecast`; defaults to `train_end`. May lie
    /// before it, in which case the affected forecasts replay the training
    /// recursion (useful for evaluating long-lead forecasts across an event
    /// that straddles the training boundary).
    pub forecast_start: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EofSection {
    pub n_eof: usize,
    /// When both climatology years are set, anomalies are computed from the
    /// raw grid before the decomposition; otherwise the input is taken to be
    /// anomalies already.
    pub climatology_start: Option<i32>,
    pub climatology_end: Option<i32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_h: Vec<usize>,
    pub nu: Vec<f64>,
    pub r_v: Vec<f64>,
    pub m: Vec<usize>,
    #[serde(default = "default_alpha_grid")]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub objective: ObjectiveName,
}

fn default_alpha_grid() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[default]
    OverallMse,
    RegionalMse,
}

impl From<ObjectiveName> for Objective {
    fn from(o: ObjectiveName) -> Objective {
        match o {
            ObjectiveName::OverallMse => Objective::OverallMse,
            ObjectiveName::RegionalMse => Objective::RegionalMse,
        }
    }
}

/// Winning configuration written by `tune`, reusable as config sections.
#[derive(Debug, Clone, Serialize)]
pub struct BestConfig {
    pub score: f64,
    pub reservoir: ReservoirSection,
    pub embedding: EmbeddingSection,
    pub ensemble: EnsembleSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("parsing {}: {e}", path.display())))
    }

    pub fn lorenz96_config(&self) -> CliResult<Lorenz96Config64> {
        let s = &self.lorenz96;
        let config = Lorenz96Config64 {
            n_sites: s.n_sites,
            forcing: s.forcing,
            dt: s.dt,
            substeps: s.substeps,
            sigma_eta: s.sigma_eta,
            n_periods: s.n_periods,
            burn_in: s.burn_in,
            seed: self.seed,
            initial_state: None,
        };
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    pub fn qesn_config(&self) -> CliResult<QesnConfig64> {
        let r = &self.reservoir;
        let e = &self.embedding;
        let n = &self.ensemble;
        let config = QesnConfig64 {
            reservoir: ReservoirSpec64 {
                n_h: r.n_h,
                nu: r.nu,
                pi_w: r.pi_w,
                pi_u: r.pi_u,
                a_w: r.a_w,
                a_u: r.a_u,
                alpha: r.alpha,
                activation: r.activation.into(),
                seed: self.seed,
            },
            embedding: EmbeddingSpec {
                lead: e.lead,
                tau: e.tau,
                m: e.m,
                include_intercept: e.include_intercept,
                normalize: e.normalize,
            },
            r_v: n.r_v,
            ensemble_size: n.k,
            horizon: n.n_f,
            include_quadratic: n.include_quadratic,
            include_embedding: n.include_embedding,
            add_residual_noise: n.add_residual_noise,
            washout: n.washout,
        };
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    pub fn tuning_grid(&self) -> CliResult<TuningGrid<f64>> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::config("missing [grid] section"))?;
        let grid = TuningGrid {
            n_h_values: g.n_h.clone(),
            nu_values: g.nu.clone(),
            r_v_values: g.r_v.clone(),
            m_values: g.m.clone(),
            alpha_values: g.alpha.clone(),
            objective: g.objective.into(),
        };
        if grid.is_empty() {
            return Err(CliError::config(
                "[grid] lists must all be non-empty".to_string(),
            ));
        }
        Ok(grid)
    }

    pub fn windows(&self) -> CliResult<&WindowsSection> {
        self.windows
            .as_ref()
            .ok_or_else(|| CliError::config("missing [windows] section"))
    }

    pub fn data(&self) -> CliResult<&DataSection> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::config("missing [data] section"))
    }

    /// Fold the winning grid point back into serializable sections.
    pub fn best_config_toml(&self, result: &qesn::TuningResult<f64>) -> String {
        let c = &result.best_config;
        let best = BestConfig {
            score: result.best_score,
            reservoir: ReservoirSection {
                n_h: c.reservoir.n_h,
                nu: c.reservoir.nu,
                pi_w: c.reservoir.pi_w,
                pi_u: c.reservoir.pi_u,
                a_w: c.reservoir.a_w,
                a_u: c.reservoir.a_u,
                alpha: c.reservoir.alpha,
                activation: match c.reservoir.activation {
                    Activation::Tanh => ActivationName::Tanh,
                    Activation::Identity => ActivationName::Identity,
                },
            },
            embedding: EmbeddingSection {
                lead: c.embedding.lead,
                tau: c.embedding.tau,
                m: c.embedding.m,
                include_intercept: c.embedding.include_intercept,
                normalize: c.embedding.normalize,
            },
            ensemble: EnsembleSection {
                r_v: c.r_v,
                k: c.ensemble_size,
                n_f: c.horizon,
                include_quadratic: c.include_quadratic,
                include_embedding: c.include_embedding,
                add_residual_noise: c.add_residual_noise,
                washout: c.washout,
            },
        };
        toml::to_string(&best).expect("sections serialize")
    }
}
