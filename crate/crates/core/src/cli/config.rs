//! Experiment configuration files.
//!
//! Configs are TOML. A run's `summary.json` embeds the config under the
//! `config` key, and JSON in either form is accepted as well, so a summary can
//! be fed straight back to `qtorus run`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{FrequencyDomain, DEFAULT_LOCALIZATION_MAX_ROWS};
use crate::error::{Error, Result};
use crate::hamiltonian::{Monomial, PolynomialHamiltonian};
use crate::operator::{BScale, DEFAULT_MAX_ROWS, DEFAULT_RCOND_FLOOR};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Solve,
    HarmonicDrift,
    ResonanceScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

fn default_amplitude() -> f64 {
    (-1.0f64).exp()
}

fn default_h0() -> String {
    "isochronous".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub omega0: Vec<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_h0")]
    pub h0: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coeff: f64,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub epsilon: f64,
    #[serde(default)]
    pub monomials: Vec<MonomialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub growth: usize,
    pub n0: usize,
    pub n_cap: usize,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub use_b: bool,
    pub b_scale: BScale,
    pub seed: u64,
    pub rcond_floor: f64,
    pub max_rows: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            growth: d.growth,
            n0: d.n0,
            n_cap: d.n_cap,
            max_iter: d.max_iter,
            tol_residual: d.tol_residual,
            use_b: d.use_b,
            b_scale: d.b_scale,
            seed: d.seed,
            rcond_floor: DEFAULT_RCOND_FLOOR,
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub s: f64,
    pub tau: f64,
    pub m_box: usize,
    pub strict: bool,
    pub max_rows: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            s: 0.5,
            tau: 2.0,
            m_box: 10,
            strict: false,
            max_rows: DEFAULT_LOCALIZATION_MAX_ROWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    /// Relative paths resolve against the working directory.
    pub directory: Option<PathBuf>,
    pub emit_trajectories: bool,
    pub trajectory_times: Vec<f64>,
    pub reference_dt: f64,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection {
            directory: None,
            emit_trajectories: false,
            trajectory_times: Vec::new(),
            reference_dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub h: Vec<f64>,
    pub n_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tau: Vec<f64>,
    pub m_box: Vec<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub max_iter: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub strict_conditions: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A bare config, or a run summary carrying one under `config`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) if c.is_object() => c.clone(),
            _ => value,
        };
        let cfg: ExperimentConfig = serde_json::from_value(inner).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = o.max_iter {
            self.solver.max_iter = m;
        }
        if let Some(eps) = o.epsilon {
            match &mut self.perturbation {
                Some(p) => p.epsilon = eps,
                None => return Err(Error::config("perturbation.epsilon", "--epsilon given but the config has no perturbation")),
            }
        }
        if let Some(seed) = o.seed {
            self.solver.seed = seed;
            if let Some(scan) = &mut self.scan {
                scan.seed = seed;
            }
        }
        if o.strict_conditions {
            self.diagnostics.strict = true;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ExperimentKind::Solve => {
                self.hamiltonian()?;
                self.solver_config()?;
                if self.outputs.emit_trajectories {
                    if !(self.outputs.reference_dt > 0.0 && self.outputs.reference_dt.is_finite()) {
                        return Err(Error::config("outputs.reference_dt", "must be positive"));
                    }
                    let t = &self.outputs.trajectory_times;
                    if t.is_empty() {
                        return Err(Error::config("outputs.trajectory_times", "must be non-empty when trajectories are emitted"));
                    }
                    if t[0] < 0.0 || t.windows(2).any(|w| !(w[1] >= w[0])) {
                        return Err(Error::config("outputs.trajectory_times", "must be non-negative and non-decreasing"));
                    }
                }
            }
            ExperimentKind::HarmonicDrift => {
                let d = self.drift.as_ref().ok_or_else(|| Error::config("drift", "section required for kind = \"harmonic-drift\""))?;
                if d.h.is_empty() {
                    return Err(Error::config("drift.h", "must list at least one step size"));
                }
                if let Some(h) = d.h.iter().find(|h| !(**h > 0.0 && **h < 2.0)) {
                    return Err(Error::config("drift.h", format!("step sizes must lie in (0, 2), got {h}")));
                }
            }
            ExperimentKind::ResonanceScan => {
                let s = self.scan.as_ref().ok_or_else(|| Error::config("scan", "section required for kind = \"resonance-scan\""))?;
                FrequencyDomain::new(s.lower.clone(), s.upper.clone())?;
                if s.samples == 0 {
                    return Err(Error::config("scan.samples", "must be at least 1"));
                }
                if s.tau.is_empty() || s.m_box.is_empty() {
                    return Err(Error::config("scan.tau", "tau and m_box lists must be non-empty"));
                }
            }
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<PolynomialHamiltonian> {
        let sys = self.system.as_ref().ok_or_else(|| Error::config("system", "section required"))?;
        let pert = self.perturbation.as_ref().ok_or_else(|| Error::config("perturbation", "section required"))?;
        if sys.h0 != "isochronous" {
            return Err(Error::config("system.h0", format!("only \"isochronous\" is supported, got {:?}", sys.h0)));
        }
        if sys.n != sys.omega0.len() {
            return Err(Error::config("system.omega0", format!("expected {} entries, got {}", sys.n, sys.omega0.len())));
        }
        if !(sys.amplitude > 0.0 && sys.amplitude.is_finite()) {
            return Err(Error::config("system.amplitude", format!("must be positive, got {}", sys.amplitude)));
        }
        let terms = pert
            .monomials
            .iter()
            .map(|m| Monomial::new(m.coeff, m.alpha.clone(), m.beta.clone()))
            .collect();
        PolynomialHamiltonian::new(sys.omega0.clone(), terms, pert.epsilon)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let d = &self.diagnostics;
        let cfg = SolverConfig {
            growth: s.growth,
            n0: s.n0,
            n_cap: s.n_cap,
            max_iter: s.max_iter,
            tol_residual: s.tol_residual,
            use_b: s.use_b,
            b_scale: s.b_scale,
            amplitude: self.system.as_ref().map_or_else(default_amplitude, |sys| sys.amplitude),
            tau: d.tau,
            strict_conditions: d.strict,
            seed: s.seed,
            gevrey_s: d.s,
            m_box: d.m_box,
            rcond_floor: s.rcond_floor,
            max_rows: s.max_rows,
            diagnostics_max_rows: d.max_rows,
        };
        cfg.validate().map_err(|e| match e {
            Error::InvalidConfig { key, message } => {
                let key = match key.as_str() {
                    "solver.tau" => "diagnostics.tau".into(),
                    "solver.gevrey_s" => "diagnostics.s".into(),
                    "solver.amplitude" => "system.amplitude".into(),
                    _ => key,
                };
                Error::InvalidConfig { key, message }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.outputs
            .directory
            .clone()
            .unwrap_or_else(|| PathBuf::from("qtorus-out").join(&self.name))
    }
}
