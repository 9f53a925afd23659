//! Built-in experiments.

use std::path::PathBuf;

use crate::hamiltonian::{collect_monomials, expand_real_power, Monomial};

use super::config::{
    DiagnosticsSection, DriftSection, ExperimentConfig, ExperimentKind, MonomialSpec, OutputsSection, PerturbationSection, ScanSection,
    SolverSection, SystemSection,
};

pub const PRESETS: &[(&str, &str)] = &[
    ("duffing", "Duffing oscillator, eps = 1, H1 = (z + zbar)^4 / 16"),
    ("henon-heiles", "Henon-Heiles, eps = 0.1, omega = (1, golden ratio)"),
    ("harmonic-drift", "symplectic Euler phase drift on the harmonic oscillator"),
    ("resonance-scan", "Monte Carlo measure of nearly-resonant frequencies on [1, 2]^2"),
];

pub fn list_presets() -> String {
    PRESETS
        .iter()
        .map(|(name, about)| format!("{name:<16}{about}\n"))
        .collect()
}

fn specs(terms: Vec<Monomial>) -> Vec<MonomialSpec> {
    terms
        .into_iter()
        .map(|m| MonomialSpec {
            coeff: m.coeff,
            alpha: m.alpha,
            beta: m.beta,
        })
        .collect()
}

/// `(z + zbar)^4 / 16`, i.e. `y^4 / 4` in real coordinates.
pub fn duffing_monomials() -> Vec<Monomial> {
    expand_real_power(1.0 / 16.0, &[4])
}

/// `(z1 + zbar1)^2 (z2 + zbar2) / (2 sqrt2) - (z2 + zbar2)^3 / (6 sqrt2)`,
/// i.e. `y1^2 y2 - y2^3 / 3`.
pub fn henon_heiles_monomials() -> Vec<Monomial> {
    let s2 = std::f64::consts::SQRT_2;
    let mut terms = expand_real_power(1.0 / (2.0 * s2), &[2, 1]);
    terms.extend(expand_real_power(-1.0 / (6.0 * s2), &[0, 3]));
    collect_monomials(terms)
}

fn grid(end: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| end * i as f64 / (points - 1) as f64).collect()
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let outputs = |emit: bool| OutputsSection {
        directory: Some(PathBuf::from("qtorus-out").join(name)),
        emit_trajectories: emit,
        trajectory_times: if emit { grid(10.0, 101) } else { Vec::new() },
        reference_dt: 1e-3,
    };
    let base = |kind| ExperimentConfig {
        name: name.to_string(),
        kind,
        system: None,
        perturbation: None,
        solver: SolverSection::default(),
        diagnostics: DiagnosticsSection::default(),
        outputs: outputs(false),
        drift: None,
        scan: None,
    };
    let cfg = match name {
        "duffing" => ExperimentConfig {
            system: Some(SystemSection {
                n: 1,
                omega0: vec![1.0],
                amplitude: (-1.0f64).exp(),
                h0: "isochronous".into(),
            }),
            perturbation: Some(PerturbationSection {
                epsilon: 1.0,
                monomials: specs(duffing_monomials()),
            }),
            outputs: outputs(true),
            ..base(ExperimentKind::Solve)
        },
        "henon-heiles" => ExperimentConfig {
            system: Some(SystemSection {
                n: 2,
                omega0: vec![1.0, (1.0 + 5f64.sqrt()) / 2.0],
                amplitude: (-1.0f64).exp(),
                h0: "isochronous".into(),
            }),
            perturbation: Some(PerturbationSection {
                epsilon: 0.1,
                monomials: specs(henon_heiles_monomials()),
            }),
            solver: SolverSection {
                max_iter: 5,
                ..SolverSection::default()
            },
            outputs: outputs(true),
            ..base(ExperimentKind::Solve)
        },
        "harmonic-drift" => ExperimentConfig {
            drift: Some(DriftSection {
                h: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5],
                n_steps: 101,
            }),
            ..base(ExperimentKind::HarmonicDrift)
        },
        "resonance-scan" => ExperimentConfig {
            scan: Some(ScanSection {
                lower: vec![1.0, 1.0],
                upper: vec![2.0, 2.0],
                tau: vec![1.5, 2.0, 3.0, 4.0],
                m_box: vec![5, 10],
                samples: 10_000,
                seed: 0,
            }),
            ..base(ExperimentKind::ResonanceScan)
        },
        _ => return None,
    };
    Some(cfg)
}
