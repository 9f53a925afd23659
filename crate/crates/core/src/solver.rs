//! Alternating frequency update and dimension-enlarged Newton iteration.
//!
//! Each iteration `r` takes `(omega^(r), zhat^(r))`, solves the resonant
//! equations exactly for `omega^(r+1)`, measures the non-resonant residual at
//! `(zhat^(r), omega^(r+1))`, and, unless converged, applies one Newton step
//! on the box `Λ_{N_{r+1}}` with `N_{r+1} = min(M N_r, N_cap)`.

use log::{info, warn};
use num_complex::Complex64;

use crate::diagnostics::{condition_report, diophantine_check, gevrey_profile, DiagnosticsReport, DEFAULT_LOCALIZATION_MAX_ROWS};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{resonant_field, to_real, vector_field_with, PolynomialHamiltonian};
use crate::lattice::{resonant_set, FourierVector, LatticeBox, ModeOrder};
use crate::linalg::norm2;
use crate::operator::{BScale, OperatorConfig, TangentOperator, DEFAULT_MAX_ROWS, DEFAULT_RCOND_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Box growth factor `M`.
    pub growth: usize,
    pub n0: usize,
    pub n_cap: usize,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub use_b: bool,
    pub b_scale: BScale,
    pub amplitude: f64,
    pub tau: f64,
    pub strict_conditions: bool,
    pub seed: u64,
    /// Gevrey exponent used by the diagnostics.
    pub gevrey_s: f64,
    /// Half-width `M_box` of the Diophantine scan.
    pub m_box: usize,
    pub rcond_floor: f64,
    pub max_rows: usize,
    pub diagnostics_max_rows: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            growth: 2,
            n0: 1,
            n_cap: 64,
            max_iter: 8,
            tol_residual: 1e-12,
            use_b: true,
            b_scale: BScale::ChainRule,
            amplitude: (-1.0f64).exp(),
            tau: 2.0,
            strict_conditions: false,
            seed: 0,
            gevrey_s: 0.5,
            m_box: 10,
            rcond_floor: DEFAULT_RCOND_FLOOR,
            max_rows: DEFAULT_MAX_ROWS,
            diagnostics_max_rows: DEFAULT_LOCALIZATION_MAX_ROWS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::config(format!("solver.{key}"), msg));
        if self.growth < 2 {
            return fail("growth", format!("must be >= 2, got {}", self.growth));
        }
        if self.n0 < 1 {
            return fail("n0", "must be >= 1".into());
        }
        if self.n_cap < self.n0 {
            return fail("n_cap", format!("must be >= n0 = {}", self.n0));
        }
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return fail("tol_residual", format!("must be positive, got {}", self.tol_residual));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return fail("amplitude", format!("must be positive, got {}", self.amplitude));
        }
        if !self.tau.is_finite() {
            return fail("tau", "must be finite".into());
        }
        if !(self.gevrey_s > 0.0 && self.gevrey_s < 1.0) {
            return fail("gevrey_s", format!("must lie in (0, 1), got {}", self.gevrey_s));
        }
        if !(self.rcond_floor >= 0.0 && self.rcond_floor < 1.0) {
            return fail("rcond_floor", format!("must lie in [0, 1), got {}", self.rcond_floor));
        }
        Ok(())
    }

    fn operator_config(&self) -> OperatorConfig {
        OperatorConfig {
            use_b: self.use_b,
            b_scale: self.b_scale,
            amplitude: self.amplitude,
            rcond_floor: self.rcond_floor,
            max_rows: self.max_rows,
        }
    }
}

/// `exp((log 1/eps)^{1/20})`, defined for `0 < eps < 1`.
pub fn theoretical_growth_factor(epsilon: f64) -> Option<f64> {
    (epsilon > 0.0 && epsilon < 1.0).then(|| (1.0 / epsilon).ln().powf(0.05).exp())
}

/// The resonant amplitudes `a` at every `(j, e_j)` plus `zhat_p`.
pub fn full_state(zhat_p: &FourierVector, amplitude: f64) -> FourierVector {
    let mut z = zhat_p.clone();
    for m in resonant_set(zhat_p.dim()) {
        z.insert(m, amplitude);
    }
    z
}

/// Exact solution of the resonant equations:
/// `omega'_j = omega_j + eps X_j(e_j) / a`.
pub fn q_update(h: &PolynomialHamiltonian, zhat_p: &FourierVector, amplitude: f64) -> Result<Vec<f64>> {
    q_update_with(h, zhat_p, amplitude, Exec::default())
}

pub fn q_update_with(h: &PolynomialHamiltonian, zhat_p: &FourierVector, amplitude: f64, exec: Exec) -> Result<Vec<f64>> {
    let x = vector_field_with(h, &full_state(zhat_p, amplitude), exec)?;
    Ok(q_update_from_field(h, &x, amplitude))
}

fn q_update_from_field(h: &PolynomialHamiltonian, x: &FourierVector, amplitude: f64) -> Vec<f64> {
    h.omega0()
        .iter()
        .zip(resonant_field(x))
        .map(|(w, xq)| w + h.epsilon() * xq / amplitude)
        .collect()
}

/// `F(j,k) = (-<k, omega'> + omega_j) zhat_p(j,k) + eps X_p(j,k)` over the
/// non-resonant modes of `Λ_eval`.
pub fn residual_f(h: &PolynomialHamiltonian, zhat_p: &FourierVector, omega_drift: &[f64], amplitude: f64, eval_half_width: usize) -> Result<FourierVector> {
    let x = vector_field_with(h, &full_state(zhat_p, amplitude), Exec::default())?;
    Ok(residual_from_field(h, zhat_p, &x, omega_drift, eval_half_width))
}

fn residual_from_field(h: &PolynomialHamiltonian, zhat_p: &FourierVector, x: &FourierVector, omega_drift: &[f64], eval_half_width: usize) -> FourierVector {
    let eps = h.epsilon();
    let omega0 = h.omega0();
    let mut f = x.scaled(eps);
    for (m, z) in zhat_p.iter() {
        let d = -m.k.dot(omega_drift) + omega0[m.j];
        let cur = f.get(m);
        f.insert(m.clone(), d * z + cur);
    }
    let (_, p) = f.project(eval_half_width).split_resonant();
    p
}

/// `z_j(t) = sum_k zhat_j(k) e^{i <k, omega'> t}` and the real pair
/// `x = -sqrt2 Im z`, `y = sqrt2 Re z`.
pub fn evaluate_solution(zhat: &FourierVector, omega_drift: &[f64], t: f64) -> (Vec<Complex64>, Vec<f64>, Vec<f64>) {
    let mut z = vec![Complex64::new(0.0, 0.0); zhat.dim()];
    for (m, v) in zhat.iter() {
        z[m.j] += v * Complex64::from_polar(1.0, m.k.dot(omega_drift) * t);
    }
    let (x, y) = to_real(&z);
    (z, x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub r: usize,
    /// `N_r`, the box containing `zhat^(r)`.
    pub half_width: usize,
    /// `omega^(r)`.
    pub omega: Vec<f64>,
    /// `omega^(r+1)`, paired with `zhat^(r)` in the residual.
    pub omega_next: Vec<f64>,
    pub residual_l2: f64,
    /// `||Δ^(r)||_2`; absent when no Newton step followed.
    pub step_l2: Option<f64>,
    pub support_size: usize,
    pub gevrey_sup: f64,
    pub diagnostics: Option<DiagnosticsReport>,
    /// Full `zhat^(r)`, resonant slots included.
    pub zhat: FourierVector,
}

impl IterationRecord {
    pub fn log_inverse_norm(&self) -> Option<f64> {
        self.diagnostics.as_ref()?.condition.as_ref().map(|c| c.log_inverse_norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Aborted(Error),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Aborted(Error::NearResonance { .. }) => "near-resonance",
            Termination::Aborted(Error::ConditionViolation(_)) => "condition-violation",
            Termination::Aborted(_) => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub r: usize,
    /// Latest frequency (`omega^(r+1)` of the last row).
    pub omega: Vec<f64>,
    pub zhat: FourierVector,
    pub half_width: usize,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolverState {
    pub fn final_residual(&self) -> Option<f64> {
        self.history.last().map(|h| h.residual_l2)
    }

    pub fn is_converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

pub fn run(h: &PolynomialHamiltonian, config: &SolverConfig) -> Result<SolverState> {
    run_with(h, config, Exec::default())
}

/// Runs to convergence or `max_iter`. Configuration errors are returned as
/// `Err`; failures during the iteration end the run with
/// [`Termination::Aborted`] and keep the history gathered so far.
pub fn run_with(h: &PolynomialHamiltonian, config: &SolverConfig, exec: Exec) -> Result<SolverState> {
    config.validate()?;
    let n = h.dim();
    if let Some(m) = theoretical_growth_factor(h.epsilon()) {
        info!("theoretical growth factor for eps = {}: {m:.6} (using M = {})", h.epsilon(), config.growth);
    }
    let degree = h.max_degree().max(1) as usize;
    let op_config = config.operator_config();
    let mut state = SolverState {
        r: 0,
        omega: h.omega0().to_vec(),
        zhat: full_state(&FourierVector::new(n), config.amplitude),
        half_width: config.n0,
        history: Vec::new(),
        termination: Termination::MaxIterations,
    };
    let mut omega = h.omega0().to_vec();
    let mut zhat_p = FourierVector::new(n);
    let mut half_width = config.n0;
    for r in 0.. {
        let full = full_state(&zhat_p, config.amplitude);
        let x = match vector_field_with(h, &full, exec) {
            Ok(x) => x,
            Err(e) => {
                state.termination = Termination::Aborted(e);
                return Ok(state);
            }
        };
        let omega_next = q_update_from_field(h, &x, config.amplitude);
        let f = residual_from_field(h, &zhat_p, &x, &omega_next, degree * half_width);
        let residual_l2 = f.norm_l2();
        let gevrey_sup = gevrey_profile(&full, config.gevrey_s)?.sup;
        info!("r = {r}: N = {half_width}, |F| = {residual_l2:.3e}, omega' = {omega_next:?}");
        state.r = r;
        state.omega = omega_next.clone();
        state.zhat = full.clone();
        state.half_width = half_width;
        let mut record = IterationRecord {
            r,
            half_width,
            omega: omega.clone(),
            omega_next: omega_next.clone(),
            residual_l2,
            step_l2: None,
            support_size: full.nonzero_len(),
            gevrey_sup,
            diagnostics: None,
            zhat: full.clone(),
        };
        if residual_l2 <= config.tol_residual {
            state.history.push(record);
            state.termination = Termination::Converged;
            return Ok(state);
        }
        if r == config.max_iter {
            state.history.push(record);
            state.termination = Termination::MaxIterations;
            return Ok(state);
        }

        let next = (config.growth * half_width).min(config.n_cap);
        if next == half_width {
            info!("box cap N = {next} reached; continuing at fixed truncation");
        }
        let step = newton_step(h, &full, &zhat_p, &f, &omega_next, next, config, &op_config, exec, r);
        match step {
            Ok((new_p, step_l2, diagnostics)) => {
                record.step_l2 = Some(step_l2);
                let violations = diagnostics.as_ref().map(DiagnosticsReport::violations).unwrap_or_default();
                record.diagnostics = diagnostics;
                state.history.push(record);
                if config.strict_conditions && !violations.is_empty() {
                    state.termination = Termination::Aborted(Error::ConditionViolation(violations.join("; ")));
                    return Ok(state);
                }
                zhat_p = new_p;
            }
            Err(e) => {
                warn!("iteration {r} aborted: {e}");
                state.history.push(record);
                state.termination = Termination::Aborted(e);
                return Ok(state);
            }
        }
        omega = omega_next;
        half_width = next;
    }
    unreachable!("the iteration loop only exits by returning")
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    h: &PolynomialHamiltonian,
    full: &FourierVector,
    zhat_p: &FourierVector,
    f: &FourierVector,
    omega_next: &[f64],
    next: usize,
    config: &SolverConfig,
    op_config: &OperatorConfig,
    exec: Exec,
    r: usize,
) -> Result<(FourierVector, f64, Option<DiagnosticsReport>)> {
    let lattice_box = LatticeBox::new(next, h.dim())?;
    let t = TangentOperator::assemble(h, full, omega_next, lattice_box, op_config, exec)?;
    let order: &ModeOrder = t.order();
    let delta = t.solve_linear(&order.pack(f))?;
    let step_l2 = norm2(&delta);
    let updated: Vec<f64> = order.pack(zhat_p).iter().zip(&delta).map(|(z, d)| z - d).collect();
    let mut new_p = FourierVector::new(h.dim());
    for (m, &v) in order.modes().iter().zip(&updated) {
        if v != 0.0 {
            new_p.insert(m.clone(), v);
        }
    }
    let condition = if t.rows() <= config.diagnostics_max_rows {
        Some(condition_report(&t, config.gevrey_s)?)
    } else {
        info!("skipping dense condition report: {} rows > {}", t.rows(), config.diagnostics_max_rows);
        None
    };
    let diagnostics = DiagnosticsReport {
        r,
        condition,
        gevrey_sup: gevrey_profile(full, config.gevrey_s)?.sup,
        diophantine: diophantine_check(omega_next, config.m_box, config.tau),
    };
    Ok((new_p, step_l2, Some(diagnostics)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::expand_real_power;

    fn duffing(eps: f64) -> PolynomialHamiltonian {
        PolynomialHamiltonian::new(vec![1.0], expand_real_power(1.0 / 16.0, &[4]), eps).unwrap()
    }

    #[test]
    fn duffing_first_frequency() {
        let w = q_update(&duffing(1.0), &FourierVector::new(1), (-1.0f64).exp()).unwrap();
        let e2 = 1f64.exp().powi(2);
        assert!((w[0] - (1.0 + 3.0 / (4.0 * e2))).abs() < 1e-14);
        let w0 = q_update(&duffing(0.0), &FourierVector::new(1), 0.4).unwrap();
        assert_eq!(w0, vec![1.0]);
    }

    #[test]
    fn initial_residual_is_the_field() {
        let a = (-1.0f64).exp();
        let h = duffing(1.0);
        let w = q_update(&h, &FourierVector::new(1), a).unwrap();
        let f = residual_f(&h, &FourierVector::new(1), &w, a, 4).unwrap();
        let a3 = a.powi(3);
        assert!((f.coeff(0, &[3]) - 0.25 * a3).abs() < 1e-17);
        assert!((f.coeff(0, &[-1]) - 0.75 * a3).abs() < 1e-17);
        assert!((f.coeff(0, &[-3]) - 0.25 * a3).abs() < 1e-17);
        assert_eq!(f.coeff(0, &[1]), 0.0);
    }

    #[test]
    fn linear_residual_formula() {
        let h = duffing(0.0);
        let zp = FourierVector::from_entries(1, [(0, vec![2], 0.3), (0, vec![-1], -0.2)]);
        let f = residual_f(&h, &zp, &[1.0], 0.5, 4).unwrap();
        assert_eq!(f.coeff(0, &[2]), -0.3);
        assert_eq!(f.coeff(0, &[-1]), -0.4);
    }

    #[test]
    fn unperturbed_run_stops_immediately() {
        let st = run(&duffing(0.0), &SolverConfig::default()).unwrap();
        assert_eq!(st.r, 0);
        assert_eq!(st.history.len(), 1);
        assert_eq!(st.history[0].residual_l2, 0.0);
        assert_eq!(st.omega, vec![1.0]);
        assert!(st.is_converged());
    }

    #[test]
    fn evaluation_at_time_zero_sums_coefficients() {
        let z = FourierVector::from_entries(2, [(0, vec![1, 0], 0.4), (0, vec![2, -1], 0.1), (1, vec![0, 1], 0.3)]);
        let (zt, _, _) = evaluate_solution(&z, &[1.0, 1.7], 0.0);
        assert!((zt[0].re - 0.5).abs() < 1e-16 && zt[0].im == 0.0);
        assert!((zt[1].re - 0.3).abs() < 1e-16);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            growth: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { key, .. }) if key == "solver.growth"));
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn growth_factor_is_near_one() {
        let m = theoretical_growth_factor(0.1).unwrap();
        assert!(m > 1.0 && m < 3.0);
        assert!(theoretical_growth_factor(1.0).is_none());
    }
}
