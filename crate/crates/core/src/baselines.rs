//! Symplectic Euler, its phase error on the harmonic oscillator, and a
//! step-halving RK4 reference integrator.
//!
//! Real coordinates follow `dx/dt = -dH/dy`, `dy/dt = dH/dx`, under which the
//! harmonic oscillator rotates `(x, y)` counterclockwise at unit speed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PolynomialHamiltonian;

const IMPLICIT_TOL: f64 = 1e-15;
const IMPLICIT_MAX_ITER: usize = 200;
pub const REFERENCE_TOL: f64 = 1e-10;
const REFERENCE_MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Self {
        PhaseState { x, y, t }
    }

    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .zip(other.x.iter().chain(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The system driven by the integrators.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    /// `H = (x^2 + y^2) / 2` in every component.
    Harmonic,
    Polynomial(PolynomialHamiltonian),
}

impl System {
    /// `(dH/dx, dH/dy)`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            System::Harmonic => (x.to_vec(), y.to_vec()),
            System::Polynomial(h) => h.real_gradient(x, y),
        }
    }

    pub fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            System::Harmonic => 0.5 * x.iter().chain(y).map(|v| v * v).sum::<f64>(),
            System::Polynomial(h) => h.energy(x, y),
        }
    }

    fn velocity(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (hx, hy) = self.gradient(x, y);
        (hy.iter().map(|v| -v).collect(), hx)
    }
}

/// `x+ = x - h dH/dy(x+, y)`, `y+ = y + h dH/dx(x+, y)`.
///
/// The first relation is solved by fixed-point iteration; it is explicit
/// whenever `dH/dy` does not depend on `x`, as for the harmonic oscillator,
/// where the step is `x+ = x - h y`, `y+ = y + h x+`.
pub fn symplectic_euler_step(system: &System, state: &PhaseState, h: f64) -> Result<PhaseState> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    let x_of = |xp: &[f64]| -> Vec<f64> {
        let (_, hy) = system.gradient(xp, &state.y);
        state.x.iter().zip(&hy).map(|(x, g)| x - h * g).collect()
    };
    let mut xp = x_of(&state.x);
    let mut converged = false;
    for _ in 0..IMPLICIT_MAX_ITER {
        let next = x_of(&xp);
        let change = next.iter().zip(&xp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        xp = next;
        if change <= IMPLICIT_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::StepSize(format!("implicit position update did not converge at h = {h}")));
    }
    let (hx, _) = system.gradient(&xp, &state.y);
    let yp = state.y.iter().zip(&hx).map(|(y, g)| y + h * g).collect();
    Ok(PhaseState::new(xp, yp, state.t + h))
}

/// One-step matrix of symplectic Euler on the harmonic oscillator.
pub fn euler_matrix(h: f64) -> [[f64; 2]; 2] {
    [[1.0, -h], [h, 1.0 - h * h]]
}

/// Eigenvalues of a real 2x2 matrix from its trace and determinant.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}

/// Rotation per step, `theta_h = arccos(1 - h^2/2)`, for `0 <= h < 2`.
pub fn phase_per_step(h: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&h) {
        return Err(Error::Domain(format!("phase per step needs 0 <= h < 2, got {h}")));
    }
    Ok((1.0 - h * h / 2.0).acos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub h: f64,
    pub theta_h: f64,
    pub delta_theta: f64,
    pub n_steps: u64,
    pub accumulated: f64,
}

pub fn phase_drift(h: f64, n_steps: u64) -> Result<DriftRecord> {
    let theta_h = phase_per_step(h)?;
    let delta_theta = theta_h - h;
    Ok(DriftRecord {
        h,
        theta_h,
        delta_theta,
        n_steps,
        accumulated: n_steps as f64 * delta_theta,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Integrates the harmonic oscillator from `(1, 0)` for `n` steps and returns
/// the unwrapped angle travelled in the frame where the invariant ellipse
/// `x^2 - h x y + y^2` is a circle.
pub fn integrated_angle(h: f64, n_steps: u64) -> Result<f64> {
    let c = (1.0 - h * h / 4.0).sqrt();
    let frame = |x: f64, y: f64| (y * c).atan2(x - 0.5 * h * y);
    let mut state = PhaseState::new(vec![1.0], vec![0.0], 0.0);
    let mut prev = frame(1.0, 0.0);
    let mut total = 0.0;
    for _ in 0..n_steps {
        state = symplectic_euler_step(&System::Harmonic, &state, h)?;
        let cur = frame(state.x[0], state.y[0]);
        total += wrap_angle(cur - prev);
        prev = cur;
    }
    Ok(total)
}

/// Unwrapped raw angle of `(x_n, y_n)` in the plane, which oscillates around
/// [`integrated_angle`] because the numerical orbit is an ellipse.
pub fn integrated_raw_angle(h: f64, n_steps: u64) -> Result<f64> {
    let mut state = PhaseState::new(vec![1.0], vec![0.0], 0.0);
    let mut prev = 0.0f64;
    let mut total = 0.0;
    for _ in 0..n_steps {
        state = symplectic_euler_step(&System::Harmonic, &state, h)?;
        let cur = state.y[0].atan2(state.x[0]);
        total += wrap_angle(cur - prev);
        prev = cur;
    }
    Ok(total)
}

/// Measured drift `angle_n - n h`.
pub fn measured_drift(h: f64, n_steps: u64) -> Result<f64> {
    Ok(integrated_angle(h, n_steps)? - n_steps as f64 * h)
}

fn rk4_step(system: &System, x: &[f64], y: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let axpy = |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + c * q).collect() };
    let (k1x, k1y) = system.velocity(x, y);
    let (k2x, k2y) = system.velocity(&axpy(x, dt / 2.0, &k1x), &axpy(y, dt / 2.0, &k1y));
    let (k3x, k3y) = system.velocity(&axpy(x, dt / 2.0, &k2x), &axpy(y, dt / 2.0, &k2y));
    let (k4x, k4y) = system.velocity(&axpy(x, dt, &k3x), &axpy(y, dt, &k3y));
    let comb = |v: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..v.len())
            .map(|i| v[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    (comb(x, &k1x, &k2x, &k3x, &k4x), comb(y, &k1y, &k2y, &k3y, &k4y))
}

/// Fixed-step RK4 sampled at `times`; each gap is split into equal steps no
/// longer than `dt`.
pub fn rk4_trajectory(system: &System, initial: &PhaseState, times: &[f64], dt: f64) -> Result<Vec<PhaseState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let mut out = Vec::with_capacity(times.len());
    let (mut x, mut y, mut t) = (initial.x.clone(), initial.y.clone(), initial.t);
    for &target in times {
        if !(target >= t) {
            return Err(Error::Domain(format!("sample times must be non-decreasing from {t}, got {target}")));
        }
        let gap = target - t;
        let steps = (gap / dt).ceil() as u64;
        if steps > 0 {
            let step = gap / steps as f64;
            for _ in 0..steps {
                (x, y) = rk4_step(system, &x, &y, step);
            }
        }
        t = target;
        out.push(PhaseState::new(x.clone(), y.clone(), t));
    }
    Ok(out)
}

/// RK4 trajectory certified by step halving: `dt` is halved until two
/// successive trajectories agree to [`REFERENCE_TOL`] at every sample.
pub fn reference_integrate(system: &System, initial: &PhaseState, times: &[f64], dt: f64) -> Result<Vec<PhaseState>> {
    let mut coarse = rk4_trajectory(system, initial, times, dt)?;
    let mut step = dt;
    for _ in 0..REFERENCE_MAX_HALVINGS {
        step /= 2.0;
        let fine = rk4_trajectory(system, initial, times, step)?;
        let change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        if change < REFERENCE_TOL {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::StepSize(format!(
        "no agreement to {REFERENCE_TOL:e} after {REFERENCE_MAX_HALVINGS} halvings of dt = {dt}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_step_example() {
        let s = PhaseState::new(vec![1.0], vec![0.0], 0.0);
        let s1 = symplectic_euler_step(&System::Harmonic, &s, 0.1).unwrap();
        assert_eq!((s1.x[0], s1.y[0]), (1.0, 0.1));
        let s2 = symplectic_euler_step(&System::Harmonic, &s1, 0.1).unwrap();
        let m = euler_matrix(0.1);
        assert!((s2.x[0] - (m[0][0] * s1.x[0] + m[0][1] * s1.y[0])).abs() < 1e-16);
        assert!((s2.y[0] - (m[1][0] * s1.x[0] + m[1][1] * s1.y[0])).abs() < 1e-16);
    }

    #[test]
    fn phase_examples() {
        assert!((phase_per_step(1.0).unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert_eq!(phase_per_step(0.0).unwrap(), 0.0);
        assert!(phase_per_step(2.0).is_err());
        let d = phase_drift(0.1, 101).unwrap();
        assert!(d.delta_theta >= 1e-3 / 24.0);
        assert_eq!(phase_drift(0.1, 0).unwrap().accumulated, 0.0);
        assert_eq!(phase_drift(0.1, 202).unwrap().accumulated, 2.0 * d.accumulated);
    }

    #[test]
    fn normalized_angle_advances_by_theta() {
        for &h in &[0.05, 0.1, 0.5, 1.0, 1.5] {
            let n = 37;
            let measured = integrated_angle(h, n).unwrap();
            let expected = n as f64 * phase_per_step(h).unwrap();
            assert!((measured - expected).abs() < 1e-11, "h={h}");
        }
    }

    #[test]
    fn reference_recovers_period() {
        let s = PhaseState::new(vec![1.0], vec![0.0], 0.0);
        let out = reference_integrate(&System::Harmonic, &s, &[std::f64::consts::TAU], 1e-3).unwrap();
        assert!((out[0].x[0] - 1.0).abs() < 1e-8 && out[0].y[0].abs() < 1e-8);
    }

    #[test]
    fn unsorted_times_are_rejected() {
        let s = PhaseState::new(vec![1.0], vec![0.0], 0.0);
        assert!(rk4_trajectory(&System::Harmonic, &s, &[1.0, 0.5], 0.1).is_err());
    }
}
