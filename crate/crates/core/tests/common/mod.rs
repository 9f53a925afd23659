#![allow(dead_code)]

use qtorus::cli::presets::{duffing_monomials, henon_heiles_monomials};
use qtorus::lattice::{LatticeBox, ModeOrder};
use qtorus::solver::{full_state, q_update, residual_f};
use qtorus::{FourierVector, Monomial, PolynomialHamiltonian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const A: f64 = 0.36787944117144233;

pub fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

pub fn duffing(eps: f64) -> PolynomialHamiltonian {
    PolynomialHamiltonian::new(vec![1.0], duffing_monomials(), eps).unwrap()
}

pub fn henon_heiles(eps: f64) -> PolynomialHamiltonian {
    PolynomialHamiltonian::new(vec![1.0, golden()], henon_heiles_monomials(), eps).unwrap()
}

/// `(x(t), y(t), dx/dt, dy/dt)` summed straight from the coefficients.
pub fn series_with_derivative(zhat: &FourierVector, omega: &[f64], t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = zhat.dim();
    let (mut re, mut im, mut dre, mut dim) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (m, v) in zhat.iter() {
        let w: f64 = m.k.entries().iter().zip(omega).map(|(&k, w)| k as f64 * w).sum();
        let (s, c) = (w * t).sin_cos();
        re[m.j] += v * c;
        im[m.j] += v * s;
        dre[m.j] -= v * w * s;
        dim[m.j] += v * w * c;
    }
    let s2 = 2f64.sqrt();
    let x = im.iter().map(|v| -s2 * v).collect();
    let y = re.iter().map(|v| s2 * v).collect();
    let dx = dim.iter().map(|v| -s2 * v).collect();
    let dy = dre.iter().map(|v| s2 * v).collect();
    (x, y, dx, dy)
}

/// Duffing equations `dx/dt = -(y + eps y^3)`, `dy/dt = x`, written out by
/// hand; returns the max residual of the pair.
pub fn duffing_eom_residual(x: f64, y: f64, dx: f64, dy: f64, eps: f64) -> f64 {
    (dx + y + eps * y * y * y).abs().max((dy - x).abs())
}

/// Brute-force Diophantine scan with explicit nested loops (n <= 2).
pub fn brute_diophantine(omega: &[f64], m_box: usize, tau: f64) -> (bool, Vec<i32>, f64) {
    let b = 2 * (m_box as i32 + 1);
    let mut ok = true;
    let mut best = (f64::INFINITY, vec![]);
    let mut visit = |k: Vec<i32>| {
        if k.iter().all(|&v| v == 0) {
            return;
        }
        let len: f64 = k.iter().map(|v| v.abs() as f64).sum();
        let dot: f64 = k.iter().zip(omega).map(|(&a, w)| a as f64 * w).sum();
        if dot.abs() < len.powf(-tau) {
            ok = false;
        }
        let p = dot.abs() * len.powf(tau);
        if p < best.0 {
            best = (p, k);
        }
    };
    match omega.len() {
        1 => (-b..=b).for_each(|a| visit(vec![a])),
        2 => {
            for a in -b..=b {
                for c in -b..=b {
                    visit(vec![a, c]);
                }
            }
        }
        _ => panic!("brute force oracle handles n <= 2"),
    }
    (ok, best.1, best.0)
}

/// Random Hamiltonian with 1..=3 monomials of degree 3 or 4.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize) -> PolynomialHamiltonian {
    let count = rng.random_range(1..=3);
    let mut terms = Vec::new();
    for _ in 0..count {
        let degree = rng.random_range(3..=4u32);
        let mut alpha = vec![0u32; n];
        let mut beta = vec![0u32; n];
        for _ in 0..degree {
            let slot = rng.random_range(0..2 * n);
            if slot < n {
                alpha[slot] += 1;
            } else {
                beta[slot - n] += 1;
            }
        }
        terms.push(Monomial::new(rng.random_range(-0.5..0.5), alpha, beta));
    }
    let omega0 = (0..n).map(|j| 1.0 + 0.7 * j as f64 + rng.random_range(0.0..0.3)).collect();
    PolynomialHamiltonian::new(omega0, terms, rng.random_range(0.05..0.5)).unwrap()
}

/// A few random non-resonant coefficients inside `Λ_N`.
pub fn random_sparse_state(rng: &mut ChaCha8Rng, n: usize, half_width: usize) -> FourierVector {
    let order = ModeOrder::new(LatticeBox::new(half_width, n).unwrap()).unwrap();
    let mut z = FourierVector::new(n);
    for _ in 0..rng.random_range(1..=4) {
        let m = order.mode(rng.random_range(0..order.len())).clone();
        z.insert(m, rng.random_range(-0.08..0.08));
    }
    z
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite-difference Jacobian of `zhat_p -> P_N F(zhat_p, omega')`
/// over the non-resonant modes of `Λ_N`. With `frozen`, `omega'` stays at
/// its value for the unperturbed `zhat_p`; otherwise it is recomputed from
/// the perturbed state.
pub fn fd_residual_jacobian(h: &PolynomialHamiltonian, zhat_p: &FourierVector, amplitude: f64, half_width: usize, frozen: bool) -> Vec<Vec<f64>> {
    let order = ModeOrder::new(LatticeBox::new(half_width, h.dim()).unwrap()).unwrap();
    let omega_base = q_update(h, zhat_p, amplitude).unwrap();
    let eval = |z: &FourierVector| -> Vec<f64> {
        let w = if frozen { omega_base.clone() } else { q_update(h, z, amplitude).unwrap() };
        let f = residual_f(h, z, &w, amplitude, 8 * half_width).unwrap();
        order.pack(&f)
    };
    let step = 1e-6;
    let rows = order.len();
    let mut jac = vec![vec![0.0; rows]; rows];
    for c in 0..rows {
        let m = order.mode(c).clone();
        let base = zhat_p.get(&m);
        let mut plus = zhat_p.clone();
        plus.insert(m.clone(), base + step);
        let mut minus = zhat_p.clone();
        minus.insert(m, base - step);
        let (fp, fm) = (eval(&plus), eval(&minus));
        for r in 0..rows {
            jac[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    jac
}

pub fn full(zhat_p: &FourierVector) -> FourierVector {
    full_state(zhat_p, A)
}
