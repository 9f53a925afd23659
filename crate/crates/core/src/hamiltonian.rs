//! Polynomial perturbations in complex coordinates and their lattice
//! transcriptions.
//!
//! The Hamiltonian is `H = sum_j omega_j |z_j|^2 + eps * H1(z, zbar)` with
//! `H1 = sum h_ab (z^a zbar^b + z^b zbar^a)`. Each [`Monomial`] stores one
//! `(a, b)` pair; its conjugate partner is implied, and suppressed when
//! `a == b`.
//!
//! On the lattice, `z_j` is replaced by the coefficient sequence `zhat_j` and
//! `zbar_j` by its flip, so that every monomial becomes an iterated
//! convolution. Sums over monomials are reduced in a fixed order, which makes
//! the result independent of the execution policy.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{FourierVector, LatticeBox, LatticeFn, ModeOrder, MultiIndex, DEFAULT_MODE_BUDGET};

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, alpha: Vec<u32>, beta: Vec<u32>) -> Self {
        Monomial { coeff, alpha, beta }
    }

    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>()
    }
}

/// `c * z^alpha * zbar^beta`, a single term with no implicit partner.
#[derive(Debug, Clone, PartialEq)]
struct RawTerm {
    coeff: f64,
    alpha: Vec<u32>,
    beta: Vec<u32>,
}

impl RawTerm {
    fn eval_point(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(self.coeff, 0.0);
        for (i, zi) in z.iter().enumerate() {
            acc *= zi.powu(self.alpha[i]) * zi.conj().powu(self.beta[i]);
        }
        acc
    }
}

fn dec(v: &[u32], i: usize) -> Option<Vec<u32>> {
    if v[i] == 0 {
        return None;
    }
    let mut w = v.to_vec();
    w[i] -= 1;
    Some(w)
}

/// `H = <omega0, |z|^2> + eps * H1` with polynomial `H1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialHamiltonian {
    omega0: Vec<f64>,
    terms: Vec<Monomial>,
    epsilon: f64,
}

impl PolynomialHamiltonian {
    pub fn new(omega0: Vec<f64>, terms: Vec<Monomial>, epsilon: f64) -> Result<Self> {
        let n = omega0.len();
        if n == 0 {
            return Err(Error::config("system.omega0", "at least one frequency is required"));
        }
        if let Some(w) = omega0.iter().find(|w| !w.is_finite()) {
            return Err(Error::config("system.omega0", format!("non-finite frequency {w}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::config("perturbation.epsilon", format!("must be finite and >= 0, got {epsilon}")));
        }
        for (idx, t) in terms.iter().enumerate() {
            let key = format!("perturbation.monomials[{idx}]");
            if t.alpha.len() != n || t.beta.len() != n {
                return Err(Error::config(key, format!("exponent lists must have length {n}")));
            }
            if !t.coeff.is_finite() {
                return Err(Error::config(key, "coefficient must be finite"));
            }
            if t.degree() < 3 {
                return Err(Error::config(key, format!("total degree {} < 3", t.degree())));
            }
        }
        Ok(PolynomialHamiltonian { omega0, terms, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.omega0.len()
    }

    pub fn omega0(&self) -> &[f64] {
        &self.omega0
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.omega0.clone(), self.terms.clone(), epsilon)
    }

    pub fn with_omega0(&self, omega0: Vec<f64>) -> Result<Self> {
        Self::new(omega0, self.terms.clone(), self.epsilon)
    }

    /// Largest total degree `|alpha| + |beta|` of `H1` (0 when unperturbed).
    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    fn raw_terms(&self) -> Vec<RawTerm> {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            out.push(RawTerm {
                coeff: t.coeff,
                alpha: t.alpha.clone(),
                beta: t.beta.clone(),
            });
            if t.alpha != t.beta {
                out.push(RawTerm {
                    coeff: t.coeff,
                    alpha: t.beta.clone(),
                    beta: t.alpha.clone(),
                });
            }
        }
        out
    }

    /// Terms of `dH1/dzbar_j`.
    fn field_terms(&self, j: usize) -> Vec<RawTerm> {
        self.raw_terms()
            .into_iter()
            .filter_map(|t| {
                let beta = dec(&t.beta, j)?;
                Some(RawTerm {
                    coeff: t.coeff * t.beta[j] as f64,
                    alpha: t.alpha,
                    beta,
                })
            })
            .collect()
    }

    /// Terms of `d^2 H1 / dzbar_j dz_i`.
    fn toeplitz_terms(&self, j: usize, i: usize) -> Vec<RawTerm> {
        self.field_terms(j)
            .into_iter()
            .filter_map(|t| {
                let alpha = dec(&t.alpha, i)?;
                Some(RawTerm {
                    coeff: t.coeff * t.alpha[i] as f64,
                    alpha,
                    beta: t.beta,
                })
            })
            .collect()
    }

    /// Terms of `d^2 H1 / dzbar_j dzbar_i`.
    fn hankel_terms(&self, j: usize, i: usize) -> Vec<RawTerm> {
        self.field_terms(j)
            .into_iter()
            .filter_map(|t| {
                let beta = dec(&t.beta, i)?;
                Some(RawTerm {
                    coeff: t.coeff * t.beta[i] as f64,
                    alpha: t.alpha,
                    beta,
                })
            })
            .collect()
    }

    /// `H1` at a point (real up to rounding; the real part is returned).
    pub fn h1_at(&self, z: &[Complex64]) -> f64 {
        self.raw_terms().iter().map(|t| t.eval_point(z)).sum::<Complex64>().re
    }

    /// `dH1/dzbar` at a point.
    pub fn dh1_dzbar_at(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|j| self.field_terms(j).iter().map(|t| t.eval_point(z)).sum())
            .collect()
    }

    /// Total energy in the real coordinates `z = (y - i x) / sqrt 2`.
    pub fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        let z = to_complex(x, y);
        let h0: f64 = self
            .omega0
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (xi, yi))| 0.5 * w * (xi * xi + yi * yi))
            .sum();
        h0 + self.epsilon * self.h1_at(&z)
    }

    /// `(dH/dx, dH/dy)` of the real-form Hamiltonian.
    ///
    /// With `g = dH1/dzbar`, reality of `H1` gives `dH1/dx = -sqrt2 Im g` and
    /// `dH1/dy = sqrt2 Re g`.
    pub fn real_gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = to_complex(x, y);
        let g = self.dh1_dzbar_at(&z);
        let s2 = std::f64::consts::SQRT_2;
        let hx = (0..self.dim())
            .map(|j| self.omega0[j] * x[j] - self.epsilon * s2 * g[j].im)
            .collect();
        let hy = (0..self.dim())
            .map(|j| self.omega0[j] * y[j] + self.epsilon * s2 * g[j].re)
            .collect();
        (hx, hy)
    }
}

/// `z_j = (y_j - i x_j) / sqrt 2`.
pub fn to_complex(x: &[f64], y: &[f64]) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| Complex64::new(s * yi, -s * xi))
        .collect()
}

/// Inverse of [`to_complex`]: `x = -sqrt2 Im z`, `y = sqrt2 Re z`.
pub fn to_real(z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let s2 = std::f64::consts::SQRT_2;
    (
        z.iter().map(|zi| -s2 * zi.im).collect(),
        z.iter().map(|zi| s2 * zi.re).collect(),
    )
}

/// Expands `coeff * prod_j (z_j + zbar_j)^{p_j}` into stored monomials,
/// keeping the lexicographically larger exponent of each conjugate pair.
pub fn expand_real_power(coeff: f64, powers: &[u32]) -> Vec<Monomial> {
    fn binom(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let n = powers.len();
    let mut out = Vec::new();
    let mut alpha = vec![0u32; n];
    loop {
        let beta: Vec<u32> = powers.iter().zip(&alpha).map(|(p, a)| p - a).collect();
        if alpha >= beta {
            let c = coeff * alpha.iter().zip(powers).map(|(&a, &p)| binom(p, a)).product::<f64>();
            out.push(Monomial::new(c, alpha.clone(), beta));
        }
        // odometer over 0..=p_j
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if alpha[i] < powers[i] {
                alpha[i] += 1;
                break;
            }
            alpha[i] = 0;
        }
    }
}

/// Merges monomials with identical exponent pairs, preserving first-seen order.
pub fn collect_monomials(terms: impl IntoIterator<Item = Monomial>) -> Vec<Monomial> {
    let mut order: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    let mut sums: BTreeMap<(Vec<u32>, Vec<u32>), f64> = BTreeMap::new();
    for t in terms {
        let key = (t.alpha, t.beta);
        if !sums.contains_key(&key) {
            order.push(key.clone());
        }
        *sums.entry(key).or_insert(0.0) += t.coeff;
    }
    order
        .into_iter()
        .map(|key| {
            let c = sums[&key];
            Monomial::new(c, key.0, key.1)
        })
        .collect()
}

/// `(u * v)(k) = sum_{k'} u(k - k') v(k')`, accumulated in canonical order.
pub fn convolve(u: &LatticeFn, v: &LatticeFn) -> Result<LatticeFn> {
    convolve_with_budget(u, v, DEFAULT_MODE_BUDGET)
}

pub fn convolve_with_budget(u: &LatticeFn, v: &LatticeFn, budget: u128) -> Result<LatticeFn> {
    let dim = u.dim();
    let pairs = (u.len() as u128) * (v.len() as u128);
    let reach = LatticeBox {
        half_width: (u.max_sup() + v.max_sup()) as usize,
        dim,
    }
    .num_points();
    let bound = pairs.min(reach);
    if bound > budget {
        return Err(Error::Capacity {
            what: "convolution support",
            requested: bound,
            budget,
        });
    }
    let mut out = LatticeFn::new(dim);
    for (ka, a) in u.iter() {
        for (kb, b) in v.iter() {
            out.add_at(ka + kb, a * b);
        }
    }
    Ok(out)
}

/// Convolution powers of `zhat_i` and of its flip, shared across terms.
struct PowerCache {
    dim: usize,
    z: Vec<Vec<LatticeFn>>,
    zbar: Vec<Vec<LatticeFn>>,
}

impl PowerCache {
    fn new(zhat: &FourierVector, max_power: u32) -> Result<Self> {
        let dim = zhat.dim();
        let mut z = Vec::with_capacity(dim);
        let mut zbar = Vec::with_capacity(dim);
        for i in 0..dim {
            let base = zhat.component(i);
            let mut pows = vec![LatticeFn::delta(MultiIndex::zero(dim), 1.0)];
            for p in 1..=max_power as usize {
                let next = convolve(&pows[p - 1], &base)?;
                pows.push(next);
            }
            zbar.push(pows.iter().map(LatticeFn::flip).collect());
            z.push(pows);
        }
        Ok(PowerCache { dim, z, zbar })
    }

    fn eval(&self, t: &RawTerm) -> Result<LatticeFn> {
        let mut acc = LatticeFn::delta(MultiIndex::zero(self.dim), t.coeff);
        for i in 0..self.dim {
            if t.alpha[i] > 0 {
                acc = convolve(&acc, &self.z[i][t.alpha[i] as usize])?;
            }
            if t.beta[i] > 0 {
                acc = convolve(&acc, &self.zbar[i][t.beta[i] as usize])?;
            }
        }
        Ok(acc)
    }
}

fn check_dim(h: &PolynomialHamiltonian, zhat: &FourierVector) -> Result<()> {
    if zhat.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: zhat.dim(),
            context: "Fourier vector vs Hamiltonian",
        });
    }
    Ok(())
}

/// Evaluates groups of raw terms on the lattice; group `g` is the ordered sum
/// of its terms.
fn eval_groups(zhat: &FourierVector, groups: Vec<Vec<RawTerm>>, exec: Exec) -> Result<Vec<LatticeFn>> {
    let dim = zhat.dim();
    let max_power = groups
        .iter()
        .flatten()
        .flat_map(|t| t.alpha.iter().chain(&t.beta).copied())
        .max()
        .unwrap_or(0);
    let cache = PowerCache::new(zhat, max_power)?;
    let jobs: Vec<(usize, RawTerm)> = groups
        .into_iter()
        .enumerate()
        .flat_map(|(g, ts)| ts.into_iter().map(move |t| (g, t)))
        .collect();
    let n_groups = jobs.last().map_or(0, |(g, _)| g + 1);
    let parts = exec.map(&jobs, |(_, t)| cache.eval(t));
    let mut out = vec![LatticeFn::new(dim); n_groups];
    for ((g, _), part) in jobs.iter().zip(parts) {
        out[*g].accumulate(&part?);
    }
    Ok(out)
}

/// Lattice coefficients of `dH1/dzbar` at `zhat` (without the factor `eps`).
pub fn vector_field(h: &PolynomialHamiltonian, zhat: &FourierVector) -> Result<FourierVector> {
    vector_field_with(h, zhat, Exec::default())
}

pub fn vector_field_with(h: &PolynomialHamiltonian, zhat: &FourierVector, exec: Exec) -> Result<FourierVector> {
    check_dim(h, zhat)?;
    let n = h.dim();
    let groups: Vec<Vec<RawTerm>> = (0..n).map(|j| h.field_terms(j)).collect();
    let mut comps = eval_groups(zhat, groups, exec)?;
    comps.resize(n, LatticeFn::new(n));
    Ok(FourierVector::from_components(&comps))
}

/// `(X_1(e_1), ..., X_n(e_n))`.
pub fn resonant_field(x: &FourierVector) -> Vec<f64> {
    (0..x.dim())
        .map(|j| x.get(&crate::lattice::ModeIndex::new(j, MultiIndex::basis(x.dim(), j))))
        .collect()
}

/// Second-derivative kernels of `H1` at a lattice state.
///
/// `toeplitz(j, i)` holds the coefficients of `d^2 H1 / dzbar_j dz_i` and
/// `hankel(j, i)` those of `d^2 H1 / dzbar_j dzbar_i`, so that
/// `dX_j(k) / dzhat_i(k') = toeplitz(j, i)(k - k') + hankel(j, i)(k + k')`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianKernels {
    dim: usize,
    toeplitz: Vec<LatticeFn>,
    hankel: Vec<LatticeFn>,
}

impl HessianKernels {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn toeplitz(&self, j: usize, i: usize) -> &LatticeFn {
        &self.toeplitz[j * self.dim + i]
    }

    pub fn hankel(&self, j: usize, i: usize) -> &LatticeFn {
        &self.hankel[j * self.dim + i]
    }

    pub fn zero(dim: usize) -> Self {
        HessianKernels {
            dim,
            toeplitz: vec![LatticeFn::new(dim); dim * dim],
            hankel: vec![LatticeFn::new(dim); dim * dim],
        }
    }

    /// `dX_j(k) / dzhat_i(k')`.
    pub fn entry(&self, j: usize, k: &MultiIndex, i: usize, kp: &MultiIndex) -> f64 {
        self.toeplitz(j, i).get(&(k - kp)) + self.hankel(j, i).get(&(k + kp))
    }

    /// Largest sup-norm over both kernel supports.
    pub fn max_sup(&self) -> u32 {
        self.toeplitz
            .iter()
            .chain(&self.hankel)
            .map(LatticeFn::max_sup)
            .max()
            .unwrap_or(0)
    }
}

pub fn hessian_kernels(h: &PolynomialHamiltonian, zhat: &FourierVector) -> Result<HessianKernels> {
    hessian_kernels_with(h, zhat, Exec::default())
}

pub fn hessian_kernels_with(h: &PolynomialHamiltonian, zhat: &FourierVector, exec: Exec) -> Result<HessianKernels> {
    check_dim(h, zhat)?;
    let n = h.dim();
    let mut groups = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            groups.push(h.toeplitz_terms(j, i));
        }
    }
    for j in 0..n {
        for i in 0..n {
            groups.push(h.hankel_terms(j, i));
        }
    }
    let mut all = eval_groups(zhat, groups, exec)?;
    all.resize(2 * n * n, LatticeFn::new(n));
    let hankel = all.split_off(n * n);
    Ok(HessianKernels {
        dim: n,
        toeplitz: all,
        hankel,
    })
}

/// `dX_m(e_m) / dzhat_p` over the non-resonant modes of `lattice_box`,
/// one row per component `m`, columns in [`ModeOrder`].
pub fn q_gradient(h: &PolynomialHamiltonian, zhat: &FourierVector, lattice_box: LatticeBox) -> Result<Vec<Vec<f64>>> {
    let kernels = hessian_kernels(h, zhat)?;
    let order = ModeOrder::new(lattice_box)?;
    Ok(q_gradient_from_kernels(&kernels, &order))
}

pub fn q_gradient_from_kernels(kernels: &HessianKernels, order: &ModeOrder) -> Vec<Vec<f64>> {
    let n = kernels.dim();
    (0..n)
        .map(|m| {
            let em = MultiIndex::basis(n, m);
            order
                .modes()
                .iter()
                .map(|col| kernels.entry(m, &em, col.j, &col.k))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModeIndex;

    fn duffing() -> PolynomialHamiltonian {
        PolynomialHamiltonian::new(vec![1.0], expand_real_power(1.0 / 16.0, &[4]), 1.0).unwrap()
    }

    fn a() -> f64 {
        (-1.0f64).exp()
    }

    #[test]
    fn duffing_expansion_has_three_stored_monomials() {
        let m = expand_real_power(1.0 / 16.0, &[4]);
        assert_eq!(m.len(), 3);
        let find = |al: u32| m.iter().find(|t| t.alpha == vec![al]).unwrap().coeff;
        assert_eq!(find(4), 1.0 / 16.0);
        assert_eq!(find(3), 4.0 / 16.0);
        assert_eq!(find(2), 6.0 / 16.0);
    }

    #[test]
    fn convolution_identities() {
        let v = LatticeFn::from_pairs(1, [(vec![2], 0.5), (vec![-1], 1.5)]);
        let delta = LatticeFn::delta(MultiIndex::zero(1), 1.0);
        assert_eq!(convolve(&delta, &v).unwrap(), v);
        let u = LatticeFn::from_pairs(1, [(vec![1], 0.3)]);
        let sq = convolve(&u, &u).unwrap();
        assert_eq!(sq.len(), 1);
        assert!((sq.get(&MultiIndex::new(vec![2])) - 0.09).abs() < 1e-16);
    }

    #[test]
    fn convolution_cube_of_cosine_pair() {
        // (x + 1/x)^3 = x^3 + 3x + 3/x + 1/x^3
        let c = 0.7;
        let u = LatticeFn::from_pairs(1, [(vec![1], c), (vec![-1], c)]);
        let cube = convolve(&convolve(&u, &u).unwrap(), &u).unwrap();
        let c3 = c * c * c;
        for (k, w) in [(3, 1.0), (1, 3.0), (-1, 3.0), (-3, 1.0)] {
            assert!((cube.get(&MultiIndex::new(vec![k])) - w * c3).abs() < 1e-15);
        }
        assert_eq!(cube.len(), 4);
    }

    #[test]
    fn convolution_budget() {
        let u = LatticeFn::from_pairs(1, (0..50).map(|k| (vec![k], 1.0)));
        let err = convolve_with_budget(&u, &u, 10).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn duffing_field_at_linear_state() {
        let z = FourierVector::linear_state(1, a());
        let x = vector_field(&duffing(), &z).unwrap();
        let a3 = a().powi(3);
        for (k, w) in [(3, 0.25), (1, 0.75), (-1, 0.75), (-3, 0.25)] {
            assert!((x.coeff(0, &[k]) - w * a3).abs() < 1e-16, "k={k}");
        }
        assert_eq!(x.len(), 4);
        let q = resonant_field(&x);
        assert!((q[0] - 3.0 / (4.0 * 1f64.exp().powi(3))).abs() < 1e-16);
    }

    #[test]
    fn empty_perturbation_gives_zero_field() {
        let h = PolynomialHamiltonian::new(vec![1.0, 2.0], vec![], 0.3).unwrap();
        let z = FourierVector::linear_state(2, a());
        let x = vector_field(&h, &z).unwrap();
        assert_eq!(x.nonzero_len(), 0);
        assert_eq!(resonant_field(&x), vec![0.0, 0.0]);
    }

    #[test]
    fn duffing_kernels() {
        let z = FourierVector::linear_state(1, a());
        let k = hessian_kernels(&duffing(), &z).unwrap();
        let a2 = a() * a();
        for ker in [k.toeplitz(0, 0), k.hankel(0, 0)] {
            assert!((ker.get(&MultiIndex::new(vec![2])) - 0.75 * a2).abs() < 1e-16);
            assert!((ker.get(&MultiIndex::new(vec![0])) - 1.5 * a2).abs() < 1e-16);
            assert!((ker.get(&MultiIndex::new(vec![-2])) - 0.75 * a2).abs() < 1e-16);
        }
    }

    #[test]
    fn cubic_kernels_vanish_at_zero_state() {
        let h = PolynomialHamiltonian::new(vec![1.0, 1.3], expand_real_power(0.4, &[2, 1]), 0.1).unwrap();
        let k = hessian_kernels(&h, &FourierVector::new(2)).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                assert!(k.toeplitz(j, i).iter().all(|(_, v)| v == 0.0));
                assert!(k.hankel(j, i).iter().all(|(_, v)| v == 0.0));
            }
        }
    }

    #[test]
    fn duffing_q_gradient_entry() {
        let z = FourierVector::linear_state(1, a());
        let b = LatticeBox::new(3, 1).unwrap();
        let g = q_gradient(&duffing(), &z, b).unwrap();
        let order = ModeOrder::new(b).unwrap();
        let col = order.row(&ModeIndex::new(0, MultiIndex::new(vec![-1]))).unwrap();
        let a2 = a() * a();
        assert!((g[0][col] - (0.75 * a2 + 1.5 * a2)).abs() < 1e-15);
    }

    #[test]
    fn rejects_low_degree_and_bad_shapes() {
        let low = Monomial::new(1.0, vec![1], vec![1]);
        assert!(matches!(
            PolynomialHamiltonian::new(vec![1.0], vec![low], 1.0),
            Err(Error::InvalidConfig { .. })
        ));
        let bad = Monomial::new(1.0, vec![3, 0], vec![0]);
        assert!(PolynomialHamiltonian::new(vec![1.0, 1.0], vec![bad], 1.0).is_err());
        assert!(PolynomialHamiltonian::new(vec![1.0], vec![], -0.1).is_err());
    }

    #[test]
    fn real_gradient_matches_duffing_formula() {
        let h = duffing();
        let (x, y) = (vec![0.3], vec![-0.7]);
        let (hx, hy) = h.real_gradient(&x, &y);
        assert!((hx[0] - x[0]).abs() < 1e-15);
        assert!((hy[0] - (y[0] + y[0].powi(3))).abs() < 1e-15);
        let e = 0.5 * (0.09 + 0.49) + 0.25 * 0.7f64.powi(4);
        assert!((h.energy(&x, &y) - e).abs() < 1e-15);
    }

    #[test]
    fn complex_real_roundtrip() {
        let z = to_complex(&[0.2, -1.0], &[0.5, 0.25]);
        let (x, y) = to_real(&z);
        assert!((x[0] - 0.2).abs() < 1e-15 && (y[1] - 0.25).abs() < 1e-15);
    }
}
