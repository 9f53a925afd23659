//! Multi-index algebra on the integer lattice.
//!
//! A [`FourierVector`] stores the coefficients of a vector-valued
//! quasi-periodic function, keyed by `(k, j)` where `k` is a lattice point and
//! `j` a component. Keys are kept in canonical order: lattice points in
//! lexicographic order (row-major scan of a box, coordinates from `-N` to `N`),
//! then components ascending. Components are zero-based in code and printed
//! one-based in artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// Default guard on the number of lattice modes any single object may hold.
pub const DEFAULT_MODE_BUDGET: u128 = 2_000_000;

/// A point `k` of the integer lattice `Z^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i32>);

impl MultiIndex {
    pub fn new(entries: Vec<i32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Standard basis vector `e_j` (zero-based `j`).
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    /// The lattice length `|k| = sum |k_i|`.
    pub fn l1(&self) -> u32 {
        self.0.iter().map(|x| x.unsigned_abs()).sum()
    }

    pub fn sup(&self) -> u32 {
        self.0.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(&k, &w)| k as f64 * w).sum()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i32>> for MultiIndex {
    fn from(v: Vec<i32>) -> Self {
        MultiIndex(v)
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }
}

/// The box `{k : max_i |k_i| <= N}` in `Z^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    pub half_width: usize,
    pub dim: usize,
}

impl LatticeBox {
    pub fn new(half_width: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("lattice dimension must be at least 1".into()));
        }
        Ok(LatticeBox { half_width, dim })
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// `(2N+1)^n`, saturating.
    pub fn num_points(&self) -> u128 {
        (self.side() as u128).saturating_pow(self.dim as u32)
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        k.sup() as usize <= self.half_width
    }

    /// Position of `k` in the canonical scan, if inside the box.
    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let side = self.side() as i64;
        let n = self.half_width as i64;
        Some(
            k.entries()
                .iter()
                .fold(0i64, |acc, &x| acc * side + (x as i64 + n)) as usize,
        )
    }

    pub fn point(&self, mut pos: usize) -> MultiIndex {
        let side = self.side();
        let mut v = vec![0i32; self.dim];
        for slot in v.iter_mut().rev() {
            *slot = (pos % side) as i32 - self.half_width as i32;
            pos /= side;
        }
        MultiIndex(v)
    }
}

/// All points of `Λ_N` in canonical order, guarded by `budget`.
pub fn box_points_with_budget(half_width: usize, dim: usize, budget: u128) -> Result<Vec<MultiIndex>> {
    let b = LatticeBox::new(half_width, dim)?;
    let count = b.num_points();
    if count > budget {
        return Err(Error::Capacity {
            what: "lattice box",
            requested: count,
            budget,
        });
    }
    Ok((0..count as usize).map(|p| b.point(p)).collect())
}

pub fn box_points(half_width: usize, dim: usize) -> Result<Vec<MultiIndex>> {
    box_points_with_budget(half_width, dim, DEFAULT_MODE_BUDGET)
}

/// A coefficient slot `(j, k)`. Ordered by `k` first, then `j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k: MultiIndex,
    pub j: usize,
}

impl ModeIndex {
    pub fn new(j: usize, k: MultiIndex) -> Self {
        ModeIndex { k, j }
    }

    pub fn is_resonant(&self) -> bool {
        self.k.l1() == 1 && self.k.entries().get(self.j) == Some(&1)
    }
}

impl fmt::Debug for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j={}, k={:?})", self.j, self.k)
    }
}

/// The resonant pairs `(j, e_j)`.
pub fn resonant_set(dim: usize) -> Vec<ModeIndex> {
    let mut out: Vec<ModeIndex> = (0..dim)
        .map(|j| ModeIndex::new(j, MultiIndex::basis(dim, j)))
        .collect();
    out.sort();
    out
}

/// Finitely supported scalar function on `Z^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFn {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl LatticeFn {
    pub fn new(dim: usize) -> Self {
        LatticeFn {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn delta(k: MultiIndex, value: f64) -> Self {
        let mut f = LatticeFn::new(k.dim());
        f.coeffs.insert(k, value);
        f
    }

    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (Vec<i32>, f64)>) -> Self {
        let mut f = LatticeFn::new(dim);
        for (k, v) in pairs {
            *f.coeffs.entry(MultiIndex(k)).or_insert(0.0) += v;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: &MultiIndex) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn insert(&mut self, k: MultiIndex, v: f64) {
        self.coeffs.insert(k, v);
    }

    pub fn add_at(&mut self, k: MultiIndex, v: f64) {
        *self.coeffs.entry(k).or_insert(0.0) += v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    /// Stored points, including entries whose contributions cancelled.
    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> + '_ {
        self.coeffs.keys()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&mut self, c: f64) {
        self.coeffs.values_mut().for_each(|v| *v *= c);
    }

    /// Adds `other` into `self`, summing in `other`'s canonical order.
    pub fn accumulate(&mut self, other: &LatticeFn) {
        for (k, v) in other.iter() {
            *self.coeffs.entry(k.clone()).or_insert(0.0) += v;
        }
    }

    /// `k -> f(-k)`.
    pub fn flip(&self) -> LatticeFn {
        LatticeFn {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(k, &v)| (-k, v)).collect(),
        }
    }

    pub fn max_sup(&self) -> u32 {
        self.coeffs.keys().map(|k| k.sup()).max().unwrap_or(0)
    }
}

/// Finitely supported map `(j, k) -> R`; absent entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector {
    dim: usize,
    coeffs: BTreeMap<ModeIndex, f64>,
}

impl FourierVector {
    pub fn new(dim: usize) -> Self {
        FourierVector {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, Vec<i32>, f64)>) -> Self {
        let mut v = FourierVector::new(dim);
        for (j, k, x) in entries {
            v.insert(ModeIndex::new(j, MultiIndex(k)), x);
        }
        v
    }

    /// The unperturbed state: amplitude `a` on every resonant slot.
    pub fn linear_state(dim: usize, amplitude: f64) -> Self {
        let mut v = FourierVector::new(dim);
        for m in resonant_set(dim) {
            v.insert(m, amplitude);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: &ModeIndex) -> f64 {
        self.coeffs.get(m).copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, j: usize, k: &[i32]) -> f64 {
        self.get(&ModeIndex::new(j, MultiIndex(k.to_vec())))
    }

    pub fn insert(&mut self, m: ModeIndex, v: f64) {
        debug_assert!(v.is_finite(), "non-finite coefficient at {m:?}");
        debug_assert_eq!(m.k.dim(), self.dim);
        self.coeffs.insert(m, v);
    }

    pub fn remove(&mut self, m: &ModeIndex) -> Option<f64> {
        self.coeffs.remove(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeIndex, f64)> + '_ {
        self.coeffs.iter().map(|(m, &v)| (m, v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn nonzero_len(&self) -> usize {
        self.coeffs.values().filter(|v| **v != 0.0).count()
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Restriction to `Λ_N`.
    pub fn project(&self, half_width: usize) -> FourierVector {
        FourierVector {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(m, _)| m.k.sup() as usize <= half_width)
                .map(|(m, &v)| (m.clone(), v))
                .collect(),
        }
    }

    /// `(j, k) -> v(j, -k)`.
    pub fn flip(&self) -> FourierVector {
        FourierVector {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, &v)| (ModeIndex::new(m.j, -&m.k), v))
                .collect(),
        }
    }

    /// Splits off the resonant slots, returning `(resonant, non_resonant)`.
    pub fn split_resonant(&self) -> (FourierVector, FourierVector) {
        let mut q = FourierVector::new(self.dim);
        let mut p = FourierVector::new(self.dim);
        for (m, v) in self.iter() {
            if m.is_resonant() {
                q.insert(m.clone(), v);
            } else {
                p.insert(m.clone(), v);
            }
        }
        (q, p)
    }

    /// Scalar lattice function of component `j`.
    pub fn component(&self, j: usize) -> LatticeFn {
        let mut f = LatticeFn::new(self.dim);
        for (m, v) in self.iter().filter(|(m, _)| m.j == j) {
            f.insert(m.k.clone(), v);
        }
        f
    }

    pub fn from_components(components: &[LatticeFn]) -> FourierVector {
        let dim = components.first().map_or(0, |c| c.dim());
        let mut v = FourierVector::new(dim);
        for (j, c) in components.iter().enumerate() {
            for (k, x) in c.iter() {
                v.insert(ModeIndex::new(j, k.clone()), x);
            }
        }
        v
    }

    /// Smallest `N` with the stored support inside `Λ_N`.
    pub fn max_sup(&self) -> usize {
        self.coeffs.keys().map(|m| m.k.sup() as usize).max().unwrap_or(0)
    }

    pub fn scaled(&self, c: f64) -> FourierVector {
        FourierVector {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(m, &v)| (m.clone(), c * v)).collect(),
        }
    }

    /// `self + c * other` over the union of supports.
    pub fn axpy(&self, c: f64, other: &FourierVector) -> FourierVector {
        let mut out = self.clone();
        for (m, v) in other.iter() {
            *out.coeffs.entry(m.clone()).or_insert(0.0) += c * v;
        }
        out
    }
}

/// Row numbering of the non-resonant modes of a box: canonical box order
/// outside, component inside, resonant pairs skipped.
#[derive(Debug, Clone)]
pub struct ModeOrder {
    lattice_box: LatticeBox,
    modes: Vec<ModeIndex>,
    /// Box positions of `e_j`, sorted, used to discount skipped rows.
    resonant_rows: Vec<usize>,
}

impl ModeOrder {
    pub fn new(lattice_box: LatticeBox) -> Result<Self> {
        Self::with_budget(lattice_box, DEFAULT_MODE_BUDGET)
    }

    pub fn with_budget(lattice_box: LatticeBox, budget: u128) -> Result<Self> {
        let n = lattice_box.dim;
        let total = lattice_box.num_points().saturating_mul(n as u128);
        if total > budget {
            return Err(Error::Capacity {
                what: "mode order",
                requested: total,
                budget,
            });
        }
        let mut resonant_rows: Vec<usize> = Vec::new();
        if lattice_box.half_width >= 1 {
            for j in 0..n {
                let pos = lattice_box
                    .position(&MultiIndex::basis(n, j))
                    .expect("basis vector inside box");
                resonant_rows.push(pos * n + j);
            }
        }
        resonant_rows.sort_unstable();
        let mut modes = Vec::with_capacity(total as usize);
        for pos in 0..lattice_box.num_points() as usize {
            let k = lattice_box.point(pos);
            for j in 0..n {
                let m = ModeIndex::new(j, k.clone());
                if !m.is_resonant() {
                    modes.push(m);
                }
            }
        }
        Ok(ModeOrder {
            lattice_box,
            modes,
            resonant_rows,
        })
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.lattice_box
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, row: usize) -> &ModeIndex {
        &self.modes[row]
    }

    /// Row of a non-resonant mode inside the box.
    pub fn row(&self, m: &ModeIndex) -> Option<usize> {
        if m.is_resonant() || m.j >= self.lattice_box.dim {
            return None;
        }
        let pos = self.lattice_box.position(&m.k)?;
        let raw = pos * self.lattice_box.dim + m.j;
        let skipped = self.resonant_rows.iter().filter(|&&r| r < raw).count();
        Some(raw - skipped)
    }

    /// Packs a Fourier vector into row order (entries outside the box or
    /// resonant are dropped).
    pub fn pack(&self, v: &FourierVector) -> Vec<f64> {
        self.modes.iter().map(|m| v.get(m)).collect()
    }

    pub fn unpack(&self, values: &[f64]) -> FourierVector {
        let mut v = FourierVector::new(self.lattice_box.dim);
        for (m, &x) in self.modes.iter().zip(values) {
            v.insert(m.clone(), x);
        }
        v
    }
}
