//! The restricted tangent operator `D + eps S + eps B` on the non-resonant
//! modes of a box.
//!
//! `D` carries the small divisors `-<k, omega'> + omega_j`, `S` the Hessian of
//! the perturbation in Toeplitz-plus-Hankel form, and `B` the coupling through
//! the frequency update. `B` has one outer product per frequency component.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{hessian_kernels_with, q_gradient_from_kernels, HessianKernels, PolynomialHamiltonian};
use crate::lattice::{FourierVector, LatticeBox, ModeOrder};
use crate::linalg::{DenseMatrix, Lu, SingularPivot};

pub const DEFAULT_RCOND_FLOOR: f64 = 1e-14;
pub const DEFAULT_MAX_ROWS: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BScale {
    /// `1 / a`, from differentiating the frequency update.
    #[default]
    ChainRule,
    /// The constant `1 / e`.
    InverseE,
}

impl BScale {
    pub fn factor(self, amplitude: f64) -> f64 {
        match self {
            BScale::ChainRule => 1.0 / amplitude,
            BScale::InverseE => (-1.0f64).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConfig {
    pub use_b: bool,
    pub b_scale: BScale,
    pub amplitude: f64,
    pub rcond_floor: f64,
    pub max_rows: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            use_b: true,
            b_scale: BScale::ChainRule,
            amplitude: (-1.0f64).exp(),
            rcond_floor: DEFAULT_RCOND_FLOOR,
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

/// `B = sum_m u_m w_m^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BFactors {
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl BFactors {
    pub fn to_dense(&self, rows: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, rows);
        for (u, w) in self.u.iter().zip(&self.w) {
            for (i, &ui) in u.iter().enumerate() {
                if ui == 0.0 {
                    continue;
                }
                for (j, &wj) in w.iter().enumerate() {
                    m.add_at(i, j, ui * wj);
                }
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().flatten().chain(self.w.iter().flatten()).all(|&x| x == 0.0)
    }
}

/// Diagonal entries `-<k, omega_drift> + omega0_j` in row order.
pub fn assemble_d(order: &ModeOrder, omega0: &[f64], omega_drift: &[f64]) -> Result<Vec<f64>> {
    let n = order.lattice_box().dim;
    for (got, context) in [(omega0.len(), "omega0"), (omega_drift.len(), "omega_drift")] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got, context });
        }
    }
    Ok(order
        .modes()
        .iter()
        .map(|m| -m.k.dot(omega_drift) + omega0[m.j])
        .collect())
}

fn check_rows(rows: usize, max_rows: usize) -> Result<()> {
    if rows > max_rows {
        return Err(Error::Capacity {
            what: "dense tangent operator rows",
            requested: rows as u128,
            budget: max_rows as u128,
        });
    }
    Ok(())
}

/// `S(row(j,k), col(i,k')) = toeplitz(j,i)(k-k') + hankel(j,i)(k+k')`.
pub fn assemble_s(kernels: &HessianKernels, order: &ModeOrder, exec: Exec) -> Result<DenseMatrix> {
    assemble_s_with_limit(kernels, order, exec, DEFAULT_MAX_ROWS)
}

pub fn assemble_s_with_limit(kernels: &HessianKernels, order: &ModeOrder, exec: Exec, max_rows: usize) -> Result<DenseMatrix> {
    let rows = order.len();
    check_rows(rows, max_rows)?;
    let n = order.lattice_box().dim;
    // Differences and sums of box points live in the doubled box, whose
    // canonical position is affine in the coordinates.
    let wide = LatticeBox::new(2 * order.lattice_box().half_width, n)?;
    let side = wide.side() as i64;
    let points = wide.num_points() as usize;
    let mut stride = vec![1i64; n];
    for d in (0..n.saturating_sub(1)).rev() {
        stride[d] = stride[d + 1] * side;
    }
    let centre: i64 = stride.iter().map(|s| s * wide.half_width as i64).sum();
    let offset: Vec<i64> = order
        .modes()
        .iter()
        .map(|m| m.k.entries().iter().zip(&stride).map(|(&k, s)| k as i64 * s).sum())
        .collect();
    let grid = |f: &crate::lattice::LatticeFn| {
        let mut g = vec![0.0; points];
        for (k, v) in f.iter() {
            if let Some(p) = wide.position(k) {
                g[p] = v;
            }
        }
        g
    };
    let toeplitz: Vec<Vec<f64>> = (0..n * n).map(|ji| grid(kernels.toeplitz(ji / n, ji % n))).collect();
    let hankel: Vec<Vec<f64>> = (0..n * n).map(|ji| grid(kernels.hankel(ji / n, ji % n))).collect();
    let modes = order.modes();
    let mut s = DenseMatrix::zeros(rows, rows);
    exec.for_each_chunk_mut(s.data_mut(), rows.max(1), |r, out| {
        let j = modes[r].j;
        let or = offset[r];
        for (c, slot) in out.iter_mut().enumerate() {
            let ji = j * n + modes[c].j;
            let diff = (centre + or - offset[c]) as usize;
            let sum = (centre + or + offset[c]) as usize;
            *slot = toeplitz[ji][diff] + hankel[ji][sum];
        }
    });
    Ok(s)
}

/// Factors of `B(row(j,k), col) = -c zp(row(j,k)) sum_m k_m qgrad(m, col)`.
pub fn assemble_b(qgrad: &[Vec<f64>], zp: &[f64], order: &ModeOrder, scale: f64) -> Result<BFactors> {
    let rows = order.len();
    if zp.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: zp.len(),
            context: "non-resonant coefficients vs mode order",
        });
    }
    if let Some(bad) = qgrad.iter().find(|g| g.len() != rows) {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: bad.len(),
            context: "q-gradient row length",
        });
    }
    let u = (0..qgrad.len())
        .map(|m| {
            order
                .modes()
                .iter()
                .zip(zp)
                .map(|(mode, &z)| -scale * z * mode.k.entries()[m] as f64)
                .collect()
        })
        .collect();
    Ok(BFactors {
        u,
        w: qgrad.to_vec(),
    })
}

/// Natural log of the size threshold, `-(log N)^15`.
pub fn log_epsilon_threshold(half_width: usize) -> Result<f64> {
    if half_width < 2 {
        return Err(Error::Domain(format!("threshold needs N >= 2, got {half_width}")));
    }
    Ok(-(half_width as f64).ln().powi(15))
}

#[derive(Debug)]
pub struct TangentOperator {
    order: ModeOrder,
    epsilon: f64,
    omega_drift: Vec<f64>,
    d: Vec<f64>,
    s: DenseMatrix,
    b: Option<BFactors>,
    matrix: DenseMatrix,
    rcond_floor: f64,
    exec: Exec,
    lu: OnceLock<std::result::Result<Lu, SingularPivot>>,
}

impl TangentOperator {
    /// Assembles the operator at the full state `zhat` (resonant slots
    /// included) with drifted frequency `omega_drift`.
    pub fn assemble(
        h: &PolynomialHamiltonian,
        zhat: &FourierVector,
        omega_drift: &[f64],
        lattice_box: LatticeBox,
        config: &OperatorConfig,
        exec: Exec,
    ) -> Result<TangentOperator> {
        if lattice_box.dim != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: lattice_box.dim,
                context: "lattice box vs Hamiltonian",
            });
        }
        let order = ModeOrder::new(lattice_box)?;
        check_rows(order.len(), config.max_rows)?;
        let d = assemble_d(&order, h.omega0(), omega_drift)?;
        let kernels = hessian_kernels_with(h, zhat, exec)?;
        let s = assemble_s_with_limit(&kernels, &order, exec, config.max_rows)?;
        let b = if config.use_b {
            let qgrad = q_gradient_from_kernels(&kernels, &order);
            let zp = order.pack(zhat);
            Some(assemble_b(&qgrad, &zp, &order, config.b_scale.factor(config.amplitude))?)
        } else {
            None
        };
        Ok(Self::from_parts(order, h.epsilon(), omega_drift.to_vec(), d, s, b, config.rcond_floor, exec))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        order: ModeOrder,
        epsilon: f64,
        omega_drift: Vec<f64>,
        d: Vec<f64>,
        s: DenseMatrix,
        b: Option<BFactors>,
        rcond_floor: f64,
        exec: Exec,
    ) -> TangentOperator {
        let rows = order.len();
        let mut matrix = s.clone();
        matrix.data_mut().iter_mut().for_each(|x| *x *= epsilon);
        if let Some(b) = &b {
            let bm = b.to_dense(rows);
            for (x, y) in matrix.data_mut().iter_mut().zip(bm.data()) {
                *x += epsilon * y;
            }
        }
        for (i, &di) in d.iter().enumerate() {
            matrix.add_at(i, i, di);
        }
        TangentOperator {
            order,
            epsilon,
            omega_drift,
            d,
            s,
            b,
            matrix,
            rcond_floor,
            exec,
            lu: OnceLock::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &ModeOrder {
        &self.order
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.order.lattice_box()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega_drift(&self) -> &[f64] {
        &self.omega_drift
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn s(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn b(&self) -> Option<&BFactors> {
        self.b.as_ref()
    }

    /// `D + eps S + eps B`.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    fn lu(&self) -> Result<&Lu> {
        match self.lu.get_or_init(|| Lu::factor(&self.matrix, self.exec)) {
            Ok(lu) => Ok(lu),
            Err(p) => Err(self.near_resonance(format!("zero pivot in column {}", p.column))),
        }
    }

    /// Error naming the mode with the smallest diagonal divisor.
    fn near_resonance(&self, reason: String) -> Error {
        let (row, divisor) = self
            .d
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, &x)| if x.abs() < b.1.abs() { (i, x) } else { b });
        let (j, k) = if self.d.is_empty() {
            (0, vec![])
        } else {
            let m = self.order.mode(row);
            (m.j + 1, m.k.entries().to_vec())
        };
        Error::NearResonance { reason, j, k, divisor }
    }

    /// Estimated reciprocal condition number in the 1-norm.
    pub fn rcond(&self) -> Result<f64> {
        Ok(self.lu()?.rcond_estimate())
    }

    pub fn solve_linear(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: rhs.len(),
                context: "right-hand side",
            });
        }
        let lu = self.lu()?;
        let rcond = lu.rcond_estimate();
        if rcond < self.rcond_floor {
            return Err(self.near_resonance(format!(
                "reciprocal condition estimate {rcond:e} below floor {:e}",
                self.rcond_floor
            )));
        }
        Ok(lu.solve(rhs))
    }

    /// `||T^{-1}||_2 = 1 / sigma_min`.
    pub fn inverse_norm(&self) -> Result<f64> {
        let sigma_min = self.matrix.singular_values().last().copied().unwrap_or(f64::INFINITY);
        if sigma_min == 0.0 {
            return Err(self.near_resonance("smallest singular value is zero".into()));
        }
        Ok(1.0 / sigma_min)
    }

    /// Materialized `T^{-1}`.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        Ok(self.lu()?.inverse(self.exec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{expand_real_power, hessian_kernels};
    use crate::lattice::{ModeIndex, MultiIndex};

    fn mode(j: usize, k: &[i32]) -> ModeIndex {
        ModeIndex::new(j, MultiIndex::new(k.to_vec()))
    }

    fn duffing() -> PolynomialHamiltonian {
        PolynomialHamiltonian::new(vec![1.0], expand_real_power(1.0 / 16.0, &[4]), 1.0).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let order = ModeOrder::new(LatticeBox::new(3, 1).unwrap()).unwrap();
        let d = assemble_d(&order, &[1.0], &[1.0]).unwrap();
        assert_eq!(d[order.row(&mode(0, &[3])).unwrap()], -2.0);
        assert_eq!(d[order.row(&mode(0, &[-1])).unwrap()], 2.0);

        let order2 = ModeOrder::new(LatticeBox::new(1, 2).unwrap()).unwrap();
        let d2 = assemble_d(&order2, &[1.0, 1.0], &[1.1, 0.9]).unwrap();
        assert!((d2[order2.row(&mode(1, &[1, 1])).unwrap()] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn duffing_s_entry() {
        let a = (-1.0f64).exp();
        let z = FourierVector::linear_state(1, a);
        let order = ModeOrder::new(LatticeBox::new(3, 1).unwrap()).unwrap();
        let k = hessian_kernels(&duffing(), &z).unwrap();
        let s = assemble_s(&k, &order, Exec::Sequential).unwrap();
        let r = order.row(&mode(0, &[3])).unwrap();
        let c = order.row(&mode(0, &[-1])).unwrap();
        // toeplitz at 4 is zero, hankel at 2 is (3/4) a^2
        assert!((s.get(r, c) - 0.75 * a * a).abs() < 1e-16);
        let zero = assemble_s(&HessianKernels::zero(1), &order, Exec::Sequential).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn parallel_assembly_matches_sequential() {
        let h = PolynomialHamiltonian::new(vec![1.0, 1.6], expand_real_power(0.3, &[2, 1]), 0.2).unwrap();
        let z = FourierVector::from_entries(2, [(0, vec![1, 0], 0.4), (1, vec![0, 1], 0.4), (1, vec![1, -1], 0.05)]);
        let order = ModeOrder::new(LatticeBox::new(3, 2).unwrap()).unwrap();
        let k = hessian_kernels(&h, &z).unwrap();
        let s1 = assemble_s(&k, &order, Exec::Sequential).unwrap();
        let s2 = assemble_s(&k, &order, Exec::Parallel).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn b_vanishes_for_zero_inputs() {
        let order = ModeOrder::new(LatticeBox::new(2, 1).unwrap()).unwrap();
        let rows = order.len();
        let b = assemble_b(&[vec![1.0; rows]], &vec![0.0; rows], &order, 2.0).unwrap();
        assert!(b.is_zero() || b.to_dense(rows).max_abs() == 0.0);
        let b = assemble_b(&[vec![0.0; rows]], &vec![1.0; rows], &order, 2.0).unwrap();
        assert_eq!(b.to_dense(rows).max_abs(), 0.0);
    }

    #[test]
    fn threshold_values() {
        assert!((log_epsilon_threshold(2).unwrap() + 2f64.ln().powi(15)).abs() < 1e-18);
        // (log 3)^15 = exp(15 log log 3) = 4.0988949...
        assert!((log_epsilon_threshold(3).unwrap() + 4.098894955159256).abs() < 1e-12);
        assert!(log_epsilon_threshold(1).is_err());
        let mut prev = log_epsilon_threshold(3).unwrap();
        for n in 4..50 {
            let cur = log_epsilon_threshold(n).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn unperturbed_operator_is_diagonal() {
        let h = duffing().with_epsilon(0.0).unwrap();
        let z = FourierVector::linear_state(1, (-1.0f64).exp());
        let t = TangentOperator::assemble(&h, &z, &[1.0], LatticeBox::new(3, 1).unwrap(), &OperatorConfig::default(), Exec::Sequential).unwrap();
        let rhs: Vec<f64> = (0..t.rows()).map(|i| i as f64 + 1.0).collect();
        let x = t.solve_linear(&rhs).unwrap();
        for i in 0..t.rows() {
            assert_eq!(x[i], rhs[i] / t.d()[i]);
        }
        let expected = t.d().iter().map(|d| 1.0 / d.abs()).fold(0.0, f64::max);
        assert!((t.inverse_norm().unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn singular_operator_reports_mode() {
        let order = ModeOrder::new(LatticeBox::new(1, 1).unwrap()).unwrap();
        let t = TangentOperator::from_parts(order, 0.0, vec![1.0], vec![0.0, 1.0], DenseMatrix::zeros(2, 2), None, DEFAULT_RCOND_FLOOR, Exec::Sequential);
        match t.solve_linear(&[1.0, 1.0]).unwrap_err() {
            Error::NearResonance { j, k, divisor, .. } => {
                assert_eq!((j, k, divisor), (1, vec![-1], 0.0));
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
