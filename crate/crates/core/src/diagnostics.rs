//! Runtime checks of the small-divisor and localization conditions.
//!
//! None of these gate the solver unless strict mode is on; they are reported
//! per iteration next to the residual history.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{FourierVector, LatticeBox, MultiIndex};
use crate::operator::{log_epsilon_threshold, TangentOperator};

/// Samples drawn per Monte Carlo shard; each shard owns one generator stream.
pub const MC_SHARD_SIZE: usize = 1024;

/// Rows above which the dense localization check is skipped.
pub const DEFAULT_LOCALIZATION_MAX_ROWS: usize = 2500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineResult {
    pub ok: bool,
    /// Minimizer of `|<k, omega>| |k|^tau`, first in canonical order on ties.
    pub worst_k: Vec<i32>,
    pub margin: f64,
}

/// Scans `Λ_{2(M+1)} \ {0}` for violations of `|<k, omega>| >= |k|^{-tau}`
/// with `|k|` the l1 length.
pub fn diophantine_check(omega: &[f64], m_box: usize, tau: f64) -> DiophantineResult {
    let n = omega.len();
    let scan = LatticeBox {
        half_width: 2 * (m_box + 1),
        dim: n,
    };
    let mut ok = true;
    let mut worst = (f64::INFINITY, MultiIndex::zero(n));
    for pos in 0..scan.num_points() as usize {
        let k = scan.point(pos);
        if k.is_zero() {
            continue;
        }
        let len = k.l1() as f64;
        let small = k.dot(omega).abs();
        if small < len.powf(-tau) {
            ok = false;
        }
        let product = small * len.powf(tau);
        if product < worst.0 {
            worst = (product, k);
        }
    }
    DiophantineResult {
        ok,
        worst_k: worst.1.entries().to_vec(),
        margin: worst.0,
    }
}

/// Axis-aligned sampling box for frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FrequencyDomain {
    /// Accepts `lower <= upper`; equal bounds give a point mass.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config("scan.lower", "bounds must be non-empty and of equal length"));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::config(format!("scan.lower[{i}]"), format!("need finite lower <= upper, got {l} > {u}")));
            }
        }
        Ok(FrequencyDomain { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

/// Fraction of uniform samples from `domain` that fail [`diophantine_check`].
///
/// Shard `i` draws from stream `i` of the generator seeded with `seed`, so the
/// result does not depend on the execution policy.
pub fn resonant_measure_mc(domain: &FrequencyDomain, m_box: usize, tau: f64, samples: usize, seed: u64, exec: Exec) -> Result<f64> {
    if samples == 0 {
        return Err(Error::config("scan.samples", "must be at least 1"));
    }
    let shards = samples.div_ceil(MC_SHARD_SIZE);
    let counts = exec.map_range(shards, |shard| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard as u64);
        let len = MC_SHARD_SIZE.min(samples - shard * MC_SHARD_SIZE);
        (0..len)
            .filter(|_| !diophantine_check(&domain.sample(&mut rng), m_box, tau).ok)
            .count()
    });
    Ok(counts.iter().sum::<usize>() as f64 / samples as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyProfile {
    /// `sup_k ||zhat(k)||_2 e^{|k|^s}`.
    pub sup: f64,
    /// `(|k|, max ||zhat(k)||_2)` for every populated l1 shell.
    pub shells: Vec<(u32, f64)>,
}

pub fn gevrey_profile(zhat: &FourierVector, s: f64) -> Result<GevreyProfile> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("Gevrey exponent must lie in (0, 1), got {s}")));
    }
    let mut sq: BTreeMap<&MultiIndex, f64> = BTreeMap::new();
    for (m, v) in zhat.iter() {
        *sq.entry(&m.k).or_insert(0.0) += v * v;
    }
    let mut sup = 0.0f64;
    let mut shells: BTreeMap<u32, f64> = BTreeMap::new();
    for (k, s2) in sq {
        let norm = s2.sqrt();
        sup = sup.max(norm * (k.l1() as f64).powf(s).exp());
        let e = shells.entry(k.l1()).or_insert(0.0);
        *e = e.max(norm);
    }
    Ok(GevreyProfile {
        sup,
        shells: shells.into_iter().collect(),
    })
}

/// Inversion and localization fragment of the per-iteration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub half_width: usize,
    pub rows: usize,
    pub log_inverse_norm: f64,
    pub log_epsilon_n: f64,
    pub inversion_ok: bool,
    /// Largest `|T^{-1}(row, col)| / (e^{-|k-k'|^s / 2} + e^{-|k+k'|^s / 2})`
    /// over pairs with both `|k-k'|` and `|k+k'|` at least `sqrt N`.
    pub localization_worst_ratio: f64,
}

pub fn condition_report(t: &TangentOperator, s: f64) -> Result<ConditionReport> {
    let half_width = t.lattice_box().half_width;
    let log_epsilon_n = log_epsilon_threshold(half_width)?;
    let log_inverse_norm = t.inverse_norm()?.ln();
    let inverse = t.inverse()?;
    let modes = t.order().modes();
    let cutoff = (half_width as f64).sqrt();
    let mut worst = 0.0f64;
    for (r, mr) in modes.iter().enumerate() {
        for (c, mc) in modes.iter().enumerate() {
            let diff = (&mr.k - &mc.k).l1() as f64;
            let sum = (&mr.k + &mc.k).l1() as f64;
            if diff < cutoff || sum < cutoff {
                continue;
            }
            let bound = (-0.5 * diff.powf(s)).exp() + (-0.5 * sum.powf(s)).exp();
            worst = worst.max(inverse.get(r, c).abs() / bound);
        }
    }
    Ok(ConditionReport {
        half_width,
        rows: t.rows(),
        log_inverse_norm,
        log_epsilon_n,
        inversion_ok: log_inverse_norm <= -log_epsilon_n,
        localization_worst_ratio: worst,
    })
}

/// Everything checked for one solver iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub r: usize,
    /// `None` when the operator exceeded the dense-check row limit.
    pub condition: Option<ConditionReport>,
    pub gevrey_sup: f64,
    pub diophantine: DiophantineResult,
}

impl DiagnosticsReport {
    /// Failed checks, phrased for an error message.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(c) = &self.condition {
            if !c.inversion_ok {
                out.push(format!(
                    "log ||T^-1|| = {:.6} exceeds -log eps_N = {:.6} at N = {}",
                    c.log_inverse_norm, -c.log_epsilon_n, c.half_width
                ));
            }
            if c.localization_worst_ratio > 1.0 {
                out.push(format!("localization ratio {:.6e} > 1 at N = {}", c.localization_worst_ratio, c.half_width));
            }
        }
        if !self.diophantine.ok {
            out.push(format!(
                "frequency fails the Diophantine bound at k = {:?} (margin {:.6e})",
                self.diophantine.worst_k, self.diophantine.margin
            ));
        }
        out
    }
}

/// The inequality `a^s + b^s - (a+b)^s >= (2 - 2^s) min(a,b)^s`, as the
/// slack `lhs - rhs`.
pub fn subadditivity_slack(a: f64, b: f64, s: f64) -> f64 {
    a.powf(s) + b.powf(s) - (a + b).powf(s) - (2.0 - 2f64.powf(s)) * a.min(b).powf(s)
}
