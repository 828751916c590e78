//! Mergeable sweep statistics.
//!
//! Every accumulator here holds exact integer state so that splitting a range
//! of n across workers and merging in any order gives identical results.
//! Floating point only enters when a report is finalized.
//!
//! Normalization follows the CLT form: for a sweep over 0 < n <= N the
//! statistic x(n) is mapped to (x - c)/s with c = r·ln ln N and s = sqrt(c).
//! Points removed by a filter (degenerate specializations, or branch points
//! for ω statistics) still count toward N.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::cover::CoverSpec;
use crate::error::{Error, Result};
use crate::poly::IntPoly;
use crate::ramify::RamEngine;

/// Which sample points feed a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterTag {
    #[default]
    All,
    /// Drop n whose specialization is degenerate (quadratic family only).
    Hilbert,
}

impl FilterTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterTag::All => "all",
            FilterTag::Hilbert => "hilbert",
        }
    }
}

impl std::str::FromStr for FilterTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(FilterTag::All),
            "hilbert" => Ok(FilterTag::Hilbert),
            other => Err(format!("unknown filter {other:?}; expected all or hilbert")),
        }
    }
}

impl std::fmt::Display for FilterTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - next) + t;
        } else {
            comp += (t - next) + sum;
        }
        sum = next;
    }
    sum + comp
}

fn binomial(k: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Centering constant r·ln ln N; requires N >= 3.
pub fn center(r: u32, n_total: u64) -> Result<f64> {
    if n_total <= 2 {
        return Err(Error::NormalizationUndefined(n_total));
    }
    Ok(r as f64 * (n_total as f64).ln().ln())
}

/// Exact power sums S_j = Σ x^j, j = 0..=k_max.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    k_max: u32,
    power_sums: Vec<i128>,
    excluded: u64,
    filter: FilterTag,
}

impl MomentAccumulator {
    pub fn new(k_max: u32) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::domain("k_max must be at least 1"));
        }
        Ok(MomentAccumulator {
            k_max,
            power_sums: vec![0; k_max as usize + 1],
            excluded: 0,
            filter: FilterTag::All,
        })
    }

    pub fn with_filter(mut self, filter: FilterTag) -> Self {
        self.filter = filter;
        self
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn filter(&self) -> FilterTag {
        self.filter
    }

    /// Number of pushed samples (S_0).
    pub fn count(&self) -> u64 {
        self.power_sums[0] as u64
    }

    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    /// Normalizing N: pushed plus excluded points.
    pub fn total(&self) -> u64 {
        self.count() + self.excluded
    }

    pub fn power_sum(&self, j: u32) -> i128 {
        self.power_sums[j as usize]
    }

    pub fn power_sums(&self) -> &[i128] {
        &self.power_sums
    }

    pub fn push(&mut self, x: i64) -> Result<()> {
        let x = x as i128;
        let mut pow: i128 = 1;
        for slot in self.power_sums.iter_mut() {
            *slot = slot.checked_add(pow).ok_or(Error::Overflow)?;
            pow = pow.checked_mul(x).ok_or(Error::Overflow)?;
        }
        Ok(())
    }

    /// A point inside the sweep range that the filter removed.
    pub fn push_excluded(&mut self) {
        self.excluded += 1;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if self.k_max != other.k_max {
            return Err(Error::AccumulatorMismatch(format!(
                "k_max {} vs {}",
                self.k_max, other.k_max
            )));
        }
        if self.filter != other.filter {
            return Err(Error::AccumulatorMismatch(format!(
                "filter {} vs {}",
                self.filter, other.filter
            )));
        }
        for (a, b) in self.power_sums.iter_mut().zip(&other.power_sums) {
            *a = a.checked_add(*b).ok_or(Error::Overflow)?;
        }
        self.excluded += other.excluded;
        Ok(())
    }

    fn check_k(&self, k: u32) -> Result<()> {
        if k > self.k_max {
            Err(Error::domain(format!("k = {k} exceeds k_max = {}", self.k_max)))
        } else {
            Ok(())
        }
    }

    /// S_j / N.
    pub fn raw_moment(&self, j: u32) -> Result<f64> {
        self.check_k(j)?;
        let n = self.total();
        if n == 0 {
            return Err(Error::NormalizationUndefined(0));
        }
        Ok(self.power_sums[j as usize] as f64 / n as f64)
    }

    /// (1/N) Σ ((x - c)/s)^k via binomial expansion of the power sums.
    pub fn finalize(&self, k: u32, r: u32) -> Result<MomentReport> {
        self.check_k(k)?;
        if r == 0 {
            return Err(Error::domain("r must be positive"));
        }
        let n_total = self.total();
        let c = center(r, n_total)?;
        let n = n_total as f64;
        let value = central_moment_from_means(
            |j| self.power_sums[j as usize] as f64 / n,
            k,
            c,
        );
        Ok(MomentReport {
            n: n_total,
            k,
            normalized_moment: value,
            gaussian_target: gaussian_moment(k),
            r,
            filter: self.filter,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u32,
    pub normalized_moment: f64,
    pub gaussian_target: f64,
    pub r: u32,
    pub filter: FilterTag,
}

/// (1/N) Σ ((x - c)/sqrt(c))^k given the raw means (1/N) Σ x^j.
fn central_moment_from_means(mean: impl Fn(u32) -> f64, k: u32, c: f64) -> f64 {
    let s = c.sqrt();
    // Scale each term by s^k piecewise so intermediates stay near the result.
    compensated_sum((0..=k).map(|j| {
        binomial(k, j) * mean(j) / s.powi(j as i32) * (-c / s).powi((k - j) as i32)
    }))
}

/// E[Z^k] for a standard normal Z.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|j| j as f64).product()
}

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Power series with positive terms; good for small z.
fn erf_series(z: f64) -> f64 {
    let two_z2 = 2.0 * z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0u32;
    while term > sum * 1e-17 {
        n += 1;
        term *= two_z2 / (2 * n + 1) as f64;
        sum += term;
    }
    2.0 * FRAC_1_SQRT_PI * (-z * z).exp() * sum
}

/// Continued fraction, evaluated from a fixed depth upward; good for z >= 2.5.
fn erfc_continued_fraction(z: f64) -> f64 {
    let mut t = z;
    for k in (1..=160).rev() {
        t = z + (k as f64 / 2.0) / t;
    }
    FRAC_1_SQRT_PI * (-z * z).exp() / t
}

fn erfc_nonneg(z: f64) -> f64 {
    if z < 2.5 {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(a: f64) -> f64 {
    let z = a.abs() * std::f64::consts::FRAC_1_SQRT_2;
    if a < 0.0 {
        0.5 * erfc_nonneg(z)
    } else {
        1.0 - 0.5 * erfc_nonneg(z)
    }
}

/// Counts of each observed integer value; mergeable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueHistogram {
    counts: BTreeMap<i64, u64>,
    excluded: u64,
}

impl ValueHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: impl IntoIterator<Item = i64>) -> Self {
        let mut h = Self::new();
        for x in samples {
            h.push(x);
        }
        h
    }

    pub fn push(&mut self, x: i64) {
        *self.counts.entry(x).or_insert(0) += 1;
    }

    pub fn push_excluded(&mut self) {
        self.excluded += 1;
    }

    pub fn merge(&mut self, other: &ValueHistogram) {
        for (&x, &c) in &other.counts {
            *self.counts.entry(x).or_insert(0) += c;
        }
        self.excluded += other.excluded;
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn count(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    pub fn total(&self) -> u64 {
        self.count() + self.excluded
    }

    /// Number of samples with x <= threshold.
    pub fn count_at_most(&self, threshold: f64) -> u64 {
        self.counts
            .iter()
            .take_while(|(&x, _)| x as f64 <= threshold)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Evenly spaced evaluation points for the CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for CdfGrid {
    fn default() -> Self {
        CdfGrid {
            start: -3.0,
            stop: 3.0,
            step: 0.5,
        }
    }
}

impl CdfGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() {
            return Err(Error::domain("grid needs finite start <= stop and step > 0"));
        }
        let steps = ((self.stop - self.start) / self.step + 1e-9).floor() as u64;
        Ok((0..=steps).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub a: f64,
    pub empirical: f64,
    pub limit: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfComparison {
    #[serde(rename = "N")]
    pub n: u64,
    pub r: u32,
    pub ks_distance: f64,
    pub rows: Vec<CdfRow>,
}

/// Empirical distribution of (x - c)/s against the normal CDF on a grid.
pub fn cdf_compare(hist: &ValueHistogram, r: u32, grid: &CdfGrid) -> Result<CdfComparison> {
    let n_total = hist.total();
    let c = center(r, n_total)?;
    let s = c.sqrt();
    let rows: Vec<CdfRow> = grid
        .points()?
        .into_iter()
        .map(|a| {
            let empirical = hist.count_at_most(c + a * s) as f64 / n_total as f64;
            let limit = normal_cdf(a);
            CdfRow {
                a,
                empirical,
                limit,
                abs_error: (empirical - limit).abs(),
            }
        })
        .collect();
    let ks_distance = rows.iter().map(|row| row.abs_error).fold(0.0, f64::max);
    Ok(CdfComparison {
        n: n_total,
        r,
        ks_distance,
        rows,
    })
}

/// |{n : x(n) <= C}| / N.
pub fn density_below(hist: &ValueHistogram, c: f64) -> Result<f64> {
    let n = hist.total();
    if n == 0 {
        return Err(Error::NormalizationUndefined(0));
    }
    Ok(hist.count_at_most(c) as f64 / n as f64)
}

/// Counts n >= 3 where x(n) strays from r·ln ln n by more than ε·r·ln ln n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalOrderTally {
    r: u32,
    eps: f64,
    considered: u64,
    violations: u64,
}

impl NormalOrderTally {
    pub fn new(r: u32, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!("epsilon must be positive, got {eps}")));
        }
        Ok(NormalOrderTally {
            r,
            eps,
            considered: 0,
            violations: 0,
        })
    }

    pub fn push(&mut self, n: u64, x: i64) {
        if n < 3 {
            return;
        }
        let expected = self.r as f64 * (n as f64).ln().ln();
        self.considered += 1;
        if (x as f64 - expected).abs() > self.eps * expected {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: &NormalOrderTally) -> Result<()> {
        if self.r != other.r || self.eps != other.eps {
            return Err(Error::AccumulatorMismatch(
                "normal-order tallies with different r or epsilon".into(),
            ));
        }
        self.considered += other.considered;
        self.violations += other.violations;
        Ok(())
    }

    pub fn considered(&self) -> u64 {
        self.considered
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn fraction(&self) -> Result<f64> {
        if self.considered == 0 {
            return Err(Error::NormalizationUndefined(self.considered));
        }
        Ok(self.violations as f64 / self.considered as f64)
    }
}

/// Fraction of 3 <= n <= N (over the supplied (n, x) pairs) violating the
/// normal-order band.
pub fn normal_order_violations(
    samples: impl IntoIterator<Item = (u64, i64)>,
    eps: f64,
    r: u32,
) -> Result<f64> {
    let mut tally = NormalOrderTally::new(r, eps)?;
    for (n, x) in samples {
        tally.push(n, x);
    }
    tally.fraction()
}

/// Power sums of ω(|P_E(n)|) over 0 < n <= N; branch points are excluded
/// from the sums but kept in N.
pub fn halberstam_accumulator(spec: &CoverSpec, k_max: u32, n_max: u64) -> Result<MomentAccumulator> {
    let engine = RamEngine::new(spec);
    let mut acc = MomentAccumulator::new(k_max)?;
    for n in 1..=n_max {
        match engine.specialize(n)? {
            Some(special) => acc.push(special.omega_pe() as i64)?,
            None => acc.push_excluded(),
        }
    }
    Ok(acc)
}

/// Normalized k-th moment of ω(|P_E(n)|).
pub fn halberstam_moment(spec: &CoverSpec, k: u32, n_max: u64) -> Result<MomentReport> {
    halberstam_accumulator(spec, k.max(1), n_max)?.finalize(k, spec.r() as u32)
}

fn check_lemma6_args(poly: &IntPoly, a: u32) -> Result<()> {
    if a < 2 {
        return Err(Error::domain(
            "m_a moments are only bounded for a >= 2; a = 1 is ω itself",
        ));
    }
    if poly.is_zero() || poly.degree() == Some(0) {
        return Err(Error::domain("polynomial must be nonconstant"));
    }
    if !poly.is_squarefree() {
        return Err(Error::domain(format!("{poly} is not squarefree")));
    }
    Ok(())
}

/// m_a(|P(n)|) for one n, after argument checks done by the caller.
pub(crate) fn lemma6_term(poly: &IntPoly, a: u32, n: u64, factorizer: &arith::Factorizer) -> Result<u32> {
    let value = poly.eval(&BigInt::from(n));
    if value.is_zero() {
        return Err(Error::BranchPoint(BigInt::from(n)));
    }
    Ok(factorizer.factor(&value)?.m_a(a))
}

/// Σ_{0<n<=N} m_a(|P(n)|)^k as an exact integer.
pub fn lemma6_sum(poly: &IntPoly, a: u32, k: u32, range: std::ops::RangeInclusive<u64>) -> Result<u128> {
    check_lemma6_args(poly, a)?;
    let factorizer = arith::default_factorizer();
    let mut total: u128 = 0;
    for n in range {
        let m = lemma6_term(poly, a, n, factorizer)? as u128;
        total = m
            .checked_pow(k)
            .and_then(|p| total.checked_add(p))
            .ok_or(Error::Overflow)?;
    }
    Ok(total)
}

/// (1/N) Σ_{0<n<=N} m_a(|P(n)|)^k.
pub fn lemma6_moment(poly: &IntPoly, a: u32, k: u32, n_max: u64) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::NormalizationUndefined(0));
    }
    Ok(lemma6_sum(poly, a, k, 1..=n_max)? as f64 / n_max as f64)
}
