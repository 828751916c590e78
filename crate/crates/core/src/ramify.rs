//! Ramified-prime counts in the specialization at T = n.
//!
//! Three ways to count:
//! - `criterion`: for p > p0, p ramifies iff some orbit i has
//!   v_p(P_i(n)) > 0 with e_i not dividing it; primes p <= p0 follow a
//!   [`SmallPrimePolicy`].
//! - `oracle`: exact count for Q(T, sqrt f) from the discriminant of the
//!   quadratic field Q(sqrt f(n)).
//! - `superset`: ω(Δ(n)) for a supplied discriminant polynomial Δ, an upper
//!   bound on the true count.
//!
//! All valuations are taken on |P_i(n)|.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, Factorization, Factorizer};
use crate::cover::CoverSpec;
use crate::error::{Error, Result};
use crate::poly::IntPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    Criterion,
    Oracle,
    Superset,
}

/// Treatment of primes p <= p0 in criterion mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallPrimePolicy {
    /// Ask the quadratic oracle (quadratic family only).
    Oracle,
    /// Leave them out.
    Exclude,
    /// Count every p <= p0 dividing P_E(n); may over-count.
    IncludeSuperset,
}

impl SmallPrimePolicy {
    pub fn default_for(spec: &CoverSpec) -> Self {
        if spec.is_quadratic() {
            SmallPrimePolicy::Oracle
        } else {
            SmallPrimePolicy::Exclude
        }
    }
}

macro_rules! str_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $(Self::$variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown value {other:?}; expected one of: {}",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}

str_enum!(CountingMode {
    Criterion => "criterion",
    Oracle => "oracle",
    Superset => "superset",
});

str_enum!(SmallPrimePolicy {
    Oracle => "oracle",
    Exclude => "exclude",
    IncludeSuperset => "include_superset",
});

/// Per-n result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamRecord {
    pub n: u64,
    /// Number of ramified primes; -1 at a branch point.
    pub ram: i64,
    /// ω(|P_E(n)|).
    pub omega_pe: u32,
    /// Σ_i m_{e_i}(|P_i(n)|).
    pub correction: u32,
    pub mode: CountingMode,
    pub policy: SmallPrimePolicy,
    /// Specialization group strictly smaller than G; only decided for the
    /// quadratic family.
    pub degenerate: bool,
    pub branch_point: bool,
    /// `include_superset` counted at least one prime <= p0.
    pub over_count: bool,
}

impl RamRecord {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n",
        "ram",
        "omega_PE",
        "correction",
        "defect",
        "degenerate",
        "mode",
        "policy",
    ];

    fn branch(n: u64, mode: CountingMode, policy: SmallPrimePolicy) -> Self {
        RamRecord {
            n,
            ram: -1,
            omega_pe: 0,
            correction: 0,
            mode,
            policy,
            degenerate: false,
            branch_point: true,
            over_count: false,
        }
    }

    /// Ram - ω(P_E(n)) + Σ m_{e_i}(P_i(n)); undefined at branch points.
    pub fn defect(&self) -> Option<i64> {
        (!self.branch_point).then(|| self.ram - self.omega_pe as i64 + self.correction as i64)
    }

    pub fn csv_fields(&self) -> [String; 8] {
        [
            self.n.to_string(),
            self.ram.to_string(),
            self.omega_pe.to_string(),
            self.correction.to_string(),
            self.defect().map(|d| d.to_string()).unwrap_or_default(),
            self.degenerate.to_string(),
            self.mode.to_string(),
            self.policy.to_string(),
        ]
    }
}

/// Ramification in Q(sqrt f(n)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticVerdict {
    pub ram: u32,
    pub ramified_primes: Vec<BigUint>,
    /// f(n) is a perfect square, so the field is Q.
    pub degenerate: bool,
}

/// Ramified primes of Q(sqrt m) for m the squarefree kernel of f(n): odd
/// p | m, and 2 iff m is not 1 mod 4.
pub fn ram_oracle_quadratic(f: &IntPoly, n: u64) -> Result<QuadraticVerdict> {
    ram_oracle_quadratic_with(f, n, arith::default_factorizer())
}

pub fn ram_oracle_quadratic_with(
    f: &IntPoly,
    n: u64,
    factorizer: &Factorizer,
) -> Result<QuadraticVerdict> {
    let x = BigInt::from(n);
    let value = f.eval(&x);
    if value.is_zero() {
        return Err(Error::BranchPoint(x));
    }
    let m = factorizer.factor(&value)?.squarefree_kernel();
    if m.is_one() {
        return Ok(QuadraticVerdict {
            ram: 0,
            ramified_primes: Vec::new(),
            degenerate: true,
        });
    }
    let mut primes: Vec<BigUint> = factorizer
        .factor(&m)?
        .entries()
        .iter()
        .map(|(p, _)| p.clone())
        .filter(|p| p.is_odd())
        .collect();
    let residue = m.mod_floor(&BigInt::from(4));
    if residue == BigInt::from(2) || residue == BigInt::from(3) {
        primes.insert(0, BigUint::from(2u32));
    }
    Ok(QuadraticVerdict {
        ram: primes.len() as u32,
        ramified_primes: primes,
        degenerate: false,
    })
}

/// Orbit values P_i(n) and their factorizations at a non-branch point.
#[derive(Debug, Clone)]
pub struct Specialization {
    pub n: u64,
    pub values: Vec<BigInt>,
    pub factorizations: Vec<Factorization>,
}

impl Specialization {
    /// Factorization of P_E(n).
    pub fn product_factorization(&self) -> Factorization {
        let mut iter = self.factorizations.iter();
        let first = iter.next().expect("at least one orbit").clone();
        iter.fold(first, |acc, f| acc.combine(f))
    }

    pub fn omega_pe(&self) -> u32 {
        let mut primes: Vec<&BigUint> = self
            .factorizations
            .iter()
            .flat_map(|f| f.entries().iter().map(|(p, _)| p))
            .collect();
        primes.sort_unstable();
        primes.dedup();
        primes.len() as u32
    }

    pub fn correction(&self, spec: &CoverSpec) -> u32 {
        self.factorizations
            .iter()
            .zip(spec.orbits())
            .map(|(f, o)| f.m_a(o.ram_index()))
            .sum()
    }
}

/// Ram(n), ω(P_E(n)), the m_e correction and their defect at one n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lemma5Terms {
    pub ram: i64,
    pub omega_pe: u32,
    pub correction: u32,
    pub defect: i64,
}

/// Evaluates ramification data of one cover; cheap to clone per worker.
#[derive(Debug, Clone)]
pub struct RamEngine<'a> {
    spec: &'a CoverSpec,
    factorizer: Factorizer,
}

impl<'a> RamEngine<'a> {
    pub fn new(spec: &'a CoverSpec) -> Self {
        RamEngine {
            spec,
            factorizer: arith::default_factorizer().clone(),
        }
    }

    pub fn with_factorizer(spec: &'a CoverSpec, factorizer: Factorizer) -> Self {
        RamEngine { spec, factorizer }
    }

    pub fn spec(&self) -> &'a CoverSpec {
        self.spec
    }

    pub fn factorizer(&self) -> &Factorizer {
        &self.factorizer
    }

    /// `None` at a branch point.
    pub fn specialize(&self, n: u64) -> Result<Option<Specialization>> {
        check_positive(n)?;
        let x = BigInt::from(n);
        let values: Vec<BigInt> = self.spec.orbits().iter().map(|o| o.poly().eval(&x)).collect();
        if values.iter().any(|v| v.is_zero()) {
            return Ok(None);
        }
        let factorizations = values
            .iter()
            .map(|v| self.factorizer.factor(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(Specialization {
            n,
            values,
            factorizations,
        }))
    }

    fn quadratic_f(&self) -> Result<&'a IntPoly> {
        self.spec
            .quadratic_f()
            .ok_or_else(|| Error::Unsupported("quadratic oracle on a non-quadratic cover".into()))
    }

    fn oracle(&self, n: u64) -> Result<QuadraticVerdict> {
        ram_oracle_quadratic_with(self.quadratic_f()?, n, &self.factorizer)
    }

    pub fn evaluate(&self, n: u64, mode: CountingMode, policy: SmallPrimePolicy) -> Result<RamRecord> {
        let special = self.specialize(n)?;
        self.evaluate_specialized(n, special.as_ref(), mode, policy)
    }

    /// Same as [`evaluate`](Self::evaluate) but reuses a specialization the
    /// caller already computed (`None` marks a branch point).
    pub fn evaluate_specialized(
        &self,
        n: u64,
        special: Option<&Specialization>,
        mode: CountingMode,
        policy: SmallPrimePolicy,
    ) -> Result<RamRecord> {
        if mode == CountingMode::Oracle || policy == SmallPrimePolicy::Oracle {
            self.quadratic_f()?;
        }
        let Some(special) = special else {
            return Ok(RamRecord::branch(n, mode, policy));
        };
        match mode {
            CountingMode::Criterion => self.criterion_from(special, policy),
            CountingMode::Oracle => self.oracle_from(special, policy),
            CountingMode::Superset => self.superset_from(special, policy),
        }
    }

    /// Valuation criterion for p > p0, `policy` for p <= p0.
    pub fn ram_criterion(&self, n: u64, policy: SmallPrimePolicy) -> Result<RamRecord> {
        if policy == SmallPrimePolicy::Oracle {
            self.quadratic_f()?;
        }
        let Some(special) = self.specialize(n)? else {
            return Ok(RamRecord::branch(n, CountingMode::Criterion, policy));
        };
        self.criterion_from(&special, policy)
    }

    fn criterion_from(&self, special: &Specialization, policy: SmallPrimePolicy) -> Result<RamRecord> {
        let n = special.n;
        let p0 = self.spec.p0();
        let orbits = self.spec.orbits();

        // (prime, orbit, exponent), grouped by prime
        let mut hits: Vec<(&BigUint, usize, u32)> = special
            .factorizations
            .iter()
            .enumerate()
            .flat_map(|(i, f)| f.entries().iter().map(move |(p, e)| (p, i, *e)))
            .collect();
        hits.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));

        let mut large = 0i64;
        let mut small_dividing = 0i64;
        let mut idx = 0;
        while idx < hits.len() {
            let prime = hits[idx].0;
            let end = idx + hits[idx..].iter().take_while(|h| h.0 == prime).count();
            if prime > p0 {
                if end - idx > 1 {
                    return Err(Error::InternalConsistency {
                        n: BigInt::from(n),
                        prime: prime.clone(),
                        first: hits[idx].1,
                        second: hits[idx + 1].1,
                    });
                }
                let (_, orbit, e) = hits[idx];
                if e % orbits[orbit].ram_index() != 0 {
                    large += 1;
                }
            } else {
                small_dividing += 1;
            }
            idx = end;
        }

        let mut degenerate = false;
        let mut over_count = false;
        let small = match policy {
            SmallPrimePolicy::Oracle => {
                let verdict = self.oracle(n)?;
                degenerate = verdict.degenerate;
                verdict.ramified_primes.iter().filter(|p| *p <= p0).count() as i64
            }
            SmallPrimePolicy::Exclude => 0,
            SmallPrimePolicy::IncludeSuperset => {
                over_count = small_dividing > 0;
                small_dividing
            }
        };
        if policy != SmallPrimePolicy::Oracle && self.spec.is_quadratic() {
            degenerate = self.quadratic_degenerate(n)?;
        }

        Ok(RamRecord {
            n,
            ram: large + small,
            omega_pe: special.omega_pe(),
            correction: special.correction(self.spec),
            mode: CountingMode::Criterion,
            policy,
            degenerate,
            branch_point: false,
            over_count,
        })
    }

    fn quadratic_degenerate(&self, n: u64) -> Result<bool> {
        let value = self.quadratic_f()?.eval(&BigInt::from(n));
        if value.is_zero() {
            return Err(Error::BranchPoint(BigInt::from(n)));
        }
        Ok(arith::is_perfect_square(&value))
    }

    /// Exact count from the quadratic oracle, plus the ω / m_e terms.
    pub fn ram_oracle(&self, n: u64, policy: SmallPrimePolicy) -> Result<RamRecord> {
        self.quadratic_f()?;
        match self.specialize(n)? {
            Some(special) => self.oracle_from(&special, policy),
            None => Ok(RamRecord::branch(n, CountingMode::Oracle, policy)),
        }
    }

    fn oracle_from(&self, special: &Specialization, policy: SmallPrimePolicy) -> Result<RamRecord> {
        let verdict = self.oracle(special.n)?;
        Ok(RamRecord {
            n: special.n,
            ram: verdict.ram as i64,
            omega_pe: special.omega_pe(),
            correction: special.correction(self.spec),
            mode: CountingMode::Oracle,
            policy,
            degenerate: verdict.degenerate,
            branch_point: false,
            over_count: false,
        })
    }

    pub fn ram_superset(&self, n: u64, policy: SmallPrimePolicy) -> Result<RamRecord> {
        match self.specialize(n)? {
            Some(special) => self.superset_from(&special, policy),
            None => Ok(RamRecord::branch(n, CountingMode::Superset, policy)),
        }
    }

    fn superset_from(&self, special: &Specialization, policy: SmallPrimePolicy) -> Result<RamRecord> {
        let n = special.n;
        let ram = self.ram_upper_via_disc(n)? as i64;
        let degenerate = if self.spec.is_quadratic() {
            self.quadratic_degenerate(n)?
        } else {
            false
        };
        Ok(RamRecord {
            n,
            ram,
            omega_pe: special.omega_pe(),
            correction: special.correction(self.spec),
            mode: CountingMode::Superset,
            policy,
            degenerate,
            branch_point: false,
            over_count: true,
        })
    }

    /// ω(P_E(n)), Σ m_{e_i}(P_i(n)) and the defect against the most exact
    /// available Ram (oracle for the quadratic family, criterion with
    /// `exclude` otherwise).
    pub fn lemma5_terms(&self, n: u64) -> Result<Lemma5Terms> {
        let Some(special) = self.specialize(n)? else {
            return Err(Error::BranchPoint(BigInt::from(n)));
        };
        let ram = if self.spec.is_quadratic() {
            self.oracle(n)?.ram as i64
        } else {
            self.criterion_from(&special, SmallPrimePolicy::Exclude)?.ram
        };
        let omega_pe = special.omega_pe();
        let correction = special.correction(self.spec);
        Ok(Lemma5Terms {
            ram,
            omega_pe,
            correction,
            defect: ram - omega_pe as i64 + correction as i64,
        })
    }

    /// ω(|Δ(n)|), an upper bound for Ram(n).
    pub fn ram_upper_via_disc(&self, n: u64) -> Result<u32> {
        check_positive(n)?;
        let disc = self
            .spec
            .disc_poly()
            .ok_or_else(|| Error::Unsupported("no discriminant polynomial supplied".into()))?;
        let value = disc.eval(&BigInt::from(n));
        if value.is_zero() {
            return Err(Error::domain(format!("discriminant vanishes at n = {n}")));
        }
        Ok(self.factorizer.factor(&value)?.omega())
    }

    /// f(n) is a perfect square (quadratic family only).
    pub fn is_hilbert_degenerate(&self, n: u64) -> Result<bool> {
        check_positive(n)?;
        self.quadratic_degenerate(n)
    }
}

fn check_positive(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::domain("specialization point must be a positive integer"))
    } else {
        Ok(())
    }
}

pub fn ram_criterion(spec: &CoverSpec, n: u64, policy: SmallPrimePolicy) -> Result<RamRecord> {
    RamEngine::new(spec).ram_criterion(n, policy)
}

pub fn lemma5_terms(spec: &CoverSpec, n: u64) -> Result<Lemma5Terms> {
    RamEngine::new(spec).lemma5_terms(n)
}

pub fn ram_upper_via_disc(spec: &CoverSpec, n: u64) -> Result<u32> {
    RamEngine::new(spec).ram_upper_via_disc(n)
}

pub fn is_hilbert_degenerate(spec: &CoverSpec, n: u64) -> Result<bool> {
    RamEngine::new(spec).is_hilbert_degenerate(n)
}
