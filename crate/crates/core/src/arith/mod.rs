//! Exact integer arithmetic: factorization, p-adic valuations and the
//! prime-divisor counting functions ω and m_a.
//!
//! All counting functions act on |n|; the sign is carried on
//! [`Factorization`] and otherwise ignored.

mod prime;
mod rho;

use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use prime::{is_prime_big, is_prime_u64, PrimeTable};

/// Default trial-division bound.
pub const DEFAULT_TRIAL_BOUND: u32 = 100_000;
/// Default seed for the randomized splitting step.
pub const DEFAULT_SEED: u64 = 0x5eed_2016;

/// After this many trial primes, a cofactor that passes a primality test
/// ends trial division early.
const EARLY_PRIMALITY_INDEX: usize = 168;

/// Prime factorization of a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    entries: Vec<(BigUint, u32)>,
    sign: i8,
}

impl Factorization {
    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub fn entries(&self) -> &[(BigUint, u32)] {
        &self.entries
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_unit(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn omega(&self) -> u32 {
        self.entries.len() as u32
    }

    /// Primes whose exponent is positive and divisible by `a`.
    pub fn m_a(&self, a: u32) -> u32 {
        self.entries.iter().filter(|(_, e)| e % a == 0).count() as u32
    }

    pub fn valuation(&self, p: &BigUint) -> u32 {
        self.entries
            .binary_search_by(|(q, _)| q.cmp(p))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn reconstruct(&self) -> BigInt {
        let magnitude = self
            .entries
            .iter()
            .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e));
        let sign = if self.sign < 0 { Sign::Minus } else { Sign::Plus };
        BigInt::from_biguint(sign, magnitude)
    }

    pub fn squarefree_kernel(&self) -> BigInt {
        let magnitude = self
            .entries
            .iter()
            .filter(|(_, e)| e % 2 == 1)
            .fold(BigUint::one(), |acc, (p, _)| acc * p);
        let sign = if self.sign < 0 { Sign::Minus } else { Sign::Plus };
        BigInt::from_biguint(sign, magnitude)
    }

    /// Largest prime factor, or `None` for ±1.
    pub fn largest_prime(&self) -> Option<&BigUint> {
        self.entries.last().map(|(p, _)| p)
    }

    /// Multiplies two factorizations.
    pub fn combine(&self, other: &Factorization) -> Factorization {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            match (self.entries.get(i), other.entries.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    entries.push((a.0.clone(), a.1 + b.1));
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    entries.push(a.clone());
                    i += 1;
                }
                (Some(_), Some(b)) | (None, Some(b)) => {
                    entries.push(b.clone());
                    j += 1;
                }
                (Some(a), None) => {
                    entries.push(a.clone());
                    i += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Factorization {
            entries,
            sign: self.sign * other.sign,
        }
    }
}

/// Trial division by a sieved prime table, then seeded Brent-rho splitting.
#[derive(Debug, Clone)]
pub struct Factorizer {
    table: Arc<PrimeTable>,
    seed: u64,
}

impl Default for Factorizer {
    fn default() -> Self {
        Factorizer::new(DEFAULT_TRIAL_BOUND, DEFAULT_SEED)
    }
}

impl Factorizer {
    pub fn new(trial_bound: u32, seed: u64) -> Self {
        Factorizer {
            table: Arc::new(PrimeTable::new(trial_bound.max(2))),
            seed,
        }
    }

    /// Same prime table, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Factorizer {
            table: Arc::clone(&self.table),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn table(&self) -> &PrimeTable {
        &self.table
    }

    pub fn factor(&self, n: &BigInt) -> Result<Factorization> {
        if n.is_zero() {
            return Err(Error::domain("cannot factor 0"));
        }
        let sign = if n.is_negative() { -1 } else { 1 };
        let entries = match n.magnitude().to_u64() {
            Some(m) => self
                .factor_u64(m)
                .into_iter()
                .map(|(p, e)| (BigUint::from(p), e))
                .collect(),
            None => self.factor_big(n.magnitude().clone()),
        };
        Ok(Factorization { entries, sign })
    }

    pub fn factor_i64(&self, n: i64) -> Result<Factorization> {
        self.factor(&BigInt::from(n))
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn factor_u64(&self, mut m: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut exhausted = true;
        for (idx, &p) in self.table.primes().iter().enumerate() {
            let p = p as u64;
            if p * p > m {
                exhausted = false;
                break;
            }
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                out.push((p, e));
            }
            if idx == EARLY_PRIMALITY_INDEX && m > 1 && is_prime_u64(m) {
                exhausted = false;
                break;
            }
        }
        if m > 1 {
            if !exhausted || is_prime_u64(m) {
                out.push((m, 1));
            } else {
                let mut rng = self.rng();
                let mut stack = vec![m];
                while let Some(c) = stack.pop() {
                    if c == 1 {
                        continue;
                    }
                    if is_prime_u64(c) {
                        out.push((c, 1));
                    } else {
                        let d = rho::split_u64(c, &mut rng);
                        stack.push(d);
                        stack.push(c / d);
                    }
                }
            }
        }
        normalize(out)
    }

    fn factor_big(&self, mut m: BigUint) -> Vec<(BigUint, u32)> {
        let mut out: Vec<(BigUint, u32)> = Vec::new();
        for &p in self.table.primes() {
            if let Some(small) = m.to_u64() {
                out.extend(
                    self.factor_u64(small)
                        .into_iter()
                        .filter(|&(q, _)| q >= p as u64)
                        .map(|(q, e)| (BigUint::from(q), e)),
                );
                return normalize(out);
            }
            let (q, r) = m.div_rem(&BigUint::from(p));
            if r.is_zero() {
                m = q;
                let mut e = 1;
                loop {
                    let (q, r) = m.div_rem(&BigUint::from(p));
                    if !r.is_zero() {
                        break;
                    }
                    m = q;
                    e += 1;
                }
                out.push((BigUint::from(p), e));
            }
        }
        let mut rng = self.rng();
        let mut stack = vec![m];
        while let Some(c) = stack.pop() {
            if c.is_one() {
                continue;
            }
            if let Some(small) = c.to_u64() {
                out.extend(
                    self.factor_u64(small)
                        .into_iter()
                        .map(|(q, e)| (BigUint::from(q), e)),
                );
            } else if is_prime_big(&c) {
                out.push((c, 1));
            } else if let Some((root, k)) = perfect_power(&c) {
                // rho would need ~sqrt(root) steps here
                for _ in 0..k {
                    stack.push(root.clone());
                }
            } else {
                let d = rho::split_big(&c, &mut rng);
                let other = &c / &d;
                stack.push(d);
                stack.push(other);
            }
        }
        normalize(out)
    }
}

/// Largest-exponent representation `c = root^k`, k >= 2, if one exists.
fn perfect_power(c: &BigUint) -> Option<(BigUint, u32)> {
    let bits = c.bits() as u32;
    (2..=bits).rev().find_map(|k| {
        let root = c.nth_root(k);
        (root > BigUint::one() && root.pow(k) == *c).then_some((root, k))
    })
}

fn normalize<T: Ord + Clone>(mut v: Vec<(T, u32)>) -> Vec<(T, u32)> {
    v.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(T, u32)> = Vec::with_capacity(v.len());
    for (p, e) in v {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += e,
            _ => out.push((p, e)),
        }
    }
    out
}

/// Process-wide factorizer with the default bound and seed.
pub fn default_factorizer() -> &'static Factorizer {
    static DEFAULT: OnceLock<Factorizer> = OnceLock::new();
    DEFAULT.get_or_init(Factorizer::default)
}

pub fn factor(n: &BigInt) -> Result<Factorization> {
    default_factorizer().factor(n)
}

/// Number of distinct prime divisors of |n|.
pub fn omega(n: &BigInt) -> Result<u32> {
    Ok(factor(n)?.omega())
}

/// Number of primes p with v_p(n) > 0 and a | v_p(n).
pub fn m_a(n: &BigInt, a: u32) -> Result<u32> {
    if a == 0 {
        return Err(Error::domain("m_a requires a >= 1"));
    }
    Ok(factor(n)?.m_a(a))
}

pub fn valuation(n: &BigInt, p: &BigUint) -> Result<u32> {
    if n.is_zero() {
        return Err(Error::domain("valuation of 0 is infinite"));
    }
    if !is_prime_big(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    let mut m = n.magnitude().clone();
    let mut e = 0;
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return Ok(e);
        }
        m = q;
        e += 1;
    }
}

/// sign(n) times the product of primes dividing n to an odd power.
pub fn squarefree_kernel(n: &BigInt) -> Result<BigInt> {
    Ok(factor(n)?.squarefree_kernel())
}

/// Horner evaluation; coefficients in ascending degree.
pub fn eval_poly(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    coeffs
        .iter()
        .rev()
        .fold(BigInt::zero(), |acc, c| acc * x + c)
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn pairs(f: &Factorization) -> Vec<(u64, u32)> {
        f.entries()
            .iter()
            .map(|(p, e)| (p.to_u64().unwrap(), *e))
            .collect()
    }

    #[test]
    fn factor_examples() {
        let f = factor(&big(12)).unwrap();
        assert_eq!(pairs(&f), vec![(2, 2), (3, 1)]);
        assert_eq!(f.sign(), 1);

        let unit = factor(&big(-1)).unwrap();
        assert!(unit.is_unit());
        assert_eq!(unit.sign(), -1);

        assert!(matches!(factor(&big(0)), Err(Error::Domain(_))));
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(&big(12)).unwrap(), 2);
        assert_eq!(omega(&big(1)).unwrap(), 0);
        assert_eq!(omega(&big(30030)).unwrap(), 6);
        assert_eq!(omega(&big(-30030)).unwrap(), 6);
    }

    #[test]
    fn m_a_examples() {
        assert_eq!(m_a(&big(72), 2).unwrap(), 1);
        assert_eq!(m_a(&big(8), 3).unwrap(), 1);
        assert_eq!(m_a(&big(360), 1).unwrap(), omega(&big(360)).unwrap());
        assert!(m_a(&big(0), 2).is_err());
    }

    #[test]
    fn valuation_examples() {
        let two = BigUint::from(2u32);
        assert_eq!(valuation(&big(12), &two).unwrap(), 2);
        assert_eq!(valuation(&big(12), &BigUint::from(5u32)).unwrap(), 0);
        let n = (BigInt::one() << 40) * 7;
        assert_eq!(valuation(&n, &two).unwrap(), 40);
        assert!(valuation(&big(12), &BigUint::from(4u32)).is_err());
    }

    #[test]
    fn squarefree_kernel_examples() {
        assert_eq!(squarefree_kernel(&big(12)).unwrap(), big(3));
        assert_eq!(squarefree_kernel(&big(18)).unwrap(), big(2));
        assert_eq!(squarefree_kernel(&big(-4)).unwrap(), big(-1));
    }

    #[test]
    fn eval_poly_examples() {
        let c = |v: &[i64]| v.iter().map(|&x| big(x)).collect::<Vec<_>>();
        assert_eq!(eval_poly(&c(&[0, 1]), &big(7)), big(7));
        assert_eq!(eval_poly(&c(&[1, 0, 1]), &big(3)), big(10));
        assert_eq!(eval_poly(&c(&[-2, 0, 0, 1]), &big(5)), big(123));
    }

    #[test]
    fn large_cofactors() {
        let p = BigInt::from(1_000_000_007u64);
        let q = BigInt::from(998_244_353u64);
        let r: BigInt = "170141183460469231731687303715884105727".parse().unwrap();
        let n = &p * &q * &r * &r;
        let f = factor(&n).unwrap();
        assert_eq!(f.reconstruct(), n);
        assert_eq!(f.entries().len(), 3);
        assert_eq!(f.valuation(r.magnitude()), 2);
    }

    #[test]
    fn seed_does_not_change_result() {
        let n = BigInt::from(1_000_003u64 * 999_983) * BigInt::from(4_294_967_311u64);
        let a = Factorizer::new(1000, 1).factor(&n).unwrap();
        let b = Factorizer::new(1000, 99).factor(&n).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn combine_adds_exponents() {
        let a = factor(&big(12)).unwrap();
        let b = factor(&big(-45)).unwrap();
        assert_eq!(a.combine(&b).reconstruct(), big(-540));
    }
}
