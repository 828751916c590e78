//! Dense univariate polynomials over Z.
//!
//! Coefficients are stored in ascending degree with no trailing zeros; the
//! zero polynomial has no coefficients.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{self, Factorization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPoly(Vec<BigInt>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn constant(c: BigInt) -> Self {
        IntPoly::new(vec![c])
    }

    /// The polynomial `T`.
    pub fn x() -> Self {
        IntPoly::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn deg(&self) -> usize {
        self.degree().expect("degree of zero polynomial")
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.0.last()
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        arith::eval_poly(&self.0, x)
    }

    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.leading().is_some_and(|l| l.is_negative()) {
            c = -c;
        }
        IntPoly(self.0.iter().map(|a| a / &c).collect())
    }

    pub fn neg(&self) -> IntPoly {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(self.0.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::default();
        }
        let mut out = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let len = self.0.len().max(other.0.len());
        let zero = BigInt::zero();
        IntPoly::new(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&zero) - other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn derivative(&self) -> IntPoly {
        IntPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// Pseudo-remainder: `lc(b)^(deg a - deg b + 1) * a mod b`.
    pub fn pseudo_rem(&self, b: &IntPoly) -> IntPoly {
        let db = b.deg();
        let lb = b.leading().unwrap().clone();
        let mut r = self.clone();
        if r.is_zero() || r.deg() < db {
            return r;
        }
        let delta = r.deg() - db;
        let mut steps = 0;
        while !r.is_zero() && r.deg() >= db {
            let shift = r.deg() - db;
            let lr = r.leading().unwrap().clone();
            let mut next: Vec<BigInt> = r.0.iter().map(|c| c * &lb).collect();
            for (j, c) in b.0.iter().enumerate() {
                next[j + shift] -= &lr * c;
            }
            r = IntPoly::new(next);
            steps += 1;
        }
        let missing = delta + 1 - steps;
        if missing > 0 {
            r = r.scale(&num_traits::pow(lb, missing));
        }
        r
    }

    /// Exact quotient over Z; fails if `d` does not divide `self` in Z[T].
    pub fn div_exact(&self, d: &IntPoly) -> Option<IntPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::default());
        }
        let dd = d.deg();
        let ld = d.leading().unwrap();
        let mut r = self.0.clone();
        if r.len() < d.0.len() {
            return None;
        }
        let mut q = vec![BigInt::zero(); r.len() - dd];
        for shift in (0..q.len()).rev() {
            let top = &r[shift + dd];
            let (coef, rem) = top.div_rem(ld);
            if !rem.is_zero() {
                return None;
            }
            for (j, c) in d.0.iter().enumerate() {
                r[shift + j] -= &coef * c;
            }
            q[shift] = coef;
        }
        if r.iter().all(|c| c.is_zero()) {
            Some(IntPoly::new(q))
        } else {
            None
        }
    }

    /// Greatest common divisor over Q, returned primitive with positive
    /// leading coefficient.
    pub fn gcd_q(&self, other: &IntPoly) -> IntPoly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if a.deg() < b.deg() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            if b.deg() == 0 {
                return IntPoly::from_i64(&[1]);
            }
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        a
    }

    pub fn is_squarefree(&self) -> bool {
        self.degree().is_some_and(|d| d >= 1) && self.gcd_q(&self.derivative()).deg() == 0
    }

    /// Resultant via the subresultant PRS.
    pub fn resultant(&self, other: &IntPoly) -> BigInt {
        if self.is_zero() || other.is_zero() {
            return BigInt::zero();
        }
        let mut a = self.clone();
        let mut b = other.clone();
        let mut sign = BigInt::one();
        if a.deg() < b.deg() {
            std::mem::swap(&mut a, &mut b);
            if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
                sign = -sign;
            }
        }
        let ca = a.content();
        let cb = b.content();
        let t = num_traits::pow(ca.clone(), b.deg()) * num_traits::pow(cb.clone(), a.deg());
        a = IntPoly(a.0.iter().map(|c| c / &ca).collect());
        b = IntPoly(b.0.iter().map(|c| c / &cb).collect());
        let mut g = BigInt::one();
        let mut h = BigInt::one();
        while b.deg() > 0 {
            let delta = a.deg() - b.deg();
            if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
                sign = -sign;
            }
            let r = a.pseudo_rem(&b);
            a = b;
            let divisor = &g * num_traits::pow(h.clone(), delta);
            b = IntPoly::new(r.0.iter().map(|c| c / &divisor).collect());
            if b.is_zero() {
                return BigInt::zero();
            }
            g = a.leading().unwrap().clone();
            // h <- g^delta / h^(delta - 1)
            h = if delta == 0 {
                h
            } else {
                num_traits::pow(g.clone(), delta) / num_traits::pow(h.clone(), delta - 1)
            };
        }
        let da = a.deg();
        let lb = b.leading().unwrap().clone();
        let h_final = if da == 0 {
            h
        } else {
            num_traits::pow(lb, da) / num_traits::pow(h, da - 1)
        };
        sign * t * h_final
    }

    /// disc(P) = (-1)^(d(d-1)/2) Res(P, P') / lc(P).
    pub fn discriminant(&self) -> BigInt {
        let d = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return BigInt::zero(),
        };
        if d == 1 {
            return BigInt::one();
        }
        let r = self.resultant(&self.derivative());
        let q = r / self.leading().unwrap();
        if (d * (d - 1) / 2) % 2 == 1 {
            -q
        } else {
            q
        }
    }

    /// All rational roots `num/den` (den > 0, reduced).
    pub fn rational_roots(&self) -> Result<Vec<(BigInt, BigInt)>> {
        let mut roots = Vec::new();
        if self.is_zero() {
            return Err(Error::domain("rational roots of the zero polynomial"));
        }
        let mut p = self.clone();
        while p.0.first().is_some_and(|c| c.is_zero()) {
            if !roots.iter().any(|(n, _): &(BigInt, BigInt)| n.is_zero()) {
                roots.push((BigInt::zero(), BigInt::one()));
            }
            p = IntPoly::new(p.0[1..].to_vec());
        }
        if p.deg() == 0 {
            return Ok(roots);
        }
        let nums = divisors(&arith::factor(&p.0[0])?);
        let dens = divisors(&arith::factor(p.leading().unwrap())?);
        for d in &dens {
            for n in &nums {
                for num in [n.clone(), -n.clone()] {
                    if !num.gcd(d).is_one() {
                        continue;
                    }
                    if p.eval_rational(&num, d).is_zero() {
                        roots.push((num, d.clone()));
                    }
                }
            }
        }
        roots.sort();
        Ok(roots)
    }

    /// `den^deg * P(num/den)`.
    fn eval_rational(&self, num: &BigInt, den: &BigInt) -> BigInt {
        let d = self.deg();
        let mut acc = BigInt::zero();
        let mut den_pow = BigInt::one();
        let mut num_pows = vec![BigInt::one(); d + 1];
        for i in 1..=d {
            num_pows[i] = &num_pows[i - 1] * num;
        }
        for i in (0..=d).rev() {
            acc += &self.0[i] * &num_pows[i] * &den_pow;
            den_pow *= den;
        }
        acc
    }

    /// Rabin's test: is P irreducible over F_q (q prime, q not dividing lc)?
    pub fn is_irreducible_mod(&self, q: u64) -> bool {
        let Some(f) = ModPoly::reduce(self, q) else {
            return false;
        };
        if f.deg() != self.deg() {
            return false;
        }
        let f = f.monic();
        let d = f.deg();
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let x = ModPoly::x(q);
        // x^(q^k) mod f for k = 1..=d
        let mut frob = vec![x.clone()];
        for _ in 0..d {
            let next = frob.last().unwrap().pow_mod(q, &f);
            frob.push(next);
        }
        if frob[d].sub(&x).rem(&f).deg_opt().is_some() {
            return false;
        }
        let fac = arith::default_factorizer()
            .factor(&BigInt::from(d))
            .expect("d >= 2");
        for (r, _) in fac.entries() {
            let k = d / r.to_usize().unwrap();
            let g = frob[k].sub(&x).gcd(&f);
            if g.deg() > 0 {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let mag = c.magnitude();
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if i == 1 {
                        write!(f, "T")?;
                    } else {
                        write!(f, "T^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Positive divisors of |n| from its factorization.
pub(crate) fn divisors(f: &Factorization) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for (p, e) in f.entries() {
        let p = BigInt::from_biguint(Sign::Plus, p.clone());
        let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
        for d in &out {
            let mut pk = d.clone();
            next.push(pk.clone());
            for _ in 0..*e {
                pk *= &p;
                next.push(pk.clone());
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// Largest prime dividing `n`, or `None` for 0 and ±1.
pub(crate) fn largest_prime_factor(n: &BigInt) -> Result<Option<BigUint>> {
    if n.is_zero() {
        return Ok(None);
    }
    Ok(arith::factor(n)?.largest_prime().cloned())
}

/// Polynomial over F_q, q < 2^32.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ModPoly {
    q: u64,
    c: Vec<u64>,
}

impl ModPoly {
    fn reduce(p: &IntPoly, q: u64) -> Option<ModPoly> {
        let qb = BigInt::from(q);
        let c = p
            .coeffs()
            .iter()
            .map(|a| a.mod_floor(&qb).to_u64().unwrap())
            .collect();
        let m = ModPoly { q, c }.trim();
        if m.c.is_empty() {
            None
        } else {
            Some(m)
        }
    }

    fn x(q: u64) -> ModPoly {
        ModPoly { q, c: vec![0, 1] }
    }

    fn trim(mut self) -> Self {
        while self.c.last() == Some(&0) {
            self.c.pop();
        }
        self
    }

    fn deg_opt(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    fn deg(&self) -> usize {
        self.deg_opt().unwrap_or(0)
    }

    fn inv(&self, a: u64) -> u64 {
        // Fermat; q is prime
        let mut acc = 1u64;
        let mut base = a % self.q;
        let mut e = self.q - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % self.q;
            }
            base = base * base % self.q;
            e >>= 1;
        }
        acc
    }

    fn monic(&self) -> ModPoly {
        let inv = self.inv(*self.c.last().unwrap());
        ModPoly {
            q: self.q,
            c: self.c.iter().map(|a| a * inv % self.q).collect(),
        }
    }

    fn sub(&self, other: &ModPoly) -> ModPoly {
        let len = self.c.len().max(other.c.len());
        let c = (0..len)
            .map(|i| {
                let a = self.c.get(i).copied().unwrap_or(0);
                let b = other.c.get(i).copied().unwrap_or(0);
                (a + self.q - b) % self.q
            })
            .collect();
        ModPoly { q: self.q, c }.trim()
    }

    fn mul(&self, other: &ModPoly) -> ModPoly {
        if self.c.is_empty() || other.c.is_empty() {
            return ModPoly { q: self.q, c: vec![] };
        }
        let mut c = vec![0u64; self.c.len() + other.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in other.c.iter().enumerate() {
                c[i + j] = (c[i + j] + a * b) % self.q;
            }
        }
        ModPoly { q: self.q, c }.trim()
    }

    fn rem(&self, m: &ModPoly) -> ModPoly {
        let mut r = self.c.clone();
        let dm = m.deg();
        let inv = self.inv(*m.c.last().unwrap());
        while r.len() > dm && !r.is_empty() {
            let top = r.len() - 1;
            let coef = r[top] * inv % self.q;
            if coef != 0 {
                for (j, b) in m.c.iter().enumerate() {
                    let idx = top - dm + j;
                    r[idx] = (r[idx] + self.q - coef * b % self.q) % self.q;
                }
            }
            r.pop();
            while r.last() == Some(&0) {
                r.pop();
            }
        }
        ModPoly { q: self.q, c: r }.trim()
    }

    fn pow_mod(&self, mut e: u64, m: &ModPoly) -> ModPoly {
        let mut acc = ModPoly { q: self.q, c: vec![1] };
        let mut base = self.rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    fn gcd(&self, other: &ModPoly) -> ModPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.c.is_empty() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }
}
