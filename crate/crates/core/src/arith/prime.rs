//! Prime tables and primality tests.
//!
//! `u64` inputs use a deterministic Miller-Rabin base set. Larger inputs run
//! Miller-Rabin on the first thirteen prime bases, which is deterministic
//! below 3.3e24, followed by a strong Lucas test (Baillie-PSW) above that.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Primes below a bound, sieved once and shared read-only.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    bound: u32,
    primes: Vec<u32>,
}

impl PrimeTable {
    pub fn new(bound: u32) -> Self {
        let limit = bound as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if composite[i] {
                continue;
            }
            primes.push(i as u32);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
        PrimeTable { bound, primes }
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Number of primes `<= x`, valid for `x <= bound`.
    pub fn pi(&self, x: u64) -> usize {
        debug_assert!(x <= self.bound as u64);
        self.primes.partition_point(|&p| (p as u64) <= x)
    }
}

const U64_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const BIG_BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &U64_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &U64_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn miller_rabin_big(n: &BigUint, base: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = base.modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

fn jacobi(a: &BigInt, n: &BigUint) -> i32 {
    let n = BigInt::from_biguint(Sign::Plus, n.clone());
    let mut a = a.mod_floor(&n);
    let mut n = n;
    let mut result = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn half_mod(x: BigInt, n: &BigInt) -> BigInt {
    let x = if x.is_odd() { x + n } else { x };
    let halved: BigInt = x >> 1;
    halved.mod_floor(n)
}

/// Strong Lucas probable-prime test with Selfridge parameters.
fn strong_lucas(n: &BigUint) -> bool {
    let sqrt = n.sqrt();
    if &sqrt * &sqrt == *n {
        return false;
    }
    let mut d = BigInt::from(5);
    loop {
        match jacobi(&d, n) {
            -1 => break,
            0 => {
                let g = d.magnitude().gcd(n);
                return g == *n;
            }
            _ => {
                d = if d.sign() == Sign::Plus {
                    -(d + BigInt::from(2))
                } else {
                    -d + BigInt::from(2)
                };
            }
        }
    }
    let modulus = BigInt::from_biguint(Sign::Plus, n.clone());
    let q: BigInt = (BigInt::one() - &d) / BigInt::from(4);
    let delta: BigInt = &modulus + 1;
    let s = delta.trailing_zeros().unwrap_or(0);
    let odd: BigInt = &delta >> s;

    // U_k, V_k, Q^k for k built from the bits of `odd` (P = 1).
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = odd.bits();
    for i in (0..bits).rev() {
        u = (&u * &v).mod_floor(&modulus);
        v = (&v * &v - &qk * BigInt::from(2)).mod_floor(&modulus);
        qk = (&qk * &qk).mod_floor(&modulus);
        if odd.bit(i) {
            let nu = half_mod(&u + &v, &modulus);
            let nv = half_mod(&d * &u + &v, &modulus);
            u = nu;
            v = nv;
            qk = (&qk * &q).mod_floor(&modulus);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - &qk * BigInt::from(2)).mod_floor(&modulus);
        if v.is_zero() {
            return true;
        }
        qk = (&qk * &qk).mod_floor(&modulus);
    }
    false
}

pub fn is_prime_big(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    for &b in &BIG_BASES {
        if (n % b).is_zero() {
            return false;
        }
    }
    for &b in &BIG_BASES {
        if !miller_rabin_big(n, &BigUint::from(b)) {
            return false;
        }
    }
    // 3.3e24 ~ 2^81.5: thirteen bases are a proof below this.
    if n.bits() <= 81 {
        return true;
    }
    strong_lucas(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_matches_trial_division() {
        let table = PrimeTable::new(2000);
        let naive: Vec<u32> = (2..=2000u32)
            .filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0))
            .collect();
        assert_eq!(table.primes(), naive.as_slice());
        assert_eq!(table.pi(2), 1);
        assert_eq!(table.pi(100), 25);
    }

    #[test]
    fn u64_primality_edge_cases() {
        assert!(!is_prime_u64(0));
        assert!(!is_prime_u64(1));
        assert!(is_prime_u64(2));
        // strong pseudoprime to bases 2..=23
        assert!(!is_prime_u64(3_825_123_056_546_413_051));
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert!(!is_prime_u64(561));
    }

    #[test]
    fn big_primality() {
        let p: BigUint = "170141183460469231731687303715884105727".parse().unwrap(); // 2^127 - 1
        assert!(is_prime_big(&p));
        let composite = &p * BigUint::from(18_446_744_073_709_551_557u64);
        assert!(!is_prime_big(&composite));
        // 2^89 - 1 is prime, above the Miller-Rabin proof range
        let m89 = (BigUint::one() << 89) - BigUint::one();
        assert!(is_prime_big(&m89));
        let sq = &m89 * &m89;
        assert!(!is_prime_big(&sq));
    }

    #[test]
    fn lucas_rejects_known_composites() {
        // Carmichael number and a product of two large primes
        assert!(!strong_lucas(&BigUint::from(561u32)));
        let n = BigUint::from(1_000_000_007u64) * BigUint::from(998_244_353u64);
        assert!(!strong_lucas(&n));
        assert!(strong_lucas(&BigUint::from(1_000_000_007u64)));
    }
}
