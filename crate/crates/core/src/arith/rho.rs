//! Brent's variant of Pollard rho, for `u64` and arbitrary-size composites.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::prime::mul_mod;

const BATCH: u64 = 128;

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns a nontrivial divisor of the odd composite `n`.
pub(crate) fn split_u64(n: u64, rng: &mut ChaCha8Rng) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    loop {
        let c = rng.gen_range(1..n);
        let mut y = rng.gen_range(0..n);
        let step = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut g = 1;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = step(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = step(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            // batch overshot; walk one step at a time from the saved point
            loop {
                ys = step(ys);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
}

fn abs_diff_big(a: &BigUint, b: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

pub(crate) fn split_big(n: &BigUint, rng: &mut ChaCha8Rng) -> BigUint {
    if n.is_even() {
        return BigUint::from(2u32);
    }
    let one = BigUint::one();
    loop {
        let c = rng.gen_biguint_range(&one, n);
        let mut y = rng.gen_biguint_below(n);
        let step = |x: &BigUint| (x * x + &c) % n;
        let mut g = one.clone();
        let mut r = 1u64;
        let mut q = one.clone();
        let mut x = y.clone();
        let mut ys = y.clone();
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = step(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..BATCH.min(r - k) {
                    y = step(&y);
                    q = (q * abs_diff_big(&x, &y)) % n;
                }
                g = q.gcd(n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == *n {
            loop {
                ys = step(&ys);
                g = abs_diff_big(&x, &ys).gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if g != *n && !g.is_zero() {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn splits_semiprimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_003u64 * 999_983;
        let d = split_u64(n, &mut rng);
        assert!(d == 1_000_003 || d == 999_983);

        let big = BigUint::from(4_294_967_311u64) * BigUint::from(18_446_744_073_709_551_557u64);
        let d = split_big(&big, &mut rng);
        assert!(d > BigUint::one() && d < big && (&big % &d).is_zero());
    }
}
