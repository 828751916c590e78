//! Branch data of a Galois cover E/Q(T): one integer polynomial and one
//! ramification index per Galois orbit of finite branch points, their
//! product P_E, and the threshold p0 above which the valuation criterion
//! for ramified primes is exact.
//!
//! Inputs always describe the Galois closure; for a non-Galois extension
//! pass the branch data of its Galois closure, which has the same ramified
//! primes at every specialization. The branch point at infinity is never an
//! orbit.

mod json;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{largest_prime_factor, IntPoly};

pub use json::{CoverSpecJson, FamilyJson, JsonInt, OrbitJson, QuadraticJson};

/// Primes tried when searching for a mod-q irreducibility certificate.
const CERTIFICATE_PRIME_LIMIT: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Irreducibility {
    Certified,
    Unverified,
}

/// One Galois orbit of finite branch points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchOrbit {
    poly: IntPoly,
    ram_index: u32,
    irreducibility: Irreducibility,
}

impl BranchOrbit {
    /// Validates and normalizes one orbit; `index` is only used in errors.
    fn new(index: usize, poly: IntPoly, ram_index: u32) -> Result<Self> {
        if ram_index < 2 {
            return Err(Error::domain(format!(
                "orbit {index}: ramification index {ram_index} < 2"
            )));
        }
        let invalid = |reason: &str| Error::InvalidOrbit {
            index,
            reason: reason.to_string(),
        };
        match poly.degree() {
            None | Some(0) => return Err(invalid("polynomial must be nonconstant")),
            _ => {}
        }
        if !poly.is_squarefree() {
            return Err(invalid("polynomial is not squarefree"));
        }
        let poly = if poly.leading().is_some_and(|l| l.is_negative()) {
            poly.neg()
        } else {
            poly
        };
        let irreducibility = certify(&poly).map_err(|r| invalid(&r))?;
        Ok(BranchOrbit {
            poly,
            ram_index,
            irreducibility,
        })
    }

    pub fn poly(&self) -> &IntPoly {
        &self.poly
    }

    pub fn ram_index(&self) -> u32 {
        self.ram_index
    }

    /// b_i, always positive.
    pub fn leading_coeff(&self) -> &BigInt {
        self.poly.leading().expect("orbit polynomial is nonconstant")
    }

    pub fn irreducibility(&self) -> Irreducibility {
        self.irreducibility
    }
}

/// Degree <= 3: no rational root. Higher degree: irreducible modulo some
/// small prime not dividing the leading coefficient.
fn certify(poly: &IntPoly) -> std::result::Result<Irreducibility, String> {
    let deg = poly.degree().unwrap_or(0);
    if deg == 1 {
        return Ok(Irreducibility::Certified);
    }
    let roots = poly.rational_roots().map_err(|e| e.to_string())?;
    if !roots.is_empty() {
        return Err(format!("reducible over Q: {poly} has a rational root"));
    }
    if deg <= 3 {
        return Ok(Irreducibility::Certified);
    }
    let lc = poly.leading().unwrap();
    let certified = (2..=CERTIFICATE_PRIME_LIMIT)
        .filter(|&q| crate::arith::is_prime_u64(q))
        .filter(|&q| !(lc % BigInt::from(q)).is_zero())
        .any(|q| poly.is_irreducible_mod(q));
    Ok(if certified {
        Irreducibility::Certified
    } else {
        Irreducibility::Unverified
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Generic,
    /// E = Q(T, sqrt(f(T))).
    Quadratic { f: IntPoly },
}

/// Immutable branch data of a cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSpec {
    orbits: Vec<BranchOrbit>,
    p0: BigUint,
    family: Family,
    group_order: Option<u64>,
    disc_poly: Option<IntPoly>,
    product: IntPoly,
}

impl CoverSpec {
    pub fn orbits(&self) -> &[BranchOrbit] {
        &self.orbits
    }

    /// Number of branch orbits.
    pub fn r(&self) -> usize {
        self.orbits.len()
    }

    pub fn p0(&self) -> &BigUint {
        &self.p0
    }

    /// p0 as a machine integer, when it fits.
    pub fn p0_u64(&self) -> Option<u64> {
        self.p0.to_u64()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn quadratic_f(&self) -> Option<&IntPoly> {
        match &self.family {
            Family::Quadratic { f } => Some(f),
            Family::Generic => None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.family, Family::Quadratic { .. })
    }

    pub fn group_order(&self) -> Option<u64> {
        self.group_order
    }

    pub fn disc_poly(&self) -> Option<&IntPoly> {
        self.disc_poly.as_ref()
    }

    /// P_E = product of the orbit polynomials.
    pub fn product_poly(&self) -> &IntPoly {
        &self.product
    }

    pub fn all_certified(&self) -> bool {
        self.orbits
            .iter()
            .all(|o| o.irreducibility == Irreducibility::Certified)
    }

    pub fn with_disc_poly(mut self, disc: IntPoly) -> Result<Self> {
        if disc.is_zero() {
            return Err(Error::domain("discriminant polynomial must be nonzero"));
        }
        self.disc_poly = Some(disc);
        Ok(self)
    }

    pub fn with_group_order(mut self, order: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("group order must be positive"));
        }
        self.group_order = Some(order);
        Ok(self)
    }

    /// Whether P_E(n) = 0.
    pub fn is_branch_point(&self, n: &BigInt) -> bool {
        self.orbits.iter().any(|o| o.poly.eval(n).is_zero())
    }
}

/// Builds a generic cover from `(P_i, e_i)` pairs.
pub fn make_cover(orbits: Vec<(IntPoly, u32)>) -> Result<CoverSpec> {
    if orbits.is_empty() {
        return Err(Error::domain(
            "a cover that is not trivial over the algebraic closure has at least one branch orbit",
        ));
    }
    let orbits = orbits
        .into_iter()
        .enumerate()
        .map(|(i, (poly, e))| BranchOrbit::new(i, poly, e))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            if orbits[i].poly.resultant(&orbits[j].poly).is_zero() {
                return Err(Error::OrbitCollision {
                    first: i,
                    second: j,
                });
            }
        }
    }
    let product = orbits
        .iter()
        .fold(IntPoly::from_i64(&[1]), |acc, o| acc.mul(&o.poly));
    let p0 = p0_bound(&orbits);
    Ok(CoverSpec {
        orbits,
        p0,
        family: Family::Generic,
        group_order: None,
        disc_poly: None,
        product,
    })
}

/// Good-prime threshold: the largest prime dividing some b_i, some
/// disc(P_i) or some Res(P_i, P_j), and at least max e_i and 2.
pub fn p0_bound(orbits: &[BranchOrbit]) -> BigUint {
    let mut p0 = BigUint::from(2u32);
    let mut bump = |value: &BigInt| {
        if let Some(p) = largest_prime_factor(value).expect("nonzero value") {
            if p > p0 {
                p0 = p;
            }
        }
    };
    for (i, orbit) in orbits.iter().enumerate() {
        bump(orbit.leading_coeff());
        bump(&orbit.poly.discriminant());
        for other in &orbits[i + 1..] {
            bump(&orbit.poly.resultant(&other.poly));
        }
    }
    let max_e = orbits.iter().map(|o| o.ram_index).max().unwrap_or(2);
    p0.max(BigUint::from(max_e))
}

/// Quadratic cover Q(T, sqrt(f)): rational roots of f become linear orbits;
/// the remaining cofactor must be certified irreducible.
pub fn make_quadratic_cover(f: IntPoly) -> Result<CoverSpec> {
    validate_quadratic_f(&f)?;
    let mut factors = Vec::new();
    let mut rest = f.primitive_part();
    for (num, den) in f.rational_roots()? {
        let linear = IntPoly::new(vec![-num, den]);
        rest = rest
            .div_exact(&linear)
            .ok_or_else(|| Error::domain("rational root did not divide f"))?;
        factors.push(linear);
    }
    if rest.degree().is_some_and(|d| d >= 1) {
        match certify(&rest) {
            Ok(Irreducibility::Certified) => factors.push(rest.primitive_part()),
            _ => return Err(Error::FactorizationFailed(f.to_string())),
        }
    }
    make_quadratic_cover_with_factors(f, factors)
}

/// Quadratic cover with explicitly supplied irreducible factors of f.
pub fn make_quadratic_cover_with_factors(f: IntPoly, factors: Vec<IntPoly>) -> Result<CoverSpec> {
    validate_quadratic_f(&f)?;
    let product = factors
        .iter()
        .fold(IntPoly::from_i64(&[1]), |acc, g| acc.mul(g));
    let lf = f.leading().unwrap().clone();
    let lp = product
        .leading()
        .cloned()
        .ok_or_else(|| Error::domain("empty factor"))?;
    if f.scale(&lp) != product.scale(&lf) {
        return Err(Error::domain(format!(
            "factors do not multiply to f = {f} up to a constant"
        )));
    }
    let mut spec = make_cover(factors.into_iter().map(|g| (g, 2)).collect())?;
    // f = c * P_E with c = lc(f) / lc(P_E); primes of c ramify independently
    // of the orbits, so they sit below p0.
    if let Some(p) = largest_prime_factor(&lf)? {
        if p > spec.p0 {
            spec.p0 = p;
        }
    }
    spec.disc_poly = Some(f.scale(&BigInt::from(4)));
    spec.family = Family::Quadratic { f };
    Ok(spec)
}

fn validate_quadratic_f(f: &IntPoly) -> Result<()> {
    if f.degree().is_none_or(|d| d == 0) {
        return Err(Error::domain("f must be nonconstant"));
    }
    if !f.is_squarefree() {
        return Err(Error::domain(format!("f = {f} is not squarefree")));
    }
    Ok(())
}

/// Product of the orbit polynomials of `spec`.
pub fn product_poly(spec: &CoverSpec) -> IntPoly {
    spec.product.clone()
}

pub fn is_branch_point(spec: &CoverSpec, n: &BigInt) -> bool {
    spec.is_branch_point(n)
}

impl CoverSpec {
    /// Returns `(lc(f) / lc(P_E))` for a quadratic family, as a reduced
    /// fraction with positive denominator.
    pub fn quadratic_constant(&self) -> Option<(BigInt, BigInt)> {
        let f = self.quadratic_f()?;
        let num = f.leading()?.clone();
        let den = self.product.leading()?.clone();
        let g = num_integer::Integer::gcd(&num, &den);
        if g.is_one() {
            Some((num, den))
        } else {
            Some((num / &g, den / g))
        }
    }
}
