//! Invariant suites for every module, run at n <= 10^4 scale.
//!
//! The report is a pure function of the seed and the mutation, so two runs
//! print the same text. A mutation deliberately breaks one component to
//! show that the suite notices.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use ramstat_core::arith::{self, is_perfect_square, Factorization, Factorizer};
use ramstat_core::cover::{
    make_cover, make_quadratic_cover, make_quadratic_cover_with_factors, CoverSpec,
};
use ramstat_core::poly::IntPoly;
use ramstat_core::ramify::{
    ram_oracle_quadratic_with, CountingMode, QuadraticVerdict, RamEngine, SmallPrimePolicy,
};
use ramstat_core::stats::{
    self, gaussian_moment, normal_cdf, MomentAccumulator, NormalOrderTally, ValueHistogram,
};
use ramstat_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiments::small_prime_count;
use crate::sweep::{chunk_ranges, sweep, SweepPlan};

pub const DEFAULT_SCALE: u64 = 10_000;

/// Deliberate faults for checking that the suite detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// The quadratic oracle forgets odd primes that are 3 mod 4.
    OracleDrop3Mod4,
    /// normal_cdf shifted by 1e-6.
    CdfSkew,
}

impl Mutation {
    pub const ALL: [Mutation; 2] = [Mutation::OracleDrop3Mod4, Mutation::CdfSkew];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mutation::OracleDrop3Mod4 => "oracle-drop-3mod4",
            Mutation::CdfSkew => "cdf-skew",
        }
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mutation::ALL.iter().map(|m| m.as_str()).collect();
                format!(
                    "unknown mutation {s:?}; expected one of: {}",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub seed: u64,
    pub scale: u64,
    pub mutation: Option<Mutation>,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            seed: arith::DEFAULT_SEED,
            scale: DEFAULT_SCALE,
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub module: &'static str,
    pub invariant: &'static str,
    pub cases: u64,
    /// First counterexample, if any.
    pub witness: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestReport {
    pub seed: u64,
    pub scale: u64,
    pub mutation: Option<Mutation>,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "selftest seed={} scale={} mutation={}",
            self.seed,
            self.scale,
            self.mutation.map_or("none", |m| m.as_str())
        )?;
        for c in &self.checks {
            match &c.witness {
                None => writeln!(
                    f,
                    "PASS {:<8} {} ({} cases)",
                    c.module, c.invariant, c.cases
                )?,
                Some(w) => writeln!(f, "FAIL {:<8} {} witness: {}", c.module, c.invariant, w)?,
            }
        }
        let failed = self.failures().count();
        writeln!(
            f,
            "{}: {} checks, {} failed",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed
        )
    }
}

/// Collects one check: counts cases and keeps the first witness.
struct Probe {
    module: &'static str,
    invariant: &'static str,
    cases: u64,
    witness: Option<String>,
}

impl Probe {
    fn new(module: &'static str, invariant: &'static str) -> Self {
        Probe {
            module,
            invariant,
            cases: 0,
            witness: None,
        }
    }

    fn expect(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn fail(&mut self, witness: String) {
        self.expect(false, || witness);
    }

    fn done(self) -> Check {
        Check {
            module: self.module,
            invariant: self.invariant,
            cases: self.cases,
            witness: self.witness,
        }
    }
}

struct Ctx {
    opts: SelftestOptions,
    rng: ChaCha8Rng,
    factorizer: Factorizer,
    checks: Vec<Check>,
}

impl Ctx {
    fn record(&mut self, probe: Probe) {
        self.checks.push(probe.done());
    }

    fn cdf(&self, a: f64) -> f64 {
        match self.opts.mutation {
            Some(Mutation::CdfSkew) => normal_cdf(a) + 1e-6,
            _ => normal_cdf(a),
        }
    }

    fn oracle(&self, f: &IntPoly, n: u64) -> Result<QuadraticVerdict> {
        let mut verdict = ram_oracle_quadratic_with(f, n, &self.factorizer)?;
        if self.opts.mutation == Some(Mutation::OracleDrop3Mod4) {
            verdict
                .ramified_primes
                .retain(|p| p == &BigUint::from(2u32) || (p % 4u32) != BigUint::from(3u32));
            verdict.ram = verdict.ramified_primes.len() as u32;
        }
        Ok(verdict)
    }
}

fn poly(c: &[i64]) -> IntPoly {
    IntPoly::from_i64(c)
}

fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn as_u64_pairs(f: &Factorization) -> Vec<(u64, u32)> {
    f.entries()
        .iter()
        .map(|(p, e)| (p.to_u64().unwrap_or(u64::MAX), *e))
        .collect()
}

fn arith_suite(ctx: &mut Ctx) -> Result<()> {
    let samples: Vec<BigInt> = (0..ctx.opts.scale)
        .map(|i| {
            let v: i64 = ctx.rng.gen_range(2..=1_000_000_000_000);
            BigInt::from(if i % 5 == 0 { -v } else { v })
        })
        .collect();

    let mut recon = Probe::new("arith", "reconstruction");
    let mut m1 = Probe::new("arith", "m1_equals_omega");
    let mut kernel = Probe::new("arith", "squarefree_kernel");
    let mut m_a = Probe::new("arith", "m_a_bounds");
    let mut log_bound = Probe::new("arith", "omega_log2_bound");
    for n in &samples {
        let f = ctx.factorizer.factor(n)?;
        let sorted = f.entries().windows(2).all(|w| w[0].0 < w[1].0);
        let primes_ok = f
            .entries()
            .iter()
            .all(|(p, e)| *e >= 1 && arith::is_prime_big(p));
        recon.expect(f.reconstruct() == *n && sorted && primes_ok, || {
            format!("n={n}")
        });
        m1.expect(f.m_a(1) == f.omega(), || format!("n={n}"));

        let k = f.squarefree_kernel();
        let kf = ctx.factorizer.factor(&k)?;
        let quotient = n / &k;
        kernel.expect(
            (n % &k).is_zero()
                && is_perfect_square(&quotient)
                && kf.entries().iter().all(|(_, e)| *e == 1),
            || format!("n={n}"),
        );

        let neg = ctx.factorizer.factor(&-n)?;
        for a in 2..=4 {
            m_a.expect(f.m_a(a) <= f.omega() && f.m_a(a) == neg.m_a(a), || {
                format!("n={n} a={a}")
            });
        }
        let bits = n.abs().bits() as u32;
        log_bound.expect(f.omega() < bits.max(1), || format!("n={n}"));
    }
    for p in [2u64, 3, 5, 7, 101, 65_537] {
        for a in 1..=5u32 {
            let pa = BigInt::from(p).pow(a);
            m_a.expect(ctx.factorizer.factor(&pa)?.m_a(a) == 1, || {
                format!("p={p} a={a}")
            });
        }
    }
    ctx.record(recon);
    ctx.record(m1);
    ctx.record(kernel);
    ctx.record(m_a);
    ctx.record(log_bound);

    let mut agree = Probe::new("arith", "trial_division_agreement");
    for n in 1..=ctx.opts.scale {
        let f = ctx.factorizer.factor(&BigInt::from(n))?;
        agree.expect(as_u64_pairs(&f) == trial_division(n), || format!("n={n}"));
    }
    ctx.record(agree);
    Ok(())
}

fn small_specs() -> Result<Vec<(&'static str, CoverSpec)>> {
    Ok(vec![
        (
            "{T, T^2+1}",
            make_cover(vec![(poly(&[0, 1]), 2), (poly(&[1, 0, 1]), 2)])?,
        ),
        (
            "{T-1, T+1}",
            make_cover(vec![(poly(&[-1, 1]), 2), (poly(&[1, 1]), 3)])?,
        ),
        (
            "{T^2-2, T^2+T+1}",
            make_cover(vec![(poly(&[-2, 0, 1]), 2), (poly(&[1, 1, 1]), 3)])?,
        ),
        (
            "{T^3-2, 3T+1}",
            make_cover(vec![(poly(&[-2, 0, 0, 1]), 3), (poly(&[1, 3]), 2)])?,
        ),
    ])
}

fn cover_suite(ctx: &mut Ctx) -> Result<()> {
    let mut p0 = Probe::new("cover", "p0_covers_shared_roots_mod_p");
    let mut product = Probe::new("cover", "product_degree_and_leading");
    let mut coprime = Probe::new("cover", "orbits_pairwise_coprime");
    for (name, spec) in small_specs()? {
        let orbits = spec.orbits();
        for q in (2..=1000u64).filter(|&q| arith::is_prime_u64(q)) {
            let qb = BigInt::from(q);
            for i in 0..orbits.len() {
                for j in i + 1..orbits.len() {
                    let shared = (0..q).any(|x| {
                        let x = BigInt::from(x);
                        (orbits[i].poly().eval(&x) % &qb).is_zero()
                            && (orbits[j].poly().eval(&x) % &qb).is_zero()
                    });
                    p0.expect(!shared || BigUint::from(q) <= *spec.p0(), || {
                        format!("spec={name} p={q} p0={}", spec.p0())
                    });
                }
            }
        }
        let deg_sum: usize = orbits.iter().map(|o| o.poly().degree().unwrap_or(0)).sum();
        let lc: BigInt = orbits.iter().map(|o| o.leading_coeff().clone()).product();
        let pe = spec.product_poly();
        product.expect(
            pe.degree() == Some(deg_sum) && pe.leading() == Some(&lc) && lc.is_positive(),
            || format!("spec={name}"),
        );
        for i in 0..orbits.len() {
            for j in i + 1..orbits.len() {
                let g = orbits[i].poly().gcd_q(orbits[j].poly());
                coprime.expect(g.degree() == Some(0), || format!("spec={name} i={i} j={j}"));
            }
        }
    }
    ctx.record(p0);
    ctx.record(product);
    ctx.record(coprime);
    Ok(())
}

fn quadratic_specs() -> Result<Vec<(&'static str, CoverSpec)>> {
    Ok(vec![
        ("f=T", make_quadratic_cover(poly(&[0, 1]))?),
        ("f=T^2+1", make_quadratic_cover(poly(&[1, 0, 1]))?),
        (
            "f=T(T^2+1)",
            make_quadratic_cover_with_factors(
                poly(&[0, 1, 0, 1]),
                vec![poly(&[0, 1]), poly(&[1, 0, 1])],
            )?,
        ),
    ])
}

fn ramify_suite(ctx: &mut Ctx) -> Result<()> {
    let mut equiv = Probe::new("ramify", "criterion_matches_oracle");
    let mut lemma5 = Probe::new("ramify", "lemma5_defect_bound");
    let mut superset = Probe::new("ramify", "superset_dominates");
    let mut sanity = Probe::new("ramify", "criterion_upper_sanity");
    let mut correction = Probe::new("ramify", "correction_at_most_omega_plus_r");
    for (name, spec) in quadratic_specs()? {
        let f = spec.quadratic_f().expect("quadratic").clone();
        let spec = spec.with_disc_poly(f.scale(&BigInt::from(4)))?;
        let engine = RamEngine::with_factorizer(&spec, ctx.factorizer.clone());
        let pi_p0 = small_prime_count(&spec).unwrap_or(0) as i64;
        for n in 1..=ctx.opts.scale {
            let Some(special) = engine.specialize(n)? else {
                continue;
            };
            let crit = engine.evaluate_specialized(
                n,
                Some(&special),
                CountingMode::Criterion,
                SmallPrimePolicy::Oracle,
            )?;
            let oracle = ctx.oracle(&f, n)?;
            if !oracle.degenerate {
                equiv.expect(crit.ram == oracle.ram as i64, || {
                    format!(
                        "spec={name} n={n} criterion={} oracle={}",
                        crit.ram, oracle.ram
                    )
                });
            }
            let defect = oracle.ram as i64 - crit.omega_pe as i64 + crit.correction as i64;
            lemma5.expect(defect.abs() <= 1 + pi_p0, || {
                format!("spec={name} n={n} defect={defect}")
            });
            let upper = engine.ram_upper_via_disc(n)? as i64;
            superset.expect(upper >= oracle.ram as i64, || {
                format!("spec={name} n={n} upper={upper} oracle={}", oracle.ram)
            });
            sanity.expect(crit.ram <= crit.omega_pe as i64 + pi_p0, || {
                format!("spec={name} n={n}")
            });
            correction.expect(
                crit.correction as u64 <= crit.omega_pe as u64 + spec.r() as u64,
                || format!("spec={name} n={n}"),
            );
        }
    }
    ctx.record(equiv);
    ctx.record(lemma5);
    ctx.record(superset);
    ctx.record(sanity);
    ctx.record(correction);
    Ok(())
}

fn stats_suite(ctx: &mut Ctx) -> Result<()> {
    let mut recurrence = Probe::new("stats", "gaussian_moment_recurrence");
    recurrence.expect(
        gaussian_moment(0) == 1.0 && gaussian_moment(1) == 0.0,
        || "k<2".into(),
    );
    for k in 2..=30u32 {
        recurrence.expect(
            gaussian_moment(k) == (k - 1) as f64 * gaussian_moment(k - 2),
            || format!("k={k}"),
        );
    }
    ctx.record(recurrence);

    let mut symmetry = Probe::new("stats", "normal_cdf_symmetry");
    let mut monotone = Probe::new("stats", "normal_cdf_monotone");
    let mut prev = 0.0;
    for i in -800..=800 {
        let a = i as f64 / 100.0;
        let (lo, hi) = (ctx.cdf(-a), ctx.cdf(a));
        symmetry.expect((lo + hi - 1.0).abs() <= 2e-7, || format!("a={a}"));
        monotone.expect(hi >= prev, || format!("a={a}"));
        prev = hi;
    }
    ctx.record(symmetry);
    ctx.record(monotone);

    // One sweep of f = T supplies samples for the accumulator checks.
    let spec = make_quadratic_cover(poly(&[0, 1]))?;
    let mut plan = SweepPlan::new(&spec);
    plan.seed = ctx.opts.seed;
    plan.keep_records = true;
    let reference = sweep(&plan, 1..=ctx.opts.scale)?;
    let values: Vec<(u64, i64)> = reference.records.iter().map(|r| (r.n, r.ram)).collect();

    let mut merge = Probe::new("stats", "merge_exact_under_random_chunking");
    let mut single = MomentAccumulator::new(8)?;
    for &(_, x) in &values {
        single.push(x)?;
    }
    let single_hist = ValueHistogram::from_samples(values.iter().map(|v| v.1));
    for trial in 0..50 {
        let size = ctx.rng.gen_range(1..=values.len() as u64);
        let mut parts: Vec<_> = chunk_ranges(1..=values.len() as u64, size);
        // merge in a shuffled order
        for i in (1..parts.len()).rev() {
            let j = ctx.rng.gen_range(0..=i);
            parts.swap(i, j);
        }
        let mut acc = MomentAccumulator::new(8)?;
        let mut hist = ValueHistogram::new();
        for part in parts {
            let mut local = MomentAccumulator::new(8)?;
            let mut local_hist = ValueHistogram::new();
            for idx in part {
                let x = values[idx as usize - 1].1;
                local.push(x)?;
                local_hist.push(x);
            }
            acc.merge(&local)?;
            hist.merge(&local_hist);
        }
        merge.expect(acc == single && hist == single_hist, || {
            format!("trial={trial} chunk_size={size}")
        });
    }
    ctx.record(merge);

    let hist = &reference.summary.ram_hist;
    let mut density = Probe::new("stats", "density_monotone_in_c");
    let mut last = -1.0;
    for c10 in -20..=120 {
        let c = c10 as f64 / 10.0;
        let d = stats::density_below(hist, c)?;
        density.expect(d >= last, || format!("C={c}"));
        last = d;
    }
    ctx.record(density);

    let mut violations = Probe::new("stats", "violations_monotone_in_eps");
    let mut last = f64::INFINITY;
    for e in 1..=40 {
        let eps = e as f64 / 10.0;
        let mut tally = NormalOrderTally::new(1, eps)?;
        for &(n, x) in &values {
            tally.push(n, x);
        }
        let frac = tally.fraction()?;
        violations.expect(frac <= last, || format!("eps={eps}"));
        last = frac;
    }
    ctx.record(violations);
    Ok(())
}

fn labcli_suite(ctx: &mut Ctx) -> Result<()> {
    let spec = make_quadratic_cover(poly(&[1, 0, 1]))?;
    let mut plan = SweepPlan::new(&spec);
    plan.seed = ctx.opts.seed;
    plan.keep_records = true;
    plan.chunk_size = 997;
    let base = sweep(&plan, 1..=ctx.opts.scale)?;
    let mut det = Probe::new("labcli", "worker_count_determinism");
    for workers in [2usize, 4, 8] {
        plan.workers = workers;
        let other = sweep(&plan, 1..=ctx.opts.scale)?;
        det.expect(
            other.summary == base.summary && other.records == base.records,
            || format!("workers={workers}"),
        );
    }
    ctx.record(det);
    Ok(())
}

/// Runs every suite; `Err` only for failures of the harness itself.
pub fn run_selftest(opts: SelftestOptions) -> Result<SelftestReport> {
    let mut ctx = Ctx {
        opts,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        factorizer: arith::default_factorizer().with_seed(opts.seed),
        checks: Vec::new(),
    };
    type Suite = fn(&mut Ctx) -> Result<()>;
    let suites: [(&str, Suite); 5] = [
        ("arith", arith_suite),
        ("cover", cover_suite),
        ("ramify", ramify_suite),
        ("stats", stats_suite),
        ("labcli", labcli_suite),
    ];
    for (module, suite) in suites {
        if let Err(e) = suite(&mut ctx) {
            let mut probe = Probe::new("harness", "suite_completed");
            probe.fail(format!("{module}: {e}"));
            ctx.record(probe);
        }
    }
    Ok(SelftestReport {
        seed: opts.seed,
        scale: opts.scale,
        mutation: opts.mutation,
        checks: ctx.checks,
    })
}
