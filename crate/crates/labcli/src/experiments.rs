//! Turns sweep summaries into result tables, one per experiment.

use ramstat_core::arith::is_prime_u64;
use ramstat_core::cover::CoverSpec;
use ramstat_core::ramify::{RamEngine, RamRecord};
use ramstat_core::stats::{self, CdfGrid, FilterTag};
use ramstat_core::{Error, Result};

use crate::config::{Experiment, ResolvedConfig};
use crate::output::{Cell, Table};
use crate::sweep::{sweep, SweepPlan, SweepSummary};

pub const MOMENT_HEADER: [&str; 7] = [
    "N",
    "k",
    "statistic_name",
    "value",
    "gaussian_target",
    "r",
    "filter",
];
pub const CDF_HEADER: [&str; 4] = ["a", "empirical", "limit", "abs_error"];

pub fn plan_for(cfg: &ResolvedConfig, keep_records: bool) -> SweepPlan<'_> {
    SweepPlan {
        spec: &cfg.spec,
        mode: cfg.mode,
        policy: cfg.policy,
        filter: cfg.filter,
        k_max: cfg.k_max,
        eps: cfg.eps,
        lemma6_a: cfg.lemma6_a,
        seed: cfg.seed,
        workers: cfg.workers,
        chunk_size: cfg.chunk_size,
        keep_records,
    }
}

/// π(p0): number of primes up to the good-prime threshold.
pub fn small_prime_count(spec: &CoverSpec) -> Option<u64> {
    let p0 = spec.p0_u64()?;
    Some((2..=p0).filter(|&q| is_prime_u64(q)).count() as u64)
}

/// Proven bound on |defect| for the quadratic family: 1 + π(p0).
pub fn lemma5_bound(spec: &CoverSpec) -> Option<i64> {
    if spec.is_quadratic() {
        small_prime_count(spec).map(|pi| 1 + pi as i64)
    } else {
        None
    }
}

fn record_row(rec: &RamRecord) -> Vec<Cell> {
    rec.csv_fields().into_iter().map(Cell::Text).collect()
}

pub fn records_table(name: &str, records: &[RamRecord]) -> Table {
    let mut t = Table::new(name, &RamRecord::CSV_HEADER);
    for rec in records {
        t.push(record_row(rec));
    }
    t
}

pub fn ram_record(cfg: &ResolvedConfig, n: u64) -> Result<RamRecord> {
    let engine = RamEngine::with_factorizer(
        &cfg.spec,
        ramstat_core::arith::default_factorizer().with_seed(cfg.seed),
    );
    engine.evaluate(n, cfg.mode, cfg.policy)
}

/// `n=5 ram=1 omega_PE=1 ...` for terminal output.
pub fn record_line(rec: &RamRecord) -> String {
    RamRecord::CSV_HEADER
        .iter()
        .zip(rec.csv_fields())
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn r_of(cfg: &ResolvedConfig) -> u32 {
    cfg.spec.r() as u32
}

pub fn moments_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let mut t = Table::new("moments", &MOMENT_HEADER);
    for k in 1..=cfg.k_max {
        let rep = summary.ram.finalize(k, r_of(cfg))?;
        t.push(vec![
            rep.n.into(),
            k.into(),
            "ram".into(),
            rep.normalized_moment.into(),
            rep.gaussian_target.into(),
            rep.r.into(),
            rep.filter.as_str().into(),
        ]);
    }
    t.extra("N", summary.points);
    t.extra("degenerate", summary.degenerate);
    t.extra("branch_points", summary.branch_points);
    t.extra("mode", cfg.mode.as_str());
    t.extra("small_prime_policy", cfg.policy.as_str());
    Ok(t)
}

pub fn cdf_table(cfg: &ResolvedConfig, summary: &SweepSummary, grid: &CdfGrid) -> Result<Table> {
    let cmp = stats::cdf_compare(&summary.ram_hist, r_of(cfg), grid)?;
    let mut t = Table::new("cdf", &CDF_HEADER);
    for row in &cmp.rows {
        t.push(vec![
            row.a.into(),
            row.empirical.into(),
            row.limit.into(),
            row.abs_error.into(),
        ]);
    }
    t.extra("N", cmp.n);
    t.extra("r", cmp.r);
    t.extra("ks_distance", cmp.ks_distance);
    t.extra("filter", cfg.filter.as_str());
    Ok(t)
}

pub fn density_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let mut t = Table::new("density", &["N", "C", "count", "density", "filter"]);
    let density = stats::density_below(&summary.ram_hist, cfg.density_c)?;
    t.push(vec![
        summary.ram_hist.total().into(),
        cfg.density_c.into(),
        summary.ram_hist.count_at_most(cfg.density_c).into(),
        density.into(),
        cfg.filter.as_str().into(),
    ]);
    Ok(t)
}

pub fn normal_order_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let tally = &summary.normal_order;
    let mut t = Table::new(
        "normal-order",
        &[
            "N",
            "eps",
            "r",
            "considered",
            "violations",
            "fraction",
            "filter",
        ],
    );
    t.push(vec![
        summary.points.into(),
        cfg.eps.into(),
        r_of(cfg).into(),
        tally.considered().into(),
        tally.violations().into(),
        tally.fraction()?.into(),
        cfg.filter.as_str().into(),
    ]);
    Ok(t)
}

pub fn lemma5_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let mut t = Table::new("lemma5-audit", &["N", "statistic", "value"]);
    let n = summary.points;
    let bound = lemma5_bound(&cfg.spec);
    let mut row = |name: &str, value: Cell| t.push(vec![n.into(), name.into(), value]);
    row("branch_points", summary.branch_points.into());
    row(
        "max_abs_defect",
        summary.max_defect.map(|w| w.abs_defect).into(),
    );
    row("witness_n", summary.max_defect.map(|w| w.n).into());
    row("bound", bound.into());
    let violations = bound.map(|b| {
        summary
            .defect_hist
            .counts()
            .iter()
            .filter(|(d, _)| d.abs() > b)
            .map(|(_, c)| *c)
            .sum::<u64>()
    });
    row("violations", violations.into());
    for k in 1..=cfg.k_max.min(3) {
        row(
            &format!("mean_abs_defect_pow{k}"),
            summary.abs_defect.raw_moment(k)?.into(),
        );
    }
    for (d, c) in summary.defect_hist.counts() {
        row(&format!("defect_eq_{d}"), (*c).into());
    }
    t.extra("mode", cfg.mode.as_str());
    t.extra("small_prime_policy", cfg.policy.as_str());
    Ok(t)
}

pub fn lemma6_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let mut t = Table::new("lemma6", &["N", "statistic", "a", "k", "value"]);
    for k in 1..=cfg.k_max {
        t.push(vec![
            summary.m_a.total().into(),
            "m_a".into(),
            cfg.lemma6_a.into(),
            k.into(),
            summary.m_a.raw_moment(k)?.into(),
        ]);
    }
    // a = 1 is ω itself; its moments grow with N and serve as the contrast.
    for k in 1..=cfg.k_max {
        t.push(vec![
            summary.omega_pe.total().into(),
            "omega".into(),
            1u32.into(),
            k.into(),
            summary.omega_pe.raw_moment(k)?.into(),
        ]);
    }
    Ok(t)
}

pub fn halberstam_table(cfg: &ResolvedConfig, summary: &SweepSummary) -> Result<Table> {
    let mut t = Table::new("halberstam", &MOMENT_HEADER);
    let r = r_of(cfg);
    let acc = &summary.omega_pe;
    for k in 1..=cfg.k_max {
        let rep = acc.finalize(k, r)?;
        t.push(vec![
            rep.n.into(),
            k.into(),
            "omega_PE".into(),
            rep.normalized_moment.into(),
            rep.gaussian_target.into(),
            r.into(),
            FilterTag::All.as_str().into(),
        ]);
    }
    let mean = acc.raw_moment(1)?;
    let c = stats::center(r, acc.total())?;
    for (name, value) in [
        ("omega_PE_mean", mean),
        ("omega_PE_mean_minus_center", mean - c),
    ] {
        t.push(vec![
            acc.total().into(),
            1u32.into(),
            name.into(),
            value.into(),
            Cell::Empty,
            r.into(),
            FilterTag::All.as_str().into(),
        ]);
    }
    Ok(t)
}

/// Runs every requested experiment; sweep-based ones share a single pass.
pub fn run_experiments(cfg: &ResolvedConfig) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    let needs_sweep = cfg.experiments.iter().any(|e| *e != Experiment::Ram);
    let keep_records = cfg.experiments.contains(&Experiment::Sweep);
    let outcome = if needs_sweep {
        let n_max = cfg
            .n_max
            .ok_or_else(|| Error::Domain("N is required for sweeps".into()))?;
        Some(sweep(&plan_for(cfg, keep_records), 1..=n_max)?)
    } else {
        None
    };
    for exp in &cfg.experiments {
        let table = match (exp, &outcome) {
            (Experiment::Ram, _) => {
                let n = cfg
                    .n
                    .ok_or_else(|| Error::Domain("n is required for ram".into()))?;
                records_table("ram", &[ram_record(cfg, n)?])
            }
            (_, None) => unreachable!("sweep computed for every non-ram experiment"),
            (Experiment::Sweep, Some(o)) => records_table("sweep", &o.records),
            (Experiment::Moments, Some(o)) => moments_table(cfg, &o.summary)?,
            (Experiment::Cdf, Some(o)) => cdf_table(cfg, &o.summary, &CdfGrid::default())?,
            (Experiment::Density, Some(o)) => density_table(cfg, &o.summary)?,
            (Experiment::NormalOrder, Some(o)) => normal_order_table(cfg, &o.summary)?,
            (Experiment::Lemma5Audit, Some(o)) => lemma5_table(cfg, &o.summary)?,
            (Experiment::Lemma6, Some(o)) => lemma6_table(cfg, &o.summary)?,
            (Experiment::Halberstam, Some(o)) => halberstam_table(cfg, &o.summary)?,
        };
        tables.push(table);
    }
    Ok(tables)
}
