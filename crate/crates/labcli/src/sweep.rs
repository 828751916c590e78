//! Parallel sweeps over 1..=N.
//!
//! The range is cut into fixed-size chunks; worker w of W handles chunks
//! w, w + W, w + 2W, ... Each chunk produces its own [`SweepSummary`] and the
//! coordinator folds them in chunk order. All summary state is exact, so
//! the fold gives the same answer for any worker count or chunk size.

use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicBool, Ordering};

use ramstat_core::arith::{self, Factorizer};
use ramstat_core::cover::CoverSpec;
use ramstat_core::ramify::{CountingMode, RamEngine, RamRecord, SmallPrimePolicy};
use ramstat_core::stats::{FilterTag, MomentAccumulator, NormalOrderTally, ValueHistogram};
use ramstat_core::{Error, Result};
use serde::Serialize;

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

/// What to compute and how to split the work.
#[derive(Debug, Clone)]
pub struct SweepPlan<'a> {
    pub spec: &'a CoverSpec,
    pub mode: CountingMode,
    pub policy: SmallPrimePolicy,
    pub filter: FilterTag,
    pub k_max: u32,
    /// Normal-order band width.
    pub eps: f64,
    /// Index a of the m_a(|P_E(n)|) moments.
    pub lemma6_a: u32,
    pub seed: u64,
    pub workers: usize,
    pub chunk_size: u64,
    pub keep_records: bool,
}

impl<'a> SweepPlan<'a> {
    pub fn new(spec: &'a CoverSpec) -> Self {
        SweepPlan {
            spec,
            mode: if spec.is_quadratic() {
                CountingMode::Oracle
            } else {
                CountingMode::Criterion
            },
            policy: SmallPrimePolicy::default_for(spec),
            filter: FilterTag::All,
            k_max: 8,
            eps: 0.5,
            lemma6_a: 2,
            seed: arith::DEFAULT_SEED,
            workers: 1,
            chunk_size: DEFAULT_CHUNK_SIZE,
            keep_records: false,
        }
    }

    fn factorizer(&self) -> Factorizer {
        arith::default_factorizer().with_seed(self.seed)
    }
}

/// Largest |defect| seen and the smallest n attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DefectWitness {
    pub abs_defect: i64,
    pub n: u64,
}

impl DefectWitness {
    fn better(self, other: DefectWitness) -> DefectWitness {
        if other.abs_defect > self.abs_defect
            || (other.abs_defect == self.abs_defect && other.n < self.n)
        {
            other
        } else {
            self
        }
    }
}

/// Mergeable per-range results.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    /// Points visited.
    pub points: u64,
    pub branch_points: u64,
    pub degenerate: u64,
    /// Records where `include_superset` or superset mode may over-count.
    pub over_counts: u64,
    /// Ram(n) with the filter applied; branch points contribute -1.
    pub ram: MomentAccumulator,
    pub ram_hist: ValueHistogram,
    pub normal_order: NormalOrderTally,
    /// ω(|P_E(n)|); branch points excluded.
    pub omega_pe: MomentAccumulator,
    /// m_a(|P_E(n)|) with a = `lemma6_a`; branch points excluded.
    pub m_a: MomentAccumulator,
    /// |Ram - ω(P_E) + Σ m_{e_i}(P_i)|; branch points excluded.
    pub abs_defect: MomentAccumulator,
    /// Signed defects; branch points excluded.
    pub defect_hist: ValueHistogram,
    pub max_defect: Option<DefectWitness>,
}

impl SweepSummary {
    pub fn empty(plan: &SweepPlan<'_>) -> Result<Self> {
        Ok(SweepSummary {
            points: 0,
            branch_points: 0,
            degenerate: 0,
            over_counts: 0,
            ram: MomentAccumulator::new(plan.k_max)?.with_filter(plan.filter),
            ram_hist: ValueHistogram::new(),
            normal_order: NormalOrderTally::new(plan.spec.r() as u32, plan.eps)?,
            omega_pe: MomentAccumulator::new(plan.k_max)?,
            m_a: MomentAccumulator::new(plan.k_max)?,
            abs_defect: MomentAccumulator::new(plan.k_max)?,
            defect_hist: ValueHistogram::new(),
            max_defect: None,
        })
    }

    pub fn merge(&mut self, other: &SweepSummary) -> Result<()> {
        self.points += other.points;
        self.branch_points += other.branch_points;
        self.degenerate += other.degenerate;
        self.over_counts += other.over_counts;
        self.ram.merge(&other.ram)?;
        self.ram_hist.merge(&other.ram_hist);
        self.normal_order.merge(&other.normal_order)?;
        self.omega_pe.merge(&other.omega_pe)?;
        self.m_a.merge(&other.m_a)?;
        self.abs_defect.merge(&other.abs_defect)?;
        self.defect_hist.merge(&other.defect_hist);
        self.max_defect = match (self.max_defect, other.max_defect) {
            (Some(a), Some(b)) => Some(a.better(b)),
            (a, b) => a.or(b),
        };
        Ok(())
    }

    fn record(&mut self, plan: &SweepPlan<'_>, rec: &RamRecord, m_a: Option<u32>) -> Result<()> {
        self.points += 1;
        if rec.over_count {
            self.over_counts += 1;
        }
        if rec.degenerate {
            self.degenerate += 1;
        }
        if rec.degenerate && plan.filter == FilterTag::Hilbert {
            self.ram.push_excluded();
            self.ram_hist.push_excluded();
        } else {
            self.ram.push(rec.ram)?;
            self.ram_hist.push(rec.ram);
            self.normal_order.push(rec.n, rec.ram);
        }
        match (rec.defect(), m_a) {
            (Some(defect), Some(m)) => {
                self.omega_pe.push(rec.omega_pe as i64)?;
                self.m_a.push(m as i64)?;
                self.abs_defect.push(defect.abs())?;
                self.defect_hist.push(defect);
                let witness = DefectWitness {
                    abs_defect: defect.abs(),
                    n: rec.n,
                };
                self.max_defect = Some(match self.max_defect {
                    Some(w) => w.better(witness),
                    None => witness,
                });
            }
            _ => {
                self.branch_points += 1;
                self.omega_pe.push_excluded();
                self.m_a.push_excluded();
                self.abs_defect.push_excluded();
                self.defect_hist.push_excluded();
            }
        }
        Ok(())
    }
}

/// Output of one sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    /// Per-n records in increasing n, when `keep_records` is set.
    pub records: Vec<RamRecord>,
}

fn sweep_chunk(
    plan: &SweepPlan<'_>,
    engine: &RamEngine<'_>,
    range: RangeInclusive<u64>,
    cancel: &AtomicBool,
) -> Result<SweepOutcome> {
    let mut summary = SweepSummary::empty(plan)?;
    let mut records = Vec::new();
    for n in range {
        if n % 1024 == 0 && cancel.load(Ordering::Relaxed) {
            break;
        }
        let special = engine.specialize(n)?;
        let rec = engine.evaluate_specialized(n, special.as_ref(), plan.mode, plan.policy)?;
        let m_a = special
            .as_ref()
            .map(|s| s.product_factorization().m_a(plan.lemma6_a));
        summary.record(plan, &rec, m_a)?;
        if plan.keep_records {
            records.push(rec);
        }
    }
    Ok(SweepOutcome { summary, records })
}

/// Splits `range` into consecutive chunks of at most `chunk_size` points.
pub fn chunk_ranges(range: RangeInclusive<u64>, chunk_size: u64) -> Vec<RangeInclusive<u64>> {
    let chunk_size = chunk_size.max(1);
    let (start, end) = (*range.start(), *range.end());
    let mut out = Vec::new();
    let mut lo = start;
    while lo <= end {
        let hi = end.min(lo.saturating_add(chunk_size - 1));
        out.push(lo..=hi);
        if hi == u64::MAX {
            break;
        }
        lo = hi + 1;
    }
    out
}

/// Runs `work` over the chunks with static round-robin assignment and
/// returns the per-chunk outputs in chunk order. The first failing chunk (by
/// index) determines the error; the remaining workers stop early.
pub fn run_static<T, F>(chunks: &[RangeInclusive<u64>], workers: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RangeInclusive<u64>, &AtomicBool) -> Result<T> + Sync,
{
    let workers = workers.clamp(1, chunks.len().max(1));
    let cancel = AtomicBool::new(false);
    let per_worker: Vec<Vec<(usize, Result<T>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let cancel = &cancel;
                let work = &work;
                scope.spawn(move || {
                    let mut done = Vec::new();
                    for idx in (w..chunks.len()).step_by(workers) {
                        if cancel.load(Ordering::Relaxed) {
                            break;
                        }
                        let out = work(chunks[idx].clone(), cancel);
                        if out.is_err() {
                            cancel.store(true, Ordering::Relaxed);
                        }
                        done.push((idx, out));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut results: Vec<(usize, Result<T>)> = per_worker.into_iter().flatten().collect();
    results.sort_by_key(|(idx, _)| *idx);
    if let Some(pos) = results.iter().position(|(_, r)| r.is_err()) {
        let (_, failed) = results.swap_remove(pos);
        return failed.map(|_| unreachable!());
    }
    // Without an error nobody cancels, so every chunk has a result.
    debug_assert_eq!(results.len(), chunks.len());
    results.into_iter().map(|(_, r)| r).collect()
}

/// Sweeps `range` and merges the chunk summaries.
pub fn sweep(plan: &SweepPlan<'_>, range: RangeInclusive<u64>) -> Result<SweepOutcome> {
    if *range.start() == 0 {
        return Err(Error::Domain("sweep range must start at n >= 1".into()));
    }
    let engine = RamEngine::with_factorizer(plan.spec, plan.factorizer());
    let chunks = chunk_ranges(range, plan.chunk_size);
    let parts = run_static(&chunks, plan.workers, |chunk, cancel| {
        sweep_chunk(plan, &engine, chunk, cancel)
    })?;
    let mut summary = SweepSummary::empty(plan)?;
    let mut records = Vec::new();
    for part in parts {
        summary.merge(&part.summary)?;
        records.extend(part.records);
    }
    Ok(SweepOutcome { summary, records })
}

/// Cumulative summaries at each checkpoint N (sorted, increasing), from a
/// single pass over 1..=max N.
pub fn sweep_checkpoints(plan: &SweepPlan<'_>, checkpoints: &[u64]) -> Result<Vec<SweepSummary>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.first() == Some(&0) {
        return Err(Error::Domain(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    let mut running = SweepSummary::empty(plan)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut lo = 1;
    for &hi in checkpoints {
        let part = sweep(plan, lo..=hi)?;
        running.merge(&part.summary)?;
        out.push(running.clone());
        lo = hi + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ramstat_core::cover::make_quadratic_cover;
    use ramstat_core::poly::IntPoly;

    #[test]
    fn chunking_covers_range_exactly() {
        let chunks = chunk_ranges(1..=10, 4);
        assert_eq!(chunks, vec![1..=4, 5..=8, 9..=10]);
        assert_eq!(chunk_ranges(3..=3, 100), vec![3..=3]);
    }

    #[test]
    fn worker_count_does_not_change_summary() {
        let spec = make_quadratic_cover(IntPoly::from_i64(&[0, 1])).unwrap();
        let mut plan = SweepPlan::new(&spec);
        plan.chunk_size = 37;
        plan.keep_records = true;
        let one = sweep(&plan, 1..=2000).unwrap();
        plan.workers = 5;
        let five = sweep(&plan, 1..=2000).unwrap();
        assert_eq!(one.summary, five.summary);
        assert_eq!(one.records, five.records);
        assert_eq!(one.summary.degenerate, 44);
    }

    #[test]
    fn checkpoints_match_direct_sweeps() {
        let spec = make_quadratic_cover(IntPoly::from_i64(&[1, 0, 1])).unwrap();
        let plan = SweepPlan::new(&spec);
        let cps = sweep_checkpoints(&plan, &[100, 1000]).unwrap();
        assert_eq!(cps[0], sweep(&plan, 1..=100).unwrap().summary);
        assert_eq!(cps[1], sweep(&plan, 1..=1000).unwrap().summary);
    }

    #[test]
    fn first_failing_chunk_wins() {
        let chunks = chunk_ranges(1..=100, 10);
        let out: Result<Vec<u64>> = run_static(&chunks, 4, |range, _| {
            if range.contains(&35) || range.contains(&75) {
                Err(Error::Domain(format!("bad chunk {}", range.start())))
            } else {
                Ok(range.sum())
            }
        });
        match out {
            Err(Error::Domain(msg)) => assert!(msg == "bad chunk 31" || msg == "bad chunk 71"),
            other => panic!("unexpected {other:?}"),
        }
        let ok: Vec<u64> = run_static(&chunks, 3, |range, _| Ok(range.sum())).unwrap();
        assert_eq!(ok.iter().sum::<u64>(), 5050);
        assert_eq!(ok[0], 55);
    }
}
