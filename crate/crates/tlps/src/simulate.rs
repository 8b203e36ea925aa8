//! Discrete-event simulation of the TLPS queue, for end-to-end validation
//! of the analytic routes.
//!
//! Jobs arrive Poisson(λ) with hyper-exponential sizes. Jobs whose attained
//! service is below θ share the server equally (PS) at high priority; on
//! reaching attained service θ a job's remainder moves to the low-priority
//! queue, which shares the server equally only while the high queue is
//! empty. Three event kinds exist — arrival, threshold crossing, completion
//! — and inter-event progress is computed in closed form, so no time
//! discretization is involved.
//!
//! Each queue keeps a *virtual service clock* `V` advancing at rate `1/n`
//! while the queue is active with `n` jobs. A job entering with `w` units
//! of work departs its queue when `V` reaches entry value + `w`; pending
//! departures live in a min-heap keyed by that target, so a replication
//! costs O(events·log n).
//!
//! Determinism: replication `r` of root seed `s` uses a ChaCha8 stream
//! seeded with `splitmix64(s XOR r·0x9E3779B97F4A7C15)`, so results are
//! reproducible bit-for-bit regardless of replication execution order. Per
//! arrival, the job size is drawn before the next interarrival gap.
//!
//! Simultaneous events are ordered completion → crossing → arrival; any
//! fixed order is correct (ties are measure-zero), fixing one keeps runs
//! reproducible.

use crate::hyperexp::{ModelError, TlpsModel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("num_jobs ({num_jobs}) must exceed warmup_jobs ({warmup_jobs})")]
    BadSampleWindow { num_jobs: usize, warmup_jobs: usize },
    #[error("at least one replication is required")]
    NoReplications,
    #[error("trace audit failed at event {event_index}: {message}")]
    TraceAudit { event_index: usize, message: String },
}

/// Inputs of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: TlpsModel,
    pub theta: f64,
    /// Arrival indices `< num_jobs` may be counted; arrivals continue past
    /// this index until every counted job has departed, so late counted
    /// jobs still experience a loaded system.
    pub num_jobs: usize,
    /// Arrival indices `< warmup_jobs` are simulated but not counted.
    pub warmup_jobs: usize,
    pub seed: u64,
    pub replications: usize,
}

/// Mean conditional sojourn within one size range.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketStat {
    pub x_lo: f64,
    /// Upper edge; infinite for the overflow bucket of sizes above θ.
    pub x_hi: f64,
    /// Average of the per-replication bucket means.
    pub mean: f64,
    /// Student-t 99% halfwidth across replications; infinite when fewer
    /// than two replications saw the bucket.
    pub ci99_halfwidth: f64,
    /// Total jobs observed in the bucket across replications.
    pub count: u64,
}

/// Aggregated output of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Average of the per-replication mean sojourns.
    pub mean_sojourn: f64,
    /// Student-t 99% halfwidth across replications (zero for a single
    /// replication).
    pub ci99_halfwidth: f64,
    /// Per-replication mean sojourns (index = replication).
    pub rep_means: Vec<f64>,
    /// Conditional sojourns bucketed by job size: ten equal ranges on
    /// `[0, θ]` plus an overflow bucket (just the overflow when θ = 0).
    pub bucket_stats: Vec<BucketStat>,
    /// `replications·(num_jobs − warmup_jobs)`.
    pub jobs_counted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEventKind {
    Arrival,
    Crossing,
    Completion,
}

impl TraceEventKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceEventKind::Arrival => "arrival",
            TraceEventKind::Crossing => "crossing",
            TraceEventKind::Completion => "completion",
        }
    }
}

/// One event of a traced replication. `queue` is 0 for high priority, 1
/// for low; `attained` is the job's attained service at the event.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub event: TraceEventKind,
    pub job_id: u64,
    pub queue: u8,
    pub attained: f64,
}

/// Work-conservation audit summary from [`busy_period_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct BusyPeriodDiagnostics {
    /// Completed busy periods examined.
    pub periods: usize,
    /// Worst relative mismatch between a busy period's length and the work
    /// that arrived within it.
    pub max_rel_mismatch: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(root: u64, replication: u64) -> u64 {
    splitmix64(root ^ replication.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Pending departure from a queue's virtual clock: ordered by target clock
/// value, then completion before crossing, then arrival order.
#[derive(Debug, Clone, Copy)]
struct QueueEvent {
    v_target: f64,
    /// 0 = completion, 1 = threshold crossing.
    kind: u8,
    job_id: u64,
}

impl Ord for QueueEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.v_target
            .total_cmp(&other.v_target)
            .then(self.kind.cmp(&other.kind))
            .then(self.job_id.cmp(&other.job_id))
    }
}

impl PartialOrd for QueueEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for QueueEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEvent {}

/// Min-heap over [`QueueEvent`].
type EventHeap = BinaryHeap<std::cmp::Reverse<QueueEvent>>;

struct Replication<'a> {
    model: &'a TlpsModel,
    theta: f64,
    rng: ChaCha8Rng,
    t: f64,
    next_arrival: f64,
    next_id: u64,
    /// (arrival time, size) by job id.
    jobs: Vec<(f64, f64)>,
    high: EventHeap,
    low: EventHeap,
    v_high: f64,
    v_low: f64,
    trace: Option<Vec<TraceEvent>>,
}

struct Completion {
    job_id: u64,
    time: f64,
}

impl<'a> Replication<'a> {
    fn new(model: &'a TlpsModel, theta: f64, seed: u64, trace: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = draw_exp(&mut rng, model.arrival_rate());
        Self {
            model,
            theta,
            rng,
            t: 0.0,
            next_arrival: gap,
            next_id: 0,
            jobs: Vec::new(),
            high: EventHeap::new(),
            low: EventHeap::new(),
            v_high: 0.0,
            v_low: 0.0,
            trace: trace.then(Vec::new),
        }
    }

    fn record(&mut self, time: f64, event: TraceEventKind, job_id: u64, queue: u8, attained: f64) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEvent {
                time,
                event,
                job_id,
                queue,
                attained,
            });
        }
    }

    /// Advance the active queue's virtual clock to wall time `to`.
    fn advance_virtual(&mut self, to: f64) {
        let dt = to - self.t;
        if !self.high.is_empty() {
            self.v_high += dt / self.high.len() as f64;
        } else if !self.low.is_empty() {
            self.v_low += dt / self.low.len() as f64;
        }
    }

    /// Wall-clock time of the next completion or crossing, if any. Low
    /// events are only eligible while the high queue is empty.
    fn next_queue_event(&self) -> Option<(f64, bool)> {
        if let Some(std::cmp::Reverse(ev)) = self.high.peek() {
            let dt = ((ev.v_target - self.v_high) * self.high.len() as f64).max(0.0);
            Some((self.t + dt, false))
        } else if let Some(std::cmp::Reverse(ev)) = self.low.peek() {
            let dt = ((ev.v_target - self.v_low) * self.low.len() as f64).max(0.0);
            Some((self.t + dt, true))
        } else {
            None
        }
    }

    /// Run until the next completion; returns it. Arrivals and crossings
    /// are folded in along the way.
    fn next_completion(&mut self) -> Completion {
        loop {
            let queue_event = self.next_queue_event();
            // Ties go to the queue event (completion/crossing before
            // arrival).
            if let Some((t_event, is_low)) = queue_event.filter(|&(te, _)| te <= self.next_arrival)
            {
                let std::cmp::Reverse(ev) = if is_low {
                    self.low.pop().expect("peeked event exists")
                } else {
                    self.high.pop().expect("peeked event exists")
                };
                self.t = t_event;
                if is_low {
                    self.v_low = ev.v_target;
                } else {
                    self.v_high = ev.v_target;
                }
                let size = self.jobs[ev.job_id as usize].1;
                if ev.kind == 0 {
                    self.record(
                        t_event,
                        TraceEventKind::Completion,
                        ev.job_id,
                        is_low as u8,
                        size,
                    );
                    return Completion {
                        job_id: ev.job_id,
                        time: t_event,
                    };
                }
                // Threshold crossing: the remainder becomes a low-queue job.
                self.record(t_event, TraceEventKind::Crossing, ev.job_id, 1, self.theta);
                self.low.push(std::cmp::Reverse(QueueEvent {
                    v_target: self.v_low + (size - self.theta),
                    kind: 0,
                    job_id: ev.job_id,
                }));
            } else {
                let t_a = self.next_arrival;
                self.advance_virtual(t_a);
                self.t = t_a;
                let size = self.model.dist().sample(&mut self.rng);
                let id = self.next_id;
                self.next_id += 1;
                self.jobs.push((t_a, size));
                if self.theta > 0.0 {
                    self.record(t_a, TraceEventKind::Arrival, id, 0, 0.0);
                    self.high.push(std::cmp::Reverse(QueueEvent {
                        v_target: self.v_high + size.min(self.theta),
                        kind: u8::from(size > self.theta),
                        job_id: id,
                    }));
                } else {
                    self.record(t_a, TraceEventKind::Arrival, id, 1, 0.0);
                    self.low.push(std::cmp::Reverse(QueueEvent {
                        v_target: self.v_low + size,
                        kind: 0,
                        job_id: id,
                    }));
                }
                let gap = draw_exp(&mut self.rng, self.model.arrival_rate());
                self.next_arrival = t_a + gap;
            }
        }
    }
}

fn draw_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

struct RepOutcome {
    mean: f64,
    bucket_sums: Vec<f64>,
    bucket_counts: Vec<u64>,
    trace: Option<Vec<TraceEvent>>,
}

fn bucket_count(theta: f64) -> usize {
    if theta > 0.0 {
        11
    } else {
        1
    }
}

fn bucket_index(theta: f64, size: f64) -> usize {
    if theta > 0.0 && size <= theta {
        (((size / theta) * 10.0).floor() as usize).min(9)
    } else {
        bucket_count(theta) - 1
    }
}

fn run_replication(config: &SimConfig, replication: u64, trace: bool) -> RepOutcome {
    let mut sim = Replication::new(
        &config.model,
        config.theta,
        stream_seed(config.seed, replication),
        trace,
    );
    let buckets = bucket_count(config.theta);
    let mut bucket_sums = vec![0.0; buckets];
    let mut bucket_counts = vec![0u64; buckets];
    let target = (config.num_jobs - config.warmup_jobs) as u64;
    let mut counted = 0u64;
    let mut sum = 0.0;
    while counted < target {
        let c = sim.next_completion();
        if (config.warmup_jobs as u64..config.num_jobs as u64).contains(&c.job_id) {
            let (arrived, size) = sim.jobs[c.job_id as usize];
            let sojourn = c.time - arrived;
            sum += sojourn;
            let b = bucket_index(config.theta, size);
            bucket_sums[b] += sojourn;
            bucket_counts[b] += 1;
            counted += 1;
        }
    }
    RepOutcome {
        mean: sum / target as f64,
        bucket_sums,
        bucket_counts,
        trace: sim.trace,
    }
}

fn t_critical_99(replications: usize) -> f64 {
    let df = (replications - 1) as f64;
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.995)
}

/// Mean and Student-t 99% halfwidth of a sample; zero width for a single
/// observation.
fn mean_and_halfwidth(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half = t_critical_99(n) * (var / n as f64).sqrt();
    (mean, half)
}

fn validate(config: &SimConfig) -> Result<(), SimError> {
    if !(config.theta.is_finite() && config.theta >= 0.0) {
        return Err(SimError::Model(ModelError::BadThreshold(config.theta)));
    }
    if config.num_jobs <= config.warmup_jobs {
        return Err(SimError::BadSampleWindow {
            num_jobs: config.num_jobs,
            warmup_jobs: config.warmup_jobs,
        });
    }
    if config.replications == 0 {
        return Err(SimError::NoReplications);
    }
    Ok(())
}

fn aggregate(config: &SimConfig, outcomes: &[RepOutcome]) -> SimResult {
    let rep_means: Vec<f64> = outcomes.iter().map(|o| o.mean).collect();
    let (mean_sojourn, ci99_halfwidth) = mean_and_halfwidth(&rep_means);
    let buckets = bucket_count(config.theta);
    let mut bucket_stats = Vec::with_capacity(buckets);
    for b in 0..buckets {
        let per_rep: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.bucket_counts[b] > 0)
            .map(|o| o.bucket_sums[b] / o.bucket_counts[b] as f64)
            .collect();
        let count: u64 = outcomes.iter().map(|o| o.bucket_counts[b]).sum();
        let (mean, half) = match per_rep.len() {
            0 => (f64::NAN, f64::INFINITY),
            1 => (per_rep[0], f64::INFINITY),
            _ => mean_and_halfwidth(&per_rep),
        };
        let (x_lo, x_hi) = if b + 1 < buckets {
            (
                config.theta * b as f64 / 10.0,
                config.theta * (b + 1) as f64 / 10.0,
            )
        } else {
            (config.theta, f64::INFINITY)
        };
        bucket_stats.push(BucketStat {
            x_lo,
            x_hi,
            mean,
            ci99_halfwidth: half,
            count,
        });
    }
    SimResult {
        mean_sojourn,
        ci99_halfwidth,
        rep_means,
        bucket_stats,
        jobs_counted: config.replications as u64 * (config.num_jobs - config.warmup_jobs) as u64,
    }
}

/// Simulate all replications and aggregate. Deterministic for a given
/// config.
pub fn run(config: &SimConfig) -> Result<SimResult, SimError> {
    validate(config)?;
    let outcomes: Vec<RepOutcome> = (0..config.replications)
        .map(|r| run_replication(config, r as u64, false))
        .collect();
    Ok(aggregate(config, &outcomes))
}

/// Like [`run`], additionally returning the full event trace of
/// replication 0.
pub fn run_traced(config: &SimConfig) -> Result<(SimResult, Vec<TraceEvent>), SimError> {
    validate(config)?;
    let outcomes: Vec<RepOutcome> = (0..config.replications)
        .map(|r| run_replication(config, r as u64, r == 0))
        .collect();
    let trace = outcomes[0].trace.clone().expect("replication 0 is traced");
    Ok((aggregate(config, &outcomes), trace))
}

/// Audit a trace for work conservation.
///
/// Within every completed busy period (population rising from zero back to
/// zero) the served work equals the period's length if and only if the
/// server never idled while jobs were present, so the two spec'd checks
/// reduce to one identity: Σ completed sizes = period length, within
/// 1e-9 relative. Event ordering and attained-service labels are checked
/// along the way. The trailing partial busy period, if any, is skipped.
pub fn busy_period_check(
    trace: &[TraceEvent],
    theta: f64,
) -> Result<BusyPeriodDiagnostics, SimError> {
    let fail = |event_index: usize, message: String| {
        Err(SimError::TraceAudit {
            event_index,
            message,
        })
    };
    let mut population = 0u64;
    let mut last_time = 0.0f64;
    let mut period_start = 0.0f64;
    let mut period_work = 0.0f64;
    let mut periods = 0usize;
    let mut max_rel_mismatch = 0.0f64;
    for (k, ev) in trace.iter().enumerate() {
        if ev.time < last_time {
            return fail(k, format!("time went backwards: {} after {last_time}", ev.time));
        }
        last_time = ev.time;
        match ev.event {
            TraceEventKind::Arrival => {
                if population == 0 {
                    period_start = ev.time;
                    period_work = 0.0;
                }
                population += 1;
            }
            TraceEventKind::Crossing => {
                if (ev.attained - theta).abs() > 1e-9 * theta.max(1.0) {
                    return fail(
                        k,
                        format!("crossing at attained {} instead of θ = {theta}", ev.attained),
                    );
                }
            }
            TraceEventKind::Completion => {
                if population == 0 {
                    return fail(k, "completion from an empty system".into());
                }
                if ev.queue == 0 && ev.attained > theta + 1e-9 * theta.max(1.0) {
                    return fail(
                        k,
                        format!(
                            "high-priority completion with attained {} above θ = {theta}",
                            ev.attained
                        ),
                    );
                }
                if ev.queue == 1 && theta > 0.0 && ev.attained < theta - 1e-9 * theta.max(1.0) {
                    return fail(
                        k,
                        format!(
                            "low-priority completion with attained {} below θ = {theta}",
                            ev.attained
                        ),
                    );
                }
                population -= 1;
                period_work += ev.attained;
                if population == 0 {
                    let length = ev.time - period_start;
                    let mismatch = (period_work - length).abs() / length.max(1.0);
                    if mismatch > 1e-9 {
                        return fail(
                            k,
                            format!(
                                "busy period of length {length} served {period_work} of work"
                            ),
                        );
                    }
                    periods += 1;
                    max_rel_mismatch = max_rel_mismatch.max(mismatch);
                }
            }
        }
    }
    Ok(BusyPeriodDiagnostics {
        periods,
        max_rel_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperexp::HyperExp;
    use crate::testutil::{assert_close, demo_two_phase};

    fn mm1_config() -> SimConfig {
        let dist = HyperExp::new(vec![1.0], vec![1.0]).unwrap();
        SimConfig {
            model: TlpsModel::new(dist, 0.5).unwrap(),
            theta: 1.0,
            num_jobs: 200_000,
            warmup_jobs: 2_000,
            seed: 7,
            replications: 10,
        }
    }

    /// Single-queue PS reference with the same virtual-clock technique and
    /// the same draw order (initial gap, then size before gap per arrival),
    /// so a policy-collapsed TLPS run must reproduce it from the same seed.
    fn reference_ps_mean(model: &TlpsModel, num_jobs: usize, warmup: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0.0f64;
        let mut next_arrival = draw_exp(&mut rng, model.arrival_rate());
        let mut v = 0.0f64;
        let mut heap = EventHeap::new();
        let mut jobs: Vec<(f64, f64)> = Vec::new();
        let mut next_id = 0u64;
        let mut counted = 0usize;
        let mut sum = 0.0f64;
        let target = num_jobs - warmup;
        while counted < target {
            let queue_event = heap
                .peek()
                .map(|std::cmp::Reverse(ev)| t + ((ev.v_target - v) * heap.len() as f64).max(0.0));
            if let Some(te) = queue_event.filter(|&te| te <= next_arrival) {
                let std::cmp::Reverse(ev) = heap.pop().expect("peeked event exists");
                v = ev.v_target;
                t = te;
                if (warmup as u64..num_jobs as u64).contains(&ev.job_id) {
                    sum += t - jobs[ev.job_id as usize].0;
                    counted += 1;
                }
            } else {
                if !heap.is_empty() {
                    v += (next_arrival - t) / heap.len() as f64;
                }
                t = next_arrival;
                let size = model.dist().sample(&mut rng);
                jobs.push((t, size));
                heap.push(std::cmp::Reverse(QueueEvent {
                    v_target: v + size,
                    kind: 0,
                    job_id: next_id,
                }));
                next_id += 1;
                next_arrival = t + draw_exp(&mut rng, model.arrival_rate());
            }
        }
        sum / target as f64
    }

    #[test]
    fn mm1_confidence_interval_contains_the_known_mean() {
        let r = run(&mm1_config()).unwrap();
        assert!(
            (r.mean_sojourn - 2.0).abs() <= r.ci99_halfwidth,
            "CI [{} ± {}] misses 2.0",
            r.mean_sojourn,
            r.ci99_halfwidth
        );
        assert_eq!(r.jobs_counted, 10 * 198_000);
    }

    #[test]
    fn near_empty_system_sees_bare_service_times() {
        let model = TlpsModel::new(demo_two_phase().dist().clone(), 0.01 * 11.0 / 20.0).unwrap();
        let config = SimConfig {
            model,
            theta: 2.0,
            num_jobs: 20_000,
            warmup_jobs: 500,
            seed: 11,
            replications: 5,
        };
        let r = run(&config).unwrap();
        let m = 20.0 / 11.0;
        assert!(
            (r.mean_sojourn - m).abs() <= r.ci99_halfwidth.max(0.02 * m),
            "mean {} far from m {m}",
            r.mean_sojourn
        );
    }

    #[test]
    fn analytic_value_inside_ci_at_moderate_load() {
        let reference_model = demo_two_phase();
        let model = TlpsModel::new(reference_model.dist().clone(), 0.7 * 11.0 / 20.0).unwrap();
        let theta = crate::threshold::approx_threshold(&model).unwrap();
        let analytic = crate::analytic::nphase_sojourn_linear(&model, theta)
            .unwrap()
            .t_total;
        let config = SimConfig {
            model,
            theta,
            num_jobs: 60_000,
            warmup_jobs: 2_000,
            seed: 42,
            replications: 8,
        };
        let r = run(&config).unwrap();
        assert!(
            (r.mean_sojourn - analytic).abs() <= r.ci99_halfwidth,
            "CI [{} ± {}] misses analytic {analytic}",
            r.mean_sojourn,
            r.ci99_halfwidth
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let config = SimConfig {
            model: demo_two_phase(),
            theta: 2.0,
            num_jobs: 5_000,
            warmup_jobs: 100,
            seed: 3,
            replications: 3,
        };
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean_sojourn.to_bits(), b.mean_sojourn.to_bits());
    }

    #[test]
    fn theta_zero_collapses_to_plain_ps() {
        let model = demo_two_phase();
        let config = SimConfig {
            model: model.clone(),
            theta: 0.0,
            num_jobs: 20_000,
            warmup_jobs: 500,
            seed: 19,
            replications: 1,
        };
        let r = run(&config).unwrap();
        let reference = reference_ps_mean(&model, 20_000, 500, stream_seed(19, 0));
        assert_close(r.rep_means[0], reference, 1e-12);
    }

    #[test]
    fn huge_theta_collapses_to_plain_ps() {
        let model = demo_two_phase();
        let config = SimConfig {
            model: model.clone(),
            theta: 1e6,
            num_jobs: 20_000,
            warmup_jobs: 500,
            seed: 23,
            replications: 1,
        };
        let r = run(&config).unwrap();
        let reference = reference_ps_mean(&model, 20_000, 500, stream_seed(23, 0));
        assert_close(r.rep_means[0], reference, 1e-12);
    }

    #[test]
    fn trace_passes_the_work_conservation_audit() {
        let config = SimConfig {
            model: demo_two_phase(),
            theta: 2.0,
            num_jobs: 5_000,
            warmup_jobs: 0,
            seed: 5,
            replications: 1,
        };
        let (_, trace) = run_traced(&config).unwrap();
        let diag = busy_period_check(&trace, 2.0).unwrap();
        assert!(diag.periods > 100, "only {} busy periods", diag.periods);
        assert!(diag.max_rel_mismatch <= 1e-9);
    }

    #[test]
    fn audit_rejects_a_tampered_trace() {
        let config = SimConfig {
            model: demo_two_phase(),
            theta: 2.0,
            num_jobs: 500,
            warmup_jobs: 0,
            seed: 5,
            replications: 1,
        };
        let (_, mut trace) = run_traced(&config).unwrap();
        // Shrink one completed job's recorded service.
        let idx = trace
            .iter()
            .position(|e| e.event == TraceEventKind::Completion)
            .unwrap();
        trace[idx].attained *= 0.5;
        assert!(matches!(
            busy_period_check(&trace, 2.0),
            Err(SimError::TraceAudit { .. })
        ));
    }

    #[test]
    fn bucket_means_grow_with_size() {
        let config = SimConfig {
            model: demo_two_phase(),
            theta: 2.0,
            num_jobs: 50_000,
            warmup_jobs: 1_000,
            seed: 31,
            replications: 4,
        };
        let r = run(&config).unwrap();
        assert_eq!(r.bucket_stats.len(), 11);
        let below: Vec<&BucketStat> = r.bucket_stats[..10]
            .iter()
            .filter(|b| b.count > 0)
            .collect();
        for w in below.windows(2) {
            assert!(
                w[1].mean > w[0].mean,
                "bucket means not increasing: {} then {}",
                w[0].mean,
                w[1].mean
            );
        }
        let total: u64 = r.bucket_stats.iter().map(|b| b.count).sum();
        assert_eq!(total, r.jobs_counted);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let model = demo_two_phase();
        let base = SimConfig {
            model,
            theta: 1.0,
            num_jobs: 100,
            warmup_jobs: 10,
            seed: 0,
            replications: 1,
        };
        let mut c = base.clone();
        c.warmup_jobs = 100;
        assert!(matches!(run(&c), Err(SimError::BadSampleWindow { .. })));
        let mut c = base.clone();
        c.replications = 0;
        assert!(matches!(run(&c), Err(SimError::NoReplications)));
        let mut c = base;
        c.theta = -1.0;
        assert!(matches!(
            run(&c),
            Err(SimError::Model(ModelError::BadThreshold(_)))
        ));
    }

    #[test]
    fn single_replication_has_zero_halfwidth() {
        let config = SimConfig {
            model: demo_two_phase(),
            theta: 1.0,
            num_jobs: 2_000,
            warmup_jobs: 100,
            seed: 1,
            replications: 1,
        };
        let r = run(&config).unwrap();
        assert_eq!(r.ci99_halfwidth, 0.0);
        assert_eq!(r.rep_means.len(), 1);
    }
}
