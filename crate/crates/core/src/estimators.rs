//! Rare-event estimators for the empirical mean `S_n = (X_1 + ... + X_n)/n`.
//!
//! Replications run in fixed-size chunks, chunk `c` drawing from
//! `RandomStream::derived(seed, c)`. Partial sums are merged in chunk order,
//! so a result depends on the seed only, never on the worker count.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_energy::FreeEnergyModel;
use crate::json;
use crate::rng::RandomStream;
use crate::scaling::DistributionModel;
use crate::tilted::{optimal_tilt, TiltedLaw};

/// Replications per random stream.
pub const CHUNK: usize = 8192;
/// Shift-IS density ratios above this are discarded.
pub const WEIGHT_LIMIT: f64 = 1e300;
/// Fraction of `n x` a summand must reach to count as the big jump.
pub const BIG_JUMP_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventShape {
    /// `S_n >= x`
    TailAtLeast,
    /// `S_n <= -x`
    TailAtMost,
    /// `|S_n - x| < delta`
    Ball { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventSpec {
    pub n: u64,
    pub x: f64,
    pub shape: EventShape,
}

impl EventSpec {
    pub fn new(n: u64, x: f64, shape: EventShape) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("x must be positive and finite, got {x}")));
        }
        if let EventShape::Ball { delta } = shape {
            if !(delta > 0.0 && delta < x) {
                return Err(Error::InvalidParameter(format!("ball radius must lie in (0, x), got {delta}")));
            }
        }
        Ok(Self { n, x, shape })
    }

    pub fn tail(n: u64, x: f64) -> Result<Self> {
        Self::new(n, x, EventShape::TailAtLeast)
    }

    pub fn lower_tail(n: u64, x: f64) -> Result<Self> {
        Self::new(n, x, EventShape::TailAtMost)
    }

    pub fn ball(n: u64, x: f64, delta: f64) -> Result<Self> {
        Self::new(n, x, EventShape::Ball { delta })
    }

    /// Whether the sum `X_1 + ... + X_n` lands in the event.
    #[inline]
    pub fn contains_sum(&self, sum: f64) -> bool {
        let nf = self.n as f64;
        match self.shape {
            EventShape::TailAtLeast => sum >= nf * self.x,
            EventShape::TailAtMost => sum <= -nf * self.x,
            EventShape::Ball { delta } => (sum / nf - self.x).abs() < delta,
        }
    }

    /// Signed location of the event: `-x` for the lower tail, `x` otherwise.
    pub fn target(&self) -> f64 {
        match self.shape {
            EventShape::TailAtMost => -self.x,
            _ => self.x,
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self.shape {
            EventShape::TailAtLeast => "tail",
            EventShape::TailAtMost => "lower-tail",
            EventShape::Ball { .. } => "ball",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self.shape {
            EventShape::Ball { delta } => Some(delta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Naive,
    EsscherIS,
    ShiftIS,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::EsscherIS => "esscher",
            Self::ShiftIS => "shift",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub method: Method,
    pub event: EventSpec,
    pub estimate: f64,
    pub standard_error: f64,
    pub replications: u64,
    /// Replications that reached the event.
    pub hits: u64,
    /// Shift-IS replications discarded for weight overflow.
    pub excluded: u64,
    pub effective_sample_size: Option<f64>,
    /// `-ln(estimate) / n^a`; `+inf` when the estimate is zero.
    pub empirical_rate: f64,
    /// Exponent `a` used for the rate.
    pub rate_exponent: f64,
    pub tilt_eta: Option<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "method,n,x,shape,delta,replications,seed,estimate,std_error,ess,tilt_eta,empirical_rate";

fn csv_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        json::number(v)
    }
}

impl EstimatorResult {
    pub fn relative_error(&self) -> f64 {
        self.standard_error / self.estimate
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(csv_number).unwrap_or_default();
        [
            self.method.to_string(),
            self.event.n.to_string(),
            csv_number(self.event.x),
            self.event.shape_name().to_string(),
            opt(self.event.delta()),
            self.replications.to_string(),
            self.seed.to_string(),
            csv_number(self.estimate),
            csv_number(self.standard_error),
            opt(self.effective_sample_size),
            opt(self.tilt_eta),
            csv_number(self.empirical_rate),
        ]
        .join(",")
    }

    pub fn to_json(&self) -> String {
        let opt = |v: Option<f64>| v.map(json::number).unwrap_or_else(|| "null".into());
        let rate = if self.empirical_rate == f64::INFINITY {
            json::string("+inf")
        } else {
            json::number(self.empirical_rate)
        };
        json::object(&[
            ("method", json::string(&self.method.to_string())),
            ("n", self.event.n.to_string()),
            ("x", json::number(self.event.x)),
            ("shape", json::string(self.event.shape_name())),
            ("delta", opt(self.event.delta())),
            ("replications", self.replications.to_string()),
            ("seed", self.seed.to_string()),
            ("estimate", json::number(self.estimate)),
            ("std_error", json::number(self.standard_error)),
            ("ess", opt(self.effective_sample_size)),
            ("tilt_eta", opt(self.tilt_eta)),
            ("empirical_rate", rate),
            ("hits", self.hits.to_string()),
            ("excluded", self.excluded.to_string()),
        ])
    }
}

pub fn empirical_rate(estimate: f64, n: u64, exponent: f64) -> f64 {
    if estimate > 0.0 {
        -estimate.ln() / (n as f64).powf(exponent)
    } else {
        f64::INFINITY
    }
}

/// Runs `body(stream, count)` on consecutive chunks and returns the chunk
/// outputs in chunk order.
fn run_chunks<T, F>(replications: u64, seed: u64, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream, usize) -> Result<T> + Sync,
{
    let chunks = replications.div_ceil(CHUNK as u64);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK as u64;
            let count = (replications - start).min(CHUNK as u64) as usize;
            body(&mut RandomStream::derived(seed, c), count)
        })
        .collect()
}

/// Weighted sums of `w 1{event}`.
#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    hits: u64,
    excluded: u64,
}

impl Moments {
    #[inline]
    fn push(&mut self, weighted: f64) {
        self.sum += weighted;
        self.sum_sq += weighted * weighted;
        self.hits += 1;
    }

    fn merge(parts: &[Moments]) -> Moments {
        parts.iter().fold(Moments::default(), |a, b| Moments {
            sum: a.sum + b.sum,
            sum_sq: a.sum_sq + b.sum_sq,
            hits: a.hits + b.hits,
            excluded: a.excluded + b.excluded,
        })
    }

    /// Mean and standard error over `used` replications.
    fn mean_and_se(&self, used: u64) -> (f64, f64) {
        if used == 0 {
            return (f64::NAN, f64::NAN);
        }
        let r = used as f64;
        let mean = self.sum / r;
        let var = if used > 1 {
            ((self.sum_sq - r * mean * mean) / (r - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / r).sqrt())
    }

    fn ess(&self) -> f64 {
        if self.sum_sq > 0.0 {
            self.sum * self.sum / self.sum_sq
        } else {
            0.0
        }
    }
}

fn check_replications(replications: u64) -> Result<()> {
    if replications == 0 {
        Err(Error::InvalidParameter("replications must be positive".into()))
    } else {
        Ok(())
    }
}

#[inline]
fn draw_rest(dist: &DistributionModel, n: u64, rng: &mut RandomStream) -> f64 {
    (1..n).map(|_| dist.draw(rng)).sum()
}

/// Plain frequency of the event.
pub fn naive_mc(dist: &DistributionModel, event: &EventSpec, replications: u64, seed: u64) -> Result<EstimatorResult> {
    check_replications(replications)?;
    let parts = run_chunks(replications, seed, |rng, count| {
        let mut hits = 0u64;
        for _ in 0..count {
            let first = dist.draw(rng);
            if event.contains_sum(first + draw_rest(dist, event.n, rng)) {
                hits += 1;
            }
        }
        Ok(hits)
    })?;
    let hits: u64 = parts.iter().sum();
    let p = hits as f64 / replications as f64;
    let exponent = dist.tail_exponent();
    Ok(EstimatorResult {
        method: Method::Naive,
        event: *event,
        estimate: p,
        standard_error: (p * (1.0 - p) / replications as f64).sqrt(),
        replications,
        hits,
        excluded: 0,
        effective_sample_size: None,
        empirical_rate: empirical_rate(p, event.n, exponent),
        rate_exponent: exponent,
        tilt_eta: None,
        seed,
    })
}

fn paired_law(dist: &DistributionModel, fe: &FreeEnergyModel) -> Result<()> {
    match fe.distribution() {
        Some(d) if d == *dist => Ok(()),
        Some(d) => Err(Error::InvalidParameter(format!("free energy belongs to {d}, not {dist}"))),
        None => Err(Error::InvalidParameter("free energy has no underlying law".into())),
    }
}

/// The tilt `esscher_is` uses for `event`: `+-eta_n` at the event location.
pub fn event_tilt(fe: &FreeEnergyModel, event: &EventSpec) -> Result<f64> {
    let eta = optimal_tilt(fe, event.n, event.x)?;
    Ok(if event.target() < 0.0 { -eta } else { eta })
}

/// Importance sampling with only `X_1` drawn from the tilt at `eta_n`.
pub fn esscher_is(
    dist: &DistributionModel,
    fe: &FreeEnergyModel,
    event: &EventSpec,
    replications: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    paired_law(dist, fe)?;
    let eta = event_tilt(fe, event)?;
    esscher_is_with_tilt(dist, fe, event, replications, seed, eta)
}

/// [`esscher_is`] at a caller-chosen tilt.
pub fn esscher_is_with_tilt(
    dist: &DistributionModel,
    fe: &FreeEnergyModel,
    event: &EventSpec,
    replications: u64,
    seed: u64,
    eta: f64,
) -> Result<EstimatorResult> {
    check_replications(replications)?;
    paired_law(dist, fe)?;
    let law = TiltedLaw::new(fe, eta)?;
    let parts = run_chunks(replications, seed, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let first = law.sample(rng)?;
            if event.contains_sum(first + draw_rest(dist, event.n, rng)) {
                m.push(law.log_weight(first).exp());
            }
        }
        Ok(m)
    })?;
    let m = Moments::merge(&parts);
    let (estimate, standard_error) = m.mean_and_se(replications);
    let exponent = fe.alpha().value();
    Ok(EstimatorResult {
        method: Method::EsscherIS,
        event: *event,
        estimate,
        standard_error,
        replications,
        hits: m.hits,
        excluded: 0,
        effective_sample_size: Some(m.ess()),
        empirical_rate: empirical_rate(estimate, event.n, exponent),
        rate_exponent: exponent,
        tilt_eta: Some(eta),
        seed,
    })
}

/// Importance sampling with `X_1` translated by `n x`.
pub fn shift_is(dist: &DistributionModel, event: &EventSpec, replications: u64, seed: u64) -> Result<EstimatorResult> {
    shift_is_with_offset(dist, event, replications, seed, event.n as f64 * event.target())
}

/// [`shift_is`] with an arbitrary translation of `X_1`.
pub fn shift_is_with_offset(
    dist: &DistributionModel,
    event: &EventSpec,
    replications: u64,
    seed: u64,
    offset: f64,
) -> Result<EstimatorResult> {
    check_replications(replications)?;
    let log_limit = WEIGHT_LIMIT.ln();
    let parts = run_chunks(replications, seed, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let base = dist.draw(rng);
            let first = base + offset;
            let log_w = if offset == 0.0 {
                0.0
            } else {
                dist.ln_density(first) - dist.ln_density(base)
            };
            let rest = draw_rest(dist, event.n, rng);
            if log_w > log_limit || log_w.is_nan() {
                m.excluded += 1;
                continue;
            }
            if event.contains_sum(first + rest) {
                m.push(log_w.exp());
            }
        }
        Ok(m)
    })?;
    let m = Moments::merge(&parts);
    let used = replications - m.excluded;
    let (estimate, standard_error) = m.mean_and_se(used);
    let exponent = dist.tail_exponent();
    Ok(EstimatorResult {
        method: Method::ShiftIS,
        event: *event,
        estimate,
        standard_error,
        replications,
        hits: m.hits,
        excluded: m.excluded,
        effective_sample_size: Some(m.ess()),
        empirical_rate: empirical_rate(estimate, event.n, exponent),
        rate_exponent: exponent,
        tilt_eta: None,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: u64,
    pub result: EstimatorResult,
    /// `xi x^a`
    pub theory_rate: f64,
}

pub const RATE_SWEEP_HEADER: &str = "n,estimate,std_error,empirical_rate,theory_rate";

impl RatePoint {
    pub fn to_csv_row(&self) -> String {
        [
            self.n.to_string(),
            csv_number(self.result.estimate),
            csv_number(self.result.standard_error),
            csv_number(self.result.empirical_rate),
            csv_number(self.theory_rate),
        ]
        .join(",")
    }
}

/// Esscher estimates of `P(S_n >= x)` along `n_grid`; entry `i` uses seed
/// `seed + i`.
pub fn rate_sweep(
    dist: &DistributionModel,
    fe: &FreeEnergyModel,
    x: f64,
    n_grid: &[u64],
    replications: u64,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid is empty".into()));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("n grid must be strictly increasing".into()));
    }
    let theory_rate = fe.xi() * x.powf(fe.alpha().value());
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let event = EventSpec::tail(n, x)?;
            let result = esscher_is(dist, fe, &event, replications, seed.wrapping_add(i as u64))?;
            Ok(RatePoint { n, result, theory_rate })
        })
        .collect()
}

/// Split of `P(S_n >= x)` by whether one summand alone reaches `n x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigJumpReport {
    pub event: EventSpec,
    /// `P(max_i X_i >= n x)`
    pub a1: f64,
    /// Whether `a1` came from a closed-form tail.
    pub a1_closed_form: bool,
    /// `P(max_i X_i < n x, S_n >= x)`
    pub a2: f64,
    pub a2_standard_error: f64,
    /// `P(S_n >= x)` from the same weighted sample.
    pub event_estimate: f64,
    /// `P(max_i X_i >= 0.8 n x | S_n >= x)`
    pub conditional_max_fraction: f64,
    pub tilt_eta: f64,
    pub replications: u64,
    pub seed: u64,
}

impl BigJumpReport {
    pub fn to_json(&self) -> String {
        json::object(&[
            ("n", self.event.n.to_string()),
            ("x", json::number(self.event.x)),
            ("A1", json::number(self.a1)),
            ("A1_closed_form", self.a1_closed_form.to_string()),
            ("A2", json::number(self.a2)),
            ("A2_std_error", json::number(self.a2_standard_error)),
            ("event_estimate", json::number(self.event_estimate)),
            ("conditional_max_fraction", json::number(self.conditional_max_fraction)),
            ("big_jump_factor", json::number(BIG_JUMP_FACTOR)),
            ("tilt_eta", json::number(self.tilt_eta)),
            ("replications", self.replications.to_string()),
            ("seed", self.seed.to_string()),
        ])
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct JumpSums {
    event: f64,
    a1: f64,
    a2: f64,
    a2_sq: f64,
    event_and_jump: f64,
}

/// Single-big-jump decomposition of `P(S_n >= x)` under Esscher weights.
pub fn big_jump_diagnostics(
    dist: &DistributionModel,
    fe: &FreeEnergyModel,
    event: &EventSpec,
    replications: u64,
    seed: u64,
) -> Result<BigJumpReport> {
    if event.shape != EventShape::TailAtLeast {
        return Err(Error::InvalidParameter("big-jump diagnostics need a tail event".into()));
    }
    check_replications(replications)?;
    paired_law(dist, fe)?;
    let eta = event_tilt(fe, event)?;
    let law = TiltedLaw::new(fe, eta)?;
    let level = event.n as f64 * event.x;
    let parts = run_chunks(replications, seed, |rng, count| {
        let mut s = JumpSums::default();
        for _ in 0..count {
            let first = law.sample(rng)?;
            let (mut sum, mut max) = (first, first);
            for _ in 1..event.n {
                let v = dist.draw(rng);
                sum += v;
                max = max.max(v);
            }
            let w = law.log_weight(first).exp();
            let hit = event.contains_sum(sum);
            if max >= level {
                s.a1 += w;
            }
            if hit {
                s.event += w;
                if max < level {
                    s.a2 += w;
                    s.a2_sq += w * w;
                }
                if max >= BIG_JUMP_FACTOR * level {
                    s.event_and_jump += w;
                }
            }
        }
        Ok(s)
    })?;
    let t = parts.iter().fold(JumpSums::default(), |a, b| JumpSums {
        event: a.event + b.event,
        a1: a.a1 + b.a1,
        a2: a.a2 + b.a2,
        a2_sq: a.a2_sq + b.a2_sq,
        event_and_jump: a.event_and_jump + b.event_and_jump,
    });
    let r = replications as f64;
    let (a1, a1_closed_form) = if dist.has_closed_tail() {
        let tail = dist.tail(level)?;
        (-(event.n as f64 * (-tail).ln_1p()).exp_m1(), true)
    } else {
        (t.a1 / r, false)
    };
    let a2 = t.a2 / r;
    let a2_var = if replications > 1 {
        ((t.a2_sq - r * a2 * a2) / (r - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(BigJumpReport {
        event: *event,
        a1,
        a1_closed_form,
        a2,
        a2_standard_error: (a2_var / r).sqrt(),
        event_estimate: t.event / r,
        conditional_max_fraction: if t.event > 0.0 { t.event_and_jump / t.event } else { f64::NAN },
        tilt_eta: eta,
        replications,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::exp_power_model;

    fn exp2() -> (DistributionModel, FreeEnergyModel) {
        let fe = exp_power_model(2.0).unwrap();
        (fe.distribution().unwrap(), fe)
    }

    #[test]
    fn event_validation() {
        assert!(EventSpec::tail(0, 1.0).is_err());
        assert!(EventSpec::tail(3, -1.0).is_err());
        assert!(EventSpec::ball(3, 1.0, 1.0).is_err());
        assert!(EventSpec::ball(3, 1.0, 0.5).is_ok());
        let e = EventSpec::ball(4, 1.0, 0.25).unwrap();
        assert!(e.contains_sum(4.5) && !e.contains_sum(5.0) && !e.contains_sum(3.0));
        let l = EventSpec::lower_tail(2, 1.0).unwrap();
        assert!(l.contains_sum(-2.0) && !l.contains_sum(-1.9));
    }

    #[test]
    fn empirical_rate_sentinel() {
        assert_eq!(empirical_rate(0.0, 10, 0.5), f64::INFINITY);
        assert!((empirical_rate((-2.0f64).exp(), 4, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unreachable_event_gives_zero() {
        let (d, _) = exp2();
        let e = EventSpec::tail(5, 1e9).unwrap();
        let r = naive_mc(&d, &e, 10_000, 3).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.empirical_rate, f64::INFINITY);
        assert!(r.to_csv_row().ends_with(",inf"));
    }

    #[test]
    fn zero_tilt_and_zero_shift_reproduce_naive_hits() {
        let (d, fe) = exp2();
        let e = EventSpec::tail(5, 1.0).unwrap();
        let naive = naive_mc(&d, &e, 20_000, 8).unwrap();
        let tilt0 = esscher_is_with_tilt(&d, &fe, &e, 20_000, 8, 0.0).unwrap();
        let shift0 = shift_is_with_offset(&d, &e, 20_000, 8, 0.0).unwrap();
        assert_eq!(naive.hits, tilt0.hits);
        assert_eq!(naive.estimate, tilt0.estimate);
        assert_eq!(naive.estimate, shift0.estimate);
    }

    #[test]
    fn mismatched_pairing_is_rejected() {
        let (_, fe) = exp2();
        let other = exp_power_model(3.0).unwrap().distribution().unwrap();
        let e = EventSpec::tail(5, 1.0).unwrap();
        assert!(matches!(esscher_is(&other, &fe, &e, 100, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn csv_row_layout() {
        let (d, fe) = exp2();
        let e = EventSpec::ball(3, 1.0, 0.5).unwrap();
        let r = esscher_is(&d, &fe, &e, 2000, 5).unwrap();
        let row = r.to_csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("esscher,3,1.0000000000000000,ball,0.50000000000000000,2000,5,"));
        let parsed: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed["method"], "esscher");
    }

    #[test]
    fn big_jump_single_summand() {
        let (d, fe) = exp2();
        let e = EventSpec::tail(1, 4.0).unwrap();
        let r = big_jump_diagnostics(&d, &fe, &e, 5000, 2).unwrap();
        assert!((r.a1 - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(r.a2, 0.0);
        assert!(r.a1_closed_form);
    }

    #[test]
    fn big_jump_closed_form_at_n_100() {
        let (d, fe) = exp2();
        let e = EventSpec::tail(100, 1.0).unwrap();
        let r = big_jump_diagnostics(&d, &fe, &e, 2000, 2).unwrap();
        let expect = 1.0 - (1.0 - 0.5 * (-10.0f64).exp()).powi(100);
        assert!((r.a1 - expect).abs() < 1e-15);
        assert!((r.a1 - 2.27e-3).abs() < 1e-5);
    }
}
