//! Event-driven simulation of the lattice chain.
//!
//! The chain lives on the integer orthant with one birth and one death
//! clock per coordinate; death clocks of empty coordinates are off. Each
//! event draws an exponential waiting time at the total rate by inverse
//! CDF, then picks the transition by a cumulative scan in fixed coordinate
//! order (births first, then deaths), so a run is a pure function of
//! `(rng algorithm, seed)`.
//!
//! Summaries accumulate sojourn-weighted statistics: time share per
//! support pattern, escape slopes `X_T / T`, and returns to a compact ball
//! around the origin. Replica sets run in parallel with seeds derived
//! from the master seed by counter, and aggregate in replica order.

use crate::drift_model::{DriftModel, ModelError, SupportPatternDrift};
use crate::rng::{RNG_ALGORITHM, SplitMix64};

use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("initial state has dimension {got}, model needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("rate evaluation failed at state {state:?}: {source}")]
    Eval {
        state: Vec<u64>,
        #[source]
        source: ModelError,
    },
    #[error("pinning requires a 3-dimensional support-pattern model")]
    PinUnsupported,
    #[error("pinned coordinate {0} out of range")]
    BadPin(usize),
}

/// Run length: a number of events or a stretch of simulated time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Events(u64),
    Time(f64),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon: Horizon,
    pub initial: Vec<u64>,
    /// Radius of the compact set whose returns are counted.
    pub compact_radius: f64,
    pub replicas: usize,
    /// Median escape slope at or below this reads as recurrent.
    pub slope_lo: f64,
    /// Escape slopes at or above this in every replica read as transient.
    pub slope_hi: f64,
    /// Record every n-th event into the trace when set.
    pub record_every: Option<u64>,
}

impl SimConfig {
    fn validate(&self, dim: usize) -> Result<(), SimError> {
        match self.horizon {
            Horizon::Events(0) => return Err(SimError::Config("event horizon is zero".into())),
            Horizon::Time(t) if !(t > 0.0) => {
                return Err(SimError::Config("time horizon must be positive".into()));
            }
            _ => {}
        }
        if self.initial.len() != dim {
            return Err(SimError::Dimension {
                expected: dim,
                got: self.initial.len(),
            });
        }
        if self.replicas == 0 {
            return Err(SimError::Config("at least one replica".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub state: Vec<u64>,
}

/// Sojourn-weighted statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub end_state: Vec<u64>,
    pub elapsed: f64,
    pub events: u64,
    /// `X_T / T` per coordinate.
    pub coordinate_slopes: Vec<f64>,
    /// `|X_T| / T`.
    pub norm_slope: f64,
    /// Jumps landing in the compact ball (visit counting, so the mean
    /// return time below is the Kac recurrence time of the ball under the
    /// jump chain).
    pub returns: u64,
    /// Mean time between successive landings in the compact ball.
    pub mean_return_time: Option<f64>,
    /// Time share per support pattern, indexed by bitmask (origin at 0);
    /// sums to one.
    pub occupancy: Vec<f64>,
    /// The chain reached a state with zero total rate.
    pub absorbed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

fn state_mask(state: &[u64]) -> usize {
    state
        .iter()
        .enumerate()
        .fold(0usize, |m, (i, &c)| if c > 0 { m | (1 << i) } else { m })
}

/// Birth and masked death rates at an integer state. At the origin the
/// direction of the state is undefined; rates are taken from the all-ones
/// direction unless the model pins explicit origin births.
fn rates_at_state(model: &DriftModel, state: &[u64]) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let dim = state.len();
    if state.iter().all(|&c| c == 0) {
        if let DriftModel::Support(m) = model
            && let Some(b) = m.origin_birth()
        {
            return Ok((b.to_vec(), vec![0.0; dim]));
        }
        let ones = vec![1.0; dim];
        let rates = model.rates_at(&ones).map_err(|source| SimError::Eval {
            state: state.to_vec(),
            source,
        })?;
        return Ok((rates.birth, vec![0.0; dim]));
    }
    let x: Vec<f64> = state.iter().map(|&c| c as f64).collect();
    let rates = model.rates_at(&x).map_err(|source| SimError::Eval {
        state: state.to_vec(),
        source,
    })?;
    let masked: Vec<f64> = rates
        .death
        .iter()
        .zip(state)
        .map(|(&d, &c)| if c > 0 { d } else { 0.0 })
        .collect();
    Ok((rates.birth, masked))
}

/// Simulate a single run.
pub fn simulate(model: &DriftModel, config: &SimConfig) -> Result<SimSummary, SimError> {
    let dim = model.dim();
    config.validate(dim)?;
    let mut rng = SplitMix64::new(config.seed);
    let mut state = config.initial.clone();
    let mut t = 0.0f64;
    let mut events = 0u64;
    let mut occupancy = vec![0.0f64; 1 << dim];
    let mut absorbed = false;
    let mut trace = config.record_every.map(|_| {
        vec![TracePoint {
            t: 0.0,
            state: state.clone(),
        }]
    });

    let norm_of = |s: &[u64]| -> f64 {
        s.iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    };
    let mut returns = 0u64;
    let mut last_landing: Option<f64> = None;
    let mut gap_sum = 0.0f64;

    let horizon_time = match config.horizon {
        Horizon::Time(t) => Some(t),
        Horizon::Events(_) => None,
    };

    loop {
        if let Horizon::Events(e) = config.horizon
            && events >= e
        {
            break;
        }
        let (births, deaths) = rates_at_state(model, &state)?;
        let total: f64 = births.iter().sum::<f64>() + deaths.iter().sum::<f64>();
        if total <= 0.0 {
            absorbed = true;
            if let Some(t_end) = horizon_time {
                occupancy[state_mask(&state)] += t_end - t;
                t = t_end;
            }
            break;
        }
        let dt = rng.next_exp(total);
        if let Some(t_end) = horizon_time
            && t + dt > t_end
        {
            occupancy[state_mask(&state)] += t_end - t;
            t = t_end;
            break;
        }
        occupancy[state_mask(&state)] += dt;
        t += dt;

        // Cumulative-rate scan in fixed order: births 1..d, deaths 1..d.
        let draw = rng.next_f64() * total;
        let mut acc = 0.0f64;
        let mut applied = false;
        for i in 0..dim {
            if births[i] > 0.0 {
                acc += births[i];
                if draw < acc {
                    state[i] += 1;
                    applied = true;
                    break;
                }
            }
        }
        if !applied {
            for i in 0..dim {
                if deaths[i] > 0.0 {
                    acc += deaths[i];
                    if draw < acc {
                        state[i] -= 1;
                        applied = true;
                        break;
                    }
                }
            }
        }
        if !applied {
            // Rounding put the draw at the very top of the range; take the
            // last positive clock.
            for i in (0..dim).rev() {
                if deaths[i] > 0.0 {
                    state[i] -= 1;
                    applied = true;
                    break;
                }
            }
            if !applied {
                for i in (0..dim).rev() {
                    if births[i] > 0.0 {
                        state[i] += 1;
                        break;
                    }
                }
            }
        }
        events += 1;

        if norm_of(&state) <= config.compact_radius {
            if let Some(prev) = last_landing {
                gap_sum += t - prev;
            }
            returns += 1;
            last_landing = Some(t);
        }

        if let (Some(points), Some(every)) = (trace.as_mut(), config.record_every)
            && events.is_multiple_of(every)
        {
            points.push(TracePoint {
                t,
                state: state.clone(),
            });
        }
    }

    let elapsed = t.max(f64::MIN_POSITIVE);
    let total_occ: f64 = occupancy.iter().sum();
    if total_occ > 0.0 {
        for o in occupancy.iter_mut() {
            *o /= total_occ;
        }
    }
    Ok(SimSummary {
        seed: config.seed,
        rng_algorithm: RNG_ALGORITHM,
        coordinate_slopes: state.iter().map(|&c| c as f64 / elapsed).collect(),
        norm_slope: norm_of(&state) / elapsed,
        end_state: state,
        elapsed: t,
        events,
        returns,
        mean_return_time: if returns >= 2 {
            Some(gap_sum / (returns - 1) as f64)
        } else {
            None
        },
        occupancy,
        absorbed,
        trace,
    })
}

/// Empirical counterpart of the analytic verdicts. Advisory only: it is
/// reported next to them and never overrides them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalVerdict {
    EmpiricallyStable,
    EmpiricallyUnstable,
    Inconclusive,
}

impl EmpiricalVerdict {
    pub fn as_verdict(self) -> Verdict {
        match self {
            EmpiricalVerdict::EmpiricallyStable => Verdict::Stable,
            EmpiricalVerdict::EmpiricallyUnstable => Verdict::Unstable,
            EmpiricalVerdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceEstimate {
    pub verdict: EmpiricalVerdict,
    pub median_slope: f64,
    pub slopes: Vec<f64>,
    pub returns: Vec<u64>,
    pub summaries: Vec<SimSummary>,
}

/// Run replicas with counter-derived seeds and classify by escape slope:
/// recurrent when the median slope is at most `slope_lo` and every replica
/// returned to the compact set, transient when every replica's slope is at
/// least `slope_hi`.
pub fn estimate_recurrence(
    model: &DriftModel,
    config: &SimConfig,
) -> Result<RecurrenceEstimate, SimError> {
    config.validate(model.dim())?;
    let results: Vec<Result<SimSummary, SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.replicas)
            .map(|r| {
                let cfg = SimConfig {
                    seed: config.seed.wrapping_add(r as u64),
                    record_every: None,
                    ..config.clone()
                };
                scope.spawn(move || simulate(model, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica thread"))
            .collect()
    });
    let summaries: Vec<SimSummary> = results.into_iter().collect::<Result<_, _>>()?;

    let slopes: Vec<f64> = summaries.iter().map(|s| s.norm_slope).collect();
    let returns: Vec<u64> = summaries.iter().map(|s| s.returns).collect();
    let mut sorted = slopes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
    let median_slope = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let verdict = if median_slope <= config.slope_lo && returns.iter().all(|&r| r > 0) {
        EmpiricalVerdict::EmpiricallyStable
    } else if slopes.iter().all(|&s| s >= config.slope_hi) {
        EmpiricalVerdict::EmpiricallyUnstable
    } else {
        EmpiricalVerdict::Inconclusive
    };
    Ok(RecurrenceEstimate {
        verdict,
        median_slope,
        slopes,
        returns,
        summaries,
    })
}

/// Boundary occupancies of a three-coordinate model with one coordinate
/// pinned busy, and the long-run drift of the pinned coordinate assembled
/// from them.
#[derive(Debug, Clone, Serialize)]
pub struct PinnedOccupancy {
    pub pinned: usize,
    /// Time shares of the other two coordinates being (empty, empty),
    /// (busy, empty), (empty, busy), (busy, busy), in that order, the
    /// first of the pair being the lower coordinate index.
    pub pi: [f64; 4],
    /// Pattern-weighted drift of the pinned coordinate; a negative value
    /// is the boundary condition for its stability.
    pub boundary_drift: f64,
    /// False when the pinned two-coordinate chain itself looked transient,
    /// which makes the occupancies meaningless.
    pub reliable: bool,
    pub pinned_verdict: EmpiricalVerdict,
}

/// Simulate the two free coordinates of a 3D support-pattern model with
/// coordinate `pinned` treated as permanently busy, and assemble the
/// pinned coordinate's stationary drift from the boundary occupancies.
pub fn pinned_face_occupancy(
    model: &SupportPatternDrift,
    pinned: usize,
    config: &SimConfig,
) -> Result<PinnedOccupancy, SimError> {
    if model.dim() != 3 {
        return Err(SimError::PinUnsupported);
    }
    if pinned >= 3 {
        return Err(SimError::BadPin(pinned));
    }
    let free: Vec<usize> = (0..3).filter(|&i| i != pinned).collect();
    let (i, j) = (free[0], free[1]);
    let expand = |mask2: usize| -> u32 {
        let mut m = 1u32 << pinned;
        if mask2 & 0b01 != 0 {
            m |= 1 << i;
        }
        if mask2 & 0b10 != 0 {
            m |= 1 << j;
        }
        m
    };
    let mut table = Vec::with_capacity(3);
    for mask2 in 1usize..=3 {
        let src = model.pattern(expand(mask2));
        table.push(crate::drift_model::PatternRates {
            birth: vec![src.birth[i], src.birth[j]],
            death: vec![src.death[i], src.death[j]],
        });
    }
    let origin_src = model.pattern(1 << pinned);
    let projected = SupportPatternDrift::new(2, table)
        .map_err(|source| SimError::Eval {
            state: vec![],
            source,
        })?
        .with_origin_birth(vec![origin_src.birth[i], origin_src.birth[j]])
        .map_err(|source| SimError::Eval {
            state: vec![],
            source,
        })?;
    let projected = DriftModel::Support(projected);

    let cfg2 = SimConfig {
        initial: vec![config.initial[i], config.initial[j]],
        ..config.clone()
    };
    let est = estimate_recurrence(&projected, &cfg2)?;

    // Aggregate occupancies over replicas, weighted by elapsed time.
    let mut pi = [0.0f64; 4];
    let mut total = 0.0;
    for s in &est.summaries {
        for (mask2, share) in s.occupancy.iter().enumerate() {
            pi[mask2] += share * s.elapsed;
        }
        total += s.elapsed;
    }
    if total > 0.0 {
        for p in pi.iter_mut() {
            *p /= total;
        }
    }

    // Drift of the pinned coordinate per boundary pattern of the others.
    let drift_k = |mask2: usize| -> f64 { model.masked_drift(expand(mask2))[pinned] };
    let boundary_drift = pi[0] * drift_k(0b00)
        + pi[1] * drift_k(0b01)
        + pi[2] * drift_k(0b10)
        + pi[3] * drift_k(0b11);

    Ok(PinnedOccupancy {
        pinned,
        pi,
        boundary_drift,
        reliable: est.verdict != EmpiricalVerdict::EmpiricallyUnstable,
        pinned_verdict: est.verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::drift_model::PatternRates;

    fn coupled2(a: [f64; 2], lambda: [f64; 2]) -> DriftModel {
        DriftModel::Support(catalog::coupled2_model(a, lambda).unwrap())
    }

    fn config(seed: u64, horizon: Horizon, initial: Vec<u64>) -> SimConfig {
        SimConfig {
            seed,
            horizon,
            initial,
            compact_radius: 20.0,
            replicas: 3,
            slope_lo: 0.02,
            slope_hi: 0.1,
            record_every: None,
        }
    }

    #[test]
    fn identical_seeds_reproduce_bit_for_bit() {
        let m = coupled2([0.6, 0.6], [0.3, 0.3]);
        let cfg = config(99, Horizon::Time(5e3), vec![10, 10]);
        let a = simulate(&m, &cfg).unwrap();
        let b = simulate(&m, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rng_algorithm, "splitmix64");
        let c = simulate(&m, &SimConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.end_state, c.end_state);
    }

    #[test]
    fn occupancy_fractions_sum_to_one() {
        let m = coupled2([0.6, 0.6], [0.3, 0.3]);
        let s = simulate(&m, &config(7, Horizon::Time(1e4), vec![5, 5])).unwrap();
        let total: f64 = s.occupancy.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
        assert_eq!(s.occupancy.len(), 4);
    }

    #[test]
    fn event_horizon_counts_events() {
        let m = coupled2([0.6, 0.6], [0.3, 0.3]);
        let s = simulate(&m, &config(7, Horizon::Events(1000), vec![5, 5])).unwrap();
        assert_eq!(s.events, 1000);
    }

    #[test]
    fn single_queue_idle_fraction_matches_mm1() {
        // Coordinate 2 never moves: lambda2 = 0 and it starts empty, so
        // coordinate 1 is an M/M/1 with rho = 0.5 and idle fraction 0.5.
        let m = DriftModel::Support(
            SupportPatternDrift::new(
                2,
                vec![
                    PatternRates {
                        birth: vec![0.5, 0.0],
                        death: vec![1.0, 0.0],
                    },
                    PatternRates {
                        birth: vec![0.5, 0.0],
                        death: vec![0.0, 1.0],
                    },
                    PatternRates {
                        birth: vec![0.5, 0.0],
                        death: vec![1.0, 1.0],
                    },
                ],
            )
            .unwrap(),
        );
        let s = simulate(&m, &config(3, Horizon::Time(1e6), vec![0, 0])).unwrap();
        let idle = s.occupancy[0];
        assert!((idle - 0.5).abs() < 0.01, "idle fraction {idle}");
    }

    #[test]
    fn no_arrivals_absorbs_at_origin() {
        let m = coupled2([0.6, 0.6], [0.0, 0.0]);
        let s = simulate(&m, &config(5, Horizon::Time(1e3), vec![5, 5])).unwrap();
        assert!(s.absorbed);
        assert_eq!(s.end_state, vec![0, 0]);
        assert!(
            (s.elapsed - 1e3).abs() < 1e-9,
            "clock runs out at the horizon"
        );
    }

    #[test]
    fn stable_load_is_empirically_stable() {
        let m = coupled2([0.6, 0.6], [0.3, 0.3]);
        let cfg = config(42, Horizon::Time(2e5), vec![50, 50]);
        let est = estimate_recurrence(&m, &cfg).unwrap();
        assert_eq!(est.verdict, EmpiricalVerdict::EmpiricallyStable);
        assert!(est.returns.iter().all(|&r| r > 0));
    }

    #[test]
    fn overloaded_queue_is_empirically_unstable() {
        let m = coupled2([0.6, 0.6], [0.5, 0.9]);
        let cfg = config(42, Horizon::Time(1e5), vec![50, 50]);
        let est = estimate_recurrence(&m, &cfg).unwrap();
        assert_eq!(est.verdict, EmpiricalVerdict::EmpiricallyUnstable);
        assert!(est.median_slope > 0.1);
    }

    #[test]
    fn trace_thinning_records_every_nth_event() {
        let m = coupled2([0.6, 0.6], [0.3, 0.3]);
        let cfg = SimConfig {
            record_every: Some(100),
            ..config(11, Horizon::Events(1000), vec![5, 5])
        };
        let s = simulate(&m, &cfg).unwrap();
        let trace = s.trace.unwrap();
        assert_eq!(
            trace.len(),
            11,
            "initial point plus every 100th of 1000 events"
        );
        assert!(trace.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn pinned_independent_servers_factorize() {
        // Unit contention rates make the three queues independent M/M/1s;
        // with load 0.5 each, the doubly-idle share is 0.25.
        let m = catalog::coupled3_model(
            [1.0, 1.0, 1.0],
            [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
            [0.5, 0.5, 0.5],
        )
        .unwrap();
        let cfg = config(9, Horizon::Time(1e6), vec![10, 10, 10]);
        let occ = pinned_face_occupancy(&m, 2, &cfg).unwrap();
        assert!(occ.reliable);
        assert!((occ.pi[0] - 0.25).abs() < 0.02, "pi00 = {}", occ.pi[0]);
        // boundary drift of coordinate 3: 0.5 - 1 = -0.5 in every pattern.
        assert!((occ.boundary_drift - (-0.5)).abs() < 0.02);
    }

    #[test]
    fn pinned_occupancy_with_starved_first_queue() {
        let m = catalog::coupled3_model(
            [1.0, 1.0, 1.0],
            [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
            [0.0, 0.5, 0.5],
        )
        .unwrap();
        let cfg = config(9, Horizon::Time(5e5), vec![0, 10, 10]);
        let occ = pinned_face_occupancy(&m, 2, &cfg).unwrap();
        // Queue 1 never fills: the (busy, empty) share vanishes.
        assert!(occ.pi[1] < 1e-9, "pi10 = {}", occ.pi[1]);
    }
}
