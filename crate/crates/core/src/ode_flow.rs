//! Deterministic flow analysis for smooth drift fields.
//!
//! The flow `du/dt = drift(u)` started from every direction of the unit
//! sphere decides stability: if all trajectories reach a small ball around
//! the origin in bounded time, the hitting time is a Lyapunov function and
//! the chain is positive recurrent; if all of them move past radius
//! `a > 1` by a common time without approaching the origin, the chain is
//! transient. Everything in between is reported as inconclusive.
//!
//! Integration is classic fourth-order Runge-Kutta with step halving until
//! two successive refinements agree, plus bisection-based event detection
//! on the inner ball, the escape radius, and the orthant boundary. Rates
//! are always evaluated on the orthant projection of the state while the
//! event watches the unprojected coordinates, so boundary crossings
//! terminate rather than fabricate dynamics.

use crate::drift_model::{DriftModel, ModelError, StateVector};
use crate::mesh;
use crate::rng::SplitMix64;
use crate::vecn;
use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow settings: {0}")]
    Settings(String),
    #[error("rate evaluation failed at t = {t}, state {state:?}: {source}")]
    Eval {
        t: f64,
        state: Vec<f64>,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Step control, event radii, and mesh resolution of the flow analysis.
#[derive(Debug, Clone)]
pub struct FlowSettings {
    pub h0: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Inner ball radius: reaching it counts as hitting the origin.
    pub kappa: f64,
    /// Escape radius.
    pub r_max: f64,
    /// Time budget per trajectory.
    pub t_max: f64,
    /// Directions on the quarter circle in 2D.
    pub mesh_2d: usize,
    /// Icosphere subdivision level in 3D (level 4 refines to 2562
    /// vertices over the full sphere before the orthant cut).
    pub icosphere_level: u32,
    pub h_max: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            h0: 1e-2,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            kappa: 1e-3,
            r_max: 1e3,
            t_max: 1e3,
            mesh_2d: 720,
            icosphere_level: 4,
            h_max: 1.0,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.kappa > 0.0 && self.kappa < 1.0 && self.r_max > 1.0) {
            return Err(FlowError::Settings(format!(
                "need 0 < kappa < 1 < r_max, got kappa = {}, r_max = {}",
                self.kappa, self.r_max
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(FlowError::Settings("t_max must be positive".into()));
        }
        if self.mesh_2d < 8 {
            return Err(FlowError::Settings(
                "mesh needs at least 8 directions".into(),
            ));
        }
        if !(self.h0 > 0.0 && self.h_max > 0.0 && self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(FlowError::Settings("step controls must be positive".into()));
        }
        Ok(())
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    HitInnerBall { t: f64 },
    ExceededRadius { t: f64 },
    ExitedOrthant { t: f64, coordinate: usize },
    Timeout,
}

/// Time-stamped solution samples of one flow trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectories have samples")
    }

    pub fn end_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// State norm at time `t`, linearly interpolated between samples.
    pub fn norm_at(&self, t: f64) -> f64 {
        let n = self.len();
        if t <= self.times[0] {
            return vecn::norm(self.state(0));
        }
        if t >= self.end_time() {
            return vecn::norm(self.end_state());
        }
        let i = self.times.partition_point(|&s| s <= t).min(n - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        let a = self.state(i - 1);
        let b = self.state(i);
        let point: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect();
        vecn::norm(&point)
    }

    fn push(&mut self, t: f64, state: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(state);
    }
}

fn eval_drift(model: &DriftModel, u: &[f64], t: f64) -> Result<Vec<f64>, FlowError> {
    let clamped: Vec<f64> = u.iter().map(|&c| c.max(0.0)).collect();
    let sv = StateVector::new(clamped).map_err(|source| FlowError::Eval {
        t,
        state: u.to_vec(),
        source,
    })?;
    model.drift_at(&sv).map_err(|source| FlowError::Eval {
        t,
        state: u.to_vec(),
        source,
    })
}

fn rk4_step(model: &DriftModel, u: &[f64], h: f64, t: f64) -> Result<Vec<f64>, FlowError> {
    let k1 = eval_drift(model, u, t)?;
    let k2 = eval_drift(model, &vecn::axpy(u, h / 2.0, &k1), t)?;
    let k3 = eval_drift(model, &vecn::axpy(u, h / 2.0, &k2), t)?;
    let k4 = eval_drift(model, &vecn::axpy(u, h, &k3), t)?;
    Ok(u.iter()
        .enumerate()
        .map(|(i, &ui)| ui + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

enum EventKind {
    InnerBall,
    Radius,
    Orthant(usize),
}

/// Integrate the flow from `x0` until an event, the time budget, or a rate
/// evaluation failure.
pub fn integrate(
    model: &DriftModel,
    x0: &StateVector,
    settings: &FlowSettings,
) -> Result<Trajectory, FlowError> {
    settings.validate()?;
    if x0.is_origin() {
        return Err(FlowError::Model(ModelError::Origin));
    }
    let dim = model.dim();
    if x0.dim() != dim {
        return Err(FlowError::Model(ModelError::Dimension {
            expected: dim,
            got: x0.dim(),
        }));
    }

    let mut traj = Trajectory {
        dim,
        times: Vec::new(),
        states: Vec::new(),
        termination: Termination::Timeout,
    };
    let mut u = x0.coords().to_vec();
    let mut t = 0.0;
    traj.push(t, &u);

    let r0 = vecn::norm(&u);
    if r0 <= settings.kappa {
        traj.termination = Termination::HitInnerBall { t: 0.0 };
        return Ok(traj);
    }
    if r0 >= settings.r_max {
        traj.termination = Termination::ExceededRadius { t: 0.0 };
        return Ok(traj);
    }

    let mut h = settings.h0;
    loop {
        let remaining = settings.t_max - t;
        if remaining <= 1e-12 * settings.t_max {
            traj.termination = Termination::Timeout;
            return Ok(traj);
        }
        let speed = vecn::norm(&eval_drift(model, &u, t)?).max(1e-12);
        // Step cap: at most ~5% radius change per step, so events cannot
        // be tunneled through.
        let cap = 0.05 * (vecn::norm(&u) + settings.kappa) / speed;
        h = h.min(settings.h_max).min(cap).min(remaining);
        let h_floor = 1e-12 * (1.0 + t.abs());

        let y_full = rk4_step(model, &u, h, t)?;
        let y_mid = rk4_step(model, &u, h / 2.0, t)?;
        let y_half = rk4_step(model, &y_mid, h / 2.0, t + h / 2.0)?;
        let err = vecn::dist(&y_full, &y_half);
        let tol = settings.abs_tol + settings.rel_tol * vecn::norm(&u);
        if err > tol && h > h_floor {
            h /= 2.0;
            continue;
        }

        // Event detection on the two half-steps.
        let mut done = false;
        for (start, start_t, end, span) in [
            (&u, t, &y_mid, h / 2.0),
            (&y_mid, t + h / 2.0, &y_half, h / 2.0),
        ] {
            if let Some((event, et, estate)) =
                detect_event(model, start, start_t, end, span, settings)?
            {
                traj.push(et, &estate);
                traj.termination = match event {
                    EventKind::InnerBall => Termination::HitInnerBall { t: et },
                    EventKind::Radius => Termination::ExceededRadius { t: et },
                    EventKind::Orthant(i) => Termination::ExitedOrthant {
                        t: et,
                        coordinate: i,
                    },
                };
                done = true;
                break;
            }
        }
        if done {
            return Ok(traj);
        }

        t += h;
        u = y_half;
        traj.push(t, &u);
        if err < tol / 16.0 {
            h *= 2.0;
        }
    }
}

fn detect_event(
    model: &DriftModel,
    start: &[f64],
    start_t: f64,
    end: &[f64],
    span: f64,
    settings: &FlowSettings,
) -> Result<Option<(EventKind, f64, Vec<f64>)>, FlowError> {
    let exit_eps = 1e-12 * (1.0 + vecn::norm(start));
    let mut triggers: Vec<(EventKind, Box<dyn Fn(&[f64]) -> f64>)> = Vec::new();
    if vecn::norm(end) <= settings.kappa {
        let kappa = settings.kappa;
        triggers.push((
            EventKind::InnerBall,
            Box::new(move |s: &[f64]| vecn::norm(s) - kappa),
        ));
    }
    if vecn::norm(end) >= settings.r_max {
        let r_max = settings.r_max;
        triggers.push((
            EventKind::Radius,
            Box::new(move |s: &[f64]| r_max - vecn::norm(s)),
        ));
    }
    for i in 0..start.len() {
        if end[i] < -exit_eps {
            triggers.push((EventKind::Orthant(i), Box::new(move |s: &[f64]| s[i])));
        }
    }
    if triggers.is_empty() {
        return Ok(None);
    }

    // Bisect each triggered condition for its crossing time; the earliest
    // crossing terminates the trajectory.
    let mut best: Option<(EventKind, f64, Vec<f64>)> = None;
    for (kind, g) in triggers {
        if g(start) < 0.0 {
            // Already past the threshold at the interval start (can happen
            // at the initial state of a sub-step); treat as immediate.
            if best.as_ref().is_none_or(|(_, bt, _)| start_t < *bt) {
                best = Some((kind, start_t, start.to_vec()));
            }
            continue;
        }
        let mut lo = 0.0f64;
        let mut hi = span;
        let mut state_hi = end.to_vec();
        for _ in 0..80 {
            let mid = (lo + hi) / 2.0;
            let state_mid = rk4_step(model, start, mid, start_t)?;
            if g(&state_mid) <= 0.0 {
                hi = mid;
                state_hi = state_mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + start_t + span) {
                break;
            }
        }
        let et = start_t + hi;
        if best.as_ref().is_none_or(|(_, bt, _)| et < *bt) {
            best = Some((kind, et, state_hi));
        }
    }
    Ok(best)
}

/// Time for the flow from `x` to reach the inner ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HittingTime {
    Hit { time: f64 },
    Divergent,
    Undetermined,
}

pub fn hitting_time(
    model: &DriftModel,
    x: &StateVector,
    settings: &FlowSettings,
) -> Result<HittingTime, FlowError> {
    let traj = integrate(model, x, settings)?;
    Ok(match traj.termination {
        Termination::HitInnerBall { t } => HittingTime::Hit { time: t },
        Termination::ExceededRadius { .. } => HittingTime::Divergent,
        Termination::ExitedOrthant { .. } | Termination::Timeout => HittingTime::Undetermined,
    })
}

/// Certificate that all directions expanded past a common radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionCertificate {
    pub time: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DirectionTallies {
    pub hit: usize,
    pub exceeded: usize,
    pub exited: usize,
    pub timeout: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothClassification {
    pub verdict: Verdict,
    /// Largest inner-ball hitting time over the mesh (stable case).
    pub sup_hit_time: Option<f64>,
    /// Common expansion time and radius (unstable case).
    pub expansion: Option<ExpansionCertificate>,
    pub tallies: DirectionTallies,
    pub mesh_size: usize,
}

/// Margin on the expansion radius before declaring transience.
const EXPANSION_MARGIN: f64 = 0.05;

fn sphere_mesh(dim: usize, settings: &FlowSettings) -> Result<Vec<Vec<f64>>, FlowError> {
    match dim {
        2 => Ok(mesh::quarter_circle(settings.mesh_2d)
            .into_iter()
            .map(|v| v.to_vec())
            .collect()),
        3 => Ok(mesh::icosphere_orthant(settings.icosphere_level)
            .into_iter()
            .map(|v| v.to_vec())
            .collect()),
        d => Err(FlowError::Settings(format!(
            "no sphere mesh for dimension {d}"
        ))),
    }
}

/// Classify a smooth model by integrating from every mesh direction.
///
/// Stable: every direction reaches the inner ball within the time budget
/// (certificate: the largest hitting time). Unstable: a common time at
/// which every direction sits beyond radius `1 + margin` without any
/// trajectory having approached the origin first. Mixed outcomes are
/// inconclusive.
pub fn classify_smooth(
    model: &DriftModel,
    settings: &FlowSettings,
) -> Result<SmoothClassification, FlowError> {
    settings.validate()?;
    let dirs = sphere_mesh(model.dim(), settings)?;
    let mut trajectories = Vec::with_capacity(dirs.len());
    let mut tallies = DirectionTallies::default();
    for d in &dirs {
        let traj = integrate(model, &StateVector::new(d.clone())?, settings)?;
        match traj.termination {
            Termination::HitInnerBall { .. } => tallies.hit += 1,
            Termination::ExceededRadius { .. } => tallies.exceeded += 1,
            Termination::ExitedOrthant { .. } => tallies.exited += 1,
            Termination::Timeout => tallies.timeout += 1,
        }
        trajectories.push(traj);
    }
    let mesh_size = dirs.len();

    if tallies.hit == mesh_size {
        let sup = trajectories
            .iter()
            .map(|tr| match tr.termination {
                Termination::HitInnerBall { t } => t,
                _ => unreachable!(),
            })
            .fold(0.0f64, f64::max);
        return Ok(SmoothClassification {
            verdict: Verdict::Stable,
            sup_hit_time: Some(sup),
            expansion: None,
            tallies,
            mesh_size,
        });
    }

    // Expansion check: scan candidate times up to the earliest trajectory
    // end for a common radius >= 1 + margin.
    let t_lim = trajectories
        .iter()
        .map(Trajectory::end_time)
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<ExpansionCertificate> = None;
    if t_lim > 0.0 && tallies.hit == 0 {
        const CANDIDATES: usize = 512;
        for c in 1..=CANDIDATES {
            let t = t_lim * c as f64 / CANDIDATES as f64;
            let radius = trajectories
                .iter()
                .map(|tr| tr.norm_at(t))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|b| radius > b.radius) {
                best = Some(ExpansionCertificate { time: t, radius });
            }
        }
    }
    if let Some(cert) = best
        && cert.radius >= 1.0 + EXPANSION_MARGIN
    {
        return Ok(SmoothClassification {
            verdict: Verdict::Unstable,
            sup_hit_time: None,
            expansion: Some(cert),
            tallies,
            mesh_size,
        });
    }
    Ok(SmoothClassification {
        verdict: Verdict::Inconclusive,
        sup_hit_time: None,
        expansion: best,
        tallies,
        mesh_size,
    })
}

/// Report of the flow scaling identity `u_from(K*x)(t) = K * u_from(x)(t/K)`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub max_rel_deviation: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Verify the scaling identity on 20 random directions for K in {2, 10}
/// with fixed-step integration on matched time grids. Deviations are
/// relative to `K * (1 + |u|)`; any 0-homogeneous field passes at 1e-6.
pub fn scaling_check(
    model: &DriftModel,
    settings: &FlowSettings,
    seed: u64,
) -> Result<ScalingReport, FlowError> {
    settings.validate()?;
    let mut rng = SplitMix64::new(seed);
    let dim = model.dim();
    let horizon = 0.5f64.min(settings.t_max / 2.0);
    let steps = 512usize;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = rng.orthant_direction(dim);
        for k in [2.0f64, 10.0] {
            let big = vecn::scaled(&x, k);
            let h_big = horizon / steps as f64;
            let h_small = horizon / (k * steps as f64);
            let mut u_big = big.clone();
            let mut u_small = x.clone();
            for j in 0..steps {
                let t = j as f64 * h_big;
                u_big = rk4_step(model, &u_big, h_big, t)?;
                u_small = rk4_step(model, &u_small, h_small, t / k)?;
                let dev = vecn::dist(&u_big, &vecn::scaled(&u_small, k))
                    / (k * (1.0 + vecn::norm(&u_small)));
                worst = worst.max(dev);
            }
        }
    }
    Ok(ScalingReport {
        max_rel_deviation: worst,
        pass: worst <= 1e-6,
        tolerance: 1e-6,
    })
}
