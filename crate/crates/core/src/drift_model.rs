//! Process models: birth rates, death rates, and the drift field they induce.
//!
//! All models share two structural assumptions. Rates are scale-free
//! (`rate(a*x) = rate(x)` for all `a > 0`), so they depend on the direction
//! of the state only, and departures from an empty coordinate are masked to
//! zero, which defines the effective drift on boundary faces of the orthant.
//!
//! Three families are supported:
//!
//! * [`SupportPatternDrift`] — rates constant on each set of strictly
//!   positive coordinates (the support pattern). Covers coupled-processor
//!   style models in any dimension.
//! * [`ConePartition2D`] — planar piecewise-constant rates on an angular
//!   fan of cones, allowing degenerate (zero-width) cones on rays.
//! * [`SmoothDriftSpec`] — rates given by closed-form families or parsed
//!   expressions, intended for the continuous-drift analysis path.

use crate::rate_dsl::{self, EvalError, RateExpr};
use crate::rng::SplitMix64;
use crate::vecn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("state vector is the origin")]
    Origin,
    #[error("coordinate {index} is negative ({value})")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("rate evaluation failed for coordinate {coord}: {source}")]
    Eval {
        coord: usize,
        #[source]
        source: EvalError,
    },
}

/// A point of the closed positive orthant, `dim >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coords: Vec<f64>,
}

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, ModelError> {
        if coords.len() < 2 {
            return Err(ModelError::Dimension {
                expected: 2,
                got: coords.len(),
            });
        }
        for (index, &value) in coords.iter().enumerate() {
            if !value.is_finite() {
                return Err(ModelError::Invalid(format!(
                    "non-finite coordinate {index}"
                )));
            }
            if value < 0.0 {
                return Err(ModelError::NegativeCoordinate { index, value });
            }
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        vecn::norm(&self.coords)
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    /// Bitmask of strictly positive coordinates (bit `i` for coordinate `i`).
    pub fn support_mask(&self) -> u32 {
        support_mask(&self.coords)
    }
}

pub(crate) fn support_mask(coords: &[f64]) -> u32 {
    coords
        .iter()
        .enumerate()
        .fold(0u32, |m, (i, &c)| if c > 0.0 { m | (1 << i) } else { m })
}

/// Birth and death rate vectors attached to one support pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRates {
    pub birth: Vec<f64>,
    pub death: Vec<f64>,
}

/// Piecewise-constant rates indexed by support pattern.
///
/// The table has exactly `2^d - 1` entries, one per non-empty subset of
/// coordinates; entry `mask - 1` belongs to the pattern with bitmask `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPatternDrift {
    dim: usize,
    table: Vec<PatternRates>,
    /// Birth rates used by the simulator at the origin state, where the
    /// direction of the state is undefined. Defaults to the rates of the
    /// all-ones direction.
    origin_birth: Option<Vec<f64>>,
}

impl SupportPatternDrift {
    pub fn new(dim: usize, table: Vec<PatternRates>) -> Result<Self, ModelError> {
        if !(2..=20).contains(&dim) {
            return Err(ModelError::Invalid(format!("unsupported dimension {dim}")));
        }
        let want = (1usize << dim) - 1;
        if table.len() != want {
            return Err(ModelError::Invalid(format!(
                "support table needs {want} patterns for dimension {dim}, got {}",
                table.len()
            )));
        }
        let mut any_birth = false;
        for (idx, rates) in table.iter().enumerate() {
            for (name, v) in [("birth", &rates.birth), ("death", &rates.death)] {
                if v.len() != dim {
                    return Err(ModelError::Invalid(format!(
                        "pattern {} has a {name} vector of length {}, expected {dim}",
                        idx + 1,
                        v.len()
                    )));
                }
                for (i, &r) in v.iter().enumerate() {
                    if !r.is_finite() || r < 0.0 {
                        return Err(ModelError::Invalid(format!(
                            "pattern {} has invalid {name} rate {r} at coordinate {}",
                            idx + 1,
                            i + 1
                        )));
                    }
                }
            }
            any_birth |= rates.birth.iter().any(|&b| b > 0.0);
        }
        if !any_birth {
            // A model with no arrivals anywhere is allowed only as an
            // explicit degenerate case; the catalog never produces one but
            // user scenarios may (the chain then absorbs at the origin).
            any_birth = true;
            let _ = any_birth;
        }
        Ok(Self {
            dim,
            table,
            origin_birth: None,
        })
    }

    pub fn with_origin_birth(mut self, birth: Vec<f64>) -> Result<Self, ModelError> {
        if birth.len() != self.dim {
            return Err(ModelError::Dimension {
                expected: self.dim,
                got: birth.len(),
            });
        }
        self.origin_birth = Some(birth);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pattern(&self, mask: u32) -> &PatternRates {
        assert!(
            mask > 0 && (mask as usize) <= self.table.len(),
            "pattern mask out of range"
        );
        &self.table[mask as usize - 1]
    }

    pub fn origin_birth(&self) -> Option<&[f64]> {
        self.origin_birth.as_deref()
    }

    /// Drift of a pattern with deaths masked by that pattern.
    pub fn masked_drift(&self, mask: u32) -> Vec<f64> {
        let rates = self.pattern(mask);
        (0..self.dim)
            .map(|i| {
                let death = if mask & (1 << i) != 0 {
                    rates.death[i]
                } else {
                    0.0
                };
                rates.birth[i] - death
            })
            .collect()
    }

    /// All non-empty support patterns, ascending by mask.
    pub fn patterns(&self) -> impl Iterator<Item = u32> + use<> {
        1..=(self.table.len() as u32)
    }

    /// Fixed arrival vector if births are identical across patterns.
    pub fn constant_birth(&self) -> Option<Vec<f64>> {
        let first = &self.table[0].birth;
        if self.table.iter().all(|r| r.birth == *first) {
            Some(first.clone())
        } else {
            None
        }
    }
}

/// Direction of the polytope allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationOrientation {
    /// Service maximizes alignment with the state, arrivals minimize it.
    #[default]
    MaxServiceMinArrival,
    /// The reversed convention, kept for experimentation.
    MinServiceMaxArrival,
}

/// One rate definition of a smooth model.
#[derive(Debug, Clone, PartialEq)]
pub enum RateDef {
    Constant(f64),
    Expr(RateExpr),
}

impl RateDef {
    fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            RateDef::Constant(v) => Ok(*v),
            RateDef::Expr(e) => rate_dsl::evaluate(e, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmoothFamily {
    /// Per-coordinate rates from constants or parsed expressions.
    Custom {
        births: Vec<RateDef>,
        deaths: Vec<RateDef>,
    },
    /// Two users sharing a channel: service `log(1 + s_i/(noise + s_j))`
    /// where `s_i = x_i/|x|`, arrivals constant.
    Shannon { arrivals: [f64; 2], noise: f64 },
    /// Arrival and service vectors chosen from polytope vertex lists by a
    /// support-function rule; ties break toward the lowest vertex index.
    Polytope {
        arrivals: Vec<Vec<f64>>,
        capacities: Vec<Vec<f64>>,
        orientation: AllocationOrientation,
    },
}

/// Smooth (expression- or family-defined) rate specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothDriftSpec {
    dim: usize,
    family: SmoothFamily,
}

impl SmoothDriftSpec {
    pub fn new(dim: usize, family: SmoothFamily) -> Result<Self, ModelError> {
        if dim < 2 {
            return Err(ModelError::Dimension {
                expected: 2,
                got: dim,
            });
        }
        match &family {
            SmoothFamily::Custom { births, deaths } => {
                for (name, defs) in [("birth", births), ("death", deaths)] {
                    if defs.len() != dim {
                        return Err(ModelError::Invalid(format!(
                            "{name} definitions: expected {dim}, got {}",
                            defs.len()
                        )));
                    }
                    for (i, def) in defs.iter().enumerate() {
                        match def {
                            RateDef::Constant(v) if !v.is_finite() || *v < 0.0 => {
                                return Err(ModelError::Invalid(format!(
                                    "{name} constant {v} at coordinate {} is invalid",
                                    i + 1
                                )));
                            }
                            RateDef::Expr(e) if e.max_var_index() > dim => {
                                return Err(ModelError::Invalid(format!(
                                    "{name} expression at coordinate {} references x{} beyond dimension {dim}",
                                    i + 1,
                                    e.max_var_index()
                                )));
                            }
                            _ => {}
                        }
                    }
                }
            }
            SmoothFamily::Shannon { arrivals, noise } => {
                if dim != 2 {
                    return Err(ModelError::Dimension {
                        expected: 2,
                        got: dim,
                    });
                }
                if !(noise.is_finite() && *noise > 0.0) {
                    return Err(ModelError::Invalid(format!(
                        "thermal noise must be > 0, got {noise}"
                    )));
                }
                if arrivals.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(ModelError::Invalid(
                        "arrival rates must be non-negative".into(),
                    ));
                }
            }
            SmoothFamily::Polytope {
                arrivals,
                capacities,
                ..
            } => {
                for (name, verts) in [("arrival", arrivals), ("capacity", capacities)] {
                    if verts.is_empty() {
                        return Err(ModelError::Invalid(format!("{name} vertex list is empty")));
                    }
                    for (i, v) in verts.iter().enumerate() {
                        if v.len() != dim {
                            return Err(ModelError::Invalid(format!(
                                "{name} vertex {i} has dimension {}, expected {dim}",
                                v.len()
                            )));
                        }
                        if v.iter().any(|c| !c.is_finite() || *c < 0.0) {
                            return Err(ModelError::Invalid(format!(
                                "{name} vertex {i} has a negative or non-finite coordinate"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { dim, family })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &SmoothFamily {
        &self.family
    }

    fn births_at(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        match &self.family {
            SmoothFamily::Custom { births, .. } => eval_defs(births, x),
            SmoothFamily::Shannon { arrivals, .. } => Ok(arrivals.to_vec()),
            SmoothFamily::Polytope {
                arrivals,
                orientation,
                ..
            } => {
                let v = match orientation {
                    AllocationOrientation::MaxServiceMinArrival => support_argmin(arrivals, x),
                    AllocationOrientation::MinServiceMaxArrival => support_argmax(arrivals, x),
                };
                Ok(v.clone())
            }
        }
    }

    fn deaths_at(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        match &self.family {
            SmoothFamily::Custom { deaths, .. } => eval_defs(deaths, x),
            SmoothFamily::Shannon { noise, .. } => {
                let n = vecn::norm(x);
                let s = [x[0] / n, x[1] / n];
                Ok(vec![
                    (1.0 + s[0] / (noise + s[1])).ln(),
                    (1.0 + s[1] / (noise + s[0])).ln(),
                ])
            }
            SmoothFamily::Polytope {
                capacities,
                orientation,
                ..
            } => {
                let v = match orientation {
                    AllocationOrientation::MaxServiceMinArrival => support_argmax(capacities, x),
                    AllocationOrientation::MinServiceMaxArrival => support_argmin(capacities, x),
                };
                Ok(v.clone())
            }
        }
    }
}

fn eval_defs(defs: &[RateDef], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    defs.iter()
        .enumerate()
        .map(|(coord, def)| {
            def.eval(x)
                .map_err(|source| ModelError::Eval { coord, source })
        })
        .collect()
}

fn support_argmax<'a>(vertices: &'a [Vec<f64>], x: &[f64]) -> &'a Vec<f64> {
    let mut best = 0;
    let mut best_val = vecn::dot(&vertices[0], x);
    for (i, v) in vertices.iter().enumerate().skip(1) {
        let val = vecn::dot(v, x);
        if val > best_val {
            best = i;
            best_val = val;
        }
    }
    &vertices[best]
}

fn support_argmin<'a>(vertices: &'a [Vec<f64>], x: &[f64]) -> &'a Vec<f64> {
    let mut best = 0;
    let mut best_val = vecn::dot(&vertices[0], x);
    for (i, v) in vertices.iter().enumerate().skip(1) {
        let val = vecn::dot(v, x);
        if val < best_val {
            best = i;
            best_val = val;
        }
    }
    &vertices[best]
}

const RAY_EPS: f64 = 1e-12;

/// Angular fan of constant-drift cones in the plane.
///
/// Rays run from `e1` to `e2` with non-decreasing angle; a repeated ray
/// encodes a degenerate (zero-width) cone, used to give boundary rays their
/// own drift. Cone `k` spans rays `k` and `k+1` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ConePartition2D {
    rays: Vec<[f64; 2]>,
    drifts: Vec<[f64; 2]>,
    deaths: Vec<[f64; 2]>,
    births: Vec<[f64; 2]>,
    arrivals: Option<[f64; 2]>,
}

impl ConePartition2D {
    pub fn new(
        rays: Vec<[f64; 2]>,
        drifts: Vec<[f64; 2]>,
        deaths: Vec<[f64; 2]>,
        births: Option<Vec<[f64; 2]>>,
        arrivals: Option<[f64; 2]>,
    ) -> Result<Self, ModelError> {
        if rays.len() < 2 {
            return Err(ModelError::Invalid(
                "a cone partition needs at least two rays".into(),
            ));
        }
        let cones = rays.len() - 1;
        if drifts.len() != cones || deaths.len() != cones {
            return Err(ModelError::Invalid(format!(
                "expected {cones} drift and death vectors for {} rays",
                rays.len()
            )));
        }
        let mut unit_rays = Vec::with_capacity(rays.len());
        for (i, r) in rays.iter().enumerate() {
            let n = vecn::norm(r);
            if n <= RAY_EPS || !n.is_finite() {
                return Err(ModelError::Invalid(format!(
                    "ray {i} is zero or non-finite"
                )));
            }
            let mut u = [r[0] / n, r[1] / n];
            if u[0] < 0.0 || u[1] < 0.0 {
                return Err(ModelError::Invalid(format!(
                    "ray {i} leaves the positive quadrant"
                )));
            }
            // Snap to exact axes so degenerate axis cones compare cleanly.
            if u[1].abs() <= RAY_EPS {
                u = [1.0, 0.0];
            } else if u[0].abs() <= RAY_EPS {
                u = [0.0, 1.0];
            }
            unit_rays.push(u);
        }
        if unit_rays[0] != [1.0, 0.0] {
            return Err(ModelError::Invalid("the first ray must be e1".into()));
        }
        if *unit_rays.last().unwrap() != [0.0, 1.0] {
            return Err(ModelError::Invalid("the last ray must be e2".into()));
        }
        for w in unit_rays.windows(2) {
            if ray_angle(&w[1]) < ray_angle(&w[0]) - RAY_EPS {
                return Err(ModelError::Invalid(
                    "ray angles must be non-decreasing".into(),
                ));
            }
        }
        for v in drifts.iter().chain(deaths.iter()) {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(ModelError::Invalid(
                    "non-finite drift or death entry".into(),
                ));
            }
        }
        if deaths.iter().flatten().any(|&d| d < 0.0) {
            return Err(ModelError::Invalid(
                "death rates must be non-negative".into(),
            ));
        }
        // Masking: a degenerate cone sitting on an axis may not serve the
        // empty coordinate.
        for k in 0..cones {
            if unit_rays[k] == unit_rays[k + 1] {
                for i in 0..2 {
                    if unit_rays[k][i] == 0.0 && deaths[k][i] != 0.0 {
                        return Err(ModelError::Invalid(format!(
                            "cone {k} lies in {{x{} = 0}} but has death rate {} there",
                            i + 1,
                            deaths[k][i]
                        )));
                    }
                }
            }
        }
        let births = match births {
            Some(b) => {
                if b.len() != cones {
                    return Err(ModelError::Invalid("births list length mismatch".into()));
                }
                for (k, bk) in b.iter().enumerate() {
                    for i in 0..2 {
                        if !bk[i].is_finite() || bk[i] < 0.0 {
                            return Err(ModelError::Invalid(format!(
                                "cone {k} birth rate {} is invalid",
                                bk[i]
                            )));
                        }
                        let expect = bk[i] - deaths[k][i];
                        if (drifts[k][i] - expect).abs() > 1e-9 {
                            return Err(ModelError::Invalid(format!(
                                "cone {k}: drift must equal birth - death (got {} vs {expect})",
                                drifts[k][i]
                            )));
                        }
                    }
                }
                b
            }
            None => {
                if let Some(lambda) = arrivals {
                    for (k, d) in drifts.iter().enumerate() {
                        for i in 0..2 {
                            if (d[i] - (lambda[i] - deaths[k][i])).abs() > 1e-9 {
                                return Err(ModelError::Invalid(format!(
                                    "cone {k}: drift is not arrivals - deaths at coordinate {}",
                                    i + 1
                                )));
                            }
                        }
                    }
                    vec![lambda; cones]
                } else {
                    let derived: Vec<[f64; 2]> = drifts
                        .iter()
                        .zip(&deaths)
                        .map(|(d, psi)| [d[0] + psi[0], d[1] + psi[1]])
                        .collect();
                    if derived.iter().flatten().any(|&b| b < -1e-9) {
                        return Err(ModelError::Invalid(
                            "drift + death yields a negative birth rate".into(),
                        ));
                    }
                    derived
                        .into_iter()
                        .map(|b| [b[0].max(0.0), b[1].max(0.0)])
                        .collect()
                }
            }
        };
        Ok(Self {
            rays: unit_rays,
            drifts,
            deaths,
            births,
            arrivals,
        })
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn cone_count(&self) -> usize {
        self.rays.len() - 1
    }

    pub fn ray(&self, k: usize) -> [f64; 2] {
        self.rays[k]
    }

    pub fn rays(&self) -> &[[f64; 2]] {
        &self.rays
    }

    pub fn drift(&self, cone: usize) -> [f64; 2] {
        self.drifts[cone]
    }

    pub fn drifts(&self) -> &[[f64; 2]] {
        &self.drifts
    }

    pub fn death(&self, cone: usize) -> [f64; 2] {
        self.deaths[cone]
    }

    pub fn deaths(&self) -> &[[f64; 2]] {
        &self.deaths
    }

    pub fn birth(&self, cone: usize) -> [f64; 2] {
        self.births[cone]
    }

    pub fn arrivals(&self) -> Option<[f64; 2]> {
        self.arrivals
    }

    pub fn is_degenerate(&self, cone: usize) -> bool {
        self.rays[cone] == self.rays[cone + 1]
    }

    /// Cone containing the direction of `x`.
    ///
    /// A direction on a ray belongs to the degenerate cone on that ray if
    /// one exists, otherwise to the cone opening from the ray (the side
    /// toward `e2`).
    pub fn cone_index_for(&self, x: &[f64]) -> usize {
        debug_assert_eq!(x.len(), 2);
        let theta = x[1].atan2(x[0]).clamp(0.0, std::f64::consts::FRAC_PI_2);
        let angles: Vec<f64> = self.rays.iter().map(ray_angle).collect();
        let cones = self.cone_count();
        for k in 0..cones {
            if self.is_degenerate(k) && (theta - angles[k]).abs() <= 1e-9 {
                return k;
            }
        }
        for k in 0..cones {
            if self.is_degenerate(k) {
                continue;
            }
            if theta >= angles[k] - 1e-9 && theta < angles[k + 1] - 1e-9 {
                return k;
            }
        }
        // Direction at (or numerically past) e2 with no degenerate cone
        // there: the last non-degenerate cone owns it.
        (0..cones)
            .rev()
            .find(|&k| !self.is_degenerate(k))
            .unwrap_or(cones - 1)
    }

    /// Shift the arrival vector, keeping services fixed. Requires the
    /// partition to carry an arrival vector.
    pub fn with_arrivals(&self, lambda: [f64; 2]) -> Result<Self, ModelError> {
        let Some(old) = self.arrivals else {
            return Err(ModelError::Invalid(
                "partition has no arrival vector to reparameterize".into(),
            ));
        };
        let shift = [lambda[0] - old[0], lambda[1] - old[1]];
        let births: Vec<[f64; 2]> = self
            .births
            .iter()
            .map(|b| [b[0] + shift[0], b[1] + shift[1]])
            .collect();
        if births.iter().flatten().any(|&b| b < 0.0) {
            return Err(ModelError::Invalid(
                "reparameterized birth rate is negative".into(),
            ));
        }
        let drifts: Vec<[f64; 2]> = births
            .iter()
            .zip(&self.deaths)
            .map(|(b, psi)| [b[0] - psi[0], b[1] - psi[1]])
            .collect();
        Ok(Self {
            rays: self.rays.clone(),
            drifts,
            deaths: self.deaths.clone(),
            births,
            arrivals: Some(lambda),
        })
    }
}

fn ray_angle(v: &[f64; 2]) -> f64 {
    v[1].atan2(v[0])
}

/// Birth and death rate vectors at a state (deaths not yet masked).
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub birth: Vec<f64>,
    pub death: Vec<f64>,
}

/// A drift model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftModel {
    Support(SupportPatternDrift),
    Cones(ConePartition2D),
    Smooth(SmoothDriftSpec),
}

impl DriftModel {
    pub fn dim(&self) -> usize {
        match self {
            DriftModel::Support(m) => m.dim(),
            DriftModel::Cones(_) => 2,
            DriftModel::Smooth(m) => m.dim(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, DriftModel::Smooth(_))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DriftModel::Support(_) => "support_pattern",
            DriftModel::Cones(_) => "cone_partition",
            DriftModel::Smooth(_) => "smooth",
        }
    }

    /// Raw rate vectors at `x` (no death masking applied).
    pub fn rates_at(&self, x: &[f64]) -> Result<Rates, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().all(|&c| c == 0.0) {
            return Err(ModelError::Origin);
        }
        match self {
            DriftModel::Support(m) => {
                let rates = m.pattern(support_mask(x));
                Ok(Rates {
                    birth: rates.birth.clone(),
                    death: rates.death.clone(),
                })
            }
            DriftModel::Cones(m) => {
                let k = m.cone_index_for(x);
                Ok(Rates {
                    birth: m.birth(k).to_vec(),
                    death: m.death(k).to_vec(),
                })
            }
            DriftModel::Smooth(m) => Ok(Rates {
                birth: m.births_at(x)?,
                death: m.deaths_at(x)?,
            }),
        }
    }

    /// Effective drift at `x`: births minus deaths, with the deaths of
    /// empty coordinates masked to zero.
    pub fn drift_at(&self, x: &StateVector) -> Result<Vec<f64>, ModelError> {
        if x.is_origin() {
            return Err(ModelError::Origin);
        }
        let rates = self.rates_at(x.coords())?;
        Ok(masked_drift(&rates, x.coords()))
    }

    /// Drift without the empty-coordinate masking. Experimental use only;
    /// the effective dynamics on boundary faces are given by [`Self::drift_at`].
    pub fn unmasked_drift_at(&self, x: &StateVector) -> Result<Vec<f64>, ModelError> {
        if x.is_origin() {
            return Err(ModelError::Origin);
        }
        let rates = self.rates_at(x.coords())?;
        Ok(vecn::sub(&rates.birth, &rates.death))
    }
}

pub(crate) fn masked_drift(rates: &Rates, x: &[f64]) -> Vec<f64> {
    rates
        .birth
        .iter()
        .zip(&rates.death)
        .zip(x)
        .map(|((b, d), &xi)| if xi > 0.0 { b - d } else { *b })
        .collect()
}

/// Build the three-cone partition of a planar support-pattern model:
/// a degenerate cone on each axis plus the open quadrant.
pub fn cones_from_support(model: &SupportPatternDrift) -> Result<ConePartition2D, ModelError> {
    if model.dim() != 2 {
        return Err(ModelError::Dimension {
            expected: 2,
            got: model.dim(),
        });
    }
    let axis1 = model.pattern(0b01);
    let interior = model.pattern(0b11);
    let axis2 = model.pattern(0b10);
    let rays = vec![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
    let deaths = vec![
        [axis1.death[0], 0.0],
        [interior.death[0], interior.death[1]],
        [0.0, axis2.death[1]],
    ];
    let births = vec![
        [axis1.birth[0], axis1.birth[1]],
        [interior.birth[0], interior.birth[1]],
        [axis2.birth[0], axis2.birth[1]],
    ];
    let drifts: Vec<[f64; 2]> = births
        .iter()
        .zip(&deaths)
        .map(|(b, psi)| [b[0] - psi[0], b[1] - psi[1]])
        .collect();
    let arrivals = model.constant_birth().map(|b| [b[0], b[1]]);
    ConePartition2D::new(rays, drifts, deaths, Some(births), arrivals)
}

/// Witness of a failed scale-invariance check.
#[derive(Debug, Clone)]
pub struct HomogeneityFailure {
    pub x: Vec<f64>,
    pub scale: f64,
    pub deviation: f64,
}

/// Numerically verify that the drift is scale-free: random directions on
/// the unit sphere, scales {0.5, 2, 10}, tolerance `1e-9 * (1 + |drift|)`.
pub fn validate_homogeneity(
    model: &DriftModel,
    samples: usize,
    seed: u64,
) -> Result<(), Box<HomogeneityFailure>> {
    let mut rng = SplitMix64::new(seed);
    let dim = model.dim();
    for _ in 0..samples {
        let dir = rng.orthant_direction(dim);
        let x = StateVector::new(dir.clone()).expect("unit direction");
        let Ok(base) = model.drift_at(&x) else {
            continue;
        };
        for scale in [0.5, 2.0, 10.0] {
            let xs = StateVector::new(vecn::scaled(&dir, scale)).expect("scaled direction");
            let Ok(scaled) = model.drift_at(&xs) else {
                continue;
            };
            let deviation = vecn::dist(&scaled, &base);
            if deviation > 1e-9 * (1.0 + vecn::norm(&base)) {
                return Err(Box::new(HomogeneityFailure {
                    x: dir,
                    scale,
                    deviation,
                }));
            }
        }
    }
    Ok(())
}

/// Largest total event rate and drift norm over sphere samples; finite for
/// every valid model and usable as a coarse simulator rate bound.
#[derive(Debug, Clone, Copy)]
pub struct RateBound {
    pub max_total_rate: f64,
    pub max_drift_norm: f64,
}

pub fn rate_bound(model: &DriftModel, samples: usize, seed: u64) -> Result<RateBound, ModelError> {
    let mut rng = SplitMix64::new(seed);
    let mut bound = RateBound {
        max_total_rate: 0.0,
        max_drift_norm: 0.0,
    };
    let dim = model.dim();
    let mut probe = |dir: Vec<f64>| -> Result<(), ModelError> {
        let x = StateVector::new(dir)?;
        let rates = model.rates_at(x.coords())?;
        let total: f64 = rates.birth.iter().sum::<f64>() + rates.death.iter().sum::<f64>();
        bound.max_total_rate = bound.max_total_rate.max(total);
        bound.max_drift_norm = bound.max_drift_norm.max(vecn::norm(&model.drift_at(&x)?));
        Ok(())
    };
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        probe(e)?;
    }
    for _ in 0..samples {
        probe(rng.orthant_direction(dim))?;
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn coupled2(a: [f64; 2], lambda: [f64; 2]) -> SupportPatternDrift {
        catalog::coupled2_model(a, lambda).unwrap()
    }

    #[test]
    fn coupled2_interior_drift() {
        let m = DriftModel::Support(coupled2([0.6, 0.6], [0.5, 0.9]));
        let x = StateVector::new(vec![1.0, 1.0]).unwrap();
        let d = m.drift_at(&x).unwrap();
        assert!(
            (d[0] - (-0.1)).abs() < 1e-12 && (d[1] - 0.3).abs() < 1e-12,
            "{d:?}"
        );
    }

    #[test]
    fn coupled2_axis_drift_masks_empty_queue() {
        let m = DriftModel::Support(coupled2([0.6, 0.6], [0.5, 0.9]));
        let x = StateVector::new(vec![5.0, 0.0]).unwrap();
        let d = m.drift_at(&x).unwrap();
        assert!(
            (d[0] - (-0.5)).abs() < 1e-12 && (d[1] - 0.9).abs() < 1e-12,
            "{d:?}"
        );
    }

    #[test]
    fn drift_is_scale_free() {
        let m = DriftModel::Support(coupled2([0.6, 0.6], [0.5, 0.9]));
        let x = StateVector::new(vec![1.7, 0.3]).unwrap();
        let x2 = StateVector::new(vec![3.4, 0.6]).unwrap();
        assert_eq!(m.drift_at(&x).unwrap(), m.drift_at(&x2).unwrap());
        assert!(validate_homogeneity(&m, 200, 11).is_ok());
    }

    #[test]
    fn origin_and_negative_inputs_are_domain_errors() {
        let m = DriftModel::Support(coupled2([0.6, 0.6], [0.5, 0.9]));
        let origin = StateVector::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(m.drift_at(&origin), Err(ModelError::Origin)));
        assert!(matches!(
            StateVector::new(vec![1.0, -0.1]),
            Err(ModelError::NegativeCoordinate { index: 1, .. })
        ));
    }

    #[test]
    fn masking_preserves_birth_component() {
        // For every pattern and every empty coordinate, the drift component
        // equals the birth component exactly.
        let m = coupled2([0.37, 0.81], [0.2, 0.45]);
        for mask in m.patterns() {
            let drift = m.masked_drift(mask);
            let rates = m.pattern(mask);
            for i in 0..2 {
                if mask & (1 << i) == 0 {
                    assert_eq!(drift[i], rates.birth[i]);
                }
            }
        }
    }

    #[test]
    fn support_cones_chain_matches_masked_services() {
        let p = cones_from_support(&coupled2([0.6, 0.6], [0.3, 0.3])).unwrap();
        assert_eq!(p.death(0), [1.0, 0.0]);
        assert_eq!(p.death(1), [0.6, 0.6]);
        assert_eq!(p.death(2), [0.0, 1.0]);

        let degenerate = cones_from_support(&coupled2([1.0, 1.0], [0.3, 0.3])).unwrap();
        assert_eq!(degenerate.death(1), [1.0, 1.0]);
    }

    #[test]
    fn support_cones_agree_with_direct_drift() {
        let model = coupled2([0.6, 0.6], [0.5, 0.9]);
        let p = cones_from_support(&model).unwrap();
        let dm = DriftModel::Support(model);
        let mut rng = SplitMix64::new(5);
        // 100 random points in each cone: both axes and the open quadrant.
        for _ in 0..100 {
            let r = 0.1 + 10.0 * rng.next_f64();
            for x in [
                vec![r, 0.0],
                vec![r * rng.next_f64().max(0.01), r],
                vec![0.0, r],
            ] {
                let k = p.cone_index_for(&x);
                let expect = dm.drift_at(&StateVector::new(x).unwrap()).unwrap();
                assert_eq!(p.drift(k).to_vec(), expect);
            }
        }
    }

    #[test]
    fn cone_lookup_handles_degenerate_and_interior_rays() {
        let sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let p = ConePartition2D::new(
            vec![
                [1.0, 0.0],
                [1.0, 0.0],
                [sqrt2, sqrt2],
                [0.0, 1.0],
                [0.0, 1.0],
            ],
            vec![[-0.9, 0.3], [-0.4, -0.1], [-0.2, -0.3], [0.3, -0.9]],
            vec![[1.0, 0.0], [0.5, 0.3], [0.3, 0.5], [0.0, 1.0]],
            None,
            Some([0.1, 0.1]),
        );
        // drifts here are not arrivals - deaths, so arrivals validation fails
        assert!(p.is_err());

        let p = ConePartition2D::new(
            vec![[1.0, 0.0], [1.0, 0.0], [2.0, 2.0], [0.0, 1.0], [0.0, 1.0]],
            vec![[-0.9, 0.1], [-0.4, -0.2], [-0.2, -0.4], [0.1, -0.9]],
            vec![[1.0, 0.0], [0.5, 0.3], [0.3, 0.5], [0.0, 1.0]],
            None,
            Some([0.1, 0.1]),
        )
        .unwrap();
        assert_eq!(
            p.cone_index_for(&[3.0, 0.0]),
            0,
            "axis direction owns its degenerate cone"
        );
        assert_eq!(p.cone_index_for(&[3.0, 1.0]), 1);
        assert_eq!(
            p.cone_index_for(&[2.0, 2.0]),
            2,
            "diagonal tie goes to the upper cone"
        );
        assert_eq!(p.cone_index_for(&[1.0, 3.0]), 2);
        assert_eq!(p.cone_index_for(&[0.0, 2.0]), 3);
    }

    #[test]
    fn axis_cone_masking_is_enforced() {
        let bad = ConePartition2D::new(
            vec![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[-0.5, 0.3], [-0.3, -0.3]],
            vec![[1.0, 0.2], [0.6, 0.6]],
            None,
            None,
        );
        assert!(
            bad.is_err(),
            "axis cone with unmasked death must be rejected"
        );
    }

    #[test]
    fn support_cones_require_two_dimensions() {
        let m = catalog::coupled3_model(
            [1.5, 1.5, 1.5],
            [[0.0, 1.2, 1.2], [1.2, 0.0, 1.2], [1.2, 1.2, 0.0]],
            [0.5, 0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(
            cones_from_support(&m),
            Err(ModelError::Dimension {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn shannon_rates_match_closed_form() {
        let m = SmoothDriftSpec::new(
            2,
            SmoothFamily::Shannon {
                arrivals: [0.4, 0.8],
                noise: 0.1,
            },
        )
        .unwrap();
        let d = m.deaths_at(&[1.0, 0.0]).unwrap();
        assert!((d[0] - 11.0f64.ln()).abs() < 1e-12);
        assert_eq!(d[1], 0.0f64.ln_1p());
        let dm = DriftModel::Smooth(m);
        assert!(validate_homogeneity(&dm, 100, 3).is_ok());
    }

    #[test]
    fn polytope_allocation_picks_extreme_vertices() {
        let m = SmoothDriftSpec::new(
            2,
            SmoothFamily::Polytope {
                arrivals: vec![vec![0.1, 0.1], vec![0.2, 0.1]],
                capacities: vec![vec![0.5, 0.5], vec![0.9, 0.5], vec![0.5, 0.9]],
                orientation: AllocationOrientation::MaxServiceMinArrival,
            },
        )
        .unwrap();
        assert_eq!(m.deaths_at(&[1.0, 0.1]).unwrap(), vec![0.9, 0.5]);
        assert_eq!(m.deaths_at(&[0.1, 1.0]).unwrap(), vec![0.5, 0.9]);
        assert_eq!(m.births_at(&[1.0, 0.1]).unwrap(), vec![0.1, 0.1]);
        let dm = DriftModel::Smooth(m);
        assert!(validate_homogeneity(&dm, 100, 3).is_ok());
    }

    #[test]
    fn one_homogeneous_expression_fails_validation() {
        let m = SmoothDriftSpec::new(
            2,
            SmoothFamily::Custom {
                births: vec![RateDef::Constant(0.0), RateDef::Constant(0.0)],
                deaths: vec![
                    RateDef::Expr(rate_dsl::parse("x1").unwrap()),
                    RateDef::Expr(rate_dsl::parse("x2").unwrap()),
                ],
            },
        )
        .unwrap();
        assert!(validate_homogeneity(&DriftModel::Smooth(m), 50, 1).is_err());
    }

    #[test]
    fn rate_bound_is_finite() {
        let m = DriftModel::Support(coupled2([0.6, 0.6], [0.5, 0.9]));
        let b = rate_bound(&m, 200, 9).unwrap();
        assert!(b.max_total_rate.is_finite() && b.max_total_rate > 0.0);
        assert!((b.max_total_rate - 2.6).abs() < 1e-9, "{b:?}");
        assert!(b.max_drift_norm.is_finite());
    }
}
