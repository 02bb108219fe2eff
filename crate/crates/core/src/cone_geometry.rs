//! Exact/LP primitives for the discontinuous-drift analysis: separating
//! vectors, cone membership, and sliding-mode coefficients.
//!
//! The separation test asks for a vector `eta` making every drift in a
//! neighborhood set, and the outward direction `-x`, strictly obtuse. By
//! Farkas duality this fails exactly when `x` lies in the cone spanned by
//! the drifts, so [`separating_vector`] and [`cone_membership`] are two
//! sides of one question and are kept as independent routes (the first is
//! a small dense linear program, the second a non-negative least-squares
//! solve).

use crate::drift_model::SupportPatternDrift;
use crate::mesh;
use crate::vecn;
use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("zero vector in drift set")]
    ZeroDrift,
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("faces with {0} positive coordinates are not supported")]
    UnsupportedFace(usize),
    #[error("face mask {0:#b} is empty or out of range")]
    BadFace(u32),
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex (minimize c'x subject to Ax = b, x >= 0).
//
// Problems here have at most a few dozen rows, so a plain dense tableau
// with Bland's rule (lowest-index entering column, lowest-index basic
// variable on ratio ties) is adequate and bit-reproducible.
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

pub(crate) fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);

    let scale = a
        .iter()
        .flatten()
        .chain(b.iter())
        .chain(c.iter())
        .fold(1.0f64, |s, &v| s.max(v.abs()));
    let eps = 1e-11 * scale;

    // Tableau: n structural + m artificial columns + rhs.
    let width = n + m;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = a[i].iter().map(|&v| flip * v).collect();
        row.resize(width + 1, 0.0);
        row[n + i] = 1.0;
        row[width] = flip * b[i];
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut r = vec![0.0; width + 1];
    for j in n..width {
        r[j] = 1.0;
    }
    for row in &t {
        for j in 0..=width {
            r[j] -= row[j];
        }
    }
    if !pivot_loop(&mut t, &mut basis, &mut r, width, eps) {
        return LpOutcome::Unbounded; // cannot happen in phase 1
    }
    if -r[width] > 1e-7 * scale.max(1.0) {
        return LpOutcome::Infeasible;
    }

    // Drive leftover basic artificials out or drop redundant rows.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > eps) {
                pivot(&mut t, &mut r, i, j);
                basis[i] = j;
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2: real objective, artificial columns banned.
    let mut r = vec![0.0; width + 1];
    r[..n].copy_from_slice(c);
    for (i, row) in t.iter().enumerate() {
        let cb = r[basis[i]];
        if cb != 0.0 {
            for j in 0..=width {
                r[j] -= cb * row[j];
            }
        }
    }
    if !pivot_loop_restricted(&mut t, &mut basis, &mut r, n, width, eps) {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[i][width];
        }
    }
    LpOutcome::Optimal {
        x,
        objective: -r[width],
    }
}

fn pivot_loop(
    t: &mut Vec<Vec<f64>>,
    basis: &mut [usize],
    r: &mut [f64],
    width: usize,
    eps: f64,
) -> bool {
    pivot_loop_restricted(t, basis, r, width, width, eps)
}

fn pivot_loop_restricted(
    t: &mut Vec<Vec<f64>>,
    basis: &mut [usize],
    r: &mut [f64],
    allowed: usize,
    width: usize,
    eps: f64,
) -> bool {
    for _ in 0..100_000 {
        let Some(e) = (0..allowed).find(|&j| r[j] < -eps) else {
            return true;
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[e] > eps {
                let ratio = row[width] / row[e];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - eps || (ratio < lr + eps && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((li, _)) = leave else {
            // A column with no positive entries and a reduced cost at
            // rounding level is not an unbounded ray, just pivot noise;
            // zero it out and keep scanning.
            if r[e] >= -1e3 * eps {
                r[e] = 0.0;
                continue;
            }
            return false;
        };
        pivot(t, r, li, e);
        basis[li] = e;
    }
    true
}

fn pivot(t: &mut [Vec<f64>], r: &mut [f64], li: usize, e: usize) {
    let width = t[li].len() - 1;
    let p = t[li][e];
    for v in t[li].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[li].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != li && row[e].abs() > 0.0 {
            let f = row[e];
            for j in 0..=width {
                row[j] -= f * pivot_row[j];
            }
        }
    }
    let f = r[e];
    if f != 0.0 {
        for j in 0..=width {
            r[j] -= f * pivot_row[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Separating vectors
// ---------------------------------------------------------------------------

/// A vector strictly obtuse to every drift of the set and to `-x`.
#[derive(Debug, Clone, Serialize)]
pub struct Separator {
    pub eta: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub enum SeparationOutcome {
    Separable(Separator),
    Infeasible,
}

/// Maximize `s` subject to `<eta, v> <= -s` for all `v` in
/// `drifts ∪ {-x}` and `|eta|_inf <= 1`. Returns the optimizing `eta`
/// (renormalized to `|eta|_inf = 1`) when the optimum exceeds `a_min`.
pub fn separating_vector(
    drifts: &[Vec<f64>],
    x: &[f64],
    a_min: f64,
) -> Result<SeparationOutcome, GeometryError> {
    let dim = x.len();
    if vecn::norm(x) <= 1e-300 {
        return Err(GeometryError::ZeroDirection);
    }
    for v in drifts {
        if v.len() != dim {
            return Err(GeometryError::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
        if vecn::norm(v) <= 1e-300 {
            return Err(GeometryError::ZeroDrift);
        }
    }

    let mut constraints: Vec<Vec<f64>> = drifts.to_vec();
    constraints.push(vecn::scaled(x, -1.0));
    let m = constraints.len();
    let data_scale = constraints
        .iter()
        .flatten()
        .fold(0.0f64, |s, &v| s.max(v.abs()));

    // Variables: w_1..w_d (eta shifted by +1, in [0,2]), s+, s-,
    // one slack per constraint, one slack per box row.
    let n = dim + 2 + m + dim;
    let rows = m + dim;
    let mut a = vec![vec![0.0; n]; rows];
    let mut b = vec![0.0; rows];
    for (r, v) in constraints.iter().enumerate() {
        for i in 0..dim {
            a[r][i] = v[i];
        }
        a[r][dim] = 1.0; // s+
        a[r][dim + 1] = -1.0; // s-
        a[r][dim + 2 + r] = 1.0; // slack
        b[r] = v.iter().sum();
    }
    for i in 0..dim {
        a[m + i][i] = 1.0;
        a[m + i][dim + 2 + m + i] = 1.0;
        b[m + i] = 2.0;
    }
    let mut c = vec![0.0; n];
    c[dim] = -1.0; // maximize s = s+ - s-
    c[dim + 1] = 1.0;

    match simplex_min(&a, &b, &c) {
        LpOutcome::Optimal { x: sol, objective } => {
            let margin = -objective;
            // A margin below the solver's resolution at this data scale
            // is a zero: the direction sits in (or on) the cone, and
            // renormalizing the near-zero eta would fabricate separation.
            let threshold = a_min.max(1e-9 * data_scale);
            if margin > threshold {
                let eta: Vec<f64> = (0..dim).map(|i| sol[i] - 1.0).collect();
                let sup = vecn::inf_norm(&eta);
                if sup <= 1e-300 {
                    return Ok(SeparationOutcome::Infeasible);
                }
                Ok(SeparationOutcome::Separable(Separator {
                    eta: vecn::scaled(&eta, 1.0 / sup),
                    margin: margin / sup,
                }))
            } else {
                Ok(SeparationOutcome::Infeasible)
            }
        }
        // The program is always feasible (eta = 0, s = 0) and bounded by
        // the box, so these arms are unreachable on valid input.
        LpOutcome::Infeasible | LpOutcome::Unbounded => Ok(SeparationOutcome::Infeasible),
    }
}

// ---------------------------------------------------------------------------
// Cone membership (non-negative least squares)
// ---------------------------------------------------------------------------

/// Result of projecting `x` onto the cone spanned by a drift set.
#[derive(Debug, Clone, Serialize)]
pub struct ConeMembership {
    pub inside: bool,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

/// Lawson-Hanson NNLS: minimize `|sum_i coef_i * drift_i - x|` over
/// `coef >= 0`. Membership holds when the residual is below
/// `1e-9 * |x|`.
pub fn cone_membership(drifts: &[Vec<f64>], x: &[f64]) -> ConeMembership {
    let coefficients = nnls(drifts, x);
    let mut fit = vec![0.0; x.len()];
    for (c, v) in coefficients.iter().zip(drifts) {
        for i in 0..fit.len() {
            fit[i] += c * v[i];
        }
    }
    let residual = vecn::dist(&fit, x);
    ConeMembership {
        inside: residual <= 1e-9 * vecn::norm(x).max(1e-300),
        coefficients,
        residual,
    }
}

fn nnls(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = cols.len();
    if m == 0 {
        return Vec::new();
    }
    let scale = cols
        .iter()
        .flatten()
        .chain(y.iter())
        .fold(1.0f64, |s, &v| s.max(v.abs()));
    let eps = 1e-12 * scale;

    let mut passive = vec![false; m];
    let mut x = vec![0.0; m];
    for _ in 0..(3 * m + 30) {
        let r = residual_of(cols, &x, y);
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..m {
            if !passive[j] {
                let w = vecn::dot(&cols[j], &r);
                if w > eps && enter.is_none_or(|(_, bw)| w > bw) {
                    enter = Some((j, w));
                }
            }
        }
        let Some((j, _)) = enter else { break };
        passive[j] = true;
        loop {
            let z = ls_on_passive(cols, y, &passive);
            if passive.iter().enumerate().all(|(k, &p)| !p || z[k] > eps) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..m {
                if passive[k] && z[k] <= eps && x[k] - z[k] > 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            if !alpha.is_finite() {
                x = z;
                break;
            }
            for k in 0..m {
                if passive[k] {
                    x[k] += alpha * (z[k] - x[k]);
                    if x[k] <= eps {
                        x[k] = 0.0;
                        passive[k] = false;
                    }
                }
            }
        }
    }
    x
}

fn residual_of(cols: &[Vec<f64>], x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (c, v) in x.iter().zip(cols) {
        if *c != 0.0 {
            for i in 0..r.len() {
                r[i] -= c * v[i];
            }
        }
    }
    r
}

/// Unconstrained least squares restricted to the passive columns, by
/// modified Gram-Schmidt with dependent columns dropped.
fn ls_on_passive(cols: &[Vec<f64>], y: &[f64], passive: &[bool]) -> Vec<f64> {
    let idx: Vec<usize> = (0..cols.len()).filter(|&j| passive[j]).collect();
    let k = idx.len();
    let d = y.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rmat = vec![vec![0.0; k]; k];
    let mut kept = vec![true; k];
    for (col_pos, &j) in idx.iter().enumerate() {
        let mut v = cols[j].clone();
        for (qi, qv) in q.iter().enumerate() {
            let proj = vecn::dot(qv, &cols[j]);
            rmat[qi][col_pos] = proj;
            for i in 0..d {
                v[i] -= proj * qv[i];
            }
        }
        let n = vecn::norm(&v);
        if n <= 1e-12 * vecn::norm(&cols[j]).max(1e-300) {
            kept[col_pos] = false;
            q.push(vec![0.0; d]);
            rmat[col_pos][col_pos] = 0.0;
        } else {
            rmat[col_pos][col_pos] = n;
            q.push(vecn::scaled(&v, 1.0 / n));
        }
    }
    let qty: Vec<f64> = q.iter().map(|qv| vecn::dot(qv, y)).collect();
    let mut z = vec![0.0; k];
    for p in (0..k).rev() {
        if !kept[p] {
            continue;
        }
        let mut acc = qty[p];
        for j2 in (p + 1)..k {
            acc -= rmat[p][j2] * z[j2];
        }
        z[p] = acc / rmat[p][p];
    }
    let mut full = vec![0.0; cols.len()];
    for (p, &j) in idx.iter().enumerate() {
        full[j] = z[p];
    }
    full
}

// ---------------------------------------------------------------------------
// Sliding coefficients on a discontinuity ray
// ---------------------------------------------------------------------------

/// Convex combination `alpha * delta_a + (1 - alpha) * delta_b = speed * ray`.
/// `speed` is signed: negative means motion toward the origin.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlidingSolution {
    pub alpha: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum SlidingOutcome {
    Sliding(SlidingSolution),
    NoSliding,
}

/// Solve the 2x2 system for the sliding coefficients on a unit ray.
///
/// Degenerate cases: identical drifts collinear with the ray admit every
/// `alpha` and are reported with the `alpha = 0.5` convention; when the
/// drift difference is parallel to the ray, the endpoint with the larger
/// speed is reported.
pub fn sliding_solution(delta_a: [f64; 2], delta_b: [f64; 2], ray: [f64; 2]) -> SlidingOutcome {
    let scale = vecn::norm(&delta_a).max(vecn::norm(&delta_b)).max(1.0);
    let tol_res = 1e-12 * scale;
    let diff = [delta_a[0] - delta_b[0], delta_a[1] - delta_b[1]];

    let along = |v: [f64; 2]| v[0] * ray[0] + v[1] * ray[1];
    let perp = |v: [f64; 2]| {
        let a = along(v);
        ((v[0] - a * ray[0]).powi(2) + (v[1] - a * ray[1]).powi(2)).sqrt()
    };

    if vecn::norm(&diff) <= tol_res {
        if perp(delta_b) <= 1e-9 * scale {
            return SlidingOutcome::Sliding(SlidingSolution {
                alpha: 0.5,
                speed: along(delta_b),
            });
        }
        return SlidingOutcome::NoSliding;
    }

    // alpha * diff - speed * ray = -delta_b
    let det = diff[0] * (-ray[1]) - (-ray[0]) * diff[1];
    if det.abs() <= 1e-12 * scale {
        // diff parallel to the ray: solvable only if delta_b is too.
        if perp(delta_b) > 1e-9 * scale {
            return SlidingOutcome::NoSliding;
        }
        let a0 = along(delta_b);
        let a1 = along(delta_a);
        let (alpha, speed) = if a1 >= a0 { (1.0, a1) } else { (0.0, a0) };
        return SlidingOutcome::Sliding(SlidingSolution { alpha, speed });
    }
    let rhs = [-delta_b[0], -delta_b[1]];
    let alpha = (rhs[0] * (-ray[1]) - (-ray[0]) * rhs[1]) / det;
    let speed = (diff[0] * rhs[1] - rhs[0] * diff[1]) / det;
    if !(-1e-12..=1.0 + 1e-12).contains(&alpha) {
        return SlidingOutcome::NoSliding;
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let res = [
        alpha * delta_a[0] + (1.0 - alpha) * delta_b[0] - speed * ray[0],
        alpha * delta_a[1] + (1.0 - alpha) * delta_b[1] - speed * ray[1],
    ];
    if vecn::norm(&res) > tol_res {
        return SlidingOutcome::NoSliding;
    }
    SlidingOutcome::Sliding(SlidingSolution { alpha, speed })
}

// ---------------------------------------------------------------------------
// Per-face separation criterion for support-pattern models
// ---------------------------------------------------------------------------

/// Sampling resolution and margin for the face criterion.
#[derive(Debug, Clone)]
pub struct FaceSettings {
    /// Directions sampled inside a two-coordinate face.
    pub arc_directions: usize,
    /// Edge divisions of the spherical-triangle grid for three-coordinate
    /// faces (90 divisions is about one degree).
    pub triangle_divisions: usize,
    /// Minimal accepted separation margin.
    pub margin: f64,
}

impl Default for FaceSettings {
    fn default() -> Self {
        Self {
            arc_directions: 181,
            triangle_divisions: 90,
            margin: 1e-9,
        }
    }
}

/// Outcome of the separation test on one open face.
#[derive(Debug, Clone)]
pub struct FaceSeparation {
    pub face: u32,
    pub holds: bool,
    pub directions: usize,
    /// One separator per sampled direction when the face holds.
    pub witnesses: Vec<Separator>,
    pub failing_direction: Option<Vec<f64>>,
}

/// Neighborhood drift set of an open face: the masked drifts of every
/// pattern containing the face.
pub fn face_drift_set(model: &SupportPatternDrift, face: u32) -> Vec<Vec<f64>> {
    let full = (1u32 << model.dim()) - 1;
    let complement = full & !face;
    let mut masks = Vec::new();
    // Enumerate submasks of the complement.
    let mut t = complement;
    loop {
        masks.push(face | t);
        if t == 0 {
            break;
        }
        t = (t - 1) & complement;
    }
    masks.sort_unstable();
    masks.into_iter().map(|m| model.masked_drift(m)).collect()
}

/// Check separation for every sampled direction of an open face.
pub fn face_separation(
    model: &SupportPatternDrift,
    face: u32,
    settings: &FaceSettings,
) -> Result<FaceSeparation, GeometryError> {
    let dim = model.dim();
    let full = (1u32 << dim) - 1;
    if face == 0 || face > full {
        return Err(GeometryError::BadFace(face));
    }
    let coords: Vec<usize> = (0..dim).filter(|i| face & (1 << i) != 0).collect();
    let mut directions: Vec<Vec<f64>> = match coords.len() {
        1 => {
            let mut e = vec![0.0; dim];
            e[coords[0]] = 1.0;
            vec![e]
        }
        2 => mesh::open_arc(settings.arc_directions)
            .into_iter()
            .map(|v| {
                let mut x = vec![0.0; dim];
                x[coords[0]] = v[0];
                x[coords[1]] = v[1];
                x
            })
            .collect(),
        3 => mesh::open_triangle_3d(settings.triangle_divisions)
            .into_iter()
            .map(|v| {
                let mut x = vec![0.0; dim];
                for (slot, &ci) in coords.iter().enumerate() {
                    x[ci] = v[slot];
                }
                x
            })
            .collect(),
        k => return Err(GeometryError::UnsupportedFace(k)),
    };

    let drift_set = face_drift_set(model, face);
    // A zero drift in the neighborhood set (a critically loaded pattern)
    // admits no strict separator for any direction.
    if drift_set.iter().any(|d| vecn::norm(d) <= 1e-12) {
        return Ok(FaceSeparation {
            face,
            holds: false,
            directions: directions.len(),
            witnesses: Vec::new(),
            failing_direction: None,
        });
    }
    // The failing set {x in face : x in cone(drifts)} can degenerate to a
    // single ray, namely an extreme ray of the drift cone, which a grid
    // never samples. Extreme rays are drift directions, so adding every
    // drift that points into the open face makes the sampled test exact
    // up to the grid's resolution elsewhere.
    for d in &drift_set {
        let n = vecn::norm(d);
        let in_face = (0..dim).all(|i| {
            if face & (1 << i) != 0 {
                d[i] > 1e-12 * n
            } else {
                d[i].abs() <= 1e-12 * n
            }
        });
        if in_face {
            directions.push(vecn::scaled(d, 1.0 / n));
        }
    }
    let mut witnesses = Vec::with_capacity(directions.len());
    for x in &directions {
        match separating_vector(&drift_set, x, settings.margin)? {
            SeparationOutcome::Separable(sep) => witnesses.push(sep),
            SeparationOutcome::Infeasible => {
                return Ok(FaceSeparation {
                    face,
                    holds: false,
                    directions: directions.len(),
                    witnesses: Vec::new(),
                    failing_direction: Some(x.clone()),
                });
            }
        }
    }
    Ok(FaceSeparation {
        face,
        holds: true,
        directions: directions.len(),
        witnesses,
        failing_direction: None,
    })
}

/// Full separation criterion: sufficient for positive recurrence when it
/// holds on every open face. A failing face yields `Inconclusive`, not
/// `Unstable` (the criterion is one-directional).
#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub verdict: Verdict,
    pub faces: Vec<FaceSeparation>,
}

pub fn separation_criterion(
    model: &SupportPatternDrift,
    settings: &FaceSettings,
) -> Result<SeparationReport, GeometryError> {
    let full = (1u32 << model.dim()) - 1;
    let mut faces = Vec::with_capacity(full as usize);
    let mut all_hold = true;
    for face in 1..=full {
        let sep = face_separation(model, face, settings)?;
        all_hold &= sep.holds;
        faces.push(sep);
    }
    Ok(SeparationReport {
        verdict: if all_hold {
            Verdict::Stable
        } else {
            Verdict::Inconclusive
        },
        faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rng::SplitMix64;

    #[test]
    fn orthogonal_direction_is_separable() {
        let out = separating_vector(&[vec![1.0, 0.0]], &[0.0, 1.0], 0.0).unwrap();
        let SeparationOutcome::Separable(sep) = out else {
            panic!("expected a separator")
        };
        assert!(sep.margin > 0.5, "margin {}", sep.margin);
        assert!(vecn::dot(&sep.eta, &[1.0, 0.0]) < 0.0);
        assert!(vecn::dot(&sep.eta, &[0.0, -1.0]) < 0.0);
        assert!((vecn::inf_norm(&sep.eta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn direction_inside_cone_is_infeasible() {
        let d = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let out = separating_vector(&d, &[1.0, 1.0], 0.0).unwrap();
        assert!(matches!(out, SeparationOutcome::Infeasible));
        let mem = cone_membership(&d, &[1.0, 1.0]);
        assert!(mem.inside);
    }

    #[test]
    fn boundary_face_drifts_capture_e2() {
        // Drifts of the coupled model at lambda = (0.5, 0.9) around the
        // x2-axis: the axis direction lies in their cone.
        let d = vec![vec![0.5, -0.1], vec![-0.1, 0.3]];
        let out = separating_vector(&d, &[0.0, 1.0], 0.0).unwrap();
        assert!(matches!(out, SeparationOutcome::Infeasible));
        let mem = cone_membership(&d, &[0.0, 1.0]);
        assert!(mem.inside, "residual {}", mem.residual);
        assert!(
            (mem.coefficients[0] - 5.0 / 7.0).abs() < 1e-9,
            "{:?}",
            mem.coefficients
        );
        assert!((mem.coefficients[1] - 25.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn cone_membership_examples() {
        let mem = cone_membership(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, 3.0]);
        assert!(mem.inside);
        assert!(
            (mem.coefficients[0] - 2.0).abs() < 1e-12 && (mem.coefficients[1] - 3.0).abs() < 1e-12
        );

        let mem = cone_membership(&[vec![-1.0, 0.0]], &[1.0, 0.0]);
        assert!(!mem.inside);
        assert!(mem.coefficients[0].abs() < 1e-12);
    }

    #[test]
    fn sliding_on_e2_matches_exact_fractions() {
        let SlidingOutcome::Sliding(s) = sliding_solution([0.5, -0.1], [-0.1, 0.3], [0.0, 1.0])
        else {
            panic!("expected sliding")
        };
        assert!((s.alpha - 1.0 / 6.0).abs() < 1e-12);
        assert!((s.speed - 7.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn sliding_toward_origin_has_negative_speed() {
        let SlidingOutcome::Sliding(s) = sliding_solution([0.1, -0.3], [-0.3, 0.3], [1.0, 0.0])
        else {
            panic!("expected sliding")
        };
        assert!((s.alpha - 0.5).abs() < 1e-12);
        assert!((s.speed - (-0.1)).abs() < 1e-12);
    }

    #[test]
    fn identical_collinear_drifts_use_half_alpha() {
        let SlidingOutcome::Sliding(s) = sliding_solution([-1.0, 0.0], [-1.0, 0.0], [1.0, 0.0])
        else {
            panic!("expected degenerate sliding")
        };
        assert_eq!(s.alpha, 0.5);
        assert_eq!(s.speed, -1.0);

        // Identical drifts not collinear with the ray cannot slide.
        assert!(matches!(
            sliding_solution([-1.0, 0.2], [-1.0, 0.2], [1.0, 0.0]),
            SlidingOutcome::NoSliding
        ));
    }

    #[test]
    fn interior_face_holds_for_stable_coupled_model() {
        let model = catalog::coupled2_model([0.6, 0.6], [0.3, 0.3]).unwrap();
        let sep = face_separation(&model, 0b11, &FaceSettings::default()).unwrap();
        assert!(sep.holds);
        assert_eq!(sep.witnesses.len(), 181);
        // Every witness separates all three drifts of the neighborhood set.
        let drifts = face_drift_set(&model, 0b11);
        assert_eq!(drifts, vec![vec![-0.3, -0.3]]);
        for w in &sep.witnesses {
            for d in &drifts {
                assert!(vecn::dot(&w.eta, d) < 0.0);
            }
        }
    }

    #[test]
    fn axis_face_fails_when_sliding_escapes() {
        let model = catalog::coupled2_model([0.6, 0.6], [0.5, 0.9]).unwrap();
        let sep = face_separation(&model, 0b10, &FaceSettings::default()).unwrap();
        assert!(!sep.holds);
        assert_eq!(sep.failing_direction, Some(vec![0.0, 1.0]));
    }

    #[test]
    fn single_negative_component_always_separates() {
        // One drift with a negative component can never absorb a positive
        // direction, so the face holds.
        let out = separating_vector(&[vec![0.4, -0.2]], &[1.0, 1.0], 1e-9).unwrap();
        assert!(matches!(out, SeparationOutcome::Separable(_)));
    }

    #[test]
    fn feasibility_is_scale_invariant() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..200 {
            let d: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.next_range(-1.0, 1.0)).collect())
                .collect();
            if d.iter().any(|v| vecn::norm(v) < 1e-3) {
                continue;
            }
            let x = vec![rng.next_range(0.1, 1.0), rng.next_range(0.1, 1.0)];
            // Skip draws whose margin sits in the tie tube around the
            // threshold; those are reported as boundary cases upstream.
            let base = match separating_vector(&d, &x, 0.0).unwrap() {
                SeparationOutcome::Separable(sep) if sep.margin > 1e-6 => true,
                SeparationOutcome::Separable(_) => continue,
                SeparationOutcome::Infeasible => false,
            };
            for scale in [0.05, 20.0] {
                let ds: Vec<Vec<f64>> = d.iter().map(|v| vecn::scaled(v, scale)).collect();
                let xs = vecn::scaled(&x, scale);
                let got = matches!(
                    separating_vector(&ds, &xs, 1e-9 * scale).unwrap(),
                    SeparationOutcome::Separable(_)
                );
                assert_eq!(base, got, "verdict changed under rescaling by {scale}");
            }
        }
    }

    #[test]
    fn farkas_duality_small_sample() {
        let mut rng = SplitMix64::new(1234);
        let mut checked = 0;
        for _ in 0..500 {
            let dim = if rng.next_f64() < 0.5 { 2 } else { 3 };
            let count = 1 + (rng.next_u64() % 6) as usize;
            let d: Vec<Vec<f64>> = (0..count)
                .map(|_| (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect())
                .collect();
            if d.iter().any(|v| vecn::norm(v) < 1e-6) {
                continue;
            }
            let x: Vec<f64> = (0..dim).map(|_| rng.next_range(0.0, 1.0)).collect();
            if vecn::norm(&x) < 1e-6 {
                continue;
            }
            let feasible = matches!(
                separating_vector(&d, &x, 1e-9).unwrap(),
                SeparationOutcome::Separable(_)
            );
            let inside = cone_membership(&d, &x).inside;
            assert!(!(feasible && inside), "both sides of the alternative held");
            if feasible || inside {
                checked += 1;
                assert!(feasible ^ inside);
            }
        }
        assert!(checked > 400, "too many degenerate samples: {checked}");
    }

    #[test]
    fn zero_drift_is_rejected() {
        let err = separating_vector(&[vec![0.0, 0.0]], &[1.0, 0.0], 0.0);
        assert!(matches!(err, Err(GeometryError::ZeroDrift)));
    }
}
