//! Exact classification of planar piecewise-constant drift fields and the
//! geometric construction of the stability region in the arrival plane.
//!
//! A drift field on an angular fan of cones escapes to infinity in exactly
//! two ways: the drift of some cone points back into its own cone, or the
//! two drifts meeting at a ray combine into outward sliding along the ray.
//! The classifier tests both families of escape sets; a field robustly
//! outside all of them is stable, a field in the interior of their union
//! is unstable, and anything else sits on the boundary.
//!
//! "Interior of the union" is decided by probing: the drifts are shifted
//! by a small step in the eight compass directions of the arrival plane
//! (the natural parameter of these models: adding `w` to the arrival
//! vector shifts every cone drift by `w`). Shifts that would make a masked
//! axis-cone drift component negative leave the space of valid drift
//! fields and are skipped, so interiors are relative to that space.

use crate::cone_geometry::{SlidingOutcome, sliding_solution};
use crate::drift_model::{ConePartition2D, ModelError, SupportPatternDrift, cones_from_support};
use crate::vecn;
use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum RegionError {
    #[error("the partition carries no arrival vector, so it cannot be swept over arrivals")]
    MissingArrivals,
    #[error("drift does not depend affinely on the arrival vector: {0}")]
    NonAffine(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The data the classifier needs: rays and per-cone drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftPartition2D {
    rays: Vec<[f64; 2]>,
    drifts: Vec<[f64; 2]>,
}

impl DriftPartition2D {
    pub fn new(rays: Vec<[f64; 2]>, drifts: Vec<[f64; 2]>) -> Self {
        assert_eq!(rays.len(), drifts.len() + 1);
        Self { rays, drifts }
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn cone_count(&self) -> usize {
        self.drifts.len()
    }

    pub fn ray(&self, j: usize) -> [f64; 2] {
        self.rays[j]
    }

    pub fn drift(&self, k: usize) -> [f64; 2] {
        self.drifts[k]
    }

    fn is_degenerate(&self, cone: usize) -> bool {
        self.rays[cone] == self.rays[cone + 1]
    }

    fn scale(&self) -> f64 {
        self.drifts
            .iter()
            .fold(1e-12f64, |s, d| s.max(vecn::norm(d)))
    }

    fn shifted(&self, w: [f64; 2]) -> Self {
        Self {
            rays: self.rays.clone(),
            drifts: self
                .drifts
                .iter()
                .map(|d| [d[0] + w[0], d[1] + w[1]])
                .collect(),
        }
    }

    /// A shift is admissible if every degenerate axis cone keeps the
    /// non-negative (masked) component of its drift.
    fn shift_is_valid(&self, w: [f64; 2], slack: f64) -> bool {
        for k in 0..self.cone_count() {
            if self.is_degenerate(k) {
                for i in 0..2 {
                    if self.rays[k][i] == 0.0 && self.drifts[k][i] + w[i] < -slack {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl From<&ConePartition2D> for DriftPartition2D {
    fn from(p: &ConePartition2D) -> Self {
        Self {
            rays: p.rays().to_vec(),
            drifts: p.drifts().to_vec(),
        }
    }
}

/// Witness of an escape-set membership.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EscapeWitness {
    /// The drift of `cone` decomposes into its own cone with the given
    /// non-negative ray coefficients.
    ConeDrift { cone: usize, a: f64, b: f64 },
    /// The drifts adjacent to `ray` combine into outward sliding.
    RaySliding { ray: usize, alpha: f64, speed: f64 },
}

/// Membership of the drift of cone `k` in its own cone (escape by plain
/// transport). Coefficients may dip to `-slack`; their sum must exceed
/// `slack`.
pub fn drift_in_own_cone(p: &DriftPartition2D, k: usize, slack: f64) -> Option<EscapeWitness> {
    let d = p.drift(k);
    let (va, vb) = (p.ray(k), p.ray(k + 1));
    if p.is_degenerate(k) {
        let along = d[0] * va[0] + d[1] * va[1];
        let perp = [d[0] - along * va[0], d[1] - along * va[1]];
        if vecn::norm(&perp) <= slack && along > slack {
            return Some(EscapeWitness::ConeDrift {
                cone: k,
                a: along / 2.0,
                b: along / 2.0,
            });
        }
        return None;
    }
    let det = va[0] * vb[1] - va[1] * vb[0];
    debug_assert!(det > 0.0);
    let a = (d[0] * vb[1] - d[1] * vb[0]) / det;
    let b = (va[0] * d[1] - va[1] * d[0]) / det;
    if a >= -slack && b >= -slack && a + b > slack {
        Some(EscapeWitness::ConeDrift { cone: k, a, b })
    } else {
        None
    }
}

/// Membership of ray `j` (1-based from the second ray, `1 <= j < ray
/// count`) in the outward-sliding escape set: the adjacent drifts admit a
/// convex combination along the ray with speed at least `-slack`.
pub fn outward_sliding(p: &DriftPartition2D, j: usize, slack: f64) -> Option<EscapeWitness> {
    debug_assert!(j >= 1 && j < p.ray_count());
    let hi = p.drift(j.min(p.cone_count() - 1));
    let lo = p.drift(j - 1);
    match sliding_solution(hi, lo, p.ray(j)) {
        SlidingOutcome::Sliding(s) if s.speed >= -slack => Some(EscapeWitness::RaySliding {
            ray: j,
            alpha: s.alpha,
            speed: s.speed,
        }),
        _ => None,
    }
}

fn first_membership(p: &DriftPartition2D, slack: f64) -> Option<EscapeWitness> {
    for k in 0..p.cone_count() {
        if let Some(w) = drift_in_own_cone(p, k, slack) {
            return Some(w);
        }
    }
    for j in 1..p.ray_count() {
        if let Some(w) = outward_sliding(p, j, slack) {
            return Some(w);
        }
    }
    None
}

/// Classification of one partition, with certificate.
#[derive(Debug, Clone, Serialize)]
pub struct RegionVerdict {
    pub verdict: Verdict,
    pub witness: Option<EscapeWitness>,
    /// The escape sets of the underlying theory are read as complements
    /// (stable = outside all of them); recorded for auditability.
    pub interpretation: &'static str,
    pub probe_step: f64,
    pub tolerance: f64,
}

const PROBE_REL: f64 = 1e-6;

/// Classify a planar piecewise-constant drift field.
///
/// `tol` is the membership tolerance relative to the drift scale
/// (default `1e-9`); the probe step deciding interior-of-union questions
/// is `1e-6` of the scale.
pub fn classify_2d(p: &DriftPartition2D, tol: f64) -> RegionVerdict {
    let scale = p.scale();
    let slack = tol * scale;
    let h = PROBE_REL * scale;
    let base = first_membership(p, slack);
    let verdict = match &base {
        None => Verdict::Stable,
        Some(_) => {
            let compass = [
                [h, 0.0],
                [-h, 0.0],
                [0.0, h],
                [0.0, -h],
                [h, h],
                [h, -h],
                [-h, h],
                [-h, -h],
            ];
            let interior = compass.iter().all(|&w| {
                !p.shift_is_valid(w, slack) || first_membership(&p.shifted(w), slack).is_some()
            });
            if interior {
                Verdict::Unstable
            } else {
                Verdict::Boundary
            }
        }
    };
    RegionVerdict {
        verdict,
        witness: base,
        interpretation: "complement",
        probe_step: h,
        tolerance: tol,
    }
}

/// Convenience wrapper for full cone-partition models.
pub fn classify_partition(p: &ConePartition2D, tol: f64) -> RegionVerdict {
    classify_2d(&DriftPartition2D::from(p), tol)
}

// ---------------------------------------------------------------------------
// Arrival-plane families and the stability-region polygon
// ---------------------------------------------------------------------------

/// A partition family in which every cone drift depends affinely on the
/// arrival vector: `drift_k(lambda) = lambda + base_k`.
#[derive(Debug, Clone)]
pub struct PartitionFamily {
    rays: Vec<[f64; 2]>,
    base_drifts: Vec<[f64; 2]>,
}

impl PartitionFamily {
    pub fn from_partition(p: &ConePartition2D) -> Result<Self, RegionError> {
        let Some(lambda) = p.arrivals() else {
            return Err(RegionError::MissingArrivals);
        };
        let base_drifts = p
            .drifts()
            .iter()
            .map(|d| [d[0] - lambda[0], d[1] - lambda[1]])
            .collect();
        Ok(Self {
            rays: p.rays().to_vec(),
            base_drifts,
        })
    }

    pub fn from_support(model: &SupportPatternDrift) -> Result<Self, RegionError> {
        if model.constant_birth().is_none() {
            return Err(RegionError::NonAffine(
                "birth rates differ across support patterns".into(),
            ));
        }
        Self::from_partition(&cones_from_support(model)?)
    }

    pub fn rays(&self) -> &[[f64; 2]] {
        &self.rays
    }

    pub fn partition_at(&self, lambda: [f64; 2]) -> DriftPartition2D {
        DriftPartition2D {
            rays: self.rays.clone(),
            drifts: self
                .base_drifts
                .iter()
                .map(|b| [lambda[0] + b[0], lambda[1] + b[1]])
                .collect(),
        }
    }

    /// Effective service points of the chain construction: the arrival
    /// vectors at which each cone drift vanishes.
    pub fn service_points(&self) -> Vec<[f64; 2]> {
        self.base_drifts.iter().map(|b| [-b[0], -b[1]]).collect()
    }
}

/// The stability region in the arrival plane, as a closed polygon chain.
#[derive(Debug, Clone, Serialize)]
pub struct RegionPolygon {
    pub vertices: Vec<[f64; 2]>,
}

impl RegionPolygon {
    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[i], v[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let t = (p[1] - a[1]) / (b[1] - a[1]);
                if p[0] < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Distance from a point to the polygon boundary.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            best = best.min(segment_distance(v[i], v[(i + 1) % n], p));
        }
        best
    }
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}

/// Construct the stability-region polygon of an affine family.
///
/// The chain of service points, extended along `e1` at its first point and
/// along `e2` at its last, bounds the escape region from below-left; the
/// polygon is that boundary clipped to the positive quadrant and closed
/// through the origin.
pub fn region_polygon(family: &PartitionFamily) -> RegionPolygon {
    let psi = family.service_points();
    let reach = psi.iter().flatten().fold(1.0f64, |m, &c| m.max(c.abs()));
    let l = 4.0 * reach + 4.0;

    let first = psi[0];
    let last = *psi.last().expect("at least one cone");
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(psi.len() + 5);
    poly.push([first[0] + l, first[1]]);
    poly.extend(psi.iter().copied());
    poly.push([last[0], last[1] + l]);
    poly.push([-l, last[1] + l]);
    poly.push([-l, -l]);
    poly.push([first[0] + l, -l]);

    let clipped = clip_halfplane(&clip_halfplane(&poly, Axis::X), Axis::Y);
    let cleaned = cleanup(clipped, 1e-12 * (1.0 + l));
    RegionPolygon {
        vertices: rotate_to_origin(cleaned),
    }
}

enum Axis {
    X,
    Y,
}

fn clip_halfplane(poly: &[[f64; 2]], axis: Axis) -> Vec<[f64; 2]> {
    let coord = |p: &[f64; 2]| match axis {
        Axis::X => p[0],
        Axis::Y => p[1],
    };
    let mut out = Vec::with_capacity(poly.len() + 4);
    let n = poly.len();
    for i in 0..n {
        let s = poly[(i + n - 1) % n];
        let e = poly[i];
        let (cs, ce) = (coord(&s), coord(&e));
        let s_in = cs >= 0.0;
        let e_in = ce >= 0.0;
        if e_in {
            if !s_in {
                out.push(intersect_zero(s, e, cs, ce));
            }
            out.push(e);
        } else if s_in {
            out.push(intersect_zero(s, e, cs, ce));
        }
    }
    out
}

fn intersect_zero(s: [f64; 2], e: [f64; 2], cs: f64, ce: f64) -> [f64; 2] {
    let t = cs / (cs - ce);
    [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]
}

fn cleanup(mut poly: Vec<[f64; 2]>, tol: f64) -> Vec<[f64; 2]> {
    // Snap coordinates that are numerically zero, then drop duplicate
    // vertices and spike tips (edges that immediately reverse).
    for p in poly.iter_mut() {
        for c in p.iter_mut() {
            if c.abs() < tol {
                *c = 0.0;
            }
        }
    }
    loop {
        let n = poly.len();
        if n < 3 {
            return poly;
        }
        let mut removed = false;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let prev = poly[(i + n - 1) % n];
            let cur = poly[i];
            let nxt = poly[(i + 1) % n];
            if (cur[0] - prev[0]).abs() < tol && (cur[1] - prev[1]).abs() < tol {
                removed = true;
                continue;
            }
            let u = [cur[0] - prev[0], cur[1] - prev[1]];
            let v = [nxt[0] - cur[0], nxt[1] - cur[1]];
            let cross = u[0] * v[1] - u[1] * v[0];
            let dot = u[0] * v[0] + u[1] * v[1];
            if cross.abs() < tol * (vecn::norm(&u) + vecn::norm(&v)).max(1.0) && dot < 0.0 {
                removed = true;
                continue;
            }
            next.push(cur);
        }
        poly = next;
        if !removed {
            return poly;
        }
    }
}

fn rotate_to_origin(poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    if poly.is_empty() {
        return poly;
    }
    let start = poly
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let na = a[0] * a[0] + a[1] * a[1];
            let nb = b[0] * b[0] + b[1] * b[1];
            na.partial_cmp(&nb).expect("finite vertices")
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut out = Vec::with_capacity(poly.len());
    out.extend_from_slice(&poly[start..]);
    out.extend_from_slice(&poly[..start]);
    out
}

/// Verdict grid over arrival vectors.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Row-major: entry `i * lambda2.len() + j` classifies
    /// `(lambda1[i], lambda2[j])`.
    pub verdicts: Vec<Verdict>,
}

/// Classify every point of an `n x n` arrival grid on
/// `[0, max1] x [0, max2]`.
pub fn sweep_region(family: &PartitionFamily, n: usize, max: [f64; 2], tol: f64) -> SweepResult {
    assert!(n >= 2);
    let axis = |hi: f64| -> Vec<f64> { (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect() };
    let lambda1 = axis(max[0]);
    let lambda2 = axis(max[1]);
    let mut verdicts = Vec::with_capacity(n * n);
    for &l1 in &lambda1 {
        for &l2 in &lambda2 {
            let p = family.partition_at([l1, l2]);
            verdicts.push(classify_2d(&p, tol).verdict);
        }
    }
    SweepResult {
        lambda1,
        lambda2,
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rng::SplitMix64;

    const TOL: f64 = 1e-9;

    fn coupled2_family(a: [f64; 2]) -> PartitionFamily {
        let model = catalog::coupled2_model(a, [0.1, 0.1]).unwrap();
        PartitionFamily::from_support(&model).unwrap()
    }

    fn closed_form_coupled2(a: [f64; 2], l: [f64; 2]) -> bool {
        (l[0] < a[0] && l[1] < 1.0 - (l[0] / a[0]) * (1.0 - a[1]))
            || (l[1] < a[1] && l[0] < 1.0 - (l[1] / a[1]) * (1.0 - a[0]))
    }

    #[test]
    fn classify_matches_known_coupled_points() {
        let fam = coupled2_family([0.6, 0.6]);
        assert_eq!(
            classify_2d(&fam.partition_at([0.3, 0.3]), TOL).verdict,
            Verdict::Stable
        );
        assert_eq!(
            classify_2d(&fam.partition_at([0.7, 0.3]), TOL).verdict,
            Verdict::Stable
        );

        let v = classify_2d(&fam.partition_at([0.5, 0.9]), TOL);
        assert_eq!(v.verdict, Verdict::Unstable);
        let Some(EscapeWitness::RaySliding { ray, alpha, speed }) = v.witness else {
            panic!("expected a sliding witness, got {:?}", v.witness)
        };
        assert_eq!(ray, 2, "sliding at the e2 ray");
        assert!((alpha - 1.0 / 6.0).abs() < 1e-9);
        assert!((speed - 7.0 / 30.0).abs() < 1e-9);
    }

    #[test]
    fn own_cone_membership_examples() {
        let fam = coupled2_family([0.6, 0.6]);
        // Interior drift in the open quadrant.
        let p = fam.partition_at([0.7, 0.8]);
        let Some(EscapeWitness::ConeDrift { cone, a, b }) = drift_in_own_cone(&p, 1, TOL) else {
            panic!("expected membership")
        };
        assert_eq!(cone, 1);
        assert!((a - 0.1).abs() < 1e-12 && (b - 0.2).abs() < 1e-12);

        // Negative drift is not a member.
        let p = fam.partition_at([0.3, 0.3]);
        assert!(drift_in_own_cone(&p, 1, TOL).is_none());

        // Axis cone: non-collinear drift is not a member.
        let p = fam.partition_at([0.5, 0.9]);
        assert!(drift_in_own_cone(&p, 0, TOL).is_none());
    }

    #[test]
    fn outward_sliding_examples() {
        let fam = coupled2_family([0.6, 0.6]);
        let p = fam.partition_at([0.5, 0.9]);
        assert!(outward_sliding(&p, 2, TOL).is_some());

        // Inward sliding on e1 at (0.7, 0.3): speed is negative.
        let p = fam.partition_at([0.7, 0.3]);
        assert!(outward_sliding(&p, 1, TOL).is_none());
    }

    #[test]
    fn union_interior_is_detected_through_nonstrict_memberships() {
        // At (0.6, 0.9) every individual membership is non-strict, yet the
        // point is interior to the union of escape sets.
        let fam = coupled2_family([0.6, 0.6]);
        let v = classify_2d(&fam.partition_at([0.6, 0.9]), TOL);
        assert_eq!(v.verdict, Verdict::Unstable);
    }

    #[test]
    fn axis_points_respect_the_orthant_constraint() {
        let fam = coupled2_family([0.6, 0.6]);
        // Unstable on the lambda1 axis beyond the single-queue capacity.
        let v = classify_2d(&fam.partition_at([1.1, 0.0]), TOL);
        assert_eq!(v.verdict, Verdict::Unstable);
        // Stable below it.
        let v = classify_2d(&fam.partition_at([0.3, 0.0]), TOL);
        assert_eq!(v.verdict, Verdict::Stable);
        // Empty system.
        let v = classify_2d(&fam.partition_at([0.0, 0.0]), TOL);
        assert_eq!(v.verdict, Verdict::Stable);
    }

    #[test]
    fn exact_boundary_point_is_boundary() {
        let fam = coupled2_family([0.6, 0.6]);
        let v = classify_2d(&fam.partition_at([0.5, 2.0 / 3.0]), TOL);
        assert_eq!(v.verdict, Verdict::Boundary);
    }

    #[test]
    fn verdict_is_scale_invariant() {
        // Scaling all arrivals and all services by c scales every drift
        // by c and must not move the verdict.
        let scaled_family = |c: f64| {
            let deaths = vec![[c, 0.0], [0.6 * c, 0.6 * c], [0.0, c]];
            let rays = vec![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
            let arrivals = [0.1 * c, 0.1 * c];
            let drifts = deaths
                .iter()
                .map(|psi| [arrivals[0] - psi[0], arrivals[1] - psi[1]])
                .collect();
            let p = ConePartition2D::new(rays, drifts, deaths, None, Some(arrivals)).unwrap();
            PartitionFamily::from_partition(&p).unwrap()
        };
        for lambda in [[0.3, 0.3], [0.5, 0.9], [0.9, 0.2], [1.1, 1.1]] {
            let base = classify_2d(&scaled_family(1.0).partition_at(lambda), TOL).verdict;
            for c in [0.037, 12.0] {
                let scaled = classify_2d(
                    &scaled_family(c).partition_at([lambda[0] * c, lambda[1] * c]),
                    TOL,
                );
                assert_eq!(base, scaled.verdict, "lambda {lambda:?} scale {c}");
            }
        }
    }

    #[test]
    fn polygon_matches_closed_form_chain() {
        let fam = coupled2_family([0.6, 0.6]);
        let poly = region_polygon(&fam);
        let expect: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [0.6, 0.6], [0.0, 1.0]];
        assert_eq!(poly.vertices.len(), expect.len(), "{:?}", poly.vertices);
        for (got, want) in poly.vertices.iter().zip(&expect) {
            assert!(
                (got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9,
                "vertex {got:?} vs {want:?}"
            );
        }
    }

    #[test]
    fn unit_square_for_independent_servers() {
        let fam = coupled2_family([1.0, 1.0]);
        let poly = region_polygon(&fam);
        let expect: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(poly.vertices.len(), expect.len(), "{:?}", poly.vertices);
        for (got, want) in poly.vertices.iter().zip(&expect) {
            assert!((got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_agrees_with_closed_form_off_the_boundary() {
        let a = [0.6, 0.6];
        let fam = coupled2_family(a);
        let sweep = sweep_region(&fam, 41, [1.2, 1.2], TOL);
        let poly = region_polygon(&fam);
        let step = 1.2 / 40.0;
        for (i, &l1) in sweep.lambda1.iter().enumerate() {
            for (j, &l2) in sweep.lambda2.iter().enumerate() {
                if poly.boundary_distance([l1, l2]) <= step {
                    continue;
                }
                let got = sweep.verdicts[i * sweep.lambda2.len() + j];
                let want = if closed_form_coupled2(a, [l1, l2]) {
                    Verdict::Stable
                } else {
                    Verdict::Unstable
                };
                assert_eq!(got, want, "lambda = ({l1}, {l2})");
            }
        }
    }

    #[test]
    fn sliding_speed_matches_boundary_equilibrium_identity() {
        // On the e2 ray the sliding speed equals the idle/busy mixture of
        // the second queue's drift, with idle fraction 1 - lambda1/a1.
        let mut rng = SplitMix64::new(77);
        for _ in 0..50 {
            let a = [rng.next_range(0.2, 0.95), rng.next_range(0.2, 0.95)];
            let l = [rng.next_range(0.01, a[0] * 0.99), rng.next_range(0.05, 1.2)];
            let fam = coupled2_family(a);
            let p = fam.partition_at(l);
            let hi = p.drift(2);
            let lo = p.drift(1);
            let SlidingOutcome::Sliding(s) = sliding_solution(hi, lo, [0.0, 1.0]) else {
                panic!("sliding must exist for lambda1 < a1")
            };
            let pi0 = 1.0 - l[0] / a[0];
            let expect = pi0 * (l[1] - 1.0) + (1.0 - pi0) * (l[1] - a[1]);
            assert!(
                (s.speed - expect).abs() < 1e-9,
                "speed {} vs {expect}",
                s.speed
            );
        }
    }

    #[test]
    fn jsq_polygon_crosses_axes_at_pooled_capacity() {
        let scenario = catalog::jsq2_model([0.1, 0.1], 0.2, [0.5, 0.5]).unwrap();
        let fam = PartitionFamily::from_partition(&scenario).unwrap();
        let poly = region_polygon(&fam);
        // Axis intercepts from the flexible-traffic conditions:
        // lambda1 < 1 + (a1 - 1)/a2 * (lambda2 + nu) at lambda2 = 0.
        assert!(
            poly.vertices
                .iter()
                .any(|v| (v[0] - 0.8).abs() < 1e-9 && v[1].abs() < 1e-9)
        );
        assert!(
            poly.vertices
                .iter()
                .any(|v| v[0].abs() < 1e-9 && (v[1] - 0.8).abs() < 1e-9)
        );
        // Region/classifier agreement away from the boundary.
        let sweep = sweep_region(&fam, 33, [1.0, 1.0], TOL);
        let step = 1.0 / 32.0;
        for (i, &l1) in sweep.lambda1.iter().enumerate() {
            for (j, &l2) in sweep.lambda2.iter().enumerate() {
                if poly.boundary_distance([l1, l2]) <= step {
                    continue;
                }
                let got = sweep.verdicts[i * sweep.lambda2.len() + j];
                let want = if poly.contains([l1, l2]) {
                    Verdict::Stable
                } else {
                    Verdict::Unstable
                };
                assert_eq!(got, want, "lambda = ({l1}, {l2})");
            }
        }
    }
}
