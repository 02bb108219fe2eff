//! The explicit-potential criterion for conservative drift fields.
//!
//! When the drift is the negative gradient of a potential `V`, scale-
//! freeness makes `V` linear along rays, so Euler's identity collapses it
//! to the closed form `V(x) = -<x, drift(x)>`. A conservative field with
//! `V` positive and drift bounded away from zero on the sphere certifies
//! positive recurrence directly; the criterion never certifies the
//! converse.

use crate::drift_model::{DriftModel, ModelError, StateVector};
use crate::mesh;
use crate::rng::SplitMix64;
use crate::vecn;
use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GradientError {
    #[error("field is not conservative (max cross-partial asymmetry {asymmetry:.3e})")]
    NotConservative { asymmetry: f64 },
    #[error("conservativity undetermined: {skipped} of {samples} samples failed to evaluate")]
    Undetermined { skipped: usize, samples: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Finite-difference symmetry check of the drift Jacobian on the sphere.
#[derive(Debug, Clone, Serialize)]
pub struct ConservativityReport {
    pub conservative: bool,
    pub max_asymmetry: f64,
    pub samples: usize,
    pub skipped: usize,
    pub tolerance: f64,
}

const FD_STEP: f64 = 1e-5;

/// Decide conservativity from cross-partial symmetry at `samples` random
/// sphere points (all coordinate pairs for dimension above two). Scale-
/// freeness makes the sphere decision carry over to the whole open
/// orthant.
pub fn conservativity(
    model: &DriftModel,
    tol: f64,
    samples: usize,
    seed: u64,
) -> Result<ConservativityReport, GradientError> {
    let dim = model.dim();
    let mut rng = SplitMix64::new(seed);
    let mut max_asym = 0.0f64;
    let mut skipped = 0usize;
    for _ in 0..samples {
        // Keep samples away from the boundary so stencils stay interior.
        let x = loop {
            let d = rng.orthant_direction(dim);
            if d.iter().all(|&c| c > 1e-3) {
                break d;
            }
        };
        let mut failed = false;
        let mut partials = vec![vec![0.0; dim]; dim]; // partials[i][j] = d drift_j / d x_i
        for i in 0..dim {
            let mut fwd = x.clone();
            fwd[i] += FD_STEP;
            let mut bwd = x.clone();
            bwd[i] -= FD_STEP;
            let dplus = model.drift_at(&StateVector::new(fwd).expect("interior point"));
            let dminus = model.drift_at(&StateVector::new(bwd).expect("interior point"));
            match (dplus, dminus) {
                (Ok(p), Ok(m)) => {
                    for j in 0..dim {
                        partials[i][j] = (p[j] - m[j]) / (2.0 * FD_STEP);
                    }
                }
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            skipped += 1;
            continue;
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                max_asym = max_asym.max((partials[i][j] - partials[j][i]).abs());
            }
        }
    }
    if skipped * 20 > samples {
        return Err(GradientError::Undetermined { skipped, samples });
    }
    Ok(ConservativityReport {
        conservative: max_asym <= tol,
        max_asymmetry: max_asym,
        samples,
        skipped,
        tolerance: tol,
    })
}

/// The Euler-identity potential `-<x, drift(x)>`. Meaningful as a
/// potential only for conservative fields; see [`potential`].
pub fn euler_potential(model: &DriftModel, x: &StateVector) -> Result<f64, ModelError> {
    Ok(-vecn::dot(x.coords(), &model.drift_at(x)?))
}

/// Potential value at `x`, guarded by a conservativity report.
pub fn potential(
    model: &DriftModel,
    report: &ConservativityReport,
    x: &StateVector,
) -> Result<f64, GradientError> {
    if !report.conservative {
        return Err(GradientError::NotConservative {
            asymmetry: report.max_asymmetry,
        });
    }
    Ok(euler_potential(model, x)?)
}

/// Outcome of the potential criterion over a sphere mesh.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub conservative: bool,
    pub max_asymmetry: f64,
    pub min_potential: Option<f64>,
    pub min_drift_norm: Option<f64>,
    pub verdict: Verdict,
    pub mesh_size: usize,
    pub skipped: usize,
}

/// Positivity threshold for the mesh minima.
const POSITIVITY_TOL: f64 = 1e-9;

/// Stable iff the field is conservative with positive potential and
/// non-vanishing drift over the mesh; otherwise inconclusive. The minima
/// are mesh minima, not continuum claims, so the mesh size is recorded.
pub fn gradient_criterion(
    model: &DriftModel,
    mesh_size: usize,
    tol: f64,
    seed: u64,
) -> Result<PotentialReport, GradientError> {
    let cons = conservativity(model, tol, 200, seed)?;
    if !cons.conservative {
        return Ok(PotentialReport {
            conservative: false,
            max_asymmetry: cons.max_asymmetry,
            min_potential: None,
            min_drift_norm: None,
            verdict: Verdict::Inconclusive,
            mesh_size: 0,
            skipped: cons.skipped,
        });
    }
    let dirs: Vec<Vec<f64>> = match model.dim() {
        2 => mesh::quarter_circle(mesh_size)
            .into_iter()
            .map(|v| v.to_vec())
            .collect(),
        3 => mesh::icosphere_orthant(4)
            .into_iter()
            .map(|v| v.to_vec())
            .collect(),
        d => {
            return Err(GradientError::Model(ModelError::Invalid(format!(
                "no sphere mesh for dimension {d}"
            ))));
        }
    };
    let mut min_v = f64::INFINITY;
    let mut min_d = f64::INFINITY;
    let mut skipped = 0usize;
    let total = dirs.len();
    for d in dirs {
        let x = StateVector::new(d).expect("unit direction");
        match (euler_potential(model, &x), model.drift_at(&x)) {
            (Ok(v), Ok(drift)) => {
                min_v = min_v.min(v);
                min_d = min_d.min(vecn::norm(&drift));
            }
            _ => skipped += 1,
        }
    }
    let verdict = if min_v > POSITIVITY_TOL && min_d > POSITIVITY_TOL {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    Ok(PotentialReport {
        conservative: true,
        max_asymmetry: cons.max_asymmetry,
        min_potential: Some(min_v),
        min_drift_norm: Some(min_d),
        verdict,
        mesh_size: total,
        skipped,
    })
}
