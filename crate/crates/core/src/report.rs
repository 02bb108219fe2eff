//! Analysis orchestration and machine-readable verdict reports.
//!
//! Dispatch by model family: smooth models go through the flow and
//! gradient criteria, support-pattern models through the face-separation
//! criterion (plus the planar region theory in dimension two), cone
//! partitions through the region theory directly. Simulation is appended
//! on request and reported side by side; it never overrides an analytic
//! verdict. Two analytic methods disagreeing stable-versus-unstable is a
//! conflict and must fail loudly downstream.

use crate::cone_geometry::{self, GeometryError};
use crate::ctmc_sim::{self, SimError};
use crate::drift_model::DriftModel;
use crate::gradient_system::{self, GradientError};
use crate::ode_flow::{self, FlowError};
use crate::region2d::{self};
use crate::scenario::{SCHEMA_VERSION, Scenario};
use crate::verdict::Verdict;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Region(#[from] crate::region2d::RegionError),
    #[error(transparent)]
    Model(#[from] crate::drift_model::ModelError),
    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Combined verdict over the analytic methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallVerdict {
    Stable,
    Unstable,
    Boundary,
    Inconclusive,
    /// Analytic methods disagree stable-versus-unstable.
    Conflict,
}

/// One method's verdict plus its certificate payload.
#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: &'static str,
    pub verdict: Verdict,
    /// Simulation is advisory; analytic methods are authoritative.
    pub advisory: bool,
    pub certificate: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub scenario: String,
    pub fingerprint: String,
    pub overall: OverallVerdict,
    pub methods: Vec<MethodReport>,
    pub settings: crate::scenario::AnalysisSettings,
}

pub fn combine(methods: &[MethodReport]) -> OverallVerdict {
    let analytic: Vec<Verdict> = methods
        .iter()
        .filter(|m| !m.advisory)
        .map(|m| m.verdict)
        .collect();
    let any_stable = analytic.contains(&Verdict::Stable);
    let any_unstable = analytic.contains(&Verdict::Unstable);
    if any_stable && any_unstable {
        OverallVerdict::Conflict
    } else if any_unstable {
        OverallVerdict::Unstable
    } else if any_stable {
        OverallVerdict::Stable
    } else if analytic.contains(&Verdict::Boundary) {
        OverallVerdict::Boundary
    } else {
        OverallVerdict::Inconclusive
    }
}

/// Run every analysis the scenario's model family supports.
pub fn analyze(scenario: &Scenario, with_simulation: bool) -> Result<VerdictReport, AnalyzeError> {
    let model = scenario.model();
    let analysis = scenario.analysis();
    let mut methods: Vec<MethodReport> = Vec::new();

    match model {
        DriftModel::Smooth(_) => {
            let flow = ode_flow::classify_smooth(model, &scenario.flow_settings())?;
            methods.push(MethodReport {
                method: "ode",
                verdict: flow.verdict,
                advisory: false,
                certificate: serde_json::to_value(&flow)?,
            });
            let grad =
                gradient_system::gradient_criterion(model, analysis.mesh, 1e-6, analysis.seed)?;
            methods.push(MethodReport {
                method: "gradient",
                verdict: grad.verdict,
                advisory: false,
                certificate: serde_json::to_value(&grad)?,
            });
        }
        DriftModel::Support(support) => {
            let sep = cone_geometry::separation_criterion(support, &scenario.face_settings())?;
            methods.push(MethodReport {
                method: "separation",
                verdict: sep.verdict,
                advisory: false,
                certificate: separation_certificate(&sep)?,
            });
            if support.dim() == 2 {
                let partition = crate::drift_model::cones_from_support(support)?;
                let region = region2d::classify_partition(&partition, analysis.tol);
                methods.push(MethodReport {
                    method: "region",
                    verdict: region.verdict,
                    advisory: false,
                    certificate: serde_json::to_value(&region)?,
                });
            }
        }
        DriftModel::Cones(partition) => {
            let region = region2d::classify_partition(partition, analysis.tol);
            methods.push(MethodReport {
                method: "region",
                verdict: region.verdict,
                advisory: false,
                certificate: serde_json::to_value(&region)?,
            });
        }
    }

    if with_simulation {
        let est = ctmc_sim::estimate_recurrence(model, &scenario.sim_config())?;
        let cert = serde_json::json!({
            "verdict": est.verdict,
            "median_slope": est.median_slope,
            "slopes": est.slopes,
            "returns": est.returns,
            "rng_algorithm": crate::rng::RNG_ALGORITHM,
            "seed": analysis.seed,
        });
        methods.push(MethodReport {
            method: "simulation",
            verdict: est.verdict.as_verdict(),
            advisory: true,
            certificate: cert,
        });
    }

    Ok(VerdictReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.name().to_string(),
        fingerprint: scenario.fingerprint(),
        overall: combine(&methods),
        methods,
        settings: analysis.clone(),
    })
}

fn separation_certificate(
    report: &cone_geometry::SeparationReport,
) -> Result<serde_json::Value, serde_json::Error> {
    let faces: Vec<serde_json::Value> = report
        .faces
        .iter()
        .map(|f| {
            serde_json::json!({
                "face_mask": f.face,
                "holds": f.holds,
                "directions": f.directions,
                "witness_eta": f.witnesses.first().map(|w| w.eta.clone()),
                "witness_margin": f.witnesses.first().map(|w| w.margin),
                "failing_direction": f.failing_direction,
            })
        })
        .collect();
    serde_json::to_value(faces)
}
