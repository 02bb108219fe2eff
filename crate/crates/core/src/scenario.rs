//! Scenario files: a single JSON document describing a named model
//! instance plus analysis settings.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "coupled2",
//!   "dimension": 2,
//!   "model": { "family": "builtin", "name": "coupled2",
//!              "params": { "a": [0.6, 0.6], "lambda": [0.3, 0.3] } },
//!   "analysis": { "seed": 42 },
//!   "sweep": { "grid": 41, "lambda_max": [1.2, 1.2] }
//! }
//! ```
//!
//! Schema violations are reported with a JSON-pointer-style path; smooth
//! models are additionally validated for scale-freeness and total
//! evaluability at load time.

use crate::catalog;
use crate::cone_geometry::FaceSettings;
use crate::ctmc_sim::{Horizon, SimConfig};
use crate::drift_model::{
    AllocationOrientation, ConePartition2D, DriftModel, ModelError, PatternRates, RateDef,
    SmoothDriftSpec, SmoothFamily, StateVector, SupportPatternDrift, validate_homogeneity,
};
use crate::ode_flow::FlowSettings;
use crate::rate_dsl;
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
const MAX_FILE_BYTES: u64 = 1024 * 1024;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario file is {0} bytes, limit is {MAX_FILE_BYTES}")]
    TooLarge(u64),
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error(
        "rate at {pointer} is not scale-free: drift deviates by {deviation:.3e} at x = {x:?} scaled by {scale}"
    )]
    Homogeneity {
        pointer: String,
        x: Vec<f64>,
        scale: f64,
        deviation: f64,
    },
    #[error("rate at {pointer} failed to evaluate at x = {x:?}: {message}")]
    Evaluation {
        pointer: String,
        x: Vec<f64>,
        message: String,
    },
    #[error("unknown builtin scenario `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// Document types (the on-disk schema)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub name: String,
    pub dimension: usize,
    pub model: ModelDoc,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelDoc {
    SupportPattern {
        patterns: Vec<PatternDoc>,
    },
    ConePartition {
        rays: Vec<[f64; 2]>,
        drifts: Vec<[f64; 2]>,
        deaths: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        births: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arrivals: Option<[f64; 2]>,
    },
    Smooth {
        births: Vec<RateDoc>,
        deaths: Vec<RateDoc>,
    },
    Shannon {
        arrivals: [f64; 2],
        noise: f64,
    },
    Polytope {
        arrivals: Vec<Vec<f64>>,
        capacities: Vec<Vec<f64>>,
        #[serde(default)]
        orientation: AllocationOrientation,
    },
    Builtin {
        name: String,
        #[serde(default)]
        params: catalog::BuiltinParams,
    },
}

/// Support patterns are listed with 1-based coordinate indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDoc {
    pub support: Vec<usize>,
    pub birth: Vec<f64>,
    pub death: Vec<f64>,
}

/// A rate is either a constant or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateDoc {
    Constant(f64),
    Expression(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub seed: u64,
    /// Membership / separation tolerance.
    pub tol: f64,
    /// Inner-ball radius of the flow analysis.
    pub kappa: f64,
    /// Escape radius of the flow analysis.
    pub r_max: f64,
    /// Time budget per trajectory.
    pub t_max: f64,
    /// Directions on the quarter circle (2D flow mesh).
    pub mesh: usize,
    /// Icosphere subdivision level (3D flow mesh).
    pub icosphere_level: u32,
    /// Simulated-time horizon.
    pub horizon_time: f64,
    /// Event-count horizon; overrides `horizon_time` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_events: Option<u64>,
    pub replicas: usize,
    /// Initial state of simulations; defaults to 50 per coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<u64>>,
    /// Radius of the compact return set; defaults to `10 * dimension`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compact_radius: Option<f64>,
    /// Escape-slope threshold below which a run looks recurrent.
    pub slope_lo: f64,
    /// Escape-slope threshold above which a run looks transient.
    pub slope_hi: f64,
    /// Directions sampled per two-coordinate face in the separation test.
    pub arc_directions: usize,
    /// Spherical-triangle grid divisions for three-coordinate faces.
    pub triangle_divisions: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: 42,
            tol: 1e-9,
            kappa: 1e-3,
            r_max: 1e3,
            t_max: 1e3,
            mesh: 720,
            icosphere_level: 4,
            horizon_time: 1e5,
            horizon_events: None,
            replicas: 5,
            initial_state: None,
            compact_radius: None,
            slope_lo: 0.02,
            slope_hi: 0.1,
            arc_directions: 181,
            triangle_divisions: 90,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub grid: usize,
    pub lambda_max: [f64; 2],
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            grid: 41,
            lambda_max: [1.2, 1.2],
        }
    }
}

// ---------------------------------------------------------------------------
// Runtime scenario
// ---------------------------------------------------------------------------

/// A validated scenario: resolved model plus its source document.
#[derive(Debug, Clone)]
pub struct Scenario {
    doc: ScenarioDoc,
    model: DriftModel,
}

impl Scenario {
    pub(crate) fn from_parts(doc: ScenarioDoc, model: DriftModel) -> Self {
        Self { doc, model }
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn model(&self) -> &DriftModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn analysis(&self) -> &AnalysisSettings {
        &self.doc.analysis
    }

    pub fn sweep(&self) -> SweepSettings {
        self.doc.sweep.clone().unwrap_or_default()
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scenario docs serialize")
    }

    /// Stable content hash of the scenario document (FNV-1a, 64 bit).
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.doc).expect("scenario docs serialize");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }

    pub fn initial_state(&self) -> Vec<u64> {
        self.doc
            .analysis
            .initial_state
            .clone()
            .unwrap_or_else(|| vec![50; self.dim()])
    }

    pub fn compact_radius(&self) -> f64 {
        self.doc
            .analysis
            .compact_radius
            .unwrap_or(10.0 * self.dim() as f64)
    }

    pub fn sim_config(&self) -> SimConfig {
        let a = &self.doc.analysis;
        SimConfig {
            seed: a.seed,
            horizon: match a.horizon_events {
                Some(e) => Horizon::Events(e),
                None => Horizon::Time(a.horizon_time),
            },
            initial: self.initial_state(),
            compact_radius: self.compact_radius(),
            replicas: a.replicas,
            slope_lo: a.slope_lo,
            slope_hi: a.slope_hi,
            record_every: None,
        }
    }

    pub fn flow_settings(&self) -> FlowSettings {
        let a = &self.doc.analysis;
        FlowSettings {
            kappa: a.kappa,
            r_max: a.r_max,
            t_max: a.t_max,
            mesh_2d: a.mesh,
            icosphere_level: a.icosphere_level,
            ..FlowSettings::default()
        }
    }

    pub fn face_settings(&self) -> FaceSettings {
        let a = &self.doc.analysis;
        FaceSettings {
            arc_directions: a.arc_directions,
            triangle_divisions: a.triangle_divisions,
            margin: a.tol,
        }
    }

    /// Rebuild the scenario with adjusted analysis settings.
    pub fn with_analysis(
        &self,
        adjust: impl FnOnce(&mut AnalysisSettings),
    ) -> Result<Scenario, ScenarioError> {
        let mut doc = self.doc.clone();
        adjust(&mut doc.analysis);
        // The model is untouched, so no re-validation is needed.
        Ok(Scenario::from_parts(doc, self.model.clone()))
    }

    /// Rebuild the scenario with a different arrival vector.
    pub fn with_lambda(&self, lambda: &[f64]) -> Result<Scenario, ScenarioError> {
        if lambda.len() != self.dim() {
            return Err(ScenarioError::InvalidParam(format!(
                "--lambda needs {} components, got {}",
                self.dim(),
                lambda.len()
            )));
        }
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(ScenarioError::InvalidParam(
                "arrival rates must be non-negative".into(),
            ));
        }
        let mut doc = self.doc.clone();
        match &mut doc.model {
            ModelDoc::Builtin { params, .. } => params.lambda = Some(lambda.to_vec()),
            ModelDoc::SupportPattern { patterns } => {
                for p in patterns.iter_mut() {
                    p.birth = lambda.to_vec();
                }
            }
            ModelDoc::ConePartition {
                arrivals,
                births,
                drifts,
                deaths,
                ..
            } => {
                let Some(old) = *arrivals else {
                    return Err(ScenarioError::InvalidParam(
                        "cone partition has no arrival vector to replace".into(),
                    ));
                };
                let shift = [lambda[0] - old[0], lambda[1] - old[1]];
                *arrivals = Some([lambda[0], lambda[1]]);
                if let Some(bs) = births {
                    for b in bs.iter_mut() {
                        b[0] += shift[0];
                        b[1] += shift[1];
                    }
                }
                for (d, _psi) in drifts.iter_mut().zip(deaths.iter()) {
                    d[0] += shift[0];
                    d[1] += shift[1];
                }
            }
            ModelDoc::Shannon { arrivals, .. } => *arrivals = [lambda[0], lambda[1]],
            ModelDoc::Smooth { .. } | ModelDoc::Polytope { .. } => {
                return Err(ScenarioError::InvalidParam(
                    "this model family has no arrival vector to replace".into(),
                ));
            }
        }
        Scenario::from_doc(doc)
    }

    /// Resolve and validate a document into a runnable scenario.
    pub fn from_doc(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Schema {
                pointer: "/schema_version".into(),
                message: format!("unsupported schema version {}", doc.schema_version),
            });
        }
        let dim = doc.dimension;
        if !(2..=20).contains(&dim) {
            return Err(ScenarioError::Schema {
                pointer: "/dimension".into(),
                message: format!("dimension must be between 2 and 20, got {dim}"),
            });
        }
        let model = match &doc.model {
            ModelDoc::SupportPattern { patterns } => {
                DriftModel::Support(build_support(dim, patterns)?)
            }
            ModelDoc::ConePartition {
                rays,
                drifts,
                deaths,
                births,
                arrivals,
            } => {
                if dim != 2 {
                    return Err(ScenarioError::Schema {
                        pointer: "/dimension".into(),
                        message: "cone partitions are planar (dimension 2)".into(),
                    });
                }
                DriftModel::Cones(ConePartition2D::new(
                    rays.clone(),
                    drifts.clone(),
                    deaths.clone(),
                    births.clone(),
                    *arrivals,
                )?)
            }
            ModelDoc::Smooth { births, deaths } => {
                DriftModel::Smooth(build_smooth(dim, births, deaths)?)
            }
            ModelDoc::Shannon { arrivals, noise } => DriftModel::Smooth(SmoothDriftSpec::new(
                dim,
                SmoothFamily::Shannon {
                    arrivals: *arrivals,
                    noise: *noise,
                },
            )?),
            ModelDoc::Polytope {
                arrivals,
                capacities,
                orientation,
            } => DriftModel::Smooth(SmoothDriftSpec::new(
                dim,
                SmoothFamily::Polytope {
                    arrivals: arrivals.clone(),
                    capacities: capacities.clone(),
                    orientation: *orientation,
                },
            )?),
            ModelDoc::Builtin { name, params } => {
                let base = catalog::builtin_scenario(name, params)?;
                let analysis = if doc.analysis == AnalysisSettings::default() {
                    base.doc.analysis.clone()
                } else {
                    doc.analysis.clone()
                };
                let resolved = ScenarioDoc {
                    schema_version: SCHEMA_VERSION,
                    name: doc.name.clone(),
                    dimension: doc.dimension,
                    model: base.doc.model.clone(),
                    analysis,
                    sweep: doc.sweep.clone().or(base.doc.sweep.clone()),
                };
                if base.dim() != dim {
                    return Err(ScenarioError::Schema {
                        pointer: "/dimension".into(),
                        message: format!(
                            "builtin `{name}` has dimension {}, document says {dim}",
                            base.dim()
                        ),
                    });
                }
                return Ok(Scenario::from_parts(resolved, base.model));
            }
        };
        if model.dim() != dim {
            return Err(ScenarioError::Schema {
                pointer: "/dimension".into(),
                message: format!("model dimension {} does not match {dim}", model.dim()),
            });
        }
        if model.is_smooth() {
            smoke_test_smooth(&model, doc.analysis.seed)?;
            if let Err(fail) = validate_homogeneity(&model, 200, doc.analysis.seed) {
                return Err(ScenarioError::Homogeneity {
                    pointer: "/model".into(),
                    x: fail.x,
                    scale: fail.scale,
                    deviation: fail.deviation,
                });
            }
        }
        Ok(Scenario::from_parts(doc, model))
    }
}

fn build_support(
    dim: usize,
    patterns: &[PatternDoc],
) -> Result<SupportPatternDrift, ScenarioError> {
    let want = (1usize << dim) - 1;
    let mut table: Vec<Option<PatternRates>> = vec![None; want];
    for (pi, p) in patterns.iter().enumerate() {
        let base = format!("/model/patterns/{pi}");
        let mut mask = 0u32;
        for (si, &coord) in p.support.iter().enumerate() {
            if coord == 0 || coord > dim {
                return Err(ScenarioError::Schema {
                    pointer: format!("{base}/support/{si}"),
                    message: format!("coordinate {coord} out of range 1..={dim}"),
                });
            }
            mask |= 1 << (coord - 1);
        }
        if mask == 0 {
            return Err(ScenarioError::Schema {
                pointer: format!("{base}/support"),
                message: "support must be non-empty".into(),
            });
        }
        for (field, rates) in [("birth", &p.birth), ("death", &p.death)] {
            if rates.len() != dim {
                return Err(ScenarioError::Schema {
                    pointer: format!("{base}/{field}"),
                    message: format!("expected {dim} rates, got {}", rates.len()),
                });
            }
            for (ri, &r) in rates.iter().enumerate() {
                if !r.is_finite() || r < 0.0 {
                    return Err(ScenarioError::Schema {
                        pointer: format!("{base}/{field}/{ri}"),
                        message: format!("rates must be finite and non-negative, got {r}"),
                    });
                }
            }
        }
        let slot = &mut table[mask as usize - 1];
        if slot.is_some() {
            return Err(ScenarioError::Schema {
                pointer: format!("{base}/support"),
                message: "duplicate support pattern".into(),
            });
        }
        *slot = Some(PatternRates {
            birth: p.birth.clone(),
            death: p.death.clone(),
        });
    }
    let mut full = Vec::with_capacity(want);
    for (i, slot) in table.into_iter().enumerate() {
        match slot {
            Some(r) => full.push(r),
            None => {
                return Err(ScenarioError::Schema {
                    pointer: "/model/patterns".into(),
                    message: format!("missing pattern for support mask {:#b}", i + 1),
                });
            }
        }
    }
    Ok(SupportPatternDrift::new(dim, full)?)
}

fn build_smooth(
    dim: usize,
    births: &[RateDoc],
    deaths: &[RateDoc],
) -> Result<SmoothDriftSpec, ScenarioError> {
    let defs = |field: &str, docs: &[RateDoc]| -> Result<Vec<RateDef>, ScenarioError> {
        if docs.len() != dim {
            return Err(ScenarioError::Schema {
                pointer: format!("/model/{field}"),
                message: format!("expected {dim} rates, got {}", docs.len()),
            });
        }
        docs.iter()
            .enumerate()
            .map(|(i, doc)| match doc {
                RateDoc::Constant(v) => {
                    if !v.is_finite() || *v < 0.0 {
                        Err(ScenarioError::Schema {
                            pointer: format!("/model/{field}/{i}"),
                            message: format!("rates must be finite and non-negative, got {v}"),
                        })
                    } else {
                        Ok(RateDef::Constant(*v))
                    }
                }
                RateDoc::Expression(s) => match rate_dsl::parse(s) {
                    Ok(e) => Ok(RateDef::Expr(e)),
                    Err(e) => Err(ScenarioError::Schema {
                        pointer: format!("/model/{field}/{i}"),
                        message: e.to_string(),
                    }),
                },
            })
            .collect()
    };
    let births = defs("births", births)?;
    let deaths = defs("deaths", deaths)?;
    Ok(SmoothDriftSpec::new(
        dim,
        SmoothFamily::Custom { births, deaths },
    )?)
}

/// Evaluate all rates of a smooth model over 1000 random sphere points; a
/// model whose rates are partial on the open orthant is rejected up front.
fn smoke_test_smooth(model: &DriftModel, seed: u64) -> Result<(), ScenarioError> {
    let mut rng = SplitMix64::new(seed ^ 0x0515_0a1d);
    for _ in 0..1000 {
        let dir = rng.orthant_direction(model.dim());
        let x = StateVector::new(dir.clone()).expect("unit direction");
        if let Err(e) = model.drift_at(&x) {
            return Err(ScenarioError::Evaluation {
                pointer: "/model".into(),
                x: dir,
                message: e.to_string(),
            });
        }
    }
    Ok(())
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Load and validate a scenario file (at most 1 MiB).
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path)?;
    if meta.len() > MAX_FILE_BYTES {
        return Err(ScenarioError::TooLarge(meta.len()));
    }
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Parse and validate a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc =
        serde_path_to_error::deserialize(&mut de).map_err(|e| ScenarioError::Schema {
            pointer: path_to_pointer(&e.path().to_string()),
            message: e.inner().to_string(),
        })?;
    Scenario::from_doc(doc)
}

fn path_to_pointer(path: &str) -> String {
    if path == "." {
        return "/".into();
    }
    let mut out = String::new();
    for seg in path.split('.') {
        let mut rest = seg;
        let mut head = rest;
        if let Some(idx) = rest.find('[') {
            head = &rest[..idx];
            rest = &rest[idx..];
        } else {
            rest = "";
        }
        if !head.is_empty() {
            out.push('/');
            out.push_str(head);
        }
        while let Some(open) = rest.find('[') {
            let close = rest.find(']').unwrap_or(rest.len());
            out.push('/');
            out.push_str(&rest[open + 1..close]);
            rest = &rest[(close + 1).min(rest.len())..];
        }
    }
    if out.is_empty() { "/".into() } else { out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BuiltinParams, builtin_scenario};

    fn coupled2_text(death0: f64) -> String {
        format!(
            r#"{{
                "schema_version": 1,
                "name": "custom",
                "dimension": 2,
                "model": {{
                    "family": "support_pattern",
                    "patterns": [
                        {{"support": [1], "birth": [0.3, 0.3], "death": [{death0}, 0.0]}},
                        {{"support": [2], "birth": [0.3, 0.3], "death": [0.0, 1.0]}},
                        {{"support": [1, 2], "birth": [0.3, 0.3], "death": [0.6, 0.6]}}
                    ]
                }}
            }}"#
        )
    }

    #[test]
    fn scenarios_round_trip_through_json() {
        let custom = parse_scenario(&coupled2_text(1.0)).unwrap();
        let again = parse_scenario(&custom.to_json()).unwrap();
        assert_eq!(custom.doc(), again.doc());
        assert_eq!(custom.fingerprint(), again.fingerprint());

        for name in crate::catalog::BUILTIN_NAMES {
            let s = builtin_scenario(name, &BuiltinParams::default()).unwrap();
            let again = parse_scenario(&s.to_json()).unwrap();
            assert_eq!(s.doc(), again.doc(), "builtin `{name}` does not round-trip");
            assert_eq!(s.model(), again.model());
        }
    }

    #[test]
    fn negative_rate_pointer_for_smooth_models() {
        let text = r#"{
            "schema_version": 1,
            "name": "bad",
            "dimension": 2,
            "model": {"family": "smooth", "births": [0.1, 0.1], "deaths": [-0.5, 1.0]}
        }"#;
        let err = parse_scenario(text).unwrap_err();
        let ScenarioError::Schema { pointer, .. } = err else {
            panic!("expected a schema error, got {err}")
        };
        assert_eq!(pointer, "/model/deaths/0");
    }

    #[test]
    fn malformed_json_reports_a_pointer() {
        let err = parse_scenario(r#"{"schema_version": 1, "name": 3}"#).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema { .. }), "{err}");
        let err = parse_scenario(
            r#"{"schema_version": 1, "name": "x", "dimension": 2,
                "model": {"family": "support_pattern", "patterns": []}, "bogus": 1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn schema_version_is_checked() {
        let text = coupled2_text(1.0).replace("\"schema_version\": 1", "\"schema_version\": 9");
        let err = parse_scenario(&text).unwrap_err();
        let ScenarioError::Schema { pointer, .. } = err else {
            panic!("{err}")
        };
        assert_eq!(pointer, "/schema_version");
    }

    #[test]
    fn one_homogeneous_expression_is_a_homogeneity_error() {
        let text = r#"{
            "schema_version": 1,
            "name": "linear",
            "dimension": 2,
            "model": {"family": "smooth", "births": [0.0, 0.0], "deaths": ["x1", "x2"]}
        }"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Homogeneity { .. }), "{err}");
    }

    #[test]
    fn lambda_override_updates_each_family() {
        let support = parse_scenario(&coupled2_text(1.0)).unwrap();
        let shifted = support.with_lambda(&[0.5, 0.9]).unwrap();
        let x = crate::drift_model::StateVector::new(vec![1.0, 1.0]).unwrap();
        let d = shifted.model().drift_at(&x).unwrap();
        assert!((d[0] - (-0.1)).abs() < 1e-12 && (d[1] - 0.3).abs() < 1e-12);

        let jsq = builtin_scenario("jsq2", &BuiltinParams::default()).unwrap();
        let shifted = jsq.with_lambda(&[0.2, 0.3]).unwrap();
        let DriftModel::Cones(p) = shifted.model() else {
            panic!()
        };
        assert_eq!(p.arrivals(), Some([0.2, 0.3]));
        // Flexible traffic still rides on top of the dedicated arrivals.
        assert!((p.birth(0)[1] - 0.5).abs() < 1e-12);

        let shannon = builtin_scenario("shannon2", &BuiltinParams::default()).unwrap();
        let shifted = shannon.with_lambda(&[0.5, 0.8]).unwrap();
        let d = shifted.model().drift_at(&x).unwrap();
        assert!(
            (d[0] - d[1] - (0.5 - 0.8)).abs() < 1e-12,
            "symmetric services cancel"
        );

        let polytope = builtin_scenario("polytope2", &BuiltinParams::default()).unwrap();
        assert!(
            polytope.with_lambda(&[0.1, 0.1]).is_err(),
            "no arrival vector to replace"
        );
    }

    #[test]
    fn builtin_docs_keep_their_tuned_analysis() {
        let s = builtin_scenario("shannon2", &BuiltinParams::default()).unwrap();
        assert_eq!(s.analysis().horizon_time, 2e6);
        // An explicit analysis block wins over the builtin tuning.
        let text = r#"{
            "schema_version": 1,
            "name": "shannon-custom",
            "dimension": 2,
            "model": {"family": "builtin", "name": "shannon2"},
            "analysis": {"horizon_time": 1234.0}
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.analysis().horizon_time, 1234.0);
        assert_eq!(s.name(), "shannon-custom");
    }

    #[test]
    fn pointer_conversion() {
        assert_eq!(
            path_to_pointer("model.patterns[2].death[0]"),
            "/model/patterns/2/death/0"
        );
        assert_eq!(path_to_pointer("name"), "/name");
        assert_eq!(path_to_pointer("."), "/");
    }

    #[test]
    fn analysis_and_initial_state_defaults() {
        let s = parse_scenario(&coupled2_text(1.0)).unwrap();
        assert_eq!(s.initial_state(), vec![50, 50]);
        assert_eq!(s.compact_radius(), 20.0);
        let s = s
            .with_analysis(|a| {
                a.initial_state = Some(vec![3, 4]);
                a.compact_radius = Some(7.5);
            })
            .unwrap();
        assert_eq!(s.initial_state(), vec![3, 4]);
        assert_eq!(s.compact_radius(), 7.5);
    }
}
