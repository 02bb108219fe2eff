//! Builtin scenario catalog.
//!
//! * `coupled2` — two coupled processors: full service rate when alone,
//!   reduced rates `a1`, `a2` when both queues are busy.
//! * `jsq2` — two processors with dedicated traffic plus a flexible stream
//!   of rate `nu` joining the shorter queue (ties to the first).
//! * `coupled3` — three coupled processors with pairwise contention rates.
//! * `shannon2` — two users sharing a wireless channel, log-SNR service.
//! * `polytope2` — arrival/service vectors picked from polytope vertex
//!   lists by a support-function rule.

use crate::drift_model::{
    AllocationOrientation, ConePartition2D, DriftModel, ModelError, PatternRates, SmoothDriftSpec,
    SmoothFamily, SupportPatternDrift,
};
use crate::scenario::{
    AnalysisSettings, ModelDoc, SCHEMA_VERSION, Scenario, ScenarioDoc, ScenarioError, SweepSettings,
};
use serde::{Deserialize, Serialize};

pub const BUILTIN_NAMES: [&str; 5] = ["coupled2", "jsq2", "coupled3", "shannon2", "polytope2"];

/// Free parameters of the builtin scenarios; unset fields take the
/// documented defaults of each scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Pairwise contention rates of `coupled3`: `a_pairs[i][j]` is the
    /// service rate of coordinate `i` while exactly `j` is also busy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_pairs: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrival_vertices: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_vertices: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<AllocationOrientation>,
}

fn positive(name: &str, v: &[f64]) -> Result<(), ScenarioError> {
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(ScenarioError::InvalidParam(format!(
            "{name} must be strictly positive: {v:?}"
        )));
    }
    Ok(())
}

fn non_negative(name: &str, v: &[f64]) -> Result<(), ScenarioError> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(ScenarioError::InvalidParam(format!(
            "{name} must be non-negative: {v:?}"
        )));
    }
    Ok(())
}

fn fixed<const N: usize>(
    name: &str,
    v: Option<&Vec<f64>>,
    default: [f64; N],
) -> Result<[f64; N], ScenarioError> {
    match v {
        None => Ok(default),
        Some(v) if v.len() == N => Ok(std::array::from_fn(|i| v[i])),
        Some(v) => Err(ScenarioError::InvalidParam(format!(
            "{name} needs {N} components, got {}",
            v.len()
        ))),
    }
}

/// Two coupled processors as a support-pattern table.
pub fn coupled2_model(a: [f64; 2], lambda: [f64; 2]) -> Result<SupportPatternDrift, ModelError> {
    SupportPatternDrift::new(
        2,
        vec![
            // {1}: full rate for queue 1, queue 2 empty.
            PatternRates {
                birth: lambda.to_vec(),
                death: vec![1.0, 0.0],
            },
            // {2}
            PatternRates {
                birth: lambda.to_vec(),
                death: vec![0.0, 1.0],
            },
            // {1,2}: contention.
            PatternRates {
                birth: lambda.to_vec(),
                death: vec![a[0], a[1]],
            },
        ],
    )
}

/// Join-the-shorter-queue with dedicated arrivals and a flexible stream.
pub fn jsq2_model(lambda: [f64; 2], nu: f64, a: [f64; 2]) -> Result<ConePartition2D, ModelError> {
    let rays = vec![[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 1.0]];
    // Flexible traffic joins queue 2 below the diagonal, queue 1 on and
    // above it; services are full when the other queue is empty.
    let births = vec![
        [lambda[0], lambda[1] + nu],
        [lambda[0], lambda[1] + nu],
        [lambda[0] + nu, lambda[1]],
        [lambda[0] + nu, lambda[1]],
    ];
    let deaths = vec![[1.0, 0.0], [a[0], a[1]], [a[0], a[1]], [0.0, 1.0]];
    let drifts = births
        .iter()
        .zip(&deaths)
        .map(|(b, d)| [b[0] - d[0], b[1] - d[1]])
        .collect();
    ConePartition2D::new(rays, drifts, deaths, Some(births), Some(lambda))
}

/// Three coupled processors with pairwise contention rates
/// (`pairs[i][j]` serves coordinate `i` while exactly `j` is busy) and
/// unit rate under full contention.
pub fn coupled3_model(
    a: [f64; 3],
    pairs: [[f64; 3]; 3],
    lambda: [f64; 3],
) -> Result<SupportPatternDrift, ModelError> {
    let mut table = Vec::with_capacity(7);
    for mask in 1u32..=7 {
        let busy: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let mut death = vec![0.0; 3];
        match busy.len() {
            1 => death[busy[0]] = a[busy[0]],
            2 => {
                death[busy[0]] = pairs[busy[0]][busy[1]];
                death[busy[1]] = pairs[busy[1]][busy[0]];
            }
            _ => death = vec![1.0, 1.0, 1.0],
        }
        table.push(PatternRates {
            birth: lambda.to_vec(),
            death,
        });
    }
    SupportPatternDrift::new(3, table)
}

/// Shared wireless channel, log-SNR service rates.
pub fn shannon2_model(lambda: [f64; 2], noise: f64) -> Result<SmoothDriftSpec, ModelError> {
    SmoothDriftSpec::new(
        2,
        SmoothFamily::Shannon {
            arrivals: lambda,
            noise,
        },
    )
}

/// Polytope-allocation model.
pub fn polytope2_model(
    arrivals: Vec<Vec<f64>>,
    capacities: Vec<Vec<f64>>,
    orientation: AllocationOrientation,
) -> Result<SmoothDriftSpec, ModelError> {
    SmoothDriftSpec::new(
        2,
        SmoothFamily::Polytope {
            arrivals,
            capacities,
            orientation,
        },
    )
}

/// The radial unit field (inward or outward); handy as a closed-form
/// reference model for the flow analysis.
pub fn radial_model(outward: bool) -> SmoothDriftSpec {
    let unit = |i: usize| {
        crate::drift_model::RateDef::Expr(
            crate::rate_dsl::parse(&format!("x{}/norm", i + 1)).expect("static expression"),
        )
    };
    let zero = crate::drift_model::RateDef::Constant(0.0);
    let (births, deaths) = if outward {
        (vec![unit(0), unit(1)], vec![zero.clone(), zero])
    } else {
        (vec![zero.clone(), zero], vec![unit(0), unit(1)])
    };
    SmoothDriftSpec::new(2, SmoothFamily::Custom { births, deaths }).expect("static model")
}

fn scenario_doc(
    name: &str,
    dimension: usize,
    params: BuiltinParams,
    analysis: AnalysisSettings,
    sweep: Option<SweepSettings>,
) -> ScenarioDoc {
    ScenarioDoc {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        dimension,
        model: ModelDoc::Builtin {
            name: name.to_string(),
            params,
        },
        analysis,
        sweep,
    }
}

/// Resolve a builtin scenario by name.
pub fn builtin_scenario(name: &str, params: &BuiltinParams) -> Result<Scenario, ScenarioError> {
    match name {
        "coupled2" => {
            let a = fixed("a", params.a.as_ref(), [0.6, 0.6])?;
            let lambda = fixed("lambda", params.lambda.as_ref(), [0.3, 0.3])?;
            positive("a", &a)?;
            non_negative("lambda", &lambda)?;
            let model = coupled2_model(a, lambda)?;
            let resolved = BuiltinParams {
                a: Some(a.to_vec()),
                lambda: Some(lambda.to_vec()),
                ..BuiltinParams::default()
            };
            let doc = scenario_doc(
                name,
                2,
                resolved,
                AnalysisSettings {
                    horizon_time: 1e6,
                    ..AnalysisSettings::default()
                },
                Some(SweepSettings::default()),
            );
            Ok(Scenario::from_parts(doc, DriftModel::Support(model)))
        }
        "jsq2" => {
            let a = fixed("a", params.a.as_ref(), [0.5, 0.5])?;
            let lambda = fixed("lambda", params.lambda.as_ref(), [0.1, 0.1])?;
            let nu = params.nu.unwrap_or(0.2);
            positive("a", &a)?;
            non_negative("lambda", &lambda)?;
            non_negative("nu", &[nu])?;
            let model = jsq2_model(lambda, nu, a)?;
            let resolved = BuiltinParams {
                a: Some(a.to_vec()),
                lambda: Some(lambda.to_vec()),
                nu: Some(nu),
                ..BuiltinParams::default()
            };
            let doc = scenario_doc(
                name,
                2,
                resolved,
                AnalysisSettings {
                    horizon_time: 1e6,
                    ..AnalysisSettings::default()
                },
                Some(SweepSettings {
                    grid: 41,
                    lambda_max: [1.0, 1.0],
                }),
            );
            Ok(Scenario::from_parts(doc, DriftModel::Cones(model)))
        }
        "coupled3" => {
            let a = fixed("a", params.a.as_ref(), [1.5, 1.5, 1.5])?;
            let lambda = fixed("lambda", params.lambda.as_ref(), [0.5, 0.5, 0.5])?;
            positive("a", &a)?;
            non_negative("lambda", &lambda)?;
            let pairs = match &params.a_pairs {
                None => [[1.2; 3]; 3],
                Some(rows) => {
                    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                        return Err(ScenarioError::InvalidParam(
                            "a_pairs must be a 3x3 matrix".into(),
                        ));
                    }
                    for r in rows {
                        positive("a_pairs", r)?;
                    }
                    std::array::from_fn(|i| std::array::from_fn(|j| rows[i][j]))
                }
            };
            let model = coupled3_model(a, pairs, lambda)?;
            let resolved = BuiltinParams {
                a: Some(a.to_vec()),
                lambda: Some(lambda.to_vec()),
                a_pairs: Some(pairs.iter().map(|r| r.to_vec()).collect()),
                ..BuiltinParams::default()
            };
            let doc = scenario_doc(
                name,
                3,
                resolved,
                AnalysisSettings {
                    horizon_time: 2e5,
                    replicas: 3,
                    ..AnalysisSettings::default()
                },
                None,
            );
            Ok(Scenario::from_parts(doc, DriftModel::Support(model)))
        }
        "shannon2" => {
            let lambda = fixed("lambda", params.lambda.as_ref(), [0.4, 0.8])?;
            let noise = params.noise.unwrap_or(0.1);
            non_negative("lambda", &lambda)?;
            positive("noise", &[noise])?;
            let model = shannon2_model(lambda, noise)?;
            let resolved = BuiltinParams {
                lambda: Some(lambda.to_vec()),
                noise: Some(noise),
                ..BuiltinParams::default()
            };
            // The channel's unstable drift is weak (order 1e-2), so the
            // simulation defaults resolve slopes well below the generic
            // thresholds; see the catalog notes in the README.
            let analysis = AnalysisSettings {
                horizon_time: 2e6,
                replicas: 3,
                slope_lo: 4e-3,
                slope_hi: 8e-3,
                ..AnalysisSettings::default()
            };
            let doc = scenario_doc(name, 2, resolved, analysis, None);
            Ok(Scenario::from_parts(doc, DriftModel::Smooth(model)))
        }
        "polytope2" => {
            if params.lambda.is_some() {
                return Err(ScenarioError::InvalidParam(
                    "polytope2 has no arrival vector; set arrival_vertices instead".into(),
                ));
            }
            let arrivals = params.arrival_vertices.clone().unwrap_or_else(|| {
                vec![
                    vec![0.05, 0.05],
                    vec![0.15, 0.05],
                    vec![0.15, 0.15],
                    vec![0.05, 0.15],
                ]
            });
            let capacities = params.capacity_vertices.clone().unwrap_or_else(|| {
                vec![
                    vec![0.5, 0.5],
                    vec![0.9, 0.5],
                    vec![0.9, 0.9],
                    vec![0.5, 0.9],
                ]
            });
            let orientation = params.orientation.unwrap_or_default();
            let model = polytope2_model(arrivals.clone(), capacities.clone(), orientation)?;
            let resolved = BuiltinParams {
                arrival_vertices: Some(arrivals),
                capacity_vertices: Some(capacities),
                orientation: Some(orientation),
                ..BuiltinParams::default()
            };
            let doc = scenario_doc(name, 2, resolved, AnalysisSettings::default(), None);
            Ok(Scenario::from_parts(doc, DriftModel::Smooth(model)))
        }
        other => Err(ScenarioError::UnknownBuiltin(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift_model::StateVector;

    #[test]
    fn coupled2_builtin_has_three_patterns() {
        let s = builtin_scenario(
            "coupled2",
            &BuiltinParams {
                a: Some(vec![0.6, 0.6]),
                lambda: Some(vec![0.3, 0.3]),
                ..BuiltinParams::default()
            },
        )
        .unwrap();
        let DriftModel::Support(m) = s.model() else {
            panic!("expected support model")
        };
        assert_eq!(m.patterns().count(), 3);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn jsq2_matches_published_fan() {
        let s = builtin_scenario(
            "jsq2",
            &BuiltinParams {
                lambda: Some(vec![0.1, 0.1]),
                nu: Some(0.2),
                a: Some(vec![0.5, 0.5]),
                ..BuiltinParams::default()
            },
        )
        .unwrap();
        let DriftModel::Cones(p) = s.model() else {
            panic!("expected cone partition")
        };
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let want_rays = [[1.0, 0.0], [1.0, 0.0], [s2, s2], [0.0, 1.0], [0.0, 1.0]];
        for (got, want) in p.rays().iter().zip(&want_rays) {
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
        }
        // Drift table: axis 1, below diagonal, above diagonal, axis 2.
        let expect: [[f64; 2]; 4] = [
            [0.1 - 1.0, 0.3],
            [0.1 - 0.5, 0.3 - 0.5],
            [0.3 - 0.5, 0.1 - 0.5],
            [0.3, 0.1 - 1.0],
        ];
        for (k, e) in expect.iter().enumerate() {
            let d = p.drift(k);
            assert!(
                (d[0] - e[0]).abs() < 1e-12 && (d[1] - e[1]).abs() < 1e-12,
                "cone {k}: {d:?}"
            );
        }
    }

    #[test]
    fn shannon2_default_matches_formula() {
        let s = builtin_scenario("shannon2", &BuiltinParams::default()).unwrap();
        let x = StateVector::new(vec![0.0, 1.0]).unwrap();
        let d = s.model().drift_at(&x).unwrap();
        // On the x2 axis, user 2 sees the clean channel.
        assert!((d[1] - (0.8 - 11.0f64.ln())).abs() < 1e-12);
        assert!(
            (d[0] - 0.4).abs() < 1e-12,
            "death of the empty queue is masked: {d:?}"
        );
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(builtin_scenario("nosuch", &BuiltinParams::default()).is_err());
        assert!(
            builtin_scenario(
                "coupled2",
                &BuiltinParams {
                    a: Some(vec![0.0, 0.6]),
                    ..BuiltinParams::default()
                }
            )
            .is_err()
        );
        assert!(
            builtin_scenario(
                "shannon2",
                &BuiltinParams {
                    noise: Some(0.0),
                    ..BuiltinParams::default()
                }
            )
            .is_err()
        );
        assert!(
            builtin_scenario(
                "polytope2",
                &BuiltinParams {
                    arrival_vertices: Some(vec![]),
                    ..BuiltinParams::default()
                }
            )
            .is_err()
        );
    }

    #[test]
    fn coupled3_pairwise_rates_land_in_the_right_slots() {
        let m = coupled3_model(
            [1.5, 1.6, 1.7],
            [[0.0, 1.2, 1.3], [1.4, 0.0, 1.5], [1.6, 1.7, 0.0]],
            [0.5, 0.5, 0.5],
        )
        .unwrap();
        // {1,3}: coordinate 1 served at pairs[0][2], coordinate 3 at pairs[2][0].
        let r = m.pattern(0b101);
        assert_eq!(r.death, vec![1.3, 0.0, 1.6]);
        let r = m.pattern(0b010);
        assert_eq!(r.death, vec![0.0, 1.6, 0.0]);
        let r = m.pattern(0b111);
        assert_eq!(r.death, vec![1.0, 1.0, 1.0]);
    }
}
