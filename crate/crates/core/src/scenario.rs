//! JSON scenario configs and the pipeline that turns one into per-sample
//! curve quantities.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{propagate, HamiltonianSchedule, Method, TimeGrid, Trajectory};
use crate::frenet::{coefficients_expectation, projector_route};
use crate::hilbert::{HermitianOperator, Matrix, StateVector, C64};
use crate::qubit::{bloch_from_state, curvature_bloch, field_operator, torsion_bloch, BlochVector, FieldVector};
use crate::rabi::{bloch_exact, classify_regime, rabi_field, rabi_schedule, RabiParams};

/// Smallest accepted number of grid steps.
pub const MIN_STEPS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Rabi,
    CustomQubit,
    QutritDemo,
}

impl ScenarioKind {
    fn required_params(&self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Rabi => &["omega0", "Omega0", "omega"],
            ScenarioKind::CustomQubit => &["m0x", "m0y", "m0z", "m1x", "m1y", "m1z", "m2x", "m2y", "m2z", "omega"],
            ScenarioKind::QutritDemo => &["omega0", "Omega0", "omega", "anisotropy"],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScenarioKind::QutritDemo => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    Bloch,
    Expectation,
    Projector,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Csv,
    Svg,
}

/// Either spherical angles (qubits) or an amplitude list of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub params: BTreeMap<String, f64>,
    pub initial_state: InitialState,
    pub grid: GridConfig,
    pub methods: Vec<RouteName>,
    pub outputs: Vec<OutputKind>,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{key}: {msg}"))
}

impl ScenarioConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let required = self.scenario.required_params();
        for key in required {
            match self.params.get(*key) {
                None => return Err(bad(&format!("params.{key}"), "missing")),
                Some(x) if !x.is_finite() => return Err(bad(&format!("params.{key}"), "must be finite")),
                _ => {}
            }
        }
        if let Some(key) = self.params.keys().find(|k| !required.contains(&k.as_str())) {
            return Err(bad(&format!("params.{key}"), "not a parameter of this scenario"));
        }

        if !(self.grid.t_max.is_finite() && self.grid.t_max > 0.0) {
            return Err(bad("grid.t_max", "must be a positive real"));
        }
        if self.grid.steps < MIN_STEPS {
            return Err(bad("grid.steps", format!("must be at least {MIN_STEPS}")));
        }

        let init = &self.initial_state;
        match (init.theta, init.phi, &init.amplitudes) {
            (Some(theta), Some(phi), None) => {
                if self.scenario.dim() != 2 {
                    return Err(bad("initial_state", "angles describe qubit states; give amplitudes"));
                }
                if !(0.0..=PI).contains(&theta) {
                    return Err(bad("initial_state.theta", "must lie in [0, pi]"));
                }
                if !(0.0..TAU).contains(&phi) {
                    return Err(bad("initial_state.phi", "must lie in [0, 2pi)"));
                }
            }
            (None, None, Some(amps)) => {
                if amps.len() != self.scenario.dim() {
                    return Err(bad(
                        "initial_state.amplitudes",
                        format!("expected {} amplitudes, found {}", self.scenario.dim(), amps.len()),
                    ));
                }
                if amps.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(bad("initial_state.amplitudes", "must be finite"));
                }
                if amps.iter().all(|[re, im]| *re == 0.0 && *im == 0.0) {
                    return Err(bad("initial_state.amplitudes", "must not all vanish"));
                }
            }
            (Some(_), None, None) => return Err(bad("initial_state.phi", "missing")),
            (None, Some(_), None) => return Err(bad("initial_state.theta", "missing")),
            _ => return Err(bad("initial_state", "give either {theta, phi} or {amplitudes}")),
        }

        if self.methods.is_empty() {
            return Err(bad("methods", "must name at least one route"));
        }
        if self.methods.contains(&RouteName::Exact) && self.scenario != ScenarioKind::Rabi {
            return Err(bad("methods", "the exact route exists only for the rabi scenario"));
        }
        Ok(())
    }

    pub fn wants(&self, route: RouteName) -> bool {
        self.methods.contains(&route)
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// Drive parameters, for the rabi scenario.
    pub fn rabi_params(&self) -> Option<RabiParams> {
        (self.scenario == ScenarioKind::Rabi)
            .then(|| RabiParams::new(self.param("omega0"), self.param("Omega0"), self.param("omega")).ok())
            .flatten()
    }

    pub fn initial_state_vector(&self) -> Result<StateVector> {
        let init = &self.initial_state;
        match (init.theta, init.phi, &init.amplitudes) {
            (Some(theta), Some(phi), _) => Ok(crate::qubit::state_from_bloch(&BlochVector::from_angles(theta, phi))),
            (_, _, Some(amps)) => {
                let v: Vec<C64> = amps.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                StateVector::from_slice(&v)
            }
            _ => Err(bad("initial_state", "give either {theta, phi} or {amplitudes}")),
        }
    }
}

type FieldFn = Arc<dyn Fn(f64) -> FieldVector + Send + Sync>;

/// A validated config turned into a schedule and an initial state.
#[derive(Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub schedule: HamiltonianSchedule,
    pub psi0: StateVector,
    pub grid: TimeGrid,
    field: Option<FieldFn>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("config", &self.config)
            .field("schedule", &self.schedule)
            .field("grid", &self.grid)
            .finish()
    }
}

/// Spin-1 operators `(J_x, J_y, J_z)`.
pub fn spin_one() -> [HermitianOperator; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (z, re, im) = (C64::new(0.0, 0.0), C64::new(r, 0.0), C64::new(0.0, r));
    let jx = Matrix::from_row_slice(3, 3, &[z, re, z, re, z, re, z, re, z]);
    let jy = Matrix::from_row_slice(3, 3, &[z, -im, z, im, z, -im, z, im, z]);
    let jz = HermitianOperator::diagonal(&[1.0, 0.0, -1.0]);
    [
        HermitianOperator::new(jx).expect("J_x is Hermitian"),
        HermitianOperator::new(jy).expect("J_y is Hermitian"),
        jz,
    ]
}

/// `H(t) = ω₀ J_z + Ω₀ (cos ωt J_x + sin ωt J_y) + D J_z²` on a spin-1.
pub fn qutrit_schedule(
    omega0: f64,
    rabi: f64,
    omega: f64,
    anisotropy: f64,
    time_scale: f64,
) -> Result<HamiltonianSchedule> {
    let [jx, jy, jz] = spin_one();
    let jz2 = HermitianOperator::diagonal(&[1.0, 0.0, 1.0]);
    let stat = jz.scale(omega0).add(&jz2.scale(anisotropy))?;
    let (jx2, jy2) = (jx.clone(), jy.clone());
    HamiltonianSchedule::new(3, "qutrit_demo", move |t| {
        let (s, c) = (omega * t).sin_cos();
        let drive = jx.scale(rabi * c).add(&jy.scale(rabi * s)).expect("same dimension");
        stat.add(&drive).expect("same dimension")
    })
    .with_time_scale(time_scale)
    .with_derivative(move |t| {
        let (s, c) = (omega * t).sin_cos();
        jx2.scale(-rabi * omega * s)
            .add(&jy2.scale(rabi * omega * c))
            .expect("same dimension")
    })
}

/// `m(t) = m0 + m1 cos ωt + m2 sin ωt`.
fn custom_field(m0: Vector3<f64>, m1: Vector3<f64>, m2: Vector3<f64>, omega: f64) -> FieldFn {
    Arc::new(move |t| {
        let (s, c) = (omega * t).sin_cos();
        FieldVector {
            m: m0 + m1 * c + m2 * s,
            mdot: (m2 * c - m1 * s) * omega,
        }
    })
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = TimeGrid::new(config.grid.t_max, config.grid.steps)?;
        let psi0 = config.initial_state_vector()?;
        let t_max = grid.t_max;
        let (schedule, field): (HamiltonianSchedule, Option<FieldFn>) = match config.scenario {
            ScenarioKind::Rabi => {
                let p = config
                    .rabi_params()
                    .ok_or_else(|| bad("params", "invalid drive parameters"))?;
                let field: FieldFn = Arc::new(move |t| rabi_field(&p, t));
                (rabi_schedule(&p, t_max)?, Some(field))
            }
            ScenarioKind::CustomQubit => {
                let v = |k: &str| {
                    Vector3::new(
                        config.param(&format!("{k}x")),
                        config.param(&format!("{k}y")),
                        config.param(&format!("{k}z")),
                    )
                };
                let field = custom_field(v("m0"), v("m1"), v("m2"), config.param("omega"));
                let (f1, f2) = (field.clone(), field.clone());
                let schedule = HamiltonianSchedule::new(2, "custom_qubit", move |t| field_operator(&f1(t).m))
                    .with_time_scale(t_max)
                    .with_derivative(move |t| field_operator(&f2(t).mdot))?;
                (schedule, Some(field))
            }
            ScenarioKind::QutritDemo => {
                let schedule = qutrit_schedule(
                    config.param("omega0"),
                    config.param("Omega0"),
                    config.param("omega"),
                    config.param("anisotropy"),
                    t_max,
                )?;
                (schedule, None)
            }
        };
        Ok(Self {
            config,
            schedule,
            psi0,
            grid,
            field,
        })
    }

    pub fn field(&self, t: f64) -> Option<FieldVector> {
        self.field.as_ref().map(|f| f(t))
    }

    pub fn is_qubit(&self) -> bool {
        self.schedule.dim() == 2
    }
}

/// Curve quantities at one grid point. `None` marks a value that was not
/// requested, does not apply, or is undefined there.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub v_dot: Option<f64>,
    pub bloch: Option<Vector3<f64>>,
    pub kappa2_bloch: Option<f64>,
    pub kappa2_expect: Option<f64>,
    pub kappa2_projector: Option<f64>,
    pub tau2_expect: Option<f64>,
    pub tau2_projector: Option<f64>,
    /// For qubits, the largest deviation from zero among the torsion values
    /// of the Bloch and expectation routes.
    pub tau2_residual: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub norm_drift: f64,
    pub parallel_transport_residual: f64,
    pub max_kappa2_bloch_vs_expect: Option<f64>,
    pub max_kappa2_expect_vs_projector: Option<f64>,
    pub max_tau2_expect_vs_projector: Option<f64>,
    pub max_tau2_residual: Option<f64>,
    pub max_exact_orbit_distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub samples: Vec<Sample>,
    pub diagnostics: Diagnostics,
    /// Regime labels, for the rabi scenario.
    pub regimes: Vec<String>,
}

impl RunRecord {
    pub fn max_kappa2(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.kappa2_expect.or(s.kappa2_bloch).or(s.kappa2_projector))
            .fold(None, |acc, k| Some(acc.map_or(k, |a: f64| a.max(k))))
    }

    pub fn mean_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.v).sum::<f64>() / self.samples.len() as f64
    }
}

fn max_gap<I: Iterator<Item = (Option<f64>, Option<f64>)>>(pairs: I) -> Option<f64> {
    pairs
        .filter_map(|(a, b)| Some((a? - b?).abs()))
        .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
}

fn degenerate_as_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::DegenerateSpeed { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Propagates the scenario with RK4 and evaluates the requested routes.
pub fn run_scenario(scenario: &Scenario) -> Result<RunRecord> {
    let cfg = &scenario.config;
    let schedule = &scenario.schedule;
    let traj: Trajectory = propagate(schedule, &scenario.psi0, scenario.grid, Method::Rk4)?;

    let projector = if cfg.wants(RouteName::Projector) {
        Some(projector_route(&traj, schedule)?)
    } else {
        None
    };

    let mut samples = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let t = traj.times[i];
        let psi = &traj.raw_states[i];
        let bloch = if scenario.is_qubit() {
            Some(bloch_from_state(psi)?)
        } else {
            None
        };

        let (mut kappa2_bloch, mut tau2_bloch) = (None, None);
        if let (true, Some(a), Some(field)) = (cfg.wants(RouteName::Bloch), bloch.as_ref(), scenario.field(t)) {
            kappa2_bloch = degenerate_as_none(curvature_bloch(a, &field))?;
            tau2_bloch = degenerate_as_none(torsion_bloch(a, &field))?;
        }

        let (mut kappa2_expect, mut tau2_expect) = (None, None);
        if cfg.wants(RouteName::Expectation) {
            let h = schedule.evaluate(t);
            let hdot = schedule.derivative(t);
            if let Some((k, tau)) = degenerate_as_none(coefficients_expectation(&h, &hdot, psi))? {
                kappa2_expect = Some(k);
                tau2_expect = Some(tau);
            }
        }

        let sample_proj = projector.as_ref().and_then(|p| p[i].as_ref());
        let tau2_residual = if scenario.is_qubit() {
            [tau2_bloch.map(|t| t.residual), tau2_expect.map(f64::abs)]
                .into_iter()
                .flatten()
                .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
        } else {
            None
        };

        samples.push(Sample {
            t,
            s: traj.arc_length[i],
            v: traj.speed[i],
            v_dot: traj.v_dot[i],
            bloch: bloch.map(|a| *a.vector()),
            kappa2_bloch,
            kappa2_expect,
            kappa2_projector: sample_proj.map(|p| p.kappa2),
            tau2_expect,
            tau2_projector: sample_proj.map(|p| p.tau2),
            tau2_residual,
        });
    }

    let mut diagnostics = Diagnostics {
        norm_drift: traj.norm_drift,
        parallel_transport_residual: traj.parallel_transport_residual(schedule),
        max_kappa2_bloch_vs_expect: max_gap(samples.iter().map(|s| (s.kappa2_bloch, s.kappa2_expect))),
        max_kappa2_expect_vs_projector: max_gap(samples.iter().map(|s| (s.kappa2_expect, s.kappa2_projector))),
        max_tau2_expect_vs_projector: max_gap(samples.iter().map(|s| (s.tau2_expect, s.tau2_projector))),
        max_tau2_residual: samples
            .iter()
            .filter_map(|s| s.tau2_residual)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d)))),
        max_exact_orbit_distance: None,
    };

    let mut regimes = Vec::new();
    if let Some(p) = cfg.rabi_params() {
        regimes = classify_regime(&p).iter().map(ToString::to_string).collect();
        if cfg.wants(RouteName::Exact) {
            let a0 = bloch_from_state(&scenario.psi0)?;
            let worst = samples
                .iter()
                .filter_map(|s| Some((bloch_exact(&p, &a0, s.t).vector() - s.bloch?).norm()))
                .fold(0.0, f64::max);
            diagnostics.max_exact_orbit_distance = Some(worst);
        }
    }

    Ok(RunRecord {
        config: cfg.clone(),
        samples,
        diagnostics,
        regimes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1_WEAK: &str = r#"{
        "scenario": "rabi",
        "params": {"omega0": 1.0, "Omega0": 0.1, "omega": 0.9},
        "initial_state": {"theta": 3.141592653589793, "phi": 0.0},
        "grid": {"t_max": 20.0, "steps": 400},
        "methods": ["bloch", "expectation", "projector", "exact"],
        "outputs": ["csv"]
    }"#;

    fn with(text: &str, f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn error_text(text: &str) -> String {
        ScenarioConfig::from_json(text).unwrap_err().to_string()
    }

    #[test]
    fn parses_rabi_config() {
        let cfg = ScenarioConfig::from_json(FIG1_WEAK).unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Rabi);
        assert_eq!(cfg.rabi_params().unwrap(), RabiParams::new(1.0, 0.1, 0.9).unwrap());
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_offending_key() {
        let missing = with(FIG1_WEAK, |v| {
            v["params"].as_object_mut().unwrap().remove("Omega0");
        });
        assert!(error_text(&missing).contains("params.Omega0"));

        let extra = with(FIG1_WEAK, |v| v["params"]["gamma"] = 1.0.into());
        assert!(error_text(&extra).contains("params.gamma"));

        let unknown = with(FIG1_WEAK, |v| v["colour"] = "red".into());
        assert!(error_text(&unknown).contains("colour"));

        let steps = with(FIG1_WEAK, |v| v["grid"]["steps"] = 8.into());
        assert!(error_text(&steps).contains("grid.steps"));

        let t_max = with(FIG1_WEAK, |v| v["grid"]["t_max"] = (-1.0).into());
        assert!(error_text(&t_max).contains("grid.t_max"));

        let theta = with(FIG1_WEAK, |v| v["initial_state"]["theta"] = 4.0.into());
        assert!(error_text(&theta).contains("initial_state.theta"));

        let phi = with(FIG1_WEAK, |v| v["initial_state"]["phi"] = TAU.into());
        assert!(error_text(&phi).contains("initial_state.phi"));

        let route = with(FIG1_WEAK, |v| v["methods"] = serde_json::json!(["magic"]));
        assert!(error_text(&route).contains("magic"));
    }

    #[test]
    fn qutrit_needs_amplitudes() {
        let cfg = with(FIG1_WEAK, |v| {
            v["scenario"] = "qutrit_demo".into();
            v["params"] = serde_json::json!({"omega0": 1.0, "Omega0": 0.5, "omega": 0.8, "anisotropy": 0.3});
            v["methods"] = serde_json::json!(["expectation"]);
        });
        assert!(error_text(&cfg).contains("initial_state"));
        let ok = with(&cfg, |v| {
            v["initial_state"] = serde_json::json!({"amplitudes": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]})
        });
        ScenarioConfig::from_json(&ok).unwrap();
    }

    #[test]
    fn spin_one_algebra() {
        let [jx, jy, jz] = spin_one();
        let c = crate::hilbert::commutator(jx.matrix(), jy.matrix()).unwrap();
        let expected = jz.matrix() * C64::new(0.0, 1.0);
        assert!((c - expected).norm() < 1e-15);
        let casimir = jx.matrix() * jx.matrix() + jy.matrix() * jy.matrix() + jz.matrix() * jz.matrix();
        assert!((casimir - Matrix::identity(3, 3) * C64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn run_produces_consistent_routes() {
        let scenario = Scenario::build(ScenarioConfig::from_json(FIG1_WEAK).unwrap()).unwrap();
        let rec = run_scenario(&scenario).unwrap();
        assert_eq!(rec.samples.len(), 401);
        assert!(rec.samples[0].kappa2_projector.is_none());
        assert!(rec.samples[2].kappa2_projector.is_some());
        let d = &rec.diagnostics;
        assert!(d.max_kappa2_bloch_vs_expect.unwrap() < 1e-9);
        assert!(d.max_tau2_residual.unwrap() < 1e-8);
        assert!(d.max_exact_orbit_distance.unwrap() < 1e-6);
        assert_eq!(rec.regimes, vec!["near_resonance", "weak_driving"]);
    }
}
