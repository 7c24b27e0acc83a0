//! Scenario configuration, presets and the commands behind the `alf` binary.
//!
//! A scenario is one JSON object. A preset supplies a complete scenario; a
//! user config is merged over it key by key, with `integrator` and `analysis`
//! merged field by field and every other key replaced whole.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{PerturbationSpec, PerturbedSystem};
use crate::error::{AlfError, Result};
use crate::graph::{GraphKind, GraphSpec, RandomWeights};
use crate::integrate::{integrate, IntegrationFailure, IntegratorConfig, Method, Trajectory};
use crate::precision::{Precision, Real, Scalar};
use crate::response::{validate_spec_json, Family, ResponseField, ResponseSpec};
use crate::rng::SeededRng;
use crate::slowfast::{
    canard_metrics, is_critical_perturbation, plane_reduce, simulate_plane, ManifoldGrid, ManifoldSample, PlaneSystem,
    SingularityType,
};
use crate::svg;
use crate::with_precision;

/// Environment variable overriding `integrator.digits`.
pub const DIGITS_ENV: &str = "ALF_DIGITS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Explicit { values: Vec<f64> },
    Random { seed: u64, lo: f64, hi: f64 },
    /// Every node at `c`.
    Consensus { c: f64 },
    /// Plane point `(x, k)`; `x` defaults to `k/n`, evaluated in working precision.
    Plane {
        k0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// 1-based node whose perturbation may differ on the plane; defaults to the last node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eliminated: Option<usize>,
    pub k_range: (f64, f64),
    pub x_range: (f64, f64),
    pub nk: usize,
    pub nx: usize,
    pub residual_tol: f64,
    /// Range of consensus coordinates scanned for singular points.
    pub singular_range: (f64, f64),
    pub divergence_range: (f64, f64),
    pub quad_tol: f64,
    pub tangent_step: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda_values: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            eliminated: None,
            k_range: (-4.5, 4.5),
            x_range: (-3.0, 3.0),
            nk: 361,
            nx: 241,
            residual_tol: 1e-9,
            singular_range: (-3.0, 3.0),
            divergence_range: (-3.0, 3.0),
            quad_tol: 1e-12,
            tangent_step: 1e-4,
            lambda_values: vec![],
        }
    }
}

impl AnalysisConfig {
    pub fn grid(&self) -> ManifoldGrid {
        ManifoldGrid { k_range: self.k_range, x_range: self.x_range, nk: self.nk, nx: self.nx, residual_tol: self.residual_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphSpec,
    pub response: ResponseSpec,
    #[serde(default = "zero_perturbation")]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default = "default_tspan")]
    pub tspan: (f64, f64),
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn zero_perturbation() -> PerturbationSpec {
    PerturbationSpec::Uniform { value: 0.0 }
}

fn default_tspan() -> (f64, f64) {
    (0.0, 10.0)
}

impl ScenarioConfig {
    pub fn system(&self) -> Result<PerturbedSystem> {
        let graph = self.graph.build()?;
        let f = self.response.build()?;
        let h = self.perturbation.build(graph.node_count())?;
        PerturbedSystem::new(graph, ResponseField::homogeneous(f), h, self.epsilon)
    }

    /// 0-based plane index.
    pub fn eliminated(&self) -> Result<usize> {
        let n = self.graph.n;
        match self.analysis.eliminated {
            None => Ok(n - 1),
            Some(l) if (1..=n).contains(&l) => Ok(l - 1),
            Some(l) => Err(AlfError::InvalidIndex(l)),
        }
    }

    pub fn plane(&self) -> Result<PlaneSystem> {
        plane_reduce(&self.system()?, self.eliminated()?)
    }

    /// Full checks of every section; nothing is computed before this passes.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        self.integrator.validate()?;
        if !(self.tspan.0.is_finite() && self.tspan.1.is_finite() && self.tspan.0 < self.tspan.1) {
            return Err(AlfError::Config(format!("tspan {:?} must be finite and increasing", self.tspan)));
        }
        self.eliminated()?;
        self.analysis.grid().validate()?;
        let a = &self.analysis;
        if !(a.singular_range.0 < a.singular_range.1) || !(a.divergence_range.0 < a.divergence_range.1) {
            return Err(AlfError::Config("analysis ranges must be increasing".into()));
        }
        if !(a.quad_tol > 0.0 && a.tangent_step > 0.0) {
            return Err(AlfError::Config("quad_tol and tangent_step must be positive".into()));
        }
        if let Some(ic) = &self.initial {
            match ic {
                InitialCondition::Explicit { values } if values.len() != sys.dim() => {
                    return Err(AlfError::DimensionMismatch { expected: sys.dim(), got: values.len() })
                }
                InitialCondition::Random { lo, hi, .. } if !(lo <= hi) => {
                    return Err(AlfError::Config("initial random range must have lo <= hi".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Node-space initial state in `S`.
    pub fn initial_state<S: Real>(&self) -> Result<Vec<S>> {
        let n = self.graph.n;
        let ic = self.initial.as_ref().ok_or_else(|| AlfError::Config("`initial` is required for this command".into()))?;
        Ok(match ic {
            InitialCondition::Explicit { values } => values.iter().map(|&v| S::from_f64(v)).collect(),
            InitialCondition::Random { seed, lo, hi } => {
                SeededRng::new(*seed).uniform_vec(n, *lo, *hi).into_iter().map(S::from_f64).collect()
            }
            InitialCondition::Consensus { c } => vec![S::from_f64(*c); n],
            InitialCondition::Plane { .. } => {
                let (x, k) = self.plane_initial::<S>()?;
                let ps = self.plane()?;
                ps.lift(&x, &k)
            }
        })
    }

    /// `(x, k)` initial point for plane integrations.
    pub fn plane_initial<S: Real>(&self) -> Result<(S, S)> {
        let n = S::from_f64(self.graph.n as f64);
        match self.initial.as_ref() {
            Some(InitialCondition::Plane { k0, x0 }) => {
                let k = S::from_f64(*k0);
                let x = x0.map_or_else(|| k / n, S::from_f64);
                Ok((x, k))
            }
            Some(InitialCondition::Consensus { c }) => Ok((S::from_f64(*c), S::from_f64(*c) * n)),
            _ => Err(AlfError::Config("plane commands need a `plane` or `consensus` initial condition".into())),
        }
    }
}

/// Names accepted by `--preset`.
pub const PRESETS: [&str; 9] = [
    "ex1",
    "ex1-manifold",
    "ex1-canard",
    "ex1-canard-noncritical",
    "ex2-unweighted",
    "ex2-weighted",
    "ex2-critical",
    "ex3a",
    "ex3b",
];

/// Scenario constants for the named example. Seeds and initial conditions
/// are fixed here so every run is reproducible.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let ex1 = ScenarioConfig {
        graph: GraphSpec::complete(3),
        response: ResponseSpec::double_well(),
        perturbation: PerturbationSpec::Uniform { value: -1.0 },
        epsilon: 0.1,
        integrator: IntegratorConfig { method: Method::Rk4, dt: 1e-3, tol: 1e-10, digits: Precision::Double, stride: 10, seed: None },
        initial: Some(InitialCondition::Explicit { values: vec![1.5, 1.3, 1.2] }),
        tspan: (0.0, 10.0),
        analysis: AnalysisConfig::default(),
    };
    let canard = ScenarioConfig {
        integrator: IntegratorConfig { digits: Precision::DoubleDouble, ..ex1.integrator.clone() },
        initial: Some(InitialCondition::Plane { k0: 4.0, x0: None }),
        // k̇ = −3ε: from k = 4 to k = 1.5
        tspan: (0.0, 2.5 / 0.3),
        ..ex1.clone()
    };
    let ex2 = ScenarioConfig {
        graph: GraphSpec::complete(10),
        response: ResponseSpec::double_well(),
        perturbation: PerturbationSpec::Random { seed: 2, lo: 0.0, hi: 1.0 },
        epsilon: 0.01,
        integrator: IntegratorConfig { method: Method::Dp45, dt: 1e-3, tol: 1e-9, digits: Precision::Double, stride: 10, seed: Some(1) },
        initial: Some(InitialCondition::Random { seed: 1, lo: -1.0, hi: 0.0 }),
        tspan: (0.0, 500.0),
        analysis: AnalysisConfig { k_range: (-15.0, 15.0), x_range: (-3.0, 3.0), divergence_range: (-10.0, 10.0), ..AnalysisConfig::default() },
    };
    let ex3 = |family: Family| ScenarioConfig {
        response: ResponseSpec::Family { family, lambda: 0.5 },
        analysis: AnalysisConfig { lambda_values: vec![0.0, 0.25, 0.5, 0.75, 1.0], ..AnalysisConfig::default() },
        ..ex1.clone()
    };
    Ok(match name {
        "ex1" => ex1,
        "ex1-manifold" => ex1,
        "ex1-canard" => canard,
        "ex1-canard-noncritical" => ScenarioConfig {
            perturbation: PerturbationSpec::Plane { h: -1.0, h_tilde: 0.0, l: 3 },
            // k̇ = −2ε
            tspan: (0.0, 2.5 / 0.2),
            ..canard
        },
        "ex2-unweighted" => ex2,
        "ex2-weighted" => ScenarioConfig {
            graph: GraphSpec { kind: GraphKind::Complete, n: 10, edges: None, random_weights: Some(RandomWeights { seed: 3, lo: 1.0, hi: 5.0 }) },
            ..ex2
        },
        "ex2-critical" => ScenarioConfig { perturbation: PerturbationSpec::Uniform { value: 0.5 }, ..ex2 },
        "ex3a" => ex3(Family::Ex3a),
        "ex3b" => ex3(Family::Ex3b),
        _ => return Err(AlfError::Config(format!("unknown preset `{name}`; available: {}", PRESETS.join(", ")))),
    })
}

fn merge(base: &mut Value, over: Value) {
    let (Value::Object(b), Value::Object(o)) = (base, over) else { unreachable!("callers pass objects") };
    for (key, v) in o {
        match (b.get_mut(&key), v) {
            (Some(slot @ Value::Object(_)), Value::Object(inner)) if key == "integrator" || key == "analysis" => {
                let Value::Object(s) = slot else { unreachable!() };
                for (k2, v2) in inner {
                    s.insert(k2, v2);
                }
            }
            (_, v) => {
                b.insert(key, v);
            }
        }
    }
}

/// Builds a scenario from an optional preset and an optional JSON override,
/// then applies a digits override (the value of `ALF_DIGITS`, if any).
pub fn load_config(preset_name: Option<&str>, config_json: Option<&str>, digits_override: Option<&str>) -> Result<ScenarioConfig> {
    let mut value = match preset_name {
        Some(p) => serde_json::to_value(preset(p)?).map_err(|e| AlfError::Config(e.to_string()))?,
        None => Value::Object(Default::default()),
    };
    match config_json {
        Some(text) => {
            let user: Value = serde_json::from_str(text).map_err(|e| AlfError::Config(format!("config is not valid JSON: {e}")))?;
            if !user.is_object() {
                return Err(AlfError::Config("config must be a JSON object".into()));
            }
            merge(&mut value, user);
        }
        None if preset_name.is_none() => return Err(AlfError::Config("need --config or --preset".into())),
        None => {}
    }
    if let Some(r) = value.get("response") {
        validate_spec_json(r)?;
    }
    let mut cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| AlfError::Config(e.to_string()))?;
    if let Some(d) = digits_override {
        let digits: u32 = d.trim().parse().map_err(|_| AlfError::Config(format!("{DIGITS_ENV}={d} is not an integer")))?;
        cfg.integrator.digits =
            Precision::from_digits(digits).ok_or_else(|| AlfError::Config(format!("{DIGITS_ENV}={d}: expected 16, 32 or 64")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Simulate,
    Manifold,
    Singularities,
    Canard,
    Bifurcation,
    Divergence,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Simulate, Command::Manifold, Command::Singularities, Command::Canard, Command::Bifurcation, Command::Divergence];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Manifold => "manifold",
            Command::Singularities => "singularities",
            Command::Canard => "canard",
            Command::Bifurcation => "bifurcation",
            Command::Divergence => "divergence",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    pub svg: bool,
    pub log_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Files to write plus a summary. `advisory` carries a condition that should
/// end the process with a nonzero code even though the outputs are valid
/// (diverged integration with a partial trajectory, non-critical perturbation).
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    pub summary: Value,
    pub advisory: Option<AlfError>,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        self.advisory.as_ref().map_or(0, AlfError::exit_code)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn run_command(cmd: Command, cfg: &ScenarioConfig, opts: RenderOptions) -> Result<CommandOutput> {
    match cmd {
        Command::Simulate => simulate(cfg, opts),
        Command::Manifold => manifold(cfg),
        Command::Singularities => singularities(cfg),
        Command::Canard => canard(cfg, opts),
        Command::Bifurcation => bifurcation(cfg),
        Command::Divergence => divergence(cfg),
    }
}

fn unwrap_run<S: Real>(r: std::result::Result<Trajectory<S>, IntegrationFailure<S>>) -> (Trajectory<S>, Option<AlfError>) {
    match r {
        Ok(t) => (t, None),
        Err(f) => (f.partial, Some(f.error)),
    }
}

fn timeseries_svg<S: Real>(title: &str, tr: &Trajectory<S>, log_time: bool) -> String {
    let series: Vec<(String, Vec<f64>)> = (0..tr.dim()).map(|i| (format!("x{}", i + 1), tr.component_f64(i))).collect();
    svg::timeseries(title, &tr.times_f64(), &series, log_time)
}

fn simulate(cfg: &ScenarioConfig, opts: RenderOptions) -> Result<CommandOutput> {
    let sys = cfg.system()?;
    with_precision!(cfg.integrator.digits, S => {
        let x0 = cfg.initial_state::<S>()?;
        let (tr, err) = unwrap_run(integrate(&sys.kernel::<S>(), &x0, cfg.tspan, &cfg.integrator));
        let mut files = vec![OutputFile { name: "trajectory.csv".into(), contents: tr.to_csv() }];
        if opts.svg {
            files.push(OutputFile { name: "trajectory.svg".into(), contents: timeseries_svg("node states", &tr, opts.log_time) });
        }
        let summary = json!({
            "command": "simulate",
            "samples": tr.len(),
            "t_end": tr.times.last().map(|t| t.to_f64()),
            "k_start": tr.totals.first().map(|k| k.to_f64()),
            "k_end": tr.totals.last().map(|k| k.to_f64()),
            "meta": tr.meta,
            "error": err.as_ref().map(|e| e.to_string()),
        });
        Ok(CommandOutput { files, summary, advisory: err })
    })
}

fn manifold_summary(m: &ManifoldSample) -> Value {
    json!({ "points": m.points.len(), "branches": m.branch_count(), "max_roots_per_line": m.max_roots_per_line, "rejected": m.rejected })
}

fn manifold(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let ps = cfg.plane()?;
    let m = ps.sample_manifold(&cfg.analysis.grid())?;
    let mut summary = manifold_summary(&m);
    summary["command"] = json!("manifold");
    Ok(CommandOutput { files: vec![OutputFile { name: "manifold.csv".into(), contents: m.to_csv() }], summary, advisory: None })
}

fn singularities(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let ps = cfg.plane()?;
    let reports = ps.singularities(cfg.analysis.singular_range)?;
    let summary = json!({
        "command": "singularities",
        "count": reports.len(),
        "k_s": reports.iter().map(|r| r.k_s).collect::<Vec<_>>(),
    });
    Ok(CommandOutput { files: vec![OutputFile { name: "singularities.json".into(), contents: pretty(&reports) }], summary, advisory: None })
}

fn canard(cfg: &ScenarioConfig, opts: RenderOptions) -> Result<CommandOutput> {
    let sys = cfg.system()?;
    let ps = cfg.plane()?;
    let n = ps.n();
    let (x0f, k0f) = cfg.plane_initial::<f64>()?;
    let dir = ps.field(x0f, k0f).1.signum();
    let reports = ps.singularities(cfg.analysis.singular_range)?;
    let target = reports
        .iter()
        .filter(|r| r.sing_type == SingularityType::Type1 && (r.k_s - k0f) * dir > 0.0)
        .min_by(|a, b| (a.k_s - k0f).abs().total_cmp(&(b.k_s - k0f).abs()))
        .cloned()
        .ok_or_else(|| AlfError::NonCritical("no type-1 singular point ahead of the initial condition".into()))?;
    let critical = is_critical_perturbation(sys.perturbation(), target.x_s, n);
    let sym = if ps.distinguished() == 0 { 1 } else { 0 };
    with_precision!(cfg.integrator.digits, S => {
        let (x0, k0) = cfg.plane_initial::<S>()?;
        let (tr, err) = unwrap_run(simulate_plane(&ps, x0, k0, cfg.tspan, &cfg.integrator));
        let metrics = canard_metrics(&tr, n, sym, ps.epsilon(), target.k_s);
        let report = json!({
            "singularity": target,
            "critical": critical,
            "metrics": metrics,
            "digits": S::DIGITS,
            "error": err.as_ref().map(|e| e.to_string()),
        });
        let mut files = vec![
            OutputFile { name: "canard.csv".into(), contents: tr.to_csv() },
            OutputFile { name: "canard_metrics.json".into(), contents: pretty(&report) },
        ];
        if opts.svg {
            files.push(OutputFile { name: "canard.svg".into(), contents: timeseries_svg("plane trajectory", &tr, opts.log_time) });
        }
        let advisory = err.or_else(|| {
            (!critical).then(|| AlfError::NonCritical(format!("perturbation is not proportional to 1 at x = {}", target.x_s)))
        });
        let mut summary = report;
        summary["command"] = json!("canard");
        Ok(CommandOutput { files, summary, advisory })
    })
}

fn bifurcation(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let ResponseSpec::Family { family, .. } = cfg.response else {
        return Err(AlfError::Config("bifurcation needs a family response".into()));
    };
    if cfg.analysis.lambda_values.is_empty() {
        return Err(AlfError::Config("analysis.lambda_values is empty".into()));
    }
    let runs: Vec<(f64, ManifoldSample)> = cfg
        .analysis
        .lambda_values
        .par_iter()
        .map(|&lambda| {
            let mut c = cfg.clone();
            c.response = ResponseSpec::Family { family, lambda };
            Ok((lambda, c.plane()?.sample_manifold(&cfg.analysis.grid())?))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut per = Vec::new();
    for (i, (lambda, m)) in runs.iter().enumerate() {
        let body = m.to_csv_with_prefix(&["lambda", "family"], &[format!("{lambda:e}"), family.name().to_string()]);
        if i == 0 {
            csv.push_str(&body);
        } else {
            csv.extend(body.split_inclusive('\n').skip(1));
        }
        let mut s = manifold_summary(m);
        s["lambda"] = json!(lambda);
        per.push(s);
    }
    let summary = json!({ "command": "bifurcation", "family": family.name(), "runs": per });
    Ok(CommandOutput { files: vec![OutputFile { name: "bifurcation.csv".into(), contents: csv }], summary, advisory: None })
}

fn divergence(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let ps = cfg.plane()?;
    let (k1, k2) = cfg.analysis.divergence_range;
    let d = ps.slow_divergence_integral(k1, k2, cfg.analysis.quad_tol)?;
    let summary = json!({ "command": "divergence", "k1": k1, "k2": k2, "integral": d.integral, "exact": d.exact });
    Ok(CommandOutput { files: vec![OutputFile { name: "divergence.json".into(), contents: pretty(&d) }], summary, advisory: None })
}

/// Plane integration result used by library callers that want the
/// trajectory itself rather than files.
pub fn canard_trajectory<S: Real>(cfg: &ScenarioConfig) -> Result<(Trajectory<S>, Option<AlfError>)> {
    let ps = cfg.plane()?;
    let (x0, k0) = cfg.plane_initial::<S>()?;
    Ok(unwrap_run(simulate_plane(&ps, x0, k0, cfg.tspan, &cfg.integrator)))
}
