//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) integration at any
//! [`Real`] precision.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{AlfError, Result};
use crate::precision::{Precision, Real};

/// Any `|xᵢ|` above this aborts the integration.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Autonomous ODE `ẏ = g(y)` whose state maps back to node values.
pub trait Flow<S: Real> {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[S], dy: &mut [S]);
    /// Node values `x₁..xₙ` for a state `y`.
    fn lift(&self, y: &[S]) -> Vec<S>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Dp45,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Dp45 => "dp45",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for DP45.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Relative and absolute local error tolerance for DP45.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub digits: Precision,
    /// Record every `stride`-th step.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Seed of any random initial data or parameters; recorded only.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_tol() -> f64 {
    1e-10
}

fn default_stride() -> usize {
    1
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { method: Method::Rk4, dt: default_dt(), tol: default_tol(), digits: Precision::Double, stride: 1, seed: None }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64) -> Self {
        Self { method: Method::Rk4, dt, ..Self::default() }
    }

    pub fn dp45(tol: f64) -> Self {
        Self { method: Method::Dp45, tol, ..Self::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_digits(mut self, digits: Precision) -> Self {
        self.digits = digits;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(AlfError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(AlfError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.stride == 0 {
            return Err(AlfError::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Provenance of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: Method,
    pub dt: f64,
    pub tol: f64,
    pub digits: u32,
    pub stride: usize,
    pub seed: Option<u64>,
    pub steps: usize,
    pub rejected: usize,
}

/// Samples `(t, x, k = Σ xᵢ)` in node coordinates.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub states: Vec<Vec<S>>,
    pub totals: Vec<S>,
    pub meta: TrajectoryMeta,
}

impl<S: Real> Trajectory<S> {
    fn new(meta: TrajectoryMeta) -> Self {
        Self { times: vec![], states: vec![], totals: vec![], meta }
    }

    fn push(&mut self, t: S, x: Vec<S>) {
        let k = x.iter().fold(S::zero(), |a, &b| a + b);
        self.times.push(t);
        self.states.push(x);
        self.totals.push(k);
    }

    /// Records the step that crossed the divergence bound. A non-finite state
    /// is replaced by the last finite one so the flushed data stays usable.
    fn push_divergent(&mut self, t_prev: S, prev: Vec<S>, t: S, x: Vec<S>) {
        if x.iter().all(|v| v.is_finite()) {
            self.push(t, x);
        } else if self.times.last() != Some(&t_prev) {
            self.push(t_prev, prev);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last_state(&self) -> Option<&[S]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn times_f64(&self) -> Vec<f64> {
        self.times.iter().map(|t| t.to_f64()).collect()
    }

    pub fn totals_f64(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t.to_f64()).collect()
    }

    /// Component `i` over time.
    pub fn component_f64(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i].to_f64()).collect()
    }

    pub fn to_f64(&self) -> Trajectory<f64> {
        Trajectory {
            times: self.times_f64(),
            states: self.states.iter().map(|x| x.iter().map(|v| v.to_f64()).collect()).collect(),
            totals: self.totals_f64(),
            meta: self.meta.clone(),
        }
    }

    /// `t,x1..xn,k` with as many significant digits as the working precision.
    pub fn to_csv(&self) -> String {
        self.to_csv_with_prefix(&[], &[])
    }

    /// CSV with extra leading columns that repeat on every row.
    pub fn to_csv_with_prefix(&self, names: &[&str], values: &[String]) -> String {
        let n = self.dim();
        let digits = S::DIGITS;
        let mut out = String::new();
        for name in names {
            out.push_str(name);
            out.push(',');
        }
        out.push('t');
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",k\n");
        for ((t, x), k) in self.times.iter().zip(&self.states).zip(&self.totals) {
            for v in values {
                out.push_str(v);
                out.push(',');
            }
            out.push_str(&t.format_sci(digits));
            for v in x {
                out.push(',');
                out.push_str(&v.format_sci(digits));
            }
            out.push(',');
            out.push_str(&k.format_sci(digits));
            out.push('\n');
        }
        out
    }
}

/// Failed integration together with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct IntegrationFailure<S> {
    pub error: AlfError,
    pub partial: Trajectory<S>,
}

impl<S> std::fmt::Display for IntegrationFailure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl<S: std::fmt::Debug> std::error::Error for IntegrationFailure<S> {}

impl<S> From<IntegrationFailure<S>> for AlfError {
    fn from(f: IntegrationFailure<S>) -> Self {
        f.error
    }
}

fn exceeds_bound<S: Real>(x: &[S]) -> bool {
    x.iter().any(|v| !v.is_finite() || v.to_f64().abs() > DIVERGENCE_BOUND)
}

fn rat<S: Real>(p: i64, q: i64) -> S {
    S::from_rational(&BigRational::new(BigInt::from(p), BigInt::from(q)))
}

fn axpy<S: Real>(y: &[S], h: S, terms: &[(S, &[S])]) -> Vec<S> {
    (0..y.len())
        .map(|i| {
            let mut acc = S::zero();
            for (c, k) in terms {
                acc = acc + *c * k[i];
            }
            y[i] + h * acc
        })
        .collect()
}

/// Integrates `flow` from `y0` over `tspan`.
pub fn integrate<S: Real, F: Flow<S> + ?Sized>(
    flow: &F,
    y0: &[S],
    tspan: (f64, f64),
    cfg: &IntegratorConfig,
) -> std::result::Result<Trajectory<S>, IntegrationFailure<S>> {
    let meta = TrajectoryMeta {
        method: cfg.method,
        dt: cfg.dt,
        tol: cfg.tol,
        digits: S::DIGITS as u32,
        stride: cfg.stride,
        seed: cfg.seed,
        steps: 0,
        rejected: 0,
    };
    let mut traj = Trajectory::new(meta);
    let fail = |error, traj| Err(IntegrationFailure { error, partial: traj });
    if let Err(e) = cfg.validate() {
        return fail(e, traj);
    }
    if y0.len() != flow.dim() {
        return fail(AlfError::DimensionMismatch { expected: flow.dim(), got: y0.len() }, traj);
    }
    let (t0, t1) = tspan;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return fail(AlfError::Config(format!("tspan [{t0}, {t1}] must be finite and increasing")), traj);
    }
    traj.push(S::from_f64(t0), flow.lift(y0));
    match cfg.method {
        Method::Rk4 => rk4(flow, y0, t0, t1, cfg, traj),
        Method::Dp45 => dp45(flow, y0, t0, t1, cfg, traj),
    }
}

fn rk4<S: Real, F: Flow<S> + ?Sized>(
    flow: &F,
    y0: &[S],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut traj: Trajectory<S>,
) -> std::result::Result<Trajectory<S>, IntegrationFailure<S>> {
    let n = flow.dim();
    let steps = ((t1 - t0) / cfg.dt).ceil() as usize;
    let h = S::from_f64((t1 - t0) / steps as f64);
    let half = h * rat(1, 2);
    let sixth = rat::<S>(1, 6);
    let two = S::from_f64(2.0);
    let t_start = S::from_f64(t0);
    let mut y = y0.to_vec();
    let mut k1 = vec![S::zero(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for step in 1..=steps {
        flow.rhs(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + half * k1[i];
        }
        flow.rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + half * k2[i];
        }
        flow.rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        flow.rhs(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let t = t_start + h * S::from_f64(step as f64);
        traj.meta.steps = step;
        let x = flow.lift(&tmp);
        if exceeds_bound(&x) {
            let t_prev = t_start + h * S::from_f64((step - 1) as f64);
            traj.push_divergent(t_prev, flow.lift(&y), t, x);
            let error = AlfError::Divergence { t: t.to_f64(), bound: DIVERGENCE_BOUND };
            return Err(IntegrationFailure { error, partial: traj });
        }
        std::mem::swap(&mut y, &mut tmp);
        if step % cfg.stride == 0 || step == steps {
            traj.push(t, x);
        }
    }
    Ok(traj)
}

struct DpTableau<S> {
    c: [S; 7],
    a: [[S; 6]; 7],
    e: [S; 7],
}

impl<S: Real> DpTableau<S> {
    fn new() -> Self {
        let z = S::zero();
        let r = rat::<S>;
        Self {
            c: [z, r(1, 5), r(3, 10), r(4, 5), r(8, 9), S::one(), S::one()],
            a: [
                [z; 6],
                [r(1, 5), z, z, z, z, z],
                [r(3, 40), r(9, 40), z, z, z, z],
                [r(44, 45), r(-56, 15), r(32, 9), z, z, z],
                [r(19372, 6561), r(-25360, 2187), r(64448, 6561), r(-212, 729), z, z],
                [r(9017, 3168), r(-355, 33), r(46732, 5247), r(49, 176), r(-5103, 18656), z],
                [r(35, 384), z, r(500, 1113), r(125, 192), r(-2187, 6784), r(11, 84)],
            ],
            e: [r(71, 57600), z, r(-71, 16695), r(71, 1920), r(-17253, 339200), r(22, 525), r(-1, 40)],
        }
    }
}

fn dp45<S: Real, F: Flow<S> + ?Sized>(
    flow: &F,
    y0: &[S],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut traj: Trajectory<S>,
) -> std::result::Result<Trajectory<S>, IntegrationFailure<S>> {
    let n = flow.dim();
    let tab = DpTableau::<S>::new();
    let _ = &tab.c;
    let mut y = y0.to_vec();
    let mut t = S::from_f64(t0);
    let t_end = S::from_f64(t1);
    let mut h = cfg.dt.min(t1 - t0);
    let mut k: Vec<Vec<S>> = vec![vec![S::zero(); n]; 7];
    flow.rhs(&y, &mut k[0]);
    let mut accepted = 0usize;
    loop {
        let remaining = (t_end - t).to_f64();
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = S::from_f64(h);
        for s in 1..7 {
            let terms: Vec<(S, &[S])> = (0..s).map(|j| (tab.a[s][j], k[j].as_slice())).collect();
            let ys = axpy(&y, hs, &terms);
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            flow.rhs(&ys, &mut rest[0]);
        }
        // stage 7 is evaluated at the 5th-order solution
        let y_new = axpy(&y, hs, &(0..6).map(|j| (tab.a[6][j], k[j].as_slice())).collect::<Vec<_>>());
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = S::zero();
            for s in 0..7 {
                e = e + tab.e[s] * k[s][i];
            }
            let e = (hs * e).to_f64();
            let scale = cfg.tol * (1.0 + y[i].to_f64().abs().max(y_new[i].to_f64().abs()));
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();
        let err_ok = err.is_finite();
        if err_ok && err <= 1.0 {
            let t_prev = t;
            t = if last { t_end } else { t + hs };
            k.swap(0, 6);
            accepted += 1;
            traj.meta.steps = accepted;
            let x = flow.lift(&y_new);
            if exceeds_bound(&x) {
                traj.push_divergent(t_prev, flow.lift(&y), t, x);
                let error = AlfError::Divergence { t: t.to_f64(), bound: DIVERGENCE_BOUND };
                return Err(IntegrationFailure { error, partial: traj });
            }
            y = y_new;
            if accepted % cfg.stride == 0 || last {
                traj.push(t, x);
            }
            if last {
                break;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            traj.meta.rejected += 1;
            let factor = if err_ok { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= factor;
            let t_f = t.to_f64();
            if h < 1e-14 * t_f.abs().max(1.0) {
                let error = AlfError::IntegrationStalled { t_last: t_f };
                return Err(IntegrationFailure { error, partial: traj });
            }
        }
    }
    Ok(traj)
}

/// Convenience wrapper that discards the partial trajectory on failure.
pub fn integrate_or_err<S: Real, F: Flow<S> + ?Sized>(
    flow: &F,
    y0: &[S],
    tspan: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<S>> {
    integrate(flow, y0, tspan, cfg).map_err(|f| f.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{DoubleDouble, QuadDouble, Scalar};

    /// ẏ = −y
    struct Decay;

    impl<S: Real> Flow<S> for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[S], dy: &mut [S]) {
            dy[0] = S::zero() - y[0];
        }
        fn lift(&self, y: &[S]) -> Vec<S> {
            y.to_vec()
        }
    }

    /// ẏ = y², blows up at t = 1 from y(0) = 1.
    struct Blowup;

    impl<S: Real> Flow<S> for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[S], dy: &mut [S]) {
            dy[0] = y[0] * y[0];
        }
        fn lift(&self, y: &[S]) -> Vec<S> {
            y.to_vec()
        }
    }

    #[test]
    fn rk4_decay_accuracy() {
        let tr = integrate(&Decay, &[1.0f64], (0.0, 1.0), &IntegratorConfig::rk4(1e-2)).unwrap();
        let y = tr.last_state().unwrap()[0];
        assert!((y - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(tr.len(), 101);
        assert!((tr.times.last().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let err = |dt| {
            let tr = integrate(&Decay, &[1.0f64], (0.0, 1.0), &IntegratorConfig::rk4(dt)).unwrap();
            (tr.last_state().unwrap()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn dp45_meets_tolerance() {
        for tol in [1e-6, 1e-9, 1e-12] {
            let tr = integrate(&Decay, &[1.0f64], (0.0, 5.0), &IntegratorConfig::dp45(tol)).unwrap();
            let y = tr.last_state().unwrap()[0];
            assert!((y - (-5.0f64).exp()).abs() < 100.0 * tol, "tol {tol}");
            assert_eq!(*tr.times.last().unwrap(), 5.0);
            assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn extended_precision_beats_double() {
        let cfg = IntegratorConfig::rk4(1e-3);
        let dd = integrate(&Decay, &[DoubleDouble::one()], (0.0, 1.0), &cfg).unwrap();
        let qd = integrate(&Decay, &[QuadDouble::one()], (0.0, 1.0), &cfg).unwrap();
        // both carry the same truncation error; they agree far below f64 resolution
        let a = dd.last_state().unwrap()[0];
        let b = QuadDouble::from_f64(a.hi) + QuadDouble::from_f64(a.lo);
        let d = (b - qd.last_state().unwrap()[0]).to_f64().abs();
        assert!(d < 1e-25, "{d}");
    }

    #[test]
    fn divergence_keeps_partial_trajectory() {
        for cfg in [IntegratorConfig::rk4(1e-3), IntegratorConfig::dp45(1e-8)] {
            let f = integrate(&Blowup, &[1.0f64], (0.0, 2.0), &cfg).unwrap_err();
            match f.error {
                AlfError::Divergence { t, .. } | AlfError::IntegrationStalled { t_last: t } => {
                    assert!(t <= 1.01, "{t}")
                }
                e => panic!("unexpected {e:?}"),
            }
            assert!(!f.partial.is_empty());
            assert!(f.partial.states.iter().flatten().all(|v| v.is_finite()));
            assert_eq!(f.error.exit_code(), 3);
        }
    }

    #[test]
    fn stride_and_csv() {
        let tr = integrate(&Decay, &[1.0f64], (0.0, 1.0), &IntegratorConfig::rk4(0.1).with_stride(3)).unwrap();
        // t = 0, 0.3, 0.6, 0.9, 1.0
        assert_eq!(tr.len(), 5);
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,k");
        assert_eq!(lines.next().unwrap(), "0.000000000000000e0,1.000000000000000e0,1.000000000000000e0");
    }

    #[test]
    fn invalid_inputs() {
        assert!(integrate(&Decay, &[1.0f64, 2.0], (0.0, 1.0), &IntegratorConfig::rk4(0.1)).is_err());
        assert!(integrate(&Decay, &[1.0f64], (1.0, 0.0), &IntegratorConfig::rk4(0.1)).is_err());
        assert!(integrate(&Decay, &[1.0f64], (0.0, 1.0), &IntegratorConfig::rk4(0.0)).is_err());
        assert!(integrate(&Decay, &[1.0f64], (0.0, 1.0), &IntegratorConfig::rk4(0.1).with_stride(0)).is_err());
    }

    #[test]
    fn config_json() {
        let c: IntegratorConfig = serde_json::from_str(r#"{"method":"dp45","tol":1e-9,"digits":32,"seed":4}"#).unwrap();
        assert_eq!(c.method, Method::Dp45);
        assert_eq!(c.digits, Precision::DoubleDouble);
        assert_eq!(c.seed, Some(4));
        assert!(serde_json::from_str::<IntegratorConfig>(r#"{"method":"rk4","digits":20}"#).is_err());
        assert!(serde_json::from_str::<IntegratorConfig>(r#"{"method":"rk4","bogus":1}"#).is_err());
    }
}
