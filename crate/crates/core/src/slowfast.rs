//! Slow–fast analysis of complete-graph ALFs on the invariant `(x, k)`-plane.
//!
//! With `h_i = h` for every node except `l` (which carries `h̃`), the states
//! `(x, …, x, k − (n−1)x)` form an invariant plane on which
//!
//! ```text
//! ẋ = −[f(x) − f(k − (n−1)x)] + ε g
//! k̇ = ε [(n−1) g + g̃]
//! ```
//!
//! The critical manifold is the zero set of `f(x) − f(k − (n−1)x)`; it always
//! contains the consensus line `x = k/n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Perturbation, PerturbationKind, PerturbedSystem};
use crate::error::{AlfError, Result};
use crate::integrate::{integrate, Flow, IntegrationFailure, IntegratorConfig, Trajectory};
use crate::precision::{Real, Scalar};
use crate::response::{BivariatePolynomial, CompiledResponse, ResponseFunction};
use crate::roots::real_roots_in;

/// `|f'(x)| ≤ SINGULAR_TOL · (1 + |f''(x)|)` counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;
/// `|λ − 1|` below this is a canard at double precision.
pub const LAMBDA_TOL: f64 = 1e-9;
/// Tube half-width around consensus, in units of ε.
pub const TUBE_FACTOR: f64 = 10.0;

fn rational(v: f64) -> BigRational {
    <BigRational as Scalar>::from_f64(v)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
enum PlanePerturbation {
    Constant { h: f64, h_tilde: f64 },
    Field(Perturbation),
}

/// Reduced system on the `(x, k)`-plane of a `Kₙ`-ALF.
#[derive(Debug, Clone)]
pub struct PlaneSystem {
    n: usize,
    l: usize,
    f: ResponseFunction,
    perturbation: PlanePerturbation,
    epsilon: f64,
}

impl PlaneSystem {
    /// Plane system with constant components `h` (all nodes but the last) and `h̃` (last node).
    pub fn new(n: usize, f: ResponseFunction, h: f64, h_tilde: f64, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(AlfError::InvalidSize(n));
        }
        if !(h.is_finite() && h_tilde.is_finite() && epsilon.is_finite() && epsilon >= 0.0) {
            return Err(AlfError::Config("plane parameters must be finite and epsilon >= 0".into()));
        }
        Ok(Self { n, l: n - 1, f, perturbation: PlanePerturbation::Constant { h, h_tilde }, epsilon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based node carrying `k − (n−1)x`.
    pub fn distinguished(&self) -> usize {
        self.l
    }

    pub fn response(&self) -> &ResponseFunction {
        &self.f
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    /// Constant `(h, h̃)` when the perturbation is state independent.
    pub fn constant_components(&self) -> Option<(f64, f64)> {
        match &self.perturbation {
            PlanePerturbation::Constant { h, h_tilde } => Some((*h, *h_tilde)),
            PlanePerturbation::Field(_) => None,
        }
    }

    /// Node state `(x, …, x, k − (n−1)x)` with the odd entry at the distinguished node.
    pub fn lift<S: Scalar>(&self, x: &S, k: &S) -> Vec<S> {
        let z = k.clone() - S::from_f64((self.n - 1) as f64) * x.clone();
        let mut v = vec![x.clone(); self.n];
        v[self.l] = z;
        v
    }

    /// `(g, g̃)` at `(x, k)`.
    pub fn components(&self, x: f64, k: f64) -> (f64, f64) {
        match &self.perturbation {
            PlanePerturbation::Constant { h, h_tilde } => (*h, *h_tilde),
            PlanePerturbation::Field(p) => {
                let hv = p.eval(&self.lift(&x, &k));
                let other = if self.l == 0 { 1 } else { 0 };
                (hv[other], hv[self.l])
            }
        }
    }

    /// `f(x) − f(k − (n−1)x)`.
    pub fn manifold_residual(&self, x: f64, k: f64) -> f64 {
        self.f.eval_f64(x) - self.f.eval_f64(k - (self.n - 1) as f64 * x)
    }

    /// `(ẋ, k̇)` at double precision.
    pub fn field(&self, x: f64, k: f64) -> (f64, f64) {
        let (g, gt) = self.components(x, k);
        let fast = -self.manifold_residual(x, k) + self.epsilon * g;
        let slow = self.epsilon * ((self.n - 1) as f64 * g + gt);
        (fast, slow)
    }

    /// `∂ẋ/∂x` of the layer problem: `−f'(x) − (n−1) f'(k − (n−1)x)`.
    pub fn layer_jacobian(&self, x: f64, k: f64) -> f64 {
        let d = self.f.derivative(1);
        let m = (self.n - 1) as f64;
        -d.eval_f64(x) - m * d.eval_f64(k - m * x)
    }

    pub fn kernel<S: Real>(&self) -> PlaneKernel<S> {
        let constants = match &self.perturbation {
            PlanePerturbation::Constant { h, h_tilde } => Some((S::from_f64(*h), S::from_f64(*h_tilde))),
            PlanePerturbation::Field(_) => None,
        };
        PlaneKernel {
            system: self.clone(),
            f: self.f.compile(),
            m: S::from_f64((self.n - 1) as f64),
            epsilon: S::from_f64(self.epsilon),
            constants,
        }
    }

    /// Stability of the consensus equilibrium `x*` of the layer problem.
    pub fn consensus_stability(&self, x_star: f64) -> ConsensusStability {
        let d1 = self.f.derivative(1).eval_f64(x_star);
        let d2 = self.f.derivative(2).eval_f64(x_star);
        let stability = if d1.abs() <= SINGULAR_TOL * (1.0 + d2.abs()) {
            Stability::Singular
        } else if d1 > 0.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        };
        ConsensusStability { stability, jacobian: -(self.n as f64) * d1 }
    }

    /// Singular consensus coordinates: real roots of `f'` in `x_range`, ascending.
    pub fn singular_points(&self, x_range: (f64, f64)) -> Vec<f64> {
        let d = self.f.derivative(1).polynomial().coeffs_f64();
        real_roots_in(&d, x_range.0, x_range.1)
            .into_iter()
            .filter(|&x| self.consensus_stability(x).stability == Stability::Singular)
            .collect()
    }

    /// Partial derivatives of the plane system at a consensus point.
    pub fn local_coefficients(&self, x_s: f64) -> LocalCoefficients {
        let n = self.n as f64;
        let m = n - 1.0;
        let k_s = n * x_s;
        let d2 = self.f.derivative(2).eval_f64(x_s);
        let (g, gt) = self.components(x_s, k_s);
        // fast field F = −f(x) + f(z), z = k − (n−1)x, with z = x on consensus
        let f_xx = -d2 + m * m * d2;
        let f_xk = -m * d2;
        let f_kk = d2;
        LocalCoefficients {
            alpha: f_xx / 2.0,
            beta: f_xk / 2.0,
            gamma: f_kk / 2.0,
            delta: g,
            g0: m * g + gt,
        }
    }

    /// Transcritical analysis at a singular consensus point.
    pub fn analyze_singularity(&self, x_s: f64) -> Result<SingularityReport> {
        let st = self.consensus_stability(x_s);
        if st.stability != Stability::Singular {
            return Err(AlfError::NotSingular { x: x_s, slope: -st.jacobian / self.n as f64 });
        }
        let n = self.n;
        let nf = n as f64;
        let d2f = self.f.derivative(2).eval_f64(x_s);
        let d3f = self.f.derivative(3).eval_f64(x_s);
        let (h, ht) = self.components(x_s, nf * x_s);
        let pert_sum = (nf - 1.0) * h + ht;
        let c = self.local_coefficients(x_s);
        debug_assert!((c.g0 - pert_sum).abs() <= 1e-12 * (1.0 + pert_sum.abs()));

        let mut flags = Vec::new();
        let flat = d2f.abs() <= 1e-9 * (1.0 + d3f.abs());
        if flat {
            flags.push(SingularityFlag::ZeroCurvature);
        }
        if n == 2 {
            flags.push(SingularityFlag::NonTransversal);
        }
        let zero_sum = pert_sum.abs() <= 1e-12 * (1.0 + (nf - 1.0) * h.abs() + ht.abs());
        if zero_sum {
            flags.push(SingularityFlag::ZeroPerturbationSum);
        }

        let rho = if flat || zero_sum { None } else { Some((sign(d2f) * sign(pert_sum)) as i8) };
        let lambda = if flat || zero_sum {
            None
        } else {
            let disc = c.beta * c.beta - c.gamma * c.alpha;
            let general = (c.delta * c.alpha + c.g0 * c.beta) / (c.g0.abs() * disc.sqrt());
            let rho_f = rho.map_or(0.0, f64::from);
            let simplified = -rho_f * (h + (nf - 1.0) * ht) / (ht + (nf - 1.0) * h);
            assert!(
                (general - simplified).abs() <= 1e-9 * (1.0 + simplified.abs()),
                "canard parameter mismatch: {general} vs {simplified}"
            );
            Some(simplified)
        };
        let lambda_exact = match (&self.perturbation, rho) {
            (PlanePerturbation::Constant { h, h_tilde }, Some(r)) => {
                let (h, ht) = (rational(*h), rational(*h_tilde));
                let m = BigRational::from_integer(BigInt::from(n as i64 - 1));
                let num = h.clone() + m.clone() * ht.clone();
                let den = ht + m * h;
                Some(-BigRational::from_integer(BigInt::from(r)) * num / den)
            }
            _ => None,
        };

        let sing_type = if flat {
            SingularityType::Degenerate
        } else if n == 2 || zero_sum {
            SingularityType::NonTranscritical
        } else if rho == Some(-1) {
            SingularityType::Type1
        } else {
            SingularityType::Type2
        };
        let near_one = match (&lambda_exact, lambda) {
            (Some(e), _) => e.is_one(),
            (None, Some(l)) => (l - 1.0).abs() <= LAMBDA_TOL,
            _ => false,
        };
        Ok(SingularityReport {
            x_s,
            k_s: nf * x_s,
            d2f,
            pert_sum,
            rho,
            sing_type,
            lambda,
            canard: sing_type == SingularityType::Type1 && near_one,
            tangent: TangentLine { intercept: 2.0 * x_s, slope: nf - 2.0 },
            flags,
            lambda_exact,
            coefficients: c,
        })
    }

    /// Reports for every singular consensus point with `x` in `x_range`, sorted by `k`.
    pub fn singularities(&self, x_range: (f64, f64)) -> Result<Vec<SingularityReport>> {
        self.singular_points(x_range).into_iter().map(|x| self.analyze_singularity(x)).collect()
    }

    /// Secant slope `dk/dx` of the non-consensus branch through a singular point,
    /// from roots of the regularized manifold equation at `x_s ± h_step`.
    pub fn tangent_slope_estimate(&self, report: &SingularityReport, h_step: f64) -> Result<f64> {
        if !matches!(report.sing_type, SingularityType::Type1 | SingularityType::Type2) {
            return Err(AlfError::ContinuationFailed(format!(
                "no transversal branch crossing at x = {} ({:?})",
                report.x_s, report.sing_type
            )));
        }
        if !(h_step > 0.0 && h_step.is_finite()) {
            return Err(AlfError::Config(format!("h_step must be positive, got {h_step}")));
        }
        let r = self.f.polynomial().regularized_difference();
        let n = self.n as f64;
        let k_at = |x: f64| -> Result<f64> {
            let ys = real_roots_in(&r.at_x(&rational(x)).coeffs_f64(), -100.0 * h_step, 100.0 * h_step);
            let y = ys
                .into_iter()
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .ok_or_else(|| AlfError::ContinuationFailed(format!("no manifold branch near x = {x}")))?;
            Ok(y + n * x)
        };
        let kp = k_at(report.x_s + h_step)?;
        let km = k_at(report.x_s - h_step)?;
        Ok((kp - km) / (2.0 * h_step))
    }

    /// `−n ∫ f'(k/n) dk` over `[k1, k2]`.
    pub fn slow_divergence_integral(&self, k1: f64, k2: f64, quad_tol: f64) -> Result<DivergenceIntegral> {
        if !(k1 < k2) || !k1.is_finite() || !k2.is_finite() {
            return Err(AlfError::Config(format!("need finite k1 < k2, got [{k1}, {k2}]")));
        }
        let n = self.n as f64;
        let d = self.f.derivative(1);
        let q = quadrature::integrate(|k| -n * d.eval_f64(k / n), k1, k2, quad_tol);
        // antiderivative: −n ∫ f'(k/n) dk = −n² f(k/n)
        let nr = BigRational::from_integer(BigInt::from(self.n as i64));
        let p = self.f.polynomial();
        let exact = -(nr.clone() * nr.clone()) * (p.eval(&(rational(k2) / nr.clone())) - p.eval(&(rational(k1) / nr)));
        Ok(DivergenceIntegral { integral: q.integral, exact: Some(Scalar::to_f64(&exact)), exact_rational: Some(exact) })
    }

    /// Samples the critical manifold on a grid of `k` lines.
    pub fn sample_manifold(&self, grid: &ManifoldGrid) -> Result<ManifoldSample> {
        grid.validate()?;
        let n = self.n as f64;
        let r = self.f.polynomial().regularized_difference();
        let dk = (grid.k_range.1 - grid.k_range.0) / (grid.nk - 1) as f64;
        let dx = (grid.x_range.1 - grid.x_range.0) / (grid.nx - 1) as f64;
        let lines: Vec<(f64, Vec<f64>, usize)> = (0..grid.nk)
            .into_par_iter()
            .map(|i| {
                let k = grid.k_range.0 + dk * i as f64;
                let (roots, rejected) = self.line_roots(&r, k, grid);
                (k, roots, rejected)
            })
            .collect();

        let threshold = 5.0 * dk.max(dx);
        let mut points = Vec::new();
        let mut rejected = 0;
        let mut max_roots = 0;
        let mut next_id = 1usize;
        // (id, last x, line index)
        let mut active: Vec<(usize, f64, usize)> = Vec::new();
        for (li, (k, roots, rej)) in lines.into_iter().enumerate() {
            rejected += rej;
            let consensus = k / n;
            let mut count = 0;
            if (grid.x_range.0..=grid.x_range.1).contains(&consensus) {
                count += 1;
                points.push(ManifoldPoint { k, x: consensus, branch: 0, stability: self.consensus_stability(consensus).stability });
            }
            count += roots.len();
            max_roots = max_roots.max(count);
            active.retain(|(_, _, last)| li - last <= 2);
            let mut taken = vec![false; active.len()];
            for x in roots {
                let best = active
                    .iter()
                    .enumerate()
                    .filter(|(j, (_, xl, _))| !taken[*j] && (xl - x).abs() <= threshold)
                    .min_by(|a, b| (a.1 .1 - x).abs().total_cmp(&(b.1 .1 - x).abs()))
                    .map(|(j, _)| j);
                let id = match best {
                    Some(j) => {
                        taken[j] = true;
                        active[j].1 = x;
                        active[j].2 = li;
                        active[j].0
                    }
                    None => {
                        let id = next_id;
                        next_id += 1;
                        active.push((id, x, li));
                        taken.push(true);
                        id
                    }
                };
                let stability = self.layer_stability(x, k);
                points.push(ManifoldPoint { k, x, branch: id, stability });
            }
        }
        Ok(ManifoldSample { points, max_roots_per_line: max_roots, rejected })
    }

    /// Non-consensus roots on one `k` line that meet the residual tolerance,
    /// and the number of candidates that did not.
    fn line_roots(&self, r: &BivariatePolynomial, k: f64, grid: &ManifoldGrid) -> (Vec<f64>, usize) {
        let n = self.n as f64;
        // f(x) − f(k − (n−1)x) = −(k − n x) · R(x, k − n x)
        let q = r.on_line(&rational(k), &rational(-n));
        if q.is_zero() {
            return (vec![], 0);
        }
        let consensus = k / n;
        let mut roots = Vec::new();
        let mut rejected = 0;
        for x in real_roots_in(&q.coeffs_f64(), grid.x_range.0, grid.x_range.1) {
            if (x - consensus).abs() <= 1e-9 * (1.0 + consensus.abs()) {
                continue;
            }
            if self.manifold_residual(x, k).abs() <= grid.residual_tol {
                roots.push(x);
            } else {
                rejected += 1;
            }
        }
        (roots, rejected)
    }

    fn layer_stability(&self, x: f64, k: f64) -> Stability {
        let d = self.f.derivative(1);
        let m = (self.n - 1) as f64;
        let a = d.eval_f64(x);
        let b = d.eval_f64(k - m * x);
        let j = -a - m * b;
        if j.abs() <= 1e-8 * (1.0 + a.abs() + m * b.abs()) {
            Stability::Singular
        } else if j < 0.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        }
    }
}

/// Restricts a `Kₙ`-ALF to its invariant plane; `l` is the 0-based node
/// whose perturbation component may differ from the rest.
pub fn plane_reduce(sys: &PerturbedSystem, l: usize) -> Result<PlaneSystem> {
    let n = sys.dim();
    if l >= n {
        return Err(AlfError::InvalidIndex(l + 1));
    }
    if n < 2 || !sys.graph().is_complete_unweighted() {
        return Err(AlfError::UnsupportedStructure("plane reduction needs an unweighted complete graph".into()));
    }
    let f = sys
        .response()
        .homogeneous_function()
        .ok_or_else(|| AlfError::UnsupportedStructure("plane reduction needs a homogeneous polynomial response".into()))?
        .clone();
    let p = sys.perturbation();
    let perturbation = match p.kind() {
        PerturbationKind::Callback(_) => {
            // sampled check of the shape h_i = h for all i ≠ l
            for (x, k) in [(0.0, 0.0), (0.3, -1.1), (-0.7, 2.3), (1.9, 0.4)] {
                let mut state = vec![x; n];
                state[l] = k - (n - 1) as f64 * x;
                check_shape(&p.eval(&state), l)?;
            }
            PlanePerturbation::Field(p.clone())
        }
        _ => {
            let v = p.constant_values().expect("constant kind");
            check_shape(v, l)?;
            let other = if l == 0 { 1 } else { 0 };
            PlanePerturbation::Constant { h: v[other], h_tilde: v[l] }
        }
    };
    Ok(PlaneSystem { n, l, f, perturbation, epsilon: sys.epsilon() })
}

fn check_shape(h: &[f64], l: usize) -> Result<()> {
    let mut others = h.iter().enumerate().filter(|(i, _)| *i != l).map(|(_, v)| *v);
    if let Some(first) = others.next() {
        for v in others {
            if (v - first).abs() > 1e-12 * (1.0 + first.abs()) {
                return Err(AlfError::SymmetryViolation(format!(
                    "components other than node {} must be equal, found {first} and {v}",
                    l + 1
                )));
            }
        }
    }
    Ok(())
}

/// True iff every component of `H` at the consensus point `(x_s, …, x_s)` is
/// the same nonzero value.
pub fn is_critical_perturbation(h: &Perturbation, x_s: f64, n: usize) -> bool {
    let v = h.eval(&vec![x_s; n]);
    let Some(&first) = v.first() else { return false };
    first.abs() > 1e-12 && v.iter().all(|c| (c - first).abs() <= 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Singular,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
            Stability::Singular => "singular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusStability {
    pub stability: Stability,
    /// Transverse Jacobian `−n f'(x*)`.
    pub jacobian: f64,
}

/// Quadratic coefficients of the fast field and first-order perturbation terms
/// at a consensus point, in the canonical transcritical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub g0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityType {
    #[serde(rename = "type-1")]
    Type1,
    #[serde(rename = "type-2")]
    Type2,
    #[serde(rename = "degenerate")]
    Degenerate,
    #[serde(rename = "non-transcritical")]
    NonTranscritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityFlag {
    ZeroCurvature,
    NonTransversal,
    ZeroPerturbationSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentLine {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub x_s: f64,
    pub k_s: f64,
    pub d2f: f64,
    pub pert_sum: f64,
    pub rho: Option<i8>,
    #[serde(rename = "type")]
    pub sing_type: SingularityType,
    pub lambda: Option<f64>,
    pub canard: bool,
    pub tangent: TangentLine,
    pub flags: Vec<SingularityFlag>,
    /// `λ` in rational arithmetic for constant perturbations.
    #[serde(skip)]
    pub lambda_exact: Option<BigRational>,
    #[serde(skip)]
    pub coefficients: LocalCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceIntegral {
    pub integral: f64,
    pub exact: Option<f64>,
    #[serde(skip)]
    pub exact_rational: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldGrid {
    pub k_range: (f64, f64),
    pub x_range: (f64, f64),
    pub nk: usize,
    pub nx: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
}

fn default_residual_tol() -> f64 {
    1e-9
}

impl ManifoldGrid {
    pub fn new(k_range: (f64, f64), x_range: (f64, f64), nk: usize, nx: usize) -> Self {
        Self { k_range, x_range, nk, nx, residual_tol: default_residual_tol() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(self.k_range) || !ok(self.x_range) {
            return Err(AlfError::Config("manifold ranges must be finite and increasing".into()));
        }
        if self.nk < 2 || self.nx < 2 {
            return Err(AlfError::Config("manifold grid needs at least 2 points per axis".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(AlfError::Config("residual_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldPoint {
    pub k: f64,
    pub x: f64,
    /// 0 is the consensus branch.
    pub branch: usize,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldSample {
    pub points: Vec<ManifoldPoint>,
    /// Largest number of manifold points on a single `k` line.
    pub max_roots_per_line: usize,
    /// Candidate roots dropped for exceeding the residual tolerance.
    pub rejected: usize,
}

impl ManifoldSample {
    pub fn branch_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.points.iter().map(|p| p.branch).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn branch_count(&self) -> usize {
        self.branch_ids().len()
    }

    pub fn off_consensus(&self) -> impl Iterator<Item = &ManifoldPoint> {
        self.points.iter().filter(|p| p.branch != 0)
    }

    pub fn to_csv(&self) -> String {
        self.to_csv_with_prefix(&[], &[])
    }

    pub fn to_csv_with_prefix(&self, names: &[&str], values: &[String]) -> String {
        let mut out = String::new();
        for name in names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("k,x,branch_id,stability\n");
        for p in &self.points {
            for v in values {
                out.push_str(v);
                out.push(',');
            }
            out.push_str(&format!("{:.15e},{:.15e},{},{}\n", p.k, p.x, p.branch, p.stability.name()));
        }
        out
    }
}

/// Plane system converted to `S`; state `y = (x, k)`.
#[derive(Clone)]
pub struct PlaneKernel<S> {
    system: PlaneSystem,
    f: CompiledResponse<S>,
    m: S,
    epsilon: S,
    constants: Option<(S, S)>,
}

impl<S: Real> Flow<S> for PlaneKernel<S> {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, y: &[S], dy: &mut [S]) {
        let (x, k) = (y[0], y[1]);
        let z = k - self.m * x;
        let (g, gt) = match self.constants {
            Some(c) => c,
            None => {
                let (g, gt) = self.system.components(x.to_f64(), k.to_f64());
                (S::from_f64(g), S::from_f64(gt))
            }
        };
        dy[0] = self.f.eval(&z) - self.f.eval(&x) + self.epsilon * g;
        dy[1] = self.epsilon * (self.m * g + gt);
    }

    fn lift(&self, y: &[S]) -> Vec<S> {
        self.system.lift(&y[0], &y[1])
    }
}

/// Integrates the plane system from `(x0, k0)`; states are returned lifted to
/// node coordinates.
pub fn simulate_plane<S: Real>(
    ps: &PlaneSystem,
    x0: S,
    k0: S,
    tspan: (f64, f64),
    cfg: &IntegratorConfig,
) -> std::result::Result<Trajectory<S>, IntegrationFailure<S>> {
    integrate(&ps.kernel::<S>(), &[x0, k0], tspan, cfg)
}

/// How long a trajectory shadows consensus around a singular point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanardMetrics {
    pub epsilon: f64,
    pub tube: f64,
    pub k_singular: f64,
    /// The trajectory reached `k_singular` inside the tube.
    pub crossed_in_tube: bool,
    /// Slow time `ε t` inside the tube before the crossing.
    pub before_slow_time: f64,
    /// Slow time `ε t` inside the tube after the crossing, up to the first exit.
    pub after_slow_time: f64,
    /// `after / before`.
    pub symmetry_ratio: Option<f64>,
    /// `k` at the first sample outside the tube after the crossing.
    pub departure_k: Option<f64>,
    /// Distance travelled in `k` past the singular point before leaving the tube;
    /// `None` when the trajectory never left.
    pub departure_delta_k: Option<f64>,
    /// Largest `|x − k/n|` before the crossing.
    pub max_deviation_before: f64,
}

/// Canard metrics for a lifted plane trajectory; `sym` is any node other
/// than the distinguished one.
pub fn canard_metrics<S: Real>(traj: &Trajectory<S>, n: usize, sym: usize, epsilon: f64, k_singular: f64) -> CanardMetrics {
    let tube = TUBE_FACTOR * epsilon;
    let nn = S::from_f64(n as f64);
    let dev: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.totals)
        .map(|(x, k)| (x[sym] - *k / nn).to_f64().abs())
        .collect();
    let ks = traj.totals_f64();
    let ts = traj.times_f64();
    let mut m = CanardMetrics {
        epsilon,
        tube,
        k_singular,
        crossed_in_tube: false,
        before_slow_time: 0.0,
        after_slow_time: 0.0,
        symmetry_ratio: None,
        departure_k: None,
        departure_delta_k: None,
        max_deviation_before: 0.0,
    };
    if ks.is_empty() {
        return m;
    }
    let side = sign(ks[0] - k_singular);
    let Some(ic) = ks.iter().position(|&k| sign(k - k_singular) != side) else {
        m.max_deviation_before = dev.iter().copied().fold(0.0, f64::max);
        return m;
    };
    m.max_deviation_before = dev[..ic].iter().copied().fold(0.0, f64::max);
    let t_cross = if ic == 0 {
        ts[0]
    } else {
        let (k0, k1) = (ks[ic - 1], ks[ic]);
        let w = if k1 != k0 { (k_singular - k0) / (k1 - k0) } else { 0.0 };
        ts[ic - 1] + w * (ts[ic] - ts[ic - 1])
    };
    if dev[ic] > tube || (ic > 0 && dev[ic - 1] > tube) {
        return m;
    }
    m.crossed_in_tube = true;
    let mut start = ic;
    while start > 0 && dev[start - 1] <= tube {
        start -= 1;
    }
    let mut end = ic;
    while end + 1 < dev.len() && dev[end + 1] <= tube {
        end += 1;
    }
    m.before_slow_time = epsilon * (t_cross - ts[start]);
    m.after_slow_time = epsilon * (ts[end] - t_cross);
    if end + 1 < dev.len() {
        let kd = ks[end + 1];
        m.departure_k = Some(kd);
        m.departure_delta_k = Some((kd - k_singular) * -side);
    }
    if m.before_slow_time > 0.0 {
        m.symmetry_ratio = Some(m.after_slow_time / m.before_slow_time);
    }
    m
}
