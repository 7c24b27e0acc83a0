//! Perturbed Absolute Laplacian Flows `ẋ = −L F(x) + ε H(x, Λ)` and their
//! standard-form reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{AlfError, Result};
use crate::graph::Graph;
use crate::integrate::Flow;
use crate::precision::{Real, Scalar};
use crate::response::{CompiledField, ResponseField};
use crate::rng::SeededRng;

/// Named real parameters `Λ`.
pub type Params = BTreeMap<String, f64>;

/// `H(x, Λ)` as a double-precision callback.
pub type PerturbationFn = Arc<dyn Fn(&[f64], &Params) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum PerturbationKind {
    Constant,
    RandomConstant { seed: u64, lo: f64, hi: f64 },
    Callback(PerturbationFn),
}

impl fmt::Debug for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationKind::Constant => f.write_str("Constant"),
            PerturbationKind::RandomConstant { seed, lo, hi } => {
                write!(f, "RandomConstant {{ seed: {seed}, lo: {lo}, hi: {hi} }}")
            }
            PerturbationKind::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

/// Perturbation `H(x, Λ) = (h₁, …, hₙ)`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    kind: PerturbationKind,
    n: usize,
    /// Component values for the constant kinds; empty for callbacks.
    values: Vec<f64>,
    params: Params,
}

impl Perturbation {
    pub fn constant(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AlfError::Config("perturbation values must be finite".into()));
        }
        Ok(Self { kind: PerturbationKind::Constant, n: values.len(), values, params: Params::new() })
    }

    /// `c · 1`.
    pub fn uniform(n: usize, c: f64) -> Result<Self> {
        Self::constant(vec![c; n])
    }

    pub fn zero(n: usize) -> Self {
        Self::uniform(n, 0.0).expect("finite")
    }

    /// Constant components drawn uniformly from `[lo, hi)` with a seeded generator.
    pub fn random_constant(n: usize, seed: u64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(AlfError::Config(format!("random perturbation range [{lo}, {hi}] is invalid")));
        }
        let values = SeededRng::new(seed).uniform_vec(n, lo, hi);
        Ok(Self { kind: PerturbationKind::RandomConstant { seed, lo, hi }, n, values, params: Params::new() })
    }

    pub fn callback(
        n: usize,
        params: Params,
        f: impl Fn(&[f64], &Params) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { kind: PerturbationKind::Callback(Arc::new(f)), n, values: vec![], params }
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Constant component values, `None` for state-dependent perturbations.
    pub fn constant_values(&self) -> Option<&[f64]> {
        match self.kind {
            PerturbationKind::Callback(_) => None,
            _ => Some(&self.values),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            PerturbationKind::Callback(f) => f(x, &self.params),
            _ => self.values.clone(),
        }
    }

    pub fn compile<S: Scalar>(&self) -> CompiledPerturbation<S> {
        match &self.kind {
            PerturbationKind::Callback(f) => CompiledPerturbation::Callback(f.clone(), self.params.clone()),
            _ => CompiledPerturbation::Constant(self.values.iter().map(|&v| S::from_f64(v)).collect()),
        }
    }
}

#[derive(Clone)]
pub enum CompiledPerturbation<S> {
    Constant(Vec<S>),
    Callback(PerturbationFn, Params),
}

impl<S: Scalar> CompiledPerturbation<S> {
    pub fn eval_into(&self, x: &[S], out: &mut [S]) {
        match self {
            CompiledPerturbation::Constant(v) => out.clone_from_slice(v),
            CompiledPerturbation::Callback(f, p) => {
                let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
                for (o, v) in out.iter_mut().zip(f(&xf, p)) {
                    *o = S::from_f64(v);
                }
            }
        }
    }
}

/// `ẋ = −L F(x) + ε H(x, Λ)`.
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    graph: Graph,
    response: ResponseField,
    perturbation: Perturbation,
    epsilon: f64,
}

impl PerturbedSystem {
    pub fn new(graph: Graph, response: ResponseField, perturbation: Perturbation, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(AlfError::Config(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        let n = graph.node_count();
        if perturbation.dim() != n {
            return Err(AlfError::DimensionMismatch { expected: n, got: perturbation.dim() });
        }
        response.check_dimension(n)?;
        Ok(Self { graph, response, perturbation, epsilon })
    }

    /// Unperturbed flow `ẋ = −L F(x)`.
    pub fn unperturbed(graph: Graph, response: ResponseField) -> Self {
        let n = graph.node_count();
        Self::new(graph, response, Perturbation::zero(n), 0.0).expect("consistent dimensions")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn response(&self) -> &ResponseField {
        &self.response
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.graph.node_count()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.graph.clone(), self.response.clone(), self.perturbation.clone(), epsilon)
    }

    pub fn with_response(&self, response: ResponseField) -> Result<Self> {
        Self::new(self.graph.clone(), response, self.perturbation.clone(), self.epsilon)
    }

    pub fn with_perturbation(&self, perturbation: Perturbation) -> Result<Self> {
        Self::new(self.graph.clone(), self.response.clone(), perturbation, self.epsilon)
    }

    pub fn kernel<S: Scalar>(&self) -> SystemKernel<S> {
        let n = self.dim();
        let mut neighbors = vec![Vec::new(); n];
        for (i, j, w) in self.graph.edges() {
            let w = S::from_rational(&<BigRational as Scalar>::from_f64(w));
            neighbors[i].push((j, w.clone()));
            neighbors[j].push((i, w));
        }
        SystemKernel {
            n,
            neighbors,
            response: self.response.compile(),
            perturbation: self.perturbation.compile(),
            epsilon: S::from_f64(self.epsilon),
        }
    }

    /// `−L F(x) + ε H(x, Λ)` in the scalar `S`.
    pub fn vector_field_in<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim() {
            return Err(AlfError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut out = x.to_vec();
        self.kernel::<S>().eval(x, &mut out);
        Ok(out)
    }

    pub fn vector_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.vector_field_in(x)
    }

    /// Sampled necessary check for a regular perturbation: `⟨1, H(x, Λ)⟩ = 0`
    /// at every sample (to 1e-12). Not a proof.
    pub fn is_regular_perturbation(&self, samples: &[Vec<f64>]) -> bool {
        samples.iter().all(|x| self.perturbation.eval(x).iter().sum::<f64>().abs() <= 1e-12)
    }

    pub fn to_standard_form(&self, l: usize) -> Result<StandardFormSystem> {
        if l >= self.dim() {
            return Err(AlfError::InvalidIndex(l + 1));
        }
        Ok(StandardFormSystem { base: self.clone(), l })
    }

    /// Eigenvalues of the consensus Jacobian `−L f'(x*)`, ascending.
    pub fn consensus_jacobian_eigenvalues(&self, x_star: f64) -> Result<Vec<f64>> {
        let f = self
            .response
            .homogeneous_function()
            .ok_or_else(|| AlfError::UnsupportedStructure("consensus Jacobian needs a homogeneous polynomial response".into()))?;
        let slope = f.derivative(1).eval_f64(x_star);
        let mut ev: Vec<f64> = self.graph.laplacian().eigenvalues().into_iter().map(|m| -m * slope).collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

/// Sign of each consensus-Jacobian eigenvalue, with `|μ| < tol·scale` counted as zero.
pub fn sign_pattern(eigenvalues: &[f64], tol: f64) -> Vec<i8> {
    let scale = eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut s: Vec<i8> = eigenvalues
        .iter()
        .map(|&v| if v.abs() < tol * scale { 0 } else if v > 0.0 { 1 } else { -1 })
        .collect();
    s.sort();
    s
}

/// Vector field with all coefficients converted to `S`.
///
/// `(L F)ᵢ` is evaluated as `Σⱼ wᵢⱼ (Fᵢ − Fⱼ)`, which vanishes exactly on
/// consensus in any arithmetic.
#[derive(Clone)]
pub struct SystemKernel<S> {
    n: usize,
    neighbors: Vec<Vec<(usize, S)>>,
    response: CompiledField<S>,
    perturbation: CompiledPerturbation<S>,
    epsilon: S,
}

impl<S: Scalar> SystemKernel<S> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[S], out: &mut [S]) {
        let mut f = x.to_vec();
        self.response.eval_into(x, &mut f);
        let mut h = x.to_vec();
        self.perturbation.eval_into(x, &mut h);
        for i in 0..self.n {
            let mut acc = S::zero();
            for (j, w) in &self.neighbors[i] {
                acc = acc + w.clone() * (f[i].clone() - f[*j].clone());
            }
            out[i] = self.epsilon.clone() * h[i].clone() - acc;
        }
    }

    /// `H(x)` alone.
    pub fn perturbation_at(&self, x: &[S]) -> Vec<S> {
        let mut h = x.to_vec();
        self.perturbation.eval_into(x, &mut h);
        h
    }
}

impl<S: Real> Flow<S> for SystemKernel<S> {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, y: &[S], dy: &mut [S]) {
        self.eval(y, dy)
    }

    fn lift(&self, y: &[S]) -> Vec<S> {
        y.to_vec()
    }
}

/// Standard form in coordinates `(x_{j≠l}, k)` with `x_l = k − Σ_{j≠l} x_j`.
#[derive(Debug, Clone)]
pub struct StandardFormSystem {
    base: PerturbedSystem,
    l: usize,
}

impl StandardFormSystem {
    pub fn base(&self) -> &PerturbedSystem {
        &self.base
    }

    /// 0-based eliminated node.
    pub fn eliminated(&self) -> usize {
        self.l
    }

    /// Full state to `(x_{j≠l} in node order, k)`.
    pub fn reduce<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let k = x.iter().cloned().fold(S::zero(), |a, b| a + b);
        let mut y: Vec<S> = x.iter().enumerate().filter(|(j, _)| *j != self.l).map(|(_, v)| v.clone()).collect();
        y.push(k);
        y
    }

    /// `(x_{j≠l}, k)` back to the full state.
    pub fn lift<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let n = self.base.dim();
        let k = y[n - 1].clone();
        let rest = y[..n - 1].iter().cloned().fold(S::zero(), |a, b| a + b);
        let mut x = Vec::with_capacity(n);
        x.extend_from_slice(&y[..self.l]);
        x.push(k - rest);
        x.extend_from_slice(&y[self.l..n - 1]);
        x
    }

    pub fn kernel<S: Scalar>(&self) -> StandardKernel<S> {
        StandardKernel { full: self.base.kernel(), l: self.l, form: self.clone() }
    }

    /// Fast equations for `x_{j≠l}` followed by `k̇ = ε Σ gⱼ`.
    pub fn field<S: Scalar>(&self, y: &[S]) -> Result<Vec<S>> {
        if y.len() != self.base.dim() {
            return Err(AlfError::DimensionMismatch { expected: self.base.dim(), got: y.len() });
        }
        let mut out = y.to_vec();
        self.kernel::<S>().eval(y, &mut out);
        Ok(out)
    }
}

#[derive(Clone)]
pub struct StandardKernel<S> {
    full: SystemKernel<S>,
    l: usize,
    form: StandardFormSystem,
}

impl<S: Scalar> StandardKernel<S> {
    pub fn eval(&self, y: &[S], out: &mut [S]) {
        let x = self.form.lift(y);
        let mut dx = x.clone();
        self.full.eval(&x, &mut dx);
        let h = self.full.perturbation_at(&x);
        let n = x.len();
        let mut idx = 0;
        for (j, v) in dx.into_iter().enumerate() {
            if j != self.l {
                out[idx] = v;
                idx += 1;
            }
        }
        let sum_h = h.into_iter().fold(S::zero(), |a, b| a + b);
        out[n - 1] = self.full.epsilon.clone() * sum_h;
    }
}

impl<S: Real> Flow<S> for StandardKernel<S> {
    fn dim(&self) -> usize {
        self.full.n
    }

    fn rhs(&self, y: &[S], dy: &mut [S]) {
        self.eval(y, dy)
    }

    fn lift(&self, y: &[S]) -> Vec<S> {
        self.form.lift(y)
    }
}

/// JSON description of a perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    /// Explicit constant components.
    Constant { values: Vec<f64> },
    /// `c · 1`.
    Uniform { value: f64 },
    /// Seeded uniform constants in `[lo, hi)`.
    Random { seed: u64, lo: f64, hi: f64 },
    /// `h` on every node except the 1-based node `l`, which gets `h_tilde`.
    Plane { h: f64, h_tilde: f64, l: usize },
}

impl PerturbationSpec {
    pub fn build(&self, n: usize) -> Result<Perturbation> {
        match self {
            PerturbationSpec::Constant { values } => {
                if values.len() != n {
                    return Err(AlfError::DimensionMismatch { expected: n, got: values.len() });
                }
                Perturbation::constant(values.clone())
            }
            PerturbationSpec::Uniform { value } => Perturbation::uniform(n, *value),
            PerturbationSpec::Random { seed, lo, hi } => Perturbation::random_constant(n, *seed, *lo, *hi),
            PerturbationSpec::Plane { h, h_tilde, l } => {
                if *l == 0 || *l > n {
                    return Err(AlfError::InvalidIndex(*l));
                }
                let mut v = vec![*h; n];
                v[l - 1] = *h_tilde;
                Perturbation::constant(v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{Polynomial, ResponseFunction};

    fn square() -> ResponseField {
        ResponseField::homogeneous(ResponseFunction::from_coeffs(&[0.0, 0.0, 1.0]).unwrap())
    }

    fn ex1(eps: f64) -> PerturbedSystem {
        PerturbedSystem::new(
            Graph::complete(3).unwrap(),
            ResponseField::homogeneous(ResponseFunction::double_well()),
            Perturbation::uniform(3, -1.0).unwrap(),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn consensus_is_equilibrium_without_perturbation() {
        let sys = ex1(0.0);
        assert_eq!(sys.vector_field(&[0.3, 0.3, 0.3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn k3_square_hand_value() {
        // F(1,−1,0) = (1,1,0); L·(1,1,0) = (1,1,−2)
        let sys = PerturbedSystem::unperturbed(Graph::complete(3).unwrap(), square());
        assert_eq!(sys.vector_field(&[1.0, -1.0, 0.0]).unwrap(), vec![-1.0, -1.0, 2.0]);
    }

    #[test]
    fn unperturbed_field_is_orthogonal_to_ones() {
        let mut rng = SeededRng::new(5);
        let sys = PerturbedSystem::unperturbed(
            Graph::complete(6).unwrap().with_random_weights(1, 0.5, 3.0).unwrap(),
            ResponseField::homogeneous(ResponseFunction::double_well()),
        );
        for _ in 0..50 {
            let x = rng.uniform_vec(6, -2.0, 2.0);
            let v = sys.vector_field(&x).unwrap();
            assert!(v.iter().sum::<f64>().abs() < 1e-12);
            // exactly zero in rational arithmetic
            let xr: Vec<BigRational> = x.iter().map(|&v| <BigRational as Scalar>::from_f64(v)).collect();
            let vr = sys.vector_field_in(&xr).unwrap();
            assert_eq!(vr.into_iter().fold(<BigRational as Zero>::zero(), |a, b| a + b), <BigRational as Zero>::zero());
        }
    }

    use num_traits::Zero;

    #[test]
    fn dimension_checks() {
        let sys = ex1(0.1);
        assert!(sys.vector_field(&[1.0, 2.0]).is_err());
        assert!(PerturbedSystem::new(Graph::complete(3).unwrap(), square(), Perturbation::zero(2), 0.1).is_err());
        assert!(PerturbedSystem::new(Graph::complete(3).unwrap(), square(), Perturbation::zero(3), -0.1).is_err());
    }

    #[test]
    fn regular_perturbation_check() {
        let g = Graph::complete(4).unwrap();
        let samples = vec![vec![0.0; 4], vec![1.0, 2.0, 3.0, 4.0]];
        let make = |h: Vec<f64>| PerturbedSystem::new(g.clone(), square(), Perturbation::constant(h).unwrap(), 0.1).unwrap();
        assert!(make(vec![1.0, -1.0, 0.0, 0.0]).is_regular_perturbation(&samples));
        assert!(!make(vec![-1.0; 4]).is_regular_perturbation(&samples));
        assert!(make(vec![0.0; 4]).is_regular_perturbation(&samples));
    }

    #[test]
    fn standard_form_examples() {
        let sf = ex1(0.1).to_standard_form(2).unwrap();
        // x₃ = k − x₁ − x₂
        assert_eq!(sf.lift(&[0.5, 0.25, 2.0]), vec![0.5, 0.25, 1.25]);
        let y = sf.field(&[0.5, 0.25, 2.0]).unwrap();
        assert!((y[2] - (-3.0 * 0.1)).abs() < 1e-15);
        let y0 = ex1(0.0).to_standard_form(0).unwrap().field(&[0.9, -0.4, 1.0]).unwrap();
        assert_eq!(y0[2], 0.0);
        assert!(ex1(0.1).to_standard_form(3).is_err());
    }

    #[test]
    fn standard_form_matches_full_field() {
        let mut rng = SeededRng::new(6);
        let g = Graph::complete(5).unwrap();
        for _ in 0..20 {
            let h = Perturbation::random_constant(5, rng.next_u64(), -1.0, 1.0).unwrap();
            let sys = PerturbedSystem::new(g.clone(), ResponseField::homogeneous(ResponseFunction::double_well()), h, 0.05).unwrap();
            let l = rng.below(5);
            let sf = sys.to_standard_form(l).unwrap();
            let x = rng.uniform_vec(5, -1.0, 1.0);
            let y = sf.reduce(&x);
            let back = sf.lift(&y);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-14);
            }
            let full = sys.vector_field(&back).unwrap();
            let red = sf.field(&y).unwrap();
            let mut idx = 0;
            for (j, v) in full.iter().enumerate() {
                if j != l {
                    assert!((v - red[idx]).abs() < 1e-12);
                    idx += 1;
                }
            }
            assert!((full.iter().sum::<f64>() - red[4]).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_shift_leaves_field_unchanged() {
        let mut rng = SeededRng::new(7);
        let sys = PerturbedSystem::unperturbed(Graph::complete(4).unwrap(), square());
        let shifted = sys.with_response(sys.response().gauge_shift(&Polynomial::from_i64(&[3]))).unwrap();
        let mean = sys.with_response(sys.response().gauge_shift(&Polynomial::from_i64(&[0, 1]))).unwrap();
        for _ in 0..100 {
            let x = rng.uniform_vec(4, -3.0, 3.0);
            let a = sys.vector_field(&x).unwrap();
            for other in [&shifted, &mean] {
                let b = other.vector_field(&x).unwrap();
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_perturbation_is_reproducible() {
        let a = Perturbation::random_constant(10, 99, 0.0, 1.0).unwrap();
        let b = Perturbation::random_constant(10, 99, 0.0, 1.0).unwrap();
        assert_eq!(a.constant_values(), b.constant_values());
        assert!(a.constant_values().unwrap().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn perturbation_spec_json() {
        let p: PerturbationSpec = serde_json::from_str(r#"{"type":"plane","h":-1,"h_tilde":0,"l":3}"#).unwrap();
        assert_eq!(p.build(3).unwrap().constant_values().unwrap(), &[-1.0, -1.0, 0.0]);
        assert!(serde_json::from_str::<PerturbationSpec>(r#"{"type":"uniform","value":1,"x":2}"#).is_err());
        assert!(PerturbationSpec::Constant { values: vec![1.0] }.build(3).is_err());
    }

    #[test]
    fn weighted_and_unweighted_consensus_sign_patterns() {
        let g = Graph::complete(6).unwrap();
        let gw = g.with_random_weights(3, 1.0, 5.0).unwrap();
        let f = ResponseField::homogeneous(ResponseFunction::double_well());
        let a = PerturbedSystem::unperturbed(g, f.clone());
        let b = PerturbedSystem::unperturbed(gw, f);
        for x in [-1.5, -0.5, 0.0, 0.5, 1.0, 1.5] {
            let sa = sign_pattern(&a.consensus_jacobian_eigenvalues(x).unwrap(), 1e-8);
            let sb = sign_pattern(&b.consensus_jacobian_eigenvalues(x).unwrap(), 1e-8);
            assert_eq!(sa, sb);
        }
    }
}
