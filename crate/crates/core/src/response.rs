//! Response functions `f` and the response field `F(x) = (f(x₁), …, f(xₙ))`.
//!
//! Coefficients are stored exactly as rationals. Evaluation converts them once
//! to the requested scalar via [`ResponseFunction::compile`]; when a factored
//! form is known it is preferred, since it keeps full relative accuracy close
//! to the roots.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AlfError, Result};
use crate::precision::Scalar;

fn rat(v: f64) -> BigRational {
    <BigRational as Scalar>::from_f64(v)
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Dense univariate polynomial `Σ aⱼ xʲ` over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_f64(coeffs: &[f64]) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(AlfError::InvalidResponse(format!("non-finite coefficient {c}")));
        }
        Ok(Self::new(coeffs.iter().map(|&c| rat(c)).collect()))
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `x − r`.
    pub fn linear_factor(r: BigRational) -> Self {
        Self::new(vec![-r, <BigRational as One>::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(<BigRational as Zero>::zero)
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    /// Horner evaluation in the scalar `S`.
    pub fn eval<S: Scalar>(&self, x: &S) -> S {
        horner(&self.coeffs.iter().map(S::from_rational).collect::<Vec<_>>(), x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.eval(&x)
    }

    pub fn derivative(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        for _ in 0..order {
            if c.is_empty() {
                break;
            }
            c = c.iter().enumerate().skip(1).map(|(j, a)| a * BigRational::from_integer(j.into())).collect();
        }
        Self::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut c = vec![<BigRational as Zero>::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|j| self.coeff(j) + other.coeff(j)).collect())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(<BigRational as One>::one()), |acc, _| acc.mul(self))
    }

    /// `p(a + b·x)` as a polynomial in `x`.
    pub fn compose_linear(&self, a: &BigRational, b: &BigRational) -> Self {
        let lin = Self::new(vec![a.clone(), b.clone()]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Self::constant(c.clone()));
        }
        acc
    }

    /// All odd-degree coefficients vanish, i.e. `p(−x) = p(x)` exactly.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(j, c)| j % 2 == 0 || c.is_zero())
    }

    /// Coefficients `r[l][m]` of `R(x, y) = Σ r[l][m] yˡ xᵐ` with
    /// `p(x + y) − p(x) = y · R(x, y)`, from the binomial expansion.
    pub fn regularized_difference(&self) -> BivariatePolynomial {
        let deg = self.coeffs.len();
        let mut r = vec![vec![<BigRational as Zero>::zero(); deg.max(1)]; deg.max(1)];
        for (j, a) in self.coeffs.iter().enumerate() {
            for l in 0..j {
                r[l][j - l - 1] += a * BigRational::from_integer(binomial(j, l + 1));
            }
        }
        BivariatePolynomial { coeffs: r }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = Signed::abs(c);
            match (j, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => write!(f, "x")?,
                (1, false) => write!(f, "{a}x")?,
                (_, true) => write!(f, "x^{j}")?,
                (_, false) => write!(f, "{a}x^{j}")?,
            }
        }
        Ok(())
    }
}

/// `Σ c[l][m] yˡ xᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePolynomial {
    coeffs: Vec<Vec<BigRational>>,
}

impl BivariatePolynomial {
    pub fn coeffs(&self) -> &[Vec<BigRational>] {
        &self.coeffs
    }

    pub fn eval<S: Scalar>(&self, x: &S, y: &S) -> S {
        let rows: Vec<S> = self
            .coeffs
            .iter()
            .map(|row| horner(&row.iter().map(S::from_rational).collect::<Vec<_>>(), x))
            .collect();
        horner(&rows, y)
    }

    /// Restriction to the line `y = a + b·x`, as a polynomial in `x`.
    pub fn on_line(&self, a: &BigRational, b: &BigRational) -> Polynomial {
        let y = Polynomial::new(vec![a.clone(), b.clone()]);
        let mut acc = Polynomial::zero();
        for row in self.coeffs.iter().rev() {
            acc = acc.mul(&y).add(&Polynomial::new(row.clone()));
        }
        acc
    }

    /// Restriction to fixed `x`, as a polynomial in `y`.
    pub fn at_x(&self, x: &BigRational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|row| Polynomial::new(row.clone()).eval(x)).collect())
    }
}

pub(crate) fn horner<S: Scalar>(coeffs: &[S], x: &S) -> S {
    let mut acc = S::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x.clone() + c.clone();
    }
    acc
}

/// `scale · Π (x − rᵢ)^{mᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factored {
    pub scale: BigRational,
    pub roots: Vec<(BigRational, u32)>,
}

/// Scalar polynomial response function.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFunction {
    poly: Polynomial,
    factored: Option<Factored>,
}

impl ResponseFunction {
    pub fn from_polynomial(poly: Polynomial) -> Self {
        Self { poly, factored: None }
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        Ok(Self::from_polynomial(Polynomial::from_f64(coeffs)?))
    }

    /// `scale · Π (x − r)^m`; the expanded form is computed exactly.
    pub fn from_roots(scale: f64, roots: &[(f64, u32)]) -> Result<Self> {
        if !scale.is_finite() || roots.iter().any(|(r, _)| !r.is_finite()) {
            return Err(AlfError::InvalidResponse("non-finite root or scale".into()));
        }
        let scale_r = rat(scale);
        let roots: Vec<(BigRational, u32)> = roots.iter().filter(|(_, m)| *m > 0).map(|&(r, m)| (rat(r), m)).collect();
        let mut poly = Polynomial::constant(scale_r.clone());
        for (r, m) in &roots {
            poly = poly.mul(&Polynomial::linear_factor(r.clone()).pow(*m));
        }
        let factored = if scale == 0.0 { None } else { Some(Factored { scale: scale_r, roots }) };
        Ok(Self { poly, factored })
    }

    /// `(x − 1)²(x + 1)²`.
    pub fn double_well() -> Self {
        Self::from_roots(1.0, &[(1.0, 2), (-1.0, 2)]).expect("finite")
    }

    /// `(x − λ)(x + λ)²`.
    pub fn family_ex3a(lambda: f64) -> Result<Self> {
        Self::from_roots(1.0, &[(lambda, 1), (-lambda, 2)])
    }

    /// `(x − λ)²(x + λ)²`.
    pub fn family_ex3b(lambda: f64) -> Result<Self> {
        Self::from_roots(1.0, &[(lambda, 2), (-lambda, 2)])
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn factored(&self) -> Option<&Factored> {
        self.factored.as_ref()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree().unwrap_or(0)
    }

    /// Horner evaluation of the expanded form.
    pub fn eval<S: Scalar>(&self, x: &S) -> S {
        self.poly.eval(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.poly.eval_f64(x)
    }

    /// Product evaluation when a factored form is known, Horner otherwise.
    pub fn eval_factored<S: Scalar>(&self, x: &S) -> S {
        self.compile::<S>().eval(x)
    }

    pub fn derivative(&self, order: usize) -> ResponseFunction {
        Self::from_polynomial(self.poly.derivative(order))
    }

    pub fn is_even(&self) -> bool {
        self.poly.is_even()
    }

    pub fn compile<S: Scalar>(&self) -> CompiledResponse<S> {
        CompiledResponse {
            coeffs: self.poly.coeffs().iter().map(S::from_rational).collect(),
            factored: self.factored.as_ref().map(|f| {
                (S::from_rational(&f.scale), f.roots.iter().map(|(r, m)| (S::from_rational(r), *m)).collect())
            }),
        }
    }
}

impl fmt::Display for ResponseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

/// Response function with coefficients converted to `S`.
#[derive(Debug, Clone)]
pub struct CompiledResponse<S> {
    coeffs: Vec<S>,
    #[allow(clippy::type_complexity)]
    factored: Option<(S, Vec<(S, u32)>)>,
}

impl<S: Scalar> CompiledResponse<S> {
    pub fn eval(&self, x: &S) -> S {
        match &self.factored {
            Some((scale, roots)) => {
                let mut acc = scale.clone();
                for (r, m) in roots {
                    let d = x.clone() - r.clone();
                    for _ in 0..*m {
                        acc = acc * d.clone();
                    }
                }
                acc
            }
            None => horner(&self.coeffs, x),
        }
    }
}

/// Scalar callback used for non-polynomial responses; evaluated in double precision.
pub type SampledFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ResponseKind {
    Homogeneous(ResponseFunction),
    Heterogeneous(Vec<ResponseFunction>),
    Sampled(SampledFn),
}

impl fmt::Debug for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseKind::Homogeneous(r) => f.debug_tuple("Homogeneous").field(r).finish(),
            ResponseKind::Heterogeneous(r) => f.debug_tuple("Heterogeneous").field(r).finish(),
            ResponseKind::Sampled(_) => f.write_str("Sampled(..)"),
        }
    }
}

/// Per-node response assignment plus an optional gauge term `h(⟨x⟩)·1`.
#[derive(Debug, Clone)]
pub struct ResponseField {
    kind: ResponseKind,
    gauge: Option<Polynomial>,
}

impl ResponseField {
    pub fn homogeneous(f: ResponseFunction) -> Self {
        Self { kind: ResponseKind::Homogeneous(f), gauge: None }
    }

    pub fn heterogeneous(fs: Vec<ResponseFunction>) -> Self {
        Self { kind: ResponseKind::Heterogeneous(fs), gauge: None }
    }

    /// Smooth non-polynomial `f`; usable for simulation only.
    pub fn sampled(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: ResponseKind::Sampled(Arc::new(f)), gauge: None }
    }

    pub fn kind(&self) -> &ResponseKind {
        &self.kind
    }

    pub fn gauge(&self) -> Option<&Polynomial> {
        self.gauge.as_ref()
    }

    pub fn is_homogeneous(&self) -> bool {
        !matches!(self.kind, ResponseKind::Heterogeneous(_))
    }

    /// The shared polynomial response, if there is one.
    pub fn homogeneous_function(&self) -> Option<&ResponseFunction> {
        match &self.kind {
            ResponseKind::Homogeneous(f) => Some(f),
            _ => None,
        }
    }

    /// `F + h(⟨x⟩)·1`. The flow `−LF` is unchanged because `1 ∈ ker L`.
    pub fn gauge_shift(&self, h: &Polynomial) -> Self {
        let gauge = match &self.gauge {
            Some(g) => g.add(h),
            None => h.clone(),
        };
        Self { kind: self.kind.clone(), gauge: if gauge.is_zero() { None } else { Some(gauge) } }
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match &self.kind {
            ResponseKind::Heterogeneous(fs) if fs.len() != n => {
                Err(AlfError::DimensionMismatch { expected: n, got: fs.len() })
            }
            _ => Ok(()),
        }
    }

    pub fn compile<S: Scalar>(&self) -> CompiledField<S> {
        let kind = match &self.kind {
            ResponseKind::Homogeneous(f) => CompiledKind::Homogeneous(f.compile()),
            ResponseKind::Heterogeneous(fs) => CompiledKind::Heterogeneous(fs.iter().map(|f| f.compile()).collect()),
            ResponseKind::Sampled(f) => CompiledKind::Sampled(f.clone()),
        };
        CompiledField {
            kind,
            gauge: self.gauge.as_ref().map(|g| g.coeffs().iter().map(S::from_rational).collect()),
        }
    }

    /// `F(x)` evaluated in `S`.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut out = x.to_vec();
        self.compile::<S>().eval_into(x, &mut out);
        out
    }
}

#[derive(Clone)]
enum CompiledKind<S> {
    Homogeneous(CompiledResponse<S>),
    Heterogeneous(Vec<CompiledResponse<S>>),
    Sampled(SampledFn),
}

#[derive(Clone)]
pub struct CompiledField<S> {
    kind: CompiledKind<S>,
    gauge: Option<Vec<S>>,
}

impl<S: Scalar> CompiledField<S> {
    pub fn eval_into(&self, x: &[S], out: &mut [S]) {
        match &self.kind {
            CompiledKind::Homogeneous(f) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = f.eval(xi);
                }
            }
            CompiledKind::Heterogeneous(fs) => {
                for ((o, xi), f) in out.iter_mut().zip(x).zip(fs) {
                    *o = f.eval(xi);
                }
            }
            CompiledKind::Sampled(f) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = S::from_f64(f(xi.to_f64()));
                }
            }
        }
        if let Some(g) = &self.gauge {
            let n = S::from_f64(x.len() as f64);
            let mean = x.iter().cloned().fold(S::zero(), |a, b| a + b) / n;
            let shift = horner(g, &mean);
            for o in out.iter_mut() {
                *o = o.clone() + shift.clone();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `(x − λ)(x + λ)²`
    Ex3a,
    /// `(x − λ)²(x + λ)²`
    Ex3b,
}

impl Family {
    pub fn instantiate(self, lambda: f64) -> Result<ResponseFunction> {
        match self {
            Family::Ex3a => ResponseFunction::family_ex3a(lambda),
            Family::Ex3b => ResponseFunction::family_ex3b(lambda),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Ex3a => "ex3a",
            Family::Ex3b => "ex3b",
        }
    }
}

/// JSON forms: `{"coeffs": […]}`, `{"roots": [[r, m], …], "scale": c}` or
/// `{"family": "ex3a"|"ex3b", "lambda": λ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseSpec {
    Coeffs {
        coeffs: Vec<f64>,
    },
    Roots {
        roots: Vec<(f64, u32)>,
        #[serde(default = "one")]
        scale: f64,
    },
    Family {
        family: Family,
        lambda: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ResponseSpec {
    pub fn double_well() -> Self {
        ResponseSpec::Roots { roots: vec![(1.0, 2), (-1.0, 2)], scale: 1.0 }
    }

    pub fn build(&self) -> Result<ResponseFunction> {
        match self {
            ResponseSpec::Coeffs { coeffs } => ResponseFunction::from_coeffs(coeffs),
            ResponseSpec::Roots { roots, scale } => ResponseFunction::from_roots(*scale, roots),
            ResponseSpec::Family { family, lambda } => family.instantiate(*lambda),
        }
    }

    /// The same spec with λ replaced, for family responses.
    pub fn with_lambda(&self, lambda: f64) -> Option<Self> {
        match self {
            ResponseSpec::Family { family, .. } => Some(ResponseSpec::Family { family: *family, lambda }),
            _ => None,
        }
    }
}

/// Rejects keys outside the accepted response forms, which an untagged
/// enum cannot do by itself.
pub fn validate_spec_json(v: &serde_json::Value) -> Result<()> {
    let allowed: &[&[&str]] = &[&["coeffs"], &["roots", "scale"], &["family", "lambda"]];
    let obj = v.as_object().ok_or_else(|| AlfError::Config("response must be an object".into()))?;
    let ok = allowed.iter().any(|keys| {
        obj.keys().all(|k| keys.contains(&k.as_str())) && obj.contains_key(keys[0])
    });
    if ok {
        Ok(())
    } else {
        Err(AlfError::Config(format!("unrecognised response keys {:?}", obj.keys().collect::<Vec<_>>())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn ri(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    /// Symbolic expansion of (x²−1)² by hand: x⁴ − 2x² + 1.
    fn expanded_double_well() -> Polynomial {
        Polynomial::from_i64(&[1, 0, -2, 0, 1])
    }

    #[test]
    fn factored_expands_exactly() {
        assert_eq!(ResponseFunction::double_well().polynomial(), &expanded_double_well());
        // (x−λ)(x+λ)² = x³ + λx² − λ²x − λ³ at λ = 1/2
        let f = ResponseFunction::family_ex3a(0.5).unwrap();
        assert_eq!(f.polynomial(), &Polynomial::from_f64(&[-0.125, -0.25, 0.5, 1.0]).unwrap());
    }

    #[test]
    fn eval_examples() {
        let f = ResponseFunction::double_well();
        assert_eq!(f.eval_f64(1.0), 0.0);
        assert_eq!(f.eval_f64(0.0), 1.0);
        assert_eq!(f.eval_factored(&1.0f64), 0.0);
        let sq = ResponseFunction::from_coeffs(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sq.eval_f64(-2.0), 4.0);
    }

    #[test]
    fn factored_and_expanded_agree() {
        let mut rng = SeededRng::new(11);
        let f = ResponseFunction::from_roots(1.5, &[(0.3, 2), (-1.2, 1), (2.0, 1)]).unwrap();
        for _ in 0..200 {
            let x = rng.uniform(-3.0, 3.0);
            let a = f.eval_f64(x);
            let b = f.eval_factored(&x);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn derivative_examples() {
        let f = ResponseFunction::double_well();
        assert_eq!(f.derivative(1).polynomial(), &Polynomial::from_i64(&[0, -4, 0, 4]));
        assert_eq!(f.derivative(2).polynomial(), &Polynomial::from_i64(&[-4, 0, 12]));
        assert!(Polynomial::from_i64(&[7]).derivative(1).is_zero());
        assert_eq!(f.derivative(1).derivative(1), f.derivative(2));
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = SeededRng::new(12);
        for _ in 0..100 {
            let deg = 1 + rng.below(6);
            let c: Vec<f64> = (0..=deg).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let p = Polynomial::from_f64(&c).unwrap();
            let dp = p.derivative(1);
            let x = rng.uniform(-1.5, 1.5);
            let h = 1e-6;
            let fd = (p.eval_f64(x + h) - p.eval_f64(x - h)) / (2.0 * h);
            let exact = dp.eval_f64(x);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn evenness() {
        assert!(Polynomial::from_i64(&[0, 0, 1]).is_even());
        assert!(ResponseFunction::double_well().is_even());
        assert!(!ResponseFunction::family_ex3a(0.5).unwrap().is_even());
        assert!(ResponseFunction::family_ex3b(0.5).unwrap().is_even());
    }

    #[test]
    fn regularized_difference_reproduces_binomial_sum() {
        let mut rng = SeededRng::new(13);
        for _ in 0..30 {
            let deg = rng.below(7);
            let c: Vec<i64> = (0..=deg).map(|_| rng.below(11) as i64 - 5).collect();
            let p = Polynomial::from_i64(&c);
            let r = p.regularized_difference();
            for _ in 0..5 {
                let x = BigRational::new((rng.below(21) as i64 - 10).into(), (1 + rng.below(5) as i64).into());
                let y = BigRational::new((rng.below(21) as i64 - 10).into(), (1 + rng.below(5) as i64).into());
                let lhs = p.eval(&(x.clone() + y.clone())) - p.eval(&x);
                let rhs = y.clone() * r.eval(&x, &y);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn compose_linear_and_restrictions() {
        // p(x) = x², p(1 + 2x) = 4x² + 4x + 1
        let p = Polynomial::from_i64(&[0, 0, 1]);
        assert_eq!(p.compose_linear(&ri(1), &ri(2)), Polynomial::from_i64(&[1, 4, 4]));
        // R for x² is 2x + y; on y = 3 − 3x: 2x + 3 − 3x = 3 − x
        let r = p.regularized_difference();
        assert_eq!(r.on_line(&ri(3), &ri(-3)), Polynomial::from_i64(&[3, -1]));
        assert_eq!(r.at_x(&ri(2)), Polynomial::from_i64(&[4, 1]));
    }

    #[test]
    fn gauge_shift_adds_mean_term() {
        let f = ResponseField::homogeneous(ResponseFunction::from_coeffs(&[0.0, 0.0, 1.0]).unwrap());
        let x = [1.0, 2.0, 3.0];
        assert_eq!(f.gauge_shift(&Polynomial::zero()).eval(&x), f.eval(&x));
        let shifted = f.gauge_shift(&Polynomial::from_i64(&[0, 1]));
        assert_eq!(shifted.eval(&x), vec![3.0, 6.0, 11.0]);
    }

    #[test]
    fn accepted_json_forms() {
        let a: ResponseSpec = serde_json::from_str(r#"{"coeffs":[1,0,-2,0,1]}"#).unwrap();
        let b: ResponseSpec = serde_json::from_str(r#"{"roots":[[1,2],[-1,2]],"scale":1}"#).unwrap();
        let c: ResponseSpec = serde_json::from_str(r#"{"family":"ex3b","lambda":1}"#).unwrap();
        let fa = a.build().unwrap();
        assert_eq!(fa.polynomial(), b.build().unwrap().polynomial());
        assert_eq!(fa.polynomial(), c.build().unwrap().polynomial());
        assert!(validate_spec_json(&serde_json::json!({"coeffs":[1], "lambda": 2})).is_err());
        assert!(validate_spec_json(&serde_json::json!({"roots":[[1,1]]})).is_ok());
    }

    #[test]
    fn display() {
        assert_eq!(expanded_double_well().to_string(), "x^4 - 2x^2 + 1");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }
}
