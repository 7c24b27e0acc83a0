//! Permutation groups acting on node indices, their fixed-point spaces, and
//! symmetry checks on ALF vector fields.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Perturbation, PerturbedSystem};
use crate::error::{AlfError, Result};
use crate::graph::Permutation;
use crate::precision::Scalar;

/// Largest number of elements enumerated for order queries.
pub const GROUP_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationGroup {
    n: usize,
    generators: Vec<Permutation>,
}

impl PermutationGroup {
    pub fn new(n: usize, generators: Vec<Permutation>) -> Result<Self> {
        if n == 0 {
            return Err(AlfError::InvalidSize(0));
        }
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(AlfError::DimensionMismatch { expected: n, got: g.len() });
        }
        Ok(Self { n, generators })
    }

    pub fn trivial(n: usize) -> Result<Self> {
        Self::new(n, vec![])
    }

    /// `ℤₙ` generated by the shift `i ↦ i + 1 mod n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(n, vec![Permutation::cyclic_shift(n)])
    }

    /// Symmetries of the `n`-gon: shift and reflection.
    pub fn dihedral(n: usize) -> Result<Self> {
        Self::new(n, vec![Permutation::cyclic_shift(n), Permutation::reversal(n)])
    }

    /// `𝔖ₙ` generated by adjacent transpositions.
    pub fn symmetric(n: usize) -> Result<Self> {
        let gens = (0..n.saturating_sub(1)).map(|i| Permutation::transposition(n, i, i + 1)).collect::<Result<_>>()?;
        Self::new(n, gens)
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Breadth-first closure under right multiplication by generators.
    /// Stops early once `stop_at` elements are known.
    fn closure(&self, cap: usize, stop_at: Option<usize>) -> Result<Vec<Permutation>> {
        let id = Permutation::identity(self.n);
        let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for s in &self.generators {
                let h = g.compose(s);
                if seen.insert(h.clone()) {
                    if seen.len() > cap {
                        return Err(AlfError::GroupCapExceeded(cap));
                    }
                    order.push(h.clone());
                    if stop_at.is_some_and(|m| order.len() >= m) {
                        return Ok(order);
                    }
                    queue.push_back(h);
                }
            }
        }
        Ok(order)
    }

    /// Every element, identity first.
    pub fn elements(&self, cap: usize) -> Result<Vec<Permutation>> {
        self.closure(cap, None)
    }

    pub fn order(&self, cap: usize) -> Result<usize> {
        Ok(self.closure(cap, None)?.len())
    }

    /// `Ord(G) ≥ m`, enumerating at most `m` elements.
    pub fn order_at_least(&self, m: usize, cap: usize) -> Result<bool> {
        Ok(self.closure(cap, Some(m))?.len() >= m)
    }

    /// Orbits of the action on `{0..n−1}`, each sorted, ordered by smallest element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for g in &self.generators {
            for i in 0..self.n {
                let (a, b) = (find(&mut parent, i), find(&mut parent, g.image(i)));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; self.n];
        for i in 0..self.n {
            let r = find(&mut parent, i);
            if index[r] == usize::MAX {
                index[r] = classes.len();
                classes.push(vec![]);
            }
            classes[index[r]].push(i);
        }
        classes
    }
}

/// JSON form `{"generators": [[p(1), …, p(n)], …]}` (1-based images).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub generators: Vec<Permutation>,
}

impl GroupSpec {
    pub fn build(&self, n: usize) -> Result<PermutationGroup> {
        PermutationGroup::new(n, self.generators.clone())
    }
}

impl From<&PermutationGroup> for GroupSpec {
    fn from(g: &PermutationGroup) -> Self {
        Self { generators: g.generators.clone() }
    }
}

/// `Fix(G)` as the partition of nodes into classes forced equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointSpace {
    pub classes: Vec<Vec<usize>>,
}

impl FixedPointSpace {
    pub fn dim(&self) -> usize {
        self.classes.len()
    }

    /// Single class: `Fix(G)` is the consensus space.
    pub fn is_consensus(&self) -> bool {
        self.classes.len() == 1
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.classes.iter().all(|c| c.iter().all(|&i| (x[i] - x[c[0]]).abs() <= tol))
    }

    /// Orthogonal projection: class-wise averages.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for c in &self.classes {
            let m = c.iter().map(|&i| x[i]).sum::<f64>() / c.len() as f64;
            for &i in c {
                out[i] = m;
            }
        }
        out
    }

    /// 1-based classes for display.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.classes.iter().map(|c| c.iter().map(|i| i + 1).collect()).collect()
    }
}

pub fn fixed_point_space(group: &PermutationGroup, n: usize) -> Result<FixedPointSpace> {
    if group.degree() != n {
        return Err(AlfError::DimensionMismatch { expected: n, got: group.degree() });
    }
    Ok(FixedPointSpace { classes: group.orbits() })
}

/// `X(σx) − σX(x)` for the full vector field, in `S`.
pub fn equivariance_defect<S: Scalar>(sys: &PerturbedSystem, p: &Permutation, x: &[S]) -> Result<Vec<S>> {
    if p.len() != sys.dim() {
        return Err(AlfError::DimensionMismatch { expected: sys.dim(), got: p.len() });
    }
    let lhs = sys.vector_field_in(&p.act(x))?;
    let rhs = p.act(&sys.vector_field_in(x)?);
    Ok(lhs.into_iter().zip(rhs).map(|(a, b)| a - b).collect())
}

/// `‖X(σx) − σX(x)‖∞ ≤ tol` at every sample.
pub fn check_equivariance(sys: &PerturbedSystem, p: &Permutation, samples: &[Vec<f64>], tol: f64) -> Result<bool> {
    let defects: Vec<f64> = samples
        .par_iter()
        .map(|x| equivariance_defect(sys, p, x).map(|d| d.iter().fold(0.0f64, |m, v| m.max(v.abs()))))
        .collect::<Result<_>>()?;
    Ok(defects.into_iter().all(|d| d <= tol))
}

/// Equilibrium candidate obtained from consensus by flipping signs.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedEquilibrium<S> {
    pub state: Vec<S>,
    /// `‖−L F(x)‖∞`.
    pub residual: S,
}

/// `x = (s₁c, …, sₙc)` and the residual of the unperturbed field there.
pub fn symmetry_generated_equilibria<S: Scalar>(sys: &PerturbedSystem, c: S, signs: &[i8]) -> Result<SignedEquilibrium<S>> {
    let n = sys.dim();
    if signs.len() != n {
        return Err(AlfError::DimensionMismatch { expected: n, got: signs.len() });
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(AlfError::Config("signs must be +1 or -1".into()));
    }
    let nontrivial = signs.iter().any(|&s| s == -1);
    if nontrivial {
        let even = sys.response().homogeneous_function().is_some_and(|f| f.is_even());
        if !even {
            return Err(AlfError::UnsupportedSymmetry("sign flips need an even homogeneous response".into()));
        }
    }
    let state: Vec<S> = signs.iter().map(|&s| if s == 1 { c.clone() } else { S::zero() - c.clone() }).collect();
    let unperturbed = sys.with_perturbation(Perturbation::zero(n))?.with_epsilon(0.0)?;
    let v = unperturbed.vector_field_in(&state)?;
    let residual = v.iter().fold(S::zero(), |m, x| {
        let a = x.magnitude();
        if a > m {
            a
        } else {
            m
        }
    });
    Ok(SignedEquilibrium { state, residual })
}

/// Conditions under which the consensus space is a trajectory of the perturbed flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanardCertificate {
    /// (a) every generator commutes with the Laplacian.
    pub automorphisms: bool,
    /// (b) `Ord(G) ≥ n` or `Fix(G)` is the consensus space.
    pub large_enough: bool,
    /// (c) `εH` is equivariant under every generator.
    pub perturbation_equivariant: bool,
    /// (d) `H ≠ 0` at the sampled consensus points.
    pub nonzero_on_consensus: bool,
    pub verdict: bool,
}

/// Checks the maximal-canard conditions for user-supplied symmetry generators.
/// Consensus test points are the componentwise means of `samples`.
pub fn maximal_canard_certificate(sys: &PerturbedSystem, group: &PermutationGroup, samples: &[Vec<f64>]) -> Result<CanardCertificate> {
    let n = sys.dim();
    if group.degree() != n {
        return Err(AlfError::DimensionMismatch { expected: n, got: group.degree() });
    }
    let mut automorphisms = true;
    for g in group.generators() {
        automorphisms &= sys.graph().commutes_with_laplacian(g, 1e-12)?;
    }
    let single = fixed_point_space(group, n)?.is_consensus();
    let large_enough = single || group.order_at_least(n, GROUP_CAP)?;
    let h = sys.perturbation();
    let eps = sys.epsilon();
    let perturbation_equivariant = group.generators().iter().all(|g| {
        samples.iter().all(|x| {
            let a = h.eval(&g.act(x));
            let b = g.act(&h.eval(x));
            a.iter().zip(&b).all(|(u, v)| (eps * (u - v)).abs() <= 1e-12)
        })
    });
    let nonzero_on_consensus = !samples.is_empty()
        && samples.iter().all(|x| {
            let c = x.iter().sum::<f64>() / n as f64;
            let hv = h.eval(&vec![c; n]);
            eps * hv.iter().fold(0.0f64, |m, v| m.max(v.abs())) > 1e-12
        });
    let verdict = automorphisms && large_enough && perturbation_equivariant && nonzero_on_consensus;
    Ok(CanardCertificate { automorphisms, large_enough, perturbation_equivariant, nonzero_on_consensus, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::response::{ResponseField, ResponseFunction};
    use crate::rng::SeededRng;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn square() -> ResponseField {
        ResponseField::homogeneous(ResponseFunction::from_coeffs(&[0.0, 0.0, 1.0]).unwrap())
    }

    fn well() -> ResponseField {
        ResponseField::homogeneous(ResponseFunction::double_well())
    }

    #[test]
    fn fixed_point_examples() {
        assert!(fixed_point_space(&PermutationGroup::cyclic(5).unwrap(), 5).unwrap().is_consensus());
        let refl = PermutationGroup::new(4, vec![Permutation::reversal(4)]).unwrap();
        let fix = fixed_point_space(&refl, 4).unwrap();
        assert_eq!(fix.one_based(), vec![vec![1, 4], vec![2, 3]]);
        assert_eq!(fix.dim(), 2);
        assert_eq!(fixed_point_space(&PermutationGroup::trivial(3).unwrap(), 3).unwrap().dim(), 3);
        assert!(fixed_point_space(&refl, 5).is_err());
    }

    #[test]
    fn group_orders() {
        assert_eq!(PermutationGroup::symmetric(5).unwrap().order(GROUP_CAP).unwrap(), 120);
        assert_eq!(PermutationGroup::cyclic(7).unwrap().order(GROUP_CAP).unwrap(), 7);
        assert_eq!(PermutationGroup::dihedral(6).unwrap().order(GROUP_CAP).unwrap(), 12);
        assert_eq!(PermutationGroup::trivial(4).unwrap().order(GROUP_CAP).unwrap(), 1);
        let s12 = PermutationGroup::symmetric(12).unwrap();
        assert!(matches!(s12.order(1000), Err(AlfError::GroupCapExceeded(1000))));
        assert!(s12.order_at_least(12, 1000).unwrap());
    }

    #[test]
    fn group_closure_properties() {
        let g = PermutationGroup::dihedral(5).unwrap();
        let els = g.elements(GROUP_CAP).unwrap();
        assert!(els[0].is_identity());
        let set: HashSet<_> = els.iter().cloned().collect();
        for a in &els {
            assert!(set.contains(&a.inverse()));
            for b in &els {
                assert!(set.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn full_symmetric_group_fixes_only_consensus() {
        for n in 1..=8 {
            assert!(fixed_point_space(&PermutationGroup::symmetric(n).unwrap(), n).unwrap().is_consensus());
            assert!(fixed_point_space(&PermutationGroup::cyclic(n).unwrap(), n).unwrap().is_consensus());
            assert!(fixed_point_space(&PermutationGroup::dihedral(n).unwrap(), n).unwrap().is_consensus());
        }
    }

    #[test]
    fn complete_graph_is_equivariant() {
        let sys = PerturbedSystem::unperturbed(Graph::complete(5).unwrap(), well());
        let mut rng = SeededRng::new(12);
        for _ in 0..100 {
            let p = Permutation::new(rng.permutation(5)).unwrap();
            let x = rng.uniform_vec(5, -2.0, 2.0);
            assert!(check_equivariance(&sys, &p, &[x], 1e-12).unwrap());
        }
        assert!(check_equivariance(&sys, &Permutation::identity(5), &[vec![0.1; 5]], 0.0).unwrap());
    }

    #[test]
    fn complete_graph_equivariance_is_exact_in_rationals() {
        let sys = PerturbedSystem::unperturbed(Graph::complete(5).unwrap(), well());
        let mut rng = SeededRng::new(13);
        for _ in 0..20 {
            let p = Permutation::new(rng.permutation(5)).unwrap();
            let x: Vec<BigRational> = rng.uniform_vec(5, -2.0, 2.0).into_iter().map(<BigRational as Scalar>::from_f64).collect();
            assert!(equivariance_defect(&sys, &p, &x).unwrap().iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn path_graph_breaks_transposition() {
        let sys = PerturbedSystem::unperturbed(Graph::path(3).unwrap(), square());
        let t = Permutation::transposition(3, 0, 1).unwrap();
        assert!(!check_equivariance(&sys, &t, &[vec![1.0, 0.0, -1.0]], 1e-12).unwrap());
    }

    #[test]
    fn signed_equilibria() {
        let k3 = PerturbedSystem::unperturbed(Graph::complete(3).unwrap(), square());
        assert_eq!(symmetry_generated_equilibria(&k3, 2.0, &[1, -1, 1]).unwrap().residual, 0.0);
        assert_eq!(symmetry_generated_equilibria(&k3, 2.0, &[1, 1, 1]).unwrap().residual, 0.0);
        let k4 = PerturbedSystem::unperturbed(Graph::complete(4).unwrap(), well());
        assert!(symmetry_generated_equilibria(&k4, 0.7, &[1, -1, -1, 1]).unwrap().residual <= 1e-12);
        let odd = PerturbedSystem::unperturbed(Graph::complete(3).unwrap(), ResponseField::homogeneous(ResponseFunction::from_coeffs(&[0.0, 1.0, 1.0]).unwrap()));
        assert!(matches!(symmetry_generated_equilibria(&odd, 1.0, &[1, -1, 1]), Err(AlfError::UnsupportedSymmetry(_))));
        assert!(symmetry_generated_equilibria(&odd, 1.0, &[1, 1, 1]).is_ok());
    }

    #[test]
    fn certificate_examples() {
        let n = 4;
        let g = PermutationGroup::symmetric(n).unwrap();
        let samples = vec![vec![0.1, 0.5, -0.3, 1.0], vec![1.0; 4]];
        let make = |h: Perturbation| PerturbedSystem::new(Graph::complete(n).unwrap(), well(), h, 0.1).unwrap();
        assert!(maximal_canard_certificate(&make(Perturbation::uniform(n, -1.0).unwrap()), &g, &samples).unwrap().verdict);
        let uneq = maximal_canard_certificate(&make(Perturbation::constant(vec![1.0, 2.0, 1.0, 1.0]).unwrap()), &g, &samples).unwrap();
        assert!(!uneq.verdict && !uneq.perturbation_equivariant);
        let zero = maximal_canard_certificate(&make(Perturbation::zero(n)), &g, &samples).unwrap();
        assert!(!zero.verdict && !zero.nonzero_on_consensus);
        // generators that are not automorphisms of a path
        let path = PerturbedSystem::new(Graph::path(n).unwrap(), well(), Perturbation::uniform(n, -1.0).unwrap(), 0.1).unwrap();
        assert!(!maximal_canard_certificate(&path, &g, &samples).unwrap().automorphisms);
    }

    #[test]
    fn group_json() {
        let spec: GroupSpec = serde_json::from_str(r#"{"generators":[[2,3,1],[2,1,3]]}"#).unwrap();
        let g = spec.build(3).unwrap();
        assert_eq!(g.order(GROUP_CAP).unwrap(), 6);
        assert_eq!(serde_json::to_string(&GroupSpec::from(&g)).unwrap(), r#"{"generators":[[2,3,1],[2,1,3]]}"#);
        assert!(serde_json::from_str::<GroupSpec>(r#"{"generators":[[1,1,2]]}"#).is_err());
    }
}
