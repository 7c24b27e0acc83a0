//! Real roots of univariate polynomials on a bounded interval.
//!
//! Roots are isolated recursively: the critical points of `p` (roots of `p'`)
//! split `[a, b]` into monotone pieces, each holding at most one simple root,
//! found by bisection to full double precision. A critical point where `|p|`
//! is within rounding noise is reported as a touching (even-multiplicity) root.

use crate::response::horner;

fn trim(coeffs: &[f64]) -> &[f64] {
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1] == 0.0 {
        end -= 1;
    }
    &coeffs[..end]
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(j, c)| c * j as f64).collect()
}

/// Bound on the rounding error of evaluating `p(x)` by Horner's rule.
fn eval_noise(coeffs: &[f64], x: f64) -> f64 {
    let abs: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    let mag = horner(&abs, &x.abs());
    4.0 * coeffs.len() as f64 * f64::EPSILON * mag
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64, mut plo: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = horner(coeffs, &mid);
        if pm == 0.0 {
            return mid;
        }
        if (pm < 0.0) == (plo < 0.0) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    // closer endpoint by residual
    if horner(coeffs, &lo).abs() <= horner(coeffs, &hi).abs() {
        lo
    } else {
        hi
    }
}

/// Real roots of `Σ cⱼ xʲ` in `[a, b]`, ascending. A polynomial that vanishes
/// identically has no isolated roots and yields an empty list.
pub fn real_roots_in(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trim(coeffs);
    if c.len() <= 1 || !(a <= b) {
        return vec![];
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if (a..=b).contains(&r) { vec![r] } else { vec![] };
    }
    let crit = real_roots_in(&derivative(c), a, b);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(a);
    knots.extend(crit.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);

    let mut roots = Vec::new();
    let vals: Vec<f64> = knots.iter().map(|x| horner(c, x)).collect();
    for (i, (&x, &v)) in knots.iter().zip(&vals).enumerate() {
        let interior = i > 0 && i + 1 < knots.len();
        if v == 0.0 || (interior && v.abs() <= eval_noise(c, x)) {
            roots.push(x);
        }
    }
    for i in 0..knots.len() - 1 {
        let (pa, pb) = (vals[i], vals[i + 1]);
        if pa != 0.0 && pb != 0.0 && (pa < 0.0) != (pb < 0.0) {
            roots.push(bisect(c, knots[i], knots[i + 1], pa));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + y.abs()));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn from_roots(rs: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for r in rs {
            let mut next = vec![0.0; c.len() + 1];
            for (j, v) in c.iter().enumerate() {
                next[j + 1] += v;
                next[j] -= r * v;
            }
            c = next;
        }
        c
    }

    #[test]
    fn simple_roots() {
        let r = real_roots_in(&from_roots(&[-1.0, 0.0, 1.0]), -2.0, 2.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn touching_roots() {
        // x²(x − 1)²
        let r = real_roots_in(&from_roots(&[0.0, 0.0, 1.0, 1.0]), -3.0, 3.0);
        assert_eq!(r.len(), 2, "{r:?}");
        // x² + 1 has none
        assert!(real_roots_in(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
    }

    #[test]
    fn range_and_degenerate_cases() {
        assert!(real_roots_in(&[0.0, 0.0], -1.0, 1.0).is_empty());
        assert!(real_roots_in(&[3.0], -1.0, 1.0).is_empty());
        assert_eq!(real_roots_in(&from_roots(&[0.5, 4.0]), 0.0, 1.0).len(), 1);
        assert_eq!(real_roots_in(&[-1.0, 1.0], 1.0, 2.0), vec![1.0]);
    }

    #[test]
    fn random_factored_polynomials() {
        let mut rng = SeededRng::new(31);
        for _ in 0..200 {
            let d = 1 + rng.below(6);
            let mut rs: Vec<f64> = (0..d).map(|_| rng.uniform(-3.0, 3.0)).collect();
            rs.sort_by(f64::total_cmp);
            if rs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                continue;
            }
            let found = real_roots_in(&from_roots(&rs), -4.0, 4.0);
            assert_eq!(found.len(), rs.len(), "{rs:?} {found:?}");
            for (a, b) in found.iter().zip(&rs) {
                assert!((a - b).abs() < 1e-8, "{rs:?} {found:?}");
            }
        }
    }
}
