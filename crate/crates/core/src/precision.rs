//! Scalar abstraction with three working-precision tiers.
//!
//! `f64` (~16 digits), [`DoubleDouble`] (~32 digits) and [`QuadDouble`]
//! (~64 digits) implement [`Real`]; `BigRational` implements [`Scalar`] so the
//! same vector-field code can be run in exact arithmetic.
//!
//! The multi-component arithmetic follows the error-free transformation
//! scheme of Hida, Li and Bailey: every value is an unevaluated sum of
//! non-overlapping doubles ordered by decreasing magnitude.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Field-like scalar used by vector-field and polynomial evaluation.
pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

/// Floating scalar used by the integrators.
pub trait Real: Scalar + Copy {
    /// Decimal digits carried by the representation.
    const DIGITS: usize;

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }

    /// Scientific notation with `digits` significant digits, `d.ddd…e±x`.
    fn format_sci(self, digits: usize) -> String {
        format_scientific(self, digits)
    }
}

/// Precision tier selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
    QuadDouble,
}

impl Precision {
    pub fn digits(self) -> u32 {
        match self {
            Precision::Double => 16,
            Precision::DoubleDouble => 32,
            Precision::QuadDouble => 64,
        }
    }

    pub fn from_digits(d: u32) -> Option<Self> {
        match d {
            16 => Some(Precision::Double),
            32 => Some(Precision::DoubleDouble),
            64 => Some(Precision::QuadDouble),
            _ => None,
        }
    }
}

impl TryFrom<u32> for Precision {
    type Error = String;

    fn try_from(d: u32) -> Result<Self, Self::Error> {
        Precision::from_digits(d).ok_or_else(|| format!("unsupported digits {d}, expected 16, 32 or 64"))
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.digits()
    }
}

/// Run `$body` with the type alias `$s` bound to the scalar of `$prec`.
#[macro_export]
macro_rules! with_precision {
    ($prec:expr, $s:ident => $body:expr) => {
        match $prec {
            $crate::precision::Precision::Double => {
                type $s = f64;
                $body
            }
            $crate::precision::Precision::DoubleDouble => {
                type $s = $crate::precision::DoubleDouble;
                $body
            }
            $crate::precision::Precision::QuadDouble => {
                type $s = $crate::precision::QuadDouble;
                $body
            }
        }
    };
}

// ---------------------------------------------------------------------------
// error-free transformations

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn three_sum(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let (t1, t2) = two_sum(a, b);
    let (a, t3) = two_sum(c, t1);
    let (b, c) = two_sum(t2, t3);
    (a, b, c)
}

// ---------------------------------------------------------------------------
// f64

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_rational(r: &BigRational) -> Self {
        num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
}

impl Real for f64 {
    const DIGITS: usize = 16;

    fn format_sci(self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self)
    }
}

// ---------------------------------------------------------------------------
// BigRational (exact)

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num_traits::One>::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite f64 converts to a rational")
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn bigint_to<S: Real>(v: &BigInt) -> S {
    let (sign, digits) = v.to_u32_digits();
    let radix = S::from_f64(4294967296.0);
    let mut acc = S::zero();
    for d in digits.iter().rev() {
        acc = acc * radix + S::from_f64(*d as f64);
    }
    if sign == Sign::Minus {
        -acc
    } else {
        acc
    }
}

fn rational_to<S: Real>(r: &BigRational) -> S {
    let num: S = bigint_to(r.numer());
    let den: S = bigint_to(r.denom());
    if num.is_finite() && den.is_finite() {
        num / den
    } else {
        S::from_f64(ToPrimitive::to_f64(r).unwrap_or(f64::NAN))
    }
}

// ---------------------------------------------------------------------------
// DoubleDouble

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b * DoubleDouble::new(q1, 0.0);
        let q2 = r.hi / b.hi;
        let r = r - b * DoubleDouble::new(q2, 0.0);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble::new(q1, q2) + DoubleDouble::new(q3, 0.0)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Scalar for DoubleDouble {
    fn zero() -> Self {
        Self::new(0.0, 0.0)
    }
    fn one() -> Self {
        Self::new(1.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Self::new(v, 0.0)
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to(r)
    }
    fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }
}

impl Real for DoubleDouble {
    const DIGITS: usize = 32;
}

// ---------------------------------------------------------------------------
// QuadDouble

/// Unevaluated sum of four non-overlapping doubles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadDouble(pub [f64; 4]);

fn renorm4(c: [f64; 4]) -> [f64; 4] {
    let [mut c0, mut c1, mut c2, mut c3] = c;
    if !c0.is_finite() {
        return c;
    }
    let (s0, t) = quick_two_sum(c2, c3);
    c3 = t;
    let (s0, t) = quick_two_sum(c1, s0);
    c2 = t;
    let (t0, t1) = quick_two_sum(c0, s0);
    c0 = t0;
    c1 = t1;

    let (mut s0, mut s1) = (c0, c1);
    let (mut s2, mut s3) = (0.0, 0.0);
    if s1 != 0.0 {
        (s1, s2) = quick_two_sum(s1, c2);
        if s2 != 0.0 {
            (s2, s3) = quick_two_sum(s2, c3);
        } else {
            (s1, s2) = quick_two_sum(s1, c3);
        }
    } else {
        (s0, s1) = quick_two_sum(s0, c2);
        if s1 != 0.0 {
            (s1, s2) = quick_two_sum(s1, c3);
        } else {
            (s0, s1) = quick_two_sum(s0, c3);
        }
    }
    [s0, s1, s2, s3]
}

fn renorm5(c: [f64; 5]) -> [f64; 4] {
    let [mut c0, mut c1, mut c2, mut c3, mut c4] = c;
    if !c0.is_finite() {
        return [c0, c1, c2, c3];
    }
    let (s0, t) = quick_two_sum(c3, c4);
    c4 = t;
    let (s0, t) = quick_two_sum(c2, s0);
    c3 = t;
    let (s0, t) = quick_two_sum(c1, s0);
    c2 = t;
    let (t0, t1) = quick_two_sum(c0, s0);
    c0 = t0;
    c1 = t1;

    let (mut s0, mut s1) = quick_two_sum(c0, c1);
    let (mut s2, mut s3) = (0.0, 0.0);
    if s1 != 0.0 {
        (s1, s2) = quick_two_sum(s1, c2);
        if s2 != 0.0 {
            (s2, s3) = quick_two_sum(s2, c3);
            if s3 != 0.0 {
                s3 += c4;
            } else {
                (s2, s3) = quick_two_sum(s2, c4);
            }
        } else {
            (s1, s2) = quick_two_sum(s1, c3);
            if s2 != 0.0 {
                (s2, s3) = quick_two_sum(s2, c4);
            } else {
                (s1, s2) = quick_two_sum(s1, c4);
            }
        }
    } else {
        (s0, s1) = quick_two_sum(s0, c2);
        if s1 != 0.0 {
            (s1, s2) = quick_two_sum(s1, c3);
            if s2 != 0.0 {
                (s2, s3) = quick_two_sum(s2, c4);
            } else {
                (s1, s2) = quick_two_sum(s1, c4);
            }
        } else {
            (s0, s1) = quick_two_sum(s0, c3);
            if s1 != 0.0 {
                (s1, s2) = quick_two_sum(s1, c4);
            } else {
                (s0, s1) = quick_two_sum(s0, c4);
            }
        }
    }
    [s0, s1, s2, s3]
}

/// Accumulates `c` into the double-length accumulator `(u, v)`; returns the
/// component that overflowed out of it, or zero.
#[inline]
fn quick_three_accum(u: &mut f64, v: &mut f64, c: f64) -> f64 {
    let (s, b) = two_sum(*v, c);
    let (s, a) = two_sum(*u, s);
    let za = a != 0.0;
    let zb = b != 0.0;
    if za && zb {
        *u = a;
        *v = b;
        return s;
    }
    if !zb {
        *v = a;
        *u = s;
    } else {
        *v = b;
        *u = s;
    }
    0.0
}

impl QuadDouble {
    pub const fn from_parts(c: [f64; 4]) -> Self {
        QuadDouble(c)
    }

    fn mul_f64(self, b: f64) -> Self {
        let a = self.0;
        let (p0, q0) = two_prod(a[0], b);
        let (p1, q1) = two_prod(a[1], b);
        let (p2, q2) = two_prod(a[2], b);
        let p3 = a[3] * b;

        let s0 = p0;
        let (s1, s2) = two_sum(q0, p1);
        let (s2, q1, p2) = three_sum(s2, q1, p2);
        // three_sum2(q1, q2, p3)
        let (t1, t2) = two_sum(q1, q2);
        let (s3, t3) = two_sum(p3, t1);
        let q2 = t2 + t3;
        let s4 = q2 + p2;
        QuadDouble(renorm5([s0, s1, s2, s3, s4]))
    }
}

impl Add for QuadDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let a = self.0;
        let b = rhs.0;
        let (mut i, mut j) = (0usize, 0usize);
        let mut x = [0.0f64; 4];

        let next = |i: &mut usize, j: &mut usize| -> f64 {
            if *i >= 4 {
                *j += 1;
                b[*j - 1]
            } else if *j >= 4 || a[*i].abs() > b[*j].abs() {
                *i += 1;
                a[*i - 1]
            } else {
                *j += 1;
                b[*j - 1]
            }
        };

        let u0 = next(&mut i, &mut j);
        let v0 = next(&mut i, &mut j);
        let (mut u, mut v) = quick_two_sum(u0, v0);

        let mut k = 0usize;
        while k < 4 {
            if i >= 4 && j >= 4 {
                x[k] = u;
                if k < 3 {
                    k += 1;
                    x[k] = v;
                }
                break;
            }
            let t = next(&mut i, &mut j);
            let s = quick_three_accum(&mut u, &mut v, t);
            if s != 0.0 {
                x[k] = s;
                k += 1;
            }
        }
        for &ak in a.iter().skip(i) {
            x[3] += ak;
        }
        for &bk in b.iter().skip(j) {
            x[3] += bk;
        }
        QuadDouble(renorm4(x))
    }
}

impl Neg for QuadDouble {
    type Output = Self;
    fn neg(self) -> Self {
        let [a, b, c, d] = self.0;
        QuadDouble([-a, -b, -c, -d])
    }
}

impl Sub for QuadDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for QuadDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = self.0;
        let b = rhs.0;
        let (p0, q0) = two_prod(a[0], b[0]);
        let (p1, q1) = two_prod(a[0], b[1]);
        let (p2, q2) = two_prod(a[1], b[0]);
        let (p3, q3) = two_prod(a[0], b[2]);
        let (p4, q4) = two_prod(a[1], b[1]);
        let (p5, q5) = two_prod(a[2], b[0]);

        let (p1, p2, q0) = three_sum(p1, p2, q0);

        let (p2, q1, q2) = three_sum(p2, q1, q2);
        let (p3, p4, p5) = three_sum(p3, p4, p5);

        let (s0, t0) = two_sum(p2, p3);
        let (s1, t1) = two_sum(q1, p4);
        let mut s2 = q2 + p5;
        let (mut s1, t0) = two_sum(s1, t0);
        s2 += t0 + t1;

        s1 += a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0] + q0 + q3 + q4 + q5;
        QuadDouble(renorm5([p0, p1, s0, s1, s2]))
    }
}

impl Div for QuadDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let b0 = b.0[0];
        let q0 = self.0[0] / b0;
        let mut r = self - b.mul_f64(q0);
        let q1 = r.0[0] / b0;
        r = r - b.mul_f64(q1);
        let q2 = r.0[0] / b0;
        r = r - b.mul_f64(q2);
        let q3 = r.0[0] / b0;
        r = r - b.mul_f64(q3);
        let q4 = r.0[0] / b0;
        QuadDouble(renorm5([q0, q1, q2, q3, q4]))
    }
}

impl PartialOrd for QuadDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.partial_cmp(b)? {
                Ordering::Equal => continue,
                o => return Some(o),
            }
        }
        Some(Ordering::Equal)
    }
}

impl Scalar for QuadDouble {
    fn zero() -> Self {
        QuadDouble([0.0; 4])
    }
    fn one() -> Self {
        QuadDouble([1.0, 0.0, 0.0, 0.0])
    }
    fn from_f64(v: f64) -> Self {
        QuadDouble([v, 0.0, 0.0, 0.0])
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to(r)
    }
    fn to_f64(&self) -> f64 {
        self.0[0] + self.0[1]
    }
}

impl Real for QuadDouble {
    const DIGITS: usize = 64;
}

// ---------------------------------------------------------------------------
// decimal output

fn pow10<S: Real>(e: i32) -> S {
    let mut base = S::from_f64(10.0);
    let mut acc = S::one();
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        k >>= 1;
    }
    if e < 0 {
        S::one() / acc
    } else {
        acc
    }
}

/// Digit extraction in the working precision of `S`.
pub fn format_scientific<S: Real>(x: S, digits: usize) -> String {
    let digits = digits.max(1);
    let lead = x.to_f64();
    if lead == 0.0 {
        return format!("{:.*e}", digits - 1, 0.0);
    }
    if !lead.is_finite() {
        return format!("{lead}");
    }
    let neg = lead < 0.0;
    let ax = if neg { -x } else { x };
    let mut exp = lead.abs().log10().floor() as i32;
    let mut r = ax / pow10::<S>(exp);
    if r.to_f64() >= 10.0 {
        r = r / S::from_f64(10.0);
        exp += 1;
    } else if r.to_f64() < 1.0 {
        r = r * S::from_f64(10.0);
        exp -= 1;
    }

    // one guard digit for rounding
    let mut ds: Vec<u8> = Vec::with_capacity(digits + 1);
    for _ in 0..=digits {
        let mut d = r.to_f64().floor();
        let mut rem = r - S::from_f64(d);
        if rem < S::zero() {
            d -= 1.0;
            rem = rem + S::one();
        } else if rem.to_f64() >= 1.0 {
            d += 1.0;
            rem = rem - S::one();
        }
        ds.push(d.clamp(0.0, 9.0) as u8);
        r = rem * S::from_f64(10.0);
    }
    let guard = ds.pop().unwrap_or(0);
    if guard >= 5 {
        let mut i = ds.len();
        loop {
            if i == 0 {
                ds.insert(0, 1);
                ds.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if ds[i] == 9 {
                ds[i] = 0;
            } else {
                ds[i] += 1;
                break;
            }
        }
    }

    let mut s = String::with_capacity(digits + 8);
    if neg {
        s.push('-');
    }
    s.push((b'0' + ds[0]) as char);
    if digits > 1 {
        s.push('.');
        for d in &ds[1..] {
            s.push((b'0' + d) as char);
        }
    }
    s.push('e');
    s.push_str(&exp.to_string());
    s
}
