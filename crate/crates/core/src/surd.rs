//! Exact scalar arithmetic.
//!
//! [`SurdSum`] is a finite sum `Σ c_r √r` with rational `c_r` and square-free
//! radicands `r`. [`GaussSurd`] adjoins `i`, and [`LambdaPoly`] is a polynomial
//! of degree at most two in a formal parameter `λ` with [`GaussSurd`]
//! coefficients. All three render to and parse from a small text format such
//! as `3/2*sqrt(5) + 1/4`, `sqrt(2)*i` or `(1/2)*lambda + 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational number in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Builds the rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Builds the integer `p` as a rational.
pub fn rint(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

// ---------------------------------------------------------------------------
// HalfInt
// ---------------------------------------------------------------------------

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    /// Zero.
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    /// One half.
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    /// One.
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    /// The half-integer `twice / 2`.
    pub const fn from_twice(twice: i64) -> Self {
        HalfInt { twice }
    }

    /// The integer `n`.
    pub const fn from_int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// Twice the value.
    pub const fn twice(self) -> i64 {
        self.twice
    }

    /// True when the value is an integer.
    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The value when it is an integer.
    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.twice / 2)
    }

    /// Floating-point value.
    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Exact rational value.
    pub fn to_rational(self) -> Rational {
        rat(self.twice, 2)
    }

    /// Absolute value.
    pub fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    /// Converts an exact rational with denominator 1 or 2.
    pub fn from_rational(r: &Rational) -> Option<Self> {
        let t = r * rint(2);
        t.is_integer().then(|| t.to_integer().to_i64()).flatten().map(HalfInt::from_twice)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + o.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - o.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;
    /// Accepts `3`, `-3/2` and `1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a half-integer: {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            return match q {
                1 => Ok(HalfInt::from_int(p)),
                2 => Ok(HalfInt::from_twice(p)),
                _ => Err(bad()),
            };
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(HalfInt::from_int(n));
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        let t = (2.0 * x).round();
        if (2.0 * x - t).abs() > 1e-12 || !t.is_finite() {
            return Err(bad());
        }
        Ok(HalfInt::from_twice(t as i64))
    }
}

// ---------------------------------------------------------------------------
// Square-free factorisation
// ---------------------------------------------------------------------------

/// Splits `n = root² · free` with `free` square-free.
pub fn squarefree_split(n: &BigUint) -> (BigUint, BigUint) {
    if n.is_zero() {
        return (BigUint::zero(), BigUint::one());
    }
    let mut m = n.clone();
    let mut root = BigUint::one();
    let mut free = BigUint::one();
    let mut d = BigUint::from(2u32);
    while &d * &d * &d <= m {
        let d2 = &d * &d;
        while (&m % &d2).is_zero() {
            m /= &d2;
            root *= &d;
        }
        if (&m % &d).is_zero() {
            m /= &d;
            free *= &d;
        }
        d += 1u32;
    }
    // Remaining cofactor has at most two prime factors, all of them >= d.
    let s = m.sqrt();
    if &s * &s == m && !m.is_one() {
        root *= s;
    } else {
        free *= m;
    }
    (root, free)
}

// ---------------------------------------------------------------------------
// SurdSum
// ---------------------------------------------------------------------------

/// Exact real number `Σ c_r √r` over square-free radicands `r ≥ 1`.
///
/// The empty map is zero; radicand 1 carries the rational part. No zero
/// coefficient is ever stored, so structural equality is numeric equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SurdSum {
    terms: BTreeMap<BigUint, Rational>,
}

impl SurdSum {
    /// The rational number `r`.
    pub fn from_rational(r: Rational) -> Self {
        let mut s = SurdSum::default();
        s.add_term(BigUint::one(), r);
        s
    }

    /// The integer `n`.
    pub fn from_int(n: i64) -> Self {
        SurdSum::from_rational(rint(n))
    }

    /// `coef · √radicand` in canonical form.
    pub fn normalize(coef: &Rational, radicand: &Rational) -> Result<Self> {
        if radicand.is_negative() {
            return Err(Error::Domain(format!("negative radicand {radicand}")));
        }
        if radicand.is_zero() || coef.is_zero() {
            return Ok(SurdSum::default());
        }
        // √(p/q) = √(pq)/q
        let p = radicand.numer().magnitude();
        let q = radicand.denom().magnitude();
        let (root, free) = squarefree_split(&(p * q));
        let c = coef * Rational::new(BigInt::from(root), BigInt::from(q.clone()));
        let mut s = SurdSum::default();
        s.add_term(free, c);
        Ok(s)
    }

    /// `√r` for a nonnegative rational `r`.
    pub fn sqrt(r: &Rational) -> Result<Self> {
        SurdSum::normalize(&Rational::one(), r)
    }

    /// `√(p/q)` for nonnegative integers.
    pub fn sqrt_frac(p: i64, q: i64) -> Result<Self> {
        SurdSum::sqrt(&rat(p, q))
    }

    /// `sign · √r`, the shape of every Clebsch-Gordan coefficient.
    pub fn signed_sqrt(sign: i32, r: &Rational) -> Result<Self> {
        let s = SurdSum::sqrt(r)?;
        Ok(if sign < 0 { -s } else { s })
    }

    fn add_term(&mut self, radicand: BigUint, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        let e = self.terms.entry(radicand).or_insert_with(Rational::zero);
        *e += coef;
        if e.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    /// Iterates over `(radicand, coefficient)` pairs in increasing radicand order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&BigUint, &Rational)> {
        self.terms.iter()
    }

    /// Number of stored terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True for a rational value.
    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|r| r.is_one())
    }

    /// The rational value when [`SurdSum::is_rational`] holds.
    pub fn to_rational(&self) -> Option<Rational> {
        if self.is_rational() {
            Some(self.rational_part())
        } else {
            None
        }
    }

    /// Coefficient of √1.
    pub fn rational_part(&self) -> Rational {
        self.terms.get(&BigUint::one()).cloned().unwrap_or_else(Rational::zero)
    }

    /// Multiplies by a rational scalar.
    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return SurdSum::default();
        }
        SurdSum { terms: self.terms.iter().map(|(r, v)| (r.clone(), v * c)).collect() }
    }

    /// Inverse of a single-term value `c√r`, `None` for zero or several terms.
    pub fn inv_monomial(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (r, c) = self.terms.iter().next()?;
        // (c√r)⁻¹ = √r / (c r)
        let denom = c * Rational::from_integer(BigInt::from(r.clone()));
        let mut s = SurdSum::default();
        s.add_term(r.clone(), denom.recip());
        Some(s)
    }

    /// Square of a single-term value as a signed rational `sign(c)·c²·r`.
    pub fn signed_square(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (r, c) = self.terms.iter().next()?;
                let sq = c * c * Rational::from_integer(BigInt::from(r.clone()));
                Some(if c.is_negative() { -sq } else { sq })
            }
            _ => None,
        }
    }

    /// Numeric value correctly rounded to within about one ulp of an
    /// intermediate of `precision` bits, then rounded to `f64`.
    pub fn eval(&self, precision: u32) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let precision = precision.max(53);
        let mut guard = 32u32;
        loop {
            let p = precision + guard;
            let scale = BigUint::one() << (2 * p as usize);
            let mut acc = BigInt::zero();
            for (r, c) in &self.terms {
                let root = (r * &scale).sqrt();
                let num = c.numer() * BigInt::from(root);
                acc += num.div_floor(c.denom());
            }
            let bits = acc.magnitude().bits();
            // Enough significant bits survive any cancellation.
            if bits as u32 >= precision + 8 || guard > 4096 {
                let den = BigInt::from(BigUint::one() << p as usize);
                return Rational::new(acc, den).to_f64().unwrap_or(f64::NAN);
            }
            guard *= 4;
        }
    }

    /// Numeric value at double precision.
    pub fn to_f64(&self) -> f64 {
        self.eval(53)
    }
}

/// Exact sum; see [`SurdSum`].
pub fn surd_add(a: &SurdSum, b: &SurdSum) -> SurdSum {
    a + b
}

/// Exact product; see [`SurdSum`].
pub fn surd_mul(a: &SurdSum, b: &SurdSum) -> SurdSum {
    a * b
}

/// Canonical `coef · √radicand`.
pub fn surd_normalize(coef: &Rational, radicand: &Rational) -> Result<SurdSum> {
    SurdSum::normalize(coef, radicand)
}

/// Numeric value; `precision` is in bits and clamped below at 53.
pub fn surd_eval(a: &SurdSum, precision: u32) -> f64 {
    a.eval(precision)
}

impl Zero for SurdSum {
    fn zero() -> Self {
        SurdSum::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for SurdSum {
    fn one() -> Self {
        SurdSum::from_int(1)
    }
}

impl<'a> Add<&'a SurdSum> for &SurdSum {
    type Output = SurdSum;
    fn add(self, o: &'a SurdSum) -> SurdSum {
        let mut s = self.clone();
        s += o;
        s
    }
}

impl<'a> AddAssign<&'a SurdSum> for SurdSum {
    fn add_assign(&mut self, o: &'a SurdSum) {
        for (r, c) in &o.terms {
            self.add_term(r.clone(), c.clone());
        }
    }
}

impl<'a> SubAssign<&'a SurdSum> for SurdSum {
    fn sub_assign(&mut self, o: &'a SurdSum) {
        for (r, c) in &o.terms {
            self.add_term(r.clone(), -c.clone());
        }
    }
}

impl<'a> Sub<&'a SurdSum> for &SurdSum {
    type Output = SurdSum;
    fn sub(self, o: &'a SurdSum) -> SurdSum {
        let mut s = self.clone();
        s -= o;
        s
    }
}

impl Neg for &SurdSum {
    type Output = SurdSum;
    fn neg(self) -> SurdSum {
        SurdSum { terms: self.terms.iter().map(|(r, c)| (r.clone(), -c.clone())).collect() }
    }
}

impl<'a> Mul<&'a SurdSum> for &SurdSum {
    type Output = SurdSum;
    fn mul(self, o: &'a SurdSum) -> SurdSum {
        let mut s = SurdSum::default();
        for (r1, c1) in &self.terms {
            for (r2, c2) in &o.terms {
                // √r1·√r2 = g·√((r1/g)(r2/g)) for square-free r1, r2.
                let g = r1.gcd(r2);
                let free = (r1 / &g) * (r2 / &g);
                let c = c1 * c2 * Rational::from_integer(BigInt::from(g));
                s.add_term(free, c);
            }
        }
        s
    }
}

macro_rules! forward_binops {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                &self + &o
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                &self - &o
            }
        }
        impl Mul for $t {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                &self * &o
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                -&self
            }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, o: $t) {
                *self += &o;
            }
        }
        impl SubAssign for $t {
            fn sub_assign(&mut self, o: $t) {
                *self -= &o;
            }
        }
    };
}

forward_binops!(SurdSum);

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders `Σ c√r` terms (radicand descending) each optionally followed by a
/// suffix such as `*i`.
fn fmt_terms(s: &SurdSum, suffix: &str, out: &mut Vec<(bool, String)>) {
    for (r, c) in s.terms.iter().rev() {
        let neg = c.is_negative();
        let a = c.abs();
        let mut parts: Vec<String> = Vec::new();
        if !(a.is_one() && (!r.is_one() || !suffix.is_empty())) {
            parts.push(fmt_rational(&a));
        }
        if !r.is_one() {
            parts.push(format!("sqrt({r})"));
        }
        if !suffix.is_empty() {
            parts.push(suffix.to_string());
        }
        out.push((neg, parts.join("*")));
    }
}

fn join_terms(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (k, (neg, t)) in terms.iter().enumerate() {
        match (k, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(t);
    }
    s
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut t = Vec::new();
        fmt_terms(self, "", &mut t);
        f.write_str(&join_terms(&t))
    }
}

impl FromStr for SurdSum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let g: GaussSurd = s.parse()?;
        if !g.im.is_zero() {
            return Err(Error::Parse(format!("expected a real value: {s:?}")));
        }
        Ok(g.re)
    }
}

// ---------------------------------------------------------------------------
// GaussSurd
// ---------------------------------------------------------------------------

/// Exact complex number `re + i·im` with [`SurdSum`] parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GaussSurd {
    /// Real part.
    pub re: SurdSum,
    /// Imaginary part.
    pub im: SurdSum,
}

impl GaussSurd {
    /// `re + i·im`.
    pub fn new(re: SurdSum, im: SurdSum) -> Self {
        GaussSurd { re, im }
    }

    /// A real value.
    pub fn real(re: SurdSum) -> Self {
        GaussSurd { re, im: SurdSum::zero() }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussSurd { re: SurdSum::zero(), im: SurdSum::one() }
    }

    /// The rational `p/q`.
    pub fn rat(p: i64, q: i64) -> Self {
        GaussSurd::real(SurdSum::from_rational(rat(p, q)))
    }

    /// The integer `n`.
    pub fn int(n: i64) -> Self {
        GaussSurd::real(SurdSum::from_int(n))
    }

    /// `i·(p/q)`.
    pub fn imag_rat(p: i64, q: i64) -> Self {
        GaussSurd { re: SurdSum::zero(), im: SurdSum::from_rational(rat(p, q)) }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        GaussSurd { re: self.re.clone(), im: -&self.im }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        GaussSurd { re: -&self.im, im: self.re.clone() }
    }

    /// Multiplication by a rational scalar.
    pub fn scale(&self, c: &Rational) -> Self {
        GaussSurd { re: self.re.scale(c), im: self.im.scale(c) }
    }

    /// True when both parts are rational.
    pub fn is_gauss_rational(&self) -> bool {
        self.re.is_rational() && self.im.is_rational()
    }

    /// Inverse of a Gaussian rational, `None` otherwise or at zero.
    pub fn inv_gauss_rational(&self) -> Option<Self> {
        if !self.is_gauss_rational() || self.is_zero() {
            return None;
        }
        let a = self.re.rational_part();
        let b = self.im.rational_part();
        let n = &a * &a + &b * &b;
        Some(GaussSurd {
            re: SurdSum::from_rational(&a / &n),
            im: SurdSum::from_rational(-(&b / &n)),
        })
    }

    /// Numeric value.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl From<SurdSum> for GaussSurd {
    fn from(s: SurdSum) -> Self {
        GaussSurd::real(s)
    }
}

impl Zero for GaussSurd {
    fn zero() -> Self {
        GaussSurd::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussSurd {
    fn one() -> Self {
        GaussSurd::int(1)
    }
}

impl<'a> Add<&'a GaussSurd> for &GaussSurd {
    type Output = GaussSurd;
    fn add(self, o: &'a GaussSurd) -> GaussSurd {
        GaussSurd { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> AddAssign<&'a GaussSurd> for GaussSurd {
    fn add_assign(&mut self, o: &'a GaussSurd) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl<'a> SubAssign<&'a GaussSurd> for GaussSurd {
    fn sub_assign(&mut self, o: &'a GaussSurd) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl<'a> Sub<&'a GaussSurd> for &GaussSurd {
    type Output = GaussSurd;
    fn sub(self, o: &'a GaussSurd) -> GaussSurd {
        GaussSurd { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Neg for &GaussSurd {
    type Output = GaussSurd;
    fn neg(self) -> GaussSurd {
        GaussSurd { re: -&self.re, im: -&self.im }
    }
}

impl<'a> Mul<&'a GaussSurd> for &GaussSurd {
    type Output = GaussSurd;
    fn mul(self, o: &'a GaussSurd) -> GaussSurd {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussSurd::real(&self.re * &o.re);
        }
        GaussSurd {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

forward_binops!(GaussSurd);

impl fmt::Display for GaussSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut t = Vec::new();
        fmt_terms(&self.re, "", &mut t);
        fmt_terms(&self.im, "i", &mut t);
        f.write_str(&join_terms(&t))
    }
}

impl FromStr for GaussSurd {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let p: LambdaPoly = s.parse()?;
        if p.degree() > 0 {
            return Err(Error::Parse(format!("unexpected lambda in {s:?}")));
        }
        Ok(p.coeff(0))
    }
}

// ---------------------------------------------------------------------------
// LambdaPoly
// ---------------------------------------------------------------------------

/// Polynomial `c0 + c1 λ + c2 λ²` with [`GaussSurd`] coefficients.
///
/// The coefficient vector never stores trailing zeros, so the zero polynomial
/// is the empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LambdaPoly {
    coeffs: Vec<GaussSurd>,
}

impl LambdaPoly {
    /// Maximum stored degree.
    pub const MAX_DEGREE: usize = 2;

    /// Builds from coefficients in increasing degree.
    pub fn new(coeffs: Vec<GaussSurd>) -> Result<Self> {
        let mut p = LambdaPoly { coeffs };
        p.trim();
        if p.coeffs.len() > Self::MAX_DEGREE + 1 {
            return Err(Error::DegreeOverflow(p.coeffs.len() - 1));
        }
        Ok(p)
    }

    /// A constant.
    pub fn constant(c: GaussSurd) -> Self {
        let mut p = LambdaPoly { coeffs: vec![c] };
        p.trim();
        p
    }

    /// The monomial `λ`.
    pub fn lambda() -> Self {
        LambdaPoly { coeffs: vec![GaussSurd::zero(), GaussSurd::one()] }
    }

    /// `a + b λ` with integer coefficients.
    pub fn linear(a: i64, b: i64) -> Self {
        LambdaPoly::new(vec![GaussSurd::int(a), GaussSurd::int(b)]).expect("degree 1")
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `λ^k`.
    pub fn coeff(&self, k: usize) -> GaussSurd {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Coefficients in increasing degree.
    pub fn coeffs(&self) -> &[GaussSurd] {
        &self.coeffs
    }

    /// Multiplies by an exact scalar.
    pub fn scale(&self, c: &GaussSurd) -> Self {
        let mut p = LambdaPoly { coeffs: self.coeffs.iter().map(|x| x * c).collect() };
        p.trim();
        p
    }

    /// Exact product, failing above degree two.
    pub fn try_mul(&self, o: &LambdaPoly) -> Result<Self> {
        if self.is_zero() || o.is_zero() {
            return Ok(LambdaPoly::default());
        }
        let deg = self.degree() + o.degree();
        if deg > Self::MAX_DEGREE {
            return Err(Error::DegreeOverflow(deg));
        }
        let mut c = vec![GaussSurd::zero(); deg + 1];
        for (a, x) in self.coeffs.iter().enumerate() {
            for (b, y) in o.coeffs.iter().enumerate() {
                c[a + b] += &(x * y);
            }
        }
        LambdaPoly::new(c)
    }

    /// Numeric value at a complex `λ`.
    pub fn eval_at(&self, lambda: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * lambda + c.to_complex())
    }

    /// Exact value at a rational `λ`.
    pub fn eval_exact(&self, lambda: &Rational) -> GaussSurd {
        self.coeffs.iter().rev().fold(GaussSurd::zero(), |acc, c| &acc.scale(lambda) + c)
    }
}

/// Exact sum of two λ-polynomials.
pub fn lambda_poly_add(a: &LambdaPoly, b: &LambdaPoly) -> LambdaPoly {
    a + b
}

/// Exact product of two λ-polynomials, failing above degree two.
pub fn lambda_poly_mul(a: &LambdaPoly, b: &LambdaPoly) -> Result<LambdaPoly> {
    a.try_mul(b)
}

/// Numeric evaluation at a complex `λ`.
pub fn lambda_poly_eval(a: &LambdaPoly, lambda: Complex64) -> Complex64 {
    a.eval_at(lambda)
}

impl Zero for LambdaPoly {
    fn zero() -> Self {
        LambdaPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<'a> Add<&'a LambdaPoly> for &LambdaPoly {
    type Output = LambdaPoly;
    fn add(self, o: &'a LambdaPoly) -> LambdaPoly {
        let mut s = self.clone();
        s += o;
        s
    }
}

impl<'a> AddAssign<&'a LambdaPoly> for LambdaPoly {
    fn add_assign(&mut self, o: &'a LambdaPoly) {
        if self.coeffs.len() < o.coeffs.len() {
            self.coeffs.resize(o.coeffs.len(), GaussSurd::zero());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a += b;
        }
        self.trim();
    }
}

impl<'a> SubAssign<&'a LambdaPoly> for LambdaPoly {
    fn sub_assign(&mut self, o: &'a LambdaPoly) {
        *self += &(-o);
    }
}

impl<'a> Sub<&'a LambdaPoly> for &LambdaPoly {
    type Output = LambdaPoly;
    fn sub(self, o: &'a LambdaPoly) -> LambdaPoly {
        let mut s = self.clone();
        s -= o;
        s
    }
}

impl Neg for &LambdaPoly {
    type Output = LambdaPoly;
    fn neg(self) -> LambdaPoly {
        LambdaPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Add for LambdaPoly {
    type Output = LambdaPoly;
    fn add(self, o: LambdaPoly) -> LambdaPoly {
        &self + &o
    }
}

impl Sub for LambdaPoly {
    type Output = LambdaPoly;
    fn sub(self, o: LambdaPoly) -> LambdaPoly {
        &self - &o
    }
}

impl Neg for LambdaPoly {
    type Output = LambdaPoly;
    fn neg(self) -> LambdaPoly {
        -&self
    }
}

impl From<GaussSurd> for LambdaPoly {
    fn from(c: GaussSurd) -> Self {
        LambdaPoly::constant(c)
    }
}

impl fmt::Display for LambdaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match k {
                0 => String::new(),
                1 => "lambda".to_string(),
                _ => format!("lambda^{k}"),
            };
            if k == 0 {
                parts.push((false, format!("{c}")));
                continue;
            }
            if c.is_one() {
                parts.push((false, mono));
            } else if (-c).is_one() {
                parts.push((true, mono));
            } else {
                parts.push((false, format!("({c})*{mono}")));
            }
        }
        let mut s = String::new();
        for (i, (neg, t)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            s.push_str(t);
        }
        f.write_str(&s)
    }
}

impl FromStr for LambdaPoly {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let toks = tokenize(s)?;
        let mut p = Parser { toks: &toks, pos: 0 };
        let v = p.expr()?;
        if p.pos != toks.len() {
            return Err(Error::Parse(format!("trailing input in {s:?}")));
        }
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Text parser shared by SurdSum, GaussSurd and LambdaPoly
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigUint),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| Error::Parse(t.clone()))?));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_alphabetic() {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/()^".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else if c == '\u{2212}' {
            out.push(Tok::Sym('-'));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, what: &str) -> Result<T> {
        Err(Error::Parse(format!("{what} at token {}", self.pos)))
    }

    fn expr(&mut self) -> Result<LambdaPoly> {
        let mut acc = LambdaPoly::zero();
        let mut neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        loop {
            let t = self.term()?;
            if neg {
                acc -= &t;
            } else {
                acc += &t;
            }
            if self.eat('+') {
                neg = false;
            } else if self.eat('-') {
                neg = true;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<LambdaPoly> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            let f = self.factor()?;
            acc = acc.try_mul(&f)?;
        }
        Ok(acc)
    }

    fn number(&mut self) -> Result<Rational> {
        let p = match self.peek() {
            Some(Tok::Num(n)) => n.clone(),
            _ => return self.err("expected a number"),
        };
        self.pos += 1;
        if self.eat('/') {
            let q = match self.peek() {
                Some(Tok::Num(n)) if !n.is_zero() => n.clone(),
                _ => return self.err("expected a nonzero denominator"),
            };
            self.pos += 1;
            return Ok(Rational::new(BigInt::from_biguint(Sign::Plus, p), BigInt::from(q)));
        }
        Ok(Rational::from_integer(BigInt::from(p)))
    }

    fn factor(&mut self) -> Result<LambdaPoly> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return self.err("expected ')'");
            }
            return Ok(e);
        }
        match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.number()?;
                Ok(LambdaPoly::constant(GaussSurd::real(SurdSum::from_rational(r))))
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                match id.as_str() {
                    "i" => Ok(LambdaPoly::constant(GaussSurd::i())),
                    "sqrt" => {
                        if !self.eat('(') {
                            return self.err("expected '(' after sqrt");
                        }
                        let r = self.number()?;
                        if !self.eat(')') {
                            return self.err("expected ')'");
                        }
                        Ok(LambdaPoly::constant(GaussSurd::real(SurdSum::sqrt(&r)?)))
                    }
                    "lambda" => {
                        let mut k = 1usize;
                        if self.eat('^') {
                            let r = self.number()?;
                            k = r.to_integer().to_usize().unwrap_or(usize::MAX);
                        }
                        let mut c = vec![GaussSurd::zero(); k.min(Self::cap()) + 1];
                        if k > Self::cap() {
                            return Err(Error::DegreeOverflow(k));
                        }
                        c[k] = GaussSurd::one();
                        LambdaPoly::new(c)
                    }
                    other => self.err(&format!("unknown identifier {other:?}")),
                }
            }
            _ => self.err("expected a factor"),
        }
    }

    fn cap() -> usize {
        LambdaPoly::MAX_DEGREE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: &str) -> SurdSum {
        x.parse().unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(SurdSum::normalize(&rint(1), &rint(8)).unwrap(), s("2*sqrt(2)"));
        assert_eq!(SurdSum::normalize(&rint(1), &rat(9, 4)).unwrap(), s("3/2"));
        assert!(SurdSum::normalize(&rint(1), &rint(0)).unwrap().is_zero());
        assert!(SurdSum::normalize(&rint(1), &rint(-1)).is_err());
        assert_eq!(SurdSum::sqrt(&rat(1, 2)).unwrap(), s("1/2*sqrt(2)"));
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(s("sqrt(2)") + s("sqrt(2)"), s("2*sqrt(2)"));
        assert_eq!(s("sqrt(6)") * s("sqrt(10)"), s("2*sqrt(15)"));
        assert_eq!(s("1 + sqrt(2)") * s("1 - sqrt(2)"), s("-1"));
    }

    #[test]
    fn eval_examples() {
        assert!((s("2*sqrt(2)").to_f64() - 2.0f64.sqrt() * 2.0).abs() < 1e-15);
        assert_eq!(SurdSum::zero().to_f64(), 0.0);
        assert_eq!(s("3/2").to_f64(), 1.5);
        assert_eq!(s("sqrt(2)").eval(200), std::f64::consts::SQRT_2);
    }

    #[test]
    fn squarefree() {
        let (r, f) = squarefree_split(&BigUint::from(720u32));
        assert_eq!((r, f), (BigUint::from(12u32), BigUint::from(5u32)));
        let big = BigUint::from(1_000_003u64) * BigUint::from(1_000_003u64) * BigUint::from(6u32);
        let (r, f) = squarefree_split(&big);
        assert_eq!((r, f), (BigUint::from(1_000_003u64), BigUint::from(6u32)));
    }

    #[test]
    fn lambda_poly_examples() {
        let l = LambdaPoly::lambda();
        let two = LambdaPoly::constant(GaussSurd::int(2));
        assert_eq!(&(&l + &two) + &(-&l), two);
        let p = (&l + &two).try_mul(&(&l - &two)).unwrap();
        assert_eq!(p, "lambda^2 - 4".parse().unwrap());
        assert_eq!(p.eval_at(Complex64::new(4.0, 0.0)), Complex64::new(12.0, 0.0));
        assert!(matches!(p.try_mul(&l), Err(Error::DegreeOverflow(3))));
    }

    #[test]
    fn text_round_trip() {
        for t in ["3/2*sqrt(5) + 1/4", "-sqrt(2)", "0", "-7/3", "sqrt(3)*i", "1/2 - i", "i"] {
            let g: GaussSurd = t.parse().unwrap();
            assert_eq!(g.to_string(), t);
        }
        let p: LambdaPoly = "(1/2 + sqrt(2)*i)*lambda^2 - lambda + 3".parse().unwrap();
        assert_eq!(p.to_string().parse::<LambdaPoly>().unwrap(), p);
        assert!("sqrt(-1)".parse::<SurdSum>().is_err());
        assert!("2*i".parse::<SurdSum>().is_err());
    }

    #[test]
    fn halfint_parse() {
        assert_eq!("3/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(3));
        assert_eq!("-1.5".parse::<HalfInt>().unwrap(), HalfInt::from_twice(-3));
        assert_eq!("2".parse::<HalfInt>().unwrap(), HalfInt::from_int(2));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
    }

    fn arb_surd() -> impl Strategy<Value = SurdSum> {
        prop::collection::vec((-20i64..20, 1i64..6, 1i64..30), 0..4).prop_map(|v| {
            v.into_iter().fold(SurdSum::zero(), |acc, (p, q, r)| {
                acc + SurdSum::normalize(&rat(p, q), &rint(r)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_surd(), b in arb_surd(), c in arb_surd()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn normalize_idempotent(p in -50i64..50, q in 1i64..50, r in 0i64..500, rq in 1i64..40) {
            let x = SurdSum::normalize(&rat(p, q), &rat(r, rq)).unwrap();
            let again = x.terms().fold(SurdSum::zero(), |acc, (rad, c)| {
                acc + SurdSum::normalize(c, &Rational::from_integer(BigInt::from(rad.clone()))).unwrap()
            });
            prop_assert_eq!(again, x);
        }

        #[test]
        fn eval_additive(a in arb_surd(), b in arb_surd()) {
            let lhs = (&a + &b).to_f64();
            let rhs = a.to_f64() + b.to_f64();
            let scale = a.to_f64().abs() + b.to_f64().abs() + f64::MIN_POSITIVE;
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn display_parse_round_trip(a in arb_surd(), b in arb_surd()) {
            let g = GaussSurd::new(a, b);
            prop_assert_eq!(g.to_string().parse::<GaussSurd>().unwrap(), g);
        }
    }
}
