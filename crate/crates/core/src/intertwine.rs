//! The long intertwining operator `A(w₀, δ, λ)` on each K-type.
//!
//! Three routes are provided: the closed Γ-ratio, the finite Γ/multinomial
//! sum it is derived from, and direct numerical quadrature of the defining
//! integral over `n̄(z, w)`. All share the Γ kernel in [`crate::special`].
//!
//! Indices follow the K-type conventions of [`crate::action`]: the diagonal
//! entry for `(j, m1)` uses `k = 2j`, `l = 2m1`.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::action::{check_source, LatticePoint};
use crate::compact::{wigner_entry, UnitaryMatrix2, WignerIndex};
use crate::decomposition::{region_of, verify_closure, Chamber, Crossing};
use crate::special::{binomial, factorial, factorial_f64, gamma, is_gamma_pole, tanh_sinh};
use crate::surd::{HalfInt, Rational};
use crate::{Error, Result};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Γ-ratios with pole bookkeeping
// ---------------------------------------------------------------------------

/// A Γ argument `at + slope·ε`, where `ε` is the displacement of `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArg {
    pub at: Complex64,
    pub slope: f64,
}

impl GammaArg {
    pub fn new(at: Complex64, slope: f64) -> Self {
        GammaArg { at, slope }
    }

    /// Leading Laurent term of `Γ(at + slope·ε)`: `(coefficient, order)`.
    ///
    /// Near `-n`, `Γ(-n + x) ≈ (-1)^n / (n! x)`.
    fn leading(&self) -> (Complex64, i32) {
        if is_gamma_pole(self.at) {
            let n = (-self.at.re).round() as u64;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            (c(sign / (factorial_f64(n) * self.slope)), -1)
        } else {
            (gamma(self.at), 0)
        }
    }
}

/// The leading behaviour `leading · ε^order` of a meromorphic function of `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laurent {
    /// Positive for a zero, negative for a pole.
    pub order: i32,
    pub leading: Complex64,
}

impl Laurent {
    /// The value: `leading` when regular, `0` at a zero, infinite at a pole.
    pub fn value(&self) -> Complex64 {
        match self.order {
            0 => self.leading,
            o if o > 0 => Complex64::zero(),
            _ => c(f64::INFINITY),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.order >= 0
    }
}

/// `prefactor · Π Γ(num) / Π Γ(den)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRatio {
    pub prefactor: Complex64,
    pub num: Vec<GammaArg>,
    pub den: Vec<GammaArg>,
}

impl GammaRatio {
    /// Leading Laurent term in `ε`.
    pub fn eval(&self) -> Laurent {
        let mut order = 0;
        let mut leading = self.prefactor;
        for g in &self.num {
            let (v, o) = g.leading();
            leading *= v;
            order += o;
        }
        for g in &self.den {
            let (v, o) = g.leading();
            leading /= v;
            order -= o;
        }
        Laurent { order, leading }
    }
}

fn kl(j: HalfInt, m1: HalfInt) -> Result<(i64, i64)> {
    if m1.abs() > j || !(j - m1).is_integer() {
        return Err(Error::Domain(format!("invalid pair j = {j}, m1 = {m1}")));
    }
    Ok((j.twice(), m1.twice()))
}

/// The closed form as a Γ-ratio:
/// `π² 2^{-λ-1} Γ(λ) / (Γ(1-(λ-δ)/2) Γ(1-(λ+δ)/2))
///  · Γ(j+m1-(λ+δ)/2+1) Γ(j-m1-(λ-δ)/2+1) / (Γ(j+m1+(λ-δ)/2+1) Γ(j-m1+(λ+δ)/2+1))`.
pub fn a_closed_ratio(j: HalfInt, m1: HalfInt, delta: i64, lambda: Complex64) -> Result<GammaRatio> {
    kl(j, m1)?;
    let d = delta as f64;
    let (jp, jm) = ((j + m1).to_f64(), (j - m1).to_f64());
    let lp = (lambda + d) / 2.0;
    let lm = (lambda - d) / 2.0;
    Ok(GammaRatio {
        prefactor: c(PI * PI) * (-(lambda + 1.0) * 2f64.ln()).exp(),
        num: vec![GammaArg::new(lambda, 1.0), GammaArg::new(jp - lp + 1.0, -0.5), GammaArg::new(jm - lm + 1.0, -0.5)],
        den: vec![
            GammaArg::new(1.0 - lm, -0.5),
            GammaArg::new(1.0 - lp, -0.5),
            GammaArg::new(jp + lm + 1.0, 0.5),
            GammaArg::new(jm + lp + 1.0, 0.5),
        ],
    })
}

/// The closed form with its zero/pole order at `λ`.
pub fn a_closed(j: HalfInt, m1: HalfInt, delta: i64, lambda: Complex64) -> Result<Laurent> {
    Ok(a_closed_ratio(j, m1, delta, lambda)?.eval())
}

/// The form before the last reflection step:
/// `(-1)^{j-m1} π² 2^{-λ-1} Γ(λ) Γ((λ-δ)/2) Γ(j+m1-(λ+δ)/2+1)
///  / (Γ(1-(λ+δ)/2) Γ(-j+m1+(λ-δ)/2) Γ(j+m1+(λ-δ)/2+1) Γ(j-m1+(λ+δ)/2+1))`.
pub fn a_unreflected(j: HalfInt, m1: HalfInt, delta: i64, lambda: Complex64) -> Result<Laurent> {
    kl(j, m1)?;
    let d = delta as f64;
    let (jp, jm) = ((j + m1).to_f64(), (j - m1).to_f64());
    let lp = (lambda + d) / 2.0;
    let lm = (lambda - d) / 2.0;
    let sign = if (j - m1).to_integer().unwrap() % 2 == 0 { 1.0 } else { -1.0 };
    Ok(GammaRatio {
        prefactor: c(sign * PI * PI) * (-(lambda + 1.0) * 2f64.ln()).exp(),
        num: vec![GammaArg::new(lambda, 1.0), GammaArg::new(lm, 0.5), GammaArg::new(jp - lp + 1.0, -0.5)],
        den: vec![
            GammaArg::new(1.0 - lp, -0.5),
            GammaArg::new(lm - jm, 0.5),
            GammaArg::new(jp + lm + 1.0, 0.5),
            GammaArg::new(jm + lp + 1.0, 0.5),
        ],
    }
    .eval())
}

fn nonpositive_integer(r: &Rational) -> bool {
    r.is_integer() && *r <= Rational::zero()
}

/// Exact zero/pole order of the closed form at an integral `λ`, read from
/// the Γ arguments as rationals.
pub fn zero_pole_order(p: LatticePoint, delta: i64, lambda: i64) -> i32 {
    let h = |x: i64| Rational::new(BigInt::from(x), BigInt::from(2));
    let one = Rational::one();
    let (lp, lm) = (h(lambda + delta), h(lambda - delta));
    let (a, b) = (h(p.k + p.l), h(p.k - p.l));
    let num = [Rational::from_integer(lambda.into()), &a - &lp + &one, &b - &lm + &one];
    let den = [&one - &lm, &one - &lp, &a + &lm + &one, &b + &lp + &one];
    let poles = |xs: &[Rational]| xs.iter().filter(|x| nonpositive_integer(x)).count() as i32;
    poles(&den) - poles(&num)
}

// ---------------------------------------------------------------------------
// Finite Γ / multinomial sum
// ---------------------------------------------------------------------------

/// Value of the finite sum and the number of index triples it runs over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSum {
    pub value: Complex64,
    pub terms: usize,
}

/// The bare triple sum
/// `Σ (-1)^{K1+K2} Γ(K1+p+λ)/(Γ(λ) K1! p!) · C(K2+p, p)
///  · Γ(N+1)/(((k-l)/2-p-K1)! ((k+l)/2-p-K2)! Γ(-(k+l-λ-δ)/2+K1+K2+2p+1))`
/// with `N = (k-l+λ+δ)/2`, over `p+K1 ≤ (k-l)/2`, `p+K2 ≤ (k+l)/2`,
/// as a polynomial in `λ` (coefficients from degree 0 up).
///
/// Both Γ-ratios are rising factorials, so every term is a polynomial.
pub fn bare_sum_poly(k: i64, l: i64, delta: i64) -> Vec<Rational> {
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let f = |x: i64| Rational::from_integer(factorial(x as u64));
    let mut total: Vec<Rational> = Vec::new();
    for p in 0..=a.min(b) {
        for k1 in 0..=(a - p) {
            for k2 in 0..=(b - p) {
                let (ra, rb) = (a - p - k1, b - p - k2);
                // (λ)_{K1+p}
                let mut poly = rising(&[Rational::zero(), Rational::one()], k1 + p);
                // (c3+1)_{ra+rb} with c3 + 1 = λ/2 + (δ - k - l)/2 + K1 + K2 + 2p + 1
                let c0 = Rational::new(BigInt::from(delta - k - l), BigInt::from(2)) + Rational::from_integer((k1 + k2 + 2 * p + 1).into());
                poly = poly_mul(&poly, &rising(&[c0, half.clone()], ra + rb));
                let mut scale = binomial(k2 + p, p) / (f(k1) * f(p) * f(ra) * f(rb));
                if (k1 + k2) % 2 != 0 {
                    scale = -scale;
                }
                for (i, c) in poly.into_iter().enumerate() {
                    if total.len() <= i {
                        total.resize(i + 1, Rational::zero());
                    }
                    total[i] += c * &scale;
                }
            }
        }
    }
    total
}

/// `(x)(x+1)…(x+n-1)` for a linear `x = c[0] + c[1] λ`.
fn rising(lin: &[Rational; 2], n: i64) -> Vec<Rational> {
    let mut out = vec![Rational::one()];
    for i in 0..n {
        let f = [&lin[0] + Rational::from_integer(i.into()), lin[1].clone()];
        out = poly_mul(&out, &f);
    }
    out
}

fn poly_mul(x: &[Rational], y: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); x.len() + y.len() - 1];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Exact value of a rational polynomial at the binary value of `z`.
fn eval_exact(poly: &[Rational], z: Complex64) -> Result<Complex64> {
    let conv = |x: f64| Rational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite λ component {x}")));
    let (x, y) = (conv(z.re)?, conv(z.im)?);
    let (mut re, mut im) = (Rational::zero(), Rational::zero());
    for c in poly.iter().rev() {
        let r = &re * &x - &im * &y + c;
        im = &re * &y + &im * &x;
        re = r;
    }
    let f = |r: &Rational| r.to_f64().unwrap_or(f64::NAN);
    Ok(Complex64::new(f(&re), f(&im)))
}

/// [`bare_sum_poly`] at `λ`, evaluated exactly so that the alternating
/// terms cancel without rounding.
pub fn bare_sum(k: i64, l: i64, delta: i64, lambda: Complex64) -> Result<GammaSum> {
    if (k - l) % 2 != 0 || l.abs() > k {
        return Err(Error::Domain(format!("invalid lattice point ({k}, {l})")));
    }
    let value = eval_exact(&bare_sum_poly(k, l, delta), lambda)?;
    Ok(GammaSum { value, terms: gammasum_support(k, l) })
}

/// `2^{-λ-1} (-1)^{(k+l)/2} π² ((k+l)/2)! ((k-l)/2)! Γ(λ)
///  / (Γ((k+l-δ+λ)/2+1) Γ((k-l+δ+λ)/2+1))` times [`bare_sum`].
pub fn a_gammasum(j: HalfInt, m1: HalfInt, delta: i64, lambda: Complex64) -> Result<GammaSum> {
    let (k, l) = kl(j, m1)?;
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let s = bare_sum(k, l, delta, lambda)?;
    let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
    let pre = GammaRatio {
        prefactor: c(sign * PI * PI * factorial_f64(a as u64) * factorial_f64(b as u64)) * (-(lambda + 1.0) * 2f64.ln()).exp(),
        num: vec![GammaArg::new(lambda, 1.0)],
        den: vec![
            GammaArg::new((lambda + (k + l - delta) as f64) / 2.0 + 1.0, 0.5),
            GammaArg::new((lambda + (k - l + delta) as f64) / 2.0 + 1.0, 0.5),
        ],
    }
    .eval();
    if !pre.is_finite() {
        return Err(Error::Domain(format!("prefactor has a pole at λ = {lambda}")));
    }
    Ok(GammaSum { value: pre.value() * s.value, terms: s.terms })
}

/// Number of index triples of the finite sum: `Σ_p ((k-l)/2-p+1)((k+l)/2-p+1)`.
pub fn gammasum_support(k: i64, l: i64) -> usize {
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    (0..=a.min(b)).map(|p| ((a - p + 1) * (b - p + 1)) as usize).sum()
}

/// [`bare_sum`] in exact rational arithmetic at an integral `λ ≥ 1` with
/// `N = (k-l+λ+δ)/2` a nonnegative integer.
pub fn bare_sum_exact(k: i64, l: i64, delta: i64, lambda: i64) -> Result<Rational> {
    let n = exact_n(k, l, delta, lambda)?;
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let f = |x: i64| Rational::from_integer(factorial(x as u64));
    let mut total = Rational::zero();
    for p in 0..=a.min(b) {
        for k1 in 0..=(a - p) {
            for k2 in 0..=(b - p) {
                let c3 = n - (a - p - k1) - (b - p - k2);
                if c3 < 0 {
                    continue;
                }
                let m1 = f(k1 + p + lambda - 1) / (f(lambda - 1) * f(k1) * f(p));
                let m2 = binomial(k2 + p, p);
                let m3 = f(n) / (f(a - p - k1) * f(b - p - k2) * f(c3));
                let t = m1 * m2 * m3;
                if (k1 + k2) % 2 == 0 {
                    total += t;
                } else {
                    total -= t;
                }
            }
        }
    }
    Ok(total)
}

fn exact_n(k: i64, l: i64, delta: i64, lambda: i64) -> Result<i64> {
    if lambda < 1 {
        return Err(Error::Unsupported(format!("exact constant term needs λ ≥ 1, got {lambda}")));
    }
    let twice = k - l + lambda + delta;
    if twice < 0 || twice % 2 != 0 {
        return Err(Error::Unsupported(format!("exponent (k-l+λ+δ)/2 = {twice}/2 is not a nonnegative integer")));
    }
    Ok(twice / 2)
}

/// The Γ-ratio the constant term reduces to:
/// `Γ(1+(k+l)/2-(λ+δ)/2) Γ((λ-δ)/2)
///  / (((k+l)/2)! ((k-l)/2)! Γ(1-(λ+δ)/2) Γ(-(k-l)/2+(λ-δ)/2))`.
pub fn constant_term_closed(k: i64, l: i64, delta: i64, lambda: Complex64) -> Laurent {
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let lp = (lambda + delta as f64) / 2.0;
    let lm = (lambda - delta as f64) / 2.0;
    GammaRatio {
        prefactor: c(1.0 / (factorial_f64(a as u64) * factorial_f64(b as u64))),
        num: vec![GammaArg::new(1.0 + b as f64 - lp, -0.5), GammaArg::new(lm, 0.5)],
        den: vec![GammaArg::new(1.0 - lp, -0.5), GammaArg::new(lm - a as f64, 0.5)],
    }
    .eval()
}

/// A truncated power series in `s` and `t` with rational coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Series {
    smax: i64,
    tmax: i64,
    c: BTreeMap<(i64, i64), Rational>,
}

impl Series {
    fn constant(smax: i64, tmax: i64, v: Rational) -> Self {
        Series { smax, tmax, c: BTreeMap::from([((0, 0), v)]) }
    }

    /// `(1 + x)^e` for `x ∈ {s, t}` (binomial series, finite when `e ≥ 0`).
    fn one_plus(smax: i64, tmax: i64, in_s: bool, e: i64) -> Self {
        let top = if in_s { smax } else { tmax };
        let c = (0..=top)
            .map(|i| (if in_s { (i, 0) } else { (0, i) }, binomial(e, i)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Series { smax, tmax, c }
    }

    fn mul(&self, o: &Series) -> Series {
        let mut c: BTreeMap<(i64, i64), Rational> = BTreeMap::new();
        for (&(a, b), x) in &self.c {
            for (&(p, q), y) in &o.c {
                if a + p <= self.smax && b + q <= self.tmax {
                    *c.entry((a + p, b + q)).or_insert_with(Rational::zero) += x * y;
                }
            }
        }
        c.retain(|_, v| !v.is_zero());
        Series { smax: self.smax, tmax: self.tmax, c }
    }

    fn sub(&self, o: &Series) -> Series {
        let mut c = self.c.clone();
        for (k, v) in &o.c {
            *c.entry(*k).or_insert_with(Rational::zero) -= v;
        }
        c.retain(|_, v| !v.is_zero());
        Series { smax: self.smax, tmax: self.tmax, c }
    }

    fn pow(&self, n: i64) -> Series {
        (0..n).fold(Series::constant(self.smax, self.tmax, Rational::one()), |acc, _| acc.mul(self))
    }

    fn coeff(&self, a: i64, b: i64) -> Rational {
        self.c.get(&(a, b)).cloned().unwrap_or_else(Rational::zero)
    }
}

/// The constant-term extraction and where it is comparable with the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTerm {
    /// Coefficient of `s^{λ-1} t^0`.
    pub value: Rational,
    /// True when `λ - δ ≥ 2`; otherwise negative powers of `(1+s)` carry
    /// terms the finite sum does not contain.
    pub comparable: bool,
}

/// Coefficient of `s^{λ-1} t^0` in
/// `(1+s)^{(k-l)/2+λ-1} (1+t)^{(k-l)/2} (1+1/t)^{(k+l)/2}
///  (1 - 1/((1+s)(1+t)) - 1/(1+1/t))^{(k-l+λ+δ)/2}`,
/// expanded as a power series around `s = t = 0`.
pub fn constant_term_oracle(j: HalfInt, m1: HalfInt, delta: i64, lambda: i64) -> Result<ConstantTerm> {
    let (k, l) = kl(j, m1)?;
    let n = exact_n(k, l, delta, lambda)?;
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let (smax, tmax) = (lambda - 1, b);
    let one = Series::constant(smax, tmax, Rational::one());
    let inv_s = Series::one_plus(smax, tmax, true, -1);
    let inv_t = Series::one_plus(smax, tmax, false, -1);
    let t = Series { smax, tmax, c: BTreeMap::from([((0, 1), Rational::one())]) };
    // 1/(1 + 1/t) = t/(1 + t)
    let g = one.sub(&inv_s.mul(&inv_t)).sub(&t.mul(&inv_t));
    let p = Series::one_plus(smax, tmax, true, a + lambda - 1).mul(&Series::one_plus(smax, tmax, false, a)).mul(&g.pow(n));
    // (1 + 1/t)^b = Σ C(b, i) t^{-i}
    let value = (0..=b).map(|i| binomial(b, i) * p.coeff(lambda - 1, i)).fold(Rational::zero(), |x, y| x + y);
    Ok(ConstantTerm { value, comparable: lambda - delta >= 2 })
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Which form of the integral to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// The angular integral done analytically: a double integral in `(v, t)`
    /// summed over `p` (diagonal entries only).
    Polar,
    /// The defining integrand `R^{-(λ+2)} W(w₀ k(z, w))` on `(θ, v, t)`,
    /// with the periodic `θ` integral done by the trapezoid rule.
    Direct,
}

/// Tolerances for [`a_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of step halvings per axis.
    pub max_level: u32,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-15, max_level: 12, transform: Transform::Polar }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::Domain(format!("tolerance {} outside (0, 1e-3]", self.rel_tol)));
        }
        Ok(())
    }
}

/// A quadrature estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: Complex64,
    pub error: f64,
}

/// Upper-left block of `w₀ k(z, w)`:
/// `[[(|z|²-2iw-1)/R, 2z̄/(|z|²-2iw+1)], [-2z/R, (|z|²+2iw-1)/(|z|²-2iw+1)]]`.
pub fn w0_k_block(z: Complex64, w: f64) -> (UnitaryMatrix2, f64) {
    let s = z.norm_sqr();
    let r = ((s + 1.0).powi(2) + 4.0 * w * w).sqrt();
    let dm = Complex64::new(s + 1.0, -2.0 * w);
    let m = [
        [Complex64::new(s - 1.0, -2.0 * w) / r, z.conj() * 2.0 / dm],
        [-z * 2.0 / r, Complex64::new(s - 1.0, 2.0 * w) / dm],
    ];
    (UnitaryMatrix2 { m }, r)
}

fn nested<F>(f: F, spec: &QuadratureSpec, a: f64, b: f64, c0: f64, c1: f64) -> Result<QuadratureValue>
where
    F: Fn(f64, f64, f64, f64, f64) -> Complex64,
{
    let inner_err = Cell::new(0.0f64);
    let inner_ok = Cell::new(true);
    let inner_rel = spec.rel_tol * 1e-2;
    let outer = tanh_sinh(
        |v, vl, vr| {
            let r = tanh_sinh(|t, tl, tr| f(v, vl, vr, t, if t < 0.0 { tl } else { tr }), c0, c1, inner_rel, spec.abs_tol, spec.max_level);
            inner_err.set(inner_err.get().max(r.error));
            if !r.converged {
                inner_ok.set(false);
            }
            r.value
        },
        a,
        b,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_level,
    );
    let error = outer.error + inner_err.get();
    if !outer.converged || !inner_ok.get() {
        return Err(Error::Quadrature { estimate: outer.value, bound: error });
    }
    Ok(QuadratureValue { value: outer.value, error })
}

/// Diagonal entry through the polar form:
/// `2π Σ_p C(j+m1, p) C(j-m1, p) (-4)^p / 4 ∫₀¹ dv v^p (1-v)^{p+λ-1}
///  ∫ dt cos^{λ+2p} t e^{i(δ-l)t} ((2v-1)cos t + i sin t)^{(k+l)/2-p} ((2v-1)cos t - i sin t)^{(k-l)/2-p}`,
/// obtained from `r² = v/(1-v)`, `w = (1+r²) tan t / 2`.
fn polar(k: i64, l: i64, delta: i64, lambda: Complex64, spec: &QuadratureSpec) -> Result<QuadratureValue> {
    let (a, b) = ((k - l) / 2, (k + l) / 2);
    let coef: Vec<f64> = (0..=a.min(b))
        .map(|p| {
            let bin = |n: i64| factorial_f64(n as u64) / (factorial_f64(p as u64) * factorial_f64((n - p) as u64));
            bin(a) * bin(b) * (-4f64).powi(p as i32)
        })
        .collect();
    let f = |v: f64, _vl: f64, vr: f64, t: f64, tdist: f64| -> Complex64 {
        let ct = tdist.sin();
        let st = t.sin();
        if ct <= 0.0 || vr <= 0.0 {
            return Complex64::zero();
        }
        let x = 2.0 * v - 1.0;
        let up = Complex64::new(x * ct, st);
        let dn = Complex64::new(x * ct, -st);
        let phase = Complex64::from_polar(1.0, (delta - l) as f64 * t);
        let mut s = Complex64::zero();
        for (p, cp) in coef.iter().enumerate() {
            let p = p as i64;
            let w = ((lambda + (p - 1) as f64) * vr.ln()).exp() * v.powi(p as i32);
            let cpow = ((lambda + (2 * p) as f64) * ct.ln()).exp();
            s += up.powi((b - p) as i32) * dn.powi((a - p) as i32) * w * cpow * *cp;
        }
        s * phase
    };
    let r = nested(f, spec, 0.0, 1.0, -FRAC_PI_2, FRAC_PI_2)?;
    let scale = 2.0 * PI / 4.0;
    Ok(QuadratureValue { value: r.value * scale, error: r.error * scale })
}

/// Any entry through the defining integrand.
fn direct(idx: &WignerIndex, lambda: Complex64, spec: &QuadratureSpec) -> Result<QuadratureValue> {
    let nth = 2 * idx.j.twice() as usize + 2;
    let f = |v: f64, _vl: f64, vr: f64, t: f64, tdist: f64| -> Complex64 {
        let (ct, st) = (tdist.sin(), t.sin());
        if ct < 1e-150 || vr < 1e-150 {
            return Complex64::zero();
        }
        let r = (v / vr).sqrt();
        let w = st / ct / (2.0 * vr);
        let mut acc = Complex64::zero();
        for q in 0..nth {
            let z = Complex64::from_polar(r, 2.0 * PI * q as f64 / nth as f64);
            let (g, big_r) = w0_k_block(z, w);
            acc += (-(lambda + 2.0) * big_r.ln()).exp() * wigner_entry(idx, &g);
        }
        acc *= 2.0 * PI / nth as f64;
        // dθ dv/(2(1-v)²) · sec²t/(2(1-v)) dt
        let jac = 1.0 / (4.0 * vr * vr * vr * ct * ct);
        let out = acc * jac;
        if out.re.is_finite() && out.im.is_finite() {
            out
        } else {
            Complex64::zero()
        }
    };
    nested(f, spec, 0.0, 1.0, -FRAC_PI_2, FRAC_PI_2)
}

/// Numerical value of the matrix entry `⟨W_{m1,m2}, A W⟩` of the defining
/// integral; needs `Re λ > 0`.
///
/// Diagonal entries use `spec.transform`; off-diagonal entries always use the
/// direct integrand, where the angular integral makes them vanish.
pub fn a_quadrature(idx: &WignerIndex, delta: i64, lambda: Complex64, spec: &QuadratureSpec) -> Result<QuadratureValue> {
    spec.validate()?;
    check_source(idx, delta)?;
    if lambda.re <= 0.0 {
        return Err(Error::Domain(format!("the integral needs Re λ > 0, got {lambda}")));
    }
    if idx.m1 == idx.m2 && spec.transform == Transform::Polar {
        polar(idx.j.twice(), idx.m1.twice(), delta, lambda, spec)
    } else {
        direct(idx, lambda, spec)
    }
}

/// The diagonal index `(j, 3m1-δ, m1, m1)`.
pub fn diagonal_index(j: HalfInt, m1: HalfInt, delta: i64) -> Result<WignerIndex> {
    let n = HalfInt::from_twice(3 * m1.twice() - 2 * delta);
    WignerIndex::new(j, n, m1, m1)
}

// ---------------------------------------------------------------------------
// Path comparison
// ---------------------------------------------------------------------------

/// Relative agreement required of the finite sum.
pub const GAMMASUM_AGREEMENT: f64 = 1e-10;
/// Relative agreement required of quadrature at the default tolerance.
pub const QUADRATURE_AGREEMENT: f64 = 1e-6;

/// One evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Path {
    Closed,
    GammaSum,
    Quadrature,
}

impl Path {
    pub const ALL: [Path; 3] = [Path::Closed, Path::GammaSum, Path::Quadrature];

    pub fn name(self) -> &'static str {
        match self {
            Path::Closed => "closed",
            Path::GammaSum => "gammasum",
            Path::Quadrature => "quadrature",
        }
    }
}

/// A route's value and its distance from the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValue {
    pub path: Path,
    pub value: Complex64,
    /// Quadrature error bound or finite-sum term count, where meaningful.
    pub error: Option<f64>,
    pub terms: Option<usize>,
    /// Relative difference from the closed form (absolute when it vanishes).
    pub diff: f64,
    pub threshold: f64,
}

impl PathValue {
    pub fn agrees(&self) -> bool {
        self.diff <= self.threshold
    }
}

/// All requested routes for one diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub closed: Laurent,
    /// Exact order from [`zero_pole_order`] when `λ` is an integer.
    pub exact_order: Option<i32>,
    pub values: Vec<PathValue>,
    /// Routes that failed to produce a value, with the error.
    pub failures: Vec<(Path, Error)>,
}

impl PathReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.values.iter().all(PathValue::agrees)
    }
}

fn distance(v: Complex64, reference: Complex64) -> f64 {
    let d = (v - reference).norm();
    if reference.norm() > 0.0 {
        d / reference.norm()
    } else {
        d
    }
}

/// Evaluates the diagonal entry at `(j, m1)` along `paths` and compares each
/// with the closed form.
pub fn compare_paths(
    j: HalfInt,
    m1: HalfInt,
    delta: i64,
    lambda: Complex64,
    paths: &[Path],
    spec: &QuadratureSpec,
) -> Result<PathReport> {
    spec.validate()?;
    let closed = a_closed(j, m1, delta, lambda)?;
    let reference = closed.value();
    let exact_order = (lambda.im == 0.0 && lambda.re.fract() == 0.0)
        .then(|| zero_pole_order(LatticePoint { k: j.twice(), l: m1.twice() }, delta, lambda.re as i64));
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for &path in paths {
        let v = match path {
            Path::Closed => Ok((reference, None, None, 0.0)),
            Path::GammaSum => a_gammasum(j, m1, delta, lambda).map(|g| (g.value, None, Some(g.terms), GAMMASUM_AGREEMENT)),
            Path::Quadrature => diagonal_index(j, m1, delta)
                .and_then(|idx| a_quadrature(&idx, delta, lambda, spec))
                .map(|q| (q.value, Some(q.error), None, QUADRATURE_AGREEMENT.max(10.0 * spec.rel_tol))),
        };
        match v {
            Ok((value, error, terms, threshold)) => {
                values.push(PathValue { path, value, error, terms, diff: distance(value, reference), threshold })
            }
            Err(e) => failures.push((path, e)),
        }
    }
    if !closed.is_finite() {
        failures.push((Path::Closed, Error::Domain(format!("closed form has a pole of order {} at λ = {lambda}", -closed.order))));
    }
    Ok(PathReport { closed, exact_order, values, failures })
}

// ---------------------------------------------------------------------------
// Comparison with the decomposition
// ---------------------------------------------------------------------------

/// Zero/pole orders of the closed form over the truncated lattice, compared
/// with the coefficient walls found by the closure check.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerCheck {
    pub chamber: Chamber,
    pub orders: BTreeMap<LatticePoint, i32>,
    /// Distinct orders; nontrivial when more than one.
    pub distinct: BTreeSet<i32>,
    /// Wall crossings across which the order does not change.
    pub silent_walls: Vec<Crossing>,
    /// Neighbouring points in one region with different orders.
    pub split_regions: Vec<(LatticePoint, LatticePoint)>,
}

impl LedgerCheck {
    pub fn nontrivial(&self) -> bool {
        self.distinct.len() > 1
    }

    pub fn pass(&self) -> bool {
        self.nontrivial() && self.silent_walls.is_empty() && self.split_regions.is_empty()
    }
}

/// Builds the order ledger for `k ≤ kmax` and checks it against
/// [`verify_closure`]: every wall changes the order and every region has
/// constant order.
pub fn ledger_vs_walls(delta: i64, lambda: i64, kmax: i64) -> Result<LedgerCheck> {
    let closure = verify_closure(delta, lambda, kmax)?;
    let ch = closure.chamber;
    let orders: BTreeMap<LatticePoint, i32> =
        LatticePoint::all(kmax).into_iter().map(|p| (p, zero_pole_order(p, delta, lambda))).collect();
    let distinct = orders.values().copied().collect();
    let silent_walls = closure.walls.iter().filter(|w| orders[&w.source] == orders[&w.target]).copied().collect();
    let mut split_regions = Vec::new();
    for (&p, &o) in &orders {
        for (dk, dl) in [(1, 1), (1, -1)] {
            let q = LatticePoint { k: p.k + dk, l: p.l + dl };
            if let Some(&oq) = orders.get(&q) {
                if region_of(ch, delta, lambda, p) == region_of(ch, delta, lambda, q) && o != oq {
                    split_regions.push((p, q));
                }
            }
        }
    }
    Ok(LedgerCheck { chamber: ch, orders, distinct, silent_walls, split_regions })
}
