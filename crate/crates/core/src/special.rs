//! Special functions and quadrature shared by the numeric paths.
//!
//! One complex Γ kernel (Lanczos, g = 7, nine terms, reflection below
//! `Re z = 1/2`) serves every Γ evaluation in the crate, so cross-path
//! comparisons isolate formula errors rather than kernel differences.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::surd::Rational;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `sin(π z)` with exact zeros at integers.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let w = Complex64::new(z.re - n, z.im);
    let s = (w * PI).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// True when `z` is a nonpositive integer to within `1e-13`.
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im.abs() < 1e-13 && z.re < 0.5 && (z.re - z.re.round()).abs() < 1e-13
}

/// `ln Γ(z)` for `Re z ≥ 1/2` (Lanczos); branch of the imaginary part unspecified.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut a = c(LANCZOS[0]);
    for (k, &coef) in LANCZOS.iter().enumerate().skip(1) {
        a += coef / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    c(0.5 * (2.0 * PI).ln()) + (z + 0.5) * t.ln() - t + a.ln()
}

/// Complex `ln Γ(z)` with reflection for `Re z < 1/2`.
///
/// The imaginary part is determined modulo `2π`; only `exp` of the result is
/// meaningful across the reflection.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        c(PI.ln()) - sin_pi(z).ln() - ln_gamma_right(c(1.0) - z)
    } else {
        ln_gamma_right(z)
    }
}

/// `Γ(z)`; infinite at the poles.
pub fn gamma(z: Complex64) -> Complex64 {
    if is_gamma_pole(z) {
        return c(f64::INFINITY);
    }
    if z.re < 0.5 {
        c(PI) / (sin_pi(z) * ln_gamma_right(c(1.0) - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// `1/Γ(z)`, exactly zero at the poles of `Γ`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_gamma_pole(z) {
        return c(0.0);
    }
    if z.re < 0.5 {
        sin_pi(z) * ln_gamma_right(c(1.0) - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// Rising factorial `(x)_n = x (x+1) ⋯ (x+n-1)`.
pub fn pochhammer(x: Complex64, n: u64) -> Complex64 {
    (0..n).fold(c(1.0), |acc, k| acc * (x + k as f64))
}

/// `n!` as `f64`.
pub fn factorial_f64(n: u64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `n!` exactly.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Generalised binomial `C(a, k) = a (a-1) ⋯ (a-k+1) / k!` for integer `a`,
/// zero for `k < 0`.
pub fn binomial(a: i64, k: i64) -> Rational {
    if k < 0 {
        return Rational::zero();
    }
    let mut num = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(a - i);
    }
    Rational::new(num, factorial(k as u64))
}

/// Rising factorial `(x)_n` of a rational.
pub fn pochhammer_exact(x: &Rational, n: u64) -> Rational {
    let mut acc = Rational::one();
    for k in 0..n {
        acc *= x + Rational::from_integer(BigInt::from(k));
    }
    acc
}

/// Outcome of an adaptive tanh-sinh integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    /// Best estimate.
    pub value: Complex64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    /// True when the requested tolerance was reached.
    pub converged: bool,
}

/// Adaptive tanh-sinh rule on `(a, b)`.
///
/// The integrand receives `(x, x - a, b - x)` with both endpoint distances
/// computed without cancellation, so endpoint singularities such as
/// `(b - x)^{-1/2}` are evaluated accurately. The step is halved until two
/// successive estimates agree to `rel_tol` relative or `abs_tol` absolute.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_level: u32) -> QuadResult
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    const T_MAX: f64 = 4.0;
    let half = 0.5 * (b - a);
    let node = |t: f64| -> Complex64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // 1 - tanh|u| = 2 / (e^{2|u|} + 1)
        let comp = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let d_near = half * comp;
        if d_near <= 0.0 || w == 0.0 {
            return c(0.0);
        }
        let (x, dl, dr) = if u < 0.0 {
            (a + d_near, d_near, 2.0 * half - d_near)
        } else {
            (b - d_near, 2.0 * half - d_near, d_near)
        };
        f(x, dl, dr) * (w * half)
    };
    let mut h = 0.5f64;
    let mut sum = node(0.0);
    let n0 = (T_MAX / h) as i64;
    for k in 1..=n0 {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
    }
    let mut est = sum * h;
    let mut err = f64::INFINITY;
    for _level in 1..=max_level {
        h *= 0.5;
        let n = (T_MAX / h) as i64;
        let mut add = c(0.0);
        let mut k = 1;
        while k <= n {
            let t = k as f64 * h;
            add += node(t) + node(-t);
            k += 2;
        }
        sum += add;
        let new = sum * h;
        err = (new - est).norm();
        est = new;
        if err <= rel_tol * est.norm() || err <= abs_tol {
            return QuadResult { value: est, error: err, converged: true };
        }
    }
    QuadResult { value: est, error: err, converged: false }
}
