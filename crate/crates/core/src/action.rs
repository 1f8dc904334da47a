//! The (g,K)-module of the principal series `I(χ_{δ,λ})` realised on Wigner
//! D-functions: K-types, left and right actions, operator assembly and
//! Casimir checks.
//!
//! Coefficients are [`LambdaPoly`] values, exact polynomials in a formal `λ`;
//! numeric values follow by evaluation at the end.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::compact::{cg, m_range, spins_up_to, WignerIndex};
use crate::structure::{basis_matrix, express_in_kp, LieBasis, NcRoot, Root};
use crate::surd::{rat, GaussSurd, HalfInt, LambdaPoly, Rational, SurdSum};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Parameters and K-types
// ---------------------------------------------------------------------------

/// The value of the induction parameter `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaValue {
    /// Symbolic `λ`; coefficients stay polynomials.
    Formal,
    /// Integral `λ` (decomposition mode).
    Integer(i64),
    /// Complex `λ` (analytic mode).
    Complex(Complex64),
}

/// The character `χ_{δ,λ}` of the minimal parabolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductionChar {
    pub delta: i64,
    pub lambda: LambdaValue,
}

impl InductionChar {
    pub fn formal(delta: i64) -> Self {
        InductionChar { delta, lambda: LambdaValue::Formal }
    }

    pub fn integer(delta: i64, lambda: i64) -> Self {
        InductionChar { delta, lambda: LambdaValue::Integer(lambda) }
    }

    pub fn complex(delta: i64, lambda: Complex64) -> Self {
        InductionChar { delta, lambda: LambdaValue::Complex(lambda) }
    }

    /// Integral `λ` with `λ ± δ` even and `|λ - δ| ≥ 2`.
    pub fn is_decomposition_mode(&self) -> bool {
        match self.lambda {
            LambdaValue::Integer(l) => (l + self.delta).rem_euclid(2) == 0 && (l - self.delta).abs() >= 2,
            _ => false,
        }
    }

    /// Numeric `λ`, if any.
    pub fn lambda_complex(&self) -> Option<Complex64> {
        match self.lambda {
            LambdaValue::Formal => None,
            LambdaValue::Integer(l) => Some(Complex64::new(l as f64, 0.0)),
            LambdaValue::Complex(c) => Some(c),
        }
    }

    /// Numeric value of a coefficient.
    pub fn eval(&self, p: &LambdaPoly) -> Result<Complex64> {
        self.lambda_complex()
            .map(|l| p.eval_at(l))
            .ok_or_else(|| Error::Domain("formal λ has no numeric value".into()))
    }

    /// Exact value of a coefficient at an integral `λ`.
    pub fn eval_exact(&self, p: &LambdaPoly) -> Option<GaussSurd> {
        match self.lambda {
            LambdaValue::Integer(l) => Some(p.eval_exact(&Rational::from_integer(l.into()))),
            _ => None,
        }
    }
}

/// A K-type `(j, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KType {
    pub j: HalfInt,
    pub n: HalfInt,
}

/// A point `(k, l)` of the K-type cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub k: i64,
    pub l: i64,
}

impl LatticePoint {
    /// `k ≥ 0`, `|l| ≤ k`, `k ≡ l (mod 2)`.
    pub fn is_valid(&self) -> bool {
        self.k >= 0 && self.l.abs() <= self.k && (self.k - self.l).rem_euclid(2) == 0
    }

    /// The K-type `(j, n) = (k/2, 3l/2 - δ)`.
    pub fn ktype(&self, delta: i64) -> KType {
        KType { j: HalfInt::from_twice(self.k), n: HalfInt::from_twice(3 * self.l - 2 * delta) }
    }

    /// All valid points with `k ≤ kmax`.
    pub fn all(kmax: i64) -> Vec<LatticePoint> {
        (0..=kmax).flat_map(|k| (-k..=k).step_by(2).map(move |l| LatticePoint { k, l })).collect()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.l)
    }
}

impl KType {
    /// The unique `m2 = (n + δ)/3`, when it is admissible.
    pub fn m2(&self, delta: i64) -> Option<HalfInt> {
        let t = self.n.twice() + 2 * delta;
        if t.rem_euclid(3) != 0 {
            return None;
        }
        let m2 = HalfInt::from_twice(t / 3);
        ((self.j + m2).is_integer() && m2.abs() <= self.j && self.j.twice() >= 0).then_some(m2)
    }

    /// Lattice coordinates `(2j, 2m2)`.
    pub fn lattice(&self, delta: i64) -> Option<LatticePoint> {
        self.m2(delta).map(|m2| LatticePoint { k: self.j.twice(), l: m2.twice() })
    }

    /// The basis vectors `W^{(j,n)}_{m1,m2}` of this K-type.
    pub fn basis(&self, delta: i64) -> Vec<WignerIndex> {
        match self.m2(delta) {
            Some(m2) => m_range(self.j).map(|m1| WignerIndex { j: self.j, n: self.n, m1, m2 }).collect(),
            None => Vec::new(),
        }
    }
}

impl fmt::Display for KType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j, self.n)
    }
}

/// All K-types with `j ≤ jmax`, each with its lattice point.
pub fn ktype_set(delta: i64, jmax: HalfInt) -> Vec<(KType, LatticePoint)> {
    let mut out = Vec::new();
    for j in spins_up_to(jmax) {
        for m2 in m_range(j) {
            let kt = KType { j, n: HalfInt::from_twice(3 * m2.twice() - 2 * delta) };
            out.push((kt, LatticePoint { k: j.twice(), l: m2.twice() }));
        }
    }
    out
}

/// All basis vectors with `j ≤ jmax`.
pub fn basis(delta: i64, jmax: HalfInt) -> Vec<WignerIndex> {
    ktype_set(delta, jmax).iter().flat_map(|(kt, _)| kt.basis(delta)).collect()
}

/// Checks `3m2 - n = δ` and the index invariants.
pub fn check_source(src: &WignerIndex, delta: i64) -> Result<()> {
    src.validate()?;
    if 3 * src.m2.twice() - src.n.twice() != 2 * delta {
        return Err(Error::Domain(format!("{src} violates 3m2 - n = {delta}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// One term `coeff · W_target` of an action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTerm {
    pub target: WignerIndex,
    pub coeff: LambdaPoly,
}

/// A sparse vector in the span of Wigner D-functions.
pub type Vector = BTreeMap<WignerIndex, LambdaPoly>;

fn hf(t: i64) -> HalfInt {
    HalfInt::from_twice(t)
}

fn sqrt_h(a: HalfInt, b: HalfInt) -> SurdSum {
    SurdSum::sqrt(&(a.to_rational() * b.to_rational())).expect("nonnegative")
}

fn cgs(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, jj: HalfInt, mm: HalfInt) -> SurdSum {
    if jj.twice() < 0 || m1.abs() > j1 {
        return SurdSum::zero();
    }
    cg(j1, m1, j2, m2, jj, mm).expect("valid parities")
}

fn gauss(s: SurdSum) -> GaussSurd {
    GaussSurd::real(s)
}

/// `κ_{j0,±}(j, n, m2; λ)`.
fn kappa(j0_up: bool, positive: bool, j: HalfInt, n: HalfInt, m2: HalfInt) -> LambdaPoly {
    let c = |h: HalfInt| GaussSurd::real(SurdSum::from_rational(h.to_rational()));
    let two = HalfInt::from_int(2);
    let jj = j + j;
    let lin = |a: HalfInt, b: i64| LambdaPoly::new(vec![c(a), GaussSurd::int(b)]).expect("linear");
    match (j0_up, positive) {
        (false, false) => lin(-(jj - m2 + n), 1),
        (false, true) => lin(jj + m2 - n, -1),
        (true, false) => lin(jj + m2 - n + two, 1),
        (true, true) => lin(jj - m2 + n + two, 1),
    }
}

/// `q_{j0,±}(j, m2)`.
fn q_factor(j0_up: bool, positive: bool, j: HalfInt, m2: HalfInt) -> SurdSum {
    let one = HalfInt::ONE;
    let v = match (j0_up, positive) {
        (false, false) => j + m2,
        (false, true) => j - m2,
        (true, false) => j - m2 + one,
        (true, true) => j + m2 + one,
    };
    SurdSum::sqrt(&v.to_rational()).expect("nonnegative")
}

fn target_of(alpha: NcRoot, src: &WignerIndex, j0: HalfInt) -> WignerIndex {
    let (m2a, n2a) = alpha.weight_twice();
    let shift = if alpha.is_positive() { HalfInt::HALF } else { -HalfInt::HALF };
    WignerIndex { j: src.j + j0, n: src.n + hf(n2a), m1: src.m1 + hf(m2a), m2: src.m2 + shift }
}

fn push_term(out: &mut Vec<ActionTerm>, target: WignerIndex, coeff: LambdaPoly, delta: i64) {
    if coeff.is_zero() || target.j.twice() < 0 || target.m1.abs() > target.j || target.m2.abs() > target.j {
        return;
    }
    assert_eq!(3 * target.m2.twice() - target.n.twice(), 2 * delta, "target {target} leaves the principal series");
    out.push(ActionTerm { target, coeff });
}

/// Left action of `v_α` by the simplified two-term formula.
pub fn dl_valpha(alpha: NcRoot, src: &WignerIndex, delta: i64) -> Result<Vec<ActionTerm>> {
    check_source(src, delta)?;
    let (j, n, m1, m2) = (src.j, src.n, src.m1, src.m2);
    let m_alpha = hf(alpha.weight_twice().0);
    let pos = alpha.is_positive();
    let pre = SurdSum::sqrt(&Rational::from_integer((j.twice() + 1).into()))?.inv_monomial().expect("monomial").scale(&rat(1, 2));
    let mut out = Vec::new();
    for j0_up in [false, true] {
        let j0 = if j0_up { HalfInt::HALF } else { -HalfInt::HALF };
        let target = target_of(alpha, src, j0);
        if target.j.twice() < 0 {
            continue;
        }
        let c = cgs(j, m1, HalfInt::HALF, m_alpha, j + j0, m1 + m_alpha);
        let scalar = &(&pre * &c) * &q_factor(j0_up, pos, j, m2);
        if scalar.is_zero() {
            continue;
        }
        let coeff = kappa(j0_up, pos, j, n, m2).scale(&gauss(scalar));
        push_term(&mut out, target, coeff, delta);
    }
    Ok(out)
}

/// Left action of `v_α` by the unsimplified route: products of Clebsch-Gordan
/// coefficients from the right action and the product formula.
pub fn dl_valpha_before_cg(alpha: NcRoot, src: &WignerIndex, delta: i64) -> Result<Vec<ActionTerm>> {
    check_source(src, delta)?;
    let (j, n, m1, m2) = (src.j, src.n, src.m1, src.m2);
    let m_alpha = hf(alpha.weight_twice().0);
    let half = HalfInt::HALF;
    let one = HalfInt::ONE;
    let (s, m0) = if alpha.is_positive() { (1i64, half) } else { (-1i64, -half) };
    let mut out = Vec::new();
    for j0 in [-half, half] {
        let jj = j + j0;
        if jj.twice() < 0 {
            continue;
        }
        // √((j ∓ m2)(j ± m2 + 1)) cg(j, m2 ± 1, 1/2, ∓1/2 → J, m2 ± 1/2)
        let (shift_m2, a, b) = if s > 0 { (m2 + one, j - m2, j + m2 + one) } else { (m2 - one, j + m2, j - m2 + one) };
        let first = gauss(&sqrt_h(a, b) * &cgs(j, shift_m2, half, -m0, jj, m2 + m0));
        // -(1/2)(∓n ∓ m2 - λ - 2) cg(j, m2, 1/2, ±1/2 → J, m2 ± 1/2)
        let c2 = gauss(cgs(j, m2, half, m0, jj, m2 + m0));
        let sn = if s > 0 { -(n + m2) } else { n + m2 };
        let inner = LambdaPoly::new(vec![
            GaussSurd::real(SurdSum::from_rational(sn.to_rational() - Rational::from_integer(2.into()))),
            GaussSurd::int(-1),
        ])?;
        let second = inner.scale(&(&c2 * &GaussSurd::rat(-1, 2)));
        let bracket = &LambdaPoly::constant(first) + &second;
        let outer = gauss(cgs(j, m1, half, m_alpha, jj, m1 + m_alpha));
        push_term(&mut out, target_of(alpha, src, j0), bracket.scale(&outer), delta);
    }
    Ok(out)
}

/// Left action of a compact generator `U0..U3`.
///
/// `dl(U0) = i n`, `dl(U3) = i m1`, and `dl(U1 ± iU2)` shifts `m1` by `±1`
/// with coefficient `-i√((j ∓ m1)(j ± m1 + 1))`.
pub fn dl_k(e: LieBasis, src: &WignerIndex) -> Result<Vec<ActionTerm>> {
    src.validate()?;
    compact_action(e, src, src.m1, |m| WignerIndex { m1: m, ..*src }, false)
}

/// Right action of a compact generator: `dr(U0) = -i n`, `dr(U3) = -i m2`,
/// and `dr(U1 ± iU2)` shifts `m2` by `∓1` with coefficient `i√((j ± m2)(j ∓ m2 + 1))`.
fn dr_k(e: LieBasis, src: &WignerIndex) -> Result<Vec<ActionTerm>> {
    compact_action(e, src, src.m2, |m| WignerIndex { m2: m, ..*src }, true)
}

fn compact_action(
    e: LieBasis,
    src: &WignerIndex,
    m: HalfInt,
    with_m: impl Fn(HalfInt) -> WignerIndex,
    right: bool,
) -> Result<Vec<ActionTerm>> {
    let j = src.j;
    let one = HalfInt::ONE;
    let sign = if right { -1 } else { 1 };
    let diag = |v: HalfInt| {
        let c = GaussSurd::real(SurdSum::from_rational(v.to_rational() * Rational::from_integer(sign.into()))).mul_i();
        vec![ActionTerm { target: *src, coeff: LambdaPoly::constant(c) }]
    };
    // (raise, lower) ladder terms in the m being acted on.
    let ladder = || {
        let mut up = None;
        let mut down = None;
        if right {
            // dr(U1 + iU2): m2 → m2 - 1, i√((j + m2)(j - m2 + 1))
            if m - one >= -j {
                up = Some((with_m(m - one), gauss(sqrt_h(j + m, j - m + one)).mul_i()));
            }
            if m + one <= j {
                down = Some((with_m(m + one), gauss(sqrt_h(j - m, j + m + one)).mul_i()));
            }
        } else {
            // dl(U1 + iU2): m1 → m1 + 1, -i√((j - m1)(j + m1 + 1))
            if m + one <= j {
                up = Some((with_m(m + one), -&gauss(sqrt_h(j - m, j + m + one)).mul_i()));
            }
            if m - one >= -j {
                down = Some((with_m(m - one), -&gauss(sqrt_h(j + m, j - m + one)).mul_i()));
            }
        }
        (up, down)
    };
    let out = match e {
        LieBasis::U0 => diag(src.n),
        LieBasis::U3 => diag(m),
        LieBasis::U1 | LieBasis::U2 => {
            let (up, down) = ladder();
            // U1 = (L+ + L-)/2, U2 = (L+ - L-)/(2i)
            let (cu, cd) = if e == LieBasis::U1 {
                (GaussSurd::rat(1, 2), GaussSurd::rat(1, 2))
            } else {
                let h = -&GaussSurd::imag_rat(1, 2);
                (h.clone(), -&h)
            };
            let mut v = Vec::new();
            for (t, c) in [(up, cu), (down, cd)] {
                if let Some((target, coef)) = t {
                    let coef = &coef * &c;
                    if !coef.is_zero() {
                        v.push(ActionTerm { target, coeff: LambdaPoly::constant(coef) });
                    }
                }
            }
            v
        }
        other => return Err(Error::Domain(format!("{other} is not a compact generator"))),
    };
    Ok(out)
}

/// Left action of any named generator, resolved through `k ⊕ p` coordinates.
pub fn dl(e: LieBasis, src: &WignerIndex, delta: i64) -> Result<Vec<ActionTerm>> {
    match e {
        LieBasis::U0 | LieBasis::U1 | LieBasis::U2 | LieBasis::U3 => dl_k(e, src),
        LieBasis::V(r) => dl_valpha(r, src, delta),
        other => {
            let mut v = Vector::new();
            for (b, c) in express_in_kp(&basis_matrix(other))? {
                for t in dl(b, src, delta)? {
                    accumulate(&mut v, t.target, &t.coeff.scale(&c));
                }
            }
            Ok(v.into_iter().map(|(target, coeff)| ActionTerm { target, coeff }).collect())
        }
    }
}

/// Right-action generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightOp {
    /// `X_{α1+α2} + X_{-α1-α2}`.
    A,
    /// A compact generator `U0..U3`.
    K(LieBasis),
    /// A weight vector `v_α`.
    V(NcRoot),
}

/// Right action on `C^∞(K)` with the principal-series extension.
///
/// `v_{±α2}` shifts `m2` only, so its targets leave the principal series
/// constraint; this is expected for a right action.
pub fn dr_ops(op: RightOp, src: &WignerIndex) -> Result<Vec<ActionTerm>> {
    src.validate()?;
    let (j, n, m2) = (src.j, src.n, src.m2);
    let one = HalfInt::ONE;
    Ok(match op {
        RightOp::A => vec![ActionTerm { target: *src, coeff: LambdaPoly::linear(-2, -1) }],
        RightOp::K(e) => dr_k(e, src)?,
        RightOp::V(r) => match r {
            NcRoot::A12 | NcRoot::NegA12 => {
                let s = if r == NcRoot::A12 { -(n + m2) } else { n + m2 };
                let c0 = GaussSurd::real(SurdSum::from_rational(s.to_rational() * rat(1, 2) - Rational::one()));
                let p = LambdaPoly::new(vec![c0, GaussSurd::rat(-1, 2)])?;
                vec![ActionTerm { target: *src, coeff: p }]
            }
            NcRoot::A2 | NcRoot::NegA2 => {
                let (target_m2, a, b) =
                    if r == NcRoot::A2 { (m2 + one, j - m2, j + m2 + one) } else { (m2 - one, j + m2, j - m2 + one) };
                if target_m2.abs() > j {
                    Vec::new()
                } else {
                    let c = -&gauss(sqrt_h(a, b));
                    vec![ActionTerm { target: WignerIndex { m2: target_m2, ..*src }, coeff: LambdaPoly::constant(c) }]
                }
            }
        },
    })
}

fn accumulate(v: &mut Vector, target: WignerIndex, c: &LambdaPoly) {
    if c.is_zero() {
        return;
    }
    let e = v.entry(target).or_default();
    *e += c;
    if e.is_zero() {
        v.remove(&target);
    }
}

// ---------------------------------------------------------------------------
// Programs and operator matrices
// ---------------------------------------------------------------------------

/// A linear combination of words in named generators acting by `dl`.
///
/// A word `[X, Y]` is the composition `dl(X)∘dl(Y)`: the last letter acts first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub terms: Vec<(GaussSurd, Vec<LieBasis>)>,
}

impl Program {
    /// The identity operator.
    pub fn identity() -> Self {
        Program { terms: vec![(GaussSurd::one(), Vec::new())] }
    }

    /// A single letter.
    pub fn letter(e: LieBasis) -> Self {
        Program { terms: vec![(GaussSurd::one(), vec![e])] }
    }

    /// A single word.
    pub fn word(w: Vec<LieBasis>) -> Self {
        Program { terms: vec![(GaussSurd::one(), w)] }
    }

    /// `Σ c·e` for `k ⊕ p` coordinates.
    pub fn linear(coords: &[(LieBasis, GaussSurd)]) -> Self {
        Program { terms: coords.iter().map(|(e, c)| (c.clone(), vec![*e])).collect() }
    }

    /// `XY - YX` for letters `X`, `Y`.
    pub fn commutator(x: LieBasis, y: LieBasis) -> Self {
        Program { terms: vec![(GaussSurd::one(), vec![x, y]), (-&GaussSurd::one(), vec![y, x])] }
    }

    pub fn plus(mut self, other: Program) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(mut self, c: &GaussSurd) -> Self {
        for t in &mut self.terms {
            t.0 = &t.0 * c;
        }
        self
    }

    /// Parses `"v(a2)"`, `"U1"`, `"H1"`, `"X(-a12)"` or a `*`-separated word.
    pub fn parse(s: &str) -> Result<Self> {
        let letters = s.split('*').map(|t| parse_letter(t.trim())).collect::<Result<Vec<_>>>()?;
        Ok(Program::word(letters))
    }
}

/// Parses one generator name.
pub fn parse_letter(s: &str) -> Result<LieBasis> {
    let root = |r: &str| -> Result<Root> {
        Ok(match r {
            "a1" => Root::A1,
            "a2" => Root::A2,
            "a12" => Root::A12,
            "-a1" => Root::NegA1,
            "-a2" => Root::NegA2,
            "-a12" => Root::NegA12,
            _ => return Err(Error::Parse(format!("unknown root '{r}'"))),
        })
    };
    let inner = |p: &str| s.strip_prefix(p).and_then(|r| r.strip_suffix(')'));
    Ok(match s {
        "U0" => LieBasis::U0,
        "U1" => LieBasis::U1,
        "U2" => LieBasis::U2,
        "U3" => LieBasis::U3,
        "H1" => LieBasis::H1,
        "H2" => LieBasis::H2,
        _ => {
            if let Some(r) = inner("v(") {
                LieBasis::V(NcRoot::from_tag(r).map_err(|_| Error::Parse(format!("'{s}' is not a weight vector")))?)
            } else if let Some(r) = inner("X(") {
                LieBasis::X(root(r)?)
            } else {
                return Err(Error::Parse(format!("unknown generator '{s}'")));
            }
        }
    })
}

/// Applies one generator to a vector.
pub fn apply_letter(e: LieBasis, v: &Vector, delta: i64) -> Result<Vector> {
    let mut out = Vector::new();
    for (idx, c) in v {
        for t in dl(e, idx, delta)? {
            accumulate(&mut out, t.target, &c.try_mul(&t.coeff)?);
        }
    }
    Ok(out)
}

/// Applies a program to a basis vector; also returns the largest `j` reached.
pub fn apply_program(p: &Program, src: &WignerIndex, delta: i64) -> Result<(Vector, HalfInt)> {
    let mut out = Vector::new();
    let mut jmax = src.j;
    for (c, word) in &p.terms {
        let mut v = Vector::from([(*src, LambdaPoly::constant(GaussSurd::one()))]);
        for e in word.iter().rev() {
            v = apply_letter(*e, &v, delta)?;
            if let Some(m) = v.keys().map(|i| i.j).max() {
                jmax = jmax.max(m);
            }
        }
        for (idx, x) in v {
            accumulate(&mut out, idx, &x.scale(c));
        }
    }
    Ok((out, jmax))
}

/// A program assembled on all basis vectors with `j ≤ jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub delta: i64,
    pub jmax: HalfInt,
    /// Row per source index: the image as a list of terms.
    pub rows: BTreeMap<WignerIndex, Vec<ActionTerm>>,
    /// Sources whose evaluation reached `j > jmax`.
    pub leaky: BTreeSet<WignerIndex>,
}

impl OperatorMatrix {
    /// Sources with `j ≤ jmax - 1`, where every two-step composition stays
    /// inside the truncation.
    pub fn interior(&self) -> impl Iterator<Item = (&WignerIndex, &Vec<ActionTerm>)> {
        let lim = self.jmax - HalfInt::ONE;
        self.rows.iter().filter(move |(i, _)| i.j <= lim)
    }
}

/// Assembles a program over the truncated basis, in parallel over rows.
pub fn operator_matrix(p: &Program, delta: i64, jmax: HalfInt) -> Result<OperatorMatrix> {
    let rows: Vec<(WignerIndex, Vector, HalfInt)> = basis(delta, jmax)
        .into_par_iter()
        .map(|src| apply_program(p, &src, delta).map(|(v, m)| (src, v, m)))
        .collect::<Result<_>>()?;
    let mut out = OperatorMatrix { delta, jmax, rows: BTreeMap::new(), leaky: BTreeSet::new() };
    for (src, v, reach) in rows {
        if reach > jmax {
            out.leaky.insert(src);
        }
        out.rows.insert(src, v.into_iter().map(|(target, coeff)| ActionTerm { target, coeff }).collect());
    }
    Ok(out)
}

/// Outcome of a bracket-consistency check on one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    pub x: LieBasis,
    pub y: LieBasis,
    pub rows_checked: usize,
    pub failures: Vec<WignerIndex>,
}

/// Checks `[dl(X), dl(Y)] = dl([X, Y])` on interior rows.
pub fn bracket_check(x: LieBasis, y: LieBasis, delta: i64, jmax: HalfInt) -> Result<BracketReport> {
    let lhs = Program::commutator(x, y);
    let coords = express_in_kp(&basis_matrix(x).bracket(&basis_matrix(y)))?;
    let rhs = Program::linear(&coords);
    let lim = jmax - HalfInt::ONE;
    let sources: Vec<WignerIndex> = basis(delta, lim);
    let failures: Vec<WignerIndex> = sources
        .par_iter()
        .map(|src| -> Result<Option<WignerIndex>> {
            let (a, _) = apply_program(&lhs, src, delta)?;
            let (b, _) = apply_program(&rhs, src, delta)?;
            Ok((a != b).then_some(*src))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(BracketReport { x, y, rows_checked: sources.len(), failures })
}

/// The generators used by the bracket suite.
pub const BRACKET_GENERATORS: [LieBasis; 8] = LieBasis::KP;

/// Runs [`bracket_check`] over all unordered pairs of [`BRACKET_GENERATORS`].
pub fn bracket_suite(delta: i64, jmax: HalfInt) -> Result<Vec<BracketReport>> {
    let mut out = Vec::new();
    for (i, &x) in BRACKET_GENERATORS.iter().enumerate() {
        for &y in &BRACKET_GENERATORS[i + 1..] {
            out.push(bracket_check(x, y, delta, jmax)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Casimir elements
// ---------------------------------------------------------------------------

/// `Ω₂ = (1/9)(H1² + H1H2 + H2² + 3(H1 + H2)) + (1/3) Σ_{α>0} X_{-α} X_α`.
pub fn casimir2_program() -> Program {
    use LieBasis::{H1, H2};
    let mut p = Program {
        terms: vec![
            (GaussSurd::rat(1, 9), vec![H1, H1]),
            (GaussSurd::rat(1, 9), vec![H1, H2]),
            (GaussSurd::rat(1, 9), vec![H2, H2]),
            (GaussSurd::rat(1, 3), vec![H1]),
            (GaussSurd::rat(1, 3), vec![H2]),
        ],
    };
    for r in Root::POSITIVE {
        p.terms.push((GaussSurd::rat(1, 3), vec![LieBasis::X(r.neg()), LieBasis::X(r)]));
    }
    p
}

/// `(1/36)(3(λ² - 4) + δ²)` as a polynomial in `λ`.
pub fn casimir2_poly(delta: i64) -> LambdaPoly {
    LambdaPoly::new(vec![GaussSurd::rat(delta * delta - 12, 36), GaussSurd::zero(), GaussSurd::rat(1, 12)]).expect("degree 2")
}

/// Scalar of `Ω₂` on `I(χ_{δ,λ})`.
pub fn casimir2_scalar(delta: i64, lambda: Complex64) -> Complex64 {
    (3.0 * (lambda * lambda - 4.0) + (delta * delta) as f64) / 36.0
}

/// Scalar of `Ω₃` on `I(χ_{δ,λ})`:
/// `(δ - 3)(δ - 3(λ - 2))(δ + 3(λ + 2)) / (2⁵3⁵)`.
pub fn casimir3_scalar(delta: i64, lambda: Complex64) -> Complex64 {
    let d = delta as f64;
    (d - 3.0) * (d - 3.0 * (lambda - 2.0)) * (d + 3.0 * (lambda + 2.0)) / (32.0 * 243.0)
}

/// `Ω₃` through its Harish-Chandra image
/// `-(H1 + 2H2 - 3)(2H1 + H2 + 3)(H1 - H2 - 3) / (2³3⁵)` at
/// `H1 = (λ+δ)/2`, `H2 = (λ-δ)/2`.
pub fn casimir3_hc(delta: i64, lambda: Complex64) -> Complex64 {
    let d = delta as f64;
    let h1 = (lambda + d) / 2.0;
    let h2 = (lambda - d) / 2.0;
    -(h1 + 2.0 * h2 - 3.0) * (2.0 * h1 + h2 + 3.0) * (h1 - h2 - 3.0) / (8.0 * 243.0)
}

/// Outcome of the assembled `Ω₂` check.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirReport {
    pub delta: i64,
    pub jmax: HalfInt,
    /// The expected scalar.
    pub scalar: LambdaPoly,
    pub rows_checked: usize,
    /// Interior rows where the image is not `scalar · source`.
    pub failures: Vec<WignerIndex>,
    /// Rows excluded because the assembly left the truncation.
    pub excluded: Vec<WignerIndex>,
}

impl CasimirReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.rows_checked > 0
    }
}

/// Assembles `Ω₂` and checks that every interior row is the scalar.
pub fn casimir2_apply(delta: i64, jmax: HalfInt) -> Result<CasimirReport> {
    let m = operator_matrix(&casimir2_program(), delta, jmax)?;
    let scalar = casimir2_poly(delta);
    let mut failures = Vec::new();
    let mut rows = 0;
    for (src, terms) in m.interior() {
        if m.leaky.contains(src) {
            continue;
        }
        rows += 1;
        let ok = terms.len() == 1 && terms[0].target == *src && terms[0].coeff == scalar;
        if !ok {
            failures.push(*src);
        }
    }
    let lim = jmax - HalfInt::ONE;
    let excluded = m.rows.keys().filter(|i| i.j > lim || m.leaky.contains(i)).copied().collect();
    Ok(CasimirReport { delta, jmax, scalar, rows_checked: rows, failures, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(j: i64, n: i64, m1: i64, m2: i64) -> WignerIndex {
        WignerIndex::from_twice(j, n, m1, m2)
    }

    #[test]
    fn ktype_examples() {
        let got: BTreeSet<(i64, i64)> =
            ktype_set(0, HalfInt::ONE).iter().map(|(k, _)| (k.j.twice(), k.n.twice())).collect();
        let want: BTreeSet<(i64, i64)> = [(0, 0), (1, 3), (1, -3), (2, 0), (2, 6), (2, -6)].into();
        assert_eq!(got, want);
        let kt = KType { j: HalfInt::ONE, n: HalfInt::ZERO };
        assert_eq!(kt.lattice(0), Some(LatticePoint { k: 2, l: 0 }));
        for delta in -4..=4 {
            let set = ktype_set(delta, HalfInt::from_int(3));
            let pts: BTreeSet<LatticePoint> = set.iter().map(|(_, p)| *p).collect();
            assert_eq!(pts, LatticePoint::all(6).into_iter().collect());
            for (kt, p) in &set {
                assert_eq!(kt.lattice(delta), Some(*p));
                assert_eq!(p.ktype(delta), *kt);
            }
        }
    }

    #[test]
    fn dl_valpha_examples() {
        let src = idx(1, 3, 1, 1);
        let t = dl_valpha(NcRoot::A12, &src, 0).unwrap();
        assert!(t.iter().all(|x| x.target.j.twice() == 2));
        let s0 = idx(0, 0, 0, 0);
        for r in NcRoot::ALL {
            let t = dl_valpha(r, &s0, 0).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t[0].target.j, HalfInt::HALF);
            assert_eq!(t[0].target.n.twice(), r.weight_twice().1);
        }
        // v(a12) on the trivial vector: (1/2)·1·√1·(0 + 0 + 0 + λ + 2)
        let t = dl_valpha(NcRoot::A12, &s0, 0).unwrap();
        assert_eq!(t[0].coeff, LambdaPoly::new(vec![GaussSurd::int(1), GaussSurd::rat(1, 2)]).unwrap());
        assert!(dl_valpha(NcRoot::A2, &idx(0, 2, 0, 0), 0).is_err());
    }

    #[test]
    fn kappa_table_entry() {
        let k = kappa(false, true, HalfInt::HALF, HalfInt::from_twice(3), HalfInt::HALF);
        assert_eq!(k, LambdaPoly::linear(0, -1));
    }

    #[test]
    fn simplified_matches_unsimplified() {
        for delta in -3..=3 {
            for src in basis(delta, HalfInt::from_int(2)) {
                for r in NcRoot::ALL {
                    assert_eq!(dl_valpha(r, &src, delta).unwrap(), dl_valpha_before_cg(r, &src, delta).unwrap(), "{src} {r:?}");
                }
            }
        }
    }

    #[test]
    fn compact_examples() {
        let t = dl_k(LieBasis::U3, &idx(2, 0, 2, 0)).unwrap();
        assert_eq!(t, vec![ActionTerm { target: idx(2, 0, 2, 0), coeff: LambdaPoly::constant(GaussSurd::i()) }]);
        // dl(U1 - iU2) dl(U1 + iU2) on (1, 0, 0, 0) = -(j - m1)(j + m1 + 1) = -2
        let i = GaussSurd::i();
        let raise = Program::letter(LieBasis::U1).plus(Program::letter(LieBasis::U2).scaled(&i));
        let up = apply_program(&raise, &idx(2, 0, 0, 0), 0).unwrap().0;
        let mut down = Vector::new();
        for (k, c) in &up {
            let lower = Program::letter(LieBasis::U1).plus(Program::letter(LieBasis::U2).scaled(&-&i));
            for (k2, c2) in apply_program(&lower, k, 0).unwrap().0 {
                accumulate(&mut down, k2, &c.try_mul(&c2).unwrap());
            }
        }
        assert_eq!(down, Vector::from([(idx(2, 0, 0, 0), LambdaPoly::constant(GaussSurd::int(-2)))]));
        let top = apply_program(&raise, &idx(2, 0, 2, 0), 0).unwrap().0;
        assert!(top.is_empty());
    }

    #[test]
    fn right_action_examples() {
        let src = idx(1, 3, 1, 1);
        assert_eq!(dr_ops(RightOp::A, &src).unwrap()[0].coeff, LambdaPoly::linear(-2, -1));
        let v = dr_ops(RightOp::V(NcRoot::A12), &src).unwrap();
        assert_eq!(v[0].coeff, LambdaPoly::new(vec![GaussSurd::int(-2), GaussSurd::rat(-1, 2)]).unwrap());
        assert!(dr_ops(RightOp::V(NcRoot::A2), &src).unwrap().is_empty());
        // dr(i(U1 - iU2)) = dr(v(a2)) via the compact formulas
        let src = idx(2, 0, 0, 0);
        let a = dr_ops(RightOp::K(LieBasis::U1), &src).unwrap();
        let b = dr_ops(RightOp::K(LieBasis::U2), &src).unwrap();
        let mut v = Vector::new();
        for t in a {
            accumulate(&mut v, t.target, &t.coeff.scale(&GaussSurd::i()));
        }
        for t in b {
            accumulate(&mut v, t.target, &t.coeff);
        }
        let direct: Vector = dr_ops(RightOp::V(NcRoot::A2), &src).unwrap().into_iter().map(|t| (t.target, t.coeff)).collect();
        assert_eq!(v, direct);
    }

    #[test]
    fn identity_program() {
        let m = operator_matrix(&Program::identity(), 1, HalfInt::ONE).unwrap();
        for (src, terms) in &m.rows {
            assert_eq!(terms, &vec![ActionTerm { target: *src, coeff: LambdaPoly::constant(GaussSurd::one()) }]);
        }
        let m = operator_matrix(&Program::letter(LieBasis::V(NcRoot::A2)), 0, HalfInt::ONE).unwrap();
        assert!(m.rows.values().all(|r| r.len() <= 2));
        assert!(m.leaky.iter().all(|i| i.j == HalfInt::ONE));
    }

    #[test]
    fn brackets_small() {
        for r in bracket_suite(1, HalfInt::from_twice(3)).unwrap() {
            assert!(r.failures.is_empty(), "{} {}: {:?}", r.x, r.y, r.failures);
        }
    }

    #[test]
    fn casimir_small() {
        for delta in [-2, 0, 3] {
            let r = casimir2_apply(delta, HalfInt::from_twice(3)).unwrap();
            assert!(r.pass(), "{:?}", r.failures);
        }
        assert!((casimir2_scalar(0, Complex64::new(4.0, 0.0)) - 1.0).norm() < 1e-15);
        assert_eq!(casimir2_scalar(0, Complex64::new(2.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(casimir3_scalar(3, Complex64::new(1.7, 0.4)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn casimir3_matches_hc_and_is_weyl_invariant() {
        for (d, l) in [(0, 4.0), (6, 2.0), (-3, 1.5), (5, -2.5)] {
            let lam = Complex64::new(l, 0.3);
            let v = casimir3_scalar(d, lam);
            assert!((v - casimir3_hc(d, lam)).norm() < 1e-14);
        }
        // wα1: (δ, λ) → (-(3λ+δ)/2, (λ-δ)/2) on even-sum pairs.
        for (d, l) in [(0i64, 4i64), (6, 2), (2, 4), (-6, -2)] {
            let (d1, l1) = (-(3 * l + d) / 2, (l - d) / 2);
            let (d2, l2) = ((3 * l - d) / 2, (l + d) / 2);
            let c = |d, l: i64| casimir3_scalar(d, Complex64::new(l as f64, 0.0));
            assert!((c(d, l) - c(d1, l1)).norm() < 1e-14);
            assert!((c(d, l) - c(d2, l2)).norm() < 1e-14);
        }
    }

    #[test]
    fn parse_letters() {
        assert_eq!(parse_letter("v(a2)").unwrap(), LieBasis::V(NcRoot::A2));
        assert_eq!(parse_letter("X(-a1)").unwrap(), LieBasis::X(Root::NegA1));
        assert!(parse_letter("v(a1)").is_err());
        assert_eq!(Program::parse("v(a2) * v(-a2)").unwrap().terms[0].1.len(), 2);
    }
}
