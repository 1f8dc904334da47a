//! Composition series of `I(χ_{δ,λ})` at integral parameters: Weyl chambers,
//! the six patterns of irreducible subquotients, their K-type regions in the
//! `(k, l)` cone, and closure checks against the Lie-algebra action.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use num_traits::Zero;
use rayon::prelude::*;

use crate::action::{dl_valpha, InductionChar, LatticePoint};
use crate::compact::WignerIndex;
use crate::structure::NcRoot;
use crate::surd::{rat, rint, HalfInt, Rational};
use crate::{Error, Result};

/// A simple reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reflection {
    A1,
    A2,
}

impl fmt::Display for Reflection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reflection::A1 => "wa1",
            Reflection::A2 => "wa2",
        })
    }
}

/// `wα1: (δ, λ) → (-(3λ+δ)/2, (λ-δ)/2)`, `wα2: (δ, λ) → ((3λ-δ)/2, (λ+δ)/2)`.
pub fn reflect_once(w: Reflection, delta: &Rational, lambda: &Rational) -> (Rational, Rational) {
    let half = rat(1, 2);
    let three = rint(3);
    match w {
        Reflection::A1 => (-(&three * lambda + delta) * &half, (lambda - delta) * &half),
        Reflection::A2 => ((&three * lambda - delta) * &half, (lambda + delta) * &half),
    }
}

/// Applies a word as a composition: the last letter acts first, so
/// `[A1, A2]` is `wα1 wα2`.
pub fn weyl_reflect_exact(word: &[Reflection], delta: &Rational, lambda: &Rational) -> (Rational, Rational) {
    word.iter().rev().fold((delta.clone(), lambda.clone()), |(d, l), w| reflect_once(*w, &d, &l))
}

/// Integral form of [`weyl_reflect_exact`]; a non-integral result is an error.
pub fn weyl_reflect(word: &[Reflection], delta: i64, lambda: i64) -> Result<(i64, i64)> {
    let (d, l) = weyl_reflect_exact(word, &rint(delta), &rint(lambda));
    match (d.is_integer(), l.is_integer()) {
        (true, true) => Ok((i64::try_from(d.to_integer()).unwrap(), i64::try_from(l.to_integer()).unwrap())),
        _ => Err(Error::Domain(format!("reflection of ({delta}, {lambda}) gives ({d}, {l}), not integral"))),
    }
}

/// The six open Weyl chambers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chamber {
    I1,
    I2,
    II1,
    II2,
    III1,
    III2,
}

impl Chamber {
    pub const ALL: [Chamber; 6] = [Chamber::I1, Chamber::II1, Chamber::II2, Chamber::I2, Chamber::III1, Chamber::III2];

    /// The Weyl word labelling the modules of this chamber.
    pub fn label_word(self) -> &'static [Reflection] {
        use Reflection::*;
        match self {
            Chamber::I1 => &[],
            Chamber::II1 => &[A2],
            Chamber::II2 => &[A1, A2],
            Chamber::I2 => &[A1, A2, A1],
            Chamber::III1 => &[A1],
            Chamber::III2 => &[A2, A1],
        }
    }

    /// The sample character drawn for this chamber.
    pub fn sample(self) -> (i64, i64) {
        match self {
            Chamber::I1 => (0, 4),
            Chamber::II1 => (6, 2),
            Chamber::II2 => (6, -2),
            Chamber::I2 => (0, -4),
            Chamber::III1 => (-6, 2),
            Chamber::III2 => (-6, -2),
        }
    }

    /// The subquotients present, ordered darkest to lightest.
    pub fn tags(self) -> &'static [Subquotient] {
        use Subquotient::*;
        match self {
            Chamber::I1 | Chamber::I2 => &[VFin, QPlus, QMinus, VH],
            Chamber::II1 | Chamber::II2 => &[VDiscMinus, QMinus, VH],
            Chamber::III1 | Chamber::III2 => &[VDiscPlus, QPlus, VH],
        }
    }
}

impl fmt::Display for Chamber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chamber::I1 => "I1",
            Chamber::I2 => "I2",
            Chamber::II1 => "II1",
            Chamber::II2 => "II2",
            Chamber::III1 => "III1",
            Chamber::III2 => "III2",
        })
    }
}

/// The irreducible subquotients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subquotient {
    VFin,
    VDiscPlus,
    VDiscMinus,
    VH,
    QPlus,
    QMinus,
}

impl Subquotient {
    pub fn name(self) -> &'static str {
        match self {
            Subquotient::VFin => "V_fin",
            Subquotient::VDiscPlus => "V_disc+",
            Subquotient::VDiscMinus => "V_disc-",
            Subquotient::VH => "V_H",
            Subquotient::QPlus => "Q+",
            Subquotient::QMinus => "Q-",
        }
    }

    /// Shade level: 0 darkest (`V_fin`, `V_disc±`), 1 medium (`Q±`), 2 lightest (`V_H`).
    pub fn shade(self) -> u8 {
        match self {
            Subquotient::VFin | Subquotient::VDiscPlus | Subquotient::VDiscMinus => 0,
            Subquotient::QPlus | Subquotient::QMinus => 1,
            Subquotient::VH => 2,
        }
    }
}

impl fmt::Display for Subquotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of [`chamber_classify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Chamber(Chamber),
    /// Parity failure or a wall; the reason is recorded.
    Unclassified(String),
}

impl Classification {
    pub fn chamber(&self) -> Option<Chamber> {
        match self {
            Classification::Chamber(c) => Some(*c),
            Classification::Unclassified(_) => None,
        }
    }
}

/// Classifies an integral character by the chamber inequalities.
pub fn chamber_classify(delta: i64, lambda: i64) -> Classification {
    if (lambda + delta).rem_euclid(2) != 0 {
        return Classification::Unclassified(format!("λ ± δ odd at ({delta}, {lambda})"));
    }
    let (p, m) = (lambda + delta, lambda - delta);
    let c = if m >= 2 && p >= 2 {
        Chamber::I1
    } else if m <= -2 && p <= -2 {
        Chamber::I2
    } else if lambda > 0 && m <= -2 {
        Chamber::II1
    } else if lambda < 0 && p >= 2 {
        Chamber::II2
    } else if lambda > 0 && p <= -2 {
        Chamber::III1
    } else if lambda < 0 && m >= 2 {
        Chamber::III2
    } else {
        return Classification::Unclassified(format!("({delta}, {lambda}) lies on a wall"));
    };
    Classification::Chamber(c)
}

fn classify_or_err(delta: i64, lambda: i64) -> Result<Chamber> {
    match chamber_classify(delta, lambda) {
        Classification::Chamber(c) => Ok(c),
        Classification::Unclassified(why) => Err(Error::Domain(format!("unclassified character: {why}"))),
    }
}

/// The subquotient containing a lattice point.
///
/// With `s = k + l` and `d = k - l`, the regions are cut out by the four
/// lines where a `κ` factor of the action vanishes:
/// `s = λ+δ`, `s = δ-λ`, `d = λ-δ`, `d = -λ-δ`.
pub fn region_of(chamber: Chamber, delta: i64, lambda: i64, p: LatticePoint) -> Subquotient {
    use Subquotient::*;
    let (s, d) = (p.k + p.l, p.k - p.l);
    let a = lambda + delta;
    let b = delta - lambda;
    let c = lambda - delta;
    let e = -lambda - delta;
    match chamber {
        Chamber::I1 => match (s >= a, d >= c) {
            (true, true) => VH,
            (true, false) => QPlus,
            (false, true) => QMinus,
            (false, false) => VFin,
        },
        Chamber::I2 => match (s >= b, d >= e) {
            (true, true) => VH,
            (true, false) => QPlus,
            (false, true) => QMinus,
            (false, false) => VFin,
        },
        Chamber::II1 => {
            if s >= a {
                VH
            } else if s >= b {
                QMinus
            } else {
                VDiscMinus
            }
        }
        Chamber::II2 => {
            if s >= b {
                VH
            } else if s >= a {
                QMinus
            } else {
                VDiscMinus
            }
        }
        Chamber::III1 => {
            if d >= c {
                VH
            } else if d >= e {
                QPlus
            } else {
                VDiscPlus
            }
        }
        Chamber::III2 => {
            if d >= e {
                VH
            } else if d >= c {
                QPlus
            } else {
                VDiscPlus
            }
        }
    }
}

/// All lattice points with `k ≤ kmax` in the region of `tag`.
pub fn subquotient_ktypes(tag: Subquotient, delta: i64, lambda: i64, kmax: i64) -> Result<BTreeSet<LatticePoint>> {
    let ch = classify_or_err(delta, lambda)?;
    if !ch.tags().contains(&tag) {
        return Err(Error::Domain(format!("{tag} does not occur in chamber {ch}")));
    }
    Ok(LatticePoint::all(kmax).into_iter().filter(|p| region_of(ch, delta, lambda, *p) == tag).collect())
}

/// The truncated lattice split by subquotient.
pub fn partition(delta: i64, lambda: i64, kmax: i64) -> Result<BTreeMap<Subquotient, BTreeSet<LatticePoint>>> {
    let ch = classify_or_err(delta, lambda)?;
    let mut out: BTreeMap<Subquotient, BTreeSet<LatticePoint>> = ch.tags().iter().map(|t| (*t, BTreeSet::new())).collect();
    for p in LatticePoint::all(kmax) {
        out.get_mut(&region_of(ch, delta, lambda, p)).expect("tag of chamber").insert(p);
    }
    Ok(out)
}

/// `(j, n)` of a lattice point.
pub fn jn_of(p: LatticePoint, delta: i64) -> (HalfInt, HalfInt) {
    let kt = p.ktype(delta);
    (kt.j, kt.n)
}

/// The lowest K-type of a region: smallest `k`, then smallest `|l|`.
pub fn region_minimum(tag: Subquotient, delta: i64, lambda: i64) -> Result<LatticePoint> {
    let ch = classify_or_err(delta, lambda)?;
    let bound = 2 * (delta.abs() + lambda.abs()) + 4;
    subquotient_ktypes(tag, delta, lambda, bound)?
        .into_iter()
        .min_by_key(|p| (p.k, p.l.abs(), p.l))
        .ok_or_else(|| Error::Domain(format!("{tag} empty below k = {bound} in {ch}")))
}

/// Tabulated lowest K-type `(j, n)` of each subquotient as a function of `(δ, λ)`.
pub fn tabulated_lowest(chamber: Chamber, tag: Subquotient, delta: i64, lambda: i64) -> Option<(Rational, Rational)> {
    use Subquotient::*;
    let (d, l) = (rint(delta), rint(lambda));
    let q = |x: Rational| x * rat(1, 4);
    let three = rint(3);
    let trivial = (Rational::zero(), -d.clone());
    let v = match (chamber, tag) {
        (_, VFin) | (_, VDiscPlus) | (_, VDiscMinus) => trivial,
        (Chamber::I1, QPlus) => (q(&l + &d), q(&three * &l - &d)),
        (Chamber::I1, QMinus) => (q(&l - &d), q(-&three * &l - &d)),
        (Chamber::I1, VH) => (&l * rat(1, 2), &d * rat(1, 2)),
        (Chamber::II1, QMinus) => (q(&d - &l), q(-&three * &l - &d)),
        (Chamber::II1, VH) => (q(&l + &d), q(&three * &l - &d)),
        (Chamber::II2, QMinus) => (q(&l + &d), q(&three * &l - &d)),
        (Chamber::II2, VH) => (q(&d - &l), q(-&three * &l - &d)),
        (Chamber::I2, QPlus) => (q(&d - &l), q(-&three * &l - &d)),
        (Chamber::I2, QMinus) => (q(-&l - &d), q(&three * &l - &d)),
        (Chamber::I2, VH) => (-&l * rat(1, 2), &d * rat(1, 2)),
        (Chamber::III1, QPlus) => (q(-&l - &d), q(&three * &l - &d)),
        (Chamber::III1, VH) => (q(&l - &d), q(-&three * &l - &d)),
        (Chamber::III2, QPlus) => (q(&l - &d), q(-&three * &l - &d)),
        (Chamber::III2, VH) => (q(-&l - &d), q(&three * &l - &d)),
        _ => return None,
    };
    Some(v)
}

/// One level of a filtration: a submodule and the quotient by the previous level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    /// Subquotients whose K-types make up the submodule.
    pub tags: Vec<Subquotient>,
    /// The quotient of this level by the one below.
    pub quotient: Vec<Subquotient>,
}

/// A composition series `0 ⊂ S_1 ⊂ ⋯ ⊂ I(χ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionSeries {
    pub chamber: Chamber,
    pub delta: i64,
    pub lambda: i64,
    /// Levels from the smallest submodule to the whole module.
    pub levels: Vec<Level>,
}

impl fmt::Display for CompositionSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |t: &[Subquotient]| t.iter().map(|x| x.name()).collect::<Vec<_>>().join(" + ");
        write!(f, "{}:", self.chamber)?;
        for (i, lv) in self.levels.iter().enumerate() {
            let sep = if i == 0 { " " } else { " ⊂ " };
            write!(f, "{sep}[{}]", names(&lv.tags))?;
        }
        Ok(())
    }
}

/// The filtration of `I(χ_{δ,λ})` for the chamber of `(δ, λ)`.
pub fn composition_series(delta: i64, lambda: i64) -> Result<CompositionSeries> {
    use Subquotient::*;
    let chamber = classify_or_err(delta, lambda)?;
    let steps: Vec<Vec<Subquotient>> = match chamber {
        Chamber::I1 => vec![vec![VH], vec![QMinus, QPlus], vec![VFin]],
        Chamber::I2 => vec![vec![VFin], vec![QMinus, QPlus], vec![VH]],
        Chamber::II1 => vec![vec![VH, VDiscMinus], vec![QMinus]],
        Chamber::II2 => vec![vec![QMinus], vec![VH, VDiscMinus]],
        Chamber::III1 => vec![vec![VH, VDiscPlus], vec![QPlus]],
        Chamber::III2 => vec![vec![QPlus], vec![VH, VDiscPlus]],
    };
    let mut acc = Vec::new();
    let levels = steps
        .into_iter()
        .map(|q| {
            acc.extend(q.iter().copied());
            Level { tags: acc.clone(), quotient: q }
        })
        .collect();
    Ok(CompositionSeries { chamber, delta, lambda, levels })
}

/// A K-type-level step of the action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Crossing {
    pub source: LatticePoint,
    pub target: LatticePoint,
    pub root: &'static str,
}

/// A nonzero action term leaving a submodule.
#[derive(Debug, Clone, PartialEq)]
pub struct Leak {
    pub level: usize,
    pub source: WignerIndex,
    pub target: WignerIndex,
    pub root: &'static str,
    pub value: f64,
}

/// Outcome of [`verify_closure`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub chamber: Chamber,
    pub delta: i64,
    pub lambda: i64,
    pub kmax: i64,
    /// Number of `(source, root)` evaluations.
    pub evaluations: usize,
    /// Crossings out of a submodule whose coefficient vanishes at this `λ`.
    pub walls: BTreeSet<Crossing>,
    /// Nonzero crossings out of a submodule.
    pub leaks: Vec<Leak>,
    /// Per level: lattice points of the region not reached from the level's
    /// lowest K-types, and reached points outside the region.
    pub generation_mismatch: Vec<(usize, LatticePoint)>,
}

impl ClosureReport {
    pub fn pass(&self) -> bool {
        self.leaks.is_empty() && self.generation_mismatch.is_empty()
    }
}

struct Edge {
    source: WignerIndex,
    target: WignerIndex,
    root: &'static str,
    nonzero: bool,
    value: f64,
}

fn point_of(w: &WignerIndex) -> LatticePoint {
    LatticePoint { k: w.j.twice(), l: w.m2.twice() }
}

fn edges(delta: i64, lambda: i64, kmax: i64) -> Result<Vec<Edge>> {
    let chi = InductionChar::integer(delta, lambda);
    let sources: Vec<WignerIndex> = LatticePoint::all(kmax - 1).iter().flat_map(|p| p.ktype(delta).basis(delta)).collect();
    let per: Vec<Vec<Edge>> = sources
        .par_iter()
        .map(|src| -> Result<Vec<Edge>> {
            let mut out = Vec::new();
            for r in NcRoot::ALL {
                for t in dl_valpha(r, src, delta)? {
                    let v = chi.eval_exact(&t.coeff).expect("integral λ");
                    out.push(Edge {
                        source: *src,
                        target: t.target,
                        root: r.tag(),
                        nonzero: !v.is_zero(),
                        value: v.to_complex().norm(),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Checks every proper level of the filtration for closure under `dl(v_α)`
/// with `λ` evaluated exactly, and checks that each level is generated by the
/// lowest K-types of its subquotients. Sources range over `k ≤ kmax - 1`.
pub fn verify_closure(delta: i64, lambda: i64, kmax: i64) -> Result<ClosureReport> {
    let series = composition_series(delta, lambda)?;
    let ch = series.chamber;
    let es = edges(delta, lambda, kmax)?;
    let mut report = ClosureReport {
        chamber: ch,
        delta,
        lambda,
        kmax,
        evaluations: es.len(),
        walls: BTreeSet::new(),
        leaks: Vec::new(),
        generation_mismatch: Vec::new(),
    };
    let tag_of = |p: LatticePoint| region_of(ch, delta, lambda, p);
    let proper = series.levels.len() - 1;
    for (li, level) in series.levels.iter().enumerate() {
        let inside = |p: LatticePoint| level.tags.contains(&tag_of(p));
        if li < proper {
            for e in &es {
                let (s, t) = (point_of(&e.source), point_of(&e.target));
                if inside(s) && !inside(t) {
                    if e.nonzero {
                        report.leaks.push(Leak { level: li, source: e.source, target: e.target, root: e.root, value: e.value });
                    } else {
                        report.walls.insert(Crossing { source: s, target: t, root: e.root });
                    }
                }
            }
        }
        let gens: Vec<LatticePoint> =
            level.tags.iter().map(|t| region_minimum(*t, delta, lambda)).collect::<Result<_>>()?;
        let reached = generated(&es, &gens, kmax);
        for p in LatticePoint::all(kmax) {
            if inside(p) != reached.contains(&p) {
                report.generation_mismatch.push((li, p));
            }
        }
    }
    Ok(report)
}

fn generated(es: &[Edge], gens: &[LatticePoint], kmax: i64) -> BTreeSet<LatticePoint> {
    let mut adj: BTreeMap<LatticePoint, BTreeSet<LatticePoint>> = BTreeMap::new();
    for e in es.iter().filter(|e| e.nonzero) {
        adj.entry(point_of(&e.source)).or_default().insert(point_of(&e.target));
    }
    let mut seen: BTreeSet<LatticePoint> = gens.iter().copied().filter(|p| p.k <= kmax).collect();
    let mut queue: VecDeque<LatticePoint> = seen.iter().copied().collect();
    while let Some(p) = queue.pop_front() {
        for q in adj.get(&p).into_iter().flatten() {
            if seen.insert(*q) {
                queue.push_back(*q);
            }
        }
    }
    seen
}

/// Outcome of [`finite_dim_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDimReport {
    /// Highest weight `(a, b)`.
    pub a: i64,
    pub b: i64,
    /// `Σ (k + 1)` over the `V_fin` region.
    pub enumerated: i64,
    /// `(a+1)(b+1)(a+b+2)/2`.
    pub weyl: i64,
}

impl FiniteDimReport {
    pub fn pass(&self) -> bool {
        self.enumerated == self.weyl
    }
}

/// Compares the size of the `V_fin` region with the Weyl dimension formula.
pub fn finite_dim_check(delta: i64, lambda: i64) -> Result<FiniteDimReport> {
    let ch = classify_or_err(delta, lambda)?;
    let (p, m) = match ch {
        Chamber::I1 => (lambda + delta, lambda - delta),
        Chamber::I2 => (delta - lambda, -lambda - delta),
        other => return Err(Error::Domain(format!("chamber {other} has no finite-dimensional constituent"))),
    };
    let (a, b) = (p / 2 - 1, m / 2 - 1);
    let pts = subquotient_ktypes(Subquotient::VFin, delta, lambda, p.max(m))?;
    let enumerated = pts.iter().map(|q| q.k + 1).sum();
    Ok(FiniteDimReport { a, b, enumerated, weyl: (a + 1) * (b + 1) * (a + b + 2) / 2 })
}

/// Maps each sample character through its chamber's label word.
pub fn label_images() -> Vec<(Chamber, (i64, i64), Result<(i64, i64)>)> {
    Chamber::ALL.iter().map(|c| (*c, c.sample(), weyl_reflect(c.label_word(), c.sample().0, c.sample().1))).collect()
}

const GLYPH: [char; 3] = ['#', '+', '.'];
const FILL: [&str; 3] = ["#808080", "#bfbfbf", "#f2f2f2"];

fn lowest_labels(ch: Chamber, delta: i64, lambda: i64) -> Result<Vec<(Subquotient, LatticePoint)>> {
    ch.tags().iter().map(|t| region_minimum(*t, delta, lambda).map(|p| (*t, p))).collect()
}

/// A wall of the region split: `k + l = at` (`sum`) or `k - l = at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wall {
    pub sum: bool,
    pub at: i64,
}

/// The two walls bounding the regions of a chamber.
pub fn chamber_walls(ch: Chamber, delta: i64, lambda: i64) -> [Wall; 2] {
    let (a, b, c, e) = (lambda + delta, delta - lambda, lambda - delta, -lambda - delta);
    let w = |sum, at| Wall { sum, at };
    match ch {
        Chamber::I1 => [w(true, a), w(false, c)],
        Chamber::I2 => [w(true, b), w(false, e)],
        Chamber::II1 | Chamber::II2 => [w(true, a), w(true, b)],
        Chamber::III1 | Chamber::III2 => [w(false, c), w(false, e)],
    }
}

fn banner(delta: i64, lambda: i64) -> std::result::Result<Chamber, String> {
    match chamber_classify(delta, lambda) {
        Classification::Chamber(c) => Ok(c),
        Classification::Unclassified(why) => Err(format!("warning: unclassified character, bare lattice shown: {why}")),
    }
}

fn check_kmax(kmax: i64) -> Result<()> {
    if !(0..=200).contains(&kmax) {
        return Err(Error::Domain(format!("kmax {kmax} outside 0..=200")));
    }
    Ok(())
}

/// Text rendering of the `(k, l)` cone: `#` darkest, `+` medium, `.` lightest;
/// `k` runs to the right, `l` upward. An unclassified character gives the
/// bare lattice (`o`) under a warning line.
pub fn diagram_txt(delta: i64, lambda: i64, kmax: i64) -> Result<String> {
    check_kmax(kmax)?;
    let ch = banner(delta, lambda);
    let mut s = String::new();
    match &ch {
        Ok(c) => writeln!(s, "chamber {c}  (delta, lambda) = ({delta}, {lambda})").unwrap(),
        Err(w) => writeln!(s, "{w}\n(delta, lambda) = ({delta}, {lambda})").unwrap(),
    }
    for l in (-kmax..=kmax).rev() {
        write!(s, "{l:>4} |").unwrap();
        for k in 0..=kmax {
            let p = LatticePoint { k, l };
            let c = match (&ch, p.is_valid()) {
                (_, false) => ' ',
                (Ok(c), true) => GLYPH[region_of(*c, delta, lambda, p).shade() as usize],
                (Err(_), true) => 'o',
            };
            write!(s, " {c}").unwrap();
        }
        s.push('\n');
    }
    write!(s, "     +").unwrap();
    for _ in 0..=kmax {
        s.push_str("--");
    }
    s.push('\n');
    write!(s, "      ").unwrap();
    for k in 0..=kmax {
        write!(s, "{:>2}", k % 10).unwrap();
    }
    s.push('\n');
    if let Ok(c) = ch {
        for w in chamber_walls(c, delta, lambda) {
            writeln!(s, "wall: k {} l = {}", if w.sum { "+" } else { "-" }, w.at).unwrap();
        }
        for (t, p) in lowest_labels(c, delta, lambda)? {
            let (j, n) = jn_of(p, delta);
            writeln!(s, "{} {:<8} lowest (j, n) = ({j}, {n}) at (k, l) = {p}", GLYPH[t.shade() as usize], t.name()).unwrap();
        }
    }
    Ok(s)
}

/// SVG rendering with three gray levels, the region walls and lowest-K-type
/// labels; an unclassified character gives the bare lattice under a warning.
pub fn diagram_svg(delta: i64, lambda: i64, kmax: i64) -> Result<String> {
    check_kmax(kmax)?;
    let ch = banner(delta, lambda);
    let cell = 24.0;
    let margin = 40.0;
    let width = margin * 2.0 + cell * kmax as f64 + 220.0;
    let height = margin * 2.0 + cell * 2.0 * kmax as f64;
    let x = |k: f64| margin + cell * k;
    let y = |l: f64| margin + cell * (kmax as f64 - l);
    let km = kmax as f64;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#).unwrap();
    match &ch {
        Ok(c) => writeln!(s, r#"<title>chamber {c}, (delta, lambda) = ({delta}, {lambda})</title>"#).unwrap(),
        Err(w) => {
            writeln!(s, r#"<title>(delta, lambda) = ({delta}, {lambda})</title>"#).unwrap();
            writeln!(s, r#"<text x="4" y="14" fill="red">{w}</text>"#).unwrap();
        }
    }
    writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, x(0.0), y(0.0), x(km + 0.5), y(0.0)).unwrap();
    writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, x(0.0), y(-km), x(0.0), y(km + 0.5)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}">k</text>"#, x(km + 0.5) + 4.0, y(0.0) + 4.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}">l</text>"#, x(0.0) - 3.0, y(km + 0.5) - 4.0).unwrap();
    for p in LatticePoint::all(kmax) {
        let (fill, name) = match &ch {
            Ok(c) => {
                let t = region_of(*c, delta, lambda, p);
                (FILL[t.shade() as usize], t.name())
            }
            Err(_) => ("white", "lattice"),
        };
        writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{fill}" stroke="gray" stroke-width="0.3"><title>{name} ({}, {})</title></rect>"#,
            x(p.k as f64) - cell / 2.0,
            y(p.l as f64) - cell / 2.0,
            p.k,
            p.l
        )
        .unwrap();
        writeln!(s, r#"<circle cx="{}" cy="{}" r="2" fill="black"/>"#, x(p.k as f64), y(p.l as f64)).unwrap();
    }
    let Ok(c) = ch else {
        s.push_str("</svg>\n");
        return Ok(s);
    };
    // Walls sit halfway between the last point outside and the first inside.
    for w in chamber_walls(c, delta, lambda) {
        let at = w.at as f64 - 1.0;
        let (k0, k1) = ((at - km).max(0.0), (at + km).min(km));
        let lw = |k: f64| if w.sum { at - k } else { k - at };
        if k0 < k1 {
            writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-dasharray="4 2"/>"#, x(k0), y(lw(k0)), x(k1), y(lw(k1))).unwrap();
        }
    }
    for (_, p) in lowest_labels(c, delta, lambda)? {
        let (j, n) = jn_of(p, delta);
        writeln!(s, r#"<text x="{}" y="{}">({j}, {n})</text>"#, x(p.k as f64) + 4.0, y(p.l as f64) - 4.0).unwrap();
    }
    for (i, t) in c.tags().iter().enumerate() {
        let ly = margin + 16.0 * i as f64;
        let lx = x(km) + 40.0;
        writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}" stroke="gray"/>"#, ly - 10.0, FILL[t.shade() as usize]).unwrap();
        writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 16.0, t.name()).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decomposition_chars(r: i64) -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        for d in -r..=r {
            for l in -r..=r {
                if chamber_classify(d, l).chamber().is_some() {
                    v.push((d, l));
                }
            }
        }
        v
    }

    #[test]
    fn reflections() {
        use Reflection::*;
        assert_eq!(weyl_reflect(&[A1], 0, 4).unwrap(), (-6, 2));
        assert_eq!(weyl_reflect(&[A2], 0, 4).unwrap(), (6, 2));
        assert!(weyl_reflect(&[A1], 1, 4).is_err());
        for (c, s, img) in label_images() {
            assert_eq!(img.unwrap(), (0, 4), "{c} {s:?}");
        }
    }

    #[test]
    fn chamber_samples() {
        for c in Chamber::ALL {
            let (d, l) = c.sample();
            assert_eq!(chamber_classify(d, l), Classification::Chamber(c));
        }
        assert!(chamber_classify(1, 4).chamber().is_none());
        assert!(chamber_classify(2, 0).chamber().is_none());
        assert!(chamber_classify(2, -2).chamber().is_none());
    }

    #[test]
    fn label_words_land_in_first_chamber() {
        for (d, l) in decomposition_chars(12) {
            let c = chamber_classify(d, l).chamber().unwrap();
            let (d1, l1) = weyl_reflect(c.label_word(), d, l).unwrap();
            assert_eq!(chamber_classify(d1, l1), Classification::Chamber(Chamber::I1), "({d}, {l}) in {c}");
        }
    }

    #[test]
    fn vfin_example() {
        let pts = subquotient_ktypes(Subquotient::VFin, 0, 4, 8).unwrap();
        let want: BTreeSet<LatticePoint> =
            [(0, 0), (1, 1), (1, -1), (2, 0)].iter().map(|&(k, l)| LatticePoint { k, l }).collect();
        assert_eq!(pts, want);
        assert!(subquotient_ktypes(Subquotient::VDiscPlus, 0, 4, 8).is_err());
    }

    #[test]
    fn lowest_examples() {
        let p = region_minimum(Subquotient::VDiscMinus, 6, 2).unwrap();
        assert_eq!(jn_of(p, 6), (HalfInt::ZERO, HalfInt::from_int(-6)));
        let qp = region_minimum(Subquotient::QPlus, 0, 4).unwrap();
        let qm = region_minimum(Subquotient::QMinus, 0, 4).unwrap();
        assert_eq!(jn_of(qp, 0), (HalfInt::ONE, HalfInt::from_int(3)));
        assert_eq!(jn_of(qm, 0), (HalfInt::ONE, HalfInt::from_int(-3)));
    }

    #[test]
    fn lowest_matches_tables() {
        for (d, l) in decomposition_chars(14) {
            let c = chamber_classify(d, l).chamber().unwrap();
            for &t in c.tags() {
                let p = region_minimum(t, d, l).unwrap();
                let (j, n) = jn_of(p, d);
                let want = tabulated_lowest(c, t, d, l).unwrap();
                assert_eq!((j.to_rational(), n.to_rational()), want, "{c} {t} ({d}, {l})");
            }
        }
    }

    #[test]
    fn series_examples() {
        use Subquotient::*;
        let s = composition_series(0, 4).unwrap();
        assert_eq!(s.levels.len(), 3);
        assert_eq!(s.levels[0].tags, vec![VH]);
        assert_eq!(s.levels[2].quotient, vec![VFin]);
        let s = composition_series(0, -4).unwrap();
        assert_eq!(s.levels[0].tags, vec![VFin]);
        assert_eq!(s.levels[2].quotient, vec![VH]);
        let s = composition_series(-6, 2).unwrap();
        assert_eq!(s.levels[0].tags, vec![VH, VDiscPlus]);
        assert_eq!(s.levels[1].quotient, vec![QPlus]);
        assert!(composition_series(1, 2).is_err());
    }

    #[test]
    fn finite_dims() {
        for (d, l, dim) in [(0, 4, 8), (2, 4, 6), (0, -4, 8), (-2, -4, 6), (0, 2, 1), (4, 6, 15)] {
            let r = finite_dim_check(d, l).unwrap();
            assert!(r.pass(), "{r:?}");
            assert_eq!(r.weyl, dim);
        }
        assert!(finite_dim_check(6, 2).is_err());
    }

    #[test]
    fn closure_samples() {
        for c in Chamber::ALL {
            let (d, l) = c.sample();
            let r = verify_closure(d, l, 10).unwrap();
            assert!(r.leaks.is_empty(), "{c}: {:?}", &r.leaks[..r.leaks.len().min(3)]);
            assert!(r.generation_mismatch.is_empty(), "{c}: {:?}", r.generation_mismatch);
            assert!(!r.walls.is_empty());
        }
    }

    #[test]
    fn closure_off_axis() {
        for (d, l) in [(2, -4), (-2, -6), (2, 4), (4, -2), (-4, 2), (-2, -4), (3, 5), (-3, -1)] {
            let r = verify_closure(d, l, 9).unwrap();
            assert!(r.pass(), "({d}, {l}) {}: leaks {} mismatch {:?}", r.chamber, r.leaks.len(), r.generation_mismatch);
        }
    }

    #[test]
    fn diagrams() {
        let t = diagram_txt(0, 4, 6).unwrap();
        assert!(t.contains("chamber I1"));
        assert!(t.contains("(1, 3)"));
        let s = diagram_svg(6, 2, 6).unwrap();
        assert!(s.starts_with("<svg"));
        assert!(s.contains("#808080") && s.contains("#bfbfbf") && s.contains("#f2f2f2"));
        assert!(s.contains("stroke-dasharray"));
        let bare = diagram_txt(0, 1, 4).unwrap();
        assert!(bare.starts_with("warning: unclassified"));
        assert!(bare.contains('o') && !bare.contains('#'));
        assert!(diagram_svg(0, 1, 4).unwrap().contains("warning: unclassified"));
    }

    proptest! {
        #[test]
        fn reflections_are_involutions(d in -50i64..50, l in -50i64..50) {
            let (d, l) = (rint(d), rint(l));
            for w in [Reflection::A1, Reflection::A2] {
                prop_assert_eq!(weyl_reflect_exact(&[w, w], &d, &l), (d.clone(), l.clone()));
            }
        }

        #[test]
        fn regions_partition(d in -16i64..16, l in -16i64..16, kmax in 0i64..=16) {
            prop_assume!(chamber_classify(d, l).chamber().is_some());
            let parts = partition(d, l, kmax).unwrap();
            let total: usize = parts.values().map(|s| s.len()).sum();
            let union: BTreeSet<LatticePoint> = parts.values().flatten().copied().collect();
            prop_assert_eq!(total, union.len());
            prop_assert_eq!(union, LatticePoint::all(kmax).into_iter().collect::<BTreeSet<_>>());
        }
    }
}
