//! Acceptance suite: one PASS/FAIL line per criterion on stdout.
//!
//! Lines go straight to the stdout handle so they show up without
//! `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use su21::action::{
    basis, bracket_suite, casimir2_apply, casimir2_poly, casimir2_scalar, dl_valpha, dl_valpha_before_cg, ActionTerm,
};
use su21::compact::{
    cg, little_d, little_d_hyper, little_d_jacobi_exact, little_d_value, m_range, matrix_from_euler, spins_up_to,
    wigner_at, EulerAngles, UnitaryMatrix2, WignerIndex,
};
use su21::decomposition::{finite_dim_check, verify_closure, Chamber};
use su21::intertwine::{a_closed, a_gammasum, a_quadrature, diagonal_index, ledger_vs_walls, QuadratureSpec, Transform};
use su21::structure::{iwasawa_group, verify_identities, NcRoot};
use su21::surd::{rat, HalfInt, LambdaPoly, Rational, SurdSum};

const HYPER_TOL: f64 = 1e-11;
const UNITARITY_TOL: f64 = 1e-10;
const MULTIPLICATIVITY_TOL: f64 = 1e-9;
const IWASAWA_TOL: f64 = 1e-10;
const CASIMIR_POINT_TOL: f64 = 1e-12;
const GAMMASUM_TOL: f64 = 1e-10;
const QUADRATURE_TOL: f64 = 1e-6;
const SPOT_TOL: f64 = 1e-8;
const OFF_DIAGONAL_TOL: f64 = 1e-8;
const FROZEN_TOL: f64 = 1e-12;

fn report(name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
    assert!(pass, "{name}: {detail}");
}

fn h(t: i64) -> HalfInt {
    HalfInt::from_twice(t)
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_angles(rng: &mut StdRng) -> EulerAngles {
    EulerAngles::new(
        rng.gen_range(-2.0 * PI..2.0 * PI),
        rng.gen_range(-PI..3.0 * PI),
        rng.gen_range(0.0..PI),
        rng.gen_range(-PI..PI),
    )
}

#[test]
fn wigner_formula_paths() {
    let mut exact_ok = 0;
    let mut exact_total = 0;
    let mut worst = 0.0f64;
    for j in spins_up_to(h(6)) {
        for m1 in m_range(j) {
            for m2 in m_range(j) {
                exact_total += 1;
                if little_d(j, m1, m2).unwrap() == little_d_jacobi_exact(j, m1, m2).unwrap() {
                    exact_ok += 1;
                }
                for i in 0..37 {
                    let th = PI * i as f64 / 36.0;
                    worst = worst.max((little_d_hyper(j, m1, m2, th) - little_d_value(j, m1, m2, th)).abs());
                }
            }
        }
    }
    report(
        "wigner_formula_paths",
        exact_ok == exact_total && worst <= HYPER_TOL,
        &format!("finite sum = Jacobi exactly on {exact_ok}/{exact_total}; hypergeometric max diff {worst:.2e} (tol {HYPER_TOL:e})"),
    );
}

#[test]
fn wigner_unitarity_multiplicativity() {
    let mut rng = StdRng::seed_from_u64(0x5a21);
    let (mut unit, mut mult) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = matrix_from_euler(&random_angles(&mut rng));
        let hm = matrix_from_euler(&random_angles(&mut rng));
        let gh: UnitaryMatrix2 = g.mul(&hm);
        for j in spins_up_to(h(5)) {
            let n = j + HalfInt::from_int(rng.gen_range(-2..=2));
            let w = |m1: HalfInt, m2: HalfInt, x: &UnitaryMatrix2| wigner_at(&WignerIndex::new(j, n, m1, m2).unwrap(), x).unwrap();
            for m1 in m_range(j) {
                for m2 in m_range(j) {
                    let s: Complex64 = m_range(j).map(|m| w(m1, m, &g) * w(m2, m, &g).conj()).sum();
                    let delta = if m1 == m2 { 1.0 } else { 0.0 };
                    unit = unit.max((s - delta).norm());
                    let p: Complex64 = m_range(j).map(|m| w(m1, m, &g) * w(m, m2, &hm)).sum();
                    mult = mult.max((p - w(m1, m2, &gh)).norm());
                }
            }
        }
    }
    report(
        "wigner_unitarity_multiplicativity",
        unit <= UNITARITY_TOL && mult <= MULTIPLICATIVITY_TOL,
        &format!("100 pairs, j <= 5/2: unitarity {unit:.2e} (tol {UNITARITY_TOL:e}), multiplicativity {mult:.2e} (tol {MULTIPLICATIVITY_TOL:e})"),
    );
}

/// `sign · √(r)` as an exact surd.
fn root(sign: i32, r: Rational) -> SurdSum {
    if r.is_zero() {
        SurdSum::zero()
    } else {
        SurdSum::signed_sqrt(sign, &r).unwrap()
    }
}

#[test]
fn cg_tables() {
    let mut checked = 0;
    let mut bad = Vec::new();
    for jt in 1..=5 {
        let j = h(jt);
        let jr = j.to_rational();
        let one = Rational::from_integer(1.into());
        let two = Rational::from_integer(2.into());
        for m1 in m_range(j) {
            let m = m1.to_rational();
            let (p, q) = (&jr + &m, &jr - &m);
            let table_half: [(i64, i64, SurdSum); 4] = [
                (-1, -1, root(1, p.clone() / (&two * &jr + &one))),
                (-1, 1, root(-1, q.clone() / (&two * &jr + &one))),
                (1, -1, root(1, (&q + &one) / (&two * &jr + &one))),
                (1, 1, root(1, (&p + &one) / (&two * &jr + &one))),
            ];
            let d1 = &two * &jr * (&two * &jr + &one);
            let d2 = &two * &jr * (&jr + &one);
            let d3 = (&two * &jr + &two) * (&two * &jr + &one);
            let sgn = if m.is_negative() { -1 } else { 1 };
            let table_one: [(i64, i64, SurdSum); 9] = [
                (-2, -2, root(1, &p * (&p - &one) / &d1)),
                (-2, 0, root(-1, &q * &p * &two / &d1)),
                (-2, 2, root(1, &q * (&q - &one) / &d1)),
                (0, -2, root(1, &p * (&q + &one) / &d2)),
                (0, 0, root(sgn, &m * &m * &two / &d2)),
                (0, 2, root(-1, &q * (&p + &one) / &d2)),
                (2, -2, root(1, (&q + &one) * (&q + &two) / &d3)),
                (2, 0, root(1, (&q + &one) * (&p + &one) * &two / &d3)),
                (2, 2, root(1, (&p + &one) * (&p + &two) / &d3)),
            ];
            for (j2, table) in [(1, &table_half[..]), (2, &table_one[..])] {
                for (j0, m2, want) in table {
                    let (jj, mm) = (j + h(*j0), m1 + h(*m2));
                    if jj.twice() < 0 || mm.abs() > jj {
                        continue;
                    }
                    checked += 1;
                    let got = cg(j, m1, h(j2), h(*m2), jj, mm).unwrap();
                    if &got != want {
                        bad.push(format!("j={j} m1={m1} j2={} j0={} m2={}: {got} vs {want}", h(j2), h(*j0), h(*m2)));
                    }
                }
            }
        }
    }
    report("cg_tables", bad.is_empty(), &format!("{checked} table entries for j in 1/2..5/2 equal exactly; mismatches {bad:?}"));
}

#[test]
fn structure_identities() {
    let checks = verify_identities();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut k_defect = 0.0f64;
    for _ in 0..100 {
        let z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let w = rng.gen_range(-3.0..3.0);
        let f = iwasawa_group(z, w);
        worst = worst.max(f.reassembly_error());
        k_defect = k_defect.max(f.k_membership_defect());
    }
    report(
        "structure_identities",
        failed.is_empty() && worst <= IWASAWA_TOL && k_defect <= IWASAWA_TOL,
        &format!(
            "{} exact identities, failed {failed:?}; group Iwasawa reassembly {worst:.2e}, K defect {k_defect:.2e} (tol {IWASAWA_TOL:e})",
            checks.len()
        ),
    );
}

#[test]
fn action_consistency() {
    let mut sources = 0;
    let mut mismatches = 0;
    for delta in -6..=6 {
        for src in basis(delta, h(4)) {
            for r in NcRoot::ALL {
                sources += 1;
                let norm = |mut v: Vec<ActionTerm>| {
                    v.retain(|t| !t.coeff.is_zero());
                    v.sort_by_key(|t| t.target);
                    v
                };
                let a = norm(dl_valpha(r, &src, delta).unwrap());
                let b = norm(dl_valpha_before_cg(r, &src, delta).unwrap());
                if a != b {
                    mismatches += 1;
                }
            }
        }
    }
    let mut pairs = 0;
    let mut rows = 0;
    let mut failures = 0;
    for delta in [0, 1, -2] {
        for rep in bracket_suite(delta, h(6)).unwrap() {
            pairs += 1;
            rows += rep.rows_checked;
            failures += rep.failures.len();
        }
    }
    report(
        "action_consistency",
        mismatches == 0 && failures == 0 && rows > 0,
        &format!(
            "simplified vs unsimplified on {sources} (root, source) pairs, j <= 2: {mismatches} mismatches; brackets at jmax 3: {pairs} pairs, {rows} interior rows, {failures} failures"
        ),
    );
}

#[test]
fn casimir_scalar() {
    let mut rows = 0;
    let mut bad = Vec::new();
    for delta in -4..=4 {
        let r = casimir2_apply(delta, h(4)).unwrap();
        rows += r.rows_checked;
        // (1/36)(3(λ² - 4) + δ²)
        let want = LambdaPoly::new(vec![
            su21::surd::GaussSurd::real(SurdSum::from_rational(rat(delta * delta - 12, 36))),
            su21::surd::GaussSurd::int(0),
            su21::surd::GaussSurd::rat(1, 12),
        ])
        .unwrap();
        if !r.pass() || r.scalar != want || casimir2_poly(delta) != want {
            bad.push(delta);
        }
    }
    let at = casimir2_scalar(0, c(4.0));
    let point = (at - 1.0).norm();
    report(
        "casimir_scalar",
        bad.is_empty() && point <= CASIMIR_POINT_TOL,
        &format!("formal λ, jmax 2, δ in -4..4: {rows} interior rows, failing δ {bad:?}; value at (0, 4) = {:.15} (tol {CASIMIR_POINT_TOL:e})", at.re),
    );
}

#[test]
fn decomposition_closure() {
    let mut lines = Vec::new();
    let mut ok = true;
    for ch in Chamber::ALL {
        let (d, l) = ch.sample();
        let r = verify_closure(d, l, 12).unwrap();
        ok &= r.pass();
        lines.push(format!("{ch} ({d}, {l}) {} evaluations {}", r.evaluations, if r.pass() { "closed" } else { "LEAKS" }));
    }
    let mut dims = Vec::new();
    for ((d, l), want) in [((0, 4), 8), ((0, -4), 8), ((2, 4), 6)] {
        let r = finite_dim_check(d, l).unwrap();
        ok &= r.pass() && r.enumerated == want;
        dims.push(format!("({d}, {l}) -> {} (Weyl {})", r.enumerated, r.weyl));
    }
    report("decomposition_closure", ok, &format!("k <= 12: {}; finite dims {}", lines.join(", "), dims.join(", ")));
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
#[allow(clippy::excessive_precision)]
fn intertwiner_paths() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut sum_worst = 0.0f64;
    let mut tuples = 0;
    while tuples < 200 {
        let jt = rng.gen_range(0..=8);
        let mt = -jt + 2 * rng.gen_range(0..=jt);
        let delta = rng.gen_range(-4..=4);
        let lam = Complex64::new(rng.gen_range(0.2..6.0), if tuples % 4 == 0 { rng.gen_range(-2.0..2.0) } else { 0.0 });
        let a = a_closed(h(jt), h(mt), delta, lam).unwrap();
        if a.order != 0 {
            continue;
        }
        tuples += 1;
        let g = a_gammasum(h(jt), h(mt), delta, lam).unwrap().value;
        sum_worst = sum_worst.max(rel(g, a.leading));
    }

    let spec = QuadratureSpec::default();
    let mut quad_worst = 0.0f64;
    let mut grid = 0;
    for delta in [0, 1, 2] {
        for lam in [2.0, 2.5, 3.5] {
            for j in spins_up_to(h(3)) {
                for m1 in m_range(j) {
                    let a = a_closed(j, m1, delta, c(lam)).unwrap().value();
                    let idx = diagonal_index(j, m1, delta).unwrap();
                    let q = a_quadrature(&idx, delta, c(lam), &spec).unwrap().value;
                    quad_worst = quad_worst.max(if a.norm() > 0.0 { rel(q, a) } else { q.norm() });
                    grid += 1;
                }
            }
        }
    }

    let spot = a_quadrature(&diagonal_index(h(0), h(0), 0).unwrap(), 0, c(2.0), &spec).unwrap().value;
    let spot_err = (spot - PI * PI / 8.0).norm();

    let direct = QuadratureSpec { transform: Transform::Direct, ..spec };
    let mut off_worst = 0.0f64;
    let mut off = 0;
    for (delta, lam) in [(0, 2.5), (1, 3.5)] {
        for j in spins_up_to(h(2)) {
            for m2 in m_range(j) {
                let scale = a_closed(j, m2, delta, c(lam)).unwrap().value().norm();
                let n = diagonal_index(j, m2, delta).unwrap().n;
                for m1 in m_range(j).filter(|m1| *m1 != m2) {
                    let idx = WignerIndex::new(j, n, m1, m2).unwrap();
                    let q = a_quadrature(&idx, delta, c(lam), &direct).unwrap().value;
                    off_worst = off_worst.max(q.norm() / scale);
                    off += 1;
                }
            }
        }
    }

    // Independent high-precision evaluations of the closed form.
    let frozen = [
        (2, 2, 1, c(2.5), c(-0.030565628014299606786)),
        (3, -1, 2, c(3.5), c(-0.0062561226929852996345)),
        (4, 0, -1, Complex64::new(2.5, 1.25), Complex64::new(0.0063310594137032678505, -0.0041135432902912855006)),
        (6, 4, 3, c(0.75), c(-0.060992656158114491397)),
    ];
    let frozen_worst = frozen
        .iter()
        .map(|&(jt, mt, d, l, want)| rel(a_closed(h(jt), h(mt), d, l).unwrap().value(), want))
        .fold(0.0, f64::max);

    report(
        "intertwiner_paths",
        sum_worst <= GAMMASUM_TOL
            && quad_worst <= QUADRATURE_TOL
            && spot_err <= SPOT_TOL
            && off_worst <= OFF_DIAGONAL_TOL
            && frozen_worst <= FROZEN_TOL,
        &format!(
            "closed vs sum on {tuples} tuples {sum_worst:.2e} (tol {GAMMASUM_TOL:e}); closed vs quadrature on {grid} grid points {quad_worst:.2e} (tol {QUADRATURE_TOL:e}); spot pi^2/8 error {spot_err:.2e} (tol {SPOT_TOL:e}); {off} off-diagonal entries {off_worst:.2e} (tol {OFF_DIAGONAL_TOL:e}); frozen values {frozen_worst:.2e}"
        ),
    );
}

#[test]
fn zero_pole_ledger() {
    let mut parts = Vec::new();
    let mut ok = true;
    for ch in Chamber::ALL {
        let (d, l) = ch.sample();
        let r = ledger_vs_walls(d, l, 12).unwrap();
        ok &= r.pass();
        parts.push(format!("{ch} orders {:?}", r.distinct));
        if !r.pass() {
            parts.push(format!("silent walls {} split regions {}", r.silent_walls.len(), r.split_regions.len()));
        }
    }
    report("zero_pole_ledger", ok, &format!("k <= 12, every wall changes the order, regions constant: {}", parts.join("; ")));
}
