//! `su21`: command-line front end.
//!
//! Machine output is JSON with sorted keys and floats rounded to 15
//! significant digits; half-integers appear doubled under `_x2` keys.
//! Exit codes: 0 on success, 1 on a failed check or numeric failure
//! (with diagnostic JSON), 2 on bad flags.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use su21::action::{
    bracket_suite, casimir2_apply, casimir2_program, operator_matrix, InductionChar, Program,
};
use su21::compact::{cg, little_d, little_d_value, threej, wigner_d, EulerAngles, WignerIndex};
use su21::decomposition::{
    chamber_classify, chamber_walls, composition_series, diagram_svg, diagram_txt, finite_dim_check, jn_of,
    partition, region_minimum, verify_closure, Chamber, Classification,
};
use su21::intertwine::{compare_paths, ledger_vs_walls, Path, QuadratureSpec, Transform};
use su21::structure::verify_identities;
use su21::surd::HalfInt;
use su21::Error;

#[derive(Parser, Debug)]
#[command(name = "su21", version, about = "(g,K)-module calculus for SU(2,1) principal series")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "SU21_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Little-d function d^j_{m1,m2}: exact polynomial in sin, cos of θ/2.
    Dfun {
        #[arg(long)]
        j: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m1: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m2: HalfInt,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
    },
    /// Clebsch-Gordan coefficient <j1 m1; j2 m2 | j m>.
    Cg {
        #[arg(long)]
        j1: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m1: HalfInt,
        #[arg(long)]
        j2: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m2: HalfInt,
        #[arg(long)]
        j: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m: HalfInt,
    },
    /// Wigner 3j symbol.
    Threej {
        #[arg(long)]
        j1: HalfInt,
        #[arg(long)]
        j2: HalfInt,
        #[arg(long)]
        j3: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m1: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m2: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m3: HalfInt,
    },
    /// Wigner D-function W^{(j,n)}_{m1,m2} at Euler angles.
    WignerEval {
        #[arg(long)]
        j: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        n: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m1: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m2: HalfInt,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        zeta: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        psi: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        phi: f64,
    },
    /// Lie-algebra structure checks.
    Structure {
        #[command(subcommand)]
        cmd: StructureCmd,
    },
    /// Matrix of a program in the generators on the truncated basis.
    ActionMatrix {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        /// Integer or complex `a+bi`; omitted for formal λ.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long)]
        jmax: HalfInt,
        /// Word such as `v(a2)*U1`, or `omega2` for the quadratic Casimir.
        #[arg(long)]
        op: String,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Json)]
        format: MatrixFormat,
    },
    /// Chamber, composition series and regions of an integral character.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: i64,
        #[arg(long, default_value_t = 8)]
        kmax: i64,
        #[arg(long, value_enum)]
        diagram: Option<DiagramFormat>,
    },
    /// Shaded lattice diagram of the composition series.
    Diagram {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: i64,
        #[arg(long, default_value_t = 8)]
        kmax: i64,
        #[arg(long, value_enum, default_value_t = DiagramFormat::Txt)]
        format: DiagramFormat,
    },
    /// Diagonal entry of the long intertwining operator.
    Intertwine {
        #[arg(long)]
        j: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        m1: HalfInt,
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        /// Real or complex `a+bi`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, value_enum, default_value_t = PathArg::All)]
        path: PathArg,
        /// Relative quadrature tolerance, in (0, 1e-3].
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = TransformArg::Polar)]
        transform: TransformArg,
    },
    /// Runs every check suite at truncation `kmax`.
    VerifyAll {
        #[arg(long, default_value_t = 8)]
        kmax: i64,
    },
}

#[derive(Subcommand, Debug)]
enum StructureCmd {
    /// Runs the exact identity suite and prints a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = TableFormat::Txt)]
        format: TableFormat,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatrixFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiagramFormat {
    Txt,
    Svg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Txt,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PathArg {
    Closed,
    Gammasum,
    Quadrature,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformArg {
    Polar,
    Direct,
}

/// How a command ended.
enum Outcome {
    /// Output and whether every requested check passed.
    Done(String, bool),
    /// A numeric failure with its diagnostic.
    Failed(Value),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("warning: thread pool: {e}");
    }
    match run(&cli.cmd) {
        Ok(Outcome::Done(text, pass)) => {
            if let Err(e) = emit(cli.output.as_ref(), &text) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Ok(Outcome::Failed(diag)) => {
            println!("{}", render(&diag));
            ExitCode::from(1)
        }
        Err(Error::Quadrature { estimate, bound }) => {
            let diag = json!({"error": "quadrature", "estimate": complex(estimate), "bound": num(bound)});
            println!("{}", render(&diag));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}\n\nRun `su21 --help` for usage.");
            ExitCode::from(2)
        }
    }
}

fn emit(path: Option<&PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Rounds to 15 significant digits; non-finite values become strings.
fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(x.to_string());
    }
    let r: f64 = format!("{x:.14e}").parse().expect("formatted float");
    serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number)
}

fn complex(z: Complex64) -> Value {
    json!({"re": num(z.re), "im": num(z.im)})
}

fn render(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn done_json(v: Value, pass: bool) -> Outcome {
    Outcome::Done(render(&v) + "\n", pass)
}

fn x2(h: HalfInt) -> Value {
    json!(h.twice())
}

fn index_json(idx: &WignerIndex) -> Value {
    json!({"j_x2": x2(idx.j), "n_x2": x2(idx.n), "m1_x2": x2(idx.m1), "m2_x2": x2(idx.m2)})
}

fn index_key(idx: &WignerIndex) -> String {
    let [j, n, a, b] = idx.twice();
    format!("{j},{n},{a},{b}")
}

fn parse_complex(s: &str) -> su21::Result<Complex64> {
    s.trim().parse::<Complex64>().map_err(|_| Error::Parse(format!("not a complex number: {s:?}")))
}

fn run(cmd: &Cmd) -> su21::Result<Outcome> {
    match cmd {
        Cmd::Dfun { j, m1, m2, theta } => {
            WignerIndex::new(*j, *j, *m1, *m2)?;
            let poly = little_d(*j, *m1, *m2)?;
            let v = json!({
                "index": {"j_x2": x2(*j), "m1_x2": x2(*m1), "m2_x2": x2(*m2)},
                "theta": num(*theta),
                "value": {"exact": poly.to_string(), "float": num(little_d_value(*j, *m1, *m2, *theta))},
            });
            Ok(done_json(v, true))
        }
        Cmd::Cg { j1, m1, j2, m2, j, m } => {
            let c = cg(*j1, *m1, *j2, *m2, *j, *m)?;
            let v = json!({
                "index": {"j1_x2": x2(*j1), "m1_x2": x2(*m1), "j2_x2": x2(*j2), "m2_x2": x2(*m2), "j_x2": x2(*j), "m_x2": x2(*m)},
                "value": {"exact": c.to_string(), "float": num(c.to_f64())},
            });
            Ok(done_json(v, true))
        }
        Cmd::Threej { j1, j2, j3, m1, m2, m3 } => {
            let c = threej(*j1, *j2, *j3, *m1, *m2, *m3)?;
            let v = json!({
                "index": {"j1_x2": x2(*j1), "j2_x2": x2(*j2), "j3_x2": x2(*j3), "m1_x2": x2(*m1), "m2_x2": x2(*m2), "m3_x2": x2(*m3)},
                "value": {"exact": c.to_string(), "float": num(c.to_f64())},
            });
            Ok(done_json(v, true))
        }
        Cmd::WignerEval { j, n, m1, m2, zeta, psi, theta, phi } => {
            let idx = WignerIndex::new(*j, *n, *m1, *m2)?;
            let angles = EulerAngles::new(*zeta, *psi, *theta, *phi);
            let value = wigner_d(&idx, &angles);
            let v = json!({
                "index": index_json(&idx),
                "angles": {"zeta": num(*zeta), "psi": num(*psi), "theta": num(*theta), "phi": num(*phi)},
                "value": {"exact": Value::Null, "float": complex(value)},
            });
            Ok(done_json(v, true))
        }
        Cmd::Structure { cmd: StructureCmd::Verify { format } } => {
            let checks = verify_identities();
            let pass = checks.iter().all(|c| c.pass);
            let text = match format {
                TableFormat::Txt => {
                    let w = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
                    let mut s = String::new();
                    for c in &checks {
                        let pad = w - c.name.chars().count();
                        s += &format!("{}{}  {}\n", c.name, " ".repeat(pad), if c.pass { "pass" } else { "FAIL" });
                    }
                    s += &format!("{} of {} identities hold\n", checks.iter().filter(|c| c.pass).count(), checks.len());
                    s
                }
                TableFormat::Json => {
                    let m: Map<String, Value> = checks.iter().map(|c| (c.name.clone(), json!(c.pass))).collect();
                    render(&json!({"checks": m, "pass": pass})) + "\n"
                }
            };
            Ok(Outcome::Done(text, pass))
        }
        Cmd::ActionMatrix { delta, lambda, jmax, op, format } => action_matrix(*delta, lambda.as_deref(), *jmax, op, *format),
        Cmd::Classify { delta, lambda, kmax, diagram } => classify(*delta, *lambda, *kmax, *diagram),
        Cmd::Diagram { delta, lambda, kmax, format } => {
            let text = match format {
                DiagramFormat::Txt => diagram_txt(*delta, *lambda, *kmax)?,
                DiagramFormat::Svg => diagram_svg(*delta, *lambda, *kmax)?,
            };
            if let Classification::Unclassified(why) = chamber_classify(*delta, *lambda) {
                eprintln!("warning: unclassified character: {why}");
            }
            Ok(Outcome::Done(text, true))
        }
        Cmd::Intertwine { j, m1, delta, lambda, path, tol, transform } => {
            let lam = parse_complex(lambda)?;
            let paths: Vec<Path> = match path {
                PathArg::Closed => vec![Path::Closed],
                PathArg::Gammasum => vec![Path::Closed, Path::GammaSum],
                PathArg::Quadrature => vec![Path::Closed, Path::Quadrature],
                PathArg::All => Path::ALL.to_vec(),
            };
            let transform = match transform {
                TransformArg::Polar => Transform::Polar,
                TransformArg::Direct => Transform::Direct,
            };
            let spec = QuadratureSpec { rel_tol: *tol, transform, ..QuadratureSpec::default() };
            let r = compare_paths(*j, *m1, *delta, lam, &paths, &spec)?;
            let mut per = Map::new();
            for p in &r.values {
                let mut e = Map::new();
                e.insert("value".into(), complex(p.value));
                e.insert("diff".into(), num(p.diff));
                e.insert("threshold".into(), num(p.threshold));
                e.insert("agrees".into(), json!(p.agrees()));
                if let Some(err) = p.error {
                    e.insert("error_bound".into(), num(err));
                }
                if let Some(t) = p.terms {
                    e.insert("terms".into(), json!(t));
                }
                per.insert(p.path.name().into(), Value::Object(e));
            }
            let failures: Map<String, Value> = r.failures.iter().map(|(p, e)| (p.name().to_string(), json!(e.to_string()))).collect();
            let v = json!({
                "index": {"j_x2": x2(*j), "m1_x2": x2(*m1)},
                "delta": delta,
                "lambda": complex(lam),
                "value": complex(r.closed.value()),
                "paths": per,
                "agreement": {"pass": r.pass(), "failures": failures},
                "order": {"laurent": r.closed.order, "leading": complex(r.closed.leading), "exact": r.exact_order},
            });
            if r.pass() {
                Ok(done_json(v, true))
            } else {
                Ok(Outcome::Failed(v))
            }
        }
        Cmd::VerifyAll { kmax } => verify_all(*kmax),
    }
}

fn action_matrix(delta: i64, lambda: Option<&str>, jmax: HalfInt, op: &str, format: MatrixFormat) -> su21::Result<Outcome> {
    let chi = match lambda {
        None => InductionChar::formal(delta),
        Some(s) => match s.trim().parse::<i64>() {
            Ok(l) => InductionChar::integer(delta, l),
            Err(_) => InductionChar::complex(delta, parse_complex(s)?),
        },
    };
    let program = if op == "omega2" { casimir2_program() } else { Program::parse(op)? };
    let m = operator_matrix(&program, delta, jmax)?;
    let cell = |p: &su21::surd::LambdaPoly| -> su21::Result<(String, Option<Complex64>)> {
        Ok(match (chi.eval_exact(p), chi.lambda_complex()) {
            (Some(g), _) => (g.to_string(), Some(g.to_complex())),
            (None, Some(_)) => (String::new(), Some(chi.eval(p)?)),
            (None, None) => (p.to_string(), None),
        })
    };
    match format {
        MatrixFormat::Csv => {
            let mut s = String::from("source,target,exact,re,im\n");
            for (src, terms) in &m.rows {
                for t in terms {
                    let (ex, f) = cell(&t.coeff)?;
                    let (re, im) = f.map_or((String::new(), String::new()), |z| (format!("{:.14e}", z.re), format!("{:.14e}", z.im)));
                    s += &format!("\"{}\",\"{}\",\"{}\",{re},{im}\n", index_key(src), index_key(&t.target), ex);
                }
            }
            Ok(Outcome::Done(s, true))
        }
        MatrixFormat::Json => {
            let mut rows = Map::new();
            for (src, terms) in &m.rows {
                let mut row = Map::new();
                for t in terms {
                    let (ex, f) = cell(&t.coeff)?;
                    let mut e = Map::new();
                    if !ex.is_empty() {
                        e.insert("exact".into(), json!(ex));
                    }
                    if let Some(z) = f {
                        e.insert("float".into(), complex(z));
                    }
                    row.insert(index_key(&t.target), Value::Object(e));
                }
                rows.insert(index_key(src), Value::Object(row));
            }
            let leaky: Vec<String> = m.leaky.iter().map(index_key).collect();
            let lam = match chi.lambda_complex() {
                None => json!("formal"),
                Some(z) => complex(z),
            };
            let v = json!({"delta": delta, "lambda": lam, "jmax_x2": x2(jmax), "op": op, "rows": rows, "leaky": leaky});
            Ok(done_json(v, true))
        }
    }
}

fn classify(delta: i64, lambda: i64, kmax: i64, diagram: Option<DiagramFormat>) -> su21::Result<Outcome> {
    let chamber = match chamber_classify(delta, lambda) {
        Classification::Chamber(c) => c,
        Classification::Unclassified(why) => {
            eprintln!("warning: unclassified character: {why}");
            return Ok(match diagram {
                Some(DiagramFormat::Txt) => Outcome::Done(diagram_txt(delta, lambda, kmax)?, true),
                Some(DiagramFormat::Svg) => Outcome::Done(diagram_svg(delta, lambda, kmax)?, true),
                None => done_json(json!({"delta": delta, "lambda": lambda, "chamber": Value::Null, "reason": why}), true),
            });
        }
    };
    let parts = partition(delta, lambda, kmax)?;
    match diagram {
        Some(DiagramFormat::Txt) => {
            let mut s = diagram_txt(delta, lambda, kmax)?;
            s += &format!("\ncomposition series: {}\n", composition_series(delta, lambda)?);
            for (tag, pts) in &parts {
                let list: Vec<String> = pts.iter().map(|p| p.to_string()).collect();
                s += &format!("{} (shade {}): {}\n", tag.name(), tag.shade(), list.join(" "));
            }
            Ok(Outcome::Done(s, true))
        }
        Some(DiagramFormat::Svg) => Ok(Outcome::Done(diagram_svg(delta, lambda, kmax)?, true)),
        None => Ok(done_json(classification_json(chamber, delta, lambda, kmax, &parts)?, true)),
    }
}

fn classification_json(
    chamber: Chamber,
    delta: i64,
    lambda: i64,
    kmax: i64,
    parts: &std::collections::BTreeMap<su21::decomposition::Subquotient, std::collections::BTreeSet<su21::action::LatticePoint>>,
) -> su21::Result<Value> {
    let series = composition_series(delta, lambda)?;
    let mut regions = Map::new();
    let mut lowest = Map::new();
    for (tag, pts) in parts {
        let list: Vec<Value> = pts.iter().map(|p| json!([p.k, p.l])).collect();
        regions.insert(tag.name().into(), json!({"shade": tag.shade(), "points": list}));
        let p = region_minimum(*tag, delta, lambda)?;
        let (j, n) = jn_of(p, delta);
        lowest.insert(tag.name().into(), json!({"k": p.k, "l": p.l, "j_x2": x2(j), "n_x2": x2(n)}));
    }
    let levels: Vec<Value> = series
        .levels
        .iter()
        .map(|l| json!({"tags": l.tags.iter().map(|t| t.name()).collect::<Vec<_>>(), "quotient": l.quotient.iter().map(|t| t.name()).collect::<Vec<_>>()}))
        .collect();
    let walls: Vec<Value> = chamber_walls(chamber, delta, lambda)
        .iter()
        .map(|w| json!({"line": if w.sum { "k+l" } else { "k-l" }, "at": w.at}))
        .collect();
    Ok(json!({
        "delta": delta,
        "lambda": lambda,
        "kmax": kmax,
        "chamber": chamber.to_string(),
        "series": series.to_string(),
        "levels": levels,
        "regions": regions,
        "lowest": lowest,
        "walls": walls,
    }))
}

fn verify_all(kmax: i64) -> su21::Result<Outcome> {
    let mut checks = Map::new();
    let mut put = |name: String, pass: bool| {
        checks.insert(name, json!(pass));
    };
    put("structure identities".into(), verify_identities().iter().all(|c| c.pass));
    let jmax = HalfInt::from_twice((kmax / 2).clamp(2, 6));
    for delta in [0, 1] {
        put(format!("brackets delta={delta}"), bracket_suite(delta, jmax)?.iter().all(|r| r.failures.is_empty()));
        put(format!("casimir delta={delta}"), casimir2_apply(delta, jmax + HalfInt::ONE)?.pass());
    }
    for c in Chamber::ALL {
        let (d, l) = c.sample();
        put(format!("closure {c} ({d}, {l})"), verify_closure(d, l, kmax)?.pass());
        put(format!("ledger {c} ({d}, {l})"), ledger_vs_walls(d, l, kmax)?.pass());
    }
    for (d, l) in [(0, 4), (0, -4), (2, 4)] {
        put(format!("finite dimension ({d}, {l})"), finite_dim_check(d, l)?.pass());
    }
    let spot = compare_paths(HalfInt::ZERO, HalfInt::ZERO, 0, Complex64::new(2.0, 0.0), &Path::ALL, &QuadratureSpec::default())?;
    put("intertwiner three paths at (0, 0, 0, 2)".into(), spot.pass());
    let pass = checks.values().all(|v| v == &json!(true));
    Ok(done_json(json!({"kmax": kmax, "checks": checks, "pass": pass}), pass))
}
