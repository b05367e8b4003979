//! `qtheta`: verify identities, compute theta spaces and act on them.
//!
//! Exit status: 0 on success, 1 when a mathematical check fails (a JSON
//! report is still written), 2 on usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qtheta::corpus::{parse_equation, verify_equation, verify_named_at, Report};
use qtheta::json::{
    monomial_from_json, monomial_to_json, multiplier_from_json, multiplier_to_json, series_to_json, window_to_json,
    HeisJson, MultiplierJson,
};
use qtheta::lattice::{quotient_data, Lattice};
use qtheta::multiplier::{compose, is_ample, theta_dim_basis, Multiplier};
use qtheta::qtorus::series::Region;
use qtheta::qtorus::TorusPoint;
use qtheta::small_heisenberg::{
    act_on_theta, character_split, commutant_dim, group_structure, verify_action_matrix, GammaEval, SmallHeisElement,
};
use qtheta::Error;

#[derive(Parser)]
#[command(name = "qtheta", version, about = "Exact quantized theta functions")]
struct Cli {
    /// Adjoin the m-th roots of unity (default: the exponent of the theta quotient)
    #[arg(long = "cyclotomic-order", global = true, value_name = "m")]
    cyclotomic_order: Option<u32>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true, value_name = "report.json")]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, value_name = "k")]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a registered identity (E012, E016, ...) or an equation file
    Verify {
        target: String,
        #[arg(long)]
        window: Option<i64>,
        /// q-order
        #[arg(long)]
        order: Option<i64>,
        /// Double one coefficient before checking; the check must then fail
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Dimension and basis of the theta space of a multiplier
    Theta {
        multiplier: PathBuf,
        #[arg(long, default_value_t = 4)]
        window: i64,
        /// q-order
        #[arg(long, default_value_t = 16)]
        order: i64,
    },
    /// The multiplier of theta_1 theta_2
    Compose { m1: PathBuf, m2: PathBuf },
    /// Structure of the finite Heisenberg group acting on theta functions
    SmallGroup {
        multiplier: PathBuf,
        #[arg(long, default_value_t = 16)]
        order: i64,
    },
    /// Matrix of an element of the normalizer on the theta basis
    Act {
        elem: PathBuf,
        multiplier: PathBuf,
        #[arg(long, default_value_t = 16)]
        order: i64,
        /// Verification window for the matrix
        #[arg(long, default_value_t = 3)]
        window: i64,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Math(Value),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

/// Input errors are usage errors; everything else the engine reports is a
/// mathematical failure.
fn engine(e: Error) -> Failure {
    match e {
        Error::Parse(_) | Error::UnknownName(_) => Failure::Usage(anyhow!(e)),
        other => Failure::Math(json!({"schema": 1, "status": "fail", "error": other.to_string()})),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads a multiplier file, or the report written by `compose`.
fn load_multiplier(path: &Path) -> Result<Multiplier, Failure> {
    let mut v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = v.get_mut("multiplier") {
        v = inner.take();
    }
    let j: MultiplierJson = serde_json::from_value(v).with_context(|| format!("parsing {}", path.display()))?;
    multiplier_from_json(&j).map_err(engine)
}

fn default_roots(l: &Multiplier) -> Result<u32, Failure> {
    let q = quotient_data(Lattice { rank: l.dim() }, &l.h_minus()).map_err(engine)?;
    Ok(u32::try_from(q.exponent()).unwrap_or(1).max(1))
}

fn check_order(order: i64, window: i64) -> Result<(), Failure> {
    if order < 0 || window < 0 {
        return Err(Failure::Usage(anyhow!("window and order must be nonnegative")));
    }
    Ok(())
}

fn matrix_json(m: &[Vec<qtheta::scalar_ring::ScalarSeries>]) -> Value {
    json!(m.iter().map(|r| r.iter().map(series_to_json).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn report_value(r: &Report) -> Result<(Value, bool), Failure> {
    let v = serde_json::from_str(&r.to_json()).context("serializing report")?;
    Ok((v, r.passed()))
}

fn verify(target: &str, window: Option<i64>, order: Option<i64>, corrupt: bool) -> Result<(Value, bool), Failure> {
    let path = Path::new(target);
    if path.extension().is_some_and(|e| e == "json") {
        let mut spec = parse_equation(&read(path)?).map_err(engine)?;
        spec.window = window.unwrap_or(spec.window);
        spec.order = order.unwrap_or(spec.order);
        check_order(spec.order, spec.window)?;
        if corrupt {
            spec.terms[0].coeff = spec.terms[0].coeff.add(&spec.terms[0].coeff);
        }
        let res = verify_equation(&spec).map_err(engine)?;
        return report_value(&Report::new(&spec.label, spec.window, spec.order, &[res]));
    }
    let id = qtheta::corpus::lookup(target).map_err(engine)?;
    let (w, n) = (window.unwrap_or(id.window), order.unwrap_or(id.order));
    check_order(n, w)?;
    report_value(&verify_named_at(target, w, n, corrupt).map_err(engine)?)
}

fn theta(path: &Path, window: i64, order: i64) -> Result<(Value, bool), Failure> {
    check_order(order, window)?;
    let l = load_multiplier(path)?;
    let b = theta_dim_basis(&l).map_err(engine)?;
    let region = Region::cube(l.dim(), window);
    let basis = b
        .basis
        .iter()
        .map(|th| Ok(window_to_json(&th.coeffs_on(&region, 2 * order)?, Some(window), order)))
        .collect::<qtheta::Result<Vec<_>>>()
        .map_err(engine)?;
    Ok((
        json!({
            "schema": 1,
            "dim": b.dim,
            "index": b.index,
            "ample": b.ample,
            "coset_reps": b.coset_reps,
            "basis": basis,
        }),
        true,
    ))
}

fn compose_cmd(p1: &Path, p2: &Path) -> Result<(Value, bool), Failure> {
    let (l1, l2) = (load_multiplier(p1)?, load_multiplier(p2)?);
    let l = compose(&l2, &l1).map_err(engine)?;
    let v = serde_json::to_value(multiplier_to_json(&l)).context("serializing multiplier")?;
    Ok((json!({"schema": 1, "multiplier": v, "ample": is_ample(&l)}), true))
}

fn small_group(path: &Path, m: Option<u32>, order: i64) -> Result<(Value, bool), Failure> {
    check_order(order, 0)?;
    let l = load_multiplier(path)?;
    let m = match m {
        Some(m) => m,
        None => default_roots(&l)?,
    };
    let st = group_structure(&l, m).map_err(engine)?;
    let basis = theta_dim_basis(&l).map_err(engine)?;
    let n = 2 * order;
    let d = l.dim();
    let kernel = st.kernel_gens.iter().map(|(g, _)| SmallHeisElement {
        c: qtheta::scalar_ring::UnitMonomial::one(),
        xi: g.clone(),
        gamma: vec![0; d],
    });
    let mut mats = Vec::new();
    for e in kernel.chain(st.lifts.iter().cloned()) {
        mats.push(act_on_theta(&l, &e, &basis, n, GammaEval::PeriodPoint).map_err(engine)?);
    }
    let chars = character_split(&l, &basis, m, n).map_err(engine)?;
    let commutant = commutant_dim(&mats, basis.dim).map_err(engine)?;
    let torus = |p: &TorusPoint| p.values().iter().map(monomial_to_json).collect::<Vec<_>>();
    Ok((
        json!({
            "schema": 1,
            "cyclotomic_order": m,
            "order": st.order(),
            "quotient_invariants": st.quotient.invariant_factors,
            "coset_reps": st.quotient.coset_reps,
            "kernel_generators": st.kernel_gens.iter().map(|(g, k)| json!({"point": torus(g), "order": k})).collect::<Vec<_>>(),
            "duality": st.duality,
            "duality_nondegenerate": st.duality_nondegenerate(),
            "lifts": st.lifts.iter().map(|e| json!({"c": monomial_to_json(&e.c), "x": torus(&e.xi), "h_l": e.gamma})).collect::<Vec<_>>(),
            "characters": chars.iter().map(|c| json!({"coset_rep": c.coset_rep, "character": c.character})).collect::<Vec<_>>(),
            // kernel generators first, then the lifts
            "action_matrices": mats.iter().map(|m| matrix_json(m)).collect::<Vec<_>>(),
            "commutant_dim": commutant,
        }),
        commutant == 1,
    ))
}

fn act(elem: &Path, mult: &Path, order: i64, window: i64) -> Result<(Value, bool), Failure> {
    check_order(order, window)?;
    let l = load_multiplier(mult)?;
    let j: HeisJson = serde_json::from_str(&read(elem)?).with_context(|| format!("parsing {}", elem.display()))?;
    let c = monomial_from_json(&j.c).map_err(engine)?;
    let x = j.x.iter().map(monomial_from_json).collect::<qtheta::Result<Vec<_>>>().map_err(engine)?;
    let e = SmallHeisElement { c, xi: TorusPoint::new(x), gamma: j.h_l };
    let basis = theta_dim_basis(&l).map_err(engine)?;
    let mat = act_on_theta(&l, &e, &basis, 2 * order, GammaEval::PeriodPoint).map_err(engine)?;
    let region = Region::cube(l.dim(), window);
    let ok = verify_action_matrix(&l, &e, &basis, &mat, &region, 2 * order).map_err(engine)?;
    Ok((
        json!({
            "schema": 1,
            "dim": basis.dim,
            "coset_reps": basis.coset_reps,
            "order": order,
            "window": window,
            "matrix": matrix_json(&mat),
            "status": if ok { "pass" } else { "fail" },
        }),
        ok,
    ))
}

fn run(cli: &Cli) -> Result<(Value, bool), Failure> {
    match &cli.cmd {
        Cmd::Verify { target, window, order, corrupt } => verify(target, *window, *order, *corrupt),
        Cmd::Theta { multiplier, window, order } => theta(multiplier, *window, *order),
        Cmd::Compose { m1, m2 } => compose_cmd(m1, m2),
        Cmd::SmallGroup { multiplier, order } => small_group(multiplier, cli.cyclotomic_order, *order),
        Cmd::Act { elem, multiplier, order, window } => act(elem, multiplier, *order, *window),
    }
}

fn emit(out: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn set_jobs(jobs: Option<usize>) -> anyhow::Result<()> {
    let Some(k) = jobs else { return Ok(()) };
    if k == 0 {
        return Err(anyhow!("--jobs must be positive"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = set_jobs(cli.jobs) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let (value, ok) = match run(&cli) {
        Ok(r) => r,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
        Err(Failure::Math(v)) => (v, false),
    };
    if let Err(e) = emit(cli.out.as_deref(), &value) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
