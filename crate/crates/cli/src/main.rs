//! `adjustkit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 negative answer (no
//! valid set, invalid set, not separated, inconsistent orientation, not
//! amenable), 3 numeric failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adjustkit::adjustment::{
    adjustment_set_exists, amenable, forbidden_projection, forbidden_set, is_valid_adjustment_set, non_causal_open_path, o_set,
    AdjustmentProblem,
};
use adjustkit::ida::{plan, Adjustment, DataEstimator, IdaOptions, Method};
use adjustkit::meek::{construct_max_pdag, dag_to_cpdag, enumerate_class_dags, BackgroundKnowledge};
use adjustkit::scm::ErrorDist;
use adjustkit::separation::{open_path, SeparationQuery};
use adjustkit::sim::{estimated_cpdag_track, run_rmse_scenario, write_records, CoefficientPolicy, ScenarioConfig};
use adjustkit::varselect::{backward_select, oracle_backward_select, Alpha, IndependenceOracle};
use adjustkit::{fixtures, io as kio, rng, Error, Graph, LinearScm64, NodeSet};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adjustkit", version, about = "Covariate adjustment sets, forbidden projections and optimal IDA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the O-set, one node per line.
    Oset(RoleArgs),
    /// Print the forbidden projection as an edge list.
    Project(RoleArgs),
    /// Check whether --z is a valid adjustment set.
    Validate {
        #[command(flatten)]
        roles: RoleArgs,
        /// Comma-separated candidate set (may be empty).
        #[arg(long, default_value = "")]
        z: String,
    },
    /// Check whether --a and --b are separated given --c.
    Separate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "")]
        c: String,
    },
    /// Add background knowledge to a CPDAG or maxPDAG and close under
    /// Meek's rules.
    Orient {
        #[command(flatten)]
        graph: GraphArgs,
        /// Required orientations, `A->B,C->D`.
        #[arg(long, default_value = "")]
        bg: String,
        /// Replace a DAG input by its CPDAG first.
        #[arg(long)]
        cpdag: bool,
        /// Print the number of DAGs in the class instead of the graph.
        #[arg(long)]
        count: bool,
    },
    /// Semi-local or optimal IDA on data; CSV to stdout.
    Ida {
        #[command(flatten)]
        roles: RoleArgs,
        #[arg(long, env = "ADJUSTKIT_DATA")]
        data: PathBuf,
        #[arg(long, env = "ADJUSTKIT_METHOD", default_value = "optimal")]
        method: String,
        /// Keep only the first row per adjustment set.
        #[arg(long)]
        dedupe: bool,
        /// Semi-local only: zero unless y is a possible descendant of x.
        #[arg(long)]
        insist_possde: bool,
    },
    /// Backward selection from --z. With --data uses t-tests, otherwise the
    /// d-separation oracle of the graph.
    Select {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        z: String,
        #[arg(long, env = "ADJUSTKIT_DATA")]
        data: Option<PathBuf>,
        /// A level in [0, 1], `aic` or `bic`.
        #[arg(long, env = "ADJUSTKIT_ALPHA", default_value = "0.05")]
        alpha: String,
    },
    /// Relative-MSE scenario, or with --graph/--fixture a dataset from a
    /// linear model on that DAG.
    Simulate(SimulateArgs),
    /// List fixtures, or print one with --name.
    Fixtures {
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file.
    #[arg(long, conflicts_with = "fixture")]
    graph: Option<PathBuf>,
    /// Built-in example graph.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args)]
struct RoleArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Treatments, comma-separated. Defaults to the fixture's.
    #[arg(long)]
    x: Option<String>,
    /// Outcomes, comma-separated. Defaults to the fixture's.
    #[arg(long)]
    y: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Number of nodes of the random DAGs.
    #[arg(long)]
    p: Option<usize>,
    /// Expected neighbours per node.
    #[arg(long)]
    d: Option<f64>,
    /// Rows per dataset.
    #[arg(long)]
    n: usize,
    /// Replications.
    #[arg(long, env = "ADJUSTKIT_REPS", default_value_t = 1000)]
    reps: usize,
    #[arg(long, env = "ADJUSTKIT_DPG", default_value_t = 100)]
    dpg: usize,
    #[arg(long, env = "ADJUSTKIT_SEED")]
    seed: u64,
    /// Scenario mode: per-replication CSV. Dataset mode: the data (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `per-dataset` or `per-graph`.
    #[arg(long, default_value = "per-dataset")]
    coefficients: String,
    #[arg(long, env = "ADJUSTKIT_MAX_DRAWS", default_value_t = adjustkit::sim::DEFAULT_MAX_DRAWS)]
    max_draws: usize,
    /// Use uniform instead of Gaussian errors.
    #[arg(long)]
    uniform: bool,
    /// Run on estimated CPDAGs (not available).
    #[arg(long)]
    estimated: bool,
    /// Dataset mode: every edge coefficient equals this value instead of
    /// being drawn at random.
    #[arg(long)]
    coef: Option<f64>,
}

/// A failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotAmenable | Error::OutcomesNotReachable(_) => 2,
            Error::RankDeficient | Error::Singular | Error::TooFewRows { .. } | Error::RejectionBudget(_) => 3,
            _ => 1,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail { code: 1, msg: e.to_string() }
    }
}

fn negative(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

type Outcome = Result<(), Fail>;

fn load_graph(a: &GraphArgs) -> Result<(Graph, Option<fixtures::Fixture>), Fail> {
    match (&a.graph, &a.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Fail { code: 1, msg: format!("{}: {e}", path.display()) })?;
            Ok((kio::parse_graph(&text)?, None))
        }
        (None, Some(name)) => {
            let f = fixtures::get(name)?;
            Ok((f.graph.clone(), Some(f)))
        }
        (None, None) => Err(Fail { code: 1, msg: "one of --graph or --fixture is required".into() }),
    }
}

fn role(g: &Graph, given: &Option<String>, fallback: Option<&NodeSet>, what: &str) -> Result<NodeSet, Fail> {
    match (given, fallback) {
        (Some(list), _) => Ok(g.parse_set(list)?),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Err(Fail { code: 1, msg: format!("--{what} is required") }),
    }
}

fn load_roles(a: &RoleArgs) -> Result<(Graph, NodeSet, NodeSet), Fail> {
    let (g, f) = load_graph(&a.graph)?;
    let x = role(&g, &a.x, f.as_ref().map(|f| &f.x), "x")?;
    let y = role(&g, &a.y, f.as_ref().map(|f| &f.y), "y")?;
    Ok((g, x, y))
}

fn single(g: &Graph, s: &NodeSet, what: &str) -> Result<usize, Fail> {
    match s.len() {
        1 => Ok(s.first().unwrap()),
        _ => Err(Fail { code: 1, msg: format!("--{what} must name exactly one node, got {}", g.fmt_set(s)) }),
    }
}

fn print_set(out: &mut impl Write, g: &Graph, s: &NodeSet) -> io::Result<()> {
    for name in g.sorted_names(s) {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

fn cmd_oset(a: &RoleArgs, out: &mut impl Write) -> Outcome {
    let (g, x, y) = load_roles(a)?;
    let p = AdjustmentProblem::new(&g, x, y)?;
    if !amenable(&p)? {
        return Err(negative("not amenable: no valid adjustment set exists"));
    }
    if !adjustment_set_exists(&p)? {
        return Err(negative("no valid adjustment set exists"));
    }
    print_set(out, &g, &o_set(&p)?)?;
    Ok(())
}

fn cmd_project(a: &RoleArgs, out: &mut impl Write) -> Outcome {
    let (g, x, y) = load_roles(a)?;
    let p = AdjustmentProblem::new(&g, x, y)?;
    let proj = forbidden_projection(&p)?;
    write!(out, "{}", proj.graph)?;
    Ok(())
}

fn cmd_validate(a: &RoleArgs, z: &str, out: &mut impl Write) -> Outcome {
    let (g, x, y) = load_roles(a)?;
    let z = g.parse_set(z)?;
    let p = AdjustmentProblem::new(&g, x, y)?;
    if !amenable(&p)? {
        return Err(negative("not amenable: no valid adjustment set exists"));
    }
    if is_valid_adjustment_set(&p, &z)? {
        writeln!(out, "valid")?;
        return Ok(());
    }
    if !adjustment_set_exists(&p)? {
        return Err(negative("no valid adjustment set exists"));
    }
    let forb = forbidden_set(&p)?.intersection(&z);
    let why = if !forb.is_empty() {
        format!("contains forbidden nodes {}", g.fmt_set(&forb))
    } else {
        match non_causal_open_path(&p, &z) {
            Some(path) => format!("open non-causal path {}", path.display(&g)),
            None => "violates the adjustment criterion".into(),
        }
    };
    Err(negative(format!("not a valid adjustment set: {why}")))
}

fn cmd_separate(a: &GraphArgs, sa: &str, sb: &str, sc: &str, out: &mut impl Write) -> Outcome {
    let (g, _) = load_graph(a)?;
    let q = SeparationQuery::new(g.parse_set(sa)?, g.parse_set(sb)?, g.parse_set(sc)?);
    match open_path(&g, &q)? {
        None => {
            writeln!(out, "separated")?;
            Ok(())
        }
        Some(path) => Err(negative(format!("not separated: open path {}", path.display(&g)))),
    }
}

fn cmd_orient(a: &GraphArgs, bg: &str, cpdag: bool, count: bool, out: &mut impl Write) -> Outcome {
    let (mut g, _) = load_graph(a)?;
    if cpdag {
        g = dag_to_cpdag(&g)?;
    }
    let bk = BackgroundKnowledge::parse(&g, bg)?;
    let res = if bk.is_empty() { Some(g) } else { construct_max_pdag(&g, &bk)? };
    let Some(res) = res else {
        return Err(negative("FAIL: the orientations create a new v-structure or a directed cycle"));
    };
    if count {
        writeln!(out, "{}", enumerate_class_dags(&res)?.len())?;
    } else {
        write!(out, "{res}")?;
    }
    Ok(())
}

fn cmd_ida(a: &RoleArgs, data: &PathBuf, method: &str, dedupe: bool, insist: bool, out: &mut impl Write) -> Outcome {
    let (g, x, y) = load_roles(a)?;
    let (x, y) = (single(&g, &x, "x")?, single(&g, &y, "y")?);
    let method: Method = method.parse()?;
    let data = kio::read_dataset::<f64>(File::open(data).map_err(|e| Fail { code: 1, msg: format!("{}: {e}", data.display()) })?)?;
    let p = plan(&g, x, y, method, IdaOptions { insist_possde: insist })?;
    let est = DataEstimator::new(&data, &g)?;
    let m = p.estimate(&est);
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Fail { code: 1, msg: e.to_string() };
    w.write_record(["subset", "adjustment_set", "estimate"]).map_err(csv_err)?;
    let mut seen: Vec<&Adjustment> = Vec::new();
    let mut failed = Vec::new();
    for e in &m.entries {
        if dedupe && seen.contains(&&e.adjustment) {
            continue;
        }
        seen.push(&e.adjustment);
        let est = match &e.estimate {
            Ok(v) => format!("{v}"),
            Err(err) => {
                failed.push(format!("{}: {err}", g.fmt_set(&e.subset)));
                "NaN".into()
            }
        };
        w.write_record([g.sorted_names(&e.subset).join(";"), e.adjustment.render(&g, ";"), est]).map_err(csv_err)?;
    }
    w.flush()?;
    if !failed.is_empty() {
        return Err(Fail { code: 3, msg: format!("regression failed for {}", failed.join("; ")) });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    a: &GraphArgs,
    x: &Option<String>,
    y: &Option<String>,
    z: &str,
    data: &Option<PathBuf>,
    alpha: &str,
    out: &mut impl Write,
    err: &mut impl Write,
) -> Outcome {
    let zs: Vec<&str> = z.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let alpha: Alpha = alpha.parse()?;
    if let Some(path) = data {
        let d = kio::read_dataset::<f64>(File::open(path).map_err(|e| Fail { code: 1, msg: format!("{}: {e}", path.display()) })?)?;
        let need = |v: &Option<String>, w: &str| v.clone().ok_or(Fail { code: 1, msg: format!("--{w} is required") });
        let (x, y) = (need(x, "x")?, need(y, "y")?);
        let level = alpha.resolve(d.n())?;
        let sel = backward_select(&d, &x, &y, &zs, level)?;
        for r in &sel.trace {
            writeln!(err, "removed {} (p = {:.4})", r.name, r.p_value)?;
        }
        for name in &sel.selected {
            writeln!(out, "{name}")?;
        }
        return Ok(());
    }
    let (g, f) = load_graph(a)?;
    let xs = role(&g, x, f.as_ref().map(|f| &f.x), "x")?;
    let ys = role(&g, y, f.as_ref().map(|f| &f.y), "y")?;
    let (xn, yn) = (g.name(single(&g, &xs, "x")?).to_string(), g.name(single(&g, &ys, "y")?).to_string());
    let sel = oracle_backward_select(&IndependenceOracle::<f64>::Graph(&g), &xn, &yn, &zs)?;
    for name in zs.iter().filter(|n| !sel.iter().any(|s| s == *n)) {
        writeln!(err, "removed {name}")?;
    }
    for name in &sel {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

fn open_out(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>, Fail> {
    match path {
        None => Ok(None),
        Some(p) => Ok(Some(BufWriter::new(File::create(p).map_err(|e| Fail { code: 1, msg: format!("{}: {e}", p.display()) })?))),
    }
}

fn cmd_simulate(a: &SimulateArgs, out: &mut impl Write) -> Outcome {
    let errors = if a.uniform { ErrorDist::Uniform } else { ErrorDist::Gaussian };
    if a.graph.graph.is_some() || a.graph.fixture.is_some() {
        let (mut g, _) = load_graph(&a.graph)?;
        // A fully oriented PDAG stands for a single DAG.
        if g.class().is_pdag() && g.undirected_edge_count() == 0 {
            g = enumerate_class_dags(&g)?.swap_remove(0);
        }
        let mut r = rng::stream(a.seed, 0, rng::Purpose::Coefficients, 0);
        let scm = match a.coef {
            Some(c) => LinearScm64::constant(g, c)?,
            None => LinearScm64::random(g, &mut r)?,
        };
        let data = scm.simulate(a.n, errors, &mut rng::stream(a.seed, 0, rng::Purpose::Data, 0));
        match open_out(&a.out)? {
            Some(mut f) => {
                kio::write_dataset(&data, &mut f)?;
                f.flush()?;
            }
            None => kio::write_dataset(&data, out)?,
        }
        return Ok(());
    }
    let (Some(p), Some(d)) = (a.p, a.d) else {
        return Err(Fail { code: 1, msg: "--p and --d are required for a scenario".into() });
    };
    let mut cfg = ScenarioConfig::new(p, d, a.n, a.reps, a.dpg, a.seed);
    cfg.max_draws = a.max_draws;
    cfg.errors = errors;
    cfg.coefficients = a.coefficients.parse::<CoefficientPolicy>()?;
    if a.estimated {
        estimated_cpdag_track(&cfg)?;
    }
    let s = run_rmse_scenario::<f64>(&cfg)?;
    if let Some(mut f) = open_out(&a.out)? {
        write_records(&s.records, &mut f)?;
        f.flush()?;
    }
    writeln!(out, "p\td\tn\treps\tgeo_mean\tmedian\tfailed\trejection_rate")?;
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{}\t{:.3}",
        p,
        d,
        a.n,
        s.records.len(),
        s.geometric_mean,
        s.median,
        s.failures.len(),
        s.rejection_rate
    )?;
    Ok(())
}

fn cmd_fixtures(name: &Option<String>, out: &mut impl Write) -> Outcome {
    match name {
        None => {
            for n in fixtures::names() {
                writeln!(out, "{n}")?;
            }
        }
        Some(n) => write!(out, "{}", fixtures::text(n)?)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let res = match &cli.command {
        Command::Oset(a) => cmd_oset(a, &mut out),
        Command::Project(a) => cmd_project(a, &mut out),
        Command::Validate { roles, z } => cmd_validate(roles, z, &mut out),
        Command::Separate { graph, a, b, c } => cmd_separate(graph, a, b, c, &mut out),
        Command::Orient { graph, bg, cpdag, count } => cmd_orient(graph, bg, *cpdag, *count, &mut out),
        Command::Ida { roles, data, method, dedupe, insist_possde } => cmd_ida(roles, data, method, *dedupe, *insist_possde, &mut out),
        Command::Select { graph, x, y, z, data, alpha } => cmd_select(graph, x, y, z, data, alpha, &mut out, &mut err),
        Command::Simulate(a) => cmd_simulate(a, &mut out),
        Command::Fixtures { name } => cmd_fixtures(name, &mut out),
    };
    out.flush()?;
    res
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("adjustkit: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
