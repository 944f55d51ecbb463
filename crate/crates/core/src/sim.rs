//! Optimal versus local IDA on simulated data.
//!
//! Each replication draws a random DAG and a treatment/outcome pair until
//! the CPDAG is not amenable for the pair and no possible effect is zero,
//! then estimates the smallest absolute possible effect with both IDA
//! variants on many datasets from the same model. The ratio of the two mean
//! squared errors is the relative MSE of the replication.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::adjustment::{amenable, AdjustmentProblem};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::ida::{plan, Adjustment, DataEstimator, IdaOptions, IdaPlan, Method, PopulationEstimator};
use crate::meek::dag_to_cpdag;
use crate::rng::{stream, Purpose};
use crate::scalar::Scalar;
use crate::scm::{random_dag, ErrorDist, LinearScm};

/// Default cap on rejection-sampling draws per replication.
pub const DEFAULT_MAX_DRAWS: usize = 10_000;

/// When edge coefficients are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoefficientPolicy {
    /// New coefficients for every dataset, with that dataset's own true
    /// minimum.
    #[default]
    PerDataset,
    /// One set of coefficients per replication.
    PerGraph,
}

impl std::str::FromStr for CoefficientPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "perdataset" | "dataset" => Ok(CoefficientPolicy::PerDataset),
            "pergraph" | "graph" => Ok(CoefficientPolicy::PerGraph),
            _ => Err(Error::InvalidParameter(format!("unknown coefficient policy `{s}`"))),
        }
    }
}

/// One simulation scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Number of nodes.
    pub p: usize,
    /// Expected number of neighbours per node.
    pub d: f64,
    /// Sample size of each dataset.
    pub n: usize,
    pub reps: usize,
    pub datasets_per_graph: usize,
    pub seed: u64,
    pub max_draws: usize,
    /// Upper bound on `reps * datasets_per_graph`.
    pub budget: usize,
    pub errors: ErrorDist,
    pub coefficients: CoefficientPolicy,
}

impl ScenarioConfig {
    pub fn new(p: usize, d: f64, n: usize, reps: usize, datasets_per_graph: usize, seed: u64) -> Self {
        ScenarioConfig {
            p,
            d,
            n,
            reps,
            datasets_per_graph,
            seed,
            max_draws: DEFAULT_MAX_DRAWS,
            budget: 10_000_000,
            errors: ErrorDist::Gaussian,
            coefficients: CoefficientPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if !(self.d > 0.0 && self.d <= (self.p - 1) as f64) {
            return bad(format!("d must lie in (0, {}], got {}", self.p - 1, self.d));
        }
        if self.n < 2 || self.reps == 0 || self.datasets_per_graph == 0 || self.max_draws == 0 {
            return bad("n must be at least 2 and reps, datasets per graph and max draws positive".into());
        }
        match self.reps.checked_mul(self.datasets_per_graph) {
            Some(t) if t <= self.budget => Ok(()),
            _ => bad(format!("reps * datasets per graph exceeds the budget of {}", self.budget)),
        }
    }
}

/// An accepted draw: the model, its CPDAG and the pair. The model's
/// coefficients are the ones used to check the minimum.
#[derive(Clone, Debug)]
pub struct ScenarioGraph<T: Scalar> {
    pub scm: LinearScm<T>,
    pub cpdag: Graph,
    pub x: NodeId,
    pub y: NodeId,
    /// Smallest absolute population possible effect.
    pub min_abs_true: f64,
    /// Draws used, including the accepted one.
    pub draws: usize,
}

fn try_draw<T: Scalar>(cfg: &ScenarioConfig, rep: u32, k: u32) -> Result<Option<ScenarioGraph<T>>> {
    let mut rng = stream(cfg.seed, rep, Purpose::Graph, k);
    let dag = random_dag(cfg.p, cfg.d, &mut rng)?;
    let x = rng.random_range(0..cfg.p);
    let y = (x + rng.random_range(1..cfg.p)) % cfg.p;
    let cpdag = dag_to_cpdag(&dag)?;
    let problem = AdjustmentProblem::new(&cpdag, NodeSet::singleton(x), NodeSet::singleton(y))?;
    if amenable(&problem)? {
        return Ok(None);
    }
    let truth = plan(&cpdag, x, y, Method::Optimal, IdaOptions::default())?;
    if truth.entries.iter().any(|e| e.adjustment == Adjustment::Zero) {
        return Ok(None);
    }
    let scm = LinearScm::<T>::random(dag, &mut stream(cfg.seed, rep, Purpose::Coefficients, k))?;
    let est = PopulationEstimator::from_scm(&scm, &cpdag)?;
    let Some(min_abs_true) = truth.estimate(&est).min_abs() else { return Ok(None) };
    let min_abs_true = min_abs_true.f64();
    if !(min_abs_true > 1e-12) {
        return Ok(None);
    }
    Ok(Some(ScenarioGraph { scm, cpdag, x, y, min_abs_true, draws: k as usize + 1 }))
}

/// Rejection-samples the model of replication `rep`.
pub fn draw_scenario_graph<T: Scalar>(cfg: &ScenarioConfig, rep: u32) -> Result<ScenarioGraph<T>> {
    cfg.validate()?;
    for k in 0..cfg.max_draws.min(1 << 24) {
        if let Some(g) = try_draw(cfg, rep, k as u32)? {
            return Ok(g);
        }
    }
    Err(Error::RejectionBudget(cfg.max_draws))
}

/// Per-replication outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct RmseRecord {
    pub rep: u32,
    /// True minimum absolute effect, averaged over datasets when the
    /// coefficients are redrawn per dataset.
    pub min_abs_true: f64,
    pub mse_optimal: f64,
    pub mse_local: f64,
    /// `mse_optimal / mse_local`, NaN when `mse_local` is zero.
    pub rmse: f64,
    pub draws: usize,
    /// Datasets on which some IDA entry could not be estimated.
    pub partial_datasets: usize,
}

/// Records and their aggregates.
#[derive(Clone, Debug)]
pub struct ScenarioSummary {
    pub config: ScenarioConfig,
    pub records: Vec<RmseRecord>,
    pub failures: Vec<(u32, Error)>,
    pub geometric_mean: f64,
    pub median: f64,
    /// Rejected draws over all draws.
    pub rejection_rate: f64,
}

fn min_abs_error<T: Scalar>(plan: &IdaPlan, est: &DataEstimator<'_, T>, truth: f64) -> (f64, bool) {
    let m = plan.estimate(est);
    let partial = m.entries.iter().any(|e| e.estimate.is_err());
    match m.min_abs() {
        Some(v) => ((v.f64() - truth).powi(2), partial),
        None => (f64::NAN, true),
    }
}

/// Runs one replication.
pub fn run_replication<T: Scalar>(cfg: &ScenarioConfig, rep: u32) -> Result<RmseRecord> {
    let sg = draw_scenario_graph::<T>(cfg, rep)?;
    let opt = plan(&sg.cpdag, sg.x, sg.y, Method::Optimal, IdaOptions::default())?;
    let loc = plan(&sg.cpdag, sg.x, sg.y, Method::SemiLocal, IdaOptions::default())?;
    compare_plans(cfg, rep, &sg, &opt, &loc)
}

/// MSE of `opt` over MSE of `loc` on the datasets of replication `rep`.
/// The true minimum is always taken from `opt`, which must be an optimal
/// IDA plan or one with the same population values.
pub fn compare_plans<T: Scalar>(cfg: &ScenarioConfig, rep: u32, sg: &ScenarioGraph<T>, opt: &IdaPlan, loc: &IdaPlan) -> Result<RmseRecord> {
    let (mut so, mut sl, mut st, mut partial) = (0.0, 0.0, 0.0, 0);
    for j in 0..cfg.datasets_per_graph as u32 {
        let redrawn;
        let (scm, truth) = match cfg.coefficients {
            CoefficientPolicy::PerGraph => (&sg.scm, sg.min_abs_true),
            CoefficientPolicy::PerDataset => {
                redrawn = LinearScm::<T>::random(sg.scm.dag().clone(), &mut stream(cfg.seed, rep, Purpose::Redraw, j))?;
                let est = PopulationEstimator::from_scm(&redrawn, &sg.cpdag)?;
                let t = opt.estimate(&est).min_abs().map(|v| v.f64()).unwrap_or(f64::NAN);
                (&redrawn, t)
            }
        };
        let data = scm.simulate(cfg.n, cfg.errors, &mut stream(cfg.seed, rep, Purpose::Data, j));
        let est = DataEstimator::new(&data, &sg.cpdag)?;
        let (eo, po) = min_abs_error(opt, &est, truth);
        let (el, pl) = min_abs_error(loc, &est, truth);
        so += eo;
        sl += el;
        st += truth;
        partial += usize::from(po || pl);
    }
    let k = cfg.datasets_per_graph as f64;
    let (mse_optimal, mse_local) = (so / k, sl / k);
    let rmse = if mse_local > 0.0 { mse_optimal / mse_local } else { f64::NAN };
    Ok(RmseRecord { rep, min_abs_true: st / k, mse_optimal, mse_local, rmse, draws: sg.draws, partial_datasets: partial })
}

/// Geometric mean of the positive finite values.
pub fn geometric_mean(v: &[f64]) -> f64 {
    let logs: Vec<f64> = v.iter().filter(|x| x.is_finite() && **x > 0.0).map(|x| x.ln()).collect();
    if logs.is_empty() {
        return f64::NAN;
    }
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Median of the finite values.
pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

/// All replications in parallel, aggregated in replication order.
pub fn run_rmse_scenario<T: Scalar>(cfg: &ScenarioConfig) -> Result<ScenarioSummary> {
    cfg.validate()?;
    let results: Vec<(u32, Result<RmseRecord>)> =
        (0..cfg.reps as u32).into_par_iter().map(|r| (r, run_replication::<T>(cfg, r))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((r, e)),
        }
    }
    let rmse: Vec<f64> = records.iter().map(|r| r.rmse).collect();
    let draws: usize = records.iter().map(|r| r.draws).sum();
    let rejection_rate = if draws == 0 { f64::NAN } else { (draws - records.len()) as f64 / draws as f64 };
    Ok(ScenarioSummary {
        config: cfg.clone(),
        geometric_mean: geometric_mean(&rmse),
        median: median(&rmse),
        rejection_rate,
        records,
        failures,
    })
}

/// Writes `rep,min_abs_true,mse_optimal,mse_local,rmse`.
pub fn write_records(records: &[RmseRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["rep", "min_abs_true", "mse_optimal", "mse_local", "rmse"]).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            format!("{:.12e}", r.min_abs_true),
            format!("{:.12e}", r.mse_optimal),
            format!("{:.12e}", r.mse_local),
            format!("{:.12e}", r.rmse),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// The estimated-CPDAG track needs a structure learner, which this crate
/// does not provide.
pub fn estimated_cpdag_track(_cfg: &ScenarioConfig) -> Result<ScenarioSummary> {
    Err(Error::Unsupported("estimated-CPDAG track requires structure learning (out of scope)".into()))
}

/// One estimate from [`density_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub rep: u32,
    pub method: Method,
    pub subset: String,
    pub adjustment: String,
    /// NaN when the regression failed.
    pub estimate: f64,
}

/// `reps` datasets of size `n` from `scm`, each run through both IDA
/// variants on `g`; every possible effect becomes one row.
pub fn density_experiment<T: Scalar>(
    g: &Graph,
    x: NodeId,
    y: NodeId,
    scm: &LinearScm<T>,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<DensityRow>> {
    let plans = [
        plan(g, x, y, Method::SemiLocal, IdaOptions::default())?,
        plan(g, x, y, Method::Optimal, IdaOptions::default())?,
    ];
    let per_rep: Vec<Result<Vec<DensityRow>>> = (0..reps as u32)
        .into_par_iter()
        .map(|r| {
            let data = scm.simulate(n, ErrorDist::Gaussian, &mut stream(seed, r, Purpose::Data, 0)).aligned_to(g)?;
            let est = DataEstimator::new(&data, g)?;
            let mut rows = Vec::new();
            for p in &plans {
                for e in p.estimate(&est).entries {
                    rows.push(DensityRow {
                        rep: r,
                        method: p.method,
                        subset: g.sorted_names(&e.subset).join(";"),
                        adjustment: e.adjustment.render(g, ";"),
                        estimate: e.estimate.map(|v| v.f64()).unwrap_or(f64::NAN),
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_rep {
        out.extend(r?);
    }
    Ok(out)
}

/// Writes `rep,method,subset,adjustment_set,estimate`.
pub fn write_density(rows: &[DensityRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["rep", "method", "subset", "adjustment_set", "estimate"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.rep.to_string(), r.method.to_string(), r.subset.clone(), r.adjustment.clone(), format!("{:.12e}", r.estimate)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
