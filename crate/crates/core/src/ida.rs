//! Semi-local and optimal IDA.
//!
//! Both variants walk the subsets `S` of the siblings of `x`, orient
//! `S -> x` and `x -> sib(x) \ S`, and close the result under Meek's rules.
//! Subsets that create a new v-structure or a cycle fail and contribute no
//! entry. For the rest, semi-local IDA adjusts for the parents of `x` in the
//! oriented graph and optimal IDA for its O-set. Planning (which graph, which
//! set) is kept apart from estimation so the same plan can be evaluated on
//! data or on a population covariance.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::adjustment::{o_set, AdjustmentProblem};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphClass, NodeId, NodeSet};
use crate::meek::{construct_max_pdag, BackgroundKnowledge};
use crate::scalar::Scalar;
use crate::scm::{ols_adjusted, Covariance, Dataset, LinearScm};

/// Which adjustment sets IDA uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Parents of `x` in each oriented graph.
    SemiLocal,
    /// O-set in each oriented graph.
    Optimal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SemiLocal => "semilocal",
            Method::Optimal => "optimal",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "semilocal" | "local" => Ok(Method::SemiLocal),
            "optimal" => Ok(Method::Optimal),
            _ => Err(Error::InvalidParameter(format!("unknown IDA method `{s}`"))),
        }
    }
}

/// How an entry's effect is obtained.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Adjustment {
    /// The effect is zero without any regression.
    Zero,
    /// Regress `y` on `x` and this set.
    Set(NodeSet),
}

impl Adjustment {
    pub fn set(&self) -> Option<&NodeSet> {
        match self {
            Adjustment::Zero => None,
            Adjustment::Set(s) => Some(s),
        }
    }

    /// `ZERO` or the sorted names joined by `sep`.
    pub fn render(&self, g: &Graph, sep: &str) -> String {
        match self {
            Adjustment::Zero => "ZERO".into(),
            Adjustment::Set(s) => g.sorted_names(s).join(sep),
        }
    }
}

/// Options shared by both variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IdaOptions {
    /// Semi-local IDA only: return zero whenever `y` is not a possible
    /// descendant of `x` in the oriented graph, rather than only when `y`
    /// is a parent of `x`.
    pub insist_possde: bool,
}

/// One surviving sibling subset with its oriented graph and adjustment.
#[derive(Clone, Debug)]
pub struct PlanEntry {
    pub subset: NodeSet,
    pub oriented: Graph,
    pub adjustment: Adjustment,
}

/// Sibling subsets with their adjustments, before any estimation.
#[derive(Clone, Debug)]
pub struct IdaPlan {
    pub x: NodeId,
    pub y: NodeId,
    pub method: Method,
    pub entries: Vec<PlanEntry>,
    /// Subsets whose orientation contradicts the graph.
    pub failed: Vec<NodeSet>,
}

/// Sibling subsets of `x` by size, then by their sorted node names.
pub fn sibling_subsets(g: &Graph, x: NodeId) -> Result<Vec<NodeSet>> {
    g.check_node(x)?;
    let sib = g.siblings_of(x).to_vec();
    if sib.len() > 24 {
        return Err(Error::TooLarge(sib.len(), 24));
    }
    let mut out: Vec<(NodeSet, Vec<&str>)> = (0u32..1 << sib.len())
        .map(|m| {
            let s: NodeSet = (0..sib.len()).filter(|&i| m >> i & 1 == 1).map(|i| sib[i]).collect();
            let names = g.sorted_names(&s);
            (s, names)
        })
        .collect();
    out.sort_by(|a, b| match a.1.len().cmp(&b.1.len()) {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

/// Orients `subset -> x` and `x -> sib(x) \ subset`, closing under Meek's
/// rules. `None` if that contradicts `g`.
pub fn orient_subset(g: &Graph, x: NodeId, subset: &NodeSet) -> Result<Option<Graph>> {
    let mut bg = BackgroundKnowledge::new();
    for &s in g.siblings_of(x) {
        if subset.contains(s) {
            bg.require(s, x);
        } else {
            bg.require(x, s);
        }
    }
    construct_max_pdag(g, &bg)
}

fn check_input(g: &Graph, x: NodeId, y: NodeId) -> Result<()> {
    if !matches!(g.class(), GraphClass::Dag | GraphClass::Cpdag | GraphClass::MaxPdag) {
        return Err(Error::WrongClass { expected: "DAG, CPDAG or maxPDAG", found: g.class().as_str() });
    }
    g.check_node(x)?;
    g.check_node(y)?;
    if x == y {
        return Err(Error::Overlap("treatment and outcome coincide".into()));
    }
    Ok(())
}

fn adjustment_for(gp: &Graph, x: NodeId, y: NodeId, method: Method, opts: IdaOptions) -> Result<Adjustment> {
    let xs = NodeSet::singleton(x);
    let parents = || NodeSet::from_iter(gp.parents_of(x).iter().copied());
    match method {
        Method::SemiLocal => {
            if gp.parents_of(x).contains(&y) || (opts.insist_possde && !gp.possible_descendants(&xs)?.contains(y)) {
                Ok(Adjustment::Zero)
            } else {
                Ok(Adjustment::Set(parents()))
            }
        }
        Method::Optimal => {
            // Every edge at x is oriented here, so Meek's rules have already
            // exposed all descendants of x.
            if !gp.descendants(&xs)?.contains(y) {
                return Ok(Adjustment::Zero);
            }
            let p = AdjustmentProblem::new(gp, xs, NodeSet::singleton(y))?;
            Ok(Adjustment::Set(o_set(&p)?))
        }
    }
}

/// Plans IDA for `x` and `y` on a DAG, CPDAG or maxPDAG.
pub fn plan(g: &Graph, x: NodeId, y: NodeId, method: Method, opts: IdaOptions) -> Result<IdaPlan> {
    check_input(g, x, y)?;
    let subsets = sibling_subsets(g, x)?;
    let results: Vec<Result<(NodeSet, Option<(Graph, Adjustment)>)>> = subsets
        .into_par_iter()
        .map(|s| match orient_subset(g, x, &s)? {
            None => Ok((s, None)),
            Some(gp) => {
                let adj = adjustment_for(&gp, x, y, method, opts)?;
                Ok((s, Some((gp, adj))))
            }
        })
        .collect();
    let mut entries = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r? {
            (s, None) => failed.push(s),
            (subset, Some((oriented, adjustment))) => entries.push(PlanEntry { subset, oriented, adjustment }),
        }
    }
    Ok(IdaPlan { x, y, method, entries, failed })
}

/// Regression coefficient of `x` when regressing `y` on `x ∪ z`, with node
/// ids taken from the graph being analysed.
pub trait EffectEstimator<T: Scalar>: Sync {
    fn coefficient(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T>;
}

/// OLS on a dataset whose columns are matched to graph nodes by name.
pub struct DataEstimator<'a, T: Scalar> {
    data: &'a Dataset<T>,
    cols: Vec<usize>,
}

impl<'a, T: Scalar> DataEstimator<'a, T> {
    pub fn new(data: &'a Dataset<T>, g: &Graph) -> Result<Self> {
        Ok(DataEstimator { data, cols: data.columns_for(g)? })
    }
}

impl<T: Scalar> EffectEstimator<T> for DataEstimator<'_, T> {
    fn coefficient(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T> {
        let zc: Vec<usize> = z.iter().map(|v| self.cols[v]).collect();
        Ok(ols_adjusted(self.data, self.cols[x], self.cols[y], &zc)?.coef)
    }
}

/// Population regression on a covariance matrix whose variables are
/// matched to graph nodes by name.
pub struct PopulationEstimator<T: Scalar> {
    cov: Covariance<T>,
    index: Vec<usize>,
}

impl<T: Scalar> PopulationEstimator<T> {
    pub fn new(cov: Covariance<T>, g: &Graph) -> Result<Self> {
        let index = g
            .names()
            .iter()
            .map(|n| cov.names.iter().position(|c| c == n).ok_or_else(|| Error::UnknownNode(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(PopulationEstimator { cov, index })
    }

    pub fn from_scm(scm: &LinearScm<T>, g: &Graph) -> Result<Self> {
        Self::new(scm.implied_covariance(), g)
    }

    fn map(&self, z: &NodeSet) -> NodeSet {
        z.iter().map(|v| self.index[v]).collect()
    }

    /// Asymptotic variance of the adjusted estimator, `σ_yy.xz / σ_xx.z`.
    pub fn avar(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T> {
        self.cov.avar(self.index[x], self.index[y], &self.map(z))
    }
}

impl<T: Scalar> EffectEstimator<T> for PopulationEstimator<T> {
    fn coefficient(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T> {
        let mut t = vec![self.index[x]];
        t.extend(self.map(z).iter());
        Ok(self.cov.regression(self.index[y], &t)?[0])
    }
}

/// One possible effect.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectEntry<T> {
    pub subset: NodeSet,
    pub adjustment: Adjustment,
    /// A failed regression is kept on its entry.
    pub estimate: Result<T>,
}

/// Possible effects in sibling-subset order.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectMultiset<T> {
    pub method: Method,
    pub entries: Vec<EffectEntry<T>>,
    pub failed: Vec<NodeSet>,
}

impl<T: Scalar> EffectMultiset<T> {
    /// Estimates of the entries whose regression succeeded.
    pub fn values(&self) -> Vec<T> {
        self.entries.iter().filter_map(|e| e.estimate.as_ref().ok().copied()).collect()
    }

    /// Smallest absolute estimate, `None` if no entry succeeded.
    pub fn min_abs(&self) -> Option<T> {
        self.values().into_iter().map(|v| v.abs()).reduce(|a, b| if b < a { b } else { a })
    }
}

impl IdaPlan {
    /// Evaluates every entry with `est`.
    pub fn estimate<T: Scalar, E: EffectEstimator<T>>(&self, est: &E) -> EffectMultiset<T> {
        let entries = self
            .entries
            .par_iter()
            .map(|e| {
                let estimate = match &e.adjustment {
                    Adjustment::Zero => Ok(T::zero()),
                    Adjustment::Set(z) => est.coefficient(self.x, self.y, z),
                };
                EffectEntry { subset: e.subset.clone(), adjustment: e.adjustment.clone(), estimate }
            })
            .collect();
        EffectMultiset { method: self.method, entries, failed: self.failed.clone() }
    }
}

fn run<T: Scalar>(g: &Graph, x: NodeId, y: NodeId, data: &Dataset<T>, method: Method, opts: IdaOptions) -> Result<EffectMultiset<T>> {
    let est = DataEstimator::new(data, g)?;
    Ok(plan(g, x, y, method, opts)?.estimate(&est))
}

/// Semi-local IDA on data.
pub fn semi_local_ida<T: Scalar>(g: &Graph, x: NodeId, y: NodeId, data: &Dataset<T>) -> Result<EffectMultiset<T>> {
    run(g, x, y, data, Method::SemiLocal, IdaOptions::default())
}

/// Semi-local IDA with explicit options.
pub fn semi_local_ida_with<T: Scalar>(
    g: &Graph,
    x: NodeId,
    y: NodeId,
    data: &Dataset<T>,
    opts: IdaOptions,
) -> Result<EffectMultiset<T>> {
    run(g, x, y, data, Method::SemiLocal, opts)
}

/// Optimal IDA on data.
pub fn optimal_ida<T: Scalar>(g: &Graph, x: NodeId, y: NodeId, data: &Dataset<T>) -> Result<EffectMultiset<T>> {
    run(g, x, y, data, Method::Optimal, IdaOptions::default())
}

/// IDA with population regressions from the covariance implied by `scm`.
/// The SCM's DAG must belong to the class of `g`; variables are matched by
/// name.
pub fn population_ida<T: Scalar>(g: &Graph, x: NodeId, y: NodeId, scm: &LinearScm<T>, method: Method) -> Result<EffectMultiset<T>> {
    let est = PopulationEstimator::from_scm(scm, g)?;
    Ok(plan(g, x, y, method, IdaOptions::default())?.estimate(&est))
}

/// The adjustments optimal IDA uses, one per surviving subset, or without
/// repeats when `dedupe` is set (first occurrence kept).
pub fn possible_o_sets(g: &Graph, x: NodeId, y: NodeId, dedupe: bool) -> Result<Vec<Adjustment>> {
    let p = plan(g, x, y, Method::Optimal, IdaOptions::default())?;
    let mut out: Vec<Adjustment> = Vec::new();
    for e in p.entries {
        if !dedupe || !out.contains(&e.adjustment) {
            out.push(e.adjustment);
        }
    }
    Ok(out)
}
