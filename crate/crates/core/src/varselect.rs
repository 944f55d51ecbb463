//! Backward selection of adjustment variables.
//!
//! [`backward_select`] drops, one at a time, the covariate whose t-test of a
//! zero coefficient has the largest p-value, until every remaining p-value
//! is at most `alpha`. [`oracle_backward_select`] is the population version:
//! one pass that drops each covariate independent of the outcome given the
//! treatment and the covariates still kept.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::scalar::Scalar;
use crate::scm::{ols, Covariance, Dataset};
use crate::separation::{separated, SeparationQuery};

/// Information criterion whose backward selection a threshold reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
}

/// `1 - F(2)` for AIC and `1 - F(ln n)` for BIC, with `F` the chi-square
/// CDF on one degree of freedom, computed as `erfc(sqrt(q / 2))`.
pub fn alpha_for_criterion(c: Criterion, n: usize) -> Result<f64> {
    let q = match c {
        Criterion::Aic => 2.0,
        Criterion::Bic => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("BIC needs n >= 2, got {n}")));
            }
            (n as f64).ln()
        }
    };
    Ok(libm::erfc((q / 2.0).sqrt()))
}

/// A significance level given directly or through a criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Level(f64),
    Criterion(Criterion),
}

impl Alpha {
    pub fn resolve(self, n: usize) -> Result<f64> {
        match self {
            Alpha::Level(a) => Ok(a),
            Alpha::Criterion(c) => alpha_for_criterion(c, n),
        }
    }
}

impl std::str::FromStr for Alpha {
    type Err = Error;

    /// `aic`, `bic` or a number in `[0, 1]`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(Alpha::Criterion(Criterion::Aic)),
            "bic" => Ok(Alpha::Criterion(Criterion::Bic)),
            t => match t.parse::<f64>() {
                Ok(a) if (0.0..=1.0).contains(&a) => Ok(Alpha::Level(a)),
                _ => Err(Error::InvalidParameter(format!("alpha must be aic, bic or a level in [0, 1], got `{s}`"))),
            },
        }
    }
}

/// One elimination step.
#[derive(Clone, Debug, PartialEq)]
pub struct Removal {
    pub name: String,
    pub p_value: f64,
}

/// Result of [`backward_select`].
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Kept covariates, sorted by name.
    pub selected: Vec<String>,
    /// Removals in the order they happened.
    pub trace: Vec<Removal>,
}

/// Two-sided p-values for the covariates `z` when regressing `y` on
/// `x ∪ z`, from Student's t with `n - |z| - 2` degrees of freedom.
pub fn coefficient_p_values<T: Scalar>(data: &Dataset<T>, x: usize, y: usize, z: &[usize]) -> Result<Vec<f64>> {
    let mut xs = vec![x];
    xs.extend_from_slice(z);
    let fit = ols(data, y, &xs)?;
    let t = StudentsT::new(0.0, 1.0, fit.df as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((1..xs.len())
        .map(|j| {
            let stat = (fit.coefs[j] / fit.stderrs[j]).to_f64().unwrap_or(f64::NAN).abs();
            2.0 * t.sf(stat)
        })
        .collect())
}

/// Backward regression selection on the dataset columns named `x`, `y` and
/// `z`. `z` should be a valid adjustment set. Ties between equal largest
/// p-values remove the smallest name.
pub fn backward_select<T: Scalar>(data: &Dataset<T>, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<Selection> {
    let xc = data.column(x)?;
    let yc = data.column(y)?;
    let mut keep: Vec<usize> = z.iter().map(|n| data.column(n)).collect::<Result<_>>()?;
    keep.sort_by(|&a, &b| data.names()[a].cmp(&data.names()[b]));
    keep.dedup();
    if keep.contains(&xc) || keep.contains(&yc) || xc == yc {
        return Err(Error::Overlap("x, y and z must be disjoint".into()));
    }
    let mut trace = Vec::new();
    while !keep.is_empty() {
        let p = coefficient_p_values(data, xc, yc, &keep)?;
        // `keep` is sorted by name, so the first maximum is the smallest name.
        let (i, pmax) = p.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if !(pmax > alpha) {
            break;
        }
        trace.push(Removal { name: data.names()[keep[i]].clone(), p_value: pmax });
        keep.remove(i);
    }
    Ok(Selection { selected: keep.iter().map(|&c| data.names()[c].clone()).collect(), trace })
}

/// Conditional independence answered from a graph or from a covariance.
#[derive(Clone, Copy, Debug)]
pub enum IndependenceOracle<'a, T: Scalar> {
    /// d-separation (m-separation for ADMGs).
    Graph(&'a Graph),
    /// Partial correlation below 1e-10 in absolute value.
    Covariance(&'a Covariance<T>),
}

/// Partial correlations below this are treated as zero.
pub const ZERO_PARTIAL_CORRELATION: f64 = 1e-10;

impl<T: Scalar> IndependenceOracle<'_, T> {
    /// Is `a` independent of `b` given `c`?
    pub fn independent(&self, a: &str, b: &str, c: &[&str]) -> Result<bool> {
        match self {
            IndependenceOracle::Graph(g) => {
                let set = |names: &[&str]| -> Result<NodeSet> { g.set(names) };
                separated(g, &SeparationQuery::new(set(&[a])?, set(&[b])?, set(c)?))
            }
            IndependenceOracle::Covariance(cov) => {
                let idx = |n: &str| cov.names.iter().position(|m| m == n).ok_or_else(|| Error::UnknownNode(n.to_string()));
                let cc = c.iter().map(|n| idx(n)).collect::<Result<Vec<_>>>()?;
                let r = cov.partial_correlation(idx(a)?, idx(b)?, &cc)?;
                Ok(r.to_f64().unwrap_or(f64::NAN).abs() < ZERO_PARTIAL_CORRELATION)
            }
        }
    }
}

/// One pass over `z` in the given order, dropping every `z_i` with
/// `y ⫫ z_i | x, z' \ z_i` where `z'` is what is still kept. Returns the
/// kept names sorted.
pub fn oracle_backward_select<T: Scalar>(o: &IndependenceOracle<'_, T>, x: &str, y: &str, z: &[&str]) -> Result<Vec<String>> {
    if z.contains(&x) || z.contains(&y) || x == y {
        return Err(Error::Overlap("x, y and z must be disjoint".into()));
    }
    let mut keep: Vec<&str> = z.to_vec();
    for zi in z {
        let mut given: Vec<&str> = vec![x];
        given.extend(keep.iter().filter(|n| *n != zi));
        if o.independent(y, zi, &given)? {
            keep.retain(|n| n != zi);
        }
    }
    let mut out: Vec<String> = keep.into_iter().map(String::from).collect();
    out.sort();
    out.dedup();
    Ok(out)
}
