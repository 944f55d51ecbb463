//! Linear structural causal models, datasets and least squares.
//!
//! A model on a DAG is `V = B V + e` with `B[(child, parent)]` holding the
//! edge coefficient and independent errors of variance `err_var`. The
//! implied covariance is `(I - B)^-1 Ω (I - B)^-T`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, GraphClass, NodeId, NodeSet};
use crate::scalar::Scalar;

/// A random DAG on `p` nodes named `V01, V02, ...` in topological order.
/// Each pair `i < j` gets the edge `Vi -> Vj` with probability `d / (p - 1)`,
/// so `d` is the expected number of neighbours per node.
pub fn random_dag<R: Rng + ?Sized>(p: usize, d: f64, rng: &mut R) -> Result<Graph> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {p}")));
    }
    if !(d > 0.0 && d <= (p - 1) as f64) {
        return Err(Error::InvalidParameter(format!("expected degree {d} must lie in (0, {}]", p - 1)));
    }
    let prob = d / (p - 1) as f64;
    let width = p.to_string().len().max(2);
    let names: Vec<String> = (1..=p).map(|i| format!("V{i:0width$}")).collect();
    let mut b = GraphBuilder::new(GraphClass::Dag);
    for name in &names {
        b.node(name)?;
    }
    for i in 0..p {
        for j in i + 1..p {
            if rng.random_bool(prob) {
                b.directed(&names[i], &names[j])?;
            }
        }
    }
    b.build()
}

/// Error distribution used by [`LinearScm::simulate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorDist {
    #[default]
    Gaussian,
    /// Uniform with the same variance as the Gaussian.
    Uniform,
}

/// Draws a coefficient uniformly from `[-1, -0.1] ∪ [0.1, 1]`.
pub fn draw_coefficient<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let m = rng.random_range(0.1..=1.0);
    if rng.random_bool(0.5) {
        -m
    } else {
        m
    }
}

/// A linear Gaussian (by default) structural causal model on a DAG.
#[derive(Clone, Debug)]
pub struct LinearScm<T: Scalar> {
    dag: Graph,
    b: DMatrix<T>,
    err_var: DVector<T>,
}

impl<T: Scalar> LinearScm<T> {
    /// Coefficients as `b[(child, parent)]`; nonzero entries must be edges
    /// of `dag` and every edge must have a nonzero coefficient.
    pub fn new(dag: Graph, b: DMatrix<T>, err_var: DVector<T>) -> Result<Self> {
        if dag.class() != GraphClass::Dag {
            return Err(Error::WrongClass { expected: "dag", found: dag.class().as_str() });
        }
        let p = dag.n();
        if b.shape() != (p, p) || err_var.len() != p {
            return Err(Error::InvalidParameter(format!("expected {p}x{p} coefficients and {p} error variances")));
        }
        for c in 0..p {
            for a in 0..p {
                let edge = dag.has_directed(a, c);
                let v = b[(c, a)];
                if edge && v == T::zero() {
                    return Err(Error::InvalidParameter(format!("zero coefficient on {} -> {}", dag.name(a), dag.name(c))));
                }
                if !edge && v != T::zero() {
                    return Err(Error::InvalidParameter(format!("coefficient on non-edge {} -> {}", dag.name(a), dag.name(c))));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidParameter("non-finite coefficient".into()));
                }
            }
            if !(err_var[c] > T::zero()) || !err_var[c].is_finite() {
                return Err(Error::InvalidParameter(format!("error variance of {} must be positive", dag.name(c))));
            }
        }
        Ok(LinearScm { dag, b, err_var })
    }

    /// Every edge gets `coef`, every error variance is 1.
    pub fn constant(dag: Graph, coef: T) -> Result<Self> {
        let p = dag.n();
        let b = DMatrix::from_fn(p, p, |c, a| if dag.has_directed(a, c) { coef } else { T::zero() });
        Self::new(dag, b, DVector::from_element(p, T::one()))
    }

    /// Coefficients from `[-1, -0.1] ∪ [0.1, 1]`, unit error variances.
    pub fn random<R: Rng + ?Sized>(dag: Graph, rng: &mut R) -> Result<Self> {
        let p = dag.n();
        let mut b = DMatrix::zeros(p, p);
        for e in dag.edges() {
            b[(e.to, e.from)] = T::of(draw_coefficient(rng));
        }
        Self::new(dag, b, DVector::from_element(p, T::one()))
    }

    /// The same model with all error variances set to `v`.
    pub fn with_error_variance(mut self, v: T) -> Result<Self> {
        if !(v > T::zero()) {
            return Err(Error::InvalidParameter("error variance must be positive".into()));
        }
        self.err_var.fill(v);
        Ok(self)
    }

    pub fn dag(&self) -> &Graph {
        &self.dag
    }

    /// Coefficient of `from -> to`, zero for non-edges.
    pub fn coef(&self, from: NodeId, to: NodeId) -> T {
        self.b[(to, from)]
    }

    /// The coefficient matrix indexed `(child, parent)`.
    pub fn coefficients(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn error_variances(&self) -> &DVector<T> {
        &self.err_var
    }

    /// `n` draws, columns in node order.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, dist: ErrorDist, rng: &mut R) -> Dataset<T> {
        let p = self.dag.n();
        let order = self.dag.topological_order().expect("dag is acyclic");
        let sd: Vec<f64> = self.err_var.iter().map(|v| v.f64().sqrt()).collect();
        let half_width = 3f64.sqrt();
        let mut values = DMatrix::<T>::zeros(n, p);
        for i in 0..n {
            for &v in &order {
                let e = match dist {
                    ErrorDist::Gaussian => rng.sample::<f64, _>(StandardNormal),
                    ErrorDist::Uniform => rng.random_range(-half_width..half_width),
                };
                let mut x = T::of(e * sd[v]);
                for &u in self.dag.parents_of(v) {
                    x += self.b[(v, u)] * values[(i, u)];
                }
                values[(i, v)] = x;
            }
        }
        Dataset { names: self.dag.names().to_vec(), values }
    }

    /// `(I - B)^-1`, whose `(y, x)` entry is the total effect of `x` on `y`.
    fn total_effects(&self) -> DMatrix<T> {
        let p = self.dag.n();
        (DMatrix::identity(p, p) - &self.b).try_inverse().expect("I - B is unit triangular up to permutation")
    }

    /// The population covariance matrix.
    pub fn implied_covariance(&self) -> Covariance<T> {
        let a = self.total_effects();
        let omega = DMatrix::from_diagonal(&self.err_var);
        let mut sigma = &a * omega * a.transpose();
        // Symmetrise away rounding.
        let st = sigma.transpose();
        sigma = (sigma + st) * T::of(0.5);
        Covariance { names: self.dag.names().to_vec(), sigma }
    }

    /// Sum over directed paths from `x` to `y` of the product of edge
    /// coefficients. Paths are enumerated for up to 20 nodes; larger models
    /// read the entry of `(I - B)^-1`.
    pub fn true_total_effect(&self, x: NodeId, y: NodeId) -> Result<T> {
        self.dag.check_node(x)?;
        self.dag.check_node(y)?;
        if x == y {
            return Err(Error::InvalidParameter("treatment and outcome coincide".into()));
        }
        if self.dag.n() <= 20 {
            Ok(self.path_sum(x, y))
        } else {
            Ok(self.total_effects()[(y, x)])
        }
    }

    /// Path-enumeration form of [`LinearScm::true_total_effect`].
    pub fn path_sum(&self, x: NodeId, y: NodeId) -> T {
        fn walk<T: Scalar>(m: &LinearScm<T>, u: NodeId, y: NodeId, prod: T, acc: &mut T) {
            if u == y {
                *acc += prod;
                return;
            }
            for &w in m.dag.children_of(u) {
                walk(m, w, y, prod * m.b[(w, u)], acc);
            }
        }
        let mut acc = T::zero();
        walk(self, x, y, T::one(), &mut acc);
        acc
    }

    /// Asymptotic variance of the OLS coefficient of `x` when regressing
    /// `y` on `x` and `z`: `σ_yy.xz / σ_xx.z`.
    pub fn population_avar(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T> {
        self.implied_covariance().avar(x, y, z)
    }
}

/// A population covariance matrix over named variables.
#[derive(Clone, Debug)]
pub struct Covariance<T: Scalar> {
    pub names: Vec<String>,
    pub sigma: DMatrix<T>,
}

impl<T: Scalar> Covariance<T> {
    /// `Var(s) - Σ_st Σ_tt^-1 Σ_ts`, the residual variance of `s` after
    /// linear projection on `t`.
    pub fn partial_variance(&self, s: NodeId, t: &[NodeId]) -> Result<T> {
        self.check(s, t)?;
        if t.is_empty() {
            return Ok(self.sigma[(s, s)]);
        }
        let (stt, sts) = self.blocks(s, t);
        let chol = stt.cholesky().ok_or(Error::Singular)?;
        let beta = chol.solve(&sts);
        Ok(self.sigma[(s, s)] - sts.dot(&beta))
    }

    /// Population coefficients of regressing `s` on `t`, in the order of `t`.
    pub fn regression(&self, s: NodeId, t: &[NodeId]) -> Result<Vec<T>> {
        self.check(s, t)?;
        if t.is_empty() {
            return Ok(Vec::new());
        }
        let (stt, sts) = self.blocks(s, t);
        let chol = stt.cholesky().ok_or(Error::Singular)?;
        Ok(chol.solve(&sts).iter().copied().collect())
    }

    /// `σ_yy.{x}∪z / σ_xx.z`.
    pub fn avar(&self, x: NodeId, y: NodeId, z: &NodeSet) -> Result<T> {
        if x == y || z.contains(x) || z.contains(y) {
            return Err(Error::Overlap("x, y and z must be disjoint".into()));
        }
        let zv = z.to_vec();
        let mut xz = vec![x];
        xz.extend(&zv);
        let num = self.partial_variance(y, &xz)?;
        let den = self.partial_variance(x, &zv)?;
        if !(den > T::zero()) {
            return Err(Error::Singular);
        }
        Ok(num / den)
    }

    /// Partial correlation of `a` and `b` given `c`, from the inverse of
    /// the covariance of `{a, b} ∪ c`.
    pub fn partial_correlation(&self, a: NodeId, b: NodeId, c: &[NodeId]) -> Result<T> {
        let mut idx = vec![a, b];
        idx.extend_from_slice(c);
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.sigma[(idx[i], idx[j])]);
        let prec = sub.cholesky().ok_or(Error::Singular)?.inverse();
        Ok(-prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt())
    }

    fn check(&self, s: NodeId, t: &[NodeId]) -> Result<()> {
        let p = self.sigma.nrows();
        if s >= p || t.iter().any(|&v| v >= p) {
            return Err(Error::NodeOutOfRange(s.max(t.iter().copied().max().unwrap_or(0))));
        }
        if t.contains(&s) {
            return Err(Error::Overlap("conditioning set contains the target".into()));
        }
        Ok(())
    }

    fn blocks(&self, s: NodeId, t: &[NodeId]) -> (DMatrix<T>, DVector<T>) {
        let stt = DMatrix::from_fn(t.len(), t.len(), |i, j| self.sigma[(t[i], t[j])]);
        let sts = DVector::from_fn(t.len(), |i, _| self.sigma[(t[i], s)]);
        (stt, sts)
    }
}

/// Observations in rows, variables in named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T: Scalar> {
    names: Vec<String>,
    values: DMatrix<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(names: Vec<String>, values: DMatrix<T>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::InvalidParameter(format!("{} names for {} columns", names.len(), values.ncols())));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        Ok(Dataset { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|c| c == name).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Column index of every node of `g`, in node order.
    pub fn columns_for(&self, g: &Graph) -> Result<Vec<usize>> {
        g.names().iter().map(|name| self.column(name)).collect()
    }

    /// The same data with columns reordered to match `g`'s nodes.
    pub fn aligned_to(&self, g: &Graph) -> Result<Dataset<T>> {
        let cols = self.columns_for(g)?;
        let values = self.values.select_columns(&cols);
        Ok(Dataset { names: g.names().to_vec(), values })
    }
}

/// Least-squares fit of one response on a list of regressors plus an
/// intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit<T: Scalar> {
    /// One coefficient per regressor, intercept excluded.
    pub coefs: Vec<T>,
    pub stderrs: Vec<T>,
    /// Residual sum of squares over `n - k - 1`.
    pub residual_var: T,
    /// Residual degrees of freedom, `n - k - 1`.
    pub df: usize,
}

/// Regresses column `y` on columns `xs` with an intercept, via Householder
/// QR.
pub fn ols<T: Scalar>(data: &Dataset<T>, y: usize, xs: &[usize]) -> Result<OlsFit<T>> {
    let n = data.n();
    let k = xs.len();
    if y >= data.p() || xs.iter().any(|&c| c >= data.p()) {
        return Err(Error::NodeOutOfRange(y.max(xs.iter().copied().max().unwrap_or(0))));
    }
    if xs.contains(&y) {
        return Err(Error::Overlap("response is also a regressor".into()));
    }
    if n <= k + 1 {
        return Err(Error::TooFewRows { n, k: k + 1 });
    }
    let v = &data.values;
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { T::one() } else { v[(i, xs[j - 1])] });
    let mut rhs = DVector::from_fn(n, |i, _| v[(i, y)]);
    let qr = design.qr();
    let r = qr.r();
    let scale = (0..=k).map(|j| r[(j, j)].magnitude()).fold(T::zero(), |a, b| if b > a { b } else { a });
    let tol = scale * T::default_epsilon().sqrt();
    if (0..=k).any(|j| !(r[(j, j)].magnitude() > tol)) {
        return Err(Error::RankDeficient);
    }
    qr.q_tr_mul(&mut rhs);
    let head = rhs.rows(0, k + 1).into_owned();
    let beta = r.solve_upper_triangular(&head).ok_or(Error::RankDeficient)?;
    let rss = rhs.rows(k + 1, n - k - 1).norm_squared();
    let df = n - k - 1;
    let residual_var = rss / T::of(df as f64);
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(k + 1, k + 1)).ok_or(Error::RankDeficient)?;
    let stderrs = (1..=k).map(|j| (r_inv.row(j).norm_squared() * residual_var).sqrt()).collect();
    Ok(OlsFit { coefs: beta.iter().skip(1).copied().collect(), stderrs, residual_var, df })
}

/// Coefficient of `x` in the regression of `y` on `x` and `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adjusted<T> {
    pub coef: T,
    pub stderr: T,
    pub residual_var: T,
}

/// Regresses `y` on `x ∪ z` (column indices) and reports the coefficient of
/// `x`.
pub fn ols_adjusted<T: Scalar>(data: &Dataset<T>, x: usize, y: usize, z: &[usize]) -> Result<Adjusted<T>> {
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::Overlap("x, y and z must be disjoint".into()));
    }
    let mut xs = vec![x];
    xs.extend_from_slice(z);
    let fit = ols(data, y, &xs)?;
    Ok(Adjusted { coef: fit.coefs[0], stderr: fit.stderrs[0], residual_var: fit.residual_var })
}
