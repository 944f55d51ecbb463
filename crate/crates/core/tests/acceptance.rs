//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! runtime. Exits 0 regardless so `cargo test` reports the run; set
//! `ADJUSTKIT_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::time::{Duration, Instant};

use adjustkit::adjustment::*;
use adjustkit::fixtures;
use adjustkit::ida::*;
use adjustkit::io::parse_graph;
use adjustkit::meek::{dag_to_cpdag, enumerate_class_dags};
use adjustkit::rng::seeded;
use adjustkit::scm::{random_dag, Covariance, ErrorDist, LinearScm};
use adjustkit::sim::{run_rmse_scenario, ScenarioConfig};
use adjustkit::varselect::{backward_select, oracle_backward_select, IndependenceOracle};
use adjustkit::{Graph, LinearScm64, NodeId, NodeSet, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let res = f();
    let took = start.elapsed();
    let (pass, detail) = match res {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = took <= limit;
    let ok = pass && in_time;
    let time_note = if in_time { String::new() } else { format!(" (over the {:.0?} limit)", limit) };
    println!(
        "{} {id} {name} [{:.2}s]{time_note} {detail}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    ok
}

fn names(g: &Graph, s: &NodeSet) -> Vec<String> {
    g.sorted_names(s).into_iter().map(String::from).collect()
}

fn list(s: &str) -> Vec<String> {
    let mut v: Vec<String> = s.split(',').filter(|t| !t.is_empty()).map(String::from).collect();
    v.sort();
    v
}

fn subsets(pool: &[NodeId]) -> Vec<NodeSet> {
    (0..1usize << pool.len())
        .map(|m| pool.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

/// A random DAG on at most `pmax` nodes with disjoint treatments `x` (up
/// to three) and outcomes `y` (up to two) drawn from the descendants of `x`.
fn random_problem(rng: &mut ChaCha8Rng, pmax: usize) -> Option<(Graph, NodeSet, NodeSet)> {
    let p = rng.random_range(2..=pmax);
    let d = rng.random_range(0.5..=(p as f64 - 1.0).min(3.0));
    let g = random_dag(p, d, rng).ok()?;
    let order = shuffled(p, rng);
    let nx = rng.random_range(1..=(p - 1).min(3));
    let x: NodeSet = order[..nx].iter().copied().collect();
    let mut pool = g.descendants(&x).ok()?.difference(&x).to_vec();
    if pool.is_empty() {
        return None;
    }
    pool.shuffle(rng);
    let ny = rng.random_range(1..=pool.len().min(2));
    let y: NodeSet = pool[..ny].iter().copied().collect();
    Some((g, x, y))
}

/// `count` problems from consecutive seeds starting at `base`.
fn problems(base: u64, count: usize, pmax: usize) -> Vec<(Graph, NodeSet, NodeSet, u64)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = base;
    while out.len() < count {
        if let Some((g, x, y)) = random_problem(&mut seeded(seed), pmax) {
            out.push((g, x, y, seed));
        }
        seed += 1;
    }
    out
}

fn criterion_1() -> Result<Outcome> {
    let f = fixtures::get("SSQ-DAG")?;
    let g = &f.graph;
    let p = AdjustmentProblem::new(g, f.x.clone(), f.y.clone())?;
    let o = names(g, &o_set(&p)?);
    let forb = names(g, &forbidden_set(&p)?);
    let proj = forbidden_projection(&p)?;
    let want = parse_graph(
        "class: admg\nALN -> DET\nALN -> APA\nAFF -> ALN\nAFF -> APA\nAFF -> CDR\nSAN -> ALN\nSAN -> AFF\n\
         SAN -> AIS\nSAN -> APA\nSAN -> CDR\nAIS -> DET\nAIS -> AFF\nCDR -> DET",
    )?;
    let checks = [
        ("O-set", o == list("AIS,CDR")),
        ("forbidden set", forb == list("ALN,PER,SUS,FTW,DET,HOS,EGC")),
        ("node counts", g.n() == 12 && proj.graph.n() == 7),
        ("projection", proj.graph == want),
    ];
    let bad: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(bad.is_empty(), format!("O={o:?} forb={forb:?} projection edges={} mismatches={bad:?}", proj.graph.edges().len()))
}

fn criterion_2() -> Result<Outcome> {
    let cases = problems(20_000, 10_000, 12);
    let bad: Vec<u64> = cases
        .par_iter()
        .filter_map(|(g, x, y, seed)| {
            let p = AdjustmentProblem::new(g, x.clone(), y.clone()).ok()?;
            match (o_set(&p), o_star_set(&p)) {
                (Ok(a), Ok(b)) if a == b => None,
                _ => Some(*seed),
            }
        })
        .collect();
    outcome(bad.is_empty(), format!("{} DAGs, {} mismatches {:?}", cases.len(), bad.len(), &bad[..bad.len().min(5)]))
}

fn xy_bidirected(proj: &ForbiddenProjection, x: &NodeSet, y: &NodeSet) -> Result<bool> {
    let (px, py) = (proj.to_projection(x)?, proj.to_projection(y)?);
    let hit = px.iter().any(|a| py.iter().any(|b| proj.graph.has_bidirected(a, b)));
    Ok(hit)
}

fn criterion_3() -> Result<Outcome> {
    let cases = problems(40_000, 1000, 12);
    // (equivalence broken, treatment below an outcome, both, validity disagreements)
    let counts = cases
        .par_iter()
        .map(|(g, x, y, seed)| -> Result<(usize, usize, usize, usize)> {
            let p = AdjustmentProblem::new(g, x.clone(), y.clone())?;
            let proj = forbidden_projection(&p)?;
            let broken = adjustment_set_exists(&p)? == xy_bidirected(&proj, x, y)?;
            let below = !g.descendants(y)?.is_disjoint(x);
            let q = proj.problem(&p)?;
            let pool = proj.kept.difference(x).difference(y).to_vec();
            let mut rng = seeded(seed ^ 0x5eed);
            let mut disagree = 0;
            for _ in 0..10 {
                let z: NodeSet = pool.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                if is_valid_adjustment_set(&p, &z)? != is_valid_adjustment_set(&q, &proj.to_projection(&z)?)? {
                    disagree += 1;
                }
            }
            Ok((broken as usize, below as usize, (broken && below) as usize, disagree))
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = |f: fn(&(usize, usize, usize, usize)) -> usize| counts.iter().map(f).sum::<usize>();
    let (broken, below, both, disagree) = (sum(|c| c.0), sum(|c| c.1), sum(|c| c.2), sum(|c| c.3));
    outcome(
        broken == 0 && disagree == 0,
        format!(
            "(i) exists <=> no X-Y bidirected edge fails on {broken}/1000 DAGs, {both} of them with a treatment below an outcome \
             (it holds on {}/{} DAGs without one); (ii) {disagree}/10000 validity disagreements",
            1000 - below - (broken - both),
            1000 - below
        ),
    )
}

/// A DAG on 3..=8 nodes with an SCM, a single treatment and a descendant
/// outcome for which some valid adjustment set exists.
fn variance_case(seed: u64) -> Option<(LinearScm64, NodeId, NodeId)> {
    let mut rng = seeded(seed);
    let p = rng.random_range(3..=8);
    let d = rng.random_range(1.0..=(p as f64 - 1.0).min(3.0));
    let g = random_dag(p, d, &mut rng).ok()?;
    let x = rng.random_range(0..p);
    let de = g.descendants(&NodeSet::singleton(x)).ok()?.difference(&NodeSet::singleton(x)).to_vec();
    let y = *de.get(rng.random_range(0..de.len().max(1)))?;
    let prob = AdjustmentProblem::new(&g, NodeSet::singleton(x), NodeSet::singleton(y)).ok()?;
    if !adjustment_set_exists(&prob).ok()? {
        return None;
    }
    Some((LinearScm64::random(g, &mut rng).ok()?, x, y))
}

fn criterion_4() -> Result<Outcome> {
    let cases: Vec<_> = (60_000u64..).filter_map(variance_case).take(200).collect();
    let res = cases
        .par_iter()
        .map(|(scm, x, y)| -> Result<(usize, usize)> {
            let g = scm.dag();
            let prob = AdjustmentProblem::new(g, NodeSet::singleton(*x), NodeSet::singleton(*y))?;
            let best = scm.population_avar(*x, *y, &o_set(&prob)?)?;
            let pool: Vec<NodeId> = (0..g.n()).filter(|v| v != x && v != y).collect();
            let (mut valid, mut worse) = (0, 0);
            for z in subsets(&pool) {
                if is_valid_adjustment_set(&prob, &z)? {
                    valid += 1;
                    if best > scm.population_avar(*x, *y, &z)? + 1e-12 {
                        worse += 1;
                    }
                }
            }
            Ok((valid, worse))
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: usize = res.iter().map(|r| r.0).sum();
    let worse: usize = res.iter().map(|r| r.1).sum();
    outcome(worse == 0, format!("200 SCMs, {valid} valid sets, {worse} beat the O-set"))
}

fn criterion_5() -> Result<Outcome> {
    let f = fixtures::get("FIG4-CPDAG")?;
    let g = &f.graph;
    let (x, y) = (f.x.first().unwrap(), f.y.first().unwrap());
    let semi = plan(g, x, y, Method::SemiLocal, IdaOptions::default())?;
    let opt = plan(g, x, y, Method::Optimal, IdaOptions::default())?;
    let panels = ["FIG4-B", "FIG4-C", "FIG4-D", "FIG4-E", "FIG4-F"]
        .iter()
        .map(|n| Ok((*n, fixtures::get(n)?.graph)))
        .collect::<Result<Vec<_>>>()?;
    let mut got = Vec::new();
    for (s, o) in semi.entries.iter().zip(&opt.entries) {
        let panel = panels.iter().find(|(_, pg)| *pg == s.oriented).map_or("?", |p| p.0);
        got.push(format!("{panel}:{}/{}", s.adjustment.render(g, ","), o.adjustment.render(g, ",")));
    }
    got.sort();
    let want = ["FIG4-B:V1/V1", "FIG4-C:V1,V3/ZERO", "FIG4-D:V4/", "FIG4-E:/", "FIG4-F:V3/V3,V5"];
    let total = semi.entries.len() + semi.failed.len();
    outcome(
        total == 8 && semi.failed.len() == 3 && opt.failed.len() == 3 && got == want,
        format!("{total} subsets, {} FAIL, pa/O per panel {got:?}", semi.failed.len()),
    )
}

/// A DAG on 3..=8 nodes with an SCM, its CPDAG (with `und` undirected
/// edges in range) and a treatment/outcome pair.
fn cpdag_case(seed: u64, und: std::ops::RangeInclusive<usize>) -> Option<(LinearScm64, Graph, NodeId, NodeId)> {
    let mut rng = seeded(seed);
    let p = rng.random_range(3..=8);
    let d = rng.random_range(1.0..=(p as f64 - 1.0).min(3.0));
    let dag = random_dag(p, d, &mut rng).ok()?;
    let cpdag = dag_to_cpdag(&dag).ok()?;
    if !und.contains(&cpdag.undirected_edge_count()) {
        return None;
    }
    let x = rng.random_range(0..p);
    let y = (x + rng.random_range(1..p)) % p;
    Some((LinearScm64::random(dag, &mut rng).ok()?, cpdag, x, y))
}

fn criterion_6() -> Result<Outcome> {
    let cases: Vec<_> = (80_000u64..).filter_map(|s| cpdag_case(s, 1..=usize::MAX)).take(200).collect();
    let res = cases
        .par_iter()
        .map(|(scm, g, x, y)| -> Result<(usize, usize, usize)> {
            let semi = plan(g, *x, *y, Method::SemiLocal, IdaOptions::default())?;
            let opt = plan(g, *x, *y, Method::Optimal, IdaOptions::default())?;
            let est = PopulationEstimator::from_scm(scm, g)?;
            let (ms, mo) = (semi.estimate(&est), opt.estimate(&est));
            let mut value_bad = usize::from(ms.entries.len() != mo.entries.len());
            let mut avar_bad = 0;
            for (a, b) in ms.entries.iter().zip(&mo.entries) {
                let (va, vb) = (a.estimate.clone()?, b.estimate.clone()?);
                if a.subset != b.subset || (va - vb).abs() > 1e-9 {
                    value_bad += 1;
                }
                if let (Some(pa), Some(o)) = (a.adjustment.set(), b.adjustment.set()) {
                    if est.avar(*x, *y, pa)? < est.avar(*x, *y, o)? - 1e-12 {
                        avar_bad += 1;
                    }
                }
            }
            Ok((mo.entries.len(), value_bad, avar_bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let entries: usize = res.iter().map(|r| r.0).sum();
    let value_bad: usize = res.iter().map(|r| r.1).sum();
    let avar_bad: usize = res.iter().map(|r| r.2).sum();
    outcome(
        value_bad == 0 && avar_bad == 0,
        format!("200 pairs, {entries} entries, {value_bad} value mismatches, {avar_bad} avar violations"),
    )
}

fn criterion_7() -> Result<Outcome> {
    let a = run_rmse_scenario::<f64>(&ScenarioConfig::new(10, 2.0, 100, 1000, 100, 2024))?;
    let b = run_rmse_scenario::<f64>(&ScenarioConfig::new(20, 3.0, 1000, 1000, 100, 2024))?;
    let within = |v: f64, t: f64| (v - t).abs() <= 0.08;
    outcome(
        within(a.geometric_mean, 0.70) && within(a.median, 0.76) && within(b.geometric_mean, 0.60),
        format!(
            "p=10: gm {:.3} (0.70±0.08) median {:.3} (0.76±0.08) failures {}; p=20: gm {:.3} (0.60±0.08) median {:.3} failures {}",
            a.geometric_mean,
            a.median,
            a.failures.len(),
            b.geometric_mean,
            b.median,
            b.failures.len()
        ),
    )
}

fn permutations(v: &[String]) -> Vec<Vec<String>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

struct SelectionCase {
    scm: LinearScm64,
    x: String,
    y: String,
    z: Vec<String>,
    o: Vec<String>,
    seed: u64,
}

/// An SCM with coefficients of magnitude in [0.3, 1], a treatment with a
/// descendant outcome and a valid set `z` with `O ⊆ z` and `|z| <= 5`.
fn selection_case(seed: u64) -> Option<SelectionCase> {
    let mut rng = seeded(seed);
    let p = rng.random_range(4..=9);
    let d = rng.random_range(1.0..=3.0);
    let g = random_dag(p, d, &mut rng).ok()?;
    let x = rng.random_range(0..p);
    let de = g.descendants(&NodeSet::singleton(x)).ok()?.difference(&NodeSet::singleton(x)).to_vec();
    let y = *de.get(rng.random_range(0..de.len().max(1)))?;
    let prob = AdjustmentProblem::new(&g, NodeSet::singleton(x), NodeSet::singleton(y)).ok()?;
    let o = o_set(&prob).ok()?;
    let forb = forbidden_set(&prob).ok()?;
    let mut z = o.clone();
    for v in shuffled(p, &mut rng) {
        if z.len() < 5 && v != y && !forb.contains(v) && rng.random_bool(0.5) {
            z.insert(v);
        }
    }
    if z.len() > 5 || !is_valid_adjustment_set(&prob, &z).ok()? {
        return None;
    }
    let mut b = DMatrix::zeros(p, p);
    for e in g.edges() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        b[(e.to, e.from)] = sign * rng.random_range(0.3..=1.0);
    }
    let scm = LinearScm::new(g.clone(), b, DVector::from_element(p, 1.0)).ok()?;
    let mut zs = names(&g, &z);
    zs.shuffle(&mut rng);
    Some(SelectionCase { x: g.name(x).into(), y: g.name(y).into(), z: zs, o: names(&g, &o), scm, seed })
}

fn criterion_8() -> Result<Outcome> {
    let cases: Vec<_> = (100_000u64..).filter_map(selection_case).take(500).collect();
    let res = cases
        .par_iter()
        .map(|c| -> Result<(bool, bool, bool)> {
            let cov = c.scm.implied_covariance();
            let oracles = [IndependenceOracle::Graph(c.scm.dag()), IndependenceOracle::Covariance(&cov)];
            let mut oracle_ok = true;
            for perm in permutations(&c.z) {
                let zs: Vec<&str> = perm.iter().map(String::as_str).collect();
                for o in &oracles {
                    oracle_ok &= oracle_backward_select(o, &c.x, &c.y, &zs)? == c.o;
                }
            }
            let data = c.scm.simulate(100_000, ErrorDist::Gaussian, &mut seeded(c.seed ^ 0xda7a));
            let zs: Vec<&str> = c.z.iter().map(String::as_str).collect();
            let sel = backward_select(&data, &c.x, &c.y, &zs, 0.01)?;
            Ok((oracle_ok, sel.selected == c.o, c.z.len() > c.o.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle_bad = res.iter().filter(|r| !r.0).count();
    let matched = res.iter().filter(|r| r.1).count();
    let pruned = res.iter().filter(|r| r.2).count();
    let rate = matched as f64 / res.len() as f64;
    outcome(
        oracle_bad == 0 && rate >= 0.95,
        format!(
            "500 SCMs ({pruned} with covariates to drop), oracle failures {oracle_bad}, finite-sample match {matched}/500 = {:.1}% (>= 95%)",
            100.0 * rate
        ),
    )
}

/// Refits the population distribution as a linear SCM on `dag` and reads
/// the total effect off the path sums.
fn refit_effect(cov: &Covariance<f64>, dag: &Graph, x: NodeId, y: NodeId) -> Result<f64> {
    let idx: Vec<usize> = dag.names().iter().map(|n| cov.names.iter().position(|c| c == n).unwrap()).collect();
    let p = dag.n();
    let mut b = DMatrix::zeros(p, p);
    let mut v = DVector::zeros(p);
    for c in 0..p {
        let pa = dag.parents_of(c);
        let t: Vec<usize> = pa.iter().map(|&q| idx[q]).collect();
        for (q, beta) in pa.iter().zip(cov.regression(idx[c], &t)?) {
            b[(c, *q)] = beta;
        }
        v[c] = cov.partial_variance(idx[c], &t)?;
    }
    Ok(LinearScm::new(dag.clone(), b, v)?.path_sum(x, y))
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    v
}

fn criterion_9() -> Result<Outcome> {
    let cases: Vec<_> = (120_000u64..).filter_map(|s| cpdag_case(s, 1..=5)).take(100).collect();
    let bad = cases
        .par_iter()
        .map(|(scm, g, x, y)| -> Result<bool> {
            let cov = scm.implied_covariance();
            let got = distinct(population_ida(g, *x, *y, scm, Method::Optimal)?.values());
            let want = distinct(
                enumerate_class_dags(g)?.iter().map(|d| refit_effect(&cov, d, *x, *y)).collect::<Result<Vec<_>>>()?,
            );
            Ok(got.len() != want.len() || got.iter().zip(&want).any(|(a, b)| (a - b).abs() > 1e-10))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_bad = bad.iter().filter(|b| **b).count();
    outcome(n_bad == 0, format!("100 CPDAGs, {n_bad} mismatches"))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run(1, "questionnaire example", s(1), criterion_1),
        run(2, "O-set equals projection parents", s(60), criterion_2),
        run(3, "projection round trip", s(60), criterion_3),
        run(4, "variance dominance", s(120), criterion_4),
        run(5, "IDA worked example", s(1), criterion_5),
        run(6, "population semi-local vs optimal IDA", s(120), criterion_6),
        run(7, "RMSE ratio, true-CPDAG track", s(1800), criterion_7),
        run(8, "backward selection", s(300), criterion_8),
        run(9, "IDA class oracle", s(60), criterion_9),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    let strict = std::env::var("ADJUSTKIT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
