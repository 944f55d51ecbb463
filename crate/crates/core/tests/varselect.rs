use adjustkit::adjustment::{canonical_adjustment_set, forbidden_set, is_valid_adjustment_set, o_set, AdjustmentProblem};
use adjustkit::fixtures;
use adjustkit::rng::seeded;
use adjustkit::scm::{random_dag, ErrorDist};
use adjustkit::varselect::*;
use adjustkit::{Covariance64, Dataset64, Graph, LinearScm64, NodeSet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

const SSQ_Z: [&str; 5] = ["AFF", "APA", "AIS", "CDR", "SAN"];

fn ssq() -> Graph {
    fixtures::get("SSQ-DAG").unwrap().graph
}

fn permutations(v: &[&'static str]) -> Vec<Vec<&'static str>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

#[test]
fn criterion_thresholds() {
    let chi = ChiSquared::new(1.0).unwrap();
    let aic = alpha_for_criterion(Criterion::Aic, 100).unwrap();
    assert!((aic - 0.157_299_207_050_285_1).abs() < 1e-13, "{aic}");
    assert!((aic - (1.0 - chi.cdf(2.0))).abs() < 1e-8);
    for n in [2usize, 7, 8, 100, 1000, 100_000] {
        let bic = alpha_for_criterion(Criterion::Bic, n).unwrap();
        assert!((bic - (1.0 - chi.cdf((n as f64).ln()))).abs() < 1e-8, "n = {n}");
    }
    // ln 7 < 2 < ln 8, so BIC crosses the AIC level there.
    assert!(alpha_for_criterion(Criterion::Bic, 7).unwrap() > aic);
    assert!(alpha_for_criterion(Criterion::Bic, 8).unwrap() < aic);
    let mut last = 1.0;
    for n in 2..200 {
        let b = alpha_for_criterion(Criterion::Bic, n).unwrap();
        assert!(b < last);
        last = b;
    }
}

#[test]
fn p_values_match_normal_equations() {
    let scm = LinearScm64::random(ssq(), &mut seeded(3)).unwrap();
    let data = scm.simulate(60, ErrorDist::Gaussian, &mut seeded(4));
    let (x, y) = (data.column("ALN").unwrap(), data.column("DET").unwrap());
    let z: Vec<usize> = ["AIS", "CDR", "SAN"].iter().map(|n| data.column(n).unwrap()).collect();
    let got = coefficient_p_values(&data, x, y, &z).unwrap();

    // Oracle: (X'X)^-1 X'y by explicit inversion.
    let n = data.n();
    let cols: Vec<usize> = std::iter::once(x).chain(z.iter().copied()).collect();
    let design = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { data.values()[(i, cols[j - 1])] });
    let resp = data.values().column(y).into_owned();
    let xtx_inv = (design.transpose() * &design).try_inverse().unwrap();
    let beta = &xtx_inv * design.transpose() * &resp;
    let resid = &resp - &design * &beta;
    let df = n - cols.len() - 1;
    let s2 = resid.norm_squared() / df as f64;
    let t = StudentsT::new(0.0, 1.0, df as f64).unwrap();
    for (k, p) in got.iter().enumerate() {
        let j = k + 2;
        let stat = beta[j] / (s2 * xtx_inv[(j, j)]).sqrt();
        let want = 2.0 * (1.0 - t.cdf(stat.abs()));
        assert!((p - want).abs() < 1e-9, "{p} vs {want}");
    }
}

#[test]
fn trivial_selections() {
    let scm = LinearScm64::random(ssq(), &mut seeded(1)).unwrap();
    let data = scm.simulate(500, ErrorDist::Gaussian, &mut seeded(2));
    assert!(backward_select(&data, "ALN", "DET", &[], 0.05).unwrap().selected.is_empty());
    let all = backward_select(&data, "ALN", "DET", &SSQ_Z, 1.0).unwrap();
    let mut want: Vec<String> = SSQ_Z.iter().map(|s| s.to_string()).collect();
    want.sort();
    assert_eq!(all.selected, want);
    assert!(all.trace.is_empty());
    assert!(backward_select(&data, "ALN", "DET", &["ALN"], 0.05).is_err());
    assert!(backward_select(&data, "ALN", "DET", &["NOPE"], 0.05).is_err());
}

#[test]
fn questionnaire_data_selects_o_set() {
    let scm = LinearScm64::random(ssq(), &mut seeded(11)).unwrap();
    let data = scm.simulate(100_000, ErrorDist::Gaussian, &mut seeded(12));
    let sel = backward_select(&data, "ALN", "DET", &SSQ_Z, 0.05).unwrap();
    assert_eq!(sel.selected, ["AIS", "CDR"]);
    assert_eq!(sel.trace.len(), 3);
    assert!(sel.trace.iter().all(|r| r.p_value > 0.05));
}

#[test]
fn questionnaire_oracle() {
    let g = ssq();
    let o = IndependenceOracle::<f64>::Graph(&g);
    for perm in permutations(&SSQ_Z) {
        assert_eq!(oracle_backward_select(&o, "ALN", "DET", &perm).unwrap(), ["AIS", "CDR"]);
    }
    assert_eq!(oracle_backward_select(&o, "ALN", "DET", &["AFF", "SAN"]).unwrap(), ["AFF", "SAN"]);
    assert_eq!(oracle_backward_select(&o, "ALN", "DET", &["CDR", "AIS"]).unwrap(), ["AIS", "CDR"]);

    let scm = LinearScm64::random(g.clone(), &mut seeded(2)).unwrap();
    let cov = scm.implied_covariance();
    let oc = IndependenceOracle::Covariance(&cov);
    assert_eq!(oracle_backward_select(&oc, "ALN", "DET", &SSQ_Z).unwrap(), ["AIS", "CDR"]);
    assert!(oracle_backward_select(&oc, "ALN", "DET", &["ZZZ"]).is_err());
}

/// A random DAG with an SCM, a treatment/outcome pair with a causal path,
/// and a valid adjustment set containing the O-set.
fn random_valid_case(seed: u64) -> Option<(LinearScm64, String, String, Vec<String>, Vec<String>)> {
    let mut rng = seeded(seed);
    let p = rng.random_range(4..=8);
    let d = rng.random_range(1.0..=3.0_f64.min(p as f64 - 1.0));
    let g = random_dag(p, d, &mut rng).ok()?;
    let x = rng.random_range(0..p);
    let de = g.descendants(&NodeSet::singleton(x)).unwrap();
    let cands: Vec<usize> = de.iter().filter(|&v| v != x).collect();
    if cands.is_empty() {
        return None;
    }
    let y = cands[rng.random_range(0..cands.len())];
    let prob = AdjustmentProblem::new(&g, NodeSet::singleton(x), NodeSet::singleton(y)).ok()?;
    let o = o_set(&prob).ok()?;
    let forb = forbidden_set(&prob).ok()?;
    let mut z = o.clone();
    for v in canonical_adjustment_set(&prob).ok()?.iter() {
        if rng.random_bool(0.5) {
            z.insert(v);
        }
    }
    for v in 0..p {
        if v != y && !forb.contains(v) && rng.random_bool(0.3) {
            z.insert(v);
        }
    }
    if !is_valid_adjustment_set(&prob, &z).ok()? {
        return None;
    }
    let scm = LinearScm64::random(g.clone(), &mut rng).ok()?;
    let names = |s: &NodeSet| g.sorted_names(s).into_iter().map(String::from).collect::<Vec<_>>();
    Some((scm, g.name(x).into(), g.name(y).into(), names(&z), names(&o)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn oracle_selection_recovers_o_set(seed in any::<u64>()) {
        let Some((scm, x, y, z, o)) = random_valid_case(seed) else { return Ok(()) };
        let cov: Covariance64 = scm.implied_covariance();
        let zs: Vec<&str> = z.iter().map(String::as_str).collect();
        for oracle in [IndependenceOracle::Graph(scm.dag()), IndependenceOracle::Covariance(&cov)] {
            prop_assert_eq!(&oracle_backward_select(&oracle, &x, &y, &zs).unwrap(), &o);
            let mut rev = zs.clone();
            rev.reverse();
            prop_assert_eq!(&oracle_backward_select(&oracle, &x, &y, &rev).unwrap(), &o);
        }
        let g = scm.dag();
        let (xi, yi) = (g.id(&x).unwrap(), g.id(&y).unwrap());
        let out = scm.population_avar(xi, yi, &g.set(&o).unwrap()).unwrap();
        let full = scm.population_avar(xi, yi, &g.set(&zs).unwrap()).unwrap();
        prop_assert!(out <= full + 1e-12);
    }
}

#[test]
fn works_in_single_precision() {
    let g = ssq();
    let scm = adjustkit::LinearScm32::random(g, &mut seeded(11)).unwrap();
    let data: adjustkit::Dataset32 = scm.simulate(20_000, ErrorDist::Gaussian, &mut seeded(12));
    let sel = backward_select(&data, "ALN", "DET", &SSQ_Z, 0.01).unwrap();
    assert_eq!(sel.selected, ["AIS", "CDR"]);
    let _: Option<Dataset64> = None;
}
