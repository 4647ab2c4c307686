use gmclt_core::clt::ks_distance;
use gmclt_core::report::{read_payload, JsonlWriter};
use gmclt_core::systems::{gauss_step, GibbsMarkovSystem, InitialPoint, MarkovChain, Point};
use gmclt_core::wilcoxon::rank_sum;
use proptest::prelude::*;
use serde_json::json;

fn gauss_cdf(x: f64) -> f64 {
    (1.0 + x).log2()
}

fn reals(points: &[InitialPoint]) -> Vec<f64> {
    points
        .iter()
        .map(|p| match p {
            InitialPoint::Real(x) => *x,
            InitialPoint::State(_) => panic!("expected real points"),
        })
        .collect()
}

#[test]
fn gauss_samples_follow_invariant_law() {
    let xs = reals(&GibbsMarkovSystem::gauss().sample_invariant(100_000, 3));
    let d = ks_distance(&xs, gauss_cdf).unwrap();
    assert!(d < 0.01, "KS {d}");
    let pushed: Vec<f64> = xs.iter().filter_map(|&x| gauss_step(x).ok()).collect();
    assert!(pushed.len() > 99_000);
    let d = ks_distance(&pushed, gauss_cdf).unwrap();
    assert!(d < 0.01, "KS after one step {d}");
}

#[test]
fn markov_samples_follow_stationary_law() {
    let chain = MarkovChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None, None).unwrap();
    let sys = GibbsMarkovSystem::markov(chain);
    let pts = sys.sample_invariant(60_000, 11);
    let ones = pts.iter().filter(|p| matches!(p, InitialPoint::State(1))).count() as f64 / pts.len() as f64;
    // pi = (2/3, 1/3)
    assert!((ones - 1.0 / 3.0).abs() < 0.01, "{ones}");
}

#[test]
fn sampling_is_reproducible() {
    let sys = GibbsMarkovSystem::gauss();
    assert_eq!(sys.sample_invariant(500, 9), sys.sample_invariant(500, 9));
    assert_ne!(sys.sample_invariant(500, 9), sys.sample_invariant(500, 10));
}

#[test]
fn report_round_trip_skips_header() {
    let path = std::env::temp_dir().join(format!("gmclt-props-{}.jsonl", std::process::id()));
    let mut w = JsonlWriter::create(&path, &json!({"seed": 1})).unwrap();
    w.write(&json!({"record": "row", "v": 0.5})).unwrap();
    w.write(&json!({"record": "summary", "pass": true})).unwrap();
    w.finish().unwrap();
    let lines = read_payload(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(lines.len(), 2);
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(first["v"], 0.5);
}

/// Pairwise count oracle: rank sum = m(m+1)/2 + #{x > y} + #{x = y}/2.
fn rank_sum_by_pairs(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mut u = 0.0;
    for a in x {
        for b in y {
            if a > b {
                u += 1.0;
            } else if a == b {
                u += 0.5;
            }
        }
    }
    m * (m + 1.0) / 2.0 + u
}

proptest! {
    #[test]
    fn rank_sum_matches_pair_counts(
        x in prop::collection::vec(0u8..6, 1..12),
        y in prop::collection::vec(0u8..6, 1..12),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let w = rank_sum(&x, &y).unwrap();
        prop_assert!((w - rank_sum_by_pairs(&x, &y)).abs() < 1e-9);
        let total = (x.len() + y.len()) as f64;
        prop_assert!((w + rank_sum(&y, &x).unwrap() - total * (total + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn separation_metric_is_an_ultrametric(x in 0.001f64..0.999, y in 0.001f64..0.999, z in 0.001f64..0.999) {
        let sys = GibbsMarkovSystem::gauss();
        let d = |a: f64, b: f64| sys.separation_metric(Point::Real(a), Point::Real(b), 8).unwrap();
        prop_assert_eq!(d(x, x), 0.0);
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert!(d(x, y) <= 2.0 / 3.0);
        prop_assert!(d(x, z) <= d(x, y).max(d(y, z)));
    }

    #[test]
    fn symbolic_metric_reads_first_disagreement(
        a in prop::collection::vec(0usize..2, 6),
        b in prop::collection::vec(0usize..2, 6),
    ) {
        let sys = GibbsMarkovSystem::bernoulli_half();
        let got = sys.separation_metric(Point::Symbols(&a), Point::Symbols(&b), 6).unwrap();
        let want = a.iter().zip(&b).position(|(p, q)| p != q).map_or(0.0, |k| sys.r().powi(k as i32 + 1));
        prop_assert!((got - want).abs() < 1e-15);
    }
}
