//! Temporary exploration harness (deleted before finalizing).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use scamr::bench::{analytic_mean_f14, normalized_l2, relative_mean_error, BenchmarkCase};
use scamr::driver::{run_scamr_with_log, RunLog, ScamrConfig};
use scamr::{Element, Model};

fn validate_l2(case: &BenchmarkCase, s: &scamr::ScamrSurrogate, count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exact = Vec::new();
    let mut approx = Vec::new();
    let mut x = vec![0.0; case.dim()];
    for _ in 0..count {
        for (v, &(lo, hi)) in x.iter_mut().zip(case.domain().iter()) {
            *v = rng.gen_range(lo..hi);
        }
        exact.push(case.eval(&x).unwrap());
        approx.push(s.extract_value(&x).unwrap());
    }
    normalized_l2(&exact, &approx).unwrap()
}

#[test]
#[ignore]
fn sweep_f13() {
    let case = BenchmarkCase::by_id("f13", None, None).unwrap();
    let domain = Element::root(case.domain().to_vec()).unwrap();
    for &(e1, e2) in &[
        (0.05, 0.02),
        (0.016, 3e-3),
        (0.016, 1e-3),
        (0.016, 5e-4),
        (8e-3, 1e-3),
        (8e-3, 5e-4),
        (5e-3, 1e-3),
        (5e-3, 5e-4),
    ] {
        let config = ScamrConfig {
            epsilon1: e1,
            epsilon2: e2,
            max_iterations: 10,
            min_volume_fraction: 1e-6,
            rng_seed: 0,
        };
        let mut log = RunLog::new();
        match run_scamr_with_log(&case, &domain, &config, &mut log) {
            Ok(s) => {
                let l2 = validate_l2(&case, &s, 20_000, 1);
                println!(
                    "f13 e1={e1:.2e} e2={e2:.2e}: evals={} l2={l2:.4e} S={:?}",
                    s.evaluation_count(),
                    s.decomposition.s
                );
            }
            Err(e) => println!("f13 e1={e1:.2e} e2={e2:.2e}: ERROR {e}"),
        }
    }
}

#[test]
#[ignore]
fn sweep_f14() {
    for &n in &[100usize, 200] {
        let case = BenchmarkCase::by_id("f14", Some(n), None).unwrap();
        let domain = Element::root(case.domain().to_vec()).unwrap();
        let exact_mean = analytic_mean_f14(n);
        for &(e1, e2, iters) in &[
            (0.05, 1.0, 8u32),
            (0.05, 0.5, 8),
            (0.05, 0.3, 8),
            (0.01, 0.5, 8),
            (0.01, 0.3, 8),
            (0.01, 0.1, 8),
            (1e-3, 0.3, 10),
            (1e-3, 0.1, 10),
            (1e-4, 0.3, 12),
        ] {
            let config = ScamrConfig {
                epsilon1: e1,
                epsilon2: e2,
                max_iterations: iters,
                min_volume_fraction: 1e-9,
                rng_seed: 0,
            };
            let mut log = RunLog::new();
            match run_scamr_with_log(&case, &domain, &config, &mut log) {
                Ok(s) => {
                    let rel = relative_mean_error(exact_mean, s.estimate_mean()).unwrap();
                    let group_sizes: Vec<usize> =
                        s.decomposition.s.iter().map(|g| g.len()).collect();
                    println!(
                        "f14 n={n} e1={e1:.1e} e2={e2:.1e} it={iters}: evals={} rel={rel:.4e} groups(max)={} T={}",
                        s.evaluation_count(),
                        group_sizes.iter().max().unwrap(),
                        s.decomposition.t.len(),
                    );
                }
                Err(e) => println!("f14 n={n} e1={e1:.1e} e2={e2:.1e}: ERROR {e}"),
            }
        }
    }
}
