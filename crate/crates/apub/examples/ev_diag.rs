//! Diagnostic: true cost curve of the charging instance and where the
//! solvers land at N = 20. Not part of the test suite.

use apub::experiments::make_ev_instance;
use apub::lshaped::{solve_apub_lshaped, solve_saa_lshaped, LShapedConfig};
use apub::model::evaluate_out_of_sample;
use apub::sampling::{derive_substream, draw_bootstrap_weights, BootstrapWeights};

fn main() {
    let inst = make_ev_instance();
    // Big test set for the true-cost curve.
    let mut rng = derive_substream(999, 0);
    let test: Vec<_> = (0..100_000).map(|_| inst.sample_scenario(&mut rng)).collect();
    println!("true cost vs x:");
    for k in 0..=24 {
        let x = k as f64 * 0.5;
        let rep = evaluate_out_of_sample(
            &inst.c,
            &inst.a,
            &inst.b,
            &[x, 12.0 - x],
            &test,
        )
        .unwrap();
        println!("  x = {x:>4.1}  cost = {:.4}", rep.mean_cost);
    }

    // Where the solvers land at N = 20.
    let reps = 200;
    let n_train = 20;
    for &(label, alpha) in &[
        ("saa", 1.0f64),
        ("0.6", 0.4),
        ("0.8", 0.2),
        ("0.9", 0.1),
        ("0.95", 0.05),
    ] {
        let mut xs = Vec::new();
        for rep in 0..reps {
            let mut rng = derive_substream(314, rep);
            let scen: Vec<_> = (0..n_train).map(|_| inst.sample_scenario(&mut rng)).collect();
            let weights: Vec<BootstrapWeights> = (0..2000)
                .map(|_| draw_bootstrap_weights(n_train, &mut rng))
                .collect();
            let p = inst.problem(scen, 314);
            let out = if alpha >= 1.0 {
                solve_saa_lshaped(&p, &LShapedConfig::default()).unwrap()
            } else {
                solve_apub_lshaped(&p, alpha, &weights, &LShapedConfig::default()).unwrap()
            };
            xs.push(out.x[0]);
        }
        xs.sort_by(f64::total_cmp);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        println!(
            "nominal {label:>4}: mean x {mean:.3}, p10 {:.3}, p50 {:.3}, p90 {:.3}, min {:.3}",
            xs[19], xs[99], xs[179], xs[0]
        );
    }
}
