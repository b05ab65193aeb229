//! Diagnostic: product-mix coverage and solve health at the baseline size.
//! Not part of the test suite.

use apub::experiments::{run_replications, summarize, ExperimentConfig, InstanceKind};

fn main() {
    let cfg = ExperimentConfig {
        master_seed: 60,
        n_train: 120,
        n_test: 2000,
        m_bootstrap: 1000,
        alpha_grid: vec![0.05, 0.1, 0.2, 0.4, 1.0],
        replications: 60,
        instance: InstanceKind::ProductMix {
            n_products: 20,
            n_departments: 8,
        },
        m_grid: None,
        n_grid: None,
    };
    let t0 = std::time::Instant::now();
    let output = run_replications(&cfg).unwrap();
    println!(
        "failures: {}, elapsed {:.0}s",
        output.failures.len(),
        t0.elapsed().as_secs_f64()
    );
    for f in output.failures.iter().take(5) {
        println!("  failure: rep {} alpha {}: {}", f.replication, f.alpha, f.error);
    }
    let report = summarize(&output.results).unwrap();
    for s in &report.per_alpha {
        println!(
            "nominal {:>5.2}: coverage {:.3}, mean_oos {:.2}, mean_opt {:.2}, band [{:.2}, {:.2}]",
            1.0 - s.alpha,
            s.coverage_rate,
            s.mean_oos,
            s.mean_optval,
            s.p10,
            s.p90
        );
    }
}
