//! Diagnostic: signed coverage curve of the charging study at several
//! training sizes. Not part of the test suite.

use apub::experiments::{run_replications, summarize, ExperimentConfig, InstanceKind};

fn main() {
    let mut alpha_grid = vec![0.05];
    alpha_grid.extend((1..=10).map(|k| k as f64 / 10.0));
    for &n_train in &[20usize, 80, 320] {
        let cfg = ExperimentConfig {
            master_seed: 314,
            n_train,
            n_test: 4000,
            m_bootstrap: 2000,
            alpha_grid: alpha_grid.clone(),
            replications: 200,
            instance: InstanceKind::EvCharging,
            m_grid: None,
            n_grid: None,
        };
        let output = run_replications(&cfg).unwrap();
        let report = summarize(&output.results).unwrap();
        println!("N = {n_train}");
        for s in &report.per_alpha {
            let nominal = 1.0 - s.alpha;
            println!(
                "  nominal {:>5.2}  coverage {:.3}  signed dev {:+.3}  mean_oos {:.3} mean_opt {:.3}",
                nominal,
                s.coverage_rate,
                s.coverage_rate - nominal,
                s.mean_oos,
                s.mean_optval,
            );
        }
    }
}
