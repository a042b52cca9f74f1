//! The uniform limit law of Y: simulate many trajectories, collect the
//! stabilized Y values, and compare against Uniform(0,1).

use bpre::environment::EnvironmentModel;
use bpre::limitlab::estimate_y_distribution;
use bpre::population::SimulationConfig;

fn main() {
    let model = EnvironmentModel::SibuyaUniform {
        alpha_min: 0.2,
        alpha_max: 0.7,
    };
    let sim = SimulationConfig::default();
    let y = estimate_y_distribution(&model, 42, 1000, &sim).unwrap();

    println!(
        "{} replicates, {} failed to stabilize, {} truncated",
        y.replicates, y.stabilization_failures, y.truncated
    );

    let mut histogram = [0usize; 10];
    for &value in &y.y_samples {
        histogram[((value * 10.0) as usize).min(9)] += 1;
    }
    println!("\ndecile counts (expect about {} each):", y.y_samples.len() / 10);
    for (bin, count) in histogram.iter().enumerate() {
        println!(
            "  [{:.1}, {:.1})  {:>4}  {}",
            bin as f64 / 10.0,
            (bin + 1) as f64 / 10.0,
            count,
            "#".repeat(count / 4)
        );
    }

    println!(
        "\nKS distance vs Uniform(0,1): {:.4} (5% critical value {:.4})",
        y.ks_uniform.statistic, y.ks_uniform.critical_005
    );
    println!(
        "uniformity here is the signature of a regular process: the quenched"
    );
    println!("limit W sits on {{0, infinity}} and Y records where the cut falls.");
}
