//! Regularity classification: dual evidence from Q products and
//! h-ratio trends, on one regular and one irregular model.

use bpre::environment::{Environment, EnvironmentModel};
use bpre::pgf::LawDescriptor;
use bpre::regularity::{classify_process, ClassifyConfig, Verdict};

fn show(name: &str, model: EnvironmentModel, s_grid: &[f64]) {
    let env = Environment::new(model, 42, 0).unwrap();
    let config = ClassifyConfig::default();
    let process = classify_process(&env, s_grid, &config).unwrap();
    println!("{name}:");
    for point in &process.points {
        let product = point
            .log_q_products
            .last()
            .map(|q| format!("{q:.1}"))
            .unwrap_or_else(|| "n/a".to_string());
        println!(
            "  s = {:>4}: {:<12} (final log Q product {product})",
            point.s,
            match point.verdict {
                Verdict::Regular => "regular",
                Verdict::Irregular => "irregular",
                Verdict::Inconclusive => "inconclusive",
            }
        );
    }
    println!(
        "  process verdict: {:?}\n",
        process.verdict
    );
}

fn main() {
    let s_grid = [0.25, 0.5, 1.0, 2.0, 4.0];

    // Power tails: products of Q along the h orbit collapse to zero,
    // so the martingale limit has no interior mass anywhere.
    show(
        "heavy-tailed environment (tail exponents uniform in [0.2, 0.7])",
        EnvironmentModel::SibuyaUniform {
            alpha_min: 0.2,
            alpha_max: 0.7,
        },
        &s_grid,
    );

    // The doubling law has finite mean; h-ratios stall at a positive
    // level instead of draining, and every point is irregular.
    show(
        "constant doubling environment (every individual has 2 children)",
        EnvironmentModel::Cycle {
            laws: vec![LawDescriptor::Finite {
                weights: vec![0.0, 0.0, 1.0],
            }],
        },
        &s_grid,
    );
}
