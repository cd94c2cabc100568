#![allow(dead_code)]

use std::path::PathBuf;

use gapsearch::cli::ScenarioConfig;
use gapsearch::{make_truncated, DistributionSpec, Gap, TruncatedDistribution, TruncationLayout};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.ini"))
}

pub fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn truncated(name: &str) -> TruncatedDistribution {
    let cfg = load(name);
    make_truncated(cfg.distribution, cfg.layout).unwrap()
}

/// Every scenario of the first three worked examples plus the one-gap
/// normal layout.
pub const SCENARIOS: [&str; 10] = [
    "ex1_normal",
    "ex1_cauchy",
    "ex1_skew_normal",
    "ex1_gamma",
    "ex2_normal",
    "ex2_cauchy",
    "ex2_skew_normal",
    "ex3_normal",
    "ex3_cauchy",
    "ex4_normal_one_gap",
];

pub fn example1_layout() -> TruncationLayout {
    TruncationLayout::new(
        -20.0,
        30.0,
        vec![Gap::new(-6.0, -4.0), Gap::new(-15.0, -10.0)],
        vec![Gap::new(2.0, 7.0), Gap::new(11.0, 17.0)],
    )
    .unwrap()
}

pub fn normal_4_53() -> DistributionSpec {
    DistributionSpec::normal(0.0, 4.53).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + h * i as f64);
    }
    sum * h / 3.0
}
