//! Shared inputs for the benchmarks.

use labelboot::simgen::{generate_dataset, SimConfig};
use labelboot::{LabeledDataset, RngSpec};

/// Simulated cohort of `n` rows under the default generator settings.
pub fn cohort(n: usize, seed: u64) -> LabeledDataset {
    let cfg = SimConfig {
        n,
        ..SimConfig::default()
    };
    generate_dataset(&cfg, RngSpec::new(seed, 0)).expect("valid simulation config")
}
