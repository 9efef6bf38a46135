//! Shared inputs for the solver benchmarks.

use tbls_core::gen::{generate, GenConfig, TieLength};
use tbls_core::{Instance, Kind};

/// A generated instance with `Geom(p2)` tie lengths and ten hospitals for
/// HRT.
pub fn instance(kind: Kind, n: usize, p1: f64, p2: f64, seed: u64) -> Instance {
    let config = GenConfig {
        kind,
        n,
        m: 10.min(n),
        p1,
        p2,
        tie_length: TieLength::GeomP2,
        seed,
        ..GenConfig::default()
    };
    generate(&config, 0).expect("valid benchmark configuration")
}
