//! Random SMTI/HRT instance generator.
//!
//! Lists start complete and uniformly shuffled. Each `U`-`W` pair is then
//! deleted (from both lists) with probability `p1`. Ties are laid over each
//! surviving list independently: walking from the first entry, a uniform
//! draw `p ≤ p2` starts a tie that absorbs the next `i` entries, with `i`
//! drawn from a geometric distribution on `{1, 2, ...}` and truncated at the
//! end of the list; otherwise the entry stands alone.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::model::{Instance, InstanceSpec, Kind};

/// Distribution of tie lengths, parameterized by the tie probability `p2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieLength {
    /// `Geom(p2)`: high `p2` gives many short ties.
    GeomP2,
    /// `Geom(1 − p2)`: high `p2` gives many long ties.
    GeomOneMinusP2,
}

impl TieLength {
    /// Success probability of the geometric distribution.
    pub fn theta(self, p2: f64) -> f64 {
        match self {
            TieLength::GeomP2 => p2,
            TieLength::GeomOneMinusP2 => 1.0 - p2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TieLength::GeomP2 => "geom-p2",
            TieLength::GeomOneMinusP2 => "geom-1-p2",
        }
    }
}

impl std::str::FromStr for TieLength {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geom-p2" => Ok(TieLength::GeomP2),
            "geom-1-p2" => Ok(TieLength::GeomOneMinusP2),
            other => Err(GenError::InvalidConfig(format!(
                "unknown tie-length distribution `{other}` (expected geom-p2 or geom-1-p2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("no instance without empty lists after {0} attempts")]
    EmptyListsPersist(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub kind: Kind,
    /// Agents per side (SMTI) or residents (HRT).
    pub n: usize,
    /// Hospitals (HRT only).
    pub m: usize,
    /// Probability that a pair is mutually unacceptable.
    pub p1: f64,
    /// Probability of starting a tie at each list position.
    pub p2: f64,
    pub tie_length: TieLength,
    pub seed: u64,
    /// Number of instances in a batch; instance `i` uses seed `seed + i`.
    pub count: usize,
    /// When false, instances with an empty preference list are redrawn.
    pub allow_empty_lists: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            kind: Kind::Smti,
            n: 100,
            m: 10,
            p1: 0.0,
            p2: 0.0,
            tie_length: TieLength::GeomP2,
            seed: 0,
            count: 1,
            allow_empty_lists: true,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        if self.kind == Kind::Hrt && (self.m == 0 || self.m > self.n) {
            return Err(GenError::InvalidConfig(format!(
                "HRT needs 1 <= m <= n, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        Ok(())
    }
}

/// Draws a tie extension length from `Geom(theta)` on `{1, 2, ...}`,
/// truncated at `remaining`. `theta <= 0` extends through `remaining`.
pub fn sample_tie_length<R: Rng + ?Sized>(theta: f64, remaining: usize, rng: &mut R) -> usize {
    if theta <= 0.0 {
        return remaining;
    }
    if theta >= 1.0 {
        return remaining.min(1);
    }
    let failures = Geometric::new(theta).expect("theta in (0, 1)").sample(rng);
    let length = failures.saturating_add(1);
    usize::try_from(length).unwrap_or(usize::MAX).min(remaining)
}

/// Splits a strict list into tie groups.
fn lay_ties<R: Rng + ?Sized>(
    list: Vec<usize>,
    p2: f64,
    theta: f64,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut pos = 0;
    while pos < list.len() {
        let p: f64 = rng.random();
        let extra = if p2 > 0.0 && p <= p2 {
            sample_tie_length(theta, list.len() - pos - 1, rng)
        } else {
            0
        };
        groups.push(list[pos..pos + 1 + extra].to_vec());
        pos += 1 + extra;
    }
    groups
}

type Prefs = Vec<Vec<Vec<usize>>>;

/// Mutually incomplete shuffled lists for an `n_u × n_w` bipartite instance.
fn random_lists<R: Rng + ?Sized>(
    n_u: usize,
    n_w: usize,
    config: &GenConfig,
    rng: &mut R,
) -> (Prefs, Prefs) {
    let mut lists_u: Vec<Vec<usize>> = vec![Vec::new(); n_u];
    let mut lists_w: Vec<Vec<usize>> = vec![Vec::new(); n_w];
    for (u, list_u) in lists_u.iter_mut().enumerate() {
        for (w, list_w) in lists_w.iter_mut().enumerate() {
            if config.p1 <= 0.0 || rng.random::<f64>() >= config.p1 {
                list_u.push(w);
                list_w.push(u);
            }
        }
    }
    let theta = config.tie_length.theta(config.p2);
    let finish = |lists: Vec<Vec<usize>>, rng: &mut R| -> Prefs {
        lists
            .into_iter()
            .map(|mut l| {
                l.shuffle(rng);
                lay_ties(l, config.p2, theta, rng)
            })
            .collect()
    };
    let prefs_u = finish(lists_u, rng);
    let prefs_w = finish(lists_w, rng);
    (prefs_u, prefs_w)
}

/// One SMTI instance with `config.n` agents per side.
pub fn generate_smti<R: Rng + ?Sized>(config: &GenConfig, rng: &mut R) -> Instance {
    let (prefs_u, prefs_w) = random_lists(config.n, config.n, config, rng);
    Instance::new(InstanceSpec::smti(prefs_u, prefs_w)).expect("generated lists are mutual")
}

/// Hospital capacities summing to `n`, spread as evenly as possible: the
/// first `n mod m` hospitals get one extra position.
pub fn uniform_capacities(n: usize, m: usize) -> Vec<u32> {
    (0..m)
        .map(|j| (n / m + usize::from(j < n % m)) as u32)
        .collect()
}

/// One HRT instance with `config.n` residents and `config.m` hospitals.
pub fn generate_hrt<R: Rng + ?Sized>(config: &GenConfig, rng: &mut R) -> Instance {
    let (prefs_u, prefs_w) = random_lists(config.n, config.m, config, rng);
    let caps = uniform_capacities(config.n, config.m);
    Instance::new(InstanceSpec::hrt(prefs_u, prefs_w, caps)).expect("generated lists are mutual")
}

const MAX_REDRAWS: u32 = 1000;

/// Instance `index` of the batch described by `config`.
pub fn generate(config: &GenConfig, index: usize) -> Result<Instance, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(index as u64));
    for _ in 0..MAX_REDRAWS {
        let inst = match config.kind {
            Kind::Smti => generate_smti(config, &mut rng),
            Kind::Hrt => generate_hrt(config, &mut rng),
        };
        if config.allow_empty_lists || inst.agents().all(|a| !inst.list(a).is_empty()) {
            return Ok(inst);
        }
    }
    Err(GenError::EmptyListsPersist(MAX_REDRAWS))
}

/// All `config.count` instances.
pub fn generate_batch(config: &GenConfig) -> Result<Vec<Instance>, GenError> {
    (0..config.count).map(|i| generate(config, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, Side};

    fn mean_tie_stats(inst: &Instance) -> (usize, f64) {
        let (mut ties, mut tied_entries) = (0, 0);
        for a in inst.agents() {
            for g in inst.list(a).groups() {
                if g.len() > 1 {
                    ties += 1;
                    tied_entries += g.len();
                }
            }
        }
        (
            ties,
            if ties == 0 {
                0.0
            } else {
                tied_entries as f64 / ties as f64
            },
        )
    }

    #[test]
    fn degenerate_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_tie_length(1.0, usize::MAX, &mut rng), 1);
            assert_eq!(sample_tie_length(0.0, 7, &mut rng), 7);
            assert!(sample_tie_length(0.3, 4, &mut rng) <= 4);
        }
        assert_eq!(sample_tie_length(1.0, 0, &mut rng), 0);
    }

    #[test]
    fn geometric_mean_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000;
        let sum: usize = (0..draws)
            .map(|_| sample_tie_length(0.5, usize::MAX, &mut rng))
            .sum();
        let mean = sum as f64 / draws as f64;
        assert!((mean - 2.0).abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn no_deletions_no_ties_gives_complete_strict_lists() {
        let config = GenConfig {
            n: 20,
            ..GenConfig::default()
        };
        let inst = generate(&config, 0).unwrap();
        for a in inst.agents() {
            assert_eq!(inst.list(a).len(), 20);
            assert_eq!(inst.list(a).group_count(), 20);
        }
    }

    #[test]
    fn generated_instances_validate() {
        for kind in [Kind::Smti, Kind::Hrt] {
            for (p1, p2) in [(0.0, 0.5), (0.5, 0.9), (0.9, 1.0), (0.99, 0.2)] {
                let config = GenConfig {
                    kind,
                    n: 30,
                    m: 4,
                    p1,
                    p2,
                    ..GenConfig::default()
                };
                for i in 0..5 {
                    let inst = generate(&config, i).unwrap();
                    assert!(validate(&inst.to_spec()).is_empty());
                }
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let config = GenConfig {
            n: 25,
            p1: 0.4,
            p2: 0.6,
            seed: 99,
            ..GenConfig::default()
        };
        assert_eq!(generate(&config, 3).unwrap(), generate(&config, 3).unwrap());
        assert_ne!(generate(&config, 3).unwrap(), generate(&config, 4).unwrap());
    }

    #[test]
    fn tie_length_distributions_differ_at_high_p2() {
        let mut short = 0.0;
        let mut long = 0.0;
        for i in 0..10 {
            for (g, acc) in [
                (TieLength::GeomP2, &mut short),
                (TieLength::GeomOneMinusP2, &mut long),
            ] {
                let config = GenConfig {
                    n: 100,
                    p2: 0.9,
                    tie_length: g,
                    ..GenConfig::default()
                };
                *acc += mean_tie_stats(&generate(&config, i).unwrap()).1;
            }
        }
        assert!(
            short < long,
            "GeomP2 mean {short} vs GeomOneMinusP2 mean {long}"
        );
    }

    #[test]
    fn tie_initiations_rise_with_p2() {
        let count = |p2| {
            let config = GenConfig {
                n: 100,
                p2,
                tie_length: TieLength::GeomP2,
                ..GenConfig::default()
            };
            mean_tie_stats(&generate(&config, 0).unwrap()).0
        };
        assert!(count(0.2) < count(0.5));
    }

    #[test]
    fn hrt_capacities() {
        assert_eq!(uniform_capacities(100, 10), vec![10; 10]);
        let caps = uniform_capacities(1000, 30);
        assert_eq!(caps.iter().filter(|&&c| c == 34).count(), 10);
        assert_eq!(caps.iter().filter(|&&c| c == 33).count(), 20);
        assert_eq!(caps.iter().sum::<u32>(), 1000);
        assert_eq!(uniform_capacities(7, 1), vec![7]);

        let config = GenConfig {
            kind: Kind::Hrt,
            n: 100,
            m: 10,
            p1: 0.2,
            ..GenConfig::default()
        };
        let inst = generate(&config, 0).unwrap();
        assert_eq!(inst.total_quota(Side::W), 100);
        assert_eq!(inst.n_w(), 10);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = GenConfig {
            p1: 1.2,
            ..GenConfig::default()
        };
        assert!(generate(&bad, 0).is_err());
        let bad = GenConfig {
            kind: Kind::Hrt,
            n: 5,
            m: 6,
            ..GenConfig::default()
        };
        assert!(generate(&bad, 0).is_err());
        assert!("geom-x".parse::<TieLength>().is_err());
    }

    #[test]
    fn redraws_empty_lists_when_asked() {
        let config = GenConfig {
            n: 4,
            p1: 0.5,
            allow_empty_lists: false,
            ..GenConfig::default()
        };
        for i in 0..10 {
            let inst = generate(&config, i).unwrap();
            assert!(inst.agents().all(|a| !inst.list(a).is_empty()));
        }
        let hopeless = GenConfig {
            n: 4,
            p1: 1.0,
            allow_empty_lists: false,
            ..GenConfig::default()
        };
        assert_eq!(
            generate(&hopeless, 0),
            Err(GenError::EmptyListsPersist(MAX_REDRAWS))
        );
    }
}
