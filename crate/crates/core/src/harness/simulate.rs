//! Ancestral sampling of observation streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec, Truth};
use super::HarnessError;

/// One draw: the observation and its 1-based component label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub z: usize,
}

/// ChaCha8 keyed by `seed`, on stream `replicate`. Distinct replicates of one
/// seed draw from disjoint streams, so they are independent yet reproducible.
pub fn stream_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

type Sampler = Box<dyn FnMut(&mut ChaCha8Rng) -> (f64, usize)>;

pub fn simulate(config: &ExperimentConfig) -> Result<Vec<Observation>, HarnessError> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, config.replicate);
    let mut draw: Sampler = match (&config.model, &config.truth) {
        (ModelSpec::MeanMixture { components }, Truth::Scalar(mu)) => {
            let (model, mu) = (components.clone(), *mu);
            Box::new(move |rng| model.sample(mu, rng))
        }
        (ModelSpec::KnownPair { .. }, Truth::Scalar(beta)) => {
            let (pair, beta) = (config.model.pair().expect("pair model"), *beta);
            Box::new(move |rng| pair.sample(beta, rng))
        }
        (ModelSpec::KnownSet { densities }, Truth::Vector(w)) => {
            let (set, w) = (densities.clone(), w.clone());
            Box::new(move |rng| set.sample(&w, rng))
        }
        _ => {
            return Err(HarnessError::Config(
                "truth shape does not fit the model".into(),
            ))
        }
    };
    Ok((0..config.n)
        .map(|_| {
            let (x, z) = draw(&mut rng);
            Observation { x, z }
        })
        .collect())
}
