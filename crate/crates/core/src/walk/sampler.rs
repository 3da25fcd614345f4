use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::WalkConfig;
use crate::error::{Error, Result};
use crate::weights::NuDistribution;

/// Largest mass of `nu` allowed outside the sampled window.
pub const MAX_TRUNCATED_MASS: f64 = 1e-3;

/// Alias sampler for `nu` restricted to `[-K, K]` and renormalized.
#[derive(Debug, Clone)]
pub struct Sampler {
    cut: i64,
    alias: WeightedAliasIndex<f64>,
    truncated_mass: f64,
}

impl Sampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.alias.sample(rng) as i64 - self.cut
    }

    pub fn support_cut(&self) -> i64 {
        self.cut
    }

    /// Mass of `nu` outside `[-K, K]`, removed by renormalization.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }
}

pub fn build_sampler(nu: &NuDistribution, cfg: &WalkConfig) -> Result<Sampler> {
    cfg.validate()?;
    let cut = cfg.support_cut;
    let truncated_mass = nu.tail_above(cut) + nu.tail_below(cut);
    if !(truncated_mass <= MAX_TRUNCATED_MASS) {
        return Err(Error::SamplerTruncation {
            dropped: truncated_mass,
            limit: MAX_TRUNCATED_MASS,
        });
    }
    let mut weights = nu.window(-cut, cut);
    for (i, w) in weights.iter_mut().enumerate() {
        if *w < 0.0 {
            if *w < -1e-12 {
                return Err(Error::Negativity {
                    k: i as i64 - cut,
                    value: *w,
                });
            }
            *w = 0.0;
        }
    }
    let alias = WeightedAliasIndex::new(weights)
        .map_err(|e| Error::InvalidInput(format!("cannot build sampler: {e}")))?;
    Ok(Sampler {
        cut,
        alias,
        truncated_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cfg(cut: i64) -> WalkConfig {
        WalkConfig {
            support_cut: cut,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn truncation_threshold() {
        let nu = NuDistribution::builtin_symmetric();
        match build_sampler(&nu, &cfg(100)) {
            Err(Error::SamplerTruncation { dropped, .. }) => {
                assert!((dropped - 2.0 / (PI * 201.0)).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
        let s = build_sampler(&nu, &cfg(1000)).unwrap();
        assert!((s.truncated_mass() - 2.0 / (PI * 2001.0)).abs() < 1e-15);
    }

    #[test]
    fn stays_in_window_and_matches_frequencies() {
        let nu = NuDistribution::builtin_symmetric();
        let s = build_sampler(&nu, &cfg(1000)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 2_000_000u64;
        let mut counts = [0u64; 21];
        for _ in 0..n {
            let x = s.sample(&mut rng);
            assert!(x.abs() <= 1000);
            if x.abs() <= 10 {
                counts[(x + 10) as usize] += 1;
            }
        }
        for k in -10i64..=10 {
            let p = nu.value(k) / (1.0 - s.truncated_mass());
            let c = counts[(k + 10) as usize] as f64;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((c - n as f64 * p).abs() < 4.0 * sd, "k={k}");
        }
    }

    #[test]
    fn rejects_negative_weights() {
        let nu = NuDistribution::tabulated(-1, vec![0.5, 0.6, -0.1]).unwrap();
        assert!(matches!(
            build_sampler(&nu, &cfg(2)),
            Err(Error::Negativity { k: 1, .. })
        ));
    }
}
