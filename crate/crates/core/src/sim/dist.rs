use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

/// A positive random duration, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Deterministic { mean: f64 },
    Exponential { mean: f64 },
    /// `exp(N(mu_log, sigma_log²))`.
    Lognormal { mu_log: f64, sigma_log: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            DistributionSpec::Deterministic { mean } | DistributionSpec::Exponential { mean } => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(format!("mean must be positive and finite, got {mean}"));
                }
            }
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                if !mu_log.is_finite() || !(sigma_log >= 0.0 && sigma_log.is_finite()) {
                    return Err(format!("invalid lognormal parameters ({mu_log}, {sigma_log})"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Deterministic { mean } | DistributionSpec::Exponential { mean } => mean,
            DistributionSpec::Lognormal { mu_log, sigma_log } => (mu_log + 0.5 * sigma_log * sigma_log).exp(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            DistributionSpec::Deterministic { mean } => mean * mean,
            DistributionSpec::Exponential { mean } => 2.0 * mean * mean,
            DistributionSpec::Lognormal { mu_log, sigma_log } => (2.0 * mu_log + 2.0 * sigma_log * sigma_log).exp(),
        }
    }

    pub(crate) fn sampler(&self) -> Sampler {
        match *self {
            DistributionSpec::Deterministic { mean } => Sampler::Constant(mean),
            DistributionSpec::Exponential { mean } => Sampler::Exp(Exp::new(1.0 / mean).expect("validated mean")),
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                Sampler::LogNormal(LogNormal::new(mu_log, sigma_log).expect("validated parameters"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Sampler {
    Constant(f64),
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::Exp(d) => d.sample(rng),
            Sampler::LogNormal(d) => d.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn analytic_moments() {
        let d = DistributionSpec::Exponential { mean: 0.1 };
        assert!((d.second_moment() - 0.02).abs() < 1e-15);
        let l = DistributionSpec::Lognormal {
            mu_log: -2.0,
            sigma_log: 0.0,
        };
        assert!((l.second_moment() - l.mean().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn sampled_moments_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in [
            DistributionSpec::Exponential { mean: 0.05 },
            DistributionSpec::Lognormal {
                mu_log: -3.0,
                sigma_log: 0.5,
            },
        ] {
            let sampler = spec.sampler();
            let n = 200_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = sampler.sample(&mut rng);
                s1 += x;
                s2 += x * x;
            }
            assert!((s1 / n as f64 / spec.mean() - 1.0).abs() < 0.01, "{spec:?}");
            assert!((s2 / n as f64 / spec.second_moment() - 1.0).abs() < 0.03, "{spec:?}");
        }
    }

    #[test]
    fn json_shape() {
        let d: DistributionSpec = serde_json::from_str(r#"{"kind":"exponential","mean":0.001}"#).unwrap();
        assert_eq!(d, DistributionSpec::Exponential { mean: 0.001 });
        assert!(DistributionSpec::Deterministic { mean: 0.0 }.validate().is_err());
        assert!(DistributionSpec::Lognormal {
            mu_log: 0.0,
            sigma_log: -1.0
        }
        .validate()
        .is_err());
    }
}
