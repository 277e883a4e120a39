//! Noisy one-dimensional reward functions and pseudo-regret accounting.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::bandit::TraceRow;
use crate::error::{Error, Result};
use crate::partition::ActionSpace;

/// Grid spacing used to locate the maximizer of a mean function.
pub const GRID_RESOLUTION: f64 = 1e-6;

type MeanFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f(x) = (sin(13x) sin(27x) + 1) / 2`, the standard multimodal test function
/// on `[0, 1]`.
pub fn sine_product(x: f64) -> f64 {
    0.5 * ((13.0 * x).sin() * (27.0 * x).sin() + 1.0)
}

/// Mean function on an interval plus Gaussian noise, clipped to `[0, 1]`.
#[derive(Clone)]
pub struct NoisyObjective {
    mean: MeanFn,
    lower: f64,
    upper: f64,
    sigma: f64,
    noise: Option<Normal<f64>>,
    optimum: (f64, f64),
}

impl fmt::Debug for NoisyObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyObjective")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("sigma", &self.sigma)
            .field("optimum", &self.optimum)
            .finish_non_exhaustive()
    }
}

impl NoisyObjective {
    /// Builds the objective and locates its maximizer with [`grid_maximize`].
    pub fn new<F>(mean: F, lower: f64, upper: f64, sigma: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ActionSpace::interval(lower, upper)?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma must be >= 0, got {sigma}")));
        }
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma checked above"));
        let optimum = grid_maximize(&mean, lower, upper, GRID_RESOLUTION);
        Ok(Self { mean: Arc::new(mean), lower, upper, sigma, noise, optimum })
    }

    /// [`sine_product`] on `[0, 1]` with noise level `sigma`.
    pub fn sine_product(sigma: f64) -> Result<Self> {
        Self::new(sine_product, 0.0, 1.0, sigma)
    }

    pub fn space(&self) -> ActionSpace {
        ActionSpace::interval(self.lower, self.upper).expect("validated in constructor")
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self, x: f64) -> f64 {
        (self.mean)(x)
    }

    /// `(x*, f(x*))`.
    pub fn optimum(&self) -> (f64, f64) {
        self.optimum
    }

    /// `f(x) + eps`, `eps ~ N(0, sigma^2)`, clipped to `[0, 1]`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let eps = self.noise.map_or(0.0, |n| n.sample(rng));
        (self.mean(x) + eps).clamp(0.0, 1.0)
    }

    /// Running pseudo-regret of the actions in `trace`.
    pub fn pseudo_regret(&self, trace: &[TraceRow]) -> Vec<f64> {
        pseudo_regret(trace, |x| self.mean(x[0]), self.optimum.1)
    }
}

/// Dense scan of `[lower, upper]` at `resolution` followed by ternary search
/// on the bracket around the best grid point.
pub fn grid_maximize<F: Fn(f64) -> f64 + ?Sized>(f: &F, lower: f64, upper: f64, resolution: f64) -> (f64, f64) {
    let steps = ((upper - lower) / resolution).ceil() as u64;
    let at = |k: u64| if k >= steps { upper } else { lower + k as f64 * resolution };

    let mut best_k = 0;
    let mut best = f(lower);
    for k in 1..=steps {
        let v = f(at(k));
        if v > best {
            best = v;
            best_k = k;
        }
    }

    let mut lo = at(best_k.saturating_sub(1));
    let mut hi = at((best_k + 1).min(steps));
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    if fx >= best {
        (x, fx)
    } else {
        (at(best_k), best)
    }
}

/// `R_t = t f* - sum_{s <= t} f(x_s)` for every prefix of `trace`.
pub fn pseudo_regret<F>(trace: &[TraceRow], f: F, f_star: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut total = 0.0;
    trace
        .iter()
        .map(|row| {
            total += f_star - f(&row.action);
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::CellId;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(t: u64, x: f64) -> TraceRow {
        TraceRow { t, cell: CellId::ROOT, action: vec![x], reward: 0.0, node_count: 1, elapsed_ns: 0 }
    }

    #[test]
    fn noiseless_values() {
        let obj = NoisyObjective::sine_product(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(obj.sample_reward(0.0, &mut rng), 0.5);
        for k in 0..=1000 {
            let v = obj.sample_reward(k as f64 / 1000.0, &mut rng);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn noise_averages_out() {
        let obj = NoisyObjective::sine_product(0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = 0.3;
        let draws = 100_000;
        let mean = (0..draws).map(|_| obj.sample_reward(x, &mut rng)).sum::<f64>() / draws as f64;
        assert!((mean - obj.mean(x)).abs() <= 3.0 * 0.05 / (draws as f64).sqrt());
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let obj = NoisyObjective::sine_product(0.05).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| obj.sample_reward(0.7, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn optimum_of_simple_functions() {
        let c = NoisyObjective::new(|_| 0.3, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(c.optimum().1, 0.3);
        let id = NoisyObjective::new(|x| x, 0.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(id.optimum().0, 1.0, epsilon = 1e-9);
        assert_relative_eq!(id.optimum().1, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sine_product_optimum_matches_grid_oracle() {
        // Frozen from an independent numpy grid scan at 1e-6 plus ternary refinement.
        let obj = NoisyObjective::sine_product(0.05).unwrap();
        let (x, fx) = obj.optimum();
        assert_relative_eq!(x, 0.8675262086266373, epsilon = 1e-7);
        assert_relative_eq!(fx, 0.9755991438115749, epsilon = 1e-12);
        for k in 0..=10_000 {
            assert!(obj.mean(k as f64 / 10_000.0) <= fx);
        }
    }

    #[test]
    fn regret_examples() {
        let f_star = 0.9;
        let optimal: Vec<_> = (1..=5).map(|t| row(t, 0.9)).collect();
        assert!(pseudo_regret(&optimal, |x| x[0], f_star).iter().all(|&r| r == 0.0));

        let gap: Vec<_> = (1..=5).map(|t| row(t, 0.8)).collect();
        let regret = pseudo_regret(&gap, |x| x[0], f_star);
        for (t, r) in regret.iter().enumerate() {
            assert_relative_eq!(*r, 0.1 * (t + 1) as f64, epsilon = 1e-12);
        }

        let mixed: Vec<_> = [0.1, 0.9, 0.5, 0.7].iter().enumerate().map(|(t, &x)| row(t as u64 + 1, x)).collect();
        let regret = pseudo_regret(&mixed, |x| x[0], f_star);
        let mut brute = Vec::new();
        for k in 1..=mixed.len() {
            brute.push(k as f64 * f_star - mixed[..k].iter().map(|r| r.action[0]).sum::<f64>());
        }
        for (a, b) in regret.iter().zip(&brute) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
    }
}
