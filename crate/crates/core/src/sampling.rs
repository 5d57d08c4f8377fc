//! Seeded sampling helpers shared by the condition checks and the verifier.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::logic::Metric;

/// Independent stream for sample `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniformly random direction of unit length in `metric`.
pub fn unit_direction(rng: &mut impl Rng, metric: &Metric) -> DVector<f64> {
    loop {
        let z = DVector::from_fn(metric.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = z.norm();
        if n > 1e-12 {
            return metric.from_euclidean(&(z / n));
        }
    }
}

/// Radical inverse of `index` in base `base` (one Halton coordinate).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_values() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn directions_have_unit_metric_length() {
        let m = Metric::diagonal(&[4.0, 0.25]).unwrap();
        let mut rng = stream_rng(3, 9);
        for _ in 0..50 {
            assert!((m.norm(&unit_direction(&mut rng, &m)) - 1.0).abs() < 1e-12);
        }
    }
}
