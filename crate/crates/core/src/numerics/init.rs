use rand::Rng;

use super::{Scalar, Tensor};

/// Uniform in `±sqrt(6 / (fan_in + fan_out))` for a `rows x cols` weight
/// (`fan_out = rows`, `fan_in = cols`).
pub fn glorot_uniform<S: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor<S> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| S::of(rng.gen_range(-limit..=limit)))
        .collect();
    Tensor::from_vec(rows, cols, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bounded_and_seeded() {
        let a: Tensor<f64> = glorot_uniform(4, 2, &mut ChaCha8Rng::seed_from_u64(3));
        let b: Tensor<f64> = glorot_uniform(4, 2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.max_abs() <= 1.0);
        assert!(a.max_abs() > 0.0);
    }
}
