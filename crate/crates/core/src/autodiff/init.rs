use rand::distributions::{Distribution, Uniform};

use crate::dense::Matrix;

/// Glorot/Xavier uniform initialization: samples from `[-L, L]` with
/// `L = sqrt(6 / (fan_in + fan_out))`, giving variance `L²/3`.
pub fn glorot_uniform<R: rand::Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    assert!(fan_in > 0 && fan_out > 0, "fans must be positive");
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Matrix::from_fn(fan_in, fan_out, |_, _| dist.sample(rng))
}
