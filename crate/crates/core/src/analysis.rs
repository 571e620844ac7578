//! Numerical checks on how smooth activations create interaction terms.
//!
//! The logistic sigmoid `s(t) = 1/(1+e^{-t})` satisfies `s' = s(1-s)`, so
//! every derivative is a polynomial in `s`. Iterating
//! `D_{k+1}(s) = D_k'(s)·s(1-s)` from `D_0(s) = s` gives the derivatives
//! exactly; evaluating at `s(0) = 1/2` gives the Taylor coefficients.
//!
//! Near zero, `s(u + v) ≈ 1/2 + (u+v)/4 - (u+v)³/48`, so a sigmoid applied
//! to a sum of two embeddings carries the products `u²v` and `uv²` with
//! coefficient `-1/16`. [`cross_term_estimate`] recovers these by least
//! squares.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Highest supported expansion degree.
pub const MAX_DEGREE: usize = 12;

const GRID_STEP: f64 = 1e-3;
const GRID_INFLATION: f64 = 1.01;
const MAX_CONDITION: f64 = 1e10;

/// Integer coefficients of `D_k` as a polynomial in `s`, lowest power first.
fn derivative_polynomial(k: usize) -> Vec<i128> {
    let mut p = vec![0, 1];
    for _ in 0..k {
        // p'(s)·(s - s²)
        let dp: Vec<i128> = p.iter().enumerate().skip(1).map(|(i, &c)| c * i as i128).collect();
        let mut next = vec![0i128; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            next[i + 1] += c;
            next[i + 2] -= c;
        }
        while next.len() > 1 && *next.last().unwrap() == 0 {
            next.pop();
        }
        p = next;
    }
    p
}

fn eval_poly(p: &[i128], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * s + c as f64)
}

fn factorial(k: usize) -> i128 {
    (1..=k as i128).product()
}

/// Exact Taylor coefficients `c_0..=c_P` of the sigmoid at zero.
pub fn sigmoid_taylor_rational(degree: usize) -> Result<Vec<Ratio<i128>>> {
    if degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "degree {degree} exceeds the maximum of {MAX_DEGREE}"
        )));
    }
    let half = Ratio::new(1i128, 2);
    Ok((0..=degree)
        .map(|k| {
            let value = derivative_polynomial(k)
                .iter()
                .rev()
                .fold(Ratio::zero(), |acc, &c| acc * half + Ratio::from_integer(c));
            value / Ratio::from_integer(factorial(k))
        })
        .collect())
}

/// Taylor coefficients `c_0..=c_P` of the sigmoid at zero, as floats.
pub fn sigmoid_taylor_coeffs(degree: usize) -> Result<Vec<f64>> {
    Ok(sigmoid_taylor_rational(degree)?
        .iter()
        .map(|r| r.to_f64().expect("small rationals convert"))
        .collect())
}

/// Evaluates `Σ c_k t^k`.
pub fn taylor_polynomial(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `max |s^{(k)}(t)|` over an evenly spaced grid on `[-t_max, t_max]`.
fn derivative_grid_max(k: usize, t_max: f64, step: f64) -> f64 {
    let p = derivative_polynomial(k);
    let intervals = ((2.0 * t_max / step).ceil() as usize).max(1);
    (0..=intervals)
        .map(|i| {
            let t = -t_max + 2.0 * t_max * i as f64 / intervals as f64;
            eval_poly(&p, sigmoid(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Lagrange bound on `|s(t) - T_P(t)|` for `|t| ≤ t_max`.
///
/// The maximum of `|s^{(P+1)}|` is taken on a grid of step at most `1e-3`
/// and inflated by 1% to cover the gaps between grid points.
pub fn remainder_bound(t_max: f64, degree: usize) -> Result<f64> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid(format!(
            "t_max must be positive and finite, got {t_max}"
        )));
    }
    if degree + 1 > MAX_DEGREE + 1 {
        return Err(Error::invalid(format!(
            "degree {degree} exceeds the maximum of {MAX_DEGREE}"
        )));
    }
    let m = derivative_grid_max(degree + 1, t_max, GRID_STEP) * GRID_INFLATION;
    Ok(t_max.powi(degree as i32 + 1) / factorial(degree + 1) as f64 * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
    Square,
}

impl Activation {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(t),
            Activation::Relu => t.max(0.0),
            Activation::Identity => t,
            Activation::Square => t * t,
        }
    }
}

/// Names of the fitted cubic basis, in coefficient order.
pub const CUBIC_BASIS: [&str; 10] = ["1", "u", "v", "u^2", "uv", "v^2", "u^3", "u^2v", "uv^2", "v^3"];

/// Powers `(a, b)` of `u^a v^b` for each basis term.
const POWERS: [(i32, i32); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

/// Least-squares cubic fit of `f(u + v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTermFit {
    pub activation: Activation,
    pub n_samples: usize,
    pub lo: f64,
    pub hi: f64,
    /// Coefficients in [`CUBIC_BASIS`] order.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

impl CrossTermFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        CUBIC_BASIS
            .iter()
            .position(|&b| b == term)
            .map(|i| self.coefficients[i])
    }

    /// Coefficients of `u²v` and `uv²`.
    pub fn cubic_cross(&self) -> (f64, f64) {
        (self.coefficients[7], self.coefficients[8])
    }

    /// Base coefficient implied by the cross terms: `(u+v)³` spreads `c_3`
    /// as `3c_3` onto each of `u²v` and `uv²`.
    pub fn implied_c3(&self) -> f64 {
        let (a, b) = self.cubic_cross();
        (a + b) / 6.0
    }

    /// Largest magnitude among the degree-2 and degree-3 coefficients.
    pub fn max_nonlinear(&self) -> f64 {
        self.coefficients[3..].iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Fits `f(u + v)` on `(u, v)` drawn uniformly from `[lo, hi]²`.
///
/// Coordinates are divided by `max(|lo|, |hi|)` before solving and the
/// coefficients rescaled afterwards.
pub fn cross_term_fit(
    activation: Activation,
    n_samples: usize,
    lo: f64,
    hi: f64,
    rng: &mut Rng,
) -> Result<CrossTermFit> {
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(format!(
            "sample box [{lo}, {hi}] is empty or not finite"
        )));
    }
    if n_samples < CUBIC_BASIS.len() {
        return Err(Error::invalid(format!(
            "need at least {} samples, got {n_samples}",
            CUBIC_BASIS.len()
        )));
    }
    let scale = lo.abs().max(hi.abs());
    let mut design = DMatrix::<f64>::zeros(n_samples, CUBIC_BASIS.len());
    let mut target = DVector::<f64>::zeros(n_samples);
    for r in 0..n_samples {
        let u = rng.gen_range(lo..=hi);
        let v = rng.gen_range(lo..=hi);
        let (x, y) = (u / scale, v / scale);
        for (c, &(a, b)) in POWERS.iter().enumerate() {
            design[(r, c)] = x.powi(a) * y.powi(b);
        }
        target[r] = activation.apply(u + v);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let solution = svd.solve(&target, 0.0).map_err(|e| Error::invalid(e.to_owned()))?;
    let residual = ((&design * &solution - &target).norm_squared() / n_samples as f64).sqrt();
    let coefficients = POWERS
        .iter()
        .zip(solution.iter())
        .map(|(&(a, b), &c)| c / scale.powi(a + b))
        .collect();
    Ok(CrossTermFit {
        activation,
        n_samples,
        lo,
        hi,
        coefficients,
        residual,
    })
}

/// Fits on the symmetric box `[-t_range, t_range]²`.
pub fn cross_term_estimate(
    activation: Activation,
    n_samples: usize,
    t_range: f64,
    rng: &mut Rng,
) -> Result<CrossTermFit> {
    if !(t_range > 0.0) {
        return Err(Error::invalid(format!("t_range must be positive, got {t_range}")));
    }
    cross_term_fit(activation, n_samples, -t_range, t_range, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    /// The same coefficients as reduced fractions, e.g. `-1/48`.
    pub exact: Vec<String>,
    pub t_max: f64,
    pub remainder_bound: f64,
    pub cross_term: CrossTermFit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorOptions {
    pub degree: usize,
    pub t_max: f64,
    pub n_samples: usize,
    pub t_range: f64,
    pub seed: u64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        TaylorOptions {
            degree: 3,
            t_max: 1.0,
            n_samples: 10_000,
            t_range: 0.1,
            seed: 0,
        }
    }
}

pub fn taylor_report(opts: &TaylorOptions) -> Result<TaylorReport> {
    let exact = sigmoid_taylor_rational(opts.degree)?;
    let mut rng = rng::seeded(opts.seed);
    Ok(TaylorReport {
        degree: opts.degree,
        coefficients: exact
            .iter()
            .map(|r| r.to_f64().expect("small rationals convert"))
            .collect(),
        exact: exact.iter().map(|r| r.to_string()).collect(),
        t_max: opts.t_max,
        remainder_bound: remainder_bound(opts.t_max, opts.degree)?,
        cross_term: cross_term_estimate(Activation::Sigmoid, opts.n_samples, opts.t_range, &mut rng)?,
    })
}
