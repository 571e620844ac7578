use crate::error::{Error, Result};

use super::{BoundParams, ParamSet, Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

fn evaluate<F>(params: &ParamSet, f: &F) -> Result<f64>
where
    F: Fn(&mut Tape, &BoundParams) -> Result<Var>,
{
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = f(&mut tape, &bound)?;
    let v = tape.scalar(out);
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("gradcheck objective evaluated to {v}")));
    }
    Ok(v)
}

/// Compares tape gradients of a scalar objective with central differences
/// `(f(θ+ε) - f(θ-ε)) / 2ε`, coordinate by coordinate.
///
/// The relative error of a coordinate is `|a - b| / max(|a|, |b|, 1e-8)`.
/// The objective must be deterministic: any dropout has to be disabled or
/// reseeded inside `f`.
pub fn gradcheck<F>(params: &ParamSet, eps: f64, f: F) -> Result<GradcheckReport>
where
    F: Fn(&mut Tape, &BoundParams) -> Result<Var>,
{
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = f(&mut tape, &bound)?;
    tape.backward(out)?;
    let grads = bound.grads(&tape);

    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
    };
    let mut probe = params.clone();
    for (name, param) in params.iter() {
        let analytic = &grads[name];
        if !analytic.is_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        for k in 0..param.value.len() {
            let original = param.value.data()[k];
            let set = |p: &mut ParamSet, v: f64| p.get_mut(name).unwrap().value.data_mut()[k] = v;
            set(&mut probe, original + eps);
            let plus = evaluate(&probe, &f)?;
            set(&mut probe, original - eps);
            let minus = evaluate(&probe, &f)?;
            set(&mut probe, original);

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.coordinates += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((name.to_owned(), k));
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
