use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub eps: f64,
    pub tol_rel: f64,
    /// Denominator floor for the relative error, so near-zero gradients compare absolutely.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-5,
            tol_rel: 1e-4,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(input index, element index)` of the worst element.
    pub worst: (usize, usize),
    pub checked: usize,
    pub tol_rel: f64,
    pub passed: bool,
}

fn evaluate<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    if !tape.value(out).is_scalar() {
        return Err(Error::Contract(format!(
            "gradient check needs a scalar output, got shape {:?}",
            tape.shape(out)
        )));
    }
    Ok(tape.item(out))
}

/// Reverse-mode gradients of the scalar closure `f` at `inputs`.
pub fn analytic_gradients<F>(f: &F, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;
    Ok(vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| tape.grad(v).map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec))
        .collect())
}

/// Compares supplied gradients against central finite differences of `f`.
pub fn compare_gradients<F>(
    f: &F,
    inputs: &[Tensor],
    analytic: &[Vec<f64>],
    opts: GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if analytic.len() != inputs.len() {
        return Err(Error::shape("grad_check", &[inputs.len()], &[analytic.len()]));
    }
    let mut probe: Vec<Tensor> = inputs.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        checked: 0,
        tol_rel: opts.tol_rel,
        passed: true,
    };
    for (i, grads) in analytic.iter().enumerate() {
        if grads.len() != inputs[i].len() {
            return Err(Error::shape("grad_check", inputs[i].shape(), &[grads.len()]));
        }
        for (j, &a) in grads.iter().enumerate() {
            let orig = inputs[i].data()[j];
            probe[i].data_mut()[j] = orig + opts.eps;
            let up = evaluate(f, &probe)?;
            probe[i].data_mut()[j] = orig - opts.eps;
            let down = evaluate(f, &probe)?;
            probe[i].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * opts.eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            report.checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = rel;
                report.worst = (i, j);
            }
        }
    }
    report.passed = report.max_rel_error < opts.tol_rel;
    Ok(report)
}

/// Finite-difference check of the tape gradients of `f` at `inputs`.
pub fn grad_check<F>(f: F, inputs: &[Tensor], opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let analytic = analytic_gradients(&f, inputs)?;
    compare_gradients(&f, inputs, &analytic, opts)
}
