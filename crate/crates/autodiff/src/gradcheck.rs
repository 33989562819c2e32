use crate::error::{AutodiffError, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// `|a − n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Largest relative error between the tape gradient of scalar `f` at `x`
/// and a central finite difference with step `h`.
pub fn grad_check<G>(f: G, x: &Tensor<f64>, h: f64) -> Result<f64>
where
    G: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), h)
}

/// Like [`grad_check`] but over several inputs at once; the error is the
/// maximum over every element of every input.
pub fn grad_check_many<G>(f: G, inputs: &[Tensor<f64>], h: f64) -> Result<f64>
where
    G: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |inputs: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        scalar(&tape, out)
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    scalar(&tape, out)?;
    tape.backward(out)?;

    let mut worst = 0.0f64;
    let mut probe = inputs.to_vec();
    for (i, &var) in vars.iter().enumerate() {
        let analytic = tape.grad(var).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; inputs[i].len()]);
        for j in 0..inputs[i].len() {
            let orig = inputs[i].values()[j];
            probe[i].values_mut()[j] = orig + h;
            let plus = eval(&probe)?;
            probe[i].values_mut()[j] = orig - h;
            let minus = eval(&probe)?;
            probe[i].values_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(analytic[j], numeric));
        }
    }
    Ok(worst)
}

fn scalar(tape: &Tape<f64>, v: Var) -> Result<f64> {
    let t = tape.value(v);
    if t.shape() != [1, 1] {
        return Err(AutodiffError::NonScalarLoss(t.shape()));
    }
    Ok(t.item())
}
