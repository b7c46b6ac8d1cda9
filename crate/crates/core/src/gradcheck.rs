//! Central finite-difference verification of tape gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::real::Real;
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

/// Which coordinates of each parameter to probe.
#[derive(Clone, Copy, Debug)]
pub enum Coords {
    All,
    /// At most this many per parameter, drawn without replacement.
    Sample { per_param: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / f64::max(1e-8, analytic.abs() + numeric.abs())
}

/// Compares the tape gradient of the scalar produced by `f` with central
/// differences of step `eps`, over every non-frozen parameter in `params`.
///
/// `f` must be deterministic. Existing gradients in `params` are cleared.
pub fn grad_check<T, F>(params: &mut ParamStore<T>, eps: f64, coords: Coords, mut f: F) -> Result<GradCheckReport>
where
    T: Real,
    F: FnMut(&mut Tape<T>, &ParamStore<T>) -> Result<Var>,
{
    check_with(params, |p| p, |p| p, eps, coords, |tape, p| f(tape, p))
}

/// [`grad_check`] over a whole model's parameters, with `f` building the
/// loss from the model itself.
pub fn grad_check_model<T, M, F>(model: &mut M, eps: f64, coords: Coords, mut f: F) -> Result<GradCheckReport>
where
    T: Real,
    M: Model<T>,
    F: FnMut(&mut Tape<T>, &M) -> Result<Var>,
{
    check_with(model, |m| m.params(), |m| m.params_mut(), eps, coords, |tape, m| f(tape, m))
}

fn check_with<T, S, G, GM, F>(state: &mut S, get: G, get_mut: GM, eps: f64, coords: Coords, mut f: F) -> Result<GradCheckReport>
where
    T: Real,
    S: ?Sized,
    G: Fn(&S) -> &ParamStore<T>,
    GM: Fn(&mut S) -> &mut ParamStore<T>,
    F: FnMut(&mut Tape<T>, &S) -> Result<Var>,
{
    let mut tape = Tape::new();
    get_mut(state).zero_grads();
    let loss = f(&mut tape, state)?;
    check_finite(tape.scalar_value(loss)?)?;
    tape.backward(loss, get_mut(state))?;
    let analytic: Vec<Vec<f64>> = get(state).iter().map(|p| p.grad.to_f64_vec()).collect();

    let mut eval = |state: &S| -> Result<f64> {
        tape.reset();
        let l = f(&mut tape, state)?;
        check_finite(tape.scalar_value(l)?)
    };

    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, coords_checked: 0 };
    let ids: Vec<_> = get(state).ids().collect();
    for id in ids {
        if get(state).get(id).frozen {
            continue;
        }
        let n = get(state).get(id).value.len();
        let picks: Vec<usize> = match coords {
            Coords::All => (0..n).collect(),
            Coords::Sample { per_param, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id.0 as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let mut v = sample(&mut rng, n, per_param.min(n)).into_vec();
                v.sort_unstable();
                v
            }
        };
        for k in picks {
            let orig = get(state).get(id).value.data()[k];
            get_mut(state).get_mut(id).value.data_mut()[k] = T::of(orig.as_f64() + eps);
            let plus = eval(state);
            get_mut(state).get_mut(id).value.data_mut()[k] = T::of(orig.as_f64() - eps);
            let minus = eval(state);
            get_mut(state).get_mut(id).value.data_mut()[k] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let err = relative_error(analytic[id.0][k], numeric);
            report.coords_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((get(state).get(id).name.clone(), k));
            }
        }
    }
    Ok(report)
}

fn check_finite<T: Real>(v: T) -> Result<f64> {
    let v = v.as_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("non-finite loss {v} during gradient check")))
    }
}
