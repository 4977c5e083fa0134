//! Automatic differentiation: forward-mode jets in the reference coordinates
//! and a reverse-mode tape for parameter gradients.
//!
//! The two compose: evaluating a network on jets whose coefficients are tape
//! variables yields input derivatives that are themselves differentiable with
//! respect to the parameters. All losses in this crate are trained through
//! that path; there is no finite differencing anywhere outside of tests.

pub mod jet;
pub mod scalar;
pub mod tape;

pub use jet::{Activation, InputJet, J1, J2};
pub use scalar::{ActScalar, Scalar};
pub use tape::Var;

use crate::error::{Error, Result};

/// Requested derivative depth for [`jet_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOrder {
    First,
    Second,
}

/// Value and input derivatives of a map at one reference point.
///
/// `d2` is present only for second-order evaluation and is symmetric in its
/// two coordinate indices by construction.
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub value: Vec<f64>,
    pub d1: Vec<[f64; 2]>,
    pub d2: Option<Vec<[[f64; 2]; 2]>>,
}

/// A twice-differentiable map from the reference square/disc into R^n.
pub trait C2Map {
    fn out_dim(&self) -> usize;
    fn eval_j1(&self, xi: [f64; 2]) -> Vec<J1<f64>>;
    fn eval_j2(&self, xi: [f64; 2]) -> Vec<J2<f64>>;
}

/// Evaluate `f` with exact derivatives up to the requested order.
///
/// Errors if any output coefficient is non-finite (domain violations never
/// propagate as silent NaN).
pub fn jet_eval(f: &dyn C2Map, xi: [f64; 2], order: JetOrder) -> Result<Jet2> {
    let nonfinite = || Error::JetNonFinite { xi1: xi[0], xi2: xi[1] };
    match order {
        JetOrder::First => {
            let js = f.eval_j1(xi);
            let mut value = Vec::with_capacity(js.len());
            let mut d1 = Vec::with_capacity(js.len());
            for j in &js {
                if !(j.v.is_finite() && j.dx.is_finite() && j.dy.is_finite()) {
                    return Err(nonfinite());
                }
                value.push(j.v);
                d1.push([j.dx, j.dy]);
            }
            Ok(Jet2 { value, d1, d2: None })
        }
        JetOrder::Second => {
            let js = f.eval_j2(xi);
            let mut value = Vec::with_capacity(js.len());
            let mut d1 = Vec::with_capacity(js.len());
            let mut d2 = Vec::with_capacity(js.len());
            for j in &js {
                let coeffs = [j.v, j.dx, j.dy, j.dxx, j.dxy, j.dyy];
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(nonfinite());
                }
                value.push(j.v);
                d1.push([j.dx, j.dy]);
                d2.push([[j.dxx, j.dxy], [j.dxy, j.dyy]]);
            }
            Ok(Jet2 { value, d1, d2: Some(d2) })
        }
    }
}

/// Gradient of a recorded scalar with respect to a parameter vector.
///
/// Resets the thread-local tape, records `f` over leaf variables carrying
/// `params`, and returns `(f(params), df/dparams)`. Repeated calls with the
/// same inputs replay the identical computation and reproduce the value
/// bitwise.
pub fn param_grad<F>(params: &[f64], f: F) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&[Var]) -> Var,
{
    tape::reset();
    let vars = tape::leaves(params);
    let y = f(&vars);
    if !y.val().is_finite() {
        return Err(Error::NonFinite { context: "param_grad scalar".into(), index: 0 });
    }
    let mut grad = vec![0.0; params.len()];
    tape::backward_weighted(y, 1.0, &mut grad);
    tape::reset();
    Ok((y.val(), grad))
}
