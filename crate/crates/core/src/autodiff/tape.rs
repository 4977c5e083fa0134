//! Reverse-mode tape over scalar operations.
//!
//! Every non-constant result records one node holding `(parent, d out/d parent)`
//! pairs; the backward sweep is a single reverse pass accumulating adjoints.
//! The tape is thread-local: each thread records and differentiates
//! independently, which keeps loss evaluation embarrassingly parallel across
//! collocation points with a deterministic, ordered reduction done by the
//! caller.
//!
//! Constants are represented without nodes (sentinel index), and arithmetic
//! folds identities like `x + 0`, `x * 1`, `x * 0` so that lifted jet
//! coefficients that are structurally zero cost nothing.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{gelu_family, sigmoid_family, tanh_family, ActScalar, Scalar};

const CONST_IDX: u32 = u32::MAX;

/// A value recorded on the thread-local tape (or a free constant).
#[derive(Debug, Clone, Copy)]
pub struct Var {
    idx: u32,
    val: f64,
}

#[derive(Default)]
struct TapeData {
    /// Prefix offsets into `arg_p`/`arg_c`; node `i` owns `starts[i]..starts[i+1]`.
    starts: Vec<u32>,
    arg_p: Vec<u32>,
    arg_c: Vec<f64>,
    grads: Vec<f64>,
}

impl TapeData {
    fn num_nodes(&self) -> usize {
        self.starts.len().saturating_sub(1)
    }

    fn ensure_init(&mut self) {
        if self.starts.is_empty() {
            self.starts.push(0);
        }
    }

    fn push_end(&mut self) -> u32 {
        let idx = self.num_nodes() as u32;
        self.starts.push(self.arg_p.len() as u32);
        idx
    }
}

thread_local! {
    static TAPE: RefCell<TapeData> = RefCell::new(TapeData::default());
}

#[inline]
fn with_tape<R>(f: impl FnOnce(&mut TapeData) -> R) -> R {
    TAPE.with(|t| f(&mut t.borrow_mut()))
}

/// Snapshot of the tape length, used to discard per-point subgraphs.
#[derive(Debug, Clone, Copy)]
pub struct Mark {
    nodes: usize,
    args: usize,
}

/// Clear the tape completely.
pub fn reset() {
    with_tape(|t| {
        t.starts.clear();
        t.starts.push(0);
        t.arg_p.clear();
        t.arg_c.clear();
    });
}

/// Record an independent leaf (parameter) variable.
pub fn leaf(val: f64) -> Var {
    with_tape(|t| {
        t.ensure_init();
        let idx = t.push_end();
        Var { idx, val }
    })
}

/// Record a contiguous block of leaves; returned vars have indices `0..n`
/// when called right after [`reset`].
pub fn leaves(vals: &[f64]) -> Vec<Var> {
    with_tape(|t| {
        t.ensure_init();
        vals.iter()
            .map(|&val| {
                let idx = t.push_end();
                Var { idx, val }
            })
            .collect()
    })
}

pub fn num_nodes() -> usize {
    with_tape(|t| t.num_nodes())
}

/// Current tape position; rewindable with [`rewind`].
pub fn mark() -> Mark {
    with_tape(|t| {
        t.ensure_init();
        Mark { nodes: t.num_nodes(), args: t.arg_p.len() }
    })
}

/// Discard everything recorded after `m`. Vars created after the mark become
/// invalid; callers only rewind across per-point subgraphs they own.
pub fn rewind(m: Mark) {
    with_tape(|t| {
        t.starts.truncate(m.nodes + 1);
        t.arg_p.truncate(m.args);
        t.arg_c.truncate(m.args);
    });
}

/// Accumulate `weight * d y / d node_j` into `out[j]` for `j < out.len()`.
///
/// `out` is typically the parameter-gradient buffer; parameters are the first
/// nodes on the tape. Constants have zero gradient and return immediately.
pub fn backward_weighted(y: Var, weight: f64, out: &mut [f64]) {
    if y.idx == CONST_IDX {
        return;
    }
    with_tape(|t| {
        let n = y.idx as usize + 1;
        debug_assert!(n <= t.num_nodes());
        let data = std::mem::take(&mut t.grads);
        let mut grads = data;
        grads.clear();
        grads.resize(n, 0.0);
        grads[y.idx as usize] = 1.0;
        for i in (0..n).rev() {
            let g = grads[i];
            if g == 0.0 {
                continue;
            }
            let s = t.starts[i] as usize;
            let e = t.starts[i + 1] as usize;
            for k in s..e {
                grads[t.arg_p[k] as usize] += t.arg_c[k] * g;
            }
        }
        let m = out.len().min(n);
        for (o, g) in out[..m].iter_mut().zip(&grads[..m]) {
            *o += weight * *g;
        }
        t.grads = grads;
    });
}

impl Var {
    /// A constant; records nothing.
    #[inline]
    pub fn constant(val: f64) -> Var {
        Var { idx: CONST_IDX, val }
    }

    #[inline]
    pub fn val(self) -> f64 {
        self.val
    }

    #[inline]
    fn is_var(self) -> bool {
        self.idx != CONST_IDX
    }

    #[inline]
    fn node1(p: Var, c: f64, val: f64) -> Var {
        with_tape(|t| {
            t.ensure_init();
            t.arg_p.push(p.idx);
            t.arg_c.push(c);
            let idx = t.push_end();
            Var { idx, val }
        })
    }

    #[inline]
    fn node2(p0: Var, c0: f64, p1: Var, c1: f64, val: f64) -> Var {
        with_tape(|t| {
            t.ensure_init();
            t.arg_p.push(p0.idx);
            t.arg_c.push(c0);
            t.arg_p.push(p1.idx);
            t.arg_c.push(c1);
            let idx = t.push_end();
            Var { idx, val }
        })
    }
}

impl Add for Var {
    type Output = Var;
    #[inline]
    fn add(self, r: Var) -> Var {
        let val = self.val + r.val;
        match (self.is_var(), r.is_var()) {
            (false, false) => Var::constant(val),
            (true, false) => {
                if r.val == 0.0 {
                    self
                } else {
                    Var::node1(self, 1.0, val)
                }
            }
            (false, true) => {
                if self.val == 0.0 {
                    r
                } else {
                    Var::node1(r, 1.0, val)
                }
            }
            (true, true) => Var::node2(self, 1.0, r, 1.0, val),
        }
    }
}

impl Sub for Var {
    type Output = Var;
    #[inline]
    fn sub(self, r: Var) -> Var {
        let val = self.val - r.val;
        match (self.is_var(), r.is_var()) {
            (false, false) => Var::constant(val),
            (true, false) => {
                if r.val == 0.0 {
                    self
                } else {
                    Var::node1(self, 1.0, val)
                }
            }
            (false, true) => Var::node1(r, -1.0, val),
            (true, true) => Var::node2(self, 1.0, r, -1.0, val),
        }
    }
}

impl Neg for Var {
    type Output = Var;
    #[inline]
    fn neg(self) -> Var {
        if self.is_var() {
            Var::node1(self, -1.0, -self.val)
        } else {
            Var::constant(-self.val)
        }
    }
}

impl Mul for Var {
    type Output = Var;
    #[inline]
    fn mul(self, r: Var) -> Var {
        let val = self.val * r.val;
        match (self.is_var(), r.is_var()) {
            (false, false) => Var::constant(val),
            (true, false) => match r.val {
                0.0 => Var::constant(0.0),
                1.0 => self,
                c => Var::node1(self, c, val),
            },
            (false, true) => match self.val {
                0.0 => Var::constant(0.0),
                1.0 => r,
                c => Var::node1(r, c, val),
            },
            (true, true) => Var::node2(self, r.val, r, self.val, val),
        }
    }
}

impl Div for Var {
    type Output = Var;
    #[inline]
    fn div(self, r: Var) -> Var {
        if !r.is_var() {
            return self * Var::constant(1.0 / r.val);
        }
        let inv = 1.0 / r.val;
        let val = self.val * inv;
        if !self.is_var() {
            if self.val == 0.0 {
                return Var::constant(0.0);
            }
            return Var::node1(r, -val * inv, val);
        }
        Var::node2(self, inv, r, -val * inv, val)
    }
}

impl Scalar for Var {
    #[inline]
    fn lit(x: f64) -> Self {
        Var::constant(x)
    }
    #[inline]
    fn value(self) -> f64 {
        self.val
    }

    fn sin(self) -> Self {
        if self.is_var() {
            Var::node1(self, self.val.cos(), self.val.sin())
        } else {
            Var::constant(self.val.sin())
        }
    }

    fn cos(self) -> Self {
        if self.is_var() {
            Var::node1(self, -self.val.sin(), self.val.cos())
        } else {
            Var::constant(self.val.cos())
        }
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        if self.is_var() {
            Var::node1(self, 0.5 / s, s)
        } else {
            Var::constant(s)
        }
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        if self.is_var() {
            Var::node1(self, e, e)
        } else {
            Var::constant(e)
        }
    }

    fn dot<I: IntoIterator<Item = (Self, Self)>>(pairs: I, init: Self) -> Self {
        with_tape(|t| {
            t.ensure_init();
            let args_before = t.arg_p.len();
            let mut val = init.val;
            if init.is_var() {
                t.arg_p.push(init.idx);
                t.arg_c.push(1.0);
            }
            for (a, b) in pairs {
                val += a.val * b.val;
                if a.is_var() && b.val != 0.0 {
                    t.arg_p.push(a.idx);
                    t.arg_c.push(b.val);
                }
                if b.is_var() && a.val != 0.0 {
                    t.arg_p.push(b.idx);
                    t.arg_c.push(a.val);
                }
            }
            if t.arg_p.len() == args_before {
                return Var::constant(val);
            }
            let idx = t.push_end();
            Var { idx, val }
        })
    }
}

impl ActScalar for Var {
    fn gelu_d012(self) -> (Self, Self, Self) {
        let (g, g1, g2, g3) = gelu_family(self.val);
        if !self.is_var() {
            return (Var::constant(g), Var::constant(g1), Var::constant(g2));
        }
        (
            Var::node1(self, g1, g),
            Var::node1(self, g2, g1),
            Var::node1(self, g3, g2),
        )
    }

    fn tanh_d012(self) -> (Self, Self, Self) {
        let (g, g1, g2, g3) = tanh_family(self.val);
        if !self.is_var() {
            return (Var::constant(g), Var::constant(g1), Var::constant(g2));
        }
        (
            Var::node1(self, g1, g),
            Var::node1(self, g2, g1),
            Var::node1(self, g3, g2),
        )
    }

    fn sigmoid_d012(self) -> (Self, Self, Self) {
        let (g, g1, g2, g3) = sigmoid_family(self.val);
        if !self.is_var() {
            return (Var::constant(g), Var::constant(g1), Var::constant(g2));
        }
        (
            Var::node1(self, g1, g),
            Var::node1(self, g2, g1),
            Var::node1(self, g3, g2),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad_of<F: Fn(&[Var]) -> Var>(params: &[f64], f: F) -> (f64, Vec<f64>) {
        reset();
        let vars = leaves(params);
        let y = f(&vars);
        let mut g = vec![0.0; params.len()];
        backward_weighted(y, 1.0, &mut g);
        (y.val(), g)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = |p: &[Var]| {
            let s = p[0].sin() * p[1] + (p[2] * p[2] + Var::constant(1.0)).sqrt() / p[1].exp();
            let (g, _, _) = (s * p[0]).gelu_d012();
            g + p[2].cos()
        };
        let p0 = [0.7, -0.4, 1.2];
        let (_, grad) = grad_of(&p0, f);
        let h = 1e-6;
        for i in 0..3 {
            let mut pp = p0;
            pp[i] += h;
            let (fp, _) = grad_of(&pp, f);
            pp[i] -= 2.0 * h;
            let (fm, _) = grad_of(&pp, f);
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() <= 1e-8 * (1.0 + fd.abs()),
                "param {i}: ad {} vs fd {}",
                grad[i],
                fd
            );
        }
    }

    #[test]
    fn fused_dot_matches_unfused() {
        reset();
        let vars = leaves(&[0.3, -1.7, 2.2, 0.9]);
        let xs = [vars[2], vars[3], Var::constant(4.0)];
        let ws = [vars[0], vars[1], vars[0]];
        let fused = Var::dot(ws.iter().copied().zip(xs.iter().copied()), vars[1]);
        let mut unfused = vars[1];
        for (w, x) in ws.iter().zip(xs.iter()) {
            unfused = unfused + *w * *x;
        }
        assert_eq!(fused.val(), unfused.val());
        let mut gf = vec![0.0; 4];
        let mut gu = vec![0.0; 4];
        backward_weighted(fused, 1.0, &mut gf);
        backward_weighted(unfused, 1.0, &mut gu);
        for (a, b) in gf.iter().zip(gu.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rewind_discards_per_point_subgraphs() {
        reset();
        let p = leaves(&[1.5, -0.25]);
        let m = mark();
        let mut grad = vec![0.0; 2];
        let mut vals = Vec::new();
        for k in 0..3 {
            let c = Var::constant(k as f64 + 1.0);
            let y = (p[0] * c).sin() * p[1];
            vals.push(y.val());
            backward_weighted(y, 1.0, &mut grad);
            rewind(m);
        }
        assert_eq!(num_nodes(), 2);
        // Same computation without rewinding gives the same accumulated grad.
        reset();
        let p = leaves(&[1.5, -0.25]);
        let mut grad2 = vec![0.0; 2];
        for k in 0..3 {
            let c = Var::constant(k as f64 + 1.0);
            let y = (p[0] * c).sin() * p[1];
            backward_weighted(y, 1.0, &mut grad2);
        }
        assert_eq!(grad, grad2);
    }

    #[test]
    fn identity_folds_preserve_variable_identity() {
        reset();
        let p = leaves(&[2.0]);
        let x = p[0];
        let same = (x + Var::constant(0.0)) * Var::constant(1.0);
        assert_eq!(num_nodes(), 1);
        assert_eq!(same.val(), 2.0);
        let zero = x * Var::constant(0.0);
        assert_eq!(zero.val(), 0.0);
        let mut g = vec![0.0; 1];
        backward_weighted(zero, 1.0, &mut g);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn repeated_evaluation_is_bitwise_deterministic() {
        let run = || {
            reset();
            let p = leaves(&[0.123_456_789, -9.87]);
            let y = (p[0].exp() * p[1].sin() + p[0] / p[1]).sqrt();
            let mut g = vec![0.0; 2];
            backward_weighted(y, 1.0, &mut g);
            (y.val().to_bits(), g[0].to_bits(), g[1].to_bits())
        };
        assert_eq!(run(), run());
    }
}
