//! Field approximator: a dense multilayer perceptron over the two reference
//! coordinates, plus trial-function factors that impose Dirichlet conditions
//! exactly by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ActScalar, Activation, InputJet, Scalar, J1, J2};
use crate::kinematics::FieldJet;

/// Multiplicative Dirichlet lifting applied to the raw network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    /// No constraint; all outputs raw.
    None,
    /// All outputs vanish on the edge `xi1 = -1/2`: factor `xi1 + 1/2`.
    OneSidedClamp,
    /// All outputs vanish on all four edges of the centered unit square:
    /// factor `[(xi1)^2 - 1/4][(xi2)^2 - 1/4]`.
    FullyClampedSquare,
    /// Cylinder-panel supports: displacements 2 and 3 vanish at the ends
    /// `xi1 = +-1/2` via `(xi1)^2 - 1/4`; the axial displacement is scaled by
    /// `(xi1)^2 + (xi2)^2` to suppress the rigid translation mode; rotations
    /// stay unconstrained.
    CylinderEnds,
    /// All outputs vanish on the unit circle: factor `[1 - rho^2]/2`.
    DiscClamp,
}

/// Per-output trial factors as exact second-order jets at `xi`.
pub fn trial_factors(kind: TrialKind, xi: [f64; 2]) -> [Option<J2<f64>>; 5] {
    let [x, y] = J2::<f64>::seed(xi[0], xi[1]);
    let q = J2::lit(0.25);
    match kind {
        TrialKind::None => [None; 5],
        TrialKind::OneSidedClamp => {
            let f = x + J2::lit(0.5);
            [Some(f); 5]
        }
        TrialKind::FullyClampedSquare => {
            let f = (x * x - q) * (y * y - q);
            [Some(f); 5]
        }
        TrialKind::CylinderEnds => {
            let ends = x * x - q;
            let rigid = x * x + y * y;
            [Some(rigid), Some(ends), Some(ends), None, None]
        }
        TrialKind::DiscClamp => {
            let f = (J2::lit(1.0) - x * x - y * y) * J2::lit(0.5);
            [Some(f); 5]
        }
    }
}

/// Dense MLP with a flat parameter vector (per layer: row-major weights, then
/// biases). Hidden layers share one activation; the output layer is linear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub params: Vec<f64>,
}

/// Total parameter count for a stack of dense layers.
pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; deterministic per seed.
    pub fn init(widths: Vec<usize>, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(&widths));
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp { widths, activation, params }
    }

    /// All-zero parameters (output identically zero).
    pub fn zeros(widths: Vec<usize>, activation: Activation) -> Self {
        let n = param_count(&widths);
        Mlp { widths, activation, params: vec![0.0; n] }
    }

    pub fn out_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Raw outputs and their coordinate partials; `second` requests the
    /// second-order jet.
    pub fn forward_jet(&self, xi: [f64; 2], second: bool) -> FieldJet {
        if second {
            let out: [J2<f64>; 5] =
                forward::<f64, J2<f64>>(&self.widths, self.activation, &self.params, xi);
            let mut fj = FieldJet {
                value: [0.0; 5],
                d1: [[0.0; 2]; 5],
                d2: Some([[[0.0; 2]; 2]; 5]),
            };
            for i in 0..5 {
                fj.value[i] = out[i].v;
                fj.d1[i] = [out[i].dx, out[i].dy];
                fj.d2.as_mut().unwrap()[i] =
                    [[out[i].dxx, out[i].dxy], [out[i].dxy, out[i].dyy]];
            }
            fj
        } else {
            let out: [J1<f64>; 5] =
                forward::<f64, J1<f64>>(&self.widths, self.activation, &self.params, xi);
            let mut fj = FieldJet { value: [0.0; 5], d1: [[0.0; 2]; 5], d2: None };
            for i in 0..5 {
                fj.value[i] = out[i].v;
                fj.d1[i] = [out[i].dx, out[i].dy];
            }
            fj
        }
    }

    /// Forward pass with Dirichlet lifting folded in.
    pub fn constrained_jet(&self, xi: [f64; 2], second: bool, trial: TrialKind) -> FieldJet {
        apply_trial(&self.forward_jet(xi, second), trial, xi)
    }
}

/// Generic forward pass: `S` is the parameter scalar (plain number or tape
/// variable), `J` the input-jet order. Five outputs total.
pub fn forward<S: ActScalar, J: InputJet<S>>(
    widths: &[usize],
    activation: Activation,
    params: &[S],
    xi: [f64; 2],
) -> [J; 5] {
    debug_assert_eq!(*widths.last().unwrap(), 5);
    let h = forward_vec(widths, activation, params, xi);
    [h[0], h[1], h[2], h[3], h[4]]
}

/// Forward pass for arbitrary output width (the thickness network has one).
pub fn forward_vec<S: ActScalar, J: InputJet<S>>(
    widths: &[usize],
    activation: Activation,
    params: &[S],
    xi: [f64; 2],
) -> Vec<J> {
    let seed = J::seed_point(xi);
    let mut h: Vec<J> = seed.to_vec();
    let mut off = 0usize;
    let last = widths.len() - 2;
    for (l, w) in widths.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[off..off + n_in * n_out];
        let biases = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let mut next = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &weights[o * n_in..(o + 1) * n_in];
            let mut z = J::matvec_entry(row, &h, biases[o]);
            if l != last {
                z = z.activate(activation);
            }
            next.push(z);
        }
        h = next;
    }
    h
}

/// Generic forward pass with trial factors multiplied in (product rule
/// handled by the jet algebra, truncated to the jet order in use).
pub fn forward_constrained<S: ActScalar, J: InputJet<S>>(
    widths: &[usize],
    activation: Activation,
    params: &[S],
    xi: [f64; 2],
    trial: TrialKind,
) -> [J; 5] {
    let mut out: [J; 5] = forward(widths, activation, params, xi);
    if !matches!(trial, TrialKind::None) {
        let factors = trial_factors(trial, xi);
        for i in 0..5 {
            if let Some(f) = factors[i] {
                out[i] = out[i].mul_jet(J::lift_jet(f));
            }
        }
    }
    out
}

/// Multiply a plain-number field jet by the trial factors, with
/// product-rule-correct derivatives.
pub fn apply_trial(fj: &FieldJet, trial: TrialKind, xi: [f64; 2]) -> FieldJet {
    if matches!(trial, TrialKind::None) {
        return fj.clone();
    }
    let factors = trial_factors(trial, xi);
    let mut out = fj.clone();
    for i in 0..5 {
        let Some(f) = factors[i] else { continue };
        match fj.d2 {
            Some(d2) => {
                let j = J2 {
                    v: fj.value[i],
                    dx: fj.d1[i][0],
                    dy: fj.d1[i][1],
                    dxx: d2[i][0][0],
                    dxy: d2[i][0][1],
                    dyy: d2[i][1][1],
                };
                let p = j * f;
                out.value[i] = p.v;
                out.d1[i] = [p.dx, p.dy];
                out.d2.as_mut().unwrap()[i] = [[p.dxx, p.dxy], [p.dxy, p.dyy]];
            }
            None => {
                let j = J1 { v: fj.value[i], dx: fj.d1[i][0], dy: fj.d1[i][1] };
                let p = j * J1 { v: f.v, dx: f.dx, dy: f.dy };
                out.value[i] = p.v;
                out.d1[i] = [p.dx, p.dy];
            }
        }
    }
    out
}
