//! Loss assembly over collocation point sets, the training loop, and error
//! metrics.
//!
//! Losses come in two flavors: the weak form (total potential energy as a
//! low-discrepancy quadrature average) and the strong form (mean squared
//! equilibrium residuals plus natural/essential boundary terms). Both share
//! the per-point pipelines in [`pipeline`] and differentiate w.r.t. network
//! parameters through the reverse-mode tape, rewound after every point.

pub mod metrics;
pub mod optim;
pub mod pipeline;

use serde::{Deserialize, Serialize};

use crate::autodiff::{tape, Scalar, Var, J1};
use crate::constitutive::lame;
use crate::error::{Error, Result};
use crate::geometry::{geom_point, Chart, GeomPoint};
use crate::sampling::PointSet;

pub use pipeline::FieldNet;

/// Elastic material data plus the uniform shell thickness.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub thickness: f64,
}

/// Distributed load as a global Cartesian vector field. The displacement
/// outputs live in the same global frame, so the external work density is
/// the plain dot product; the strong form sees the projected local
/// components instead, which is the same pairing after a change of basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LoadSpec {
    /// `f_hat = (0, 0, fz)`, uniform vertical load.
    Vertical { fz: f64 },
    /// `f_hat = (0, 0, fz exp(-(rho^2)/width))`, centered on the chart.
    VerticalGaussian { fz: f64, width: f64 },
}

impl LoadSpec {
    pub fn f_hat(&self, xi: [f64; 2]) -> [f64; 3] {
        match *self {
            LoadSpec::Vertical { fz } => [0.0, 0.0, fz],
            LoadSpec::VerticalGaussian { fz, width } => {
                let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                [0.0, 0.0, fz * (-r2 / width).exp()]
            }
        }
    }
}

/// Interior collocation point with cached geometry and load data.
#[derive(Debug, Clone)]
pub struct InteriorPoint {
    pub xi: [f64; 2],
    pub gp: GeomPoint,
    /// Global load vector at the point (weak-form work term).
    pub f_hat: [f64; 3],
    /// Contravariant tangential load components (strong form).
    pub f_con: [f64; 2],
    /// Normal load component (strong form).
    pub f3: f64,
}

/// Boundary collocation point with cached geometry and conormal.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub xi: [f64; 2],
    pub gp: GeomPoint,
    pub nu: [f64; 2],
}

/// Geometry and load data precomputed once per run; training never
/// re-evaluates chart derivatives.
#[derive(Debug, Clone)]
pub struct ProblemCache {
    pub interior: Vec<InteriorPoint>,
    pub neumann: Vec<BoundaryPoint>,
    pub dirichlet: Vec<BoundaryPoint>,
    /// Reference-domain area, the quadrature prefactor.
    pub domain_area: f64,
}

/// Precompute geometry (second-derivative data only when `strong`) and local
/// load components for every collocation point.
pub fn build_cache(
    chart: &Chart,
    points: &PointSet,
    load: &LoadSpec,
    strong: bool,
) -> Result<ProblemCache> {
    let mut interior = Vec::with_capacity(points.interior.len());
    for &xi in &points.interior {
        let gp = geom_point(chart, xi, strong)?;
        let f_hat = load.f_hat(xi);
        let (f_con, f3) = crate::statics::load_local(f_hat, &gp.g);
        interior.push(InteriorPoint { xi, gp, f_hat, f_con, f3 });
    }
    let boundary = |samples: &[crate::sampling::BoundarySample]| -> Result<Vec<BoundaryPoint>> {
        samples
            .iter()
            .map(|s| {
                Ok(BoundaryPoint { xi: s.xi, gp: geom_point(chart, s.xi, false)?, nu: s.nu })
            })
            .collect()
    };
    Ok(ProblemCache {
        interior,
        neumann: boundary(&points.boundary_neumann)?,
        dirichlet: boundary(&points.boundary_dirichlet)?,
        domain_area: chart.domain().area(),
    })
}

/// Which loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Weak,
    Strong,
}

/// Potential-energy loss and its parts; `total = membrane + bending + shear
/// - external`, each part already carrying the quadrature weight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeakLoss {
    pub membrane: f64,
    pub bending: f64,
    pub shear: f64,
    pub external: f64,
    pub total: f64,
}

/// Mean-squared residual loss; `total = l_r + lambda_bc (l_bc_n + l_bc_d)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StrongLoss {
    pub l_r: f64,
    pub l_bc_n: f64,
    pub l_bc_d: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum LossValue {
    Weak(WeakLoss),
    Strong(StrongLoss),
}

impl LossValue {
    pub fn total(&self) -> f64 {
        match self {
            LossValue::Weak(w) => w.total,
            LossValue::Strong(s) => s.total,
        }
    }
}

/// Everything fixed during one training run.
pub struct LossEnv<'a> {
    pub net: &'a FieldNet,
    pub cache: &'a ProblemCache,
    pub material: Material,
    pub lambda_bc: f64,
    pub kind: LossKind,
}

impl<'a> LossEnv<'a> {
    fn lam_mu(&self) -> (f64, f64) {
        lame(self.material.youngs_modulus, self.material.poisson_ratio)
    }

    /// Loss value only (plain-number pipeline).
    pub fn value(&self, params: &[f64]) -> Result<LossValue> {
        match self.kind {
            LossKind::Weak => Ok(LossValue::Weak(self.weak(params, None)?)),
            LossKind::Strong => Ok(LossValue::Strong(self.strong(params, None)?)),
        }
    }

    /// Loss and gradient w.r.t. parameters; `grad` is overwritten.
    pub fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> Result<LossValue> {
        if grad.len() != params.len() {
            return Err(Error::ParamLength { got: grad.len(), expected: params.len() });
        }
        grad.fill(0.0);
        match self.kind {
            LossKind::Weak => Ok(LossValue::Weak(self.weak(params, Some(grad))?)),
            LossKind::Strong => Ok(LossValue::Strong(self.strong(params, Some(grad))?)),
        }
    }

    fn weak(&self, params: &[f64], grad: Option<&mut [f64]>) -> Result<WeakLoss> {
        let lm = self.lam_mu();
        let t = self.material.thickness;
        let n = self.cache.interior.len();
        let w0 = self.cache.domain_area / n as f64;
        let mut parts = [0.0; 4];
        let mut total = 0.0;
        match grad {
            None => {
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let (em, eb, es, wx) =
                        pipeline::weak_point_parts::<f64>(self.net, params, pt, lm, t);
                    let w = w0 * pt.gp.g.sqrt_a;
                    let density = em + eb + es - wx;
                    if !density.is_finite() {
                        return Err(Error::NonFinite { context: "weak loss density".into(), index: i });
                    }
                    parts[0] += w * em;
                    parts[1] += w * eb;
                    parts[2] += w * es;
                    parts[3] += w * wx;
                    total += w * density;
                }
            }
            Some(grad) => {
                tape::reset();
                let leaves = tape::leaves(params);
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let mark = tape::mark();
                    let (em, eb, es, wx) =
                        pipeline::weak_point_parts::<Var>(self.net, &leaves, pt, lm, Var::lit(t));
                    let y = em + eb + es - wx;
                    if !y.value().is_finite() {
                        tape::reset();
                        return Err(Error::NonFinite { context: "weak loss density".into(), index: i });
                    }
                    let w = w0 * pt.gp.g.sqrt_a;
                    tape::backward_weighted(y, w, grad);
                    parts[0] += w * em.value();
                    parts[1] += w * eb.value();
                    parts[2] += w * es.value();
                    parts[3] += w * wx.value();
                    total += w * y.value();
                    tape::rewind(mark);
                }
                tape::reset();
            }
        }
        Ok(WeakLoss {
            membrane: parts[0],
            bending: parts[1],
            shear: parts[2],
            external: parts[3],
            total,
        })
    }

    fn strong(&self, params: &[f64], grad: Option<&mut [f64]>) -> Result<StrongLoss> {
        let lm = self.lam_mu();
        let t = self.material.thickness;
        let n_i = self.cache.interior.len();
        let n_n = self.cache.neumann.len();
        let n_d = self.cache.dirichlet.len();
        let (mut l_r, mut l_bc_n, mut l_bc_d) = (0.0, 0.0, 0.0);

        match grad {
            None => {
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let res = pipeline::strong_point_residuals::<f64>(
                        self.net, params, pt, lm, J1::lit(t),
                    );
                    let sq: f64 = res.iter().map(|r| r * r).sum();
                    if !sq.is_finite() {
                        return Err(Error::NonFinite { context: "equilibrium residual".into(), index: i });
                    }
                    l_r += sq / n_i as f64;
                }
                for (i, bp) in self.cache.neumann.iter().enumerate() {
                    let bc = pipeline::neumann_point_bc::<f64>(self.net, params, bp, lm, t);
                    let sq: f64 = bc.iter().map(|r| r * r).sum();
                    if !sq.is_finite() {
                        return Err(Error::NonFinite { context: "natural BC residual".into(), index: i });
                    }
                    l_bc_n += sq / n_n as f64;
                }
                for bp in &self.cache.dirichlet {
                    let vals = pipeline::dirichlet_point_values::<f64>(self.net, params, bp);
                    l_bc_d += vals.iter().map(|v| v * v).sum::<f64>() / n_d as f64;
                }
            }
            Some(grad) => {
                tape::reset();
                let leaves = tape::leaves(params);
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let mark = tape::mark();
                    let res = pipeline::strong_point_residuals::<Var>(
                        self.net,
                        &leaves,
                        pt,
                        lm,
                        J1::lit(t),
                    );
                    let mut sq = Var::lit(0.0);
                    for r in res {
                        sq = sq + r * r;
                    }
                    if !sq.value().is_finite() {
                        tape::reset();
                        return Err(Error::NonFinite { context: "equilibrium residual".into(), index: i });
                    }
                    tape::backward_weighted(sq, 1.0 / n_i as f64, grad);
                    l_r += sq.value() / n_i as f64;
                    tape::rewind(mark);
                }
                for (i, bp) in self.cache.neumann.iter().enumerate() {
                    let mark = tape::mark();
                    let bc = pipeline::neumann_point_bc::<Var>(self.net, &leaves, bp, lm, Var::lit(t));
                    let mut sq = Var::lit(0.0);
                    for r in bc {
                        sq = sq + r * r;
                    }
                    if !sq.value().is_finite() {
                        tape::reset();
                        return Err(Error::NonFinite { context: "natural BC residual".into(), index: i });
                    }
                    tape::backward_weighted(sq, self.lambda_bc / n_n as f64, grad);
                    l_bc_n += sq.value() / n_n as f64;
                    tape::rewind(mark);
                }
                for bp in &self.cache.dirichlet {
                    let mark = tape::mark();
                    let vals = pipeline::dirichlet_point_values::<Var>(self.net, &leaves, bp);
                    let mut sq = Var::lit(0.0);
                    for v in vals {
                        sq = sq + v * v;
                    }
                    tape::backward_weighted(sq, self.lambda_bc / n_d as f64, grad);
                    l_bc_d += sq.value() / n_d as f64;
                    tape::rewind(mark);
                }
                tape::reset();
            }
        }
        Ok(StrongLoss {
            l_r,
            l_bc_n,
            l_bc_d,
            total: l_r + self.lambda_bc * (l_bc_n + l_bc_d),
        })
    }
}

/// Optimizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Lbfgs,
    Adam { lr: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// Loss blows past `divergence_factor * |initial|` -> abort.
    pub divergence_factor: f64,
    pub lbfgs_history: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            optimizer: OptimizerKind::Lbfgs,
            divergence_factor: 1e3,
            lbfgs_history: 100,
        }
    }
}

/// Per-epoch feedback from the caller: an error value to record and whether
/// to stop early.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpochControl {
    pub record_error: Option<f64>,
    pub stop: bool,
}

/// Final state of a training run. History lengths equal epochs completed.
#[derive(Debug, Clone, Serialize)]
pub struct TrainState {
    pub params: Vec<f64>,
    pub epochs_completed: usize,
    pub loss_history: Vec<f64>,
    pub error_history: Vec<f64>,
    pub line_search_failures: usize,
    pub loss_evals: usize,
    pub wall_seconds: f64,
    pub last_loss: LossValue,
}

/// Full-batch training. One epoch is one optimizer outer iteration; the hook
/// sees `(epoch, loss, params)` after each epoch.
pub fn train(
    env: &LossEnv,
    mut params: Vec<f64>,
    cfg: &TrainConfig,
    mut hook: impl FnMut(usize, f64, &[f64]) -> EpochControl,
) -> Result<TrainState> {
    let start = std::time::Instant::now();
    let n = params.len();
    let mut g = vec![0.0; n];
    let mut f = env.value_grad(&params, &mut g)?.total();
    let f_init = f;
    let mut loss_evals = 1usize;

    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut error_history = Vec::new();
    let mut line_search_failures = 0usize;
    let mut epochs_completed = 0usize;

    let diverged = |f: f64, epoch: usize| -> Result<()> {
        if !f.is_finite() || f > cfg.divergence_factor * (f_init.abs() + 1e-12) {
            Err(Error::Diverged { epoch, loss: f, initial: f_init })
        } else {
            Ok(())
        }
    };
    diverged(f, 0)?;

    enum Opt {
        L(optim::Lbfgs),
        A(optim::Adam),
    }
    let mut opt = match cfg.optimizer {
        OptimizerKind::Lbfgs => Opt::L(optim::Lbfgs::new(optim::LbfgsConfig {
            history: cfg.lbfgs_history,
            ..optim::LbfgsConfig::default()
        })),
        OptimizerKind::Adam { lr } => Opt::A(optim::Adam::new(lr, n)),
    };

    for epoch in 1..=cfg.epochs {
        match &mut opt {
            Opt::L(lbfgs) => {
                let mut evals = 0usize;
                let res = lbfgs.step(&mut params, &mut f, &mut g, &mut |p, go| {
                    evals += 1;
                    Ok(env.value_grad(p, go)?.total())
                })?;
                loss_evals += evals;
                if res.line_search_failed {
                    line_search_failures += 1;
                }
            }
            Opt::A(adam) => {
                adam.step(&mut params, &g);
                f = env.value_grad(&params, &mut g)?.total();
                loss_evals += 1;
            }
        }
        epochs_completed = epoch;
        loss_history.push(f);
        diverged(f, epoch)?;
        let control = hook(epoch, f, &params);
        if let Some(e) = control.record_error {
            error_history.push(e);
        }
        if control.stop {
            break;
        }
    }

    let last_loss = env.value(&params)?;
    Ok(TrainState {
        params,
        epochs_completed,
        loss_history,
        error_history,
        line_search_failures,
        loss_evals,
        wall_seconds: start.elapsed().as_secs_f64(),
        last_loss,
    })
}
