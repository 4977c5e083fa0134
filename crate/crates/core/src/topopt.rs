//! Thickness-distribution compliance minimization: a second network maps the
//! reference coordinates to a bounded thickness field, and an Augmented
//! Lagrangian outer loop enforces equilibrium (strong-form residuals plus
//! natural boundary conditions) and the volume constraint while the inner
//! solver jointly trains both networks.

use serde::{Deserialize, Serialize};

use crate::autodiff::{tape, ActScalar, Activation, InputJet, Scalar, Var, J1, J2};
use crate::constitutive::{elasticity_tensors, energy_densities, resultants};
use crate::error::{Error, Result};
use crate::kinematics::{strains_t, to_local_t, LiftedGeom, Strains};
use crate::network::{forward_constrained, forward_vec};
use crate::statics::strong_residuals;
use crate::training::optim::{Lbfgs, LbfgsConfig};
use crate::training::pipeline::FieldNet;
use crate::training::{InteriorPoint, Material, ProblemCache};

/// Thickness network: raw output squashed into `(t_min, t_max)` through a
/// sigmoid, so the bounds hold for any parameter values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThicknessNet {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub t_min: f64,
    pub t_max: f64,
}

impl ThicknessNet {
    /// Thickness jet at a point (value and coordinate derivatives flow
    /// through the squash).
    pub fn thickness_jet<S: ActScalar, J: InputJet<S>>(&self, params: &[S], xi: [f64; 2]) -> J {
        debug_assert_eq!(*self.widths.last().unwrap(), 1);
        let raw: Vec<J> = forward_vec(&self.widths, self.activation, params, xi);
        let sig = raw[0].sigmoid();
        J::matvec_entry(&[S::lit(self.t_max - self.t_min)], &[sig], S::lit(self.t_min))
    }

    /// Plain thickness value.
    pub fn value(&self, params: &[f64], xi: [f64; 2]) -> f64 {
        let j: J1<f64> = self.thickness_jet(params, xi);
        j.v
    }

    /// Bias for the last layer that makes a zero-weight network output the
    /// uniform thickness `t`.
    pub fn uniform_bias(&self, t: f64) -> f64 {
        let frac = (t - self.t_min) / (self.t_max - self.t_min);
        assert!(frac > 0.0 && frac < 1.0, "uniform thickness outside bounds");
        (frac / (1.0 - frac)).ln()
    }
}

/// Augmented Lagrangian bookkeeping. Constraint order: five equilibrium
/// residuals per interior point, then five natural-BC components per Neumann
/// point, then the volume residual (or volume alone in volume-only mode).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ALState {
    pub mu: f64,
    pub lambdas: Vec<f64>,
    /// Residuals recorded from the last inner solve.
    pub h: Vec<f64>,
    /// Previous `max|h|`, driving the penalty growth schedule.
    pub prev_h_inf: f64,
}

pub const MU_CAP: f64 = 1e6;
pub const MU_GROWTH: f64 = 2.0;
/// Penalty grows when `max|h|` fails to shrink below this factor.
pub const STAGNATION_FACTOR: f64 = 0.5;

impl ALState {
    pub fn new(n_constraints: usize, mu_init: f64) -> Self {
        assert!(mu_init > 0.0);
        ALState {
            mu: mu_init,
            lambdas: vec![0.0; n_constraints],
            h: vec![0.0; n_constraints],
            prev_h_inf: f64::INFINITY,
        }
    }

    pub fn h_inf(&self) -> f64 {
        self.h.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Record the residuals from a finished inner solve.
    pub fn record(&mut self, h: Vec<f64>) {
        assert_eq!(h.len(), self.lambdas.len());
        self.h = h;
    }

    /// First-order multiplier update `lambda += 2 mu h`, then penalty growth
    /// if the constraint norm stagnated (less than a 50% drop), capped.
    pub fn multiplier_update(&mut self) {
        for (l, &hi) in self.lambdas.iter_mut().zip(&self.h) {
            *l += 2.0 * self.mu * hi;
        }
        let h_inf = self.h_inf();
        if h_inf > STAGNATION_FACTOR * self.prev_h_inf {
            self.mu = (self.mu * MU_GROWTH).min(MU_CAP);
        }
        self.prev_h_inf = h_inf;
    }
}

/// Everything fixed during a thickness optimization run.
pub struct TopoptEnv<'a> {
    pub tau: &'a FieldNet,
    pub psi: &'a ThicknessNet,
    pub cache: &'a ProblemCache,
    /// Elastic constants; the uniform thickness member is ignored.
    pub material: Material,
    pub v0: f64,
    /// Number of displacement-network parameters (prefix of the joint vector).
    pub n_tau: usize,
    /// Keep the thickness network fixed (its gradient block is zeroed).
    pub freeze_thickness: bool,
    /// Restrict the constraint set to the volume residual.
    pub volume_only: bool,
}

/// One evaluation of the Augmented Lagrangian.
#[derive(Debug, Clone)]
pub struct AlEval {
    pub loss: f64,
    pub compliance: f64,
    pub volume: f64,
    pub h: Vec<f64>,
}

/// Value-level strains copied out of the strong (jet) pipeline.
fn strain_values<T: Scalar>(s: &Strains<J1<T>>) -> Strains<T> {
    Strains {
        e: [[s.e[0][0].v, s.e[0][1].v], [s.e[1][0].v, s.e[1][1].v]],
        k: [[s.k[0][0].v, s.k[0][1].v], [s.k[1][0].v, s.k[1][1].v]],
        g: [s.g[0].v, s.g[1].v],
    }
}

/// Energy density and equilibrium residuals at an interior point with
/// network-derived thickness.
fn al_point<T: ActScalar>(
    tau: &FieldNet,
    tau_params: &[T],
    thickness: J1<T>,
    pt: &InteriorPoint,
    lam_mu: (f64, f64),
    volume_only: bool,
) -> (T, [T; 5]) {
    if volume_only {
        let jets: [J1<T>; 5] =
            forward_constrained(&tau.widths, tau.activation, tau_params, pt.xi, tau.trial);
        let lg = LiftedGeom::<T>::weak(&pt.gp);
        let lf = to_local_t(&jets, &lg, tau.basis);
        let s = strains_t(&lf, &lg);
        let (c, d) = elasticity_tensors(&lg.a_con, lam_mu.0, lam_mu.1);
        let (em, eb, es) = energy_densities(&s, &c, &d, thickness.v);
        return (em + eb + es, [T::lit(0.0); 5]);
    }
    let raw: [J2<T>; 5] =
        forward_constrained(&tau.widths, tau.activation, tau_params, pt.xi, tau.trial);
    let jets = [raw[0].nest(), raw[1].nest(), raw[2].nest(), raw[3].nest(), raw[4].nest()];
    let lg = LiftedGeom::<J1<T>>::strong(&pt.gp);
    let lf = to_local_t(&jets, &lg, tau.basis);
    let s = strains_t(&lf, &lg);
    let (c, d) = elasticity_tensors(&lg.a_con, lam_mu.0, lam_mu.1);
    let res = strong_residuals(&resultants(&s, &c, &d, thickness), &lg, pt.f_con, pt.f3);

    let sv = strain_values(&s);
    let mut a_con_v = [[T::lit(0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            a_con_v[a][b] = lg.a_con[a][b].v;
        }
    }
    let (cv, dv) = elasticity_tensors(&a_con_v, lam_mu.0, lam_mu.1);
    let (em, eb, es) = energy_densities(&sv, &cv, &dv, thickness.v);
    (em + eb + es, res)
}

impl<'a> TopoptEnv<'a> {
    pub fn n_constraints(&self) -> usize {
        if self.volume_only {
            1
        } else {
            5 * self.cache.interior.len() + 5 * self.cache.neumann.len() + 1
        }
    }

    fn lam_mu(&self) -> (f64, f64) {
        crate::constitutive::lame(self.material.youngs_modulus, self.material.poisson_ratio)
    }

    fn split<'p>(&self, params: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        params.split_at(self.n_tau)
    }

    /// Attainable volume range given the thickness bounds.
    pub fn volume_bounds(&self) -> (f64, f64) {
        let n = self.cache.interior.len() as f64;
        let w0 = self.cache.domain_area / n;
        let aw: f64 = self.cache.interior.iter().map(|p| w0 * p.gp.g.sqrt_a).sum();
        (self.psi.t_min * aw, self.psi.t_max * aw)
    }

    /// Quadrature volume of the thickness field.
    pub fn volume(&self, psi_params: &[f64]) -> f64 {
        let n = self.cache.interior.len() as f64;
        let w0 = self.cache.domain_area / n;
        self.cache
            .interior
            .iter()
            .map(|p| w0 * p.gp.g.sqrt_a * self.psi.value(psi_params, p.xi))
            .sum()
    }

    /// Signed volume constraint residual.
    pub fn volume_residual(&self, psi_params: &[f64]) -> f64 {
        self.volume(psi_params) - self.v0
    }

    /// Internal energy of the displacement field under the pointwise
    /// thickness (the compliance objective).
    pub fn compliance(&self, params: &[f64]) -> Result<f64> {
        let (tp, pp) = self.split(params);
        let lm = self.lam_mu();
        let n = self.cache.interior.len() as f64;
        let w0 = self.cache.domain_area / n;
        let mut total = 0.0;
        for (i, pt) in self.cache.interior.iter().enumerate() {
            let t = self.psi.value(pp, pt.xi);
            let (em, eb, es, _) =
                crate::training::pipeline::weak_point_parts::<f64>(self.tau, tp, pt, lm, t);
            let e = em + eb + es;
            if !e.is_finite() {
                return Err(Error::NonFinite { context: "compliance density".into(), index: i });
            }
            total += w0 * pt.gp.g.sqrt_a * e;
        }
        Ok(total)
    }

    /// Augmented Lagrangian loss `J + mu sum h^2 + sum lambda h`, with the
    /// exact gradient (the volume constraint distributes over points with its
    /// residual frozen at the current value, which is the exact chain rule).
    pub fn eval(
        &self,
        params: &[f64],
        state: &ALState,
        grad: Option<&mut [f64]>,
    ) -> Result<AlEval> {
        debug_assert_eq!(state.lambdas.len(), self.n_constraints());
        let (tp, pp) = self.split(params);
        let lm = self.lam_mu();
        let n_i = self.cache.interior.len();
        let w0 = self.cache.domain_area / n_i as f64;
        let mu = state.mu;

        // Pass 1: volume residual (needed by the distributed gradient term).
        let volume = self.volume(pp);
        let h_vol = volume - self.v0;
        let lambda_vol = *state.lambdas.last().unwrap();

        let mut h = Vec::with_capacity(self.n_constraints());
        let mut compliance = 0.0;
        let mut penalty = 0.0;

        match grad {
            None => {
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let tj: J1<f64> = self.psi.thickness_jet(pp, pt.xi);
                    let (e, res) = al_point::<f64>(self.tau, tp, tj, pt, lm, self.volume_only);
                    if !e.is_finite() {
                        return Err(Error::NonFinite { context: "compliance density".into(), index: i });
                    }
                    compliance += w0 * pt.gp.g.sqrt_a * e;
                    if !self.volume_only {
                        for (j, r) in res.iter().enumerate() {
                            if !r.is_finite() {
                                return Err(Error::NonFinite {
                                    context: "equilibrium constraint".into(),
                                    index: i,
                                });
                            }
                            let l = state.lambdas[5 * i + j];
                            penalty += mu * r * r + l * r;
                            h.push(*r);
                        }
                    }
                }
                if !self.volume_only {
                    let base = 5 * n_i;
                    for (k, bp) in self.cache.neumann.iter().enumerate() {
                        let t = self.psi.value(pp, bp.xi);
                        let bc = crate::training::pipeline::neumann_point_bc::<f64>(
                            self.tau, tp, bp, lm, t,
                        );
                        for (j, r) in bc.iter().enumerate() {
                            let l = state.lambdas[base + 5 * k + j];
                            penalty += mu * r * r + l * r;
                            h.push(*r);
                        }
                    }
                }
            }
            Some(grad) => {
                grad.fill(0.0);
                tape::reset();
                let leaves = tape::leaves(params);
                let (tl, pl) = leaves.split_at(self.n_tau);
                let vol_coef = 2.0 * mu * h_vol + lambda_vol;
                for (i, pt) in self.cache.interior.iter().enumerate() {
                    let mark = tape::mark();
                    let w = w0 * pt.gp.g.sqrt_a;
                    let tj: J1<Var> = self.psi.thickness_jet(pl, pt.xi);
                    let (e, res) = al_point::<Var>(self.tau, tl, tj, pt, lm, self.volume_only);
                    if !e.value().is_finite() {
                        tape::reset();
                        return Err(Error::NonFinite { context: "compliance density".into(), index: i });
                    }
                    compliance += w * e.value();
                    // Objective + distributed volume term, single sweep.
                    let mut y = Var::lit(w) * e + Var::lit(vol_coef * w) * tj.v;
                    if !self.volume_only {
                        for (j, r) in res.iter().enumerate() {
                            if !r.value().is_finite() {
                                tape::reset();
                                return Err(Error::NonFinite {
                                    context: "equilibrium constraint".into(),
                                    index: i,
                                });
                            }
                            let l = state.lambdas[5 * i + j];
                            y = y + Var::lit(mu) * *r * *r + Var::lit(l) * *r;
                            penalty += mu * r.value() * r.value() + l * r.value();
                            h.push(r.value());
                        }
                    }
                    tape::backward_weighted(y, 1.0, grad);
                    tape::rewind(mark);
                }
                if !self.volume_only {
                    let base = 5 * n_i;
                    for (k, bp) in self.cache.neumann.iter().enumerate() {
                        let mark = tape::mark();
                        let tj: J1<Var> = self.psi.thickness_jet(pl, bp.xi);
                        let bc = crate::training::pipeline::neumann_point_bc::<Var>(
                            self.tau, tl, bp, lm, tj.v,
                        );
                        let mut y = Var::lit(0.0);
                        for (j, r) in bc.iter().enumerate() {
                            let l = state.lambdas[base + 5 * k + j];
                            y = y + Var::lit(mu) * *r * *r + Var::lit(l) * *r;
                            penalty += mu * r.value() * r.value() + l * r.value();
                            h.push(r.value());
                        }
                        tape::backward_weighted(y, 1.0, grad);
                        tape::rewind(mark);
                    }
                }
                tape::reset();
                if self.freeze_thickness {
                    for g in grad[self.n_tau..].iter_mut() {
                        *g = 0.0;
                    }
                }
            }
        }

        penalty += mu * h_vol * h_vol + lambda_vol * h_vol;
        h.push(h_vol);
        Ok(AlEval { loss: compliance + penalty, compliance, volume, h })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopoptConfig {
    pub mu_init: f64,
    pub outer_iters: usize,
    pub inner_epochs: usize,
    pub constraint_tol: f64,
}

/// Per-outer-iteration record of the multiplier update inputs and the volume
/// component before/after, for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub mu: f64,
    pub h_inf: f64,
    pub h_vol: f64,
    pub lambda_vol_before: f64,
    pub lambda_vol_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopoptOutcome {
    pub tau_params: Vec<f64>,
    pub psi_params: Vec<f64>,
    /// Compliance after each outer iteration's inner solve.
    pub compliance: Vec<f64>,
    pub h_inf: Vec<f64>,
    /// Iterations whose constraint norm did not worsen relative to the last
    /// accepted one; compliance comparisons apply to this subsequence.
    pub accepted: Vec<bool>,
    pub updates: Vec<UpdateRecord>,
    pub final_volume_residual: f64,
    pub feasible: bool,
    pub outer_iters_run: usize,
    pub inner_epochs_run: usize,
}

/// Alternating Augmented Lagrangian loop: joint inner minimization, then
/// first-order multiplier update, until the constraint norm meets the
/// tolerance or the iteration budget runs out.
pub fn topopt_run(
    env: &TopoptEnv,
    tau_init: Vec<f64>,
    psi_init: Vec<f64>,
    cfg: &TopoptConfig,
) -> Result<TopoptOutcome> {
    let (lo, hi) = env.volume_bounds();
    if env.v0 <= lo || env.v0 >= hi {
        return Err(Error::InfeasibleVolume { v0: env.v0, lo, hi });
    }

    let mut params = tau_init;
    let n_tau = params.len();
    debug_assert_eq!(n_tau, env.n_tau);
    params.extend_from_slice(&psi_init);

    let mut state = ALState::new(env.n_constraints(), cfg.mu_init);
    let mut outcome = TopoptOutcome {
        tau_params: Vec::new(),
        psi_params: Vec::new(),
        compliance: Vec::new(),
        h_inf: Vec::new(),
        accepted: Vec::new(),
        updates: Vec::new(),
        final_volume_residual: 0.0,
        feasible: false,
        outer_iters_run: 0,
        inner_epochs_run: 0,
    };

    // Already-feasible start short-circuits the whole loop.
    let init = env.eval(&params, &state, None)?;
    state.record(init.h.clone());
    let mut h_inf = state.h_inf();
    let mut last_accepted_h = f64::INFINITY;
    if h_inf <= cfg.constraint_tol {
        outcome.compliance.push(init.compliance);
        outcome.h_inf.push(h_inf);
        outcome.accepted.push(true);
        outcome.final_volume_residual = *init.h.last().unwrap();
        outcome.feasible = true;
        let (tp, pp) = params.split_at(n_tau);
        outcome.tau_params = tp.to_vec();
        outcome.psi_params = pp.to_vec();
        return Ok(outcome);
    }

    for _outer in 0..cfg.outer_iters {
        // Inner solve: L-BFGS on the joint parameter vector.
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let mut g = vec![0.0; params.len()];
        let mut f = env.eval(&params, &state, Some(&mut g))?.loss;
        for _ in 0..cfg.inner_epochs {
            let res = opt.step(&mut params, &mut f, &mut g, &mut |p, go| {
                Ok(env.eval(p, &state, Some(go))?.loss)
            })?;
            outcome.inner_epochs_run += 1;
            if res.step == 0.0 && res.line_search_failed {
                break;
            }
        }

        let eval = env.eval(&params, &state, None)?;
        state.record(eval.h.clone());
        h_inf = state.h_inf();
        outcome.outer_iters_run += 1;
        outcome.compliance.push(eval.compliance);
        outcome.h_inf.push(h_inf);
        let accepted = h_inf <= last_accepted_h;
        if accepted {
            last_accepted_h = h_inf;
        }
        outcome.accepted.push(accepted);
        outcome.final_volume_residual = *eval.h.last().unwrap();

        if h_inf <= cfg.constraint_tol {
            outcome.feasible = true;
            break;
        }

        let before = UpdateRecord {
            mu: state.mu,
            h_inf,
            h_vol: *eval.h.last().unwrap(),
            lambda_vol_before: *state.lambdas.last().unwrap(),
            lambda_vol_after: 0.0,
        };
        state.multiplier_update();
        outcome.updates.push(UpdateRecord {
            lambda_vol_after: *state.lambdas.last().unwrap(),
            ..before
        });
    }

    let (tp, pp) = params.split_at(n_tau);
    outcome.tau_params = tp.to_vec();
    outcome.psi_params = pp.to_vec();
    Ok(outcome)
}
