//! Optimizers: limited-memory BFGS with a strong-Wolfe cubic-interpolation
//! line search, and Adam as a fixed-step fallback.

use std::collections::VecDeque;

use crate::error::Result;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub history: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    pub tolerance_change: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history: 100,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            tolerance_change: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepResult {
    /// Step length taken (0 on line-search failure).
    pub step: f64,
    pub line_search_failed: bool,
    pub evals: usize,
}

/// Minimum along `x0 + t d` of a cubic fit through two points with values and
/// directional derivatives, clamped to `bounds`.
fn cubic_interpolate(
    x1: f64,
    f1: f64,
    g1: f64,
    x2: f64,
    f2: f64,
    g2: f64,
    bounds: Option<(f64, f64)>,
) -> f64 {
    let (lo, hi) = bounds.unwrap_or(if x1 <= x2 { (x1, x2) } else { (x2, x1) });
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_square = d1 * d1 - g1 * g2;
    if d2_square >= 0.0 {
        let d2 = d2_square.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        min_pos.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}

struct WolfeOutcome {
    t: f64,
    f: f64,
    g: Vec<f64>,
    evals: usize,
    satisfied: bool,
}

/// Strong-Wolfe line search: bracketing phase followed by cubic-interpolation
/// zoom. Returns the lowest point found; `satisfied` reports whether both
/// Wolfe conditions held there.
fn strong_wolfe(
    x0: &[f64],
    d: &[f64],
    f0: f64,
    g0: &[f64],
    gtd0: f64,
    t_init: f64,
    cfg: &LbfgsConfig,
    eval: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<f64>,
) -> Result<WolfeOutcome> {
    let n = x0.len();
    let d_norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut xt = vec![0.0; n];
    let at = |t: f64, xt: &mut Vec<f64>| {
        for i in 0..n {
            xt[i] = x0[i] + t * d[i];
        }
    };

    let mut t = t_init;
    let mut g_new = vec![0.0; n];
    at(t, &mut xt);
    let mut f_new = eval(&xt, &mut g_new)?;
    let mut evals = 1;
    let mut gtd_new = dot(&g_new, d);

    let (mut t_prev, mut f_prev, mut gtd_prev) = (0.0, f0, gtd0);
    let mut g_prev = g0.to_vec();
    let mut done = false;
    let mut ls_iter = 0;

    // Bracketing phase.
    let (mut bracket, mut bracket_f, mut bracket_g, mut bracket_gtd);
    loop {
        if ls_iter >= cfg.max_line_search {
            bracket = [0.0, t];
            bracket_f = [f0, f_new];
            bracket_g = [g0.to_vec(), g_new.clone()];
            bracket_gtd = [gtd0, gtd_new];
            break;
        }
        if f_new > f0 + cfg.c1 * t * gtd0 || (ls_iter > 1 && f_new >= f_prev) {
            bracket = [t_prev, t];
            bracket_f = [f_prev, f_new];
            bracket_g = [g_prev.clone(), g_new.clone()];
            bracket_gtd = [gtd_prev, gtd_new];
            break;
        }
        if gtd_new.abs() <= -cfg.c2 * gtd0 {
            bracket = [t, t];
            bracket_f = [f_new, f_new];
            bracket_g = [g_new.clone(), g_new.clone()];
            bracket_gtd = [gtd_new, gtd_new];
            done = true;
            break;
        }
        if gtd_new >= 0.0 {
            bracket = [t_prev, t];
            bracket_f = [f_prev, f_new];
            bracket_g = [g_prev.clone(), g_new.clone()];
            bracket_gtd = [gtd_prev, gtd_new];
            break;
        }
        let min_step = t + 0.01 * (t - t_prev);
        let max_step = t * 10.0;
        let tmp = t;
        t = cubic_interpolate(
            t_prev,
            f_prev,
            gtd_prev,
            t,
            f_new,
            gtd_new,
            Some((min_step, max_step)),
        );
        t_prev = tmp;
        f_prev = f_new;
        gtd_prev = gtd_new;
        std::mem::swap(&mut g_prev, &mut g_new);
        at(t, &mut xt);
        f_new = eval(&xt, &mut g_new)?;
        evals += 1;
        gtd_new = dot(&g_new, d);
        ls_iter += 1;
    }

    // Zoom phase on the bracket.
    let (mut low, mut high) = if bracket_f[0] <= bracket_f[1] { (0, 1) } else { (1, 0) };
    let mut insufficient_progress = false;
    while !done && ls_iter < cfg.max_line_search {
        if (bracket[1] - bracket[0]).abs() * d_norm < cfg.tolerance_change {
            break;
        }
        t = cubic_interpolate(
            bracket[0],
            bracket_f[0],
            bracket_gtd[0],
            bracket[1],
            bracket_f[1],
            bracket_gtd[1],
            None,
        );
        // Keep trial points an epsilon inside the bracket; bisect toward the
        // nearer endpoint after repeated boundary hits.
        let b_hi = bracket[0].max(bracket[1]);
        let b_lo = bracket[0].min(bracket[1]);
        let eps = 0.1 * (b_hi - b_lo);
        if (b_hi - t).min(t - b_lo) < eps {
            if insufficient_progress || t >= b_hi || t <= b_lo {
                t = if (t - b_hi).abs() < (t - b_lo).abs() { b_hi - eps } else { b_lo + eps };
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }

        at(t, &mut xt);
        f_new = eval(&xt, &mut g_new)?;
        evals += 1;
        gtd_new = dot(&g_new, d);
        ls_iter += 1;

        if f_new > f0 + cfg.c1 * t * gtd0 || f_new >= bracket_f[low] {
            bracket[high] = t;
            bracket_f[high] = f_new;
            bracket_g[high] = g_new.clone();
            bracket_gtd[high] = gtd_new;
            (low, high) = if bracket_f[0] <= bracket_f[1] { (0, 1) } else { (1, 0) };
        } else {
            if gtd_new.abs() <= -cfg.c2 * gtd0 {
                done = true;
            } else if gtd_new * (bracket[high] - bracket[low]) >= 0.0 {
                bracket[high] = bracket[low];
                bracket_f[high] = bracket_f[low];
                bracket_g[high] = bracket_g[low].clone();
                bracket_gtd[high] = bracket_gtd[low];
            }
            bracket[low] = t;
            bracket_f[low] = f_new;
            bracket_g[low] = g_new.clone();
            bracket_gtd[low] = gtd_new;
        }
    }

    let pick = if bracket_f[low] <= bracket_f[high] { low } else { high };
    Ok(WolfeOutcome {
        t: bracket[pick],
        f: bracket_f[pick],
        g: bracket_g[pick].clone(),
        evals,
        satisfied: done,
    })
}

/// Limited-memory BFGS. One [`Lbfgs::step`] call is one outer iteration
/// ("epoch"): direction from the two-loop recursion, strong-Wolfe line
/// search, curvature-pair update.
pub struct Lbfgs {
    cfg: LbfgsConfig,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    rho: VecDeque<f64>,
    iter: usize,
}

impl Lbfgs {
    pub fn new(cfg: LbfgsConfig) -> Self {
        Lbfgs { cfg, s: VecDeque::new(), y: VecDeque::new(), rho: VecDeque::new(), iter: 0 }
    }

    fn reset_memory(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
        self.iter = 0;
    }

    /// Two-loop recursion for the quasi-Newton direction.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = self.s.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let a = self.rho[i] * dot(&self.s[i], &q);
            alpha[i] = a;
            axpy(&mut q, -a, &self.y[i]);
        }
        if k > 0 {
            let (s, y) = (&self.s[k - 1], &self.y[k - 1]);
            let gamma = dot(s, y) / dot(y, y);
            for v in &mut q {
                *v *= gamma;
            }
        }
        for i in 0..k {
            let b = self.rho[i] * dot(&self.y[i], &q);
            axpy(&mut q, alpha[i] - b, &self.s[i]);
        }
        q
    }

    /// One outer iteration. `f` and `g` hold the loss and gradient at
    /// `params` on entry and are updated to the accepted point. On
    /// line-search failure the parameters stay unchanged, the memory resets
    /// (so the next epoch starts from scaled steepest descent), and the
    /// failure is reported.
    pub fn step(
        &mut self,
        params: &mut [f64],
        f: &mut f64,
        g: &mut Vec<f64>,
        eval: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<f64>,
    ) -> Result<StepResult> {
        let mut d = self.direction(g);
        let mut gtd = dot(g, &d);
        if !gtd.is_finite() || gtd >= 0.0 {
            self.reset_memory();
            d = g.iter().map(|v| -v).collect();
            gtd = -dot(g, g);
        }
        if gtd == 0.0 {
            // Zero gradient: stationary point, nothing to do.
            return Ok(StepResult { step: 0.0, line_search_failed: false, evals: 0 });
        }
        let t_init = if self.iter == 0 {
            let g1: f64 = g.iter().map(|v| v.abs()).sum();
            1.0f64.min(1.0 / g1)
        } else {
            1.0
        };
        self.iter += 1;

        let out = strong_wolfe(params, &d, *f, g, gtd, t_init, &self.cfg, eval)?;
        if !out.satisfied || out.t <= 0.0 || out.f >= *f {
            self.reset_memory();
            return Ok(StepResult { step: 0.0, line_search_failed: true, evals: out.evals });
        }

        let mut s_vec = d;
        for v in &mut s_vec {
            *v *= out.t;
        }
        axpy(params, 1.0, &s_vec);
        let y_vec: Vec<f64> = out.g.iter().zip(g.iter()).map(|(gn, go)| gn - go).collect();
        let ys = dot(&y_vec, &s_vec);
        if ys > 1e-10 {
            if self.s.len() == self.cfg.history {
                self.s.pop_front();
                self.y.pop_front();
                self.rho.pop_front();
            }
            self.rho.push_back(1.0 / ys);
            self.s.push_back(s_vec);
            self.y.push_back(y_vec);
        }
        *f = out.f;
        *g = out.g;
        Ok(StepResult { step: out.t, line_search_failed: false, evals: out.evals })
    }
}

/// Adam with fixed step size.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x, y) = (x-3)^2 + 10 (y+2)^2.
    fn quadratic(p: &[f64], g: &mut [f64]) -> Result<f64> {
        g[0] = 2.0 * (p[0] - 3.0);
        g[1] = 20.0 * (p[1] + 2.0);
        Ok((p[0] - 3.0).powi(2) + 10.0 * (p[1] + 2.0).powi(2))
    }

    #[test]
    fn lbfgs_pins_down_a_convex_quadratic() {
        let mut params = vec![0.0, 0.0];
        let mut g = vec![0.0; 2];
        let mut f = quadratic(&params, &mut g).unwrap();
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let mut eval = |p: &[f64], go: &mut [f64]| quadratic(p, go);
        for _ in 0..20 {
            opt.step(&mut params, &mut f, &mut g, &mut eval).unwrap();
            if dot(&g, &g).sqrt() < 1e-10 {
                break;
            }
        }
        assert!(dot(&g, &g).sqrt() < 1e-10, "grad norm {}", dot(&g, &g).sqrt());
        assert!((params[0] - 3.0).abs() < 1e-9);
        assert!((params[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn lbfgs_descends_rosenbrock_monotonically() {
        let rosen = |p: &[f64], g: &mut [f64]| -> Result<f64> {
            let (a, b) = (1.0, 100.0);
            g[0] = -2.0 * (a - p[0]) - 4.0 * b * p[0] * (p[1] - p[0] * p[0]);
            g[1] = 2.0 * b * (p[1] - p[0] * p[0]);
            Ok((a - p[0]).powi(2) + b * (p[1] - p[0] * p[0]).powi(2))
        };
        let mut params = vec![-1.2, 1.0];
        let mut g = vec![0.0; 2];
        let mut f = rosen(&params, &mut g).unwrap();
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let mut eval = |p: &[f64], go: &mut [f64]| rosen(p, go);
        let mut prev = f;
        for _ in 0..60 {
            opt.step(&mut params, &mut f, &mut g, &mut eval).unwrap();
            assert!(f <= prev + 1e-15, "loss rose: {prev} -> {f}");
            prev = f;
        }
        assert!(f < 1e-8, "rosenbrock not minimized: {f}");
    }

    #[test]
    fn zero_gradient_yields_zero_step() {
        let mut params = vec![3.0, -2.0];
        let mut g = vec![0.0; 2];
        let mut f = quadratic(&params, &mut g).unwrap();
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let res = opt
            .step(&mut params, &mut f, &mut g, &mut |p, go| quadratic(p, go))
            .unwrap();
        assert_eq!(res.step, 0.0);
        assert!(!res.line_search_failed);
        assert_eq!(params, vec![3.0, -2.0]);
    }

    #[test]
    fn adam_reduces_the_quadratic() {
        let mut params = vec![0.0, 0.0];
        let mut g = vec![0.0; 2];
        let mut opt = Adam::new(0.05, 2);
        let f0 = quadratic(&params, &mut g).unwrap();
        for _ in 0..500 {
            opt.step(&mut params, &g);
            quadratic(&params, &mut g).unwrap();
        }
        let f = quadratic(&params, &mut g).unwrap();
        assert!(f < 1e-2 * f0, "adam failed to descend: {f0} -> {f}");
    }
}
