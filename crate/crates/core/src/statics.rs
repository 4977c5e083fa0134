//! Pointwise strong-form residuals of shell equilibrium and natural boundary
//! conditions, built from first-order jets of the stress resultants.

use crate::autodiff::{Scalar, J1};
use crate::constitutive::Resultants;
use crate::geometry::SurfaceGeometry;
use crate::kinematics::LiftedGeom;

/// Covariant divergence of a contravariant 2-tensor,
/// `B^{ab}_{|b} = B^{ab}_{,b} + Gamma^a_{br} B^{rb} + Gamma^b_{br} B^{ar}`.
pub fn div_tensor<T: Scalar>(b: &[[J1<T>; 2]; 2], gamma: &[[[T; 2]; 2]; 2]) -> [T; 2] {
    let z = T::lit(0.0);
    let mut out = [z; 2];
    for a in 0..2 {
        let mut acc = z;
        for be in 0..2 {
            acc = acc + b[a][be].d(be);
            for r in 0..2 {
                acc = acc + gamma[a][be][r] * b[r][be].v + gamma[be][be][r] * b[a][r].v;
            }
        }
        out[a] = acc;
    }
    out
}

/// Covariant divergence of a contravariant vector,
/// `q^a_{|a} = q^a_{,a} + Gamma^a_{ar} q^r`.
pub fn div_vector<T: Scalar>(q: &[J1<T>; 2], gamma: &[[[T; 2]; 2]; 2]) -> T {
    let mut acc = T::lit(0.0);
    for a in 0..2 {
        acc = acc + q[a].d(a);
        for r in 0..2 {
            acc = acc + gamma[a][a][r] * q[r].v;
        }
    }
    acc
}

/// Effective membrane tensor `n - b . m` with `(b . m)^{ab} = b^a_r m^{rb}`.
pub fn effective_membrane<T: Scalar>(
    n: &[[T; 2]; 2],
    m: &[[T; 2]; 2],
    b_mix: &[[T; 2]; 2],
) -> [[T; 2]; 2] {
    let z = T::lit(0.0);
    let mut out = [[z; 2]; 2];
    for a in 0..2 {
        for be in 0..2 {
            let mut acc = n[a][be];
            for r in 0..2 {
                acc = acc - b_mix[a][r] * m[r][be];
            }
            out[a][be] = acc;
        }
    }
    out
}

/// The five equilibrium residuals at one interior point:
/// two moment, two tangential-force, one normal-force component.
///
/// `f_con` are the contravariant tangential load components and `f3` the
/// normal component; both are fixed data precomputed by [`load_local`].
pub fn strong_residuals<T: Scalar>(
    r: &Resultants<J1<T>>,
    lg: &LiftedGeom<J1<T>>,
    f_con: [f64; 2],
    f3: f64,
) -> [T; 5] {
    let z = T::lit(0.0);
    let mut gamma = [[[z; 2]; 2]; 2];
    let mut b_mix_v = [[z; 2]; 2];
    let mut b_cov_v = [[z; 2]; 2];
    for a in 0..2 {
        for be in 0..2 {
            b_mix_v[a][be] = lg.b_mix[a][be].v;
            b_cov_v[a][be] = lg.b_cov[a][be].v;
            for s in 0..2 {
                gamma[a][be][s] = lg.gamma[a][be][s].v;
            }
        }
    }
    let nb = effective_membrane(&r.n, &r.m, &lg.b_mix);

    let div_m = div_tensor(&r.m, &gamma);
    let div_nb = div_tensor(&nb, &gamma);
    let div_q = div_vector(&r.q, &gamma);

    let mut res = [z; 5];
    for a in 0..2 {
        res[a] = div_m[a] - r.q[a].v;
        let mut bq = z;
        for be in 0..2 {
            bq = bq + b_mix_v[a][be] * r.q[be].v;
        }
        res[2 + a] = div_nb[a] - bq + T::lit(f_con[a]);
    }
    let mut bnb = z;
    for a in 0..2 {
        for be in 0..2 {
            bnb = bnb + b_cov_v[a][be] * nb[a][be].v;
        }
    }
    res[4] = div_q + bnb + T::lit(f3);
    res
}

/// The five natural boundary condition residuals `m.nu, (n - b.m).nu, q.nu`
/// at a free-boundary point with covariant unit conormal `nu`.
pub fn natural_bc<T: Scalar>(
    r: &Resultants<T>,
    b_mix: &[[T; 2]; 2],
    nu: [f64; 2],
) -> [T; 5] {
    let z = T::lit(0.0);
    let nb = effective_membrane(&r.n, &r.m, b_mix);
    let mut out = [z; 5];
    for a in 0..2 {
        let mut tm = z;
        let mut tn = z;
        for be in 0..2 {
            tm = tm + r.m[a][be] * T::lit(nu[be]);
            tn = tn + nb[a][be] * T::lit(nu[be]);
        }
        out[a] = tm;
        out[2 + a] = tn;
    }
    let mut tq = z;
    for be in 0..2 {
        tq = tq + r.q[be] * T::lit(nu[be]);
    }
    out[4] = tq;
    out
}

/// Split a global load vector into contravariant tangential components and
/// the normal component: `f_cov = Tu f_hat`, `f^a = a^{ab} f_cov_b`, `f3 = f_cov_3`.
pub fn load_local(f_hat: [f64; 3], g: &SurfaceGeometry) -> ([f64; 2], f64) {
    let mut f_cov = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            f_cov[i] += g.tu[i][k] * f_hat[k];
        }
    }
    let mut f_con = [0.0; 2];
    for a in 0..2 {
        for l in 0..2 {
            f_con[a] += g.a_con[a][l] * f_cov[l];
        }
    }
    (f_con, f_cov[2])
}
