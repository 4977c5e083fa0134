//! Shell kinematics: transforming network outputs into the local covariant
//! frame and assembling the Naghdi strain measures.
//!
//! All algebra is generic over the scalar type. Instantiated with tape
//! variables it becomes the differentiable training path; instantiated with
//! first-order jets of tape variables it feeds the strong form, where strain
//! derivatives are needed.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Scalar, J1};
use crate::geometry::GeomPoint;

/// How the two raw rotation outputs are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationBasis {
    /// Raw outputs are the covariant rotation components `theta_alpha`.
    Covariant,
    /// Raw outputs are V-frame coefficients `beta`; `theta = (Ttheta Tv) beta`.
    VFrame,
}

/// Value and reference-coordinate derivatives of the five field outputs
/// (three global displacement components, two raw rotations) at one point.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub value: [f64; 5],
    pub d1: [[f64; 2]; 5],
    pub d2: Option<[[[f64; 2]; 2]; 5]>,
}

/// Local covariant field quantities at a point.
#[derive(Debug, Clone)]
pub struct LocalFields<T> {
    /// `u_1, u_2` (covariant tangential) and `u_3` (normal).
    pub u: [T; 3],
    /// `du[i][beta] = d u_i / d xi^beta`.
    pub du: [[T; 2]; 3],
    pub theta: [T; 2],
    pub dtheta: [[T; 2]; 2],
}

/// Naghdi strain measures; `e` and `k` are exactly symmetric by construction.
#[derive(Debug, Clone)]
pub struct Strains<T> {
    /// Membrane strain `e_{alpha beta}`.
    pub e: [[T; 2]; 2],
    /// Bending strain `k_{alpha beta}`.
    pub k: [[T; 2]; 2],
    /// Transverse shear `gamma_alpha`.
    pub g: [T; 2],
}

/// Pointwise geometry lifted into the scalar type of the field pipeline.
///
/// For the weak form `T` is the tape variable type and all entries are
/// constants; for the strong form `T` is a first-order jet whose coefficients
/// carry the precomputed geometry derivatives.
#[derive(Debug, Clone)]
pub struct LiftedGeom<T> {
    pub tu: [[T; 3]; 3],
    pub dtu: [[[T; 2]; 3]; 3],
    pub rot_m: [[T; 2]; 2],
    pub d_rot_m: [[[T; 2]; 2]; 2],
    pub gamma: [[[T; 2]; 2]; 2],
    pub a_con: [[T; 2]; 2],
    pub b_cov: [[T; 2]; 2],
    pub b_mix: [[T; 2]; 2],
    pub c_cov: [[T; 2]; 2],
    pub sqrt_a: f64,
}

impl<T: Scalar> LiftedGeom<T> {
    /// Lift values only (first-derivative pipeline; weak form).
    pub fn weak(gp: &GeomPoint) -> Self {
        let l = |x: f64| T::lit(x);
        let m22 = |m: [[f64; 2]; 2]| [[l(m[0][0]), l(m[0][1])], [l(m[1][0]), l(m[1][1])]];
        let mut tu = [[l(0.0); 3]; 3];
        let mut dtu = [[[l(0.0); 2]; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                tu[i][k] = l(gp.g.tu[i][k]);
                for s in 0..2 {
                    dtu[i][k][s] = l(gp.dtu[i][k][s]);
                }
            }
        }
        let mut d_rot_m = [[[l(0.0); 2]; 2]; 2];
        for al in 0..2 {
            for b in 0..2 {
                for s in 0..2 {
                    d_rot_m[al][b][s] = l(gp.d_rot_m[al][b][s]);
                }
            }
        }
        LiftedGeom {
            tu,
            dtu,
            rot_m: m22(gp.g.rot_m),
            d_rot_m,
            gamma: [m22(gp.g.gamma[0]), m22(gp.g.gamma[1])],
            a_con: m22(gp.g.a_con),
            b_cov: m22(gp.g.b_cov),
            b_mix: m22(gp.g.b_mix),
            c_cov: m22(gp.g.c_cov),
            sqrt_a: gp.g.sqrt_a,
        }
    }
}

impl<S: Scalar> LiftedGeom<J1<S>> {
    /// Lift values together with their reference-coordinate derivatives
    /// (second-derivative pipeline; strong form). Requires strong geometry.
    pub fn strong(gp: &GeomPoint) -> Self {
        let sd = gp
            .strong
            .as_ref()
            .expect("strong geometry derivatives not precomputed");
        let j = |v: f64, dx: f64, dy: f64| J1 {
            v: S::lit(v),
            dx: S::lit(dx),
            dy: S::lit(dy),
        };
        let m22 = |m: [[f64; 2]; 2], d: [[[f64; 2]; 2]; 2]| {
            let mut out = [[j(0.0, 0.0, 0.0); 2]; 2];
            for al in 0..2 {
                for be in 0..2 {
                    out[al][be] = j(m[al][be], d[al][be][0], d[al][be][1]);
                }
            }
            out
        };
        let mut tu = [[j(0.0, 0.0, 0.0); 3]; 3];
        let mut dtu = [[[j(0.0, 0.0, 0.0); 2]; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                tu[i][k] = j(gp.g.tu[i][k], gp.dtu[i][k][0], gp.dtu[i][k][1]);
                for s in 0..2 {
                    dtu[i][k][s] = j(
                        gp.dtu[i][k][s],
                        sd.d2_tu[i][k][s][0],
                        sd.d2_tu[i][k][s][1],
                    );
                }
            }
        }
        let mut rot_m = [[j(0.0, 0.0, 0.0); 2]; 2];
        let mut d_rot_m = [[[j(0.0, 0.0, 0.0); 2]; 2]; 2];
        for al in 0..2 {
            for b in 0..2 {
                rot_m[al][b] = j(gp.g.rot_m[al][b], gp.d_rot_m[al][b][0], gp.d_rot_m[al][b][1]);
                for s in 0..2 {
                    d_rot_m[al][b][s] = j(
                        gp.d_rot_m[al][b][s],
                        sd.d2_rot_m[al][b][s][0],
                        sd.d2_rot_m[al][b][s][1],
                    );
                }
            }
        }
        LiftedGeom {
            tu,
            dtu,
            rot_m,
            d_rot_m,
            gamma: [
                m22(gp.g.gamma[0], sd.d_gamma[0]),
                m22(gp.g.gamma[1], sd.d_gamma[1]),
            ],
            a_con: m22(gp.g.a_con, sd.d_a_con),
            b_cov: m22(gp.g.b_cov, sd.d_b_cov),
            b_mix: m22(gp.g.b_mix, sd.d_b_mix),
            c_cov: m22(gp.g.c_cov, sd.d_c_cov),
            sqrt_a: gp.g.sqrt_a,
        }
    }
}

/// Transform raw field jets into local covariant quantities.
///
/// The transforms are position dependent, so derivatives pick up chain-rule
/// terms from `d tu / d xi` (and `d (Ttheta Tv) / d xi` for the V-frame).
pub fn to_local_t<T: Scalar>(
    jets: &[J1<T>; 5],
    lg: &LiftedGeom<T>,
    basis: RotationBasis,
) -> LocalFields<T> {
    let z = T::lit(0.0);
    let mut u = [z; 3];
    let mut du = [[z; 2]; 3];
    for i in 0..3 {
        let mut acc = z;
        for k in 0..3 {
            acc = acc + lg.tu[i][k] * jets[k].v;
        }
        u[i] = acc;
        for be in 0..2 {
            let mut d = z;
            for k in 0..3 {
                d = d + lg.dtu[i][k][be] * jets[k].v + lg.tu[i][k] * jets[k].d(be);
            }
            du[i][be] = d;
        }
    }
    let mut theta = [z; 2];
    let mut dtheta = [[z; 2]; 2];
    match basis {
        RotationBasis::Covariant => {
            for al in 0..2 {
                theta[al] = jets[3 + al].v;
                for be in 0..2 {
                    dtheta[al][be] = jets[3 + al].d(be);
                }
            }
        }
        RotationBasis::VFrame => {
            for al in 0..2 {
                let mut acc = z;
                for b in 0..2 {
                    acc = acc + lg.rot_m[al][b] * jets[3 + b].v;
                }
                theta[al] = acc;
                for be in 0..2 {
                    let mut d = z;
                    for b in 0..2 {
                        d = d
                            + lg.d_rot_m[al][b][be] * jets[3 + b].v
                            + lg.rot_m[al][b] * jets[3 + b].d(be);
                    }
                    dtheta[al][be] = d;
                }
            }
        }
    }
    LocalFields { u, du, theta, dtheta }
}

/// Covariant derivative of the tangential displacement,
/// `u_{alpha|beta} = u_{alpha,beta} - Gamma^rho_{alpha beta} u_rho`.
fn cov_deriv<T: Scalar>(
    val: &[T; 2],
    d: impl Fn(usize, usize) -> T,
    gamma: &[[[T; 2]; 2]; 2],
) -> [[T; 2]; 2] {
    let z = T::lit(0.0);
    let mut out = [[z; 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            out[al][be] = d(al, be) - gamma[0][al][be] * val[0] - gamma[1][al][be] * val[1];
        }
    }
    out
}

/// Naghdi strain measures from local fields.
pub fn strains_t<T: Scalar>(lf: &LocalFields<T>, lg: &LiftedGeom<T>) -> Strains<T> {
    let z = T::lit(0.0);
    let half = T::lit(0.5);
    let u12 = [lf.u[0], lf.u[1]];
    let ucov = cov_deriv(&u12, |al, be| lf.du[al][be], &lg.gamma);
    let tcov = cov_deriv(&lf.theta, |al, be| lf.dtheta[al][be], &lg.gamma);
    let u3 = lf.u[2];

    let mut e = [[z; 2]; 2];
    let mut k = [[z; 2]; 2];
    for al in 0..2 {
        for be in al..2 {
            let eab = half * (ucov[al][be] + ucov[be][al]) - lg.b_cov[al][be] * u3;
            e[al][be] = eab;
            e[be][al] = eab;
            let mut coupling = z;
            for la in 0..2 {
                coupling = coupling
                    + lg.b_mix[la][be] * ucov[la][al]
                    + lg.b_mix[la][al] * ucov[la][be];
            }
            let kab = half * (tcov[al][be] + tcov[be][al] - coupling) + lg.c_cov[al][be] * u3;
            k[al][be] = kab;
            k[be][al] = kab;
        }
    }

    let mut g = [z; 2];
    for al in 0..2 {
        let mut bl = z;
        for la in 0..2 {
            bl = bl + lg.b_mix[la][al] * lf.u[la];
        }
        g[al] = lf.theta[al] + lf.du[2][al] + bl;
    }

    Strains { e, k, g }
}

fn jets_from_field(fj: &FieldJet) -> [J1<f64>; 5] {
    let mut out = [J1 { v: 0.0, dx: 0.0, dy: 0.0 }; 5];
    for i in 0..5 {
        out[i] = J1 { v: fj.value[i], dx: fj.d1[i][0], dy: fj.d1[i][1] };
    }
    out
}

/// Plain-number transform of a field jet (evaluation and testing path).
pub fn to_local(fj: &FieldJet, gp: &GeomPoint, basis: RotationBasis) -> LocalFields<f64> {
    to_local_t(&jets_from_field(fj), &LiftedGeom::<f64>::weak(gp), basis)
}

/// Plain-number strain measures.
pub fn strains(lf: &LocalFields<f64>, gp: &GeomPoint) -> Strains<f64> {
    strains_t(lf, &LiftedGeom::<f64>::weak(gp))
}

/// Thickness-expanded Green-Lagrange strains, assembled independently of
/// [`strains_t`] as a cross-check oracle.
///
/// Returns `(E_planar(xi3), E_alpha3, E_33)` with
/// `E_planar = e + xi3 k + (xi3)^2 * 1/2 (b^l_be theta_{l|al} + b^l_al theta_{l|be})`,
/// `E_alpha3 = gamma_alpha / 2`, `E_33 = 0`.
pub fn green_lagrange_expansion(
    lf: &LocalFields<f64>,
    gp: &GeomPoint,
    xi3: f64,
) -> ([[f64; 2]; 2], [f64; 2], f64) {
    let lg = LiftedGeom::<f64>::weak(gp);
    let u12 = [lf.u[0], lf.u[1]];
    let ucov = cov_deriv(&u12, |al, be| lf.du[al][be], &lg.gamma);
    let tcov = cov_deriv(&lf.theta, |al, be| lf.dtheta[al][be], &lg.gamma);
    let u3 = lf.u[2];

    let mut planar = [[0.0; 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            let membrane = 0.5 * (ucov[al][be] + ucov[be][al]) - lg.b_cov[al][be] * u3;
            let mut u_coupling = 0.0;
            let mut t_coupling = 0.0;
            for la in 0..2 {
                u_coupling += lg.b_mix[la][be] * ucov[la][al] + lg.b_mix[la][al] * ucov[la][be];
                t_coupling += lg.b_mix[la][be] * tcov[la][al] + lg.b_mix[la][al] * tcov[la][be];
            }
            let linear = 0.5 * (tcov[al][be] + tcov[be][al] - u_coupling) + lg.c_cov[al][be] * u3;
            planar[al][be] = membrane + xi3 * linear + xi3 * xi3 * 0.5 * t_coupling;
        }
    }

    let mut shear = [0.0; 2];
    for al in 0..2 {
        let mut bl = 0.0;
        for la in 0..2 {
            bl += lg.b_mix[la][al] * lf.u[la];
        }
        shear[al] = 0.5 * (lf.theta[al] + lf.du[2][al] + bl);
    }

    (planar, shear, 0.0)
}
