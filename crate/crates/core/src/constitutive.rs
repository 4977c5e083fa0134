//! Plane-stress shell constitutive law: elasticity tensors on the curved
//! metric, stress resultants, and energy densities.

use crate::autodiff::Scalar;
use crate::kinematics::Strains;

/// Shear correction factor for the transverse shear energy.
pub const SHEAR_CORRECTION: f64 = 5.0 / 6.0;

/// Lame parameters `(lambda, mu)` from Young's modulus and Poisson ratio.
pub fn lame(e: f64, nu: f64) -> (f64, f64) {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}

/// Fourth-order membrane/bending tensor `C^{ab sr}` and second-order shear
/// tensor `D^{ab}` built from the contravariant metric.
///
/// `C = 2 lambda mu / (lambda + 2 mu) a^{ab} a^{sr} + mu (a^{as} a^{br} + a^{ar} a^{bs})`,
/// `D = mu a^{ab}`.
pub fn elasticity_tensors<T: Scalar>(
    a_con: &[[T; 2]; 2],
    lambda: f64,
    mu: f64,
) -> ([[[[T; 2]; 2]; 2]; 2], [[T; 2]; 2]) {
    let c0 = T::lit(2.0 * lambda * mu / (lambda + 2.0 * mu));
    let mu_t = T::lit(mu);
    let mut c = [[[[T::lit(0.0); 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for s in 0..2 {
                for r in 0..2 {
                    c[a][b][s][r] = c0 * a_con[a][b] * a_con[s][r]
                        + mu_t * (a_con[a][s] * a_con[b][r] + a_con[a][r] * a_con[b][s]);
                }
            }
        }
    }
    let mut d = [[T::lit(0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            d[a][b] = mu_t * a_con[a][b];
        }
    }
    (c, d)
}

fn contract<T: Scalar>(c: &[[[[T; 2]; 2]; 2]; 2], x: &[[T; 2]; 2]) -> [[T; 2]; 2] {
    let z = T::lit(0.0);
    let mut out = [[z; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = z;
            for s in 0..2 {
                for r in 0..2 {
                    acc = acc + c[a][b][s][r] * x[s][r];
                }
            }
            out[a][b] = acc;
        }
    }
    out
}

/// Stress resultants at a point.
#[derive(Debug, Clone)]
pub struct Resultants<T> {
    /// Membrane force `n^{ab} = t C : e`.
    pub n: [[T; 2]; 2],
    /// Bending moment `m^{ab} = t^3/12 C : k`.
    pub m: [[T; 2]; 2],
    /// Transverse shear `q^a = t D gamma` (no shear correction here).
    pub q: [T; 2],
}

pub fn resultants<T: Scalar>(
    s: &Strains<T>,
    c: &[[[[T; 2]; 2]; 2]; 2],
    d: &[[T; 2]; 2],
    thickness: T,
) -> Resultants<T> {
    let z = T::lit(0.0);
    let ce = contract(c, &s.e);
    let ck = contract(c, &s.k);
    let bend = thickness * thickness * thickness * T::lit(1.0 / 12.0);
    let mut n = [[z; 2]; 2];
    let mut m = [[z; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            n[a][b] = thickness * ce[a][b];
            m[a][b] = bend * ck[a][b];
        }
    }
    let mut q = [z; 2];
    for a in 0..2 {
        q[a] = thickness * (d[a][0] * s.g[0] + d[a][1] * s.g[1]);
    }
    Resultants { n, m, q }
}

/// Internal energy densities `(membrane, bending, shear)` per unit midsurface
/// area. Shear carries the correction factor; the shear resultant does not.
pub fn energy_densities<T: Scalar>(
    s: &Strains<T>,
    c: &[[[[T; 2]; 2]; 2]; 2],
    d: &[[T; 2]; 2],
    thickness: T,
) -> (T, T, T) {
    let z = T::lit(0.0);
    let half = T::lit(0.5);
    let ce = contract(c, &s.e);
    let ck = contract(c, &s.k);
    let mut ee = z;
    let mut kk = z;
    for a in 0..2 {
        for b in 0..2 {
            ee = ee + ce[a][b] * s.e[a][b];
            kk = kk + ck[a][b] * s.k[a][b];
        }
    }
    let mut gg = z;
    for a in 0..2 {
        for b in 0..2 {
            gg = gg + d[a][b] * s.g[a] * s.g[b];
        }
    }
    let membrane = half * thickness * ee;
    let bending = half * thickness * thickness * thickness * T::lit(1.0 / 12.0) * kk;
    let shear = half * T::lit(SHEAR_CORRECTION) * thickness * gg;
    (membrane, bending, shear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, Chart};

    #[test]
    fn lame_roundtrip() {
        let (lambda, mu) = lame(200.0, 0.3);
        // Invert: E = mu (3 lambda + 2 mu) / (lambda + mu), nu = lambda / (2 (lambda + mu)).
        let e = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
        let nu = lambda / (2.0 * (lambda + mu));
        assert!((e - 200.0).abs() < 1e-12 * 200.0);
        assert!((nu - 0.3).abs() < 1e-14);
    }

    #[test]
    fn elasticity_tensor_symmetries() {
        let g = build_geometry(&Chart::hyperbolic_paraboloid(), [0.3, -0.2]).unwrap();
        let (lambda, mu) = lame(1.0, 0.3);
        let (c, d) = elasticity_tensors(&g.a_con, lambda, mu);
        for a in 0..2 {
            for b in 0..2 {
                assert!((d[a][b] - d[b][a]).abs() < 1e-15);
                for s in 0..2 {
                    for r in 0..2 {
                        // Minor symmetries and the major symmetry.
                        assert!((c[a][b][s][r] - c[b][a][s][r]).abs() < 1e-12);
                        assert!((c[a][b][s][r] - c[a][b][r][s]).abs() < 1e-12);
                        assert!((c[a][b][s][r] - c[s][r][a][b]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn plane_stress_closed_form_on_flat_plate() {
        // Euclidean metric: C^{1111} = 2 l mu/(l+2mu) + 2 mu = E/(1-nu^2),
        // C^{1122} = 2 l mu/(l+2mu) = E nu/(1-nu^2), C^{1212} = mu.
        let g = build_geometry(&Chart::plate(), [0.1, 0.2]).unwrap();
        let e_mod = 7.3;
        let nu = 0.3;
        let (lambda, mu) = lame(e_mod, nu);
        let (c, _) = elasticity_tensors(&g.a_con, lambda, mu);
        let fac = e_mod / (1.0 - nu * nu);
        assert!((c[0][0][0][0] - fac).abs() < 1e-12);
        assert!((c[0][0][1][1] - fac * nu).abs() < 1e-12);
        assert!((c[0][1][0][1] - mu).abs() < 1e-12);
    }

    #[test]
    fn energies_positive_and_match_resultant_contractions() {
        let g = build_geometry(&Chart::scordelis_lo(), [0.2, 0.3]).unwrap();
        let (lambda, mu) = lame(3.0, 0.25);
        let (c, d) = elasticity_tensors(&g.a_con, lambda, mu);
        let s = Strains {
            e: [[0.4, -0.1], [-0.1, 0.2]],
            k: [[-0.3, 0.05], [0.05, 0.6]],
            g: [0.1, -0.2],
        };
        let t = 0.07;
        let r = resultants(&s, &c, &d, t);
        let (em, eb, es) = energy_densities(&s, &c, &d, t);
        assert!(em > 0.0 && eb > 0.0 && es > 0.0);
        // 1/2 n:e and 1/2 m:k reproduce the energies; shear needs the factor.
        let mut ne = 0.0;
        let mut mk = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                ne += r.n[a][b] * s.e[a][b];
                mk += r.m[a][b] * s.k[a][b];
            }
        }
        let qg = r.q[0] * s.g[0] + r.q[1] * s.g[1];
        assert!((0.5 * ne - em).abs() < 1e-13);
        assert!((0.5 * mk - eb).abs() < 1e-13);
        assert!((0.5 * SHEAR_CORRECTION * qg - es).abs() < 1e-13);
    }

    #[test]
    fn zero_strain_zero_energy() {
        let g = build_geometry(&Chart::hemisphere(), [0.2, -0.1]).unwrap();
        let (lambda, mu) = lame(1.0, 0.3);
        let (c, d) = elasticity_tensors(&g.a_con, lambda, mu);
        let s = Strains { e: [[0.0; 2]; 2], k: [[0.0; 2]; 2], g: [0.0; 2] };
        let (em, eb, es) = energy_densities(&s, &c, &d, 0.1);
        assert_eq!(em, 0.0);
        assert_eq!(eb, 0.0);
        assert_eq!(es, 0.0);
    }
}
