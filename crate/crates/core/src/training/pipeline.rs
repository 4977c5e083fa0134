//! Per-point differentiable pipelines shared by the weak and strong losses.
//! Generic over the base scalar so the same code runs as plain numbers (line
//! search, evaluation) or tape variables (gradients); the thickness optimizer
//! reuses these with a network-derived thickness.

use crate::autodiff::{ActScalar, Activation, J1, J2};
use crate::constitutive::{elasticity_tensors, energy_densities, resultants, Resultants};
use crate::kinematics::{strains_t, to_local_t, LiftedGeom, RotationBasis, Strains};
use crate::network::{forward_constrained, TrialKind};
use crate::statics::{natural_bc, strong_residuals};
use crate::training::{BoundaryPoint, InteriorPoint};

/// Field network plus the conventions needed to interpret its outputs.
#[derive(Debug, Clone)]
pub struct FieldNet {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub trial: TrialKind,
    pub basis: RotationBasis,
}

/// First-order constrained field jets at a point.
pub fn field_jets<T: ActScalar>(net: &FieldNet, params: &[T], xi: [f64; 2]) -> [J1<T>; 5] {
    forward_constrained(&net.widths, net.activation, params, xi, net.trial)
}

/// Naghdi strains of the network field at an interior point (weak pipeline).
pub fn point_strains<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    pt: &InteriorPoint,
) -> (Strains<T>, LiftedGeom<T>, [J1<T>; 5]) {
    let jets = field_jets(net, params, pt.xi);
    let lg = LiftedGeom::<T>::weak(&pt.gp);
    let lf = to_local_t(&jets, &lg, net.basis);
    let s = strains_t(&lf, &lg);
    (s, lg, jets)
}

/// Energy and external-work densities `(membrane, bending, shear, external)`
/// at an interior point, before the quadrature weight.
pub fn weak_point_parts<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    pt: &InteriorPoint,
    lam_mu: (f64, f64),
    thickness: T,
) -> (T, T, T, T) {
    let (s, lg, jets) = point_strains(net, params, pt);
    let (c, d) = elasticity_tensors(&lg.a_con, lam_mu.0, lam_mu.1);
    let (em, eb, es) = energy_densities(&s, &c, &d, thickness);
    // Load and displacement outputs share the global frame, so the work
    // density is a plain dot product.
    let mut wext = T::lit(0.0);
    for k in 0..3 {
        if pt.f_hat[k] != 0.0 {
            wext = wext + T::lit(pt.f_hat[k]) * jets[k].v;
        }
    }
    (em, eb, es, wext)
}

/// The five equilibrium residuals at an interior point (strong pipeline:
/// nested jets carry resultant derivatives). `thickness` may vary over the
/// surface, hence the jet argument.
pub fn strong_point_residuals<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    pt: &InteriorPoint,
    lam_mu: (f64, f64),
    thickness: J1<T>,
) -> [T; 5] {
    let raw: [J2<T>; 5] =
        forward_constrained(&net.widths, net.activation, params, pt.xi, net.trial);
    let jets = [
        raw[0].nest(),
        raw[1].nest(),
        raw[2].nest(),
        raw[3].nest(),
        raw[4].nest(),
    ];
    let lg = LiftedGeom::<J1<T>>::strong(&pt.gp);
    let lf = to_local_t(&jets, &lg, net.basis);
    let s = strains_t(&lf, &lg);
    let (c, d) = elasticity_tensors(&lg.a_con, lam_mu.0, lam_mu.1);
    let r = resultants(&s, &c, &d, thickness);
    strong_residuals(&r, &lg, pt.f_con, pt.f3)
}

/// Stress resultants of the network field at a boundary point.
pub fn boundary_resultants<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    bp: &BoundaryPoint,
    lam_mu: (f64, f64),
    thickness: T,
) -> (Resultants<T>, LiftedGeom<T>) {
    let jets = field_jets(net, params, bp.xi);
    let lg = LiftedGeom::<T>::weak(&bp.gp);
    let lf = to_local_t(&jets, &lg, net.basis);
    let s = strains_t(&lf, &lg);
    let (c, d) = elasticity_tensors(&lg.a_con, lam_mu.0, lam_mu.1);
    (resultants(&s, &c, &d, thickness), lg)
}

/// Natural boundary condition residuals at a free-boundary point.
pub fn neumann_point_bc<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    bp: &BoundaryPoint,
    lam_mu: (f64, f64),
    thickness: T,
) -> [T; 5] {
    let (r, lg) = boundary_resultants(net, params, bp, lam_mu, thickness);
    natural_bc(&r, &lg.b_mix, bp.nu)
}

/// Constrained raw outputs at an essential-boundary point (homogeneous
/// Dirichlet residuals when the trial function does not lift them).
pub fn dirichlet_point_values<T: ActScalar>(
    net: &FieldNet,
    params: &[T],
    bp: &BoundaryPoint,
) -> [T; 5] {
    let jets = field_jets(net, params, bp.xi);
    [jets[0].v, jets[1].v, jets[2].v, jets[3].v, jets[4].v]
}
