//! Assembly of the curvature potentials entering the Weitzenboeck
//! decomposition of the Hodge Laplacian and its commutation with the
//! covariant derivative.
//!
//! Everything is expressed through two primitive operators on form
//! components (see `linalg`): the induced derivation of an endomorphism on
//! Lambda^j, and the wedge-insert operator e^b wedge iota_{e_a}. The
//! potential on j-forms is
//!
//!   V_j = sum_{a,b} (e^b wedge iota_{e_a}) . RLambda(e_a, e_b)
//!
//! where RLambda(e_a, e_b) is the derivation induced by the curvature
//! endomorphism on covectors, [R_ab]_{pq} = riemann(a, b, q, p). The same
//! assembly applied to the covariant derivative of the curvature yields the
//! drift term rho_j; both specialize correctly at the extreme degrees
//! (V_0 = 0, V_1 = Ricci).

use super::{CurvaturePack, Tensor4, Tensor5, WeitzenboeckData};
use crate::linalg::{binom, induced_derivation, wedge_insert};
use nalgebra::DMatrix;

/// How the curvature couples the cotangent slot to the form slot in the
/// commuted potential on T* (x) Lambda^j. `Commutation` is the variant under
/// which the commutation identity with the covariant derivative holds
/// degreewise; `Literal` keeps the cotangent slot fixed and contracts the
/// frame index inside the curvature operator instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingVariant {
    Commutation,
    Literal,
}

impl CouplingVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "commutation" => Some(CouplingVariant::Commutation),
            "literal" => Some(CouplingVariant::Literal),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CouplingVariant::Commutation => "commutation",
            CouplingVariant::Literal => "literal",
        }
    }
}

/// Curvature endomorphism on covectors for the slot pair (a, b):
/// entry (p, q) is riemann(a, b, q, p).
fn curvature_endomorphism(riemann: &Tensor4, m: usize, a: usize, b: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |p, q| riemann.get(a, b, q, p))
}

/// Same with the derivative tensor, slot pair (a, b) differentiated along e.
fn curvature_endomorphism_deriv(
    nabla: &Tensor5,
    m: usize,
    e: usize,
    a: usize,
    b: usize,
) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |p, q| nabla.get(e, a, b, q, p))
}

/// sum_{a,b} wedge_insert(b, a) . induced_derivation(end(a,b), j)
fn potential_from(
    m: usize,
    j: usize,
    endo: impl Fn(usize, usize) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let n = binom(m, j);
    let mut v = DMatrix::zeros(n, n);
    for a in 0..m {
        for b in 0..m {
            let r = endo(a, b);
            if r.amax() == 0.0 {
                continue;
            }
            v += wedge_insert(m, j, b, a) * induced_derivation(&r, j);
        }
    }
    v
}

pub(super) fn assemble(
    pack: &CurvaturePack,
    m: usize,
    j: usize,
    variant: CouplingVariant,
) -> WeitzenboeckData {
    let n = binom(m, j);
    let v = potential_from(m, j, |a, b| curvature_endomorphism(&pack.riemann, m, a, b));

    // commuted potential on T* (x) Lambda^j, cotangent-slot-major layout
    let dim = m * n;
    let mut v_under = DMatrix::zeros(dim, dim);
    // Ricci acting on the cotangent slot
    for c in 0..m {
        for d in 0..m {
            let ric = pack.ricci[(c, d)];
            if ric == 0.0 {
                continue;
            }
            for i in 0..n {
                v_under[(c * n + i, d * n + i)] += ric;
            }
        }
    }
    // the j-form potential acting on the form slot
    for c in 0..m {
        for i in 0..n {
            for k in 0..n {
                v_under[(c * n + i, c * n + k)] += v[(i, k)];
            }
        }
    }
    // curvature coupling between the slots
    match variant {
        CouplingVariant::Commutation => {
            for c in 0..m {
                for i in 0..m {
                    let r = curvature_endomorphism(&pack.riemann, m, c, i);
                    if r.amax() == 0.0 {
                        continue;
                    }
                    let rj = induced_derivation(&r, j);
                    for p in 0..n {
                        for q in 0..n {
                            v_under[(c * n + p, i * n + q)] -= 2.0 * rj[(p, q)];
                        }
                    }
                }
            }
        }
        CouplingVariant::Literal => {
            for c in 0..m {
                let mut summed = DMatrix::zeros(m, m);
                for i in 0..m {
                    summed += curvature_endomorphism(&pack.riemann, m, c, i);
                }
                if summed.amax() == 0.0 {
                    continue;
                }
                let rj = induced_derivation(&summed, j);
                for p in 0..n {
                    for q in 0..n {
                        v_under[(c * n + p, c * n + q)] -= 2.0 * rj[(p, q)];
                    }
                }
            }
        }
    }

    // derivative drift Hom(Lambda^j -> T* (x) Lambda^j): the potential built
    // from nabla_c riemann, plus the divergence-type curvature term
    let mut rho = DMatrix::zeros(dim, n);
    if pack.nabla_riem_norm > 0.0 {
        for c in 0..m {
            let dv = potential_from(m, j, |a, b| {
                curvature_endomorphism_deriv(&pack.nabla_riemann, m, c, a, b)
            });
            let mut div = DMatrix::zeros(m, m);
            for i in 0..m {
                div += curvature_endomorphism_deriv(&pack.nabla_riemann, m, i, i, c);
            }
            let block = dv + induced_derivation(&div, j);
            for p in 0..n {
                for q in 0..n {
                    rho[(c * n + p, q)] = block[(p, q)];
                }
            }
        }
    }

    let sym = (&v + v.transpose()) * 0.5;
    let lower_bound = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    WeitzenboeckData { degree: j, v, v_under, rho, lower_bound }
}

/// Combinatorial constant C(m, j) with |V_j| <= C(m, j) |Riem| pointwise:
/// counts the wedge-insert terms that survive on a degree-j component.
pub fn weitzenboeck_norm_constant(m: usize, j: usize) -> f64 {
    (m * j.min(m - j)) as f64
}
