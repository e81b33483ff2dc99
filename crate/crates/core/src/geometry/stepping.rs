//! Frame-carrying state for paths on the catalog manifolds, with two
//! stepping schemes.
//!
//! `GeodesicStep` moves along the exact exponential map and transports the
//! frame in closed form (embedded representation for the curved members), so
//! the only discretization error is the piecewise-geodesic interpolation
//! itself. `EulerHeun` is an independent chart-level Stratonovich midpoint
//! scheme with Gram-Schmidt re-orthonormalization after every step; the two
//! must agree on refined paths, which is the main consistency check on the
//! curved-space stepping.
//!
//! States carry the frame the Brownian increments are read in, so a step
//! consumes increments expressed in the *moving* frame.

use super::{embed, ManifoldKind, ModelManifold};
use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepScheme {
    /// Exact exponential map + closed-form parallel transport.
    GeodesicStep,
    /// Chart-level Stratonovich midpoint with frame re-orthonormalization.
    EulerHeun,
}

impl StepScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "geodesic_step" => Some(StepScheme::GeodesicStep),
            "euler_heun" => Some(StepScheme::EulerHeun),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepScheme::GeodesicStep => "geodesic_step",
            StepScheme::EulerHeun => "euler_heun",
        }
    }
}

/// Point plus orthonormal frame, in the representation suited to the scheme.
#[derive(Debug, Clone)]
pub enum GeodesicState {
    /// Chart coordinates with frame columns in chart components.
    Chart { x: Vec<f64>, e: DMatrix<f64> },
    /// Unit-sphere position with embedded tangent frame (radius lives on the
    /// manifold).
    Sphere { n: Vector3<f64>, e: [Vector3<f64>; 2] },
    /// Hyperboloid position with embedded (Minkowski-tangent) frame.
    Hyper { p: Vector3<f64>, e: [Vector3<f64>; 2] },
}

impl GeodesicState {
    pub fn new(man: &ModelManifold, x: &[f64], scheme: StepScheme) -> Result<Self> {
        if !man.contains(x) {
            return Err(Error::OutsideChart(format!("{x:?}")));
        }
        let x = man.canonicalize(x);
        match (man.kind(), scheme) {
            (ManifoldKind::Sphere2 { .. }, StepScheme::GeodesicStep) => {
                let n = embed::sphere_chart_to_unit(x[0], x[1]);
                let (t0, t1) = embed::sphere_frame(x[0], x[1]);
                Ok(GeodesicState::Sphere { n, e: [t0, t1] })
            }
            (ManifoldKind::HyperbolicPatch { .. }, StepScheme::GeodesicStep) => {
                let p = embed::disk_to_hyperboloid(&x);
                let lam = super::conformal_factor(&x);
                let cols = embed::disk_jacobian(&x);
                Ok(GeodesicState::Hyper { p, e: [cols[0] / lam, cols[1] / lam] })
            }
            _ => Ok(GeodesicState::Chart { e: man.orthonormal_frame(&x), x }),
        }
    }

    /// Chart coordinates of the current point.
    pub fn chart_point(&self, man: &ModelManifold) -> Vec<f64> {
        let raw = match self {
            GeodesicState::Chart { x, .. } => x.clone(),
            GeodesicState::Sphere { n, .. } => {
                let (theta, phi) = embed::sphere_unit_to_chart(n);
                vec![theta, phi]
            }
            GeodesicState::Hyper { p, .. } => embed::hyperboloid_to_disk(p).to_vec(),
        };
        man.canonicalize(&raw)
    }

    /// Frame columns in chart components (pulls embedded frames back).
    pub fn chart_frame(&self, man: &ModelManifold) -> DMatrix<f64> {
        match self {
            GeodesicState::Chart { e, .. } => e.clone(),
            GeodesicState::Sphere { n, e } => {
                let (theta, phi) = embed::sphere_unit_to_chart(n);
                let (t0, t1) = embed::sphere_frame(theta, phi);
                let radius = match man.kind() {
                    ManifoldKind::Sphere2 { radius } => *radius,
                    _ => unreachable!(),
                };
                // ambient -> chart: v^theta = (t0 . v)/radius,
                // v^phi = (t1 . v)/(radius sin theta)
                DMatrix::from_fn(2, 2, |row, col| {
                    let amb = &e[col];
                    if row == 0 {
                        t0.dot(amb) / radius
                    } else {
                        t1.dot(amb) / (radius * theta.sin())
                    }
                })
            }
            GeodesicState::Hyper { p, e } => {
                let u = embed::hyperboloid_to_disk(p);
                let lam = super::conformal_factor(&u);
                let cols = embed::disk_jacobian(&u);
                // chart ONF vectors are cols[b]/lam; chart components of an
                // ambient tangent v: v^b = mink(cols_b, v)/lam^2
                DMatrix::from_fn(2, 2, |row, col| {
                    embed::mink(&cols[row], &e[col]) / (lam * lam)
                })
            }
        }
    }

    /// Orthogonal change of frame O with (fixed components) = O (moving
    /// components): O_{ba} = <F_b, E_a> for F the coordinate orthonormal
    /// frame at the current point and E the carried frame.
    pub fn frame_change(&self, man: &ModelManifold) -> DMatrix<f64> {
        match self {
            GeodesicState::Chart { x, e } => {
                let g = man.metric(x);
                let f = man.orthonormal_frame(x);
                f.transpose() * g * e
            }
            GeodesicState::Sphere { n, e } => {
                let (theta, phi) = embed::sphere_unit_to_chart(n);
                let (t0, t1) = embed::sphere_frame(theta, phi);
                DMatrix::from_fn(2, 2, |b, a| {
                    let f = if b == 0 { &t0 } else { &t1 };
                    f.dot(&e[a])
                })
            }
            GeodesicState::Hyper { p, e } => {
                let u = embed::hyperboloid_to_disk(p);
                let lam = super::conformal_factor(&u);
                let cols = embed::disk_jacobian(&u);
                DMatrix::from_fn(2, 2, |b, a| embed::mink(&cols[b], &e[a]) / lam)
            }
        }
    }

    /// Max deviation of the frame Gram matrix from the identity.
    pub fn orthonormality_drift(&self, man: &ModelManifold) -> f64 {
        let gram = match self {
            GeodesicState::Chart { x, e } => {
                let g = man.metric(x);
                e.transpose() * g * e
            }
            GeodesicState::Sphere { e, .. } => {
                DMatrix::from_fn(2, 2, |a, b| e[a].dot(&e[b]))
            }
            GeodesicState::Hyper { e, .. } => {
                DMatrix::from_fn(2, 2, |a, b| embed::mink(&e[a], &e[b]))
            }
        };
        let m = gram.nrows();
        (gram - DMatrix::identity(m, m)).amax()
    }

    /// Restore exact orthonormality (tangency + Gram-Schmidt). Cheap; the
    /// exact schemes call it periodically to stop floating-point drift from
    /// compounding over long paths.
    pub fn renormalize(&mut self, man: &ModelManifold) {
        match self {
            GeodesicState::Chart { x, e } => {
                let g = man.metric(x);
                linalg::gram_schmidt_metric(e, &g);
            }
            GeodesicState::Sphere { n, e } => {
                n.normalize_mut();
                for v in e.iter_mut() {
                    *v -= *n * n.dot(v);
                }
                e[0].normalize_mut();
                let proj = e[0].dot(&e[1]);
                e[1] -= e[0] * proj;
                e[1].normalize_mut();
            }
            GeodesicState::Hyper { p, e } => {
                // rescale to the hyperboloid sheet mink(p, p) = -1
                let s = (-embed::mink(p, p)).sqrt();
                *p /= s;
                for v in e.iter_mut() {
                    *v += *p * embed::mink(v, p);
                }
                let n0 = embed::mink(&e[0], &e[0]).sqrt();
                e[0] /= n0;
                let proj = embed::mink(&e[0], &e[1]);
                e[1] -= e[0] * proj;
                let n1 = embed::mink(&e[1], &e[1]).sqrt();
                e[1] /= n1;
            }
        }
    }

    /// Advance by the moving-frame increment `dw`. Returns the
    /// re-orthonormalization drift consumed by the step (zero for the exact
    /// schemes, which do not renormalize here).
    pub fn step(&mut self, man: &ModelManifold, dw: &[f64]) -> f64 {
        match self {
            GeodesicState::Sphere { n, e } => {
                let radius = match man.kind() {
                    ManifoldKind::Sphere2 { radius } => *radius,
                    _ => unreachable!(),
                };
                let amb = e[0] * dw[0] + e[1] * dw[1];
                let len = amb.norm();
                if len > 0.0 {
                    let dir = amb / len;
                    *n = embed::sphere_geodesic(n, &dir, len / radius, e);
                }
                0.0
            }
            GeodesicState::Hyper { p, e } => {
                let amb = e[0] * dw[0] + e[1] * dw[1];
                let len2 = embed::mink(&amb, &amb);
                if len2 > 0.0 {
                    let len = len2.sqrt();
                    let dir = amb / len;
                    *p = embed::hyperbolic_geodesic(p, &dir, len, e);
                }
                0.0
            }
            GeodesicState::Chart { x, e } => {
                // both drift evaluations must happen in one chart
                // representation; canonicalization waits until the step is
                // complete (a mid-step polar reflection would flip the frame
                // between the two evaluations and cancel them)
                let (dx1, de1) = chart_drift(man, x, e, dw);
                let mut xp: Vec<f64> = x.iter().zip(&dx1).map(|(a, b)| a + b).collect();
                let ep = &*e + &de1;
                chart_guard(man, &mut xp);
                let (dx2, de2) = chart_drift(man, &xp, &ep, dw);
                for (c, v) in x.iter_mut().enumerate() {
                    *v += 0.5 * (dx1[c] + dx2[c]);
                }
                *e += (de1 + de2) * 0.5;
                chart_canonical(man, x, e);
                let g = man.metric(x);
                linalg::gram_schmidt_metric(e, &g)
            }
        }
    }
}

/// One Stratonovich drift evaluation: chart displacement `e dw` and the
/// parallel-transport response of the frame columns.
fn chart_drift(
    man: &ModelManifold,
    x: &[f64],
    e: &DMatrix<f64>,
    dw: &[f64],
) -> (Vec<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut dx = vec![0.0; m];
    for c in 0..m {
        for a in 0..m {
            dx[c] += e[(c, a)] * dw[a];
        }
    }
    let gamma = man.christoffel(x);
    let mut de = DMatrix::zeros(m, m);
    for c in 0..m {
        for a in 0..m {
            let mut acc = 0.0;
            for b in 0..m {
                for d in 0..m {
                    acc += gamma[c][(b, d)] * e[(b, a)] * dx[d];
                }
            }
            de[(c, a)] = -acc;
        }
    }
    (dx, de)
}

/// Mid-step guard: keep the predictor inside the region where the chart
/// data stays finite, without changing the representation.
fn chart_guard(man: &ModelManifold, x: &mut [f64]) {
    match man.kind() {
        ManifoldKind::FlatTorus { .. } => {}
        ManifoldKind::Sphere2 { .. } => {
            // the chart formulas extend smoothly to theta outside (0, pi);
            // only sin(theta) = 0 itself must be avoided
            let s = x[0].sin();
            if s.abs() < embed::POLE_EPS {
                x[0] += embed::POLE_EPS.copysign(if s == 0.0 { 1.0 } else { s });
            }
        }
        ManifoldKind::HyperbolicPatch { bound } => {
            // guard the conformal factor; points past the exit boundary are
            // stopped by the caller, this only keeps the arithmetic finite
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let cap = 0.5 * (1.0 + bound);
            if r > cap {
                let s = cap / r;
                x[0] *= s;
                x[1] *= s;
            }
        }
    }
}

/// End-of-step canonicalization: wrap periodic coordinates and reflect the
/// sphere's polar excursions (theta -> -theta composed with phi -> phi + pi
/// fixes the point and flips the d_theta frame components).
fn chart_canonical(man: &ModelManifold, x: &mut [f64], e: &mut DMatrix<f64>) {
    match man.kind() {
        ManifoldKind::FlatTorus { periods } => {
            for (v, p) in x.iter_mut().zip(periods) {
                *v = v.rem_euclid(*p);
            }
        }
        ManifoldKind::Sphere2 { .. } => {
            let pi = std::f64::consts::PI;
            if x[0] < 0.0 {
                x[0] = -x[0];
                x[1] += pi;
                for a in 0..2 {
                    e[(0, a)] = -e[(0, a)];
                }
            } else if x[0] > pi {
                x[0] = 2.0 * pi - x[0];
                x[1] += pi;
                for a in 0..2 {
                    e[(0, a)] = -e[(0, a)];
                }
            }
            x[0] = x[0].clamp(embed::POLE_EPS, pi - embed::POLE_EPS);
            x[1] = x[1].rem_euclid(2.0 * pi);
        }
        ManifoldKind::HyperbolicPatch { .. } => chart_guard(man, x),
    }
}

