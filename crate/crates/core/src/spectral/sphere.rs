//! Real spherical-harmonic eigenbasis on round 2-spheres.
//!
//! Scalars are orthonormalized real harmonics Y_{l,m} built from the
//! fully-normalized associated Legendre recurrence (no factorials, stable to
//! high band). Degree-1 entries are d(Y)/sqrt(lambda) (exact family) and
//! star d(Y)/sqrt(lambda) (coexact family); both have eigenvalue
//! l(l+1)/rho^2, and on a 2-sphere they span all 1-form eigensections.
//! Degree-2 entries are star-conjugated scalars. Components are reported in
//! the orthonormal coframe of the polar chart, rho dtheta and
//! rho sin(theta) dphi.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ModelManifold};

use super::{BasisEntry, EntryKey, Trig};

/// Fully normalized associated Legendre values (Q_l^m, Q_{l-1}^m) at theta,
/// where Y_{l,0} = Q_l^0 and Y_{l,m>0} = Q_l^m * sqrt(2) trig(m phi) are
/// orthonormal on the unit sphere.
fn q_pair(l: usize, m: usize, theta: f64) -> (f64, f64) {
    debug_assert!(m <= l);
    let (s, c) = theta.sin_cos();
    // seed Q_m^m
    let mut q = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for i in 1..=m {
        q *= s * ((2 * i + 1) as f64 / (2 * i) as f64).sqrt();
    }
    if l == m {
        return (q, 0.0);
    }
    // upward recurrence in degree
    let mut prev = 0.0f64;
    for deg in (m + 1)..=l {
        let df = deg as f64;
        let mf = m as f64;
        let alpha = ((4.0 * df * df - 1.0) / (df * df - mf * mf)).sqrt();
        let beta = (((df - 1.0) * (df - 1.0) - mf * mf) / (4.0 * (df - 1.0) * (df - 1.0) - 1.0))
            .sqrt();
        let next = alpha * (c * q - beta * prev);
        prev = q;
        q = next;
    }
    (q, prev)
}

/// Scalar harmonic 2-jet at a chart point: value, first and second partials
/// with respect to (theta, phi), all including the 1/rho normalization that
/// makes the family orthonormal on the radius-rho sphere.
pub(super) struct Jet {
    pub y: f64,
    pub yt: f64,
    pub yp: f64,
    pub ytt: f64,
    pub ytp: f64,
    pub ypp: f64,
}

pub(super) fn scalar_jet(l: usize, trig: Trig, rho: f64, x: &[f64]) -> Jet {
    let (theta, phi) = (x[0], x[1]);
    let m = trig.order();
    let (q, q_prev) = q_pair(l, m, theta);
    let (s, c) = theta.sin_cos();
    let lf = l as f64;
    let mf = m as f64;
    // theta-derivatives: dQ from the lowering relation, d2Q from the ODE
    let gamma = if l == 0 {
        0.0
    } else {
        ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt()
    };
    let dq = if l == 0 {
        0.0
    } else {
        (lf * c * q - gamma * q_prev) / s
    };
    let d2q = -(c / s) * dq + (mf * mf / (s * s) - lf * (lf + 1.0)) * q;
    // longitude factor; sqrt(2) for m > 0 keeps the real family orthonormal
    let (t, dt) = match trig {
        Trig::Cos(0) => (1.0, 0.0),
        Trig::Cos(_) => {
            let a = mf * phi;
            (2f64.sqrt() * a.cos(), -2f64.sqrt() * mf * a.sin())
        }
        Trig::Sin(m) => {
            debug_assert!(m > 0, "sin harmonic needs positive order");
            let a = mf * phi;
            (2f64.sqrt() * a.sin(), 2f64.sqrt() * mf * a.cos())
        }
    };
    let d2t = -mf * mf * t;
    Jet {
        y: q * t / rho,
        yt: dq * t / rho,
        yp: q * dt / rho,
        ytt: d2q * t / rho,
        ytp: dq * dt / rho,
        ypp: q * d2t / rho,
    }
}

/// Orthonormal-frame components of dY and of the covariant Hessian of Y.
struct OneJet {
    d: [f64; 2],
    hess: [[f64; 2]; 2],
}

fn one_jet(jet: &Jet, rho: f64, theta: f64) -> OneJet {
    let (s, c) = theta.sin_cos();
    let d = [jet.yt / rho, jet.yp / (rho * s)];
    let h11 = jet.ytt / (rho * rho);
    let h12 = (jet.ytp / s - c * jet.yp / (s * s)) / (rho * rho);
    let h22 = (jet.ypp / (s * s) + c * jet.yt / s) / (rho * rho);
    OneJet {
        d,
        hess: [[h11, h12], [h12, h22]],
    }
}

fn trigs(l: usize) -> Vec<Trig> {
    let mut out = vec![Trig::Cos(0)];
    for m in 1..=l {
        out.push(Trig::Cos(m));
        out.push(Trig::Sin(m));
    }
    out
}

pub(super) fn build_entries(
    man: &ModelManifold,
    band: usize,
    j: usize,
) -> Result<Vec<BasisEntry>> {
    let ManifoldKind::Sphere2 { radius } = man.kind() else {
        return Err(Error::InvalidInput("sphere basis needs a 2-sphere".into()));
    };
    if j > 2 {
        return Err(Error::DegreeOutOfRange { j, m: 2 });
    }
    if band == 0 && j == 1 {
        return Err(Error::InvalidInput(
            "degree-1 sphere basis needs band >= 1".into(),
        ));
    }
    let rho2 = radius * radius;
    let mut entries = Vec::new();
    let l_min = if j == 1 { 1 } else { 0 };
    for l in l_min..=band {
        let lambda = (l * (l + 1)) as f64 / rho2;
        for trig in trigs(l) {
            match j {
                0 => entries.push(BasisEntry {
                    lambda,
                    key: EntryKey::SphereScalar { l, trig },
                    k: Vec::new(),
                    norm: 1.0,
                }),
                1 => {
                    for coexact in [false, true] {
                        entries.push(BasisEntry {
                            lambda,
                            key: EntryKey::SphereOne { l, trig, coexact },
                            k: Vec::new(),
                            norm: 1.0,
                        });
                    }
                }
                _ => entries.push(BasisEntry {
                    lambda,
                    key: EntryKey::SphereTwo { l, trig },
                    k: Vec::new(),
                    norm: 1.0,
                }),
            }
        }
    }
    entries.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then_with(|| a.key.cmp(&b.key))
    });
    Ok(entries)
}

fn rho_of(man: &ModelManifold) -> f64 {
    match man.kind() {
        ManifoldKind::Sphere2 { radius } => *radius,
        _ => unreachable!("sphere evaluator on a sphere basis"),
    }
}

pub(super) fn value(man: &ModelManifold, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    let rho = rho_of(man);
    match &e.key {
        EntryKey::SphereScalar { l, trig } => {
            let jet = scalar_jet(*l, *trig, rho, x);
            DVector::from_vec(vec![jet.y])
        }
        EntryKey::SphereOne { l, trig, coexact } => {
            let jet = scalar_jet(*l, *trig, rho, x);
            let one = one_jet(&jet, rho, x[0]);
            let s = 1.0 / e.lambda.sqrt();
            if *coexact {
                DVector::from_vec(vec![-one.d[1] * s, one.d[0] * s])
            } else {
                DVector::from_vec(vec![one.d[0] * s, one.d[1] * s])
            }
        }
        EntryKey::SphereTwo { l, trig } => {
            let jet = scalar_jet(*l, *trig, rho, x);
            DVector::from_vec(vec![jet.y])
        }
        EntryKey::Torus { .. } => unreachable!(),
    }
}

pub(super) fn gradient(man: &ModelManifold, e: &BasisEntry, x: &[f64]) -> DMatrix<f64> {
    let rho = rho_of(man);
    match &e.key {
        EntryKey::SphereScalar { l, trig } | EntryKey::SphereTwo { l, trig } => {
            // the volume form is parallel, so the degree-2 gradient equals
            // the scalar one on the single component
            let jet = scalar_jet(*l, *trig, rho, x);
            let one = one_jet(&jet, rho, x[0]);
            DMatrix::from_column_slice(2, 1, &[one.d[0], one.d[1]])
        }
        EntryKey::SphereOne { l, trig, coexact } => {
            let jet = scalar_jet(*l, *trig, rho, x);
            let one = one_jet(&jet, rho, x[0]);
            let s = 1.0 / e.lambda.sqrt();
            let mut out = DMatrix::zeros(2, 2);
            for c in 0..2 {
                if *coexact {
                    out[(c, 0)] = -one.hess[c][1] * s;
                    out[(c, 1)] = one.hess[c][0] * s;
                } else {
                    out[(c, 0)] = one.hess[c][0] * s;
                    out[(c, 1)] = one.hess[c][1] * s;
                }
            }
            out
        }
        EntryKey::Torus { .. } => unreachable!(),
    }
}

pub(super) fn d_value(man: &ModelManifold, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    let rho = rho_of(man);
    match &e.key {
        EntryKey::SphereScalar { l, trig } => {
            let jet = scalar_jet(*l, *trig, rho, x);
            let one = one_jet(&jet, rho, x[0]);
            DVector::from_vec(vec![one.d[0], one.d[1]])
        }
        EntryKey::SphereOne { l, trig, coexact } => {
            if !coexact {
                return DVector::zeros(1);
            }
            // d(star dY)/sqrt(lambda) = -sqrt(lambda) (Y vol)
            let jet = scalar_jet(*l, *trig, rho, x);
            DVector::from_vec(vec![-e.lambda.sqrt() * jet.y])
        }
        EntryKey::SphereTwo { .. } => DVector::zeros(0),
        EntryKey::Torus { .. } => unreachable!(),
    }
}

pub(super) fn ddagger_value(man: &ModelManifold, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    let rho = rho_of(man);
    match &e.key {
        EntryKey::SphereScalar { .. } => DVector::zeros(0),
        EntryKey::SphereOne { l, trig, coexact } => {
            if *coexact {
                return DVector::zeros(1);
            }
            let jet = scalar_jet(*l, *trig, rho, x);
            DVector::from_vec(vec![e.lambda.sqrt() * jet.y])
        }
        EntryKey::SphereTwo { l, trig } => {
            // d`†`(star Y) = -star dY
            let jet = scalar_jet(*l, *trig, rho, x);
            let one = one_jet(&jet, rho, x[0]);
            DVector::from_vec(vec![one.d[1], -one.d[0]])
        }
        EntryKey::Torus { .. } => unreachable!(),
    }
}

/// Coefficient-level d: scalars feed the exact family, the coexact family
/// feeds the volume forms; everything else is closed.
pub(super) fn d_map(
    src: &super::SpectralBasis,
    dst: &super::SpectralBasis,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(dst.len());
    for (i, e) in src.entries().iter().enumerate() {
        let c_in = coeffs[i];
        if c_in == 0.0 {
            continue;
        }
        let (key, scale) = match &e.key {
            EntryKey::SphereScalar { l, trig } => {
                if *l == 0 {
                    continue;
                }
                (
                    EntryKey::SphereOne {
                        l: *l,
                        trig: *trig,
                        coexact: false,
                    },
                    e.lambda.sqrt(),
                )
            }
            EntryKey::SphereOne { l, trig, coexact } => {
                if !coexact {
                    continue;
                }
                (
                    EntryKey::SphereTwo { l: *l, trig: *trig },
                    -e.lambda.sqrt(),
                )
            }
            EntryKey::SphereTwo { .. } => continue,
            EntryKey::Torus { .. } => unreachable!(),
        };
        let target = dst
            .lookup(&key)
            .ok_or_else(|| Error::InvalidInput("image mode missing from target basis".into()))?;
        out[target] += scale * c_in;
    }
    Ok(out)
}

pub(super) fn ddagger_map(
    src: &super::SpectralBasis,
    dst: &super::SpectralBasis,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(dst.len());
    for (i, e) in src.entries().iter().enumerate() {
        let c_in = coeffs[i];
        if c_in == 0.0 {
            continue;
        }
        let (key, scale) = match &e.key {
            EntryKey::SphereOne { l, trig, coexact } => {
                if *coexact {
                    continue;
                }
                (EntryKey::SphereScalar { l: *l, trig: *trig }, e.lambda.sqrt())
            }
            EntryKey::SphereTwo { l, trig } => {
                if *l == 0 {
                    continue;
                }
                (
                    EntryKey::SphereOne {
                        l: *l,
                        trig: *trig,
                        coexact: true,
                    },
                    -e.lambda.sqrt(),
                )
            }
            EntryKey::SphereScalar { .. } => continue,
            EntryKey::Torus { .. } => unreachable!(),
        };
        let target = dst
            .lookup(&key)
            .ok_or_else(|| Error::InvalidInput("image mode missing from target basis".into()))?;
        out[target] += scale * c_in;
    }
    Ok(out)
}
