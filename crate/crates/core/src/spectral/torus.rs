//! Fourier eigenbasis on flat tori.
//!
//! Real modes: the constant 1/sqrt(V), plus sqrt(2/V) cos(k.x) and
//! sqrt(2/V) sin(k.x) for each lattice frequency k = 2 pi (n_1/L_1, ...,
//! n_m/L_m) with n in the half lattice (first nonzero coordinate positive)
//! and |n|_inf <= band. Degree-j entries tensor a mode with a constant
//! orthonormal coframe e^I; every coframe is parallel, so the rough and
//! Hodge Laplacians agree and the eigenvalue is |k|^2.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ModelManifold};
use crate::linalg::{binom, multi_index_position, multi_indices};

use super::{BasisEntry, EntryKey, Trig};

/// Insert axis `c` into the increasing multi-index `idx`; returns the target
/// position among degree-(j+1) indices and the sign of sorting `e^c ^ e^idx`.
pub(super) fn wedge_index(m: usize, idx: &[usize], c: usize) -> Option<(usize, f64)> {
    if idx.contains(&c) {
        return None;
    }
    let before = idx.iter().filter(|&&r| r < c).count();
    let mut target: Vec<usize> = idx.to_vec();
    target.push(c);
    target.sort_unstable();
    let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
    Some((multi_index_position(m, &target), sign))
}

/// Remove axis `c` from `idx` (interior product slot); returns the target
/// position among degree-(j-1) indices and the sign (-1)^{position of c}.
pub(super) fn contract_index(m: usize, idx: &[usize], c: usize) -> Option<(usize, f64)> {
    let slot = idx.iter().position(|&r| r == c)?;
    let mut target: Vec<usize> = idx.to_vec();
    target.remove(slot);
    let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
    Some((multi_index_position(m, &target), sign))
}

/// Scalar mode value and gradient at x.
pub(super) fn mode_jet(k: &[f64], trig: Trig, norm: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let arg: f64 = k.iter().zip(x).map(|(ki, xi)| ki * xi).sum();
    let (v, dv) = match trig {
        Trig::Cos(_) => (arg.cos(), -arg.sin()),
        Trig::Sin(_) => (arg.sin(), arg.cos()),
    };
    let grad = k.iter().map(|ki| norm * dv * ki).collect();
    (norm * v, grad)
}

/// Half-lattice enumeration: n = 0 first, then every |n|_inf <= band whose
/// first nonzero coordinate is positive, in lexicographic order.
pub(super) fn half_lattice(m: usize, band: usize) -> Vec<Vec<i64>> {
    let b = band as i64;
    let mut out = vec![vec![0i64; m]];
    let mut cur = vec![0i64; m];
    fn rec(m: usize, b: i64, slot: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if slot == m {
            if cur.iter().any(|&c| c != 0) {
                out.push(cur.clone());
            }
            return;
        }
        for v in -b..=b {
            cur[slot] = v;
            rec(m, b, slot + 1, cur, out);
        }
        cur[slot] = 0;
    }
    rec(m, b, 0, &mut cur, &mut out);
    out.retain(|n| {
        n.iter()
            .find(|&&c| c != 0)
            .map(|&first| first > 0)
            .unwrap_or(true)
    });
    out
}

pub(super) fn build_entries(
    man: &ModelManifold,
    band: usize,
    j: usize,
) -> Result<Vec<BasisEntry>> {
    let ManifoldKind::FlatTorus { periods } = man.kind() else {
        return Err(Error::InvalidInput("torus basis needs a flat torus".into()));
    };
    let m = man.dimension();
    if j > m {
        return Err(Error::DegreeOutOfRange { j, m });
    }
    let vol = man.total_volume();
    let coframes = multi_indices(m, j);
    let tau = 2.0 * std::f64::consts::PI;
    let mut entries = Vec::new();
    for n in half_lattice(m, band) {
        let k: Vec<f64> = n
            .iter()
            .zip(periods)
            .map(|(&ni, li)| tau * ni as f64 / li)
            .collect();
        let lambda: f64 = k.iter().map(|ki| ki * ki).sum();
        let zero = n.iter().all(|&c| c == 0);
        let norm = if zero {
            (1.0 / vol).sqrt()
        } else {
            (2.0 / vol).sqrt()
        };
        let trigs: &[Trig] = if zero {
            &[Trig::Cos(0)]
        } else {
            &[Trig::Cos(0), Trig::Sin(0)]
        };
        for &trig in trigs {
            for (pos, _) in coframes.iter().enumerate() {
                entries.push(BasisEntry {
                    lambda,
                    key: EntryKey::Torus {
                        n: n.clone(),
                        trig,
                        coframe: pos,
                    },
                    k: k.clone(),
                    norm,
                });
            }
        }
    }
    // sort by eigenvalue, ties broken by the (deterministic) key order
    entries.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then_with(|| a.key.cmp(&b.key))
    });
    Ok(entries)
}

/// Component vector of mode x coframe at x.
pub(super) fn value(m: usize, j: usize, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    let EntryKey::Torus { trig, coframe, .. } = &e.key else {
        unreachable!("torus evaluator on a torus entry")
    };
    let (v, _) = mode_jet(&e.k, *trig, e.norm, x);
    let mut out = DVector::zeros(binom(m, j));
    out[*coframe] = v;
    out
}

/// Covariant derivative, rows = direction c, cols = form component.
pub(super) fn gradient(m: usize, j: usize, e: &BasisEntry, x: &[f64]) -> DMatrix<f64> {
    let EntryKey::Torus { trig, coframe, .. } = &e.key else {
        unreachable!()
    };
    let (_, grad) = mode_jet(&e.k, *trig, e.norm, x);
    let mut out = DMatrix::zeros(m, binom(m, j));
    for c in 0..m {
        out[(c, *coframe)] = grad[c];
    }
    out
}

/// d(f e^I) = sum_c (d_c f) e^c ^ e^I.
pub(super) fn d_value(m: usize, j: usize, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    let EntryKey::Torus { trig, coframe, .. } = &e.key else {
        unreachable!()
    };
    let idx = &multi_indices(m, j)[*coframe];
    let (_, grad) = mode_jet(&e.k, *trig, e.norm, x);
    let mut out = DVector::zeros(binom(m, j + 1));
    for (c, gc) in grad.iter().enumerate() {
        if let Some((pos, sign)) = wedge_index(m, idx, c) {
            out[pos] += sign * gc;
        }
    }
    out
}

/// d`†`(f e^I) = -sum_c (d_c f) i_{e_c} e^I (flat-space codifferential).
pub(super) fn ddagger_value(m: usize, j: usize, e: &BasisEntry, x: &[f64]) -> DVector<f64> {
    if j == 0 {
        return DVector::zeros(0);
    }
    let EntryKey::Torus { trig, coframe, .. } = &e.key else {
        unreachable!()
    };
    let idx = &multi_indices(m, j)[*coframe];
    let (_, grad) = mode_jet(&e.k, *trig, e.norm, x);
    let mut out = DVector::zeros(binom(m, j - 1));
    for (c, gc) in grad.iter().enumerate() {
        if let Some((pos, sign)) = contract_index(m, idx, c) {
            out[pos] -= sign * gc;
        }
    }
    out
}

/// Exact coefficient-level image of d on a coefficient vector, expressed in
/// the degree-(j+1) basis. The two bases must share the lattice band.
pub(super) fn d_map(
    src: &super::SpectralBasis,
    dst: &super::SpectralBasis,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    first_order_map(src, dst, coeffs, true)
}

/// Exact coefficient-level image of d`†`, in the degree-(j-1) basis.
pub(super) fn ddagger_map(
    src: &super::SpectralBasis,
    dst: &super::SpectralBasis,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    first_order_map(src, dst, coeffs, false)
}

/// Differentiating a real mode swaps cos and sin: d_c cos(k.x) = -k_c sin,
/// d_c sin(k.x) = k_c cos. Wedge or contract the coframe accordingly.
fn first_order_map(
    src: &super::SpectralBasis,
    dst: &super::SpectralBasis,
    coeffs: &DVector<f64>,
    up: bool,
) -> Result<DVector<f64>> {
    let m = src.manifold().dimension();
    let j = src.degree();
    let src_idx = multi_indices(m, j);
    let mut out = DVector::zeros(dst.len());
    for (i, e) in src.entries().iter().enumerate() {
        let c_in = coeffs[i];
        if c_in == 0.0 {
            continue;
        }
        let EntryKey::Torus { n, trig, coframe } = &e.key else {
            unreachable!()
        };
        let idx = &src_idx[*coframe];
        // coefficient of the swapped-phase mode produced by d_c
        let (new_trig, phase_sign) = match trig {
            Trig::Cos(_) => (Trig::Sin(0), -1.0),
            Trig::Sin(_) => (Trig::Cos(0), 1.0),
        };
        for c in 0..m {
            if e.k[c] == 0.0 {
                continue;
            }
            let step = if up {
                wedge_index(m, idx, c)
            } else {
                contract_index(m, idx, c).map(|(p, s)| (p, -s))
            };
            let Some((pos, sign)) = step else { continue };
            let key = EntryKey::Torus {
                n: n.clone(),
                trig: new_trig,
                coframe: pos,
            };
            let target = dst.lookup(&key).ok_or_else(|| {
                Error::InvalidInput("target basis does not contain the image mode".into())
            })?;
            out[target] += c_in * phase_sign * e.k[c] * sign;
        }
    }
    Ok(out)
}
