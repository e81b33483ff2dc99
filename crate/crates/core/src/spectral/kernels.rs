//! Pointwise heat kernels on the catalog manifolds.
//!
//! Two independent routes are provided. `HeatKernel` is a closed-form engine:
//! lattice image sums on flat tori (Jacobi transform of the mode sum, valid
//! at every positive time) and Legendre addition-theorem sums on the sphere.
//! `heat_kernel` / `grad_heat_kernel` evaluate the truncated eigensum of a
//! `SpectralBasis` and certify it with an explicit bound on the discarded
//! tail, refusing (with a minimum-reliable-time advisory) when the bound
//! exceeds `KERNEL_TAIL_TOL`. Agreement of the two routes is a test target.
//!
//! Kernel values are matrices mapping coframe components at the second point
//! to components at the first; gradients act on the first point and are
//! flattened direction-major, matching field gradient layout.

use nalgebra::{DMatrix, Matrix2, Vector2};

use super::SpectralBasis;
use crate::error::{Error, Result};
use crate::geometry::embed::{sphere_chart_to_unit, sphere_frame};
use crate::geometry::{ManifoldKind, ModelManifold};
use crate::linalg::binom;

/// Absolute per-entry tolerance on the truncation tail of basis kernels.
pub const KERNEL_TAIL_TOL: f64 = 1e-10;

/// Closed-form heat kernel engine for degree-j forms.
pub struct HeatKernel {
    man: ModelManifold,
    degree: usize,
    dim: usize,
}

impl HeatKernel {
    pub fn new(man: &ModelManifold, j: usize) -> Result<Self> {
        let m = man.dimension();
        match man.kind() {
            ManifoldKind::FlatTorus { .. } => {
                if j > m {
                    return Err(Error::DegreeOutOfRange { j, m });
                }
            }
            ManifoldKind::Sphere2 { .. } => {
                if j > 2 {
                    return Err(Error::DegreeOutOfRange { j, m });
                }
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                return Err(Error::UnsupportedManifold(
                    "no closed-form heat kernel on the hyperbolic patch".into(),
                ));
            }
        }
        Ok(HeatKernel {
            man: man.clone(),
            degree: j,
            dim: binom(m, j),
        })
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.man
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn component_dim(&self) -> usize {
        self.dim
    }

    /// Kernel matrix K_t(x, y), dim x dim.
    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let x = self.man.canonicalize(x);
        let y = self.man.canonicalize(y);
        match self.man.kind() {
            ManifoldKind::FlatTorus { periods } => {
                let s = torus_scalar(periods, t, &x, &y);
                Ok(DMatrix::identity(self.dim, self.dim) * s)
            }
            ManifoldKind::Sphere2 { radius } => Ok(sphere_eval(*radius, self.degree, t, &x, &y)),
            ManifoldKind::HyperbolicPatch { .. } => unreachable!("rejected at construction"),
        }
    }

    /// Covariant derivative of the kernel in its first argument:
    /// (m * dim) x dim, rows flattened as (direction, component).
    pub fn eval_grad(&self, t: f64, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let x = self.man.canonicalize(x);
        let y = self.man.canonicalize(y);
        let m = self.man.dimension();
        match self.man.kind() {
            ManifoldKind::FlatTorus { periods } => {
                let mut out = DMatrix::zeros(m * self.dim, self.dim);
                for c in 0..m {
                    let mut s = 1.0;
                    for a in 0..m {
                        let d = x[a] - y[a];
                        s *= if a == c {
                            theta_sum_deriv(d, periods[a], t)
                        } else {
                            theta_sum(d, periods[a], t)
                        };
                    }
                    for p in 0..self.dim {
                        out[(c * self.dim + p, p)] = s;
                    }
                }
                Ok(out)
            }
            ManifoldKind::Sphere2 { radius } => {
                Ok(sphere_eval_grad(*radius, self.degree, t, &x, &y))
            }
            ManifoldKind::HyperbolicPatch { .. } => unreachable!("rejected at construction"),
        }
    }

    /// Scalar kernel value, for degrees where the kernel is a multiple of
    /// the identity (all torus degrees; sphere degrees 0 and 2).
    pub fn scalar(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if matches!(self.man.kind(), ManifoldKind::Sphere2 { .. }) && self.degree == 1 {
            return Err(Error::InvalidInput(
                "degree-1 sphere kernel is not scalar".into(),
            ));
        }
        Ok(self.eval(t, x, y)?[(0, 0)])
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("kernel time must be positive, got {t}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// flat torus: lattice image sums
// ---------------------------------------------------------------------------

/// One-dimensional periodic heat kernel sum_w exp(-(d + wL)^2 / 4t) / sqrt(4 pi t).
pub(crate) fn theta_sum(d: f64, period: f64, t: f64) -> f64 {
    let scale = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    let w_max = image_range(d, period, t);
    let mut acc = 0.0;
    for w in -w_max..=w_max {
        let s = d + w as f64 * period;
        acc += (-s * s / (4.0 * t)).exp();
    }
    acc * scale
}

/// Derivative of `theta_sum` in d.
pub(crate) fn theta_sum_deriv(d: f64, period: f64, t: f64) -> f64 {
    let scale = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    let w_max = image_range(d, period, t);
    let mut acc = 0.0;
    for w in -w_max..=w_max {
        let s = d + w as f64 * period;
        acc += -(s / (2.0 * t)) * (-s * s / (4.0 * t)).exp();
    }
    acc * scale
}

/// Images within ~9.5 Gaussian widths of the nearest one contribute above
/// relative 1e-39; everything further is dropped.
fn image_range(d: f64, period: f64, t: f64) -> i64 {
    let spread = 9.5 * (4.0 * t).sqrt() + d.abs();
    (spread / period).ceil() as i64 + 1
}

fn torus_scalar(periods: &[f64], t: f64, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 1.0;
    for a in 0..periods.len() {
        s *= theta_sum(x[a] - y[a], periods[a], t);
    }
    s
}

/// sum over n in Z of exp(-t k_n^2), k_n = 2 pi n / L, via the image form.
fn lattice_exp_sum(period: f64, t: f64) -> f64 {
    period * theta_sum(0.0, period, t)
}

fn lattice_exp_sum_box(period: f64, t: f64, band: i64) -> f64 {
    let mut acc = 0.0;
    for n in -band..=band {
        let k = 2.0 * std::f64::consts::PI * n as f64 / period;
        acc += (-t * k * k).exp();
    }
    acc
}

/// sum over n in Z of |k_n| exp(-t k_n^2); direct summation to underflow.
fn lattice_weighted_sum(period: f64, t: f64) -> f64 {
    let mut acc = 0.0;
    let mut n = 1i64;
    loop {
        let k = 2.0 * std::f64::consts::PI * n as f64 / period;
        let term = 2.0 * k * (-t * k * k).exp();
        acc += term;
        if t * k * k > 750.0 {
            break;
        }
        n += 1;
    }
    acc
}

fn lattice_weighted_sum_box(period: f64, t: f64, band: i64) -> f64 {
    let mut acc = 0.0;
    for n in 1..=band {
        let k = 2.0 * std::f64::consts::PI * n as f64 / period;
        acc += 2.0 * k * (-t * k * k).exp();
    }
    acc
}

// ---------------------------------------------------------------------------
// sphere: Legendre addition-theorem sums
// ---------------------------------------------------------------------------

/// Accumulates sum over l >= l_start of scale(l, lambda_l) * exp(-t lambda_l)
/// times P_l^(k)(u) for k = 0..=3, tracking the Legendre value and its first
/// three u-derivatives through the three-term recurrence.
fn legendre_heat_sums(
    rho: f64,
    t: f64,
    u: f64,
    l_start: usize,
    scale: impl Fn(usize, f64) -> f64,
) -> [f64; 4] {
    let mut acc = [0.0_f64; 4];
    // P_{l}(u) and derivatives for l, l-1
    let (mut p0, mut p1, mut p2, mut p3) = (1.0_f64, 0.0, 0.0, 0.0);
    let (mut q0, mut q1, mut q2, mut q3) = (0.0_f64, 0.0, 0.0, 0.0);
    let mut l = 0usize;
    let mut acc_scale = 1e-300_f64;
    loop {
        let lambda = (l * (l + 1)) as f64 / (rho * rho);
        let damp = (-t * lambda).exp();
        if l >= l_start {
            let w = scale(l, lambda) * damp;
            acc[0] += w * p0;
            acc[1] += w * p1;
            acc[2] += w * p2;
            acc[3] += w * p3;
            for a in acc {
                acc_scale = acc_scale.max(a.abs());
            }
        }
        let pmax = p0.abs().max(p1.abs()).max(p2.abs()).max(p3.abs()).max(1.0);
        let done_damped = t * lambda > 760.0 + 7.0 * (1.0 + l as f64).ln();
        let done_relative =
            t * lambda > 40.0 && damp * pmax * (l as f64 + 10.0).powi(4) < 1e-22 * acc_scale;
        if done_damped || done_relative {
            break;
        }
        // advance l -> l+1
        let lf = l as f64;
        let a = (2.0 * lf + 1.0) / (lf + 1.0);
        let b = lf / (lf + 1.0);
        let n0 = a * u * p0 - b * q0;
        let n1 = a * (p0 + u * p1) - b * q1;
        let n2 = a * (2.0 * p1 + u * p2) - b * q2;
        let n3 = a * (3.0 * p2 + u * p3) - b * q3;
        (q0, q1, q2, q3) = (p0, p1, p2, p3);
        (p0, p1, p2, p3) = (n0, n1, n2, n3);
        l += 1;
    }
    acc
}

/// Two-point frame data on the sphere: the unit normals, the chart
/// orthonormal frames, and the scalar invariants of the squared-distance
/// calculus.
struct SpherePair {
    u: f64,
    /// gradient of u in the first argument, frame components
    v: Vector2<f64>,
    /// gradient of u in the second argument, frame components
    w: Vector2<f64>,
    /// mixed second derivative of u
    tt: Matrix2<f64>,
}

fn sphere_pair(rho: f64, x: &[f64], y: &[f64]) -> SpherePair {
    let nx = sphere_chart_to_unit(x[0], x[1]);
    let ny = sphere_chart_to_unit(y[0], y[1]);
    let (ex1, ex2) = sphere_frame(x[0], x[1]);
    let (ey1, ey2) = sphere_frame(y[0], y[1]);
    let u = nx.dot(&ny);
    let v = Vector2::new(ex1.dot(&ny) / rho, ex2.dot(&ny) / rho);
    let w = Vector2::new(ey1.dot(&nx) / rho, ey2.dot(&nx) / rho);
    let r2 = rho * rho;
    let tt = Matrix2::new(
        ex1.dot(&ey1) / r2,
        ex1.dot(&ey2) / r2,
        ex2.dot(&ey1) / r2,
        ex2.dot(&ey2) / r2,
    );
    SpherePair { u, v, w, tt }
}

/// Rotation by a quarter turn: the Hodge star on 1-form components.
fn star_matrix() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

fn sphere_eval(rho: f64, j: usize, t: f64, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let pair = sphere_pair(rho, x, y);
    let norm = 1.0 / (4.0 * std::f64::consts::PI * rho * rho);
    match j {
        0 | 2 => {
            let s = legendre_heat_sums(rho, t, pair.u, 0, |l, _| (2 * l + 1) as f64 * norm);
            DMatrix::from_element(1, 1, s[0])
        }
        1 => {
            let s = legendre_heat_sums(rho, t, pair.u, 1, |l, lambda| {
                (2 * l + 1) as f64 * norm / lambda
            });
            let m = pair.v * pair.w.transpose() * s[2] + pair.tt * s[1];
            let jm = star_matrix() * m * star_matrix().transpose();
            let k = m + jm;
            DMatrix::from_fn(2, 2, |r, c| k[(r, c)])
        }
        _ => unreachable!("degree validated at construction"),
    }
}

fn sphere_eval_grad(rho: f64, j: usize, t: f64, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let pair = sphere_pair(rho, x, y);
    let norm = 1.0 / (4.0 * std::f64::consts::PI * rho * rho);
    let r2 = rho * rho;
    match j {
        0 | 2 => {
            let s = legendre_heat_sums(rho, t, pair.u, 0, |l, _| (2 * l + 1) as f64 * norm);
            let mut out = DMatrix::zeros(2, 1);
            out[(0, 0)] = s[1] * pair.v[0];
            out[(1, 0)] = s[1] * pair.v[1];
            out
        }
        1 => {
            let s = legendre_heat_sums(rho, t, pair.u, 1, |l, lambda| {
                (2 * l + 1) as f64 * norm / lambda
            });
            let star = star_matrix();
            let mut out = DMatrix::zeros(4, 2);
            for c in 0..2 {
                let mut dm = Matrix2::zeros();
                for a in 0..2 {
                    for b in 0..2 {
                        let delta = if a == c { 1.0 } else { 0.0 };
                        dm[(a, b)] = s[3] * pair.v[c] * pair.v[a] * pair.w[b]
                            + s[2]
                                * (-(pair.u / r2) * delta * pair.w[b]
                                    + pair.v[a] * pair.tt[(c, b)]
                                    + pair.v[c] * pair.tt[(a, b)])
                            - s[1] * delta * pair.w[b] / r2;
                    }
                }
                let full = dm + star * dm * star.transpose();
                for a in 0..2 {
                    for b in 0..2 {
                        out[(c * 2 + a, b)] = full[(a, b)];
                    }
                }
            }
            out
        }
        _ => unreachable!("degree validated at construction"),
    }
}

// ---------------------------------------------------------------------------
// truncated eigensum kernels with certified tails
// ---------------------------------------------------------------------------

/// Per-entry bound on the modes a band-limited basis discards from the
/// degree-j kernel at time t.
pub fn kernel_tail_bound(basis: &SpectralBasis, t: f64) -> f64 {
    tail_bound(basis.manifold(), basis.band_limit(), t, false)
}

/// Same bound for the kernel gradient (one extra frequency power).
pub fn grad_kernel_tail_bound(basis: &SpectralBasis, t: f64) -> f64 {
    tail_bound(basis.manifold(), basis.band_limit(), t, true)
}

fn tail_bound(man: &ModelManifold, band: usize, t: f64, grad: bool) -> f64 {
    match man.kind() {
        ManifoldKind::FlatTorus { periods } => {
            let vol = man.total_volume();
            let b = band as i64;
            let full: Vec<f64> = periods.iter().map(|&l| lattice_exp_sum(l, t)).collect();
            let boxed: Vec<f64> = periods
                .iter()
                .map(|&l| lattice_exp_sum_box(l, t, b))
                .collect();
            if !grad {
                let all: f64 = full.iter().product();
                let inside: f64 = boxed.iter().product();
                (2.0 / vol) * (all - inside).max(0.0)
            } else {
                let mut acc = 0.0;
                for a in 0..periods.len() {
                    let mut fterm = lattice_weighted_sum(periods[a], t);
                    let mut bterm = lattice_weighted_sum_box(periods[a], t, b);
                    for c in 0..periods.len() {
                        if c != a {
                            fterm *= full[c];
                            bterm *= boxed[c];
                        }
                    }
                    acc += (fterm - bterm).max(0.0);
                }
                (2.0 / vol) * acc
            }
        }
        ManifoldKind::Sphere2 { radius } => {
            let rho = *radius;
            let curv = 1.0 / (rho * rho);
            let norm = 1.0 / (4.0 * std::f64::consts::PI * rho * rho);
            let mut acc = 0.0;
            let mut l = band + 1;
            loop {
                let lambda = (l * (l + 1)) as f64 * curv;
                let families = 2.0; // worst case (degree 1); scalar tails are half
                let weight = if grad { lambda.sqrt() } else { 1.0 };
                let term = families * (2 * l + 1) as f64 * norm * weight * (-t * lambda).exp();
                acc += term;
                if t * lambda > 750.0 || (term < 1e-30 * (acc + 1e-300) && l > band + 4) {
                    break;
                }
                l += 1;
            }
            acc
        }
        ManifoldKind::HyperbolicPatch { .. } => f64::INFINITY,
    }
}

/// Smallest time at which the tail bound meets the tolerance, by bisection.
fn min_reliable_time(man: &ModelManifold, band: usize, grad: bool, tol: f64) -> f64 {
    let mut hi = 1e-9;
    while tail_bound(man, band, hi, grad) > tol {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    if tail_bound(man, band, lo, grad) <= tol {
        return lo;
    }
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if tail_bound(man, band, mid, grad) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn guard_tail(basis: &SpectralBasis, t: f64, grad: bool) -> Result<()> {
    let tail = tail_bound(basis.manifold(), basis.band_limit(), t, grad);
    if tail > KERNEL_TAIL_TOL {
        return Err(Error::SpectralTail {
            t,
            tail,
            tol: KERNEL_TAIL_TOL,
            min_t: min_reliable_time(basis.manifold(), basis.band_limit(), grad, KERNEL_TAIL_TOL),
        });
    }
    Ok(())
}

/// Degree-j heat kernel as the truncated eigensum of the basis. Refuses when
/// the discarded tail cannot be certified below `KERNEL_TAIL_TOL`.
pub fn heat_kernel(
    basis: &SpectralBasis,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<DMatrix<f64>> {
    check_time(t)?;
    guard_tail(basis, t, false)?;
    let x = basis.manifold().canonicalize(x);
    let y = basis.manifold().canonicalize(y);
    let dim = basis.component_dim();
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..basis.len() {
        let damp = (-t * basis.eigenvalue(i)).exp();
        if damp == 0.0 {
            continue;
        }
        let vx = basis.entry_value(i, &x);
        let vy = basis.entry_value(i, &y);
        out += vx * vy.transpose() * damp;
    }
    Ok(out)
}

/// Covariant derivative of the truncated kernel in its first argument,
/// (m * dim) x dim with rows flattened (direction, component).
pub fn grad_heat_kernel(
    basis: &SpectralBasis,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<DMatrix<f64>> {
    check_time(t)?;
    guard_tail(basis, t, true)?;
    let x = basis.manifold().canonicalize(x);
    let y = basis.manifold().canonicalize(y);
    let m = basis.manifold().dimension();
    let dim = basis.component_dim();
    let mut out = DMatrix::zeros(m * dim, dim);
    for i in 0..basis.len() {
        let damp = (-t * basis.eigenvalue(i)).exp();
        if damp == 0.0 {
            continue;
        }
        let gx = basis.entry_gradient(i, &x);
        let vy = basis.entry_value(i, &y);
        for c in 0..m {
            for p in 0..dim {
                for q in 0..dim {
                    out[(c * dim + p, q)] += damp * gx[(c, p)] * vy[q];
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// tabulated kernels
// ---------------------------------------------------------------------------

/// Kernel values on a finite point set: pointwise operator norms for every
/// pair, plus the signed scalar values when the kernel is scalar.
pub struct KernelTable {
    pub t: f64,
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    /// spectral norm of the kernel block at (i, j)
    pub norms: DMatrix<f64>,
    /// signed values for scalar kernels (degree 0, torus any degree,
    /// sphere degree 2)
    pub values: Option<DMatrix<f64>>,
}

pub fn kernel_table(kernel: &HeatKernel, t: f64, points: &[Vec<f64>]) -> Result<KernelTable> {
    let n = points.len();
    let scalar_ok = !(matches!(kernel.manifold().kind(), ManifoldKind::Sphere2 { .. })
        && kernel.degree() == 1);
    let mut norms = DMatrix::zeros(n, n);
    let mut values = scalar_ok.then(|| DMatrix::zeros(n, n));
    for i in 0..n {
        for jj in i..n {
            let block = kernel.eval(t, &points[i], &points[jj])?;
            let nrm = operator_norm(&block);
            norms[(i, jj)] = nrm;
            norms[(jj, i)] = nrm;
            if let Some(v) = values.as_mut() {
                v[(i, jj)] = block[(0, 0)];
                v[(jj, i)] = block[(0, 0)];
            }
        }
    }
    Ok(KernelTable {
        t,
        degree: kernel.degree(),
        points: points.to_vec(),
        norms,
        values,
    })
}

fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 && a.ncols() == 1 {
        return a[(0, 0)].abs();
    }
    (a.transpose() * a)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max(l.max(0.0)))
        .sqrt()
}

#[cfg(test)]
mod unit {
    use super::*;
    use crate::geometry::ModelManifold;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())), "{a} vs {b}");
    }

    #[test]
    fn theta_matches_mode_sum() {
        // Poisson summation: image sum equals the Fourier series
        // (1/L) sum_n exp(-t k_n^2) cos(k_n d).
        let (period, t, d) = (2.5, 0.37, 0.9);
        let mut modes = 1.0;
        for n in 1..200 {
            let k = 2.0 * std::f64::consts::PI * n as f64 / period;
            modes += 2.0 * (-t * k * k).exp() * (k * d).cos();
        }
        close(theta_sum(d, period, t), modes / period, 1e-14);
    }

    #[test]
    fn theta_deriv_matches_finite_difference() {
        let (period, t, d) = (2.0, 0.05, 0.6);
        let h = 1e-5;
        let fd = (theta_sum(d + h, period, t) - theta_sum(d - h, period, t)) / (2.0 * h);
        close(theta_sum_deriv(d, period, t), fd, 1e-8);
    }

    #[test]
    fn torus_kernel_integrates_to_one() {
        let man = ModelManifold::flat_torus(vec![2.0 * std::f64::consts::PI, 4.0]).unwrap();
        let k = HeatKernel::new(&man, 0).unwrap();
        let grid = super::super::quadrature::torus_grid(&man, 48).unwrap();
        let x = vec![1.0, 0.7];
        let total = grid.integrate(|y| k.scalar(0.3, &x, y).unwrap());
        close(total, 1.0, 1e-12);
    }

    #[test]
    fn sphere_scalar_kernel_integrates_to_one() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let k = HeatKernel::new(&man, 0).unwrap();
        let grid = super::super::quadrature::sphere_grid(&man, 40, 80).unwrap();
        let x = vec![0.9, 2.0];
        for &t in &[0.05, 0.5, 3.0] {
            let total = grid.integrate(|y| k.scalar(t, &x, y).unwrap());
            close(total, 1.0, 1e-10);
        }
    }

    #[test]
    fn sphere_kernel_long_time_limits() {
        // t -> infinity: scalar kernel -> 1/volume, degree-1 kernel -> 0
        // (no harmonic 1-forms on the sphere).
        let man = ModelManifold::sphere2(2.0).unwrap();
        let vol = man.total_volume();
        let k0 = HeatKernel::new(&man, 0).unwrap();
        let k1 = HeatKernel::new(&man, 1).unwrap();
        let (x, y) = (vec![0.4, 0.1], vec![2.2, 4.0]);
        close(k0.scalar(400.0, &x, &y).unwrap(), 1.0 / vol, 1e-12);
        assert!(k1.eval(400.0, &x, &y).unwrap().norm() < 1e-12);
    }

    #[test]
    fn sphere_short_time_is_near_euclidean() {
        // on-diagonal heat kernel ~ 1/(4 pi t) for t -> 0
        let man = ModelManifold::sphere2(1.0).unwrap();
        let k = HeatKernel::new(&man, 0).unwrap();
        let x = vec![1.3, 0.4];
        let t = 1e-4;
        let v = k.scalar(t, &x, &x).unwrap();
        let flat = 1.0 / (4.0 * std::f64::consts::PI * t);
        assert!((v / flat - 1.0).abs() < 1e-3, "{v} vs {flat}");
    }

    #[test]
    fn tail_bound_shrinks_and_refusal_reports_min_t() {
        let man = ModelManifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let basis = SpectralBasis::torus(&man, 3, 0).unwrap();
        let t_small = 1e-4;
        assert!(kernel_tail_bound(&basis, t_small) > KERNEL_TAIL_TOL);
        match heat_kernel(&basis, t_small, &[0.1, 0.2], &[0.3, 0.4]) {
            Err(Error::SpectralTail { min_t, tail, .. }) => {
                assert!(tail > KERNEL_TAIL_TOL);
                assert!(min_t.is_finite() && min_t > t_small);
                // advisory is sharp: ok at min_t, too big slightly below
                assert!(kernel_tail_bound(&basis, min_t) <= KERNEL_TAIL_TOL);
                assert!(kernel_tail_bound(&basis, min_t * 0.98) > KERNEL_TAIL_TOL);
            }
            other => panic!("expected tail refusal, got {other:?}"),
        }
    }

    #[test]
    fn kernel_table_is_symmetric_and_positive() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let k = HeatKernel::new(&man, 0).unwrap();
        let pts = vec![vec![0.5, 0.0], vec![1.2, 2.0], vec![2.8, 5.5]];
        let table = kernel_table(&k, 0.4, &pts).unwrap();
        let v = table.values.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((v[(i, j)] - v[(j, i)]).abs() < 1e-8);
                assert!(v[(i, j)] > 0.0);
            }
        }
    }
}
