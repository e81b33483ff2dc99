//! Model Riemannian manifolds with closed-form metric, curvature, and
//! Weitzenboeck data.
//!
//! The catalog holds three chart-defined families:
//!
//! * `FlatTorus(periods)` in dimension 1..=3, coordinates modulo the periods,
//!   Euclidean metric;
//! * `Sphere2(radius)`, the round 2-sphere in polar chart `(theta, phi)`;
//! * `HyperbolicPatch(bound)`, the Poincare disk with curvature -1 restricted
//!   to coordinate radius < bound (geodesically incomplete at the rim).
//!
//! Curvature is constant for every member, so all curvature quantities are
//! closed-form; no numerical differentiation happens outside of tests. All
//! endomorphism components (curvature actions, Weitzenboeck potentials) are
//! expressed in the orthonormal coframe obtained by Gram-Schmidt from the
//! coordinate coframe, with multi-indices ordered lexicographically.

pub(crate) mod embed;
mod weitzenboeck;

pub use weitzenboeck::{weitzenboeck_norm_constant, CouplingVariant};

use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldKind {
    FlatTorus { periods: Vec<f64> },
    Sphere2 { radius: f64 },
    HyperbolicPatch { bound: f64 },
}

/// A catalog manifold. Points are chart coordinates (`m` floats): torus
/// coordinates live modulo the periods, sphere points are `(theta, phi)`,
/// hyperbolic points are disk coordinates with |u| < bound.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    kind: ManifoldKind,
}

/// Curvature record at a point, in mixed representation: Christoffel symbols
/// in chart coordinates (needed by the chart-level path scheme), curvature
/// tensors in the orthonormal frame (needed by the potentials and norms).
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub christoffel: Vec<DMatrix<f64>>,
    /// riemann(a,b,c,d) = <R(e_a, e_b) e_c, e_d> in the orthonormal frame
    pub riemann: Tensor4,
    /// ricci(b,c) = sum_a riemann(a,b,c,a), orthonormal components
    pub ricci: DMatrix<f64>,
    pub riem_norm: f64,
    /// (nabla_e riemann)(a,b,c,d); identically zero on the catalog, kept so
    /// downstream assembly code exercises the general formulas
    pub nabla_riemann: Tensor5,
    pub nabla_riem_norm: f64,
}

/// Weitzenboeck package on j-forms at a point, orthonormal components.
#[derive(Debug, Clone)]
pub struct WeitzenboeckData {
    pub degree: usize,
    /// potential V_j of the decomposition L_j = nabla^dag nabla + V_j,
    /// binom(m,j) square
    pub v: DMatrix<f64>,
    /// potential of the commuted operator on T* (x) Lambda^j,
    /// m*binom(m,j) square, cotangent-slot-major layout
    pub v_under: DMatrix<f64>,
    /// curvature-derivative drift Hom(Lambda^j -> T* (x) Lambda^j); zero on
    /// the catalog (parallel curvature)
    pub rho: DMatrix<f64>,
    /// smallest eigenvalue of the symmetric part of V_j at this point
    pub lower_bound: f64,
}

#[derive(Debug, Clone)]
pub struct Tensor4 {
    m: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(m: usize) -> Self {
        Tensor4 { m, data: vec![0.0; m * m * m * m] }
    }
    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.m + b) * self.m + c) * self.m + d]
    }
    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        self.data[((a * self.m + b) * self.m + c) * self.m + d] = v;
    }
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct Tensor5 {
    m: usize,
    data: Vec<f64>,
}

impl Tensor5 {
    pub fn zeros(m: usize) -> Self {
        Tensor5 { m, data: vec![0.0; m * m * m * m * m] }
    }
    #[inline]
    pub fn get(&self, e: usize, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[(((e * self.m + a) * self.m + b) * self.m + c) * self.m + d]
    }
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl ModelManifold {
    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() || periods.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "flat torus supports dimension 1..=3, got {}",
                periods.len()
            )));
        }
        if periods.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::InvalidInput("torus periods must be positive".into()));
        }
        Ok(ModelManifold { kind: ManifoldKind::FlatTorus { periods } })
    }

    pub fn sphere2(radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidInput("sphere radius must be positive".into()));
        }
        Ok(ModelManifold { kind: ManifoldKind::Sphere2 { radius } })
    }

    pub fn hyperbolic_patch(bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound < 1.0) {
            return Err(Error::InvalidInput(
                "hyperbolic patch bound must lie in (0, 1)".into(),
            ));
        }
        Ok(ModelManifold { kind: ManifoldKind::HyperbolicPatch { bound } })
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => periods.len(),
            ManifoldKind::Sphere2 { .. } | ManifoldKind::HyperbolicPatch { .. } => 2,
        }
    }

    /// Constant sectional curvature of the member.
    pub fn sectional_curvature(&self) -> f64 {
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => 0.0,
            ManifoldKind::Sphere2 { radius } => 1.0 / (radius * radius),
            ManifoldKind::HyperbolicPatch { .. } => -1.0,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.kind, ManifoldKind::HyperbolicPatch { .. })
    }

    /// Curvature is parallel on every catalog member.
    pub fn parallel_curvature(&self) -> bool {
        true
    }

    pub fn total_volume(&self) -> f64 {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => periods.iter().product(),
            ManifoldKind::Sphere2 { radius } => 4.0 * std::f64::consts::PI * radius * radius,
            ManifoldKind::HyperbolicPatch { .. } => {
                TWO_PI * (self.patch_radius().cosh() - 1.0)
            }
        }
    }

    /// Intrinsic radius of the hyperbolic patch (distance from the origin to
    /// the chart boundary). Panics on other kinds.
    pub fn patch_radius(&self) -> f64 {
        match &self.kind {
            ManifoldKind::HyperbolicPatch { bound } => 2.0 * bound.atanh(),
            _ => panic!("patch_radius is specific to the hyperbolic patch"),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dimension() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => true,
            ManifoldKind::Sphere2 { .. } => x[0] > 0.0 && x[0] < std::f64::consts::PI,
            ManifoldKind::HyperbolicPatch { bound } => {
                (x[0] * x[0] + x[1] * x[1]).sqrt() < *bound
            }
        }
    }

    /// Map a chart point to its canonical representative: torus coordinates
    /// wrapped into [0, period), sphere angles wrapped with the polar angle
    /// nudged off the chart singularities. Hyperbolic points pass through.
    pub fn canonicalize(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => x
                .iter()
                .zip(periods)
                .map(|(v, p)| v.rem_euclid(*p))
                .collect(),
            ManifoldKind::Sphere2 { .. } => {
                let n = embed::sphere_chart_to_unit(x[0], x[1]);
                let (theta, phi) = embed::sphere_unit_to_chart(&n);
                vec![theta, phi]
            }
            ManifoldKind::HyperbolicPatch { .. } => x.to_vec(),
        }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.dimension();
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => DMatrix::identity(m, m),
            ManifoldKind::Sphere2 { radius } => {
                let r2 = radius * radius;
                let s = x[0].sin();
                DMatrix::from_diagonal(&DVector::from_vec(vec![r2, r2 * s * s]))
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                let lam = conformal_factor(x);
                DMatrix::identity(2, 2) * (lam * lam)
            }
        }
    }

    /// First partial derivatives of the metric: entry `c` is d g / d x_c.
    pub fn metric_partials(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.dimension();
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => vec![DMatrix::zeros(m, m); m],
            ManifoldKind::Sphere2 { radius } => {
                let r2 = radius * radius;
                let mut d_theta = DMatrix::zeros(2, 2);
                d_theta[(1, 1)] = 2.0 * r2 * x[0].sin() * x[0].cos();
                vec![d_theta, DMatrix::zeros(2, 2)]
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                let lam = conformal_factor(x);
                (0..2)
                    .map(|c| {
                        // d(lam^2)/du_c = 2 lam * lam^2 u_c
                        DMatrix::identity(2, 2) * (2.0 * lam * lam * lam * x[c])
                    })
                    .collect()
            }
        }
    }

    /// Christoffel symbols in chart coordinates; entry `c` is the matrix
    /// Gamma^c_{ab} over lower indices (a, b).
    pub fn christoffel(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.dimension();
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => vec![DMatrix::zeros(m, m); m],
            ManifoldKind::Sphere2 { .. } => {
                let (s, c) = (x[0].sin(), x[0].cos());
                let mut g_theta = DMatrix::zeros(2, 2);
                g_theta[(1, 1)] = -s * c;
                let mut g_phi = DMatrix::zeros(2, 2);
                let cot = c / s;
                g_phi[(0, 1)] = cot;
                g_phi[(1, 0)] = cot;
                vec![g_theta, g_phi]
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                // conformal metric lam^2 I: Gamma^c_ab =
                //   delta_cb d_a(log lam) + delta_ca d_b(log lam) - delta_ab d_c(log lam)
                let r2 = x[0] * x[0] + x[1] * x[1];
                let dlog: Vec<f64> = (0..2).map(|a| 2.0 * x[a] / (1.0 - r2)).collect();
                (0..2)
                    .map(|c| {
                        DMatrix::from_fn(2, 2, |a, b| {
                            let mut v = 0.0;
                            if c == b {
                                v += dlog[a];
                            }
                            if c == a {
                                v += dlog[b];
                            }
                            if a == b {
                                v -= dlog[c];
                            }
                            v
                        })
                    })
                    .collect()
            }
        }
    }

    /// Orthonormal frame at `x` from Gram-Schmidt of the coordinate frame;
    /// columns are frame vectors in chart components. Diagonal metrics make
    /// this the coordinate frame rescaled by 1/sqrt(g_aa).
    pub fn orthonormal_frame(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.dimension();
        let g = self.metric(x);
        let mut f = DMatrix::identity(m, m);
        linalg::gram_schmidt_metric(&mut f, &g);
        f
    }

    pub fn curvature_at(&self, x: &[f64]) -> Result<CurvaturePack> {
        if !self.contains(x) {
            return Err(Error::OutsideChart(format!("{x:?}")));
        }
        let m = self.dimension();
        let k = self.sectional_curvature();
        let mut riemann = Tensor4::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        // constant curvature: <R(e_a,e_b)e_c, e_d> =
                        //   K (delta_bc delta_ad - delta_ac delta_bd)
                        let v = k
                            * ((f64::from(b == c) * f64::from(a == d))
                                - (f64::from(a == c) * f64::from(b == d)));
                        riemann.set(a, b, c, d, v);
                    }
                }
            }
        }
        let ricci = DMatrix::from_fn(m, m, |b, c| {
            (0..m).map(|a| riemann.get(a, b, c, a)).sum::<f64>()
        });
        let riem_norm = riemann.frobenius();
        let nabla_riemann = Tensor5::zeros(m);
        Ok(CurvaturePack {
            christoffel: self.christoffel(x),
            riemann,
            ricci,
            riem_norm,
            nabla_riem_norm: nabla_riemann.frobenius(),
            nabla_riemann,
        })
    }

    /// Weitzenboeck package on j-forms at `x`.
    pub fn weitzenboeck_at(
        &self,
        x: &[f64],
        j: usize,
        variant: CouplingVariant,
    ) -> Result<WeitzenboeckData> {
        let m = self.dimension();
        if j > m {
            return Err(Error::DegreeOutOfRange { j, m });
        }
        let pack = self.curvature_at(x)?;
        Ok(weitzenboeck::assemble(&pack, m, j, variant))
    }

    /// sup-norm of the j-form potential over the manifold (constant on the
    /// catalog). Used as the Gronwall rate and the Davies-Gaffney `A`.
    pub fn sup_potential_norm(&self, j: usize) -> Result<f64> {
        let x = self.base_point();
        let data = self.weitzenboeck_at(&x, j, CouplingVariant::Commutation)?;
        Ok(operator_norm(&data.v))
    }

    /// Pointwise lower bound `a` with `V_j >= a` (spectral bound, constant on
    /// the catalog). Kato-type domination compares against `e^{-a T}`.
    pub fn potential_lower_bound(&self, j: usize) -> Result<f64> {
        let x = self.base_point();
        let data = self.weitzenboeck_at(&x, j, CouplingVariant::Commutation)?;
        Ok(data.lower_bound)
    }

    /// A generic interior point, used where any chart point works.
    pub fn base_point(&self) -> Vec<f64> {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => {
                periods.iter().map(|p| 0.25 * p).collect()
            }
            ManifoldKind::Sphere2 { .. } => vec![std::f64::consts::FRAC_PI_2, 0.0],
            ManifoldKind::HyperbolicPatch { .. } => vec![0.0, 0.0],
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => x
                .iter()
                .zip(y)
                .zip(periods)
                .map(|((a, b), p)| {
                    let d = (a - b).rem_euclid(*p);
                    d.min(p - d).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
            ManifoldKind::Sphere2 { radius } => {
                let na = embed::sphere_chart_to_unit(x[0], x[1]);
                let nb = embed::sphere_chart_to_unit(y[0], y[1]);
                // atan2 form stays accurate near coincident and antipodal pairs
                radius * na.cross(&nb).norm().atan2(na.dot(&nb))
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                let dx2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                let den = (1.0 - x[0] * x[0] - x[1] * x[1]) * (1.0 - y[0] * y[0] - y[1] * y[1]);
                // d = acosh(1 + y) written as asinh(sqrt(y (2 + y))): exact at 0
                let y = 2.0 * dx2 / den;
                (y * (2.0 + y)).sqrt().asinh()
            }
        }
    }

    /// Riemannian volume of the metric ball B(x, r); exact closed forms
    /// everywhere except the boundary-clipped hyperbolic case, which uses a
    /// polar quadrature with closed-form exit distances. Saturates at the
    /// total volume.
    pub fn ball_volume(&self, x: &[f64], r: f64) -> f64 {
        assert!(r >= 0.0, "ball radius must be nonnegative");
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => torus_ball_volume(periods, r),
            ManifoldKind::Sphere2 { radius } => {
                let cap = r / radius;
                if cap >= std::f64::consts::PI {
                    self.total_volume()
                } else {
                    TWO_PI * radius * radius * (1.0 - cap.cos())
                }
            }
            ManifoldKind::HyperbolicPatch { .. } => self.hyperbolic_ball_volume(x, r),
        }
    }

    fn hyperbolic_ball_volume(&self, x: &[f64], r: f64) -> f64 {
        let rp = self.patch_radius();
        let d = self.distance(&[0.0, 0.0], x);
        if d + r <= rp {
            return TWO_PI * (r.cosh() - 1.0); // fully inside the patch
        }
        // polar integration around x; the exit distance toward the patch
        // boundary solves cosh(R) = cosh(d) cosh(s) - sinh(d) sinh(s) cos(beta)
        let (nodes, weights) = linalg::gauss_legendre(192);
        let (chd, shd, chr) = (d.cosh(), d.sinh(), rp.cosh());
        let mut acc = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let beta = std::f64::consts::PI * (t + 1.0); // beta in [0, 2pi]
            let a = chd - shd * beta.cos();
            let b = chd + shd * beta.cos();
            // a e^s + b e^{-s} = 2 cosh(R), positive root
            let disc = (chr * chr - a * b).max(0.0).sqrt();
            let s_exit = ((chr + disc) / a).ln();
            let s_cap = s_exit.min(r).max(0.0);
            acc += w * std::f64::consts::PI * (s_cap.cosh() - 1.0);
        }
        acc
    }

    /// Exponential map: `v` is a tangent vector in chart components at `x`.
    pub fn exp_map(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(x) {
            return Err(Error::OutsideChart(format!("{x:?}")));
        }
        match &self.kind {
            ManifoldKind::FlatTorus { .. } => {
                Ok(self.canonicalize(&x.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<_>>()))
            }
            ManifoldKind::Sphere2 { radius } => {
                let n = embed::sphere_chart_to_unit(x[0], x[1]);
                let (t1, t2) = embed::sphere_frame(x[0], x[1]);
                // chart components -> ambient: v_theta d_theta + v_phi d_phi
                let amb = v[0] * *radius * t1 + v[1] * *radius * x[0].sin() * t2;
                let len = amb.norm();
                if len < 1e-300 {
                    return Ok(x.to_vec());
                }
                let dir = amb / len;
                let mut none: [Vector3<f64>; 0] = [];
                let end = embed::sphere_geodesic(&n, &dir, len / radius, &mut none);
                let (theta, phi) = embed::sphere_unit_to_chart(&end);
                Ok(vec![theta, phi])
            }
            ManifoldKind::HyperbolicPatch { bound } => {
                let p = embed::disk_to_hyperboloid(x);
                let cols = embed::disk_jacobian(x);
                let amb = v[0] * cols[0] + v[1] * cols[1];
                let len2 = embed::mink(&amb, &amb);
                if len2 < 1e-300 {
                    return Ok(x.to_vec());
                }
                let len = len2.sqrt();
                let dir = amb / len;
                let mut none: [Vector3<f64>; 0] = [];
                let end = embed::hyperbolic_geodesic(&p, &dir, len, &mut none);
                let u = embed::hyperboloid_to_disk(&end);
                if u[0] * u[0] + u[1] * u[1] >= bound * bound {
                    return Err(Error::OutsideChart(format!(
                        "geodesic left the hyperbolic patch at {u:?}"
                    )));
                }
                Ok(u.to_vec())
            }
        }
    }

    /// Uniformly distributed chart point (volume measure).
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => {
                periods.iter().map(|p| rng.gen::<f64>() * p).collect()
            }
            ManifoldKind::Sphere2 { .. } => {
                let z: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                let theta = z.clamp(-1.0, 1.0).acos();
                let phi = rng.gen::<f64>() * TWO_PI;
                self.canonicalize(&[theta, phi])
            }
            ManifoldKind::HyperbolicPatch { .. } => {
                // sample in the concentric ball of 90% of the patch radius
                let rp = 0.9 * self.patch_radius();
                let u: f64 = rng.gen();
                let s = (1.0 + u * (rp.cosh() - 1.0)).acosh();
                let beta = rng.gen::<f64>() * TWO_PI;
                let rad = (s / 2.0).tanh();
                vec![rad * beta.cos(), rad * beta.sin()]
            }
        }
    }

    pub fn description(&self) -> String {
        match &self.kind {
            ManifoldKind::FlatTorus { periods } => format!("flat torus, periods {periods:?}"),
            ManifoldKind::Sphere2 { radius } => format!("round 2-sphere, radius {radius}"),
            ManifoldKind::HyperbolicPatch { bound } => {
                format!("hyperbolic patch, disk radius {bound}")
            }
        }
    }
}

fn conformal_factor(u: &[f64]) -> f64 {
    2.0 / (1.0 - u[0] * u[0] - u[1] * u[1])
}

/// Operator 2-norm of a small matrix via singular values.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// Volume of a wrapped ball on a rectangular torus. Points of the Voronoi
/// cell around the center are closer to the center than to any other image,
/// so the wrapped ball is the intersection of a Euclidean ball with the cell.
fn torus_ball_volume(periods: &[f64], r: f64) -> f64 {
    match periods.len() {
        1 => (2.0 * r).min(periods[0]),
        2 => rect_disk_area(periods[0] / 2.0, periods[1] / 2.0, r),
        3 => {
            // slice along the third axis; each slice is a disk-rectangle
            // intersection with radius sqrt(r^2 - z^2)
            let c = periods[2] / 2.0;
            let zmax = r.min(c);
            if zmax <= 0.0 {
                return 0.0;
            }
            // integrand kinks where the slice radius crosses a half-period
            // or the cell diagonal; split there for clean quadrature
            let mut breaks = vec![0.0, zmax];
            let (a, b) = (periods[0] / 2.0, periods[1] / 2.0);
            for q in [a * a, b * b, a * a + b * b] {
                if r * r > q {
                    let z = (r * r - q).sqrt();
                    if z < zmax {
                        breaks.push(z);
                    }
                }
            }
            breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
            breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
            let (nodes, weights) = linalg::gauss_legendre(64);
            let mut acc = 0.0;
            for w in breaks.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let half = (hi - lo) / 2.0;
                for (t, wt) in nodes.iter().zip(&weights) {
                    let z = lo + half * (t + 1.0);
                    let rz = (r * r - z * z).max(0.0).sqrt();
                    acc += wt * half * rect_disk_area(a, b, rz);
                }
            }
            2.0 * acc
        }
        _ => unreachable!("torus dimension is validated at construction"),
    }
}

/// Area of {|u| <= r} intersected with the rectangle [-a,a] x [-b,b].
fn rect_disk_area(a: f64, b: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r * r >= a * a + b * b {
        return 4.0 * a * b; // disk covers the rectangle
    }
    // quadrant area: integrate min(sqrt(r^2 - x^2), b) over x in [0, min(a, r)]
    let xmax = a.min(r);
    let xstar = if r > b { (r * r - b * b).sqrt().min(xmax) } else { 0.0 };
    // x in [0, xstar]: height b; x in [xstar, xmax]: quarter-circle arc
    let flat = b * xstar;
    let arc = circle_integral(r, xmax) - circle_integral(r, xstar);
    4.0 * (flat + arc)
}

/// Antiderivative of sqrt(r^2 - x^2) evaluated at x (from 0).
fn circle_integral(r: f64, x: f64) -> f64 {
    let x = x.clamp(0.0, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
}

pub mod stepping;
