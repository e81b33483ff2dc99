//! Cross-cutting identities for the spectral module: orthonormality of the
//! bases, exactness of the coefficient-level d / d-dagger maps, agreement of
//! the two independent kernel routes, multiplier laws, and Riesz norm
//! contraction.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernels::{self, HeatKernel};
use super::*;
use crate::geometry::embed::{
    sphere_chart_to_unit, sphere_frame, sphere_geodesic, sphere_unit_to_chart,
};

fn torus2() -> ModelManifold {
    ModelManifold::flat_torus(vec![2.0 * PI, 4.0]).unwrap()
}

fn torus3() -> ModelManifold {
    ModelManifold::flat_torus(vec![1.0, 1.5, 2.0]).unwrap()
}

fn sphere(rho: f64) -> ModelManifold {
    ModelManifold::sphere2(rho).unwrap()
}

fn max_abs_off_identity(g: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[test]
fn bases_are_orthonormal_under_quadrature() {
    let cases: Vec<(Arc<SpectralBasis>, &str)> = vec![
        (
            SpectralBasis::torus(&ModelManifold::flat_torus(vec![2.0 * PI]).unwrap(), 4, 0)
                .unwrap(),
            "circle scalars",
        ),
        (
            SpectralBasis::torus(&ModelManifold::flat_torus(vec![2.0 * PI]).unwrap(), 4, 1)
                .unwrap(),
            "circle one-forms",
        ),
        (SpectralBasis::torus(&torus2(), 2, 0).unwrap(), "t2 scalars"),
        (SpectralBasis::torus(&torus2(), 2, 1).unwrap(), "t2 one-forms"),
        (SpectralBasis::torus(&torus2(), 2, 2).unwrap(), "t2 two-forms"),
        (SpectralBasis::sphere(&sphere(1.0), 3, 0).unwrap(), "s2 scalars"),
        (SpectralBasis::sphere(&sphere(1.0), 3, 1).unwrap(), "s2 one-forms"),
        (SpectralBasis::sphere(&sphere(1.0), 3, 2).unwrap(), "s2 two-forms"),
        (
            SpectralBasis::sphere(&sphere(2.0), 2, 1).unwrap(),
            "big sphere one-forms",
        ),
    ];
    for (basis, label) in cases {
        let dev = max_abs_off_identity(&basis.gram());
        assert!(dev < 1e-10, "{label}: gram deviates by {dev:.3e}");
    }
}

#[test]
fn entry_counts_and_spectra() {
    let t2 = torus2();
    for j in 0..=2usize {
        let basis = SpectralBasis::torus(&t2, 2, j).unwrap();
        assert_eq!(basis.len(), 25 * crate::linalg::binom(2, j));
        let eig: Vec<f64> = basis.eigenvalues().collect();
        assert!(eig.windows(2).all(|w| w[0] <= w[1]));
    }
    // lowest nonzero torus eigenvalue is min over axes of (2 pi / L)^2
    let b0 = SpectralBasis::torus(&t2, 2, 0).unwrap();
    let first_nonzero = b0.eigenvalues().find(|&l| l > 1e-12).unwrap();
    assert!((first_nonzero - 1.0).abs() < 1e-12);

    let s = sphere(2.0);
    let counts = [
        (0usize, 16usize), // (band+1)^2 scalars
        (1, 30),           // 2 * sum_{l=1..3} (2l+1)
        (2, 16),
    ];
    for (j, n) in counts {
        let basis = SpectralBasis::sphere(&s, 3, j).unwrap();
        assert_eq!(basis.len(), n, "degree {j}");
        for e in basis.entries() {
            // eigenvalues are l(l+1)/rho^2
            let scaled = e.lambda * 4.0;
            let l = (scaled + 0.25).sqrt() - 0.5;
            assert!((l - l.round()).abs() < 1e-9);
        }
    }
    // degree-1 low eigenvalue: l = 1 gives 2 / rho^2
    let b1 = SpectralBasis::sphere(&s, 3, 1).unwrap();
    assert!((b1.eigenvalue(0) - 0.5).abs() < 1e-12);
}

#[test]
fn torus_gradients_match_finite_differences() {
    let man = torus2();
    let basis = SpectralBasis::torus(&man, 2, 1).unwrap();
    let x = [1.3, 0.45];
    let h = 1e-5;
    for i in [1usize, 7, 20, 33] {
        let g = basis.entry_gradient(i, &x);
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let fd = (basis.entry_value(i, &xp) - basis.entry_value(i, &xm)) / (2.0 * h);
            for p in 0..2 {
                assert!(
                    (g[(c, p)] - fd[p]).abs() < 1e-7 * (1.0 + g[(c, p)].abs()),
                    "entry {i} dir {c} comp {p}"
                );
            }
        }
    }
}

/// Covariant finite differences on the sphere: ordinary partials of the
/// orthonormal-frame components plus the closed-form connection terms of the
/// polar frame.
fn sphere_covariant_fd(
    basis: &SpectralBasis,
    i: usize,
    x: &[f64],
    rho: f64,
    h: f64,
) -> DMatrix<f64> {
    let dim = basis.component_dim();
    let (s, c) = x[0].sin_cos();
    let kappa = c / (rho * s);
    let mut out = DMatrix::zeros(2, dim);
    for chart_dir in 0..2 {
        let mut xp = [x[0], x[1]];
        let mut xm = [x[0], x[1]];
        xp[chart_dir] += h;
        xm[chart_dir] -= h;
        let fd = (basis.entry_value(i, &xp) - basis.entry_value(i, &xm)) / (2.0 * h);
        // frame directions: F1 = (1/rho) d_theta, F2 = (1/(rho s)) d_phi
        let scale = if chart_dir == 0 { 1.0 / rho } else { 1.0 / (rho * s) };
        for p in 0..dim {
            out[(chart_dir, p)] = scale * fd[p];
        }
    }
    if dim == 2 {
        // one-form connection terms in the polar frame
        let v = basis.entry_value(i, x);
        out[(1, 0)] -= kappa * v[1];
        out[(1, 1)] += kappa * v[0];
    }
    out
}

#[test]
fn sphere_gradients_match_covariant_finite_differences() {
    let rho = 2.0;
    let man = sphere(rho);
    let points = [[1.1, 0.7], [2.2, 3.9], [0.6, 5.5]];
    for j in 0..=2usize {
        let basis = SpectralBasis::sphere(&man, 4, j).unwrap();
        let picks = [0usize, 3, basis.len() / 2, basis.len() - 1];
        for &i in &picks {
            for x in &points {
                let g = basis.entry_gradient(i, x);
                let fd = sphere_covariant_fd(&basis, i, x, rho, 1e-4);
                for c in 0..2 {
                    for p in 0..basis.component_dim() {
                        assert!(
                            (g[(c, p)] - fd[(c, p)]).abs() < 1e-5 * (1.0 + g[(c, p)].abs()),
                            "degree {j} entry {i} at {x:?}: {} vs {}",
                            g[(c, p)],
                            fd[(c, p)]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn sphere_entries_stay_finite_near_poles() {
    let man = sphere(1.0);
    for j in 0..=2usize {
        let basis = SpectralBasis::sphere(&man, 3, j).unwrap();
        for x in [[1e-9, 0.3], [PI - 1e-9, 5.0]] {
            for i in 0..basis.len() {
                assert!(basis.entry_value(i, &x).iter().all(|v| v.is_finite()));
                assert!(basis.entry_gradient(i, &x).iter().all(|v| v.is_finite()));
            }
        }
    }
}

fn random_coeffs(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis_draw = DVector::zeros(n);
    for v in basis_draw.iter_mut() {
        *v = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
    }
    basis_draw
}

#[test]
fn d_squared_vanishes_and_laplacian_factorizes() {
    let cases: Vec<Arc<SpectralBasis>> = vec![
        SpectralBasis::torus(&torus2(), 2, 0).unwrap(),
        SpectralBasis::torus(&torus2(), 2, 1).unwrap(),
        SpectralBasis::torus(&torus2(), 2, 2).unwrap(),
        SpectralBasis::torus(&torus3(), 1, 1).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 0).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 1).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 2).unwrap(),
        SpectralBasis::sphere(&sphere(2.0), 2, 1).unwrap(),
    ];
    for basis in cases {
        let c = random_coeffs(basis.len(), 42);
        let j = basis.degree();
        let m = basis.manifold().dimension();

        // d after d is zero
        let dc = d_field(&basis, &c).unwrap();
        if j < m {
            if let Some(inner) = dc.coefficients() {
                let ddc = d_field(dc.basis().unwrap(), inner).unwrap();
                assert!(ddc.l2_norm() < 1e-13 * (1.0 + c.norm()));
            }
        }

        // d-dagger d + d d-dagger acts as multiplication by the eigenvalue
        let mut total = DVector::zeros(basis.len());
        if j < m {
            let up = d_field(&basis, &c).unwrap();
            if let Some(up_c) = up.coefficients() {
                let back = ddagger_field(up.basis().unwrap(), up_c).unwrap();
                total += back.coefficients().unwrap();
            }
        }
        if j > 0 {
            let down = ddagger_field(&basis, &c).unwrap();
            if let Some(down_c) = down.coefficients() {
                let back = d_field(down.basis().unwrap(), down_c).unwrap();
                total += back.coefficients().unwrap();
            }
        }
        for i in 0..basis.len() {
            let expect = basis.eigenvalue(i) * c[i];
            assert!(
                (total[i] - expect).abs() < 1e-11 * (1.0 + expect.abs()),
                "degree {j}: entry {i} gives {} instead of {}",
                total[i],
                expect
            );
        }
    }
}

#[test]
fn coefficient_maps_match_pointwise_operators() {
    let cases: Vec<Arc<SpectralBasis>> = vec![
        SpectralBasis::torus(&torus2(), 2, 1).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 1).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 2).unwrap(),
    ];
    for basis in cases {
        let c = random_coeffs(basis.len(), 7);
        let man = basis.manifold().clone();
        let points: Vec<Vec<f64>> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..4).map(|_| man.random_point(&mut rng)).collect()
        };
        let up = d_field(&basis, &c).unwrap();
        let down = ddagger_field(&basis, &c).unwrap();
        for x in &points {
            let mut du = DVector::zeros(up.components_len());
            let mut dd = DVector::zeros(down.components_len());
            for i in 0..basis.len() {
                if !du.is_empty() {
                    du.axpy(c[i], &basis.entry_d(i, x), 1.0);
                }
                if !dd.is_empty() {
                    dd.axpy(c[i], &basis.entry_ddagger(i, x), 1.0);
                }
            }
            let du_map = up.value_at(x);
            let dd_map = down.value_at(x);
            assert!((du - &du_map).norm() < 1e-10 * (1.0 + du_map.norm()));
            assert!((dd - &dd_map).norm() < 1e-10 * (1.0 + dd_map.norm()));
        }
    }
}

#[test]
fn kernel_routes_agree_on_the_torus() {
    let man = ModelManifold::flat_torus(vec![1.0, 1.3]).unwrap();
    let t = 0.05;
    let (x, y) = (vec![0.21, 0.9], vec![0.77, 0.33]);
    for j in 0..=1usize {
        let basis = SpectralBasis::torus(&man, 6, j).unwrap();
        let engine = HeatKernel::new(&man, j).unwrap();
        let a = kernels::heat_kernel(&basis, t, &x, &y).unwrap();
        let b = engine.eval(t, &x, &y).unwrap();
        assert!((&a - &b).abs().max() < 1e-11 * (1.0 + b.abs().max()), "degree {j}");
        let ga = kernels::grad_heat_kernel(&basis, t, &x, &y).unwrap();
        let gb = engine.eval_grad(t, &x, &y).unwrap();
        assert!(
            (&ga - &gb).abs().max() < 1e-10 * (1.0 + gb.abs().max()),
            "degree {j} gradient"
        );
    }
}

#[test]
fn kernel_routes_agree_on_the_sphere() {
    let man = sphere(1.0);
    let t = 0.3;
    let (x, y) = (vec![1.1, 0.7], vec![1.9, 4.1]);
    for j in 0..=2usize {
        let basis = SpectralBasis::sphere(&man, 20, j).unwrap();
        let engine = HeatKernel::new(&man, j).unwrap();
        let a = kernels::heat_kernel(&basis, t, &x, &y).unwrap();
        let b = engine.eval(t, &x, &y).unwrap();
        assert!(
            (&a - &b).abs().max() < 1e-10 * (1.0 + b.abs().max()),
            "degree {j}: eigensum {a} vs addition {b}"
        );
        let ga = kernels::grad_heat_kernel(&basis, t, &x, &y).unwrap();
        let gb = engine.eval_grad(t, &x, &y).unwrap();
        assert!(
            (&ga - &gb).abs().max() < 1e-9 * (1.0 + gb.abs().max()),
            "degree {j} gradient"
        );
    }
}

#[test]
fn basis_gradient_kernel_matches_finite_differences() {
    let man = ModelManifold::flat_torus(vec![1.0, 1.3]).unwrap();
    let basis = SpectralBasis::torus(&man, 6, 0).unwrap();
    let t = 0.05;
    let (x, y) = (vec![0.4, 0.12], vec![0.9, 1.1]);
    let g = kernels::grad_heat_kernel(&basis, t, &x, &y).unwrap();
    let h = 1e-5;
    for c in 0..2 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        let fd = (kernels::heat_kernel(&basis, t, &xp, &y).unwrap()
            - kernels::heat_kernel(&basis, t, &xm, &y).unwrap())
            / (2.0 * h);
        assert!(
            (g[(c, 0)] - fd[(0, 0)]).abs() < 1e-4 * (1.0 + g[(c, 0)].abs()),
            "direction {c}: {} vs {}",
            g[(c, 0)],
            fd[(0, 0)]
        );
    }
}

#[test]
fn sphere_engine_gradient_matches_transported_differences() {
    let rho = 1.0;
    let man = sphere(rho);
    let engine = HeatKernel::new(&man, 1).unwrap();
    let t = 0.4;
    let x = [1.2, 0.8];
    let y = vec![1.7, 3.4];
    let g = engine.eval_grad(t, &x, &y).unwrap();
    let n = sphere_chart_to_unit(x[0], x[1]);
    let frame = sphere_frame(x[0], x[1]);
    let dirs = [frame.0, frame.1];
    let h = 1e-4;
    for c in 0..2 {
        let mut sampled = Vec::new();
        for sign in [1.0f64, -1.0] {
            let mut carry = [frame.0, frame.1];
            let end = sphere_geodesic(&n, &dirs[c], sign * h / rho, &mut carry);
            let (theta, phi) = sphere_unit_to_chart(&end);
            let k = engine.eval(t, &[theta, phi], &y).unwrap();
            // components of the kernel against the transported frame
            let end_frame = sphere_frame(theta, phi);
            let chart = [end_frame.0, end_frame.1];
            let mut rot = DMatrix::zeros(2, 2);
            for a in 0..2 {
                for b in 0..2 {
                    rot[(a, b)] = carry[a].dot(&chart[b]);
                }
            }
            sampled.push(rot * k);
        }
        let fd = (&sampled[0] - &sampled[1]) / (2.0 * h);
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (g[(c * 2 + a, b)] - fd[(a, b)]).abs() < 1e-5 * (1.0 + fd[(a, b)].abs()),
                    "dir {c} entry ({a},{b}): {} vs {}",
                    g[(c * 2 + a, b)],
                    fd[(a, b)]
                );
            }
        }
    }
}

#[test]
fn kernels_obey_the_semigroup_identity() {
    // sphere, degree 1: K_{t+s}(x,y) = integral of K_t(x,z) K_s(z,y) dz
    let man = sphere(1.0);
    let engine = HeatKernel::new(&man, 1).unwrap();
    let (t, s) = (0.3, 0.2);
    let (x, y) = (vec![1.1, 0.7], vec![2.0, 2.9]);
    let grid = quadrature::product_grid(&man, 16).unwrap();
    let direct = engine.eval(t + s, &x, &y).unwrap();
    let mut composed = DMatrix::zeros(2, 2);
    for (z, w) in grid.points.iter().zip(&grid.weights) {
        let left = engine.eval(t, &x, z).unwrap();
        let right = engine.eval(s, z, &y).unwrap();
        composed += left * right * *w;
    }
    assert!(
        (&direct - &composed).abs().max() < 1e-8 * (1.0 + direct.abs().max()),
        "{direct} vs {composed}"
    );

    // torus, scalar
    let man = ModelManifold::flat_torus(vec![1.0, 1.3]).unwrap();
    let engine = HeatKernel::new(&man, 0).unwrap();
    let grid = quadrature::torus_grid(&man, 64).unwrap();
    let (x, y) = (vec![0.2, 0.5], vec![0.6, 1.0]);
    let direct = engine.scalar(0.07, &x, &y).unwrap();
    let composed = grid.integrate(|z| {
        engine.scalar(0.04, &x, z).unwrap() * engine.scalar(0.03, z, &y).unwrap()
    });
    assert!((direct - composed).abs() < 1e-10 * (1.0 + direct.abs()));
}

#[test]
fn basis_kernels_reproduce_projectors_and_mass() {
    // torus one-forms: integrating the kernel over y gives the projector
    // onto parallel fields, and t -> infinity contracts to it
    let man = torus2();
    let basis = SpectralBasis::torus(&man, 8, 1).unwrap();
    let grid = quadrature::torus_grid(&man, 32).unwrap();
    let x = vec![1.0, 2.0];
    let mut mass = DMatrix::zeros(2, 2);
    for (y, w) in grid.points.iter().zip(&grid.weights) {
        mass += kernels::heat_kernel(&basis, 0.5, &x, y).unwrap() * *w;
    }
    let eye = DMatrix::<f64>::identity(2, 2);
    assert!((&mass - &eye).abs().max() < 1e-10);

    let late = kernels::heat_kernel(&basis, 80.0, &x, &[0.3, 0.9]).unwrap();
    let vol = man.total_volume();
    assert!((&late - &(eye / vol)).abs().max() < 1e-12);

    // sphere one-forms: the kernel reproduces the semigroup on band-limited
    // fields, and with no harmonic part the late-time kernel dies out
    let man = sphere(1.0);
    let basis = SpectralBasis::sphere(&man, 5, 1).unwrap();
    let grid = quadrature::product_grid(&man, 5).unwrap();
    let x = vec![1.3, 0.4];
    let t = 0.8;
    let c = random_coeffs(basis.len(), 31);
    let f = basis.field(c.clone()).unwrap();
    let mut smoothed = DVector::zeros(2);
    for (y, w) in grid.points.iter().zip(&grid.weights) {
        let k = kernels::heat_kernel(&basis, t, &x, y).unwrap();
        smoothed += k * f.value_at(y) * *w;
    }
    let direct = apply_multiplier(&basis, |l| (-t * l).exp(), &c)
        .unwrap()
        .value_at(&x);
    assert!((&smoothed - &direct).norm() < 1e-9 * (1.0 + direct.norm()));
    let late = kernels::heat_kernel(&basis, 80.0, &x, &[0.3, 0.9]).unwrap();
    assert!(late.abs().max() < 1e-12);

    // scalar kernels keep unit mass at every time the tail certifies
    let basis = SpectralBasis::sphere(&man, 5, 0).unwrap();
    for t in [0.6, 2.0, 40.0] {
        let mut total = 0.0;
        for (y, w) in grid.points.iter().zip(&grid.weights) {
            total += kernels::heat_kernel(&basis, t, &x, y).unwrap()[(0, 0)] * w;
        }
        assert!((total - 1.0).abs() < 1e-10, "t = {t}: mass {total}");
    }
}

#[test]
fn heat_trace_matches_eigenvalue_sum() {
    // homogeneity makes the trace a one-point identity:
    // V * tr K_t(x, x) = sum_i exp(-t lambda_i) + tail
    let t = 0.5;
    let man = sphere(1.0);
    let basis = SpectralBasis::sphere(&man, 12, 1).unwrap();
    let engine = HeatKernel::new(&man, 1).unwrap();
    let x = vec![0.9, 1.4];
    let diag = engine.eval(t, &x, &x).unwrap();
    let lhs = man.total_volume() * diag.trace();
    let rhs: f64 = basis.eigenvalues().map(|l| (-t * l).exp()).sum();
    assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs));

    let man = torus2();
    let basis = SpectralBasis::torus(&man, 6, 1).unwrap();
    let engine = HeatKernel::new(&man, 1).unwrap();
    let x = vec![0.0, 0.0];
    let lhs = man.total_volume() * engine.eval(t, &x, &x).unwrap().trace();
    let rhs: f64 = basis.eigenvalues().map(|l| (-t * l).exp()).sum();
    assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs));
}

#[test]
fn hodge_duality_pairs_the_extreme_degrees() {
    // on the sphere the degree-2 kernel equals the scalar kernel, and the
    // degree-2 eigensections are the star-conjugated scalars
    let man = sphere(1.0);
    let b0 = SpectralBasis::sphere(&man, 6, 0).unwrap();
    let b2 = SpectralBasis::sphere(&man, 6, 2).unwrap();
    let (x, y) = (vec![0.8, 0.3], vec![2.1, 4.4]);
    let k0 = kernels::heat_kernel(&b0, 0.5, &x, &y).unwrap();
    let k2 = kernels::heat_kernel(&b2, 0.5, &x, &y).unwrap();
    assert!((k0[(0, 0)] - k2[(0, 0)]).abs() < 1e-12);
    for i in 0..b0.len() {
        assert_eq!(b0.eigenvalue(i), b2.eigenvalue(i));
        let v0 = b0.entry_value(i, &x)[0];
        let v2 = b2.entry_value(i, &x)[0];
        assert!((v0 - v2).abs() < 1e-13);
    }
}

#[test]
fn multiplier_laws_hold() {
    let man = torus2();
    let basis = SpectralBasis::torus(&man, 2, 1).unwrap();
    let c = random_coeffs(basis.len(), 9);

    // identity multiplier returns the field unchanged
    let same = apply_multiplier(&basis, |_| 1.0, &c).unwrap();
    assert_eq!(same.coefficients().unwrap(), &c);

    // semigroup law at the coefficient level
    let (t, s) = (0.3, 0.45);
    let one = apply_multiplier(&basis, |l| (-t * l).exp(), &c).unwrap();
    let two = apply_multiplier(&basis, |l| (-s * l).exp(), one.coefficients().unwrap()).unwrap();
    let direct = apply_multiplier(&basis, |l| (-(t + s) * l).exp(), &c).unwrap();
    assert!(
        (two.coefficients().unwrap() - direct.coefficients().unwrap()).norm()
            < 1e-14 * (1.0 + c.norm())
    );

    // the analytic bound sup_x x e^{-x} = 1/e controls t lambda e^{-t lambda}
    let worst = basis
        .eigenvalues()
        .map(|l| t * l * (-t * l).exp())
        .fold(0.0f64, f64::max);
    assert!(worst <= (-1.0f64).exp() + 1e-15);

    // non-finite multiplier values are refused
    assert!(apply_multiplier(&basis, |l| 1.0 / l, &c).is_err());
}

#[test]
fn riesz_application_contracts_l2_norms() {
    // flat torus: no curvature potential, so both contraction bounds are
    // clean; the quadrature route must agree with the coefficient route
    let man = torus2();
    let basis = SpectralBasis::torus(&man, 3, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = basis.random_field(&mut rng);
        let fc = f.coefficients().unwrap().clone();
        let norm_in = f.l2_norm();

        let dirac = riesz_apply(&basis, 1.0, RieszVariant::DPlusDdagger, &fc).unwrap();
        assert!(dirac.l2_norm() <= norm_in * (1.0 + 1e-12));
        assert!(
            (dirac.l2_norm() - dirac.l2_norm_quadrature()).abs() < 1e-9 * (1.0 + norm_in)
        );

        let nabla = riesz_apply(&basis, 0.5, RieszVariant::Nabla, &fc).unwrap();
        let g = nabla.l2_norm();
        assert!(g * g <= norm_in * norm_in * (1.0 + 1e-9));
    }

    // sphere: the gradient bound inflates by the curvature potential ceiling
    let man = sphere(1.0);
    let basis = SpectralBasis::sphere(&man, 3, 1).unwrap();
    let a_prime = man.sup_potential_norm(1).unwrap();
    let kappa = 1.0;
    for seed in 0..10u64 {
        let c = random_coeffs(basis.len(), 100 + seed);
        let norm_in = c.norm();
        let dirac = riesz_apply(&basis, kappa, RieszVariant::DPlusDdagger, &c).unwrap();
        assert!(dirac.l2_norm() <= norm_in * (1.0 + 1e-12));
        let nabla = riesz_apply(&basis, kappa, RieszVariant::Nabla, &c).unwrap();
        let g = nabla.l2_norm();
        assert!(
            g * g <= (1.0 + a_prime / kappa) * norm_in * norm_in * (1.0 + 1e-9),
            "gradient norm {g} with input {norm_in}"
        );
    }
}

#[test]
fn riesz_rejects_bad_inputs() {
    let basis = SpectralBasis::torus(&torus2(), 2, 1).unwrap();
    let c = random_coeffs(basis.len(), 1);
    assert!(riesz_apply(&basis, 0.0, RieszVariant::Nabla, &c).is_err());
    let short = DVector::zeros(3);
    assert!(riesz_apply(&basis, 1.0, RieszVariant::D, &short).is_err());
    assert!(RieszVariant::parse("d_plus_ddagger").is_ok());
    assert!(RieszVariant::parse("curl").is_err());
}

#[test]
fn projection_inverts_evaluation() {
    let cases: Vec<Arc<SpectralBasis>> = vec![
        SpectralBasis::torus(&torus2(), 2, 1).unwrap(),
        SpectralBasis::sphere(&sphere(1.0), 3, 1).unwrap(),
    ];
    for basis in cases {
        let c = random_coeffs(basis.len(), 12);
        let f = basis.field(c.clone()).unwrap();
        let recovered = basis.project(|x| f.value_at(x));
        assert!((recovered - &c).norm() < 1e-10 * (1.0 + c.norm()));
        // Parseval agrees with quadrature
        assert!((f.l2_norm() - f.l2_norm_quadrature()).abs() < 1e-10 * (1.0 + f.l2_norm()));
    }
}

#[test]
fn constant_fields_are_torus_only() {
    let man = torus2();
    let f = FormField::constant(&man, 1, DVector::from_vec(vec![3.0, 4.0])).unwrap();
    assert_eq!(f.sup_norm(), 5.0);
    assert!((f.l2_norm() - 5.0 * man.total_volume().sqrt()).abs() < 1e-12);
    assert!(f.gradient_at(&[0.1, 0.2]).unwrap().abs().max() == 0.0);
    assert!(FormField::constant(&sphere(1.0), 1, DVector::zeros(2)).is_err());
    assert!(FormField::constant(&man, 1, DVector::zeros(3)).is_err());
}

#[test]
fn sup_norm_estimate_dominates_samples() {
    let basis = SpectralBasis::sphere(&sphere(1.0), 4, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let f = basis.random_field(&mut rng);
    let sup = f.sup_norm();
    let man = basis.manifold().clone();
    for _ in 0..50 {
        let x = man.random_point(&mut rng);
        assert!(f.pointwise_norm(&x) <= sup * 1.05 + 1e-12);
    }
}
