//! Embedding models for the curved catalog members: the round sphere in
//! Euclidean 3-space and the hyperbolic plane as the upper hyperboloid sheet
//! in Minkowski 3-space. Geodesic flow and parallel transport are closed-form
//! rotations (respectively Lorentz boosts) in the ambient space, which keeps
//! the frame-bundle stepping free of chart singularities.

use nalgebra::Vector3;

pub const POLE_EPS: f64 = 1e-12;

// ---------------------------------------------------------------------------
// sphere: unit vectors n with |n| = 1, chart (theta, phi)

pub fn sphere_chart_to_unit(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Chart coordinates of a unit vector, with polar angles nudged away from the
/// chart singularities at the poles.
pub fn sphere_unit_to_chart(n: &Vector3<f64>) -> (f64, f64) {
    let theta = n.z.clamp(-1.0, 1.0).acos();
    let theta = theta.clamp(POLE_EPS, std::f64::consts::PI - POLE_EPS);
    let phi = n.y.atan2(n.x).rem_euclid(2.0 * std::f64::consts::PI);
    (theta, phi)
}

/// Unit tangent vectors of the coordinate-aligned orthonormal frame at
/// (theta, phi): the normalized theta and phi directions.
pub fn sphere_frame(theta: f64, phi: f64) -> (Vector3<f64>, Vector3<f64>) {
    let t_theta = Vector3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin());
    let t_phi = Vector3::new(-phi.sin(), phi.cos(), 0.0);
    (t_theta, t_phi)
}

/// Walk along the great circle from `n` with initial unit direction `dir`
/// (tangent, |dir| = 1) for angle `psi`; returns the endpoint and transports
/// the tangent vectors `carry` along the geodesic in place.
pub fn sphere_geodesic(
    n: &Vector3<f64>,
    dir: &Vector3<f64>,
    psi: f64,
    carry: &mut [Vector3<f64>],
) -> Vector3<f64> {
    let (c, s) = (psi.cos(), psi.sin());
    let end = c * n + s * dir;
    let dir_end = -s * n + c * dir;
    for w in carry.iter_mut() {
        let par = dir.dot(w);
        *w += par * (dir_end - dir);
    }
    end
}

// ---------------------------------------------------------------------------
// hyperbolic plane: hyperboloid sheet <p,p> = -1, p_z > 0, in the Minkowski
// product <a,b> = a_x b_x + a_y b_y - a_z b_z; chart = Poincare disk

pub fn mink(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

pub fn disk_to_hyperboloid(u: &[f64]) -> Vector3<f64> {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let den = 1.0 - r2;
    Vector3::new(2.0 * u[0] / den, 2.0 * u[1] / den, (1.0 + r2) / den)
}

pub fn hyperboloid_to_disk(p: &Vector3<f64>) -> [f64; 2] {
    [p.x / (1.0 + p.z), p.y / (1.0 + p.z)]
}

/// Columns of the Jacobian of `disk_to_hyperboloid` at `u`; they span the
/// tangent plane at the image point and push the disk metric forward to the
/// Minkowski-induced one.
pub fn disk_jacobian(u: &[f64]) -> [Vector3<f64>; 2] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let den = 1.0 - r2;
    let den2 = den * den;
    let mut cols = [Vector3::zeros(), Vector3::zeros()];
    for (a, col) in cols.iter_mut().enumerate() {
        let ua = u[a];
        // d/du_a of (2u/den): 2 delta/den + 4 u u_a / den^2
        col.x = 2.0 * f64::from(a == 0) / den + 4.0 * u[0] * ua / den2;
        col.y = 2.0 * f64::from(a == 1) / den + 4.0 * u[1] * ua / den2;
        // d/du_a of ((1+r2)/den) = 2u_a/den + (1+r2) 2u_a/den^2
        col.z = 2.0 * ua / den + (1.0 + r2) * 2.0 * ua / den2;
    }
    cols
}

/// Geodesic flow on the hyperboloid from `p` with Minkowski-unit tangent
/// `dir` for arclength `psi`, transporting `carry` along it.
pub fn hyperbolic_geodesic(
    p: &Vector3<f64>,
    dir: &Vector3<f64>,
    psi: f64,
    carry: &mut [Vector3<f64>],
) -> Vector3<f64> {
    let (c, s) = (psi.cosh(), psi.sinh());
    let end = c * p + s * dir;
    let dir_end = s * p + c * dir;
    for w in carry.iter_mut() {
        let par = mink(dir, w);
        *w += par * (dir_end - dir);
    }
    end
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_chart_roundtrip() {
        let n = sphere_chart_to_unit(1.1, 2.3);
        assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-15);
        let (th, ph) = sphere_unit_to_chart(&n);
        assert_relative_eq!(th, 1.1, epsilon = 1e-12);
        assert_relative_eq!(ph, 2.3, epsilon = 1e-12);
    }

    #[test]
    fn sphere_transport_is_isometric() {
        let n = sphere_chart_to_unit(0.9, 0.4);
        let (t1, t2) = sphere_frame(0.9, 0.4);
        let dir = (0.6 * t1 + 0.8 * t2).normalize();
        let mut carry = [t1, t2];
        let end = sphere_geodesic(&n, &dir, 1.7, &mut carry);
        assert_relative_eq!(end.norm(), 1.0, epsilon = 1e-14);
        for w in &carry {
            assert_relative_eq!(w.dot(&end), 0.0, epsilon = 1e-14);
            assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-14);
        }
        assert_relative_eq!(carry[0].dot(&carry[1]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hyperboloid_roundtrip_and_metric() {
        let u = [0.3, -0.2];
        let p = disk_to_hyperboloid(&u);
        assert_relative_eq!(mink(&p, &p), -1.0, epsilon = 1e-13);
        let back = hyperboloid_to_disk(&p);
        assert_relative_eq!(back[0], u[0], epsilon = 1e-14);
        assert_relative_eq!(back[1], u[1], epsilon = 1e-14);
        // pushed-forward metric equals the conformal disk metric
        let cols = disk_jacobian(&u);
        let lam = 2.0 / (1.0 - (u[0] * u[0] + u[1] * u[1]));
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { lam * lam } else { 0.0 };
                assert_relative_eq!(mink(&cols[a], &cols[b]), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hyperbolic_transport_is_isometric() {
        let u = [0.25, 0.1];
        let p = disk_to_hyperboloid(&u);
        let cols = disk_jacobian(&u);
        let lam = 2.0 / (1.0 - (u[0] * u[0] + u[1] * u[1]));
        let e0 = cols[0] / lam;
        let e1 = cols[1] / lam;
        let dir = e0;
        let mut carry = [e0, e1];
        let end = hyperbolic_geodesic(&p, &dir, 0.8, &mut carry);
        assert_relative_eq!(mink(&end, &end), -1.0, epsilon = 1e-12);
        for w in &carry {
            assert_relative_eq!(mink(w, &end), 0.0, epsilon = 1e-12);
            assert_relative_eq!(mink(w, w), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(mink(&carry[0], &carry[1]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hyperbolic_distance_along_geodesic() {
        // endpoint of a length-s geodesic from the origin sits at disk radius
        // tanh(s/2)
        let p = disk_to_hyperboloid(&[0.0, 0.0]);
        let cols = disk_jacobian(&[0.0, 0.0]);
        let e0 = cols[0] / 2.0;
        let mut none: [Vector3<f64>; 0] = [];
        let end = hyperbolic_geodesic(&p, &e0, 1.3, &mut none);
        let disk = hyperboloid_to_disk(&end);
        assert_relative_eq!(disk[0], (1.3f64 / 2.0).tanh(), epsilon = 1e-13);
        assert_relative_eq!(disk[1], 0.0, epsilon = 1e-15);
    }
}
