//! Integration grids on the catalog manifolds.
//!
//! The grids are chosen so that products of band-limited sections integrate
//! exactly (up to rounding): tensor trapezoidal rules on tori (exact for
//! trigonometric polynomials below the node count per axis) and
//! Gauss-Legendre x uniform-longitude rules on spheres (exact for spherical
//! polynomials of degree < n_phi with n_theta >= n_phi/2).

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ModelManifold};

/// A quadrature rule: chart points with positive weights summing to the
/// total volume of the manifold.
#[derive(Debug, Clone)]
pub struct Grid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a scalar function sampled at the nodes.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .collect();
        crate::linalg::pairwise_sum(&terms)
    }
}

/// Uniform tensor grid on a flat torus, `n` nodes per axis.
pub fn torus_grid(man: &ModelManifold, n: usize) -> Result<Grid> {
    let ManifoldKind::FlatTorus { periods } = man.kind() else {
        return Err(Error::InvalidInput("torus_grid needs a flat torus".into()));
    };
    if n == 0 {
        return Err(Error::InvalidInput("empty quadrature grid".into()));
    }
    let m = periods.len();
    let total: usize = n.pow(m as u32);
    let cell: f64 = periods.iter().product::<f64>() / total as f64;
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut x = vec![0.0; m];
        let mut rem = flat;
        for a in 0..m {
            let k = rem % n;
            rem /= n;
            x[a] = (k as f64) * periods[a] / n as f64;
        }
        points.push(x);
    }
    Ok(Grid {
        points,
        weights: vec![cell; total],
    })
}

/// Gauss-Legendre in cos(theta) times uniform longitude on a round sphere.
pub fn sphere_grid(man: &ModelManifold, n_theta: usize, n_phi: usize) -> Result<Grid> {
    let ManifoldKind::Sphere2 { radius } = man.kind() else {
        return Err(Error::InvalidInput("sphere_grid needs a sphere".into()));
    };
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::InvalidInput("empty quadrature grid".into()));
    }
    let (nodes, ws) = crate::linalg::gauss_legendre(n_theta);
    let rho2 = radius * radius;
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut points = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (c, w) in nodes.iter().zip(&ws) {
        let theta = c.acos();
        for q in 0..n_phi {
            points.push(vec![theta, q as f64 * dphi]);
            weights.push(rho2 * w * dphi);
        }
    }
    Ok(Grid { points, weights })
}

/// Grid that integrates products of two sections of band limit `band`
/// exactly, on any catalog manifold with a spectral basis.
pub fn product_grid(man: &ModelManifold, band: usize) -> Result<Grid> {
    match man.kind() {
        ManifoldKind::FlatTorus { .. } => torus_grid(man, 2 * band + 2),
        ManifoldKind::Sphere2 { .. } => sphere_grid(man, 2 * band + 2, 4 * band + 4),
        ManifoldKind::HyperbolicPatch { .. } => Err(Error::UnsupportedManifold(
            "no spectral quadrature on the hyperbolic patch".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_reproduce_total_volume() {
        let t2 = ModelManifold::flat_torus(vec![1.0, 2.0]).unwrap();
        let g = torus_grid(&t2, 7).unwrap();
        let vol: f64 = g.weights.iter().sum();
        assert!((vol - t2.total_volume()).abs() < 1e-12);

        let s2 = ModelManifold::sphere2(1.5).unwrap();
        let g = sphere_grid(&s2, 12, 24).unwrap();
        let vol: f64 = g.weights.iter().sum();
        assert!((vol - s2.total_volume()).abs() < 1e-9 * vol);
    }

    #[test]
    fn sphere_grid_integrates_low_harmonics() {
        // x, z, and x^2 restricted to the sphere have known integrals.
        let s2 = ModelManifold::sphere2(1.0).unwrap();
        let g = sphere_grid(&s2, 6, 12).unwrap();
        let ix = g.integrate(|p| p[0].sin() * p[1].cos());
        let iz = g.integrate(|p| p[0].cos());
        let ixx = g.integrate(|p| (p[0].sin() * p[1].cos()).powi(2));
        assert!(ix.abs() < 1e-13);
        assert!(iz.abs() < 1e-13);
        assert!((ixx - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}
