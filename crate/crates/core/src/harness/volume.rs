//! Ball-volume growth: doubling along radii and comparison across centers.

use super::*;

/// Fit the smallest C with vol(z,R)/vol(z,r) <= C e^{CR} (R/r)^m over
/// sampled centers and all radius pairs r <= R from the scan grid.
pub fn verify_lvd(
    man: &ModelManifold,
    radii: &ScanGrid,
    n_centers: usize,
    seed: u64,
) -> Result<FitReport> {
    if n_centers == 0 {
        return Err(Error::InvalidInput("need at least one center".into()));
    }
    let m = man.dimension() as i32;
    let run = |level: u32| {
        let centers = sample_points(man, n_centers << level, seed);
        let rs = radii.values(level);
        // rows: (volume ratio, R, R/r)
        let mut rows = Vec::new();
        for z in &centers {
            let vols: Vec<f64> = rs.iter().map(|&r| man.ball_volume(z, r)).collect();
            for (i, &r) in rs.iter().enumerate() {
                for (k, &big) in rs.iter().enumerate().skip(i) {
                    rows.push((vols[k] / vols[i], big, big / r));
                }
            }
        }
        let c = min_monotone_constant(
            |c| {
                rows.iter()
                    .all(|&(q, big, rat)| q <= c * (c * big).exp() * rat.powi(m) * (1.0 + 1e-12))
            },
            1e-6,
            1e12,
        );
        let ratio = if c.is_finite() {
            rows.iter()
                .map(|&(q, big, rat)| safe_ratio(q, c * (c * big).exp() * rat.powi(m)))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        // growth excess per R relative to pure power scaling from the
        // smallest radius
        let r0 = rs[0];
        let series: Vec<(f64, f64)> = rs
            .iter()
            .map(|&big| {
                let excess = centers
                    .iter()
                    .map(|z| man.ball_volume(z, big) / man.ball_volume(z, r0) / (big / r0).powi(m))
                    .fold(0.0, f64::max);
                (big, excess)
            })
            .collect();
        (vec![("C".to_string(), c)], ratio, series)
    };
    let (constants, max_ratio, series) = run(0);
    let (fine, _, _) = run(1);
    let drift = drift_between(&constants, &fine);
    Ok(FitReport::new(
        BoundSpec {
            name: format!("volume-doubling-{}", manifold_slug(man)),
            form: "vol(z,R)/vol(z,r) <= C e^{CR} (R/r)^m, r <= R".into(),
            grid: format!("radii {}; {} centers, seed {}", radii.describe(), n_centers, seed),
        },
        constants,
        max_ratio,
        drift,
        ("R".into(), "growth excess over (R/r0)^m".into()),
        series,
        vec![man.description()],
    ))
}

/// Fit, for each eps in the list, the smallest C with
/// vol(x2,sqrt(t))/vol(x1,sqrt(t)) <= C e^{Ct/eps} e^{eps rho(x1,x2)^2/t}
/// over sampled point pairs and scan times.
pub fn verify_volume_comparison(
    man: &ModelManifold,
    eps_list: &[f64],
    t_grid: &ScanGrid,
    n_pairs: usize,
    seed: u64,
) -> Result<FitReport> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput(
            "eps list must be non-empty and positive".into(),
        ));
    }
    if n_pairs == 0 {
        return Err(Error::InvalidInput("need at least one point pair".into()));
    }
    let run = |level: u32| {
        let pts = sample_points(man, 2 * (n_pairs << level), seed);
        let ts = t_grid.values(level);
        // rows: (volume ratio, t, squared distance); both orientations of
        // each pair, plus the trivial coincident row
        let mut rows = vec![(1.0, ts[0], 0.0)];
        for pair in pts.chunks(2) {
            let d2 = man.distance(&pair[0], &pair[1]).powi(2);
            for &t in &ts {
                let (va, vb) = (
                    man.ball_volume(&pair[0], t.sqrt()),
                    man.ball_volume(&pair[1], t.sqrt()),
                );
                rows.push((vb / va, t, d2));
                rows.push((va / vb, t, d2));
            }
        }
        let bound = |c: f64, eps: f64, t: f64, d2: f64| {
            c * (c * t / eps).exp() * (eps * d2 / t).exp()
        };
        let mut constants = Vec::new();
        let mut series = Vec::new();
        let mut worst = 0.0_f64;
        for &eps in eps_list {
            let c = min_monotone_constant(
                |c| {
                    rows.iter()
                        .all(|&(q, t, d2)| q <= bound(c, eps, t, d2) * (1.0 + 1e-12))
                },
                1e-6,
                1e12,
            );
            let ratio = if c.is_finite() {
                rows.iter()
                    .map(|&(q, t, d2)| safe_ratio(q, bound(c, eps, t, d2)))
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
            constants.push((format!("C[eps={eps}]"), c));
            series.push((eps, c));
        }
        (constants, worst, series)
    };
    let (constants, max_ratio, series) = run(0);
    let (fine, _, _) = run(1);
    let drift = drift_between(&constants, &fine);
    Ok(FitReport::new(
        BoundSpec {
            name: format!("volume-comparison-{}", manifold_slug(man)),
            form: "vol(x2,sqrt(t))/vol(x1,sqrt(t)) <= C e^{Ct/eps} e^{eps rho^2/t}".into(),
            grid: format!(
                "t {}; {} pairs, seed {}; eps {:?}",
                t_grid.describe(),
                n_pairs,
                seed,
                eps_list
            ),
        },
        constants,
        max_ratio,
        drift,
        ("eps".into(), "C(eps)".into()),
        series,
        vec![man.description()],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_below_half_period_needs_no_growth_constant() {
        // Euclidean balls scale exactly like r^m, so any C >= 1 works and
        // the fitted constant collapses to the bisection floor.
        let man = ModelManifold::flat_torus(vec![
            2.0 * std::f64::consts::PI,
            2.0 * std::f64::consts::PI,
        ])
        .unwrap();
        let radii = ScanGrid::new(0.2, 1.5, 4).unwrap();
        let report = verify_lvd(&man, &radii, 3, 7).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.constant("C").unwrap() <= 1.0);
        for &(_, excess) in &report.series {
            assert!(excess <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn equal_radii_give_unit_ratio() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let radii = ScanGrid::new(0.4, 0.4, 1).unwrap();
        let report = verify_lvd(&man, &radii, 4, 3).unwrap();
        assert!(report.pass);
        assert!(report.max_ratio <= 1.0 + RATIO_SLACK);
        assert_eq!(report.series.len(), 1);
        assert!((report.series[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_and_patch_fit_finite_stable_constants() {
        for man in [
            ModelManifold::sphere2(1.0).unwrap(),
            ModelManifold::hyperbolic_patch(0.8).unwrap(),
        ] {
            let radii = ScanGrid::new(0.2, 2.0, 4).unwrap();
            let report = verify_lvd(&man, &radii, 3, 11).unwrap();
            assert!(report.pass, "{}: {report:?}", man.description());
            let c = report.constant("C").unwrap();
            assert!(c.is_finite() && c > 0.0);
            assert!(report.drift < DRIFT_THRESHOLD);
        }
    }

    #[test]
    fn comparison_constant_grows_as_eps_shrinks() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let eps = [1.0, 0.25, 0.05];
        let ts = ScanGrid::new(0.05, 0.5, 3).unwrap();
        let report = verify_volume_comparison(&man, &eps, &ts, 6, 19).unwrap();
        assert!(report.pass, "{report:?}");
        // series is (eps, C(eps)) in the given order: eps decreasing, so
        // C non-decreasing
        for pair in report.series.windows(2) {
            assert!(pair[1].0 < pair[0].0);
            assert!(pair[1].1 >= pair[0].1 - 1e-12);
        }
    }

    #[test]
    fn comparison_rejects_bad_input() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let ts = ScanGrid::new(0.1, 0.5, 3).unwrap();
        assert!(verify_volume_comparison(&man, &[], &ts, 4, 1).is_err());
        assert!(verify_volume_comparison(&man, &[-1.0], &ts, 4, 1).is_err());
        assert!(verify_volume_comparison(&man, &[0.5], &ts, 0, 1).is_err());
    }
}
