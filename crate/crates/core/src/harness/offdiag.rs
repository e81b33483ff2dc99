//! Off-diagonal decay: restricted-norm Gaffney estimates between separated
//! regions, and the two-step composition bound on sqrt(t)-balls.

use super::*;
use crate::spectral::kernels::HeatKernel;
use rayon::prelude::*;

/// Stack kernel blocks between two node masks, scaled by the square roots
/// of the quadrature weights on both sides, so the matrix norm discretizes
/// the restricted L^2 operator norm.
fn assemble(
    grid: &Grid,
    rows_idx: &[usize],
    cols_idx: &[usize],
    eval: &(dyn Fn(&[f64], &[f64]) -> Result<DMatrix<f64>> + Sync),
) -> Result<DMatrix<f64>> {
    let probe = eval(&grid.points[rows_idx[0]], &grid.points[cols_idx[0]])?;
    let (br, bc) = (probe.nrows(), probe.ncols());
    let mut s = DMatrix::zeros(br * rows_idx.len(), bc * cols_idx.len());
    for (fi, &fnode) in rows_idx.iter().enumerate() {
        for (ei, &enode) in cols_idx.iter().enumerate() {
            let blk = eval(&grid.points[fnode], &grid.points[enode])?;
            let scale = (grid.weights[fnode] * grid.weights[enode]).sqrt();
            s.view_mut((fi * br, ei * bc), (br, bc))
                .copy_from(&(blk * scale));
        }
    }
    Ok(s)
}

/// Fit (c1, c2) in
/// ||chi_F T_t chi_E|| + ||chi_F sqrt(t) grad T_t chi_E|| + ||chi_F t L T_t chi_E||
///   <= c1 (1 + sqrt(t) A) e^{-c2 rho(E,F)^2 / t}
/// over the time scan, where A bounds the curvature term of degree j and
/// the three operators are discretized on quadrature-node masks. The
/// regions must be separated by a positive distance.
pub fn verify_davies_gaffney(
    man: &ModelManifold,
    j: usize,
    e_region: &RegionSpec,
    f_region: &RegionSpec,
    t_grid: &ScanGrid,
    quad_band: usize,
) -> Result<FitReport> {
    if region_gap(man, e_region, f_region) <= 0.0 {
        return Err(Error::Precondition(
            "source and target regions must be separated by a positive distance".into(),
        ));
    }
    let kernel = HeatKernel::new(man, j)?;
    let a_sup = man.sup_potential_norm(j)?;
    let weight = |t: f64| 1.0 + t.sqrt() * a_sup;
    let run = |level: u32| -> Result<(Vec<(f64, f64)>, f64, usize, usize)> {
        let grid = quad_grid(man, quad_band, level)?;
        let e_idx = e_region.mask(man, &grid);
        let f_idx = f_region.mask(man, &grid);
        if e_idx.is_empty() || f_idx.is_empty() {
            return Err(Error::Precondition(
                "a region contains no quadrature node; enlarge it or refine the quadrature"
                    .into(),
            ));
        }
        // separation realized by the sampled masks
        let mut rho = f64::INFINITY;
        for &f in &f_idx {
            for &e in &e_idx {
                rho = rho.min(man.distance(&grid.points[f], &grid.points[e]));
            }
        }
        let data: Vec<(f64, f64)> = t_grid
            .values(level)
            .par_iter()
            .map(|&t| -> Result<(f64, f64)> {
                let plain = sigma_max(&assemble(&grid, &f_idx, &e_idx, &|x, y| {
                    kernel.eval(t, x, y)
                })?);
                let grad = sigma_max(&assemble(&grid, &f_idx, &e_idx, &|x, y| {
                    kernel.eval_grad(t, x, y)
                })?);
                let h = t * 1e-4;
                let gen = sigma_max(&assemble(&grid, &f_idx, &e_idx, &|x, y| {
                    // kernel of t L e^{-tL} = -t d/dt of the heat kernel
                    let before = kernel.eval(t - h, x, y)?;
                    let after = kernel.eval(t + h, x, y)?;
                    Ok((before - after) * (t / (2.0 * h)))
                })?);
                Ok((t, plain + t.sqrt() * grad + gen))
            })
            .collect::<Result<_>>()?;
        Ok((data, rho, e_idx.len(), f_idx.len()))
    };
    let fit = |data: &[(f64, f64)], rho: f64| -> (f64, f64, f64, Vec<(f64, f64)>) {
        let c1 = data
            .iter()
            .map(|&(t, v)| v / weight(t))
            .fold(0.0, f64::max)
            .max(1e-300);
        let margins: Vec<(f64, f64)> = data
            .iter()
            .map(|&(t, v)| {
                let m = if v > 0.0 {
                    (t / (rho * rho)) * (c1 * weight(t) / v).ln().max(0.0)
                } else {
                    f64::INFINITY
                };
                (t, m)
            })
            .collect();
        let c2 = margins.iter().map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
        let ratio = data
            .iter()
            .map(|&(t, v)| {
                safe_ratio(v, c1 * weight(t) * (-c2 * rho * rho / t).exp())
            })
            .fold(0.0, f64::max);
        (c1, c2, ratio, margins)
    };
    let (data0, rho0, ne, nf) = run(0)?;
    let (c1, c2, max_ratio, series) = fit(&data0, rho0);
    let (data1, rho1, _, _) = run(1)?;
    let (c1f, c2f, _, _) = fit(&data1, rho1);
    let constants = vec![("c1".to_string(), c1), ("c2".to_string(), c2)];
    let drift = drift_between(
        &constants,
        &[("c1".to_string(), c1f), ("c2".to_string(), c2f)],
    );
    Ok(FitReport::new(
        BoundSpec {
            name: format!("davies-gaffney-{}-j{j}", manifold_slug(man)),
            form: "||chi_F e^{-tL} chi_E|| + ||chi_F sqrt(t) grad e^{-tL} chi_E|| \
                   + ||chi_F t L e^{-tL} chi_E|| <= c1 (1 + sqrt(t) A) e^{-c2 rho(E,F)^2/t}"
                .into(),
            grid: format!("t {}; quad band {quad_band}", t_grid.describe()),
        },
        constants,
        max_ratio,
        drift,
        ("t".into(), "admissible decay rate".into()),
        series,
        vec![
            man.description(),
            format!("curvature-term bound A = {a_sup}"),
            format!("mask separation rho = {rho0:.6}; {ne} source and {nf} target nodes"),
        ],
    ))
}

/// One data row of a composition-style bound with the single-constant
/// convention C e^{Ct} volfac e^{-dist^2/(C t)}.
#[derive(Clone, Copy)]
struct Row {
    value: f64,
    t: f64,
    dist2: f64,
    volfac: f64,
}

fn single_constant_bound(c: f64, r: &Row) -> f64 {
    c * (c * r.t).exp() * r.volfac * (-r.dist2 / (c * r.t)).exp()
}

fn fit_single_constant(rows: &[Row]) -> f64 {
    min_monotone_constant(
        |c| {
            rows.iter()
                .all(|r| r.value <= single_constant_bound(c, r) * (1.0 + 1e-12))
        },
        1e-6,
        1e12,
    )
}

fn rows_max_ratio(rows: &[Row], c: f64) -> f64 {
    if !c.is_finite() {
        return f64::INFINITY;
    }
    rows.iter()
        .map(|r| safe_ratio(r.value, single_constant_bound(c, r)))
        .fold(0.0, f64::max)
}

/// Check the two-step composition estimate on sqrt(t)-balls around sampled
/// centers: fit one constant over both mixed-norm hypotheses, compose the
/// semigroup with itself through the quadrature rule, and fit the
/// (1,infinity) conclusion on pairs with rho(x,z) >= sqrt(t); closer pairs
/// are excluded by the precondition of the bound.
pub fn verify_offdiag_composition(
    man: &ModelManifold,
    j: usize,
    t_grid: &ScanGrid,
    n_centers: usize,
    quad_band: usize,
    seed: u64,
) -> Result<FitReport> {
    if n_centers == 0 {
        return Err(Error::InvalidInput("need at least one center".into()));
    }
    let kernel = HeatKernel::new(man, j)?;
    let run = |level: u32| -> Result<(Vec<Row>, Vec<Row>)> {
        let grid = quad_grid(man, quad_band, level)?;
        let n = grid.len();
        let centers = sample_points(man, n_centers << level, seed);
        let mut hyp = Vec::new();
        let mut conc = Vec::new();
        for &t in &t_grid.values(level) {
            let rt = t.sqrt();
            let masks: Vec<Vec<usize>> = centers
                .iter()
                .map(|c| {
                    RegionSpec {
                        center: c.clone(),
                        radius: rt,
                    }
                    .mask(man, &grid)
                })
                .collect();
            let mut used: Vec<usize> = masks.iter().flatten().copied().collect();
            used.sort_unstable();
            used.dedup();
            if used.is_empty() {
                continue;
            }
            // kernel rows on the used nodes against the whole grid
            let row_blocks: Vec<DMatrix<f64>> = used
                .par_iter()
                .map(|&u| -> Result<DMatrix<f64>> {
                    let probe = kernel.eval(t, &grid.points[u], &grid.points[0])?;
                    let dim = probe.nrows();
                    let mut row = DMatrix::zeros(dim, dim * n);
                    row.view_mut((0, 0), (dim, dim)).copy_from(&probe);
                    for k in 1..n {
                        let blk = kernel.eval(t, &grid.points[u], &grid.points[k])?;
                        row.view_mut((0, k * dim), (dim, dim)).copy_from(&blk);
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let dim = row_blocks[0].nrows();
            let mut e_mat = DMatrix::zeros(dim * used.len(), dim * n);
            for (ui, row) in row_blocks.iter().enumerate() {
                e_mat.view_mut((ui * dim, 0), (dim, dim * n)).copy_from(row);
            }
            // compose through the quadrature rule: sum_k w_k K(u,y_k) K(y_k,v)
            let mut weighted = e_mat.clone();
            for k in 0..n {
                let w = grid.weights[k];
                weighted
                    .view_mut((0, k * dim), (dim * used.len(), dim))
                    .apply(|v| *v *= w);
            }
            let composed = &weighted * e_mat.transpose();
            let pos = |node: usize| used.binary_search(&node).unwrap();
            for (a, mask_a) in masks.iter().enumerate() {
                if mask_a.is_empty() {
                    continue;
                }
                let vol_a = man.ball_volume(&centers[a], rt);
                for (b, mask_b) in masks.iter().enumerate() {
                    if mask_b.is_empty() {
                        continue;
                    }
                    let dist = man.distance(&centers[a], &centers[b]);
                    let vol_b = man.ball_volume(&centers[b], rt);
                    // (2,inf) source mask b, evaluation over mask a
                    let h1 = mask_a
                        .iter()
                        .map(|&u| {
                            let mut blk = DMatrix::zeros(dim, dim * mask_b.len());
                            for (vi, &v) in mask_b.iter().enumerate() {
                                let sc = grid.weights[v].sqrt();
                                blk.view_mut((0, vi * dim), (dim, dim)).copy_from(
                                    &(e_mat
                                        .view((pos(u) * dim, v * dim), (dim, dim))
                                        * sc),
                                );
                            }
                            sigma_max(&blk)
                        })
                        .fold(0.0, f64::max);
                    hyp.push(Row {
                        value: h1,
                        t,
                        dist2: dist * dist,
                        volfac: vol_a.powf(-0.5),
                    });
                    // (1,2) source mask b, output integrated over mask a
                    let h2 = mask_b
                        .iter()
                        .map(|&v| {
                            let mut blk = DMatrix::zeros(dim * mask_a.len(), dim);
                            for (ui, &u) in mask_a.iter().enumerate() {
                                let sc = grid.weights[u].sqrt();
                                blk.view_mut((ui * dim, 0), (dim, dim)).copy_from(
                                    &(e_mat
                                        .view((pos(u) * dim, v * dim), (dim, dim))
                                        * sc),
                                );
                            }
                            sigma_max(&blk)
                        })
                        .fold(0.0, f64::max);
                    hyp.push(Row {
                        value: h2,
                        t,
                        dist2: dist * dist,
                        volfac: vol_b.powf(-0.5),
                    });
                    // (1,inf) conclusion, only for well-separated pairs
                    if dist >= rt {
                        let value = mask_a
                            .iter()
                            .flat_map(|&u| mask_b.iter().map(move |&v| (u, v)))
                            .map(|(u, v)| {
                                sigma_max(
                                    &composed
                                        .view((pos(u) * dim, pos(v) * dim), (dim, dim))
                                        .clone_owned(),
                                )
                            })
                            .fold(0.0, f64::max);
                        conc.push(Row {
                            value,
                            t,
                            dist2: dist * dist,
                            volfac: (vol_a * vol_b).powf(-0.5),
                        });
                    }
                }
            }
        }
        if hyp.is_empty() {
            return Err(Error::Precondition(
                "no quadrature node falls in any sqrt(t)-ball; refine the quadrature or raise t"
                    .into(),
            ));
        }
        Ok((hyp, conc))
    };
    let (hyp0, conc0) = run(0)?;
    if conc0.is_empty() {
        return Err(Error::Precondition(
            "every center pair is closer than sqrt(t); the composed bound needs rho(x,z) >= sqrt(t)"
                .into(),
        ));
    }
    let (hyp1, conc1) = run(1)?;
    let c_hyp = fit_single_constant(&hyp0);
    let c_conc = fit_single_constant(&conc0);
    let constants = vec![
        ("C_hyp".to_string(), c_hyp),
        ("C_conc".to_string(), c_conc),
    ];
    let fine = vec![
        ("C_hyp".to_string(), fit_single_constant(&hyp1)),
        ("C_conc".to_string(), fit_single_constant(&conc1)),
    ];
    let drift = drift_between(&constants, &fine);
    let max_ratio = rows_max_ratio(&hyp0, c_hyp).max(rows_max_ratio(&conc0, c_conc));
    // per-time tightness of the composed bound
    let series: Vec<(f64, f64)> = t_grid
        .values(0)
        .iter()
        .map(|&t| {
            let slice: Vec<Row> = conc0.iter().filter(|r| r.t == t).copied().collect();
            (t, rows_max_ratio(&slice, c_conc))
        })
        .collect();
    Ok(FitReport::new(
        BoundSpec {
            name: format!("offdiag-composition-{}-j{j}", manifold_slug(man)),
            form: "mixed-norm hypotheses and composed (1,inf) bound of the form \
                   C e^{Ct} volfac e^{-rho^2/(Ct)}, conclusion on rho(x,z) >= sqrt(t)"
                .into(),
            grid: format!(
                "t {}; {n_centers} centers, quad band {quad_band}, seed {seed}",
                t_grid.describe()
            ),
        },
        constants,
        max_ratio,
        drift,
        ("t".into(), "composed-bound tightness".into()),
        series,
        vec![
            man.description(),
            format!(
                "{} hypothesis rows, {} composed rows at the base level",
                hyp0.len(),
                conc0.len()
            ),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn caps() -> (RegionSpec, RegionSpec) {
        (
            RegionSpec::new(vec![0.4, 1.0], 0.35).unwrap(),
            RegionSpec::new(vec![std::f64::consts::PI - 0.4, 1.0], 0.35).unwrap(),
        )
    }

    #[test]
    fn separated_caps_decay_with_positive_rate() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let (e, f) = caps();
        let ts = ScanGrid::new(0.05, 0.4, 3).unwrap();
        let report = verify_davies_gaffney(&man, 1, &e, &f, &ts, 6).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.constant("c1").unwrap().is_finite());
        assert!(report.constant("c2").unwrap() > 0.0);
        for &(_, rate) in &report.series {
            assert!(rate > 0.0);
        }
    }

    #[test]
    fn coincident_or_touching_regions_are_rejected() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let e = RegionSpec::new(vec![1.0, 1.0], 0.4).unwrap();
        let ts = ScanGrid::new(0.05, 0.4, 3).unwrap();
        let same = verify_davies_gaffney(&man, 0, &e, &e, &ts, 5);
        assert!(matches!(same, Err(Error::Precondition(_))));
        let overlap = RegionSpec::new(vec![1.5, 1.0], 0.4).unwrap();
        assert!(verify_davies_gaffney(&man, 0, &e, &overlap, &ts, 5).is_err());
    }

    #[test]
    fn empty_masks_are_reported_as_a_precondition() {
        let man = ModelManifold::flat_torus(vec![TAU, TAU]).unwrap();
        let e = RegionSpec::new(vec![0.0, 0.0], 0.05).unwrap();
        let f = RegionSpec::new(vec![3.0, 3.0], 0.05).unwrap();
        let ts = ScanGrid::new(0.05, 0.2, 2).unwrap();
        let err = verify_davies_gaffney(&man, 0, &e, &f, &ts, 4).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err:?}");
    }

    #[test]
    fn flat_rate_sits_near_the_gaussian_quarter() {
        let man = ModelManifold::flat_torus(vec![TAU, TAU]).unwrap();
        let e = RegionSpec::new(vec![0.0, 0.0], 0.5).unwrap();
        let f = RegionSpec::new(vec![std::f64::consts::PI, std::f64::consts::PI], 0.5)
            .unwrap();
        let ts = ScanGrid::new(0.05, 0.2, 3).unwrap();
        let report = verify_davies_gaffney(&man, 0, &e, &f, &ts, 5).unwrap();
        assert!(report.pass, "{report:?}");
        let c2 = report.constant("c2").unwrap();
        assert!((0.15..0.35).contains(&c2), "c2 = {c2}");
    }

    #[test]
    fn composition_constant_covers_flat_data() {
        let man = ModelManifold::flat_torus(vec![TAU, TAU]).unwrap();
        let ts = ScanGrid::new(0.25, 1.0, 3).unwrap();
        let report = verify_offdiag_composition(&man, 0, &ts, 3, 6, 77).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.constant("C_hyp").unwrap().is_finite());
        assert!(report.constant("C_conc").unwrap().is_finite());
    }

    #[test]
    fn all_pairs_too_close_is_a_precondition_failure() {
        // on a unit-cell torus every distance is below sqrt(t) = 1
        let man = ModelManifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let ts = ScanGrid::new(1.0, 1.0, 1).unwrap();
        let err = verify_offdiag_composition(&man, 0, &ts, 2, 4, 3).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err:?}");
    }

    #[test]
    fn sphere_form_composition_fits() {
        let man = ModelManifold::sphere2(1.0).unwrap();
        let ts = ScanGrid::new(0.3, 0.5, 2).unwrap();
        let report = verify_offdiag_composition(&man, 1, &ts, 2, 5, 13).unwrap();
        assert!(report.pass, "{report:?}");
    }
}
