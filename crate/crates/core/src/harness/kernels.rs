//! Pointwise kernel envelopes: the heat kernel, its covariant derivative,
//! and its exterior (co)derivative against volume-normalized Gaussian
//! envelopes with fitted constants.

use super::*;
use crate::geometry::operator_norm;
use crate::spectral::kernels::{grad_kernel_tail_bound, HeatKernel, KERNEL_TAIL_TOL};
use rayon::prelude::*;

/// Evaluate the kernel functional on point pairs and attach the envelope
/// data. A symmetric functional is evaluated once per unordered pair and
/// reused with the base-point volume of both endpoints; otherwise both
/// orientations are evaluated, each normalized at its own first variable.
fn gaussian_samples(
    man: &ModelManifold,
    ts: &[f64],
    pts: &[Vec<f64>],
    symmetric: bool,
    eval: impl Fn(f64, &[f64], &[f64]) -> Result<f64> + Sync,
) -> Result<Vec<GaussSample>> {
    let mut jobs = Vec::new();
    for &t in ts {
        for i in 0..pts.len() {
            for k in i..pts.len() {
                jobs.push((t, i, k));
            }
        }
    }
    let rows: Vec<Vec<GaussSample>> = jobs
        .par_iter()
        .map(|&(t, i, k)| -> Result<Vec<GaussSample>> {
            let dist2 = man.distance(&pts[i], &pts[k]).powi(2);
            let rt = t.sqrt();
            let value = eval(t, &pts[i], &pts[k])?;
            let mut out = vec![GaussSample {
                value,
                t,
                dist2,
                vol: man.ball_volume(&pts[i], rt),
            }];
            if k != i {
                let back = if symmetric {
                    value
                } else {
                    eval(t, &pts[k], &pts[i])?
                };
                out.push(GaussSample {
                    value: back,
                    t,
                    dist2,
                    vol: man.ball_volume(&pts[k], rt),
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn envelope_report(
    t_grid: &ScanGrid,
    n_points: usize,
    power: f64,
    spec: BoundSpec,
    notes: Vec<String>,
    run_samples: impl Fn(u32) -> Result<Vec<GaussSample>>,
) -> Result<FitReport> {
    if n_points == 0 {
        return Err(Error::InvalidInput("need at least one sample point".into()));
    }
    let fit = |level: u32| -> Result<(Vec<(String, f64)>, f64, Vec<(f64, f64)>)> {
        let samples = run_samples(level)?;
        let (c, d) = fit_gaussian(&samples, power);
        let ratio = gaussian_max_ratio(&samples, power, c, d);
        let series = rate_series(&samples, power, c, &t_grid.values(level));
        Ok((
            vec![("C".to_string(), c), ("D".to_string(), d)],
            ratio,
            series,
        ))
    };
    let (constants, max_ratio, series) = fit(0)?;
    let (fine, _, _) = fit(1)?;
    let drift = drift_between(&constants, &fine);
    Ok(FitReport::new(
        spec,
        constants,
        max_ratio,
        drift,
        ("t".into(), "admissible Gaussian rate".into()),
        series,
        notes,
    ))
}

/// Fit (C, D) in |K_t(x,y)| <= C e^{Ct} vol(x,sqrt(t))^{-1} e^{-D rho^2/t}
/// for the degree-j heat kernel, measured in the fiber operator norm.
pub fn verify_ue(
    man: &ModelManifold,
    j: usize,
    t_grid: &ScanGrid,
    n_points: usize,
    seed: u64,
) -> Result<FitReport> {
    let kernel = HeatKernel::new(man, j)?;
    let spec = BoundSpec {
        name: format!("heat-kernel-envelope-{}-j{j}", manifold_slug(man)),
        form: "|K_t(x,y)| <= C e^{Ct} vol(x,sqrt(t))^{-1} e^{-D rho^2/t}".into(),
        grid: format!("t {}; {n_points} points, seed {seed}", t_grid.describe()),
    };
    envelope_report(t_grid, n_points, 0.0, spec, vec![man.description()], |level| {
        gaussian_samples(
            man,
            &t_grid.values(level),
            &sample_points(man, n_points << level, seed),
            true,
            |t, x, y| Ok(operator_norm(&kernel.eval(t, x, y)?)),
        )
    })
}

/// Fit (C, D) in |grad_x K_t(x,y)| <= C e^{Ct} vol(x,sqrt(t))^{-1} t^{-1/2}
/// e^{-D rho^2/t}; the derivative acts on the first variable.
pub fn verify_grad_ue(
    man: &ModelManifold,
    j: usize,
    t_grid: &ScanGrid,
    n_points: usize,
    seed: u64,
) -> Result<FitReport> {
    let kernel = HeatKernel::new(man, j)?;
    let spec = BoundSpec {
        name: format!("grad-kernel-envelope-{}-j{j}", manifold_slug(man)),
        form: "|grad K_t(x,y)| <= C e^{Ct} vol(x,sqrt(t))^{-1} t^{-1/2} e^{-D rho^2/t}".into(),
        grid: format!("t {}; {n_points} points, seed {seed}", t_grid.describe()),
    };
    envelope_report(t_grid, n_points, 0.5, spec, vec![man.description()], |level| {
        gaussian_samples(
            man,
            &t_grid.values(level),
            &sample_points(man, n_points << level, seed),
            false,
            |t, x, y| Ok(operator_norm(&kernel.eval_grad(t, x, y)?)),
        )
    })
}

/// Stacked basis data at one point: entry columns of the exterior
/// derivative, the coderivative, and the value.
struct PointStack {
    d: DMatrix<f64>,
    dd: DMatrix<f64>,
    v: DMatrix<f64>,
}

/// Fit (C, D) in the common envelope C e^{Ct} vol^{-1} t^{-1/2} e^{-D
/// rho^2/t} over both the d-kernel and the d*-kernel of degree j, built as
/// truncated eigensums; the derivative acts on the first variable. Errors
/// when the band does not resolve first-order kernels at the smallest time.
pub fn verify_d_ue(
    man: &ModelManifold,
    j: usize,
    band: usize,
    t_grid: &ScanGrid,
    n_points: usize,
    seed: u64,
) -> Result<FitReport> {
    let basis = SpectralBasis::for_manifold(man, band, j)?;
    let tail = grad_kernel_tail_bound(&basis, t_grid.lo());
    if tail > KERNEL_TAIL_TOL {
        return Err(Error::Precondition(format!(
            "band {band} does not resolve first-order kernels at t = {}: tail {tail:.3e}; \
             raise the band or the time floor",
            t_grid.lo()
        )));
    }
    let ne = basis.len();
    let m = man.dimension();
    let dim_d = if j < m { crate::linalg::binom(m, j + 1) } else { 0 };
    let dim_dd = if j > 0 { crate::linalg::binom(m, j - 1) } else { 0 };
    let dim = basis.component_dim();
    let stack = |x: &Vec<f64>| {
        let mut s = PointStack {
            d: DMatrix::zeros(dim_d, ne),
            dd: DMatrix::zeros(dim_dd, ne),
            v: DMatrix::zeros(dim, ne),
        };
        for i in 0..ne {
            if dim_d > 0 {
                s.d.set_column(i, &basis.entry_d(i, x));
            }
            if dim_dd > 0 {
                s.dd.set_column(i, &basis.entry_ddagger(i, x));
            }
            s.v.set_column(i, &basis.entry_value(i, x));
        }
        s
    };
    let spec = BoundSpec {
        name: format!(
            "exterior-derivative-kernel-envelope-{}-j{j}",
            manifold_slug(man)
        ),
        form: "|d K_t(x,y)|, |d* K_t(x,y)| <= C e^{Ct} vol(x,sqrt(t))^{-1} t^{-1/2} e^{-D rho^2/t}"
            .into(),
        grid: format!(
            "t {}; {n_points} points, seed {seed}; band {band}",
            t_grid.describe()
        ),
    };
    let notes = vec![
        man.description(),
        format!("first-order spectral tail at the time floor: {tail:.2e}"),
    ];
    envelope_report(t_grid, n_points, 0.5, spec, notes, |level| {
        let pts = sample_points(man, n_points << level, seed);
        let stacks: Vec<PointStack> = pts.par_iter().map(stack).collect();
        let ts = t_grid.values(level);
        let mut samples = Vec::new();
        for &t in &ts {
            let weights: Vec<f64> = (0..ne).map(|i| (-t * basis.eigenvalue(i)).exp()).collect();
            // damped transposed value stacks, shared across first variables
            let vts: Vec<DMatrix<f64>> = stacks
                .par_iter()
                .map(|s| {
                    let mut vt = s.v.transpose();
                    for (i, mut row) in vt.row_iter_mut().enumerate() {
                        row *= weights[i];
                    }
                    vt
                })
                .collect();
            let jobs: Vec<(usize, usize)> = (0..pts.len())
                .flat_map(|a| (0..pts.len()).map(move |b| (a, b)))
                .collect();
            let rows: Vec<Vec<GaussSample>> = jobs
                .par_iter()
                .map(|&(a, b)| {
                    let dist2 = man.distance(&pts[a], &pts[b]).powi(2);
                    let vol = man.ball_volume(&pts[a], t.sqrt());
                    let mut out = Vec::new();
                    if dim_d > 0 {
                        let value = operator_norm(&(&stacks[a].d * &vts[b]));
                        out.push(GaussSample { value, t, dist2, vol });
                    }
                    if dim_dd > 0 {
                        let value = operator_norm(&(&stacks[a].dd * &vts[b]));
                        out.push(GaussSample { value, t, dist2, vol });
                    }
                    out
                })
                .collect();
            samples.extend(rows.into_iter().flatten());
        }
        Ok(samples)
    })
}
