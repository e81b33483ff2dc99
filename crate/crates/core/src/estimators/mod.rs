//! Monte Carlo estimators built on the developed paths: the probabilistic
//! representation of the form semigroup `e^{-T L_j}`, the global and
//! localized representations of its covariant derivative, and the empirical
//! sup-gradient tables consumed by the bound-fitting harness.
//!
//! Every estimator is a pure function of its inputs and a 64-bit seed: path
//! `i` draws from the dedicated stream `(seed, i)` and the sample reduction
//! is a fixed-shape pairwise tree, so results are bit-identical no matter
//! how many worker threads participate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CouplingVariant, ManifoldKind, ModelManifold};
use crate::linalg::{self, binom};
use crate::spectral::{apply_multiplier, FormField};
use crate::stochastic::{
    bismut_integrals, bismut_integrals_stopped, control_exit_adapted, control_linear,
    damped_transports, develop_path, horizon_to_semigroup, semigroup_to_horizon, DevelopedPath,
    PathConfig, StepScheme,
};

/// Discretization knobs shared by all estimators. `n_steps: None` picks the
/// default policy (about 500 steps per unit of path time, floored at 256).
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub n_steps: Option<usize>,
    pub scheme: StepScheme,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            n_steps: None,
            scheme: StepScheme::GeodesicStep,
        }
    }
}

fn default_steps(horizon: f64) -> usize {
    ((512.0 * horizon).ceil() as usize).max(256)
}

impl EstimatorConfig {
    fn path_config(&self, horizon: f64, seed: u64) -> Result<PathConfig> {
        let steps = self.n_steps.unwrap_or_else(|| default_steps(horizon));
        PathConfig::new(horizon, steps, seed, self.scheme)
    }
}

/// A Monte Carlo estimate with componentwise standard errors.
#[derive(Debug, Clone)]
pub struct MCEstimate {
    pub value: DVector<f64>,
    pub std_error: DVector<f64>,
    /// paths that contributed samples
    pub n_paths: usize,
    /// paths rejected (left the chart, or produced non-finite samples)
    pub n_rejected: usize,
    pub seed: u64,
    /// set when more than 1% of the requested paths were rejected
    pub flagged: bool,
}

impl MCEstimate {
    /// The single component of a scalar estimate.
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }

    /// Conservative overall error bar: the norm of the std-error vector.
    pub fn combined_std_error(&self) -> f64 {
        self.std_error.norm()
    }
}

fn assemble(results: Vec<Option<DVector<f64>>>, requested: usize, seed: u64) -> Result<MCEstimate> {
    let samples: Vec<DVector<f64>> = results.into_iter().flatten().collect();
    let n_used = samples.len();
    let n_rejected = requested - n_used;
    if n_used < 2 {
        return Err(Error::Precondition(format!(
            "only {n_used} of {requested} paths produced samples"
        )));
    }
    let sums = linalg::pairwise_sum_vectors(&samples);
    let nf = n_used as f64;
    let value = &sums / nf;
    // two-pass variance: the centered squares avoid the cancellation that
    // would wash out genuinely tiny spreads
    let centered: Vec<DVector<f64>> = samples
        .iter()
        .map(|s| {
            let d = s - &value;
            d.component_mul(&d)
        })
        .collect();
    let sq = linalg::pairwise_sum_vectors(&centered);
    let std_error = DVector::from_fn(sums.len(), |i, _| (sq[i] / (nf - 1.0) / nf).sqrt());
    Ok(MCEstimate {
        value,
        std_error,
        n_paths: n_used,
        n_rejected,
        seed,
        flagged: n_rejected * 100 > requested,
    })
}

/// Shared validation; returns the form degree.
fn check_inputs(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    n_paths: usize,
) -> Result<usize> {
    if t_semigroup <= 0.0 || !t_semigroup.is_finite() {
        return Err(Error::InvalidInput(format!(
            "semigroup time must be positive, got {t_semigroup}"
        )));
    }
    if n_paths < 2 {
        return Err(Error::InvalidInput(
            "at least two paths are needed for an error bar".into(),
        ));
    }
    if alpha.manifold().kind() != man.kind() {
        return Err(Error::InvalidInput(
            "the field lives on a different manifold".into(),
        ));
    }
    if !man.contains(x) {
        return Err(Error::OutsideChart(format!("{x:?}")));
    }
    let j = alpha.degree();
    if !alpha.is_pure() || alpha.components_len() != binom(man.dimension(), j) {
        return Err(Error::InvalidInput(
            "estimators take plain degree-j fields, not stacked derived fields".into(),
        ));
    }
    if !alpha.sup_norm().is_finite() {
        return Err(Error::Precondition("the field is not bounded".into()));
    }
    Ok(j)
}

/// Pull a form at the path's position `k` back to the start fiber through
/// the inverse transport realized by the frame.
fn pull_back(path: &DevelopedPath, j: usize, k: usize, comps: &DVector<f64>) -> DVector<f64> {
    linalg::compound_matrix(&path.frames[k], j).transpose() * comps
}

/// Probabilistic semigroup evaluation: the sample mean of the damped,
/// transport-pulled field at the path end, over `n_paths` independent paths.
pub fn feynman_kac(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MCEstimate> {
    feynman_kac_with(man, alpha, x, t_semigroup, n_paths, seed, &EstimatorConfig::default())
}

pub fn feynman_kac_with(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    n_paths: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<MCEstimate> {
    let j = check_inputs(man, alpha, x, t_semigroup, n_paths)?;
    let horizon = semigroup_to_horizon(t_semigroup);
    let pc = cfg.path_config(horizon, seed)?;

    // constant isotropic potential: the damping over the whole horizon is a
    // single exponential, identical for every path
    let fixed_damping = if man.parallel_curvature() {
        let data = man.weitzenboeck_at(&man.base_point(), j, CouplingVariant::Commutation)?;
        Some(linalg::matrix_exp(&(-0.5 * horizon * &data.v)))
    } else {
        None
    };

    let results: Vec<Option<DVector<f64>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<DVector<f64>>> {
            let path = develop_path(man, x, &pc, idx)?;
            if path.truncated {
                return Ok(None);
            }
            let n = path.n_steps();
            let pulled = pull_back(&path, j, n, &alpha.value_at(&path.points[n]));
            let sample = match &fixed_damping {
                Some(q) => q * pulled,
                None => damped_transports(man, &path, j)?.q(n) * pulled,
            };
            Ok(sample.iter().all(|v| v.is_finite()).then_some(sample))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(results, n_paths, seed)
}

fn check_control_vector(man: &ModelManifold, j: usize, xi: &DVector<f64>) -> Result<()> {
    let want = man.dimension() * binom(man.dimension(), j);
    if xi.len() != want {
        return Err(Error::InvalidInput(format!(
            "direction vector has {} components, expected {want}",
            xi.len()
        )));
    }
    Ok(())
}

/// Derivative of the semigroup in the mixed direction `xi`, by the
/// whole-horizon probabilistic representation with the linear ramp control.
pub fn bismut_global(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    xi: &DVector<f64>,
    n_paths: usize,
    seed: u64,
) -> Result<MCEstimate> {
    bismut_global_with(man, alpha, x, t_semigroup, xi, n_paths, seed, &EstimatorConfig::default())
}

#[allow(clippy::too_many_arguments)]
pub fn bismut_global_with(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    xi: &DVector<f64>,
    n_paths: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<MCEstimate> {
    if matches!(man.kind(), ManifoldKind::HyperbolicPatch { .. }) {
        return Err(Error::UnsupportedManifold(
            "the whole-horizon derivative representation needs uniform curvature bounds; \
             use the localized estimator on a bounded patch"
                .into(),
        ));
    }
    let j = check_inputs(man, alpha, x, t_semigroup, n_paths)?;
    check_control_vector(man, j, xi)?;
    let horizon = semigroup_to_horizon(t_semigroup);
    let pc = cfg.path_config(horizon, seed)?;

    let results: Vec<Option<DVector<f64>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<DVector<f64>>> {
            let path = develop_path(man, x, &pc, idx)?;
            if path.truncated {
                return Ok(None);
            }
            let tr = damped_transports(man, &path, j)?;
            let ctrl = control_linear(&path, xi);
            let (ito, drift) = bismut_integrals(man, &path, &tr, &ctrl)?;
            let n = path.n_steps();
            let fk = tr.q(n) * pull_back(&path, j, n, &alpha.value_at(&path.points[n]));
            let s = -fk.dot(&(ito + drift));
            Ok(s.is_finite().then(|| DVector::from_element(1, s)))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(results, n_paths, seed)
}

/// The inner semigroup factor of the localized formula, via the field's own
/// eigenbasis. Parallel fields are semigroup-fixed; everything else needs
/// spectral coefficients.
fn inner_value(alpha: &FormField, t_remaining: f64, x: &[f64]) -> Result<DVector<f64>> {
    if t_remaining <= 0.0 {
        return Ok(alpha.value_at(x));
    }
    if let (Some(basis), Some(coeffs)) = (alpha.basis(), alpha.coefficients()) {
        let evolved = apply_multiplier(basis, |lam| (-t_remaining * lam).exp(), coeffs)?;
        return Ok(evolved.value_at(x));
    }
    if alpha.band_limit() == Some(0) {
        // parallel field: every semigroup fixes it
        return Ok(alpha.value_at(x));
    }
    Err(Error::UnsupportedManifold(
        "the localized derivative formula needs an eigenbasis for the inner semigroup factor"
            .into(),
    ))
}

/// Derivative of the semigroup via the localized representation: paths are
/// stopped at the first exit from the radius-`r` ball, the control is the
/// exit-adapted ramp, and the semigroup over the unexpired time is evaluated
/// by the exact eigenbasis route at the stopped point.
#[allow(clippy::too_many_arguments)]
pub fn bismut_local(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    r: f64,
    xi: &DVector<f64>,
    n_paths: usize,
    seed: u64,
) -> Result<MCEstimate> {
    bismut_local_with(
        man,
        alpha,
        x,
        t_semigroup,
        r,
        xi,
        n_paths,
        seed,
        &EstimatorConfig::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn bismut_local_with(
    man: &ModelManifold,
    alpha: &FormField,
    x: &[f64],
    t_semigroup: f64,
    r: f64,
    xi: &DVector<f64>,
    n_paths: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<MCEstimate> {
    let j = check_inputs(man, alpha, x, t_semigroup, n_paths)?;
    check_control_vector(man, j, xi)?;
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    // fail fast when no oracle can serve the inner factor
    inner_value(alpha, t_semigroup, x)?;
    let horizon = semigroup_to_horizon(t_semigroup);
    let pc = cfg.path_config(horizon, seed)?;

    let results: Vec<Option<DVector<f64>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<DVector<f64>>> {
            let path = develop_path(man, x, &pc, idx)?;
            let kappa = match path.exit_index(r) {
                Some(k) => k,
                // left the chart while still inside the ball: no stopped
                // sample can be formed
                None if path.truncated => return Ok(None),
                None => path.n_steps(),
            };
            let tr = damped_transports(man, &path, j)?;
            let ctrl = control_exit_adapted(&path, r, xi)?;
            let (ito, drift) = bismut_integrals_stopped(man, &path, &tr, &ctrl, kappa)?;
            let remaining = horizon_to_semigroup(horizon - path.times[kappa]);
            let inner = inner_value(alpha, remaining, &path.points[kappa])?;
            let fk = tr.q(kappa) * pull_back(&path, j, kappa, &inner);
            let s = -fk.dot(&(ito + drift));
            Ok(s.is_finite().then(|| DVector::from_element(1, s)))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(results, n_paths, seed)
}

/// Contract a covariant derivative (rows = direction, columns = form
/// component) against a mixed direction vector in the slot-major layout.
pub fn pair_mixed(gradient: &DMatrix<f64>, xi: &DVector<f64>) -> Result<f64> {
    let (m, d) = gradient.shape();
    if xi.len() != m * d {
        return Err(Error::InvalidInput(format!(
            "direction vector has {} components, expected {}",
            xi.len(),
            m * d
        )));
    }
    let mut acc = 0.0;
    for a in 0..m {
        for p in 0..d {
            acc += gradient[(a, p)] * xi[a * d + p];
        }
    }
    Ok(acc)
}

/// Empirical table of `sup_x |grad e^{-T L_j} alpha(x)| / sup|alpha|` over a
/// time grid, maximized over the field family and the sample points. The
/// harness fits the short-time blowup constant from these rows.
pub fn sup_gradient_bound(
    man: &ModelManifold,
    j: usize,
    t_grid: &[f64],
    points: &[Vec<f64>],
    fields: &[FormField],
) -> Result<Vec<(f64, f64)>> {
    if t_grid.is_empty() || points.is_empty() || fields.is_empty() {
        return Err(Error::InvalidInput(
            "the gradient table needs times, points, and fields".into(),
        ));
    }
    for &t in t_grid {
        if t <= 0.0 || !t.is_finite() {
            return Err(Error::InvalidInput(format!("bad grid time {t}")));
        }
    }
    for x in points {
        if !man.contains(x) {
            return Err(Error::OutsideChart(format!("{x:?}")));
        }
    }
    for f in fields {
        if f.degree() != j
            || !f.is_pure()
            || f.basis().is_none()
            || f.manifold().kind() != man.kind()
        {
            return Err(Error::InvalidInput(
                "gradient tables need spectral degree-j fields on the given manifold".into(),
            ));
        }
        if f.sup_norm() <= 0.0 {
            return Err(Error::InvalidInput("zero field in the family".into()));
        }
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut ratio = 0.0f64;
        for f in fields {
            let basis = f.basis().expect("validated spectral");
            let coeffs = f.coefficients().expect("validated spectral");
            let evolved = apply_multiplier(basis, |lam| (-t * lam).exp(), coeffs)?;
            let scale = f.sup_norm();
            for x in points {
                ratio = ratio.max(evolved.gradient_at(x)?.norm() / scale);
            }
        }
        rows.push((t, ratio));
    }
    Ok(rows)
}
