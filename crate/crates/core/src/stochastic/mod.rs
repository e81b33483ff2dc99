//! Brownian motion on the model spaces by stochastic development in the
//! orthonormal frame bundle. A path carries its chart points, the transported
//! frame (realizing parallel transport), and the anti-development increments;
//! on top of it sit the damped parallel transports `Q` (form degree) and
//! `Qu` (mixed degree), the admissible control processes, and the two
//! integral terms feeding the derivative estimators.
//!
//! Frame convention: `frames[k]` is the matrix of the transported frame in
//! the *chart orthonormal frame* at `points[k]` — an orthogonal matrix with
//! `frames[0] = I`. All fiber components (forms, potentials, controls) are
//! taken in chart orthonormal frames, where the metric identification of
//! tangent and cotangent slots is the identity.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::embed;
use crate::geometry::{CouplingVariant, ManifoldKind, ModelManifold};
use crate::linalg;

/// Semigroup time to Brownian path horizon: the walk has generator half the
/// Laplacian, so evolving a semigroup time `T` takes path time `2T`. Every
/// factor of two between the two clocks goes through here.
pub fn semigroup_to_horizon(t_semigroup: f64) -> f64 {
    2.0 * t_semigroup
}

/// Inverse clock conversion, see [`semigroup_to_horizon`].
pub fn horizon_to_semigroup(horizon: f64) -> f64 {
    0.5 * horizon
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepScheme {
    /// Exact geodesic stepping through the ambient model with closed-form
    /// parallel transport; no chart singularities.
    GeodesicStep,
    /// Stratonovich midpoint (Heun) integration of the chart SDE with
    /// Christoffel transport and per-step re-orthonormalization.
    EulerHeun,
}

impl StepScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "geodesic_step" => Ok(StepScheme::GeodesicStep),
            "euler_heun" => Ok(StepScheme::EulerHeun),
            other => Err(Error::Parse(format!("unknown step scheme '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepScheme::GeodesicStep => "geodesic_step",
            StepScheme::EulerHeun => "euler_heun",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathConfig {
    pub horizon: f64,
    pub n_steps: usize,
    pub master_seed: u64,
    pub scheme: StepScheme,
}

impl PathConfig {
    pub fn new(horizon: f64, n_steps: usize, master_seed: u64, scheme: StepScheme) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "path horizon must be positive, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidInput("n_steps must be positive".into()));
        }
        Ok(PathConfig {
            horizon,
            n_steps,
            master_seed,
            scheme,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }
}

/// A developed Brownian path: chart points, transported frames (chart
/// orthonormal components, orthogonal matrices), and the i.i.d. Gaussian
/// anti-development increments that drove it.
#[derive(Debug, Clone)]
pub struct DevelopedPath {
    man: ModelManifold,
    horizon: f64,
    step: f64,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub frames: Vec<DMatrix<f64>>,
    pub increments: Vec<DVector<f64>>,
    /// true when the walk left the chart domain and the path was cut short
    pub truncated: bool,
}

impl DevelopedPath {
    pub fn manifold(&self) -> &ModelManifold {
        &self.man
    }

    /// Number of completed steps (points has one more entry).
    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// The configured horizon; a truncated path ends before it.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// First grid index at distance >= r from the start (no sub-step
    /// interpolation; the bias of grid-crossing detection is measured by
    /// step-halving, not assumed away).
    pub fn exit_index(&self, r: f64) -> Option<usize> {
        let x0 = &self.points[0];
        self.points
            .iter()
            .position(|x| self.man.distance(x0, x) >= r)
    }

    /// Anti-development at the final time: the plain sum of increments.
    pub fn anti_development(&self) -> DVector<f64> {
        let m = self.man.dimension();
        let mut acc = DVector::zeros(m);
        for dw in &self.increments {
            acc += dw;
        }
        acc
    }

    /// Largest deviation of any frame from orthogonality, over the path.
    pub fn frame_drift(&self) -> f64 {
        let m = self.man.dimension();
        let eye = DMatrix::<f64>::identity(m, m);
        self.frames
            .iter()
            .map(|f| (f.transpose() * f - &eye).amax())
            .fold(0.0, f64::max)
    }

    /// Columnar text dump for debugging: one row per step with the time, the
    /// chart point, the frame (row-major), and the driving increment.
    pub fn dump_columns(&self) -> String {
        let mut out = String::new();
        out.push_str("# s  x..  frame(row-major)..  dW..\n");
        for k in 0..self.points.len() {
            out.push_str(&format!("{:.9}", self.times[k]));
            for v in &self.points[k] {
                out.push_str(&format!(" {v:.12}"));
            }
            for r in 0..self.frames[k].nrows() {
                for c in 0..self.frames[k].ncols() {
                    out.push_str(&format!(" {:.12}", self.frames[k][(r, c)]));
                }
            }
            if k < self.increments.len() {
                for v in self.increments[k].iter() {
                    out.push_str(&format!(" {v:.12}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Develop one Brownian path started at `x0`. The increments come from the
/// ChaCha stream `(cfg.master_seed, path_index)`, so the path is bit-identical
/// for a given pair regardless of execution order.
pub fn develop_path(
    man: &ModelManifold,
    x0: &[f64],
    cfg: &PathConfig,
    path_index: u64,
) -> Result<DevelopedPath> {
    if !man.contains(x0) {
        return Err(Error::OutsideChart(format!("{x0:?}")));
    }
    let m = man.dimension();
    let h = cfg.step_size();
    let sqrt_h = h.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(path_index);

    let mut times = Vec::with_capacity(cfg.n_steps + 1);
    let mut points = Vec::with_capacity(cfg.n_steps + 1);
    let mut frames = Vec::with_capacity(cfg.n_steps + 1);
    let mut increments = Vec::with_capacity(cfg.n_steps);
    times.push(0.0);
    points.push(man.canonicalize(x0));
    frames.push(DMatrix::identity(m, m));
    let mut truncated = false;

    for k in 0..cfg.n_steps {
        let dw = DVector::from_fn(m, |_, _| {
            sqrt_h * rng.sample::<f64, _>(StandardNormal)
        });
        let stepped = match cfg.scheme {
            StepScheme::GeodesicStep => {
                geodesic_step(man, points.last().unwrap(), frames.last().unwrap(), &dw)
            }
            StepScheme::EulerHeun => {
                heun_step(man, points.last().unwrap(), frames.last().unwrap(), &dw)
            }
        };
        match stepped {
            Some((x_next, r_next)) => {
                increments.push(dw);
                times.push((k + 1) as f64 * h);
                points.push(x_next);
                frames.push(r_next);
            }
            None => {
                truncated = true;
                break;
            }
        }
    }

    Ok(DevelopedPath {
        man: man.clone(),
        horizon: cfg.horizon,
        step: h,
        times,
        points,
        frames,
        increments,
        truncated,
    })
}

/// One exact geodesic step: move along the geodesic with initial velocity
/// `frame * dw` and transport the frame along it. Returns None when the step
/// leaves the chart domain (hyperbolic patch only).
fn geodesic_step(
    man: &ModelManifold,
    x: &[f64],
    r_frame: &DMatrix<f64>,
    dw: &DVector<f64>,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let m = man.dimension();
    match man.kind() {
        ManifoldKind::FlatTorus { .. } => {
            // chart orthonormal frame == coordinate frame; development is a sum
            let step: Vec<f64> = (0..m)
                .map(|i| x[i] + (0..m).map(|a| r_frame[(i, a)] * dw[a]).sum::<f64>())
                .collect();
            Some((man.canonicalize(&step), r_frame.clone()))
        }
        ManifoldKind::Sphere2 { radius } => {
            let n = embed::sphere_chart_to_unit(x[0], x[1]);
            let (t1, t2) = embed::sphere_frame(x[0], x[1]);
            // ambient realizations of the transported frame vectors
            let mut carry = [Vector3::zeros(), Vector3::zeros()];
            for (a, w) in carry.iter_mut().enumerate() {
                *w = r_frame[(0, a)] * t1 + r_frame[(1, a)] * t2;
            }
            let v_amb = dw[0] * carry[0] + dw[1] * carry[1];
            let len = v_amb.norm();
            let end = if len < 1e-300 {
                n
            } else {
                let dir = v_amb / len;
                embed::sphere_geodesic(&n, &dir, len / radius, &mut carry)
            };
            let (theta, phi) = embed::sphere_unit_to_chart(&end);
            let (e1, e2) = embed::sphere_frame(theta, phi);
            let mut r_next = DMatrix::zeros(2, 2);
            for a in 0..2 {
                r_next[(0, a)] = e1.dot(&carry[a]);
                r_next[(1, a)] = e2.dot(&carry[a]);
            }
            let eye = DMatrix::identity(2, 2);
            linalg::gram_schmidt_metric(&mut r_next, &eye);
            Some((vec![theta, phi], r_next))
        }
        ManifoldKind::HyperbolicPatch { bound } => {
            let p = embed::disk_to_hyperboloid(x);
            let cols = embed::disk_jacobian(x);
            let lam = 2.0 / (1.0 - (x[0] * x[0] + x[1] * x[1]));
            let onf = [cols[0] / lam, cols[1] / lam];
            let mut carry = [Vector3::zeros(), Vector3::zeros()];
            for (a, w) in carry.iter_mut().enumerate() {
                *w = r_frame[(0, a)] * onf[0] + r_frame[(1, a)] * onf[1];
            }
            let v_amb = dw[0] * carry[0] + dw[1] * carry[1];
            let len2 = embed::mink(&v_amb, &v_amb);
            let end = if len2 < 1e-300 {
                p
            } else {
                let len = len2.sqrt();
                let dir = v_amb / len;
                embed::hyperbolic_geodesic(&p, &dir, len, &mut carry)
            };
            let u = embed::hyperboloid_to_disk(&end);
            if u[0] * u[0] + u[1] * u[1] >= bound * bound {
                return None;
            }
            let cols_end = embed::disk_jacobian(&u);
            let lam_end = 2.0 / (1.0 - (u[0] * u[0] + u[1] * u[1]));
            let onf_end = [cols_end[0] / lam_end, cols_end[1] / lam_end];
            let mut r_next = DMatrix::zeros(2, 2);
            for a in 0..2 {
                for b in 0..2 {
                    r_next[(b, a)] = embed::mink(&onf_end[b], &carry[a]);
                }
            }
            let eye = DMatrix::identity(2, 2);
            linalg::gram_schmidt_metric(&mut r_next, &eye);
            Some((u.to_vec(), r_next))
        }
    }
}

/// One Stratonovich-midpoint step of the chart development SDE
/// `dx = F dW`, `dF = -Gamma(dx) F`, followed by re-orthonormalization.
/// Near the sphere's chart poles (where the Christoffel symbols blow up) the
/// step falls back to the singularity-free geodesic stepper.
fn heun_step(
    man: &ModelManifold,
    x: &[f64],
    r_frame: &DMatrix<f64>,
    dw: &DVector<f64>,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let m = man.dimension();
    if let ManifoldKind::Sphere2 { .. } = man.kind() {
        if x[0].sin().abs() < 1e-3 {
            return geodesic_step(man, x, r_frame, dw);
        }
    }
    // coordinate components of the transported frame
    let onf = man.orthonormal_frame(x);
    let f0 = &onf * r_frame;

    let drift = |x: &[f64], f: &DMatrix<f64>| -> Option<(DVector<f64>, DMatrix<f64>)> {
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let dx = f * dw;
        let gamma = man.christoffel(x);
        let mut df = DMatrix::zeros(m, m);
        // dF^i_a = -Gamma^i_{jk} dx^j F^k_a
        for (i, g) in gamma.iter().enumerate() {
            let w = g * &dx;
            for a in 0..m {
                let s: f64 = (0..m).map(|k| w[k] * f[(k, a)]).sum();
                df[(i, a)] -= s;
            }
        }
        Some((dx, df))
    };

    let (dx1, df1) = drift(x, &f0)?;
    let x_pred: Vec<f64> = (0..m).map(|i| x[i] + dx1[i]).collect();
    if let ManifoldKind::HyperbolicPatch { .. } = man.kind() {
        if !man.contains(&x_pred) {
            return None;
        }
    }
    if let ManifoldKind::Sphere2 { .. } = man.kind() {
        // predictor landed too close to a chart pole for the corrector stage
        if x_pred[0].sin().abs() < 1e-6 {
            return geodesic_step(man, x, r_frame, dw);
        }
    }
    let f_pred = &f0 + &df1;
    let (dx2, df2) = drift(&x_pred, &f_pred)?;

    let x_raw: Vec<f64> = (0..m).map(|i| x[i] + 0.5 * (dx1[i] + dx2[i])).collect();
    let mut f_raw = f0 + 0.5 * (df1 + df2);
    match man.kind() {
        ManifoldKind::FlatTorus { .. } => {
            let x_next = man.canonicalize(&x_raw);
            // flat: the frame never moves
            Some((x_next, r_frame.clone()))
        }
        ManifoldKind::Sphere2 { radius } => {
            // convert through the ambient picture so that pole wraps in
            // `canonicalize` cannot scramble the chart components
            let (t1, t2) = embed::sphere_frame(x_raw[0], x_raw[1]);
            let s_raw = x_raw[0].sin();
            let mut amb = [Vector3::zeros(), Vector3::zeros()];
            for (a, w) in amb.iter_mut().enumerate() {
                // coordinate basis: d_theta = radius t1, d_phi = radius sin(theta) t2
                *w = f_raw[(0, a)] * radius * t1 + f_raw[(1, a)] * radius * s_raw * t2;
            }
            let x_next = man.canonicalize(&x_raw);
            let (e1, e2) = embed::sphere_frame(x_next[0], x_next[1]);
            let mut r_next = DMatrix::zeros(2, 2);
            for a in 0..2 {
                r_next[(0, a)] = e1.dot(&amb[a]);
                r_next[(1, a)] = e2.dot(&amb[a]);
            }
            let eye = DMatrix::identity(2, 2);
            linalg::gram_schmidt_metric(&mut r_next, &eye);
            Some((x_next, r_next))
        }
        ManifoldKind::HyperbolicPatch { .. } => {
            if !man.contains(&x_raw) {
                return None;
            }
            let g = man.metric(&x_raw);
            linalg::gram_schmidt_metric(&mut f_raw, &g);
            let onf_next = man.orthonormal_frame(&x_raw);
            let r_next = onf_next
                .lu()
                .solve(&f_raw)
                .expect("orthonormal frame is invertible");
            Some((x_raw, r_next))
        }
    }
}

// ---------------------------------------------------------------------------
// damped parallel transports
// ---------------------------------------------------------------------------

/// The damped transports along one path: `q[k]` solves `dQ/ds = -1/2 Q V_j`
/// on form components and `qu[k]` the same with the mixed-degree potential,
/// both by per-step exponential stepping (so the Gronwall bounds hold step by
/// step), together with their inverses.
#[derive(Debug, Clone)]
pub struct DampedTransports {
    degree: usize,
    q: Vec<DMatrix<f64>>,
    q_inv: Vec<DMatrix<f64>>,
    qu: Vec<DMatrix<f64>>,
    qu_inv: Vec<DMatrix<f64>>,
}

impl DampedTransports {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of stored states (path points).
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q(&self, k: usize) -> &DMatrix<f64> {
        &self.q[k]
    }

    pub fn q_inv(&self, k: usize) -> &DMatrix<f64> {
        &self.q_inv[k]
    }

    pub fn qu(&self, k: usize) -> &DMatrix<f64> {
        &self.qu[k]
    }

    pub fn qu_inv(&self, k: usize) -> &DMatrix<f64> {
        &self.qu_inv[k]
    }
}

/// Damped transports with the default (commutation) potential coupling.
pub fn damped_transports(
    man: &ModelManifold,
    path: &DevelopedPath,
    j: usize,
) -> Result<DampedTransports> {
    damped_transports_with(man, path, j, CouplingVariant::Commutation)
}

pub fn damped_transports_with(
    man: &ModelManifold,
    path: &DevelopedPath,
    j: usize,
    variant: CouplingVariant,
) -> Result<DampedTransports> {
    transports_impl(man, path, j, variant, false)
}

fn transports_impl(
    man: &ModelManifold,
    path: &DevelopedPath,
    j: usize,
    variant: CouplingVariant,
    force_moving_frame: bool,
) -> Result<DampedTransports> {
    let m = man.dimension();
    if j > m {
        return Err(Error::DegreeOutOfRange { j, m });
    }
    let d = linalg::binom(m, j);
    let md = m * d;
    let h = path.step_size();
    let n = path.n_steps();

    let mut q = Vec::with_capacity(n + 1);
    let mut q_inv = Vec::with_capacity(n + 1);
    let mut qu = Vec::with_capacity(n + 1);
    let mut qu_inv = Vec::with_capacity(n + 1);
    q.push(DMatrix::identity(d, d));
    q_inv.push(DMatrix::identity(d, d));
    qu.push(DMatrix::identity(md, md));
    qu_inv.push(DMatrix::identity(md, md));

    if man.parallel_curvature() && !force_moving_frame {
        // the potentials are isotropic tensor constructions of a constant
        // curvature tensor: their orthonormal components are point independent
        // and commute with the frame rotations, so one exponential serves
        // every step
        let data = man.weitzenboeck_at(&path.points[0], j, variant)?;
        let step_q = linalg::matrix_exp(&(-0.5 * h * &data.v));
        let step_q_inv = linalg::matrix_exp(&(0.5 * h * &data.v));
        let step_qu = linalg::matrix_exp(&(-0.5 * h * &data.v_under));
        let step_qu_inv = linalg::matrix_exp(&(0.5 * h * &data.v_under));
        for k in 0..n {
            q.push(&q[k] * &step_q);
            q_inv.push(&step_q_inv * &q_inv[k]);
            qu.push(&qu[k] * &step_qu);
            qu_inv.push(&step_qu_inv * &qu_inv[k]);
        }
    } else {
        for k in 0..n {
            let data = man.weitzenboeck_at(&path.points[k], j, variant)?;
            let rot = &path.frames[k];
            let rot_j = linalg::compound_matrix(rot, j);
            let v_mov = rot_j.transpose() * &data.v * &rot_j;
            let mix = mixed_rotation(rot, &rot_j);
            let vu_mov = mix.transpose() * &data.v_under * &mix;
            q.push(&q[k] * linalg::matrix_exp(&(-0.5 * h * &v_mov)));
            q_inv.push(linalg::matrix_exp(&(0.5 * h * &v_mov)) * &q_inv[k]);
            qu.push(&qu[k] * linalg::matrix_exp(&(-0.5 * h * &vu_mov)));
            qu_inv.push(linalg::matrix_exp(&(0.5 * h * &vu_mov)) * &qu_inv[k]);
        }
    }

    Ok(DampedTransports {
        degree: j,
        q,
        q_inv,
        qu,
        qu_inv,
    })
}

/// Induced rotation on mixed components (cotangent slot tensor form slot),
/// cotangent-slot-major: the Kronecker product of the frame rotation with its
/// j-th compound.
pub(crate) fn mixed_rotation(rot: &DMatrix<f64>, rot_j: &DMatrix<f64>) -> DMatrix<f64> {
    let m = rot.nrows();
    let d = rot_j.nrows();
    let mut out = DMatrix::zeros(m * d, m * d);
    for a in 0..m {
        for b in 0..m {
            if rot[(a, b)] == 0.0 {
                continue;
            }
            for p in 0..d {
                for r in 0..d {
                    out[(a * d + p, b * d + r)] = rot[(a, b)] * rot_j[(p, r)];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// admissible controls
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlKind {
    Linear,
    ExitAdapted,
}

/// A discretized admissible control: mixed-degree values at the grid times
/// and the adapted derivative used at the left endpoints of the Ito sums.
#[derive(Debug, Clone)]
pub struct ControlProcess {
    pub kind: ControlKind,
    /// l_k at every grid time (one more entry than steps)
    pub values: Vec<DVector<f64>>,
    /// adapted derivative at the left endpoint of each step
    pub derivs: Vec<DVector<f64>>,
}

impl ControlProcess {
    /// Discrete energy sum(h |l'|^2) of the derivative process.
    pub fn derivative_energy(&self, h: f64) -> f64 {
        self.derivs.iter().map(|d| h * d.norm_squared()).sum()
    }
}

/// The linear ramp control `l(s) = (1 - s/t) xi` used by the global
/// derivative formula.
pub fn control_linear(path: &DevelopedPath, xi: &DVector<f64>) -> ControlProcess {
    let t = path.horizon();
    let values = path
        .times
        .iter()
        .map(|s| xi * (1.0 - s / t))
        .collect::<Vec<_>>();
    let derivs = vec![-xi / t; path.n_steps()];
    ControlProcess {
        kind: ControlKind::Linear,
        values,
        derivs,
    }
}

/// The exit-adapted control: the linear ramp damped by an adapted clamp that
/// decays with the running maximum of the distance from the start and hits
/// zero no later than the exit from the radius-`r` ball. The derivative uses
/// the backward difference of the clamp so it stays adapted.
pub fn control_exit_adapted(
    path: &DevelopedPath,
    r: f64,
    xi: &DVector<f64>,
) -> Result<ControlProcess> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput(format!(
            "exit-adapted control needs r > 0, got {r}"
        )));
    }
    let man = path.manifold();
    let t = path.horizon();
    let h = path.step_size();
    let x0 = &path.points[0];
    let mut running_max = 0.0f64;
    let mut clamps = Vec::with_capacity(path.points.len());
    for x in &path.points {
        running_max = running_max.max(man.distance(x0, x));
        clamps.push((2.0 * (r - running_max) / r).clamp(0.0, 1.0));
    }
    let values: Vec<DVector<f64>> = path
        .times
        .iter()
        .zip(&clamps)
        .map(|(s, c)| xi * ((1.0 - s / t) * c))
        .collect();
    let derivs: Vec<DVector<f64>> = (0..path.n_steps())
        .map(|k| {
            let prev = if k == 0 { clamps[0] } else { clamps[k - 1] };
            let rate = -clamps[k] / t + (1.0 - path.times[k] / t) * (clamps[k] - prev) / h;
            xi * rate
        })
        .collect();
    Ok(ControlProcess {
        kind: ControlKind::ExitAdapted,
        values,
        derivs,
    })
}

// ---------------------------------------------------------------------------
// the two derivative-formula integrals
// ---------------------------------------------------------------------------

/// Contract an m-vector against the cotangent slot of a mixed-component
/// vector (cotangent-slot-major), leaving form components.
fn contract_cotangent(dw: &DVector<f64>, mixed: &DVector<f64>, d: usize) -> DVector<f64> {
    let m = dw.len();
    DVector::from_fn(d, |p, _| {
        (0..m).map(|c| dw[c] * mixed[c * d + p]).sum::<f64>()
    })
}

fn integrals_range(
    path: &DevelopedPath,
    transports: &DampedTransports,
    control: &ControlProcess,
    rho_moving: impl Fn(usize) -> Option<DMatrix<f64>>,
    k_end: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = path.n_steps();
    if control.values.len() != n + 1 || control.derivs.len() != n {
        return Err(Error::Precondition(
            "control length does not match the path".into(),
        ));
    }
    if transports.len() != n + 1 {
        return Err(Error::Precondition(
            "transport length does not match the path".into(),
        ));
    }
    if k_end > n {
        return Err(Error::Precondition(format!(
            "stopping index {k_end} exceeds the {n} path steps"
        )));
    }
    let d = transports.q[0].nrows();
    let h = path.step_size();
    let mut ito = DVector::zeros(d);
    let mut drift = DVector::zeros(d);
    for k in 0..k_end {
        let damped_rate = transports.qu[k].transpose() * &control.derivs[k];
        let contracted = contract_cotangent(&path.increments[k], &damped_rate, d);
        ito += transports.q_inv[k].transpose() * contracted;
        if let Some(rho) = rho_moving(k) {
            let damped_value = transports.qu[k].transpose() * &control.values[k];
            drift += transports.q_inv[k].transpose()
                * (rho.transpose() * damped_value)
                * (0.5 * h);
        }
    }
    Ok((ito, drift))
}

/// The two summands of the derivative-formula functional along one path: the
/// Ito sum `sum Q_k^{-T} (dW_k . Qu_k^T l'_k)` over left endpoints, and the
/// drift term `1/2 sum h Q_k^{-T} rho_k^T Qu_k^T l_k` with the
/// curvature-derivative drift in the moving frame supplied per step.
pub fn bismut_integrals_with_rho(
    path: &DevelopedPath,
    transports: &DampedTransports,
    control: &ControlProcess,
    rho_moving: impl Fn(usize) -> Option<DMatrix<f64>>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    integrals_range(path, transports, control, rho_moving, path.n_steps())
}

/// [`bismut_integrals`] with both sums cut at step `k_end` — the discrete
/// stopped integrals driving the localized derivative formula. Cutting at
/// the exit step drops only terms whose conditional mean vanishes.
pub fn bismut_integrals_stopped(
    man: &ModelManifold,
    path: &DevelopedPath,
    transports: &DampedTransports,
    control: &ControlProcess,
    k_end: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let j = transports.degree();
    if man.parallel_curvature() {
        return integrals_range(path, transports, control, |_| None, k_end);
    }
    let variant = CouplingVariant::Commutation;
    integrals_range(
        path,
        transports,
        control,
        |k| {
            let data = man
                .weitzenboeck_at(&path.points[k], j, variant)
                .expect("potential at a path point");
            let rot = &path.frames[k];
            let rot_j = linalg::compound_matrix(rot, j);
            let mix = mixed_rotation(rot, &rot_j);
            Some(mix.transpose() * &data.rho * &rot_j)
        },
        k_end,
    )
}

/// [`bismut_integrals_with_rho`] with the drift taken from the manifold's
/// curvature data. All catalog members have parallel curvature, so the drift
/// vanishes there; the general wiring stays exercised through the seam.
pub fn bismut_integrals(
    man: &ModelManifold,
    path: &DevelopedPath,
    transports: &DampedTransports,
    control: &ControlProcess,
) -> Result<(DVector<f64>, DVector<f64>)> {
    bismut_integrals_stopped(man, path, transports, control, path.n_steps())
}
