//! Spectral reference computations on the catalog manifolds: explicit
//! eigenbases on flat tori and round spheres, multiplier calculus for
//! semigroups and resolvent powers, Riesz-transform application, pointwise
//! heat kernels with certified truncation tails, and a discrete-exterior-
//! calculus oracle on triangulated spheres.
//!
//! Everything here is deterministic and thread-safe after construction:
//! bases are immutable, and the lazily built quadrature tables sit behind a
//! `OnceLock`.

pub mod kernels;
pub mod mesh;
pub mod quadrature;
mod sphere;
mod torus;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ModelManifold};
use crate::linalg::binom;

pub use quadrature::Grid;

/// Longitude factor of a real harmonic (sphere) or phase of a real Fourier
/// mode (torus; the order payload is unused there and set to zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Trig {
    Cos(usize),
    Sin(usize),
}

impl Trig {
    fn order(self) -> usize {
        match self {
            Trig::Cos(m) | Trig::Sin(m) => m,
        }
    }
}

/// Identity of a basis entry, used for deterministic ordering and for the
/// exact coefficient-level d and d-dagger maps between degrees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EntryKey {
    Torus {
        n: Vec<i64>,
        trig: Trig,
        coframe: usize,
    },
    SphereScalar {
        l: usize,
        trig: Trig,
    },
    SphereOne {
        l: usize,
        trig: Trig,
        coexact: bool,
    },
    SphereTwo {
        l: usize,
        trig: Trig,
    },
}

/// One (eigenvalue, eigensection) pair.
pub struct BasisEntry {
    pub lambda: f64,
    pub(crate) key: EntryKey,
    /// torus frequency vector (empty on spheres)
    pub(crate) k: Vec<f64>,
    /// torus mode normalization (unused on spheres)
    pub(crate) norm: f64,
}

/// Orthonormal eigenbasis of the degree-j Hodge Laplacian, truncated at a
/// band limit. Entries are sorted by eigenvalue; evaluators return
/// components in the orthonormal coframe of the manifold's chart.
pub struct SpectralBasis {
    man: ModelManifold,
    degree: usize,
    band: usize,
    entries: Vec<BasisEntry>,
    index: BTreeMap<EntryKey, usize>,
    tables: OnceLock<NormTables>,
}

/// Entry values and gradients tabulated on a product-exact quadrature grid;
/// built on first use, shared by projections and norm computations.
struct NormTables {
    grid: Grid,
    /// per form component: nodes x entries
    values: Vec<DMatrix<f64>>,
    /// per flattened (direction, component) slot: nodes x entries
    grads: Vec<DMatrix<f64>>,
}

impl SpectralBasis {
    /// Fourier basis on a flat torus, lattice frequencies |n|_inf <= band.
    pub fn torus(man: &ModelManifold, band: usize, j: usize) -> Result<Arc<Self>> {
        let entries = torus::build_entries(man, band, j)?;
        Self::assemble(man, band, j, entries)
    }

    /// Spherical-harmonic basis on a round 2-sphere, degrees l <= band.
    pub fn sphere(man: &ModelManifold, band: usize, j: usize) -> Result<Arc<Self>> {
        let entries = sphere::build_entries(man, band, j)?;
        Self::assemble(man, band, j, entries)
    }

    /// Basis for the manifold's kind, dispatching on the catalog.
    pub fn for_manifold(man: &ModelManifold, band: usize, j: usize) -> Result<Arc<Self>> {
        match man.kind() {
            ManifoldKind::FlatTorus { .. } => Self::torus(man, band, j),
            ManifoldKind::Sphere2 { .. } => Self::sphere(man, band, j),
            ManifoldKind::HyperbolicPatch { .. } => Err(Error::UnsupportedManifold(
                "no spectral basis on the hyperbolic patch".into(),
            )),
        }
    }

    fn assemble(
        man: &ModelManifold,
        band: usize,
        j: usize,
        entries: Vec<BasisEntry>,
    ) -> Result<Arc<Self>> {
        debug_assert!(entries.windows(2).all(|w| w[0].lambda <= w[1].lambda));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.key.clone(), i))
            .collect();
        Ok(Arc::new(SpectralBasis {
            man: man.clone(),
            degree: j,
            band,
            entries,
            index,
            tables: OnceLock::new(),
        }))
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.man
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn band_limit(&self) -> usize {
        self.band
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.entries[i].lambda
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.lambda)
    }

    pub(crate) fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub(crate) fn lookup(&self, key: &EntryKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Number of form components at the basis degree.
    pub fn component_dim(&self) -> usize {
        binom(self.man.dimension(), self.degree)
    }

    /// Eigensection components at a chart point.
    pub fn entry_value(&self, i: usize, x: &[f64]) -> DVector<f64> {
        let e = &self.entries[i];
        match self.man.kind() {
            ManifoldKind::FlatTorus { .. } => {
                torus::value(self.man.dimension(), self.degree, e, x)
            }
            _ => sphere::value(&self.man, e, x),
        }
    }

    /// Covariant derivative of an eigensection: rows = frame direction,
    /// columns = form component.
    pub fn entry_gradient(&self, i: usize, x: &[f64]) -> DMatrix<f64> {
        let e = &self.entries[i];
        match self.man.kind() {
            ManifoldKind::FlatTorus { .. } => {
                torus::gradient(self.man.dimension(), self.degree, e, x)
            }
            _ => sphere::gradient(&self.man, e, x),
        }
    }

    /// d of an eigensection, in degree-(j+1) components.
    pub fn entry_d(&self, i: usize, x: &[f64]) -> DVector<f64> {
        let e = &self.entries[i];
        match self.man.kind() {
            ManifoldKind::FlatTorus { .. } => {
                torus::d_value(self.man.dimension(), self.degree, e, x)
            }
            _ => sphere::d_value(&self.man, e, x),
        }
    }

    /// d-dagger of an eigensection, in degree-(j-1) components.
    pub fn entry_ddagger(&self, i: usize, x: &[f64]) -> DVector<f64> {
        let e = &self.entries[i];
        match self.man.kind() {
            ManifoldKind::FlatTorus { .. } => {
                torus::ddagger_value(self.man.dimension(), self.degree, e, x)
            }
            _ => sphere::ddagger_value(&self.man, e, x),
        }
    }

    /// Basis of the same family at another degree (for d and d-dagger
    /// images).
    pub fn sibling(&self, j: usize) -> Result<Arc<SpectralBasis>> {
        Self::for_manifold(&self.man, self.band, j)
    }

    fn tables(&self) -> &NormTables {
        self.tables.get_or_init(|| {
            let grid =
                quadrature::product_grid(&self.man, self.band).expect("catalog quadrature grid");
            let n = grid.len();
            let ne = self.entries.len();
            let dim = self.component_dim();
            let m = self.man.dimension();
            let mut values = vec![DMatrix::zeros(n, ne); dim];
            let mut grads = vec![DMatrix::zeros(n, ne); m * dim];
            for (row, x) in grid.points.iter().enumerate() {
                for i in 0..ne {
                    let v = self.entry_value(i, x);
                    let g = self.entry_gradient(i, x);
                    for comp in 0..dim {
                        values[comp][(row, i)] = v[comp];
                        for c in 0..m {
                            grads[c * dim + comp][(row, i)] = g[(c, comp)];
                        }
                    }
                }
            }
            NormTables {
                grid,
                values,
                grads,
            }
        })
    }

    /// The quadrature grid used for projections and norms.
    pub fn norm_grid(&self) -> &Grid {
        &self.tables().grid
    }

    /// L2 projection of an arbitrary section onto the basis.
    pub fn project(&self, f: impl Fn(&[f64]) -> DVector<f64>) -> DVector<f64> {
        let t = self.tables();
        let n = t.grid.len();
        let dim = self.component_dim();
        let mut sampled = vec![DVector::zeros(n); dim];
        for (row, x) in t.grid.points.iter().enumerate() {
            let v = f(x);
            for (comp, s) in sampled.iter_mut().enumerate() {
                s[row] = v[comp] * t.grid.weights[row];
            }
        }
        let mut coeffs = DVector::zeros(self.entries.len());
        for (comp, s) in sampled.iter().enumerate() {
            coeffs += t.values[comp].transpose() * s;
        }
        coeffs
    }

    /// Sampled Gram matrix of the entries (identity for an orthonormal
    /// family, up to quadrature rounding).
    pub fn gram(&self) -> DMatrix<f64> {
        let t = self.tables();
        let ne = self.entries.len();
        let mut g = DMatrix::zeros(ne, ne);
        for v in &t.values {
            g += weighted_gram(v, &t.grid.weights);
        }
        g
    }

    /// Sampled Gram matrix of the entry gradients: entry (i, k) equals the
    /// L2 pairing of the covariant derivatives of entries i and k. For an
    /// eigenbasis this is the weak form of the connection Laplacian.
    pub fn grad_gram(&self) -> DMatrix<f64> {
        let t = self.tables();
        let ne = self.entries.len();
        let mut g = DMatrix::zeros(ne, ne);
        for v in &t.grads {
            g += weighted_gram(v, &t.grid.weights);
        }
        g
    }

    /// Spectral field from coefficients.
    pub fn field(self: &Arc<Self>, coeffs: DVector<f64>) -> Result<FormField> {
        if coeffs.len() != self.entries.len() {
            return Err(Error::InvalidInput(format!(
                "coefficient length {} does not match basis size {}",
                coeffs.len(),
                self.entries.len()
            )));
        }
        Ok(FormField {
            degree: self.degree,
            dim: self.component_dim(),
            band_limit: Some(self.band),
            sup_norm: OnceLock::new(),
            rep: FieldRep::Spectral {
                basis: Arc::clone(self),
                coeffs,
            },
        })
    }

    /// Unit-norm field with standard normal coefficients.
    pub fn random_field<R: Rng + ?Sized>(self: &Arc<Self>, rng: &mut R) -> FormField {
        let mut coeffs = DVector::zeros(self.entries.len());
        for c in coeffs.iter_mut() {
            *c = StandardNormal.sample(rng);
        }
        let norm = coeffs.norm();
        if norm > 0.0 {
            coeffs /= norm;
        }
        self.field(coeffs).expect("coefficients sized to the basis")
    }
}

fn weighted_gram(v: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut vw = v.clone();
    for (mut row, &wi) in vw.row_iter_mut().zip(w) {
        row *= wi;
    }
    v.transpose() * vw
}

/// A j-form-valued section, evaluable pointwise in the orthonormal coframe.
pub struct FormField {
    degree: usize,
    dim: usize,
    band_limit: Option<usize>,
    sup_norm: OnceLock<f64>,
    rep: FieldRep,
}

type FieldEval = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

enum FieldRep {
    /// combination of basis entries
    Spectral {
        basis: Arc<SpectralBasis>,
        coeffs: DVector<f64>,
    },
    /// constant chart components; parallel, hence restricted to flat tori
    Constant {
        man: ModelManifold,
        components: DVector<f64>,
    },
    /// covariant derivative of a spectral field; components flattened
    /// direction-major as (direction, form component)
    Gradient {
        basis: Arc<SpectralBasis>,
        coeffs: DVector<f64>,
    },
    /// (d + d-dagger) image: degree-(j+1) and degree-(j-1) parts, with
    /// components stacked [up | down]
    Dirac { up: Box<FormField>, down: Box<FormField> },
    /// caller-supplied evaluator with a declared sup norm; the only field
    /// kind available on spaces without a spectral basis
    Custom {
        man: ModelManifold,
        eval: FieldEval,
        sup: f64,
    },
}

impl FormField {
    /// Parallel field with constant components (flat tori only; a
    /// chart-constant field is not parallel on a curved space).
    pub fn constant(man: &ModelManifold, j: usize, components: DVector<f64>) -> Result<Self> {
        if !matches!(man.kind(), ManifoldKind::FlatTorus { .. }) {
            return Err(Error::InvalidInput(
                "constant fields are only parallel on flat tori".into(),
            ));
        }
        let dim = binom(man.dimension(), j);
        if components.len() != dim {
            return Err(Error::InvalidInput(format!(
                "expected {dim} components for degree {j}"
            )));
        }
        Ok(FormField {
            degree: j,
            dim,
            band_limit: Some(0),
            sup_norm: OnceLock::new(),
            rep: FieldRep::Constant {
                man: man.clone(),
                components,
            },
        })
    }

    /// Identically zero field of the given degree (degree > dimension yields
    /// the zero-component field).
    fn zero(man: &ModelManifold, j: usize) -> Self {
        let dim = if j <= man.dimension() {
            binom(man.dimension(), j)
        } else {
            0
        };
        FormField {
            degree: j,
            dim,
            band_limit: Some(0),
            sup_norm: OnceLock::new(),
            rep: FieldRep::Constant {
                man: man.clone(),
                components: DVector::zeros(dim),
            },
        }
    }

    /// Field from an arbitrary pointwise evaluator producing orthonormal
    /// coframe components; `sup_norm` must bound the pointwise fiber norm.
    /// No derivative, coefficient, or L2 structure is attached.
    pub fn from_evaluator(
        man: &ModelManifold,
        j: usize,
        sup_norm: f64,
        eval: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let m = man.dimension();
        if j > m {
            return Err(Error::DegreeOutOfRange { j, m });
        }
        if sup_norm < 0.0 || !sup_norm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "declared sup norm must be finite and nonnegative, got {sup_norm}"
            )));
        }
        Ok(FormField {
            degree: j,
            dim: binom(m, j),
            band_limit: None,
            sup_norm: OnceLock::new(),
            rep: FieldRep::Custom {
                man: man.clone(),
                eval: Arc::new(eval),
                sup: sup_norm,
            },
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The manifold the field lives on.
    pub fn manifold(&self) -> &ModelManifold {
        match &self.rep {
            FieldRep::Spectral { basis, .. } | FieldRep::Gradient { basis, .. } => {
                basis.manifold()
            }
            FieldRep::Constant { man, .. } | FieldRep::Custom { man, .. } => man,
            FieldRep::Dirac { up, .. } => up.manifold(),
        }
    }

    /// Length of the component vector returned by `value_at`. Pure fields
    /// have binom(m, j) components; gradient fields m * binom(m, j); Dirac
    /// images stack the two pure parts.
    pub fn components_len(&self) -> usize {
        self.dim
    }

    pub fn band_limit(&self) -> Option<usize> {
        self.band_limit
    }

    /// True when `value_at` returns plain degree-j coframe components — a
    /// spectral combination, a parallel constant, or a custom evaluator —
    /// rather than the stacked layout of a derived gradient or Dirac field.
    pub fn is_pure(&self) -> bool {
        matches!(
            &self.rep,
            FieldRep::Spectral { .. } | FieldRep::Constant { .. } | FieldRep::Custom { .. }
        )
    }

    pub fn basis(&self) -> Option<&Arc<SpectralBasis>> {
        match &self.rep {
            FieldRep::Spectral { basis, .. } | FieldRep::Gradient { basis, .. } => Some(basis),
            _ => None,
        }
    }

    pub fn coefficients(&self) -> Option<&DVector<f64>> {
        match &self.rep {
            FieldRep::Spectral { coeffs, .. } | FieldRep::Gradient { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }

    /// Component vector at a chart point.
    pub fn value_at(&self, x: &[f64]) -> DVector<f64> {
        match &self.rep {
            FieldRep::Spectral { basis, coeffs } => {
                let mut out = DVector::zeros(self.dim);
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0.0 {
                        out.axpy(c, &basis.entry_value(i, x), 1.0);
                    }
                }
                out
            }
            FieldRep::Constant { components, .. } => components.clone(),
            FieldRep::Gradient { basis, coeffs } => {
                let m = basis.manifold().dimension();
                let dim = basis.component_dim();
                let mut out = DVector::zeros(m * dim);
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0.0 {
                        let g = basis.entry_gradient(i, x);
                        for dir in 0..m {
                            for comp in 0..dim {
                                out[dir * dim + comp] += c * g[(dir, comp)];
                            }
                        }
                    }
                }
                out
            }
            FieldRep::Dirac { up, down } => {
                let vu = up.value_at(x);
                let vd = down.value_at(x);
                let mut out = DVector::zeros(vu.len() + vd.len());
                out.rows_mut(0, vu.len()).copy_from(&vu);
                out.rows_mut(vu.len(), vd.len()).copy_from(&vd);
                out
            }
            FieldRep::Custom { eval, .. } => eval(x),
        }
    }

    /// Euclidean norm of the component vector (= pointwise fiber norm in an
    /// orthonormal coframe).
    pub fn pointwise_norm(&self, x: &[f64]) -> f64 {
        self.value_at(x).norm()
    }

    /// Covariant derivative at a chart point, rows = direction, columns =
    /// form component. Available for spectral and constant fields.
    pub fn gradient_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &self.rep {
            FieldRep::Spectral { basis, coeffs } => {
                let m = basis.manifold().dimension();
                let mut out = DMatrix::zeros(m, self.dim);
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0.0 {
                        out += basis.entry_gradient(i, x) * c;
                    }
                }
                Ok(out)
            }
            FieldRep::Constant { man, .. } => Ok(DMatrix::zeros(man.dimension(), self.dim)),
            _ => Err(Error::InvalidInput(
                "gradient is not stored for derived fields".into(),
            )),
        }
    }

    /// Cached sup-norm estimate: exact for constant fields, a quadrature-
    /// grid maximum otherwise.
    pub fn sup_norm(&self) -> f64 {
        *self.sup_norm.get_or_init(|| match &self.rep {
            FieldRep::Constant { components, .. } => components.norm(),
            FieldRep::Custom { sup, .. } => *sup,
            _ => {
                let grid = self.reference_grid();
                grid.points
                    .iter()
                    .map(|x| self.pointwise_norm(x))
                    .fold(0.0, f64::max)
            }
        })
    }

    fn reference_grid(&self) -> &Grid {
        match &self.rep {
            FieldRep::Spectral { basis, .. } | FieldRep::Gradient { basis, .. } => {
                basis.norm_grid()
            }
            FieldRep::Dirac { up, down } => {
                if up.components_len() > 0 {
                    up.reference_grid()
                } else {
                    down.reference_grid()
                }
            }
            FieldRep::Constant { .. } | FieldRep::Custom { .. } => {
                unreachable!("fields with declared sup norms never touch the grid")
            }
        }
    }

    /// L2 norm: Parseval for spectral fields, quadrature for derived ones.
    pub fn l2_norm(&self) -> f64 {
        match &self.rep {
            FieldRep::Spectral { coeffs, .. } => coeffs.norm(),
            FieldRep::Constant { man, components } => {
                components.norm() * man.total_volume().sqrt()
            }
            FieldRep::Gradient { .. } => self.l2_norm_quadrature(),
            FieldRep::Dirac { up, down } => up.l2_norm().hypot(down.l2_norm()),
            FieldRep::Custom { .. } => {
                panic!("custom evaluator fields carry no L2 structure")
            }
        }
    }

    /// L2 norm by quadrature on the basis grid; exact for band-limited
    /// integrands, used to cross-check the coefficient route.
    pub fn l2_norm_quadrature(&self) -> f64 {
        match &self.rep {
            FieldRep::Spectral { basis, coeffs } => {
                let t = basis.tables();
                let mut acc = 0.0;
                for v in &t.values {
                    let at_nodes = v * coeffs;
                    acc += at_nodes
                        .iter()
                        .zip(&t.grid.weights)
                        .map(|(a, w)| w * a * a)
                        .sum::<f64>();
                }
                acc.sqrt()
            }
            FieldRep::Gradient { basis, coeffs } => {
                let t = basis.tables();
                let mut acc = 0.0;
                for v in &t.grads {
                    let at_nodes = v * coeffs;
                    acc += at_nodes
                        .iter()
                        .zip(&t.grid.weights)
                        .map(|(a, w)| w * a * a)
                        .sum::<f64>();
                }
                acc.sqrt()
            }
            FieldRep::Constant { man, components } => {
                components.norm() * man.total_volume().sqrt()
            }
            FieldRep::Dirac { up, down } => {
                up.l2_norm_quadrature().hypot(down.l2_norm_quadrature())
            }
            FieldRep::Custom { .. } => {
                panic!("custom evaluator fields carry no L2 structure")
            }
        }
    }
}

/// Spectral multiplier: coefficientwise multiplication by a function of the
/// eigenvalue (semigroups, resolvent powers, projections).
pub fn apply_multiplier(
    basis: &Arc<SpectralBasis>,
    mult: impl Fn(f64) -> f64,
    coeffs: &DVector<f64>,
) -> Result<FormField> {
    if coeffs.len() != basis.len() {
        return Err(Error::InvalidInput(
            "coefficient length does not match basis".into(),
        ));
    }
    let mut out = coeffs.clone();
    for (i, c) in out.iter_mut().enumerate() {
        let f = mult(basis.eigenvalue(i));
        if !f.is_finite() {
            return Err(Error::InvalidInput(format!(
                "multiplier not finite at eigenvalue {}",
                basis.eigenvalue(i)
            )));
        }
        *c *= f;
    }
    basis.field(out)
}

/// First-order operator applied after the resolvent power (lambda + kappa)^{-1/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RieszVariant {
    Nabla,
    D,
    Ddagger,
    DPlusDdagger,
}

impl RieszVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nabla" => Ok(RieszVariant::Nabla),
            "d" => Ok(RieszVariant::D),
            "ddagger" => Ok(RieszVariant::Ddagger),
            "d_plus_ddagger" => Ok(RieszVariant::DPlusDdagger),
            other => Err(Error::Parse(format!("unknown Riesz variant '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RieszVariant::Nabla => "nabla",
            RieszVariant::D => "d",
            RieszVariant::Ddagger => "ddagger",
            RieszVariant::DPlusDdagger => "d_plus_ddagger",
        }
    }
}

/// Riesz-transform application: the first-order operator composed with
/// (Delta + kappa)^{-1/2}, all in the truncated basis.
pub fn riesz_apply(
    basis: &Arc<SpectralBasis>,
    kappa: f64,
    variant: RieszVariant,
    coeffs: &DVector<f64>,
) -> Result<FormField> {
    if kappa <= 0.0 {
        return Err(Error::InvalidInput("riesz_apply needs kappa > 0".into()));
    }
    if coeffs.len() != basis.len() {
        return Err(Error::InvalidInput(
            "coefficient length does not match basis".into(),
        ));
    }
    let mut resolved = coeffs.clone();
    for (i, c) in resolved.iter_mut().enumerate() {
        *c /= (basis.eigenvalue(i) + kappa).sqrt();
    }
    match variant {
        RieszVariant::Nabla => Ok(FormField {
            degree: basis.degree(),
            dim: basis.manifold().dimension() * basis.component_dim(),
            band_limit: Some(basis.band_limit()),
            sup_norm: OnceLock::new(),
            rep: FieldRep::Gradient {
                basis: Arc::clone(basis),
                coeffs: resolved,
            },
        }),
        RieszVariant::D => d_field(basis, &resolved),
        RieszVariant::Ddagger => ddagger_field(basis, &resolved),
        RieszVariant::DPlusDdagger => {
            let up = d_field(basis, &resolved)?;
            let down = ddagger_field(basis, &resolved)?;
            let dim = up.components_len() + down.components_len();
            Ok(FormField {
                degree: basis.degree(),
                dim,
                band_limit: Some(basis.band_limit()),
                sup_norm: OnceLock::new(),
                rep: FieldRep::Dirac {
                    up: Box::new(up),
                    down: Box::new(down),
                },
            })
        }
    }
}

/// Exact coefficient-level image of d in the sibling basis one degree up.
pub fn d_field(basis: &Arc<SpectralBasis>, coeffs: &DVector<f64>) -> Result<FormField> {
    let man = basis.manifold();
    let j = basis.degree();
    if j + 1 > man.dimension() {
        return Ok(FormField::zero(man, j + 1));
    }
    let dst = basis.sibling(j + 1)?;
    let mapped = match man.kind() {
        ManifoldKind::FlatTorus { .. } => torus::d_map(basis, &dst, coeffs)?,
        _ => sphere::d_map(basis, &dst, coeffs)?,
    };
    dst.field(mapped)
}

/// Exact coefficient-level image of d-dagger in the sibling basis one degree
/// down.
pub fn ddagger_field(basis: &Arc<SpectralBasis>, coeffs: &DVector<f64>) -> Result<FormField> {
    let man = basis.manifold();
    let j = basis.degree();
    if j == 0 {
        return Ok(FormField::zero(man, 0));
    }
    let dst = basis.sibling(j - 1)?;
    let mapped = match man.kind() {
        ManifoldKind::FlatTorus { .. } => torus::ddagger_map(basis, &dst, coeffs)?,
        _ => sphere::ddagger_map(basis, &dst, coeffs)?,
    };
    dst.field(mapped)
}
