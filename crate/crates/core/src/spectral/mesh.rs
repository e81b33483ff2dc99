//! Discrete exterior calculus on closed oriented triangle surfaces.
//!
//! Meshes arrive as plain text (`v x y z` / `f i j k`, faces 1-indexed) and
//! are validated as closed oriented 2-manifolds: every edge borders exactly
//! two faces with opposite induced orientations, and every vertex link is a
//! single cycle. Hodge stars are circumcentric (Voronoi dual areas, cotan
//! edge weights, inverse face areas) and must be positive. The degree-j
//! Laplacian is assembled in symmetrized form, so its spectrum is computed
//! with symmetric solvers: dense for small meshes, Lanczos with full
//! reorthogonalization for large ones.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dimension cutoff between dense eigensolves and Lanczos.
const DENSE_EIG_LIMIT: usize = 700;

#[derive(Clone)]
struct Sparse {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, v) in trips {
            rows[r].push((c, v));
        }
        Sparse { nrows, ncols, rows }
    }

    fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut out = DVector::zeros(self.nrows);
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(c, v) in row {
                acc += v * x[c];
            }
            out[r] = acc;
        }
        out
    }

    fn transpose(&self) -> Sparse {
        let mut rows = vec![Vec::new(); self.ncols];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                rows[c].push((r, v));
            }
        }
        Sparse {
            nrows: self.ncols,
            ncols: self.nrows,
            rows,
        }
    }
}

/// A validated closed oriented triangle surface with its incidence
/// structure and circumcentric Hodge stars.
pub struct MeshComplex {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    /// signed incidence, integer-exact: (row, col, sign)
    inc0: Vec<(usize, usize, i8)>,
    inc1: Vec<(usize, usize, i8)>,
    star0: DVector<f64>,
    star1: DVector<f64>,
    star2: DVector<f64>,
}

impl MeshComplex {
    /// Parse and validate the plain-text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices: Vec<Vector3<f64>> = Vec::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let fields: Vec<&str> = it.collect();
            match tag {
                "v" => {
                    if fields.len() != 3 {
                        return Err(Error::Parse(format!(
                            "line {}: vertex needs 3 coordinates",
                            lineno + 1
                        )));
                    }
                    let mut p = [0.0; 3];
                    for (slot, f) in p.iter_mut().zip(&fields) {
                        *slot = f.parse::<f64>().map_err(|e| {
                            Error::Parse(format!("line {}: {e}", lineno + 1))
                        })?;
                    }
                    vertices.push(Vector3::new(p[0], p[1], p[2]));
                }
                "f" => {
                    if fields.len() != 3 {
                        return Err(Error::Parse(format!(
                            "line {}: face needs 3 vertex indices",
                            lineno + 1
                        )));
                    }
                    let mut idx = [0usize; 3];
                    for (slot, f) in idx.iter_mut().zip(&fields) {
                        let one_based: usize = f.parse().map_err(|e| {
                            Error::Parse(format!("line {}: {e}", lineno + 1))
                        })?;
                        if one_based == 0 {
                            return Err(Error::Parse(format!(
                                "line {}: face indices are 1-based",
                                lineno + 1
                            )));
                        }
                        *slot = one_based - 1;
                    }
                    faces.push(idx);
                }
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown record '{other}'",
                        lineno + 1
                    )));
                }
            }
        }
        Self::build(vertices, faces)
    }

    fn build(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 4 || faces.is_empty() {
            return Err(Error::MeshRejected(
                "a closed surface needs at least 4 vertices and 4 faces".into(),
            ));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::MeshRejected(format!("face {fi} is degenerate")));
            }
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::MeshRejected(format!(
                    "face {fi} references a missing vertex"
                )));
            }
        }

        // each directed edge must occur exactly once, and its reverse exactly
        // once: closedness + orientability + edge-manifoldness in one sweep
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for f in &faces {
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                *directed.entry(e).or_insert(0) += 1;
            }
        }
        let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::MeshRejected(format!(
                    "directed edge ({a}, {b}) appears {count} times; mesh is \
                     non-manifold or inconsistently oriented"
                )));
            }
            if directed.get(&(b, a)).copied().unwrap_or(0) != 1 {
                return Err(Error::MeshRejected(format!(
                    "edge ({a}, {b}) lacks an oppositely oriented partner; \
                     surface is open or not orientable"
                )));
            }
            if a < b {
                edge_index.insert((a, b), edges.len());
                edges.push((a, b));
            }
        }

        // vertex links must be single cycles
        let mut link: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); nv];
        for f in &faces {
            for p in 0..3 {
                let v = f[p];
                let from = f[(p + 1) % 3];
                let to = f[(p + 2) % 3];
                if link[v].insert(from, to).is_some() {
                    return Err(Error::MeshRejected(format!(
                        "vertex {v} has a non-manifold star"
                    )));
                }
            }
        }
        for (v, cycle) in link.iter().enumerate() {
            if cycle.is_empty() {
                return Err(Error::MeshRejected(format!("vertex {v} is isolated")));
            }
            let start = *cycle.keys().next().unwrap();
            let mut at = start;
            for _ in 0..cycle.len() {
                at = *cycle.get(&at).ok_or_else(|| {
                    Error::MeshRejected(format!("vertex {v} has a broken link"))
                })?;
            }
            if at != start {
                return Err(Error::MeshRejected(format!(
                    "vertex {v} link is not a single cycle"
                )));
            }
            // the walk must visit every link vertex; a premature return to
            // start leaves part of the map unvisited
            let mut seen = 1usize;
            at = *cycle.get(&start).unwrap();
            while at != start {
                seen += 1;
                at = *cycle.get(&at).unwrap();
            }
            if seen != cycle.len() {
                return Err(Error::MeshRejected(format!(
                    "vertex {v} link splits into several cycles"
                )));
            }
        }

        // incidence matrices, integer-exact
        let mut inc0 = Vec::with_capacity(2 * edges.len());
        for (ei, &(a, b)) in edges.iter().enumerate() {
            inc0.push((ei, a, -1i8));
            inc0.push((ei, b, 1i8));
        }
        let mut inc1 = Vec::with_capacity(3 * faces.len());
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let (key, sign) = if a < b { ((a, b), 1i8) } else { ((b, a), -1i8) };
                inc1.push((fi, edge_index[&key], sign));
            }
        }

        // circumcentric stars
        let mut star0 = DVector::zeros(nv);
        let mut star1 = DVector::zeros(edges.len());
        let mut star2 = DVector::zeros(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let p = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let double_area = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            if double_area <= 0.0 {
                return Err(Error::MeshRejected(format!("face {fi} has zero area")));
            }
            star2[fi] = 2.0 / double_area;
            for k in 0..3 {
                // angle at vertex k, opposite edge (k+1, k+2)
                let u = p[(k + 1) % 3] - p[k];
                let w = p[(k + 2) % 3] - p[k];
                let cot = u.dot(&w) / u.cross(&w).norm();
                let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                star1[edge_index[&key]] += 0.5 * cot;
                let opp = (p[(k + 1) % 3] - p[(k + 2) % 3]).norm_squared();
                star0[f[(k + 1) % 3]] += 0.125 * opp * cot;
                star0[f[(k + 2) % 3]] += 0.125 * opp * cot;
            }
        }
        for (i, &s) in star0.iter().enumerate() {
            if s <= 0.0 {
                return Err(Error::MeshRejected(format!(
                    "vertex {i} has non-positive dual area {s:.3e}"
                )));
            }
        }
        for (i, &s) in star1.iter().enumerate() {
            if s <= 0.0 {
                return Err(Error::MeshRejected(format!(
                    "edge {i} has non-positive cotan weight {s:.3e}"
                )));
            }
        }

        Ok(MeshComplex {
            vertices,
            faces,
            edges,
            inc0,
            inc1,
            star0,
            star1,
            star2,
        })
    }

    /// (vertices, edges, faces)
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.faces.len())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn vertex_positions(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    /// Sum of triangle areas.
    pub fn total_area(&self) -> f64 {
        self.star2.iter().map(|&s| 1.0 / s).sum()
    }

    /// Sum of Voronoi dual areas (equals `total_area` for valid stars).
    pub fn dual_area(&self) -> f64 {
        self.star0.sum()
    }

    /// Exact integer check that the composition of the two incidence maps
    /// vanishes (d after d is zero).
    pub fn d1_d0_is_zero(&self) -> bool {
        // accumulate (face, vertex) entries of inc1 * inc0
        let mut by_edge: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.edges.len()];
        for &(e, v, s) in &self.inc0 {
            by_edge[e].push((v, s as i64));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(f, e, s) in &self.inc1 {
            for &(v, s0) in &by_edge[e] {
                *acc.entry((f, v)).or_insert(0) += s as i64 * s0;
            }
        }
        acc.values().all(|&v| v == 0)
    }

    fn sparse_d0(&self) -> Sparse {
        let trips: Vec<(usize, usize, f64)> = self
            .inc0
            .iter()
            .map(|&(r, c, s)| (r, c, s as f64))
            .collect();
        Sparse::from_triplets(self.edges.len(), self.vertices.len(), &trips)
    }

    fn sparse_d1(&self) -> Sparse {
        let trips: Vec<(usize, usize, f64)> = self
            .inc1
            .iter()
            .map(|&(r, c, s)| (r, c, s as f64))
            .collect();
        Sparse::from_triplets(self.faces.len(), self.edges.len(), &trips)
    }

    /// Symmetrized degree-j Hodge Laplacian (unitarily equivalent to the DEC
    /// operator d-dagger d + d d-dagger in the star-weighted inner product).
    pub fn dec_laplacian(&self, j: usize) -> Result<DecLaplacian> {
        if j > 2 {
            return Err(Error::DegreeOutOfRange { j, m: 2 });
        }
        let mut terms = Vec::new();
        let d0 = self.sparse_d0();
        let d1 = self.sparse_d1();
        match j {
            0 => {
                // C = star1^{1/2} d0 star0^{-1/2}
                let c = scale_rows_cols(&d0, &self.star1, &self.star0);
                terms.push(c);
            }
            1 => {
                // up: star2^{1/2} d1 star1^{-1/2}; down: star0^{-1/2} d0^T star1^{1/2}
                let up = scale_rows_cols(&d1, &self.star2, &self.star1);
                let down = scale_rows_cols(&d0, &self.star1, &self.star0).transpose();
                terms.push(up);
                terms.push(down);
            }
            2 => {
                // C = star1^{-1/2} d1^T star2^{1/2}
                let c = scale_rows_cols(&d1, &self.star2, &self.star1).transpose();
                terms.push(c);
            }
            _ => unreachable!(),
        }
        let dim = match j {
            0 => self.vertices.len(),
            1 => self.edges.len(),
            _ => self.faces.len(),
        };
        let terms = terms
            .into_iter()
            .map(|c| {
                let ct = c.transpose();
                (c, ct)
            })
            .collect();
        Ok(DecLaplacian { degree: j, dim, terms })
    }
}

/// diag(rw)^{1/2} * A * diag(cw)^{-1/2}
fn scale_rows_cols(a: &Sparse, rw: &DVector<f64>, cw: &DVector<f64>) -> Sparse {
    let mut out = a.clone();
    for (r, row) in out.rows.iter_mut().enumerate() {
        let rs = rw[r].sqrt();
        for (c, v) in row.iter_mut() {
            *v *= rs / cw[*c].sqrt();
        }
    }
    out
}

/// Symmetric positive-semidefinite form of the degree-j DEC Laplacian,
/// stored as a sum of Gram terms C^T C.
pub struct DecLaplacian {
    degree: usize,
    dim: usize,
    terms: Vec<(Sparse, Sparse)>,
}

impl DecLaplacian {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (c, ct) in &self.terms {
            out += ct.matvec(&c.matvec(v));
        }
        out
    }

    /// Dense assembly (small meshes).
    pub fn dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut basis = DVector::zeros(self.dim);
        for i in 0..self.dim {
            basis[i] = 1.0;
            out.set_column(i, &self.apply(&basis));
            basis[i] = 0.0;
        }
        out
    }

    /// Full spectrum by dense symmetric eigensolve; refuses above the dense
    /// size limit.
    pub fn all_eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim > 4 * DENSE_EIG_LIMIT {
            return Err(Error::InvalidInput(format!(
                "dense eigensolve refused at dimension {}",
                self.dim
            )));
        }
        let mut eig: Vec<f64> = self.dense().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(eig)
    }

    /// The `want` smallest eigenvalues: dense when feasible, Lanczos with
    /// full reorthogonalization otherwise.
    pub fn low_eigenvalues(&self, want: usize, seed: u64) -> Vec<f64> {
        let want = want.min(self.dim);
        if self.dim <= DENSE_EIG_LIMIT {
            let eig = self.all_eigenvalues().expect("dim under dense limit");
            return eig[..want].to_vec();
        }
        lanczos_smallest(|v| self.apply(v), self.dim, want, seed)
    }

    /// Number of eigenvalues below the threshold (harmonic count when the
    /// threshold separates the kernel from the spectral gap).
    pub fn near_kernel_count(&self, threshold: f64, seed: u64) -> usize {
        self.low_eigenvalues(12, seed)
            .iter()
            .filter(|&&l| l < threshold)
            .count()
    }
}

/// Smallest Ritz values of a symmetric PSD operator by Lanczos with full
/// double reorthogonalization.
fn lanczos_smallest(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    dim: usize,
    want: usize,
    seed: u64,
) -> Vec<f64> {
    // Restarted Lanczos with explicit deflation. One Krylov sequence carries
    // at most one copy of each eigenspace, so repeated eigenvalues (the rule,
    // not the exception, on symmetric meshes) are collected copy by copy:
    // every restart draws a fresh start vector in the orthogonal complement
    // of the converged Ritz vectors and locks whatever converges.
    let steps = dim.min(300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut settled_floor = f64::INFINITY;

    'restart: for _ in 0..12 {
        let mut q = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0_f64));
        for (_, u) in &locked {
            let c = q.dot(u);
            q.axpy(-c, u, 1.0);
        }
        let n = q.norm();
        if n < 1e-10 {
            break; // the locked space exhausts the whole space
        }
        q /= n;

        let mut basis: Vec<DVector<f64>> = vec![q.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let last_beta = loop {
            let mut w = apply(&q);
            alphas.push(w.dot(&q));
            // two passes of full orthogonalization against the locked space
            // and the current Krylov basis (subsumes the three-term recap)
            for _ in 0..2 {
                for (_, u) in &locked {
                    let c = w.dot(u);
                    w.axpy(-c, u, 1.0);
                }
                for b in &basis {
                    let c = w.dot(b);
                    w.axpy(-c, b, 1.0);
                }
            }
            let beta = w.norm();
            if beta < 1e-12 || alphas.len() == steps {
                break beta;
            }
            betas.push(beta);
            w /= beta;
            q = w.clone();
            basis.push(w);
        };

        let k = alphas.len();
        let mut tri = DMatrix::zeros(k, k);
        for i in 0..k {
            tri[(i, i)] = alphas[i];
            if i + 1 < k {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let eig = tri.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut added_low = false;
        for idx in 0..k {
            let theta = eig.eigenvalues[idx];
            // standard Lanczos residual bound for the Ritz pair
            let resid = last_beta * eig.eigenvectors[(k - 1, idx)].abs();
            if resid > 1e-8 * scale {
                continue;
            }
            let mut u = DVector::zeros(dim);
            for (j, b) in basis.iter().enumerate() {
                u.axpy(eig.eigenvectors[(j, idx)], b, 1.0);
            }
            for (_, v) in &locked {
                let c = u.dot(v);
                u.axpy(-c, v, 1.0);
            }
            let n = u.norm();
            if n < 0.5 {
                continue; // duplicate of an already-locked direction
            }
            if theta < settled_floor {
                added_low = true;
            }
            locked.push((theta, u / n));
        }
        locked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if locked.len() >= want {
            settled_floor = locked[want - 1].0 + 1e-10 * scale;
            // stop once a whole restart contributes nothing below the
            // current want-th value: the bottom of the spectrum is complete
            if !added_low {
                break 'restart;
            }
        }
    }
    let mut vals: Vec<f64> = locked.iter().map(|p| p.0).collect();
    vals.truncate(want);
    vals
}

// ---------------------------------------------------------------------------
// icosphere generation
// ---------------------------------------------------------------------------

/// Plain-text icosphere of the unit sphere: `level` quadrisections of the
/// icosahedron, vertices projected to radius 1. Vertex counts run
/// 12, 42, 162, 642, 2562, ...
pub fn icosphere_text(level: usize) -> String {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        v.normalize_mut();
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    // enforce outward orientation so the subdivided mesh is consistently
    // oriented regardless of the table above
    for f in &mut faces {
        let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
        let centroid = vertices[f[0]] + vertices[f[1]] + vertices[f[2]];
        if n.dot(&centroid) < 0.0 {
            f.swap(1, 2);
        }
    }
    for _ in 0..level {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next_faces = Vec::with_capacity(4 * faces.len());
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = (vertices[a] + vertices[b]).normalize();
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            next_faces.push([f[0], mid[0], mid[2]]);
            next_faces.push([f[1], mid[1], mid[0]]);
            next_faces.push([f[2], mid[2], mid[1]]);
            next_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = next_faces;
    }
    let mut out = String::with_capacity(40 * (vertices.len() + faces.len()));
    for v in &vertices {
        out.push_str(&format!("v {:.17} {:.17} {:.17}\n", v.x, v.y, v.z));
    }
    for f in &faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

#[cfg(test)]
mod unit {
    use super::*;

    fn icosphere(level: usize) -> MeshComplex {
        MeshComplex::parse(&icosphere_text(level)).unwrap()
    }

    fn tetrahedron_text() -> String {
        // regular tetrahedron, outward-oriented
        "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n\
         f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n"
            .to_string()
    }

    #[test]
    fn icosphere_counts_and_euler() {
        for (level, nv) in [(0usize, 12usize), (1, 42), (2, 162), (3, 642)] {
            let mesh = icosphere(level);
            let (v, e, f) = mesh.counts();
            assert_eq!(v, nv);
            assert_eq!(f, 20 * 4usize.pow(level as u32));
            assert_eq!(e, v + f - 2);
            assert_eq!(mesh.euler_characteristic(), 2);
        }
    }

    #[test]
    fn tetrahedron_is_accepted() {
        let mesh = MeshComplex::parse(&tetrahedron_text()).unwrap();
        assert_eq!(mesh.counts(), (4, 6, 4));
        assert!(mesh.d1_d0_is_zero());
    }

    #[test]
    fn open_surface_is_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 2 4\nf 1 3 4\n";
        assert!(matches!(
            MeshComplex::parse(text),
            Err(Error::MeshRejected(_))
        ));
    }

    #[test]
    fn flipped_face_is_rejected() {
        let text = tetrahedron_text().replace("f 2 3 4", "f 2 4 3");
        assert!(matches!(
            MeshComplex::parse(&text),
            Err(Error::MeshRejected(_))
        ));
    }

    #[test]
    fn doubled_face_is_rejected() {
        let text = format!("{}f 2 3 4\n", tetrahedron_text());
        assert!(matches!(
            MeshComplex::parse(&text),
            Err(Error::MeshRejected(_))
        ));
    }

    #[test]
    fn bad_records_are_parse_errors() {
        for text in [
            "v 0 0\n",
            "f 1 2 9\nv 0 0 0\n",
            "q 1 2 3\n",
            "f 0 1 2\n",
            "f 1 1 2\nv 0 0 0\n",
        ] {
            match MeshComplex::parse(text) {
                Err(Error::Parse(_)) | Err(Error::MeshRejected(_)) => {}
                Err(e) => panic!("wrong error kind for {text:?}: {e}"),
                Ok(_) => panic!("input unexpectedly accepted: {text:?}"),
            }
        }
    }

    #[test]
    fn incidence_composition_vanishes() {
        assert!(icosphere(2).d1_d0_is_zero());
    }

    #[test]
    fn dual_areas_tile_the_surface() {
        let mesh = icosphere(2);
        let a = mesh.total_area();
        let b = mesh.dual_area();
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
        // inscribed polyhedron area is slightly below the sphere's
        let sphere = 4.0 * std::f64::consts::PI;
        assert!(a < sphere && a > 0.97 * sphere);
    }

    #[test]
    fn laplacian_dimensions_and_positivity() {
        let mesh = icosphere(1);
        let (v, e, f) = mesh.counts();
        for (j, dim) in [(0usize, v), (1, e), (2, f)] {
            let lap = mesh.dec_laplacian(j).unwrap();
            assert_eq!(lap.dim(), dim);
            let eig = lap.all_eigenvalues().unwrap();
            assert_eq!(eig.len(), dim);
            assert!(eig[0] > -1e-10);
        }
        assert!(mesh.dec_laplacian(3).is_err());
    }

    #[test]
    fn betti_numbers_of_the_sphere() {
        let mesh = icosphere(2);
        let counts: Vec<usize> = (0..3)
            .map(|j| {
                mesh.dec_laplacian(j)
                    .unwrap()
                    .near_kernel_count(1e-8, 7)
            })
            .collect();
        assert_eq!(counts, vec![1, 0, 1]);
    }

    #[test]
    fn hodge_pairing_of_spectra() {
        // nonzero degree-1 spectrum is exactly the union of the nonzero
        // degree-0 and degree-2 spectra (no harmonic 1-forms on the sphere)
        let mesh = icosphere(1);
        let e0 = mesh.dec_laplacian(0).unwrap().all_eigenvalues().unwrap();
        let e1 = mesh.dec_laplacian(1).unwrap().all_eigenvalues().unwrap();
        let e2 = mesh.dec_laplacian(2).unwrap().all_eigenvalues().unwrap();
        let mut merged: Vec<f64> = e0
            .iter()
            .skip(1)
            .chain(e2.iter().skip(1))
            .copied()
            .collect();
        merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(merged.len(), e1.len());
        let scale = e1.last().unwrap().max(1.0);
        for (a, b) in merged.iter().zip(&e1) {
            assert!((a - b).abs() < 1e-8 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn scalar_spectrum_approaches_integer_clusters() {
        // eigenvalues of the sphere Laplacian are l(l+1) with multiplicity
        // 2l+1; the refined mesh reproduces the first three clusters
        let mesh = icosphere(3);
        let lap = mesh.dec_laplacian(0).unwrap();
        let eig = lap.low_eigenvalues(16, 11);
        assert!(eig[0].abs() < 1e-8);
        let clusters: [(usize, usize, f64); 3] = [(1, 3, 2.0), (4, 8, 6.0), (9, 15, 12.0)];
        for (lo, hi, target) in clusters {
            for &l in &eig[lo..=hi] {
                assert!(
                    (l / target - 1.0).abs() < 0.05,
                    "eigenvalue {l} is not within 5% of {target}"
                );
            }
        }
    }

    #[test]
    fn refined_sphere_spectrum_tightens() {
        // 2562 vertices: above the dense limit, so this exercises Lanczos;
        // eigenvalue error contracts to about a quarter of the level-3 one
        let mesh = icosphere(4);
        let lap = mesh.dec_laplacian(0).unwrap();
        assert!(lap.dim() > DENSE_EIG_LIMIT);
        let eig = lap.low_eigenvalues(16, 5);
        assert!(eig[0].abs() < 1e-7);
        let clusters: [(usize, usize, f64); 3] = [(1, 3, 2.0), (4, 8, 6.0), (9, 15, 12.0)];
        for (lo, hi, target) in clusters {
            for &l in &eig[lo..=hi] {
                assert!(
                    (l / target - 1.0).abs() < 0.02,
                    "eigenvalue {l} is not within 2% of {target}"
                );
            }
        }
    }

    #[test]
    fn lanczos_matches_dense_on_a_small_mesh() {
        let mesh = icosphere(1);
        let lap = mesh.dec_laplacian(1).unwrap();
        let dense = lap.all_eigenvalues().unwrap();
        let lanczos = lanczos_smallest(|v| lap.apply(v), lap.dim(), 10, 3);
        for (a, b) in dense.iter().zip(&lanczos) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
