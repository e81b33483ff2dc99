//! Small dense linear-algebra helpers shared across the crate: lexicographic
//! multi-indices for form components, compound (exterior-power) matrices and
//! their infinitesimal counterparts, a scaling-and-squaring matrix
//! exponential, metric Gram-Schmidt, deterministic pairwise reduction, and
//! Gauss-Legendre nodes.
//!
//! Conventions: components of a j-form live in the basis `e^I = e^{i1} ^ ... ^
//! e^{ij}` with `I` a strictly increasing multi-index, ordered
//! lexicographically. Mixed tensors in `T* (x) Lambda^j` are flattened
//! cotangent-slot-major: slot `(c, I)` sits at `c * binom(m, j) + pos(I)`.

use nalgebra::{DMatrix, DVector};

/// binom(m, j) without overflow for the small m used here.
pub fn binom(m: usize, j: usize) -> usize {
    if j > m {
        return 0;
    }
    let j = j.min(m - j);
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..j {
        num *= m - i;
        den *= i + 1;
    }
    num / den
}

/// All strictly increasing multi-indices of length `j` in `0..m`,
/// lexicographically ordered. `j = 0` yields the single empty index.
pub fn multi_indices(m: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binom(m, j));
    let mut cur = Vec::with_capacity(j);
    fn rec(m: usize, j: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, j, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(m, j, 0, &mut cur, &mut out);
    out
}

/// Position of a strictly increasing multi-index in the lexicographic order.
pub fn multi_index_position(m: usize, index: &[usize]) -> usize {
    let j = index.len();
    let mut pos = 0usize;
    let mut prev = 0usize; // exclusive lower bound for the current slot
    for (slot, &i) in index.iter().enumerate() {
        for skipped in prev..i {
            pos += binom(m - skipped - 1, j - slot - 1);
        }
        prev = i + 1;
    }
    pos
}

/// Sign of inserting `a` into the increasing multi-index `rest` (sorted,
/// `a` not contained), i.e. the parity of moving `e^a` past the entries
/// smaller than it in `e^a ^ e^rest` when re-sorting to increasing order.
fn insertion_sign(rest: &[usize], a: usize) -> f64 {
    let before = rest.iter().filter(|&&r| r < a).count();
    if before % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// j-th compound matrix of `o`: the induced matrix of `Lambda^j` on form
/// components. Entry (I, J) is the minor of `o` with rows I and columns J.
/// Multiplicative: `compound(a*b) = compound(a) * compound(b)`, and compounds
/// of orthogonal matrices are orthogonal.
pub fn compound_matrix(o: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let m = o.nrows();
    assert_eq!(m, o.ncols(), "compound of a square matrix");
    let idx = multi_indices(m, j);
    let b = idx.len();
    let mut out = DMatrix::zeros(b, b);
    let mut minor = DMatrix::zeros(j.max(1), j.max(1));
    for (ip, i_rows) in idx.iter().enumerate() {
        for (jp, j_cols) in idx.iter().enumerate() {
            let det = if j == 0 {
                1.0
            } else {
                for (r, &ir) in i_rows.iter().enumerate() {
                    for (c, &jc) in j_cols.iter().enumerate() {
                        minor[(r, c)] = o[(ir, jc)];
                    }
                }
                minor.view((0, 0), (j, j)).into_owned().determinant()
            };
            out[(ip, jp)] = det;
        }
    }
    out
}

/// Derivation (Lie-algebra) action of `a` on `Lambda^j` components: the
/// derivative at 0 of `compound(exp(t a), j)`. For antisymmetric `a` this is
/// the curvature-style induced action on j-form components.
pub fn induced_derivation(a: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let m = a.nrows();
    assert_eq!(m, a.ncols());
    let idx = multi_indices(m, j);
    let b = idx.len();
    let mut out = DMatrix::zeros(b, b);
    for (jp, cols) in idx.iter().enumerate() {
        // act on each factor of e^{cols} in turn
        for (slot, &k) in cols.iter().enumerate() {
            for r in 0..m {
                // replace factor e^k by a[(r, k)] e^r
                if a[(r, k)] == 0.0 {
                    continue;
                }
                let mut rest: Vec<usize> = cols.to_vec();
                rest.remove(slot);
                if rest.contains(&r) {
                    continue; // wedge with a repeated factor vanishes
                }
                let sign_remove = if slot % 2 == 0 { 1.0 } else { -1.0 };
                let sign_insert = insertion_sign(&rest, r);
                let mut target = rest;
                target.push(r);
                target.sort_unstable();
                let ip = multi_index_position(m, &target);
                out[(ip, jp)] += sign_remove * sign_insert * a[(r, k)];
            }
        }
    }
    out
}

/// Matrix of `e^b ^ i_{e_a}` on `Lambda^j` components (wedge after interior
/// product, in an orthonormal frame).
pub fn wedge_insert(m: usize, j: usize, b: usize, a: usize) -> DMatrix<f64> {
    let idx = multi_indices(m, j);
    let n = idx.len();
    let mut out = DMatrix::zeros(n, n);
    for (jp, cols) in idx.iter().enumerate() {
        let Some(slot) = cols.iter().position(|&k| k == a) else {
            continue;
        };
        let sign_remove = if slot % 2 == 0 { 1.0 } else { -1.0 };
        let mut rest: Vec<usize> = cols.to_vec();
        rest.remove(slot);
        if rest.contains(&b) {
            continue;
        }
        let sign_insert = insertion_sign(&rest, b);
        let mut target = rest;
        target.push(b);
        target.sort_unstable();
        let ip = multi_index_position(m, &target);
        out[(ip, jp)] += sign_remove * sign_insert;
    }
    out
}

/// Scaling-and-squaring matrix exponential. Accurate to near machine
/// precision for the small well-scaled matrices used in the transport ODEs.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a.iter().map(|x| x.abs()).fold(0.0f64, f64::max) * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s as i32);
    // Taylor series on the scaled matrix; converges fast since |B| <= 1/2.
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if term.amax() < 1e-19 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Orthonormalize the columns of `frame` with respect to the metric `g`
/// (modified Gram-Schmidt in the g-inner product). Returns the largest
/// correction applied to any column, a measure of accumulated frame drift.
pub fn gram_schmidt_metric(frame: &mut DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let m = frame.nrows();
    let k = frame.ncols();
    let mut drift = 0.0f64;
    for c in 0..k {
        let mut col = frame.column(c).into_owned();
        let orig = col.clone();
        for p in 0..c {
            let prev = frame.column(p);
            let proj = (g * &col).dot(&prev.into_owned());
            col -= proj * prev;
        }
        let norm2 = (g * &col).dot(&col);
        assert!(
            norm2 > 0.0,
            "degenerate frame in Gram-Schmidt (norm^2 = {norm2})"
        );
        col /= norm2.sqrt();
        drift = drift.max((&col - &orig).amax());
        for r in 0..m {
            frame[(r, c)] = col[r];
        }
    }
    drift
}

/// Deterministic pairwise (tree) sum of scalars. The reduction order depends
/// only on the slice length, never on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Deterministic pairwise sum of equal-length vectors.
pub fn pairwise_sum_vectors(xs: &[DVector<f64>]) -> DVector<f64> {
    assert!(!xs.is_empty(), "pairwise sum of an empty vector list");
    match xs.len() {
        1 => xs[0].clone(),
        n if n <= 8 => {
            let mut acc = xs[0].clone();
            for x in &xs[1..] {
                acc += x;
            }
            acc
        }
        n => {
            let mid = n / 2;
            pairwise_sum_vectors(&xs[..mid]) + pairwise_sum_vectors(&xs[mid..])
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p_dp(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_p_dp(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and derivative at x, by upward recurrence.
pub fn legendre_p_dp(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from (x^2 - 1) P_n' = n (x P_n - P_{n-1})
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    } else {
        // endpoint limit: P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 - 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p1, dp)
}

/// Least-squares solution of `a x = b` via SVD.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-12)
        .expect("SVD least squares")
}
