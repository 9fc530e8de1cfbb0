//! Small dense linear algebra and invariant random sampling: frames, SVD,
//! principal angles, wedge norms and the relative position of subspaces.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest side length accepted by [`singular_values`] and [`svd`].
pub const MAX_SVD_DIM: usize = 64;
const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_TOL: f64 = 1e-14;
/// Principal angles below this are treated as zero when counting `dim(A ∩ B)`.
pub const ZERO_ANGLE_TOL: f64 = 1e-8;
const FRAME_TOL: f64 = 1e-12;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|x| x.iter().copied()).collect(),
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        if cols.iter().any(|x| x.len() != r) {
            return Err(Error::Dimension("columns of different lengths".into()));
        }
        let mut m = Mat::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn diag_padded(diag: &[f64], rows: usize, cols: usize) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot form AᵀB for {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(l, i)];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// Determinant by LU with partial pivoting (square matrices only).
    pub fn det(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let mut a = self.data.clone();
        let lu = lu_log_det(&mut a, self.rows);
        Ok(if lu.sign == 0.0 { 0.0 } else { lu.sign * lu.log_abs.exp() })
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of an LU factorization used only for its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuDet {
    /// `ln |det|`; `-inf` when a pivot is exactly zero.
    pub log_abs: f64,
    /// `±1`, or `0` for an exactly singular matrix.
    pub sign: f64,
    /// Smallest pivot magnitude divided by the largest entry of the input.
    pub min_pivot_ratio: f64,
}

impl LuDet {
    /// True when some pivot falls below `rel_tol` times the largest entry.
    pub fn is_degenerate(&self, rel_tol: f64) -> bool {
        self.sign == 0.0 || self.min_pivot_ratio < rel_tol
    }
}

/// In-place LU with partial pivoting on a row-major `n×n` buffer,
/// accumulating the log-magnitude of the determinant.
pub fn lu_log_det(a: &mut [f64], n: usize) -> LuDet {
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return LuDet {
            log_abs: f64::NEG_INFINITY,
            sign: 0.0,
            min_pivot_ratio: 0.0,
        };
    }
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let mut p = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        min_pivot = min_pivot.min(best);
        if best == 0.0 {
            return LuDet {
                log_abs: f64::NEG_INFINITY,
                sign: 0.0,
                min_pivot_ratio: 0.0,
            };
        }
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
            sign = -sign;
        }
        let piv = a[col * n + col];
        if piv < 0.0 {
            sign = -sign;
        }
        log_abs += piv.abs().ln();
        for r in col + 1..n {
            let f = a[r * n + col] / piv;
            if f == 0.0 {
                continue;
            }
            for j in col + 1..n {
                a[r * n + j] -= f * a[col * n + j];
            }
        }
    }
    LuDet {
        log_abs,
        sign,
        min_pivot_ratio: min_pivot / scale,
    }
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose 64-bit stream parameter gives independent
/// substreams for the same seed.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and a different id.
    pub fn substream(&self, stream_id: u64) -> RngStream {
        RngStream::new(self.seed, stream_id)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Uniform unit vector in `R^d`.
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let mut v = vec![0.0; d];
            self.fill_normal(&mut v);
            let n = norm(&v);
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
                return v;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Matrix with i.i.d. standard normal entries.
pub fn sample_gaussian_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> Mat {
    let mut m = Mat::zeros(rows, cols);
    rng.fill_normal(&mut m.data);
    m
}

/// Column-orthonormal `n×k` matrix: a point of the Stiefel manifold that
/// also stands for its column span in `G(k,n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    entries: Mat,
}

impl Frame {
    /// Wraps a matrix after checking `‖FᵀF − I‖_max ≤ 1e-12`.
    pub fn new(entries: Mat) -> Result<Self> {
        let (n, k) = (entries.rows(), entries.cols());
        if k == 0 || k > n {
            return Err(Error::Dimension(format!("frame must have 1 <= k <= n, got {n}x{k}")));
        }
        let gram = entries.t_matmul(&entries)?;
        let err = gram.sub(&Mat::identity(k)).max_abs();
        if err > FRAME_TOL {
            return Err(Error::Dimension(format!(
                "columns are not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Frame { entries })
    }

    /// Orthonormalizes the columns of `m` (Gram–Schmidt, positive-diagonal
    /// convention for `R`).
    pub fn orthonormalize(m: &Mat) -> Result<Self> {
        let (q, _) = qr(m)?;
        Ok(Frame { entries: q })
    }

    /// Span of the listed standard basis vectors of `R^n`.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut m = Mat::zeros(n, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            if a >= n {
                return Err(Error::Dimension(format!("axis {a} outside R^{n}")));
            }
            m[(a, j)] = 1.0;
        }
        Frame::new(m)
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn k(&self) -> usize {
        self.entries.cols()
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.entries.column(j)
    }

    /// Image under an orthogonal map `g` (`n×n`).
    pub fn transform(&self, g: &Mat) -> Result<Frame> {
        Ok(Frame {
            entries: g.matmul(&self.entries)?,
        })
    }

    /// Orthonormal frame of the orthogonal complement.
    pub fn complement(&self) -> Result<Frame> {
        let (n, k) = (self.n(), self.k());
        if k == n {
            return Err(Error::Dimension("complement of the whole space is zero".into()));
        }
        let mut cols: Vec<Vec<f64>> = (0..k).map(|j| self.column(j)).collect();
        for e in 0..n {
            if cols.len() == n {
                break;
            }
            let mut v = vec![0.0; n];
            v[e] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    let d = dot(&v, c);
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                }
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                cols.push(v);
            }
        }
        Frame::new(Mat::from_columns(&cols[k..])?)
    }
}

/// Thin QR by Gram–Schmidt with one reorthogonalization pass; `R` has a
/// positive diagonal. Fails on (numerically) rank-deficient input.
pub fn qr(m: &Mat) -> Result<(Mat, Mat)> {
    let (n, k) = (m.rows(), m.cols());
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("QR needs 1 <= cols <= rows, got {n}x{k}")));
    }
    let scale = m.frobenius_norm();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = Mat::zeros(k, k);
    for j in 0..k {
        let mut v = m.column(j);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d = dot(qi, &v);
                r[(i, j)] += d;
                v.iter_mut().zip(qi).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nv = norm(&v);
        if !(nv > 1e-13 * scale) {
            return Err(Error::Numerical(format!("column {j} is linearly dependent")));
        }
        r[(j, j)] = nv;
        v.iter_mut().for_each(|x| *x /= nv);
        q.push(v);
    }
    Ok((Mat::from_columns(&q)?, r))
}

/// Uniform (O(n)-invariant) random `k`-plane of `R^n`.
pub fn sample_uniform_subspace(rng: &mut RngStream, n: usize, k: usize) -> Result<Frame> {
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    loop {
        let g = sample_gaussian_matrix(rng, n, k);
        if let Ok(f) = Frame::orthonormalize(&g) {
            return Ok(f);
        }
    }
}

/// Haar-distributed orthogonal `n×n` matrix.
pub fn random_orthogonal(rng: &mut RngStream, n: usize) -> Mat {
    sample_uniform_subspace(rng, n, n)
        .expect("n >= 1")
        .entries
}

/// Singular value decomposition `M = U diag(S) Vᵀ` (thin).
#[derive(Debug, Clone)]
pub struct Svd {
    /// `p×r` with orthonormal columns, `r = min(p, q)`.
    pub u: Mat,
    /// Descending singular values.
    pub s: Vec<f64>,
    /// `q×r` with orthonormal columns.
    pub v: Mat,
}

/// One-sided Jacobi SVD for matrices up to 64×64.
pub fn svd(m: &Mat) -> Result<Svd> {
    let (p, q) = (m.rows(), m.cols());
    if p == 0 || q == 0 || p > MAX_SVD_DIM || q > MAX_SVD_DIM {
        return Err(Error::Dimension(format!(
            "SVD supports 1..={MAX_SVD_DIM} rows and columns, got {p}x{q}"
        )));
    }
    if p < q {
        let t = svd(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    // Column-major working copies: a[j] is column j.
    let mut a: Vec<Vec<f64>> = (0..q).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            e
        })
        .collect();
    // Columns below this squared norm are numerically zero; rotating them
    // against each other only shuffles roundoff and never converges.
    let frob2: f64 = a.iter().map(|c| dot(c, c)).sum();
    let floor = (1e-30 * frob2).max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if alpha <= floor || beta <= floor || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let mut order: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut u_cols = Vec::with_capacity(q);
    let mut v_cols = Vec::with_capacity(q);
    let mut s = Vec::with_capacity(q);
    for &(sigma, j) in &order {
        s.push(sigma);
        v_cols.push(v[j].clone());
        u_cols.push(if sigma > 0.0 {
            a[j].iter().map(|x| x / sigma).collect()
        } else {
            vec![0.0; p]
        });
    }
    complete_zero_columns(&mut u_cols, &s);
    Ok(Svd {
        u: Mat::from_columns(&u_cols)?,
        s,
        v: Mat::from_columns(&v_cols)?,
    })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

// Replaces the left singular vectors of zero singular values by an
// orthonormal completion so that U keeps orthonormal columns.
fn complete_zero_columns(u: &mut [Vec<f64>], s: &[f64]) {
    let p = u.first().map_or(0, |c| c.len());
    let smax = s.first().copied().unwrap_or(0.0);
    let mut axis = 0;
    for j in 0..u.len() {
        if s[j] > 1e-300 && s[j] > 1e-15 * smax {
            continue;
        }
        while axis < p {
            let mut v = vec![0.0; p];
            v[axis] = 1.0;
            axis += 1;
            for _ in 0..2 {
                for (i, c) in u.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let d = dot(&v, c);
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                }
            }
            let nv = norm(&v);
            if nv > 1e-6 {
                u[j] = v.iter().map(|x| x / nv).collect();
                break;
            }
        }
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    Ok(svd(m)?.s)
}

/// Principal angles `0 ≤ θ_1 ≤ … ≤ θ_r ≤ π/2`, `r = min(k, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
}

impl PrincipalAngles {
    /// Dimension of the intersection: the number of angles below [`ZERO_ANGLE_TOL`].
    pub fn intersection_dim(&self) -> usize {
        self.angles.iter().filter(|&&t| t < ZERO_ANGLE_TOL).count()
    }

    pub fn sin_product(&self) -> f64 {
        self.angles.iter().map(|t| t.sin()).product()
    }
}

/// Principal angles between the spans of two frames: arccos of the clamped
/// singular values of `AᵀB`, with small angles refined from their sines.
pub fn principal_angles(a: &Frame, b: &Frame) -> Result<PrincipalAngles> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let c = a.matrix().t_matmul(b.matrix())?;
    let cosines = singular_values(&c)?;
    // arccos cannot resolve angles below ~1e-8, so small angles come from the
    // sines: the singular values of X − Y YᵀX for the smaller frame X.
    let (x, y) = if a.k() <= b.k() { (a, b) } else { (b, a) };
    let yx = y.matrix().t_matmul(x.matrix())?;
    let resid = x.matrix().sub(&y.matrix().matmul(&yx)?);
    let mut sines = singular_values(&resid)?;
    sines.reverse();
    let angles = cosines
        .iter()
        .zip(&sines)
        .map(|(&co, &si)| {
            if si < std::f64::consts::FRAC_1_SQRT_2 {
                si.clamp(0.0, 1.0).asin()
            } else {
                co.clamp(0.0, 1.0).acos().min(FRAC_PI_2)
            }
        })
        .collect();
    Ok(PrincipalAngles { angles })
}

/// `‖v_1 ∧ … ∧ v_s‖ = sqrt(det Gram)`; zero for dependent or too many vectors.
pub fn wedge_norm(vectors: &[Vec<f64>]) -> f64 {
    let s = vectors.len();
    if s == 0 {
        return 1.0;
    }
    let d = vectors[0].len();
    if s > d {
        return 0.0;
    }
    let mut gram = vec![0.0; s * s];
    for i in 0..s {
        for j in i..s {
            let g = dot(&vectors[i], &vectors[j]);
            gram[i * s + j] = g;
            gram[j * s + i] = g;
        }
    }
    let lu = lu_log_det(&mut gram, s);
    if lu.sign <= 0.0 {
        0.0
    } else {
        (0.5 * lu.log_abs).exp()
    }
}

/// Relative position `σ(V, W)`: the wedge norm of the union of orthonormal
/// bases of `V` and `W`.
pub fn sigma_rel(v: &Frame, w: &Frame) -> Result<f64> {
    sigma_many(&[v, w])
}

/// `σ(V_1, …, V_s)` for frames whose dimensions add up to at most `n`.
pub fn sigma_many(frames: &[&Frame]) -> Result<f64> {
    let Some(first) = frames.first() else {
        return Ok(1.0);
    };
    let n = first.n();
    if frames.iter().any(|f| f.n() != n) {
        return Err(Error::Dimension("frames live in different ambient spaces".into()));
    }
    let total: usize = frames.iter().map(|f| f.k()).sum();
    if total > n {
        return Err(Error::Dimension(format!(
            "dimensions add up to {total} > ambient {n}"
        )));
    }
    let cols: Vec<Vec<f64>> = frames
        .iter()
        .flat_map(|f| (0..f.k()).map(move |j| f.column(j)))
        .collect();
    Ok(wedge_norm(&cols).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gaussian_moments() {
        let mut rng = RngStream::new(7, 0);
        let n = 1_000_000;
        let m = sample_gaussian_matrix(&mut rng, 1000, 1000);
        let mean = m.as_slice().iter().sum::<f64>() / n as f64;
        let var = m.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn gaussian_column_norm_mean_is_rho2() {
        let mut rng = RngStream::new(11, 3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let g = sample_gaussian_matrix(&mut rng, 2, 1);
            let r = g.frobenius_norm();
            s += r;
            s2 += r * r;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - crate::specfun::rho(2)).abs() < 3.0 * se);
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let a: Vec<f64> = (0..5).map({
            let mut r = RngStream::new(1, 2);
            move |_| r.normal()
        }).collect();
        let b: Vec<f64> = (0..5).map({
            let mut r = RngStream::new(1, 2);
            move |_| r.normal()
        }).collect();
        let c: Vec<f64> = (0..5).map({
            let mut r = RngStream::new(1, 3);
            move |_| r.normal()
        }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn full_frame_is_orthogonal() {
        let mut rng = RngStream::new(5, 0);
        let f = sample_uniform_subspace(&mut rng, 3, 3).unwrap();
        assert_relative_eq!(f.matrix().det().unwrap().abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qr_positive_diagonal_reconstructs() {
        let mut rng = RngStream::new(9, 0);
        let m = sample_gaussian_matrix(&mut rng, 6, 4);
        let (q, r) = qr(&m).unwrap();
        for i in 0..4 {
            assert!(r[(i, i)] > 0.0);
        }
        assert!(q.matmul(&r).unwrap().sub(&m).max_abs() < 1e-12);
    }

    #[test]
    fn svd_examples() {
        assert_eq!(singular_values(&Mat::identity(3)).unwrap(), vec![1.0, 1.0, 1.0]);
        let d = Mat::diag_padded(&[1.0, 3.0, 2.0], 3, 5);
        let s = singular_values(&d).unwrap();
        assert_eq!(s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_norm_and_det_identities() {
        let mut rng = RngStream::new(13, 0);
        for _ in 0..50 {
            let m = sample_gaussian_matrix(&mut rng, 4, 4);
            let s = singular_values(&m).unwrap();
            let fro2 = m.frobenius_norm().powi(2);
            assert_relative_eq!(s.iter().map(|x| x * x).sum::<f64>(), fro2, max_relative = 1e-10);
            assert_relative_eq!(s.iter().product::<f64>(), m.det().unwrap().abs(), max_relative = 1e-9);
        }
    }

    #[test]
    fn svd_reconstructs_rectangular_and_rank_deficient() {
        let mut rng = RngStream::new(17, 0);
        for (p, q) in [(5, 3), (3, 5), (6, 6), (1, 4)] {
            let mut m = sample_gaussian_matrix(&mut rng, p, q);
            if p == 6 {
                for i in 0..p {
                    m[(i, 5)] = m[(i, 0)] + m[(i, 1)];
                }
            }
            let d = svd(&m).unwrap();
            let r = d.s.len();
            let mut us = d.u.clone();
            for i in 0..p {
                for j in 0..r {
                    us[(i, j)] *= d.s[j];
                }
            }
            let back = us.matmul(&d.v.transpose()).unwrap();
            assert!(back.sub(&m).max_abs() < 1e-12, "{p}x{q}");
            let utu = d.u.t_matmul(&d.u).unwrap();
            assert!(utu.sub(&Mat::identity(r)).max_abs() < 1e-12);
            let vtv = d.v.t_matmul(&d.v).unwrap();
            assert!(vtv.sub(&Mat::identity(r)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn svd_rejects_large() {
        assert!(svd(&Mat::zeros(65, 2)).is_err());
    }

    #[test]
    fn principal_angle_examples() {
        let a = Frame::coordinate(4, &[0, 1]).unwrap();
        let b = Frame::coordinate(4, &[0, 2]).unwrap();
        let pa = principal_angles(&a, &a).unwrap();
        assert!(pa.angles.iter().all(|t| t.abs() < 1e-7));
        let pb = principal_angles(&a, &b).unwrap();
        assert!(pb.angles[0].abs() < 1e-12);
        assert!((pb.angles[1] - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(pb.intersection_dim(), 1);
        let c = Frame::coordinate(5, &[0]).unwrap();
        assert!(principal_angles(&a, &c).is_err());
    }

    #[test]
    fn principal_angles_from_constructed_bases() {
        // a_i = e_i, b_i = cos θ_i e_i + sin θ_i e_{k+i}, then rotate everything.
        let mut rng = RngStream::new(19, 0);
        let thetas: [f64; 3] = [0.2, 0.7, 1.3];
        let n = 7;
        let mut am = Mat::zeros(n, 3);
        let mut bm = Mat::zeros(n, 3);
        for (i, t) in thetas.iter().enumerate() {
            am[(i, i)] = 1.0;
            bm[(i, i)] = t.cos();
            bm[(3 + i, i)] = t.sin();
        }
        let g = random_orthogonal(&mut rng, n);
        let a = Frame::new(am).unwrap().transform(&g).unwrap();
        let b = Frame::new(bm).unwrap().transform(&g).unwrap();
        let pa = principal_angles(&a, &b).unwrap();
        for (x, y) in pa.angles.iter().zip(thetas) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn wedge_norm_examples() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        assert_relative_eq!(wedge_norm(&[e1.clone(), e2]), 1.0, epsilon = 1e-15);
        assert_eq!(wedge_norm(&[e1.clone(), e1.clone()]), 0.0);
        let phi: f64 = 0.37;
        let u = vec![phi.cos(), phi.sin(), 0.0];
        assert_relative_eq!(wedge_norm(&[e1, u]), phi.sin(), epsilon = 1e-12);
    }

    #[test]
    fn sigma_examples() {
        let v = Frame::coordinate(4, &[0, 1]).unwrap();
        let w = Frame::coordinate(4, &[2, 3]).unwrap();
        let x = Frame::coordinate(4, &[1, 2]).unwrap();
        assert_relative_eq!(sigma_rel(&v, &w).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(sigma_rel(&v, &x).unwrap(), 0.0);
        let big = Frame::coordinate(4, &[0, 1, 2]).unwrap();
        assert!(sigma_rel(&big, &w).is_err());
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = RngStream::new(23, 0);
        let f = sample_uniform_subspace(&mut rng, 6, 2).unwrap();
        let c = f.complement().unwrap();
        assert_eq!(c.k(), 4);
        assert!(f.matrix().t_matmul(c.matrix()).unwrap().max_abs() < 1e-12);
    }

    fn seeds() -> impl Strategy<Value = u64> {
        any::<u64>()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sampled_frames_are_orthonormal(seed in seeds(), n in 1usize..9, k in 1usize..9) {
            prop_assume!(k <= n);
            let mut rng = RngStream::new(seed, 0);
            let f = sample_uniform_subspace(&mut rng, n, k).unwrap();
            let g = f.matrix().t_matmul(f.matrix()).unwrap();
            prop_assert!(g.sub(&Mat::identity(k)).max_abs() <= 1e-12);
        }

        #[test]
        fn principal_angles_symmetric_and_invariant(seed in seeds(), n in 2usize..8, k in 1usize..4) {
            prop_assume!(k <= n);
            let mut rng = RngStream::new(seed, 1);
            let a = sample_uniform_subspace(&mut rng, n, k).unwrap();
            let b = sample_uniform_subspace(&mut rng, n, k).unwrap();
            let ab = principal_angles(&a, &b).unwrap();
            let ba = principal_angles(&b, &a).unwrap();
            let g = random_orthogonal(&mut rng, n);
            let gab = principal_angles(&a.transform(&g).unwrap(), &b.transform(&g).unwrap()).unwrap();
            for i in 0..k {
                prop_assert!((ab.angles[i] - ba.angles[i]).abs() < 1e-10);
                prop_assert!((ab.angles[i] - gab.angles[i]).abs() < 1e-10);
                if i > 0 {
                    prop_assert!(ab.angles[i] >= ab.angles[i - 1]);
                }
            }
        }

        #[test]
        fn sigma_equals_sine_product(seed in seeds(), k in 1usize..4, l in 1usize..4, extra in 0usize..3) {
            let n = k + l + extra;
            let mut rng = RngStream::new(seed, 2);
            let v = sample_uniform_subspace(&mut rng, n, k).unwrap();
            let w = sample_uniform_subspace(&mut rng, n, l).unwrap();
            let s = sigma_rel(&v, &w).unwrap();
            let p = principal_angles(&v, &w).unwrap().sin_product();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - p).abs() < 1e-9, "{} vs {}", s, p);
        }

        #[test]
        fn sigma_lines_is_abs_sine(seed in seeds(), n in 2usize..6) {
            let mut rng = RngStream::new(seed, 3);
            let u = rng.unit_vector(n);
            let v = rng.unit_vector(n);
            let c = dot(&u, &v).clamp(-1.0, 1.0);
            let fu = Frame::new(Mat::from_columns(&[u]).unwrap()).unwrap();
            let fv = Frame::new(Mat::from_columns(&[v]).unwrap()).unwrap();
            prop_assert!((sigma_rel(&fu, &fv).unwrap() - (1.0 - c * c).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn sigma_many_permutation_and_isometry(seed in seeds()) {
            let mut rng = RngStream::new(seed, 4);
            let a = sample_uniform_subspace(&mut rng, 6, 1).unwrap();
            let b = sample_uniform_subspace(&mut rng, 6, 2).unwrap();
            let c = sample_uniform_subspace(&mut rng, 6, 3).unwrap();
            let s = sigma_many(&[&a, &b, &c]).unwrap();
            let t = sigma_many(&[&c, &a, &b]).unwrap();
            let g = random_orthogonal(&mut rng, 6);
            let (ga, gb, gc) = (a.transform(&g).unwrap(), b.transform(&g).unwrap(), c.transform(&g).unwrap());
            let u = sigma_many(&[&ga, &gb, &gc]).unwrap();
            prop_assert!((s - t).abs() < 1e-10);
            prop_assert!((s - u).abs() < 1e-10);
        }
    }
}
