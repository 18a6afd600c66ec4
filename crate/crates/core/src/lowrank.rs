//! Matrices in SVD form `L · diag(sigma) · R^H` with orthonormal factor
//! columns, over real or complex scalars.
//!
//! All operations are value-semantic: inputs are never modified. Rank `0`
//! represents the zero matrix. Every refactorization drops singular values
//! below `NOISE_FLOOR` relative to the largest one, so floating-point noise
//! does not inflate ranks.

use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, Lapack, Scalar, SVDDC, QR};

use crate::error::{Error, Result};

/// Relative floor under which singular values are treated as exact zeros.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Scalar types the low-rank representation is defined over.
pub trait LrScalar: Scalar<Real = f64> + Lapack + Send + Sync + 'static {
    const IS_COMPLEX: bool;
}

impl LrScalar for f64 {
    const IS_COMPLEX: bool = false;
}

impl LrScalar for num_complex::Complex<f64> {
    const IS_COMPLEX: bool = true;
}

/// How a refactorization truncates the singular value tail.
#[derive(Debug, Clone, Copy)]
enum Truncation {
    /// Keep everything above the relative noise floor.
    Exact,
    /// Additionally drop the largest tail with energy `<= delta^2`.
    TailEnergy(f64),
}

/// A matrix stored as `left · diag(sigma) · right^H`.
#[derive(Debug, Clone)]
pub struct LowRankMatrix<T: LrScalar> {
    left: Array2<T>,
    sigma: Array1<f64>,
    right: Array2<T>,
}

impl<T: LrScalar> LowRankMatrix<T> {
    /// The zero matrix of the given shape.
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        Self {
            left: Array2::zeros((nrows, 0)),
            sigma: Array1::zeros(0),
            right: Array2::zeros((ncols, 0)),
        }
    }

    /// Rank-one matrix `u · v^T` (note: transpose, not conjugate transpose).
    pub fn from_outer(u: &Array1<T>, v: &Array1<T>) -> Self {
        let nu = l2_norm(u);
        let nv = l2_norm(v);
        if nu == 0.0 || nv == 0.0 {
            return Self::zero(u.len(), v.len());
        }
        let left = u.mapv(|x| x.div_real(nu));
        let right = v.mapv(|x| x.conj().div_real(nv));
        Self {
            left: into_column(left),
            sigma: Array1::from_elem(1, nu * nv),
            right: into_column(right),
        }
    }

    /// Canonicalize arbitrary factors: the result represents
    /// `left · diag(sigma) · right^H` with orthonormal columns and sorted
    /// singular values. The input factors need not be orthonormal.
    pub fn from_factors(left: Array2<T>, sigma: Array1<f64>, right: Array2<T>) -> Result<Self> {
        if left.ncols() != sigma.len() || right.ncols() != sigma.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("factor width {}", sigma.len()),
                got: format!("{} and {}", left.ncols(), right.ncols()),
            });
        }
        reorthonormalize(left, sigma, right, Truncation::Exact)
    }

    /// Assemble from parts already in canonical form (orthonormal factor
    /// columns, positive nonincreasing sigma). No refactorization is run;
    /// the caller guarantees the invariants.
    pub(crate) fn from_canonical_unchecked(
        left: Array2<T>,
        sigma: Array1<f64>,
        right: Array2<T>,
    ) -> Self {
        debug_assert_eq!(left.ncols(), sigma.len());
        debug_assert_eq!(right.ncols(), sigma.len());
        debug_assert!(sigma.windows(2).into_iter().all(|w| w[0] >= w[1]));
        Self { left, sigma, right }
    }

    /// Factorize a dense matrix, discarding singular values `<= drop_tol`.
    pub fn from_dense(a: &Array2<T>, drop_tol: f64) -> Result<Self> {
        if a.iter().any(|x| !x.re().is_finite() || !x.im().is_finite()) {
            return Err(Error::NonFinite("from_dense input"));
        }
        if drop_tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "drop_tol must be nonnegative, got {drop_tol}"
            )));
        }
        let (u, sv, vh) = a
            .svddc(JobSvd::Some)?
            .into_parts_checked()
            .map_err(Error::Linalg)?;
        let smax = sv.first().copied().unwrap_or(0.0);
        let keep = sv
            .iter()
            .take_while(|&&s| s > drop_tol && s > NOISE_FLOOR * smax && s > 0.0)
            .count();
        Ok(Self {
            left: u.slice(s![.., ..keep]).to_owned(),
            sigma: sv.slice(s![..keep]).to_owned(),
            right: conj_transpose(&vh.slice(s![..keep, ..]).to_owned()),
        })
    }

    pub fn nrows(&self) -> usize {
        self.left.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.right.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn left(&self) -> &Array2<T> {
        &self.left
    }

    pub fn sigma(&self) -> &Array1<f64> {
        &self.sigma
    }

    pub fn right(&self) -> &Array2<T> {
        &self.right
    }

    pub fn max_singular_value(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Dense reconstruction `left · diag(sigma) · right^H`.
    pub fn to_dense(&self) -> Array2<T> {
        if self.rank() == 0 {
            return Array2::zeros((self.nrows(), self.ncols()));
        }
        let scaled = scale_columns(&self.left, &self.sigma);
        scaled.dot(&conj_transpose(&self.right))
    }

    /// Exact sum (up to the noise floor); rank at most `rank(a) + rank(b)`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, T::one())
    }

    /// `self + c · other` in one refactorization.
    pub fn add_scaled(&self, other: &Self, c: T) -> Result<Self> {
        self.add_impl(other, c, Truncation::Exact)
    }

    /// `self + c · other` followed by recompression with tolerance `delta`.
    ///
    /// Fuses the truncation into the single refactorization used for the sum.
    pub fn add_recompressed(&self, other: &Self, c: T, delta: f64) -> Result<Self> {
        self.add_impl(other, c, Truncation::TailEnergy(delta))
    }

    fn add_impl(&self, other: &Self, c: T, trunc: Truncation) -> Result<Self> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nrows(), self.ncols()),
                got: format!("{}x{}", other.nrows(), other.ncols()),
            });
        }
        if other.rank() == 0 || c == T::zero() {
            return Ok(match trunc {
                Truncation::Exact => self.clone(),
                Truncation::TailEnergy(delta) => self.recompress(delta),
            });
        }
        if self.rank() == 0 {
            let scaled = other.scaled(c);
            return Ok(match trunc {
                Truncation::Exact => scaled,
                Truncation::TailEnergy(delta) => scaled.recompress(delta),
            });
        }
        let left = hstack(&self.left, &other.left.mapv(|x| x * c));
        let right = hstack(&self.right, &other.right);
        let sigma = concat1(&self.sigma, &other.sigma);
        reorthonormalize(left, sigma, right, trunc)
    }

    /// `c · self`; the modulus folds into `sigma`, the phase into `left`.
    pub fn scaled(&self, c: T) -> Self {
        if c == T::zero() || self.rank() == 0 {
            return Self::zero(self.nrows(), self.ncols());
        }
        let modulus = c.abs();
        let phase = c.div_real(modulus);
        Self {
            left: self.left.mapv(|x| x * phase),
            sigma: &self.sigma * modulus,
            right: self.right.clone(),
        }
    }

    /// `P · self · Q^T` for dense factors; the rank does not increase.
    pub fn apply_kron(&self, p: &Array2<T>, q: &Array2<T>) -> Result<Self> {
        if p.ncols() != self.nrows() || q.ncols() != self.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("factors for {}x{}", self.nrows(), self.ncols()),
                got: format!("{}x{} and {}x{}", p.nrows(), p.ncols(), q.nrows(), q.ncols()),
            });
        }
        if self.rank() == 0 {
            return Ok(Self::zero(p.nrows(), q.nrows()));
        }
        let left = p.dot(&self.left);
        let right = q.mapv(|x| x.conj()).dot(&self.right);
        reorthonormalize(left, self.sigma.clone(), right, Truncation::Exact)
    }

    /// `diag(exp(z d_left)) · self · diag(exp(z d_right))^T`.
    ///
    /// In real mode, any positive growth factor `Re(z d_k) > 0` is rejected:
    /// the parabolic scheme must never form a backward-heat exponential.
    pub fn apply_diag_exp(&self, d_left: &[f64], d_right: &[f64], z: T) -> Result<Self> {
        if d_left.len() != self.nrows() || d_right.len() != self.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} and {}", self.nrows(), self.ncols()),
                got: format!("{} and {}", d_left.len(), d_right.len()),
            });
        }
        if !T::IS_COMPLEX {
            let grow = d_left
                .iter()
                .chain(d_right.iter())
                .map(|&d| (z * T::from_real(d)).re())
                .fold(0.0_f64, f64::max);
            if grow > 0.0 {
                return Err(Error::UnstableExponential(grow));
            }
        }
        if self.rank() == 0 {
            return Ok(self.clone());
        }
        let el: Vec<T> = d_left.iter().map(|&d| (z * T::from_real(d)).exp()).collect();
        let er: Vec<T> = d_right.iter().map(|&d| (z * T::from_real(d)).exp()).collect();

        let mut left = self.left.clone();
        for (mut row, e) in left.rows_mut().into_iter().zip(el.iter()) {
            row.mapv_inplace(|x| x * *e);
        }
        let mut right = self.right.clone();
        for (mut row, e) in right.rows_mut().into_iter().zip(er.iter()) {
            let ec = e.conj();
            row.mapv_inplace(|x| x * ec);
        }

        // Pure phases keep the factors orthonormal; skip the refactorization.
        let unimodular = el
            .iter()
            .chain(er.iter())
            .all(|e| (e.abs() - 1.0).abs() <= 32.0 * f64::EPSILON);
        if unimodular {
            return Ok(Self {
                left,
                sigma: self.sigma.clone(),
                right,
            });
        }
        reorthonormalize(left, self.sigma.clone(), right, Truncation::Exact)
    }

    /// Soft thresholding: every singular value shrinks by `alpha`, values that
    /// hit zero are dropped together with their factors.
    pub fn soft_threshold(&self, alpha: f64) -> Self {
        debug_assert!(alpha >= 0.0);
        if alpha == 0.0 {
            return self.clone();
        }
        let keep = self.sigma.iter().take_while(|&&s| s > alpha).count();
        Self {
            left: self.left.slice(s![.., ..keep]).to_owned(),
            sigma: self.sigma.slice(s![..keep]).mapv(|s| s - alpha),
            right: self.right.slice(s![.., ..keep]).to_owned(),
        }
    }

    /// Hard thresholding: keep exactly the singular values strictly above
    /// `alpha`, unchanged.
    pub fn hard_threshold(&self, alpha: f64) -> Self {
        let keep = self.sigma.iter().take_while(|&&s| s > alpha).count();
        self.truncate_to_rank(keep)
    }

    /// Minimal-rank truncation with singular value tail energy `<= delta^2`.
    pub fn recompress(&self, delta: f64) -> Self {
        self.truncate_to_rank(rank_for_tail(&self.sigma, delta))
    }

    fn truncate_to_rank(&self, keep: usize) -> Self {
        Self {
            left: self.left.slice(s![.., ..keep]).to_owned(),
            sigma: self.sigma.slice(s![..keep]).to_owned(),
            right: self.right.slice(s![.., ..keep]).to_owned(),
        }
    }

    /// Frobenius inner product `<self, other> = tr(self^H other)`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nrows(), self.ncols()),
                got: format!("{}x{}", other.nrows(), other.ncols()),
            });
        }
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(T::zero());
        }
        // tr(Sa . La^H Lb . Sb . Rb^H Ra), evaluated in the small rank space.
        let p = conj_transpose(&self.left).dot(&other.left);
        let q = conj_transpose(&other.right).dot(&self.right);
        let mut acc = T::zero();
        for i in 0..self.rank() {
            for j in 0..other.rank() {
                acc += p[[i, j]] * q[[j, i]] * T::from_real(self.sigma[i] * other.sigma[j]);
            }
        }
        Ok(acc)
    }

    /// Frobenius distance computed in the rank space, without densification.
    ///
    /// The Gram formula cancels catastrophically when the arguments nearly
    /// coincide; in that regime the distance is taken from the refactorized
    /// difference instead, which is backward stable.
    pub fn frobenius_dist(&self, other: &Self) -> Result<f64> {
        let a2 = self.sigma.iter().map(|s| s * s).sum::<f64>();
        let b2 = other.sigma.iter().map(|s| s * s).sum::<f64>();
        let cross = self.inner(other)?.re();
        let gram = (a2 + b2 - 2.0 * cross).max(0.0);
        if gram > 1e-8 * (a2 + b2) {
            return Ok(gram.sqrt());
        }
        Ok(self.add_scaled(other, -T::one())?.frobenius_norm())
    }

    /// The l2 distance of the (zero-padded) singular value sequences.
    ///
    /// By the Mirsky inequality this never exceeds `frobenius_dist`.
    pub fn mirsky_gap(&self, other: &Self) -> Result<f64> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nrows(), self.ncols()),
                got: format!("{}x{}", other.nrows(), other.ncols()),
            });
        }
        let n = self.rank().max(other.rank());
        let mut acc = 0.0;
        for k in 0..n {
            let a = self.sigma.get(k).copied().unwrap_or(0.0);
            let b = other.sigma.get(k).copied().unwrap_or(0.0);
            acc += (a - b) * (a - b);
        }
        Ok(acc.sqrt())
    }

    /// Verify the representation invariants to the stated tolerances.
    pub fn check_invariants(&self) -> Result<()> {
        let r = self.rank();
        if self.left.ncols() != r || self.right.ncols() != r {
            return Err(Error::InvalidParameter("factor width != rank".into()));
        }
        for w in self.sigma.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidParameter("sigma not nonincreasing".into()));
            }
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter("sigma not strictly positive".into()));
        }
        for (name, f) in [("left", &self.left), ("right", &self.right)] {
            let gram = conj_transpose(f).dot(f);
            for i in 0..r {
                for j in 0..r {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let got = gram[[i, j]];
                    let dev = ((got.re() - want).powi(2) + got.im().powi(2)).sqrt();
                    if dev > 1e-10 {
                        return Err(Error::InvalidParameter(format!(
                            "{name} factor not orthonormal: deviation {dev:.3e} at ({i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Minimal rank `r` such that the tail energy beyond `r` is `<= delta^2`.
pub fn rank_for_tail(sigma: &Array1<f64>, delta: f64) -> usize {
    // Slack of a few ulps so that delta = ||A||_F empties the matrix.
    let budget = delta * delta * (1.0 + 8.0 * f64::EPSILON);
    let mut tail = 0.0;
    let mut keep = sigma.len();
    for &s in sigma.iter().rev() {
        if tail + s * s <= budget {
            tail += s * s;
            keep -= 1;
        } else {
            break;
        }
    }
    keep
}

/// Refactor arbitrary (not necessarily orthonormal) factors into canonical
/// SVD form: QR on both factor blocks, then an SVD of the small core.
fn reorthonormalize<T: LrScalar>(
    left: Array2<T>,
    sigma: Array1<f64>,
    right: Array2<T>,
    trunc: Truncation,
) -> Result<LowRankMatrix<T>> {
    let (m, n) = (left.nrows(), right.nrows());
    if sigma.is_empty() {
        return Ok(LowRankMatrix::zero(m, n));
    }
    let (ql, tl) = left.qr()?;
    let (qr, tr) = right.qr()?;
    let core = scale_columns(&tl, &sigma).dot(&conj_transpose(&tr));
    let (u, sv, vh) = core
        .svddc(JobSvd::Some)?
        .into_parts_checked()
        .map_err(Error::Linalg)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut keep = sv
        .iter()
        .take_while(|&&s| s > NOISE_FLOOR * smax && s > 0.0)
        .count();
    if let Truncation::TailEnergy(delta) = trunc {
        keep = keep.min(rank_for_tail(&sv, delta));
    }
    Ok(LowRankMatrix {
        left: ql.dot(&u.slice(s![.., ..keep])),
        sigma: sv.slice(s![..keep]).to_owned(),
        right: qr.dot(&conj_transpose(&vh.slice(s![..keep, ..]).to_owned())),
    })
}

// ── small dense helpers ──────────────────────────────────────────────

pub(crate) fn conj_transpose<T: LrScalar>(a: &Array2<T>) -> Array2<T> {
    // Built entry-wise so the result is in standard (row-major) layout;
    // mapv on the transposed view would keep column-major order.
    Array2::from_shape_fn((a.ncols(), a.nrows()), |(i, j)| a[[j, i]].conj())
}

pub(crate) fn scale_columns<T: LrScalar>(a: &Array2<T>, d: &Array1<f64>) -> Array2<T> {
    let mut out = a.clone();
    for (mut col, &s) in out.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|x| x.mul_real(s));
    }
    out
}

fn hstack<T: LrScalar>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("row counts match")
}

fn concat1(a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("1-d concat")
}

fn into_column<T: LrScalar>(v: Array1<T>) -> Array2<T> {
    let n = v.len();
    v.into_shape((n, 1)).expect("column reshape")
}

fn l2_norm<T: LrScalar>(v: &Array1<T>) -> f64 {
    v.iter().map(|x| x.square()).sum::<f64>().sqrt()
}

trait IntoPartsChecked<T: LrScalar> {
    fn into_parts_checked(
        self,
    ) -> std::result::Result<(Array2<T>, Array1<f64>, Array2<T>), String>;
}

impl<T: LrScalar> IntoPartsChecked<T>
    for (Option<Array2<T>>, Array1<f64>, Option<Array2<T>>)
{
    fn into_parts_checked(
        self,
    ) -> std::result::Result<(Array2<T>, Array1<f64>, Array2<T>), String> {
        match (self.0, self.2) {
            (Some(u), Some(vh)) => Ok((u, self.1, vh)),
            _ => Err("SVD did not return factors".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_complex::Complex64 as C64;

    fn dense_dist<T: LrScalar>(a: &Array2<T>, b: &Array2<T>) -> f64 {
        (a - b).iter().map(|x| x.square()).sum::<f64>().sqrt()
    }

    #[test]
    fn from_dense_diagonal() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        assert_eq!(lr.rank(), 2);
        assert!((lr.sigma()[0] - 3.0).abs() < 1e-14);
        assert!((lr.sigma()[1] - 1.0).abs() < 1e-14);
        // left/right equal identity up to column signs
        for k in 0..2 {
            let sign = lr.left()[[k, k]].signum();
            assert!((lr.left()[[k, k]] - sign).abs() < 1e-14);
            assert!((lr.right()[[k, k]] - sign).abs() < 1e-14);
        }
        lr.check_invariants().unwrap();
    }

    #[test]
    fn from_dense_zero_matrix() {
        let a = Array2::<f64>::zeros((4, 4));
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        assert_eq!(lr.rank(), 0);
        assert_eq!(lr.frobenius_norm(), 0.0);
    }

    #[test]
    fn from_dense_rejects_non_finite() {
        let a = array![[1.0, f64::NAN], [0.0, 1.0]];
        assert!(LowRankMatrix::from_dense(&a, 0.0).is_err());
    }

    #[test]
    fn add_identity_and_cancellation() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let z = LowRankMatrix::zero(2, 2);
        let sum = lr.add(&z).unwrap();
        for (s, t) in sum.sigma().iter().zip(lr.sigma().iter()) {
            assert!((s - t).abs() < 1e-14);
        }
        let diff = lr.add_scaled(&lr, -1.0).unwrap();
        let diff = diff.recompress(1e-12 * lr.frobenius_norm());
        assert_eq!(diff.rank(), 0);
    }

    #[test]
    fn scale_folds_sign_into_left() {
        let a = array![[3.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let scaled = lr.scaled(-2.0);
        assert!((scaled.sigma()[0] - 6.0).abs() < 1e-14);
        assert!((scaled.left()[[0, 0]] + lr.left()[[0, 0]]).abs() < 1e-14);
        let one = lr.scaled(1.0);
        assert!(dense_dist(&one.to_dense(), &lr.to_dense()) < 1e-14);
    }

    #[test]
    fn scale_by_i_preserves_norm() {
        let a = array![[C64::new(1.0, 2.0), C64::new(0.0, 1.0)], [
            C64::new(-1.0, 0.5),
            C64::new(2.0, 0.0)
        ]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let rot = lr.scaled(C64::i());
        assert!((rot.frobenius_norm() - lr.frobenius_norm()).abs() < 1e-12);
        rot.check_invariants().unwrap();
    }

    #[test]
    fn soft_threshold_direct_formula() {
        let a = Array2::from_diag(&array![3.0, 1.0, 0.5]);
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let st = lr.soft_threshold(1.0);
        assert_eq!(st.rank(), 1);
        assert!((st.sigma()[0] - 2.0).abs() < 1e-14);
        let same = lr.soft_threshold(0.0);
        assert_eq!(same.rank(), 3);
    }

    #[test]
    fn hard_threshold_strict_inequality() {
        let a = Array2::from_diag(&array![3.0, 1.0, 0.5]);
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let ht = lr.hard_threshold(1.0);
        assert_eq!(ht.rank(), 1);
        assert!((ht.sigma()[0] - 3.0).abs() < 1e-14);
        assert_eq!(lr.hard_threshold(0.0).rank(), 3);
    }

    #[test]
    fn recompress_definition_arithmetic() {
        let a = Array2::from_diag(&array![2.0, 1.0, 1.0]);
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let rc = lr.recompress(1.2);
        assert_eq!(rc.rank(), 2);
        let all = lr.recompress(lr.frobenius_norm());
        assert_eq!(all.rank(), 0);
    }

    #[test]
    fn diag_exp_zero_and_phase() {
        let a = array![[C64::new(1.0, 0.0), C64::new(2.0, -1.0)], [
            C64::new(0.0, 3.0),
            C64::new(1.0, 1.0)
        ]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let d = [-(std::f64::consts::PI).powi(2), -4.0 * (std::f64::consts::PI).powi(2)];
        let same = lr.apply_diag_exp(&d, &d, C64::new(0.0, 0.0)).unwrap();
        assert!(dense_dist(&same.to_dense(), &lr.to_dense()) < 1e-13);
        let rot = lr.apply_diag_exp(&d, &d, C64::new(0.0, 0.7)).unwrap();
        assert!((rot.frobenius_norm() - lr.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn diag_exp_rejects_backward_heat() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let d = [-1.0, -4.0];
        assert!(lr.apply_diag_exp(&d, &d, 1.0).is_ok());
        assert!(matches!(
            lr.apply_diag_exp(&d, &d, -1.0),
            Err(Error::UnstableExponential(_))
        ));
    }

    #[test]
    fn frobenius_dist_basics() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        assert!(lr.frobenius_dist(&lr).unwrap() < 1e-12);
        let z = LowRankMatrix::zero(2, 2);
        let d = lr.frobenius_dist(&z).unwrap();
        let sn = lr.sigma().iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((d - sn).abs() < 1e-12);
    }

    #[test]
    fn mirsky_gap_aligned_diagonals() {
        let a = LowRankMatrix::from_dense(&Array2::from_diag(&array![2.0, 1.0]), 0.0).unwrap();
        let b = LowRankMatrix::from_dense(&Array2::from_diag(&array![1.0, 0.5]), 0.0).unwrap();
        let gap = a.mirsky_gap(&b).unwrap();
        let expect = (1.0_f64 + 0.25).sqrt();
        assert!((gap - expect).abs() < 1e-13);
        let dist = a.frobenius_dist(&b).unwrap();
        assert!((gap - dist).abs() < 1e-13);
    }

    #[test]
    fn apply_kron_identity_and_diagonal() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let eye = Array2::eye(2);
        let same = lr.apply_kron(&eye, &eye).unwrap();
        assert!(dense_dist(&same.to_dense(), &a) < 1e-13);

        // rank-1 e_j e_k^T scales by d_j d_k under (diag d, diag d)
        let d = Array2::from_diag(&array![2.0, 5.0]);
        let e = LowRankMatrix::from_outer(&array![1.0, 0.0], &array![0.0, 1.0]);
        let out = e.apply_kron(&d, &d).unwrap();
        assert!((out.to_dense()[[0, 1]] - 10.0).abs() < 1e-13);
    }
}
