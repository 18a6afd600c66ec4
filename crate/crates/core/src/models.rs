//! Galerkin discretizations of the two model problems on the unit square
//! with a Dirichlet sine basis: operator data, factor-wise propagators, and
//! the twisted right-hand side.
//!
//! Coefficient-space conventions: the Laplacian acts diagonally with
//! eigenvalues `-(pi k)^2`, so `e^{i s Lap}` multiplies coefficient `(k1,k2)`
//! by `exp(-i s (lam_k1 + lam_k2))` with `lam_k = (pi k)^2`. The twisted
//! variable is `v(t) = e^{-i t Lap} u(t)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lowrank::LowRankMatrix;

/// Real matrix with few nonzero entries, stored as triplets.
///
/// The potential factor matrices have O(K) nonzeros; applying them to factor
/// blocks this way costs O(nnz * r) instead of a dense product.
#[derive(Debug, Clone)]
pub struct SparseFactor {
    dim: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseFactor {
    pub fn new(dim: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        Self { dim, triplets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for &(i, j, v) in &self.triplets {
            out[[i, j]] += v;
        }
        out
    }

    pub fn to_dense_complex(&self) -> Array2<C64> {
        self.to_dense().mapv(|x| C64::new(x, 0.0))
    }

    /// `self . x` for a dense block `x` (real coefficients, complex data).
    pub fn apply_left(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, x.ncols()));
        for &(i, j, v) in &self.triplets {
            let src = x.row(j).to_owned();
            let mut dst = out.row_mut(i);
            dst.zip_mut_with(&src, |d, s| *d += s * v);
        }
        out
    }

    /// `x . self^T` for a dense block `x`.
    pub fn apply_right_t(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((x.nrows(), self.dim));
        for &(i, j, v) in &self.triplets {
            let src = x.column(j).to_owned();
            let mut dst = out.column_mut(i);
            dst.zip_mut_with(&src, |d, s| *d += s * v);
        }
        out
    }
}

/// Laplacian eigenvalues `(pi k)^2`, `k = 1..=K`.
pub fn laplace_eigenvalues(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| (std::f64::consts::PI * i as f64).powi(2))
        .collect()
}

// ── Schrödinger model ────────────────────────────────────────────────

/// Semidiscrete Schrödinger equation
/// `i du/dt = (S (x) I + I (x) S + V_n (x) V_m) u` with
/// `V(x1,x2) = cos(n pi x1) cos(m pi x2)`.
#[derive(Debug, Clone)]
pub struct SchrodingerModel {
    k: usize,
    lap_eigs: Vec<f64>,
    potential_terms: Vec<(SparseFactor, SparseFactor)>,
    c_v: f64,
}

/// Galerkin matrix of multiplication by `cos(n pi x)` in the sine basis:
/// `1/2 (delta_{|k1-k2|,n} - delta_{k1+k2,n})` for 1-based `k1, k2`.
pub fn cosine_potential_factor(k: usize, n: usize) -> SparseFactor {
    let mut triplets = Vec::new();
    for k1 in 1..=k {
        for k2 in 1..=k {
            let mut v = 0.0;
            if k1.abs_diff(k2) == n {
                v += 0.5;
            }
            if k1 + k2 == n {
                v -= 0.5;
            }
            if v != 0.0 {
                triplets.push((k1 - 1, k2 - 1, v));
            }
        }
    }
    SparseFactor::new(k, triplets)
}

impl SchrodingerModel {
    /// Model with the product cosine potential of frequencies `(n, m)`.
    pub fn new(k: usize, n: usize, m: usize) -> Result<Self> {
        if k < n.max(m) + 1 {
            return Err(Error::InvalidParameter(format!(
                "K = {k} too small for potential frequencies ({n}, {m})"
            )));
        }
        Ok(Self {
            k,
            lap_eigs: laplace_eigenvalues(k),
            potential_terms: vec![(
                cosine_potential_factor(k, n),
                cosine_potential_factor(k, m),
            )],
            c_v: 1.0,
        })
    }

    /// Free evolution (zero potential). Used by smoke presets and tests.
    pub fn free(k: usize) -> Self {
        Self {
            k,
            lap_eigs: laplace_eigenvalues(k),
            potential_terms: Vec::new(),
            c_v: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn lap_eigs(&self) -> &[f64] {
        &self.lap_eigs
    }

    pub fn potential_terms(&self) -> &[(SparseFactor, SparseFactor)] {
        &self.potential_terms
    }

    pub fn potential_rank(&self) -> usize {
        self.potential_terms.len()
    }

    /// Operator bound of the potential.
    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    /// Normalized initial state `v_K (x) v_K` with `v_K[k] = 1/k`.
    pub fn initial_state(&self) -> LowRankMatrix<C64> {
        let v: Array1<C64> = (1..=self.k)
            .map(|i| C64::new(1.0 / i as f64, 0.0))
            .collect();
        let u0 = LowRankMatrix::from_outer(&v, &v);
        let norm = u0.frobenius_norm();
        u0.scaled(C64::new(1.0 / norm, 0.0))
    }

    /// Spectrally smooth normalized profile `v[k] = e^{-k/2}`, used by
    /// convergence-order studies: the `1/k` experiment data is too rough
    /// for the high-order error constants to be finite.
    pub fn smooth_initial_state(&self) -> LowRankMatrix<C64> {
        let v: Array1<C64> = (1..=self.k)
            .map(|i| C64::new((-0.5 * i as f64).exp(), 0.0))
            .collect();
        let u0 = LowRankMatrix::from_outer(&v, &v);
        let norm = u0.frobenius_norm();
        u0.scaled(C64::new(1.0 / norm, 0.0))
    }

    /// Twisted right-hand side
    /// `F_s v = -i e^{-i s Lap} V e^{i s Lap} v` applied in low-rank form;
    /// the rank grows by at most the factor `rank(V)`.
    pub fn apply_f(&self, s: f64, v: &LowRankMatrix<C64>) -> Result<LowRankMatrix<C64>> {
        if v.nrows() != self.k || v.ncols() != self.k {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.k),
                got: format!("{}x{}", v.nrows(), v.ncols()),
            });
        }
        if v.rank() == 0 || self.potential_terms.is_empty() {
            return Ok(LowRankMatrix::zero(self.k, self.k));
        }
        // e^{i s Lap} scales coefficients by e^{-i s lam}; e^{-i s Lap} by
        // the conjugate phases.
        let minus: Vec<C64> = self.lap_eigs.iter().map(|&l| (-C64::i() * s * l).exp()).collect();
        let plus: Vec<C64> = minus.iter().map(|p| p.conj()).collect();

        let r = v.rank();
        let terms = self.potential_terms.len();
        let mut left = Array2::zeros((self.k, terms * r));
        let mut right = Array2::zeros((self.k, terms * r));
        let mut sigma = Array1::zeros(terms * r);
        for (t, (vl, vr)) in self.potential_terms.iter().enumerate() {
            let mut lb = v.left().clone();
            scale_rows(&mut lb, &minus);
            let mut lb = vl.apply_left(&lb);
            scale_rows(&mut lb, &plus);
            lb.mapv_inplace(|x| x * (-C64::i()));

            let mut rb = v.right().clone();
            scale_rows(&mut rb, &plus);
            let mut rb = vr.apply_left(&rb);
            scale_rows(&mut rb, &minus);

            left.slice_mut(ndarray::s![.., t * r..(t + 1) * r]).assign(&lb);
            right.slice_mut(ndarray::s![.., t * r..(t + 1) * r]).assign(&rb);
            sigma
                .slice_mut(ndarray::s![t * r..(t + 1) * r])
                .assign(v.sigma());
        }
        LowRankMatrix::from_factors(left, sigma, right)
    }

    /// `u(t) = e^{i t Lap} v(t)`: revert the twisting. Norm preserving.
    pub fn untwist(&self, t: f64, v: &LowRankMatrix<C64>) -> Result<LowRankMatrix<C64>> {
        v.apply_diag_exp(&self.lap_eigs, &self.lap_eigs, -C64::i() * t)
    }

    /// `v(t) = e^{-i t Lap} u(t)`.
    pub fn twist(&self, t: f64, u: &LowRankMatrix<C64>) -> Result<LowRankMatrix<C64>> {
        u.apply_diag_exp(&self.lap_eigs, &self.lap_eigs, C64::i() * t)
    }

    // ── dense counterparts (reference solver and oracles) ───────────

    pub fn dense_initial_state(&self) -> Array2<C64> {
        self.initial_state().to_dense()
    }

    pub fn dense_apply_f(&self, s: f64, w: &Array2<C64>) -> Array2<C64> {
        let minus: Vec<C64> = self.lap_eigs.iter().map(|&l| (-C64::i() * s * l).exp()).collect();
        let plus: Vec<C64> = minus.iter().map(|p| p.conj()).collect();
        let mut out = Array2::zeros(w.raw_dim());
        for (vl, vr) in &self.potential_terms {
            let mut p = w.clone();
            scale_rows(&mut p, &minus);
            scale_cols(&mut p, &minus);
            let q = vl.apply_left(&p);
            let mut q = vr.apply_right_t(&q);
            scale_rows(&mut q, &plus);
            scale_cols(&mut q, &plus);
            out.zip_mut_with(&q, |o, x| *o += x * (-C64::i()));
        }
        out
    }

    pub fn dense_untwist(&self, t: f64, v: &Array2<C64>) -> Array2<C64> {
        let ph: Vec<C64> = self.lap_eigs.iter().map(|&l| (-C64::i() * t * l).exp()).collect();
        let mut out = v.clone();
        scale_rows(&mut out, &ph);
        scale_cols(&mut out, &ph);
        out
    }

    /// Full Hamiltonian `S (x) I + I (x) S + V_n (x) V_m` as a dense
    /// `K^2 x K^2` matrix; only sensible for tiny `K`.
    pub fn dense_hamiltonian(&self) -> Array2<C64> {
        let k = self.k;
        let mut h = Array2::zeros((k * k, k * k));
        for k1 in 0..k {
            for k2 in 0..k {
                let idx = k1 * k + k2;
                h[[idx, idx]] += C64::new(self.lap_eigs[k1] + self.lap_eigs[k2], 0.0);
            }
        }
        for (vl, vr) in &self.potential_terms {
            let a = vl.to_dense();
            let b = vr.to_dense();
            for i1 in 0..k {
                for j1 in 0..k {
                    if a[[i1, j1]] == 0.0 {
                        continue;
                    }
                    for i2 in 0..k {
                        for j2 in 0..k {
                            h[[i1 * k + i2, j1 * k + j2]] +=
                                C64::new(a[[i1, j1]] * b[[i2, j2]], 0.0);
                        }
                    }
                }
            }
        }
        h
    }
}

// ── parabolic model ──────────────────────────────────────────────────

/// Semidiscrete anisotropic heat equation
/// `du/dt = (-a (S (x) I + I (x) S) + 2b B (x) B) u + f (x) f`.
#[derive(Debug, Clone)]
pub struct ParabolicModel {
    k: usize,
    a: f64,
    b: f64,
    lap_eigs: Vec<f64>,
    b_mat: Array2<f64>,
    source_vec: Array1<f64>,
    source: LowRankMatrix<f64>,
}

/// First-derivative coupling matrix in the sine basis:
/// `B[k1,k2] = 2 k1 k2 (1 - (-1)^{k1+k2}) / (k2^2 - k1^2)` for `k1 != k2`.
pub fn derivative_coupling_matrix(k: usize) -> Array2<f64> {
    let mut b = Array2::zeros((k, k));
    for k1 in 1..=k {
        for k2 in 1..=k {
            if k1 == k2 || (k1 + k2) % 2 == 0 {
                continue;
            }
            let (k1f, k2f) = (k1 as f64, k2 as f64);
            b[[k1 - 1, k2 - 1]] = 4.0 * k1f * k2f / (k2f * k2f - k1f * k1f);
        }
    }
    b
}

/// Source coefficient vector `f[k] = k` for `1 <= k <= 10`, else `0`.
pub fn default_source(k: usize) -> Array1<f64> {
    Array1::from_iter((1..=k).map(|i| if i <= 10 { i as f64 } else { 0.0 }))
}

impl ParabolicModel {
    pub fn new(k: usize, a: f64, b: f64, source_vec: Array1<f64>) -> Result<Self> {
        // Eigenvalues of the diffusion matrix [[a, b], [b, a]] are a +- b.
        if !(a > b.abs()) {
            return Err(Error::InvalidParameter(format!(
                "ellipticity requires a > |b|, got a = {a}, b = {b}"
            )));
        }
        if source_vec.len() != k {
            return Err(Error::InvalidParameter(format!(
                "source length {} != K = {k}",
                source_vec.len()
            )));
        }
        let source = LowRankMatrix::from_outer(&source_vec, &source_vec);
        Ok(Self {
            k,
            a,
            b,
            lap_eigs: laplace_eigenvalues(k),
            b_mat: derivative_coupling_matrix(k),
            source_vec,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn diffusion(&self) -> f64 {
        self.a
    }

    pub fn coupling(&self) -> f64 {
        self.b
    }

    pub fn lap_eigs(&self) -> &[f64] {
        &self.lap_eigs
    }

    pub fn b_matrix(&self) -> &Array2<f64> {
        &self.b_mat
    }

    /// The rank-one source `f (x) f`.
    pub fn source(&self) -> &LowRankMatrix<f64> {
        &self.source
    }

    /// Source coefficient vector `f`.
    pub fn source_vector(&self) -> &Array1<f64> {
        &self.source_vec
    }

    /// Identity block on frequencies `21..=30` (rank 10).
    pub fn initial_state(&self) -> LowRankMatrix<f64> {
        let (lo, hi) = (21.min(self.k), 30.min(self.k));
        let r = hi.saturating_sub(lo - 1);
        let mut left = Array2::zeros((self.k, r));
        for (c, row) in (lo..=hi).enumerate() {
            left[[row - 1, c]] = 1.0;
        }
        let right = left.clone();
        let sigma = Array1::ones(r);
        LowRankMatrix::from_factors(left, sigma, right).expect("orthonormal block")
    }

    /// Heat semigroup `e^{a tau Lap}`, factor-wise; contraction for `tau >= 0`.
    pub fn propagate(&self, tau: f64, u: &LowRankMatrix<f64>) -> Result<LowRankMatrix<f64>> {
        if tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "propagation over negative time {tau}"
            )));
        }
        if tau == 0.0 {
            return Ok(u.clone());
        }
        u.apply_diag_exp(&self.lap_eigs, &self.lap_eigs, -self.a * tau)
    }

    /// Non-stiff part `G u = 2b B u B^T`; Kronecker rank one.
    pub fn apply_g(&self, u: &LowRankMatrix<f64>) -> Result<LowRankMatrix<f64>> {
        if self.b == 0.0 || u.rank() == 0 {
            return Ok(LowRankMatrix::zero(self.k, self.k));
        }
        u.apply_kron(&self.b_mat, &self.b_mat)
            .map(|m| m.scaled(2.0 * self.b))
    }

    // ── dense counterparts ───────────────────────────────────────────

    pub fn dense_initial_state(&self) -> Array2<f64> {
        self.initial_state().to_dense()
    }

    pub fn dense_source(&self) -> Array2<f64> {
        self.source.to_dense()
    }

    pub fn dense_propagate(&self, tau: f64, u: &Array2<f64>) -> Array2<f64> {
        let e: Vec<f64> = self.lap_eigs.iter().map(|&l| (-self.a * tau * l).exp()).collect();
        let mut out = u.clone();
        for (mut row, &s) in out.rows_mut().into_iter().zip(e.iter()) {
            row.mapv_inplace(|x| x * s);
        }
        for (mut col, &s) in out.columns_mut().into_iter().zip(e.iter()) {
            col.mapv_inplace(|x| x * s);
        }
        out
    }

    pub fn dense_apply_g(&self, u: &Array2<f64>) -> Array2<f64> {
        if self.b == 0.0 {
            return Array2::zeros(u.raw_dim());
        }
        let bu = self.b_mat.dot(u);
        bu.dot(&self.b_mat.t()) * (2.0 * self.b)
    }
}

pub(crate) fn scale_rows(a: &mut Array2<C64>, d: &[C64]) {
    for (mut row, &s) in a.rows_mut().into_iter().zip(d.iter()) {
        row.mapv_inplace(|x| x * s);
    }
}

pub(crate) fn scale_cols(a: &mut Array2<C64>, d: &[C64]) {
    for (mut col, &s) in a.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|x| x * s);
    }
}
