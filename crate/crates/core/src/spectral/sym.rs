//! Sparse symmetric positive semidefinite operators and the iterative
//! kernels run on them: Lanczos for the bottom of the spectrum, Krylov
//! action of `exp(-t S)`, conjugate gradients.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SosError};

const PAR_THRESHOLD: usize = 20_000;

#[derive(Clone, Debug)]
pub struct SymOperator {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Off-diagonal magnitudes: `S_ij = -vals`.
    vals: Vec<f64>,
    /// Normalized null vector, when known.
    ground: Option<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= PAR_THRESHOLD {
        a.par_iter().zip(b).map(|(x, y)| x * y).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_THRESHOLD {
        y.par_iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    } else {
        y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    }
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

impl SymOperator {
    pub fn new(diag: Vec<f64>, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>, ground: Option<Vec<f64>>) -> Self {
        let ground = ground.map(|mut g| {
            let n = norm(&g);
            scale(1.0 / n, &mut g);
            g
        });
        SymOperator { diag, row_ptr, cols, vals, ground }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn ground(&self) -> Option<&[f64]> {
        self.ground.as_deref()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    fn row_apply(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let off: f64 = self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&j, v)| v * x[j]).sum();
        self.diag[i] * x[i] - off
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        if self.n() >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_apply(i, x));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_apply(i, x));
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = -self.vals[k];
            }
        }
        m
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn spectral_bound(&self) -> f64 {
        (0..self.n())
            .map(|i| self.diag[i] + self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lanczos for the smallest eigenvalue, restricted to the orthogonal
    /// complement of the ground state when `deflate` is set. No
    /// reorthogonalization: the ground state is projected out at every step
    /// and convergence is judged by the true residual of the Ritz vector,
    /// rebuilt in a second pass.
    pub fn lanczos_lowest(&self, deflate: bool, tol: f64, max_iter: usize) -> Result<LanczosResult> {
        let n = self.n();
        let ground = if deflate {
            Some(self.ground.as_deref().ok_or_else(|| SosError::Precondition("no ground state to deflate".into()))?)
        } else {
            None
        };
        let scale_s = self.spectral_bound().max(1e-300);
        let mut check_every = 10;
        let mut run = LanczosRun::new(self, ground, n);
        let mut result = None;
        while run.k < max_iter.min(n) {
            let breakdown = run.step();
            if breakdown || run.k.is_multiple_of(check_every) || run.k == max_iter.min(n) {
                let (theta, y) = tridiag_lowest(&run.alphas, &run.betas[..run.k - 1]);
                let estimate = run.last_beta * y[run.k - 1].abs();
                if breakdown || estimate <= tol * scale_s {
                    // confirm with the true residual
                    let x = LanczosRun::new(self, ground, n).ritz_vector(&y);
                    let sx = self.apply(&x);
                    let r: f64 = sx.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
                    if r <= 10.0 * tol * scale_s || breakdown {
                        result = Some(LanczosResult { value: theta, residual: r, iterations: run.k, vector: x });
                        break;
                    }
                    check_every = (check_every * 2).min(200);
                }
            }
            if breakdown {
                break;
            }
        }
        result.ok_or_else(|| SosError::Precondition(format!("Lanczos did not converge in {max_iter} steps")))
    }

    /// `exp(-t S) v` by Krylov projection with step control; returns the
    /// vector and the accumulated a posteriori error estimate.
    pub fn expm_action(&self, v: &[f64], t: f64, tol: f64) -> (Vec<f64>, f64) {
        let n = self.n();
        let m = n.min(40);
        let mut w = v.to_vec();
        let mut done = 0.0;
        let mut h = t;
        let mut err_total = 0.0;
        while done < t {
            h = h.min(t - done);
            let beta0 = norm(&w);
            if beta0 == 0.0 {
                break;
            }
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
            let mut q = w.clone();
            scale(1.0 / beta0, &mut q);
            basis.push(q);
            let mut alphas = Vec::new();
            let mut betas = Vec::new();
            let mut tail = 0.0;
            for j in 0..m {
                let mut z = self.apply(&basis[j]);
                alphas.push(dot(&z, &basis[j]));
                for q in &basis {
                    let c = dot(&z, q);
                    axpy(-c, q, &mut z);
                }
                let b = norm(&z);
                if b <= 1e-14 * beta0.max(1.0) || j + 1 == m {
                    tail = b;
                    break;
                }
                betas.push(b);
                scale(1.0 / b, &mut z);
                basis.push(z);
            }
            let k = alphas.len();
            let mut tm = DMatrix::zeros(k, k);
            for i in 0..k {
                tm[(i, i)] = alphas[i];
                if i + 1 < k {
                    tm[(i, i + 1)] = betas[i];
                    tm[(i + 1, i)] = betas[i];
                }
            }
            loop {
                let eig = SymmetricEigen::new(tm.clone());
                let e1 = eig.eigenvectors.row(0).transpose();
                let coeff = DVector::from_iterator(k, (0..k).map(|i| (-h * eig.eigenvalues[i]).exp() * e1[i]));
                let y = &eig.eigenvectors * coeff;
                let err = beta0 * tail * y[k - 1].abs();
                if err <= tol * (h / t) || h < 1e-12 * t {
                    let mut next = vec![0.0; n];
                    for (i, q) in basis.iter().take(k).enumerate() {
                        axpy(beta0 * y[i], q, &mut next);
                    }
                    w = next;
                    done += h;
                    err_total += err;
                    h *= 2.0;
                    break;
                }
                h /= 2.0;
            }
        }
        (w, err_total)
    }

    /// Conjugate gradients for `S x = b` with `S` positive definite.
    pub fn solve_cg(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let n = self.n();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let bnorm = norm(b).max(1e-300);
        let mut rr = dot(&r, &r);
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            if rr.sqrt() <= tol * bnorm {
                return Ok(x);
            }
            self.apply_into(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
        }
        Err(SosError::Precondition(format!("CG did not reach {tol:e} in {max_iter} steps")))
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub vector: Vec<f64>,
}

/// One deterministic Lanczos recurrence, replayable for Ritz vectors.
struct LanczosRun<'a> {
    op: &'a SymOperator,
    ground: Option<&'a [f64]>,
    q: Vec<f64>,
    q_prev: Vec<f64>,
    w: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    last_beta: f64,
    k: usize,
}

impl<'a> LanczosRun<'a> {
    fn new(op: &'a SymOperator, ground: Option<&'a [f64]>, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        if let Some(g) = ground {
            let c = dot(&q, g);
            axpy(-c, g, &mut q);
        }
        let nq = norm(&q);
        scale(1.0 / nq, &mut q);
        LanczosRun { op, ground, q, q_prev: vec![0.0; n], w: vec![0.0; n], alphas: Vec::new(), betas: Vec::new(), last_beta: 0.0, k: 0 }
    }

    /// Returns true on breakdown (invariant subspace found).
    fn step(&mut self) -> bool {
        self.op.apply_into(&self.q, &mut self.w);
        if self.k > 0 {
            let b = self.betas[self.k - 1];
            axpy(-b, &self.q_prev, &mut self.w);
        }
        let a = dot(&self.w, &self.q);
        axpy(-a, &self.q, &mut self.w);
        if let Some(g) = self.ground {
            let c = dot(&self.w, g);
            axpy(-c, g, &mut self.w);
        }
        let b = norm(&self.w);
        self.alphas.push(a);
        self.k += 1;
        self.last_beta = b;
        let scale_s = a.abs().max(self.alphas.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        if b <= 1e-13 * scale_s.max(1e-300) {
            return true;
        }
        self.betas.push(b);
        std::mem::swap(&mut self.q_prev, &mut self.q);
        self.q.copy_from_slice(&self.w);
        scale(1.0 / b, &mut self.q);
        false
    }

    fn ritz_vector(mut self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.q.len()];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, &self.q, &mut x);
            if i + 1 < y.len() {
                self.step();
            }
        }
        let nx = norm(&x);
        scale(1.0 / nx, &mut x);
        x
    }
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `a` and off-diagonal `b` by Sturm bisection, and its eigenvector by
/// inverse iteration.
pub fn tridiag_lowest(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let k = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < k { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            d = a[i] - x - if i > 0 { off / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let width = (hi - lo).abs().max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * width {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    // shifted slightly below so that T - shift is positive definite
    let shift = theta - 1e-10 * width;
    let mut y = vec![1.0; k];
    for _ in 0..3 {
        y = tridiag_solve(a, b, shift, &y);
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= n);
    }
    (theta, y)
}

fn tridiag_solve(a: &[f64], b: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let k = a.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut denom = a[0] - shift;
    c[0] = if k > 1 { b[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..k {
        denom = a[i] - shift - b[i - 1] * c[i - 1];
        if i + 1 < k {
            c[i] = b[i] / denom;
        }
        d[i] = (rhs[i] - b[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; k];
    x[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path graph Laplacian with unit weights.
    fn path(n: usize) -> SymOperator {
        let mut diag = vec![2.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            if i > 0 {
                cols.push(i - 1);
                vals.push(1.0);
            }
            if i + 1 < n {
                cols.push(i + 1);
                vals.push(1.0);
            }
            row_ptr.push(cols.len());
        }
        SymOperator::new(diag, row_ptr, cols, vals, Some(vec![1.0; n]))
    }

    #[test]
    fn tridiagonal_lowest_matches_dense() {
        let a = [2.0, 3.0, 1.0, 4.0, 2.5];
        let b = [0.5, -1.0, 0.7, 0.2];
        let (theta, y) = tridiag_lowest(&a, &b);
        let mut m = DMatrix::zeros(5, 5);
        for i in 0..5 {
            m[(i, i)] = a[i];
            if i < 4 {
                m[(i, i + 1)] = b[i];
                m[(i + 1, i)] = b[i];
            }
        }
        let eig = SymmetricEigen::new(m.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((theta - min).abs() < 1e-12);
        let r = &m * DVector::from_vec(y.clone()) - DVector::from_vec(y) * theta;
        assert!(r.norm() < 1e-8);
    }

    #[test]
    fn lanczos_finds_path_gap() {
        // eigenvalues of the path Laplacian: 2 - 2 cos(pi k / n)
        let n = 500;
        let op = path(n);
        let res = op.lanczos_lowest(true, 1e-10, 20_000).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        assert!((res.value - exact).abs() < 1e-9 * 4.0, "{} vs {exact}", res.value);
    }

    #[test]
    fn expm_action_matches_dense() {
        let op = path(30);
        let v: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let (w, err) = op.expm_action(&v, 3.0, 1e-10);
        let m = op.to_dense();
        let eig = SymmetricEigen::new(m);
        let e = eig.eigenvectors.clone()
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-3.0 * l).exp()))
            * eig.eigenvectors.transpose();
        let exact = e * DVector::from_vec(v);
        for i in 0..30 {
            assert!((w[i] - exact[i]).abs() < 1e-9);
        }
        assert!(err < 1e-10);
    }

    #[test]
    fn cg_solves_shifted_path() {
        let mut op = path(50);
        op.diag.iter_mut().for_each(|d| *d += 0.1);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let x = op.solve_cg(&b, 1e-12, 1000).unwrap();
        let r = op.apply(&x);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-8);
        }
    }
}
