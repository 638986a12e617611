//! Real least-squares kernels: a row-streaming Householder QR and a
//! one-sided Jacobi SVD of the resulting triangle.

use rayon::prelude::*;

use super::linalg::eigh;
use super::operator::{Operator, C64};

/// Accumulates `R` of `[A | b]` block by block, never storing `A`.
/// The last column carries the right-hand side, so after all blocks
/// `R[..n, n] = Qᵀb` and `|R[n, n]|` is the least-squares residual norm.
#[derive(Clone, Debug)]
pub struct StreamingQr {
    cols: usize,
    rows_seen: usize,
    r: Vec<f64>,
}

impl StreamingQr {
    /// `unknowns` excludes the right-hand-side column.
    pub fn new(unknowns: usize) -> Self {
        let cols = unknowns + 1;
        Self { cols, rows_seen: 0, r: vec![0.0; cols * cols] }
    }

    pub fn unknowns(&self) -> usize {
        self.cols - 1
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Folds a block of `rows` rows given column-major as
    /// `block[j * rows + i]`, with `cols = unknowns + 1` columns.
    pub fn push_block(&mut self, rows: usize, mut block: Vec<f64>) {
        let n1 = self.cols;
        assert_eq!(block.len(), rows * n1, "block must be rows x (unknowns + 1)");
        if rows == 0 {
            return;
        }
        self.rows_seen += rows;
        for k in 0..n1 {
            let (head, tail) = block.split_at_mut((k + 1) * rows);
            let xs = &mut head[k * rows..];
            let sq: f64 = xs.iter().map(|x| x * x).sum();
            if sq == 0.0 {
                continue;
            }
            let x0 = self.r[k * n1 + k];
            let norm = (x0 * x0 + sq).sqrt();
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let v0 = x0 - alpha;
            let tau = 2.0 / (v0 * v0 + sq);
            let xs: &[f64] = xs;
            let rk = &mut self.r[k * n1 + k + 1..(k + 1) * n1];
            rk.par_iter_mut().zip(tail.par_chunks_mut(rows)).for_each(|(rkj, col)| {
                let s = v0 * *rkj + xs.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>();
                let f = tau * s;
                *rkj -= f * v0;
                for (c, x) in col.iter_mut().zip(xs) {
                    *c -= f * x;
                }
            });
            self.r[k * n1 + k] = alpha;
            head[k * rows..].iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Upper-triangular `R` of the coefficient part, row-major `n × n`.
    pub fn r_matrix(&self) -> Vec<f64> {
        let n = self.unknowns();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            out[i * n..(i + 1) * n].copy_from_slice(&self.r[i * self.cols..i * self.cols + n]);
        }
        out
    }

    /// `Qᵀb` restricted to the first `n` rows.
    pub fn qtb(&self) -> Vec<f64> {
        (0..self.unknowns()).map(|i| self.r[i * self.cols + self.unknowns()]).collect()
    }

    pub fn residual_norm(&self) -> f64 {
        let n = self.unknowns();
        self.r[n * self.cols + n].abs()
    }
}

/// Thin SVD `A = U Σ Vᵀ` of a square real matrix, stored as `G = U Σ`
/// (column-major) and `V`.
#[derive(Clone, Debug)]
pub struct JacobiSvd {
    n: usize,
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Columns of `U Σ`, column-major, in the order of `values`.
    g: Vec<f64>,
    /// Right singular vectors, column-major, in the order of `values`.
    v: Vec<f64>,
    pub sweeps: usize,
}

impl JacobiSvd {
    /// `a` is row-major `n × n`.
    ///
    /// The columns are first rotated by the eigenvectors of `AᵀA`, which
    /// leaves them nearly orthogonal; the Jacobi sweeps then restore full
    /// relative accuracy for the small singular values.
    pub fn new(a: &[f64], n: usize) -> Self {
        assert_eq!(a.len(), n * n);
        let ata = Operator::from_fn(n, n, |i, j| C64::new((0..n).map(|k| a[k * n + i] * a[k * n + j]).sum(), 0.0));
        let v0 = eigh(&ata.hermitian_part()).map(|e| e.vectors).unwrap_or_else(|_| Operator::identity(n));
        // v column-major: v[j*n + i] = V0[i, j]
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[j * n + i] = v0[(i, j)].re;
            }
        }
        let mut g = vec![0.0; n * n];
        g.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
            let vj = &v[j * n..(j + 1) * n];
            for (i, gi) in col.iter_mut().enumerate() {
                *gi = a[i * n..(i + 1) * n].iter().zip(vj).map(|(x, y)| x * y).sum();
            }
        });
        let mut svd = Self { n, values: Vec::new(), g, v, sweeps: 0 };
        svd.sweep_until_orthogonal();
        svd
    }

    fn sweep_until_orthogonal(&mut self) {
        let n = self.n;
        let tol = f64::EPSILON * (n as f64).sqrt();
        for sweep in 1..=60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (gp, gq) = column_pair(&mut self.g, n, p, q);
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for (x, y) in gp.iter().zip(gq.iter()) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(gp, gq, c, s);
                    let (vp, vq) = column_pair(&mut self.v, n, p, q);
                    rotate(vp, vq, c, s);
                }
            }
            self.sweeps = sweep;
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = self.g.chunks(n).map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let mut g = Vec::with_capacity(n * n);
        let mut v = Vec::with_capacity(n * n);
        for &j in &order {
            g.extend_from_slice(&self.g[j * n..(j + 1) * n]);
            v.extend_from_slice(&self.v[j * n..(j + 1) * n]);
        }
        self.g = g;
        self.v = v;
        self.values = order.iter().map(|&j| norms[j]).collect();
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Right singular vector `k`.
    pub fn right_vector(&self, k: usize) -> &[f64] {
        &self.v[k * self.n..(k + 1) * self.n]
    }

    /// Minimum-norm solution of `A x = c` discarding singular values
    /// below `cutoff`.
    pub fn solve(&self, c: &[f64], cutoff: f64) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for k in 0..n {
            let s = self.values[k];
            if s < cutoff || s == 0.0 {
                continue;
            }
            let gk = &self.g[k * n..(k + 1) * n];
            let coef = gk.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / (s * s);
            for (xi, vi) in x.iter_mut().zip(self.right_vector(k)) {
                *xi += coef * vi;
            }
        }
        x
    }
}

fn column_pair(m: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (a, b) = m.split_at_mut(q * n);
    (&mut a[p * n..(p + 1) * n], &mut b[..n])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (u, w) = (*a, *b);
        *a = c * u - s * w;
        *b = s * u + c * w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemat::Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Vec<f64> {
        (0..rows * cols).map(|_| rng.normal()).collect()
    }

    #[test]
    fn streaming_qr_solves_least_squares() {
        let mut rng = Rng::new(11, 0);
        let (m, n) = (40, 6);
        let a = random_matrix(m, n, &mut rng); // row-major
        let b: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        let mut qr = StreamingQr::new(n);
        for chunk in [0..13, 13..14, 14..40] {
            let rows = chunk.len();
            let mut block = vec![0.0; rows * (n + 1)];
            for (r, i) in chunk.clone().enumerate() {
                for j in 0..n {
                    block[j * rows + r] = a[i * n + j];
                }
                block[n * rows + r] = b[i];
            }
            qr.push_block(rows, block);
        }
        assert_eq!(qr.rows_seen(), m);
        // normal equations oracle: (AᵀA) x = Aᵀb via the SVD of R
        let svd = JacobiSvd::new(&qr.r_matrix(), n);
        let x = svd.solve(&qr.qtb(), 0.0);
        for j in 0..n {
            let grad: f64 =
                (0..m).map(|i| a[i * n + j] * ((0..n).map(|k| a[i * n + k] * x[k]).sum::<f64>() - b[i])).sum();
            assert!(grad.abs() < 1e-10, "gradient component {grad}");
        }
        let res: f64 =
            (0..m).map(|i| ((0..n).map(|k| a[i * n + k] * x[k]).sum::<f64>() - b[i]).powi(2)).sum::<f64>().sqrt();
        assert!((res - qr.residual_norm()).abs() < 1e-10);
    }

    #[test]
    fn jacobi_svd_small_singular_values() {
        // diag(1, 1e-3, 1e-12) rotated on both sides
        let mut rng = Rng::new(12, 0);
        let n = 3;
        let q1 = crate::densemat::haar_unitary(n, &mut rng);
        let q2 = crate::densemat::haar_unitary(n, &mut rng);
        // real orthogonal factors from the real parts' QR would be fussy;
        // build Householder reflections instead
        let h = |v: &[f64]| {
            let nn: f64 = v.iter().map(|x| x * x).sum();
            (0..n * n)
                .map(|k| (if k / n == k % n { 1.0 } else { 0.0 }) - 2.0 * v[k / n] * v[k % n] / nn)
                .collect::<Vec<f64>>()
        };
        let u = h(&[q1[(0, 0)].re, q1[(1, 0)].re, q1[(2, 0)].re]);
        let w = h(&[q2[(0, 1)].re, q2[(1, 1)].re, q2[(2, 1)].re]);
        let s = [1.0, 1e-3, 1e-12];
        let a: Vec<f64> =
            (0..n * n).map(|k| (0..n).map(|l| u[(k / n) * n + l] * s[l] * w[(k % n) * n + l]).sum()).collect();
        let svd = JacobiSvd::new(&a, n);
        for (got, want) in svd.values.iter().zip(s) {
            assert!((got - want).abs() <= 1e-15 + 1e-9 * want, "{got} vs {want}");
        }
    }
}
