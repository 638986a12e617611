use super::operator::{Operator, C64};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian operator, values sorted descending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: Operator,
}

impl Eigh {
    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.values.len();
        let v = self.vectors.as_slice();
        let weights: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = Operator::zeros(n, n);
        let data = out.as_mut_slice();
        for k in 0..n {
            let w = weights[k];
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[i * n + k] * w;
                if vik.re == 0.0 && vik.im == 0.0 {
                    continue;
                }
                let row = &mut data[i * n..(i + 1) * n];
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot += vik * v[j * n + k].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Operator {
        self.reconstruct_with(|x| x)
    }
}

/// Hermitian eigendecomposition: Householder reduction to a real tridiagonal
/// matrix followed by implicit QL (tql2).
pub fn eigh(h: &Operator) -> Result<Eigh> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("eigh of a {}x{} operator", h.rows(), h.cols())));
    }
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > 1e-9 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut q = Operator::identity(n);
    let mut off = vec![C64::new(0.0, 0.0); n];

    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let tail: f64 = (lo + 1..n).map(|i| a[(i, k)].norm_sqr()).sum();
        let x0 = a[(lo, k)];
        if tail == 0.0 {
            off[k] = x0;
            continue;
        }
        let norm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in lo..n {
            v[i] = a[(i, k)];
        }
        v[lo] -= alpha;
        let vn = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v[lo..n] {
            *vi /= vn;
        }

        // trailing block: B ← B − 2vp† − 2pv† + 4K vv†, p = Bv, K = v†Bv
        for i in lo..n {
            p[i] = (lo..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        let kk: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in lo..n {
            for j in lo..n {
                let upd = v[i] * p[j].conj() * 2.0 + p[i] * v[j].conj() * 2.0 - v[i] * v[j].conj() * (4.0 * kk);
                a[(i, j)] -= upd;
            }
        }
        for i in lo..n {
            a[(i, k)] = C64::new(0.0, 0.0);
            a[(k, i)] = C64::new(0.0, 0.0);
        }
        a[(lo, k)] = alpha;
        a[(k, lo)] = alpha.conj();
        off[k] = alpha;

        // Q ← Q (I − 2vv†)
        for r in 0..n {
            let w: C64 = (lo..n).map(|j| q[(r, j)] * v[j]).sum::<C64>() * 2.0;
            for j in lo..n {
                let vj = v[j].conj();
                q[(r, j)] -= w * vj;
            }
        }
    }

    // Rotate the complex off-diagonal onto the non-negative reals.
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n];
    for i in 0..n {
        diag[i] = a[(i, i)].re;
    }
    for i in 0..n.saturating_sub(1) {
        let e = off[i];
        let m = e.norm();
        sub[i] = m;
        phases[i + 1] = if m > 0.0 { phases[i] * (e / m) } else { phases[i] };
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(&mut diag, &mut sub, &mut z, n)?;

    // V = Q · diag(phases) · Z, columns sorted by descending eigenvalue
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
    let qd = Operator::from_fn(n, n, |i, j| q[(i, j)] * phases[j]);
    let mut vectors = Operator::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let zk = z[k * n + src];
                if zk != 0.0 {
                    acc += qd[(i, k)] * zk;
                }
            }
            vectors[(i, col)] = acc;
        }
    }
    let values = order.iter().map(|&i| diag[i]).collect();
    Ok(Eigh { values, vectors })
}

// Symmetric tridiagonal QL with implicit shifts. `e[i]` is the (i+1, i)
// entry; `z` accumulates the rotations (row-major, n×n).
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk = &mut z[k * n..(k + 1) * n];
                        h = zk[i + 1];
                        zk[i + 1] = s * zk[i] + c * h;
                        zk[i] = c * zk[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

pub fn hermitian_eigenvalues(h: &Operator) -> Result<Vec<f64>> {
    Ok(eigh(h)?.values)
}

/// Sum of singular values. Hermitian inputs use `Σ|λ|` directly.
pub fn trace_norm(o: &Operator) -> Result<f64> {
    if !o.is_square() {
        return Err(Error::DimensionMismatch("trace norm of a non-square operator".into()));
    }
    if o.hermiticity_defect() <= 1e-12 * o.max_abs().max(1.0) {
        return Ok(eigh(o)?.values.iter().map(|x| x.abs()).sum());
    }
    let gram = o.adjoint().matmul(o);
    Ok(eigh(&gram)?.values.iter().map(|x| x.max(0.0).sqrt()).sum())
}

/// Projection onto the PSD cone in Frobenius norm.
pub fn psd_part(h: &Operator) -> Result<Operator> {
    Ok(eigh(h)?.reconstruct_with(|x| x.max(0.0)))
}
