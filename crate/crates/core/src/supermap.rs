//! Linear maps `Lin(C^{d_in}) → Lin(C^{d_out})` stored as Choi matrices.
//!
//! The Choi matrix is `C(L) = (L ⊗ id)(Ω) = Σ_{i,j} L(|i⟩⟨j|) ⊗ |i⟩⟨j|`,
//! ordered output ⊗ input, so `choi[(r,i),(s,j)] = ⟨r|L(|i⟩⟨j|)|s⟩`.
//! The Jamiołkowski operator `J(L) = (id ⊗ L)(SWAP)` is ordered
//! input ⊗ output and is available as a derived view.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::densemat::{eigh, kron, partial_trace, Keep, Operator, C64};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SuperMap {
    d_in: usize,
    d_out: usize,
    choi: Operator,
}

impl SuperMap {
    pub fn from_choi(d_in: usize, d_out: usize, choi: Operator) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidDimension { dim: 0, reason: "map dimensions must be positive" });
        }
        let n = d_in * d_out;
        if choi.rows() != n || choi.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of a {d_in}→{d_out} map must be {n}x{n}, got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    /// Builds the Choi matrix by evaluating `action` on every matrix unit.
    /// `action` is assumed linear.
    pub fn from_action(d_in: usize, d_out: usize, mut action: impl FnMut(&Operator) -> Operator) -> Result<Self> {
        let n = d_in * d_out;
        let mut choi = Operator::zeros(n, n);
        for i in 0..d_in {
            for j in 0..d_in {
                let img = action(&Operator::unit(d_in, i, j));
                if img.rows() != d_out || img.cols() != d_out {
                    return Err(Error::DimensionMismatch(format!(
                        "action returned {}x{}, expected {d_out}x{d_out}",
                        img.rows(),
                        img.cols()
                    )));
                }
                for r in 0..d_out {
                    for s in 0..d_out {
                        choi[(r * d_in + i, s * d_in + j)] = img[(r, s)];
                    }
                }
            }
        }
        Self::from_choi(d_in, d_out, choi)
    }

    pub fn identity(d: usize) -> Self {
        Self { d_in: d, d_out: d, choi: Operator::omega(d) }
    }

    /// `x ↦ U x U†`.
    pub fn unitary_conjugation(u: &Operator) -> Self {
        let d = u.rows();
        let ud = u.adjoint();
        Self::from_action(d, d, |x| u.matmul(x).matmul(&ud)).expect("square unitary")
    }

    pub fn zero(d_in: usize, d_out: usize) -> Self {
        let n = d_in * d_out;
        Self { d_in, d_out, choi: Operator::zeros(n, n) }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &Operator {
        &self.choi
    }

    pub fn into_choi(self) -> Operator {
        self.choi
    }

    /// `L(|i⟩⟨j|)` read off the Choi matrix.
    pub fn image_of_unit(&self, i: usize, j: usize) -> Operator {
        let di = self.d_in;
        Operator::from_fn(self.d_out, self.d_out, |r, s| self.choi[(r * di + i, s * di + j)])
    }

    /// `L(x) = Tr_in[C (I ⊗ xᵀ)]`.
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        let (di, dout) = (self.d_in, self.d_out);
        if x.rows() != di || x.cols() != di {
            return Err(Error::DimensionMismatch(format!("map input is {di}x{di}, got {}x{}", x.rows(), x.cols())));
        }
        let n = di * dout;
        let c = self.choi.as_slice();
        let xs = x.as_slice();
        let mut out = Operator::zeros(dout, dout);
        for r in 0..dout {
            for s in 0..dout {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..di {
                    let row = (r * di + i) * n + s * di;
                    for j in 0..di {
                        acc += xs[i * di + j] * c[row + j];
                    }
                }
                out[(r, s)] = acc;
            }
        }
        Ok(out)
    }

    /// `(id_ref ⊗ L)(x)` for `x` on `C^{d_ref} ⊗ C^{d_in}`.
    pub fn apply_local(&self, x: &Operator, d_ref: usize) -> Result<Operator> {
        let (di, dout) = (self.d_in, self.d_out);
        if x.rows() != d_ref * di || x.cols() != d_ref * di {
            return Err(Error::DimensionMismatch(format!(
                "local input must be {0}x{0}, got {1}x{2}",
                d_ref * di,
                x.rows(),
                x.cols()
            )));
        }
        let nx = d_ref * di;
        let no = d_ref * dout;
        let nc = di * dout;
        let c = self.choi.as_slice();
        let xs = x.as_slice();
        let mut out = Operator::zeros(no, no);
        let o = out.as_mut_slice();
        for a in 0..d_ref {
            for b in 0..d_ref {
                for i in 0..di {
                    for j in 0..di {
                        let w = xs[(a * di + i) * nx + b * di + j];
                        if w.re == 0.0 && w.im == 0.0 {
                            continue;
                        }
                        for r in 0..dout {
                            let crow = (r * di + i) * nc;
                            let orow = (a * dout + r) * no + b * dout;
                            for s in 0..dout {
                                o[orow + s] += w * c[crow + s * di + j];
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `f ∘ g`.
    pub fn compose(f: &SuperMap, g: &SuperMap) -> Result<SuperMap> {
        if g.d_out != f.d_in {
            return Err(Error::DimensionMismatch(format!(
                "compose: inner map outputs d = {}, outer expects d = {}",
                g.d_out, f.d_in
            )));
        }
        SuperMap::from_action(g.d_in, f.d_out, |x| {
            let mid = g.apply(x).expect("inner dims checked");
            f.apply(&mid).expect("outer dims checked")
        })
    }

    /// `f ⊗ g` acting on `C^{f.d_in} ⊗ C^{g.d_in}`.
    pub fn tensor(f: &SuperMap, g: &SuperMap) -> SuperMap {
        let (fi, gi) = (f.d_in, g.d_in);
        let d_in = fi * gi;
        SuperMap::from_action(d_in, f.d_out * g.d_out, |x| {
            // x is a matrix unit |(i,k)⟩⟨(j,l)|
            let (row, col) = unit_position(x);
            let (i, k) = (row / gi, row % gi);
            let (j, l) = (col / gi, col % gi);
            kron(&f.image_of_unit(i, j), &g.image_of_unit(k, l))
        })
        .expect("tensor dims are consistent")
    }

    /// Hilbert–Schmidt adjoint `L*`, defined by `Tr[A† L(B)] = Tr[L*(A)† B]`.
    pub fn hs_adjoint(&self) -> SuperMap {
        let (di, dout) = (self.d_in, self.d_out);
        // C(L*)[(i,r),(j,s)] = conj C(L)[(r,i),(s,j)]
        let choi = Operator::from_fn(di * dout, di * dout, |row, col| {
            let (i, r) = (row / dout, row % dout);
            let (j, s) = (col / dout, col % dout);
            self.choi[(r * di + i, s * di + j)].conj()
        });
        SuperMap { d_in: dout, d_out: di, choi }
    }

    /// `J(L) = Σ_{i,j} |i⟩⟨j| ⊗ L(|j⟩⟨i|)`, ordered input ⊗ output.
    pub fn jamiolkowski(&self) -> Operator {
        let (di, dout) = (self.d_in, self.d_out);
        Operator::from_fn(di * dout, di * dout, |row, col| {
            let (i, r) = (row / dout, row % dout);
            let (j, s) = (col / dout, col % dout);
            self.choi[(r * di + j, s * di + i)]
        })
    }

    /// Inverse of [`SuperMap::jamiolkowski`].
    pub fn from_jamiolkowski(d_in: usize, d_out: usize, j: &Operator) -> Result<SuperMap> {
        let n = d_in * d_out;
        if j.rows() != n || j.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Jamiołkowski operator must be {n}x{n}, got {}x{}",
                j.rows(),
                j.cols()
            )));
        }
        let choi = Operator::from_fn(n, n, |row, col| {
            let (r, jj) = (row / d_in, row % d_in);
            let (s, ii) = (col / d_in, col % d_in);
            j[(ii * d_out + r, jj * d_out + s)]
        });
        SuperMap::from_choi(d_in, d_out, choi)
    }

    /// `Σ_k w_k L_k`; all maps must share dimensions.
    pub fn linear_combination(terms: &[(f64, &SuperMap)]) -> Result<SuperMap> {
        let (_, first) = terms.first().ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let (di, dout) = (first.d_in, first.d_out);
        let mut choi = Operator::zeros(di * dout, di * dout);
        for (w, m) in terms {
            if m.d_in != di || m.d_out != dout {
                return Err(Error::DimensionMismatch("linear combination of maps with different shapes".into()));
            }
            choi += &m.choi.scale_re(*w);
        }
        SuperMap::from_choi(di, dout, choi)
    }

    pub fn sub(&self, other: &SuperMap) -> Result<SuperMap> {
        SuperMap::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, w: f64) -> SuperMap {
        SuperMap { d_in: self.d_in, d_out: self.d_out, choi: self.choi.scale_re(w) }
    }

    /// Largest entrywise Choi deviation.
    pub fn max_abs_diff(&self, other: &SuperMap) -> f64 {
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return f64::INFINITY;
        }
        self.choi.max_abs_diff(&other.choi)
    }

    pub fn is_hp(&self, tol: f64) -> bool {
        self.choi.is_hermitian(tol)
    }

    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        let e = eigh(&self.choi)?;
        Ok(*e.values.last().expect("non-empty spectrum"))
    }

    /// CP iff the Choi matrix is Hermitian with smallest eigenvalue ≥ −tol.
    pub fn is_cp(&self, tol: f64) -> bool {
        self.is_hp(tol) && self.min_choi_eigenvalue().map(|x| x >= -tol).unwrap_or(false)
    }

    pub fn tp_defect(&self) -> f64 {
        let marginal =
            partial_trace(&self.choi, (self.d_out, self.d_in), Keep::Second).expect("choi dims are consistent");
        marginal.max_abs_diff(&Operator::identity(self.d_in))
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.is_cp(tol) && self.is_tp(tol)
    }
}

fn unit_position(x: &Operator) -> (usize, usize) {
    let n = x.cols();
    let idx = x.as_slice().iter().position(|z| z.re != 0.0 || z.im != 0.0).expect("matrix unit has a nonzero entry");
    (idx / n, idx % n)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperMapJson {
    d_in: usize,
    d_out: usize,
    choi: Operator,
}

impl Serialize for SuperMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SuperMapJson { d_in: self.d_in, d_out: self.d_out, choi: self.choi.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SuperMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SuperMapJson::deserialize(deserializer)?;
        SuperMap::from_choi(raw.d_in, raw.d_out, raw.choi).map_err(D::Error::custom)
    }
}

/// `L = λ₊E⁺ − λ₋E⁻` with `E±` CPTP and `λ± ≥ 0`.
#[derive(Clone, Debug)]
pub struct AffineDecomposition {
    pub plus_weight: f64,
    pub minus_weight: f64,
    pub plus: SuperMap,
    pub minus: SuperMap,
}

impl AffineDecomposition {
    pub fn new(plus_weight: f64, plus: SuperMap, minus_weight: f64, minus: SuperMap) -> Result<Self> {
        if plus.d_in() != minus.d_in() || plus.d_out() != minus.d_out() {
            return Err(Error::DimensionMismatch("decomposition components differ in shape".into()));
        }
        if plus_weight < 0.0 || minus_weight < 0.0 {
            return Err(Error::InvalidArgument("decomposition weights must be non-negative".into()));
        }
        Ok(Self { plus_weight, minus_weight, plus, minus })
    }

    /// `1·E − 0·E` for a channel `E`.
    pub fn trivial(channel: SuperMap) -> Self {
        Self { plus_weight: 1.0, minus_weight: 0.0, minus: channel.clone(), plus: channel }
    }

    pub fn reconstruct(&self) -> SuperMap {
        SuperMap::linear_combination(&[(self.plus_weight, &self.plus), (-self.minus_weight, &self.minus)])
            .expect("shapes checked at construction")
    }

    pub fn l1_weight(&self) -> f64 {
        self.plus_weight + self.minus_weight
    }

    pub fn components_cptp(&self, tol: f64) -> bool {
        self.plus.is_cptp(tol) && self.minus.is_cptp(tol)
    }
}
