//! Operators on the full register.
//!
//! Full-register matrices at N=16 are 2^18 on a side, so operators are kept in
//! factored form: sums of Pauli strings, blocks acting on a qubit window with
//! identity elsewhere, or products of these. [`OperatorMatrix::to_csr`]
//! expands any of them into an explicit sparse matrix for checks at small N.

use faer::{MatMut, MatRef};

use crate::error::{invalid, Result};
use crate::linalg::{self, DenseMatrix, C64, ONE, ZERO};
use crate::register::{PauliString, Window};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);
}

/// Compressed sparse rows, square.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, indptr: vec![0; n + 1], indices: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![ONE; n],
        }
    }

    /// Duplicates are summed; exact zeros are dropped.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < n && c < n, "triplet ({r},{c}) outside {n}x{n}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for k in 0..indices.len() {
            if values[k] != ZERO {
                indptr[rows[k] + 1] += 1;
                keep_idx.push(indices[k]);
                keep_val.push(values[k]);
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        Self { n, indptr, indices: keep_idx, values: keep_val }
    }

    pub fn from_dense(a: MatRef<'_, C64>) -> Self {
        let n = a.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != ZERO {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    pub fn mul(&self, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut acc = vec![ZERO; n];
        let mut mark = vec![usize::MAX; n];
        let mut cols = Vec::new();
        let mut t = Vec::new();
        for r in 0..n {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = ZERO;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &cols {
                t.push((r, c, acc[c]));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    /// `self + c · rhs`.
    pub fn add_scaled(&self, rhs: &CsrMatrix, c: C64) -> CsrMatrix {
        assert_eq!(self.n, rhs.n);
        let t = self.triplets().chain(rhs.triplets().map(|(r, k, v)| (r, k, v * c))).collect();
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn scaled(&self, c: C64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn adjoint(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.n, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, rhs: &CsrMatrix) -> f64 {
        self.add_scaled(rhs, C64::new(-1.0, 0.0)).max_abs()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).flat_map(|r| self.row(r).filter(move |&(c, _)| c == r).map(|(_, v)| v)).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

#[derive(Clone, Debug)]
pub enum LocalBlock {
    Sparse(CsrMatrix),
    Dense(DenseMatrix),
}

impl LocalBlock {
    pub fn dim(&self) -> usize {
        match self {
            LocalBlock::Sparse(s) => s.n(),
            LocalBlock::Dense(d) => d.nrows(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            LocalBlock::Sparse(s) => s.to_dense(),
            LocalBlock::Dense(d) => d.clone(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            LocalBlock::Sparse(s) => s.clone(),
            LocalBlock::Dense(d) => CsrMatrix::from_dense(d.as_ref()),
        }
    }

    fn adjoint(&self) -> LocalBlock {
        match self {
            LocalBlock::Sparse(s) => LocalBlock::Sparse(s.adjoint()),
            LocalBlock::Dense(d) => LocalBlock::Dense(d.adjoint().to_owned()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    Pauli(Vec<PauliString>),
    Local { window: Window, block: LocalBlock },
    /// `f[0] · f[1] · ...`; the last factor acts first.
    Product(Vec<OperatorMatrix>),
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    n_qubits: usize,
    kind: Kind,
    hermitian: bool,
    unitary: bool,
}

impl OperatorMatrix {
    pub fn pauli(n_qubits: usize, terms: Vec<PauliString>) -> Self {
        Self { n_qubits, kind: Kind::Pauli(terms), hermitian: false, unitary: false }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::pauli(n_qubits, vec![PauliString::identity()]).with_flags(true, true)
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self::pauli(n_qubits, vec![]).with_flags(true, false)
    }

    pub fn local(n_qubits: usize, window: Window, block: LocalBlock) -> Result<Self> {
        if window.lo + window.len > n_qubits {
            return Err(invalid("window extends past the register"));
        }
        if block.dim() != window.dim() {
            return Err(invalid(format!(
                "block dimension {} does not match window dimension {}",
                block.dim(),
                window.dim()
            )));
        }
        Ok(Self { n_qubits, kind: Kind::Local { window, block }, hermitian: false, unitary: false })
    }

    /// A Pauli sum whose support lies inside `window`, stored as a sparse block.
    pub fn pauli_local(n_qubits: usize, window: Window, terms: &[PauliString]) -> Result<Self> {
        let shift = n_qubits - window.lo - window.len;
        let mask = ((1u64 << window.len) - 1) << shift;
        let d = window.dim();
        let mut t = Vec::with_capacity(terms.len() * d);
        for p in terms {
            if p.support() & !mask != 0 {
                return Err(invalid("Pauli term acts outside the requested window"));
            }
            let local = PauliString { x: p.x >> shift, z: p.z >> shift, coeff: p.coeff };
            for b in 0..d {
                let (sign, target) = local.act(b);
                t.push((target, b, local.coeff * sign));
            }
        }
        Self::local(n_qubits, window, LocalBlock::Sparse(CsrMatrix::from_triplets(d, t)))
    }

    pub fn product(factors: Vec<OperatorMatrix>) -> Result<Self> {
        let n_qubits = factors.first().map(|f| f.n_qubits).ok_or_else(|| invalid("empty product"))?;
        if factors.iter().any(|f| f.n_qubits != n_qubits) {
            return Err(invalid("product factors live on different registers"));
        }
        let unitary = factors.iter().all(|f| f.unitary);
        Ok(Self { n_qubits, kind: Kind::Product(factors), hermitian: false, unitary })
    }

    pub fn with_flags(mut self, hermitian: bool, unitary: bool) -> Self {
        self.hermitian = hermitian;
        self.unitary = unitary;
        self
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn unitary_flag(&self) -> bool {
        self.unitary
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn local_block(&self) -> Option<(Window, &LocalBlock)> {
        match &self.kind {
            Kind::Local { window, block } => Some((*window, block)),
            _ => None,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let kind = match &self.kind {
            Kind::Pauli(t) => Kind::Pauli(t.iter().map(|p| p.scaled(c)).collect()),
            Kind::Local { window, block } => Kind::Local {
                window: *window,
                block: match block {
                    LocalBlock::Sparse(s) => LocalBlock::Sparse(s.scaled(c)),
                    LocalBlock::Dense(d) => LocalBlock::Dense(d * faer::Scale(c)),
                },
            },
            Kind::Product(f) => {
                let mut f = f.clone();
                f[0] = f[0].scaled(c);
                Kind::Product(f)
            }
        };
        let real = c.im == 0.0;
        Self {
            n_qubits: self.n_qubits,
            kind,
            hermitian: self.hermitian && real,
            unitary: self.unitary && (c.norm() - 1.0).abs() < 1e-15,
        }
    }

    pub fn adjoint(&self) -> Self {
        let kind = match &self.kind {
            Kind::Pauli(t) => Kind::Pauli(t.iter().map(|p| p.adjoint()).collect()),
            Kind::Local { window, block } => Kind::Local { window: *window, block: block.adjoint() },
            Kind::Product(f) => Kind::Product(f.iter().rev().map(|x| x.adjoint()).collect()),
        };
        Self { kind, ..self.clone() }
    }

    /// Expands into an explicit full-register sparse matrix.
    pub fn to_csr(&self) -> CsrMatrix {
        let dim = self.dim();
        match &self.kind {
            Kind::Pauli(terms) => {
                let mut t = Vec::with_capacity(terms.len() * dim);
                for p in terms {
                    for b in 0..dim {
                        let (sign, target) = p.act(b);
                        t.push((target, b, p.coeff * sign));
                    }
                }
                CsrMatrix::from_triplets(dim, t)
            }
            Kind::Local { window, block } => {
                let (outer, mid, inner) = split(self.n_qubits, *window);
                let blk = block.to_csr();
                let mut t = Vec::with_capacity(outer * inner * blk.nnz());
                for o in 0..outer {
                    for (r, c, v) in blk.triplets() {
                        for i in 0..inner {
                            t.push(((o * mid + r) * inner + i, (o * mid + c) * inner + i, v));
                        }
                    }
                }
                CsrMatrix::from_triplets(dim, t)
            }
            Kind::Product(f) => {
                let mut acc = f[0].to_csr();
                for x in &f[1..] {
                    acc = acc.mul(&x.to_csr());
                }
                acc
            }
        }
    }

    /// max |A − A†| evaluated on the smallest exact representation.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.kind {
            Kind::Local { block, .. } => match block {
                LocalBlock::Dense(d) => linalg::hermiticity_defect(d.as_ref()),
                LocalBlock::Sparse(s) => s.max_abs_diff(&s.adjoint()),
            },
            _ => {
                let a = self.to_csr();
                a.max_abs_diff(&a.adjoint())
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; x.len()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for OperatorMatrix {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        match &self.kind {
            Kind::Pauli(terms) => {
                y.fill(ZERO);
                for p in terms {
                    p.apply_add(x, y);
                }
            }
            Kind::Local { window, block } => apply_local(self.n_qubits, *window, block, x, y),
            Kind::Product(f) => {
                let mut cur = x.to_vec();
                for (k, op) in f.iter().rev().enumerate() {
                    if k + 1 == f.len() {
                        op.apply_into(&cur, y);
                    } else {
                        op.apply_into(&cur, y);
                        cur.copy_from_slice(y);
                    }
                }
            }
        }
    }
}

/// `(outer, mid, inner)` strides of a window inside an `n_qubits` register.
pub fn split(n_qubits: usize, w: Window) -> (usize, usize, usize) {
    (1 << w.lo, 1 << w.len, 1 << (n_qubits - w.lo - w.len))
}

pub fn apply_local(n_qubits: usize, w: Window, block: &LocalBlock, x: &[C64], y: &mut [C64]) {
    match block {
        LocalBlock::Dense(b) => apply_dense_block(n_qubits, w, b.as_ref(), x, y),
        LocalBlock::Sparse(s) => {
            let (outer, mid, inner) = split(n_qubits, w);
            y.fill(ZERO);
            for o in 0..outer {
                let base = o * mid * inner;
                for r in 0..mid {
                    let yr = base + r * inner;
                    for (c, v) in s.row(r) {
                        let xc = base + c * inner;
                        for i in 0..inner {
                            y[yr + i] += v * x[xc + i];
                        }
                    }
                }
            }
        }
    }
}

/// `y = (I ⊗ B ⊗ I) x` for a dense block `B` on window `w`.
pub fn apply_dense_block(n_qubits: usize, w: Window, b: MatRef<'_, C64>, x: &[C64], y: &mut [C64]) {
    let (outer, mid, inner) = split(n_qubits, w);
    if inner == 1 {
        let src = MatRef::from_row_major_slice(x, outer, mid);
        let dst = MatMut::from_row_major_slice_mut(y, outer, mid);
        linalg::mul_into(dst, src, b.transpose());
        return;
    }
    let chunk = mid * inner;
    for (xs, ys) in x.chunks_exact(chunk).zip(y.chunks_exact_mut(chunk)) {
        let src = MatRef::from_row_major_slice(xs, mid, inner);
        let dst = MatMut::from_row_major_slice_mut(ys, mid, inner);
        linalg::mul_into(dst, b, src);
    }
}
