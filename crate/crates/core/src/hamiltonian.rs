//! Disorder couplings, SYK₄ boundary Hamiltonians and the bilinear strain operators.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{HermitianEigen, C64, I};
use crate::operator::{LocalBlock, OperatorMatrix};
use crate::register::{MajoranaSet, PauliString, RegisterLayout, Side};

/// Prefactor multiplying `Σ_{i<j<k<l} J_ijkl γ_i γ_j γ_k γ_l`.
///
/// `Factorial` is `1/4!` on the ordered sum. `RootFactorial` (`1/√4!`) is what an
/// unrestricted sum over all 4! orderings with independent draws and a `1/4!`
/// prefactor gives in distribution. `Quarter` rewrites the `ψ² = 1/2`
/// normalization in terms of `γ = √2 ψ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuarticConvention {
    Factorial,
    #[default]
    RootFactorial,
    Quarter,
}

impl QuarticConvention {
    pub fn prefactor(self) -> f64 {
        match self {
            QuarticConvention::Factorial => 1.0 / 24.0,
            QuarticConvention::RootFactorial => 1.0 / 24f64.sqrt(),
            QuarticConvention::Quarter => 0.25,
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `J_ijkl` for `i<j<k<l`, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTensor {
    pub n: usize,
    pub j: f64,
    pub seed: u64,
    quads: Vec<[usize; 4]>,
    values: Vec<f64>,
    index: HashMap<[usize; 4], usize>,
}

fn quads(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(binomial(n, 4));
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    out.push([i, j, k, l]);
                }
            }
        }
    }
    out
}

impl CouplingTensor {
    pub fn from_values(n: usize, j: f64, seed: u64, values: Vec<f64>) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("N = {n} < 4")));
        }
        let quads = quads(n);
        if values.len() != quads.len() {
            return Err(invalid(format!("expected {} couplings, got {}", quads.len(), values.len())));
        }
        let index = quads.iter().enumerate().map(|(k, q)| (*q, k)).collect();
        Ok(Self { n, j, seed, quads, values, index })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::from_values(n, 1.0, 0, vec![value; binomial(n, 4)])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = ([usize; 4], f64)> + '_ {
        self.quads.iter().copied().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry for an index set in any order, read from its sorted key.
    pub fn get(&self, idx: [usize; 4]) -> Option<f64> {
        let mut k = idx;
        k.sort_unstable();
        self.index.get(&k).map(|&p| self.values[p])
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = -*v);
        out
    }

    pub fn variance(n: usize, j: f64) -> f64 {
        6.0 * j * j / (n as f64).powi(3)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("i\tj\tk\tl\tvalue\n");
        for (q, v) in self.entries() {
            out.push_str(&format!("{}\t{}\t{}\t{}\t{:.16e}\n", q[0], q[1], q[2], q[3], v));
        }
        write_file(path, &out)
    }

    pub fn read_tsv(path: &Path, n: usize, j: f64, seed: u64) -> Result<Self> {
        let rows = read_rows(path, 5)?;
        let expected = quads(n);
        let mut values = Vec::with_capacity(rows.len());
        for (row, q) in rows.iter().zip(expected.iter()) {
            let idx: Vec<usize> = row[..4].iter().map(|s| s.parse().unwrap_or(usize::MAX)).collect();
            if idx != q.to_vec() {
                return Err(Error::Format { path: path.into(), message: format!("unexpected index tuple {idx:?}") });
            }
            values.push(parse_f64(path, &row[4])?);
        }
        Self::from_values(n, j, seed, values)
    }
}

pub fn sample_couplings(n: usize, j: f64, seed: u64) -> Result<CouplingTensor> {
    if n < 4 {
        return Err(invalid(format!("N = {n} < 4")));
    }
    let dist = Normal::new(0.0, CouplingTensor::variance(n, j).sqrt()).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..binomial(n, 4)).map(|_| dist.sample(&mut rng)).collect();
    CouplingTensor::from_values(n, j, seed, values)
}

/// Bilinear couplings `J̃_ij`, `i<j`, lexicographic.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainCouplings {
    pub n: usize,
    pairs: Vec<[usize; 2]>,
    values: Vec<f64>,
}

impl StrainCouplings {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        let pairs: Vec<[usize; 2]> = (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect();
        if pairs.len() != values.len() {
            return Err(invalid(format!("expected {} strain couplings, got {}", pairs.len(), values.len())));
        }
        Ok(Self { n, pairs, values })
    }

    pub fn entries(&self) -> impl Iterator<Item = ([usize; 2], f64)> + '_ {
        self.pairs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self { n: self.n, pairs: self.pairs.clone(), values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("i\tj\tvalue\n");
        for (p, v) in self.entries() {
            out.push_str(&format!("{}\t{}\t{:.16e}\n", p[0], p[1], v));
        }
        write_file(path, &out)
    }

    pub fn read_tsv(path: &Path, n: usize) -> Result<Self> {
        let rows = read_rows(path, 3)?;
        let values = rows.iter().map(|r| parse_f64(path, &r[2])).collect::<Result<Vec<_>>>()?;
        Self::from_values(n, values)
    }
}

pub fn contract_strain(c: &CouplingTensor) -> Result<StrainCouplings> {
    let n = c.n;
    if n < 6 {
        return Err(invalid(format!("strain contraction needs N ≥ 6, got {n}")));
    }
    let norm = binomial(n - 2, 2) as f64;
    let mut values = Vec::with_capacity(binomial(n, 2));
    for i in 0..n {
        for j in i + 1..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in k + 1..n {
                    if k == i || k == j || l == i || l == j {
                        continue;
                    }
                    acc += c.get([i, j, k, l]).expect("distinct indices");
                }
            }
            values.push(acc / norm);
        }
    }
    StrainCouplings::from_values(n, values)
}

/// Phase attached to each Majorana of a boundary in the two-sided Hamiltonian.
fn side_phase(side: Side) -> C64 {
    match side {
        Side::L => C64::new(1.0, 0.0),
        Side::R => C64::new(0.0, -1.0),
    }
}

pub fn build_syk(
    c: &CouplingTensor,
    side: Side,
    majoranas: &MajoranaSet,
    convention: QuarticConvention,
) -> Result<OperatorMatrix> {
    let layout = majoranas.layout();
    if layout.n() != c.n {
        return Err(invalid(format!("layout N = {} but couplings N = {}", layout.n(), c.n)));
    }
    let phase = side_phase(side).powi(4);
    let pref = -convention.prefactor();
    let terms: Vec<PauliString> = c
        .entries()
        .filter(|&(_, v)| v != 0.0)
        .map(|(q, v)| {
            let g = |k: usize| majoranas.string(side, q[k]);
            g(0).mul(&g(1)).mul(&g(2)).mul(&g(3)).scaled(phase * pref * v)
        })
        .collect();
    Ok(OperatorMatrix::pauli_local(layout.n_qubits(), layout.window(side), &terms)?.with_flags(true, false))
}

/// `Σ_{i<j} J̃_ij (i γ_i γ_j)` before normalization, with the right-boundary phase on `γ^R`.
pub fn raw_strain(s: &StrainCouplings, side: Side, majoranas: &MajoranaSet) -> Result<OperatorMatrix> {
    let layout = majoranas.layout();
    if layout.n() != s.n {
        return Err(invalid(format!("layout N = {} but strain couplings N = {}", layout.n(), s.n)));
    }
    let phase = side_phase(side).powi(2);
    let terms: Vec<PauliString> = s
        .entries()
        .filter(|&(_, v)| v != 0.0)
        .map(|(p, v)| majoranas.string(side, p[0]).mul(&majoranas.string(side, p[1])).scaled(phase * I * v))
        .collect();
    Ok(OperatorMatrix::pauli_local(layout.n_qubits(), layout.window(side), &terms)?.with_flags(true, false))
}

/// Largest |eigenvalue| of a Hermitian boundary-local operator.
pub fn spectral_norm(op: &OperatorMatrix) -> Result<f64> {
    match op.local_block() {
        Some((_, block)) => Ok(HermitianEigen::new(block.to_dense().as_ref())?.spectral_norm()),
        None => crate::krylov::spectral_norm(op, 1e-9),
    }
}

pub fn build_strain(
    s: &StrainCouplings,
    side: Side,
    majoranas: &MajoranaSet,
    norm_target: f64,
) -> Result<OperatorMatrix> {
    Ok(build_strain_with_norm(s, side, majoranas, norm_target)?.0)
}

/// Normalized strain operator together with its raw spectral norm.
pub fn build_strain_with_norm(
    s: &StrainCouplings,
    side: Side,
    majoranas: &MajoranaSet,
    norm_target: f64,
) -> Result<(OperatorMatrix, f64)> {
    if !(norm_target > 0.0) {
        return Err(invalid(format!("strain norm target must be positive, got {norm_target}")));
    }
    let raw = raw_strain(s, side, majoranas)?;
    let norm = spectral_norm(&raw)?;
    if norm == 0.0 {
        return Err(Error::DegenerateInput("strain operator vanishes identically".into()));
    }
    let op = raw.scaled(C64::new(norm_target / norm, 0.0)).with_flags(true, false);
    Ok((op, norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HamiltonianOptions {
    pub convention: QuarticConvention,
    /// Spectral norm of each strain operator, in units of J.
    pub strain_norm: f64,
}

impl Default for HamiltonianOptions {
    fn default() -> Self {
        Self { convention: QuarticConvention::default(), strain_norm: 5.0 }
    }
}

/// One disorder realization: both boundary Hamiltonians and strain operators.
#[derive(Debug)]
pub struct HamiltonianSet {
    pub layout: RegisterLayout,
    pub majoranas: MajoranaSet,
    pub couplings: CouplingTensor,
    pub strain_couplings: StrainCouplings,
    pub h_l: OperatorMatrix,
    pub h_r: OperatorMatrix,
    pub strain_l: OperatorMatrix,
    pub strain_r: OperatorMatrix,
    pub strain_norm_target: f64,
    pub raw_strain_norm: [f64; 2],
    eigen: [OnceLock<HermitianEigen>; 2],
}

impl HamiltonianSet {
    pub fn build(majoranas: &MajoranaSet, couplings: CouplingTensor, opts: &HamiltonianOptions) -> Result<Self> {
        let layout = *majoranas.layout();
        let target = opts.strain_norm * couplings.j;
        let strain_couplings = contract_strain(&couplings)?;
        let h_l = build_syk(&couplings, Side::L, majoranas, opts.convention)?;
        let h_r = build_syk(&couplings, Side::R, majoranas, opts.convention)?;
        let (strain_l, nl) = build_strain_with_norm(&strain_couplings, Side::L, majoranas, target)?;
        let (strain_r, nr) = build_strain_with_norm(&strain_couplings, Side::R, majoranas, target)?;
        Ok(Self {
            layout,
            majoranas: majoranas.clone(),
            couplings,
            strain_couplings,
            h_l,
            h_r,
            strain_l,
            strain_r,
            strain_norm_target: target,
            raw_strain_norm: [nl, nr],
            eigen: [OnceLock::new(), OnceLock::new()],
        })
    }

    pub fn sample(majoranas: &MajoranaSet, j: f64, seed: u64, opts: &HamiltonianOptions) -> Result<Self> {
        let c = sample_couplings(majoranas.layout().n(), j, seed)?;
        Self::build(majoranas, c, opts)
    }

    pub fn hamiltonian(&self, side: Side) -> &OperatorMatrix {
        match side {
            Side::L => &self.h_l,
            Side::R => &self.h_r,
        }
    }

    pub fn strain(&self, side: Side) -> &OperatorMatrix {
        match side {
            Side::L => &self.strain_l,
            Side::R => &self.strain_r,
        }
    }

    /// Cached eigendecomposition of a boundary Hamiltonian block.
    pub fn eigen(&self, side: Side) -> Result<&HermitianEigen> {
        let slot = &self.eigen[side as usize];
        if let Some(e) = slot.get() {
            return Ok(e);
        }
        let (_, block) = self.hamiltonian(side).local_block().expect("boundary Hamiltonians are local");
        let e = HermitianEigen::new(block.to_dense().as_ref())?;
        Ok(slot.get_or_init(|| e))
    }

    pub fn dense_block(op: &OperatorMatrix) -> crate::linalg::DenseMatrix {
        match op.local_block() {
            Some((_, LocalBlock::Dense(d))) => d.clone(),
            Some((_, b)) => b.to_dense(),
            None => panic!("operator is not boundary-local"),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.into(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

fn read_rows(path: &Path, width: usize) -> Result<Vec<Vec<String>>> {
    let io = |source| Error::Io { path: path.into(), source };
    let f = std::fs::File::open(path).map_err(io)?;
    let mut rows = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io)?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if cols.len() != width {
            return Err(Error::Format { path: path.into(), message: format!("line {}: expected {width} columns", k + 1) });
        }
        rows.push(cols);
    }
    Ok(rows)
}

fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Format { path: path.into(), message: format!("bad number {s:?}") })
}
