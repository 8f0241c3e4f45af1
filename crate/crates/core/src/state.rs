//! Boundary states: the infinite-temperature pair state, the thermofield double, and
//! the protocol initial state with the message/ancilla Bell pair.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, DenseMatrix, C64, ONE, ZERO};
use crate::operator::{apply_dense_block, LinearOperator, OperatorMatrix};
use crate::register::{MajoranaSet, RegisterLayout};

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(invalid(format!("expected {} amplitudes, got {}", 1usize << n_qubits, amps.len())));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NumericalFailure { message: "state has zero or non-finite norm".into(), residual: n });
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(n)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn apply(&self, op: &OperatorMatrix) -> StateVector {
        Self { n_qubits: self.n_qubits, amps: op.apply(&self.amps) }
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        linalg::inner(&self.amps, &op.apply(&self.amps))
    }

    /// Multiplies by a phase so the largest-magnitude amplitude (first on ties) is real positive.
    pub fn fix_phase(&mut self) {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for (k, a) in self.amps.iter().enumerate() {
            let m = a.norm_sqr();
            if m > best_mag * (1.0 + 1e-12) {
                best = k;
                best_mag = m;
            }
        }
        let a = self.amps[best];
        if a != ZERO {
            let ph = a.conj() / a.norm();
            self.amps.iter_mut().for_each(|x| *x *= ph);
        }
    }

    /// Reduced density matrix on `qubits` (ordered; first listed is most significant).
    pub fn reduced_density(&self, qubits: &[usize]) -> DenseMatrix {
        let k = qubits.len();
        let ds = 1usize << k;
        let n = self.n_qubits;
        let bits: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
        let sub_mask: usize = bits.iter().map(|b| 1usize << b).sum();
        let sub_index = |b: usize| bits.iter().fold(0usize, |acc, &bit| (acc << 1) | ((b >> bit) & 1));
        let mut groups: std::collections::BTreeMap<usize, Vec<(usize, C64)>> = Default::default();
        for (b, a) in self.amps.iter().enumerate() {
            if *a != ZERO {
                groups.entry(b & !sub_mask).or_default().push((sub_index(b), *a));
            }
        }
        let mut rho = DenseMatrix::zeros(ds, ds);
        for entries in groups.values() {
            for &(s, a) in entries {
                for &(t, b) in entries {
                    rho[(s, t)] += a * b.conj();
                }
            }
        }
        rho
    }
}

/// `n_i = c_i† c_i = (1 + i γ_i^L γ_i^R)/2`.
pub fn occupation(majoranas: &MajoranaSet, i: usize) -> OperatorMatrix {
    let nq = majoranas.layout().n_qubits();
    let half = C64::new(0.5, 0.0);
    OperatorMatrix::pauli(nq, vec![crate::register::PauliString::identity().scaled(half), majoranas.pair_parity(i).scaled(half)])
        .with_flags(true, false)
}

/// `c_i = (γ_i^L + i γ_i^R)/2`.
pub fn annihilator(majoranas: &MajoranaSet, i: usize) -> OperatorMatrix {
    use crate::register::Side;
    let nq = majoranas.layout().n_qubits();
    OperatorMatrix::pauli(
        nq,
        vec![
            majoranas.string(Side::L, i).scaled(C64::new(0.5, 0.0)),
            majoranas.string(Side::R, i).scaled(C64::new(0.0, 0.5)),
        ],
    )
}

/// Pseudo-random start vector on the boundary sector with message and ancilla in |00⟩.
fn boundary_seed(layout: &RegisterLayout, salt: u64) -> Vec<C64> {
    let dim = layout.total_dim();
    let sector = dim / 4;
    let mut s = 0x2545_F491_4F6C_DD1D_u64 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v = vec![ZERO; dim];
    for a in v.iter_mut().take(sector) {
        *a = C64::new(next(), next());
    }
    v
}

fn project_pair_vacuum(majoranas: &MajoranaSet, mut v: Vec<C64>) -> Vec<C64> {
    let mut tmp = vec![ZERO; v.len()];
    for i in 0..majoranas.layout().n() {
        // (1 - n_i) = (1 - P_i)/2
        tmp.fill(ZERO);
        majoranas.pair_parity(i).apply_add(&v, &mut tmp);
        v.iter_mut().zip(&tmp).for_each(|(a, b)| *a = (*a - b) * 0.5);
    }
    v
}

/// The state annihilated by every `c_i`, with message/ancilla in |00⟩.
///
/// The `n_i` are commuting projectors, so `Π_i (1 − n_i)` projects onto the
/// null space of `Σ n_i`; projecting two independent start vectors checks that
/// the null space is one-dimensional.
pub fn build_infinite_tfd(majoranas: &MajoranaSet) -> Result<StateVector> {
    let layout = majoranas.layout();
    let nq = layout.n_qubits();
    let a = project_pair_vacuum(majoranas, boundary_seed(layout, 1));
    let b = project_pair_vacuum(majoranas, boundary_seed(layout, 2));
    let mut sa = StateVector::from_amplitudes(nq, a)?;
    let mut sb = StateVector::from_amplitudes(nq, b)?;
    if sa.norm() < 1e-8 || sb.norm() < 1e-8 {
        return Err(Error::InternalConsistency("pair-vacuum null space is empty".into()));
    }
    sa.normalize()?;
    sb.normalize()?;
    let overlap = sa.inner(&sb).norm();
    if (overlap - 1.0).abs() > 1e-10 {
        return Err(Error::InternalConsistency(format!(
            "pair-vacuum null space is not one-dimensional (overlap {overlap})"
        )));
    }
    let total: OperatorMatrix = {
        let mut terms = Vec::new();
        for i in 0..layout.n() {
            if let crate::operator::Kind::Pauli(t) = occupation(majoranas, i).kind() {
                terms.extend_from_slice(t);
            }
        }
        OperatorMatrix::pauli(nq, terms)
    };
    let residual = linalg::norm(&total.apply(sa.amplitudes()));
    if residual > 1e-10 {
        return Err(Error::InternalConsistency(format!("pair vacuum residual {residual:.3e}")));
    }
    sa.fix_phase();
    Ok(sa)
}

/// Default imaginary-time step as a fraction of β.
pub fn default_dtau(beta: f64) -> f64 {
    beta / 64.0
}

/// `e^{−β H_L / 2} |I⟩`, normalized, by repeated steps `exp(−dτ H_L)`.
pub fn build_tfd(beta: f64, h_l: &OperatorMatrix, infinite: &StateVector, dtau: f64) -> Result<StateVector> {
    if !(beta >= 0.0) {
        return Err(invalid(format!("beta must be non-negative, got {beta}")));
    }
    let defect = h_l.hermiticity_defect();
    if defect > 1e-10 {
        return Err(invalid(format!("H_L is not Hermitian (defect {defect:.3e})")));
    }
    if beta == 0.0 {
        return Ok(infinite.clone());
    }
    if !(dtau > 0.0) {
        return Err(invalid(format!("imaginary-time step must be positive, got {dtau}")));
    }
    let total = beta / 2.0;
    let steps = steps_for(total, dtau);
    let tau = total / steps as f64;
    let mut psi = infinite.clone();
    match h_l.local_block() {
        Some((window, block)) => {
            let e = linalg::HermitianEigen::new(block.to_dense().as_ref())?;
            let u = e.exp(C64::new(-tau, 0.0));
            let mut out = vec![ZERO; psi.dim()];
            for _ in 0..steps {
                apply_dense_block(psi.n_qubits(), window, u.as_ref(), psi.amplitudes(), &mut out);
                psi.amplitudes_mut().copy_from_slice(&out);
                psi.normalize()?;
            }
        }
        None => {
            for _ in 0..steps {
                let next = crate::krylov::expm_action(h_l as &dyn LinearOperator, C64::new(-tau, 0.0), psi.amplitudes(), 1e-12)?;
                psi = StateVector::from_amplitudes(psi.n_qubits(), next)?;
                psi.normalize()?;
            }
        }
    }
    Ok(psi)
}

pub(crate) fn steps_for(span: f64, dt: f64) -> usize {
    ((span.abs() / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Bell pair `(|00⟩ + |11⟩)/√2` on message/ancilla tensored with the boundary factor of `tfd`.
pub fn assemble_initial_state(tfd: &StateVector) -> Result<StateVector> {
    let dim = tfd.dim();
    let sector = dim / 4;
    let amps = tfd.amplitudes();
    let stray: f64 = amps[sector..].iter().map(|a| a.norm_sqr()).sum();
    if stray > 1e-20 {
        return Err(invalid("boundary state has weight outside the |00⟩ message/ancilla sector"));
    }
    let n = linalg::norm(&amps[..sector]);
    let c = std::f64::consts::FRAC_1_SQRT_2 / n;
    let mut out = vec![ZERO; dim];
    for (k, a) in amps[..sector].iter().enumerate() {
        out[k] = a * c;
        out[3 * sector + k] = a * c;
    }
    StateVector::from_amplitudes(tfd.n_qubits(), out)
}

/// Boundary factor of a state in the |00⟩ message/ancilla sector as a `d_L × d_R` matrix.
pub fn boundary_matrix(layout: &RegisterLayout, psi: &StateVector) -> DenseMatrix {
    let d = layout.boundary_dim();
    let a = psi.amplitudes();
    DenseMatrix::from_fn(d, d, |l, r| a[l * d + r])
}
