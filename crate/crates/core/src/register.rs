//! Register layout and Jordan-Wigner Majorana operators.
//!
//! Qubit order is `[message, ancilla, chain_0 .. chain_{N-1}]`. The chain is a
//! single Jordan-Wigner string: left Majoranas sit on chain qubits
//! `0..N/2`, right Majoranas on `N/2..N`, so every right Majorana carries the
//! parity string of the whole left boundary. Qubit `q` is bit `n_qubits-1-q`
//! of a basis index, which makes the amplitude vector a row-major tensor
//! `[m, a, L, R]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{C64, I, ONE};
use crate::operator::OperatorMatrix;

pub const MESSAGE_QUBIT: usize = 0;
pub const ANCILLA_QUBIT: usize = 1;
const CHAIN_OFFSET: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    L,
    R,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::L, Side::R];
}

/// A contiguous run of qubits `[lo, lo + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: usize,
    pub len: usize,
}

impl Window {
    pub fn dim(&self) -> usize {
        1 << self.len
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    n: usize,
}

pub fn build_layout(n: usize) -> Result<RegisterLayout> {
    RegisterLayout::new(n)
}

impl RegisterLayout {
    /// Upper bound on `N` set by memory; a full-register state at N=20 is 64 MB.
    pub const MAX_N: usize = 20;

    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) || n < 4 {
            return Err(invalid(format!("N must be even and at least 4, got {n}")));
        }
        if n > Self::MAX_N {
            return Err(invalid(format!("N = {n} exceeds the supported maximum {}", Self::MAX_N)));
        }
        Ok(Self { n })
    }

    /// Majoranas per boundary.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_qubits(&self) -> usize {
        self.n + 2
    }

    /// Single-boundary dimension 2^(N/2).
    pub fn boundary_dim(&self) -> usize {
        1 << (self.n / 2)
    }

    pub fn total_dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn window(&self, side: Side) -> Window {
        let half = self.n / 2;
        match side {
            Side::L => Window { lo: CHAIN_OFFSET, len: half },
            Side::R => Window { lo: CHAIN_OFFSET + half, len: half },
        }
    }

    /// Both boundaries as one window.
    pub fn boundary_window(&self) -> Window {
        Window { lo: CHAIN_OFFSET, len: self.n }
    }

    pub fn bit(&self, qubit: usize) -> u64 {
        debug_assert!(qubit < self.n_qubits());
        1u64 << (self.n_qubits() - 1 - qubit)
    }

    /// Position on the joint chain, `0..2N`.
    pub fn chain_index(&self, side: Side, i: usize) -> Result<usize> {
        if i >= self.n {
            return Err(invalid(format!("Majorana index {i} out of range 0..{}", self.n)));
        }
        Ok(match side {
            Side::L => i,
            Side::R => self.n + i,
        })
    }

    /// Inverse of [`chain_index`](Self::chain_index).
    pub fn side_of(&self, a: usize) -> (Side, usize) {
        if a < self.n {
            (Side::L, a)
        } else {
            (Side::R, a - self.n)
        }
    }

    /// The qubit hosting chain Majoranas `2k` and `2k+1`.
    pub fn chain_qubit(&self, a: usize) -> usize {
        CHAIN_OFFSET + a / 2
    }

    pub fn majorana_string(&self, side: Side, i: usize) -> Result<PauliString> {
        let a = self.chain_index(side, i)?;
        let q = self.chain_qubit(a);
        let mut z = 0u64;
        for p in CHAIN_OFFSET..q {
            z |= self.bit(p);
        }
        let b = self.bit(q);
        Ok(if a % 2 == 0 {
            PauliString { x: b, z, coeff: ONE }
        } else {
            // Y = i X Z
            PauliString { x: b, z: z | b, coeff: I }
        })
    }
}

/// `coeff · X^x Z^z` over the full register (bit masks as in [`RegisterLayout::bit`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    pub coeff: C64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self { x: 0, z: 0, coeff: ONE }
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.coeff *= c;
        self
    }

    pub fn mul(&self, rhs: &PauliString) -> PauliString {
        // Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
        let sign = if (self.z & rhs.x).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        PauliString {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            coeff: self.coeff * rhs.coeff * sign,
        }
    }

    pub fn adjoint(&self) -> PauliString {
        let sign = if (self.x & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        PauliString { x: self.x, z: self.z, coeff: self.coeff.conj() * sign }
    }

    /// Phase and target of `X^x Z^z |b⟩`, excluding `coeff`.
    #[inline]
    pub fn act(&self, b: usize) -> (f64, usize) {
        let sign = if (self.z & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        (sign, b ^ self.x as usize)
    }

    /// `y += P x`.
    pub fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        let flip = self.x as usize;
        for (b, xb) in x.iter().enumerate() {
            let sign = if (self.z & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            y[b ^ flip] += self.coeff * sign * xb;
        }
    }

    /// ⟨ψ|P|ψ⟩.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let flip = self.x as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (b, xb) in psi.iter().enumerate() {
            let sign = if (self.z & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += psi[b ^ flip].conj() * xb * sign;
        }
        acc * self.coeff
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }
}

/// Single-qubit Pauli on `qubit`: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn single_qubit_pauli(layout: &RegisterLayout, qubit: usize, mu: usize) -> PauliString {
    let b = layout.bit(qubit);
    match mu {
        0 => PauliString::identity(),
        1 => PauliString { x: b, z: 0, coeff: ONE },
        2 => PauliString { x: b, z: b, coeff: I },
        3 => PauliString { x: 0, z: b, coeff: ONE },
        _ => panic!("Pauli index {mu} out of range"),
    }
}

/// All 2N Majoranas of a layout, built once and shared.
#[derive(Clone, Debug)]
pub struct MajoranaSet {
    layout: RegisterLayout,
    strings: Vec<PauliString>,
}

impl MajoranaSet {
    pub fn new(layout: RegisterLayout) -> Self {
        let mut strings = Vec::with_capacity(2 * layout.n());
        for side in Side::BOTH {
            for i in 0..layout.n() {
                strings.push(layout.majorana_string(side, i).expect("index in range"));
            }
        }
        Self { layout, strings }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn string(&self, side: Side, i: usize) -> PauliString {
        let a = self.layout.chain_index(side, i).expect("index in range");
        self.strings[a]
    }

    pub fn pooled(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn operator(&self, side: Side, i: usize) -> OperatorMatrix {
        OperatorMatrix::pauli(self.layout.n_qubits(), vec![self.string(side, i)])
            .with_flags(true, true)
    }

    /// `i γ_i^L γ_i^R`, so that `n_i = (1 + P_i)/2`.
    pub fn pair_parity(&self, i: usize) -> PauliString {
        self.string(Side::L, i).mul(&self.string(Side::R, i)).scaled(I)
    }
}

pub fn build_majorana(layout: &RegisterLayout, side: Side, i: usize) -> Result<OperatorMatrix> {
    let s = layout.majorana_string(side, i)?;
    Ok(OperatorMatrix::pauli(layout.n_qubits(), vec![s]).with_flags(true, true))
}
