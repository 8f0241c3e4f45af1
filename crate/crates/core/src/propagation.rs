//! Piecewise-constant time evolution under `H + ε h(t) H_strain`.
//!
//! Each step exponentiates the summed generator exactly. Lie-Trotter samples
//! `h` at the start of a step, the midpoint scheme at its center. For
//! boundary-local operators the step exponentials are dense `d × d` blocks
//! accumulated into a single propagator; other operators fall back to the
//! Krylov action on the full state.

use serde::{Deserialize, Serialize};

use crate::drive::ActiveDrive;
use crate::error::{invalid, Result};
use crate::krylov;
use crate::linalg::{self, DenseMatrix, HermitianEigen, C64, I, ZERO};
use crate::operator::{apply_dense_block, LinearOperator, OperatorMatrix};
use crate::register::Window;
use crate::state::{steps_for, StateVector};

/// Largest local block for which dense exponentials are used.
pub const DENSE_BLOCK_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "lt", alias = "lie-trotter")]
    LieTrotter,
    #[default]
    #[serde(rename = "strang", alias = "strang-midpoint")]
    StrangMidpoint,
}

impl Scheme {
    /// Fraction of the step at which the drive is sampled.
    fn sample_offset(self) -> f64 {
        match self {
            Scheme::LieTrotter => 0.0,
            Scheme::StrangMidpoint => 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    pub dt_base: f64,
    pub scheme: Scheme,
    pub adaptive: bool,
    pub expm_tolerance: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self { dt_base: 0.05, scheme: Scheme::StrangMidpoint, adaptive: true, expm_tolerance: 1e-10 }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_base > 0.0) {
            return Err(invalid(format!("dt_base must be positive, got {}", self.dt_base)));
        }
        if !(self.expm_tolerance > 0.0) {
            return Err(invalid("expm tolerance must be positive"));
        }
        Ok(())
    }

    pub fn step_for(&self, drive: &ActiveDrive) -> f64 {
        adaptive_dt(drive.epsilon, self)
    }
}

/// Step size for drive amplitude `eps`: `max(0.02, dt_base/(1 + 0.5 eps))` once `eps > 1`.
pub fn adaptive_dt(eps: f64, cfg: &PropagatorConfig) -> f64 {
    if cfg.adaptive && eps > 1.0 {
        (cfg.dt_base / (1.0 + 0.5 * eps)).max(0.02).min(cfg.dt_base)
    } else {
        cfg.dt_base
    }
}

/// `exp(scale · A) ψ`. Boundary-local operators are exponentiated densely; anything
/// else goes through the Krylov solver.
pub fn expm_action(a: &OperatorMatrix, scale: C64, psi: &StateVector, tol: f64) -> Result<StateVector> {
    if let Some((window, block)) = a.local_block() {
        if window.dim() <= DENSE_BLOCK_LIMIT {
            let e = HermitianEigen::new(block.to_dense().as_ref())?;
            let u = e.exp(scale);
            let mut out = vec![ZERO; psi.dim()];
            apply_dense_block(psi.n_qubits(), window, u.as_ref(), psi.amplitudes(), &mut out);
            return StateVector::from_amplitudes(psi.n_qubits(), out);
        }
    }
    let out = krylov::expm_action(a, scale, psi.amplitudes(), tol)?;
    StateVector::from_amplitudes(psi.n_qubits(), out)
}

/// `H + c S` applied without forming the sum.
struct Combination<'a> {
    h: &'a OperatorMatrix,
    s: &'a OperatorMatrix,
    c: f64,
}

impl LinearOperator for Combination<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.h.apply_into(x, y);
        if self.c != 0.0 {
            let sx = self.s.apply(x);
            y.iter_mut().zip(sx).for_each(|(a, b)| *a += b * self.c);
        }
    }
}

/// Dense generator blocks for one boundary, with the undriven spectrum cached.
#[derive(Clone, Debug)]
pub struct SidePropagator {
    n_qubits: usize,
    window: Window,
    h: DenseMatrix,
    s: DenseMatrix,
    h_eigen: HermitianEigen,
}

impl SidePropagator {
    /// `None` unless both operators are dense-sized blocks on the same window.
    pub fn new(h: &OperatorMatrix, s: &OperatorMatrix) -> Result<Option<Self>> {
        let (Some((wh, bh)), Some((ws, bs))) = (h.local_block(), s.local_block()) else {
            return Ok(None);
        };
        if wh != ws || wh.dim() > DENSE_BLOCK_LIMIT {
            return Ok(None);
        }
        let hd = bh.to_dense();
        let h_eigen = HermitianEigen::new(hd.as_ref())?;
        Ok(Some(Self { n_qubits: h.n_qubits(), window: wh, h: hd, s: bs.to_dense(), h_eigen }))
    }

    pub fn with_eigen(h: &OperatorMatrix, s: &OperatorMatrix, h_eigen: &HermitianEigen) -> Result<Option<Self>> {
        let (Some((wh, bh)), Some((ws, bs))) = (h.local_block(), s.local_block()) else {
            return Ok(None);
        };
        if wh != ws || wh.dim() > DENSE_BLOCK_LIMIT {
            return Ok(None);
        }
        Ok(Some(Self { n_qubits: h.n_qubits(), window: wh, h: bh.to_dense(), s: bs.to_dense(), h_eigen: h_eigen.clone() }))
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn h_eigen(&self) -> &HermitianEigen {
        &self.h_eigen
    }

    pub fn strain_block(&self) -> &DenseMatrix {
        &self.s
    }

    /// `exp(−iτ (H + c S))`.
    pub fn step(&self, c: f64, tau: f64) -> Result<DenseMatrix> {
        if c == 0.0 {
            return Ok(self.h_eigen.exp(-I * tau));
        }
        let d = self.h.nrows();
        let a = DenseMatrix::from_fn(d, d, |i, j| (self.h[(i, j)] + self.s[(i, j)] * c) * (-I * tau));
        Ok(linalg::expm(a.as_ref()))
    }

    /// Block propagator `U(t1 ← t0)` on `⌈|t1−t0|/δt⌉` equal steps.
    pub fn propagator(&self, drive: &ActiveDrive, t0: f64, t1: f64, cfg: &PropagatorConfig) -> Result<DenseMatrix> {
        if drive.is_off() {
            return Ok(self.h_eigen.exp(-I * (t1 - t0)));
        }
        let n = steps_for(t1 - t0, cfg.step_for(drive));
        let tau = (t1 - t0) / n as f64;
        let off = cfg.scheme.sample_offset();
        let mut u: Option<DenseMatrix> = None;
        let mut free: Option<DenseMatrix> = None;
        for k in 0..n {
            let c = drive.coefficient(t0 + (k as f64 + off) * tau);
            let step = if c == 0.0 {
                free.get_or_insert_with(|| self.h_eigen.exp(-I * tau)).clone()
            } else {
                self.step(c, tau)?
            };
            u = Some(match u {
                None => step,
                Some(prev) => linalg::mul(step.as_ref(), prev.as_ref()),
            });
        }
        Ok(u.expect("at least one step"))
    }

    /// Sweeps the lattice `t_k = k δt` forward from 0 and reports `U(t ← 0)` at each
    /// requested time (ascending, non-negative). Off-lattice times get a final
    /// partial step that is not carried forward, so a time's propagator does not
    /// depend on which other times are requested.
    pub fn lattice_sweep(
        &self,
        drive: &ActiveDrive,
        times: &[f64],
        cfg: &PropagatorConfig,
        mut visit: impl FnMut(usize, &DenseMatrix) -> Result<()>,
    ) -> Result<()> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(invalid("sweep times must be non-negative and ascending"));
        }
        if drive.is_off() {
            for (k, &t) in times.iter().enumerate() {
                visit(k, &self.h_eigen.exp(-I * t))?;
            }
            return Ok(());
        }
        let dt = cfg.step_for(drive);
        let off = cfg.scheme.sample_offset();
        let d = self.h.nrows();
        let mut u = linalg::identity(d);
        let mut lattice = 0usize;
        let mut free: Option<DenseMatrix> = None;
        for (k, &t) in times.iter().enumerate() {
            // Lattice points strictly below t (within rounding) are absorbed.
            let target = ((t / dt) * (1.0 + 1e-12)).floor() as usize;
            while lattice < target {
                let ts = (lattice as f64 + off) * dt;
                let c = drive.coefficient(ts);
                let step = if c == 0.0 {
                    free.get_or_insert_with(|| self.h_eigen.exp(-I * dt)).clone()
                } else {
                    self.step(c, dt)?
                };
                u = linalg::mul(step.as_ref(), u.as_ref());
                lattice += 1;
            }
            let rest = t - lattice as f64 * dt;
            if rest.abs() <= 1e-12 * dt.max(t) {
                visit(k, &u)?;
            } else {
                let c = drive.coefficient(lattice as f64 * dt + off * rest);
                let step = self.step(c, rest)?;
                visit(k, &linalg::mul(step.as_ref(), u.as_ref()))?;
            }
        }
        Ok(())
    }

    pub fn apply(&self, u: &DenseMatrix, psi: &StateVector) -> Result<StateVector> {
        let mut out = vec![ZERO; psi.dim()];
        apply_dense_block(self.n_qubits, self.window, u.as_ref(), psi.amplitudes(), &mut out);
        StateVector::from_amplitudes(psi.n_qubits(), out)
    }

    pub fn evolve(&self, psi: &StateVector, drive: &ActiveDrive, t0: f64, t1: f64, cfg: &PropagatorConfig) -> Result<StateVector> {
        let u = self.propagator(drive, t0, t1, cfg)?;
        self.apply(&u, psi)
    }
}

/// Evolves `psi` from `t0` to `t1` (either direction) under `H + ε h(t) S`.
pub fn evolve(
    psi: &StateVector,
    h: &OperatorMatrix,
    s: &OperatorMatrix,
    drive: &ActiveDrive,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    if t1 == t0 {
        return Err(invalid("evolution interval is empty"));
    }
    cfg.validate()?;
    if let Some(p) = SidePropagator::new(h, s)? {
        return p.evolve(psi, drive, t0, t1, cfg);
    }
    evolve_krylov(psi, h, s, drive, t0, t1, cfg)
}

/// The same stepping as [`evolve`], always through the Krylov action.
pub fn evolve_krylov(
    psi: &StateVector,
    h: &OperatorMatrix,
    s: &OperatorMatrix,
    drive: &ActiveDrive,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    if drive.is_off() {
        let out = krylov::expm_action(h, -I * (t1 - t0), psi.amplitudes(), cfg.expm_tolerance)?;
        return StateVector::from_amplitudes(psi.n_qubits(), out);
    }
    let n = steps_for(t1 - t0, cfg.step_for(drive));
    let tau = (t1 - t0) / n as f64;
    let off = cfg.scheme.sample_offset();
    let mut v = psi.amplitudes().to_vec();
    for k in 0..n {
        let c = drive.coefficient(t0 + (k as f64 + off) * tau);
        let gen = Combination { h, s, c };
        v = krylov::expm_action(&gen, -I * tau, &v, cfg.expm_tolerance / n as f64)?;
    }
    StateVector::from_amplitudes(psi.n_qubits(), v)
}
