//! The three-step teleportation protocol and its calibration.
//!
//! 1. Evolve the left boundary backward to `−t*`, insert the message, evolve forward to 0.
//! 2. Apply `U_g = exp(i g Σ_{i≥2} n_i)`.
//! 3. Evolve the right boundary to `t_R` and score the decoded qubit against the ancilla.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{ActiveDrive, DriveSpec, ProtocolStep};
use crate::error::{invalid, Result};
use crate::hamiltonian::HamiltonianSet;
use crate::linalg::{DenseMatrix, C64, ONE, ZERO};
use crate::operator::OperatorMatrix;
use crate::propagation::{PropagatorConfig, SidePropagator};
use crate::register::{single_qubit_pauli, MajoranaSet, PauliString, RegisterLayout, Side, ANCILLA_QUBIT, MESSAGE_QUBIT};
use crate::state::{assemble_initial_state, build_infinite_tfd, build_tfd, default_dtau, StateVector};
use crate::stats::{summarize_columns, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub g: f64,
    pub t_star: f64,
    pub t_r: f64,
    pub beta: f64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_star > 0.0) {
            return Err(invalid(format!("t_star must be positive, got {}", self.t_star)));
        }
        if !(self.beta >= 0.0) {
            return Err(invalid(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(self.t_r >= 0.0) {
            return Err(invalid(format!("t_R must be non-negative, got {}", self.t_r)));
        }
        Ok(())
    }
}

/// How the message enters the left boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionMode {
    /// `½ Σ_μ σ_μ^L ⊗ σ_μ^m` applied to the state vector, i.e. a SWAP.
    #[default]
    Swap,
    /// Incoherent uniform mixture of the four branches `σ_μ^L ⊗ σ_μ^m`.
    Twirl,
}

/// Operators used for the decoded right-boundary qubit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutBasis {
    /// `(γ_{2k}^R, γ_{2k+1}^R, −i γ_{2k}^R γ_{2k+1}^R)`, mirroring the insertion qubit.
    #[default]
    Majorana,
    /// Bare Pauli operators on the chain qubit hosting those Majoranas.
    Qubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    pub insertion: InsertionMode,
    pub readout: ReadoutBasis,
    /// Qubit index within the left boundary that receives the message.
    pub insertion_qubit: usize,
    /// Qubit index within the right boundary that is decoded.
    pub readout_qubit: usize,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self { insertion: InsertionMode::Swap, readout: ReadoutBasis::Majorana, insertion_qubit: 0, readout_qubit: 0 }
    }
}

/// `exp(i g Σ_{i=2}^{N−1} n_i)` as a product of commuting factors `1 + (e^{ig} − 1) n_i`.
pub fn coupling_unitary(g: f64, majoranas: &MajoranaSet) -> Result<OperatorMatrix> {
    let layout = majoranas.layout();
    let nq = layout.n_qubits();
    let phase = C64::from_polar(1.0, g);
    let a = (ONE + phase) * 0.5;
    let b = (phase - ONE) * 0.5;
    let factors: Vec<OperatorMatrix> = (2..layout.n())
        .map(|i| {
            OperatorMatrix::pauli(nq, vec![PauliString::identity().scaled(a), majoranas.pair_parity(i).scaled(b)])
                .with_flags(false, true)
        })
        .collect();
    if factors.is_empty() {
        return Ok(OperatorMatrix::identity(nq));
    }
    OperatorMatrix::product(factors)
}

/// Applies `U_g` in place using the pair parities directly.
fn apply_coupling(g: f64, majoranas: &MajoranaSet, psi: &mut [C64]) {
    let phase = C64::from_polar(1.0, g);
    let a = (ONE + phase) * 0.5;
    let b = (phase - ONE) * 0.5;
    let mut tmp = vec![ZERO; psi.len()];
    for i in 2..majoranas.layout().n() {
        tmp.fill(ZERO);
        majoranas.pair_parity(i).apply_add(psi, &mut tmp);
        psi.iter_mut().zip(&tmp).for_each(|(x, y)| *x = *x * a + y * b);
    }
}

fn insertion_qubit(layout: &RegisterLayout, opts: &ProtocolOptions) -> usize {
    layout.window(Side::L).lo + opts.insertion_qubit
}

/// `(σ_μ^L ⊗ σ_μ^m)|ψ⟩` for μ = 0, x, y, z.
pub fn insert_message_branches(psi: &StateVector, layout: &RegisterLayout) -> Vec<StateVector> {
    insert_branches_at(psi, layout, layout.window(Side::L).lo)
}

fn insert_branches_at(psi: &StateVector, layout: &RegisterLayout, qubit: usize) -> Vec<StateVector> {
    (0..4)
        .map(|mu| {
            let p = single_qubit_pauli(layout, qubit, mu).mul(&single_qubit_pauli(layout, MESSAGE_QUBIT, mu));
            let mut out = vec![ZERO; psi.dim()];
            p.apply_add(psi.amplitudes(), &mut out);
            StateVector::from_amplitudes(psi.n_qubits(), out).expect("same dimension")
        })
        .collect()
}

/// Weighted pure branches whose mixture is the post-insertion state.
fn insert(psi: &StateVector, layout: &RegisterLayout, opts: &ProtocolOptions) -> Vec<(f64, StateVector)> {
    let branches = insert_branches_at(psi, layout, insertion_qubit(layout, opts));
    match opts.insertion {
        InsertionMode::Twirl => branches.into_iter().map(|b| (0.25, b)).collect(),
        InsertionMode::Swap => {
            let mut sum = vec![ZERO; psi.dim()];
            for b in &branches {
                sum.iter_mut().zip(b.amplitudes()).for_each(|(s, x)| *s += x * 0.5);
            }
            vec![(1.0, StateVector::from_amplitudes(psi.n_qubits(), sum).expect("same dimension"))]
        }
    }
}

/// The three Pauli correlators entering the fidelity.
#[derive(Clone, Debug)]
pub struct Decoder {
    xx: PauliString,
    yy: PauliString,
    zz: PauliString,
}

impl Decoder {
    pub fn new(majoranas: &MajoranaSet, opts: &ProtocolOptions) -> Result<Self> {
        let layout = majoranas.layout();
        if opts.readout_qubit >= layout.n() / 2 || opts.insertion_qubit >= layout.n() / 2 {
            return Err(invalid("readout/insertion qubit outside the boundary"));
        }
        let q = layout.window(Side::R).lo + opts.readout_qubit;
        let (sx, sy, sz) = match opts.readout {
            ReadoutBasis::Qubit => (single_qubit_pauli(layout, q, 1), single_qubit_pauli(layout, q, 2), single_qubit_pauli(layout, q, 3)),
            ReadoutBasis::Majorana => {
                let g0 = majoranas.string(Side::R, 2 * opts.readout_qubit);
                let g1 = majoranas.string(Side::R, 2 * opts.readout_qubit + 1);
                (g0, g1, g0.mul(&g1).scaled(C64::new(0.0, -1.0)))
            }
        };
        let a = |mu| single_qubit_pauli(layout, ANCILLA_QUBIT, mu);
        Ok(Self { xx: sx.mul(&a(1)), yy: sy.mul(&a(2)), zz: sz.mul(&a(3)) })
    }

    /// `¼ (1 + ⟨XX⟩ − ⟨YY⟩ + ⟨ZZ⟩)`.
    pub fn fidelity(&self, psi: &[C64]) -> f64 {
        let xx = self.xx.expectation(psi).re;
        let yy = self.yy.expectation(psi).re;
        let zz = self.zz.expectation(psi).re;
        0.25 * (1.0 + xx - yy + zz)
    }
}

/// One disorder realization with its boundary propagators and initial state.
#[derive(Debug)]
pub struct Realization<'a> {
    pub ham: &'a HamiltonianSet,
    pub beta: f64,
    pub options: ProtocolOptions,
    left: SidePropagator,
    right: SidePropagator,
    tfd: StateVector,
    initial: StateVector,
    decoder: Decoder,
}

/// Branches at `t = 0⁺`, after `U_g`.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub branches: Vec<(f64, StateVector)>,
}

impl<'a> Realization<'a> {
    pub fn new(ham: &'a HamiltonianSet, beta: f64, options: ProtocolOptions) -> Result<Self> {
        let infinite = build_infinite_tfd(&ham.majoranas)?;
        let tfd = build_tfd(beta, &ham.h_l, &infinite, default_dtau(beta))?;
        let initial = assemble_initial_state(&tfd)?;
        let left = SidePropagator::with_eigen(&ham.h_l, &ham.strain_l, ham.eigen(Side::L)?)?
            .ok_or_else(|| invalid("left boundary operators are not dense-local"))?;
        let right = SidePropagator::with_eigen(&ham.h_r, &ham.strain_r, ham.eigen(Side::R)?)?
            .ok_or_else(|| invalid("right boundary operators are not dense-local"))?;
        let decoder = Decoder::new(&ham.majoranas, &options)?;
        Ok(Self { ham, beta, options, left, right, tfd, initial, decoder })
    }

    /// Boundary thermofield double, message and ancilla in |00⟩.
    pub fn tfd(&self) -> &StateVector {
        &self.tfd
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn propagator(&self, side: Side) -> &SidePropagator {
        match side {
            Side::L => &self.left,
            Side::R => &self.right,
        }
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Left preparation and message insertion, before `U_g`.
    pub fn prepare_left(&self, t_star: f64, drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<Prepared> {
        if !(t_star > 0.0) {
            return Err(invalid("t_star must be positive"));
        }
        let back = self.left.evolve(&self.initial, &drive.active(ProtocolStep::PrepBackward), 0.0, -t_star, cfg)?;
        let fwd_drive = drive.active(ProtocolStep::PrepForward);
        let u_fwd = self.left.propagator(&fwd_drive, -t_star, 0.0, cfg)?;
        let branches = insert(&back, self.ham.majoranas.layout(), &self.options)
            .into_iter()
            .map(|(w, b)| Ok((w, self.left.apply(&u_fwd, &b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prepared { branches })
    }

    pub fn couple(&self, pre: &Prepared, g: f64) -> Prepared {
        let branches = pre
            .branches
            .iter()
            .map(|(w, b)| {
                let mut amps = b.amplitudes().to_vec();
                apply_coupling(g, &self.ham.majoranas, &mut amps);
                (*w, StateVector::from_amplitudes(b.n_qubits(), amps).expect("same dimension"))
            })
            .collect();
        Prepared { branches }
    }

    pub fn prepare(&self, g: f64, t_star: f64, drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<Prepared> {
        Ok(self.couple(&self.prepare_left(t_star, drive, cfg)?, g))
    }

    /// Readout fidelities at each time of an ascending grid.
    pub fn readout(&self, prepared: &Prepared, t_grid: &[f64], drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<Vec<f64>> {
        let active = drive.active(ProtocolStep::Readout);
        let mut out = vec![0.0; t_grid.len()];
        self.right.lattice_sweep(&active, t_grid, cfg, |k, u| {
            out[k] = self.decode(prepared, u)?;
            Ok(())
        })?;
        Ok(out)
    }

    /// Right readout propagator `U_R(t ← 0)`.
    pub fn readout_propagator(&self, t: f64, drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<DenseMatrix> {
        let mut out = None;
        self.right.lattice_sweep(&drive.active(ProtocolStep::Readout), &[t], cfg, |_, u| {
            out = Some(u.clone());
            Ok(())
        })?;
        Ok(out.expect("one readout time"))
    }

    /// Branch-weighted decoder fidelity after applying the right-block unitary `u`.
    pub fn decode(&self, prepared: &Prepared, u: &DenseMatrix) -> Result<f64> {
        let mut f = 0.0;
        for (w, b) in &prepared.branches {
            f += w * self.decoder.fidelity(self.right.apply(u, b)?.amplitudes());
        }
        Ok(f)
    }

    /// Readout states (branches) at each grid time, handed to `visit`.
    pub fn readout_states(
        &self,
        prepared: &Prepared,
        t_grid: &[f64],
        active: &ActiveDrive,
        cfg: &PropagatorConfig,
        mut visit: impl FnMut(usize, &[(f64, StateVector)]) -> Result<()>,
    ) -> Result<()> {
        self.right.lattice_sweep(active, t_grid, cfg, |k, u| {
            let states = prepared
                .branches
                .iter()
                .map(|(w, b)| Ok((*w, self.right.apply(u, b)?)))
                .collect::<Result<Vec<_>>>()?;
            visit(k, &states)
        })
    }

    pub fn fidelity(&self, params: &ProtocolParams, drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<f64> {
        params.validate()?;
        let prepared = self.prepare(params.g, params.t_star, drive, cfg)?;
        Ok(self.readout(&prepared, &[params.t_r], drive, cfg)?[0])
    }

    /// Fidelity on a `(g, t)` grid with `t* = t_R = t`.
    pub fn fidelity_surface(&self, g_grid: &[f64], t_grid: &[f64], drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<Vec<Vec<f64>>> {
        let mut surface = vec![vec![0.0; t_grid.len()]; g_grid.len()];
        for (ti, &t) in t_grid.iter().enumerate() {
            let pre = self.prepare_left(t, drive, cfg)?;
            let u = self.readout_propagator(t, drive, cfg)?;
            for (gi, &g) in g_grid.iter().enumerate() {
                surface[gi][ti] = self.decode(&self.couple(&pre, g), &u)?;
            }
        }
        Ok(surface)
    }
}

/// Single-shot protocol run on a fresh realization.
pub fn run_teleportation(
    params: &ProtocolParams,
    ham: &HamiltonianSet,
    drive: &DriveSpec,
    cfg: &PropagatorConfig,
    options: &ProtocolOptions,
) -> Result<f64> {
    Realization::new(ham, params.beta, *options)?.fidelity(params, drive, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub t_grid: Vec<f64>,
    /// `values[r][k]`: realization `r`, grid point `k`.
    pub values: Vec<Vec<f64>>,
    pub summary: Vec<Summary>,
}

impl FidelityCurve {
    pub fn from_values(t_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        let summary = summarize_columns(&values);
        Self { t_grid, values, summary }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.mean).collect()
    }
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// `𝓕(t_R)` for each realization with the preparation shared across the grid.
pub fn fidelity_profile(
    realizations: &[Realization<'_>],
    g: f64,
    t_star: f64,
    t_grid: &[f64],
    drive: &DriveSpec,
    cfg: &PropagatorConfig,
) -> Result<FidelityCurve> {
    check_grid(t_grid, "t_R")?;
    let values = realizations
        .par_iter()
        .map(|r| {
            let pre = r.prepare(g, t_star, drive, cfg)?;
            r.readout(&pre, t_grid, drive, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve::from_values(t_grid.to_vec(), values))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub g_opt: f64,
    pub t_opt: f64,
    pub f_opt: f64,
    pub g_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Seed-averaged fidelity, `surface[g][t]`.
    pub surface: Vec<Vec<f64>>,
}

/// Exhaustive `(g, t)` search with `t* = t_R = t`; ties go to the smallest `g`, then `t`.
pub fn optimize(
    realizations: &[Realization<'_>],
    drive: &DriveSpec,
    g_grid: &[f64],
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<OptResult> {
    check_grid(g_grid, "g")?;
    check_grid(t_grid, "t")?;
    if realizations.is_empty() {
        return Err(invalid("optimizer needs at least one realization"));
    }
    let per_seed = realizations
        .par_iter()
        .map(|r| r.fidelity_surface(g_grid, t_grid, drive, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_surface(&per_seed, g_grid, t_grid))
}

pub fn argmax_surface(per_seed: &[Vec<Vec<f64>>], g_grid: &[f64], t_grid: &[f64]) -> OptResult {
    let n = per_seed.len() as f64;
    let mut surface = vec![vec![0.0; t_grid.len()]; g_grid.len()];
    for s in per_seed {
        for (gi, row) in s.iter().enumerate() {
            for (ti, v) in row.iter().enumerate() {
                surface[gi][ti] += v;
            }
        }
    }
    surface.iter_mut().flatten().for_each(|v| *v /= n);
    let (mut bg, mut bt) = (0, 0);
    for gi in 0..g_grid.len() {
        for ti in 0..t_grid.len() {
            if surface[gi][ti] > surface[bg][bt] {
                bg = gi;
                bt = ti;
            }
        }
    }
    OptResult {
        g_opt: g_grid[bg],
        t_opt: t_grid[bt],
        f_opt: surface[bg][bt],
        g_grid: g_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        surface,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReoptResult {
    pub f_fixed: f64,
    pub f_reopt: f64,
    pub r: f64,
    pub g_reopt: f64,
    pub t_reopt: f64,
    /// Per-realization fidelities at the fixed calibration.
    pub fixed_values: Vec<f64>,
    /// Per-realization fidelities at the re-optimized point.
    pub reopt_values: Vec<f64>,
}

/// Fixed-calibration fidelity versus the grid maximum under the live drive.
pub fn reopt_ratio(
    realizations: &[Realization<'_>],
    drive: &DriveSpec,
    fixed: &ProtocolParams,
    g_grid: &[f64],
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<ReoptResult> {
    drive.validate()?;
    let opt = optimize(realizations, drive, g_grid, t_grid, cfg)?;
    let fixed_values = realizations
        .par_iter()
        .map(|r| r.fidelity(fixed, drive, cfg))
        .collect::<Result<Vec<_>>>()?;
    let at_opt = ProtocolParams { g: opt.g_opt, t_star: opt.t_opt, t_r: opt.t_opt, beta: fixed.beta };
    let reopt_values = realizations
        .par_iter()
        .map(|r| r.fidelity(&at_opt, drive, cfg))
        .collect::<Result<Vec<_>>>()?;
    let f_fixed = Summary::of(&fixed_values).mean;
    let f_reopt = opt.f_opt.max(f_fixed);
    Ok(ReoptResult { f_fixed, f_reopt, r: f_reopt / f_fixed, g_reopt: opt.g_opt, t_reopt: opt.t_opt, fixed_values, reopt_values })
}
