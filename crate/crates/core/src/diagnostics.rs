//! Thermal OTOCs, scrambling-time extraction and the boundary strain response.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{ActiveDrive, DriveSpec, ProtocolStep, Waveform};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::HamiltonianSet;
use crate::linalg::{self, DenseMatrix, ZERO};
use crate::propagation::{PropagatorConfig, SidePropagator};
use crate::protocol::Realization;
use crate::register::{Side, Window};
use crate::state::{boundary_matrix, StateVector};
use crate::stats::Summary;

pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.25;

/// Left-boundary Majorana pairs used for the ensemble OTOC.
pub const DEFAULT_PAIRS: [(usize, usize); 3] = [(0, 2), (0, 4), (2, 6)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtocCurve {
    pub t_grid: Vec<f64>,
    /// `C(t) = (F(t) + 1)/2`.
    pub values: Vec<f64>,
    pub pair: (usize, usize),
    pub c_sat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScramblingResult {
    pub t_scr: f64,
    pub c_sat: f64,
    pub threshold: f64,
    pub bracket: (f64, f64),
}

/// Uniform grid `0, step, …` up to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(t_max >= 0.0) {
        return Err(invalid("grid step must be positive and t_max non-negative"));
    }
    let n = (t_max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

/// Mean of the final `fraction` of the curve (at least one point).
pub fn plateau(values: &[f64], fraction: f64) -> Result<f64> {
    if values.is_empty() || !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid("plateau needs a non-empty curve and a fraction in (0, 1]"));
    }
    let start = ((1.0 - fraction) * values.len() as f64).floor() as usize;
    let tail = &values[start.min(values.len() - 1)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

fn left_block(ham: &HamiltonianSet, i: usize) -> Result<DenseMatrix> {
    let layout = ham.majoranas.layout();
    if i >= layout.n() {
        return Err(invalid(format!("Majorana index {i} is outside the left boundary")));
    }
    let p = ham.majoranas.string(Side::L, i);
    let d = layout.boundary_dim();
    let mut m = DenseMatrix::zeros(d, d);
    for l in 0..d {
        let (sign, target) = p.act(l * d);
        debug_assert_eq!(target % d, 0);
        m[(target / d, l)] = p.coeff * sign;
    }
    Ok(m)
}

fn left_propagator(ham: &HamiltonianSet) -> Result<SidePropagator> {
    SidePropagator::with_eigen(&ham.h_l, &ham.strain_l, ham.eigen(Side::L)?)?
        .ok_or_else(|| invalid("left boundary operators are not dense-local"))
}

/// `C(t)` for one left pair `(γ_i, γ_j)` on the given TFD, with `W(t) = U_L† γ_i U_L`.
pub fn compute_otoc(
    pair: (usize, usize),
    ham: &HamiltonianSet,
    drive: &DriveSpec,
    tfd: &StateVector,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<OtocCurve> {
    let mut curves = compute_otocs(&[pair], ham, drive, tfd, t_grid, cfg)?;
    Ok(curves.remove(0))
}

/// Several pairs sharing one propagation sweep.
pub fn compute_otocs(
    pairs: &[(usize, usize)],
    ham: &HamiltonianSet,
    drive: &DriveSpec,
    tfd: &StateVector,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<Vec<OtocCurve>> {
    if t_grid.len() < 2 {
        return Err(invalid("OTOC grid needs at least two points"));
    }
    for &(i, j) in pairs {
        if i == j {
            return Err(invalid(format!("degenerate OTOC pair ({i}, {i})")));
        }
    }
    let layout = ham.majoranas.layout();
    if tfd.n_qubits() != layout.n_qubits() {
        return Err(invalid("TFD does not match the register"));
    }
    let psi = boundary_matrix(layout, tfd);
    let rho = linalg::mul(psi.as_ref(), psi.adjoint());
    let blocks = pairs
        .iter()
        .map(|&(i, j)| Ok((left_block(ham, i)?, left_block(ham, j)?)))
        .collect::<Result<Vec<_>>>()?;
    let prop = left_propagator(ham)?;
    let active = drive.on_side(Side::L);
    let mut values = vec![vec![0.0; t_grid.len()]; pairs.len()];
    prop.lattice_sweep(&active, t_grid, cfg, |k, u| {
        for (p, (gi, v)) in blocks.iter().enumerate() {
            let gu = linalg::mul(gi.as_ref(), u.as_ref());
            let w = linalg::mul(u.adjoint(), gu.as_ref());
            let wv = linalg::mul(w.as_ref(), v.as_ref());
            let wvwv = linalg::mul(wv.as_ref(), wv.as_ref());
            let prod = linalg::mul(wvwv.as_ref(), rho.as_ref());
            let mut tr = ZERO;
            for r in 0..prod.nrows() {
                tr += prod[(r, r)];
            }
            values[p][k] = (tr.re + 1.0) / 2.0;
        }
        Ok(())
    })?;
    pairs
        .iter()
        .zip(values)
        .map(|(&pair, values)| {
            let c_sat = plateau(&values, DEFAULT_PLATEAU_FRACTION)?;
            Ok(OtocCurve { t_grid: t_grid.to_vec(), values, pair, c_sat })
        })
        .collect()
}

/// Half-saturation time: first upward crossing of `C_sat/2`, linearly interpolated.
pub fn extract_t_scr(t_grid: &[f64], values: &[f64], plateau_fraction: f64) -> Result<ScramblingResult> {
    if t_grid.len() != values.len() || t_grid.len() < 2 {
        return Err(invalid("curve needs at least two points and matching grid"));
    }
    let c_sat = plateau(values, plateau_fraction)?;
    let threshold = c_sat / 2.0;
    for k in 0..values.len() - 1 {
        let (a, b) = (values[k], values[k + 1]);
        if a < threshold && b >= threshold {
            let (t0, t1) = (t_grid[k], t_grid[k + 1]);
            let t_scr = t0 + (threshold - a) / (b - a) * (t1 - t0);
            return Ok(ScramblingResult { t_scr, c_sat, threshold, bracket: (t0, t1) });
        }
    }
    Err(Error::NoCrossing(format!("curve never crosses {threshold:.4} upward within t ≤ {:.3}", t_grid[t_grid.len() - 1])))
}

pub fn extract_curve_t_scr(curve: &OtocCurve, plateau_fraction: f64) -> Result<ScramblingResult> {
    extract_t_scr(&curve.t_grid, &curve.values, plateau_fraction)
}

/// Pair-averaged OTOC of one realization.
pub fn pair_averaged_otoc(
    pairs: &[(usize, usize)],
    ham: &HamiltonianSet,
    drive: &DriveSpec,
    tfd: &StateVector,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(invalid("no OTOC pairs given"));
    }
    let curves = compute_otocs(pairs, ham, drive, tfd, t_grid, cfg)?;
    let mut mean = vec![0.0; t_grid.len()];
    for c in &curves {
        for (m, v) in mean.iter_mut().zip(&c.values) {
            *m += v / curves.len() as f64;
        }
    }
    Ok(mean)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    pub epsilon: f64,
    /// Per-realization scrambling times.
    pub t_scr: Vec<f64>,
    /// Per-realization `t_scr(ε) − t_scr(0)`.
    pub delta: Vec<f64>,
    pub t_scr_summary: Summary,
    pub delta_summary: Summary,
    /// Per-realization pair-averaged curves.
    pub curves: Vec<Vec<f64>>,
    pub c_sat: Summary,
}

/// Scrambling delay against drive amplitude under a bilateral monochromatic drive.
pub fn scrambling_delay_scan(
    realizations: &[Realization<'_>],
    eps_list: &[f64],
    omega: f64,
    pairs: &[(usize, usize)],
    t_grid: &[f64],
    plateau_fraction: f64,
    cfg: &PropagatorConfig,
) -> Result<Vec<DelayPoint>> {
    if eps_list.first() != Some(&0.0) || eps_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("amplitude list must be strictly ascending and start at 0"));
    }
    if realizations.is_empty() {
        return Err(invalid("no realizations given"));
    }
    let per_real: Vec<Vec<(Vec<f64>, ScramblingResult)>> = realizations
        .par_iter()
        .map(|r| {
            eps_list
                .iter()
                .map(|&eps| {
                    let drive = DriveSpec::bilateral(eps, Waveform::Monochromatic { omega });
                    let c = pair_averaged_otoc(pairs, r.ham, &drive, r.tfd(), t_grid, cfg)?;
                    let s = extract_t_scr(t_grid, &c, plateau_fraction)?;
                    Ok((c, s))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(eps_list
        .iter()
        .enumerate()
        .map(|(e, &epsilon)| {
            let t_scr: Vec<f64> = per_real.iter().map(|r| r[e].1.t_scr).collect();
            let delta: Vec<f64> = per_real.iter().map(|r| r[e].1.t_scr - r[0].1.t_scr).collect();
            let c_sat: Vec<f64> = per_real.iter().map(|r| r[e].1.c_sat).collect();
            DelayPoint {
                epsilon,
                t_scr_summary: Summary::of(&t_scr),
                delta_summary: Summary::of(&delta),
                c_sat: Summary::of(&c_sat),
                curves: per_real.iter().map(|r| r[e].0.clone()).collect(),
                t_scr,
                delta,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrainResponse {
    pub t_grid: Vec<f64>,
    /// `⟨H_strain^R⟩` along the readout evolution.
    pub values: Vec<f64>,
    /// Injected waveform `h(t)` on the same grid.
    pub drive_samples: Vec<f64>,
    pub epsilon: f64,
    pub waveform: Waveform,
}

/// `S_R(t)` during right readout from the coupled state at `t = 0⁺`.
/// Left preparation runs without drive; only the readout evolution is driven.
pub fn strain_response(
    realization: &Realization<'_>,
    g: f64,
    t_star: f64,
    drive: &DriveSpec,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<StrainResponse> {
    drive.validate()?;
    if !drive.active(ProtocolStep::PrepBackward).is_off() || !drive.active(ProtocolStep::PrepForward).is_off() {
        return Err(invalid("strain response requires a right-only drive"));
    }
    let prepared = realization.prepare(g, t_star, &DriveSpec::none(), cfg)?;
    let active = drive.active(ProtocolStep::Readout);
    let strain = &realization.ham.strain_r;
    let mut values = vec![0.0; t_grid.len()];
    realization.readout_states(&prepared, t_grid, &active, cfg, |k, states| {
        values[k] = states.iter().map(|(w, s)| w * s.expectation(strain).re).sum();
        Ok(())
    })?;
    let drive_samples = t_grid.iter().map(|&t| active_samples(&active, t)).collect();
    Ok(StrainResponse { t_grid: t_grid.to_vec(), values, drive_samples, epsilon: drive.epsilon, waveform: drive.waveform })
}

fn active_samples(active: &ActiveDrive, t: f64) -> f64 {
    if active.is_off() {
        0.0
    } else {
        active.waveform.eval(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Susceptibility {
    pub t_peak: f64,
    pub s_peak: f64,
    pub h_peak: f64,
    pub chi: f64,
}

/// `χ̄ = S_peak / (ε ‖H_strain‖ h(t_peak))` at the largest `|S_R|` of a mean response.
pub fn susceptibility(t_grid: &[f64], values: &[f64], drive_samples: &[f64], epsilon: f64, strain_norm: f64) -> Result<Susceptibility> {
    if values.is_empty() || values.len() != t_grid.len() || drive_samples.len() != t_grid.len() {
        return Err(invalid("response and grid lengths differ"));
    }
    let k = (0..values.len())
        .max_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(b.cmp(&a)))
        .expect("non-empty");
    let h_peak = drive_samples[k];
    let denom = epsilon * strain_norm * h_peak;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateInput(format!("drive vanishes at the response peak t = {}", t_grid[k])));
    }
    Ok(Susceptibility { t_peak: t_grid[k], s_peak: values[k], h_peak, chi: values[k] / denom })
}

/// Window of the left boundary, exposed for callers composing their own left operators.
pub fn left_window(ham: &HamiltonianSet) -> Window {
    ham.majoranas.layout().window(Side::L)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::HamiltonianOptions;
    use crate::operator::{LocalBlock, OperatorMatrix};
    use crate::protocol::ProtocolOptions;
    use crate::register::{build_layout, MajoranaSet};

    #[test]
    fn synthetic_crossing() {
        let t = uniform_grid(20.0, 0.5).unwrap();
        let c: Vec<f64> = t.iter().map(|&t| (t / 10.0).min(0.5)).collect();
        let r = extract_t_scr(&t, &c, 0.25).unwrap();
        assert!((r.c_sat - 0.5).abs() < 1e-15);
        assert!((r.t_scr - 2.5).abs() < 1e-12);
        assert!(r.bracket.0 < r.t_scr && r.t_scr <= r.bracket.1);
    }

    #[test]
    fn no_crossing_is_reported() {
        let t = uniform_grid(4.0, 0.5).unwrap();
        let c = vec![0.3; t.len()];
        assert!(matches!(extract_t_scr(&t, &c, 0.25), Err(Error::NoCrossing(_))));
    }

    #[test]
    fn left_block_matches_full_operator() {
        let set = MajoranaSet::new(build_layout(6).unwrap());
        let ham = HamiltonianSet::sample(&set, 1.0, 3, &HamiltonianOptions::default()).unwrap();
        let d = set.layout().boundary_dim();
        for i in 0..6 {
            let block = left_block(&ham, i).unwrap();
            let local = OperatorMatrix::local(set.layout().n_qubits(), left_window(&ham), LocalBlock::Dense(block.clone())).unwrap();
            let full = set.operator(Side::L, i).to_csr();
            assert!(local.to_csr().max_abs_diff(&full) < 1e-14);
            assert_eq!(block.nrows(), d);
        }
    }

    #[test]
    fn otoc_starts_at_zero_and_rejects_degenerate_pair() {
        let set = MajoranaSet::new(build_layout(8).unwrap());
        let ham = HamiltonianSet::sample(&set, 1.0, 1, &HamiltonianOptions::default()).unwrap();
        let r = Realization::new(&ham, 2.0, ProtocolOptions::default()).unwrap();
        let t = uniform_grid(2.0, 0.5).unwrap();
        let cfg = PropagatorConfig::default();
        let c = compute_otoc((0, 3), &ham, &DriveSpec::none(), r.tfd(), &t, &cfg).unwrap();
        assert!(c.values[0].abs() < 1e-10);
        assert!(c.values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        assert!(compute_otoc((2, 2), &ham, &DriveSpec::none(), r.tfd(), &t, &cfg).is_err());
    }

    #[test]
    fn susceptibility_uses_largest_magnitude() {
        let t = [0.0, 1.0, 2.0];
        let s = susceptibility(&t, &[0.01, -0.08, 0.05], &[0.1, 0.4, 0.2], 0.5, 5.0).unwrap();
        assert_eq!(s.t_peak, 1.0);
        assert!((s.chi - (-0.08 / (0.5 * 5.0 * 0.4))).abs() < 1e-15);
        assert!(susceptibility(&t, &[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], 0.5, 5.0).is_err());
    }
}
