//! Disorder-ensemble experiment drivers producing [`ResultTable`]s.

use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::config::{ConvergencePoint, ExperimentConfig, ExperimentKind, OperatingPoint};
use crate::diagnostics::{self, extract_t_scr, pair_averaged_otoc, scrambling_delay_scan, strain_response, susceptibility};
use crate::drive::{DriveSpec, Waveform};
use crate::error::Result;
use crate::hamiltonian::HamiltonianSet;
use crate::persist::ResultTable;
use crate::propagation::{PropagatorConfig, Scheme};
use crate::protocol::{argmax_surface, fidelity_profile, reopt_ratio, ProtocolParams, Realization};
use crate::register::{build_layout, MajoranaSet};
use crate::stats::{quadratic_peak, Summary};

const NAN: f64 = f64::NAN;

/// Registers with at least this many amplitudes are processed one realization at a time.
const SEQUENTIAL_DIM: usize = 1 << 18;

/// Independent coupling draws for seeds `base_seed + r`.
pub struct Ensemble {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub hams: Vec<HamiltonianSet>,
}

impl Ensemble {
    pub fn build(cfg: &ExperimentConfig, n: usize, n_avg: usize) -> Result<Self> {
        let set = MajoranaSet::new(build_layout(n)?);
        let seeds = cfg.seeds(n_avg);
        let hams = seeds
            .par_iter()
            .map(|&s| HamiltonianSet::sample(&set, cfg.j, s, &cfg.hamiltonian))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, seeds, hams })
    }

    pub fn realizations(&self, cfg: &ExperimentConfig) -> Result<Vec<Realization<'_>>> {
        self.hams.iter().map(|h| Realization::new(h, cfg.beta, cfg.protocol)).collect()
    }
}

/// Applies `f` to every realization, in parallel unless the register is large.
fn map_realizations<T: Send>(
    reals: &[Realization<'_>],
    f: impl Fn(&Realization<'_>) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let large = reals.first().is_some_and(|r| r.ham.majoranas.layout().total_dim() >= SEQUENTIAL_DIM);
    if large {
        reals.iter().map(f).collect()
    } else {
        reals.par_iter().map(f).collect()
    }
}

/// Leave-one-out estimate: the full-sample statistic and its jackknife standard error.
pub fn jackknife(n: usize, stat: impl Fn(&[usize]) -> f64) -> (f64, f64) {
    let all: Vec<usize> = (0..n).collect();
    let full = stat(&all);
    if n < 2 {
        return (full, 0.0);
    }
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let keep: Vec<usize> = all.iter().copied().filter(|&k| k != i).collect();
            stat(&keep)
        })
        .collect();
    let m = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (full, var.sqrt())
}

fn subset_mean(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
}

fn subset_curve(curves: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let w = curves[0].len();
    (0..w).map(|k| idx.iter().map(|&i| curves[i][k]).sum::<f64>() / idx.len() as f64).collect()
}

/// Chosen `(g*, t*)` and, when calibrated, the mean fidelity there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operating {
    pub g: f64,
    pub t_star: f64,
    pub f_opt: Option<f64>,
}

impl Operating {
    pub fn params(&self, beta: f64) -> ProtocolParams {
        ProtocolParams { g: self.g, t_star: self.t_star, t_r: self.t_star, beta }
    }
}

/// Resolves the configured operating point for system size `cfg.n`.
pub fn operating_point(cfg: &ExperimentConfig) -> Result<Operating> {
    match cfg.operating_point {
        OperatingPoint::Fixed { g, t_star } => Ok(Operating { g, t_star, f_opt: None }),
        OperatingPoint::Calibrate => {
            let ens = Ensemble::build(cfg, cfg.n, cfg.calibration.n_avg)?;
            let reals = ens.realizations(cfg)?;
            let g = cfg.calibration.g_grid.values()?;
            let t = cfg.calibration.t_grid.values()?;
            let surfaces = map_realizations(&reals, |r| r.fidelity_surface(&g, &t, &DriveSpec::none(), &cfg.propagator))?;
            let opt = argmax_surface(&surfaces, &g, &t);
            info!("calibrated operating point g*={} t*={} F={:.4}", opt.g_opt, opt.t_opt, opt.f_opt);
            Ok(Operating { g: opt.g_opt, t_star: opt.t_opt, f_opt: Some(opt.f_opt) })
        }
    }
}

/// Runs one experiment kind end to end.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let start = Instant::now();
    let mut table = match kind {
        ExperimentKind::AmplitudeScan => run_amplitude_scan(cfg),
        ExperimentKind::FreqScan => run_frequency_scan(cfg),
        ExperimentKind::Chirp => run_chirp_experiment(cfg),
        ExperimentKind::Otoc => run_otoc_experiment(cfg),
        ExperimentKind::ReoptMap => run_reopt_map(cfg),
        ExperimentKind::Scaling => run_scaling_experiment(cfg),
        ExperimentKind::Convergence => run_convergence_study(cfg),
        ExperimentKind::Calibrate => run_calibration(cfg),
    }?;
    table.timings.push(("total".into(), start.elapsed().as_secs_f64()));
    Ok(table)
}

fn push_operating(table: &mut ResultTable, op: &Operating, seeds: &[u64]) {
    let nan = vec![NAN; table.coord_names.len()];
    table.push_derived(&nan, "g_star", seeds, op.g, 0.0);
    table.push_derived(&nan, "t_star", seeds, op.t_star, 0.0);
}

pub fn run_calibration(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Calibrate;
    let n_avg = cfg.n_avg.unwrap_or(cfg.calibration.n_avg);
    let ens = Ensemble::build(cfg, cfg.n, n_avg)?;
    let reals = ens.realizations(cfg)?;
    let g = cfg.calibration.g_grid.values()?;
    let t = cfg.calibration.t_grid.values()?;
    let surfaces = map_realizations(&reals, |r| r.fidelity_surface(&g, &t, &DriveSpec::none(), &cfg.propagator))?;
    let opt = argmax_surface(&surfaces, &g, &t);
    let mut table = ResultTable::new(kind.name(), &["g", "t"], &cfg.hash());
    for (gi, &gv) in g.iter().enumerate() {
        for (ti, &tv) in t.iter().enumerate() {
            let vals: Vec<f64> = surfaces.iter().map(|s| s[gi][ti]).collect();
            table.push(&[gv, tv], "F", &ens.seeds, &vals);
        }
    }
    let gi = g.iter().position(|&x| x == opt.g_opt).expect("on grid");
    let ti = t.iter().position(|&x| x == opt.t_opt).expect("on grid");
    let at_opt: Vec<f64> = surfaces.iter().map(|s| s[gi][ti]).collect();
    table.push(&[NAN, NAN], "F_opt", &ens.seeds, &at_opt);
    let op = Operating { g: opt.g_opt, t_star: opt.t_opt, f_opt: Some(opt.f_opt) };
    push_operating(&mut table, &op, &ens.seeds);
    Ok(table)
}

fn fidelities(reals: &[Realization<'_>], params: &ProtocolParams, drive: &DriveSpec, cfg: &PropagatorConfig) -> Result<Vec<f64>> {
    map_realizations(reals, |r| r.fidelity(params, drive, cfg))
}

pub fn run_amplitude_scan(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::AmplitudeScan;
    let op = operating_point(cfg)?;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let params = op.params(cfg.beta);
    let omega = cfg.amplitude.omega;
    let mut table = ResultTable::new(kind.name(), &["epsilon"], &cfg.hash());
    push_operating(&mut table, &op, &ens.seeds);
    let f0 = fidelities(&reals, &params, &DriveSpec::none(), &cfg.propagator)?;
    let f0_mean = Summary::of(&f0).mean;
    for eps in cfg.amplitude.eps_grid.values()? {
        let t = Instant::now();
        let f = if eps == 0.0 {
            f0.clone()
        } else {
            fidelities(&reals, &params, &DriveSpec::bilateral(eps, Waveform::Monochromatic { omega }), &cfg.propagator)?
        };
        let delta: Vec<f64> = f0.iter().zip(&f).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = f.iter().map(|x| (x - 0.25) / (f0_mean - 0.25)).collect();
        table.push(&[eps], "F", &ens.seeds, &f);
        table.push(&[eps], "delta_F", &ens.seeds, &delta);
        table.push(&[eps], "R", &ens.seeds, &r);
        table.timings.push((format!("epsilon={eps}"), t.elapsed().as_secs_f64()));
    }
    Ok(table)
}

pub fn run_frequency_scan(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::FreqScan;
    let op = operating_point(cfg)?;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let params = op.params(cfg.beta);
    let eps = cfg.frequency.epsilon;
    let mut table = ResultTable::new(kind.name(), &["omega"], &cfg.hash());
    push_operating(&mut table, &op, &ens.seeds);
    let f0 = fidelities(&reals, &params, &DriveSpec::none(), &cfg.propagator)?;
    table.push(&[NAN], "F0", &ens.seeds, &f0);
    for omega in cfg.frequency.omega_grid.values()? {
        let t = Instant::now();
        let f = fidelities(&reals, &params, &DriveSpec::bilateral(eps, Waveform::Monochromatic { omega }), &cfg.propagator)?;
        let delta: Vec<f64> = f0.iter().zip(&f).map(|(a, b)| a - b).collect();
        table.push(&[omega], "F", &ens.seeds, &f);
        table.push(&[omega], "delta_F", &ens.seeds, &delta);
        if eps > 0.0 {
            let sigma: Vec<f64> = delta.iter().map(|d| d / (eps * eps)).collect();
            table.push(&[omega], "susceptibility", &ens.seeds, &sigma);
        }
        table.timings.push((format!("omega={omega}"), t.elapsed().as_secs_f64()));
    }
    Ok(table)
}

/// Peak of the mean curve over `idx` by quadratic interpolation.
fn curve_peak(t: &[f64], curves: &[Vec<f64>], idx: &[usize]) -> (f64, f64) {
    quadratic_peak(t, &subset_curve(curves, idx))
}

pub fn run_chirp_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Chirp;
    let op = operating_point(cfg)?;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let c = &cfg.chirp;
    let waveform = Waveform::Chirp { omega_t: c.omega_t, omega_l: c.omega_l, t_star: op.t_star };
    let driven = DriveSpec::right_readout(c.epsilon, waveform);
    let t_grid = c.t_grid.values()?;
    let mut table = ResultTable::new(kind.name(), &["t"], &cfg.hash());
    push_operating(&mut table, &op, &ens.seeds);

    let clock = Instant::now();
    let base = fidelity_profile(&reals, op.g, op.t_star, &t_grid, &DriveSpec::none(), &cfg.propagator)?;
    let pert = fidelity_profile(&reals, op.g, op.t_star, &t_grid, &driven, &cfg.propagator)?;
    table.timings.push(("fidelity profiles".into(), clock.elapsed().as_secs_f64()));
    for (k, &t) in t_grid.iter().enumerate() {
        let u: Vec<f64> = base.values.iter().map(|v| v[k]).collect();
        let d: Vec<f64> = pert.values.iter().map(|v| v[k]).collect();
        let diff: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - b).collect();
        table.push(&[t], "F_undriven", &ens.seeds, &u);
        table.push(&[t], "F_driven", &ens.seeds, &d);
        table.push(&[t], "delta_F", &ens.seeds, &diff);
    }
    let n = reals.len();
    let seeds = &ens.seeds;
    let peak = |curves: &[Vec<f64>], pick: fn((f64, f64)) -> f64| jackknife(n, |idx| pick(curve_peak(&t_grid, curves, idx)));
    let (tu, tu_e) = peak(&base.values, |p| p.0);
    let (td, td_e) = peak(&pert.values, |p| p.0);
    let (fu, fu_e) = peak(&base.values, |p| p.1);
    let (fd, fd_e) = peak(&pert.values, |p| p.1);
    let (shift, shift_e) = jackknife(n, |idx| curve_peak(&t_grid, &pert.values, idx).0 - curve_peak(&t_grid, &base.values, idx).0);
    let (supp, supp_e) = jackknife(n, |idx| curve_peak(&t_grid, &base.values, idx).1 - curve_peak(&t_grid, &pert.values, idx).1);
    table.push_derived(&[NAN], "t_peak_undriven", seeds, tu, tu_e);
    table.push_derived(&[NAN], "t_peak_driven", seeds, td, td_e);
    table.push_derived(&[NAN], "F_peak_undriven", seeds, fu, fu_e);
    table.push_derived(&[NAN], "F_peak_driven", seeds, fd, fd_e);
    table.push_derived(&[NAN], "peak_shift", seeds, shift, shift_e);
    table.push_derived(&[NAN], "peak_suppression", seeds, supp, supp_e);

    // Boundary strain response along the driven readout, from t = 0.
    let clock = Instant::now();
    let step = if t_grid.len() > 1 { t_grid[1] - t_grid[0] } else { 0.1 };
    let s_grid = diagnostics::uniform_grid(t_grid[t_grid.len() - 1], step)?;
    let responses = map_realizations(&reals, |r| strain_response(r, op.g, op.t_star, &driven, &s_grid, &cfg.propagator))?;
    let quiet = map_realizations(&reals, |r| strain_response(r, op.g, op.t_star, &DriveSpec::none(), &s_grid, &cfg.propagator))?;
    table.timings.push(("strain response".into(), clock.elapsed().as_secs_f64()));
    let h = &responses[0].drive_samples;
    for (k, &t) in s_grid.iter().enumerate() {
        let s: Vec<f64> = responses.iter().map(|r| r.values[k]).collect();
        let q: Vec<f64> = quiet.iter().map(|r| r.values[k]).collect();
        table.push(&[t], "S_R", seeds, &s);
        table.push(&[t], "S_R_undriven", seeds, &q);
        table.push_derived(&[t], "h", seeds, h[k], 0.0);
    }
    let curves: Vec<Vec<f64>> = responses.iter().map(|r| r.values.clone()).collect();
    let norm = cfg.hamiltonian.strain_norm;
    let chi_of = |idx: &[usize]| {
        susceptibility(&s_grid, &subset_curve(&curves, idx), h, c.epsilon, norm).map_or(NAN, |s| s.chi)
    };
    let mean_curve = subset_curve(&curves, &(0..n).collect::<Vec<_>>());
    if let Ok(s) = susceptibility(&s_grid, &mean_curve, h, c.epsilon, norm) {
        let (_, chi_e) = jackknife(n, chi_of);
        table.push_derived(&[s.t_peak], "S_R_peak", seeds, s.s_peak, 0.0);
        table.push_derived(&[s.t_peak], "h_peak", seeds, s.h_peak, 0.0);
        table.push_derived(&[s.t_peak], "chi", seeds, s.chi, chi_e);
    }
    Ok(table)
}

pub fn run_otoc_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Otoc;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let o = &cfg.otoc;
    let t_grid = o.t_grid.values()?;
    let seeds = &ens.seeds;
    let mut table = ResultTable::new(kind.name(), &["epsilon", "t"], &cfg.hash());
    let clock = Instant::now();
    let points = scrambling_delay_scan(&reals, &o.eps_list, o.omega, &o.pairs, &t_grid, o.plateau_fraction, &cfg.propagator)?;
    table.timings.push(("delay scan".into(), clock.elapsed().as_secs_f64()));
    let n = reals.len();
    for p in &points {
        for (k, &t) in t_grid.iter().enumerate() {
            let c: Vec<f64> = p.curves.iter().map(|v| v[k]).collect();
            table.push(&[p.epsilon, t], "C", seeds, &c);
        }
        let c_sat: Vec<f64> = p.curves.iter().map(|v| diagnostics::plateau(v, o.plateau_fraction)).collect::<Result<_>>()?;
        table.push(&[p.epsilon, NAN], "c_sat", seeds, &c_sat);
        table.push(&[p.epsilon, NAN], "t_scr", seeds, &p.t_scr);
        table.push(&[p.epsilon, NAN], "delta_t_scr", seeds, &p.delta);
        let (tm, tm_e) = jackknife(n, |idx| {
            extract_t_scr(&t_grid, &subset_curve(&p.curves, idx), o.plateau_fraction).map_or(NAN, |s| s.t_scr)
        });
        table.push_derived(&[p.epsilon, NAN], "t_scr_mean_curve", seeds, tm, tm_e);
    }
    if points.len() >= 3 {
        let first = &points[1];
        for p in &points[2..] {
            let (ratio, err) = jackknife(n, |idx| subset_mean(&p.delta, idx) / subset_mean(&first.delta, idx));
            table.push_derived(&[p.epsilon, NAN], "increment_ratio", seeds, ratio, err);
        }
    }
    // Operator-pair resolution at zero drive.
    let clock = Instant::now();
    for &(i, j) in &o.pairs {
        let curves = map_realizations(&reals, |r| pair_averaged_otoc(&[(i, j)], r.ham, &DriveSpec::none(), r.tfd(), &t_grid, &cfg.propagator))?;
        let name = format!("C_pair_{i}_{j}");
        for (k, &t) in t_grid.iter().enumerate() {
            let c: Vec<f64> = curves.iter().map(|v| v[k]).collect();
            table.push(&[0.0, t], &name, seeds, &c);
        }
    }
    table.timings.push(("pair curves".into(), clock.elapsed().as_secs_f64()));
    Ok(table)
}

pub fn run_reopt_map(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::ReoptMap;
    let op = operating_point(cfg)?;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let params = op.params(cfg.beta);
    let g = cfg.reopt.g_grid.values()?;
    let t = cfg.reopt.t_grid.values()?;
    let seeds = &ens.seeds;
    let n = reals.len();
    let mut table = ResultTable::new(kind.name(), &["epsilon", "omega"], &cfg.hash());
    push_operating(&mut table, &op, seeds);
    for &eps in &cfg.reopt.eps_list {
        for &omega in &cfg.reopt.omega_list {
            let clock = Instant::now();
            let drive = if eps == 0.0 { DriveSpec::none() } else { DriveSpec::bilateral(eps, Waveform::Monochromatic { omega }) };
            let res = reopt_ratio(&reals, &drive, &params, &g, &t, &cfg.propagator)?;
            table.push(&[eps, omega], "F_fixed", seeds, &res.fixed_values);
            table.push(&[eps, omega], "F_reopt", seeds, &res.reopt_values);
            let (_, r_e) = jackknife(n, |idx| {
                let fixed = subset_mean(&res.fixed_values, idx);
                subset_mean(&res.reopt_values, idx).max(fixed) / fixed
            });
            table.push_derived(&[eps, omega], "r", seeds, res.r, r_e);
            table.push_derived(&[eps, omega], "g_reopt", seeds, res.g_reopt, 0.0);
            table.push_derived(&[eps, omega], "t_reopt", seeds, res.t_reopt, 0.0);
            table.timings.push((format!("epsilon={eps} omega={omega}"), clock.elapsed().as_secs_f64()));
        }
    }
    Ok(table)
}

pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Scaling;
    let s = &cfg.scaling;
    let g = s.g_grid.values()?;
    let t = s.t_grid.values()?;
    let mut table = ResultTable::new(kind.name(), &["N"], &cfg.hash());
    let drive = DriveSpec::bilateral(s.epsilon, Waveform::Monochromatic { omega: s.omega });
    for &n in &s.n_list {
        let clock = Instant::now();
        let ens = Ensemble::build(cfg, n, s.n_avg_for(n, cfg.n_avg(kind)))?;
        let reals = ens.realizations(cfg)?;
        let seeds = &ens.seeds;
        let count = reals.len();
        let nf = n as f64;
        let surfaces = map_realizations(&reals, |r| r.fidelity_surface(&g, &t, &DriveSpec::none(), &cfg.propagator))?;
        let opt = argmax_surface(&surfaces, &g, &t);
        let gi = g.iter().position(|&x| x == opt.g_opt).expect("on grid");
        let ti = t.iter().position(|&x| x == opt.t_opt).expect("on grid");
        let f_star: Vec<f64> = surfaces.iter().map(|sf| sf[gi][ti]).collect();
        let jk = |pick: fn(&crate::protocol::OptResult) -> f64| {
            jackknife(count, |idx| {
                let sub: Vec<Vec<Vec<f64>>> = idx.iter().map(|&i| surfaces[i].clone()).collect();
                pick(&argmax_surface(&sub, &g, &t))
            })
        };
        let (_, g_e) = jk(|o| o.g_opt);
        let (_, t_e) = jk(|o| o.t_opt);
        table.push_derived(&[nf], "g_star", seeds, opt.g_opt, g_e);
        table.push_derived(&[nf], "t_star", seeds, opt.t_opt, t_e);
        table.push(&[nf], "F_star", seeds, &f_star);

        // Driven peak: the best readout time near t* at fixed g*.
        let lo = ti.saturating_sub(s.repeak_halfwidth);
        let hi = (ti + s.repeak_halfwidth).min(t.len() - 1);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &tv in &t[lo..=hi] {
            let p = ProtocolParams { g: opt.g_opt, t_star: tv, t_r: tv, beta: cfg.beta };
            let f = fidelities(&reals, &p, &drive, &cfg.propagator)?;
            table.push(&[nf], &format!("F_driven_t{tv}"), seeds, &f);
            let m = Summary::of(&f).mean;
            if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
                best = Some((m, f));
            }
        }
        let (_, f_drv) = best.expect("non-empty window");
        let delta: Vec<f64> = f_star.iter().zip(&f_drv).map(|(a, b)| a - b).collect();
        table.push(&[nf], "F_star_driven", seeds, &f_drv);
        table.push(&[nf], "delta_F_star", seeds, &delta);
        table.timings.push((format!("N={n}"), clock.elapsed().as_secs_f64()));
        info!("N={n}: g*={} t*={} F*={:.4}", opt.g_opt, opt.t_opt, opt.f_opt);
    }
    Ok(table)
}

fn convergence_drive(p: &ConvergencePoint, cfg: &ExperimentConfig, t_star: f64) -> DriveSpec {
    if p.epsilon == 0.0 {
        DriveSpec::none()
    } else if p.chirp {
        let c = &cfg.chirp;
        DriveSpec::right_readout(p.epsilon, Waveform::Chirp { omega_t: c.omega_t, omega_l: c.omega_l, t_star })
    } else {
        DriveSpec::bilateral(p.epsilon, Waveform::Monochromatic { omega: p.omega })
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Integrator errors below this are treated as exact.
const ROUNDOFF_ERROR: f64 = 1e-12;

pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Convergence;
    let op = operating_point(cfg)?;
    let ens = Ensemble::build(cfg, cfg.n, cfg.n_avg(kind))?;
    let reals = ens.realizations(cfg)?;
    let params = op.params(cfg.beta);
    let seeds = &ens.seeds;
    let c = &cfg.convergence;
    let mut table = ResultTable::new(kind.name(), &["point", "epsilon", "omega", "scheme", "dt"], &cfg.hash());
    push_operating(&mut table, &op, seeds);
    let fixed = |scheme: Scheme, dt: f64| PropagatorConfig { dt_base: dt, scheme, adaptive: false, ..cfg.propagator };
    let code = |s: Scheme| match s {
        Scheme::LieTrotter => 0.0,
        Scheme::StrangMidpoint => 1.0,
    };
    for (pi, p) in c.points.iter().enumerate() {
        let clock = Instant::now();
        let drive = convergence_drive(p, cfg, op.t_star);
        let (pf, e, w) = (pi as f64, p.epsilon, if p.chirp { NAN } else { p.omega });
        let reference = fidelities(&reals, &params, &drive, &fixed(Scheme::StrangMidpoint, c.reference_dt))?;
        table.push(&[pf, e, w, code(Scheme::StrangMidpoint), c.reference_dt], "F_ref", seeds, &reference);
        let mut by_scheme = vec![];
        for scheme in [Scheme::LieTrotter, Scheme::StrangMidpoint] {
            let mut runs = vec![];
            for &dt in &c.dts {
                let f = fidelities(&reals, &params, &drive, &fixed(scheme, dt))?;
                let err: Vec<f64> = f.iter().zip(&reference).map(|(a, b)| (a - b).abs()).collect();
                table.push(&[pf, e, w, code(scheme), dt], "F", seeds, &f);
                table.push(&[pf, e, w, code(scheme), dt], "abs_error", seeds, &err);
                runs.push((f, err));
            }
            for k in 1..runs.len() {
                let inc: Vec<f64> = runs[k].0.iter().zip(&runs[k - 1].0).map(|(a, b)| (a - b).abs()).collect();
                table.push(&[pf, e, w, code(scheme), c.dts[k]], "halving_increment", seeds, &inc);
            }
            let mean_err: Vec<f64> = runs.iter().map(|(_, err)| Summary::of(err).mean).collect();
            // undriven points are exact at every step size; a slope through roundoff is meaningless
            if c.dts.len() >= 2 && mean_err.iter().all(|&v| v > ROUNDOFF_ERROR) {
                let slope = loglog_slope(&c.dts, &mean_err);
                table.push_derived(&[pf, e, w, code(scheme), NAN], "slope", seeds, slope, 0.0);
            }
            by_scheme.push(runs);
        }
        for (k, &dt) in c.dts.iter().enumerate() {
            let gap: Vec<f64> = by_scheme[0][k].0.iter().zip(&by_scheme[1][k].0).map(|(a, b)| (a - b).abs()).collect();
            table.push(&[pf, e, w, NAN, dt], "lt_strang_gap", seeds, &gap);
        }
        table.timings.push((format!("point {pi}"), clock.elapsed().as_secs_f64()));
    }
    Ok(table)
}
