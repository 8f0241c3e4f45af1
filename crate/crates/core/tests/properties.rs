//! Property tests over random couplings, drives and protocol parameters.

use proptest::prelude::*;

use syk_teleport::drive::{ActiveDrive, DriveSpec, Waveform};
use syk_teleport::hamiltonian::{sample_couplings, HamiltonianOptions, HamiltonianSet};
use syk_teleport::linalg::{self, C64, ZERO};
use syk_teleport::propagation::{PropagatorConfig, Scheme};
use syk_teleport::protocol::{coupling_unitary, ProtocolOptions, ProtocolParams, Realization};
use syk_teleport::register::{build_layout, MajoranaSet, Side};
use syk_teleport::state::{build_infinite_tfd, StateVector};

fn set(n: usize) -> MajoranaSet {
    MajoranaSet::new(build_layout(n).unwrap())
}

fn random_state(nq: usize, seed: u64) -> StateVector {
    let mut s = seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let amps = (0..1usize << nq).map(|_| C64::new(next(), next())).collect();
    let mut v = StateVector::from_amplitudes(nq, amps).unwrap();
    v.normalize().unwrap();
    v
}

fn even_n() -> impl Strategy<Value = usize> {
    prop_oneof![Just(6usize), Just(8), Just(10)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn majoranas_anticommute(n in prop_oneof![Just(4usize), Just(6), Just(8), Just(10), Just(12)], a in 0usize..24, b in 0usize..24, seed in any::<u64>()) {
        let s = set(n);
        let (a, b) = (a % (2 * n), b % (2 * n));
        let p = s.pooled();
        let v = random_state(s.layout().n_qubits(), seed);
        let apply = |k: usize, x: &[C64]| {
            let mut y = vec![ZERO; x.len()];
            p[k].apply_add(x, &mut y);
            y
        };
        let ab = apply(a, &apply(b, v.amplitudes()));
        let ba = apply(b, &apply(a, v.amplitudes()));
        let delta = if a == b { 2.0 } else { 0.0 };
        let r: Vec<C64> = ab.iter().zip(&ba).zip(v.amplitudes()).map(|((x, y), z)| x + y - z * delta).collect();
        prop_assert!(linalg::norm(&r) < 1e-12);
    }

    #[test]
    fn coupling_preserves_norm_and_pair_vacuum(n in even_n(), g in -40.0f64..40.0, seed in any::<u64>()) {
        let s = set(n);
        let u = coupling_unitary(g, &s).unwrap();
        let v = random_state(s.layout().n_qubits(), seed);
        prop_assert!((linalg::norm(&u.apply(v.amplitudes())) - 1.0).abs() < 1e-12);
        let i = build_infinite_tfd(&s).unwrap();
        prop_assert!(linalg::distance(&u.apply(i.amplitudes()), i.amplitudes()) < 1e-10);
    }

    #[test]
    fn hamiltonians_and_strain_are_hermitian(n in even_n(), seed in 0u64..10_000) {
        let h = HamiltonianSet::sample(&set(n), 1.0, seed, &HamiltonianOptions::default()).unwrap();
        for side in Side::BOTH {
            prop_assert!(h.hamiltonian(side).hermiticity_defect() < 1e-12);
            prop_assert!(h.strain(side).hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn negating_couplings_negates_hamiltonian_and_raw_strain(n in even_n(), seed in 0u64..10_000) {
        let s = set(n);
        let c = sample_couplings(n, 1.0, seed).unwrap();
        let opts = HamiltonianOptions::default();
        let a = HamiltonianSet::build(&s, c.clone(), &opts).unwrap();
        let b = HamiltonianSet::build(&s, c.negated(), &opts).unwrap();
        let neg = |m: &syk_teleport::operator::OperatorMatrix| m.scaled(C64::new(-1.0, 0.0)).to_csr();
        for side in Side::BOTH {
            prop_assert!(neg(a.hamiltonian(side)).max_abs_diff(&b.hamiltonian(side).to_csr()) < 1e-14);
            prop_assert!(neg(a.strain(side)).max_abs_diff(&b.strain(side).to_csr()) < 1e-12);
        }
        prop_assert!(b.strain_couplings.values().iter().zip(a.strain_couplings.values()).all(|(x, y)| *x == -*y));
        for k in 0..2 {
            prop_assert!((a.raw_strain_norm[k] - b.raw_strain_norm[k]).abs() < 1e-12 * a.raw_strain_norm[k]);
        }
    }

    #[test]
    fn driven_evolution_is_unitary(seed in 0u64..1000, eps in 0.0f64..2.5, omega in 0.0f64..4.0, strang in any::<bool>()) {
        let h = HamiltonianSet::sample(&set(8), 1.0, seed, &HamiltonianOptions::default()).unwrap();
        let r = Realization::new(&h, 2.0, ProtocolOptions::default()).unwrap();
        let scheme = if strang { Scheme::StrangMidpoint } else { Scheme::LieTrotter };
        let cfg = PropagatorConfig { dt_base: 0.01, scheme, adaptive: false, ..PropagatorConfig::default() };
        let psi = r.initial_state().clone();
        // 1000 steps
        let out = r.propagator(Side::L).evolve(&psi, &ActiveDrive::new(eps, Waveform::Monochromatic { omega }), 0.0, 10.0, &cfg).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn undriven_evolution_reverses(seed in 0u64..1000, t in 0.1f64..15.0) {
        let h = HamiltonianSet::sample(&set(8), 1.0, seed, &HamiltonianOptions::default()).unwrap();
        let r = Realization::new(&h, 2.0, ProtocolOptions::default()).unwrap();
        let cfg = PropagatorConfig::default();
        let psi = r.initial_state().clone();
        let p = r.propagator(Side::R);
        let fwd = p.evolve(&psi, &ActiveDrive::off(), 0.0, t, &cfg).unwrap();
        let back = p.evolve(&fwd, &ActiveDrive::off(), t, 0.0, &cfg).unwrap();
        prop_assert!(linalg::distance(back.amplitudes(), psi.amplitudes()) < 1e-10);
    }

    #[test]
    fn fidelity_is_a_probability(seed in 0u64..1000, g in 0.0f64..30.0, t_star in 0.5f64..10.0, eps in 0.0f64..2.0, omega in 0.0f64..4.0) {
        let h = HamiltonianSet::sample(&set(6), 1.0, seed, &HamiltonianOptions::default()).unwrap();
        let r = Realization::new(&h, 2.0, ProtocolOptions::default()).unwrap();
        let p = ProtocolParams { g, t_star, t_r: t_star, beta: 2.0 };
        let f = r.fidelity(&p, &DriveSpec::bilateral(eps, Waveform::Monochromatic { omega }), &PropagatorConfig::default()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f), "F = {}", f);
    }
}

/// Negating the couplings and the drive amplitude together gives a statistically
/// equivalent realization: the disorder means agree within their combined error.
#[test]
fn disorder_sign_flip_is_statistically_equivalent() {
    let s = set(8);
    let opts = HamiltonianOptions::default();
    let cfg = PropagatorConfig::default();
    let p = ProtocolParams { g: 10.0, t_star: 5.0, t_r: 5.0, beta: 2.0 };
    let drive = DriveSpec::bilateral(0.5, Waveform::Monochromatic { omega: 1.5 });
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..40 {
        let c = sample_couplings(8, 1.0, seed).unwrap();
        let h = HamiltonianSet::build(&s, c.clone(), &opts).unwrap();
        a.push(Realization::new(&h, 2.0, ProtocolOptions::default()).unwrap().fidelity(&p, &drive, &cfg).unwrap());
        // the negated tensor already negates the strain, so flipping it back realizes ε → −ε
        let mut hn = HamiltonianSet::build(&s, c.negated(), &opts).unwrap();
        hn.strain_l = hn.strain_l.scaled(C64::new(-1.0, 0.0));
        hn.strain_r = hn.strain_r.scaled(C64::new(-1.0, 0.0));
        b.push(Realization::new(&hn, 2.0, ProtocolOptions::default()).unwrap().fidelity(&p, &drive, &cfg).unwrap());
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let ((ma, ea), (mb, eb)) = (stats(&a), stats(&b));
    assert!((ma - mb).abs() < 3.0 * (ea * ea + eb * eb).sqrt(), "{ma} ± {ea} vs {mb} ± {eb}");
}

#[test]
fn readout_profile_matches_single_time_runs() {
    let h = HamiltonianSet::sample(&set(8), 1.0, 3, &HamiltonianOptions::default()).unwrap();
    let r = Realization::new(&h, 2.0, ProtocolOptions::default()).unwrap();
    let cfg = PropagatorConfig::default();
    let drive = DriveSpec::bilateral(0.3, Waveform::Monochromatic { omega: 1.1 });
    let prepared = r.prepare(12.0, 4.0, &drive, &cfg).unwrap();
    let grid = [0.5, 1.03, 2.0, 3.77, 4.0];
    let profile = r.readout(&prepared, &grid, &drive, &cfg).unwrap();
    for (k, &t) in grid.iter().enumerate() {
        let single = r.fidelity(&ProtocolParams { g: 12.0, t_star: 4.0, t_r: t, beta: 2.0 }, &drive, &cfg).unwrap();
        assert_eq!(profile[k].to_bits(), single.to_bits(), "t_R = {t}");
    }
}
