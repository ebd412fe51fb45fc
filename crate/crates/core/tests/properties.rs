use fdhbf_core::admm::{lagrangian, update_ft, update_fr, update_z};
use fdhbf_core::channel::{array_response, ChannelParams, ChannelSet};
use fdhbf_core::elm::{build_target_vector, reconstruct_beamformers, RelayDims};
use fdhbf_core::metrics::{full_digital_beamformers, spectral_efficiency};
use fdhbf_core::mm::{factor_objective, mm_step, normalize_fbbt, rebalance, RelayHbf, UNIT_MODULUS_TOL};
use fdhbf_core::numerics::{frobenius_sq, kron, vec, ComplexMatrix};
use fdhbf_core::rng::{complex_normal_matrix, random_phase_matrix, seeded};
use fdhbf_core::system::SystemConfig;
use proptest::prelude::*;

fn random_relay(seed: u64, n: usize, rf: usize, n_s: usize) -> RelayHbf {
    let mut rng = seeded(seed);
    RelayHbf {
        f_rft: random_phase_matrix(&mut rng, n, rf),
        f_bbt: complex_normal_matrix(&mut rng, rf, n_s),
        f_rfr: random_phase_matrix(&mut rng, n, rf),
        f_bbr: complex_normal_matrix(&mut rng, rf, n_s),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vec_of_triple_product(seed in any::<u64>(), m in 1usize..5, k in 1usize..5, p in 1usize..5) {
        let mut rng = seeded(seed);
        let a = complex_normal_matrix(&mut rng, m, k);
        let b = complex_normal_matrix(&mut rng, k, p);
        let c = complex_normal_matrix(&mut rng, p, m);
        let lhs = vec(&(&a * &b * &c));
        let rhs = kron(&c.transpose(), &a) * vec(&b);
        prop_assert!(frobenius_sq(&(lhs - rhs)).sqrt() <= 1e-12 * (1.0 + frobenius_sq(&b).sqrt()) * 10.0);
    }

    #[test]
    fn array_response_has_unit_norm(theta in -3.2f64..3.2, n in 1usize..64) {
        prop_assert!((frobenius_sq(&array_response(theta, n, 0.5)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admm_block_updates_never_increase_the_lagrangian(seed in any::<u64>(), rho in 0.05f64..20.0) {
        let cfg = SystemConfig::symmetric(8, 4, 4, 2);
        let ch = ChannelSet::generate(&cfg, &ChannelParams::default(), seed).unwrap();
        let mut rng = seeded(seed ^ 0x5eed);
        let f_opt = complex_normal_matrix(&mut rng, 8, 8);
        let f_t0 = complex_normal_matrix(&mut rng, 8, 2);
        let f_r0 = complex_normal_matrix(&mut rng, 8, 2);
        let z = complex_normal_matrix(&mut rng, 2, 2);
        let l0 = lagrangian(&f_t0, &f_r0, &z, &f_opt, &ch.h_si, rho);
        let f_t = update_ft(&f_r0, &z, &f_opt, &ch.h_si, rho).unwrap();
        let l1 = lagrangian(&f_t, &f_r0, &z, &f_opt, &ch.h_si, rho);
        let f_r = update_fr(&f_t, &z, &f_opt, &ch.h_si, rho).unwrap();
        let l2 = lagrangian(&f_t, &f_r, &z, &f_opt, &ch.h_si, rho);
        let tol = 1e-9 * l0.max(1.0);
        prop_assert!(l1 <= l0 + tol && l2 <= l1 + tol, "{l0} {l1} {l2}");
        // the dual step only moves Z along the constraint residual
        let z1 = update_z(&z, &f_t, &f_r, &ch.h_si, rho);
        let moved = &z1 - &z - (f_r.adjoint() * &ch.h_si * &f_t).scale(rho);
        prop_assert!(frobenius_sq(&moved) < 1e-20 * (1.0 + frobenius_sq(&z1)));
    }

    #[test]
    fn mm_step_keeps_unit_modulus_and_descends(seed in any::<u64>(), n in 2usize..12, rf in 1usize..5, m in 1usize..10) {
        let mut rng = seeded(seed);
        let f = random_phase_matrix(&mut rng, n, rf);
        let y = complex_normal_matrix(&mut rng, rf, m);
        let target = complex_normal_matrix(&mut rng, n, m);
        let next = mm_step(&f, &y, &target).unwrap();
        prop_assert!(next.iter().all(|z| (z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL));
        let (before, after) = (factor_objective(&f, &y, &target), factor_objective(&next, &y, &target));
        prop_assert!(after <= before + 1e-9 * before.max(1.0));
    }

    #[test]
    fn rebalance_preserves_product(seed in any::<u64>()) {
        let hbf = random_relay(seed, 8, 3, 2);
        let r = rebalance(&hbf);
        let gap = frobenius_sq(&(r.product() - hbf.product())).sqrt();
        prop_assert!(gap <= 1e-10 * frobenius_sq(&hbf.product()).sqrt());
        let gram = r.f_r().adjoint() * r.f_r();
        prop_assert!(frobenius_sq(&(gram - ComplexMatrix::identity(2, 2))) < 1e-20);
    }

    #[test]
    fn reconstruction_is_always_feasible(values in prop::collection::vec(-50.0f64..50.0, 120)) {
        let dims = RelayDims { n_t: 8, n_r: 6, n_rft: 3, n_rfr: 2, n_s: 2 };
        let t = &values[..dims.output_len()];
        let bf = reconstruct_beamformers(t, &dims).unwrap();
        bf.check_unit_modulus().unwrap();
        prop_assert!((frobenius_sq(&bf.f_t()) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn target_round_trip_on_normalized_relay(seed in any::<u64>()) {
        let mut hbf = random_relay(seed, 8, 3, 2);
        hbf.f_bbt = normalize_fbbt(&hbf.f_rft, &hbf.f_bbt, 2).unwrap();
        let dims = RelayDims { n_t: 8, n_r: 8, n_rft: 3, n_rfr: 3, n_s: 2 };
        let back = reconstruct_beamformers(&build_target_vector(&hbf).unwrap(), &dims).unwrap();
        for (a, b) in [(&back.f_rft, &hbf.f_rft), (&back.f_bbt, &hbf.f_bbt), (&back.f_rfr, &hbf.f_rfr), (&back.f_bbr, &hbf.f_bbr)] {
            prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= 1e-12));
        }
    }

    #[test]
    fn rate_is_nonnegative_and_grows_with_source_power(seed in 0u64..10_000, snr in -20.0f64..30.0) {
        let cfg = SystemConfig::symmetric(8, 4, 4, 2).with_snr_db(snr);
        let ch = ChannelSet::generate(&cfg, &ChannelParams::default(), seed).unwrap();
        let bf = full_digital_beamformers(&ch, &cfg).unwrap();
        if let Ok(r) = spectral_efficiency(&ch, &bf, &cfg) {
            prop_assert!(r >= 0.0);
            let louder = SystemConfig { source_power: 2.0 * cfg.source_power, ..cfg.clone() };
            prop_assert!(spectral_efficiency(&ch, &bf, &louder).unwrap() >= r - 1e-12);
        }
    }
}
