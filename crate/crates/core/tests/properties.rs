use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twr_core::model::generate_channels;
use twr_core::physics::{self, coupling, phi, psi, upsilon};
use twr_core::surrogates::{ine1_rhs, ine1p_rhs, ine2_rhs, linearized_coupling, sqrt_prod_tangent};
use twr_core::{BeamformerSet, CMatrix, CVector, Complex64, Mode, NetworkConfig};

fn random_w(rng: &mut ChaCha8Rng, relays: usize, n: usize) -> BeamformerSet {
    BeamformerSet {
        w: (0..relays)
            .map(|_| CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect(),
    }
}

fn combine(a: f64, w1: &BeamformerSet, b: f64, w2: &BeamformerSet) -> BeamformerSet {
    BeamformerSet {
        w: w1.w.iter().zip(&w2.w).map(|(x, y)| x * Complex64::new(a, 0.0) + y * Complex64::new(b, 0.0)).collect(),
    }
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..4, 1usize..3, 1usize..3)
}

fn positive() -> impl Strategy<Value = f64> {
    (-1.5f64..1.5).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channels_depend_only_on_the_seed((k, m, n) in dims(), seed in any::<u64>(), tf in any::<bool>()) {
        let cfg = NetworkConfig::experiment(k, m, n, -130.0);
        let mode = if tf { Mode::Tf } else { Mode::Fd };
        let a = generate_channels(&cfg, mode, seed);
        let b = generate_channels(&cfg, mode, seed);
        prop_assert_eq!(a.h, b.h);
        prop_assert_eq!(a.f, b.f);
        prop_assert_eq!(a.chi, b.chi);
    }

    #[test]
    fn coupling_is_linear((k, m, n) in dims(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let cfg = NetworkConfig::experiment(k, m, n, -130.0);
        let ch = generate_channels(&cfg, Mode::Fd, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let w1 = random_w(&mut rng, m, ch.antennas());
        let w2 = random_w(&mut rng, m, ch.antennas());
        let mix = combine(a, &w1, b, &w2);
        for i in 0..ch.users() {
            for j in 0..ch.users() {
                let lhs = coupling(&mix, &ch, i, j).unwrap();
                let c1 = coupling(&w1, &ch, i, j).unwrap();
                let c2 = coupling(&w2, &ch, i, j).unwrap();
                let rhs = c1 * a + c2 * b;
                let scale = (a.abs() * c1.norm() + b.abs() * c2.norm()).max(1e-300);
                prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn powers_and_sinrs_are_nonnegative(
        (k, m, n) in dims(),
        seed in any::<u64>(),
        si_db in -150.0f64..-110.0,
        tau in 0.01f64..0.99,
    ) {
        let cfg = NetworkConfig::experiment(k, m, n, si_db);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..2 * k).map(|_| rng.random_range(0.0..cfg.p_ue_max)).collect();

        let ch = generate_channels(&cfg, Mode::Fd, seed);
        let w = random_w(&mut rng, m, ch.antennas());
        for u in 0..ch.users() {
            prop_assert!(physics::sinr_fd(&p, &w, &ch, &cfg, u).unwrap() >= 0.0);
        }
        for r in 0..m {
            prop_assert!(physics::relay_power_fd(&p, &w, &ch, &cfg, r).unwrap() >= 0.0);
        }

        let ch = generate_channels(&cfg, Mode::Tf, seed);
        let w = random_w(&mut rng, m, ch.antennas());
        for u in 0..ch.users() {
            prop_assert!(physics::sinr_tf(&p, &w, &ch, &cfg, tau, u).unwrap() >= 0.0);
        }
        for r in 0..m {
            prop_assert!(physics::relay_power_tf(&p, &w, &ch, &cfg, tau, r).unwrap() >= 0.0);
        }
        prop_assert!(physics::relay_sum_power_tf(&p, &w, &ch, &cfg, tau).unwrap() >= 0.0);
    }

    #[test]
    fn atoms_are_midpoint_convex(
        (k, m, n) in dims(),
        seed in any::<u64>(),
        a0 in positive(), b0 in positive(), a1 in positive(), b1 in positive(),
    ) {
        let cfg = NetworkConfig::experiment(k, m, n, -130.0);
        let ch = generate_channels(&cfg, Mode::Fd, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
        let w0 = random_w(&mut rng, m, ch.antennas());
        let w1 = random_w(&mut rng, m, ch.antennas());
        let mid = combine(0.5, &w0, 0.5, &w1);
        let (am, bm) = (0.5 * (a0 + a1), 0.5 * (b0 + b1));
        let below = |fm: f64, f0: f64, f1: f64| fm <= 0.5 * (f0 + f1) + 1e-9 * (f0 + f1).max(1.0);

        for i in 0..ch.users() {
            let l = ch.users() - 1 - i;
            let f = |w: &BeamformerSet, a: f64, b: f64| psi(w, &ch, a, b, i, l).unwrap();
            prop_assert!(below(f(&mid, am, bm), f(&w0, a0, b0), f(&w1, a1, b1)));
            let g = |w: &BeamformerSet, a: f64| upsilon(w, &ch, a, i).unwrap();
            prop_assert!(below(g(&mid, am), g(&w0, a0), g(&w1, a1)));
        }
        for r in 0..m {
            let h: &CVector = &ch.h[0][r];
            let f = |w: &BeamformerSet, a: f64, b: f64| phi(&w.w[r], h, a, b).unwrap();
            prop_assert!(below(f(&mid, am, bm), f(&w0, a0, b0), f(&w1, a1, b1)));
        }
    }

    #[test]
    fn log_bounds_are_tight_and_below(
        x in positive(), y in positive(), z in positive(), t in positive(),
        xb in positive(), yb in positive(), zb in positive(), tb in positive(),
    ) {
        let l = |x: f64, y: f64| (1.0 / (x * y)).ln_1p();
        let tol = |v: f64| 1e-9 * v.abs().max(1.0);

        let exact = l(x, y) / t;
        prop_assert!(ine1_rhs(x, y, t, xb, yb, tb).unwrap() <= exact + tol(exact));
        let at = l(xb, yb) / tb;
        prop_assert!((ine1_rhs(xb, yb, tb, xb, yb, tb).unwrap() - at).abs() <= 1e-8 * at.max(1.0));

        prop_assert!(ine1p_rhs(x, y, xb, yb).unwrap() <= l(x, y) + tol(l(x, y)));
        prop_assert!((ine1p_rhs(xb, yb, xb, yb).unwrap() - l(xb, yb)).abs() <= 1e-8 * l(xb, yb).max(1.0));

        let exact = l(x, y) / (z * t);
        prop_assert!(ine2_rhs(x, y, z, t, xb, yb, zb, tb).unwrap() <= exact + tol(exact));
        let at = l(xb, yb) / (zb * tb);
        prop_assert!((ine2_rhs(xb, yb, zb, tb, xb, yb, zb, tb).unwrap() - at).abs() <= 1e-8 * at.max(1.0));
    }

    #[test]
    fn sqrt_tangent_is_an_upper_bound(a in positive(), b in positive(), ab in positive(), bb in positive()) {
        let scale = (a * b).sqrt() * (ab * bb).sqrt();
        let bound = sqrt_prod_tangent(a, b, ab, bb).unwrap() * (ab * bb).sqrt();
        prop_assert!(bound >= (a * b).sqrt() - 1e-12 * scale.max(1.0));
        let at = sqrt_prod_tangent(ab, bb, ab, bb).unwrap();
        prop_assert!((at - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn linearized_coupling_is_a_tight_minorant(re in -5.0f64..5.0, im in -5.0f64..5.0, re0 in -5.0f64..5.0, im0 in -5.0f64..5.0) {
        let l = Complex64::new(re, im);
        let l0 = Complex64::new(re0, im0);
        prop_assert!(linearized_coupling(l, l0) <= l.norm_sqr() + 1e-12 * l.norm_sqr().max(1.0));
        prop_assert!((linearized_coupling(l0, l0) - l0.norm_sqr()).abs() <= 1e-12 * l0.norm_sqr().max(1.0));
    }
}
