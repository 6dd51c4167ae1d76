use std::f64::consts::PI;

use fewbody::few_body::*;
use fewbody::numerics::SeededStream;
use fewbody::two_body::{RadialPotential, Shell};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_spd(n: usize, s: &mut SeededStream) -> GaussianPattern {
    let m = DMatrix::from_fn(n, n, |_, _| s.next_f64() - 0.5);
    GaussianPattern::new(&m * m.transpose() + DMatrix::identity(n, n) * (0.2 + s.next_f64()))
        .unwrap()
}

/// Importance-sampled `(S, T, V_pair)` from a broad isotropic Gaussian proposal,
/// with standard errors.
fn monte_carlo(
    a: &GaussianPattern,
    b: &GaussianPattern,
    w: &DVector<f64>,
    v: &RadialPotential,
    samples: usize,
    seed: u64,
) -> [(f64, f64); 3] {
    let n = a.dim();
    let mut rng = SeededStream::new(seed);
    let m = &a.a + &b.a;
    let lmin = m.symmetric_eigenvalues().min();
    // proposal N(0, σ² I) wider than the integrand
    let sigma = 1.0 / lmin.sqrt();
    let log_q_norm = -((3 * n) as f64) * 0.5 * (2.0 * PI * sigma * sigma).ln();
    let mut acc = [(0.0, 0.0); 3];
    let mut x = DMatrix::zeros(n, 3);
    for _ in 0..samples {
        for i in 0..n {
            for c in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                x[(i, c)] = sigma * z;
            }
        }
        let quad = (x.transpose() * &m * &x).trace();
        let q = (log_q_norm - x.norm_squared() / (2.0 * sigma * sigma)).exp();
        let g = (-0.5 * quad).exp() / q;
        let kin = 0.5 * ((&a.a * &x).component_mul(&(&b.a * &x))).sum();
        let r = (x.transpose() * w).norm();
        let vals = [g, kin * g, v.value(r) * g];
        for k in 0..3 {
            acc[k].0 += vals[k];
            acc[k].1 += vals[k] * vals[k];
        }
    }
    let nf = samples as f64;
    acc.map(|(s, s2)| {
        let mean = s / nf;
        (mean, ((s2 / nf - mean * mean).max(0.0) / nf).sqrt())
    })
}

#[test]
fn elements_match_monte_carlo() {
    let mut s = SeededStream::new(11);
    let v = RadialPotential::new(
        vec![Shell {
            r_lo: 0.3,
            r_hi: 1.4,
            height: -1.0,
        }],
        vec![fewbody::two_body::GaussianTerm {
            depth: -0.7,
            range: 0.9,
        }],
        1.0,
    )
    .unwrap();
    for case in 0..20u64 {
        let n = 1 + (case % 3) as usize;
        let frame = build_jacobi_frame(n + 1).unwrap();
        let (a, b) = (random_spd(n, &mut s), random_spd(n, &mut s));
        let (pair, w) = frame.pair_forms[case as usize % frame.pair_count()].clone();
        let samples = if case == 0 { 10_000_000 } else { 400_000 };
        let mc = monte_carlo(&a, &b, &w, &v, samples, 100 + case);
        let exact = [
            overlap_element(&a, &b).unwrap(),
            kinetic_element(&a, &b).unwrap(),
            pair_potential_element(&a, &b, pair, &v, &frame).unwrap(),
        ];
        for k in 0..3 {
            let (mean, err) = mc[k];
            assert!(
                (mean - exact[k]).abs() < 5.0 * err + 1e-9 * exact[k].abs(),
                "case {case} n {n} k {k}: {mean} ± {err} vs {}",
                exact[k]
            );
        }
    }
}

#[test]
fn kinetic_matches_quadrature_one_dimension() {
    // n = 1: ∫ 4π x² (-½) g_a Δ g_b dx with g = exp(-½ a x²)
    let (a, b) = (0.7, 1.9);
    let lap = |x: f64| (b * b * x * x - 3.0 * b) * (-0.5 * b * x * x).exp();
    let rule = fewbody::numerics::gauss_legendre(400, 0.0, 30.0).unwrap();
    let quad = rule.integrate(|x| 4.0 * PI * x * x * (-0.5 * a * x * x).exp() * (-0.5) * lap(x));
    let ga = GaussianPattern::new(DMatrix::from_element(1, 1, a)).unwrap();
    let gb = GaussianPattern::new(DMatrix::from_element(1, 1, b)).unwrap();
    let t = kinetic_element(&ga, &gb).unwrap();
    assert!((t - quad).abs() < 1e-10 * quad.abs(), "{t} {quad}");
}

#[test]
fn gaussian_pair_closed_form_matches_quadrature() {
    // E[V(|r|)] with r ~ N(0, c I_3), c matching the potential range
    let c: f64 = 0.8;
    let v = RadialPotential::gaussian_well(-1.0, c.sqrt()).unwrap();
    let rule = fewbody::numerics::gauss_legendre(600, 0.0, 30.0).unwrap();
    let quad = rule.integrate(|r| {
        4.0 * PI * r * r * v.value(r) * (-r * r / (2.0 * c)).exp() / (2.0 * PI * c).powf(1.5)
    });
    assert!((pair_distance_average(&v, c) - quad).abs() < 1e-10);
}

#[test]
fn full_space_indicator_is_overlap() {
    let mut s = SeededStream::new(3);
    let frame = build_jacobi_frame(3).unwrap();
    let (a, b) = (random_spd(2, &mut s), random_spd(2, &mut s));
    let v = RadialPotential::square_well(1.0, 1e4).unwrap();
    let e = pair_potential_element(&a, &b, (0, 2), &v, &frame).unwrap();
    assert!((e / overlap_element(&a, &b).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn permutation_invariance_of_matrices() {
    let mut s = SeededStream::new(5);
    for n in [3, 4] {
        let basis =
            SymmetrizedGaussianBasis::new(n, (0..6).map(|_| random_spd(n - 1, &mut s)).collect())
                .unwrap();
        let v = RadialPotential::gaussian_well(-2.0, 1.0).unwrap();
        let (h, sm) = symmetrize_and_assemble(&basis, &v).unwrap();
        assert!((&h - h.transpose()).amax() < 1e-12);
        for i in 0..n {
            for j in i + 1..n {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(i, j);
                let (h2, s2) =
                    symmetrize_and_assemble(&basis.relabeled(&perm).unwrap(), &v).unwrap();
                assert!((&h - h2).amax() < 1e-12 && (&sm - s2).amax() < 1e-12);
            }
        }
    }
}

#[test]
fn indicator_expectations() {
    let v = RadialPotential::gaussian_well(-6.0, 1.0).unwrap();
    let s = SvmSettings {
        target_size: 20,
        pool: 10,
        ..SvmSettings::defaults_for(3)
    };
    let (basis, r) = svm_grow(3, &v, &s).unwrap();
    let c = &r.coefficients;
    assert_eq!(
        pair_indicator_expectation(&basis, c, (0.0, f64::INFINITY)).unwrap(),
        1.0
    );
    let big = pair_indicator_expectation(&basis, c, (0.0, 1e4)).unwrap();
    assert!((big - 1.0).abs() < 1e-10);
    let mut last = 0.0;
    for k in 1..=8 {
        let cap = pair_indicator_expectation(&basis, c, (0.0, 0.5 * k as f64)).unwrap();
        assert!(cap >= last - 1e-12);
        last = cap;
    }
    let far = pair_indicator_expectation(&basis, c, (20.0, 40.0)).unwrap();
    assert!(far < 1e-3);
    assert!(pair_indicator_expectation(&basis, c, (2.0, 1.0)).is_err());
}

#[test]
fn growth_is_deterministic() {
    let v = RadialPotential::gaussian_well(-4.0, 1.0).unwrap();
    let s = SvmSettings {
        target_size: 15,
        pool: 8,
        ..SvmSettings::defaults_for(3)
    };
    let a = ground_state(3, &v, &s).unwrap();
    let b = ground_state(3, &v, &s).unwrap();
    assert_eq!(a.energy_trace, b.energy_trace);
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}

#[test]
fn energies_scale_with_length() {
    let v = RadialPotential::gaussian_well(-5.0, 1.0).unwrap();
    let s = SvmSettings {
        target_size: 25,
        pool: 10,
        ..SvmSettings::defaults_for(3)
    };
    let e1 = ground_state(3, &v, &s).unwrap().energy;
    // same seed and range in units of r_V: identical bases up to the scale
    let scale = 2.5;
    let e2 = ground_state(3, &v.length_scaled(scale), &s).unwrap().energy;
    assert!(
        (e2 * scale * scale - e1).abs() < 1e-8 * e1.abs(),
        "{e1} {e2}"
    );
}

#[test]
fn empty_basis_and_bad_settings() {
    let v = RadialPotential::gaussian_well(-4.0, 1.0).unwrap();
    let empty = SymmetrizedGaussianBasis::new(3, vec![]).unwrap();
    assert!(symmetrize_and_assemble(&empty, &v).is_err());
    let s = SvmSettings {
        target_size: 0,
        ..SvmSettings::defaults_for(3)
    };
    assert!(svm_grow(3, &v, &s).is_err());
    assert!(svm_grow(5, &v, &SvmSettings::defaults_for(3)).is_err());
}

#[test]
fn energies_order_with_particle_number() {
    let v = RadialPotential::gaussian_well(-6.0, 1.0).unwrap();
    let e = |n: usize, k: usize| {
        let s = SvmSettings {
            target_size: k,
            pool: 10,
            ..SvmSettings::defaults_for(n)
        };
        ground_state(n, &v, &s).unwrap().energy
    };
    let (e2, e3, e4) = (e(2, 12), e(3, 25), e(4, 25));
    assert!(e4 < e3 && e3 < e2 && e2 < 0.0, "{e2} {e3} {e4}");
}

#[test]
fn critical_pair_is_not_bound() {
    use fewbody::two_body::{tune_critical_depth, CriticalitySettings};
    let shape = RadialPotential::gaussian_well(-1.0, 1.0).unwrap();
    let g = tune_critical_depth(&shape, (1.0, 5.0), &CriticalitySettings::default()).unwrap();
    // a diffuse threshold state saturates a one-parameter basis, so stay below that size
    for seed in 1..=4 {
        let s = SvmSettings {
            target_size: 20,
            seed,
            ..SvmSettings::defaults_for(2)
        };
        let r = ground_state(2, &shape.scaled(g), &s).unwrap();
        assert!(
            r.energy > -1e-8 && r.energy >= -r.uncertainty,
            "{}",
            r.energy
        );
    }
    // slightly deeper binds
    let deeper = ground_state(2, &shape.scaled(1.2 * g), &SvmSettings::defaults_for(2)).unwrap();
    assert!(deeper.energy < -1e-3);
}

#[test]
fn frozen_slope_matches_expectation_away_from_zero() {
    let v = RadialPotential::gaussian_well(-5.0, 1.0).unwrap();
    let path = CouplingPath::Linear { r: 1.5, slope: 0.6 };
    let s = SvmSettings {
        target_size: 20,
        pool: 10,
        ..SvmSettings::defaults_for(3)
    };
    let fh = feynman_hellmann_check(3, &v, &path, 0.2, 1e-4, &s).unwrap();
    assert!(
        ((fh.fd_slope - fh.fh_value) / fh.fd_slope).abs() < 1e-6,
        "{fh:?}"
    );
    assert!((0.0..=1.0).contains(&fh.capture) && fh.shell >= 0.0);
    // second-order scheme: halving h cuts the mismatch about fourfold
    let fine = feynman_hellmann_check(3, &v, &path, 0.2, 2e-2, &s).unwrap();
    let coarse = feynman_hellmann_check(3, &v, &path, 0.2, 4e-2, &s).unwrap();
    let ratio = (coarse.fd_slope - coarse.fh_value) / (fine.fd_slope - fine.fh_value);
    assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn swapping_labels_keeps_matrices(seed in any::<u64>(), n in 3usize..5, depth in 0.5..6.0f64) {
        let mut s = SeededStream::new(seed);
        let basis = SymmetrizedGaussianBasis::new(n, (0..4).map(|_| random_spd(n - 1, &mut s)).collect()).unwrap();
        let v = RadialPotential::gaussian_well(-depth, 1.0).unwrap();
        let (h, sm) = symmetrize_and_assemble(&basis, &v).unwrap();
        let i = (s.next_f64() * n as f64) as usize;
        let j = (i + 1 + (s.next_f64() * (n - 1) as f64) as usize) % n;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(i, j);
        let (h2, s2) = symmetrize_and_assemble(&basis.relabeled(&perm).unwrap(), &v).unwrap();
        prop_assert!((&h - h2).amax() < 1e-12 * h.amax().max(1.0));
        prop_assert!((&sm - s2).amax() < 1e-12 * sm.amax().max(1.0));
    }

    #[test]
    fn energy_trace_never_rises(seed in any::<u64>(), n in 2usize..5, depth in 3.0..8.0f64) {
        let v = RadialPotential::gaussian_well(-depth, 1.0).unwrap();
        let settings = SvmSettings { target_size: 12, pool: 6, seed, ..SvmSettings::defaults_for(n) };
        let r = ground_state(n, &v, &settings).unwrap();
        prop_assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        let last = *r.energy_trace.last().unwrap();
        prop_assert!((last - r.energy).abs() <= 1e-10 * r.energy.abs());
    }
}
