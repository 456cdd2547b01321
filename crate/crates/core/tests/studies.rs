use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subspace_perturb::cca::{build_cca_model, estimate_cca, exact_moment_sample, sample_cca};
use subspace_perturb::clustering::{
    clustering_study, generate_two_class, misclassification, pca_cluster, ClusterModel, ClusterSetting, LabelVector,
};
use subspace_perturb::denoising::{denoising_risk, svt, DenoisingSetting};
use subspace_perturb::linalg::{gaussian_matrix, haar_orthonormal, sin_theta, singular_values, svd};
use subspace_perturb::montecarlo::Trials;
use subspace_perturb::{Matrix, OrthonormalBasis};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svt_keeps_singular_vectors(seed in any::<u64>(), frac in 0.0..0.9f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p1, p2) = (rng.random_range(2..8), rng.random_range(2..8));
        let y = gaussian_matrix(p1, p2, &mut rng);
        let dy = svd(&y).unwrap();
        let lambda = frac * dy.singular_values[0];
        let x = svt(&y, lambda).unwrap();
        let k = dy.singular_values.iter().filter(|s| **s > lambda).count();
        let s = singular_values(&x);
        for i in 0..s.len() {
            let want = (dy.singular_values[i] - lambda).max(0.0);
            prop_assert!((s[i] - want).abs() < 1e-9);
        }
        if k > 0 {
            let dx = svd(&x).unwrap();
            let gap_ok = (1..k).all(|i| dy.singular_values[i - 1] - dy.singular_values[i] > 1e-6);
            if gap_ok {
                prop_assert!(sin_theta(&dy.u.columns(0, k), &dx.u.columns(0, k)).unwrap().spectral < 1e-6);
                prop_assert!(sin_theta(&dy.v.columns(0, k), &dx.v.columns(0, k)).unwrap().spectral < 1e-6);
            }
        }
    }

    #[test]
    fn pca_labels_ignore_left_rotations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, n) = (rng.random_range(3..12), rng.random_range(4..16));
        let mu = DVector::from_fn(p, |_, _| rng.random_range(-2.0..2.0));
        let sample = generate_two_class(&ClusterModel::new(n, mu, 0.5).unwrap(), &mut rng);
        let q = haar_orthonormal(p, p, &mut rng).unwrap();
        let a = pca_cluster(&sample.y).unwrap();
        let b = pca_cluster(&(q.as_matrix() * &sample.y)).unwrap();
        // Ties at zero are measure-zero; labels agree up to the global sign.
        prop_assert!(a == b || a == b.negated());
    }
}

#[test]
fn misclassification_is_a_metric_on_small_label_sets() {
    for n in 1..=8usize {
        let all: Vec<LabelVector> = (0..1u32 << n)
            .map(|bits| LabelVector::new((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()).unwrap())
            .collect();
        let m: Vec<Vec<f64>> =
            all.iter().map(|a| all.iter().map(|b| misclassification(a, b).unwrap()).collect()).collect();
        for i in 0..all.len() {
            assert_eq!(m[i][i], 0.0);
            for j in 0..all.len() {
                assert_eq!(m[i][j], m[j][i]);
                for k in 0..all.len() {
                    assert!(m[i][j] <= m[i][k] + m[j][k] + 1e-15, "n {n}");
                }
            }
        }
    }
}

fn mean_error(p: usize, n: usize, norm: f64, reps: usize, seed: u64) -> f64 {
    let errs = Trials::new(reps, seed)
        .run(|_, rng| {
            let g: DVector<f64> = DVector::from_fn(p, |_, _| rng.sample(rand_distr::StandardNormal));
            let mu = &g * (norm / g.norm());
            let sample = generate_two_class(&ClusterModel::new(n, mu, 0.5)?, rng);
            misclassification(&sample.labels, &pca_cluster(&sample.y)?)
        })
        .unwrap();
    errs.iter().sum::<f64>() / reps as f64
}

#[test]
fn clustering_threshold_at_quarter_power() {
    let (p, n) = (1000usize, 100usize);
    let scale = (p as f64 / n as f64).powf(0.25);
    let strong = mean_error(p, n, 3.0 * scale, 500, 1);
    let weak = mean_error(p, n, 0.3 * scale, 500, 2);
    assert!(strong < 0.05, "strong {strong}");
    assert!(weak > 0.25, "weak {weak}");
}

#[test]
fn clustering_without_signal_is_guessing() {
    let rows = clustering_study(&ClusterSetting::new(100, 0.0, 0.5), &[20, 50, 100], &Trials::new(300, 3)).unwrap();
    for row in rows {
        assert!(row.misclassification.mean >= 0.2, "n {} mean {}", row.n, row.misclassification.mean);
        assert!(row.misclassification.mean <= 0.5);
    }
}

#[test]
fn cca_directions_are_affine_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = build_cca_model(6, 4, 2, 0.7, &mut rng).unwrap();
    let s = sample_cca(&model, 200, &mut rng).unwrap();
    let est = estimate_cca(&s.x_data, &s.y_data, 2).unwrap();
    let mx = gaussian_matrix(6, 6, &mut rng) + Matrix::identity(6, 6) * 3.0;
    let my = gaussian_matrix(4, 4, &mut rng) + Matrix::identity(4, 4) * 3.0;
    let moved = estimate_cca(&(&mx * &s.x_data), &(&my * &s.y_data), 2).unwrap();
    // Canonical variates aᵀx span the same subspace of ℝⁿ before and after the change of coordinates.
    let span = |a: &Matrix, data: &Matrix| OrthonormalBasis::new((data.transpose() * a).qr().q()).unwrap();
    let d = sin_theta(&span(&est.a_hat, &s.x_data), &span(&moved.a_hat, &(&mx * &s.x_data))).unwrap();
    assert!(d.spectral < 1e-8, "{}", d.spectral);
    let d = sin_theta(&span(&est.b_hat, &s.y_data), &span(&moved.b_hat, &(&my * &s.y_data))).unwrap();
    assert!(d.spectral < 1e-8, "{}", d.spectral);
}

#[test]
fn cca_sample_covariance_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = build_cca_model(5, 3, 2, 0.8, &mut rng).unwrap();
    let n = 200_000;
    let s = sample_cca(&model, n, &mut rng).unwrap();
    let joint = Matrix::from_fn(8, n, |i, j| if i < 5 { s.x_data[(i, j)] } else { s.y_data[(i - 5, j)] });
    let cov = &joint * joint.transpose() / n as f64;
    assert!((cov - model.joint_covariance()).amax() < 0.03);
}

#[test]
fn cca_independent_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = build_cca_model(5, 3, 1, 0.0, &mut rng).unwrap();
    assert!(model.sigma_xy.amax() < 1e-12);
    let n = 20_000;
    let s = sample_cca(&model, n, &mut rng).unwrap();
    let cross = &s.x_data * s.y_data.transpose() / n as f64;
    assert!(cross.amax() < 0.05, "{}", cross.amax());
}

#[test]
fn exact_moments_recover_population_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = build_cca_model(6, 4, 2, 0.6, &mut rng).unwrap();
    let s = exact_moment_sample(&model, 40, &mut rng).unwrap();
    let nf = 40.0;
    assert!((&s.x_data * s.x_data.transpose() / nf - &model.sigma_x).amax() < 1e-9);
    assert!((&s.x_data * s.y_data.transpose() / nf - &model.sigma_xy).amax() < 1e-9);
    let est = estimate_cca(&s.x_data, &s.y_data, 2).unwrap();
    assert!(sin_theta(&model.u_s, &est.u_hat).unwrap().spectral < 1e-6);
    assert!(sin_theta(&model.v_s, &est.v_hat).unwrap().spectral < 1e-6);
}

#[test]
fn standard_error_halves_with_four_times_the_trials() {
    let setting = DenoisingSetting::new(40, 10, 2, 6.0);
    let small = denoising_risk(&setting, &Trials::new(200, 8)).unwrap();
    let large = denoising_risk(&setting, &Trials::new(800, 9)).unwrap();
    let ratio = small.v_sp.std_error / large.v_sp.std_error;
    assert!((ratio / 2.0 - 1.0).abs() < 0.3, "ratio {ratio}");
}
