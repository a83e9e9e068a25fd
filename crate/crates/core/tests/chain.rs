mod support;

use approx::assert_abs_diff_eq;
use ffs::{chain_smooth, dense_joint_oracle, expected_transition_sq, ChainPosterior, GaussianChainPrior, SitePotential};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use support::random::{max_abs_diff, random_chain, random_psd};

#[test]
fn smoother_matches_dense_inverse() {
    assert!(support::checks::chain_vs_dense(200, 1) < 1e-8);
}

#[test]
fn two_step_scalar_chain_by_hand() {
    let prior = GaussianChainPrior::new(1, 1.0, vec![2.0]).unwrap();
    let sites = vec![
        SitePotential { precision: DMatrix::from_element(1, 1, 1.0), shift: DVector::from_element(1, 1.0) },
        SitePotential { precision: DMatrix::from_element(1, 1, 1.0), shift: DVector::from_element(1, 0.0) },
    ];
    let post = chain_smooth(&prior, &sites).unwrap();
    // precision [[4, -2], [-2, 3]], determinant 8
    let cov = [[3.0 / 8.0, 2.0 / 8.0], [2.0 / 8.0, 4.0 / 8.0]];
    assert_abs_diff_eq!(post.covariances[0][(0, 0)], cov[0][0], epsilon = 1e-14);
    assert_abs_diff_eq!(post.covariances[1][(0, 0)], cov[1][1], epsilon = 1e-14);
    assert_abs_diff_eq!(post.cross_covariances[0][(0, 0)], cov[0][1], epsilon = 1e-14);
    assert_abs_diff_eq!(post.means[0][0], cov[0][0], epsilon = 1e-14);
    assert_abs_diff_eq!(post.means[1][0], cov[1][0], epsilon = 1e-14);
    assert_abs_diff_eq!(post.log_det_precision, 8f64.ln(), epsilon = 1e-14);
}

#[test]
fn single_block_and_zero_shift() {
    let d = 3;
    let prior = GaussianChainPrior::new(d, 1.0, vec![]).unwrap();
    let site = SitePotential { precision: DMatrix::identity(d, d), shift: DVector::zeros(d) };
    let post = chain_smooth(&prior, &[site.clone()]).unwrap();
    assert!(post.means[0].iter().all(|m| *m == 0.0));
    assert!(max_abs_diff(&post.covariances[0], &(DMatrix::identity(d, d) * 0.5)) < 1e-15);

    let prior = GaussianChainPrior::new(d, 0.7, vec![1.0, 3.0, 0.2]).unwrap();
    let sites = vec![SitePotential::zeros(d); 4];
    let dense = dense_joint_oracle(&prior, &sites).unwrap();
    assert!(dense.means.iter().all(|m| m.norm() == 0.0));
}

#[test]
fn degenerate_and_guarded_inputs() {
    let prior = GaussianChainPrior::new(2, 0.0, vec![1.0]).unwrap();
    let sites = vec![SitePotential::zeros(2); 2];
    assert!(chain_smooth(&prior, &sites).is_err());
    let big = GaussianChainPrior::new(3, 1.0, vec![1.0; 22]).unwrap();
    assert!(dense_joint_oracle(&big, &vec![SitePotential::zeros(3); 23]).is_err());
    assert!(GaussianChainPrior::new(2, -1.0, vec![]).is_err());
}

#[test]
fn zero_transition_splits_the_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut prior, sites) = random_chain(&mut rng, 6, 2);
    prior.transition_precisions[2] = 0.0;
    let post = chain_smooth(&prior, &sites).unwrap();
    assert!(post.cross_covariances[2].abs().max() < 1e-14);
}

#[test]
fn transition_identity_examples() {
    let d = 2;
    let coupled = ChainPosterior {
        means: vec![DVector::from_vec(vec![1.0, 2.0]); 2],
        covariances: vec![DMatrix::identity(d, d); 2],
        cross_covariances: vec![DMatrix::identity(d, d)],
        log_det_precision: 0.0,
    };
    assert_abs_diff_eq!(expected_transition_sq(&coupled, 0).unwrap(), 0.0, epsilon = 1e-15);
    let loose = ChainPosterior {
        means: vec![DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(2)],
        covariances: vec![DMatrix::identity(d, d); 2],
        cross_covariances: vec![DMatrix::zeros(d, d)],
        log_det_precision: 0.0,
    };
    assert_abs_diff_eq!(expected_transition_sq(&loose, 0).unwrap(), 5.0, epsilon = 1e-15);
    assert!(expected_transition_sq(&loose, 1).is_err());
}

#[test]
fn transition_moment_matches_joint_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (d, len) = (2, 4);
    let (prior, sites) = random_chain(&mut rng, len, d);
    let dense = dense_joint_oracle(&prior, &sites).unwrap();
    // assemble the joint covariance from the smoother to sample θ_1..θ_T
    let post = chain_smooth(&prior, &sites).unwrap();
    let full = full_joint_covariance(&prior, &sites);
    let l = full.cholesky().unwrap().l();
    let mean = DVector::from_iterator(d * len, post.means.iter().flat_map(|m| m.iter().cloned()));
    let draws = 1_000_000;
    let mut acc = vec![0.0; len - 1];
    let mut z = DVector::<f64>::zeros(d * len);
    for _ in 0..draws {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let x = &mean + &l * &z;
        for (t, a) in acc.iter_mut().enumerate() {
            *a += (x.rows(t * d, d) - x.rows((t + 1) * d, d)).norm_squared();
        }
    }
    for (t, a) in acc.iter().enumerate() {
        let mc = a / draws as f64;
        let exact = expected_transition_sq(&post, t).unwrap();
        assert!((mc - exact).abs() < 0.01 * exact, "t={t} mc={mc} exact={exact}");
        assert_abs_diff_eq!(exact, expected_transition_sq(&dense, t).unwrap(), epsilon = 1e-10);
    }
}

fn full_joint_covariance(prior: &GaussianChainPrior, sites: &[SitePotential]) -> DMatrix<f64> {
    let d = prior.dim;
    let len = sites.len();
    let mut q = DMatrix::zeros(d * len, d * len);
    let eye = DMatrix::<f64>::identity(d, d);
    q.view_mut((0, 0), (d, d)).add_assign(&(&eye * prior.init_precision));
    for (t, r) in prior.transition_precisions.iter().enumerate() {
        let (a, b) = (t * d, (t + 1) * d);
        q.view_mut((a, a), (d, d)).add_assign(&(&eye * *r));
        q.view_mut((b, b), (d, d)).add_assign(&(&eye * *r));
        q.view_mut((a, b), (d, d)).add_assign(&(&eye * -*r));
        q.view_mut((b, a), (d, d)).add_assign(&(&eye * -*r));
    }
    for (t, s) in sites.iter().enumerate() {
        q.view_mut((t * d, t * d), (d, d)).add_assign(&s.precision);
    }
    q.try_inverse().unwrap()
}

use std::ops::AddAssign;

fn reversed(prior: &GaussianChainPrior, sites: &[SitePotential]) -> (GaussianChainPrior, Vec<SitePotential>) {
    // the initial precision has to move with θ_1, so fold it into the last site
    let d = prior.dim;
    let mut rev_sites: Vec<SitePotential> = sites.iter().rev().cloned().collect();
    let last = rev_sites.len() - 1;
    rev_sites[last].precision += DMatrix::identity(d, d) * prior.init_precision;
    let rev_prior =
        GaussianChainPrior::new(d, 0.0, prior.transition_precisions.iter().rev().cloned().collect()).unwrap();
    (rev_prior, rev_sites)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoother_equals_dense(seed in any::<u64>(), d in 1usize..=4, len in 1usize..=16) {
        prop_assume!(d * len <= 64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (prior, sites) = random_chain(&mut rng, len, d);
        let fast = chain_smooth(&prior, &sites).unwrap();
        let dense = dense_joint_oracle(&prior, &sites).unwrap();
        for t in 0..len {
            prop_assert!((&fast.means[t] - &dense.means[t]).abs().max() < 1e-8);
            prop_assert!(max_abs_diff(&fast.covariances[t], &dense.covariances[t]) < 1e-8);
        }
        for t in 0..len - 1 {
            prop_assert!(max_abs_diff(&fast.cross_covariances[t], &dense.cross_covariances[t]) < 1e-8);
        }
        prop_assert!((fast.log_det_precision - dense.log_det_precision).abs() < 1e-8);
    }

    #[test]
    fn more_information_never_widens(seed in any::<u64>(), d in 1usize..=3, len in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (prior, mut sites) = random_chain(&mut rng, len, d);
        let before = chain_smooth(&prior, &sites).unwrap();
        let at = seed as usize % len;
        sites[at].precision += random_psd(&mut rng, d, 1);
        let after = chain_smooth(&prior, &sites).unwrap();
        for t in 0..len {
            prop_assert!(after.covariances[t].trace() <= before.covariances[t].trace() + 1e-12);
        }
    }

    #[test]
    fn reversed_chain_reverses_marginals(seed in any::<u64>(), d in 1usize..=3, len in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (prior, sites) = random_chain(&mut rng, len, d);
        let fwd = chain_smooth(&prior, &sites).unwrap();
        let (rp, rs) = reversed(&prior, &sites);
        let back = chain_smooth(&rp, &rs).unwrap();
        for t in 0..len {
            let r = len - 1 - t;
            prop_assert!((&fwd.means[t] - &back.means[r]).abs().max() < 1e-8);
            prop_assert!(max_abs_diff(&fwd.covariances[t], &back.covariances[r]) < 1e-8);
        }
        for t in 0..len - 1 {
            let r = len - 2 - t;
            prop_assert!(max_abs_diff(&fwd.cross_covariances[t], &back.cross_covariances[r].transpose()) < 1e-8);
        }
    }

    #[test]
    fn covariances_stay_symmetric_positive(seed in any::<u64>(), len in 2usize..=200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (prior, sites) = random_chain(&mut rng, len, 3);
        let post = chain_smooth(&prior, &sites).unwrap();
        for s in &post.covariances {
            prop_assert!(max_abs_diff(s, &s.transpose()) == 0.0);
            prop_assert!(s.clone().cholesky().is_some());
        }
    }
}
