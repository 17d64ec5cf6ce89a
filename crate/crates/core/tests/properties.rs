use espca::linalg::{
    fantope_project, frobenius_norm, max_abs, procrustes_align, singular_values, spectral_norm, sym_eigen,
    two_to_inf_norm, OrthonormalFrame, SymmetricMatrix,
};
use espca::metrics::{aligned_entrywise_error, frobenius_subspace_error};
use espca::model::{build_spiked_sparse_model, CoherenceProfile, ModelParams};
use espca::sampling::{DesignDistribution, DesignSampler};
use nalgebra::DMatrix;
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn symmetric(dim: usize, entries: &[f64]) -> SymmetricMatrix<f64> {
    SymmetricMatrix::new(Array2::from_shape_vec((dim, dim), entries.to_vec()).unwrap()).unwrap()
}

fn sym_strategy(max_dim: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_dim).prop_flat_map(|d| (Just(d), prop::collection::vec(-10.0..10.0f64, d * d)))
}

fn rect_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=12usize, 1..=12usize).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-5.0..5.0f64, r * c)))
}

fn frame_pair_strategy() -> impl Strategy<Value = (OrthonormalFrame<f64>, OrthonormalFrame<f64>, u64)> {
    (2..=20usize, any::<u64>()).prop_flat_map(|(p, seed)| (Just(p), 1..p, Just(seed))).prop_map(|(p, k, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = OrthonormalFrame::random(p, k, &mut rng).unwrap();
        let b = OrthonormalFrame::random(p, k, &mut rng).unwrap();
        (a, b, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn eigen_reconstructs_and_matches_nalgebra((dim, entries) in sym_strategy(30)) {
        let m = symmetric(dim, &entries);
        let eig = sym_eigen(&m).unwrap();
        let scale = 1.0 + m.max_abs();
        prop_assert!(max_abs(&(&eig.reconstruct() - &m.view()).view()) <= 1e-8 * scale);
        let v = eig.vectors.view();
        let gram = v.t().dot(&v);
        prop_assert!(max_abs(&(&gram - &Array2::<f64>::eye(dim)).view()) <= 1e-8);

        let oracle = DMatrix::from_row_slice(dim, dim, m.view().as_slice().unwrap());
        let mut expected: Vec<f64> = oracle.symmetric_eigen().eigenvalues.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in eig.values.values().iter().zip(&expected) {
            prop_assert!((got - want).abs() <= 1e-9 * scale, "{got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn singular_values_match_nalgebra((r, c, entries) in rect_strategy()) {
        let a = Array2::from_shape_vec((r, c), entries.clone()).unwrap();
        let got = singular_values(&a.view()).unwrap();
        let mut want: Vec<f64> = DMatrix::from_row_slice(r, c, &entries).singular_values().iter().copied().collect();
        want.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * (1.0 + want[0]));
        }
    }

    #[test]
    fn norm_ordering((r, c, entries) in rect_strategy()) {
        let a = Array2::from_shape_vec((r, c), entries).unwrap();
        let v = a.view();
        let (mx, tti, sp, fro) = (max_abs(&v), two_to_inf_norm(&v).unwrap(), spectral_norm(&v).unwrap(), frobenius_norm(&v));
        let tol = 1e-12 * (1.0 + fro);
        prop_assert!(mx <= tti + tol);
        prop_assert!(tti <= sp + tol);
        prop_assert!(tti <= fro + tol);
        prop_assert!(sp <= fro + tol);
    }

    #[test]
    fn fantope_is_non_expansive((dim, a, b, k) in (2..=10usize).prop_flat_map(|d| (
        Just(d),
        prop::collection::vec(-3.0..3.0f64, d * d),
        prop::collection::vec(-3.0..3.0f64, d * d),
        1..=d,
    ))) {
        let (a, b) = (symmetric(dim, &a), symmetric(dim, &b));
        let (pa, pb) = (fantope_project(&a, k).unwrap(), fantope_project(&b, k).unwrap());
        let lhs = pa.sub(&pb).unwrap().frobenius();
        let rhs = a.sub(&b).unwrap().frobenius();
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }

    #[test]
    fn procrustes_beats_random_rotations((a, b, seed) in frame_pair_strategy()) {
        let best = procrustes_align(&a, &b).unwrap();
        let best_err = frobenius_norm(&(&a.view() - &best.aligned).view());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..20 {
            let w = OrthonormalFrame::random(a.cols(), a.cols(), &mut rng).unwrap();
            let other = b.view().dot(&w.view());
            prop_assert!(best_err <= frobenius_norm(&(&a.view() - &other).view()) + 1e-9);
        }
    }

    #[test]
    fn aligned_error_is_rotation_invariant((a, b, seed) in frame_pair_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
        let q = OrthonormalFrame::random(b.cols(), b.cols(), &mut rng).unwrap();
        let rotated = b.rotated(&q.view()).unwrap();
        let before = aligned_entrywise_error(&a, &b).unwrap();
        let after = aligned_entrywise_error(&a, &rotated).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
        prop_assert!(before <= frobenius_subspace_error(&a, &b).unwrap() + 1e-12);
    }
}

fn random_model(seed: u64) -> espca::SparseCovarianceModelF64 {
    let params = ModelParams {
        p: 24,
        s: 7,
        k: 3,
        spikes: vec![9.0, 5.0, 3.0],
        bulk_level: 1.5,
        profile: CoherenceProfile::Random,
    };
    build_spiked_sparse_model(&params, seed).unwrap().permuted_seeded(seed ^ 7).unwrap()
}

#[test]
fn sample_covariance_block_expansion() {
    for seed in 0..20u64 {
        let model = random_model(seed);
        let sampler = DesignSampler::new(&model).unwrap();
        let n = 300;
        let (y, x) = sampler.sample_with_latent(n, DesignDistribution::Rademacher, seed).unwrap();
        let j = &model.support;
        let jc: Vec<usize> = (0..model.p).filter(|i| !j.contains(i)).collect();
        let root = sampler.sqrt_sigma().view().to_owned();
        let pick = |m: &Array2<f64>, rows: &[usize], cols: &[usize]| {
            Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| m[[rows[a], cols[b]]])
        };
        let all: Vec<usize> = (0..n).collect();
        let (yj, yjc) = (pick(&y, &all, j), pick(&y, &all, &jc));
        let (s_jj, s_jjc) = (pick(&root, j, j), pick(&root, j, &jc));
        let s_jcj = s_jjc.t();
        let expansion = (s_jj.dot(&yj.t().dot(&yj)).dot(&s_jj)
            + s_jj.dot(&yj.t().dot(&yjc)).dot(&s_jcj)
            + s_jcj.t().dot(&yjc.t().dot(&yj)).dot(&s_jj)
            + s_jcj.t().dot(&yjc.t().dot(&yjc)).dot(&s_jcj))
            / n as f64;
        let sigma_hat = espca::sampling::empirical_covariance(&x).unwrap();
        let direct = sigma_hat.principal_submatrix(j).unwrap();
        assert!(max_abs(&(&direct.view() - &expansion).view()) <= 1e-9);
    }
}

#[test]
fn off_support_root_block_annihilates_u() {
    for seed in 0..20u64 {
        let model = random_model(seed);
        let root = DesignSampler::new(&model).unwrap().sqrt_sigma().view().to_owned();
        let j = &model.support;
        let jc: Vec<usize> = (0..model.p).filter(|i| !j.contains(i)).collect();
        let block = Array2::from_shape_fn((j.len(), jc.len()), |(a, b)| root[[j[a], jc[b]]]);
        let u = model.u.view();
        let u_j = Array2::from_shape_fn((j.len(), model.k), |(a, c)| u[[j[a], c]]);
        assert!(max_abs(&block.t().dot(&u_j).view()) <= 1e-8);
        assert!(u.slice(s![.., ..]).rows().into_iter().enumerate().all(|(i, r)| j.contains(&i) || r.iter().all(|&v| v == 0.0)));
    }
}
