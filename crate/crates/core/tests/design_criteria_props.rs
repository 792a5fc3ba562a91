use bias_design::criteria::{a_criterion, bias_mse, d_criterion, q1_criterion};
use bias_design::design::{
    is_product_design, moment_matrix, AlphaBetaFamily, DesignMeasure, DesignPoint,
    MonomialBasis, PartitionedMoment,
};
use bias_design::numerics::Matrix;
use proptest::prelude::*;

fn quadratic_x() -> MonomialBasis {
    MonomialBasis::new(vec![vec![0], vec![1], vec![2]]).unwrap()
}

fn bias_z() -> MonomialBasis {
    MonomialBasis::new(vec![vec![1], vec![2]]).unwrap()
}

/// Random measure on `n` distinct scalar (x, z) points.
fn measure(min: usize, max: usize) -> impl Strategy<Value = DesignMeasure> {
    (min..=max).prop_flat_map(|n| {
        (
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
            prop::collection::vec(0.01f64..1.0, n),
        )
            .prop_map(|(pts, raw)| {
                let total: f64 = raw.iter().sum();
                let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
                let head: f64 = w[1..].iter().sum();
                w[0] = 1.0 - head;
                let support = pts
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, z))| DesignPoint::new(vec![x + 10.0 * i as f64], vec![z]))
                    .collect();
                DesignMeasure::new(support, w).unwrap()
            })
    })
}

/// Random partitioned moment `AᵀA/k + εI` with `p`, `q` in 1..=3.
fn well_conditioned_moment() -> impl Strategy<Value = (PartitionedMoment, Vec<f64>)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(p, q)| {
        let d = p + q;
        (
            prop::collection::vec(-1.0f64..1.0, (d + 2) * d),
            prop::collection::vec(-3.0f64..3.0, q),
        )
            .prop_map(move |(data, psi)| {
                let a = Matrix::from_vec(d + 2, d, data).unwrap();
                let mut full = a.transpose().matmul(&a).unwrap().scale(1.0 / (d + 2) as f64);
                for i in 0..d {
                    full[(i, i)] += 0.2;
                }
                (PartitionedMoment::from_full(&full, p).unwrap(), psi)
            })
    })
}

proptest! {
    #[test]
    fn moment_is_symmetric_psd(m in measure(1, 8)) {
        let full = moment_matrix(&m, &quadratic_x(), &bias_z()).unwrap().full();
        prop_assert!(full.asymmetry() < 1e-12);
        let scale = full.max_abs().max(1.0);
        prop_assert!(full.min_eigenvalue().unwrap() >= -1e-9 * scale);
    }

    #[test]
    fn moment_is_affine_in_weights(
        (w1, w2, lambda) in (2usize..=6).prop_flat_map(|n| (
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(0.01f64..1.0, n),
            0.0f64..=1.0,
        ))
    ) {
        let n = w1.len();
        let support: Vec<DesignPoint> = (0..n)
            .map(|i| DesignPoint::new(vec![i as f64 * 0.7 - 1.0], vec![(i as f64).sin()]))
            .collect();
        let norm = |w: &[f64]| {
            let t: f64 = w.iter().sum();
            let mut v: Vec<f64> = w.iter().map(|x| x / t).collect();
            let head: f64 = v[1..].iter().sum();
            v[0] = 1.0 - head;
            v
        };
        let (a, b) = (norm(&w1), norm(&w2));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let (f, g) = (quadratic_x(), bias_z());
        let ma = moment_matrix(&DesignMeasure::new(support.clone(), a).unwrap(), &f, &g).unwrap().full();
        let mb = moment_matrix(&DesignMeasure::new(support.clone(), b).unwrap(), &f, &g).unwrap().full();
        let mixed = DesignMeasure::new(support, norm(&mix)).unwrap();
        let mm = moment_matrix(&mixed, &f, &g).unwrap().full();
        let expected = &ma.scale(lambda) + &mb.scale(1.0 - lambda);
        prop_assert!(mm.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn product_design_m12_is_outer_product(
        xs in prop::collection::btree_set(-20i32..20, 1..4),
        zs in prop::collection::btree_set(-20i32..20, 1..4),
        px in prop::collection::vec(0.05f64..1.0, 4),
        pz in prop::collection::vec(0.05f64..1.0, 4),
    ) {
        let xs: Vec<f64> = xs.into_iter().map(|v| v as f64 / 8.0).collect();
        let zs: Vec<f64> = zs.into_iter().map(|v| v as f64 / 8.0).collect();
        let tx: f64 = px[..xs.len()].iter().sum();
        let tz: f64 = pz[..zs.len()].iter().sum();
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for (j, &z) in zs.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                support.push(DesignPoint::new(vec![x], vec![z]));
                weights.push(px[i] / tx * pz[j] / tz);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let head: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - head;
        let m = DesignMeasure::new(support, weights).unwrap();
        prop_assert!(is_product_design(&m).is_product());

        let (f, g) = (quadratic_x(), bias_z());
        let pm = moment_matrix(&m, &f, &g).unwrap();
        let mut ef = vec![0.0; f.len()];
        let mut eg = vec![0.0; g.len()];
        for (p, &w) in m.support().iter().zip(m.weights()) {
            for (a, v) in ef.iter_mut().zip(f.evaluate(&p.x).unwrap()) { *a += w * v; }
            for (a, v) in eg.iter_mut().zip(g.evaluate(&p.z).unwrap()) { *a += w * v; }
        }
        for r in 0..f.len() {
            for c in 0..g.len() {
                prop_assert!((pm.m12[(r, c)] - ef[r] * eg[c]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn family_weights_sum_to_one(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let w = AlphaBetaFamily::weights(a, b);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 4.0 * f64::EPSILON);
        prop_assert!(AlphaBetaFamily::default().measure(a, b).is_ok());
    }

    #[test]
    fn psi_scale_law((pm, psi) in well_conditioned_moment(), c in -5.0f64..5.0) {
        let base = bias_mse(&pm, &psi).unwrap();
        let scaled_psi: Vec<f64> = psi.iter().map(|v| c * v).collect();
        let scaled = bias_mse(&pm, &scaled_psi).unwrap();
        let expected = c * c * base.trace_s2;
        prop_assert!((scaled.trace_s2 - expected).abs() <= 1e-10 * expected.abs().max(1e-300));
        prop_assert_eq!(scaled.trace_s1, base.trace_s1);
    }

    #[test]
    fn q1_is_the_supremum((pm, psi) in well_conditioned_moment()) {
        let norm2: f64 = psi.iter().map(|v| v * v).sum();
        prop_assume!(norm2 > 1e-8);
        let ratio = bias_mse(&pm, &psi).unwrap().trace_s2 / norm2;
        let q1 = q1_criterion(&pm).unwrap();
        prop_assert!(ratio <= q1 * (1.0 + 1e-10) + 1e-12, "{ratio} > {q1}");
    }

    #[test]
    fn criteria_ignore_support_order(
        (m, perm) in measure(4, 7).prop_flat_map(|m| {
            let n = m.len();
            (Just(m), Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        }),
        psi in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let (f, g) = (quadratic_x(), bias_z());
        let base = moment_matrix(&m, &f, &g).unwrap();
        let shuffled = moment_matrix(&m.permuted(&perm).unwrap(), &f, &g).unwrap();
        let (Ok(a), Ok(b)) = (bias_mse(&base, &psi), bias_mse(&shuffled, &psi)) else {
            return Ok(());
        };
        let (x, y) = (a_criterion(&a), a_criterion(&b));
        prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
        if let (Ok(d1), Ok(d2)) = (d_criterion(&base, &psi), d_criterion(&shuffled, &psi)) {
            prop_assert!((d1.value - d2.value).abs() <= 1e-8 * d1.value.abs().max(1e-12));
        }
    }
}

/// 200 fixed-seed random instances of the determinant identity.
#[test]
fn determinant_identity_on_random_moments() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, TestRng, TestRunner};

    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &[7; 32]),
    );
    let strategy = well_conditioned_moment();
    for _ in 0..200 {
        let (pm, psi) = strategy.new_tree(&mut runner).unwrap().current();
        let d = d_criterion(&pm, &psi).unwrap();
        let rel = (d.value - d.direct).abs() / d.direct.abs();
        assert!(rel < 1e-8, "relative gap {rel}");
    }
}
