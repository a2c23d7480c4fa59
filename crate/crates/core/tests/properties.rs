mod common;

use common::{dense_projection, random_design};
use ivkit::diagnostics::{ar_statistic, f_cdf, f_quantile, f_sf, first_stage_f};
use ivkit::estimators::liml_kappa;
use ivkit::linalg::QrFactor;
use ivkit::simulation::quantile_type1;
use ivkit::{fit_2sls, fit_kclass, fit_ols, IvDataset, KClassSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn rescaled(d: &IvDataset, y: DVector<f64>, x: DMatrix<f64>, z: DMatrix<f64>) -> IvDataset {
    IvDataset::new(y, x, z, d.n_exog()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_idempotent_with_trace_k(seed in any::<u64>(), k_excl in 1usize..6, m in 1usize..4) {
        let d = random_design(seed, 40, m, k_excl, 0.5, 0.3);
        let qr = d.z_factor();
        let v = d.x().clone();
        let once = qr.project(&v);
        let twice = qr.project(&once);
        prop_assert!(max_abs(&(&twice - &once)) < 1e-10);
        let trace: f64 = qr.leverages().sum();
        prop_assert!((trace - d.k() as f64).abs() < 1e-9);
        let dense = dense_projection(d.z()) * &v;
        prop_assert!(max_abs(&(dense - once)) < 1e-9);
    }

    #[test]
    fn two_stage_matches_dense_formula(seed in any::<u64>(), k_excl in 1usize..5) {
        let d = random_design(seed, 60, 2, k_excl, 0.6, 0.5);
        let p = dense_projection(d.z());
        let xt = d.x().transpose();
        let beta = (&xt * &p * d.x()).try_inverse().unwrap() * (&xt * &p * d.y());
        let r = fit_2sls(&d).unwrap();
        prop_assert!((&r.beta - &beta).amax() < 1e-8 * (1.0 + beta.amax()));
    }

    #[test]
    fn kclass_matches_dense_formula(seed in any::<u64>(), kappa in 0.0f64..1.5) {
        let d = random_design(seed, 60, 2, 3, 0.6, 0.5);
        let n = d.n();
        let m_z = DMatrix::identity(n, n) - dense_projection(d.z());
        let w = DMatrix::identity(n, n) - m_z * kappa;
        let xt = d.x().transpose();
        let beta = (&xt * &w * d.x()).try_inverse().unwrap() * (&xt * &w * d.y());
        let r = fit_kclass(&d, KClassSpec::new(kappa).unwrap()).unwrap();
        prop_assert!((&r.beta - &beta).amax() < 1e-7 * (1.0 + beta.amax()));
    }

    #[test]
    fn kclass_endpoints_are_ols_and_2sls(seed in any::<u64>()) {
        let d = random_design(seed, 50, 2, 2, 0.6, 0.5);
        let k0 = fit_kclass(&d, KClassSpec::new(0.0).unwrap()).unwrap();
        let k1 = fit_kclass(&d, KClassSpec::new(1.0).unwrap()).unwrap();
        prop_assert!((&k0.beta - &fit_ols(&d).unwrap().beta).amax() < 1e-9);
        prop_assert!((&k1.beta - &fit_2sls(&d).unwrap().beta).amax() < 1e-9);
    }

    #[test]
    fn liml_kappa_is_at_least_one(seed in any::<u64>(), k_excl in 1usize..6) {
        let d = random_design(seed, 50, 2, k_excl, 0.3, 0.7);
        prop_assert!(liml_kappa(&d).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn estimates_shift_with_outcome_translation(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let d = random_design(seed, 50, 2, 3, 0.6, 0.4);
        let direction = DVector::from_fn(d.l(), |j, _| (j as f64 + 1.0) * shift);
        let y = d.y() + d.x() * &direction;
        let moved = rescaled(&d, y, d.x().clone(), d.z().clone());
        let a = fit_2sls(&d).unwrap();
        let b = fit_2sls(&moved).unwrap();
        prop_assert!((&b.beta - &a.beta - &direction).amax() < 1e-8 * (1.0 + shift.abs()));
        prop_assert!((&b.std_errors - &a.std_errors).amax() < 1e-8);
    }

    #[test]
    fn anderson_rubin_is_scale_invariant(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let d = random_design(seed, 50, 2, 3, 0.4, 0.5);
        let beta0 = DVector::from_vec(vec![0.2, -0.3, 1.0]);
        let scaled = rescaled(&d, d.y() * scale, d.x().clone(), d.z().clone());
        let a = ar_statistic(&d, &beta0).unwrap();
        let b = ar_statistic(&scaled, &(beta0 * scale)).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
    }

    #[test]
    fn first_stage_f_invariant_to_instrument_basis(seed in any::<u64>(), mix in -2.0f64..2.0) {
        let d = random_design(seed, 60, 2, 3, 0.4, 0.5);
        let k = d.k();
        let m = d.n_exog();
        let mut a = DMatrix::<f64>::identity(k, k);
        for i in m..k {
            for j in 0..k {
                if i != j {
                    a[(j, i)] = mix * ((i + 2 * j) % 3) as f64 * 0.3;
                }
            }
            a[(i, i)] = 2.0 + mix.abs();
        }
        let z = d.z() * &a;
        prop_assume!(QrFactor::new(&z).is_ok());
        let moved = rescaled(&d, d.y().clone(), d.x().clone(), z);
        let fa = first_stage_f(&d).unwrap().f_stat;
        let fb = first_stage_f(&moved).unwrap().f_stat;
        prop_assert!((fa - fb).abs() < 1e-7 * (1.0 + fa));
    }

    #[test]
    fn quantiles_are_monotone(mut xs in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let probs = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
        let q: Vec<f64> = probs.iter().map(|&p| quantile_type1(&xs, p).unwrap()).collect();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(q[0], xs[0]);
        prop_assert_eq!(q[6], xs[xs.len() - 1]);
        prop_assert!(xs.contains(&q[3]));
    }

    #[test]
    fn f_distribution_agrees_with_statrs(x in 0.01f64..20.0, d1 in 1u32..40, d2 in 2u32..500, p in 0.01f64..0.99) {
        let reference = FisherSnedecor::new(d1 as f64, d2 as f64).unwrap();
        let (d1, d2) = (d1 as f64, d2 as f64);
        prop_assert!((f_cdf(x, d1, d2) - reference.cdf(x)).abs() < 1e-9);
        prop_assert!((f_sf(x, d1, d2) - reference.sf(x)).abs() < 1e-9);
        let q = f_quantile(p, d1, d2);
        prop_assert!((reference.cdf(q) - p).abs() < 1e-8);
    }
}
