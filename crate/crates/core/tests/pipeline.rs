use nmfeb_core::elbo::{base_log_partition_sum, objective};
use nmfeb_core::optimizer::{estimate_beta_init, fit_stats, init_gamma};
use nmfeb_core::oracle::{exact_log_marginal, exact_log_z, exact_posterior_marginals, wasserstein1, DiscreteMeasure1D};
use nmfeb_core::posterior::{build_posterior, credible_intervals, null_proportion, posterior_mean};
use nmfeb_core::problem::{build_stats, check_design, DesignThresholds};
use nmfeb_core::sim::{simulate, DesignKind, SimConfig};
use nmfeb_core::*;

fn small_config(seed: u64, p: usize) -> SimConfig {
    SimConfig {
        n: 60,
        p,
        design: DesignKind::IidGaussian,
        prior_truth: PriorGrid::new(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap(),
        sigma2: 1.0,
        seed,
        row_normalize: true,
    }
}

#[test]
fn simulate_fit_and_summarize() {
    let cfg = SimConfig {
        n: 200,
        p: 40,
        ..small_config(1, 40)
    };
    let (x, _, y) = simulate(&cfg).unwrap();
    let report = check_design(&x, 1.0, DesignThresholds::default()).unwrap();
    assert!(report.full_column_rank);

    let res = fit(
        &x,
        &y,
        1.0,
        GridSpec {
            lo: -1.0,
            hi: 1.0,
            k: 21,
        },
        &FitConfig::default(),
    )
    .unwrap();
    assert!(res.converged);
    assert!(res.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!((res.prior.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(res.prior.weights().iter().all(|&w| w >= 0.0));

    let stats = build_stats(&x, &y, 1.0).unwrap();
    let post = build_posterior(&res.prior, &res.gamma, &stats.d).unwrap();
    let means = posterior_mean(&post);
    assert!(means.iter().all(|m| (-1.0..=1.0).contains(m)));
    let ivs = credible_intervals(&post, 0.1, 0.05);
    assert!(ivs
        .iter()
        .all(|iv| iv.lower <= iv.upper && iv.lower >= -1.05 && iv.upper <= 1.05));
    let null = null_proportion(&res.prior, 0.15);
    assert!((0.0..=1.0).contains(&null));
}

#[test]
fn fitted_bound_never_exceeds_exact_evidence() {
    for seed in 0..5 {
        let (x, _, y) = simulate(&small_config(seed, 5)).unwrap();
        let stats = build_stats(&x, &y, 1.0).unwrap();
        let grid = GridSpec {
            lo: -1.0,
            hi: 1.0,
            k: 4,
        };
        let beta0 = estimate_beta_init(&x, &y, &InitMode::Ridge, None).unwrap();
        let res = fit_stats(&stats, grid, init_gamma(&stats, &beta0).unwrap(), &FitConfig::default()).unwrap();
        let value = objective(&stats, &res.gamma, &res.prior).unwrap();
        let m_p = value.m_tilde - base_log_partition_sum(&stats, &res.prior);
        assert!(m_p <= exact_log_z(&stats, &res.prior).unwrap() + 1e-9);
        assert!(value.elbo_evidence <= exact_log_marginal(&stats, &res.prior).unwrap() + 1e-9);
    }
}

#[test]
fn orthogonal_design_is_exact() {
    let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.7, 1.3, 0.9]));
    let y = DVector::from_vec(vec![0.8, -1.1, 0.2, 1.6]);
    let stats = build_stats(&x, &y, 0.5).unwrap();
    let res = fit(
        &x,
        &y,
        0.5,
        GridSpec {
            lo: -1.0,
            hi: 1.0,
            k: 5,
        },
        &FitConfig::default(),
    )
    .unwrap();
    let value = objective(&stats, &res.gamma, &res.prior).unwrap();
    let exact = exact_log_z(&stats, &res.prior).unwrap() + base_log_partition_sum(&stats, &res.prior);
    assert!((value.m_tilde - exact).abs() <= 1e-10);

    let post = build_posterior(&res.prior, &res.gamma, &stats.d).unwrap();
    let marg = exact_posterior_marginals(&stats, &res.prior).unwrap();
    for (comp, m) in post.components.iter().zip(&marg) {
        assert!(wasserstein1(&DiscreteMeasure1D::from(comp), m) <= 1e-10);
    }
}

#[test]
fn fit_is_reproducible() {
    let cfg = SimConfig {
        design: DesignKind::ArGaussian { rho: 0.5 },
        ..small_config(9, 30)
    };
    let (x, _, y) = simulate(&cfg).unwrap();
    let grid = GridSpec {
        lo: -1.0,
        hi: 1.0,
        k: 15,
    };
    let a = fit(&x, &y, 1.0, grid, &FitConfig::default()).unwrap();
    let b = fit(&x, &y, 1.0, grid, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}
