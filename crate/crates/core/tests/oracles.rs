use catbranch::config::RunConfig;
use catbranch::gaussian::ComplexGaussianTerm;
use catbranch::model::ValidatedConfig;
use catbranch::oracle::{quad_integrate, quad_integrate_fn, QuadratureSpec};
use catbranch::symmetric::SymMatrix;
use catbranch::verify::{
    isolated_system, marginal_quadrature_error, rk4_error, split_operator_1d_error, split_operator_error,
    system_period,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weak() -> ValidatedConfig {
    RunConfig::preset("weak").unwrap().validated().unwrap()
}

fn random_term(rng: &mut ChaCha8Rng, n: usize) -> ComplexGaussianTerm {
    let r: Vec<f64> = (0..n * n).map(|_| rng.random_range(-0.8..0.8)).collect();
    let delta = rng.random_range(0.5..1.5);
    let im: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = SymMatrix::from_fn(n, |i, j| {
        let re: f64 = (0..n).map(|k| r[i * n + k] * r[j * n + k]).sum::<f64>() + if i == j { delta } else { 0.0 };
        Complex64::new(re, im[i * n + j])
    });
    let b = (0..n)
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.5..1.5)))
        .collect();
    let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0));
    ComplexGaussianTerm::new(c, b, a).unwrap()
}

/// Box centered on the peak of `|g|` and wide enough that the boundary sits
/// below `e^{-40}` of it.
fn envelope_box(g: &ComplexGaussianTerm, points: usize) -> QuadratureSpec {
    let re: DMatrix<f64> = g.a.re();
    let centre = re.clone().lu().solve(&nalgebra::DVector::from_iterator(g.dim(), g.b.iter().map(|v| v.re))).unwrap();
    let lmin = re.symmetric_eigenvalues().min();
    let half = (80.0 / lmin).sqrt();
    QuadratureSpec::new(centre.iter().map(|&c| (c - half, c + half, points)).collect()).unwrap()
}

#[test]
fn random_terms_integrate_like_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    for k in 0..24 {
        let n = if k < 12 { 1 } else { 2 };
        let g = random_term(&mut rng, n);
        let exact = g.integrate_all().unwrap();
        let points = if n == 1 { 8001 } else { 1201 };
        let numeric = quad_integrate(&g, &envelope_box(&g, points)).unwrap();
        let rel = (numeric - exact).norm() / exact.norm();
        assert!(rel <= 1e-6, "term {k}: relative error {rel:e}");
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn random_marginals_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..20 {
        let g = random_term(&mut rng, 2);
        let m = g.marginalize(&[1]).unwrap();
        let re = g.a.re();
        for x0 in [-1.0, 0.0, 0.7] {
            // conditional peak of |g| in the second variable
            let peak = (g.b[1].re - re[(1, 0)] * x0) / re[(1, 1)];
            let half = (80.0 / re[(1, 1)]).sqrt();
            let spec = QuadratureSpec::new(vec![(peak - half, peak + half, 8001)]).unwrap();
            let numeric = quad_integrate_fn(|y| g.exponent(&[x0, y[0]]).unwrap().exp(), &spec).unwrap();
            let exact = m.exponent(&[x0]).unwrap().exp();
            let rel = (numeric - exact).norm() / exact.norm();
            assert!(rel <= 1e-6, "term {k} at {x0}: relative error {rel:e}");
        }
    }
}

#[test]
fn simpson_order_on_standard_kernel() {
    // a truncated kernel keeps nonzero end values, so the h⁴ term is visible
    let f = |x: &[f64]| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0);
    let reference = simpson(&f, 20_001);
    let e1 = (simpson(&f, 11) - reference).abs();
    let e2 = (simpson(&f, 21) - reference).abs();
    let ratio = e1 / e2;
    assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");

    fn simpson(f: &impl Fn(&[f64]) -> Complex64, n: usize) -> f64 {
        // the oracle refuses non-decaying integrands, so apply the rule directly
        let h = 2.0 / (n - 1) as f64;
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(&[i as f64 * h]).re
            })
            .sum::<f64>()
            * h
            / 3.0
    }
}

#[test]
fn weak_reduced_terms_match_quadrature() {
    let err = marginal_quadrature_error(&weak(), 0.505, 801).unwrap();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn cat_in_well_matches_split_operator() {
    let err = split_operator_1d_error(&weak()).unwrap();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn strang_splitting_is_second_order() {
    let single = isolated_system(&weak()).unwrap();
    // at T/2 the density is insensitive to the frequency shift to first order
    let t = system_period(&weak()) / 4.0;
    let coarse = split_operator_error(&single, &[t], 2048, t / 200.0).unwrap();
    let fine = split_operator_error(&single, &[t], 2048, t / 400.0).unwrap();
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio} ({coarse:e} / {fine:e})");
}

#[test]
fn weak_preset_matches_full_grid_evolution() {
    let err = split_operator_error(&weak(), &[1.005], 128, 1.005 / 256.0).unwrap();
    assert!(err <= 1e-3, "{err:e}");
}

#[test]
fn rk4_matches_closed_form_trajectories() {
    for preset in ["weak", "strong"] {
        let cfg = RunConfig::preset(preset).unwrap().validated().unwrap();
        let err = rk4_error(&cfg, 1e-4, 6.005).unwrap();
        assert!(err <= 1e-6, "{preset}: {err:e}");
    }
}
