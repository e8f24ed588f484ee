use catbranch::classical::evolve_ensemble;
use catbranch::gaussian::ComplexGaussianTerm;
use catbranch::model::{potential_matrix, validate, CatSpec, OscillatorNetwork, PacketLabel};
use catbranch::normal_modes::mass_weighted;
use catbranch::symmetric::SymMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Normalizable term: `Re A = R Rᵀ + δ I`, arbitrary symmetric `Im A`.
fn term(n: usize) -> impl Strategy<Value = ComplexGaussianTerm> {
    (
        prop::collection::vec(-1.0f64..1.0, n * n),
        prop::collection::vec(-1.5f64..1.5, n * n),
        prop::collection::vec(-2.0f64..2.0, 2 * n),
        (-1.0f64..1.0, -3.0f64..3.0),
        0.3f64..1.5,
    )
        .prop_map(move |(r, im, b, (cr, ci), delta)| {
            let a = SymMatrix::from_fn(n, |i, j| {
                let re: f64 = (0..n).map(|k| r[i * n + k] * r[j * n + k]).sum::<f64>()
                    + if i == j { delta } else { 0.0 };
                c(re, im[i * n + j])
            });
            let b = (0..n).map(|i| c(b[2 * i], b[2 * i + 1])).collect();
            ComplexGaussianTerm::new(c(cr, ci), b, a).unwrap()
        })
}

fn sized_term() -> impl Strategy<Value = ComplexGaussianTerm> {
    (1usize..=4).prop_flat_map(term)
}

fn network() -> impl Strategy<Value = OscillatorNetwork> {
    (1usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(0.5f64..3.0, n),
            prop::collection::vec(0.0f64..3.0, n),
            prop::collection::vec(0.0f64..2.0, n * n),
        )
            .prop_map(move |(m, mut k, kij)| {
                k[0] = k[0].max(0.2);
                let mut net = OscillatorNetwork::unconnected(m);
                for (i, &ki) in k.iter().enumerate() {
                    net = net.with_external(i, ki);
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        net = net.with_spring(i, j, kij[i * n + j]);
                    }
                }
                net
            })
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn marginalization_composes(g in sized_term()) {
        let n = g.dim();
        prop_assume!(n >= 2);
        let both = g.marginalize(&[0, n - 1]).unwrap();
        // drop the last variable first, then the first
        let stepwise = g.marginalize(&[n - 1]).unwrap().marginalize(&[0]).unwrap();
        prop_assert!(both.max_param_diff(&stepwise) <= 1e-9 * (1.0 + both.c.norm()));
    }

    #[test]
    fn total_integral_survives_partial_marginalization(g in sized_term()) {
        let full = g.log_integral().unwrap();
        let partial = g.marginalize(&[0]).unwrap();
        let via = if partial.dim() == 0 { partial.c } else { partial.log_integral().unwrap() };
        prop_assert!(close(full.exp(), via.exp(), 1e-9));
    }

    #[test]
    fn real_terms_stay_real(g in sized_term()) {
        let real = ComplexGaussianTerm::new(
            c(g.c.re, 0.0),
            g.b.iter().map(|v| c(v.re, 0.0)).collect(),
            g.a.map(|v| c(v.re, 0.0)),
        ).unwrap();
        let m = real.marginalize(&[0]).unwrap();
        prop_assert!(m.c.im.abs() <= 1e-12 * (1.0 + m.c.re.abs()));
        prop_assert!(m.b.iter().all(|v| v.im.abs() <= 1e-12));
        prop_assert!(m.a.packed().iter().all(|v| v.im.abs() <= 1e-12));
    }

    #[test]
    fn conjugation_commutes_with_marginalization(g in sized_term()) {
        let a = g.conjugate().marginalize(&[0]).unwrap();
        let b = g.marginalize(&[0]).unwrap().conjugate();
        prop_assert!(a.max_param_diff(&b) <= 1e-12 * (1.0 + a.c.norm()));
    }

    #[test]
    fn product_evaluates_pointwise(
        (g, h, x) in (1usize..=3).prop_flat_map(|n| (term(n), term(n), prop::collection::vec(-2.0f64..2.0, n)))
    ) {
        let gh = g.multiply(&h).unwrap();
        let lhs = gh.evaluate(&x).unwrap();
        let rhs = g.evaluate(&x).unwrap() * h.evaluate(&x).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn substitution_round_trip(net in network(), g in term(1)) {
        // lift a one-variable term to the network size by padding with unit Gaussians
        let n = net.n();
        let padded = ComplexGaussianTerm::new(
            g.c,
            (0..n).map(|i| if i == 0 { g.b[0] } else { c(0.0, 0.0) }).collect(),
            SymMatrix::from_fn(n, |i, j| if i == 0 && j == 0 { g.a.get(0, 0) } else if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }),
        ).unwrap();
        let cfg = validate(net, CatSpec { d: vec![1.0; n], sigma: vec![0.5; n], hbar: 1.0 }).unwrap();
        let basis = cfg.basis();
        let back = padded
            .substitute(&basis.from_mode_matrix()).unwrap()
            .substitute(&basis.to_mode_matrix()).unwrap();
        prop_assert!(back.max_param_diff(&padded) <= 1e-11);
    }

    #[test]
    fn quadratic_form_matches_energy(net in network(), x in prop::collection::vec(-3.0f64..3.0, 4)) {
        let n = net.n();
        let x = &x[..n];
        let v = potential_matrix(&net);
        let q: f64 = (0..n).map(|i| (0..n).map(|j| 0.5 * x[i] * v[(i, j)] * x[j]).sum::<f64>()).sum();
        prop_assert!((q - net.potential_energy(x)).abs() <= 1e-12 * (1.0 + q.abs()));
        for i in 0..n {
            let row: f64 = (0..n).map(|j| v[(i, j)]).sum();
            prop_assert!((row - net.external_k[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn eigenbasis_reconstructs(net in network()) {
        let n = net.n();
        let w = mass_weighted(&potential_matrix(&net), &net.masses).unwrap();
        let cfg = validate(net, CatSpec { d: vec![1.0; n], sigma: vec![0.5; n], hbar: 1.0 }).unwrap();
        let b = cfg.basis();
        let rebuilt = &b.o * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(b.omega2.clone())) * b.o.transpose();
        prop_assert!((rebuilt - &w).amax() <= 1e-12 * (1.0 + w.amax()));
        prop_assert!((b.o.transpose() * &b.o - DMatrix::identity(n, n)).amax() <= 1e-12);
        prop_assert!(b.omega2.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn classical_energy_is_conserved(net in network(), d in prop::collection::vec(-6.0f64..6.0, 4), t in 0.0f64..20.0) {
        let n = net.n();
        let cat = CatSpec { d: d[..n].to_vec(), sigma: vec![0.5; n], hbar: 1.0 };
        let cfg = validate(net.clone(), cat).unwrap();
        let ens = evolve_ensemble(&cfg, &[]).unwrap();
        for j in 0..ens.labels.len() {
            let (x0, v0) = ens.state(j, 0.0);
            let (x, v) = ens.state(j, t);
            let e0 = net.potential_energy(&x0) + net.kinetic_energy(&v0);
            let e = net.potential_energy(&x) + net.kinetic_energy(&v);
            prop_assert!((e - e0).abs() <= 1e-10 * (1.0 + e0));
        }
        prop_assert_eq!(ens.labels.len(), PacketLabel::all(n).len());
    }
}
