use plap_core::grid::{build_grid, DomainSpec, GridFunction};
use plap_core::nonlinearity::{keller_osserman_check_with, primitive_h, ClassFFunction, KoOptions, PhiTransform};
use plap_core::plap::{flux, solve_dirichlet_scalar, SolveOptions};
use proptest::prelude::*;

fn power(c: f64, gamma: f64) -> ClassFFunction {
    ClassFFunction::power(c, gamma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_is_antitone(gamma in 1.5f64..5.0, p in 1.5f64..3.0, w1 in 0.01f64..100.0, ratio in 1.001f64..50.0) {
        prop_assume!((gamma - p + 1.0) / (p - 1.0) > 1.05);
        let phi = PhiTransform::new(&power(1.0, gamma), p).unwrap();
        let w2 = w1 * ratio;
        prop_assert!(phi.eval(w1).unwrap() > phi.eval(w2).unwrap());
    }

    #[test]
    fn phi_round_trip(gamma in 1.5f64..5.0, p in 1.5f64..3.0, t in 0.0f64..1.0) {
        prop_assume!((gamma - p + 1.0) / (p - 1.0) > 1.05);
        let phi = PhiTransform::new(&power(1.0, gamma), p).unwrap();
        let (lo, hi) = phi.range().unwrap();
        // log-spaced strictly inside the attainable range
        let z = (lo.ln() + (0.01 + 0.98 * t) * (hi.ln() - lo.ln())).exp();
        let back = phi.eval(phi.invert(z).unwrap()).unwrap();
        prop_assert!((back - z).abs() <= 1e-7 * z.max(1.0), "z {} back {}", z, back);
    }

    #[test]
    fn power_primitive_is_superadditive(gamma in 1.0f64..4.0, a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let f = power(1.0, gamma);
        let lhs = primitive_h(&f, a + b).unwrap();
        let rhs = primitive_h(&f, a).unwrap() + primitive_h(&f, b).unwrap();
        prop_assert!(lhs >= rhs - 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn flux_is_odd_and_increasing(s in -10.0f64..10.0, ds in 1e-3f64..1.0, p in 1.2f64..4.0) {
        let eps = 1e-8;
        prop_assert!((flux(-s, p, eps) + flux(s, p, eps)).abs() <= 1e-12 * flux(s, p, eps).abs().max(1.0));
        prop_assert!(flux(s + ds, p, eps) > flux(s, p, eps));
    }

    #[test]
    fn boundary_distance_is_lipschitz(n in 5usize..60, ratio in 0.5f64..1.0, kind in 0u8..3) {
        let spec = match kind {
            0 => DomainSpec::interval(-1.0, 2.0, n),
            1 => DomainSpec::rectangle(0.0, 2.0, 0.0, 1.0, n.min(25)),
            _ => DomainSpec::radial_ball(1.5, 3, n),
        };
        let spec = if ratio < 0.99 && kind != 1 { spec.refined(ratio) } else { spec };
        let grid = build_grid(&spec).unwrap();
        for e in grid.edges() {
            let jump = (grid.boundary_distance(e.a) - grid.boundary_distance(e.b)).abs();
            prop_assert!(jump <= e.length * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cell_measures_integrate_constants_and_linears(n in 3usize..200, a in -5.0f64..5.0, len in 0.1f64..10.0) {
        let b = a + len;
        let grid = build_grid(&DomainSpec::interval(a, b, n)).unwrap();
        let ones = vec![1.0; grid.len()];
        prop_assert!((grid.integrate(&ones) - len).abs() <= 1e-12 * len.max(1.0));
        let xs: Vec<f64> = (0..grid.len()).map(|k| grid.node(k)[0]).collect();
        let exact = 0.5 * (b * b - a * a);
        prop_assert!((grid.integrate(&xs) - exact).abs() <= 1e-11 * exact.abs().max(1.0));
    }

    #[test]
    fn doubling_keeps_coarse_nodes(n in 3usize..100) {
        let coarse = build_grid(&DomainSpec::interval(0.0, 1.0, n)).unwrap();
        let fine = build_grid(&DomainSpec::interval(0.0, 1.0, 2 * n - 1)).unwrap();
        for k in 0..coarse.len() {
            prop_assert!((coarse.node(k)[0] - fine.node(2 * k)[0]).abs() <= 1e-14);
        }
    }

    #[test]
    fn energy_descends_on_converged_solves(b in 0.1f64..5.0, p in 1.5f64..3.0, gamma in 1.0f64..4.0) {
        let grid = build_grid(&DomainSpec::interval(-1.0, 1.0, 41)).unwrap();
        let r = solve_dirichlet_scalar(&grid, &power(1.0, gamma), &GridFunction::constant(&grid, b), p, &SolveOptions::default())
            .unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.energy_nonincreasing());
    }
}

#[test]
fn halving_quadrature_tolerance_is_stable() {
    for (gamma, p) in [(2.0, 2.0), (3.0, 2.0), (4.0, 3.0), (2.0, 1.5)] {
        let f = power(1.0, gamma);
        let tol = 1e-8;
        let base = KoOptions::default();
        let a = keller_osserman_check_with(&f, p, KoOptions { tol, ..base }).unwrap();
        let b = keller_osserman_check_with(&f, p, KoOptions { tol: tol / 2.0, ..base }).unwrap();
        let change = (a.integral_estimate - b.integral_estimate).abs();
        assert!(change < 10.0 * tol * a.integral_estimate.max(1.0), "gamma {gamma} p {p}: {change}");
    }
}
