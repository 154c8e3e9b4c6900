use std::sync::Arc;

use hconvex_core::corpus::{self, IDS};
use hconvex_core::differential::Sym2;
use hconvex_core::fields::{sample_to_grid_with, FnField};
use hconvex_core::pde::{
    gradient_square_residual, horizontal_laplacian, linear_transport_residual, operator_residual, sample_interior_nodes,
    semilinear_residual, supersolution_spotcheck, Equation, SemilinearSpec, SpotcheckConfig,
};
use hconvex_core::{FillMode, GridBox, Point, ScalarField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(r: f64) -> impl Strategy<Value = Point> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn solved() -> Vec<(&'static str, Arc<dyn ScalarField>, Equation)> {
    IDS.iter()
        .filter(|&&id| id != "no_symmetry2")
        .filter_map(|&id| {
            let e = corpus::entry(id).unwrap();
            e.equation.map(|eq| (id, e.field, eq))
        })
        .collect()
}

#[test]
fn corpus_solutions_have_small_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs = solved();
    assert_eq!(pairs.len(), 4);
    for (id, u, eq) in &pairs {
        for _ in 0..100 {
            let p = GridBox::cube(2.0).sample(&mut rng);
            let coarse = eq.residual_at(&**u, p, 1e-2).abs();
            let fine = eq.residual_at(&**u, p, 5e-3).abs();
            assert!(coarse <= 1e-4, "{id} {p:?} {coarse}");
            // Below 1e-7 the residual is rounding noise of the difference quotients.
            assert!(coarse < 1e-7 || fine <= coarse / 3.0, "{id} {p:?} {coarse} {fine}");
        }
    }
}

#[test]
fn built_in_residuals_agree_with_the_enum() {
    let u = FnField::new(|p: Point| p.x * p.x * p.y + p.z * p.x + p.y.powi(4));
    let f = FnField::new(|p: Point| p.x - p.y * p.z);
    let fa: Arc<dyn ScalarField> = Arc::new(FnField::new(|p: Point| p.x - p.y * p.z));
    let p = Point::new(0.3, -0.7, 1.1);
    let lt = Equation::LinearTransport { zeta: [0.5, 2.0], absolute: false, f: hconvex_core::pde::Rhs(fa.clone()) };
    assert_eq!(lt.residual_at(&u, p, 1e-2), linear_transport_residual([0.5, 2.0], &f, &u, p, 1e-2));
    let gs = Equation::GradientSquare { f: hconvex_core::pde::Rhs(fa.clone()) };
    assert_eq!(gs.residual_at(&u, p, 1e-2), gradient_square_residual(&f, &u, p, 1e-2));
    let spec = SemilinearSpec::new(0.5, 1.0, vec![[1.0, 0.0], [0.0, 1.0]], fa).unwrap();
    let direct = u.eval(p) - 0.5 * horizontal_laplacian(&u, p, 1e-2)
        - operator_residual(&|_: Point, _: f64, g: (f64, f64), _: &Sym2| g.0.max(g.1), &u, p, 1e-2)
        - f.eval(p);
    assert!((semilinear_residual(&spec, &u, p, 1e-2) - direct).abs() < 1e-12);
}

#[test]
fn spec_validation() {
    let f: Arc<dyn ScalarField> = Arc::new(FnField::new(|_: Point| 0.0));
    assert!(SemilinearSpec::new(-1.0, 0.0, vec![], f.clone()).is_err());
    assert!(SemilinearSpec::new(1.0, 1.0, vec![], f.clone()).is_err());
    assert!(SemilinearSpec::new(1.0, 1.0, vec![[f64::NAN, 0.0]], f.clone()).is_err());
    assert!(SemilinearSpec::new(1.0, 1.0, vec![[1.0, 2.0], [-1.0, -2.0]], f.clone()).unwrap().is_symmetric());
    assert!(!SemilinearSpec::new(1.0, 1.0, vec![[1.0, 2.0]], f).unwrap().is_symmetric());
}

#[test]
fn spotcheck_on_a_classical_solution() {
    let e = corpus::entry("hconvex_sol").unwrap();
    let eq = e.equation.unwrap();
    let g = sample_to_grid_with(&*e.field, GridBox::cube(2.0), [41, 41, 41], FillMode::Clamp).unwrap();
    let nodes = sample_interior_nodes(&g, 2, 200, 3);
    assert_eq!(nodes.len(), 200);
    let report = supersolution_spotcheck(&eq, &g, &nodes, &SpotcheckConfig { tol: 1e-2, ..SpotcheckConfig::default() });
    assert!(report.passed(), "{:?}", report.violations.first());
    assert_eq!(report.checked + report.skipped, 200);
    assert!(sample_interior_nodes(&g, 30, 5, 3).is_empty());
}

proptest! {
    #[test]
    fn reflection_invariance(p in point(2.0), beta in 0.1..3.0f64, d in prop::array::uniform2(-2.0..2.0f64)) {
        let f: Arc<dyn ScalarField> = Arc::new(FnField::new(|q: Point| q.x * q.x * q.y * q.y + q.z.powi(3) - q.x * q.y));
        let u = FnField::new(|q: Point| (q.x * q.x + q.y * q.y).powi(2) + q.z * q.z + q.x * q.y * q.z);
        let spec = SemilinearSpec::new(0.7, beta, vec![d, [-d[0], -d[1]], [1.0, 0.0], [-1.0, 0.0]], f).unwrap();
        let a = semilinear_residual(&spec, &u, p, 1e-2);
        let b = semilinear_residual(&spec, &u, p.reflect_z_axis(), 1e-2);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} {}", a, b);
    }

    #[test]
    fn support_is_max_over_extreme_points(dirs in prop::collection::vec(prop::array::uniform2(-2.0..2.0f64), 1..6), g in prop::array::uniform2(-5.0..5.0f64), seed in 0u64..1000) {
        let f: Arc<dyn ScalarField> = Arc::new(FnField::new(|_: Point| 0.0));
        let spec = SemilinearSpec::new(0.0, 1.0, dirs.clone(), f).unwrap();
        let s = spec.support((g[0], g[1]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..500 {
            let w: Vec<f64> = dirs.iter().map(|_| rng.gen::<f64>().powi(4)).collect();
            let total: f64 = w.iter().sum();
            let z = dirs.iter().zip(&w).fold([0.0, 0.0], |acc, (d, c)| [acc[0] + c * d[0] / total, acc[1] + c * d[1] / total]);
            best = best.max(z[0] * g[0] + z[1] * g[1]);
        }
        prop_assert!(best <= s + 1e-12);
        let attained = dirs.iter().map(|d| d[0] * g[0] + d[1] * g[1]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(attained, s);
    }
}
