use proptest::prelude::*;
use tscale::dynamics::{step_with_diagnostics, SchemeKind, VectorField};
use tscale::expfun::{beta_coefficient, cylinder_exp, eval_exp, exact_psi, Coefficient, ExpScheme};
use tscale::liegroup::{
    cayley_matrix, expm, flow, membership_defect, CMatrix, LieFlowProblem, QuadraticGroupSpec,
};
use tscale::qcalc::{jackson_exponentials, q_exp_product, q_exp_series, QParams};
use tscale::timescale::{GridFunction, TimeScale};
use tscale::trigfun::{bp_hyperbolic, bp_trig, cayley_hyperbolic, cayley_trig};
use tscale::verify::log_log_slope;
use tscale::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn grid() -> impl Strategy<Value = TimeScale> {
    (-3.0..3.0f64, prop::collection::vec(0.05..0.8f64, 3..12)).prop_map(|(start, gaps)| {
        let mut points = vec![start];
        for g in gaps {
            points.push(points.last().unwrap() + g);
        }
        TimeScale::points(&points).unwrap()
    })
}

/// Grid, dense interval, grid.
fn mixed() -> impl Strategy<Value = TimeScale> {
    (grid(), 0.05..1.0f64, 0.3..1.5f64, grid()).prop_map(|(left, gap, len, right)| {
        let lo = left.max() + gap;
        let hi = lo + len;
        let shift = hi + gap - right.min();
        let right: Vec<f64> = right.nodes().iter().map(|t| t + shift).collect();
        left.union(&TimeScale::interval(lo, hi).unwrap())
            .unwrap()
            .union(&TimeScale::points(&right).unwrap())
            .unwrap()
    })
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jumps_invert_each_other(ts in mixed()) {
        for t in ts.nodes() {
            let s = ts.sigma(t).unwrap();
            if s > t && t != ts.max() {
                prop_assert_eq!(ts.rho(s).unwrap(), t);
            }
            let r = ts.rho(t).unwrap();
            if r < t && t != ts.min() {
                prop_assert_eq!(ts.sigma(r).unwrap(), t);
            }
            prop_assert!(ts.graininess(t).unwrap() >= 0.0);
        }
    }

    #[test]
    fn normalize_is_a_fixed_point(ts in mixed()) {
        let again = TimeScale::normalize(ts.pieces(), ts.window()).unwrap();
        prop_assert_eq!(&again, &ts);
        for t in ts.sample(3) {
            prop_assert_eq!(again.sigma(t).unwrap(), ts.sigma(t).unwrap());
            prop_assert_eq!(again.rho(t).unwrap(), ts.rho(t).unwrap());
        }
    }

    #[test]
    fn integral_is_additive(ts in mixed(), w in 0.1..3.0f64, u in 0.0..1.0f64) {
        let f = GridFunction::new(&ts, |t: f64| Complex64::new((w * t).cos(), t * t));
        let nodes = ts.sample(2);
        let b = nodes[(u * (nodes.len() - 1) as f64) as usize];
        let (a, cc) = (ts.min(), ts.max());
        let whole = f.delta_integral(a, cc).unwrap();
        let parts = f.delta_integral(a, b).unwrap() + f.delta_integral(b, cc).unwrap();
        prop_assert!((whole - parts).norm() <= 2e-12 * (1.0 + whole.norm()));
    }

    #[test]
    fn derivative_of_identity_is_one(ts in mixed()) {
        let f = GridFunction::new(&ts, c);
        for t in ts.sample(3) {
            if t == ts.max() {
                continue;
            }
            let d = f.delta_derivative(t).unwrap();
            let tol = if ts.graininess(t).unwrap() > 0.0 { 1e-12 } else { 1e-8 };
            prop_assert!((d - c(1.0)).norm() <= tol, "t = {}, d = {}", t, d);
        }
    }

    #[test]
    fn every_scheme_is_a_semigroup(ts in grid(), a in -0.4..0.4f64, w in -0.4..0.4f64, k in (0usize..12, 0usize..12, 0usize..12)) {
        let alpha = Coefficient::constant(Complex64::new(a, w));
        let nodes = ts.nodes();
        let pick = |i: usize| nodes[i % nodes.len()];
        let (t, t0, t1) = (pick(k.0), pick(k.1), pick(k.2));
        for scheme in [ExpScheme::Delta, ExpScheme::Nabla, ExpScheme::Cayley, ExpScheme::Pade { j: 2, k: 1 }, ExpScheme::Pade { j: 3, k: 3 }, ExpScheme::Exact] {
            let e = |x, y| eval_exp(scheme, &alpha, &ts, x, y).unwrap();
            prop_assert!(rel(e(t, t0) * e(t0, t1), e(t, t1)) <= 1e-12, "{}", scheme);
        }
    }

    #[test]
    fn conjugate_coefficient_conjugates(ts in mixed(), a in -0.5..0.5f64, w in -2.0..2.0f64) {
        let alpha = Coefficient::constant(Complex64::new(a, w));
        for scheme in [ExpScheme::Delta, ExpScheme::Nabla, ExpScheme::Cayley, ExpScheme::Pade { j: 2, k: 2 }] {
            let e = eval_exp(scheme, &alpha, &ts, ts.max(), ts.min()).unwrap();
            let ec = eval_exp(scheme, &alpha.conj(), &ts, ts.max(), ts.min()).unwrap();
            prop_assert!(rel(ec, e.conj()) <= 1e-14);
        }
    }

    #[test]
    fn symmetric_schemes_keep_unit_modulus(ts in mixed(), w in -5.0..5.0f64, m in 1u32..5) {
        let alpha = Coefficient::constant(Complex64::new(0.0, w));
        for t in ts.sample(3) {
            let e = eval_exp(ExpScheme::Pade { j: m, k: m }, &alpha, &ts, t, ts.min()).unwrap();
            prop_assert!((e.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cayley_equals_delta_of_beta(ts in grid(), a in -0.6..0.6f64, w in -2.0..2.0f64) {
        let alpha = Coefficient::constant(Complex64::new(a, w));
        let beta = beta_coefficient(&alpha, &ts);
        for t in ts.nodes() {
            let cay = eval_exp(ExpScheme::Cayley, &alpha, &ts, t, ts.min()).unwrap();
            let del = eval_exp(ExpScheme::Delta, &beta, &ts, t, ts.min()).unwrap();
            prop_assert!(rel(del, cay) <= 1e-12);
        }
    }

    #[test]
    fn cylinder_form_matches_product(ts in mixed(), a in -0.5..0.5f64, w in -2.0..2.0f64, b in 0.0..0.5f64) {
        let alpha = Coefficient::from_fn(move |t| Complex64::new(a + b * t.sin(), w));
        for t in ts.sample(2) {
            let product = eval_exp(ExpScheme::Cayley, &alpha, &ts, t, ts.min()).unwrap();
            let cylinder = cylinder_exp(&alpha, &ts, t, ts.min()).unwrap();
            prop_assert!(rel(cylinder, product) <= 1e-10);
        }
    }

    #[test]
    fn exact_exponential_psi_identity(ts in grid(), a in -1.0..1.0f64, w in -2.0..2.0f64) {
        let alpha = Complex64::new(a, w);
        let coefficient = Coefficient::constant(alpha);
        for t in ts.nodes().into_iter().filter(|&t| t < ts.max()) {
            let mu = ts.graininess(t).unwrap();
            let x = eval_exp(ExpScheme::Exact, &coefficient, &ts, t, ts.min()).unwrap();
            let xs = eval_exp(ExpScheme::Exact, &coefficient, &ts, t + mu, ts.min()).unwrap();
            let lhs = (xs - x) / mu;
            let rhs = alpha * exact_psi(alpha, mu) * (x + xs) * 0.5;
            prop_assert!(rel(lhs, rhs) <= 1e-12);
        }
    }

    #[test]
    fn cayley_trig_derivatives_and_bounds(ts in grid(), w in 0.1..3.0f64, a in -0.4..0.4f64) {
        let (omega, alpha) = (Coefficient::constant(w), Coefficient::constant(a));
        let t0 = ts.min();
        for t in ts.nodes().into_iter().filter(|&t| t < ts.max()) {
            let mu = ts.graininess(t).unwrap();
            let p = cayley_trig(&ts, &omega, t, t0).unwrap();
            let ps = cayley_trig(&ts, &omega, t + mu, t0).unwrap();
            prop_assert!(((ps.sin - p.sin) / mu - (p.cos + ps.cos) * (0.5 * w)).norm() <= 1e-12 * (1.0 + w));
            prop_assert!(((ps.cos - p.cos) / mu + (p.sin + ps.sin) * (0.5 * w)).norm() <= 1e-12 * (1.0 + w));
            prop_assert!(p.cos.norm() <= 1.0 + 1e-14 && p.sin.norm() <= 1.0 + 1e-14);
            let h = cayley_hyperbolic(&ts, &alpha, t, t0).unwrap();
            let hs = cayley_hyperbolic(&ts, &alpha, t + mu, t0).unwrap();
            prop_assert!(((hs.sin - h.sin) / mu - (h.cos + hs.cos) * (0.5 * a)).norm() <= 1e-12 * (1.0 + h.cos.norm()));
            prop_assert!(((hs.cos - h.cos) / mu - (h.sin + hs.sin) * (0.5 * a)).norm() <= 1e-12 * (1.0 + h.cos.norm()));
        }
    }

    #[test]
    fn bohner_peterson_relations(ts in grid(), w in 0.1..1.5f64, a in -0.5..0.5f64) {
        let (omega, alpha) = (Coefficient::constant(w), Coefficient::constant(a));
        let t0 = ts.min();
        for t in ts.nodes().into_iter().filter(|&t| t < ts.max()) {
            let mu = ts.graininess(t).unwrap();
            let p = bp_trig(&ts, &omega, t, t0).unwrap();
            let ps = bp_trig(&ts, &omega, t + mu, t0).unwrap();
            let scale = 1.0 + p.cos.norm() + p.sin.norm();
            prop_assert!(((ps.sin - p.sin) / mu - p.cos * w).norm() <= 1e-12 * scale);
            prop_assert!(((ps.cos - p.cos) / mu + p.sin * w).norm() <= 1e-12 * scale);
            let e = eval_exp(ExpScheme::Delta, &Coefficient::from_fn({
                let ts = ts.clone();
                move |s| c(ts.graininess(s).unwrap() * w * w)
            }), &ts, t, t0).unwrap();
            prop_assert!(rel(p.cos * p.cos + p.sin * p.sin, e) <= 1e-11);
            let h = bp_hyperbolic(&ts, &alpha, t, t0).unwrap();
            let hs = bp_hyperbolic(&ts, &alpha, t + mu, t0).unwrap();
            let scale = 1.0 + h.cos.norm();
            prop_assert!(((hs.sin - h.sin) / mu - h.cos * a).norm() <= 1e-12 * scale);
            prop_assert!(((hs.cos - h.cos) / mu - h.sin * a).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn linear_steps_reproduce_exponentials(a in -1.0..1.0f64, w in -3.0..3.0f64, mu in 0.01..0.9f64) {
        let alpha = Complex64::new(a, w);
        let field = VectorField::scalar_linear(Coefficient::constant(alpha));
        let x = [Complex64::new(0.7, -0.2)];
        let expect = |scheme| tscale::expfun::step_factor(scheme, alpha, alpha, mu).unwrap() * x[0];
        let pairs = [
            (SchemeKind::ForwardEuler, ExpScheme::Delta),
            (SchemeKind::BackwardEuler, ExpScheme::Nabla),
            (SchemeKind::Trapezoidal1, ExpScheme::Cayley),
            (SchemeKind::Trapezoidal2, ExpScheme::Cayley),
            (SchemeKind::ImplicitMidpoint, ExpScheme::Cayley),
        ];
        for (kind, scheme) in pairs {
            let report = step_with_diagnostics(kind, &field, &x, 0.3, mu).unwrap();
            prop_assert!(rel(report.state[0], expect(scheme)) <= 1e-13, "{}", kind);
            prop_assert!(report.diagnostics.residual <= 1e-12 * (1.0 + report.state[0].norm()));
        }
    }

    #[test]
    fn trapezoidal_factors_for_varying_coefficient(b in -1.0..1.0f64, k in 0.2..3.0f64, t in -2.0..2.0f64, mu in 0.01..0.5f64) {
        let alpha = move |s: f64| Complex64::new(b * (k * s).sin(), (k * s).cos());
        let field = VectorField::scalar_linear(Coefficient::from_fn(alpha));
        let x = [c(1.0)];
        let (a0, a1) = (alpha(t), alpha(t + mu));
        let trap1 = (c(1.0) + a0 * (0.5 * mu)) / (c(1.0) - a1 * (0.5 * mu));
        let avg = (a0 + a1) * 0.5;
        let trap2 = (c(1.0) + avg * (0.5 * mu)) / (c(1.0) - avg * (0.5 * mu));
        let s1 = step_with_diagnostics(SchemeKind::Trapezoidal1, &field, &x, t, mu).unwrap();
        let s2 = step_with_diagnostics(SchemeKind::Trapezoidal2, &field, &x, t, mu).unwrap();
        prop_assert!(rel(s1.state[0], trap1) <= 1e-13);
        prop_assert!(rel(s2.state[0], trap2) <= 1e-13);
    }

    #[test]
    fn nonlinear_solves_meet_the_residual_contract(x0 in -2.0..2.0f64, y0 in -2.0..2.0f64, mu in 0.01..0.4f64) {
        let field = VectorField::new(2, true, |x, _| vec![x[1], -x[0].sin() - 0.1 * x[1] * x[1]]);
        let x = [c(x0), c(y0)];
        for kind in [SchemeKind::BackwardEuler, SchemeKind::Trapezoidal1, SchemeKind::Trapezoidal2, SchemeKind::ImplicitMidpoint] {
            let report = step_with_diagnostics(kind, &field, &x, 0.0, mu).unwrap();
            let size = report.state.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(report.diagnostics.residual <= 1e-12 * (1.0 + size));
        }
    }

    #[test]
    fn q_product_series_and_factorization(q in 0.2..0.9f64, s in -0.8..0.8f64, imaginary in any::<bool>()) {
        let params = QParams::new(q).unwrap();
        let r = s * params.radius();
        let x = if imaginary { Complex64::new(0.0, r) } else { c(r) };
        let product = q_exp_product(x, &params).unwrap();
        prop_assert!(rel(q_exp_series(x, &params).unwrap(), product) <= 1e-12);
        let (small, big) = jackson_exponentials(x * 0.5, &params).unwrap();
        prop_assert!(rel(small * big, product) <= 1e-12);
    }
}

fn random_matrix(entries: &[f64], n: usize, complex: bool) -> CMatrix {
    CMatrix::from_fn(n, n, |r, col| {
        let k = 2 * (r * n + col);
        Complex64::new(entries[k], if complex { entries[k + 1] } else { 0.0 })
    })
}

/// Element of the algebra built from `x`. Symplectic elements are `J S` with
/// `S` positive definite, so the flow stays bounded and the absolute defect
/// is meaningful.
fn algebra_element(group: &QuadraticGroupSpec, x: &CMatrix) -> CMatrix {
    let j = group.j();
    let n = group.dim();
    if *j == CMatrix::identity(n, n) {
        return (x - group.star(x)) * c(0.5);
    }
    let s = x.transpose() * x + CMatrix::identity(n, n);
    j * s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flows_stay_in_the_group(n in 1usize..=4, kind in 0usize..3, entries in prop::collection::vec(-1.0..1.0f64, 256), gaps in prop::collection::vec(0.01..0.2f64, 1000)) {
        let (group, size) = match kind {
            0 => (QuadraticGroupSpec::orthogonal(2 * n), 2 * n),
            1 => (QuadraticGroupSpec::unitary(2 * n), 2 * n),
            _ => (QuadraticGroupSpec::symplectic(2 * n).unwrap(), 2 * n),
        };
        let complex = kind == 1;
        let base = algebra_element(&group, &random_matrix(&entries[..128], size, complex));
        let drift = algebra_element(&group, &random_matrix(&entries[128..], size, complex));
        let a = move |t: f64| &base + &drift * c(0.5 + 0.5 * t.sin());
        let mut points = vec![0.0];
        for g in gaps {
            points.push(points.last().unwrap() + g);
        }
        let ts = TimeScale::points(&points).unwrap();
        let problem = LieFlowProblem::new(group.clone(), a, CMatrix::identity(size, size), ts.clone()).unwrap();
        let path = flow(&problem, ts.min(), ts.max()).unwrap();
        prop_assert_eq!(path.len(), 1001);
        let worst = path.iter().map(|p| membership_defect(&group, &p.phi).unwrap()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "defect {}", worst);
    }
}

#[test]
fn cayley_step_is_third_order() {
    let a = CMatrix::from_fn(4, 4, |r, col| c(((r * 4 + col) as f64 * 0.37).sin()));
    let a = &a - a.transpose();
    let mus = [0.1, 0.05, 0.025];
    let errors: Vec<f64> = mus
        .iter()
        .map(|&mu| (cayley_matrix(&a, mu).unwrap() - expm(&(&a * c(mu)))).norm())
        .collect();
    let slope = log_log_slope(&mus, &errors);
    assert!((slope - 3.0).abs() <= 0.1, "slope {slope}");
}
