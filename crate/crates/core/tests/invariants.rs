//! Property tests of the structural invariants.

use proptest::prelude::*;

use shocklab::calculus::{fd_gradient, relative_entropy, relative_flux, ConservationLaw, Matrix, State};
use shocklab::hugoniot::{check_hypotheses, shock_curve, uniform_grid, Family, FullEulerCurve, ShockCurve, Tolerances};
use shocklab::lab::{
    load_experiment_config, mirror_config, output, parse_experiment_config, run_experiment, split_integrals,
};
use shocklab::calculus::Reference;
use shocklab::shift::{Velocity, VelocityParams};
use shocklab::solver::{initial_field, numerical_flux, run, InitSpec, SimConfig, Solver};
use shocklab::systems::{
    build_system, make_full_euler, parse_system_config, preset, DomainBox, FullEuler, IsentropicEuler, PressureLaw,
    SystemSpec,
};
use shocklab::{state, Result};

fn system(name: &str) -> SystemSpec {
    build_system(&parse_system_config(preset(name).unwrap()).unwrap()).unwrap()
}

fn fe() -> FullEuler {
    make_full_euler(1.4, DomainBox::default()).unwrap()
}

fn iso_state() -> impl Strategy<Value = State> {
    (0.2f64..3.0, -2.0f64..2.0).prop_map(|(r, u)| IsentropicEuler::conserved(r, u))
}

fn fe_state() -> impl Strategy<Value = State> {
    (0.2f64..3.0, -2.0f64..2.0, 0.2f64..3.0).prop_map(|(r, u, e)| fe().conserved(r, u, e))
}

fn gamma() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("isentropic_g14"), Just("isentropic_g2"), Just("isentropic_g3")]
}

/// `η + c·U + d` with `G + c·A`.
struct Gauged {
    inner: SystemSpec,
    c: State,
    d: f64,
}

impl ConservationLaw for Gauged {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn flux(&self, u: &State) -> State {
        self.inner.flux(u)
    }
    fn entropy(&self, u: &State) -> Result<f64> {
        Ok(self.inner.entropy(u)? + self.c.dot(u) + self.d)
    }
    fn entropy_flux(&self, u: &State) -> Result<f64> {
        Ok(self.inner.entropy_flux(u)? + self.c.dot(&self.inner.flux(u)))
    }
    fn entropy_grad(&self, u: &State) -> Result<State> {
        Ok(self.inner.entropy_grad(u)? + &self.c)
    }
    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        self.inner.entropy_hessian(u)
    }
    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        self.inner.eigenvalues(u)
    }
    fn in_interior(&self, u: &State) -> bool {
        self.inner.in_interior(u)
    }
    fn in_closure(&self, u: &State) -> bool {
        self.inner.in_closure(u)
    }
    fn is_singular(&self, u: &State) -> bool {
        self.inner.is_singular(u)
    }
}

fn min_eigenvalue(h: &Matrix) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_entropy_nonnegative(name in gamma(), u in iso_state(), v in iso_state(), fu in fe_state(), fv in fe_state()) {
        let sys = system(name);
        let full = system("full_euler_g14");
        for (s, a, b) in [(&sys, &u, &v), (&full, &fu, &fv)] {
            let r = relative_entropy(s, a, b).unwrap();
            prop_assert!(r >= 0.0);
            if r < 1e-14 {
                prop_assert!((a - b).norm() < 1e-12);
            }
            prop_assert!(relative_entropy(s, a, a).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn affine_gauge_leaves_relative_quantities(u in fe_state(), v in fe_state(), c in prop::array::uniform3(-2.0f64..2.0), d in -5.0f64..5.0) {
        let sys = system("full_euler_g14");
        let g = Gauged { inner: sys.clone(), c: state(&c), d };
        let (r0, r1) = (relative_entropy(&sys, &u, &v).unwrap(), relative_entropy(&g, &u, &v).unwrap());
        let (f0, f1) = (relative_flux(&sys, &u, &v).unwrap(), relative_flux(&g, &u, &v).unwrap());
        prop_assert!((r0 - r1).abs() <= 1e-12 * (1.0 + r0.abs() + c.iter().map(|x| x.abs()).sum::<f64>() * u.amax()));
        prop_assert!((f0 - f1).abs() <= 1e-11 * (1.0 + f0.abs() + sys.flux(&u).amax() + sys.flux(&v).amax()));
    }

    #[test]
    fn entropy_gradient_matches_differences(name in gamma(), u in iso_state(), fu in fe_state()) {
        let sys = system(name);
        let full = system("full_euler_g14");
        for (s, a) in [(&sys, &u), (&full, &fu)] {
            let fd = fd_gradient(|w| s.entropy(w), a, 1e-6).unwrap();
            let exact = s.entropy_grad(a).unwrap();
            prop_assert!((&fd - &exact).amax() <= 1e-6 * (1.0 + exact.amax()));
            prop_assert!(min_eigenvalue(&s.entropy_hessian(a).unwrap()) > 0.0);
        }
    }

    #[test]
    fn rayleigh_bound_near_diagonal(name in gamma(), v in iso_state(), dir in prop::array::uniform2(-1.0f64..1.0), r in 1e-6f64..1e-3) {
        let sys = system(name);
        let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        prop_assume!(n > 0.1);
        let u = state(&[v[0] + r * dir[0] / n, v[1] + r * dir[1] / n]);
        let q = relative_flux(&sys, &u, &v).unwrap() / relative_entropy(&sys, &u, &v).unwrap();
        prop_assert!(q >= sys.lambda_minus(&v).unwrap() - 0.1);
        prop_assert!(q <= sys.lambda_plus(&v).unwrap() + 0.1);
    }

    #[test]
    fn flux_is_consistent(name in gamma(), u in iso_state(), fu in fe_state()) {
        let sys = system(name);
        let full = system("full_euler_g14");
        for (s, a) in [(&sys, &u), (&full, &fu)] {
            let f = numerical_flux(s, a, a, 0.01).unwrap();
            prop_assert!((&f - s.flux(a)).amax() <= 1e-14 * (1.0 + s.flux(a).amax()));
        }
    }

    #[test]
    fn reversed_flux_negates_under_swap(u in iso_state(), v in iso_state()) {
        let sys = system("isentropic_g2");
        let rev = sys.clone().reversed();
        let f = numerical_flux(&sys, &u, &v, 0.01).unwrap();
        let g = numerical_flux(&rev, &v, &u, 0.01).unwrap();
        prop_assert!((&f + &g).amax() <= 1e-14 * (1.0 + f.amax()));
    }

    #[test]
    fn curve_samples_match_family(name in gamma(), b in iso_state(), one in any::<bool>()) {
        let sys = system(name);
        let fam = if one { Family::One } else { Family::N };
        let curve = shock_curve(&sys, &b, fam).unwrap();
        let grid = uniform_grid((0.95 * curve.s_max()).min(2.0), 10);
        let rep = check_hypotheses(&sys, curve.as_ref(), &grid, &Tolerances::default()).unwrap();
        prop_assert!(rep.misclassified.is_empty(), "{:?}", rep.misclassified);
        prop_assert!(rep.all_ok);
    }

    #[test]
    fn speed_strictly_monotone_where_convex(name in gamma(), rho in 0.2f64..3.0) {
        let sys = system(name);
        let curve = shock_curve(&sys, &IsentropicEuler::conserved(rho, 0.0), Family::One).unwrap();
        for s in uniform_grid((0.95 * curve.s_max()).min(2.0), 10) {
            prop_assert!(curve.speed_derivative(s).unwrap() < 0.0);
        }
    }

    #[test]
    fn full_euler_one_curve_brackets_increase(u in fe_state()) {
        let fe = fe();
        let curve = FullEulerCurve::new(&fe, &u, Family::One).unwrap();
        let mut prev = fe.primitive(&u);
        let mut prev_p = fe.pressure(&u);
        for s in uniform_grid((0.9 * curve.s_max()).min(3.0), 12).into_iter().skip(1) {
            let st = curve.state(s).unwrap();
            let (r, _, e) = fe.primitive(&st);
            let p = fe.pressure(&st);
            prop_assert!(r > prev.0 && e > prev.2 && p > prev_p);
            prev = (r, 0.0, e);
            prev_p = p;
        }
    }

    #[test]
    fn power_law_rho_p_convex(g in 1.01f64..3.0, rho in 1e-3f64..10.0) {
        let law = PressureLaw::power(g).unwrap();
        prop_assert!(law.rho_p_dd(rho).unwrap() > 0.0);
        prop_assert!(law.dp(rho).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn riemann_runs_conserve_and_respect_cfl(name in gamma(), l in iso_state(), r in iso_state()) {
        let sys = system(name);
        let mut cfg = SimConfig::new(200, -10.0, 10.0, 0.3, InitSpec::riemann(l, r, 0.0));
        cfg.cfl = 0.45;
        let traj = run(&sys, &cfg).unwrap();
        prop_assert!(traj.max_conservation_drift <= 1e-12);
        prop_assert!(traj.max_cfl <= cfg.cfl + 1e-12);
        prop_assert!(traj.final_field.cells.iter().all(|u| sys.in_closure(u)));
    }

    #[test]
    fn exact_shock_stays_close_after_one_step(name in gamma(), rho in 0.3f64..2.0, s in 0.05f64..1.0) {
        let sys = system(name);
        let base = IsentropicEuler::conserved(rho, 0.0);
        let curve = shock_curve(&sys, &base, Family::One).unwrap();
        let ur = curve.state(s.min(0.9 * curve.s_max())).unwrap();
        let cfg = SimConfig::new(400, -2.0, 2.0, 1.0, InitSpec::riemann(base.clone(), ur.clone(), 0.0));
        let (field, _) = initial_field(&sys, &cfg).unwrap();
        let mut solver = Solver::new(&sys, cfg, field);
        let info = solver.step(f64::INFINITY).unwrap();
        let sigma = curve.speed(s.min(0.9 * curve.s_max())).unwrap();
        let dev = shocklab::solver::l1_distance_to_jump(&solver.field, &base, &ur, sigma * info.time);
        prop_assert!(dev <= 10.0 * solver.field.dx * (&ur - &base).norm());
    }

    #[test]
    fn velocity_upper_semicontinuity_proxy(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let sys = system("isentropic_g2");
        let ul = IsentropicEuler::conserved(1.0, 0.0);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let states = sys.sample_states(40, seed);
        let mut lip = 0.0f64;
        let mut pairs = Vec::new();
        for u in &states {
            let d = state(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let w = u + &d * (1e-4 / d.norm().max(1e-300));
            let (a, b) = (vel.eval(u).unwrap(), vel.eval(&w).unwrap());
            pairs.push((a, b));
            lip = lip.max((a - b).abs() / 1e-4);
        }
        // the Lipschitz estimate comes from a disjoint sample
        let mut est = 0.0f64;
        for u in sys.sample_states(40, seed ^ 1) {
            let w = &u + state(&[1e-4, 0.0]);
            est = est.max((vel.eval(&u).unwrap() - vel.eval(&w).unwrap()).abs() / 1e-4);
        }
        for (a, b) in pairs {
            prop_assert!(b <= a + est.max(lip) * 1e-4 + 1e-9);
        }
    }
}

#[test]
fn velocity_branch_continuous_at_reference() {
    for (name, ul) in [
        ("isentropic_g2", IsentropicEuler::conserved(1.0, 0.0)),
        ("isentropic_g14", IsentropicEuler::conserved(0.7, 0.3)),
    ] {
        let sys = system(name);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let target = sys.lambda_minus(&ul).unwrap() - 0.05;
        assert_eq!(vel.eval(&ul).unwrap(), target);
        for d in [[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]] {
            let gaps: Vec<f64> = (0..=20)
                .map(|k| {
                    let h = 0.5f64.powi(k);
                    (vel.eval(&state(&[ul[0] + h * d[0], ul[1] + h * d[1]])).unwrap() - target).abs()
                })
                .collect();
            assert!(gaps[20] <= 1e-5 && gaps[20] <= gaps[10], "{gaps:?}");
        }
    }
}

fn small(name: &str) -> shocklab::lab::ExperimentConfig {
    let mut cfg = parse_experiment_config(preset(name).unwrap()).unwrap();
    cfg.sim.n = 300;
    cfg.sim.t_end = 0.2;
    cfg.sim.snapshot_times = vec![0.1, 0.2];
    cfg.experiment.ledger_samples = 50;
    cfg
}

#[test]
fn mirror_config_is_an_involution() {
    for name in ["perturbed_shock_g2", "two_shock_g2", "full_euler_3shock", "exact_shock_g2"] {
        let cfg = load_experiment_config(name).unwrap();
        let m = mirror_config(&cfg);
        assert_ne!(m, cfg);
        assert_eq!(mirror_config(&m), cfg);
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = small("perturbed_shock_g2");
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let sys = cfg.build_system().unwrap();
    assert_eq!(output::ledger_csv(&a), output::ledger_csv(&b));
    assert_eq!(output::path_csv(&a, &sys), output::path_csv(&b, &sys));
    assert_eq!(output::report_json(&a), output::report_json(&b));
}

#[test]
fn ledger_invariants_hold() {
    for name in ["perturbed_shock_g2", "two_shock_g2", "full_euler_3shock"] {
        let cfg = small(name);
        let res = run_experiment(&cfg).unwrap();
        let l = &res.ledger;
        assert!(l.rows.iter().all(|r| r.e_left >= 0.0 && r.e_right >= 0.0), "{name}");
        assert!(l.bad_set_measure <= cfg.sim.t_end + 1e-12);
        for r in &l.rows {
            assert!((r.drift - (r.x - res.shock.sigma * r.t)).abs() <= 1e-12);
        }
        // the split integrals add up to the whole-line integrals
        let sys = cfg.build_system().unwrap();
        let f = &res.trajectory.final_field;
        let rl = Reference::new(&sys, &res.shock.u_left).unwrap();
        let rr = Reference::new(&sys, &res.shock.u_right).unwrap();
        let x = res.path.position();
        let (el, er) = split_integrals(&sys, f, x, &rl, &rr).unwrap();
        let (al, _) = split_integrals(&sys, f, f.x_hi, &rl, &rr).unwrap();
        let (_, br) = split_integrals(&sys, f, f.x_lo, &rl, &rr).unwrap();
        assert!(el <= al + 1e-15 && er <= br + 1e-15);
        let last = l.rows.last().unwrap();
        assert_eq!(last.t, f.time);
        assert!((last.e_left - el).abs() <= 1e-12 * (1.0 + el));
        assert!((last.e_right - er).abs() <= 1e-12 * (1.0 + er));
        // path speed bounded by the largest sampled shift velocity
        let vmax = res.path.velocities.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(res.path.lipschitz_estimate() <= vmax + 1e-12);
    }
}

#[test]
fn perturbation_hits_targets() {
    let cfg = small("perturbed_shock_g2");
    let res = run_experiment(&cfg).unwrap();
    let r = &res.trajectory.init_report;
    assert!((r.left_integral / r.left_target - 1.0).abs() <= 0.05);
    assert!((r.right_integral / r.right_target - 1.0).abs() <= 0.05);
}
