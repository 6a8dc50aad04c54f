//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (visible under `--nocapture`) with the measured margin.
//! Tolerances are pinned here on purpose; loosening them is a release
//! decision, not a test fix.

use nalgebra::Vector3;
use planewave::envelope::{Envelope, GaussianEnvelope, PolynomialEnvelope, WindowEnvelope};
use planewave::kinematics::Species;
use planewave::oracle::{
    convergence_order, integrate, Composite, DirectionalWave, HarmonicEz, OracleConfig,
    PulseAlongZ,
};
use planewave::phase::PhaseFunctions;
use planewave::plasma::{
    self, PancakeGeometry, PlasmaSetup,
};
use planewave::ponderomotive::{cycle_average, magnetic_force, ponderomotive_force};
use planewave::pulse::{Polarization, Pulse, WavePotential};
use planewave::test_particle::{solve_arbitrary_ic, LabWave};
use planewave::zero_density::{position_forward, position_inverse};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

const LAMBDA: f64 = 1e-4;

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {number:02}: {name} ({detail})");
    assert!(pass, "criterion {number:02} {name}: {detail}");
}

/// Peak field (statvolt/cm) for dimensionless amplitude `w` at LAMBDA.
fn peak_for(w: f64) -> f64 {
    w * (2.0 * std::f64::consts::PI / LAMBDA) * planewave::constants::ME_C2
        / planewave::constants::E_CHARGE
}

fn gaussian(w: f64, sigma_lam: f64) -> Arc<dyn Envelope> {
    let sigma = sigma_lam * LAMBDA;
    Arc::new(GaussianEnvelope::new(peak_for(w), 6.0 * sigma, sigma).unwrap())
}

fn pulse_of(env: Arc<dyn Envelope>, pol: Polarization) -> Arc<Pulse> {
    Arc::new(Pulse::new(env, LAMBDA, pol).unwrap())
}

fn electron_table(pulse: &Arc<Pulse>, margin: f64) -> PhaseFunctions {
    let pot: Arc<dyn WavePotential> = Arc::clone(pulse) as _;
    let (_, s1) = pot.support();
    PhaseFunctions::build(Species::electron(), pot, s1 + margin, 1e-11).unwrap()
}

fn flame_fixture() -> (Arc<Pulse>, PhaseFunctions, PlasmaSetup) {
    let env: Arc<dyn Envelope> =
        Arc::new(GaussianEnvelope::new(peak_for(4.5), 1.0e-3, 1.5e-4).unwrap());
    let pulse = pulse_of(env, Polarization::Circular);
    let pf = electron_table(&pulse, 5.0 * LAMBDA);
    let setup = PlasmaSetup::new(1.0e18).unwrap();
    (pulse, pf, setup)
}

#[test]
fn criterion_01_zero_density_matches_oracle() {
    let w_window = 0.8;
    let cases: Vec<(&str, Polarization, Arc<dyn Envelope>, bool)> = vec![
        ("gaussian/linear", Polarization::Linear, gaussian(1.8, 2.0), false),
        ("gaussian/circular", Polarization::Circular, gaussian(2.2, 1.5), false),
        (
            "polynomial/linear",
            Polarization::Linear,
            Arc::new(PolynomialEnvelope::new(peak_for(1.5), 16.0 * LAMBDA).unwrap()),
            false,
        ),
        (
            "polynomial/circular",
            Polarization::Circular,
            Arc::new(PolynomialEnvelope::new(peak_for(2.0), 12.0 * LAMBDA).unwrap()),
            false,
        ),
        (
            "window/linear",
            Polarization::Linear,
            Arc::new(WindowEnvelope::new(peak_for(w_window), 10.0 * LAMBDA).unwrap()),
            true,
        ),
    ];
    let cfg = OracleConfig::new(LAMBDA / 200.0, LAMBDA).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut slowest = 0.0f64;
    for (name, pol, env, window) in cases {
        let (s0, s1) = env.support();
        let pulse = pulse_of(env, pol);
        let pf = electron_table(&pulse, 4.0 * LAMBDA);
        // A one-step method loses its order when a grid point touches a field
        // jump, so the window case cannot start on the front. Instead it is
        // seeded at the re-rest phase two carrier cycles inside the window,
        // where the exact state of the label-0 particle has an elementary
        // closed form (u_x = +-w sin(k xi) makes it return to rest at integer
        // cycles having advanced by w^2 xi / 4), and the run stops before the
        // trailing edge. The smooth envelopes run the full passage from rest.
        let (t_start, x_start, t_end) = if window {
            let xi_seed = 2.0 * LAMBDA;
            let z_seed = 0.25 * w_window * w_window * xi_seed;
            (
                xi_seed + z_seed,
                Vector3::new(0.0, 0.0, z_seed),
                xi_seed + z_seed + 0.98 * (s1 - xi_seed),
            )
        } else {
            (0.0, Vector3::zeros(), pf.xi_fn(s1) + 2.0 * LAMBDA)
        };
        let start = Instant::now();
        let run = integrate(
            Species::electron(),
            &PulseAlongZ::new(Arc::clone(&pulse)),
            x_start,
            Vector3::zeros(),
            (t_start, t_end),
            cfg,
        )
        .unwrap();
        let mut err: f64 = 0.0;
        for sample in run.iter().step_by(13) {
            let ours = position_forward(&pf, sample.x0, Vector3::zeros()).unwrap();
            let d = (Vector3::new(ours.x_perp.x, ours.x_perp.y, ours.z) - sample.position).norm();
            err = err.max(d);
        }
        let elapsed = start.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        let budget = 1e-7 * (s1 - s0);
        worst_ratio = worst_ratio.max(err / budget);
        assert!(err < budget, "{name}: position error {err:e} over budget {budget:e}");
        assert!(elapsed < 10.0, "{name}: took {elapsed:.1} s");
    }
    verdict(
        1,
        "zero-density trajectories match the brute-force oracle",
        worst_ratio < 1.0 && slowest < 10.0,
        &format!(
            "5 configurations, worst error {:.2e} of the 1e-7*support budget, slowest case {slowest:.2} s",
            worst_ratio
        ),
    );
}

#[test]
fn criterion_02_s_invariant() {
    let cases: Vec<(Polarization, Arc<dyn Envelope>)> = vec![
        (Polarization::Linear, gaussian(1.8, 2.0)),
        (Polarization::Circular, gaussian(2.2, 1.5)),
        (Polarization::Linear, Arc::new(PolynomialEnvelope::new(peak_for(1.5), 16.0 * LAMBDA).unwrap())),
        (Polarization::Circular, Arc::new(WindowEnvelope::new(peak_for(1.2), 10.0 * LAMBDA).unwrap())),
    ];
    let mut worst: f64 = 0.0;
    for (pol, env) in cases {
        let (s0, s1) = env.support();
        let pulse = pulse_of(env, pol);
        let pf = electron_table(&pulse, 4.0 * LAMBDA);
        for i in 0..=800 {
            let xi = (s0 - LAMBDA) + (s1 + 2.0 * LAMBDA - s0 + LAMBDA) * (i as f64) / 800.0;
            let st = pf.state(xi);
            worst = worst.max((st.gamma - st.u_z - 1.0).abs());
        }
    }
    verdict(
        2,
        "gamma - u_z = 1 along zero-density trajectories",
        worst <= 1e-10,
        &format!("worst residual {worst:.2e} against 1e-10"),
    );
}

#[test]
fn criterion_03_derivative_identities() {
    let pulse = pulse_of(gaussian(2.0, 2.0), Polarization::Circular);
    let pf = electron_table(&pulse, 4.0 * LAMBDA);
    let (_, s1) = pulse.envelope().support();
    let h = 8.0e-4 * LAMBDA;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    // Relative error with a unit floor: the exact values are order-one
    // dimensionless derivatives that cross zero inside the window.
    let rel = |fd: f64, exact: f64| (fd - exact).abs() / (1.0 + exact.abs());
    for _ in 0..1000 {
        // Eulerian pair: Z0(x0, z) = z - Y3(x0 - z).
        let xi = rng.gen_range(-LAMBDA..s1 + LAMBDA);
        let x0 = rng.gen_range(4.0 * LAMBDA..pf.xi_fn(s1));
        let z = x0 - xi;
        let zmap = |t: f64, zz: f64| position_inverse(&pf, t, Vector3::new(0.0, 0.0, zz)).z;
        let st = pf.state(xi);
        worst = worst.max(rel((zmap(x0 + h, z) - zmap(x0 - h, z)) / (2.0 * h), -st.u_z));
        worst = worst.max(rel((zmap(x0, z + h) - zmap(x0, z - h)) / (2.0 * h), st.gamma));

        // Lagrangian pair: z0 and x_perp0 as functions of the label Z.
        let z_label = rng.gen_range(0.0..4.0 * LAMBDA);
        let t = z_label + rng.gen_range(0.0..pf.xi_fn(s1));
        let fwd = |zl: f64| position_forward(&pf, t, Vector3::new(0.0, 0.0, zl)).unwrap();
        let (plus, minus) = (fwd(z_label + h), fwd(z_label - h));
        let tilde = pf.state(pf.xi_inverse(t - z_label).unwrap());
        worst = worst.max(rel((plus.z - minus.z) / (2.0 * h), 1.0 / tilde.gamma));
        let fd_perp = (plus.x_perp - minus.x_perp) / (2.0 * h);
        let exact_perp = -tilde.u_perp / tilde.gamma;
        worst = worst.max((fd_perp - exact_perp).norm() / (1.0 + exact_perp.norm()));
    }
    verdict(
        3,
        "all four map derivative identities by central differences",
        worst < 1e-5,
        &format!("1000 random points, worst relative error {worst:.2e} against 1e-5"),
    );
}

#[test]
fn criterion_04_map_roundtrip() {
    let pulse = pulse_of(gaussian(2.0, 2.0), Polarization::Linear);
    let pf = electron_table(&pulse, 4.0 * LAMBDA);
    let (_, s1) = pulse.envelope().support();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x0 = rng.gen_range(0.0..pf.xi_fn(s1) + 4.0 * LAMBDA);
        let pos = Vector3::new(
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            x0 - rng.gen_range(-LAMBDA..s1 + LAMBDA),
        );
        let label = position_inverse(&pf, x0, pos);
        let back = position_forward(&pf, x0, label).unwrap();
        let d = (Vector3::new(back.x_perp.x, back.x_perp.y, back.z) - pos).norm();
        worst = worst.max(d);
    }
    verdict(
        4,
        "forward map undoes the inverse map",
        worst <= 1e-10,
        &format!("1000 random events, worst mismatch {worst:.2e} cm against 1e-10"),
    );
}

#[test]
fn criterion_05_ponderomotive_identities() {
    let e = Species::electron();
    // Pointwise equality for circular polarization on C1 envelopes.
    let smooth: Vec<Arc<dyn Envelope>> = vec![
        gaussian(0.5, 50.0),
        Arc::new(PolynomialEnvelope::new(peak_for(0.5), 300.0 * LAMBDA).unwrap()),
    ];
    let mut worst_point: f64 = 0.0;
    for env in smooth {
        let (s0, s1) = env.support();
        let pulse = pulse_of(env, Polarization::Circular);
        let mut scale: f64 = 0.0;
        let forces: Vec<(f64, f64)> = (0..400)
            .map(|i| {
                let xi = s0 + (s1 - s0) * (i as f64) / 399.0;
                let fp = ponderomotive_force(e, &pulse, xi);
                scale = scale.max(fp.abs());
                (magnetic_force(e, &pulse, xi), fp)
            })
            .collect();
        for (fm, fp) in forces {
            worst_point = worst_point.max((fm - fp).abs() / scale);
        }
    }
    // Cycle-averaged equality for linear polarization, within 5 delta.
    let pulse = pulse_of(gaussian(0.5, 200.0), Polarization::Linear);
    let report = pulse.slowness().unwrap();
    let delta = report.delta;
    let sigma = 200.0 * LAMBDA;
    let breaks = pulse.envelope().breakpoints();
    let mut worst_avg: f64 = 0.0;
    for off in [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5] {
        let xi = report.xi0 + off * sigma;
        let fm = |x: f64| magnetic_force(e, &pulse, x);
        let avg = cycle_average(&fm, xi, LAMBDA, &breaks).unwrap();
        let fp = ponderomotive_force(e, &pulse, xi);
        worst_avg = worst_avg.max((avg - fp).abs() / (delta * fp.abs()));
    }
    verdict(
        5,
        "magnetic force equals ponderomotive force (circular pointwise, linear cycle-averaged)",
        worst_point <= 1e-9 && worst_avg <= 5.0,
        &format!(
            "pointwise worst {worst_point:.2e} against 1e-9, cycle-average worst {worst_avg:.2} delta against 5"
        ),
    );
}

#[test]
fn criterion_06_poincare_reduction() {
    let e = Species::electron();
    let n1 = Vector3::new(0.3, -0.45, 0.84).normalize();
    let e1a = {
        let raw = Vector3::new(0.0, 1.0, 0.3);
        (raw - n1 * raw.dot(&n1)).normalize()
    };
    let waves = [
        (pulse_of(gaussian(1.3, 2.0), Polarization::Circular), n1, e1a),
        (
            pulse_of(gaussian(1.0, 1.5), Polarization::Linear),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(0.0, 1.0, 0.0),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let (pulse, n, e1) = &waves[case % 2];
        let (_, s1) = pulse.envelope().support();
        let beta_mag = if case == 0 { 0.9 } else { rng.gen_range(0.3..0.9) };
        let beta = loop {
            let v: Vector3<f64> = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm_squared() > 0.05 {
                break v.normalize() * beta_mag;
            }
        };
        // Starts both ahead of the front and inside the field region.
        let x_init = Vector3::new(
            rng.gen_range(-LAMBDA..LAMBDA),
            rng.gen_range(-LAMBDA..LAMBDA),
            rng.gen_range(-LAMBDA..LAMBDA),
        ) - n * (rng.gen_range(-0.5..0.7) * s1);
        let xi_init = -n.dot(&x_init);
        let t_end =
            1.02 * (s1 - xi_init.min(0.0) + 2.0 * LAMBDA) / (1.0 - n.dot(&beta));
        let cfg = OracleConfig::new(LAMBDA / 500.0, LAMBDA).unwrap();
        let fields = DirectionalWave::new(Arc::clone(pulse), *n, *e1).unwrap();
        let run = integrate(e, &fields, x_init, beta, (0.0, t_end), cfg).unwrap();
        let picks: Vec<usize> =
            [0.15, 0.4, 0.65, 0.85, 1.0].iter().map(|f| ((run.len() - 1) as f64 * f) as usize).collect();
        let times: Vec<f64> = picks.iter().map(|&i| run[i].x0).collect();
        let wave = LabWave::new(Arc::clone(pulse), *n, *e1).unwrap();
        let ours = solve_arbitrary_ic(e, &wave, x_init, beta, &times).unwrap();
        for (k, &i) in picks.iter().enumerate() {
            let p_o = run[i].position;
            let p_a = Vector3::new(ours[k].x_perp.x, ours[k].x_perp.y, ours[k].z);
            let scale = s1 + (p_o - x_init).norm();
            worst = worst.max((p_a - p_o).norm() / scale);
        }
    }
    verdict(
        6,
        "arbitrary initial conditions reduce to the canonical problem",
        worst <= 1e-6,
        &format!("10 random ICs up to |beta| = 0.9, worst relative position error {worst:.2e} against 1e-6"),
    );
}

#[test]
fn criterion_07_first_correction_identity() {
    let pulse = pulse_of(gaussian(2.0, 2.0), Polarization::Circular);
    let pf = electron_table(&pulse, 4.0 * LAMBDA);
    let setup = PlasmaSetup::new(2.0e17).unwrap();
    let (_, s1) = pulse.envelope().support();
    let mut worst_id: f64 = 0.0;
    let mut min_deficit = f64::INFINITY;
    for z_label in [0.0, LAMBDA, 5.0 * LAMBDA] {
        for frac in [0.3, 0.5, 0.75, 1.0] {
            let xi = frac * s1;
            let dz0 = pf.y3(xi);
            if dz0 <= 0.0 {
                continue;
            }
            let x0 = z_label + pf.xi_fn(xi);
            let dz1 = plasma::corrected_displacement(&pf, &setup, x0, z_label).unwrap();
            let t = plasma::displacement_deficit(&pf, &setup, xi).unwrap() / dz0;
            worst_id = worst_id.max(((dz0 - dz1) / dz0 - t).abs());
            min_deficit = min_deficit.min((dz0 - dz1) / dz0);
        }
    }
    verdict(
        7,
        "relative displacement deficit equals T, deficit nonnegative",
        worst_id <= 1e-6 && min_deficit >= -1e-12,
        &format!(
            "worst identity residual {worst_id:.2e} against 1e-6, smallest relative deficit {min_deficit:.2e}"
        ),
    );
}

#[test]
fn criterion_08_k_scaling_against_oracle() {
    let pulse = pulse_of(gaussian(1.0, 2.0), Polarization::Circular);
    let pf = electron_table(&pulse, 4.0 * LAMBDA);
    let (_, s1) = pulse.envelope().support();
    let z = 2.0 * LAMBDA;
    let x0_end = z + pf.xi_fn(s1);
    let cfg = OracleConfig::new(LAMBDA / 400.0, LAMBDA).unwrap();
    let mut deviations = Vec::new();
    for halvings in 0..5 {
        let n0 = 1.0e17 / f64::powi(2.0, halvings);
        let fields = Composite::new(vec![
            Box::new(PulseAlongZ::new(Arc::clone(&pulse))),
            Box::new(HarmonicEz::new(n0).unwrap()),
        ]);
        let run = integrate(
            Species::electron(),
            &fields,
            Vector3::new(0.0, 0.0, z),
            Vector3::zeros(),
            (z, x0_end),
            cfg,
        )
        .unwrap();
        let last = run.last().unwrap();
        let dz0 = pf.y3(pf.xi_inverse(last.x0 - z).unwrap());
        deviations.push((last.position.z - z - dz0).abs());
    }
    let mut worst_off: f64 = 0.0;
    for pair in deviations.windows(2) {
        worst_off = worst_off.max((pair[0] / pair[1] - 2.0).abs());
    }
    verdict(
        8,
        "oracle deviation from the zero-density displacement halves with K",
        worst_off <= 0.4,
        &format!(
            "16x density span, halving ratios within {worst_off:.3} of 2 against the 0.4 budget"
        ),
    );
}

#[test]
fn criterion_09_flame_regime() {
    let start = Instant::now();
    let (pulse, pf, setup) = flame_fixture();
    let geometry = Some(PancakeGeometry { radius: 3.0e-3, length: 1.6e-3 });
    let report = plasma::slingshot(&pf, &setup, &pulse, geometry, 0.1).unwrap();
    let kxi2 = setup.k() * report.validity.xi0 * report.validity.xi0;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (0.5..=2.0).contains(&kxi2)
        && report.validity.all_pass()
        && (0.5..=20.0).contains(&report.energy_mev)
        && elapsed < 60.0;
    verdict(
        9,
        "infrared few-joule regime reproduced",
        pass,
        &format!(
            "K xi0^2 = {kxi2:.3}, T_max = {:.4}, cond2 = {:.4}, H = {:.3} MeV, {elapsed:.1} s",
            report.validity.t_max.unwrap_or(f64::NAN),
            report.validity.cond2_ratio,
            report.energy_mev
        ),
    );
}

#[test]
fn criterion_10_corrected_potential_region() {
    let (_, pf, setup) = flame_fixture();
    let xi0 = 1.0e-3;
    let xi_minus_max = 0.1 * 2.0 * std::f64::consts::PI / (setup.k() * LAMBDA);
    let mut u_max: f64 = 0.0;
    for i in 0..=40 {
        u_max = u_max.max(pf.state(xi0 * (i as f64) / 40.0).u_perp.norm());
    }
    let mut worst: f64 = 0.0;
    for i in 1..=8 {
        let xi = xi0 * (i as f64) / 8.0;
        for j in 0..=5 {
            let xi_minus = xi + (xi_minus_max - xi) * (j as f64) / 5.0;
            let x0 = 0.5 * (xi + xi_minus);
            let z = 0.5 * (xi_minus - xi);
            let got = plasma::corrected_vector_potential(&pf, &setup, x0, z).unwrap();
            worst = worst.max((got.u_perp1 - pf.state(xi).u_perp).norm() / u_max);
        }
    }
    // Linearity of the correction in the density.
    let half = PlasmaSetup::new(0.5e18).unwrap();
    let vacuum = PlasmaSetup::new(0.0).unwrap();
    let mut worst_lin: f64 = 0.0;
    for (xi, xi_minus) in [(0.4 * xi0, 3.0e-3), (0.8 * xi0, 5.0e-3), (xi0, 6.0e-3)] {
        let (x0, z) = (0.5 * (xi + xi_minus), 0.5 * (xi_minus - xi));
        let base = plasma::corrected_vector_potential(&pf, &vacuum, x0, z).unwrap().u_perp1;
        let d_full =
            plasma::corrected_vector_potential(&pf, &setup, x0, z).unwrap().u_perp1 - base;
        let d_half =
            plasma::corrected_vector_potential(&pf, &half, x0, z).unwrap().u_perp1 - base;
        worst_lin = worst_lin.max((d_full - 2.0 * d_half).norm() / d_full.norm());
    }
    verdict(
        10,
        "transverse correction small in its stated region and linear in density",
        worst < 0.1 && worst_lin <= 1e-10,
        &format!(
            "worst correction ratio {worst:.3} against 0.1, linearity residual {worst_lin:.2e} against 1e-10"
        ),
    );
}

#[test]
fn criterion_11_oracle_convergence() {
    let sigma = 4.0 * LAMBDA;
    let env: Arc<dyn Envelope> =
        Arc::new(GaussianEnvelope::new(2.0e7, 6.0 * sigma, sigma).unwrap());
    let pulse = pulse_of(env, Polarization::Linear);
    let (_, s1) = pulse.envelope().support();
    let cfg = OracleConfig::new(LAMBDA / 100.0, LAMBDA).unwrap();
    let order = convergence_order(
        Species::electron(),
        &PulseAlongZ::new(pulse),
        Vector3::zeros(),
        Vector3::zeros(),
        (0.0, 0.6 * s1),
        cfg,
    )
    .unwrap()
    .expect("error above machine noise");
    verdict(
        11,
        "oracle global convergence order is four on smooth fields",
        (order - 4.0).abs() <= 0.3,
        &format!("measured order {order:.2} against 4.0 +/- 0.3"),
    );
}
