//! Scenario geometries and the checks wired to each of them.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{Check, Provenance, Side, VerificationReport};
use super::ScenarioConfig;
use crate::brakke::tracks::{half_plane_track, linspace, translating_plane_track};
use crate::brakke::{
    brakke_residual, graphical_flow_run, parabolic_max_principle_residual, shrinking_sphere_track,
    touching_spacetime_quadratics, Boundary, FlowGrid, FlowRunConfig, FlowTrack, SpaceTimeQuadratic,
    SpaceTimeTestFunction, Transport,
};
use crate::cutoff::RadialCutoff;
use crate::geometry::{GeometryContext, Plane, SymMatrix, Vector};
use crate::huisken::{parabolic_decay_fit, parabolic_harnack, verify_huisken_monotonicity, SpaceTimePoint};
use crate::monotonicity::{
    density_hypothesis, dyadic_scales, fit_decay, harnack_certificate, ConvexWeight, DecayFit, MonotonicityVerifier,
    Outcome, TolModel, DENSITY_BOUND,
};
use crate::regularity::{
    excess_decay, extract_graph, improve_flatness, max_principle_residual, touching_quadratics, FlatnessConfig,
    QuadraticField,
};
use crate::varifold::shapes::{self, Hole};
use crate::varifold::{Ball, DiscreteVarifold, TestField};
use crate::{Error, Result};

/// Largest relative first-variation residual accepted at the default mesh.
const FIRST_VARIATION_TOL: f64 = 1e-2;
/// Constant allowed in the iterated excess decay.
const EXCESS_DECAY_C: f64 = 10.0;
/// Levels of the iterated excess decay.
const EXCESS_LEVELS: usize = 4;
/// Polynomial degree of random test fields.
const FIELD_DEGREE: u32 = 2;
/// Offset between the sheets of `two-planes`.
const SHEET_OFFSET: f64 = 0.1;

fn ctx3() -> GeometryContext {
    GeometryContext::new(3, 2).expect("(3, 2) is a valid context")
}

fn e(d: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[i] = 1.0;
    v
}

/// The three weight kinds used by the monotonicity checks.
pub fn scenario_weights(d: usize) -> Vec<ConvexWeight> {
    let mut a = vec![0.0; d];
    a[0] = 0.6;
    a[1] = 0.8;
    let mut b = vec![0.0; d];
    b[0] = 1.0;
    vec![
        ConvexWeight::constant(1.0).expect("valid weight"),
        ConvexWeight::trunc_linear(a, vec![0.0; d], -0.2).expect("valid weight"),
        ConvexWeight::abs_linear(b).expect("valid weight"),
    ]
}

/// Ten equally spaced radii ending at `r_max`, starting at `r_max/10` or at
/// three mesh spacings if that is larger.
fn ten_radii(r_max: f64, h: f64) -> Vec<f64> {
    let r_min = (0.1 * r_max).max(3.0 * h);
    if r_min >= r_max {
        return vec![r_max];
    }
    (0..10).map(|k| r_min + (r_max - r_min) * k as f64 / 9.0).collect()
}

fn report_for(cfg: &ScenarioConfig, side: Side) -> VerificationReport {
    VerificationReport::new(&cfg.name, side, Provenance::new(cfg.echo()))
}

/// Builds the scenario geometry, runs its checks and returns the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    log::info!("running scenario {} (seed {})", cfg.name, cfg.seed);
    match cfg.name.as_str() {
        "plane" => plane(cfg),
        "tilted-plane" => tilted_plane(cfg),
        "two-planes" => two_planes(cfg),
        "sphere" => sphere(cfg),
        "sphere-cap" => sphere_cap(cfg),
        "catenoid-patch" => catenoid_patch(cfg),
        "punctured-plane" => punctured_plane(cfg),
        "shrinking-sphere" => shrinking_sphere(cfg),
        "graph-heat" => graph_heat(cfg),
        "translating-plane" => translating_plane(cfg),
        "half-plane-barrier" => half_plane_barrier(cfg),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

/// Elliptic geometry of a scenario, with the point used as base point moved
/// to the origin.
pub fn scenario_varifold(cfg: &ScenarioConfig) -> Result<DiscreteVarifold> {
    let c = ctx3();
    let s = Plane::horizontal(3, 2)?;
    let data = 1.2 * cfg.radius;
    match cfg.name.as_str() {
        "plane" => shapes::flat_lattice(c, &s, cfg.spacing, data, &Vector::zeros(3)),
        "tilted-plane" => shapes::tilted_plane(c, cfg.slope, cfg.spacing, data),
        "two-planes" => {
            let a = shapes::flat_lattice(c, &s, cfg.spacing, data, &Vector::zeros(3))?;
            a.union(&a.translated(&(e(3, 2) * SHEET_OFFSET)))
        }
        "sphere" => {
            let north = e(3, 2);
            let v = shapes::sphere(c, cfg.sphere_radius, cfg.spacing, &north)?;
            Ok(v.translated(&(-north * cfg.sphere_radius)))
        }
        "sphere-cap" => shapes::sphere_cap(c, cfg.sphere_radius, cfg.spacing, data),
        "catenoid-patch" => Ok(shapes::catenoid(c, 0.8, cfg.spacing)?.translated(&-e(3, 0))),
        "punctured-plane" => shapes::punctured_plane(c, cfg.spacing, data, &[puncture(cfg)]),
        other if super::SCENARIOS.contains(&other) => Err(Error::InvalidArgument(format!(
            "scenario `{other}` is parabolic; it has a flow track, not a varifold"
        ))),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

/// Hole of `punctured-plane`: radius `R/5` centred at `(R/2, 0)`.
fn puncture(cfg: &ScenarioConfig) -> Hole {
    Hole {
        center: vec![0.5 * cfg.radius, 0.0],
        radius: 0.2 * cfg.radius,
    }
}

/// Flow track of a parabolic scenario.
pub fn scenario_track(cfg: &ScenarioConfig) -> Result<FlowTrack> {
    let c = ctx3();
    let r2 = cfg.radius * cfg.radius;
    match cfg.name.as_str() {
        "shrinking-sphere" => shrinking_sphere_track(c, true, (-1.0, -0.05), cfg.frames, cfg.spacing),
        "graph-heat" => {
            let grid = heat_grid(cfg);
            let run = FlowRunConfig {
                t_start: -r2,
                t_end: 0.0,
                frames: cfg.frames,
                cfl: cfg.cfl,
            };
            let a = cfg.amplitude;
            graphical_flow_run(&grid, &move |x: &[f64]| a * x[0].sin(), Transport::None, &run)
        }
        "translating-plane" => {
            translating_plane_track(c, cfg.speed, &linspace(-r2, 0.0, cfg.frames), cfg.spacing, 1.2 * cfg.radius)
        }
        "half-plane-barrier" => half_plane_track(c, cfg.spacing, 1.2 * cfg.radius, &linspace(-0.02, 0.0, 3)),
        other if super::SCENARIOS.contains(&other) => Err(Error::InvalidArgument(format!(
            "scenario `{other}` is elliptic; it has a varifold, not a flow track"
        ))),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn heat_grid(cfg: &ScenarioConfig) -> FlowGrid {
    FlowGrid {
        m: 1,
        n: ((2.0 * PI / cfg.spacing).round() as usize).max(8),
        origin: -PI,
        length: 2.0 * PI,
        boundary: Boundary::Periodic,
    }
}

/// Largest fine-level varifold built for tolerance calibration.
const CALIBRATION_ATOMS: usize = 500_000;

/// Tolerance model for the monotonicity checks: `K` is calibrated from the
/// constant-weight densities on meshes `h` and `h/2` and never drops below
/// one. Scenarios whose fine level would exceed `CALIBRATION_ATOMS` keep
/// `K = 1`.
fn monotonicity_tol(v: &DiscreteVarifold, cfg: &ScenarioConfig, radii: &[f64]) -> Result<TolModel> {
    if 4 * v.len() > CALIBRATION_ATOMS {
        log::info!("{}: fine level too large, K = 1", cfg.name);
        return Ok(TolModel::default());
    }
    let mut fine_cfg = cfg.clone();
    fine_cfg.spacing = 0.5 * cfg.spacing;
    let fine = scenario_varifold(&fine_cfg)?;
    let one = ConvexWeight::constant(1.0)?;
    let density = |w: &DiscreteVarifold| -> Result<Vec<f64>> {
        radii.iter().map(|&r| crate::monotonicity::weighted_density(w, &one, r)).collect()
    };
    let model = TolModel::richardson(&density(v)?, &density(&fine)?, v.mesh_size(), v.lambda, 1.0);
    log::info!("{}: calibrated K = {:.3}", cfg.name, model.k);
    Ok(TolModel { k: model.k.max(1.0) })
}

fn monotonicity_checks(rep: &mut VerificationReport, v: &DiscreteVarifold, cfg: &ScenarioConfig, r_max: f64) -> Result<()> {
    let radii = ten_radii(r_max, v.mesh_size());
    let verifier = MonotonicityVerifier {
        c0: cfg.c0,
        tol: monotonicity_tol(v, cfg, &radii)?,
    };
    for f in scenario_weights(v.context.d) {
        let chk = verifier.verify(v, &f, &radii)?;
        rep.push(Check::at_least(format!("monotonicity min slack ({})", f.kind()), chk.min_slack, 0.0, chk.tol_disc));
        rep.push(Check::at_most(format!("monotonicity smallest C0 ({})", f.kind()), chk.smallest_c0, cfg.c0, 0.0));
    }
    Ok(())
}

fn first_variation_check(
    rep: &mut VerificationReport,
    v: &DiscreteVarifold,
    cfg: &ScenarioConfig,
    cutoff: Option<RadialCutoff>,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut unreliable = 0;
    for _ in 0..cfg.samples {
        let f = TestField::random(v.context.d, FIELD_DEGREE, cutoff.clone(), &mut rng)?;
        let fv = v.first_variation(&f)?;
        worst = worst.max(fv.relative_residual());
        unreliable += usize::from(fv.unreliable);
    }
    rep.push(Check::at_most("first variation relative residual", worst, FIRST_VARIATION_TOL, 0.0));
    rep.push(Check::holds("test fields vanish at the rim", unreliable == 0));
    Ok(())
}

/// Dyadic scales from `R` that stay above `osc(B_R) + ΛR²`, at most `k`.
fn admissible_scales(big_r: f64, k: usize, reference: f64) -> Vec<f64> {
    dyadic_scales(big_r, k)
        .into_iter()
        .filter(|&r| r >= reference)
        .collect()
}

fn record_decay(rep: &mut VerificationReport, fit: &DecayFit) {
    rep.push(Check::holds("decay bound at every scale", fit.bound_holds()));
    rep.fitted.beta = Some(fit.beta_fit);
    rep.fitted.c = Some(fit.c_fit);
    rep.decay_curve = fit.log_curve();
}

/// Elliptic decay fit over `cfg.scales` dyadic scales, not applicable when
/// the density hypothesis fails or fewer than three scales are admissible.
fn decay_check(
    rep: &mut VerificationReport,
    v: &DiscreteVarifold,
    s: &Plane,
    cfg: &ScenarioConfig,
    beta_range: Option<(f64, f64)>,
) -> Result<Option<DecayFit>> {
    let big_r = cfg.radius;
    let density = density_hypothesis(v, big_r)?;
    if density > DENSITY_BOUND {
        rep.push(Check::at_most("decay density hypothesis", density, DENSITY_BOUND, 0.0).with_outcome(Outcome::NotApplicable));
        return Ok(None);
    }
    let osc = v.oscillation(s, &Ball::centered(v.context.d, big_r)?)?;
    let scales = admissible_scales(big_r, cfg.scales, osc + v.lambda * big_r * big_r);
    if scales.len() < 3 {
        rep.push(Check::at_least("decay admissible scales", scales.len() as f64, 3.0, 0.0).with_outcome(Outcome::NotApplicable));
        return Ok(None);
    }
    let fit = fit_decay(v, s, big_r, &scales)?;
    record_decay(rep, &fit);
    if let Some((lo, hi)) = beta_range {
        let mid = 0.5 * (lo + hi);
        rep.push(Check::close_to("decay exponent beta", fit.beta_fit, mid, 0.5 * (hi - lo)));
    }
    Ok(Some(fit))
}

fn harnack_check(rep: &mut VerificationReport, v: &DiscreteVarifold, s: &Plane, cfg: &ScenarioConfig) -> Result<()> {
    let cert = harnack_certificate(v, s, cfg.radius, cfg.eta)?;
    rep.push(
        Check::at_most("harnack osc(B_etaR) / osc(B_R)", ratio(cert.osc_eta_r, cert.osc_r), 1.0 - cfg.eta, 0.0)
            .with_outcome(cert.conclusion),
    );
    Ok(())
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn flatness_config(cfg: &ScenarioConfig) -> FlatnessConfig {
    FlatnessConfig {
        eta: cfg.eta,
        alpha: cfg.alpha,
        eps0: cfg.eps0,
        ..FlatnessConfig::default()
    }
}

fn flatness_check(rep: &mut VerificationReport, v: &DiscreteVarifold, s: &Plane, cfg: &ScenarioConfig) -> Result<()> {
    let ball = Ball::centered(v.context.d, cfg.radius)?;
    let imp = improve_flatness(v, &ball, s, &flatness_config(cfg))?;
    rep.push(Check::at_most("flatness osc_T(B_etaR)", imp.osc_t_eta, imp.bound, 0.0).with_outcome(imp.outcome));
    if imp.ok() {
        rep.push(Check::at_most("flatness |S - T| / eps", imp.distance_ratio, 2.0, 0.0));
        rep.fitted.largest_eps0 = Some(imp.eps);
    } else if imp.outcome == Outcome::NotApplicable {
        log::info!("improvement of flatness not applicable: {:?}", imp.violated());
    }
    Ok(())
}

fn excess_check(rep: &mut VerificationReport, v: &DiscreteVarifold, cfg: &ScenarioConfig) -> Result<()> {
    let ball = Ball::centered(v.context.d, cfg.radius)?;
    let h = v.mesh_size();
    // levels whose ball still holds a few cells of atoms
    let levels = (1..=EXCESS_LEVELS)
        .take_while(|&k| cfg.radius * cfg.eta.powi(k as i32) >= 4.0 * h)
        .count();
    if levels == 0 {
        rep.push(Check::at_least("excess decay resolved levels", 0.0, 1.0, 0.0).with_outcome(Outcome::NotApplicable));
        return Ok(());
    }
    let tol = TolModel::default().tol(h, v.lambda, 1.0);
    let dec = excess_decay(v, &ball, cfg.eta, cfg.alpha, levels, cfg.c_pen, tol)?;
    rep.push(Check::at_most("iterated excess decay constant", dec.c_fit, EXCESS_DECAY_C, 0.0));
    Ok(())
}

/// Graph extraction over `B_R` compared with the exact height `u`.
fn graph_check<U: Fn(&[f64]) -> f64>(
    rep: &mut VerificationReport,
    v: &DiscreteVarifold,
    s: &Plane,
    cfg: &ScenarioConfig,
    u: U,
    height_tol: Option<f64>,
) -> Result<()> {
    let ball = Ball::centered(v.context.d, cfg.radius)?;
    let g = extract_graph(v, &ball, s)?;
    let err = g.max_height_error(|y| vec![u(y)]);
    let tol = height_tol.unwrap_or(2.0 * g.spread_threshold);
    rep.push(Check::at_most("graph height error", err, tol, 0.0));
    let osc = v.oscillation(s, &ball)?;
    rep.push(Check::at_most("graph C^{1,alpha} norm", g.c1alpha_norm, 10.0 * (osc + v.lambda), 0.0));
    Ok(())
}

fn max_principle_checks(rep: &mut VerificationReport, v: &DiscreteVarifold, cfg: &ScenarioConfig) -> Result<()> {
    let found = touching_quadratics(v, cfg.samples, cfg.seed);
    let mut worst = f64::NEG_INFINITY;
    let mut tol: f64 = 0.0;
    let mut false_positive = 0;
    for (f, x0) in &found {
        let r = max_principle_residual(v, f, x0)?;
        worst = worst.max(r.residual - r.tol_disc);
        tol = tol.max(r.tol_disc);
        false_positive += usize::from(!r.passed());
    }
    rep.push(Check::at_least("touching quadratics found", found.len() as f64, cfg.samples as f64, 0.0));
    rep.push(Check::at_most("max principle violations", false_positive as f64, 0.0, 0.0));
    log::debug!("largest residual above tolerance {worst:e} (tol up to {tol:e})");
    Ok(())
}

fn plane(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    let cut = RadialCutoff::new(Vector::zeros(3), 0.4 * cfg.radius, cfg.radius)?;
    first_variation_check(&mut rep, &v, cfg, Some(cut))?;
    let osc = v.oscillation(&s, &Ball::centered(3, cfg.radius)?)?;
    rep.push(Check::at_most("oscillation over B_R", osc, 0.0, 0.0));
    harnack_check(&mut rep, &v, &s, cfg)?;
    flatness_check(&mut rep, &v, &s, cfg)?;
    excess_check(&mut rep, &v, cfg)?;
    graph_check(&mut rep, &v, &s, cfg, |_| 0.0, None)?;
    Ok(rep)
}

fn tilted_plane(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    let cut = RadialCutoff::new(Vector::zeros(3), 0.4 * cfg.radius, cfg.radius)?;
    first_variation_check(&mut rep, &v, cfg, Some(cut))?;
    decay_check(&mut rep, &v, &s, cfg, Some((0.99, 1.01)))?;
    harnack_check(&mut rep, &v, &s, cfg)?;
    flatness_check(&mut rep, &v, &s, cfg)?;
    excess_check(&mut rep, &v, cfg)?;
    let slope = cfg.slope;
    graph_check(&mut rep, &v, &s, cfg, |y| slope * y[0], None)?;
    Ok(rep)
}

fn two_planes(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    decay_check(&mut rep, &v, &s, cfg, None)?;
    harnack_check(&mut rep, &v, &s, cfg)?;
    flatness_check(&mut rep, &v, &s, cfg)?;
    let multi = matches!(
        extract_graph(&v, &Ball::centered(3, cfg.radius)?, &s),
        Err(Error::MultiValued { .. })
    );
    rep.push(Check::holds("graph extraction reports two sheets", multi));
    Ok(rep)
}

fn sphere(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    let rho = cfg.sphere_radius;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    first_variation_check(&mut rep, &v, cfg, None)?;
    // |x - c|²/2 about the centre is constant on the sphere: the equality case
    let centre = -e(3, 2) * rho;
    let f = QuadraticField::new(0.5 * rho * rho, -&centre, SymMatrix::identity(3))?;
    let mut worst: f64 = 0.0;
    let mut tol: f64 = 0.0;
    for a in v.atoms().iter().step_by((v.len() / 20).max(1)) {
        let r = max_principle_residual(&v, &f, &a.x)?;
        worst = worst.max(r.residual.abs());
        tol = tol.max(r.tol_disc);
    }
    rep.push(Check::at_most("max principle equality residual", worst, 1e-3, 0.0));
    max_principle_checks(&mut rep, &v, cfg)?;
    graph_check(&mut rep, &v, &s, cfg, |y| -shapes::sphere_cap_height(rho, y.iter().map(|c| c * c).sum::<f64>().sqrt()), None)?;
    Ok(rep)
}

fn sphere_cap(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    let rho = cfg.sphere_radius;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    let cut = RadialCutoff::new(Vector::zeros(3), 0.4 * cfg.radius, cfg.radius)?;
    first_variation_check(&mut rep, &v, cfg, Some(cut))?;
    decay_check(&mut rep, &v, &s, cfg, Some((1.9, 2.1)))?;
    harnack_check(&mut rep, &v, &s, cfg)?;
    flatness_check(&mut rep, &v, &s, cfg)?;
    excess_check(&mut rep, &v, cfg)?;
    graph_check(&mut rep, &v, &s, cfg, |y| shapes::sphere_cap_height(rho, y.iter().map(|c| c * c).sum::<f64>().sqrt()), Some(1e-3))?;
    max_principle_checks(&mut rep, &v, cfg)?;
    Ok(rep)
}

fn catenoid_patch(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    // tangent plane at the waist point (1, 0, 0), now the origin
    let s = Plane::coordinate(3, &[1, 2])?;
    monotonicity_checks(&mut rep, &v, cfg, cfg.radius)?;
    let cut = RadialCutoff::new(Vector::zeros(3), 0.4 * cfg.radius, cfg.radius)?;
    first_variation_check(&mut rep, &v, cfg, Some(cut))?;
    decay_check(&mut rep, &v, &s, cfg, None)?;
    max_principle_checks(&mut rep, &v, cfg)?;
    // graph over (y, z) of the sheet x = √(cosh² z − y²) − 1, with u along e_1
    graph_check(&mut rep, &v, &s, cfg, |y| (y[1].cosh().powi(2) - y[0] * y[0]).sqrt() - 1.0, None)?;
    Ok(rep)
}

fn punctured_plane(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Elliptic);
    let v = scenario_varifold(cfg)?;
    let s = Plane::horizontal(3, 2)?;
    let hole = puncture(cfg);
    let clear = hole.center[0] - hole.radius;
    monotonicity_checks(&mut rep, &v, cfg, 0.9 * clear)?;
    let cut = RadialCutoff::new(Vector::zeros(3), 0.4 * clear, 0.9 * clear)?;
    first_variation_check(&mut rep, &v, cfg, Some(cut))?;
    let gap = matches!(
        extract_graph(&v, &Ball::centered(3, cfg.radius)?, &s),
        Err(Error::SupportGap { .. })
    );
    rep.push(Check::holds("graph extraction reports a support gap", gap));
    Ok(rep)
}

fn origin_base(d: usize) -> SpaceTimePoint {
    SpaceTimePoint::origin(d)
}

fn shrinking_sphere(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Parabolic);
    let c = ctx3();
    let m = c.m as f64;
    let track = scenario_track(cfg)?;
    let (t1, t2) = (track.t_start(), track.t_end());

    let one = SpaceTimeTestFunction::constant(1.0);
    let r = brakke_residual(&track, &one, t1, t2)?;
    rep.push(Check::at_most("brakke |rhs - lhs| / |rhs| (phi = 1)", ratio(r.residual.abs(), r.rhs.abs()), 5e-2, 0.0));
    let exact = -4.0 * PI * 2.0 * m * (t2 - t1);
    rep.push(Check::close_to("brakke rhs (phi = 1)", r.rhs, exact, 1e-9 * exact.abs()));

    // refinement with a cutoff centred off the sphere centre
    let cut = SpaceTimeTestFunction::cutoff(RadialCutoff::new(Vector::from_column_slice(&[0.6, 0.0, 0.0]), 0.5, 2.5)?);
    let fine = shrinking_sphere_track(c, true, (t1, t2), 2 * cfg.frames - 1, cfg.spacing)?;
    let coarse_res = brakke_residual(&track, &cut, t1, t2)?.residual.abs();
    let fine_res = brakke_residual(&fine, &cut, t1, t2)?.residual.abs();
    rep.push(Check::at_least("brakke residual refinement gain", ratio(coarse_res, fine_res), 1.5, 0.0));

    let base = origin_base(3);
    let f = ConvexWeight::constant(1.0)?;
    let times = linspace(t1, t2, 20);
    let times: Vec<f64> = times.iter().map(|&t| t.min(-1e-9)).collect();
    let chk = verify_huisken_monotonicity(&track, &f, &base, 5.0, &times, cfg.c_huisken)?;
    rep.push(Check::at_least("huisken min slack", chk.min_slack, 0.0, chk.tol_disc));
    rep.push(Check::at_most("gaussian density monotonicity defect", chk.monotonicity_defect(), 1e-2, 0.0));
    let d_max = chk.density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.push(Check::close_to("gaussian density", d_max, 4.0 / std::f64::consts::E, 1e-6));

    // |x|²/2 + m t vanishes on the sphere of radius √(−2mt): equality case
    let q = SpaceTimeQuadratic::new(0.0, Vector::zeros(3), SymMatrix::identity(3), m)?;
    let last = &track.frames()[track.len() - 1];
    let mut worst: f64 = 0.0;
    for a in last.varifold.atoms().iter().step_by((last.varifold.len() / 20).max(1)) {
        worst = worst.max(parabolic_max_principle_residual(&track, &q, &a.x, last.t)?.residual.abs());
    }
    rep.push(Check::at_most("parabolic max principle equality residual", worst, 1e-3, 0.0));
    Ok(rep)
}

fn graph_heat(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Parabolic);
    let track = scenario_track(cfg)?;
    let (t1, t2) = (track.t_start(), track.t_end());

    let phi = SpaceTimeTestFunction::cutoff(RadialCutoff::new(Vector::zeros(2), 0.5, 1.5)?);
    let r = brakke_residual(&track, &phi, t1, t2)?;
    let dt = track.times().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    rep.push(Check::at_least("brakke residual (cutoff)", r.residual, 0.0, dt * r.scale));

    let last = &track.frames()[track.len() - 1].varifold;
    let amp = last.atoms().iter().map(|a| a.x[1]).fold(f64::NEG_INFINITY, f64::max);
    let expected = cfg.amplitude * (-(t2 - t1)).exp();
    rep.push(Check::at_most("amplitude relative error vs exp(-t)", (amp - expected).abs() / expected, 1e-2, 0.0));

    let base = origin_base(2);
    let scales = dyadic_scales(cfg.radius, cfg.scales);
    // exact tangent of a(t) sin x at the base point
    let tangent = Plane::from_spanning(&[Vector::from_column_slice(&[1.0, expected])])?;
    let dec = parabolic_decay_fit(&track, &tangent, &base, cfg.radius, &scales)?;
    match &dec.fit {
        Some(fit) => {
            record_decay(&mut rep, fit);
            rep.push(Check::at_least("parabolic decay exponent beta", fit.beta_fit, 1.0, 0.0));
        }
        None => rep.push(
            Check::at_most("parabolic decay density hypothesis", dec.max_gaussian_density, DENSITY_BOUND, 0.0)
                .with_outcome(Outcome::NotApplicable),
        ),
    }

    let s = Plane::horizontal(2, 1)?;
    let h = parabolic_harnack(&track, &s, &base, cfg.radius, cfg.eta)?;
    rep.push(
        Check::at_most("parabolic harnack osc(Q_etaR) / osc(Q_R)", ratio(h.osc_eta_r, h.osc_r), 1.0 - cfg.eta, 0.0)
            .with_outcome(h.outcome),
    );

    let found = touching_spacetime_quadratics(&track, cfg.samples, cfg.seed);
    let mut violations = 0;
    for (f, x0, t0) in &found {
        violations += usize::from(!parabolic_max_principle_residual(&track, f, x0, *t0)?.passed());
    }
    rep.push(Check::at_least("touching caloric quadratics found", found.len() as f64, cfg.samples as f64, 0.0));
    rep.push(Check::at_most("parabolic max principle violations", violations as f64, 0.0, 0.0));
    Ok(rep)
}

fn translating_plane(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Parabolic);
    let track = scenario_track(cfg)?;
    let (t1, t2) = (track.t_start(), track.t_end());
    let phi = SpaceTimeTestFunction::cutoff(RadialCutoff::new(Vector::zeros(3), 0.4 * cfg.radius, cfg.radius)?);
    let r = brakke_residual(&track, &phi, t1, t2)?;
    let dt = track.times().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    rep.push(Check::at_most("brakke |rhs - lhs|", r.residual.abs(), 0.0, dt * r.scale));

    let base = origin_base(3);
    let times: Vec<f64> = linspace(-cfg.radius * cfg.radius, 0.0, 21)
        .into_iter()
        .filter(|&t| t < 0.0)
        .collect();
    let s = Plane::horizontal(3, 2)?;
    for f in [
        ConvexWeight::constant(1.0)?,
        ConvexWeight::trunc_linear(vec![0.6, 0.8, 0.0], vec![0.0; 3], 0.0)?,
    ] {
        let chk = verify_huisken_monotonicity(&track, &f, &base, 1.0, &times, cfg.c_huisken)?;
        rep.push(Check::at_least(format!("huisken min slack ({})", f.kind()), chk.min_slack, 0.0, chk.tol_disc));
    }
    let h = parabolic_harnack(&track, &s, &base, cfg.radius, cfg.eta)?;
    rep.push(
        Check::at_most("parabolic harnack osc(Q_etaR) / osc(Q_R)", ratio(h.osc_eta_r, h.osc_r), 1.0 - cfg.eta, 0.0)
            .with_outcome(h.outcome),
    );
    let reference = h.osc_r + track.lambda_v * cfg.radius * cfg.radius;
    let scales = admissible_scales(cfg.radius, cfg.scales, reference);
    if scales.len() >= 3 {
        let dec = parabolic_decay_fit(&track, &s, &base, cfg.radius, &scales)?;
        if let Some(fit) = &dec.fit {
            record_decay(&mut rep, fit);
        }
    } else {
        rep.push(Check::at_least("decay admissible scales", scales.len() as f64, 3.0, 0.0).with_outcome(Outcome::NotApplicable));
    }
    Ok(rep)
}

fn half_plane_barrier(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut rep = report_for(cfg, Side::Parabolic);
    for m in 1..=3usize {
        let d = m + 1;
        let c = GeometryContext::new(d, m)?;
        let track = half_plane_track(c, cfg.spacing, 1.2 * cfg.radius, &linspace(-0.02, 0.0, 3))?;
        let f = SpaceTimeQuadratic::half_plane_barrier(d, m)?;
        let r = parabolic_max_principle_residual(&track, &f, &Vector::zeros(d), 0.0)?;
        let target = 1.0 / (2.0 * m as f64);
        rep.push(Check::close_to(format!("barrier residual (m = {m})"), r.residual, target, 1e-6));
        rep.push(Check::holds(format!("barrier violates the max principle (m = {m})"), !r.passed()));
    }
    Ok(rep)
}
