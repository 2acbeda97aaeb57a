use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gmtlab_core::brakke::io::{load_flow, parse_dvflow, save_flow};
use gmtlab_core::brakke::{FlowTrack, ParabolicCylinder};
use gmtlab_core::geometry::{Plane, Vector};
use gmtlab_core::harness::scenarios::scenario_track;
use gmtlab_core::harness::{emit_report, run_scenario, Check, Format, Provenance, ScenarioConfig, Side, VerificationReport};
use gmtlab_core::huisken::graph::parabolic_extract_graph;
use gmtlab_core::huisken::{parabolic_decay_fit, verify_huisken_monotonicity, SpaceTimePoint};
use gmtlab_core::monotonicity::{
    density_hypothesis, dyadic_scales, fit_decay, ConvexWeight, MonotonicityVerifier, Outcome, TolModel, DENSITY_BOUND,
};
use gmtlab_core::regularity::extract_graph;
use gmtlab_core::varifold::io::parse_dvf;
use gmtlab_core::varifold::{Ball, DiscreteVarifold};

#[derive(Parser)]
#[command(name = "gmtlab", version, about = "Numerical checks for varifold and Brakke-flow regularity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Check a monotonicity inequality on an input file.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Fit oscillation decay on an input file.
    #[command(subcommand)]
    Decay(DecayCmd),
    /// Produce flow tracks.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Extract a graph from an input file.
    #[command(subcommand)]
    Graph(GraphCmd),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    Run(ScenarioRun),
}

#[derive(Args)]
struct ScenarioRun {
    name: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Weighted monotonicity of a DVF varifold about the origin.
    AllardMono(AllardMono),
    /// Weighted Gaussian density monotonicity of a DVFLOW track.
    Huisken(Huisken),
}

#[derive(Args)]
struct AllardMono {
    #[arg(long)]
    input: PathBuf,
    /// `const <c>`, `tlin <a..> <y0..> <c>` or `abslin <a..>`.
    #[arg(long, default_value = "const 1")]
    f: String,
    #[arg(long, default_value_t = 10.0)]
    c0: f64,
    /// `<a>:<b>:<n>`, n equally spaced radii from a to b.
    #[arg(long)]
    radii: String,
}

#[derive(Args)]
struct Huisken {
    #[arg(long)]
    flow: PathBuf,
    /// Comma-separated coordinates of the base point.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, allow_hyphen_values = true)]
    t0: f64,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value = "const 1")]
    f: String,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
}

#[derive(Subcommand)]
enum DecayCmd {
    Fit(DecayFitArgs),
}

#[derive(Args)]
struct DecayFitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Only `auto`: best-fit plane over the smallest ball.
    #[arg(long, default_value = "auto")]
    plane: String,
    #[arg(long = "R")]
    big_r: f64,
    #[arg(long, default_value_t = 5)]
    scales: usize,
}

#[derive(Subcommand)]
enum FlowCmd {
    Run(FlowRun),
}

#[derive(Args)]
struct FlowRun {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GraphCmd {
    Extract(GraphExtract),
}

#[derive(Args)]
struct GraphExtract {
    #[arg(long)]
    input: PathBuf,
    /// `cx,..,r`: centre coordinates followed by the radius.
    #[arg(long, allow_hyphen_values = true)]
    ball: String,
    /// Optional CSV of the graph samples.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors that belong to exit code 2: bad arguments or unreadable input.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<Usage>()
            || e.is::<std::io::Error>()
            || matches!(
                e.downcast_ref::<gmtlab_core::Error>(),
                Some(
                    gmtlab_core::Error::Parse { .. }
                        | gmtlab_core::Error::UnknownScenario(_)
                        | gmtlab_core::Error::InvalidArgument(_)
                        | gmtlab_core::Error::Io(_)
                )
            )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    let res = match cmd {
        Command::Scenario(ScenarioCmd::Run(a)) => scenario_run(a),
        Command::Verify(VerifyCmd::AllardMono(a)) => allard_mono(a),
        Command::Verify(VerifyCmd::Huisken(a)) => huisken(a),
        Command::Decay(DecayCmd::Fit(a)) => decay_fit(a),
        Command::Flow(FlowCmd::Run(a)) => flow_run(a),
        Command::Graph(GraphCmd::Extract(a)) => graph_extract(a),
    };
    match res {
        Err(e) if !is_usage(&e) => {
            // a numerical failure on valid input is a failed check, not misuse
            eprintln!("error: {e:#}");
            Ok(1)
        }
        other => other,
    }
}

fn load_config(name: &str, path: Option<&Path>) -> Result<ScenarioConfig> {
    let cfg = match path {
        Some(p) => ScenarioConfig::load(p, Some(name)).with_context(|| format!("reading config {}", p.display()))?,
        None => ScenarioConfig::for_scenario(name)?,
    };
    Ok(cfg.with_env_seed()?)
}

fn scenario_run(a: ScenarioRun) -> Result<u8> {
    let mut cfg = load_config(&a.name, a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = a.out {
        cfg.out_dir = Some(dir);
    }
    if let Some(f) = a.format {
        cfg.format = f;
    }
    let report = run_scenario(&cfg)?;
    finish(&report, cfg.out_dir.as_deref(), cfg.format)
}

/// Prints a summary, writes the report when a directory is given and maps
/// the outcome to the exit code.
fn finish(report: &VerificationReport, out_dir: Option<&Path>, format: Format) -> Result<u8> {
    for c in &report.checks {
        println!("{:<14} {}  value={:e} threshold={:e} tol={:e}", format!("{:?}", c.outcome), c.name, c.value, c.threshold, c.tol_disc);
    }
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{}.{}", report.scenario, format));
            for p in emit_report(report, format, &path)? {
                println!("wrote {}", p.display());
            }
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report.exit_code() as u8)
}

fn provenance(pairs: &[(&str, String)]) -> Provenance {
    Provenance::new(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>())
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("invalid number `{t}` in {what}"))))
        .collect()
}

fn parse_radii(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!(usage(format!("radii `{text}` must look like <a>:<b>:<n>")));
    };
    let a: f64 = a.parse().map_err(|_| usage(format!("invalid radius `{a}`")))?;
    let b: f64 = b.parse().map_err(|_| usage(format!("invalid radius `{b}`")))?;
    let n: usize = n.parse().map_err(|_| usage(format!("invalid count `{n}`")))?;
    if n == 0 || !(a > 0.0) || (n > 1 && !(b > a)) {
        bail!(usage(format!("radii `{text}` need 0 < a < b and n >= 1")));
    }
    if n == 1 {
        return Ok(vec![b]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

enum Input {
    Varifold(DiscreteVarifold),
    Flow(FlowTrack),
}

fn read_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let ctx = || format!("parsing {}", path.display());
    if first.starts_with("DVFLOW") {
        Ok(Input::Flow(parse_dvflow(&text).with_context(ctx)?))
    } else {
        Ok(Input::Varifold(parse_dvf(&text).with_context(ctx)?))
    }
}

fn allard_mono(a: AllardMono) -> Result<u8> {
    let Input::Varifold(v) = read_input(&a.input)? else {
        bail!(usage("allard-mono takes a DVF varifold"));
    };
    let f = ConvexWeight::parse(&a.f, v.context.d)?;
    let radii = parse_radii(&a.radii)?;
    let verifier = MonotonicityVerifier {
        c0: a.c0,
        tol: TolModel::default(),
    };
    let chk = verifier.verify(&v, &f, &radii)?;
    let mut rep = VerificationReport::new(
        "allard-mono",
        Side::Elliptic,
        provenance(&[("input", a.input.display().to_string()), ("f", a.f.clone()), ("c0", a.c0.to_string()), ("radii", a.radii.clone())]),
    );
    rep.push(Check::at_least(format!("monotonicity min slack ({})", f.kind()), chk.min_slack, 0.0, chk.tol_disc));
    rep.push(Check::at_most(format!("monotonicity smallest C0 ({})", f.kind()), chk.smallest_c0, a.c0, 0.0));
    rep.push(Check::at_most("density ratio", chk.max_density_ratio, DENSITY_BOUND, 0.0));
    finish(&rep, None, Format::Json)
}

/// Kernel times `t − t₀` of the frames in `[t₀ − r², t₀)`.
fn kernel_times(track: &FlowTrack, t0: f64, r: f64) -> Vec<f64> {
    track
        .times()
        .into_iter()
        .filter(|&t| t < t0 && t >= t0 - r * r)
        .map(|t| t - t0)
        .collect()
}

fn huisken(a: Huisken) -> Result<u8> {
    let track = load_flow(&a.flow).with_context(|| format!("reading {}", a.flow.display()))?;
    let x0 = Vector::from_vec(parse_floats(&a.x0, "--x0")?);
    let f = ConvexWeight::parse(&a.f, track.context.d)?;
    let times = kernel_times(&track, a.t0, a.r);
    if times.is_empty() {
        bail!(usage(format!("no frames in [t0 - r^2, t0) = [{}, {})", a.t0 - a.r * a.r, a.t0)));
    }
    let base = SpaceTimePoint::new(x0, a.t0);
    let chk = verify_huisken_monotonicity(&track, &f, &base, a.r, &times, a.c)?;
    let mut rep = VerificationReport::new(
        "huisken",
        Side::Parabolic,
        provenance(&[
            ("flow", a.flow.display().to_string()),
            ("x0", a.x0.clone()),
            ("t0", a.t0.to_string()),
            ("r", a.r.to_string()),
            ("f", a.f.clone()),
            ("c", a.c.to_string()),
        ]),
    );
    rep.push(Check::at_least(format!("huisken min slack ({})", f.kind()), chk.min_slack, 0.0, chk.tol_disc));
    if chk.tangent_flag {
        log::warn!("base frame is not close to a plane at x0; the density limit there is not a tangent-plane density");
    }
    finish(&rep, None, Format::Json)
}

fn auto_plane(a: &DecayFitArgs, v: &DiscreteVarifold, smallest: f64) -> Result<Plane> {
    if a.plane != "auto" {
        bail!(usage(format!("--plane `{}`: only `auto` is supported", a.plane)));
    }
    Ok(v.best_fit_plane(&Ball::centered(v.context.d, smallest)?)?)
}

fn decay_fit(a: DecayFitArgs) -> Result<u8> {
    if a.scales < 3 {
        bail!(usage("--scales must be at least 3"));
    }
    let all = dyadic_scales(a.big_r, a.scales);
    let smallest = *all.last().unwrap();
    let prov = provenance(&[
        ("input", a.input.display().to_string()),
        ("plane", a.plane.clone()),
        ("R", a.big_r.to_string()),
        ("scales", a.scales.to_string()),
    ]);
    let rep = match read_input(&a.input)? {
        Input::Varifold(v) => {
            let s = auto_plane(&a, &v, smallest)?;
            let mut rep = VerificationReport::new("decay-fit", Side::Elliptic, prov);
            let density = density_hypothesis(&v, a.big_r)?;
            if density > DENSITY_BOUND {
                rep.push(Check::at_most("decay density hypothesis", density, DENSITY_BOUND, 0.0).with_outcome(Outcome::NotApplicable));
                return finish(&rep, None, Format::Json);
            }
            let osc = v.oscillation(&s, &Ball::centered(v.context.d, a.big_r)?)?;
            let reference = osc + v.lambda * a.big_r * a.big_r;
            let scales: Vec<f64> = all.into_iter().filter(|&r| r >= reference).collect();
            if scales.len() < 3 {
                rep.push(Check::at_least("decay admissible scales", scales.len() as f64, 3.0, 0.0).with_outcome(Outcome::NotApplicable));
                return finish(&rep, None, Format::Json);
            }
            let fit = fit_decay(&v, &s, a.big_r, &scales)?;
            rep.push(Check::holds("decay bound at every scale", fit.bound_holds()));
            rep.fitted.beta = Some(fit.beta_fit);
            rep.fitted.c = Some(fit.c_fit);
            rep.decay_curve = fit.log_curve();
            rep
        }
        Input::Flow(track) => {
            let last = &track.frames()[track.len() - 1];
            let s = auto_plane(&a, &last.varifold, smallest)?;
            let base = SpaceTimePoint::new(Vector::zeros(track.context.d), track.t_end());
            let q = ParabolicCylinder::new(base.x.clone(), base.t, a.big_r)?;
            let osc = gmtlab_core::brakke::spacetime_oscillation(&track, &s, &q)?;
            let reference = osc + track.lambda_v * a.big_r * a.big_r;
            let scales: Vec<f64> = all.into_iter().filter(|&r| r >= reference).collect();
            let mut rep = VerificationReport::new("decay-fit", Side::Parabolic, prov);
            if scales.len() < 3 {
                rep.push(Check::at_least("decay admissible scales", scales.len() as f64, 3.0, 0.0).with_outcome(Outcome::NotApplicable));
                return finish(&rep, None, Format::Json);
            }
            let dec = parabolic_decay_fit(&track, &s, &base, a.big_r, &scales)?;
            match dec.fit {
                Some(fit) => {
                    rep.push(Check::holds("decay bound at every scale", fit.bound_holds()));
                    rep.fitted.beta = Some(fit.beta_fit);
                    rep.fitted.c = Some(fit.c_fit);
                    rep.decay_curve = fit.log_curve();
                }
                None => rep.push(
                    Check::at_most("decay gaussian density hypothesis", dec.max_gaussian_density, DENSITY_BOUND, 0.0)
                        .with_outcome(dec.outcome),
                ),
            }
            rep
        }
    };
    finish(&rep, None, Format::Json)
}

fn flow_run(a: FlowRun) -> Result<u8> {
    let cfg = load_config(&a.scenario, a.config.as_deref())?;
    let track = scenario_track(&cfg)?;
    save_flow(&track, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} frames to {}", track.len(), a.out.display());
    Ok(0)
}

fn graph_extract(a: GraphExtract) -> Result<u8> {
    let nums = parse_floats(&a.ball, "--ball")?;
    let Some((&radius, centre)) = nums.split_last() else {
        bail!(usage("--ball needs a centre and a radius"));
    };
    let centre = Vector::from_vec(centre.to_vec());
    let prov = provenance(&[("input", a.input.display().to_string()), ("ball", a.ball.clone())]);
    let (rep, csv) = match read_input(&a.input)? {
        Input::Varifold(v) => {
            if centre.len() != v.context.d {
                bail!(usage(format!("--ball centre has {} coordinates, expected {}", centre.len(), v.context.d)));
            }
            let ball = Ball::new(centre, radius)?;
            let s = v.best_fit_plane(&ball)?;
            let g = extract_graph(&v, &ball, &s)?;
            let mut rep = VerificationReport::new("graph-extract", Side::Elliptic, prov);
            rep.push(Check::at_most("graph sheet spread", g.max_spread, g.spread_threshold, 0.0));
            rep.push(Check::at_most("graph holder violations", g.holder_violations() as f64, 0.0, 0.0));
            println!("C^{{1,alpha}} norm {:e} over radius {:e}, {} samples", g.c1alpha_norm, g.domain_radius, g.samples.len());
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            (rep, buf)
        }
        Input::Flow(track) => {
            if centre.len() != track.context.d {
                bail!(usage(format!("--ball centre has {} coordinates, expected {}", centre.len(), track.context.d)));
            }
            let last = &track.frames()[track.len() - 1];
            let s = last.varifold.best_fit_plane(&Ball::new(centre.clone(), radius)?)?;
            let q = ParabolicCylinder::new(centre, track.t_end(), radius)?;
            let g = parabolic_extract_graph(&track, &q, &s)?;
            let mut rep = VerificationReport::new("graph-extract", Side::Parabolic, prov);
            rep.push(Check::at_most("graph sheet spread", g.max_spread, g.spread_threshold, 0.0));
            println!("C^{{1,alpha}} norm {:e} over radius {:e}", g.c1alpha_norm, g.domain_radius);
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            (rep, buf)
        }
    };
    if let Some(out) = &a.out {
        std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    }
    finish(&rep, None, Format::Json)
}
