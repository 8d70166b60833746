use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlpnet::bench::{self, BenchConfig};
use mlpnet::format::{self, ActivationSpec, ProvenanceFile};
use mlpnet::par::{self, Parallel, THREADS_ENV};
use mlpnet::verify::{self, Suite};
use mlpnet::csvio;
use mlpnet_core::calculus::identity_net;
use mlpnet_core::compiler::{compile_fixed_time, compile_space_time};
use mlpnet_core::gadgets::{self, GadgetBudget, HatSpec};
use mlpnet_core::mlp::{mlp_estimate_with, MlpParams, MultiIndex, RandomField};
use mlpnet_core::problem::{Nonlinearity, ProblemSpec, TerminalData};
use mlpnet_core::schedule::{compute_schedule, CdMethod, MRule};
use mlpnet_core::{Activation, Network};
use serde::Serialize;

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

/// Explicit networks for multilevel Picard approximations of semilinear heat
/// equations.
#[derive(Parser, Debug)]
#[command(name = "mlpnet", version)]
struct Cli {
    /// Worker threads; defaults to the MLPNET_THREADS variable, then to the core count.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a hat network on knots t0 < t1 < t2.
    BuildHat(HatArgs),
    /// Build the product gadget (v, w) -> v w.
    BuildProduct(GadgetArgs),
    /// Build the square gadget x -> x^2.
    BuildSquare(GadgetArgs),
    /// Run the multilevel Picard estimator directly.
    SolveMlp(SolveArgs),
    /// Compile the estimator into a network file plus a provenance sidecar.
    Compile(CompileArgs),
    /// Evaluate a network file at points.
    Eval(EvalArgs),
    /// Run verification suites and print a JSON report.
    Verify(VerifyArgs),
    /// Benchmarks.
    Bench(BenchArgs),
    /// Schedule constants, levels and tolerances for an accuracy.
    Schedule(ScheduleArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ActKind {
    Relu,
    Leaky,
    Softplus,
}

#[derive(Args, Debug, Clone, Copy)]
struct ActArgs {
    /// Activation family.
    #[arg(long, value_enum, default_value = "leaky")]
    activation: ActKind,
    /// Leaky slope; given alone it selects the leaky activation.
    #[arg(long)]
    alpha: Option<f64>,
}

impl ActArgs {
    fn resolve(&self) -> Fallible<Activation> {
        Ok(match (self.activation, self.alpha) {
            (ActKind::Relu, None) => Activation::Relu,
            (ActKind::Softplus, None) => Activation::Softplus,
            (ActKind::Leaky, a) => Activation::leaky(a.unwrap_or(0.5))?,
            (_, Some(_)) => return Err("--alpha applies to the leaky activation only".into()),
        })
    }
}

#[derive(Args, Debug)]
struct HatArgs {
    #[arg(long, allow_hyphen_values = true)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long, allow_hyphen_values = true)]
    t2: f64,
    #[command(flatten)]
    act: ActArgs,
    /// Accuracy of the softplus approximation.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Growth exponent of the softplus accuracy envelope.
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GadgetArgs {
    /// Accuracy: error at most eps * max{1, |input|^q}.
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    #[command(flatten)]
    act: ActArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Nonlinearity: zero | linear:C | sine | net:FILE.
    #[arg(long, default_value = "linear:1")]
    f: String,
    /// Terminal data: gauss[:A] | ridge[:A] | const:C | net:FILE.
    #[arg(long, default_value = "gauss")]
    g: String,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    n: u32,
    #[arg(long = "M")]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// Spatial point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Fixed,
    Spacetime,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    n: u32,
    #[arg(long = "M")]
    m: u32,
    /// Time of the fixed-time network.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// Time grid size of the space-time network.
    #[arg(long = "K", default_value_t = 4)]
    k: usize,
    /// Product and hat accuracy of the space-time network.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    #[command(flatten)]
    act: ActArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half-width of the interval on which profiles are tabulated.
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    /// Tabulation knots of profiles.
    #[arg(long, default_value_t = 121)]
    knots: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    net: PathBuf,
    /// CSV file of input points, header optional.
    #[arg(long, conflicts_with = "at")]
    points: Option<PathBuf>,
    /// A single input point, comma separated.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    at: Vec<f64>,
    /// Output CSV; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SuiteArg {
    All,
    Calculus,
    Gadgets,
    Compiler,
    Pde,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(subcommand)]
    kind: BenchKind,
}

#[derive(Subcommand, Debug)]
enum BenchKind {
    /// Parameter count against dimension.
    Cod(CodArgs),
}

#[derive(Args, Debug)]
struct CodArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long = "M", default_value_t = 2)]
    m: u32,
    #[arg(long = "K", default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points for the L2 error column; 0 skips it.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Write zeros in the timing columns so output is reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    /// Exponent of the error norm.
    #[arg(long, default_value_t = 2.0)]
    qnorm: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Sample count rule: linear | power:E | scaled:C.
    #[arg(long, default_value = "linear")]
    rule: String,
    /// Moment constant: bound | mc:SAMPLES.
    #[arg(long, default_value = "bound")]
    cd: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_kv(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn parse_num(v: Option<&str>, default: Option<f64>, what: &str) -> Fallible<f64> {
    match (v, default) {
        (Some(v), _) => v.parse().map_err(|_| format!("{what}: cannot parse {v:?}").into()),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(format!("{what} needs a value").into()),
    }
}

fn load_scalar_net(path: &str, act: Option<Activation>) -> Fallible<(Network, Activation)> {
    let (net, a) = format::load_network(Path::new(path))?;
    if let Some(act) = act {
        if act != a {
            return Err(format!("{path} uses {a}, expected {act}").into());
        }
    }
    Ok((net, a))
}

fn parse_f(s: &str, act: Option<Activation>) -> Fallible<Nonlinearity> {
    let (k, v) = parse_kv(s);
    Ok(match k {
        "zero" => Nonlinearity::Zero,
        "linear" => Nonlinearity::Linear { c: parse_num(v, Some(1.0), "linear")? },
        "sine" => Nonlinearity::Sine,
        "net" => {
            let (net, act) = load_scalar_net(v.ok_or("net needs a file")?, act)?;
            Nonlinearity::Network { net, act }
        }
        _ => return Err(format!("unknown nonlinearity {s:?}").into()),
    })
}

fn parse_g(s: &str, act: Option<Activation>) -> Fallible<TerminalData> {
    let (k, v) = parse_kv(s);
    Ok(match k {
        "gauss" => TerminalData::GaussianBump { a: parse_num(v, Some(1.0), "gauss")? },
        "ridge" => TerminalData::Ridge { a: parse_num(v, Some(1.0), "ridge")? },
        "const" => TerminalData::Constant { c: parse_num(v, None, "const")? },
        "net" => {
            let (net, act) = load_scalar_net(v.ok_or("net needs a file")?, act)?;
            TerminalData::Network { net, act }
        }
        _ => return Err(format!("unknown terminal data {s:?}").into()),
    })
}

fn parse_rule(s: &str) -> Fallible<MRule> {
    let (k, v) = parse_kv(s);
    Ok(match k {
        "linear" => MRule::Linear,
        "power" => MRule::Power { e: parse_num(v, None, "power")? },
        "scaled" => MRule::Scaled { c: v.ok_or("scaled needs a value")?.parse()? },
        _ => return Err(format!("unknown sample rule {s:?}").into()),
    })
}

fn print_json<T: Serialize>(value: &T) -> Fallible<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", format::to_json_string(value)?)?;
    Ok(())
}

#[derive(Serialize)]
struct BuildReport {
    out: String,
    activation: ActivationSpec,
    widths: Vec<usize>,
    depth: usize,
    param_count: u64,
}

fn save_and_report(net: &Network, act: Activation, out: &Path) -> Fallible<()> {
    format::save_network(out, net, act)?;
    print_json(&BuildReport {
        out: out.display().to_string(),
        activation: ActivationSpec::from_activation(act),
        widths: net.widths(),
        depth: net.depth(),
        param_count: net.param_count(),
    })
}

fn build_hat(a: &HatArgs) -> Fallible<()> {
    let act = a.act.resolve()?;
    let net = gadgets::hat_net(&HatSpec::new(a.t0, a.t1, a.t2)?, act, a.eps, a.q)?;
    save_and_report(&net, act, &a.out)
}

fn build_gadget(a: &GadgetArgs, product: bool) -> Fallible<()> {
    let act = a.act.resolve()?;
    let budget = GadgetBudget::new(a.eps, a.q)?;
    let net = if product { gadgets::product_net(&budget, act)? } else { gadgets::square_net(&budget, act)? };
    save_and_report(&net, act, &a.out)
}

#[derive(Serialize)]
struct SolveParams {
    d: usize,
    n: u32,
    #[serde(rename = "M")]
    m: u32,
    #[serde(rename = "T")]
    horizon: f64,
    t: f64,
    x: Vec<f64>,
    f: String,
    g: String,
    seed: u64,
}

#[derive(Serialize)]
struct SolveReport {
    estimate: f64,
    params: SolveParams,
    wall_time: f64,
}

fn solve_mlp(a: &SolveArgs) -> Fallible<()> {
    let p = &a.problem;
    let f = parse_f(&p.f, None)?;
    let g = parse_g(&p.g, None)?;
    let x = if a.x.is_empty() { vec![0.0; p.d] } else { a.x.clone() };
    let params = MlpParams { n: a.n, m: a.m, horizon: p.horizon, t: a.t, d: p.d };
    let field = RandomField::new(a.seed, p.d, p.horizon);
    let gf = |y: &[f64]| g.eval(y);
    let ff = |u: f64| f.eval(u);
    let start = Instant::now();
    let estimate = mlp_estimate_with(&params, &x, &gf, &ff, &field, &MultiIndex::root(), &Parallel)?;
    let wall_time = start.elapsed().as_secs_f64();
    print_json(&SolveReport {
        estimate,
        params: SolveParams {
            d: p.d,
            n: a.n,
            m: a.m,
            horizon: p.horizon,
            t: a.t,
            x,
            f: p.f.clone(),
            g: p.g.clone(),
            seed: a.seed,
        },
        wall_time,
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn compile(a: &CompileArgs) -> Fallible<()> {
    let act = a.act.resolve()?;
    let p = &a.problem;
    let spec = ProblemSpec::new(p.d, p.horizon, parse_f(&p.f, Some(act))?, parse_g(&p.g, Some(act))?);
    spec.validate()?;
    let tol = 0.1 * a.gamma;
    let g = spec.g.network(p.d, act, tol, a.radius, a.knots)?;
    let f = spec.f.network(act, tol, a.radius, a.knots)?;
    let j = identity_net(act)?;
    let field = RandomField::new(a.seed, p.d, p.horizon);
    let theta = MultiIndex::root();
    let (net, prov) = match a.mode {
        Mode::Fixed => {
            let params = MlpParams { n: a.n, m: a.m, horizon: p.horizon, t: a.t, d: p.d };
            let c = compile_fixed_time(&params, &theta, &g, &f, &j, act, &field)?;
            let prov = ProvenanceFile::new("fixed", &c.provenance, &c.net);
            (c.net, prov)
        }
        Mode::Spacetime => {
            let params = MlpParams { n: a.n, m: a.m, horizon: p.horizon, t: 0.0, d: p.d };
            let c = compile_space_time(&params, a.k, a.gamma, a.q, &theta, &g, &f, &j, act, &field)?;
            let mut prov = ProvenanceFile::new("spacetime", &c.provenance, &c.net);
            prov.grid_size = Some(c.k);
            prov.gamma = Some(c.gamma);
            prov.q = Some(c.q);
            (c.net, prov)
        }
    };
    format::save_network(&a.out, &net, act)?;
    format::write_json(&sidecar_path(&a.out), &prov)?;
    print_json(&prov)
}

fn eval(a: &EvalArgs) -> Fallible<()> {
    let (net, act) = format::load_network(&a.net)?;
    let points = match (&a.points, a.at.is_empty()) {
        (Some(path), _) => csvio::read_points(File::open(path)?)?,
        (None, false) => vec![a.at.clone()],
        (None, true) => return Err("give --points FILE or --at X".into()),
    };
    if net.output_dim() != 1 {
        return Err("eval needs a scalar-output network".into());
    }
    if let Some(p) = points.iter().find(|p| p.len() != net.input_dim()) {
        return Err(format!("point has {} coordinates, network expects {}", p.len(), net.input_dim()).into());
    }
    let values = par::realize_points(&net, act, &points)?;
    match &a.out {
        Some(path) => csvio::write_evaluations(BufWriter::new(File::create(path)?), &points, &values)?,
        None => csvio::write_evaluations(io::stdout().lock(), &points, &values)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    seed: u64,
    suites: Vec<verify::SuiteReport>,
}

fn run_verify(a: &VerifyArgs) -> Fallible<bool> {
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Calculus => vec![Suite::Calculus],
        SuiteArg::Gadgets => vec![Suite::Gadgets],
        SuiteArg::Compiler => vec![Suite::Compiler],
        SuiteArg::Pde => vec![Suite::Pde],
    };
    let reports: Vec<_> = suites.into_iter().map(|s| verify::run_suite(s, a.seed)).collect();
    let report = VerifyReport { passed: reports.iter().all(|r| r.passed), seed: a.seed, suites: reports };
    if let Some(path) = &a.out {
        format::write_json(path, &report)?;
    }
    print_json(&report)?;
    Ok(report.passed)
}

fn bench_cod(a: &CodArgs) -> Fallible<()> {
    let cfg = BenchConfig {
        n: a.n,
        m: a.m,
        k: a.k,
        gamma: a.gamma,
        seed: a.seed,
        error_samples: a.samples,
        timing: !a.no_timing,
        ..BenchConfig::default()
    };
    let rows = bench::cod_benchmark(&a.dims, &cfg)?;
    match &a.out {
        Some(path) => bench::write_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => bench::write_csv(&rows, io::stdout().lock())?,
    }
    if rows.len() >= 2 {
        eprintln!("log-log slope of parameters against d: {:.4}", bench::param_slope(&rows));
    }
    Ok(())
}

#[derive(Serialize)]
struct ScheduleReport {
    eps: f64,
    d: usize,
    #[serde(rename = "L")]
    lipschitz: f64,
    #[serde(rename = "T")]
    horizon: f64,
    p: f64,
    q: f64,
    qnorm: f64,
    kappa: f64,
    r: f64,
    rule: String,
    cd_method: String,
    n_eps: Option<u32>,
    n_eps_lemma: Option<u32>,
    k_eps: u64,
    a: f64,
    b: f64,
    c: f64,
    c_d: f64,
    delta: f64,
    gamma: f64,
    ln_delta: f64,
    ln_gamma: f64,
    seed: u64,
}

fn schedule(a: &ScheduleArgs) -> Fallible<()> {
    let mut spec = ProblemSpec::new(a.d, a.horizon, Nonlinearity::Zero, TerminalData::GaussianBump { a: 1.0 });
    spec.lipschitz = a.lipschitz;
    spec.p = a.p;
    spec.q = a.q;
    spec.qnorm = a.qnorm;
    spec.kappa = a.kappa;
    spec.r = a.r;
    spec.validate()?;
    let rule = parse_rule(&a.rule)?;
    let method = match parse_kv(&a.cd) {
        ("bound", None) => CdMethod::Bound,
        ("mc", v) => CdMethod::MonteCarlo { samples: parse_num(v, Some(10_000.0), "mc")? as u32, seed: a.seed },
        _ => return Err(format!("unknown moment method {:?}", a.cd).into()),
    };
    let s = compute_schedule(&spec, a.eps, rule, method)?;
    print_json(&ScheduleReport {
        eps: a.eps,
        d: a.d,
        lipschitz: a.lipschitz,
        horizon: a.horizon,
        p: a.p,
        q: a.q,
        qnorm: a.qnorm,
        kappa: a.kappa,
        r: a.r,
        rule: a.rule.clone(),
        cd_method: a.cd.clone(),
        n_eps: s.n_eps,
        n_eps_lemma: s.n_eps_lemma,
        k_eps: s.k_eps,
        a: s.a,
        b: s.b,
        c: s.c,
        c_d: s.c_d,
        delta: s.delta,
        gamma: s.gamma,
        ln_delta: s.ln_delta,
        ln_gamma: s.ln_gamma,
        seed: a.seed,
    })
}

fn dispatch(cli: &Cli) -> Fallible<bool> {
    match &cli.command {
        Command::BuildHat(a) => build_hat(a)?,
        Command::BuildProduct(a) => build_gadget(a, true)?,
        Command::BuildSquare(a) => build_gadget(a, false)?,
        Command::SolveMlp(a) => solve_mlp(a)?,
        Command::Compile(a) => compile(a)?,
        Command::Eval(a) => eval(a)?,
        Command::Verify(a) => return run_verify(a),
        Command::Bench(b) => match &b.kind {
            BenchKind::Cod(a) => bench_cod(a)?,
        },
        Command::Schedule(a) => schedule(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::init_threads(cli.threads);
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
