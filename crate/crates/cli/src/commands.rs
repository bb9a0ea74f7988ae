//! Subcommands and their exit statuses.
//!
//! 0 success, 2 usage or validation, 3 certification or budget failure,
//! 4 materialization cap or a level too small to materialize.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fromage_core::certify::{check_local_unit, check_witness, stout_check};
use fromage_core::{
    build_family, check_conditions, instantiate, plan_cheese, sample_region, Certificate, Cheese,
    CheesePlan, Constants, Error, InstantiateMode, KornerParams, LocalUnit, Point, Region,
    SampleSpec, WitnessPoint, WitnessSpec, DEFAULT_MAX_DISCS,
};
use serde::Serialize;

use crate::schema::{self, SchemaError};
use crate::svg::{self, RenderOptions, Viewport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CERTIFY: u8 = 3;
pub const EXIT_CAP: u8 = 4;

/// Environment variable overriding the demonstration cap.
pub const MAX_DISCS_ENV: &str = "FROMAGE_MAX_DISCS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::CapExceeded { .. } | Error::NotMaterializable { .. })
            | CliError::Schema(SchemaError::Core(
                Error::CapExceeded { .. } | Error::NotMaterializable { .. },
            )) => EXIT_CAP,
            _ => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "fromage",
    version,
    about = "Swiss cheese sets from Körner's pole-ring products"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a cheese with total radius below r and write it as JSON.
    Construct(ConstructArgs),
    /// Certify a Körner family and one local unit.
    Certify(CertifyArgs),
    /// Check the covering criterion at seeded or given points.
    Witness(WitnessArgs),
    /// Evaluate F, or h when --eta is given.
    Eval(EvalArgs),
    /// Render a cheese JSON file as SVG.
    Render(RenderArgs),
    /// Re-export a cheese JSON file in canonical form.
    Export(IoArgs),
    /// Validate a cheese JSON file and print its summary.
    Import(ImportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Symbolic,
    Witness,
    Demo,
}

/// Parameters shared by every command that builds a Körner family.
#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct FamilyArgs {
    /// Upper end of the admissible eps range (0 < alpha < 1/2).
    #[arg(long, default_value_t = fromage_core::korner::DEFAULT_ALPHA, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Pole-disc radius multiplier.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub kappa: f64,
}

impl FamilyArgs {
    fn constants(&self) -> CliResult<Constants> {
        Ok(Constants::standard().with_alpha(self.alpha)?)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long, default_value_t = 20)]
    pub levels: u32,
    #[arg(long, value_enum, default_value_t = Mode::Symbolic)]
    pub mode: Mode,
    /// Witness points `x,y;x,y;...` (witness mode).
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Plan level the witness points refer to.
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    /// Demonstration eps (demo mode; in witness mode, use a demonstration plan).
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Unit center `x,y`.
    #[arg(long, default_value = "0.3,0.2", allow_hyphen_values = true)]
    pub a: String,
    /// Samples per sampled condition.
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct WitnessArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    /// Explicit points `x,y;x,y;...`; otherwise `--count` seeded points.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long, default_value_t = 25)]
    pub count: usize,
    /// Samples of K per witness point.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Power s of the approximated monomial.
    #[arg(long, default_value_t = 5)]
    pub power: u32,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Points `x,y;x,y;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    /// Evaluate h(z) = F(sigma/(z-a)) for this eta instead of F(z).
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub a: String,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// `cx,cy,w`: center and side length of the square window.
    #[arg(long, default_value = "0,0,2.2", allow_hyphen_values = true)]
    pub viewport: String,
    /// Smallest radius drawn; defaults to half a pixel.
    #[arg(long)]
    pub min_radius: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub max_discs: u64,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IoArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Membership queries `x,y;x,y;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

/// What a command produced: the document to write and its exit status.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub output: Option<PathBuf>,
    pub status: u8,
    /// One-line diagnostic for stderr.
    pub message: Option<String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_point(s: &str) -> CliResult<Point> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts.as_slice() else {
        return Err(usage(format!("expected a point `x,y`, got {s:?}")));
    };
    let x: f64 = x
        .parse()
        .map_err(|_| usage(format!("bad coordinate {x:?}")))?;
    let y: f64 = y
        .parse()
        .map_err(|_| usage(format!("bad coordinate {y:?}")))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(usage(format!("non-finite point {s:?}")));
    }
    Ok(Point::new(x, y))
}

pub fn parse_points(s: &str) -> CliResult<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(parse_point)
        .collect()
}

fn parse_viewport(s: &str) -> CliResult<Viewport> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad viewport {s:?}")))?;
    match v.as_slice() {
        [cx, cy, w] if w.is_finite() && *w > 0.0 && cx.is_finite() && cy.is_finite() => {
            Ok(Viewport::new(*cx, *cy, *w))
        }
        _ => Err(usage(format!(
            "viewport must be cx,cy,w with w > 0, got {s:?}"
        ))),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s
}

fn demo_cap() -> CliResult<u64> {
    match std::env::var(MAX_DISCS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            usage(format!(
                "{MAX_DISCS_ENV} must be a nonnegative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_MAX_DISCS),
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, B: Serialize> {
    version: &'static str,
    command: &'static str,
    config: &'a C,
    #[serde(flatten)]
    body: B,
}

fn report<C: Serialize, B: Serialize>(command: &'static str, config: &C, body: B) -> String {
    json(&Report {
        version: schema::SCHEMA_VERSION,
        command,
        config,
        body,
    })
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Construct(a) => run_construct(&a),
        Command::Certify(a) => run_certify(&a),
        Command::Witness(a) => run_witness(&a),
        Command::Eval(a) => run_eval(&a),
        Command::Render(a) => run_render(&a),
        Command::Export(a) => run_export(&a),
        Command::Import(a) => run_import(&a),
    }
}

pub fn run_construct(args: &ConstructArgs) -> CliResult<Outcome> {
    if !(args.r > 0.0 && args.r.is_finite()) {
        return Err(usage(format!("--r must be positive, got {}", args.r)));
    }
    if args.levels == 0 {
        return Err(usage("--levels must be at least 1"));
    }
    let consts = args.family.constants()?;
    let mut plan = plan_cheese(args.r, args.levels, &consts)?;
    plan.kappa = args.family.kappa;
    let demo_params = || -> CliResult<(f64, f64)> {
        match (args.eps, args.eta) {
            (Some(e), Some(h)) => Ok((e, h)),
            _ => Err(usage("this mode needs --eps and --eta")),
        }
    };
    let cheese = match args.mode {
        Mode::Symbolic => instantiate(&plan, &InstantiateMode::Symbolic)?,
        Mode::Witness => {
            let pts = args
                .points
                .as_deref()
                .ok_or_else(|| usage("witness mode needs --points"))?;
            let wanted = parse_points(pts)?
                .into_iter()
                .map(|x| WitnessPoint {
                    x,
                    level: args.level,
                })
                .collect();
            if args.eps.is_some() || args.eta.is_some() {
                let (e, h) = demo_params()?;
                let mut demo = CheesePlan::demonstration(e, h, &consts)?;
                demo.kappa = args.family.kappa;
                instantiate(&demo, &InstantiateMode::Witness(wanted))?
            } else {
                instantiate(&plan, &InstantiateMode::Witness(wanted))?
            }
        }
        Mode::Demo => {
            let (eps, eta) = demo_params()?;
            instantiate(
                &plan,
                &InstantiateMode::Demonstration {
                    eps,
                    eta,
                    cap: demo_cap()?,
                },
            )?
        }
    };
    let doc = schema::export(&cheese, &consts, args.family.kappa);
    let bound = cheese.total_radius_bound();
    let ok = bound < args.r;
    Ok(Outcome {
        body: schema::to_json(&doc),
        output: args.output.clone(),
        status: if ok { EXIT_OK } else { EXIT_CERTIFY },
        message: (!ok).then(|| {
            format!(
                "certified radius bound {bound:e} is not below r = {}",
                args.r
            )
        }),
    })
}

#[derive(Serialize)]
struct CertifyConfig<'a> {
    #[serde(flatten)]
    args: &'a CertifyArgs,
    m: u32,
    n_max: u32,
    constants: Constants,
}

#[derive(Serialize)]
struct CertifyBody {
    certificates: Vec<Certificate>,
    overall: bool,
}

pub fn run_certify(args: &CertifyArgs) -> CliResult<Outcome> {
    if args.grid == 0 {
        return Err(usage("--grid must be at least 1"));
    }
    let consts = args.family.constants()?;
    let a = parse_point(&args.a)?;
    let fam = build_family(
        KornerParams::new(args.eps)
            .with_alpha(args.family.alpha)
            .with_kappa(args.family.kappa),
    )?;
    let spec = SampleSpec::new(
        args.grid,
        args.seed,
        Region::disc(Point::new(0.0, 0.0), 1.0),
    );
    let conditions = check_conditions(&fam, &consts, &spec)?;
    let unit = LocalUnit::from_family(Arc::new(fam.clone()), args.eta, a, &consts)?;
    let unit_spec = spec
        .with_region(Region::disc(a, 2.0))
        .with_margin(10.0 * f64::EPSILON * unit.sigma());
    let unit_cert = check_local_unit(&unit, &unit_spec)?;
    let overall = conditions.overall && unit_cert.overall;
    let failed: Vec<String> = conditions
        .failures()
        .chain(unit_cert.failures())
        .map(|e| e.id.clone())
        .collect();
    let config = CertifyConfig {
        args,
        m: fam.m,
        n_max: fam.n_max,
        constants: consts,
    };
    Ok(Outcome {
        body: report(
            "certify",
            &config,
            CertifyBody {
                certificates: vec![conditions, unit_cert],
                overall,
            },
        ),
        output: args.output.clone(),
        status: if overall { EXIT_OK } else { EXIT_CERTIFY },
        message: (!overall).then(|| format!("failed entries: {}", failed.join(", "))),
    })
}

pub fn run_witness(args: &WitnessArgs) -> CliResult<Outcome> {
    if args.grid == 0 || args.power == 0 {
        return Err(usage("--grid and --power must be at least 1"));
    }
    let consts = args.family.constants()?;
    let mut plan = CheesePlan::demonstration(args.eps, args.eta, &consts)?;
    plan.kappa = args.family.kappa;
    let xs = match &args.points {
        Some(p) => parse_points(p)?,
        None => {
            if args.count == 0 {
                return Err(usage("--count must be at least 1"));
            }
            let spec = SampleSpec::new(
                args.count,
                args.seed,
                Region::disc(Point::new(0.0, 0.0), 1.0),
            );
            sample_region(&spec, |_| true)?
        }
    };
    let wanted: Vec<WitnessPoint> = xs.iter().map(|&x| WitnessPoint { x, level: 1 }).collect();
    let cheese = instantiate(&plan, &InstantiateMode::Witness(wanted))?;
    let mut certs = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let spec = SampleSpec::new(
            args.grid,
            args.seed,
            Region::disc(Point::new(0.0, 0.0), 1.0),
        )
        .substream(100 + i as u64);
        certs.push(check_witness(
            &cheese,
            &WitnessSpec::with_power(x, 1, args.power),
            &spec,
        )?);
    }
    let overall = certs.iter().all(|c| c.overall);
    let failed = certs.iter().filter(|c| !c.overall).count();
    Ok(Outcome {
        body: report(
            "witness",
            args,
            CertifyBody {
                certificates: certs,
                overall,
            },
        ),
        output: args.output.clone(),
        status: if overall { EXIT_OK } else { EXIT_CERTIFY },
        message: (!overall).then(|| format!("{failed} witness certificates failed")),
    })
}

#[derive(Serialize)]
struct EvalRecord {
    z: schema::PointRecord,
    value: Option<schema::PointRecord>,
    /// `None` when no finite bound is available.
    error_bound: Option<f64>,
    status: Option<fromage_core::EvalStatus>,
    error: Option<String>,
}

#[derive(Serialize)]
struct EvalBody {
    sigma: Option<f64>,
    values: Vec<EvalRecord>,
}

pub fn run_eval(args: &EvalArgs) -> CliResult<Outcome> {
    let consts = args.family.constants()?;
    let zs = parse_points(&args.z)?;
    if zs.is_empty() {
        return Err(usage("--z needs at least one point"));
    }
    let mut params = KornerParams::new(args.eps)
        .with_alpha(args.family.alpha)
        .with_kappa(args.family.kappa);
    if let Some(n) = args.n_max {
        params = params.with_n_max(n);
    }
    let fam = Arc::new(build_family(params)?);
    let unit = match args.eta {
        None => None,
        Some(eta) => Some(LocalUnit::from_family(
            fam.clone(),
            eta,
            parse_point(&args.a)?,
            &consts,
        )?),
    };
    let values: Vec<EvalRecord> = zs
        .iter()
        .map(|&z| {
            let r = match &unit {
                Some(u) => u.eval_h(z),
                None => fam.eval(z),
            };
            match r {
                Ok(e) => EvalRecord {
                    z: z.into(),
                    value: Some(e.value.into()),
                    error_bound: e.error_bound.is_finite().then_some(e.error_bound),
                    status: Some(e.status),
                    error: None,
                },
                Err(err) => EvalRecord {
                    z: z.into(),
                    value: None,
                    error_bound: None,
                    status: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    let sigma = unit.as_ref().map(LocalUnit::sigma);
    let failed = values.iter().filter(|v| v.error.is_some()).count();
    Ok(Outcome {
        body: report("eval", args, EvalBody { sigma, values }),
        output: args.output.clone(),
        status: if failed == 0 { EXIT_OK } else { EXIT_USAGE },
        message: (failed > 0).then(|| format!("{failed} points could not be evaluated")),
    })
}

fn load(path: &Path) -> CliResult<Cheese> {
    Ok(schema::import_str(&read(path)?)?)
}

pub fn run_render(args: &RenderArgs) -> CliResult<Outcome> {
    let cheese = load(&args.input)?;
    let viewport = parse_viewport(&args.viewport)?;
    let mut opts = RenderOptions::new(viewport);
    if let Some(r) = args.min_radius {
        if !(r >= 0.0) {
            return Err(usage("--min-radius must be nonnegative"));
        }
        opts.min_radius = r;
    }
    opts.max_discs = args.max_discs;
    let header = format!(
        "fromage render input={} viewport={} min_radius={:e} max_discs={}",
        args.input.display(),
        args.viewport,
        opts.min_radius,
        opts.max_discs
    );
    let (body, _) = svg::render(&cheese, &opts, &header);
    Ok(Outcome {
        body,
        output: args.output.clone(),
        status: EXIT_OK,
        message: None,
    })
}

pub fn run_export(args: &IoArgs) -> CliResult<Outcome> {
    let text = read(&args.input)?;
    let doc = schema::parse(&text)?;
    let cheese = schema::import(&doc)?;
    let consts = doc.config.constants()?;
    let out = schema::export(&cheese, &consts, doc.config.kappa);
    Ok(Outcome {
        body: schema::to_json(&out),
        output: args.output.clone(),
        status: EXIT_OK,
        message: None,
    })
}

#[derive(Serialize)]
struct ImportBody {
    plans: usize,
    levels: usize,
    units: usize,
    extra_discs: usize,
    materialized_discs: String,
    total_radius_bound: f64,
    stout: Certificate,
    membership: Vec<(schema::PointRecord, bool)>,
}

pub fn run_import(args: &ImportArgs) -> CliResult<Outcome> {
    let cheese = load(&args.input)?;
    let pts = match &args.points {
        Some(p) => parse_points(p)?,
        None => Vec::new(),
    };
    let bound = cheese.total_radius_bound();
    let body = ImportBody {
        plans: cheese.plans().len(),
        levels: cheese.plans().iter().map(|p| p.levels.len()).sum(),
        units: cheese.units().len(),
        extra_discs: cheese.extra_discs().len(),
        materialized_discs: cheese.disc_count().to_string(),
        total_radius_bound: bound,
        stout: stout_check(&cheese, 1.0),
        membership: pts
            .iter()
            .map(|&p| (p.into(), cheese.contains(p)))
            .collect(),
    };
    Ok(Outcome {
        body: report("import", args, body),
        output: args.output.clone(),
        status: EXIT_OK,
        message: None,
    })
}

/// Write the outcome and report; returns the process exit status.
pub fn finish(outcome: CliResult<Outcome>) -> u8 {
    match outcome {
        Ok(o) => {
            let written = match &o.output {
                Some(path) => fs::write(path, &o.body).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                }),
                None => {
                    print!("{}", o.body);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            if let Some(m) = o.message {
                eprintln!("fromage: {m}");
            }
            o.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
