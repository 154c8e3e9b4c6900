use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hconvex_core::convexify::{plane_envelope_point, ConvexCombination, Growth, WindowSpec};
use hconvex_core::corpus::{self, ReproduceConfig};
use hconvex_core::differential::{grid_hconvexity_scan, hconvexity_scan, ConvexityReport, ScanConfig, Verdict, DEFAULT_STEP};
use hconvex_core::envelope::{
    apply_s_with, box_span, iterate_envelope, obstacle_residual, EnvelopeConfig, ObstacleConfig, DEFAULT_PROBE_RINGS,
};
use hconvex_core::fields::{sample_to_grid_with, FillMode, GridBox, GridField, ScalarField};
use hconvex_core::{Point, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, Result, EXIT_FAIL, EXIT_USAGE};
use crate::exec::Parallel;
use crate::gridio::{write_grid, write_sidecar, Encoding, GridHeader};
use crate::source::{load_equation, load_field, FieldSource};

#[derive(Parser, Debug)]
#[command(name = "hconvex", version, about = "Horizontal convex envelopes on the Heisenberg group")]
pub struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Iterate the convexification operator to the envelope.
    Envelope(EnvelopeArgs),
    /// One application of the convexification operator.
    SApply(SApplyArgs),
    /// Sampled h-convexity test (exit 0 when no violation is found).
    CheckHconvex(CheckArgs),
    /// Residual of an equation at random points.
    PdeResidual(PdeArgs),
    /// Run every expected fact of a corpus entry.
    Reproduce(ReproduceArgs),
    /// Corpus utilities.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusCommand {
    List,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Box as `cx,cy,cz,hx,hy,hz`.
    #[arg(long = "box", value_parser = parse_box, default_value = "0,0,0,2,2,2")]
    pub bbox: GridBox,
    /// Nodes per axis: `n` or `nx,ny,nz`.
    #[arg(long, value_parser = parse_resolution, default_value = "41")]
    pub res: [usize; 3],
    /// Plane window as `radius,samples`.
    #[arg(long, value_parser = parse_window, default_value = "4,41")]
    pub window: WindowSpec,
    #[arg(long, value_enum, default_value = "left")]
    pub side: SideArg,
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    /// Corpus id (`id`, `id:rhs`, `id:reference`) or a field file.
    #[arg(long)]
    pub field: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Report path; the final grid goes to a sidecar next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub encoding: Encoding,
}

#[derive(Args, Debug)]
pub struct SApplyArgs {
    #[arg(long)]
    pub field: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub encoding: Encoding,
    /// Points (JSON `[[x,y,z],..]` or `x,y,z` lines) whose optimal
    /// combinations are dumped to stdout.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub field: String,
    /// Sampling region as `cx,cy,cz,hx,hy,hz`.
    #[arg(long, value_parser = parse_box, default_value = "0,0,0,2,2,2")]
    pub region: GridBox,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Largest horizontal displacement in the midpoint test.
    #[arg(long, default_value_t = 0.5)]
    pub h_radius: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "left")]
    pub side: SideArg,
}

#[derive(Args, Debug)]
pub struct PdeArgs {
    /// Equation spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub solution: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, value_parser = parse_box, default_value = "0,0,0,2,2,2")]
    pub region: GridBox,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    pub id: String,
    /// JSON config; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_box(s: &str) -> std::result::Result<GridBox, String> {
    let v = floats(s, 6)?;
    let b = GridBox::new(Point::new(v[0], v[1], v[2]), [v[3], v[4], v[5]]);
    b.validate().map_err(|e| e.to_string())?;
    Ok(b)
}

fn parse_resolution(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let r = match v[..] {
        [n] => [n; 3],
        [a, b, c] => [a, b, c],
        _ => return Err("expected `n` or `nx,ny,nz`".into()),
    };
    if r.iter().any(|&n| n < 3 || n % 2 == 0) {
        return Err("resolution must be odd and at least 3".into());
    }
    Ok(r)
}

fn parse_window(s: &str) -> std::result::Result<WindowSpec, String> {
    let v = floats(s, 2)?;
    if v[1].fract() != 0.0 || v[1] < 0.0 {
        return Err("sample count must be a non-negative integer".into());
    }
    WindowSpec::new(v[0], v[1] as usize).map_err(|e| e.to_string())
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::json("output"))?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(CliError::io(p)),
        None => writeln!(stdout, "{text}").map_err(CliError::io("<stdout>")),
    }
}

fn grid_header(g: &GridField, out: Option<&Path>, enc: Encoding) -> Result<GridHeader> {
    match out {
        Some(p) => write_sidecar(p, g, enc),
        None => Ok(GridHeader::inline(g)),
    }
}

#[derive(Serialize)]
struct EnvelopeOutput {
    iterations: usize,
    passes: usize,
    sup_deltas: Vec<f64>,
    max_increase: f64,
    converged: bool,
    obstacle_residual: f64,
    #[serde(rename = "final")]
    final_grid: GridHeader,
}

fn cmd_envelope(a: &EnvelopeArgs, exec: &Parallel, stdout: &mut dyn Write) -> Result<i32> {
    let src = match load_field(&a.field)? {
        FieldSource::Analytic(f) => f,
        FieldSource::Grid(_) => return Err(CliError::Usage("envelope needs an analytic field, not a grid".into())),
    };
    let cfg = EnvelopeConfig {
        bbox: a.grid.bbox,
        resolution: a.grid.res,
        window: a.grid.window,
        side: a.grid.side.into(),
        tol: a.tol,
        max_iter: a.max_iter,
        ..EnvelopeConfig::default()
    };
    let report = iterate_envelope(&*src, &cfg, exec)?;
    let obstacle = obstacle_residual(&report.final_grid, &*src, &ObstacleConfig { side: cfg.side, ..ObstacleConfig::default() });
    let out = EnvelopeOutput {
        iterations: report.iterations,
        passes: report.passes(),
        sup_deltas: report.sup_deltas.clone(),
        max_increase: report.max_increase,
        converged: report.converged,
        obstacle_residual: obstacle.residual,
        final_grid: grid_header(&report.final_grid, a.out.as_deref(), a.encoding)?,
    };
    emit(&out, a.out.as_deref(), stdout)?;
    Ok(0)
}

#[derive(Serialize)]
struct TraceEntry {
    point: Point,
    combination: ConvexCombination,
}

#[derive(Serialize)]
struct SApplyOutput {
    grid: GridHeader,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceEntry>>,
}

fn read_points(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    if text.trim_start().starts_with('[') {
        let rows: Vec<[f64; 3]> = serde_json::from_str(&text).map_err(CliError::json(path.display().to_string()))?;
        return Ok(rows.into_iter().map(Point::from).collect());
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v = floats(l, 3).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
            Ok(Point::new(v[0], v[1], v[2]))
        })
        .collect()
}

fn cmd_s_apply(a: &SApplyArgs, exec: &Parallel, stdout: &mut dyn Write) -> Result<i32> {
    let side: Side = a.grid.side.into();
    let w = a.grid.window;
    let src = load_field(&a.field)?;
    // A sampled analytic field is exact outside the box; a stored grid is not.
    let (next, traced) = match &src {
        FieldSource::Analytic(f) => {
            let g = sample_to_grid_with(&**f, a.grid.bbox, a.grid.res, FillMode::Source)?;
            let next = apply_s_with(&g, &w, side, Some(&**f), Growth::Probe(DEFAULT_PROBE_RINGS), exec)?;
            (next, f.clone() as std::sync::Arc<dyn ScalarField>)
        }
        FieldSource::Grid(g) => {
            let next = apply_s_with(g, &w, side, None, Growth::Capped(box_span(&g.bbox).max(w.radius)), exec)?;
            (next, std::sync::Arc::new(g.clone()) as std::sync::Arc<dyn ScalarField>)
        }
    };
    let trace = match &a.trace {
        Some(path) => Some(
            read_points(path)?
                .into_iter()
                .map(|p| Ok(TraceEntry { point: p, combination: plane_envelope_point(&*traced, side, p, &w, Growth::default())? }))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    match &a.out {
        Some(p) => {
            write_grid(p, &next, a.encoding)?;
            if let Some(t) = trace {
                emit(&t, None, stdout)?;
            }
        }
        None => emit(&SApplyOutput { grid: GridHeader::inline(&next), trace }, None, stdout)?,
    }
    Ok(0)
}

fn cmd_check(a: &CheckArgs, stdout: &mut dyn Write) -> Result<i32> {
    let side: Side = a.side.into();
    let report: ConvexityReport = match load_field(&a.field)? {
        FieldSource::Analytic(f) => {
            let cfg = ScanConfig { h_radius: a.h_radius, n_samples: a.samples, tol: a.tol, step: a.step, seed: a.seed, side };
            hconvexity_scan(&*f, a.region, &cfg)
        }
        FieldSource::Grid(g) => grid_hconvexity_scan(&g, side, 2, 1, a.tol),
    };
    emit(&report, None, stdout)?;
    Ok(if report.verdict == Verdict::Pass { 0 } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct ResidualOutput {
    kind: &'static str,
    samples: usize,
    max_abs_residual: f64,
    mean_abs_residual: f64,
    worst_point: Point,
    tolerance: f64,
    passed: bool,
}

fn cmd_pde(a: &PdeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let eq = load_equation(&a.spec)?;
    let u = load_field(&a.solution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst = (0.0f64, a.region.center);
    let mut total = 0.0;
    let n = a.samples.max(1);
    for _ in 0..n {
        let p = a.region.sample(&mut rng);
        let r = eq.residual_at(u.as_field(), p, a.step).abs();
        if !r.is_finite() {
            return Err(CliError::Core(hconvex_core::Error::NonFinite("residual")));
        }
        total += r;
        if r > worst.0 {
            worst = (r, p);
        }
    }
    let out = ResidualOutput {
        kind: eq.kind(),
        samples: n,
        max_abs_residual: worst.0,
        mean_abs_residual: total / n as f64,
        worst_point: worst.1,
        tolerance: a.tol,
        passed: worst.0 <= a.tol,
    };
    emit(&out, None, stdout)?;
    Ok(if out.passed { 0 } else { EXIT_FAIL })
}

fn cmd_reproduce(a: &ReproduceArgs, exec: &Parallel, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if !corpus::IDS.contains(&a.id.as_str()) {
        return Err(CliError::Usage(format!("unknown corpus id `{}`", a.id)));
    }
    let cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            serde_json::from_str::<ReproduceConfig>(&text).map_err(CliError::json(p.display().to_string()))?
        }
        None => ReproduceConfig::default(),
    };
    let report = corpus::reproduce(&a.id, &cfg, exec)?;
    emit(&report, a.out.as_deref(), stdout)?;
    match report.first_failure() {
        None => Ok(0),
        Some(f) => {
            let _ = writeln!(stderr, "fact `{}` failed: observed {:e}, expected {}", f.name, f.observed, f.expected);
            Ok(EXIT_FAIL)
        }
    }
}

#[derive(Serialize)]
struct Listed {
    id: &'static str,
    description: &'static str,
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let exec = || Parallel::new(cli.threads);
    match &cli.command {
        Command::Envelope(a) => cmd_envelope(a, &exec()?, stdout),
        Command::SApply(a) => cmd_s_apply(a, &exec()?, stdout),
        Command::CheckHconvex(a) => cmd_check(a, stdout),
        Command::PdeResidual(a) => cmd_pde(a, stdout),
        Command::Reproduce(a) => cmd_reproduce(a, &exec()?, stdout, stderr),
        Command::Corpus { command: CorpusCommand::List } => {
            let list: Vec<Listed> = corpus::corpus_list().into_iter().map(|(id, description)| Listed { id, description }).collect();
            emit(&list, None, stdout)?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
