use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hocurve::fixtures::{bullet, BulletParams};
use hocurve::geometry::GeometryModel;
use hocurve::io::{self, CurvingReport};
use hocurve::solver::{curve_mesh, SolverConfig};
use log::info;

/// Curves straight-sided tetrahedral meshes onto a target geometry.
#[derive(Parser)]
#[command(name = "hocurve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curve a linear mesh to high order.
    Curve(CurveArgs),
    /// Report quality and accuracy of a curved mesh.
    Check(CheckArgs),
    /// Write synthetic test inputs.
    #[command(subcommand)]
    Fixtures(Fixture),
}

#[derive(Args)]
struct CurveArgs {
    /// Linear mesh (MSH 4.1 or 2.2).
    mesh: PathBuf,
    /// Geometry model (JSON).
    geometry: PathBuf,
    /// Boundary classification (JSON).
    classification: PathBuf,
    /// Solver configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target polynomial degree, overriding the configuration.
    #[arg(long)]
    degree: Option<usize>,
    /// Output mesh [default: <mesh>_q<degree>.msh].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report path; `.json` and `.csv` files are written [default: <out>_report].
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write a visualization file with this many subdivisions per edge.
    #[arg(long)]
    viz_level: Option<usize>,
    /// Free-text label of the boundary-layer family, stored in the report.
    #[arg(long, default_value = "")]
    yplus: String,
}

#[derive(Args)]
struct CheckArgs {
    /// Curved mesh written by `curve`.
    mesh: PathBuf,
    geometry: PathBuf,
    classification: PathBuf,
    /// Solver configuration; sets the quality sampling.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the metrics as a report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Fixture {
    /// Bullet with a hemispherical nose inside a far-field box.
    Bullet {
        /// Target edge length on the body.
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        /// Normal jump at the nose/body junction in degrees.
        #[arg(long, default_value_t = 0.0)]
        normal_jump_deg: f64,
        /// Relative jitter of interior volume nodes.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Input(hocurve::Error),
    NotConverged,
}

impl From<hocurve::Error> for Failure {
    fn from(e: hocurve::Error) -> Self {
        Failure::Input(e)
    }
}

fn load_config(path: Option<&Path>) -> hocurve::Result<SolverConfig> {
    match path {
        Some(p) => SolverConfig::load(p),
        None => Ok(SolverConfig::default()),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn print_summary(report: &CurvingReport) {
    let q = &report.quality;
    println!(
        "degree {}  elements {}  l_c {:.6e}",
        report.metadata.degree, report.metadata.elements, report.metadata.characteristic_length
    );
    println!(
        "q^S   min {:.6} (element {})  mean {:.6}",
        q.min_shape_quality.value, q.min_shape_quality.element, q.mean_shape_quality
    );
    println!(
        "q^SJ  min {:.6} (element {})  mean {:.6}",
        q.min_scaled_jacobian.value, q.min_scaled_jacobian.element, q.mean_scaled_jacobian
    );
    println!("invalid elements {}", q.invalid_elements.len());
    for (label, v) in report.accuracy_rows() {
        println!("{label:<8} {v:.6e}");
    }
}

fn curve(args: CurveArgs) -> Result<(), Failure> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(q) = args.degree {
        config.degree = q;
    }
    config.validate()?;
    let t = Instant::now();
    let linear = io::read_linear_mesh(&args.mesh)?;
    let model = GeometryModel::load(&args.geometry)?;
    let classification = io::read_classification(&args.classification)?;
    let read_s = t.elapsed().as_secs_f64();
    info!(
        "read {} vertices, {} tets, {} boundary triangles",
        linear.vertices.len(),
        linear.tets.len(),
        linear.boundary.len()
    );

    let t = Instant::now();
    let result = curve_mesh(&linear, &model, &classification, &config)?;
    let curve_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (qualities, summary, accuracy) = io::measure(&result.mesh, &model, &classification, &config)?;
    let measure_s = t.elapsed().as_secs_f64();
    let mut report = CurvingReport::new(&result.mesh, summary, accuracy, &config, Some(&result), &args.yplus);
    report.add_timing("read", read_s);
    report.add_timing("curve", curve_s);
    report.add_timing("measure", measure_s);

    let out = args
        .out
        .unwrap_or_else(|| with_suffix(&args.mesh, &format!("_q{}.msh", result.mesh.degree())));
    let t = Instant::now();
    io::write_msh41(&result.mesh, &classification, &out)?;
    if let Some(level) = args.viz_level {
        io::write_vtu(&result.mesh, &qualities, level, &out.with_extension("vtu"))?;
    }
    report.add_timing("write", t.elapsed().as_secs_f64());
    let report_path = args.report.unwrap_or_else(|| with_suffix(&out, "_report"));
    report.write(&report_path)?;
    print_summary(&report);
    println!("wrote {}", out.display());
    if report.converged {
        Ok(())
    } else {
        eprintln!("error: curving did not converge; partial results written");
        Err(Failure::NotConverged)
    }
}

fn check(args: CheckArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    let mesh = io::read_high_order_mesh(&args.mesh)?;
    let model = GeometryModel::load(&args.geometry)?;
    let classification = io::read_classification(&args.classification)?;
    let t = Instant::now();
    let (_, summary, accuracy) = io::measure(&mesh, &model, &classification, &config)?;
    let mut report = CurvingReport::new(&mesh, summary, accuracy, &config, None, "");
    report.add_timing("measure", t.elapsed().as_secs_f64());
    print_summary(&report);
    if let Some(path) = args.report {
        report.write(&path)?;
    }
    Ok(())
}

fn fixtures(f: Fixture) -> Result<(), Failure> {
    let Fixture::Bullet {
        h,
        normal_jump_deg,
        jitter,
        seed,
        out_dir,
    } = f;
    let b = bullet(&BulletParams {
        h,
        normal_jump_deg,
        jitter,
        seed,
        ..Default::default()
    })?;
    std::fs::create_dir_all(&out_dir).map_err(|e| hocurve::Error::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    let geometry = out_dir.join("bullet_geometry.json");
    let mesh = out_dir.join("bullet.msh");
    let classification = out_dir.join("bullet_classification.json");
    b.model.save(&geometry)?;
    io::write_linear_msh41(&b.mesh, &b.classification, &mesh)?;
    io::write_classification(&b.classification, &classification)?;
    println!(
        "bullet: {} vertices, {} tets, {} boundary triangles",
        b.mesh.vertices.len(),
        b.mesh.tets.len(),
        b.mesh.boundary.len()
    );
    for p in [&mesh, &geometry, &classification] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HOCURVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("HOCURVE_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Curve(a) => curve(a),
        Command::Check(a) => check(a),
        Command::Fixtures(f) => fixtures(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => ExitCode::from(2),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
