use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kobalab::experiments::{emit, run_counterexample_suite, run_visibility_family, EmitFormat};
use kobalab::geodesics::{
    certify_lambda_geodesic, construct_tangential_geodesic, max_boundary_distance,
    predicted_terminal_depth,
};
use kobalab::goldilocks::{classify_point_with, ClassifyOptions};
use kobalab::metric::{kdist_bounds, kdist_lower, segment_upper};
use kobalab::{
    BoundInterval, CPoint, Complex64, ConvexityClass, DistanceGrid, DomainOracle, ExperimentConfig,
    ExperimentReport, GridSpec, LabError, ProfileSpec, Slice,
};

#[derive(Parser)]
#[command(
    name = "kobalab",
    version,
    about = "Kobayashi geometry experiments on model domains {Re z2 > Ψ(Re z1)}"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Goldilocks tests at a boundary point.
    Classify {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Constant c of the profile e^{-c/|x|^α}.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Boundary point as Re z1,Re z2.
        #[arg(long, value_parser = parse_point, default_value = "0,0")]
        point: CPoint,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Tangential curve from (0, f0) along the face at the origin.
    Geodesic {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1.0)]
        profile_c: f64,
        /// Balance constant of the construction.
        #[arg(long)]
        c: f64,
        #[arg(long)]
        f0: f64,
        #[arg(long, default_value_t = 1.0)]
        span: f64,
        #[arg(long, default_value_t = 10.0)]
        depth_cap: f64,
        /// Certify the curve as a (LAMBDA, 0)-geodesic.
        #[arg(long, value_name = "LAMBDA")]
        certify: Option<f64>,
        #[arg(long, default_value_t = 32)]
        pair_grid: usize,
    },
    /// Boundary-hugging family from a config file.
    VisibilityRun(RunArgs),
    /// Counterexample profiles from a config file.
    Counterexample(RunArgs),
    /// Bounds on the Kobayashi distance between two points.
    Kdist {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1.0)]
        profile_c: f64,
        /// Re z1,Re z2 or Re z1,Im z1,Re z2,Im z2.
        #[arg(long, value_parser = parse_point)]
        from: CPoint,
        #[arg(long, value_parser = parse_point)]
        to: CPoint,
        /// Spacing of a distance grid on the slice through `from`.
        #[arg(long)]
        grid: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ExpPower,
    PiecewiseMax,
    Mollified,
    Flat,
    Wedge,
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Convex,
    CConvex,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum, default_value = "exp-power")]
    profile: Kind,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 24)]
    j_max: usize,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    #[arg(long, value_enum, default_value = "convex")]
    class: Class,
}

impl ProfileArgs {
    fn oracle(&self, c: f64, depth_cap: Option<f64>) -> Result<DomainOracle, LabError> {
        let (alpha, j_max) = (self.alpha, self.j_max);
        let spec = match self.profile {
            Kind::ExpPower => ProfileSpec::ExpPower { alpha, c },
            Kind::PiecewiseMax => ProfileSpec::PiecewiseMax { alpha, c, j_max },
            Kind::Mollified => ProfileSpec::Mollified { alpha, c, j_max },
            Kind::Flat => ProfileSpec::Flat,
            Kind::Wedge => ProfileSpec::Wedge { slope: self.slope },
        };
        let class = match self.class {
            Class::Convex => ConvexityClass::Convex,
            Class::CConvex => ConvexityClass::CConvex,
        };
        let oracle = DomainOracle::new(spec.build()?).with_class(class);
        match depth_cap {
            Some(cap) => oracle.with_depth_cap(cap),
            None => Ok(oracle),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(text: &str) -> Result<CPoint, String> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    match values[..] {
        [x, y] => Ok(CPoint::real(x, y)),
        [a, b, c, d] => Ok(CPoint::new(a, b, c, d)),
        _ => Err(format!(
            "expected 2 or 4 comma-separated numbers, got {}",
            values.len()
        )),
    }
}

/// 2 for bad input, 4 for I/O, 3 for numerical failures.
fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::InvalidConfig(_)
        | LabError::BadParameters(_)
        | LabError::NotOnBoundary { .. }
        | LabError::PointOutsideDomain { .. }
        | LabError::ZeroDirection
        | LabError::NonSmoothPoint { .. }
        | LabError::OutsideHalfPlane { .. } => 2,
        LabError::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<u8, LabError> {
    match command {
        Command::Classify {
            profile,
            c,
            point,
            epsilon,
            json,
        } => {
            let oracle = profile.oracle(c, None)?;
            let report = classify_point_with(
                &oracle,
                &point,
                &ClassifyOptions {
                    epsilon,
                    ..Default::default()
                },
            )?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| LabError::Io(e.to_string()))?
                );
            } else {
                println!("{}", report.summary());
                for (name, v) in [
                    ("local", &report.local_goldilocks),
                    ("weak", &report.weakly_goldilocks),
                    ("strong", &report.strongly_non_goldilocks),
                ] {
                    println!(
                        "{name:>6}: {:?} (decay exponent {:?})",
                        v.status, v.decay_exponent
                    );
                }
            }
            Ok(0)
        }
        Command::Geodesic {
            profile,
            profile_c,
            c,
            f0,
            span,
            depth_cap,
            certify,
            pair_grid,
        } => {
            let oracle = profile.oracle(profile_c, Some(depth_cap))?;
            let origin = CPoint::real(0.0, 0.0);
            let direction = oracle
                .normal_tangent_frame(&origin)?
                .tangent
                .mul(Complex64::i());
            let predicted = predicted_terminal_depth(oracle.profile(), c, f0, depth_cap)?;
            println!(
                "predicted depth: {:e} ({:?})",
                predicted.depth, predicted.status
            );
            let curve = match construct_tangential_geodesic(&oracle, c, f0, &direction, span) {
                Ok(curve) => curve,
                Err(LabError::EscapedDepthCap { t, depth }) => {
                    println!("escaped the depth cap at t = {t} (depth {depth:e})");
                    return Ok(0);
                }
                Err(e) => return Err(e),
            };
            println!("terminal depth:  {:e}", curve.end().re2);
            println!(
                "max boundary distance: {:e}",
                max_boundary_distance(&oracle, &curve)?
            );
            if let Some(lambda) = certify {
                let cert = certify_lambda_geodesic(&oracle, &curve, lambda, 0.0, pair_grid)?;
                println!(
                    "certificate: {:?} at lambda {lambda} (sup ratio {}, refutation ratio {})",
                    cert.status, cert.observed_sup_ratio, cert.refutation_ratio
                );
            }
            Ok(0)
        }
        Command::VisibilityRun(args) => execute(args, run_visibility_family),
        Command::Counterexample(args) => execute(args, run_counterexample_suite),
        Command::Kdist {
            profile,
            profile_c,
            from,
            to,
            grid,
        } => {
            let oracle = profile.oracle(profile_c, None)?;
            let bounds = match grid {
                Some(spacing) => {
                    let heights = [oracle.height(&from), oracle.height(&to)];
                    let (s_lo, s_hi) = (from.im1.min(to.im1), from.im1.max(to.im1));
                    let spec = GridSpec::with_spacing(
                        Slice::TangentialNormal {
                            re1: from.re1,
                            im2: from.im2,
                        },
                        (s_lo - 1.0, s_hi + 1.0),
                        (
                            0.1 * heights[0].min(heights[1]),
                            4.0 * heights[0].max(heights[1]).max(1.0),
                        ),
                        spacing,
                    );
                    let grid = DistanceGrid::build(&oracle, spec)?;
                    let mut b = kdist_bounds(&oracle, &from, &to, &grid)?;
                    b.upper = b.upper.min(segment_upper(&oracle, &from, &to)?);
                    b
                }
                None => {
                    let upper = segment_upper(&oracle, &from, &to)?;
                    BoundInterval {
                        lower: kdist_lower(&oracle, &from, &to)?.min(upper),
                        upper,
                    }
                }
            };
            println!("lower {}", bounds.lower);
            println!("upper {}", bounds.upper);
            Ok(0)
        }
    }
}

/// Loads the config, runs it and writes JSON and CSV; exit 3 when any
/// failure was quarantined in the report.
fn execute(
    args: RunArgs,
    runner: fn(&ExperimentConfig) -> Result<ExperimentReport, LabError>,
) -> Result<u8, LabError> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        LabError::Io(msg) => LabError::Io(format!("{}: {msg}", args.config.display())),
        other => other,
    })?;
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    let report = runner(&cfg)?;
    let mut written = emit(&report, &cfg.output_dir, EmitFormat::Json)?;
    written.extend(emit(&report, &cfg.output_dir, EmitFormat::Csv)?);
    for path in &written {
        println!("wrote {}", path.display());
    }
    let quarantined = report.quarantined();
    if quarantined > 0 {
        eprintln!("{quarantined} failures quarantined in the report");
        return Ok(3);
    }
    Ok(0)
}
