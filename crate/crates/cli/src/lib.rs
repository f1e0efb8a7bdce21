//! Command-line front end. `run` returns the process exit status:
//! 0 success, 1 usage error, 2 data error, 3 failed gradient check.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use fourier_contour::bench::{self, BenchResult};
use fourier_contour::centerness::{gaussian_centerness, mask_stats, polar_centerness};
use fourier_contour::codec::{
    encode_cartesian, encode_polar, parse_shape_file, shape_file_to_string, EncodedShape, Representation, ShapeCode,
    TruncationMode,
};
use fourier_contour::corpus::{self, annotations_to_string, instances_from_polygons, AnnotatedInstance, ShapeSpec};
use fourier_contour::evalcurve::{self, CurveConfig, RenderLabel};
use fourier_contour::geometry::polygon_iou;
use fourier_contour::gradcheck::{self, CheckSummary, DecoderCheck};
use fourier_contour::losses::{cartesian_target, LossKind};
use fourier_contour::radial::extract_at_centroid;
use fourier_contour::{Polygon, DEFAULT_ALPHA, DEFAULT_COEFFS, DEFAULT_POINTS, DEFAULT_RESOLUTION};
use rayon::prelude::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_GRADCHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fourier-contour", version, about = "Encode instance contours as truncated Fourier descriptors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annotations to descriptor JSON
    Encode {
        #[command(flatten)]
        codec: CodecArgs,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        /// Gaussian centerness decay (Cartesian only)
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Descriptor JSON to polygon annotations
    Decode {
        #[command(flatten)]
        io: IoArgs,
    },
    /// IoU against kept coefficients, as CSV
    Curve {
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = TruncationMode::Symmetric)]
        mode: TruncationMode,
        #[arg(long, default_value_t = Representation::Polar)]
        rep: Representation,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        /// Comma-separated kept-coefficient counts
        #[arg(long, value_delimiter = ',', default_values_t = evalcurve::DEFAULT_KS)]
        ks: Vec<usize>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// One SVG overlay per instance
    Render {
        #[command(flatten)]
        codec: CodecArgs,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long = "in", default_value = "-")]
        input: PathBuf,
        /// Output directory
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Finite-difference check of decoder gradients on random cases
    Gradcheck {
        #[command(flatten)]
        codec: CodecArgs,
        /// Loss to check; both applicable losses when omitted
        #[arg(long)]
        loss: Option<LossKind>,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// First seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = gradcheck::DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = gradcheck::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Throughput of dft, idft and decode
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_SIZES)]
        sizes: Vec<usize>,
        /// Time budget per measurement
        #[arg(long, default_value_t = 500)]
        budget_ms: u64,
    },
    /// Synthetic corpus as annotation JSON
    Gen {
        #[arg(long, default_value = "random-star-shaped", value_parser = clap::builder::PossibleValuesParser::new(ShapeSpec::FAMILIES))]
        family: String,
        /// Shape spec JSON file; overrides --family
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "out", default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CodecArgs {
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_COEFFS)]
    coeffs: usize,
    #[arg(long, default_value_t = TruncationMode::Symmetric)]
    mode: TruncationMode,
    #[arg(long, default_value_t = Representation::Polar)]
    rep: Representation,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Input path, `-` for stdin
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    /// Output path, `-` for stdout
    #[arg(long = "out", default_value = "-")]
    out: PathBuf,
}

enum Failure {
    Data(String),
    Gradcheck,
}

impl From<fourier_contour::Error> for Failure {
    fn from(e: fourier_contour::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
        Err(Failure::Gradcheck) => EXIT_GRADCHECK,
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Encode { codec, resolution, alpha, io } => encode(&codec, resolution, alpha, &io),
        Command::Decode { io } => decode(&io),
        Command::Curve { points, mode, rep, resolution, ks, io } => {
            let config = CurveConfig { n_points: points, mode, representation: rep, resolution };
            curve(&config, &ks, &io)
        }
        Command::Render { codec, resolution, input, out } => render(&codec, resolution, &input, &out),
        Command::Gradcheck { codec, loss, seeds, seed, step, tol } => run_gradcheck(&codec, loss, seed, seeds, step, tol),
        Command::Bench { sizes, budget_ms } => run_bench(&sizes, Duration::from_millis(budget_ms)),
        Command::Gen { family, spec, count, seed, out } => gen(&family, spec.as_deref(), count, seed, &out),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).map_err(|e| Failure::Data(format!("stdin: {e}")))?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }
}

fn write_output(path: &Path, text: &str) -> CliResult {
    if path == Path::new("-") {
        io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Data(format!("stdout: {e}")))
    } else {
        fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }
}

/// Parses annotations, reporting rejected records on stderr.
fn load(path: &Path) -> Result<Vec<AnnotatedInstance>, Failure> {
    let report = corpus::parse_annotations(&read_input(path)?)?;
    for r in &report.rejected {
        eprintln!("warning: skipped {r}");
    }
    for inst in report.instances.iter().filter(|i| i.multi_part) {
        eprintln!("warning: annotation id {}: multi-part segmentation, kept the largest part", inst.id);
    }
    Ok(report.instances)
}

fn encode_code(poly: &Polygon, codec: &CodecArgs) -> fourier_contour::Result<ShapeCode> {
    Ok(match codec.rep {
        Representation::Polar => {
            let rc = extract_at_centroid(poly, codec.points)?.contour;
            ShapeCode::Polar { descriptor: encode_polar(&rc, codec.coeffs, codec.mode)?, center: rc.center() }
        }
        Representation::Cartesian => {
            ShapeCode::Cartesian(encode_cartesian(&cartesian_target(poly, codec.points)?, codec.coeffs, codec.mode)?)
        }
    })
}

fn encode(codec: &CodecArgs, resolution: usize, alpha: f64, io: &IoArgs) -> CliResult {
    codec.mode.check(codec.coeffs, codec.points)?;
    let instances = load(&io.input)?;
    let encoded: Vec<fourier_contour::Result<EncodedShape>> = instances
        .par_iter()
        .map(|inst| {
            let code = encode_code(&inst.polygon, codec)?;
            let centerness = match codec.rep {
                Representation::Polar => {
                    polar_centerness(extract_at_centroid(&inst.polygon, codec.points)?.contour.rays())?
                }
                Representation::Cartesian => {
                    let c = code.reference();
                    gaussian_centerness(c.x, c.y, &mask_stats(&inst.polygon, resolution)?, alpha)?
                }
            };
            Ok(EncodedShape { id: inst.id, category: inst.category.clone(), centerness: Some(centerness), code })
        })
        .collect();
    let mut shapes = Vec::with_capacity(encoded.len());
    for (inst, result) in instances.iter().zip(encoded) {
        match result {
            Ok(shape) => shapes.push(shape),
            Err(e) => eprintln!("warning: annotation id {}: {e}", inst.id),
        }
    }
    write_output(&io.out, &shape_file_to_string(&shapes))
}

fn decode(io: &IoArgs) -> CliResult {
    let shapes = parse_shape_file(&read_input(&io.input)?)?;
    let mut instances = Vec::with_capacity(shapes.len());
    for shape in shapes {
        match shape.code.decode_points().and_then(Polygon::new) {
            Ok(polygon) => instances.push(AnnotatedInstance {
                id: shape.id,
                category: shape.category,
                bbox: polygon.bounding_box(),
                polygon,
                multi_part: false,
            }),
            Err(e) => eprintln!("warning: shape {}: decoded contour is not a polygon: {e}", shape.id),
        }
    }
    write_output(&io.out, &annotations_to_string(&instances))
}

fn curve(config: &CurveConfig, ks: &[usize], io: &IoArgs) -> CliResult {
    let polygons: Vec<Polygon> = load(&io.input)?.into_iter().map(|i| i.polygon).collect();
    let report = evalcurve::truncation_curve(&polygons, ks, config)?;
    eprintln!(
        "{} instances, {} skipped, {} degenerate decodes; untruncated mean IoU {:.6}",
        polygons.len() - report.skipped,
        report.skipped,
        report.degenerate,
        report.raw_iou
    );
    for (p, e) in report.points.iter().zip(&report.l2_error) {
        eprintln!("K={:<3} mean IoU {:.6}  mean L2 error {:.6}", p.kept(), p.mean_iou, e);
    }
    write_output(&io.out, &evalcurve::curve_csv_string(&report.points))
}

fn render(codec: &CodecArgs, resolution: usize, input: &Path, out: &Path) -> CliResult {
    codec.mode.check(codec.coeffs, codec.points)?;
    let instances = load(input)?;
    fs::create_dir_all(out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    let results: Vec<fourier_contour::Result<()>> = instances
        .par_iter()
        .map(|inst| {
            let decoded = Polygon::new(encode_code(&inst.polygon, codec)?.decode_points()?)?;
            let iou = polygon_iou(&decoded, &inst.polygon, resolution)?;
            let path = out.join(format!("{}.svg", inst.id));
            evalcurve::render_contours(&inst.polygon, &decoded, RenderLabel { kept: codec.coeffs, iou }, &path)
        })
        .collect();
    let mut written = 0;
    for (inst, r) in instances.iter().zip(results) {
        match r {
            Ok(()) => written += 1,
            Err(e) => eprintln!("warning: annotation id {}: {e}", inst.id),
        }
    }
    eprintln!("wrote {written} renderings to {}", out.display());
    Ok(())
}

fn run_gradcheck(codec: &CodecArgs, loss: Option<LossKind>, first: u64, count: u64, step: f64, tol: f64) -> CliResult {
    let losses = match (loss, codec.rep) {
        (Some(l), _) => vec![l],
        (None, Representation::Polar) => vec![LossKind::Chamfer, LossKind::PolarIou],
        (None, Representation::Cartesian) => vec![LossKind::Chamfer],
    };
    let seeds: Vec<u64> = (first..first + count).collect();
    let mut all_passed = true;
    for loss in losses {
        let check = DecoderCheck {
            step,
            tol,
            ..DecoderCheck::new(codec.points, codec.coeffs, codec.mode, codec.rep, loss)
        };
        let reports = gradcheck::run_decoder_checks(&seeds, &check)?;
        for r in reports.iter().filter(|r| !r.skipped && !r.report.passed) {
            println!(
                "FAIL {loss} seed {}: max relative error {:.3e} at parameter {}",
                r.seed, r.report.max_rel_error, r.report.worst_index
            );
        }
        let summary = CheckSummary::from_reports(&reports);
        println!(
            "{} {} {} N={} K={}: {} runs, {} skipped, {} failed, max relative error {:.3e}",
            if summary.passed() { "PASS" } else { "FAIL" },
            codec.rep,
            loss,
            codec.points,
            codec.coeffs,
            summary.runs,
            summary.skipped,
            summary.failed,
            summary.max_rel_error
        );
        all_passed &= summary.passed();
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Gradcheck)
    }
}

fn run_bench(sizes: &[usize], budget: Duration) -> CliResult {
    println!("{:<8} {:>6} {:>14} {:>16}", "op", "N", "ns/op", "ops/s");
    for &n in sizes {
        if n < fourier_contour::radial::MIN_RAYS {
            return Err(Failure::Data(format!("bench size {n} is below {}", fourier_contour::radial::MIN_RAYS)));
        }
        for op in bench::BenchOp::ALL {
            let BenchResult { ns_per_op, ops_per_sec, .. } = bench::measure(op, n, budget)?;
            println!("{:<8} {:>6} {:>14.1} {:>16.0}", op.name(), n, ns_per_op, ops_per_sec);
        }
    }
    Ok(())
}

fn gen(family: &str, spec_path: Option<&Path>, count: usize, seed: u64, out: &Path) -> CliResult {
    let spec = match spec_path {
        Some(p) => ShapeSpec::from_json_str(&read_input(p)?)?,
        None => ShapeSpec::default_for(family)?,
    };
    let polygons = corpus::generate(&spec, count, seed)?;
    write_output(out, &annotations_to_string(&instances_from_polygons(polygons, spec.family())))
}
