//! `kstab` — exact stability-chamber computations from the command line.
//!
//! Subcommands wrap the `kstability` library: exceptional-class enumeration,
//! the Drezet–Le Potier envelope, chamber membership, wall crossings along
//! charge paths, the symmetry group on the K-lattice, and line-bundle gluing
//! data.  All predicates run in exact rational arithmetic; rationals are
//! rendered as `p/q` strings so output round-trips losslessly.
//!
//! Exit codes: 0 ok / Inside, 1 negative verdict, 2 indeterminate,
//! 3 wall band, 64 usage error, 65 domain error, 70 internal error.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use kstability::autgroup::{
    express_twist_as_word, gamma13_image, group_compose, matrix_half_twist, parse_word,
    verify_braid_relation, AutElement, AutXElement,
};
use kstability::chamber::{
    in_geometric_chamber, in_geometric_chamber_f64, CentralCharge, ChamberVerdict, SlicePoint,
};
use kstability::dlp::{sample_curve, EnvelopeModel};
use kstability::exceptional::{enumerate, exceptional_at_slope, ExceptionalClass};
use kstability::ktheory::pp;
use kstability::picard::{glue_on_x, GluingData};
use kstability::rat::{
    rat, rat_complex_from_str, rat_f64, rat_from_str, rat_int, rat_str, slope_str, RatComplex,
};
use kstability::walls::{detect_crossings, normalize_to_geometric, WallError};
use kstability::{euler_p2, skew_pairing, KClass, Rat};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INDETERMINATE: u8 = 2;
const EXIT_WALL: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DOMAIN: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

/// Exact arithmetic for the geometric stability chamber of a degenerate
/// local plane: exceptional classes, the envelope bounding the chamber,
/// membership tests, wall crossings, and the symmetry group action.
#[derive(Parser)]
#[command(name = "kstab", version, disable_help_subcommand = true)]
struct Cli {
    /// Rank bound for enumerated exceptional classes.
    #[arg(long, global = true, default_value_t = 34, value_name = "N")]
    max_rank: i64,

    /// Output format, where the command supports more than one.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Force exact rational arithmetic in grid sweeps.
    #[arg(long, global = true)]
    exact: bool,

    /// Seed for the randomized selftest suites.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Write output to FILE instead of stdout.
    #[arg(short = 'o', long = "output", global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exceptional classes of the mutation tree.
    Exceptional {
        #[command(subcommand)]
        cmd: ExceptionalCmd,
    },
    /// The Drezet–Le Potier envelope.
    Dlp {
        #[command(subcommand)]
        cmd: DlpCmd,
    },
    /// Chamber membership and slice sweeps.
    Chamber {
        #[command(subcommand)]
        cmd: ChamberCmd,
    },
    /// Wall crossings along charge paths and twist normalization.
    Walls {
        #[command(subcommand)]
        cmd: WallsCmd,
    },
    /// The symmetry group acting on the K-lattice.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Line bundles on the degenerate surface via gluing data.
    Pic {
        #[command(subcommand)]
        cmd: PicCmd,
    },
    /// Deterministic randomized consistency checks.
    Selftest,
}

#[derive(Subcommand)]
enum ExceptionalCmd {
    /// List the exceptional classes with slope in [0, 1) up to --max-rank.
    Enumerate,
}

#[derive(Subcommand)]
enum DlpCmd {
    /// Evaluate the envelope at one rational slope.
    Eval {
        /// Slope, as a rational p/q.
        #[arg(long, allow_hyphen_values = true, value_name = "P/Q")]
        mu: String,
        /// Contributor rank bound (defaults to --max-rank).
        #[arg(long, value_name = "N")]
        order: Option<i64>,
    },
    /// Sample the envelope on a slope window.
    Curve {
        /// Contributor rank bound (defaults to --max-rank).
        #[arg(long, value_name = "N")]
        order: Option<i64>,
        /// Window start.
        #[arg(long, default_value = "0", allow_hyphen_values = true, value_name = "P/Q")]
        lo: String,
        /// Window end.
        #[arg(long, default_value = "1", allow_hyphen_values = true, value_name = "P/Q")]
        hi: String,
        /// Grid step.
        #[arg(long, default_value = "1/200", value_name = "P/Q")]
        step: String,
    },
}

#[derive(Subcommand)]
enum ChamberCmd {
    /// Classify the slice point (a, b); prints the verdict and its f-image.
    Test {
        /// a as "re,im" with rational parts; Im a > 0 required.
        #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
        a: String,
        /// b as "re,im" with rational parts.
        #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
        b: String,
    },
    /// Sweep a rectangle of f-images (B, g) and emit verdicts together with
    /// the envelope curve and the exceptional points, for plotting.
    Slice {
        #[arg(long, default_value = "0", allow_hyphen_values = true, value_name = "P/Q")]
        xmin: String,
        #[arg(long, default_value = "1", allow_hyphen_values = true, value_name = "P/Q")]
        xmax: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true, value_name = "P/Q")]
        ymin: String,
        #[arg(long, default_value = "1", allow_hyphen_values = true, value_name = "P/Q")]
        ymax: String,
        /// Grid step in both directions.
        #[arg(long, default_value = "1/20", value_name = "P/Q")]
        step: String,
    },
}

#[derive(Subcommand)]
enum WallsCmd {
    /// Detect wall events along a piecewise-linear path of slice points.
    Crossings {
        /// Path file: {"waypoints": [{"a": [re, im], "b": [re, im]}, ...]}
        /// with rational entries as "p/q" strings or integers.
        #[arg(long, value_name = "FILE")]
        path: PathBuf,
    },
    /// Transport a central charge into the closure of the geometric region
    /// by a word of half-twists.
    Normalize {
        /// Charge of the point class, as "re,im".
        #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
        zc: String,
        /// Charge of the line class, as "re,im".
        #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
        zd: String,
        /// Charge of the plane class, as "re,im".
        #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
        zr: String,
        /// Rank bound for the twist generators.
        #[arg(long, default_value_t = 5, value_name = "N")]
        gen_rank: i64,
        /// Maximum word length.
        #[arg(long, default_value_t = 4, value_name = "LEN")]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Find a word in a, b for the half-twist along the exceptional class
    /// of the given slope.
    Word {
        #[arg(long, allow_hyphen_values = true, value_name = "P/Q")]
        slope: String,
        /// Longest word tried by the breadth-first search.
        #[arg(long, default_value_t = 8, value_name = "LEN")]
        max_len: usize,
    },
    /// Check the relation (a b)^3 = 1 on the lattice.
    VerifyRelation,
    /// Compose two group elements given as JSON objects
    /// {"shift": n, "word": "a b^-1 ...", "perm": [i, j, k], "scalars": [s, s, s]}.
    Compose {
        #[arg(long, value_name = "JSON")]
        x: String,
        #[arg(long, value_name = "JSON")]
        y: String,
    },
}

#[derive(Subcommand)]
enum PicCmd {
    /// Normal form (degrees, holonomy) of line-bundle gluing data.
    Normalform {
        /// Component degrees "n1,n2,n3".
        #[arg(long, allow_hyphen_values = true, value_name = "N1,N2,N3")]
        n: String,
        /// Gluing scalars "s1,s2,s3"; each rational or Gaussian rational
        /// (e.g. 2, -1/3, 1+2i).
        #[arg(long, allow_hyphen_values = true, value_name = "S1,S2,S3")]
        phi: String,
    },
    /// Test whether a plane bundle of the given degree glues across the
    /// degeneration against the data.
    Glue {
        #[arg(long, allow_hyphen_values = true, value_name = "M")]
        deg0: i64,
        #[arg(long, allow_hyphen_values = true, value_name = "N1,N2,N3")]
        n: String,
        #[arg(long, allow_hyphen_values = true, value_name = "S1,S2,S3")]
        phi: String,
    },
}

// ---------------------------------------------------------------------------
// Plumbing

struct Rendered {
    payload: String,
    exit: u8,
}

impl Rendered {
    fn ok(payload: String) -> Self {
        Rendered { payload, exit: EXIT_OK }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn domain(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_DOMAIN, message: message.to_string() }
    }

    fn negative(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_NEGATIVE, message: message.to_string() }
    }

    fn internal(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_INTERNAL, message: message.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(rendered) => {
            let sink = match &cli.output {
                Some(path) => fs::write(path, &rendered.payload),
                None => std::io::stdout().write_all(rendered.payload.as_bytes()),
            };
            if let Err(err) = sink {
                eprintln!("kstab: {err}");
                return ExitCode::from(EXIT_INTERNAL);
            }
            ExitCode::from(rendered.exit)
        }
        Err(failure) => {
            eprintln!("kstab: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: &Cli) -> Result<Rendered, Failure> {
    match &cli.cmd {
        Cmd::Exceptional { cmd: ExceptionalCmd::Enumerate } => cmd_exceptional_enumerate(cli),
        Cmd::Dlp { cmd: DlpCmd::Eval { mu, order } } => cmd_dlp_eval(cli, mu, *order),
        Cmd::Dlp { cmd: DlpCmd::Curve { order, lo, hi, step } } => {
            cmd_dlp_curve(cli, *order, lo, hi, step)
        }
        Cmd::Chamber { cmd: ChamberCmd::Test { a, b } } => cmd_chamber_test(cli, a, b),
        Cmd::Chamber { cmd: ChamberCmd::Slice { xmin, xmax, ymin, ymax, step } } => {
            cmd_chamber_slice(cli, xmin, xmax, ymin, ymax, step)
        }
        Cmd::Walls { cmd: WallsCmd::Crossings { path } } => cmd_walls_crossings(cli, path),
        Cmd::Walls { cmd: WallsCmd::Normalize { zc, zd, zr, gen_rank, budget } } => {
            cmd_walls_normalize(cli, zc, zd, zr, *gen_rank, *budget)
        }
        Cmd::Group { cmd: GroupCmd::Word { slope, max_len } } => {
            cmd_group_word(cli, slope, *max_len)
        }
        Cmd::Group { cmd: GroupCmd::VerifyRelation } => cmd_group_verify_relation(cli),
        Cmd::Group { cmd: GroupCmd::Compose { x, y } } => cmd_group_compose(cli, x, y),
        Cmd::Pic { cmd: PicCmd::Normalform { n, phi } } => cmd_pic_normalform(cli, n, phi),
        Cmd::Pic { cmd: PicCmd::Glue { deg0, n, phi } } => cmd_pic_glue(cli, *deg0, n, phi),
        Cmd::Selftest => cmd_selftest(cli),
    }
}

fn checked_max_rank(cli: &Cli) -> Result<i64, Failure> {
    if cli.max_rank < 1 {
        return Err(Failure::usage(format!(
            "--max-rank must be at least 1, got {}",
            cli.max_rank
        )));
    }
    Ok(cli.max_rank)
}

fn reject_csv(cli: &Cli) -> Result<(), Failure> {
    if cli.format == Some(Format::Csv) {
        return Err(Failure::usage("csv output is not available for this command"));
    }
    Ok(())
}

fn parse_rat_arg(name: &str, s: &str) -> Result<Rat, Failure> {
    rat_from_str(s)
        .map_err(|_| Failure::usage(format!("--{name}: cannot parse '{s}' as a rational p/q")))
}

fn parse_complex_pair(name: &str, s: &str) -> Result<RatComplex, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::usage(format!(
            "--{name}: expected 're,im' with rational parts, got '{s}'"
        )));
    }
    let re = parse_rat_arg(name, parts[0].trim())?;
    let im = parse_rat_arg(name, parts[1].trim())?;
    Ok(RatComplex::new(re, im))
}

fn parse_int_triple(name: &str, s: &str) -> Result<[i64; 3], Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!("--{name}: expected three integers, got '{s}'")));
    }
    let mut out = [0i64; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--{name}: '{part}' is not an integer")))?;
    }
    Ok(out)
}

fn parse_scalar_triple(name: &str, s: &str) -> Result<[RatComplex; 3], Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!("--{name}: expected three scalars, got '{s}'")));
    }
    let parse = |part: &str| {
        rat_complex_from_str(part.trim()).map_err(|_| {
            Failure::usage(format!("--{name}: cannot parse scalar '{part}'"))
        })
    };
    Ok([parse(parts[0])?, parse(parts[1])?, parse(parts[2])?])
}

fn big_i64<T: ToPrimitive>(x: &T) -> Result<i64, Failure> {
    x.to_i64().ok_or_else(|| Failure::internal("integer overflow while rendering output"))
}

fn json_payload<S: Serialize>(value: &S, exit: u8) -> Result<Rendered, Failure> {
    let mut payload = serde_json::to_string_pretty(value).map_err(Failure::internal)?;
    payload.push('\n');
    Ok(Rendered { payload, exit })
}

fn csv_payload(header: &[&str], rows: Vec<Vec<String>>, exit: u8) -> Result<Rendered, Failure> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(Failure::internal)?;
    for row in rows {
        writer.write_record(&row).map_err(Failure::internal)?;
    }
    let bytes = writer.into_inner().map_err(Failure::internal)?;
    let payload = String::from_utf8(bytes).map_err(Failure::internal)?;
    Ok(Rendered { payload, exit })
}

fn complex_fields(z: &RatComplex) -> ComplexOut {
    ComplexOut { re: rat_str(&z.re), im: rat_str(&z.im) }
}

#[derive(Serialize)]
struct ComplexOut {
    re: String,
    im: String,
}

// ---------------------------------------------------------------------------
// exceptional

#[derive(Serialize)]
struct ExcRow {
    rank: i64,
    slope_num: i64,
    slope_den: i64,
    #[serde(rename = "cK")]
    ck: i64,
    d: i64,
    r: i64,
    ch2_times_2: i64,
    delta_num: i64,
    delta_den: i64,
    depth: u32,
}

fn exc_row(e: &ExceptionalClass) -> Result<ExcRow, Failure> {
    let slope = e.slope();
    let delta = e.delta();
    Ok(ExcRow {
        rank: e.rank(),
        slope_num: big_i64(slope.numer())?,
        slope_den: big_i64(slope.denom())?,
        ck: e.class.c,
        d: e.class.d,
        r: e.class.r,
        ch2_times_2: 2 * e.class.c - e.class.d,
        delta_num: big_i64(delta.numer())?,
        delta_den: big_i64(delta.denom())?,
        depth: e.depth,
    })
}

fn cmd_exceptional_enumerate(cli: &Cli) -> Result<Rendered, Failure> {
    let max_rank = checked_max_rank(cli)?;
    let rows: Vec<ExcRow> =
        enumerate(max_rank).iter().map(exc_row).collect::<Result<_, _>>()?;
    match cli.format {
        Some(Format::Json) => json_payload(&rows, EXIT_OK),
        _ => csv_payload(
            &[
                "rank",
                "slope_num",
                "slope_den",
                "cK",
                "d",
                "r",
                "ch2_times_2",
                "delta_num",
                "delta_den",
                "depth",
            ],
            rows.iter()
                .map(|row| {
                    vec![
                        row.rank.to_string(),
                        row.slope_num.to_string(),
                        row.slope_den.to_string(),
                        row.ck.to_string(),
                        row.d.to_string(),
                        row.r.to_string(),
                        row.ch2_times_2.to_string(),
                        row.delta_num.to_string(),
                        row.delta_den.to_string(),
                        row.depth.to_string(),
                    ]
                })
                .collect(),
            EXIT_OK,
        ),
    }
}

// ---------------------------------------------------------------------------
// dlp

fn envelope_order(cli: &Cli, order: Option<i64>) -> Result<i64, Failure> {
    let order = order.unwrap_or(cli.max_rank);
    if order < 1 {
        return Err(Failure::usage(format!("order must be at least 1, got {order}")));
    }
    Ok(order)
}

#[derive(Serialize)]
struct EvalOut {
    mu: String,
    order: i64,
    delta: String,
    decimal: f64,
}

fn cmd_dlp_eval(cli: &Cli, mu: &str, order: Option<i64>) -> Result<Rendered, Failure> {
    let mu = parse_rat_arg("mu", mu)?;
    let order = envelope_order(cli, order)?;
    let model = EnvelopeModel::around(order, &mu).map_err(Failure::domain)?;
    let value = model.delta_at(&mu).map_err(Failure::domain)?;
    let decimal = rat_f64(&value);
    match cli.format {
        Some(Format::Json) => json_payload(
            &EvalOut { mu: slope_str(&mu), order, delta: rat_str(&value), decimal },
            EXIT_OK,
        ),
        Some(Format::Csv) => csv_payload(
            &["mu", "delta_N", "N"],
            vec![vec![slope_str(&mu), rat_str(&value), order.to_string()]],
            EXIT_OK,
        ),
        None => Ok(Rendered::ok(format!("{}\n{}\n", rat_str(&value), decimal))),
    }
}

#[derive(Serialize)]
struct CurveRow {
    mu: String,
    delta: String,
    order: i64,
}

fn cmd_dlp_curve(
    cli: &Cli,
    order: Option<i64>,
    lo: &str,
    hi: &str,
    step: &str,
) -> Result<Rendered, Failure> {
    let order = envelope_order(cli, order)?;
    let lo = parse_rat_arg("lo", lo)?;
    let hi = parse_rat_arg("hi", hi)?;
    let step = parse_rat_arg("step", step)?;
    if lo > hi {
        return Err(Failure::usage("--lo must not exceed --hi"));
    }
    if step <= Rat::zero() {
        return Err(Failure::usage("--step must be positive"));
    }
    let model = EnvelopeModel::new(order, lo, hi).map_err(Failure::domain)?;
    let samples = sample_curve(&model, &step).map_err(Failure::domain)?;
    match cli.format {
        Some(Format::Json) => {
            let rows: Vec<CurveRow> = samples
                .iter()
                .map(|(mu, delta)| CurveRow {
                    mu: slope_str(mu),
                    delta: rat_str(delta),
                    order,
                })
                .collect();
            json_payload(&rows, EXIT_OK)
        }
        _ => csv_payload(
            &["mu", "delta_N", "N"],
            samples
                .iter()
                .map(|(mu, delta)| vec![slope_str(mu), rat_str(delta), order.to_string()])
                .collect(),
            EXIT_OK,
        ),
    }
}

// ---------------------------------------------------------------------------
// chamber

struct VerdictView {
    rendered: String,
    wall: Option<(String, i64)>,
    exit: u8,
}

fn verdict_view(v: &ChamberVerdict) -> VerdictView {
    match v {
        ChamberVerdict::Inside => VerdictView {
            rendered: "Inside".into(),
            wall: None,
            exit: EXIT_OK,
        },
        ChamberVerdict::OnWallBand(e) => VerdictView {
            rendered: format!("OnWallBand({})", slope_str(&e.slope())),
            wall: Some((slope_str(&e.slope()), e.rank())),
            exit: EXIT_WALL,
        },
        ChamberVerdict::Outside => VerdictView {
            rendered: "Outside".into(),
            wall: None,
            exit: EXIT_NEGATIVE,
        },
        ChamberVerdict::Indeterminate => VerdictView {
            rendered: "Indeterminate".into(),
            wall: None,
            exit: EXIT_INDETERMINATE,
        },
    }
}

#[derive(Serialize)]
struct WallOut {
    slope: String,
    rank: i64,
}

#[derive(Serialize)]
struct TestOut {
    verdict: String,
    wall: Option<WallOut>,
    #[serde(rename = "B")]
    b: String,
    g: String,
}

fn cmd_chamber_test(cli: &Cli, a: &str, b: &str) -> Result<Rendered, Failure> {
    let max_rank = checked_max_rank(cli)?;
    let a = parse_complex_pair("a", a)?;
    let b = parse_complex_pair("b", b)?;
    let point = SlicePoint::new(a, b).map_err(Failure::domain)?;
    let verdict = in_geometric_chamber(&point, max_rank).map_err(Failure::domain)?;
    let (bb, g) = point.projection_f();
    let view = verdict_view(&verdict);
    match cli.format {
        Some(Format::Json) => json_payload(
            &TestOut {
                verdict: match &verdict {
                    ChamberVerdict::Inside => "Inside".into(),
                    ChamberVerdict::OnWallBand(_) => "OnWallBand".into(),
                    ChamberVerdict::Outside => "Outside".into(),
                    ChamberVerdict::Indeterminate => "Indeterminate".into(),
                },
                wall: view.wall.as_ref().map(|(slope, rank)| WallOut {
                    slope: slope.clone(),
                    rank: *rank,
                }),
                b: slope_str(&bb),
                g: rat_str(&g),
            },
            view.exit,
        ),
        Some(Format::Csv) => Err(Failure::usage("csv output is not available for this command")),
        None => Ok(Rendered {
            payload: format!("{}\nf = ({}, {})\n", view.rendered, slope_str(&bb), rat_str(&g)),
            exit: view.exit,
        }),
    }
}

#[derive(Serialize)]
struct GridOut {
    x: String,
    y: String,
    verdict: String,
}

#[derive(Serialize)]
struct EnvelopeOut {
    x: String,
    y: String,
}

#[derive(Serialize)]
struct ExcPointOut {
    slope: String,
    rank: i64,
    delta: String,
}

#[derive(Serialize)]
struct SliceOut {
    grid: Vec<GridOut>,
    envelope: Vec<EnvelopeOut>,
    exceptional: Vec<ExcPointOut>,
}

fn rat_grid(lo: &Rat, hi: &Rat, step: &Rat) -> Vec<Rat> {
    let mut out = Vec::new();
    let mut k = rat_int(0);
    loop {
        let x = lo + &k * step;
        if &x > hi {
            return out;
        }
        out.push(x);
        k += rat_int(1);
    }
}

fn cmd_chamber_slice(
    cli: &Cli,
    xmin: &str,
    xmax: &str,
    ymin: &str,
    ymax: &str,
    step: &str,
) -> Result<Rendered, Failure> {
    let max_rank = checked_max_rank(cli)?;
    let xmin = parse_rat_arg("xmin", xmin)?;
    let xmax = parse_rat_arg("xmax", xmax)?;
    let ymin = parse_rat_arg("ymin", ymin)?;
    let ymax = parse_rat_arg("ymax", ymax)?;
    let step = parse_rat_arg("step", step)?;
    if xmin > xmax || ymin > ymax {
        return Err(Failure::usage("slice rectangle is empty"));
    }
    if step <= Rat::zero() {
        return Err(Failure::usage("--step must be positive"));
    }

    let model = EnvelopeModel::new(max_rank, xmin.clone(), xmax.clone())
        .map_err(Failure::domain)?;

    // Classify each grid point (x, y) of f-images.  The slice point with
    // a = i and b = x^2/2 - y - ix maps to exactly (B, g) = (x, y).
    let mut grid = Vec::new();
    for x in rat_grid(&xmin, &xmax, &step) {
        for y in rat_grid(&ymin, &ymax, &step) {
            let verdict = if cli.exact {
                let re_b = &(&x * &x) / rat_int(2) - &y;
                let point = SlicePoint::new(
                    RatComplex::from_ints(0, 1),
                    RatComplex::new(re_b, -x.clone()),
                )
                .map_err(Failure::domain)?;
                in_geometric_chamber(&point, max_rank).map_err(Failure::domain)?
            } else {
                let xf = rat_f64(&x);
                let yf = rat_f64(&y);
                in_geometric_chamber_f64((0.0, 1.0), (xf * xf / 2.0 - yf, -xf), max_rank)
                    .map_err(Failure::domain)?
            };
            grid.push(GridOut {
                x: rat_str(&x),
                y: rat_str(&y),
                verdict: verdict_view(&verdict).rendered,
            });
        }
    }

    let envelope: Vec<EnvelopeOut> = rat_grid(&xmin, &xmax, &step)
        .into_iter()
        .map(|x| {
            let y = model.delta_at(&x).map_err(Failure::domain)?;
            Ok(EnvelopeOut { x: rat_str(&x), y: rat_str(&y) })
        })
        .collect::<Result<_, Failure>>()?;

    let mut points: Vec<&ExceptionalClass> = model
        .contributors()
        .iter()
        .filter(|e| e.slope() >= xmin && e.slope() <= xmax)
        .collect();
    points.sort_by_key(|e| (e.slope(), e.rank()));
    let exceptional: Vec<ExcPointOut> = points
        .iter()
        .map(|e| ExcPointOut {
            slope: slope_str(&e.slope()),
            rank: e.rank(),
            delta: rat_str(&e.delta()),
        })
        .collect();

    match cli.format {
        Some(Format::Json) => {
            json_payload(&SliceOut { grid, envelope, exceptional }, EXIT_OK)
        }
        _ => {
            let mut rows: Vec<Vec<String>> = Vec::new();
            for g in &grid {
                rows.push(vec!["grid".into(), g.x.clone(), g.y.clone(), g.verdict.clone()]);
            }
            for e in &envelope {
                rows.push(vec!["envelope".into(), e.x.clone(), e.y.clone(), String::new()]);
            }
            for p in &exceptional {
                rows.push(vec![
                    "exceptional".into(),
                    p.slope.clone(),
                    p.delta.clone(),
                    String::new(),
                ]);
            }
            csv_payload(&["kind", "x", "y", "verdict"], rows, EXIT_OK)
        }
    }
}

// ---------------------------------------------------------------------------
// walls

#[derive(Deserialize)]
struct PathFile {
    waypoints: Vec<WaypointIn>,
}

#[derive(Deserialize)]
struct WaypointIn {
    a: [RatIn; 2],
    b: [RatIn; 2],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatIn {
    Text(String),
    Int(i64),
}

impl RatIn {
    fn to_rat(&self) -> Result<Rat, Failure> {
        match self {
            RatIn::Text(s) => rat_from_str(s)
                .map_err(|_| Failure::usage(format!("path file: bad rational '{s}'"))),
            RatIn::Int(n) => Ok(rat_int(*n)),
        }
    }
}

fn wall_failure(err: WallError) -> Failure {
    match err {
        WallError::BudgetExhausted { .. } => Failure::negative(err),
        _ => Failure::domain(err),
    }
}

#[derive(Serialize)]
struct CrossingRow {
    slope: String,
    rank: i64,
    side: &'static str,
    t: String,
    segment: usize,
}

fn cmd_walls_crossings(cli: &Cli, path: &PathBuf) -> Result<Rendered, Failure> {
    let max_rank = checked_max_rank(cli)?;
    let raw = fs::read_to_string(path)
        .map_err(|err| Failure::usage(format!("cannot read {}: {err}", path.display())))?;
    let parsed: PathFile = serde_json::from_str(&raw)
        .map_err(|err| Failure::usage(format!("cannot parse {}: {err}", path.display())))?;
    let mut waypoints = Vec::new();
    for w in &parsed.waypoints {
        let a = RatComplex::new(w.a[0].to_rat()?, w.a[1].to_rat()?);
        let b = RatComplex::new(w.b[0].to_rat()?, w.b[1].to_rat()?);
        waypoints.push(SlicePoint::new(a, b).map_err(Failure::domain)?);
    }
    let crossings = detect_crossings(&waypoints, max_rank).map_err(wall_failure)?;
    let rows: Vec<CrossingRow> = crossings
        .iter()
        .map(|c| CrossingRow {
            slope: slope_str(&c.b),
            rank: c.exceptional.rank(),
            side: c.side.label(),
            t: rat_str(&c.t),
            segment: c.segment,
        })
        .collect();
    match cli.format {
        Some(Format::Csv) => csv_payload(
            &["slope", "rank", "side", "t", "segment"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.slope.clone(),
                        r.rank.to_string(),
                        r.side.to_string(),
                        r.t.clone(),
                        r.segment.to_string(),
                    ]
                })
                .collect(),
            EXIT_OK,
        ),
        _ => json_payload(&rows, EXIT_OK),
    }
}

#[derive(Serialize)]
struct TwistStepOut {
    class: KClass,
    slope: String,
    rank: i64,
    power: i64,
}

#[derive(Serialize)]
struct NormalizeOut {
    word: Vec<TwistStepOut>,
    matrix: [[i64; 3]; 3],
    point: PointOut,
    lambda: [f64; 2],
}

#[derive(Serialize)]
struct PointOut {
    a: ComplexOut,
    b: ComplexOut,
}

fn cmd_walls_normalize(
    cli: &Cli,
    zc: &str,
    zd: &str,
    zr: &str,
    gen_rank: i64,
    budget: usize,
) -> Result<Rendered, Failure> {
    reject_csv(cli)?;
    let max_rank = checked_max_rank(cli)?;
    if gen_rank < 1 {
        return Err(Failure::usage(format!("--gen-rank must be at least 1, got {gen_rank}")));
    }
    let charge = CentralCharge::new(
        parse_complex_pair("zc", zc)?,
        parse_complex_pair("zd", zd)?,
        parse_complex_pair("zr", zr)?,
    );
    let found =
        normalize_to_geometric(&charge, max_rank, gen_rank, budget).map_err(wall_failure)?;
    let word: Vec<TwistStepOut> = found
        .word
        .iter()
        .map(|step| TwistStepOut {
            class: step.class,
            slope: slope_str(&rat(step.class.d, step.class.r)),
            rank: step.class.r,
            power: step.power,
        })
        .collect();
    let out = NormalizeOut {
        word,
        matrix: found.matrix.0,
        point: PointOut {
            a: complex_fields(found.normalized.point.a()),
            b: complex_fields(found.normalized.point.b()),
        },
        lambda: [found.normalized.lambda.0, found.normalized.lambda.1],
    };
    json_payload(&out, EXIT_OK)
}

// ---------------------------------------------------------------------------
// group

#[derive(Serialize)]
struct WordOut {
    slope: String,
    rank: i64,
    word: String,
    tokens: Vec<String>,
    matrix: [[i64; 3]; 3],
}

fn cmd_group_word(cli: &Cli, slope: &str, max_len: usize) -> Result<Rendered, Failure> {
    let max_rank = checked_max_rank(cli)?;
    let slope = parse_rat_arg("slope", slope)?;
    let class = exceptional_at_slope(&slope, max_rank).ok_or_else(|| {
        Failure::domain(format!(
            "no exceptional class of slope {} within rank bound {max_rank}",
            slope_str(&slope)
        ))
    })?;
    let target = matrix_half_twist(&class.class).map_err(Failure::internal)?;
    let word = express_twist_as_word(&target, max_len).ok_or_else(|| {
        Failure::negative(format!("no word of length <= {max_len} expresses this twist"))
    })?;
    let tokens: Vec<String> = word.iter().map(|g| g.token().to_string()).collect();
    let joined = tokens.join(" ");
    match cli.format {
        Some(Format::Json) => json_payload(
            &WordOut {
                slope: slope_str(&slope),
                rank: class.rank(),
                word: joined,
                tokens,
                matrix: target.0,
            },
            EXIT_OK,
        ),
        Some(Format::Csv) => Err(Failure::usage("csv output is not available for this command")),
        None => Ok(Rendered::ok(format!("{joined}\n"))),
    }
}

#[derive(Serialize)]
struct RelationOut {
    relation: &'static str,
    holds: bool,
}

fn cmd_group_verify_relation(cli: &Cli) -> Result<Rendered, Failure> {
    let holds = verify_braid_relation();
    let exit = if holds { EXIT_OK } else { EXIT_NEGATIVE };
    match cli.format {
        Some(Format::Json) => {
            json_payload(&RelationOut { relation: "(a b)^3 = 1", holds }, exit)
        }
        Some(Format::Csv) => Err(Failure::usage("csv output is not available for this command")),
        None => Ok(Rendered {
            payload: format!("(a b)^3 = 1 on the lattice: {holds}\n"),
            exit,
        }),
    }
}

#[derive(Deserialize)]
struct ElementIn {
    #[serde(default)]
    shift: i64,
    #[serde(default)]
    word: String,
    /// Permutation of the three components, 1-based.
    perm: Option<[usize; 3]>,
    scalars: Option<[String; 3]>,
}

#[derive(Serialize)]
struct ElementOut {
    shift: i64,
    word: String,
    perm: [usize; 3],
    scalars: [String; 3],
    k_matrix: [[i64; 3]; 3],
}

fn parse_element(name: &str, s: &str) -> Result<AutElement, Failure> {
    let raw: ElementIn = serde_json::from_str(s)
        .map_err(|err| Failure::usage(format!("--{name}: bad element JSON: {err}")))?;
    let gamma = parse_word(&raw.word)
        .map_err(|err| Failure::usage(format!("--{name}: {err}")))?;
    let perm = match raw.perm {
        Some(p) => {
            let mut zero_based = [0usize; 3];
            for (slot, v) in zero_based.iter_mut().zip(p) {
                if !(1..=3).contains(&v) {
                    return Err(Failure::usage(format!(
                        "--{name}: perm entries must be 1, 2, 3"
                    )));
                }
                *slot = v - 1;
            }
            zero_based
        }
        None => [0, 1, 2],
    };
    let scalars = match raw.scalars {
        Some(s3) => {
            let parse = |t: &String| {
                rat_complex_from_str(t).map_err(|_| {
                    Failure::usage(format!("--{name}: cannot parse scalar '{t}'"))
                })
            };
            [parse(&s3[0])?, parse(&s3[1])?, parse(&s3[2])?]
        }
        None => [RatComplex::one(), RatComplex::one(), RatComplex::one()],
    };
    let autx = AutXElement::new(perm, scalars)
        .map_err(|err| Failure::usage(format!("--{name}: {err}")))?;
    Ok(AutElement { shift: raw.shift, gamma, autx })
}

fn cmd_group_compose(cli: &Cli, x: &str, y: &str) -> Result<Rendered, Failure> {
    reject_csv(cli)?;
    let x = parse_element("x", x)?;
    let y = parse_element("y", y)?;
    let z = group_compose(&x, &y);
    let tokens: Vec<&str> = z.gamma.iter().map(|g| g.token()).collect();
    let perm = z.autx.perm();
    let scalars = z.autx.scalars();
    let out = ElementOut {
        shift: z.shift,
        word: tokens.join(" "),
        perm: [perm[0] + 1, perm[1] + 1, perm[2] + 1],
        scalars: [
            scalars[0].to_string(),
            scalars[1].to_string(),
            scalars[2].to_string(),
        ],
        k_matrix: z.k_matrix().0,
    };
    json_payload(&out, EXIT_OK)
}

// ---------------------------------------------------------------------------
// pic

#[derive(Serialize)]
struct NormalFormOut {
    n: [i64; 3],
    holonomy: ComplexOut,
}

fn cmd_pic_normalform(cli: &Cli, n: &str, phi: &str) -> Result<Rendered, Failure> {
    reject_csv(cli)?;
    let n = parse_int_triple("n", n)?;
    let phi = parse_scalar_triple("phi", phi)?;
    let data = GluingData::new(n, phi).map_err(Failure::domain)?;
    let nf = data.normal_form();
    json_payload(
        &NormalFormOut { n: nf.degrees, holonomy: complex_fields(&nf.holonomy) },
        EXIT_OK,
    )
}

#[derive(Serialize)]
struct GlueOut {
    glues: bool,
    degree: Option<i64>,
}

fn cmd_pic_glue(cli: &Cli, deg0: i64, n: &str, phi: &str) -> Result<Rendered, Failure> {
    reject_csv(cli)?;
    let n = parse_int_triple("n", n)?;
    let phi = parse_scalar_triple("phi", phi)?;
    let data = GluingData::new(n, phi).map_err(Failure::domain)?;
    match glue_on_x(deg0, &data) {
        Some(degree) => json_payload(&GlueOut { glues: true, degree: Some(degree) }, EXIT_OK),
        None => json_payload(&GlueOut { glues: false, degree: None }, EXIT_NEGATIVE),
    }
}

// ---------------------------------------------------------------------------
// selftest

fn random_class(rng: &mut ChaCha8Rng) -> KClass {
    KClass::new(
        rng.random_range(-40..=40),
        rng.random_range(-40..=40),
        rng.random_range(-12..=12),
    )
}

fn cmd_selftest(cli: &Cli) -> Result<Rendered, Failure> {
    reject_csv(cli)?;
    let seed = cli.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    let mut pass = |name: &str, cases: usize| {
        lines.push(format!("ok {name} ({cases} cases)"));
    };

    // Skew pairing: antisymmetry and additivity.
    let cases = 200;
    for _ in 0..cases {
        let v = random_class(&mut rng);
        let w = random_class(&mut rng);
        let u = random_class(&mut rng);
        if skew_pairing(&v, &w) != -skew_pairing(&w, &v) {
            return Err(Failure::internal("selftest: skew antisymmetry failed"));
        }
        if skew_pairing(&(v + w), &u) != skew_pairing(&v, &u) + skew_pairing(&w, &u) {
            return Err(Failure::internal("selftest: skew additivity failed"));
        }
    }
    pass("skew-pairing", cases);

    // Euler pairing vs the normalized Riemann-Roch form.
    let cases = 200;
    for _ in 0..cases {
        let mut v = random_class(&mut rng);
        let mut w = random_class(&mut rng);
        v.r = rng.random_range(1..=12);
        w.r = rng.random_range(1..=12);
        let lhs = rat(euler_p2(&v, &w), v.r * w.r);
        let gap = w.slope().expect("positive rank") - v.slope().expect("positive rank");
        let rhs = pp(&gap)
            - v.discriminant().expect("positive rank")
            - w.discriminant().expect("positive rank");
        if lhs != rhs {
            return Err(Failure::internal("selftest: Riemann-Roch form failed"));
        }
    }
    pass("euler-riemann-roch", cases);

    // Twist matrices: unimodular, skew isometries, fix the point class.
    let classes = enumerate(13);
    let cases = 100;
    for _ in 0..cases {
        let e = &classes[rng.random_range(0..classes.len())];
        let m = matrix_half_twist(&e.class).map_err(Failure::internal)?;
        if m.det() != 1 {
            return Err(Failure::internal("selftest: twist determinant != 1"));
        }
        if !m.preserves_skew_pairing() {
            return Err(Failure::internal("selftest: twist does not preserve skew form"));
        }
        if m.apply(&KClass::point()) != KClass::point() {
            return Err(Failure::internal("selftest: twist moves the point class"));
        }
        if m.apply(&e.class) != e.class {
            return Err(Failure::internal("selftest: twist moves its own class"));
        }
    }
    pass("half-twists", cases);

    // Symmetry-group words: determinant and congruence of the 2x2 image.
    let gens = kstability::autgroup::TWIST_GENERATORS;
    let cases = 100;
    for _ in 0..cases {
        let len = rng.random_range(0..=12);
        let word: Vec<_> = (0..len).map(|_| gens[rng.random_range(0..4)]).collect();
        let m = kstability::autgroup::word_matrix(&word);
        let img = gamma13_image(&m).map_err(Failure::internal)?;
        if img[0][0] * img[1][1] - img[0][1] * img[1][0] != 1 {
            return Err(Failure::internal("selftest: word image determinant != 1"));
        }
        if img[0][0].rem_euclid(3) != 1
            || img[1][0].rem_euclid(3) != 0
            || img[1][1].rem_euclid(3) != 1
        {
            return Err(Failure::internal("selftest: word image congruence failed"));
        }
    }
    pass("group-words", cases);

    // Gluing data: normal form is a homomorphism for tensor and dual.
    let cases = 50;
    for _ in 0..cases {
        let scalar = |rng: &mut ChaCha8Rng| loop {
            let z = RatComplex::from_ints(rng.random_range(-4..=4), rng.random_range(-4..=4));
            if !z.is_zero() {
                return z;
            }
        };
        let deg = |rng: &mut ChaCha8Rng| {
            [
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
            ]
        };
        let g = GluingData::new(deg(&mut rng), [
            scalar(&mut rng),
            scalar(&mut rng),
            scalar(&mut rng),
        ])
        .map_err(Failure::internal)?;
        let h = GluingData::new(deg(&mut rng), [
            scalar(&mut rng),
            scalar(&mut rng),
            scalar(&mut rng),
        ])
        .map_err(Failure::internal)?;
        let t = g.tensor(&h).normal_form();
        if t.holonomy != &g.holonomy() * &h.holonomy() {
            return Err(Failure::internal("selftest: holonomy not multiplicative"));
        }
        if !g.tensor(&g.dual()).is_isomorphic(&GluingData::uniform(0)) {
            return Err(Failure::internal("selftest: dual is not an inverse"));
        }
    }
    pass("gluing-data", cases);

    if verify_braid_relation() {
        pass("braid-relation", 1);
    } else {
        return Err(Failure::internal("selftest: (a b)^3 != 1"));
    }

    let mut payload = format!("seed {seed}\n");
    payload.push_str(&lines.join("\n"));
    payload.push('\n');
    Ok(Rendered::ok(payload))
}
