//! Command line front end: decide, normalize, realize, verify, render.
//!
//! All reports are line-oriented `key=value` text on standard output, and
//! every byte written is a deterministic function of the inputs and the
//! `--seed` flag. Exit codes: 0 success, 1 negative verdict (not realizable,
//! or a certificate that fails verification), 2 normalization heuristic
//! exhausted, 3 unreadable or invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::builder::{
    realize, Realization, RealizationCertificate, RealizeOptions,
};
use crate::chi::{
    decide, image_group, volume, ImageClass, Partition, PeriodVector, Verdict,
};
use crate::sp_action::{
    generic_normalize_heuristic, genus2_normalize, lattice_normal_form, NormalForm,
};
use crate::surface::{verify_certificate, MarkedCurve, TranslationSurface, VerificationReport};
use crate::svg;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Reseeded runs of the normalization heuristic before giving up, matching
/// the builder's retry budget.
const NORMALIZE_ATTEMPTS: u64 = 8;

#[derive(Parser)]
#[command(
    name = "periods",
    version,
    about = "Decide which period characters arise from abelian differentials, \
             and build certified translation surfaces for those that do"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide realizability of a character in a stratum (exact arithmetic).
    Decide(DecideArgs),
    /// Bring a character to normal form; write the change of basis.
    Normalize(NormalizeArgs),
    /// Build a translation surface realizing the character, with a
    /// machine-checkable certificate.
    Realize(RealizeArgs),
    /// Re-derive every claim one or more certificate files make.
    Verify(VerifyArgs),
    /// Draw a surface (TSURF or certificate file) as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct ChiInput {
    /// Character file: `genus <g> [d <d>]` header, then one period `(re, im)`
    /// per line.
    #[arg(long, value_name = "FILE")]
    chi: PathBuf,
    /// Declared radicand of the coefficient field; rejects characters that
    /// do not live in Q(sqrt d, i).
    #[arg(long, value_name = "D")]
    field_d: Option<u64>,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    input: ChiInput,
    /// Singularity orders "n1,n2,..." summing to 2g-2.
    #[arg(long, value_name = "PARTS")]
    partition: String,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    input: ChiInput,
    /// Singularity orders "n1,n2,..."; selects the target normal form.
    #[arg(long, value_name = "PARTS")]
    partition: String,
    /// Write the normal form here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Step budget per heuristic run (dense images of genus >= 3).
    #[arg(long, value_name = "N", default_value_t = 4000)]
    max_steps: usize,
    /// Seed for the normalization heuristic.
    #[arg(long, value_name = "S", default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RealizeArgs {
    #[command(flatten)]
    input: ChiInput,
    /// Singularity orders "n1,n2,..." summing to 2g-2.
    #[arg(long, value_name = "PARTS")]
    partition: String,
    /// Write the certificate here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also render the built surface to this SVG file.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Step budget per heuristic run (dense images of genus >= 3).
    #[arg(long, value_name = "N", default_value_t = 4000)]
    max_steps: usize,
    /// Seed for the normalization heuristic.
    #[arg(long, value_name = "S", default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate files to check.
    #[arg(value_name = "CERT", required = true)]
    files: Vec<PathBuf>,
    /// Verify up to N files in parallel.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct RenderArgs {
    /// A TSURF surface file or a CERT certificate file.
    #[arg(value_name = "FILE")]
    file: PathBuf,
    /// Write the SVG here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn run() -> std::process::ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return std::process::ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => std::process::ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {}", msg);
            std::process::ExitCode::from(EXIT_INPUT)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, String> {
    match command {
        Command::Decide(args) => cmd_decide(args),
        Command::Normalize(args) => cmd_normalize(args),
        Command::Realize(args) => cmd_realize(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Render(args) => cmd_render(args),
    }
}

/// Reads and parses a character file, reporting the first offending line.
fn read_chi(input: &ChiInput) -> Result<PeriodVector, String> {
    let path = &input.chi;
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {}", path.display(), e))?;
    let chi: PeriodVector = text.parse().map_err(|top| {
        // The format is line oriented, so point at the first bad line.
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (i == 0 && t.starts_with("genus")) {
                continue;
            }
            if t.parse::<crate::field::PlanePoint>().is_err() {
                return format!("{}:{}: bad period `{}`", path.display(), i + 1, t);
            }
        }
        format!("{}: {}", path.display(), top)
    })?;
    if let Some(d) = input.field_d {
        // Radicand 1 denotes rational entries, contained in every Q(sqrt d).
        if chi.radicand() != 1 && chi.radicand() != d {
            return Err(format!(
                "{}: character lives in radicand {} but --field-d declares {}",
                path.display(),
                chi.radicand(),
                d
            ));
        }
    }
    Ok(chi)
}

fn parse_partition(text: &str, chi: &PeriodVector) -> Result<Partition, String> {
    let part: Partition = text
        .parse()
        .map_err(|e| format!("--partition: {}", e))?;
    if part.genus() != chi.genus() {
        return Err(format!(
            "--partition: genus {} does not match the character's genus {}",
            part.genus(),
            chi.genus()
        ));
    }
    Ok(part)
}

fn class_label(class: ImageClass) -> &'static str {
    match class {
        ImageClass::Trivial => "trivial",
        ImageClass::LineDiscrete => "line-discrete",
        ImageClass::LineDense => "line-dense",
        ImageClass::Lattice => "lattice",
        ImageClass::PlaneDense => "plane-dense",
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {}", path.display(), e))
}

/// `a1, b1, a2, b2, ...` labels for a marked basis, for TSURF and SVG output.
fn named_basis(cert: &RealizationCertificate) -> Vec<(String, MarkedCurve)> {
    cert.marked_basis
        .iter()
        .enumerate()
        .map(|(slot, c)| {
            let kind = if slot % 2 == 0 { "a" } else { "b" };
            (format!("{}{}", kind, slot / 2 + 1), c.clone())
        })
        .collect()
}

fn cmd_decide(args: DecideArgs) -> Result<u8, String> {
    let chi = read_chi(&args.input)?;
    let part = parse_partition(&args.partition, &chi)?;
    let verdict = decide(&chi, &part).map_err(|e| e.to_string())?;
    let report = image_group(&chi);
    println!(
        "verdict={}",
        match verdict {
            Verdict::Realizable => "REALIZABLE",
            Verdict::NotRealizable(_) => "NOT_REALIZABLE",
        }
    );
    println!("image={}", class_label(report.class));
    println!("volume={}", volume(&chi));
    match verdict {
        Verdict::Realizable => Ok(EXIT_OK),
        Verdict::NotRealizable(reason) => {
            println!("reason={}", reason);
            Ok(EXIT_NEGATIVE)
        }
    }
}

/// The normalization stage of the pipeline, exposed on its own: picks the
/// normal form the image class calls for and reports the change of basis.
fn normalize_for(
    chi: &PeriodVector,
    part: &Partition,
    max_steps: usize,
    seed: u64,
) -> Result<Option<NormalForm>, String> {
    if volume(chi).qsign() <= 0 {
        return Err("volume must be positive; no normal form applies".into());
    }
    let report = image_group(chi);
    match report.class {
        ImageClass::Lattice => {
            let m = crate::builder::lattice_m_vector(part);
            lattice_normal_form(chi, &m).map(Some).map_err(|e| e.to_string())
        }
        ImageClass::PlaneDense if chi.genus() == 2 => {
            genus2_normalize(chi).map(Some).map_err(|e| e.to_string())
        }
        ImageClass::PlaneDense => {
            let m_scale = crate::builder::required_scale(part);
            for attempt in 0..NORMALIZE_ATTEMPTS {
                let nf = generic_normalize_heuristic(
                    chi,
                    &m_scale,
                    max_steps,
                    seed.wrapping_add(attempt),
                )
                .map_err(|e| e.to_string())?;
                if nf.is_some() {
                    return Ok(nf);
                }
            }
            Ok(None)
        }
        other => Err(format!(
            "image group is {}; only plane lattices and dense plane images have a normal form",
            class_label(other)
        )),
    }
}

fn cmd_normalize(args: NormalizeArgs) -> Result<u8, String> {
    let chi = read_chi(&args.input)?;
    let part = parse_partition(&args.partition, &chi)?;
    let nf = match normalize_for(&chi, &part, args.max_steps, args.seed)? {
        Some(nf) => nf,
        None => {
            println!("status=heuristic-exhausted");
            return Ok(EXIT_EXHAUSTED);
        }
    };
    let text = nf.to_text();
    match &args.out {
        Some(path) => {
            write_out(path, &text)?;
            println!("status=normal-form");
            println!("tag={}", nf.tag.label());
            println!("out={}", path.display());
        }
        None => print!("{}", text),
    }
    Ok(EXIT_OK)
}

fn cmd_realize(args: RealizeArgs) -> Result<u8, String> {
    let chi = read_chi(&args.input)?;
    let part = parse_partition(&args.partition, &chi)?;
    let options = RealizeOptions {
        m_scale: None,
        max_steps: args.max_steps,
        seed: args.seed,
    };
    let outcome = realize(&chi, &part, &options).map_err(|e| e.to_string())?;
    let cert = match outcome {
        Realization::Certificate(cert) => cert,
        Realization::NotRealizable(reason) => {
            println!("status=not-realizable");
            println!("reason={}", reason);
            return Ok(EXIT_NEGATIVE);
        }
        Realization::HeuristicExhausted => {
            println!("status=heuristic-exhausted");
            return Ok(EXIT_EXHAUSTED);
        }
    };
    if let Some(path) = &args.svg {
        write_out(path, &svg::render_surface(&cert.surface, &named_basis(&cert)))?;
    }
    let text = cert.to_text();
    match &args.out {
        Some(path) => {
            write_out(path, &text)?;
            println!("status=certificate");
            println!("stratum={}", cert.partition);
            println!("polygons={}", cert.surface.polygons().len());
            println!("out={}", path.display());
            if let Some(path) = &args.svg {
                println!("svg={}", path.display());
            }
        }
        None => print!("{}", text),
    }
    Ok(EXIT_OK)
}

fn verify_one(path: &Path) -> Result<VerificationReport, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {}", path.display(), e))?;
    let cert = RealizationCertificate::from_text(&text)
        .map_err(|e| format!("{}: {}", path.display(), e))?;
    Ok(verify_certificate(&cert))
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, String> {
    let jobs = args.jobs.max(1).min(args.files.len().max(1));
    let results: Vec<Option<Result<VerificationReport, String>>> = {
        let slots = Mutex::new(vec![None; args.files.len()]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= args.files.len() {
                        break;
                    }
                    let r = verify_one(&args.files[i]);
                    slots.lock().unwrap()[i] = Some(r);
                });
            }
        });
        slots.into_inner().unwrap()
    };
    let mut valid = 0usize;
    let mut bad_input = false;
    let mut failed = false;
    for (path, result) in args.files.iter().zip(results) {
        println!("file={}", path.display());
        match result.expect("every slot is filled") {
            Ok(report) => {
                for check in &report.checks {
                    println!(
                        "check={} result={} detail={}",
                        check.name,
                        if check.passed { "pass" } else { "fail" },
                        check.detail
                    );
                }
                if report.all_passed() {
                    valid += 1;
                    println!("certificate=valid");
                } else {
                    failed = true;
                    println!("certificate=invalid");
                }
            }
            Err(msg) => {
                bad_input = true;
                println!("error={}", msg);
            }
        }
    }
    println!("summary={}/{}", valid, args.files.len());
    if bad_input {
        Ok(EXIT_INPUT)
    } else if failed {
        Ok(EXIT_NEGATIVE)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_render(args: RenderArgs) -> Result<u8, String> {
    let path = &args.file;
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {}", path.display(), e))?;
    let document = if text.starts_with("CERT") {
        let cert = RealizationCertificate::from_text(&text)
            .map_err(|e| format!("{}: {}", path.display(), e))?;
        svg::render_surface(&cert.surface, &named_basis(&cert))
    } else if text.starts_with("TSURF") {
        let (surface, named) = TranslationSurface::from_text(&text)
            .map_err(|e| format!("{}: {}", path.display(), e))?;
        svg::render_surface(&surface, &named)
    } else {
        return Err(format!(
            "{}: expected a CERT or TSURF header on the first line",
            path.display()
        ));
    };
    match &args.out {
        Some(out) => {
            write_out(out, &document)?;
            println!("svg={}", out.display());
        }
        None => print!("{}", document),
    }
    Ok(EXIT_OK)
}
