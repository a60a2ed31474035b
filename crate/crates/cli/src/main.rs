//! `endslab` command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use endslab::components::{default_margin, k_components, EngineChoice};
use endslab::{
    are_close, ball, build_witness, check_coarse, component_threads, end_profile, epsilon_equivalent,
    epsilon_search_k, induced_end_map, verify_certificate, verify_witness, BoundedRegion, CoarseMapSpec,
    CoarseSequence, EpsCertificate, EpsOptions, EpsVerdict, Error, Limits, SpaceDescriptor, Witness,
};

#[derive(Parser)]
#[command(name = "endslab", version, about = "Ends, sequential ends and component threads of locally finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum, PartialEq, Eq)]
enum Format {
    #[default]
    Json,
    Csv,
    Dot,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Point cap for windows and searches (default: ENDSLAB_CAP or 1000000).
    #[arg(long)]
    cap: Option<usize>,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Scale {
    /// Space descriptor, inline JSON or a file path.
    #[arg(long)]
    space: String,
    #[arg(long = "K", default_value_t = 1)]
    k: u64,
    #[arg(long, default_value_t = 8)]
    rmax: u64,
    /// Horizon margin beyond rmax (default 2K+4).
    #[arg(long)]
    margin: Option<u64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Window,
    Tree,
}

impl From<EngineArg> for EngineChoice {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => EngineChoice::Auto,
            EngineArg::Window => EngineChoice::Window,
            EngineArg::Tree => EngineChoice::Tree,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled space descriptors.
    Spaces {
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate a closed ball.
    Ball {
        #[arg(long)]
        space: String,
        /// Centre (default: the basepoint).
        #[arg(long)]
        center: Option<String>,
        /// Radius.
        #[arg(long, alias = "radius")]
        rmax: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Live K-component counts outside B(ξ; r), r = 1..rmax.
    Ends {
        #[command(flatten)]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
    /// The thread system of K-components up to rmax.
    Threads {
        #[command(flatten)]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
    /// K-components outside B(ξ; rmax) in the window of radius rmax + margin.
    Components {
        #[command(flatten)]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
    /// ε-equivalence of two sequences, with a certificate or refutation.
    Eps {
        #[command(flatten)]
        seq: SeqArgs,
        /// Verify a certificate file instead of running the procedure.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build and check the concatenation witness for two ε-equivalent sequences.
    Witness {
        #[command(flatten)]
        seq: SeqArgs,
        /// Build from this certificate instead of running the procedure.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Probe-scale check that a map is bornologous and proper.
    MapCheck {
        #[arg(long)]
        map: String,
        /// Probe radius.
        #[arg(long, default_value_t = 16)]
        rmax: u64,
        /// Input threshold for the bornologous check.
        #[arg(long = "K", default_value_t = 1)]
        k: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Probe-scale closeness of two maps.
    MapClose {
        #[arg(long)]
        map: String,
        #[arg(long)]
        other: String,
        #[arg(long, default_value_t = 16)]
        rmax: u64,
        #[command(flatten)]
        common: Common,
    },
    /// The map a coarse map induces on threads.
    MapEnds {
        #[arg(long)]
        map: String,
        #[arg(long = "K", default_value_t = 1)]
        k: u64,
        #[arg(long, default_value_t = 8)]
        rmax: u64,
        #[arg(long)]
        margin: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Replay a certificate or witness file.
    Verify {
        #[arg(long, conflicts_with = "witness", required_unless_present = "witness")]
        certificate: Option<PathBuf>,
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Largest radius to check witness escape positions for (default: all).
        #[arg(long)]
        rmax: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct SeqArgs {
    #[arg(long)]
    space: Option<String>,
    /// First sequence, inline JSON or a file path.
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long = "K", default_value_t = 1)]
    k: u64,
    /// Search K = 1..Kmax for the least certifying threshold.
    #[arg(long = "Kmax")]
    k_max: Option<u64>,
    #[arg(long, default_value_t = 16)]
    rmax: u64,
    #[arg(long)]
    margin: Option<u64>,
    /// Working prefix length.
    #[arg(long)]
    prefix: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
}

/// A finished command: output text and exit status.
struct Outcome {
    text: String,
    status: u8,
}

fn ok(text: String) -> Outcome {
    Outcome { text, status: 0 }
}

fn verdict(text: String, positive: bool) -> Outcome {
    Outcome {
        text,
        status: if positive { 0 } else { 1 },
    }
}

fn read_doc(arg: &str) -> Result<String, Error> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Input(format!("cannot read {arg}: {e}")))
    }
}

fn read_file(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, Error> {
    Ok(serde_json::from_str(&read_doc(arg)?)?)
}

fn parse_space(arg: &str, limits: &Limits) -> Result<SpaceDescriptor, Error> {
    endslab::spaces::parse_descriptor_with(&read_doc(arg)?, limits)
}

fn json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn no_format(format: Format, what: &str) -> Result<(), Error> {
    match format {
        Format::Json => Ok(()),
        _ => Err(Error::Input(format!("{what} output is JSON only"))),
    }
}

fn limits(common: &Common) -> Limits {
    let l = Limits::from_env();
    match common.cap {
        Some(cap) => l.with_point_cap(cap),
        None => l,
    }
}

fn run(command: Command) -> Result<(Outcome, Common), Error> {
    match command {
        Command::Spaces { common } => {
            let list = endslab::fixtures::spaces();
            let text = match common.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Entry<'a> {
                        name: &'a str,
                        descriptor: &'a SpaceDescriptor,
                    }
                    json(&list.iter().map(|(name, d)| Entry { name, descriptor: d }).collect::<Vec<_>>())?
                }
                Format::Csv => {
                    let mut out = String::from("name,descriptor\n");
                    for (name, d) in &list {
                        out.push_str(&format!("{name},\"{}\"\n", d.to_string().replace('"', "\"\"")));
                    }
                    out
                }
                Format::Dot => return Err(Error::Input("spaces has no DOT output".into())),
            };
            Ok((ok(text), common))
        }
        Command::Ball { space, center, rmax, common } => {
            let limits = limits(&common);
            let space = parse_space(&space, &limits)?;
            let center = match center {
                Some(c) => space.parse_point(&c)?,
                None => space.basepoint().clone(),
            };
            let w = ball(&space, &center, rmax, &limits)?;
            let text = match common.format {
                Format::Json => json(&w.to_doc())?,
                Format::Csv => {
                    let mut rows: Vec<(u64, String)> = (0..w.len()).map(|i| (w.depth(i), w.point(i).to_string())).collect();
                    rows.sort();
                    let mut out = String::from("point,distance\n");
                    for (d, p) in rows {
                        out.push_str(&format!("\"{p}\",{d}\n"));
                    }
                    out
                }
                Format::Dot => {
                    let mut out = String::from("graph ball {\n");
                    for (a, b, _) in w.edges() {
                        out.push_str(&format!("  \"{}\" -- \"{}\";\n", w.point(a), w.point(b)));
                    }
                    out.push_str("}\n");
                    out
                }
            };
            Ok((ok(text), common))
        }
        Command::Ends { scale, common } => {
            let limits = limits(&common);
            let space = parse_space(&scale.space, &limits)?;
            let margin = scale.margin.unwrap_or_else(|| default_margin(scale.k));
            let profile = end_profile(&space, scale.k, scale.rmax, margin, scale.engine.into(), &limits)?;
            let text = match common.format {
                Format::Json => json(&profile)?,
                Format::Csv => profile.to_csv(),
                Format::Dot => return Err(Error::Input("ends has no DOT output".into())),
            };
            Ok((ok(text), common))
        }
        Command::Threads { scale, common } => {
            let limits = limits(&common);
            let space = parse_space(&scale.space, &limits)?;
            let margin = scale.margin.unwrap_or_else(|| default_margin(scale.k));
            let system = component_threads(&space, scale.k, scale.rmax, margin, scale.engine.into(), &limits)?;
            let text = match common.format {
                Format::Json => json(&system)?,
                Format::Csv => system.to_csv(),
                Format::Dot => system.to_dot(),
            };
            Ok((ok(text), common))
        }
        Command::Components { scale, common } => {
            let limits = limits(&common);
            let space = parse_space(&scale.space, &limits)?;
            let margin = scale.margin.unwrap_or_else(|| default_margin(scale.k));
            let w = ball(&space, space.basepoint(), scale.rmax + margin.max(1), &limits)?;
            let region = BoundedRegion::new(space.basepoint().clone(), scale.rmax);
            let part = k_components(&w, &region, scale.k)?;
            let text = match common.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Doc<'a> {
                        radius: u64,
                        k: u64,
                        horizon: u64,
                        live: usize,
                        classes: &'a [endslab::components::ComponentClass],
                    }
                    json(&Doc {
                        radius: scale.rmax,
                        k: scale.k,
                        horizon: part.horizon,
                        live: part.live_count(),
                        classes: &part.classes,
                    })?
                }
                Format::Csv => {
                    let mut out = String::from("class,live,size\n");
                    for c in &part.classes {
                        out.push_str(&format!("\"{}\",{},{}\n", c.id, c.live, c.members.len()));
                    }
                    out
                }
                Format::Dot => return Err(Error::Input("components has no DOT output".into())),
            };
            Ok((ok(text), common))
        }
        Command::Eps { seq, verify, common } => {
            let limits = limits(&common);
            no_format(common.format, "eps")?;
            if let Some(path) = verify {
                let cert: EpsCertificate = serde_json::from_str(&read_file(&path)?)?;
                let report = verify_certificate(&cert, &limits);
                return Ok((verdict(json(&report)?, report.ok), common));
            }
            let v = run_eps(&seq, &limits)?;
            let positive = v.is_equivalent();
            Ok((verdict(json(&v)?, positive), common))
        }
        Command::Witness { seq, certificate, common } => {
            let limits = limits(&common);
            no_format(common.format, "witness")?;
            let cert = match certificate {
                Some(path) => serde_json::from_str::<EpsCertificate>(&read_file(&path)?)?,
                None => match run_eps(&seq, &limits)? {
                    EpsVerdict::Certificate(c) => c,
                    refuted @ EpsVerdict::Refutation(_) => return Ok((verdict(json(&refuted)?, false), common)),
                },
            };
            let w = build_witness(&cert, &limits)?;
            let report = verify_witness(&w, cert.r_max, &limits);
            #[derive(Serialize)]
            struct Doc<'a> {
                witness: &'a Witness,
                report: &'a endslab::VerifyReport,
            }
            Ok((verdict(json(&Doc { witness: &w, report: &report })?, report.ok), common))
        }
        Command::MapCheck { map, rmax, k, common } => {
            let limits = limits(&common);
            no_format(common.format, "map-check")?;
            let f: CoarseMapSpec = parse(&map)?;
            let report = check_coarse(&f, rmax, k, &limits)?;
            Ok((verdict(json(&report)?, report.coarse), common))
        }
        Command::MapClose { map, other, rmax, common } => {
            let limits = limits(&common);
            no_format(common.format, "map-close")?;
            let f: CoarseMapSpec = parse(&map)?;
            let g: CoarseMapSpec = parse(&other)?;
            let report = are_close(&f, &g, rmax, &limits)?;
            Ok((verdict(json(&report)?, report.close), common))
        }
        Command::MapEnds { map, k, rmax, margin, common } => {
            let limits = limits(&common);
            let f: CoarseMapSpec = parse(&map)?;
            let margin = margin.unwrap_or_else(|| default_margin(k));
            let m = induced_end_map(&f, k, rmax, margin, &limits)?;
            let text = match common.format {
                Format::Json => json(&m)?,
                Format::Csv => {
                    let mut out = String::from("source_thread,target_thread\n");
                    for (a, b) in &m.mapping {
                        out.push_str(&format!("\"{a}\",\"{b}\"\n"));
                    }
                    out
                }
                Format::Dot => {
                    let mut out = String::from("digraph ends {\n  rankdir=LR;\n");
                    for (a, b) in &m.mapping {
                        out.push_str(&format!("  \"src:{a}\" -> \"tgt:{b}\";\n"));
                    }
                    out.push_str("}\n");
                    out
                }
            };
            Ok((ok(text), common))
        }
        Command::Verify { certificate, witness, rmax, common } => {
            let limits = limits(&common);
            no_format(common.format, "verify")?;
            let report = if let Some(path) = certificate {
                let cert: EpsCertificate = serde_json::from_str(&read_file(&path)?)?;
                verify_certificate(&cert, &limits)
            } else {
                let path = witness.expect("clap enforces one of the two");
                let w: Witness = serde_json::from_str(&read_file(&path)?)?;
                let r_probe = rmax.unwrap_or((w.escape.len() as u64).saturating_sub(1));
                verify_witness(&w, r_probe, &limits)
            };
            Ok((verdict(json(&report)?, report.ok), common))
        }
    }
}

fn run_eps(seq: &SeqArgs, limits: &Limits) -> Result<EpsVerdict, Error> {
    let need = |v: &Option<String>, flag: &str| v.clone().ok_or_else(|| Error::Input(format!("--{flag} is required")));
    let space = parse_space(&need(&seq.space, "space")?, limits)?;
    let s: CoarseSequence = parse(&need(&seq.s, "s")?)?;
    let t: CoarseSequence = parse(&need(&seq.t, "t")?)?;
    let opts = EpsOptions {
        k: seq.k,
        r_max: seq.rmax,
        margin: seq.margin,
        prefix: seq.prefix,
        engine: seq.engine.into(),
    };
    match seq.k_max {
        Some(k_max) => epsilon_search_k(&s, &t, &space, k_max, &opts, limits),
        None => epsilon_equivalent(&s, &t, &space, &opts, limits),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::EmptyDomain(_) => 2,
        Error::Resource { .. } => 3,
        Error::Inconclusive(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((outcome, common)) => {
            let written = match &common.out {
                Some(path) => std::fs::write(path, &outcome.text).map_err(|e| e.to_string()),
                None => std::io::stdout().write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("endslab: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("endslab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
