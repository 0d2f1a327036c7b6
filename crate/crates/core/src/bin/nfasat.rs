use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use nfasat::bench::{run_bench, write_csv, BenchSpec};
use nfasat::cnf::{instance_stats, CnfInstance};
use nfasat::encode::{build_lattice, encode, metadata, EncodeOptions, Level, PrefixMode, Variant};
use nfasat::nfa::brute_force_search;
use nfasat::sample::{parse_sample_as, sample_stats, LabeledSample, SampleFormat};
use nfasat::solver::{decode_nfa, solve_instance, verify, SolverConfig, SolverStatus, SOLVER_ENV};
use nfasat::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "nfasat", version, about = "Learn size-k NFAs from labeled samples with a SAT solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the CNF instance for a sample.
    Generate {
        #[command(flatten)]
        input: Input,
        #[arg(short, long)]
        k: u32,
        #[command(flatten)]
        enc: EncodeArgs,
        /// DIMACS destination (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON metadata destination.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Generate, solve, decode and verify.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(short, long, required_unless_present = "k_range")]
        k: Option<u32>,
        /// Try k = A..=B in order, stopping at the first satisfiable one.
        #[arg(long, value_name = "A..B", conflicts_with = "k")]
        k_range: Option<String>,
        #[command(flatten)]
        enc: EncodeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Where to write the automaton found (JSON).
        #[arg(long)]
        nfa_out: Option<PathBuf>,
    },
    /// Brute-force search over every automaton with k states.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(short, long)]
        k: u32,
    },
    /// Sample statistics, plus instance statistics when k is given.
    Stats {
        #[command(flatten)]
        input: Input,
        #[arg(short, long)]
        k: Option<u32>,
        #[command(flatten)]
        enc: EncodeArgs,
    },
    /// Print the multiset lattice of a sample.
    Lattice {
        #[command(flatten)]
        input: Input,
        /// Graphviz output instead of a listing.
        #[arg(long)]
        dot: bool,
    },
    /// Sweep samples × k × models and write CSV.
    Bench {
        /// Sample files.
        #[arg(required = true)]
        samples: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Native)]
        format: Format,
        /// Comma-separated k values.
        #[arg(short, long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        /// Comma-separated models (base, all, prefix, mset, mset:<l>).
        #[arg(long, value_delimiter = ',', default_value = "base")]
        models: Vec<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Sound)]
        prefix_mode: ModeArg,
        #[arg(long)]
        no_redundant: bool,
        /// Generation time limit per row, in seconds.
        #[arg(long)]
        gen_timeout: Option<f64>,
        /// Only measure generation.
        #[arg(long)]
        no_solve: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV destination (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Sample file.
    sample: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Native)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Native,
    Abbadingo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sound,
    Literal,
}

impl From<ModeArg> for PrefixMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sound => PrefixMode::Sound,
            ModeArg::Literal => PrefixMode::Literal,
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// base, all, mset, prefix (or mset:<l>).
    #[arg(long, default_value = "base")]
    model: String,
    /// Lattice level for mset: an integer or "max".
    #[arg(long)]
    level: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Sound)]
    prefix_mode: ModeArg,
    /// Skip the unreachable-state clauses.
    #[arg(long)]
    no_redundant: bool,
    /// Keep repeated transition variables inside a path.
    #[arg(long)]
    no_dedup: bool,
    /// Emit identical paths of a word only once.
    #[arg(long)]
    dedup_across: bool,
    /// Entry cap of the subsumption databases.
    #[arg(long)]
    cap: Option<usize>,
}

impl EncodeArgs {
    fn options(&self) -> Result<EncodeOptions, Failure> {
        let mut variant: Variant = self.model.parse().map_err(Failure::usage)?;
        if let Some(l) = &self.level {
            let level: Level = l.parse().map_err(Failure::usage)?;
            match variant {
                Variant::Mset(_) => variant = Variant::Mset(level),
                _ => return Err(Failure::usage("--level only applies to --model mset")),
            }
        }
        let mut opts = EncodeOptions::with_variant(variant);
        opts.prefix_mode = self.prefix_mode.into();
        opts.redundant = !self.no_redundant;
        opts.dedup_within = !self.no_dedup;
        opts.dedup_across_paths = self.dedup_across;
        if let Some(cap) = self.cap {
            opts.ccouple_cap = cap;
        }
        Ok(opts)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Solver command with a {cnf} placeholder; defaults to $NFASAT_SOLVER,
    /// then to the bundled nfasat-varisat.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Solver time limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let cfg = match &self.solver_cmd {
            Some(t) => SolverConfig::new(t.as_str())?,
            None => match SolverConfig::from_env() {
                Some(cfg) => cfg?,
                None => SolverConfig::new(bundled_solver()?)?,
            },
        };
        let limit = self.timeout.map(seconds).transpose()?;
        Ok(cfg.with_time_limit(limit))
    }
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::usage(format!("invalid number of seconds: {s}")))
}

fn bundled_solver() -> Result<String, Failure> {
    let exe = std::env::current_exe().map_err(Error::from)?;
    let shim = exe.with_file_name(format!("nfasat-varisat{}", std::env::consts::EXE_SUFFIX));
    if !shim.exists() {
        return Err(Failure::usage(format!(
            "no solver configured: pass --solver-cmd or set {SOLVER_ENV}"
        )));
    }
    Ok(format!("{} {{cnf}}", shim.display()))
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            msg: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::OracleBound { .. } => EXIT_BUDGET,
            Error::InvalidArgument(_) | Error::SolverTemplate(_) => EXIT_USAGE,
            _ => EXIT_ERROR,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

fn read_sample(path: &Path, format: Format) -> Result<LabeledSample, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let format = match format {
        Format::Native => SampleFormat::Native,
        Format::Abbadingo => SampleFormat::Abbadingo,
    };
    parse_sample_as(&text, format).map_err(|e| Failure::from(e).with_prefix(path))
}

impl Failure {
    fn with_prefix(mut self, path: &Path) -> Self {
        self.msg = format!("{}: {}", path.display(), self.msg);
        self
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Error::file(path, e).into())
}

fn stats_line(inst: &CnfInstance, t_model: Duration) -> String {
    let st = instance_stats(inst);
    format!(
        "vars={} aux={} clauses={} t_model={:.3}s",
        st.variables,
        st.aux_variables,
        st.clauses,
        t_model.as_secs_f64()
    )
}

fn timed_encode(s: &LabeledSample, k: u32, opts: &EncodeOptions) -> Result<(CnfInstance, Duration), Failure> {
    let start = Instant::now();
    let inst = encode(s, k, opts)?;
    Ok((inst, start.elapsed()))
}

fn parse_range(text: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::usage(format!("--k-range expects A..B, got {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (u32, u32) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Generate {
            input,
            k,
            enc,
            out,
            meta,
        } => {
            let s = read_sample(&input.sample, input.format)?;
            let opts = enc.options()?;
            let (inst, t) = timed_encode(&s, k, &opts)?;
            match &out {
                Some(p) => write_file(p, &inst.to_dimacs())?,
                None => io::stdout().lock().write_all(&inst.to_dimacs())?,
            }
            if let Some(p) = meta {
                let json = serde_json::to_vec_pretty(&metadata(&s, &inst, &opts)).map_err(Error::from)?;
                write_file(&p, &json)?;
            }
            let line = stats_line(&inst, t);
            if out.is_some() {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            Ok(0)
        }
        Cmd::Solve {
            input,
            k,
            k_range,
            enc,
            solver,
            nfa_out,
        } => {
            let s = read_sample(&input.sample, input.format)?;
            let opts = enc.options()?;
            let cfg = solver.config()?;
            let (lo, hi) = match (k, &k_range) {
                (Some(k), _) => (k, k),
                (None, Some(r)) => parse_range(r)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mut all_unsat = true;
            for k in lo..=hi {
                let (inst, t_model) = timed_encode(&s, k, &opts)?;
                let out = solve_instance(&inst, &cfg)?;
                println!(
                    "k={k} model={} status={} {} t_solve={:.3}s",
                    opts.variant,
                    status_name(out.status),
                    stats_line(&inst, t_model),
                    out.wall.as_secs_f64()
                );
                match out.status {
                    SolverStatus::Sat => {
                        let model = out.model.as_ref().expect("sat outcome has a model");
                        let nfa = decode_nfa(model, inst.varmap().numbering())?;
                        let report = verify(&nfa, &s);
                        if !report.passed() {
                            let words: Vec<String> =
                                report.misclassified.iter().map(|r| s.render_word(s.word(*r))).collect();
                            return Err(Failure {
                                code: EXIT_ERROR,
                                msg: format!("decoded automaton misclassifies {}", words.join(", ")),
                            });
                        }
                        let json = serde_json::to_string_pretty(&nfa.to_json(Some(s.alphabet().tokens())))
                            .map_err(Error::from)?;
                        match &nfa_out {
                            Some(p) => {
                                write_file(p, json.as_bytes())?;
                                println!("nfa written to {}", p.display());
                            }
                            None => println!("{json}"),
                        }
                        if k_range.is_some() && k > lo && all_unsat {
                            println!("unsat at k={}, sat at k={k}", k - 1);
                        }
                        return Ok(SolverStatus::Sat.exit_code() as u8);
                    }
                    SolverStatus::Unsat => {}
                    SolverStatus::Unknown => all_unsat = false,
                }
            }
            let status = if all_unsat {
                SolverStatus::Unsat
            } else {
                SolverStatus::Unknown
            };
            Ok(status.exit_code() as u8)
        }
        Cmd::Oracle { input, k } => {
            let s = read_sample(&input.sample, input.format)?;
            match brute_force_search(&s, k)? {
                Some(nfa) => {
                    println!("sat");
                    let json = serde_json::to_string_pretty(&nfa.to_json(Some(s.alphabet().tokens())))
                        .map_err(Error::from)?;
                    println!("{json}");
                    Ok(SolverStatus::Sat.exit_code() as u8)
                }
                None => {
                    println!("unsat");
                    Ok(SolverStatus::Unsat.exit_code() as u8)
                }
            }
        }
        Cmd::Stats { input, k, enc } => {
            let s = read_sample(&input.sample, input.format)?;
            let mut doc = serde_json::json!({ "sample": sample_stats(&s) });
            if let Some(k) = k {
                let opts = enc.options()?;
                let (inst, t) = timed_encode(&s, k, &opts)?;
                doc["instance"] = serde_json::to_value(instance_stats(&inst)).map_err(Error::from)?;
                doc["report"] = serde_json::to_value(&inst.report).map_err(Error::from)?;
                doc["t_model"] = t.as_secs_f64().into();
            }
            println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
            Ok(0)
        }
        Cmd::Lattice { input, dot } => {
            let s = read_sample(&input.sample, input.format)?;
            let lat = build_lattice(&s);
            if dot {
                print!("{}", lat.to_dot(s.alphabet().tokens()));
                return Ok(0);
            }
            for (i, node) in lat.nodes().iter().enumerate() {
                let counts: Vec<String> = node.ms.counts.iter().map(u32::to_string).collect();
                println!(
                    "m{i} level={} counts=({}) +{} -{} below={:?}",
                    node.level,
                    counts.join(","),
                    node.positives.len(),
                    node.negatives.len(),
                    lat.strictly_below(i)
                );
            }
            let top: Vec<String> = lat.top().counts.iter().map(u32::to_string).collect();
            println!("top level={} counts=({})", lat.top_level(), top.join(","));
            Ok(0)
        }
        Cmd::Bench {
            samples,
            format,
            k,
            models,
            prefix_mode,
            no_redundant,
            gen_timeout,
            no_solve,
            solver,
            out,
        } => {
            let samples = samples
                .iter()
                .map(|p| Ok((p.display().to_string(), read_sample(p, format)?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            let models = models
                .iter()
                .map(|m| m.parse::<Variant>().map_err(Failure::usage))
                .collect::<Result<Vec<_>, _>>()?;
            let mut options = EncodeOptions {
                prefix_mode: prefix_mode.into(),
                redundant: !no_redundant,
                ..Default::default()
            };
            options.variant = Variant::Base;
            let spec = BenchSpec {
                samples,
                ks: k,
                models,
                options,
                gen_timeout: gen_timeout.map(seconds).transpose()?,
                solver: if no_solve { None } else { Some(solver.config()?) },
            };
            let rows = run_bench(&spec);
            match out {
                Some(p) => {
                    let f = fs::File::create(&p).map_err(|e| Error::file(&p, e))?;
                    write_csv(&rows, f)?;
                }
                None => write_csv(&rows, io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Sat => "sat",
        SolverStatus::Unsat => "unsat",
        SolverStatus::Unknown => "unknown",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
