//! Command-line front end: key generation, centralized solving, protocol
//! runs from partition files, attack audits and micro-benchmarks.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::FromPrimitive;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use seclp::attack::{
    audit_protocol_run, bednarz_enumerate, parse_evidence, AttackResult, AuditScenario,
    DisclosedEvidence,
};
use seclp::crypto::{keygen, keypair_to_text, public_key_to_text};
use seclp::encoding::ScaleConfig;
use seclp::linalg::Matrix;
use seclp::protocols::{
    parse_partition, run_alg2, run_alg3, run_alg4, Alg2Inputs, ProtocolOutcome, ReconstructMode,
    SessionConfig, ALG2_SOLVER,
};
use seclp::runtime::{PartyId, Transcript};
use seclp::solver::{
    canonicalize, parse_problem, simplex_solve, LpStatus,
};
use seclp::Rational;

#[derive(Parser)]
#[command(name = "seclp", about = "Secure collaborative linear programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a keypair and write it as text files.
    Keygen {
        /// Key size in bits (minimum 128).
        #[arg(long, default_value_t = 2048)]
        bits: u64,
        /// Output path; the public half goes to `<out>.pub`.
        #[arg(long)]
        out: PathBuf,
        /// Deterministic seed; random when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve a problem file centrally with the exact simplex solver.
    Solve {
        /// Problem file in the `lp <m> <n> <min|max>` format.
        problem: PathBuf,
    },
    /// Run one of the secure transformation protocols.
    Run {
        /// Protocol variant.
        #[arg(long, value_enum)]
        variant: Variant,
        /// Problem file (alg2) or partition file (alg3/alg4).
        file: PathBuf,
        #[command(flatten)]
        session: SessionArgs,
        /// Write the canonical transcript log here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Audit a protocol run (or a raw evidence file) with the
    /// monomial-enumeration attack.
    Attack {
        /// Disclosure scenario to model.
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Raw evidence file (`evidence <n>` format); mutually exclusive
        /// with --problem/--partition.
        #[arg(long)]
        evidence: Option<PathBuf>,
        /// Problem file to run the unpartitioned protocol on (alg2).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Partition file to run the arbitrary-partition protocol on (alg3).
        #[arg(long)]
        partition: Option<PathBuf>,
        #[command(flatten)]
        session: SessionArgs,
        /// Print at most this many candidate matrices.
        #[arg(long, default_value_t = 10)]
        max_print: usize,
    },
    /// Micro-benchmarks: key generation, per-cell encryption, homomorphic
    /// right-multiplication and end-to-end protocol runs, as TSV.
    Bench {
        /// Problem size as `<m>x<n>`.
        #[arg(long, default_value = "4x4")]
        size: String,
        /// Party count for the multi-party run.
        #[arg(long, default_value_t = 3)]
        parties: usize,
        /// Comma-separated key sizes in bits.
        #[arg(long, default_value = "256,512")]
        key_bits: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Alg2,
    Alg3,
    Alg4,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Alg2,
    Alg3,
}

#[derive(Args)]
struct SessionArgs {
    /// Paillier key size in bits.
    #[arg(long, default_value_t = 2048)]
    key_bits: u64,
    /// Base-two exponent of the fixed-point scale delta.
    #[arg(long, default_value_t = 20)]
    delta_exp: u32,
    /// Largest monomial coefficient.
    #[arg(long, default_value_t = 65536)]
    coeff_max: u64,
    /// Deterministic session seed; random when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Party that solves the transformed program (alg3/alg4).
    #[arg(long, default_value_t = 1)]
    solver_party: usize,
    /// How the solution is handed back.
    #[arg(long, value_enum, default_value_t = Mode::Reveal)]
    mode: Mode,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Mode {
    Reveal,
    Shares,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rngs::OsRng.next_u64())
}

fn session_config(args: &SessionArgs, seed: u64) -> SessionConfig {
    let mut cfg = SessionConfig::new(seed);
    cfg.key_bits = args.key_bits;
    cfg.scale = ScaleConfig::new(args.delta_exp, cfg.scale.max_exp);
    cfg.coeff_range = (1, args.coeff_max);
    cfg.solver_party = PartyId(args.solver_party);
    cfg.mode = match args.mode {
        Mode::Reveal => ReconstructMode::Reveal,
        Mode::Shares => ReconstructMode::Shares,
    };
    cfg
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Keygen { bits, out, seed } => cmd_keygen(bits, &out, seed),
        Command::Solve { problem } => cmd_solve(&problem),
        Command::Run {
            variant,
            file,
            session,
            transcript,
        } => cmd_run(variant, &file, &session, transcript.as_deref()),
        Command::Attack {
            scenario,
            evidence,
            problem,
            partition,
            session,
            max_print,
        } => cmd_attack(scenario, evidence, problem, partition, &session, max_print),
        Command::Bench {
            size,
            parties,
            key_bits,
            seed,
        } => cmd_bench(&size, parties, &key_bits, seed),
    }
}

fn cmd_keygen(bits: u64, out: &std::path::Path, seed: Option<u64>) -> Result<(), String> {
    let seed = resolve_seed(seed);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let kp = keygen(bits, &mut rng).map_err(|e| e.to_string())?;
    let pub_path = out.with_extension(match out.extension() {
        Some(ext) => format!("{}.pub", ext.to_string_lossy()),
        None => "pub".into(),
    });
    fs::write(out, keypair_to_text(&kp)).map_err(|e| format!("{}: {e}", out.display()))?;
    fs::write(&pub_path, public_key_to_text(&kp.public))
        .map_err(|e| format!("{}: {e}", pub_path.display()))?;
    println!("seed={seed}");
    println!("wrote {} {}", out.display(), pub_path.display());
    Ok(())
}

fn read_to_string(path: &std::path::Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_solve(problem: &std::path::Path) -> Result<(), String> {
    let raw = parse_problem(&read_to_string(problem)?).map_err(|e| e.to_string())?;
    let canonical = canonicalize(&raw).map_err(|e| e.to_string())?;
    let solution = simplex_solve(&canonical.problem);
    match solution.status {
        LpStatus::Optimal => {
            let obj = canonical.report_objective(&solution.objective.unwrap());
            println!("Optimal obj={} x={}", obj, join(&solution.x.unwrap()));
        }
        status => println!("{status}"),
    }
    Ok(())
}

fn join(v: &[Rational]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_run(
    variant: Variant,
    file: &std::path::Path,
    session: &SessionArgs,
    transcript_path: Option<&std::path::Path>,
) -> Result<(), String> {
    let seed = resolve_seed(session.seed);
    let cfg = session_config(session, seed);
    let text = read_to_string(file)?;
    let (outcomes, transcript, maximized) = match variant {
        Variant::Alg2 => {
            let raw = parse_problem(&text).map_err(|e| e.to_string())?;
            let canonical = canonicalize(&raw).map_err(|e| e.to_string())?;
            let inputs = Alg2Inputs::new(
                canonical.problem.objective.clone(),
                canonical.problem.constraints.clone(),
                canonical.problem.rhs.clone(),
            );
            let (o, t) = run_alg2(inputs, &cfg).map_err(|e| e.to_string())?;
            (o, t, canonical.maximized)
        }
        Variant::Alg3 => {
            let pf = parse_partition(&text).map_err(|e| e.to_string())?;
            if pf.shares.len() != 2 {
                return Err(format!(
                    "alg3 requires exactly 2 shares, file has {}",
                    pf.shares.len()
                ));
            }
            let maximized = pf.maximized;
            let (o, t) = run_alg3(pf.shares, &cfg).map_err(|e| e.to_string())?;
            (o, t, maximized)
        }
        Variant::Alg4 => {
            let pf = parse_partition(&text).map_err(|e| e.to_string())?;
            if pf.shares.len() < 3 {
                return Err(format!(
                    "alg4 requires at least 3 parties, file has {}",
                    pf.shares.len()
                ));
            }
            let maximized = pf.maximized;
            let (o, t) = run_alg4(pf.shares, &cfg).map_err(|e| e.to_string())?;
            (o, t, maximized)
        }
    };
    println!("seed={seed}");
    report_outcomes(&outcomes, maximized);
    println!("transcript_hash={}", transcript.digest());
    if let Some(path) = transcript_path {
        write_transcript(&transcript, path)?;
        println!("transcript={}", path.display());
    }
    Ok(())
}

fn report_outcomes(outcomes: &[ProtocolOutcome], maximized: bool) {
    let lead = outcomes
        .iter()
        .find(|o| o.objective.is_some())
        .unwrap_or(&outcomes[0]);
    match lead.status {
        LpStatus::Optimal => {
            let mut obj = lead.objective.clone().unwrap();
            if maximized {
                obj = -obj;
            }
            println!("Optimal obj={obj}");
            if let Some(x) = outcomes.iter().find_map(|o| o.x_star.as_ref()) {
                println!("x={}", join(x));
            } else {
                for o in outcomes {
                    if let Some(share) = &o.x_share {
                        println!("share {}: {}", o.party.0, join(share));
                    }
                }
            }
        }
        status => println!("{status}"),
    }
}

fn write_transcript(t: &Transcript, path: &std::path::Path) -> Result<(), String> {
    fs::write(path, t.export_text()).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_attack(
    scenario: Scenario,
    evidence: Option<PathBuf>,
    problem: Option<PathBuf>,
    partition: Option<PathBuf>,
    session: &SessionArgs,
    max_print: usize,
) -> Result<(), String> {
    let result = match (evidence, problem, partition) {
        (Some(path), None, None) => {
            let input = parse_evidence(&read_to_string(&path)?).map_err(|e| e.to_string())?;
            bednarz_enumerate(&input).map_err(|e| e.to_string())?
        }
        (None, Some(path), None) => {
            if !matches!(scenario, Scenario::Alg2) {
                return Err("--problem runs the alg2 scenario; use --partition for alg3".into());
            }
            let seed = resolve_seed(session.seed);
            let cfg = session_config(session, seed);
            let raw = parse_problem(&read_to_string(&path)?).map_err(|e| e.to_string())?;
            let canonical = canonicalize(&raw).map_err(|e| e.to_string())?;
            let objective = canonical.problem.objective.clone();
            let inputs = Alg2Inputs::new(
                objective.clone(),
                canonical.problem.constraints.clone(),
                canonical.problem.rhs.clone(),
            );
            let (_, transcript) = run_alg2(inputs, &cfg).map_err(|e| e.to_string())?;
            println!("seed={seed}");
            // The Bednarz premise: the adversary (the solver P2) also knows
            // the original objective.
            let disclosed = DisclosedEvidence {
                objective: Some(objective),
                ..Default::default()
            };
            audit_protocol_run(&transcript, ALG2_SOLVER, AuditScenario::Alg2, &disclosed)
                .map_err(|e| e.to_string())?
        }
        (None, None, Some(path)) => {
            if !matches!(scenario, Scenario::Alg3) {
                return Err("--partition runs the alg3 scenario; use --problem for alg2".into());
            }
            let seed = resolve_seed(session.seed);
            let mut cfg = session_config(session, seed);
            // Shares mode: x* never materializes at the solver.
            cfg.mode = ReconstructMode::Shares;
            let pf = parse_partition(&read_to_string(&path)?).map_err(|e| e.to_string())?;
            if pf.shares.len() != 2 {
                return Err("alg3 audit needs a 2-share partition file".into());
            }
            let (_, transcript) = run_alg3(pf.shares, &cfg).map_err(|e| e.to_string())?;
            println!("seed={seed}");
            audit_protocol_run(
                &transcript,
                cfg.solver_party,
                AuditScenario::Alg3,
                &DisclosedEvidence::default(),
            )
            .map_err(|e| e.to_string())?
        }
        _ => {
            return Err(
                "pass exactly one of --evidence, --problem (alg2) or --partition (alg3)".into(),
            )
        }
    };
    print_attack_result(&result, max_print);
    Ok(())
}

fn print_attack_result(result: &AttackResult, max_print: usize) {
    println!("unique: {}", result.unique);
    println!("candidates: {}", result.candidates.len());
    for (i, q) in result.candidates.iter().take(max_print).enumerate() {
        println!("candidate {}:", i + 1);
        let dense = q.dense();
        for r in 0..dense.rows() {
            println!("  {}", join(dense.row(r)));
        }
    }
    if result.candidates.len() > max_print {
        println!("... ({} more)", result.candidates.len() - max_print);
    }
}

fn cmd_bench(size: &str, parties: usize, key_bits: &str, seed: Option<u64>) -> Result<(), String> {
    let (m, n) = size
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| format!("bad --size `{size}`, expected <m>x<n>"))?;
    if parties < 3 {
        return Err("bench requires at least 3 parties for the multi-party run".into());
    }
    let bits: Vec<u64> = key_bits
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad key size `{t}`")))
        .collect::<Result<_, _>>()?;
    let seed = resolve_seed(seed);
    println!("op\tkey_bits\tn\tm\tl\titers\ttotal_ms\tper_op_us");
    for &kb in &bits {
        bench_at(kb, m, n, parties, seed)?;
    }
    Ok(())
}

fn bench_at(kb: u64, m: usize, n: usize, parties: usize, seed: u64) -> Result<(), String> {
    use seclp::encoding::{encrypt_matrix, ScaleConfig};

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = ScaleConfig::new(8, 3);
    let row = |op: &str, l: usize, iters: usize, elapsed_ms: f64, per_us: f64| {
        println!("{op}\t{kb}\t{n}\t{m}\t{l}\t{iters}\t{elapsed_ms:.1}\t{per_us:.1}");
    };

    let start = Instant::now();
    let keygen_iters = 3;
    let mut kp = None;
    for _ in 0..keygen_iters {
        kp = Some(keygen(kb, &mut rng).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    row(
        "keygen",
        1,
        keygen_iters,
        elapsed.as_secs_f64() * 1e3,
        elapsed.as_micros() as f64 / keygen_iters as f64,
    );
    let kp = kp.unwrap();

    let cells = Matrix::from_vec(
        m,
        n,
        (0..m * n)
            .map(|i| Rational::from_i64((i % 17) as i64 - 8).unwrap())
            .collect(),
    )
    .unwrap();
    let iters = 5;
    let start = Instant::now();
    let mut encrypted = None;
    for _ in 0..iters {
        encrypted =
            Some(encrypt_matrix(&cells, 1, &kp.public, &scale, &mut rng).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    row(
        "encrypt_cell",
        1,
        iters * m * n,
        elapsed.as_secs_f64() * 1e3,
        elapsed.as_micros() as f64 / (iters * m * n) as f64,
    );
    let encrypted = encrypted.unwrap();

    let q = seclp::linalg::gen_monomial(n, (1, 64), &mut rng).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for _ in 0..iters {
        encrypted
            .right_mul_monomial(&q, &kp.public)
            .map_err(|e| e.to_string())?;
    }
    let elapsed = start.elapsed();
    row(
        "right_mul",
        1,
        iters * m * n,
        elapsed.as_secs_f64() * 1e3,
        elapsed.as_micros() as f64 / (iters * m * n) as f64,
    );

    // End-to-end runs on a feasible box instance, horizontally partitioned.
    let mut cfg = SessionConfig::for_tests(seed);
    cfg.key_bits = kb;
    let objective: Vec<Rational> = (0..n).map(|i| Rational::from_i64(-(i as i64) - 1).unwrap()).collect();
    let constraints = Matrix::identity(n);
    let rhs: Vec<Rational> = (0..n).map(|_| Rational::from_i64(10).unwrap()).collect();

    let start = Instant::now();
    run_alg2(
        Alg2Inputs::new(objective.clone(), constraints.clone(), rhs.clone()),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    row("alg2", 2, 1, start.elapsed().as_secs_f64() * 1e3, start.elapsed().as_micros() as f64);

    let split = |count: usize| -> Vec<seclp::protocols::PartyShare> {
        (0..count)
            .map(|i| {
                let mut mi = Matrix::zeros(n, n);
                let zero = vec![Rational::from_i64(0).unwrap(); n];
                let mut ci = zero.clone();
                let mut bi = zero.clone();
                for r in 0..n {
                    if r % count == i {
                        for c in 0..n {
                            mi[(r, c)] = constraints[(r, c)].clone();
                        }
                        bi[r] = rhs[r].clone();
                    }
                }
                for c in 0..n {
                    if c % count == i {
                        ci[c] = objective[c].clone();
                    }
                }
                seclp::protocols::PartyShare::new(mi, ci, bi)
            })
            .collect()
    };

    let start = Instant::now();
    run_alg3(split(2), &cfg).map_err(|e| e.to_string())?;
    row("alg3", 2, 1, start.elapsed().as_secs_f64() * 1e3, start.elapsed().as_micros() as f64);

    let start = Instant::now();
    run_alg4(split(parties), &cfg).map_err(|e| e.to_string())?;
    row(
        "alg4",
        parties,
        1,
        start.elapsed().as_secs_f64() * 1e3,
        start.elapsed().as_micros() as f64,
    );
    Ok(())
}
