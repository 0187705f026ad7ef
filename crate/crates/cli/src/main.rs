//! `womkit`: derive parameters, drive a write-once memory image through
//! its rounds, and audit the hash family.
//!
//! Output is `key=value` lines on stdout; diagnostics go to stderr.
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O failure, unreadable or corrupt image, image locked |
//! | 2 | usage error (bad flags, infeasible parameters) |
//! | 3 | nothing to read (no round written, or a stale round requested) |
//! | 4 | round written out of sequence |
//! | 5 | no encoding found for the message |
//! | 6 | write would clear a programmed cell |
//! | 7 | an audit or self-test check failed |

mod store;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use womkit_core::capacity::{self, RatePoint, WeightVector, WomParams};
use womkit_core::full_codec::{self, FullParams, Session};
use womkit_core::{hashfam, selftest, BitWord, Error};

#[derive(Parser)]
#[command(name = "womkit", version, about = "t-write binary WOM codes over GF(2^n) hash families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive block parameters for a target gap epsilon.
    Params {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        epsilon: f64,
        /// Comma-separated rate point; defaults to the sum-rate optimum.
        #[arg(long)]
        rates: Option<String>,
    },
    /// Create a fresh all-zero image.
    Init(InitArgs),
    /// Encode one round from a hex message file.
    Write {
        #[arg(long)]
        img: PathBuf,
        #[arg(long)]
        round: u32,
        #[arg(long = "in")]
        input: PathBuf,
        /// Expected block count; rejected if the image disagrees.
        #[arg(long)]
        blocks: Option<u64>,
    },
    /// Decode the most recent round to hex.
    Read {
        #[arg(long)]
        img: PathBuf,
        #[arg(long)]
        round: Option<u32>,
    },
    /// Exhaustive audit of the hash family on random sets.
    AuditHash {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u32>,
    },
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    t: u32,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    l: Option<u32>,
    /// Hash output lengths k_2..k_t.
    #[arg(long)]
    k: Option<String>,
    /// Weight vector p_1..p_t as fractions.
    #[arg(long)]
    p: Option<String>,
    #[arg(long, default_value_t = 1)]
    blocks: u64,
    /// Overwrite an existing image.
    #[arg(long)]
    force: bool,
}

/// A check ran to completion and said no.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CheckFailed>().is_some() {
        return 7;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Usage(_)) => 2,
        Some(Error::DecodeRound { .. }) => 3,
        Some(Error::Sequencing { .. }) => 4,
        Some(Error::NoEncoding { .. }) => 5,
        Some(Error::WriteOnceViolation { .. }) => 6,
        Some(Error::Image(_)) | None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("womkit: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Params { t, epsilon, rates } => cmd_params(t, epsilon, rates.as_deref()),
        Command::Init(args) => cmd_init(args),
        Command::Write { img, round, input, blocks } => cmd_write(img, round, input, blocks),
        Command::Read { img, round } => cmd_read(img, round),
        Command::AuditHash { n, k, l, trials, seed } => cmd_audit_hash(n, k, l, trials, seed),
        Command::Selftest { only } => cmd_selftest(only),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad {what} entry {s:?}"))))
        .collect()
}

fn rate_point(t: u32, rates: Option<&str>) -> Result<(RatePoint, WeightVector)> {
    let Some(text) = rates else {
        return Ok(capacity::optimal_point(t)?);
    };
    let point = RatePoint::new(parse_list(text, "rate")?)?;
    if point.rounds() != t {
        bail!(usage(format!("--rates has {} entries, expected {t}", point.rounds())));
    }
    let p = capacity::weights_for_rates(&point)?;
    Ok((point, p))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_params(t: u32, epsilon: f64, rates: Option<&str>) -> Result<()> {
    let (point, p) = rate_point(t, rates)?;
    let params = capacity::derive_parameters(epsilon, t, &point, &p)?;
    let achieved = capacity::achieved_rate(&params);
    println!("t={t}");
    println!("epsilon={epsilon}");
    println!("rates={}", join(point.rates()));
    println!("p={}", params.weights());
    if let Some(c) = params.c() {
        println!("c={c}");
    }
    println!("n={}", params.n());
    println!("l={}", params.l());
    println!("m={}", params.m());
    println!("k={}", join(params.k()));
    println!("budgets={}", join(params.budgets()));
    println!("N0={}", params.n0());
    println!("sum_rate={}", point.sum());
    println!("target_rate={}", point.sum() - epsilon);
    println!("achieved_rate={achieved:.6}");
    println!("packed_rate={:.6}", capacity::packed_rate(&params));
    println!("gap={:.6}", point.sum() - achieved);
    println!("scale={}", if params.desk_executable() { "desk" } else { "analysis" });
    Ok(())
}

fn manual_params(a: &InitArgs) -> Result<WomParams> {
    let (Some(n), Some(m), Some(l), Some(p)) = (a.n, a.m, a.l, a.p.as_deref()) else {
        bail!(usage("give either --epsilon, or all of --n --m --l --k --p"));
    };
    let k = match a.k.as_deref() {
        Some(text) => parse_list(text, "k")?,
        None if a.t == 1 => Vec::new(),
        None => bail!(usage("--k is required when t > 1")),
    };
    let p: WeightVector = p.parse()?;
    Ok(WomParams::manual(a.t, n, m, l, k, p)?)
}

fn cmd_init(a: InitArgs) -> Result<()> {
    let manual = a.n.is_some() || a.m.is_some() || a.l.is_some() || a.k.is_some() || a.p.is_some();
    let params = match a.epsilon {
        Some(_) if manual => bail!(usage("--epsilon cannot be combined with manual parameters")),
        Some(eps) => {
            let (point, p) = capacity::optimal_point(a.t)?;
            capacity::derive_parameters(eps, a.t, &point, &p)?
        }
        None => manual_params(&a)?,
    };
    let session = Session::new(FullParams::new(params, a.blocks)?)?;
    if a.out.exists() && !a.force {
        bail!(usage(format!("{} exists; pass --force to overwrite", a.out.display())));
    }
    let _lock = store::ImageLock::acquire(&a.out)?;
    store::replace_image(&a.out, &session.to_image()?)?;
    let p = session.params();
    println!("image={}", a.out.display());
    println!("blocks={}", p.n1());
    println!("cells={}", p.total_len());
    for j in 1..=p.block().t() {
        println!("capacity{j}={}", p.round_capacity(j));
    }
    Ok(())
}

fn cmd_write(img: PathBuf, round: u32, input: PathBuf, blocks: Option<u64>) -> Result<()> {
    let _lock = store::ImageLock::acquire(&img)?;
    let mut session = Session::from_image(&store::read_image(&img)?)?;
    if let Some(b) = blocks {
        if b != session.params().n1() {
            bail!(usage(format!("--blocks {b} does not match the image's {} blocks", session.params().n1())));
        }
    }
    let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let bits = full_codec::bits_from_hex(&text)?;
    let need = session.params().round_capacity(round);
    session.write_round(round, &bits)?;
    if bits.len() as u64 > need {
        eprintln!("womkit: ignored {} message bits beyond the round capacity", bits.len() as u64 - need);
    }
    store::replace_image(&img, &session.to_image()?)?;
    println!("round={round}");
    println!("bits={need}");
    println!("programmed={}", session.device().cells_programmed());
    Ok(())
}

fn cmd_read(img: PathBuf, round: Option<u32>) -> Result<()> {
    let session = Session::from_image(&store::read_image(&img)?)?;
    let current = session.round();
    let round = round.unwrap_or(current);
    if current == 0 || round != current {
        bail!(Error::DecodeRound { current, requested: round });
    }
    let bits = session.read_round(round)?;
    println!("round={round}");
    println!("bits={}", bits.len());
    println!("payload={}", full_codec::bits_to_hex(&bits));
    Ok(())
}

fn random_sets(n: u32, k: u32, trials: u32, seed: u64) -> Vec<Vec<BitWord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            index::sample(&mut rng, 1 << n, 1 << k)
                .into_iter()
                .map(|y| BitWord::new(n, y as u64).expect("fits in n bits"))
                .collect()
        })
        .collect()
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_audit_hash(n: u32, k: u32, l: u32, trials: u32, seed: u64) -> Result<()> {
    if n > hashfam::AUDIT_MAX_N {
        bail!(usage(format!("audit-hash needs n <= {}, got {n}", hashfam::AUDIT_MAX_N)));
    }
    if l > k || k > n {
        bail!(usage(format!("need l <= k <= n, got l={l} k={k} n={n}")));
    }
    let mut sets = random_sets(n, k, trials, seed);
    sets.push((0..1u64 << n).map(|y| BitWord::new(n, y).expect("fits in n bits")).collect());

    let fraction = hashfam::image_fraction_audit(n, k, l, &sets)?;
    let fraction_bound = 2f64.powf(-(l as f64) / 4.0);
    let mut ok = fraction <= fraction_bound;
    println!("n={n}");
    println!("k={k}");
    println!("l={l}");
    println!("sets={}", sets.len());
    println!("image_threshold={}", hashfam::bad_image_threshold(k, l));
    println!("worst_bad_fraction={fraction}");
    println!("bad_fraction_bound={fraction_bound}");
    println!("bad_fraction_check={}", verdict(fraction <= fraction_bound));

    if n <= hashfam::DISTANCE_MAX_N {
        let exact: Vec<&Vec<BitWord>> = sets.iter().filter(|s| s.len() as u64 == 1 << k).collect();
        let mut worst = 0.0f64;
        for set in &exact {
            worst = worst.max(hashfam::lhl_exact_distance(n, k, l, set)?);
        }
        let bound = 2f64.powf(-(l as f64) / 2.0);
        ok &= worst <= bound;
        println!("distance_sets={}", exact.len());
        println!("worst_distance={worst}");
        println!("distance_bound={bound}");
        println!("distance_check={}", verdict(worst <= bound));
    } else {
        println!("distance_check=skipped");
    }
    if !ok {
        bail!(CheckFailed("hash family audit exceeded a bound".into()));
    }
    Ok(())
}

fn cmd_selftest(only: Option<u32>) -> Result<()> {
    let reports = match only {
        Some(id) => vec![selftest::run(id).ok_or_else(|| usage(format!("no criterion {id}")))?],
        None => selftest::run_all(),
    };
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("passed={}", reports.len() - failed);
    println!("failed={failed}");
    if failed > 0 {
        bail!(CheckFailed(format!("{failed} criteria failed")));
    }
    Ok(())
}
