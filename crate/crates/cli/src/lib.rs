//! Command-line surface: compile grammars into artifacts, query masks,
//! generate with stub scorers, inspect tables, benchmark and cross-check
//! against the brute-force oracle.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gcd_core::format::{deserialize_artifact, serialize_artifact};
use gcd_core::grammar::{parse_grammar_spec, Grammar};
use gcd_core::runtime::{
    compile_artifact, constrained_decode, CompileReport, CompiledArtifact, GreedyScorer, SamplingConfig, Scorer,
    UniformScorer,
};
use gcd_core::token::{escape_bytes, load_vocabulary, TokenId, Vocabulary};
use gcd_core::BitSet;
use gcd_oracle::{check_equivalence, Oracle};

#[derive(Debug, Parser)]
#[command(name = "gcd", version, about = "Grammar-constrained decoding: offline compilation and token masks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an artifact from a grammar and a vocabulary.
    Compile {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also print per-stage times, class counts and diagnostics.
        #[arg(long)]
        report: bool,
    },
    /// Print the allowed token ids after a prefix.
    Mask {
        #[arg(long)]
        artifact: PathBuf,
        /// Comma-separated token ids; empty for the initial state.
        #[arg(long, default_value = "", value_parser = parse_prefix)]
        prefix: Prefix,
    },
    /// Run constrained decoding with a stub scorer.
    Generate {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, value_enum)]
        stub: Stub,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        max_len: usize,
    },
    /// Dump internal tables.
    Inspect {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, value_enum)]
        what: What,
    },
    /// Time mask computation along a seeded random constrained walk.
    Bench {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare engine masks with brute-force oracle masks at every reachable
    /// prefix.
    OracleCheck {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stub {
    /// Uniformly random choice among allowed tokens.
    Uniform,
    /// EOS whenever allowed, otherwise the lowest allowed id.
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    Spanner,
    Lr,
    Tables,
}

/// Token ids given on the command line as `id,id,...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prefix(pub Vec<TokenId>);

fn parse_prefix(s: &str) -> Result<Prefix, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<TokenId>().map_err(|e| format!("bad token id `{p}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Prefix)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 2 on usage errors, 1 on
/// build, load or check failures.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e:#}");
        return 2;
    }
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

/// Sizes the global rayon pool from `GCD_THREADS` when set.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GCD_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| anyhow!("GCD_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        bail!("GCD_THREADS must be a positive integer, got `{v}`");
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Compile { grammar, vocab, out: path, report } => {
            let g = load_grammar(&grammar)?;
            let v = load_vocab(&vocab)?;
            let start = Instant::now();
            let (a, r) = compile_artifact(&g, &v).map_err(|e| anyhow!("{e}"))?;
            let offline_us = start.elapsed().as_micros() as u64;
            let bytes = serialize_artifact(&a);
            std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
            write_compile_summary(out, offline_us, bytes.len(), &r)?;
            if report {
                write_compile_report(out, &r, &a)?;
            }
            for (name, by) in &r.shadowed {
                writeln!(err, "warning: terminal {name} is never emitted; shadowed by {}", by.join(", "))?;
            }
            if !r.coverage_gaps.is_empty() {
                let gaps: Vec<String> = r.coverage_gaps.iter().map(|b| escape_bytes(&[*b])).collect();
                writeln!(err, "warning: bytes without a single-byte token: {}", gaps.join(" "))?;
            }
            Ok(0)
        }
        Command::Mask { artifact, prefix } => {
            let a = load_artifact(&artifact)?;
            let s = a.replay(&prefix.0).map_err(|e| anyhow!("{e}"))?;
            writeln!(out, "{}", format_ids(a.compute_mask(&s).iter()))?;
            Ok(0)
        }
        Command::Generate { artifact, stub, seed, max_len } => {
            let a = load_artifact(&artifact)?;
            let mut scorer: Box<dyn Scorer> = match stub {
                Stub::Uniform => Box::new(UniformScorer::new(seed)),
                Stub::Greedy => Box::new(GreedyScorer::new(vec![a.vocab.eos_id()])),
            };
            let cfg = SamplingConfig { seed, ..SamplingConfig::default() };
            let o = constrained_decode(&a, scorer.as_mut(), &[], max_len, &cfg).map_err(|e| anyhow!("{e}"))?;
            writeln!(out, "tokens {}", format_ids(o.generated().iter().map(|&t| t as usize)))?;
            writeln!(out, "text {}", escape_bytes(&a.vocab.detokenize(o.generated())))?;
            writeln!(out, "complete {}", o.complete)?;
            Ok(0)
        }
        Command::Inspect { artifact, what } => {
            let a = load_artifact(&artifact)?;
            let dump = match what {
                What::Spanner => a.spanner_dump(true),
                What::Lr => a.pda.dump_tsv(),
                What::Tables => a.classes_dump(),
            };
            out.write_all(dump.as_bytes())?;
            Ok(0)
        }
        Command::Bench { artifact, steps, seed } => {
            let a = load_artifact(&artifact)?;
            let stats = bench(&a, steps, seed);
            writeln!(out, "steps {}", stats.steps)?;
            writeln!(out, "restarts {}", stats.restarts)?;
            writeln!(out, "mean_us {}", stats.mean_us)?;
            writeln!(out, "p50_us {}", stats.p50_us)?;
            writeln!(out, "p99_us {}", stats.p99_us)?;
            writeln!(out, "max_us {}", stats.max_us)?;
            Ok(0)
        }
        Command::OracleCheck { grammar, vocab, depth, horizon } => {
            let g = load_grammar(&grammar)?;
            let v = load_vocab(&vocab)?;
            let (a, _) = compile_artifact(&g, &v).map_err(|e| anyhow!("{e}"))?;
            let r = check_equivalence(&a, &Oracle::new(&g, &v), depth, horizon);
            out.write_all(r.table().as_bytes())?;
            writeln!(out, "states_checked {}", r.states_checked)?;
            writeln!(out, "prefixes_visited {}", r.prefixes_visited)?;
            writeln!(out, "diffs {}", r.diffs.len())?;
            let undecided: usize = r.diffs.iter().map(|d| d.undecided.len()).sum();
            if undecided > 0 {
                writeln!(err, "warning: horizon {horizon} leaves {undecided} token decisions undecided")?;
            }
            if !r.is_equivalent() {
                writeln!(err, "error: engine and oracle masks differ at {} prefixes", r.diffs.len())?;
                return Ok(1);
            }
            Ok(0)
        }
    }
}

fn write_compile_summary(out: &mut dyn Write, offline_us: u64, bytes: usize, r: &CompileReport) -> Result<()> {
    writeln!(out, "offline_us {offline_us}")?;
    writeln!(out, "artifact_bytes {bytes}")?;
    writeln!(out, "lexer_states {}", r.lexer_states)?;
    writeln!(out, "token_transitions {}", r.token_transitions)?;
    writeln!(out, "normalized_sequences {}", r.normalized_sequences)?;
    writeln!(out, "lr_states {}", r.lr_states)?;
    writeln!(out, "a_table_bits {}", r.a_table_bits)?;
    writeln!(out, "d_table_entries {}", r.d_table_entries)?;
    Ok(())
}

fn write_compile_report(out: &mut dyn Write, r: &CompileReport, a: &CompiledArtifact) -> Result<()> {
    let t = &r.times;
    writeln!(out, "lexer_us {}", t.lexer_us)?;
    writeln!(out, "token_transducer_us {}", t.token_transducer_us)?;
    writeln!(out, "spanner_us {}", t.spanner_us)?;
    writeln!(out, "parser_us {}", t.parser_us)?;
    writeln!(out, "reachable_lexer_states {}", r.reachable_lexer_states)?;
    writeln!(out, "realizable_sequences {}", r.realizable_sequences)?;
    writeln!(out, "always {}", r.classes.always)?;
    writeln!(out, "rejected {}", r.classes.rejected)?;
    writeln!(out, "dependent {}", r.classes.dependent)?;
    writeln!(out, "vocabulary {}", a.vocab.len())?;
    writeln!(out, "terminals {}", a.grammar.terminals.len())?;
    writeln!(out, "duplicate_tokens {}", r.duplicate_tokens.len())?;
    Ok(())
}

fn format_ids(ids: impl Iterator<Item = usize>) -> String {
    ids.map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn load_grammar(path: &Path) -> Result<Grammar> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_grammar_spec(&src).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let data = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_vocabulary(&data).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn load_artifact(path: &Path) -> Result<CompiledArtifact> {
    let data = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_artifact(&data).map_err(|e| anyhow!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchStats {
    pub steps: usize,
    /// Times the walk finished a sentence and started over.
    pub restarts: usize,
    pub mean_us: u64,
    pub p50_us: u64,
    pub p99_us: u64,
    pub max_us: u64,
}

/// Seeded random constrained walk of `steps` mask computations. Each step
/// picks a uniformly random allowed token; a finished or dead-ended walk
/// restarts from the initial state. `on_mask` sees every mask in order with
/// the time its computation took. Returns the number of restarts.
pub fn random_walk(a: &CompiledArtifact, steps: usize, seed: u64, mut on_mask: impl FnMut(&BitSet, Duration)) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = a.init_state();
    let mut restarts = 0;
    for _ in 0..steps {
        let start = Instant::now();
        let mask = a.compute_mask(&state);
        on_mask(&mask, start.elapsed());
        let allowed: Vec<usize> = mask.iter().collect();
        if allowed.is_empty() {
            state = a.init_state();
            restarts += 1;
            continue;
        }
        let t = allowed[rng.gen_range(0..allowed.len())] as TokenId;
        state = a.advance(&state, t).expect("allowed token advances");
        if state.finished {
            state = a.init_state();
            restarts += 1;
        }
    }
    restarts
}

/// Per-step mask latency along [`random_walk`].
pub fn bench(a: &CompiledArtifact, steps: usize, seed: u64) -> BenchStats {
    let mut lat: Vec<u64> = Vec::with_capacity(steps);
    let restarts = random_walk(a, steps, seed, |_, d| lat.push(d.as_nanos() as u64));
    let mean = lat.iter().sum::<u64>() / lat.len().max(1) as u64;
    lat.sort_unstable();
    let pct = |p: usize| lat.get((lat.len() * p / 100).min(lat.len().saturating_sub(1))).copied().unwrap_or(0);
    BenchStats {
        steps,
        restarts,
        mean_us: mean / 1000,
        p50_us: pct(50) / 1000,
        p99_us: pct(99) / 1000,
        max_us: lat.last().copied().unwrap_or(0) / 1000,
    }
}
