//! Acceptance suite: one PASS/FAIL line per primary criterion.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gcd_cli::{bench, load_grammar, load_vocab, random_walk};
use gcd_core::format::{deserialize_artifact, serialize_artifact};
use gcd_core::grammar::{Grammar, TerminalId};
use gcd_core::lexing::{reference_lex, LexSym, LexerSpec, LexingFst, RefLexer};
use gcd_core::parser::{strip_stack_fsa, Pda, PrefixResult, SeqClass};
use gcd_core::runtime::{compile_artifact, constrained_decode, CompiledArtifact, SamplingConfig, UniformScorer};
use gcd_core::token::{TokenId, Vocabulary};
use gcd_oracle::{
    check_equivalence, oracle_mask, random_instance, sample_corpus, synthetic_vocabulary, Earley, InstanceSize, Oracle,
    OracleConfig, PositionLexer,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Case {
    name: String,
    grammar: Grammar,
    vocab: Vocabulary,
    artifact: CompiledArtifact,
}

impl Case {
    fn new(name: impl Into<String>, grammar: Grammar, vocab: Vocabulary) -> Self {
        let artifact = compile_artifact(&grammar, &vocab).expect("fixture compiles").0;
        Case { name: name.into(), grammar, vocab, artifact }
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../grammars").join(name)
}

fn bc_case() -> Case {
    Case::new("bc", load_grammar(&fixture("bc.grammar")).unwrap(), load_vocab(&fixture("bc_vocab.json")).unwrap())
}

fn json_case() -> Case {
    Case::new(
        "json_like",
        load_grammar(&fixture("json_like.grammar")).unwrap(),
        load_vocab(&fixture("json_like_vocab.json")).unwrap(),
    )
}

fn random_case(seed: u64) -> Case {
    let inst = random_instance(seed, &InstanceSize::default());
    Case::new(format!("random{seed}"), inst.grammar, inst.vocab)
}

fn token_id(v: &Vocabulary, s: &str) -> TokenId {
    if s == "EOS" {
        return v.eos_id();
    }
    v.iter().find(|(_, b)| *b == s.as_bytes()).map(|(t, _)| t).unwrap_or_else(|| panic!("no token {s}"))
}

fn ids(v: &Vocabulary, names: &[&str]) -> BTreeSet<usize> {
    names.iter().map(|s| token_id(v, s) as usize).collect()
}

/// Terminals a parser can shift: the non-ignored ones.
fn grammar_terminals(g: &Grammar) -> Vec<TerminalId> {
    (0..g.terminals.len()).filter(|&i| !g.terminals[i].ignored).map(|i| TerminalId(i as u16)).collect()
}

/// Replays lexer input through the character-level transducer.
fn fst_replay(fst: &LexingFst, input: &[LexSym]) -> Option<(Vec<TerminalId>, u32)> {
    let mut q = LexingFst::INITIAL;
    let mut out = Vec::new();
    for s in input {
        match s {
            LexSym::Byte(b) => {
                let (t, e) = fst.step(q, *b)?;
                out.extend(e);
                q = t;
            }
            LexSym::Eos => {
                out.extend(fst.eos(q)?.to_vec());
                q = LexingFst::INITIAL;
            }
        }
    }
    Some((out, q))
}

/// Compares an engine lexer outcome with the oracle's reference lexing of the
/// same input: identical emissions, and the engine state is the automaton
/// state of the oracle's residual with the same accepting terminal.
fn agrees(
    fst: &LexingFst,
    oracle: &PositionLexer,
    input: &[LexSym],
    engine: Option<(Vec<TerminalId>, u32)>,
) -> Result<(), String> {
    let expected = reference_lex(oracle, input);
    match (engine, expected) {
        (None, None) => Ok(()),
        (Some((emitted, q)), Some((want, residual))) => {
            if emitted != want {
                return Err(format!("{input:?}: emitted {emitted:?}, reference {want:?}"));
            }
            let mut state = LexingFst::INITIAL;
            for &b in &residual {
                state = fst.fsa().next(state, b).ok_or_else(|| format!("{input:?}: residual not in automaton"))?;
            }
            if state != q {
                return Err(format!("{input:?}: state {q}, residual {residual:?} is state {state}"));
            }
            let mut lx = RefLexer::new(oracle);
            lx.push_all(LexSym::bytes(&residual));
            if fst.fsa().label(q) != oracle.accepting(lx.state()) {
                return Err(format!("{input:?}: accepting terminals differ"));
            }
            Ok(())
        }
        (e, r) => Err(format!("{input:?}: engine defined {}, reference defined {}", e.is_some(), r.is_some())),
    }
}

fn criterion_bc_spanner_table() -> Outcome {
    let start = Instant::now();
    let case = bc_case();
    let dump = case.artifact.spanner_dump(false);
    let elapsed = start.elapsed();

    let columns = ["a", "b", "c", "ab", "ac", "aba"];
    let expected: [(&str, [&str; 6]); 4] = [
        ("q0", ["B,C", "", "", "B", "C", "BB,BC"]),
        ("q1", ["", "B", "C", "", "", ""]),
        ("q2", ["BB,BC", "B", "", "BB", "BC", "BBB,BBC"]),
        ("q3", ["CB,CC", "", "C", "CB", "CC", "CBB,CBC"]),
    ];
    let cell = |s: &str| -> BTreeSet<String> {
        s.split(',')
            .filter(|x| !x.is_empty())
            .map(|x| x.chars().map(|c| c.to_string()).collect::<Vec<_>>().join(" "))
            .collect()
    };
    let mut engine: HashMap<(String, String), BTreeSet<String>> = HashMap::new();
    for line in dump.lines().skip(1) {
        let mut parts = line.splitn(3, ',');
        let (q, t, seqs) = (parts.next().unwrap(), parts.next().unwrap(), parts.next().unwrap_or(""));
        engine.insert((q.into(), t.into()), seqs.split(';').filter(|s| !s.is_empty()).map(String::from).collect());
    }
    ensure!(engine.len() == 24, "dump has {} cells, expected 24", engine.len());

    let lexer = PositionLexer::new(&case.grammar.terminals);
    let representative = [("q0", ""), ("q1", "a"), ("q2", "ab"), ("q3", "ac")];
    let mut checked = 0;
    for (q, row) in expected {
        let rep = representative.iter().find(|(n, _)| *n == q).unwrap().1;
        for (t, want) in columns.iter().zip(row) {
            let want = cell(want);
            let got = engine.get(&(q.to_string(), t.to_string())).cloned().unwrap_or_default();
            ensure!(got == want, "({q}, {t}): engine {got:?}, expected {want:?}");
            let mut lx = RefLexer::new(&lexer);
            let mut oracle = BTreeSet::new();
            if lx.push_all(LexSym::bytes(rep.as_bytes())) && lx.push_all(LexSym::bytes(t.as_bytes())) {
                for term in 0..lexer.num_terminals() {
                    let term = TerminalId(term as u16);
                    if lexer.shortest_completion(lx.state(), term).is_some() {
                        let seq: Vec<&str> = lx
                            .emitted()
                            .iter()
                            .chain([&term])
                            .map(|&x| case.grammar.terminal_name(x))
                            .collect();
                        oracle.insert(seq.join(" "));
                    }
                }
            }
            ensure!(oracle == want, "({q}, {t}): oracle {oracle:?}, expected {want:?}");
            checked += 1;
        }
    }
    ensure!(elapsed.as_secs_f64() < 1.0, "compile and dump took {elapsed:?}");
    Ok(format!("{checked}/24 cells match the expected table and the oracle; {} ms", elapsed.as_millis()))
}

fn criterion_reference_lexer() -> Outcome {
    let case = bc_case();
    let (b, c) = (TerminalId(0), TerminalId(1));
    let oracle = PositionLexer::new(&case.grammar.terminals);
    let fsa = case.artifact.lexer.fsa();
    let first: Vec<LexSym> = LexSym::bytes(b"abaccab").collect();
    let second: Vec<LexSym> = LexSym::bytes(b"ab").chain([LexSym::Eos]).collect();
    for (name, r1, r2) in [
        ("oracle", reference_lex(&oracle, &first), reference_lex(&oracle, &second)),
        ("engine", reference_lex(fsa, &first), reference_lex(fsa, &second)),
    ] {
        ensure!(r1 == Some((vec![b, c], b"ab".to_vec())), "{name}: abaccab lexed to {r1:?}");
        ensure!(r2 == Some((vec![b, TerminalId::END], Vec::new())), "{name}: ab EOS lexed to {r2:?}");
    }
    Ok("abaccab -> (B C, ab); ab EOS -> (B $, empty) on both lexers".into())
}

fn strings_over(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut all = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p: &Vec<u8>| {
                alphabet.iter().map(move |&b| {
                    let mut s = p.clone();
                    s.push(b);
                    s
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

fn criterion_lexing_transducer(randoms: &[Case]) -> Outcome {
    let bc = bc_case();
    let oracle = PositionLexer::new(&bc.grammar.terminals);
    let mut n = 0;
    for s in strings_over(b"abc", 6) {
        for eos in [false, true] {
            let input: Vec<LexSym> = LexSym::bytes(&s).chain(eos.then_some(LexSym::Eos)).collect();
            agrees(&bc.artifact.lexer, &oracle, &input, fst_replay(&bc.artifact.lexer, &input))?;
            n += 1;
        }
    }
    for case in randoms {
        let oracle = PositionLexer::new(&case.grammar.terminals);
        let alphabet = InstanceSize::default().alphabet;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let len = rng.gen_range(0..=12);
            let mut input: Vec<LexSym> = Vec::with_capacity(len + 1);
            for _ in 0..len {
                if rng.gen_bool(0.03) {
                    input.push(LexSym::Eos);
                } else {
                    input.push(LexSym::Byte(alphabet[rng.gen_range(0..alphabet.len())]));
                }
            }
            if rng.gen_bool(0.5) {
                input.push(LexSym::Eos);
            }
            agrees(&case.artifact.lexer, &oracle, &input, fst_replay(&case.artifact.lexer, &input))
                .map_err(|e| format!("{}: {e}", case.name))?;
            n += 1;
        }
    }
    Ok(format!("{n} inputs ({} random instances x 10000 plus exhaustive length <= 6 on bc)", randoms.len()))
}

fn token_replay(a: &CompiledArtifact, tokens: &[TokenId]) -> Option<(Vec<TerminalId>, u32)> {
    let mut q = LexingFst::INITIAL;
    let mut out = Vec::new();
    for &t in tokens {
        let (next, seq) = a.tokens.step(q, t)?;
        out.extend_from_slice(seq);
        q = next;
    }
    Some((out, q))
}

fn detokenized(v: &Vocabulary, tokens: &[TokenId]) -> Vec<LexSym> {
    let mut input = Vec::new();
    for &t in tokens {
        if v.is_eos(t) {
            input.push(LexSym::Eos);
        } else {
            input.extend(LexSym::bytes(v.bytes(t)));
        }
    }
    input
}

fn criterion_token_transducer(randoms: &[Case]) -> Outcome {
    let bc = bc_case();
    let oracle = PositionLexer::new(&bc.grammar.terminals);
    let n_tokens = bc.vocab.len() as TokenId;
    let mut layer: Vec<Vec<TokenId>> = vec![Vec::new()];
    let mut n = 0;
    for depth in 0..=4 {
        for seq in &layer {
            let input = detokenized(&bc.vocab, seq);
            agrees(&bc.artifact.lexer, &oracle, &input, token_replay(&bc.artifact, seq))?;
            n += 1;
        }
        if depth < 4 {
            layer = layer.iter().flat_map(|p| (0..n_tokens).map(move |t| [p.as_slice(), &[t]].concat())).collect();
        }
    }
    for case in randoms {
        let oracle = PositionLexer::new(&case.grammar.terminals);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eos = case.vocab.eos_id();
        for _ in 0..2_000 {
            let len = rng.gen_range(0..=6);
            let seq: Vec<TokenId> = (0..len)
                .map(|_| if rng.gen_bool(0.05) { eos } else { rng.gen_range(0..case.vocab.len() as TokenId) })
                .collect();
            let input = detokenized(&case.vocab, &seq);
            agrees(&case.artifact.lexer, &oracle, &input, token_replay(&case.artifact, &seq))
                .map_err(|e| format!("{}: tokens {seq:?}: {e}", case.name))?;
            n += 1;
        }
    }
    Ok(format!("{n} token sequences (exhaustive length <= 4 on bc, 2000 random on each of {} instances)", randoms.len()))
}

fn criterion_oracle_equivalence(randoms: &[Case]) -> Outcome {
    let start = Instant::now();
    let bc = bc_case();
    let mut cases: Vec<&Case> = vec![&bc];
    cases.extend(randoms);
    let reports: Vec<_> = cases
        .par_iter()
        .map(|c| (c.name.clone(), check_equivalence(&c.artifact, &Oracle::new(&c.grammar, &c.vocab), 4, 8)))
        .collect();
    let elapsed = start.elapsed();
    for (name, r) in &reports {
        ensure!(r.is_equivalent(), "{name}: {} differing prefixes\n{}", r.diffs.len(), r.table());
    }
    let states: usize = reports.iter().map(|(_, r)| r.states_checked).sum();
    let prefixes: usize = reports.iter().map(|(_, r)| r.prefixes_visited).sum();
    ensure!(elapsed.as_secs() < 300, "took {elapsed:?}");
    Ok(format!(
        "bc + {} random instances, {states} states / {prefixes} prefixes, depth 4, horizon 8, {:.1} s",
        randoms.len(),
        elapsed.as_secs_f64()
    ))
}

fn criterion_hand_masks() -> Outcome {
    let case = bc_case();
    let v = &case.vocab;
    let cfg = OracleConfig::default();
    let expected: [(&[&str], &[&str]); 3] = [
        (&[], &["a", "ab", "aba"]),
        (&["ab"], &["a", "b", "ac"]),
        (&["ab", "ac"], &["a", "c", "ab", "aba", "EOS"]),
    ];
    for (prefix, want) in expected {
        let prefix: Vec<TokenId> = prefix.iter().map(|s| token_id(v, s)).collect();
        let want = ids(v, want);
        let om = oracle_mask(&case.grammar, v, &prefix, &cfg);
        let oracle: BTreeSet<usize> = om.mask.iter().collect();
        ensure!(om.undecided.is_empty() && oracle == want, "oracle after {prefix:?}: {oracle:?}, expected {want:?}");
        let s = case.artifact.replay(&prefix).map_err(|e| e.to_string())?;
        let engine: BTreeSet<usize> = case.artifact.compute_mask(&s).iter().collect();
        ensure!(engine == want, "engine after {prefix:?}: {engine:?}, expected {want:?}");
    }
    Ok("initial {a,ab,aba}; ab {a,b,ac}; ab ac {a,c,ab,aba,EOS}; oracle-confirmed".into())
}

/// Parser configurations reached by random valid terminal walks: the
/// terminal prefix and the full stack after it.
fn sample_configs(p: &Pda, terms: &[TerminalId], walks: usize, max_len: usize, seed: u64) -> Vec<(Vec<TerminalId>, Vec<u32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![(Vec::new(), vec![Pda::START])];
    for _ in 0..walks {
        let mut stack = vec![Pda::START];
        let mut w = Vec::new();
        for _ in 0..rng.gen_range(1..=max_len) {
            let options: Vec<TerminalId> = terms
                .iter()
                .copied()
                .filter(|&a| {
                    let mut s = stack.clone();
                    p.feed(&mut s, a) == Some(false)
                })
                .collect();
            if options.is_empty() {
                break;
            }
            let a = options[rng.gen_range(0..options.len())];
            p.feed(&mut stack, a);
            w.push(a);
            out.push((w.clone(), stack.clone()));
        }
    }
    out
}

/// A random continuation of a configuration that the parser accepts,
/// possibly ending in `$`.
fn valid_continuation(p: &Pda, stack: &[u32], terms: &[TerminalId], rng: &mut ChaCha8Rng) -> Vec<TerminalId> {
    let mut stack = stack.to_vec();
    let mut alpha = Vec::new();
    for _ in 0..rng.gen_range(0..=5) {
        let mut s = stack.clone();
        if rng.gen_bool(0.2) && p.feed(&mut s, TerminalId::END) == Some(true) {
            alpha.push(TerminalId::END);
            return alpha;
        }
        let options: Vec<TerminalId> = terms
            .iter()
            .copied()
            .filter(|&a| {
                let mut s = stack.clone();
                p.feed(&mut s, a) == Some(false)
            })
            .collect();
        if options.is_empty() {
            break;
        }
        let a = options[rng.gen_range(0..options.len())];
        p.feed(&mut stack, a);
        alpha.push(a);
    }
    alpha
}

fn random_sequence(terms: &[TerminalId], rng: &mut ChaCha8Rng, max_len: usize) -> Vec<TerminalId> {
    let mut alpha: Vec<TerminalId> = (0..rng.gen_range(1..=max_len)).map(|_| terms[rng.gen_range(0..terms.len())]).collect();
    if rng.gen_bool(0.3) {
        alpha.push(TerminalId::END);
    }
    alpha
}

fn property_cases(randoms: &[Case]) -> Vec<Case> {
    let mut cases = vec![bc_case(), json_case()];
    cases.extend(randoms.iter().map(|c| Case::new(c.name.clone(), c.grammar.clone(), c.vocab.clone())));
    cases
}

fn criterion_stack_invariance(cases: &[Case]) -> Outcome {
    let mut total = 0;
    for case in cases {
        let p = &case.artifact.pda;
        let terms = grammar_terminals(&case.grammar);
        let configs = sample_configs(p, &terms, 200, 12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut triples = 0;
        let mut attempts = 0;
        while triples < 1_000 {
            attempts += 1;
            ensure!(attempts < 200_000, "{}: only {triples} accepted triples found", case.name);
            let (_, stack) = &configs[rng.gen_range(0..configs.len())];
            let (q, below) = stack.split_last().map(|(q, b)| (*q, b)).unwrap();
            let below = &below[rng.gen_range(0..=below.len())..];
            let alpha = if rng.gen_bool(0.5) {
                valid_continuation(p, stack, &terms, &mut rng)
            } else {
                random_sequence(&terms, &mut rng, 4)
            };
            if p.accepts_prefix(q, below, &alpha) != PrefixResult::Accepted {
                continue;
            }
            triples += 1;
            for _ in 0..10 {
                let pad: Vec<u32> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..p.num_states() as u32)).collect();
                let padded = [pad.as_slice(), below].concat();
                let r = p.accepts_prefix(q, &padded, &alpha);
                ensure!(r == PrefixResult::Accepted, "{}: q {q} below {below:?} pad {pad:?} alpha {alpha:?}: {r:?}", case.name);
            }
        }
        total += triples;
    }
    Ok(format!("{} instances x 1000 accepted triples x 10 paddings, 0 violations ({total} triples)", cases.len()))
}

fn with_end(w: &[TerminalId], alpha: &[TerminalId]) -> Vec<TerminalId> {
    [w, alpha].concat()
}

fn criterion_overapproximation(cases: &[Case]) -> Outcome {
    for case in cases {
        let p = &case.artifact.pda;
        let fsa = strip_stack_fsa(p);
        let earley = Earley::new(&case.grammar);
        let terms = grammar_terminals(&case.grammar);
        let configs = sample_configs(p, &terms, 200, 12, 5);
        let mut by_top: HashMap<u32, Vec<&(Vec<TerminalId>, Vec<u32>)>> = HashMap::new();
        for c in &configs {
            by_top.entry(*c.1.last().unwrap()).or_default().push(c);
        }
        let tops: Vec<u32> = by_top.keys().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rejected = 0;
        let mut attempts = 0;
        while rejected < 1_000 {
            attempts += 1;
            ensure!(attempts < 200_000, "{}: only {rejected} rejected sequences found", case.name);
            let q = tops[rng.gen_range(0..tops.len())];
            let alpha = random_sequence(&terms, &mut rng, 5);
            if fsa.accepts(q, &alpha) {
                continue;
            }
            rejected += 1;
            for (w, stack) in by_top[&q].iter().take(20) {
                let r = p.accepts_prefix(q, &stack[..stack.len() - 1], &alpha);
                ensure!(r != PrefixResult::Accepted, "{}: q {q} stack {stack:?} accepts {alpha:?}", case.name);
                ensure!(!earley.accepts(&with_end(w, &alpha)), "{}: prefix {w:?} extends by {alpha:?}", case.name);
            }
        }
    }
    Ok(format!("{} instances x 1000 rejected sequences; no sampled stack accepts", cases.len()))
}

fn criterion_partition_law(cases: &[Case]) -> Outcome {
    let mut seqs = 0;
    for case in cases {
        let a = &case.artifact;
        let norm = a.spanner.normalized();
        let earley = Earley::new(&case.grammar);
        let terms = grammar_terminals(&case.grammar);
        let walks = if norm.len() > 1_000 { 20 } else { 100 };
        let configs = sample_configs(&a.pda, &terms, walks, 10, 7);
        for qp in 0..a.pda.num_states() as u32 {
            let c = a.tables.counts(qp);
            ensure!(
                c.always + c.rejected + c.dependent == norm.len(),
                "{}: state {qp} classes {c:?} do not cover {} sequences",
                case.name,
                norm.len()
            );
        }
        for qa in 0..a.spanner.num_states() as u32 {
            for qp in 0..a.pda.num_states() as u32 {
                let mut want = gcd_core::BitSet::new(a.vocab.len());
                for (alpha, _) in a.spanner.norm_row(qa) {
                    if a.tables.class(qp, *alpha) == SeqClass::Always {
                        for &t in a.spanner.norm_tokens(qa, *alpha) {
                            want.insert(t as usize);
                        }
                    }
                }
                ensure!(a.tables.a_table(qa, qp) == &want, "{}: a_table({qa},{qp}) is not the union over Always", case.name);
            }
        }
        for (w, stack) in &configs {
            let (q, below) = stack.split_last().unwrap();
            for (id, alpha) in norm.iter() {
                let truth = earley.accepts(&with_end(w, alpha));
                let pda = a.pda.accepts_prefix(*q, below, alpha) == PrefixResult::Accepted;
                let ok = match a.tables.class(*q, id) {
                    SeqClass::Always => truth && pda,
                    SeqClass::Rejected => !truth && !pda,
                    SeqClass::Dependent => truth == pda,
                };
                ensure!(ok, "{}: prefix {w:?} alpha {alpha:?} class {:?} but extends = {truth}", case.name, a.tables.class(*q, id));
            }
        }
        seqs += norm.len() * a.pda.num_states();
    }
    Ok(format!("{} instances, {seqs} (state, sequence) pairs; classes agree with Earley on sampled stacks", cases.len()))
}

fn criterion_end_to_end(randoms: &[Case]) -> Outcome {
    let bc = bc_case();
    let mut runs = 0;
    let mut cases: Vec<(&Case, u64)> = (0..100).map(|s| (&bc, s)).collect();
    cases.extend(randoms.iter().flat_map(|c| (0..5).map(move |s| (c, s))));
    for (case, seed) in cases {
        let oracle = Oracle::new(&case.grammar, &case.vocab);
        let mut scorer = UniformScorer::new(seed);
        let cfg = SamplingConfig { seed, ..SamplingConfig::default() };
        let out = constrained_decode(&case.artifact, &mut scorer, &[], 10_000, &cfg)
            .map_err(|e| format!("{} seed {seed}: {e}", case.name))?;
        ensure!(out.complete, "{} seed {seed}: no EOS within 10000 tokens", case.name);
        let gen = out.generated();
        ensure!(gen.last() == Some(&case.vocab.eos_id()), "{} seed {seed}: does not end in EOS", case.name);
        let bytes = case.vocab.detokenize(&gen[..gen.len() - 1]);
        ensure!(oracle.accepts_sentence(&bytes), "{} seed {seed}: {:?} not in the language", case.name, String::from_utf8_lossy(&bytes));
        runs += 1;
    }
    Ok(format!("{runs} runs (100 on bc, 5 on each of {} instances) terminate in the language", randoms.len()))
}

fn criterion_performance() -> Outcome {
    let g = load_grammar(&fixture("json_like.grammar")).map_err(|e| e.to_string())?;
    let v = load_vocab(&fixture("json_like_vocab.json")).map_err(|e| e.to_string())?;
    let regenerated = synthetic_vocabulary(&sample_corpus(&g, 2000, 8, 0), 5000, 8);
    ensure!(regenerated == v, "committed vocabulary differs from the seeded synthetic vocabulary");
    ensure!(v.len() == 5000, "vocabulary has {} tokens", v.len());
    let start = Instant::now();
    let (a, _) = compile_artifact(&g, &v).map_err(|e| e.to_string())?;
    let offline = start.elapsed();
    let stats = bench(&a, 1000, 0);
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    ensure!(offline.as_secs() < 60, "offline took {offline:?}");
    ensure!(stats.mean_us < 20_000, "mean mask latency {} us", stats.mean_us);
    Ok(format!(
        "{} terminals, 5000 tokens: offline {} ms, mask mean {} us / p50 {} us / p99 {} us ({profile} build)",
        g.terminals.len(),
        offline.as_millis(),
        stats.mean_us,
        stats.p50_us,
        stats.p99_us
    ))
}

fn criterion_round_trip() -> Outcome {
    for case in [bc_case(), json_case()] {
        let bytes = serialize_artifact(&case.artifact);
        let back = deserialize_artifact(&bytes).map_err(|e| format!("{}: {e}", case.name))?;
        ensure!(serialize_artifact(&back) == bytes, "{}: re-serialization differs", case.name);
        let mut before = Vec::new();
        let mut after = Vec::new();
        random_walk(&case.artifact, 50, 9, |m, _| before.push(m.clone()));
        random_walk(&back, 50, 9, |m, _| after.push(m.clone()));
        ensure!(before.len() == 50 && before == after, "{}: masks differ after round-trip", case.name);
    }
    Ok("bc and json_like: identical bytes and identical masks over a 50-step walk".into())
}

fn main() {
    let randoms200: Vec<Case> = (0..200).map(random_case).collect();
    let randoms20 = &randoms200[..20];
    let props = property_cases(randoms20);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("bc golden spanner table", Box::new(criterion_bc_spanner_table)),
        ("reference lexer examples", Box::new(criterion_reference_lexer)),
        ("lexing transducer equals reference lexer", Box::new(|| criterion_lexing_transducer(randoms20))),
        ("token transducer equals reference lexer", Box::new(|| criterion_token_transducer(randoms20))),
        ("engine masks equal oracle masks", Box::new(|| criterion_oracle_equivalence(&randoms200))),
        ("hand-derived bc masks", Box::new(criterion_hand_masks)),
        ("stack invariance", Box::new(|| criterion_stack_invariance(&props))),
        ("stripped automaton overapproximates", Box::new(|| criterion_overapproximation(&props))),
        ("always/rejected/dependent partition", Box::new(|| criterion_partition_law(&props))),
        ("end-to-end decoding", Box::new(|| criterion_end_to_end(randoms20))),
        ("desk-scale performance gate", Box::new(criterion_performance)),
        ("artifact round-trip", Box::new(criterion_round_trip)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{secs:.1}s]  {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}  [{secs:.1}s]  {reason}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
