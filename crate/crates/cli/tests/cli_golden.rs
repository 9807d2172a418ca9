use std::path::{Path, PathBuf};

use gcd_cli::{load_artifact, load_grammar, random_walk, run};
use gcd_core::token::Vocabulary;
use gcd_oracle::{random_instance, sample_corpus, synthetic_vocabulary, InstanceSize};
use tempfile::TempDir;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("grammars").join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn gcd(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("gcd").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn compile_bc(dir: &TempDir) -> String {
    let out = dir.path().join("bc.gcda").to_string_lossy().into_owned();
    let (code, stdout, stderr) =
        gcd(&["compile", "--grammar", &fixture("bc.grammar"), "--vocab", &fixture("bc_vocab.json"), "--out", &out]);
    assert_eq!(code, 0, "{stderr}");
    for line in ["lexer_states 4", "normalized_sequences 13", "lr_states 5", "token_transitions 19"] {
        assert!(stdout.lines().any(|l| l == line), "missing {line:?} in\n{stdout}");
    }
    out
}

#[test]
fn bc_masks_match_golden() {
    let dir = TempDir::new().unwrap();
    let art = compile_bc(&dir);
    for (prefix, file) in [("", "bc_mask_initial.txt"), ("3", "bc_mask_ab.txt"), ("3,4", "bc_mask_ab_ac.txt")] {
        let (code, stdout, _) = gcd(&["mask", "--artifact", &art, "--prefix", prefix]);
        assert_eq!(code, 0);
        assert_eq!(stdout, golden(file), "prefix {prefix:?}");
    }
}

#[test]
fn bc_generate_and_inspect_match_golden() {
    let dir = TempDir::new().unwrap();
    let art = compile_bc(&dir);
    let (code, stdout, _) = gcd(&["generate", "--artifact", &art, "--stub", "greedy"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, golden("bc_generate_greedy.txt"));
    for what in ["spanner", "lr", "tables"] {
        let (code, stdout, _) = gcd(&["inspect", "--artifact", &art, "--what", what]);
        assert_eq!(code, 0);
        assert_eq!(stdout, golden(&format!("bc_inspect_{what}.txt")), "inspect {what}");
    }
}

#[test]
fn uniform_generation_is_seeded_and_complete() {
    let dir = TempDir::new().unwrap();
    let art = compile_bc(&dir);
    let args = ["generate", "--artifact", &art, "--stub", "uniform", "--seed", "7", "--max-len", "200"];
    let (code, first, _) = gcd(&args);
    assert_eq!(code, 0);
    assert_eq!(gcd(&args).1, first);
    assert!(first.lines().any(|l| l == "complete true"), "{first}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let art = compile_bc(&dir);

    let (code, _, stderr) = gcd(&["mask", "--artifact", &art, "--prefix", "3,3"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("prompt token 3 at position 1 is not allowed"), "{stderr}");

    let conflict = dir.path().join("conflict.grammar");
    std::fs::write(&conflict, "A: /a/ ;\nstart: A | A ;\n").unwrap();
    let out = dir.path().join("c.gcda");
    let (code, _, stderr) = gcd(&[
        "compile",
        "--grammar",
        conflict.to_str().unwrap(),
        "--vocab",
        &fixture("bc_vocab.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("conflict"), "{stderr}");
    assert!(!out.exists());

    assert_eq!(gcd(&["bogus"]).0, 2);
    assert_eq!(gcd(&["mask", "--artifact", &art, "--prefix", "x"]).0, 2);
    assert_eq!(gcd(&["--help"]).0, 0);
    assert_eq!(gcd(&["mask", "--artifact", "/nonexistent/a.gcda"]).0, 1);
}

#[test]
fn oracle_check_on_bc_is_clean() {
    let (code, stdout, _) = gcd(&["oracle-check", "--grammar", &fixture("bc.grammar"), "--vocab", &fixture("bc_vocab.json")]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.lines().any(|l| l == "diffs 0"), "{stdout}");
}

#[test]
fn bench_reports_latency_without_changing_masks() {
    let dir = TempDir::new().unwrap();
    let art = compile_bc(&dir);
    let a = load_artifact(Path::new(&art)).unwrap();
    let mut before = Vec::new();
    random_walk(&a, 200, 3, |m, _| before.push(m.clone()));

    let (code, stdout, _) = gcd(&["bench", "--artifact", &art, "--steps", "200", "--seed", "3"]);
    assert_eq!(code, 0);
    for key in ["steps 200", "mean_us", "p50_us", "p99_us", "max_us"] {
        assert!(stdout.contains(key), "missing {key} in\n{stdout}");
    }

    let mut after = Vec::new();
    random_walk(&a, 200, 3, |m, _| after.push(m.clone()));
    assert_eq!(before, after);
}

#[test]
fn committed_fixtures_regenerate() {
    let bc = Vocabulary::with_eos(["a", "b", "c", "ab", "ac", "aba"].map(|s| s.as_bytes().to_vec())).unwrap();
    assert_eq!(std::fs::read_to_string(fixture("bc_vocab.json")).unwrap(), bc.to_json() + "\n");

    let g = load_grammar(Path::new(&fixture("json_like.grammar"))).unwrap();
    let v = synthetic_vocabulary(&sample_corpus(&g, 2000, 8, 0), 5000, 8);
    assert_eq!(std::fs::read_to_string(fixture("json_like_vocab.json")).unwrap(), v.to_json() + "\n");

    let inst = random_instance(0, &InstanceSize::default());
    assert_eq!(std::fs::read_to_string(fixture("random_seed0.grammar")).unwrap(), inst.source);
    assert_eq!(std::fs::read_to_string(fixture("random_seed0_vocab.json")).unwrap(), inst.vocab.to_json() + "\n");
}
