use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stabsim_core::circuit::parse;
use stabsim_core::decomposition::Database;
use stabsim_core::gates::GateKind;

fn circuits() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../circuits")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabsim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dense_bell_amplitude() {
    let bell = circuits().join("bell.sqc");
    let o = run(&["simulate", path_str(&bell), "--method", "dense", "--x", "00"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "amplitude_real"), "0.707106781187");
    assert_eq!(field(&s, "amplitude_imag"), "0");
    assert!(s.contains("probability: 0.5"));
}

#[test]
fn spir_matches_dense_on_bundled_circuits() {
    for (name, x) in [("small_t.sqc", "011"), ("cz_n4_c3.sqc", "0101"), ("supremacy_n4_c2.sqc", "1100")] {
        let c = circuits().join(name);
        for method in ["spir", "spc", "spc-soc"] {
            let o = run(&["simulate", path_str(&c), "--method", method, "--x", x, "--tol", "1e-8"]);
            let s = stdout(&o);
            assert!(o.status.success(), "{name} {method}: {s}");
            assert_eq!(field(&s, "check"), "pass");
            field(&s, "dense_real");
            field(&s, "inner_products");
            field(&s, "live_terms_peak");
            field(&s, "wall_time_s");
        }
    }
}

#[test]
fn cut_method_on_cz_circuit() {
    let c = circuits().join("cz_n4_c3.sqc");
    let o = run(&["simulate", path_str(&c), "--method", "cut", "--x", "0110", "--tol", "1e-8"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert_eq!(field(&s, "check"), "pass");
}

#[test]
fn memory_cap_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tt.sqc");
    std::fs::write(&p, "qubits 2\ngate h 0\ngate h 1\ngate t 0\ngate t 1\n").unwrap();
    let o = run(&["simulate", path_str(&p), "--method", "spc", "--mem-cap", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("layer 0"), "{err}");
}

#[test]
fn input_errors_exit_2() {
    let bell = circuits().join("bell.sqc");
    assert_eq!(run(&["simulate", path_str(&bell), "--x", "000"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sqc");
    std::fs::write(&bad, "qubits 2\ngate frobnicate 0\n").unwrap();
    assert_eq!(run(&["simulate", path_str(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["decomp", "show", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "bogus", "--n", "3", "--cycles", "1"]).status.code(), Some(2));
    assert_eq!(run(&["cost", "crossover", "bogus", "0.3"]).status.code(), Some(2));
}

#[test]
fn decomp_commands() {
    let s = stdout(&run(&["decomp", "verify", "fsim"]));
    assert_eq!(field(&s, "result"), "pass");
    assert!(field(&s, "max_error").parse::<f64>().unwrap() <= 1e-12);

    let s = stdout(&run(&["decomp", "show", "ww"]));
    assert_eq!(s.lines().filter(|l| l.starts_with("term ")).count(), 6);

    let s = stdout(&run(&["decomp", "search", "--gate", "w", "--max-rank", "2"]));
    assert_eq!(field(&s, "result"), "none-found");
}

#[test]
fn gen_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.sqc");
    let b = dir.path().join("b.sqc");
    for p in [&a, &b] {
        let o = run(&["gen", "cz", "--n", "6", "--cycles", "4", "--p", "0.5", "--seed", "1", "--out", path_str(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let s = stdout(&run(&["gen", "cs", "--n", "4", "--cycles", "2", "--p", "0", "--seed", "9"]));
    let c = parse(&s).unwrap();
    assert!(c.gates.iter().all(|g| g.kind != GateKind::T));

    let s = stdout(&run(&["gen", "supremacy_like", "--n", "4", "--cycles", "3", "--seed", "5"]));
    let c = parse(&s).unwrap();
    for q in 0..4 {
        let singles: Vec<_> = c
            .gates
            .iter()
            .filter(|g| g.qubits.len() == 1 && g.qubits[0] == q)
            .map(|g| g.kind)
            .collect();
        assert_eq!(singles.len(), 3);
        assert!(singles.windows(2).all(|w| w[0] != w[1]), "qubit {q}: {singles:?}");
    }
}

#[test]
fn cost_commands() {
    assert_eq!(stdout(&run(&["cost", "crossover", "cz", "0.3333"])).trim(), "32");
    let s = stdout(&run(&["cost", "supremacy"]));
    let k: f64 = field(&s, "log2_kappa").parse().unwrap();
    assert!((k - 66.67).abs() < 0.01);

    let s = stdout(&run(&["cost", "thresholds", "--from", "2", "--to", "40"]));
    let row16 = s.lines().find(|l| l.starts_with("16,")).unwrap();
    assert_eq!(row16.split(',').nth(2).unwrap().parse::<f64>().unwrap(), 0.0);
    assert_eq!(s.lines().count(), 40);

    let c = circuits().join("small_t.sqc");
    let o = run(&["cost", "estimate", path_str(&c)]);
    assert!(o.status.success());
}

#[test]
fn database_override() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.db");
    std::fs::write(&good, Database::builtin().to_text()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stabsim"))
        .args(["decomp", "verify", "fsim"])
        .env("STABSIM_DB", &good)
        .output()
        .unwrap();
    assert!(o.status.success());

    // flip the sign of the first fsim coefficient
    let broken = Database::builtin().to_text().replacen("\nterm 1 0 |", "\nterm -1 0 |", 1);
    let bad = dir.path().join("bad.db");
    std::fs::write(&bad, broken).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stabsim"))
        .args(["decomp", "verify", "fsim"])
        .env("STABSIM_DB", &bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));

    let o = Command::new(env!("CARGO_BIN_EXE_stabsim"))
        .args(["decomp", "show", "fsim"])
        .env("STABSIM_DB", dir.path().join("missing.db"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
