use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use num_traits::Zero;
use toda_hbar::cli::CliError;
use toda_hbar::rhsolver::preset::{c1_data, c1_seed};
use toda_hbar::rhsolver::{run, Config, DressingTriple, RhError};
use toda_hbar::scalars::{Caps, Rat, ScalarPoly};
use toda_hbar::symbols::{HSymbol, Truncation};

fn toda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toda-hbar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_prints_first_order_string_solution() {
    let o = toda(&["solve", "--preset", "c1-string", "--hbar-order", "1", "--xi-hi", "3", "--t-deg", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("X_0 = 0\n"));
    assert!(text.contains("Xbar_0 = (t1*u)*xi + (t2*u^2)*xi^2 + (t3*u^3)*xi^3\n"), "{text}");
    assert!(text.contains("phi_0 = u - u*l\n"));
    assert!(text.contains("Xbar_1 = (-t1)*xi + (-3*t2*u)*xi^2 + (-6*t3*u^2)*xi^3\n"), "{text}");
    assert!(text.contains("phi_1 = 1/2*l\n"));
    assert!(text.contains(", 0 mismatches"));
}

#[test]
fn verify_preset_passes_every_line() {
    let o = toda(&["verify", "--preset", "c1-string", "--hbar-order", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().count() > 20);
    assert!(text.lines().all(|l| l.contains("PASS")), "{text}");
}

#[test]
fn tau_prints_string_free_energies() {
    let o = toda(&["tau", "--preset", "c1-string", "--hbar-order", "2", "--xi-hi", "3", "--t-deg", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("genus-form: yes"), "{text}");
}

#[test]
fn wkb_of_zero_triple_has_zero_phases() {
    let dir = tempfile::tempdir().unwrap();
    let t = Truncation::new(1, -3, 3, Caps::new(3, 3, 1, 0));
    let zero = DressingTriple { x: HSymbol::zero(t), xbar: HSymbol::zero(t), phi: vec![ScalarPoly::zero(t.caps); 2] };
    let path = dir.path().join("triple.json");
    fs::write(&path, serde_json::to_string(&zero.to_dto()).unwrap()).unwrap();
    let o = toda(&["wkb", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in ["S_0 = 0", "Sbar_0 = 0", "S_1 = 0", "Sbar_1 = 0"] {
        assert!(text.lines().any(|l| l == line), "{text}");
    }
}

#[test]
fn user_data_matches_the_preset() {
    let base = ["tau", "--hbar-order", "2", "--xi-hi", "3", "--t-deg", "1"];
    let preset = toda(&[&base[..], &["--preset", "c1-string"]].concat());
    let exprs = toda(
        &[
            &base[..],
            &[
                "--f",
                "E",
                "--g",
                "s",
                "--fbar",
                "(1 - s - hbar)*E",
                "--gbar",
                "s + 2*(1 - s - hbar)*E",
                "--seed-x0",
                "0",
                "--seed-xbar0",
                "(t[1] - 2)*(1 - s)*E + t[2]*(1 - s)^2*E^2 + t[3]*(1 - s)^3*E^3",
                "--seed-phi0",
                "(1 - s) - (1 - s)*log(1 - s)",
            ][..],
        ]
        .concat(),
    );
    assert_eq!(exprs.status.code(), Some(0), "{}", String::from_utf8_lossy(&exprs.stderr));
    let free = |o: &Output| stdout(o).lines().filter(|l| l.starts_with("F_")).map(String::from).collect::<Vec<_>>();
    assert_eq!(free(&exprs), free(&preset));
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        &["solve", "--f", "E"][..],
        &["solve", "--preset", "c1-string", "--f", "(s"],
        &["solve", "--preset", "nonsense"],
        &["solve", "--preset", "c1-string", "--xi-lo", "3", "--xi-hi", "1"],
        &["wkb", "--input", "/nonexistent/triple.json"],
    ] {
        let o = toda(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unsupported_seed_exits_with_one() {
    let o = toda(&[
        "solve",
        "--f",
        "E",
        "--g",
        "s",
        "--fbar",
        "(1 - s - hbar)*E",
        "--gbar",
        "s",
        "--seed-x0",
        "0",
        "--seed-xbar0",
        "0",
        "--seed-phi0",
        "1 - s",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exhausted_window_maps_to_three() {
    let mut cfg = Config::new(2, -3, 3, 1, 0).unwrap();
    cfg.margin = 0;
    let t = cfg.working_trunc();
    assert!(run(&cfg, &c1_data(t, &Rat::zero()), &c1_seed(t, &Rat::zero())).is_ok());
    let err = RhError::WindowExhausted { order: 2, what: "phi".into(), hint: "increase the window margin".into() };
    assert_eq!(CliError::Rh(err).exit_code(), 3);
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = toda(&[
            "run",
            "--preset",
            "c1-string",
            "--hbar-order",
            "2",
            "--xi-hi",
            "3",
            "--t-deg",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["cnm.txt", "tau.json", "triple.json", "verify.txt", "wkb.json"]);
    assert_eq!(fa, fb);
}

#[test]
fn json_output_round_trips_the_triple() {
    let o = toda(&[
        "solve",
        "--preset",
        "c1-string",
        "--hbar-order",
        "1",
        "--xi-hi",
        "3",
        "--t-deg",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let dto = serde_json::from_value(v["triple"].clone()).unwrap();
    let triple = DressingTriple::from_dto(&dto).unwrap();
    assert_eq!(triple.phi.len(), 2);
    assert!(triple.x.is_zero());
}
