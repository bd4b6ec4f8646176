use std::process::Command;

fn refgen(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_refgen")).args(args).output().expect("spawn refgen");
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn genus_of_a2() {
    let (ok, out, _) = refgen(&["genus", "2 -1; -1 2"]);
    assert!(ok);
    assert_eq!(out.trim(), "II(3^{-1})");
}

#[test]
fn mass_from_symbol_and_gram() {
    let (ok, out, _) = refgen(&["mass", "1 0 0;0 1 0;0 0 1", "--gram"]);
    assert!(ok);
    assert!(out.contains("mass=1/48"), "{out}");
    let (ok, out, _) = refgen(&["mass", "II(3^{-1})", "--rank", "2"]);
    assert!(ok);
    assert!(out.contains("mass=1/12"), "{out}");
}

#[test]
fn roots_json_of_d4() {
    let (ok, out, _) = refgen(&["roots", "2 -1 0 0;-1 2 -1 -1;0 -1 2 0;0 -1 0 2", "--json"]);
    assert!(ok);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v.is_object());
}

#[test]
fn classes_reach_the_mass() {
    let (ok, out, _) = refgen(&["classes", "1 0 0 0;0 1 0 0;0 0 1 0;0 0 0 25", "--gram"]);
    assert!(ok);
    let h: usize = out.split("h=").nth(1).unwrap().split('\t').next().unwrap().parse().unwrap();
    assert!(h >= 2, "{out}");
}

#[test]
fn bad_input_fails_cleanly() {
    let (ok, _, err) = refgen(&["genus", "1 2; 3"]);
    assert!(!ok);
    assert!(!err.contains("panicked"), "{err}");
    let (ok, _, err) = refgen(&["mass", "II(7^{+1}", "--rank", "2"]);
    assert!(!ok);
    assert!(!err.contains("panicked"), "{err}");
}

#[test]
fn bounds_report() {
    let (ok, out, _) = refgen(&["bounds", "--dim", "3", "counts"]);
    assert!(ok);
    assert!(out.contains("r=0: s <= 9"), "{out}");
    let (ok, out, _) = refgen(&["bounds", "--dim", "3", "ratio", "3*5*7"]);
    assert!(ok);
    assert!(out.contains("det=105"), "{out}");
}

#[test]
fn classify_resumes_from_its_log() {
    let dir = std::env::temp_dir().join(format!("refgen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let log = dir.join("run.jsonl");
    let log = log.to_str().unwrap();
    let args = ["classify", "--dim", "3", "--stage", "sf", "--max-det", "60", "--quiet", "--resume", log];
    let (ok, first, err) = refgen(&args);
    assert!(ok, "{err}");
    assert!(err.contains("0 violations"), "{err}");
    let written = std::fs::read_to_string(log).unwrap();
    assert!(!written.is_empty());
    let (ok, second, _) = refgen(&args);
    assert!(ok);
    assert_eq!(first, second);
    assert_eq!(std::fs::read_to_string(log).unwrap(), written);
    assert!(first.lines().any(|l| l.starts_with("I(1_3^{+3})\tdet=1\th=1\tmass=1/48")), "{first}");
    std::fs::remove_dir_all(&dir).ok();
}
