use refgen_core::GenusSymbol;

const GOLDEN: &str = include_str!("data/golden_symbols.txt");

#[test]
fn golden_symbols_round_trip() {
    let mut bad = Vec::new();
    for s in GOLDEN.lines().filter(|l| !l.trim().is_empty()) {
        match GenusSymbol::parse(s, Some(4)) {
            Ok(g) if g.to_string() == s => {}
            Ok(g) => bad.push(format!("{s} printed as {g}")),
            Err(e) => bad.push(format!("{s}: {e}")),
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}
