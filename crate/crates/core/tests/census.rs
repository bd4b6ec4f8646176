//! Cross-checks the frozen dimension 3 classification against a census of reduced ternary forms,
//! which needs neither neighbors, representatives nor the mass formula to list classes.

use refgen_core::classes::{aut_order, is_isometric};
use refgen_core::pipeline::GenusRecord;
use refgen_core::{is_reflective, mass, GenusSymbol, GramLattice, Rational};
use std::collections::{BTreeMap, BTreeSet};

const CENSUS_DET: i64 = 1000;

fn census(max_det: i64) -> BTreeMap<GenusSymbol, Vec<GramLattice>> {
    let mut by: BTreeMap<GenusSymbol, Vec<GramLattice>> = BTreeMap::new();
    let mut a = 1;
    while a * a * a <= 2 * max_det {
        let mut b = a;
        while a * b * b <= 2 * max_det {
            let mut c = b;
            while a * b * c <= 2 * max_det {
                for f in -(a / 2)..=(a / 2) {
                    for e in -(a / 2)..=(a / 2) {
                        for d in -(b / 2)..=(b / 2) {
                            let Ok(l) = GramLattice::new(3, vec![a, f, e, f, b, d, e, d, c]) else { continue };
                            if l.determinant() > max_det as i128 || !l.is_primitive() {
                                continue;
                            }
                            let v = by.entry(GenusSymbol::from_lattice(&l)).or_default();
                            if !v.iter().any(|m| is_isometric(m, &l)) {
                                v.push(l);
                            }
                        }
                    }
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    by
}

fn frozen() -> Vec<GenusRecord> {
    include_str!("data/dim3_genera.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn frozen_dim3_list_matches_census() {
    let listed: BTreeSet<String> =
        frozen().into_iter().filter(|r| r.det <= CENSUS_DET as i128).map(|r| r.genus().key().to_string()).collect();
    let mut found = BTreeSet::new();
    for (g, classes) in census(CENSUS_DET) {
        let sum: Rational = classes.iter().map(|l| Rational::new(1.into(), aut_order(l).into())).sum();
        assert_eq!(sum, mass(&g).unwrap().0, "census of {g} is incomplete");
        if classes.iter().all(is_reflective) {
            found.insert(g.key().to_string());
        }
    }
    let missing: Vec<_> = found.difference(&listed).collect();
    let extra: Vec<_> = listed.difference(&found).collect();
    assert!(missing.is_empty() && extra.is_empty(), "missing {missing:?}, extra {extra:?}");
}

#[test]
fn frozen_records_are_consistent() {
    for r in frozen() {
        let g = r.genus();
        assert_eq!(g.to_string(), r.symbol);
        assert!(g.is_primitive());
        assert_eq!(mass(&g).unwrap().0, r.mass.parse::<Rational>().unwrap());
        // totally reflective means the reflective part of the mass is all of it
        assert_eq!(r.m_ref, r.mass, "{}", r.symbol);
        for c in &r.classes {
            assert_eq!(GenusSymbol::from_lattice(&c.gram), g);
            assert!(c.reflective);
        }
    }
}
