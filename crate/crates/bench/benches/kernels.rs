use criterion::{black_box, criterion_group, criterion_main, Criterion};
use refgen_bench::{d4, mixed_quaternary, mixed_ternary};
use refgen_core::bounds::{nref_upper, prime_count_bounds, DetShape};
use refgen_core::classes::{aut_order, p_neighbors};
use refgen_core::local::jordan_decompose;
use refgen_core::{mass, root_set, GenusSymbol};

fn genus(c: &mut Criterion) {
    let l = mixed_quaternary();
    c.bench_function("jordan_2adic", |b| b.iter(|| jordan_decompose(black_box(&l), 2)));
    c.bench_function("genus_symbol", |b| b.iter(|| GenusSymbol::from_lattice(black_box(&l))));
    let g = GenusSymbol::from_lattice(&l);
    c.bench_function("mass_rank4", |b| b.iter(|| mass(black_box(&g)).unwrap()));
    let g3 = GenusSymbol::from_lattice(&mixed_ternary());
    c.bench_function("mass_rank3", |b| b.iter(|| mass(black_box(&g3)).unwrap()));
}

fn lattices(c: &mut Criterion) {
    let l = d4();
    c.bench_function("roots_d4", |b| b.iter(|| root_set(black_box(&l))));
    c.bench_function("aut_d4", |b| b.iter(|| aut_order(black_box(&l))));
    let t = mixed_ternary();
    c.bench_function("neighbors_3", |b| b.iter(|| p_neighbors(black_box(&t), 3)));
}

fn bounds(c: &mut Criterion) {
    let s: DetShape = "3^2*5^2*7*11*13".parse().unwrap();
    c.bench_function("nref_dim4", |b| b.iter(|| nref_upper(black_box(&s), 4, false).unwrap()));
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("prime_counts_dim3", |b| b.iter(|| prime_count_bounds(3).unwrap()));
    g.finish();
}

criterion_group!(benches, genus, lattices, bounds);
criterion_main!(benches);
