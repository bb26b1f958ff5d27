use criterion::{criterion_group, criterion_main, Criterion};
use seircheck_core::dynsys::catalog;
use seircheck_core::galois::{power_closed_form, power_iterative, GaloisParams};
use seircheck_core::numerics::{integrate, ToleranceConfig};
use seircheck_core::params::ParamAssignment;
use seircheck_core::poly::{Monomial, Poly};
use seircheck_core::poly_gcd;
use seircheck_core::rat::Rat;
use seircheck_core::symbol::Symbol;
use seircheck_core::variational::{
    fundamental_columns, seir_linear_system, verify_ve_column, CaseTag,
};
use std::collections::BTreeMap;

fn dense_poly(seed: u64, deg: u32) -> Poly {
    let vars = vec![Symbol::new("x"), Symbol::new("y")];
    let mut terms = BTreeMap::new();
    let mut state = seed;
    for ex in 0..=deg {
        for ey in 0..=(deg - ex) {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let c = ((state >> 33) % 19) as i64 - 9;
            if c != 0 {
                terms.insert(Monomial(vec![ex, ey]), Rat::from_int(c));
            }
        }
    }
    Poly::from_terms(vars, terms)
}

fn bench_poly_gcd(c: &mut Criterion) {
    let g = dense_poly(3, 3);
    let p = &dense_poly(5, 4) * &g;
    let q = &dense_poly(11, 4) * &g;
    c.bench_function("poly_gcd bivariate deg-7", |b| {
        b.iter(|| poly_gcd(std::hint::black_box(&p), std::hint::black_box(&q)))
    });
}

fn bench_column_verify(c: &mut Criterion) {
    let sys = seir_linear_system(CaseTag::ANeB).unwrap();
    let set = fundamental_columns(CaseTag::ANeB).unwrap();
    c.bench_function("verify first fundamental column", |b| {
        b.iter(|| verify_ve_column(std::hint::black_box(&set.columns[0]), &sys).unwrap())
    });
}

fn bench_galois_power(c: &mut Criterion) {
    let p = GaloisParams::symbolic();
    c.bench_function("A^20 iterative symbolic", |b| {
        b.iter(|| power_iterative(CaseTag::ANeB, std::hint::black_box(&p), 20))
    });
    c.bench_function("A^20 closed form symbolic", |b| {
        b.iter(|| power_closed_form(CaseTag::ANeB, std::hint::black_box(&p), 20))
    });
}

fn bench_integrator(c: &mut Criterion) {
    let seir = catalog("seir").unwrap();
    let params = ParamAssignment::parse("r=1,a=1,b=2").unwrap();
    let tol = ToleranceConfig { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 };
    c.bench_function("dopri5 seir t=0..50 rtol 1e-10", |b| {
        b.iter(|| {
            integrate(&seir, &params, &[2.0, 0.05, 0.1, 0.0], 0.0, 50.0, &tol).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_poly_gcd,
    bench_column_verify,
    bench_galois_power,
    bench_integrator
);
criterion_main!(benches);
