use cpmetric::constitutive::{stress_bundle, EnergyKind};
use cpmetric::par;
use cpmetric::sampling::random_state;
use cpmetric::verifier::plastic_params;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

// Worst relative spread of the four yield measures over one random state.
fn coincidence(i: &u64) -> f64 {
    let p = plastic_params(EnergyKind::IsochoricNeoHooke);
    let st = random_state(42, *i);
    let b = stress_bundle(&p, &st.c, &st.cp, Some(&st.f)).unwrap();
    let m = b.yield_measures();
    let hi = m.iter().cloned().fold(f64::MIN, f64::max);
    let lo = m.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / hi.max(1.0)
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("yield_measure_coincidence");
    for n in [1_000u64, 10_000] {
        let idx: Vec<u64> = (0..n).collect();
        g.bench_with_input(BenchmarkId::new("sequential", n), &idx, |b, idx| {
            b.iter(|| black_box(par::map_seq(idx, coincidence)))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", n), &idx, |b, idx| {
            b.iter(|| black_box(par::map_par(idx, coincidence)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
