use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use recbound::exec::{chunked_complex_sum, map_ordered, Execution};
use recbound::jordan::{main_theorem_init, CriticalCellProblem};
use recbound::numeric::{rotation, ComplexSum};
use recbound::phasefn::{parse_phase, SequenceSource};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn chunked_sum(c: &mut Criterion) {
    let mut group = c.benchmark_group("chunked_sum");
    group.sample_size(10);
    let last = 1u64 << 22;
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, last), &last, |b, &last| {
            b.iter(|| {
                chunked_complex_sum::<(), _>(exec, 1, last, |a, z| {
                    let mut s = ComplexSum::new();
                    for k in a..=z {
                        s.add(rotation(k, 0.3) / Complex64::new(k as f64, 0.0));
                    }
                    Ok(s)
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

fn theorem_init(c: &mut Criterion) {
    let mut group = c.benchmark_group("main_theorem_init");
    group.sample_size(10);
    let y = |s: &str| SequenceSource::phase(parse_phase(s).unwrap());
    let p = CriticalCellProblem::new(
        0.1,
        vec![y("0.3*n"), y("0.35*n + sqrt(n)/7"), y("0.2*n")],
        100_000,
        None,
        Execution::Parallel,
    )
    .unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| main_theorem_init(black_box(&p), 1e-5, exec).unwrap())
        });
    }
    group.finish();
}

fn ordered_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("map_ordered");
    let items: Vec<u64> = (1..=64).collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                map_ordered(exec, &items, |&i| {
                    let mut s = ComplexSum::new();
                    for k in 1..=20_000u64 {
                        s.add(rotation(k * i, 0.25));
                    }
                    s.value()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, chunked_sum, theorem_init, ordered_map);
criterion_main!(benches);
