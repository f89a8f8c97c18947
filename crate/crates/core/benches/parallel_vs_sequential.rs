//! Sequential against parallel execution of the data-parallel stages.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rice_core::blackbox::{LightState, Mlp};
use rice_core::cnp::{Program, Valence};
use rice_core::exec::Parallelism;
use rice_core::jobfile;
use rice_core::probing::{self, ProbeConfig};
use rice_core::synthesis::{self, SynthConfig};
use rice_core::validate::{self, Region};

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel),
];

const RED_PROGRAM: &str = "ande(const(rd,1.0),proj(iif(ltValue(a,0.6),0.0,1.0),[a->dist,o->go]))";

fn synthesis(c: &mut Criterion) {
    let job = jobfile::parse(include_str!("../tests/golden/red_job.pl")).unwrap();
    let mut group = c.benchmark_group("synthesis");
    group.sample_size(10);
    for (name, parallelism) in MODES {
        let cfg = SynthConfig {
            max_programs: 50,
            parallelism,
            ..SynthConfig::default()
        };
        group.bench_function(BenchmarkId::new("red_job_50_programs", name), |b| {
            b.iter(|| black_box(synthesis::enumerate(&job, &cfg).unwrap()))
        });
    }
    group.finish();
}

fn probing(c: &mut Criterion) {
    let model = Mlp::new_random(0);
    let mut group = c.benchmark_group("probing");
    for (name, parallelism) in MODES {
        let cfg = ProbeConfig {
            steps: 1000,
            states: LightState::all_combinations(),
            parallelism,
        };
        group.bench_function(BenchmarkId::new("all_states_1000_steps", name), |b| {
            b.iter(|| black_box(probing::probe(&model, &cfg).unwrap()))
        });
    }
    group.finish();
}

fn validation(c: &mut Criterion) {
    let model = Mlp::new_random(0);
    let p: Program = RED_PROGRAM.parse().unwrap();
    let valence = Valence::from_spec("rd:in,dist:in,go:out").unwrap();
    let region = Region::light(LightState::RED);
    let mut group = c.benchmark_group("validation");
    for (name, parallelism) in MODES {
        group.bench_function(BenchmarkId::new("10k_samples", name), |b| {
            b.iter(|| {
                black_box(
                    validate::agreement(&p, &valence, &model, 10_000, 0, &region, parallelism)
                        .unwrap(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, synthesis, probing, validation);
criterion_main!(benches);
