#![allow(dead_code)]

use alliance_core::generator::{generate_instance, GeneratorSpec};
use alliance_core::{MultiAttributeGraph, Realization, SamplingConfig, ScheduleRecord};

pub fn rec(o: &str, d: &str, c: &str, w: f64) -> ScheduleRecord {
    ScheduleRecord::new(o, d, c, w)
}

/// Table 4 sampling: 50 walks, L = 2, 50 carrier draws per segment.
pub fn toy_sampling(seed: u64) -> SamplingConfig {
    SamplingConfig::new(50, 2, 50, seed)
}

pub fn toy_graph(seed: u64) -> MultiAttributeGraph {
    generate_instance(&GeneratorSpec::toy(seed)).unwrap().graph
}

/// Toy graph with ASM drawn from [1, 10]. Flatter shares keep the exact
/// optimum away from the grand alliance.
pub fn split_toy_graph(seed: u64) -> MultiAttributeGraph {
    let mut spec = GeneratorSpec::toy(seed);
    (spec.asm_min, spec.asm_max) = (1.0, 10.0);
    generate_instance(&spec).unwrap().graph
}

pub fn toy(seed: u64) -> (MultiAttributeGraph, Realization) {
    let g = toy_graph(seed);
    let r = Realization::draw(&g, &toy_sampling(1000 + seed)).unwrap();
    (g, r)
}

/// Small random graph from raw draws: `n` airports on a ring (so every
/// airport has an outgoing segment) plus extra weighted records.
pub fn graph_from_draws(n: usize, n_carriers: usize, extra: &[(usize, usize, usize, f64)]) -> MultiAttributeGraph {
    let name = |i: usize| format!("A{i}");
    let car = |i: usize| format!("c{i}");
    let mut records: Vec<ScheduleRecord> = (0..n)
        .map(|i| ScheduleRecord::new(&name(i), &name((i + 1) % n), &car(i % n_carriers), 1.0 + i as f64))
        .collect();
    for &(o, d, c, w) in extra {
        let (o, d) = (o % n, d % n);
        if o != d {
            records.push(ScheduleRecord::new(&name(o), &name(d), &car(c % n_carriers), w));
        }
    }
    MultiAttributeGraph::build(&records).unwrap()
}
