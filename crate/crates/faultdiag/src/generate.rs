//! Random electrical-power-system generator and the scaling benchmark
//! harness.
//!
//! The generator emits a layered source→switch→bus DAG with cross-links:
//! generators feed switch units over plain links, switches feed the entry
//! buses over switched links, buses cascade through plain backbone and
//! random cross links, and rectifier units bridge earlier buses to later
//! ones. Every component type carries four states; power propagation only
//! distinguishes dead from live, the remaining states model ramp levels.
//!
//! The benchmark times the placement search (precomputation + greedy
//! sensor selection + schedule synthesis) on such systems. The
//! precomputation simulates every candidate configuration under every
//! single-fault scenario, so its cost grows superlinearly with component
//! count while being almost independent of the sensor and configuration
//! budgets.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{self, EngineError};
use crate::model::{
    ComponentId, ComponentType, Configuration, Edge, EnvAssumptions, System,
};
use crate::place;
use crate::sdl;

const STATES: [&str; 4] = ["off", "low", "high", "on"];

fn four_state_type(name: &str) -> ComponentType {
    ComponentType {
        name: name.to_string(),
        states: STATES.iter().map(|s| s.to_string()).collect(),
        fault_value: "off".to_string(),
        port_arity: 0,
    }
}

/// Build a pseudo-random power system with `n` components (n ≥ 4). The
/// same `(n, seed)` pair always yields the same system.
pub fn generate_random_eps(n: usize, seed: u64) -> System {
    assert!(n >= 4, "need at least one component of each type");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let generators = (n / 6).max(1);
    let switches = (n / 4).max(1);
    let rectifiers = (n / 8).max(1);
    let buses = n - generators - switches - rectifiers;

    let mut system = System::empty();
    for ty in ["generator", "switch", "bus", "rectifier"] {
        system.types.insert(ty.to_string(), four_state_type(ty));
    }
    let name = |prefix: &str, i: usize| ComponentId::from(format!("{prefix}{}", i + 1).as_str());
    for i in 0..generators {
        system.components.insert(name("G", i), "generator".into());
        system.sources.insert(name("G", i));
    }
    for i in 0..switches {
        system.components.insert(name("S", i), "switch".into());
    }
    for i in 0..buses {
        system.components.insert(name("B", i), "bus".into());
    }
    for i in 0..rectifiers {
        system.components.insert(name("R", i), "rectifier".into());
    }

    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut switched: BTreeSet<Edge> = BTreeSet::new();
    let entry = switches.min((buses / 3).max(1));
    for i in 0..switches {
        edges.insert(Edge::plain(name("G", rng.gen_range(0..generators)), name("S", i)));
        let e = Edge::plain(name("S", i), name("B", i % entry));
        switched.insert(e.clone());
        edges.insert(e);
    }
    for j in entry..buses {
        edges.insert(Edge::plain(name("B", j - entry), name("B", j)));
        if rng.gen_bool(0.4) {
            edges.insert(Edge::plain(name("B", rng.gen_range(0..j)), name("B", j)));
        }
    }
    for i in 0..rectifiers {
        let p = rng.gen_range(0..buses);
        edges.insert(Edge::plain(name("B", p), name("R", i)));
        if p + 1 < buses {
            // Bridge strictly forward so the bus layers stay acyclic.
            edges.insert(Edge::plain(name("R", i), name("B", rng.gen_range(p + 1..buses))));
        }
    }
    system.edges = edges.into_iter().collect();
    system.switches = switched;
    debug_assert!(system.validate().is_empty(), "generator emitted an invalid system");
    system
}

/// Parameters of one benchmark cell, mirroring the experiment axes:
/// component count, sensor budget, configuration budget.
#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub n_components: usize,
    pub m_sensors: usize,
    pub k_configs: usize,
    pub instances: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub n_components: usize,
    pub m_sensors: usize,
    pub k_configs: usize,
    pub mean_runtime: f64,
    pub stddev: f64,
    pub certified: usize,
}

/// A fixed-size candidate pool: the all-on configuration plus random
/// half-density switch subsets. Keeping the pool size constant makes the
/// benchmark measure how the search scales with the system, not with the
/// pool.
pub fn bench_pool(system: &System, seed: u64) -> Vec<Configuration> {
    const POOL: usize = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<Edge> = system.switches.iter().cloned().collect();
    let mut pool = vec![Configuration {
        on_switches: all.iter().cloned().collect(),
        inputs: BTreeMap::new(),
    }];
    while pool.len() < POOL {
        let on: BTreeSet<Edge> = all.iter().filter(|_| rng.gen::<bool>()).cloned().collect();
        let config = Configuration { on_switches: on, inputs: BTreeMap::new() };
        if !pool.contains(&config) {
            pool.push(config);
        }
    }
    pool
}

/// Run one benchmark cell: generate `instances` systems, time the
/// placement search on each, and aggregate mean and standard deviation of
/// the runtimes in seconds.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchRow, EngineError> {
    let rules = sdl::power_rules();
    let env = EnvAssumptions::default();
    let mut times = Vec::with_capacity(spec.instances);
    let mut certified = 0;
    for i in 0..spec.instances {
        let instance_seed = spec.seed.wrapping_add(i as u64);
        let system = generate_random_eps(spec.n_components, instance_seed);
        let ground_rules = engine::ground(&system, &rules)?;
        let inputs: BTreeMap<ComponentId, String> =
            system.sources.iter().map(|s| (s.clone(), "on".to_string())).collect();
        let pool = bench_pool(&system, instance_seed);
        let start = Instant::now();
        let result = place::greedy_place_sensors(
            &system,
            &ground_rules,
            &env,
            &[],
            spec.m_sensors,
            spec.k_configs,
            &inputs,
            Some(&pool),
        )?;
        times.push(start.elapsed().as_secs_f64());
        if result.map(|r| r.certified).unwrap_or(false) {
            certified += 1;
        }
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / times.len() as f64;
    Ok(BenchRow {
        n_components: spec.n_components,
        m_sensors: spec.m_sensors,
        k_configs: spec.k_configs,
        mean_runtime: mean,
        stddev: var.sqrt(),
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_systems_are_valid_and_deterministic() {
        let a = generate_random_eps(22, 1);
        assert!(a.validate().is_empty());
        assert_eq!(a.components.len(), 22);
        let b = generate_random_eps(22, 1);
        assert_eq!(a, b);
        for ty in a.types.values() {
            assert_eq!(ty.states.len(), 4);
        }
        assert!(!a.sources.is_empty());
        assert!(!a.switches.is_empty());
    }

    #[test]
    fn different_seeds_give_different_systems() {
        let mut seen = BTreeSet::new();
        for seed in 0..25 {
            let sys = generate_random_eps(40, seed);
            assert!(sys.validate().is_empty());
            seen.insert(format!("{:?}", sys.edges));
        }
        assert_eq!(seen.len(), 25);
    }

    #[test]
    fn the_harness_certifies_a_generated_system() {
        let system = generate_random_eps(40, 7);
        let rules = sdl::power_rules();
        let ground_rules = engine::ground(&system, &rules).unwrap();
        let inputs: BTreeMap<ComponentId, String> =
            system.sources.iter().map(|s| (s.clone(), "on".to_string())).collect();
        let pool = bench_pool(&system, 7);
        let result = place::greedy_place_sensors(
            &system,
            &ground_rules,
            &EnvAssumptions::default(),
            &[],
            40,
            32,
            &inputs,
            Some(&pool),
        )
        .unwrap()
        .expect("a fully sensed system is always separable under the all-on pool");
        assert!(result.certified);
    }

    #[test]
    fn bench_rows_report_all_instances() {
        let row = run_bench(&BenchSpec {
            n_components: 24,
            m_sensors: 24,
            k_configs: 32,
            instances: 3,
            seed: 11,
        })
        .unwrap();
        assert_eq!(row.certified, 3);
        assert!(row.mean_runtime > 0.0);
    }
}
