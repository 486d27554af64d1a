//! Module decomposition and modular sensor placement.
//!
//! A module is grown from each nontrivial strongly connected component (or,
//! once those are exhausted, from a sink of the remaining acyclic subgraph)
//! by absorbing vertices that have an edge into it. The quotient graph over
//! modules is acyclic, so modules can be solved independently in topological
//! order: each module becomes a small system whose external feeds are
//! replaced by always-healthy synthetic sources, identical modules share one
//! solution, and the per-module schedules are lifted back to global
//! configurations and certified on the full system.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use petgraph::graph::DiGraph;

use crate::engine::{self, EngineError, HealthAssignment};
use crate::model::{
    ComponentId, ComponentType, Configuration, EnvAssumptions, Edge, RuleSchema, SensorPlacement,
    System,
};
use crate::place::{self, PlacementResult};
use crate::sdl::SafetyConstraint;

#[derive(Debug, thiserror::Error)]
pub enum ModularError {
    #[error("module {index} has no certified placement within the sensor/configuration budget")]
    ModuleUnsat { index: usize },
    #[error("no global configuration realizes the boundary feeds of module {index}")]
    Lift { index: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A partition of the component graph into modules with an acyclic quotient.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ModulePartition {
    pub modules: Vec<BTreeSet<ComponentId>>,
    pub boundary_edges: Vec<Edge>,
}

impl ModulePartition {
    pub fn module_of(&self, c: &ComponentId) -> Option<usize> {
        self.modules.iter().position(|m| m.contains(c))
    }

    /// Edges of the quotient graph: (feeding module, fed module).
    pub fn quotient_edges(&self) -> BTreeSet<(usize, usize)> {
        self.boundary_edges
            .iter()
            .filter_map(|e| {
                let a = self.module_of(&e.from)?;
                let b = self.module_of(&e.to)?;
                (a != b).then_some((a, b))
            })
            .collect()
    }

    /// Depth of each module in the quotient DAG; modules with no feeding
    /// module have depth 1.
    pub fn depths(&self) -> Vec<usize> {
        let order = self.topo_order();
        let edges = self.quotient_edges();
        let mut depth = vec![1usize; self.modules.len()];
        for &j in &order {
            for &(a, b) in &edges {
                if b == j {
                    depth[j] = depth[j].max(depth[a] + 1);
                }
            }
        }
        depth
    }

    /// Module indices sorted so that feeding modules come first.
    pub fn topo_order(&self) -> Vec<usize> {
        let edges = self.quotient_edges();
        let n = self.modules.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &edges {
            indeg[b] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(&i) = ready.first() {
            ready.remove(0);
            order.push(i);
            for &(a, b) in &edges {
                if a == i {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.push(b);
                    }
                }
            }
            ready.sort_unstable();
        }
        order
    }

    /// Structural invariants: the modules cover every component exactly
    /// once, no strongly connected component is split, and the quotient
    /// graph is acyclic.
    pub fn validate(&self, system: &System) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen: BTreeSet<&ComponentId> = BTreeSet::new();
        for m in &self.modules {
            for c in m {
                if !seen.insert(c) {
                    problems.push(format!("component {c} is in more than one module"));
                }
            }
        }
        for c in system.components.keys() {
            if !seen.contains(c) {
                problems.push(format!("component {c} is in no module"));
            }
        }
        for scc in component_sccs(system) {
            let homes: BTreeSet<_> = scc.iter().filter_map(|c| self.module_of(c)).collect();
            if homes.len() > 1 {
                problems.push(format!("strongly connected component {scc:?} is split"));
            }
        }
        if self.topo_order().len() != self.modules.len() {
            problems.push("module quotient graph has a cycle".into());
        }
        problems
    }
}

fn component_graph(system: &System) -> BTreeMap<&ComponentId, BTreeSet<&ComponentId>> {
    let mut out: BTreeMap<&ComponentId, BTreeSet<&ComponentId>> = BTreeMap::new();
    for c in system.components.keys() {
        out.entry(c).or_default();
    }
    for e in &system.edges {
        out.entry(&e.from).or_default().insert(&e.to);
    }
    out
}

fn component_sccs(system: &System) -> Vec<BTreeSet<ComponentId>> {
    let comps: Vec<&ComponentId> = system.components.keys().collect();
    let index: BTreeMap<&ComponentId, usize> =
        comps.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = comps.iter().map(|_| graph.add_node(())).collect();
    for e in &system.edges {
        if let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) {
            graph.update_edge(nodes[a], nodes[b], ());
        }
    }
    petgraph::algo::tarjan_scc(&graph)
        .into_iter()
        .map(|scc| scc.into_iter().map(|n| comps[n.index()].clone()).collect())
        .collect()
}

/// Grow modules to a fixpoint: seed one module per nontrivial strongly
/// connected component (ordered by smallest member name); repeatedly absorb,
/// generation-synchronously, every unassigned vertex with an edge into an
/// existing module, always into the lowest-index one; when nothing absorbs,
/// seed a new module at the first sink of the remaining acyclic subgraph.
pub fn find_modules(system: &System) -> ModulePartition {
    let out = component_graph(system);
    let has_self_loop =
        |c: &ComponentId| out.get(c).map(|s| s.contains(c)).unwrap_or(false);

    let mut seeds: Vec<BTreeSet<ComponentId>> = component_sccs(system)
        .into_iter()
        .filter(|scc| scc.len() > 1 || scc.iter().any(|c| has_self_loop(c)))
        .collect();
    seeds.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));

    let mut modules: Vec<BTreeSet<ComponentId>> = seeds;
    let mut home: BTreeMap<&ComponentId, usize> = BTreeMap::new();
    for (j, m) in modules.iter().enumerate() {
        for c in system.components.keys() {
            if m.contains(c) {
                home.insert(c, j);
            }
        }
    }

    while home.len() < system.components.len() {
        // Absorb until stable, one synchronous generation at a time.
        loop {
            let mut wave: Vec<(&ComponentId, usize)> = Vec::new();
            for c in system.components.keys() {
                if home.contains_key(c) {
                    continue;
                }
                let target = out
                    .get(c)
                    .into_iter()
                    .flatten()
                    .filter_map(|n| home.get(n))
                    .min()
                    .copied();
                if let Some(j) = target {
                    wave.push((c, j));
                }
            }
            if wave.is_empty() {
                break;
            }
            for (c, j) in wave {
                home.insert(c, j);
                modules[j].insert(c.clone());
            }
        }
        // Seed the next module at the first remaining sink.
        let sink = system.components.keys().find(|c| {
            !home.contains_key(*c)
                && out
                    .get(*c)
                    .into_iter()
                    .flatten()
                    .all(|n| **n == **c || home.contains_key(n))
        });
        if let Some(c) = sink {
            home.insert(c, modules.len());
            modules.push([c.clone()].into_iter().collect());
        } else if home.len() < system.components.len() {
            break; // unreachable on valid systems; avoid looping forever
        }
    }

    let boundary_edges = system
        .edges
        .iter()
        .filter(|e| home.get(&e.from) != home.get(&e.to))
        .cloned()
        .collect();
    ModulePartition { modules, boundary_edges }
}

/// Directed labeled edges of the subgraph induced by a module:
/// (from, to) -> set of (from_port, to_port, is_switch).
type InducedEdges =
    BTreeMap<(ComponentId, ComponentId), BTreeSet<(Option<String>, Option<String>, bool)>>;

fn induced_edges(system: &System, module: &BTreeSet<ComponentId>) -> InducedEdges {
    let mut out: InducedEdges = BTreeMap::new();
    for e in &system.edges {
        if module.contains(&e.from) && module.contains(&e.to) {
            out.entry((e.from.clone(), e.to.clone())).or_default().insert((
                e.from_port.clone(),
                e.to_port.clone(),
                system.switches.contains(e),
            ));
        }
    }
    out
}

fn vertex_invariant(
    system: &System,
    edges: &InducedEdges,
    c: &ComponentId,
) -> (String, usize, usize) {
    let ty = system.components.get(c).cloned().unwrap_or_default();
    let outd = edges.keys().filter(|(f, _)| f == c).count();
    let ind = edges.keys().filter(|(_, t)| t == c).count();
    (ty, ind, outd)
}

/// A type- and port-preserving isomorphism between the induced subgraphs of
/// two modules, if one exists.
pub fn module_isomorphism(
    system: &System,
    m1: &BTreeSet<ComponentId>,
    m2: &BTreeSet<ComponentId>,
) -> Option<BTreeMap<ComponentId, ComponentId>> {
    if m1.len() != m2.len() {
        return None;
    }
    let e1 = induced_edges(system, m1);
    let e2 = induced_edges(system, m2);
    if e1.len() != e2.len() {
        return None;
    }
    let vs1: Vec<&ComponentId> = m1.iter().collect();
    let inv1: Vec<_> = vs1.iter().map(|c| vertex_invariant(system, &e1, c)).collect();
    let mut map: BTreeMap<ComponentId, ComponentId> = BTreeMap::new();
    let mut used: BTreeSet<&ComponentId> = BTreeSet::new();

    fn consistent(
        e1: &InducedEdges,
        e2: &InducedEdges,
        map: &BTreeMap<ComponentId, ComponentId>,
        v: &ComponentId,
        w: &ComponentId,
    ) -> bool {
        for (u, u2) in map {
            let fwd1 = e1.get(&(v.clone(), u.clone()));
            let fwd2 = e2.get(&(w.clone(), u2.clone()));
            if fwd1 != fwd2 {
                return false;
            }
            let back1 = e1.get(&(u.clone(), v.clone()));
            let back2 = e2.get(&(u2.clone(), w.clone()));
            if back1 != back2 {
                return false;
            }
        }
        true
    }

    fn search<'a>(
        system: &System,
        vs1: &[&ComponentId],
        inv1: &[(String, usize, usize)],
        m2: &'a BTreeSet<ComponentId>,
        e1: &InducedEdges,
        e2: &InducedEdges,
        i: usize,
        map: &mut BTreeMap<ComponentId, ComponentId>,
        used: &mut BTreeSet<&'a ComponentId>,
    ) -> bool {
        if i == vs1.len() {
            return true;
        }
        let v = vs1[i];
        for w in m2 {
            if used.contains(w) {
                continue;
            }
            if vertex_invariant(system, e2, w) != inv1[i] {
                continue;
            }
            if !consistent(e1, e2, map, v, w) {
                continue;
            }
            map.insert(v.clone(), w.clone());
            used.insert(w);
            if search(system, vs1, inv1, m2, e1, e2, i + 1, map, used) {
                return true;
            }
            map.remove(v);
            used.remove(w);
        }
        false
    }

    search(system, &vs1, &inv1, m2, &e1, &e2, 0, &mut map, &mut used).then_some(map)
}

pub fn modules_identical(
    system: &System,
    m1: &BTreeSet<ComponentId>,
    m2: &BTreeSet<ComponentId>,
) -> bool {
    module_isomorphism(system, m1, m2).is_some()
}

/// Extend a module isomorphism across the incoming boundary: map each
/// external feeder of `m1` to the external feeder of the corresponding
/// component/port of `m2`. Fails if the boundary shapes differ.
fn boundary_feed_map(
    system: &System,
    m1: &BTreeSet<ComponentId>,
    m2: &BTreeSet<ComponentId>,
    iso: &BTreeMap<ComponentId, ComponentId>,
) -> Option<BTreeMap<ComponentId, ComponentId>> {
    let feeds = |m: &BTreeSet<ComponentId>| -> Vec<&Edge> {
        system.edges.iter().filter(|e| !m.contains(&e.from) && m.contains(&e.to)).collect()
    };
    let f1 = feeds(m1);
    let f2 = feeds(m2);
    if f1.len() != f2.len() {
        return None;
    }
    let mut map: BTreeMap<ComponentId, ComponentId> = BTreeMap::new();
    for e in &f1 {
        let target = iso.get(&e.to)?;
        let mut candidates: Vec<&&Edge> = f2
            .iter()
            .filter(|e2| {
                &e2.to == target
                    && e2.to_port == e.to_port
                    && system.components.get(&e2.from) == system.components.get(&e.from)
                    && system.switches.contains(*e2) == system.switches.contains(*e)
            })
            .collect();
        candidates.sort_by(|a, b| a.from.cmp(&b.from));
        let image = match map.get(&e.from) {
            Some(im) => candidates.iter().find(|c| &c.from == im).map(|c| c.from.clone())?,
            None => {
                let taken: BTreeSet<&ComponentId> = map.values().collect();
                candidates
                    .iter()
                    .find(|c| !taken.contains(&c.from) || map.get(&e.from) == Some(&c.from))
                    .map(|c| c.from.clone())?
            }
        };
        map.insert(e.from.clone(), image);
    }
    Some(map)
}

/// A module packaged as a standalone system: external feeds become
/// always-healthy, observable synthetic sources that keep their global
/// component names, so sub-results translate back verbatim.
pub struct SubProblem {
    pub system: System,
    pub rules: Vec<RuleSchema>,
    pub env: EnvAssumptions,
    /// The synthetic boundary sources (external component names).
    pub synthetic: BTreeSet<ComponentId>,
    /// Default source values for switch-style modules.
    pub inputs: BTreeMap<ComponentId, String>,
}

pub fn module_subproblem(
    system: &System,
    rules: &[RuleSchema],
    env: &EnvAssumptions,
    partition: &ModulePartition,
    index: usize,
    base_inputs: &BTreeMap<ComponentId, String>,
) -> SubProblem {
    let module = &partition.modules[index];
    let mut sub = System::empty();
    for c in module {
        let ty = system.components[c].clone();
        sub.components.insert(c.clone(), ty.clone());
        if let Some(t) = system.types.get(&ty) {
            sub.types.insert(ty, t.clone());
        }
    }
    for e in &system.edges {
        let inside = module.contains(&e.from) && module.contains(&e.to);
        let feed = !module.contains(&e.from) && module.contains(&e.to);
        if inside || feed {
            let mut edge = e.clone();
            if feed {
                // The feed is replaced by a port-free synthetic source.
                edge.from_port = None;
            }
            sub.edges.push(edge.clone());
            if system.switches.contains(e) {
                sub.switches.insert(edge);
            }
        }
    }
    let mut synthetic = BTreeSet::new();
    for e in &system.edges {
        if !module.contains(&e.from) && module.contains(&e.to) {
            synthetic.insert(e.from.clone());
        }
    }
    for u in &synthetic {
        // Port-free stand-in type carrying the same value alphabet.
        let orig = system.component_type(u).expect("validated system");
        let ty_name = format!("feed_{}", orig.name);
        sub.types.entry(ty_name.clone()).or_insert_with(|| ComponentType {
            name: ty_name.clone(),
            states: orig.states.clone(),
            fault_value: orig.fault_value.clone(),
            port_arity: 0,
        });
        sub.components.insert(u.clone(), ty_name);
        sub.sources.insert(u.clone());
        sub.observables.insert(u.clone());
    }
    for s in &system.sources {
        if module.contains(s) {
            sub.sources.insert(s.clone());
        }
    }
    for o in &system.observables {
        if module.contains(o) {
            sub.observables.insert(o.clone());
        }
    }
    let mut sub_env = EnvAssumptions::default();
    for c in &env.always_healthy {
        if module.contains(c) {
            sub_env.always_healthy.insert(c.clone());
        }
    }
    sub_env.always_healthy.extend(synthetic.iter().cloned());
    for (a, b) in &env.one_healthy {
        if module.contains(a) && module.contains(b) {
            sub_env.one_healthy.push((a.clone(), b.clone()));
        } else if module.contains(a) || module.contains(b) {
            // The partner lives in another module, where its health is
            // vouched for by that module's own schedule. Pair the internal
            // endpoint with itself so the switch-health ordering lets the
            // first configuration expose it, as the global schedule could
            // by co-exposing the external partner.
            let inside = if module.contains(a) { a } else { b };
            sub_env.one_healthy.push((inside.clone(), inside.clone()));
        }
    }
    let mut inputs = BTreeMap::new();
    for s in &sub.sources {
        if let Some(v) = base_inputs.get(s) {
            inputs.insert(s.clone(), v.clone());
        } else {
            // Boundary feeds default to live: their healthy upstream value.
            let ty = sub.component_type(s).expect("just inserted");
            let live = ty
                .states
                .iter()
                .find(|v| **v != ty.fault_value)
                .unwrap_or(&ty.fault_value)
                .clone();
            inputs.insert(s.clone(), live);
        }
    }
    SubProblem { system: sub, rules: rules.to_vec(), env: sub_env, synthetic, inputs }
}

/// Source-style modules treat boundary feed values as extra inputs, but the
/// surrounding system may not be able to produce every combination of them.
/// Enumerate the global input vectors, simulate each all-healthy, and
/// project onto the module's sources: the result is the exact configuration
/// pool the sub-problem may use. Switch-style modules return `None` (their
/// feeds are held live and the pool stays the default switch subsets).
fn realizable_pool(
    system: &System,
    ground_rules: &[engine::GroundRule],
    sub: &SubProblem,
    base_inputs: &BTreeMap<ComponentId, String>,
) -> Result<Option<Vec<Configuration>>, EngineError> {
    if !sub.system.switches.is_empty() || sub.synthetic.is_empty() {
        return Ok(None);
    }
    let healthy = HealthAssignment::all_healthy(system);
    let mut pool: Vec<Configuration> = Vec::new();
    for cand in place::candidate_configurations(system) {
        let val = engine::simulate(system, ground_rules, &healthy, &cand, base_inputs)?;
        let mut inputs = BTreeMap::new();
        for s in &sub.system.sources {
            let value = if sub.synthetic.contains(s) {
                val.component_value(system, s).map(str::to_string)
            } else {
                cand.inputs.get(s).or_else(|| base_inputs.get(s)).cloned()
            };
            if let Some(v) = value {
                inputs.insert(s.clone(), v);
            }
        }
        let config = Configuration { on_switches: BTreeSet::new(), inputs };
        if !pool.contains(&config) {
            pool.push(config);
        }
    }
    Ok(Some(pool))
}

/// The outcome of modular placement: the merged global result plus the
/// per-module schedule segments (in the topological order they were
/// emitted), which incremental diagnosis consumes.
pub struct ModularPlacement {
    pub result: PlacementResult,
    pub segments: Vec<(usize, Vec<Configuration>)>,
}

/// Realize a module's sub-configuration on the full system.
///
/// Switch-style systems: close the sub-configuration's switches (they are
/// global edges) plus a pruned set of external switches that powers every
/// boundary feed. Source-style systems: pick the first global input vector
/// that agrees with the sub-configuration on the module's own sources and
/// reproduces its synthetic feed values under the all-healthy simulation.
fn lift_configuration(
    system: &System,
    ground_rules: &[engine::GroundRule],
    sub: &SubProblem,
    config: &Configuration,
    base_inputs: &BTreeMap<ComponentId, String>,
    index: usize,
) -> Result<Configuration, ModularError> {
    let healthy = HealthAssignment::all_healthy(system);
    // Boundary feed edges lose their source port inside the sub-system; map
    // each sub switch edge back to the global edge it came from.
    let global_switch = |e: &Edge| -> Edge {
        if system.switches.contains(e) {
            return e.clone();
        }
        system
            .switches
            .iter()
            .find(|g| g.from == e.from && g.to == e.to && g.to_port == e.to_port)
            .cloned()
            .unwrap_or_else(|| e.clone())
    };
    let on_switches: BTreeSet<Edge> = config.on_switches.iter().map(&global_switch).collect();
    if !sub.system.switches.is_empty() {
        // Switch-style module: keep its own switch settings, power the
        // boundary feeds with a pruned set of external switches.
        let is_sub_switch = |e: &&Edge| {
            sub.system.switches.contains(e)
                || sub.system.switches.iter().any(|s| global_switch(s) == **e)
        };
        let external: Vec<Edge> =
            system.switches.iter().filter(|e| !is_sub_switch(e)).cloned().collect();
        let feeds_ok = |extra: &BTreeSet<Edge>| -> Result<bool, EngineError> {
            let mut on = on_switches.clone();
            on.extend(extra.iter().cloned());
            let global = Configuration { on_switches: on, inputs: config.inputs.clone() };
            let val = engine::simulate(system, ground_rules, &healthy, &global, base_inputs)?;
            Ok(sub.synthetic.iter().all(|u| {
                val.component_value(system, u).map(|v| v.to_string()).as_deref()
                    == sub.inputs.get(u).map(|s| s.as_str())
            }))
        };
        let mut extra: BTreeSet<Edge> = external.iter().cloned().collect();
        if !feeds_ok(&extra)? {
            return Err(ModularError::Lift { index });
        }
        for e in &external {
            let mut trial = extra.clone();
            trial.remove(e);
            if feeds_ok(&trial)? {
                extra = trial;
            }
        }
        let mut on = on_switches;
        on.extend(extra);
        Ok(Configuration { on_switches: on, inputs: config.inputs.clone() })
    } else {
        // Input-style module: find a global configuration that reproduces
        // the sub-configuration's source and feed values.
        for cand in place::candidate_configurations(system) {
            let own_sources_match = sub
                .system
                .sources
                .iter()
                .filter(|s| system.sources.contains(*s))
                .all(|s| cand.inputs.get(s) == config.inputs.get(s));
            if !own_sources_match {
                continue;
            }
            let val = engine::simulate(system, ground_rules, &healthy, &cand, base_inputs)?;
            let feeds_match = sub.synthetic.iter().all(|u| {
                val.component_value(system, u).map(|v| v.to_string())
                    == config.inputs.get(u).cloned()
            });
            if feeds_match {
                return Ok(cand);
            }
        }
        Err(ModularError::Lift { index })
    }
}

/// Solve sensor placement module by module (reusing solutions across
/// identical modules), lift every per-module schedule to global
/// configurations, and certify the union placement on the full system.
#[allow(clippy::too_many_arguments)]
pub fn modular_place_sensors(
    system: &System,
    rules: &[RuleSchema],
    env: &EnvAssumptions,
    constraints: &[SafetyConstraint],
    partition: &ModulePartition,
    m_max: usize,
    k_prime: usize,
    base_inputs: &BTreeMap<ComponentId, String>,
) -> Result<ModularPlacement, ModularError> {
    let ground_rules = engine::ground(system, rules)?;
    let order = partition.topo_order();
    let mut solved: Vec<(usize, PlacementResult)> = Vec::new();
    let mut sensors: BTreeSet<ComponentId> = BTreeSet::new();
    let mut segments: Vec<(usize, Vec<Configuration>)> = Vec::new();

    for &j in &order {
        let sub = module_subproblem(system, rules, env, partition, j, base_inputs);
        let sub_rules = engine::ground(&sub.system, &sub.rules)?;

        // Transport an earlier module's solution along an isomorphism.
        let mut result: Option<PlacementResult> = None;
        for (prev, prev_result) in &solved {
            let Some(iso) =
                module_isomorphism(system, &partition.modules[*prev], &partition.modules[j])
            else {
                continue;
            };
            let Some(feeds) =
                boundary_feed_map(system, &partition.modules[*prev], &partition.modules[j], &iso)
            else {
                continue;
            };
            let rename = |c: &ComponentId| -> ComponentId {
                iso.get(c).or_else(|| feeds.get(c)).cloned().unwrap_or_else(|| c.clone())
            };
            let mapped_sensors = SensorPlacement {
                sensors: prev_result.sensors.sensors.iter().map(&rename).collect(),
            };
            let mapped_configs: Vec<Configuration> = prev_result
                .configurations
                .iter()
                .map(|c| Configuration {
                    on_switches: c
                        .on_switches
                        .iter()
                        .map(|e| Edge {
                            from: rename(&e.from),
                            from_port: e.from_port.clone(),
                            to: rename(&e.to),
                            to_port: e.to_port.clone(),
                        })
                        .collect(),
                    inputs: c.inputs.iter().map(|(k, v)| (rename(k), v.clone())).collect(),
                })
                .collect();
            if place::certify_schedule(
                &sub.system,
                &sub_rules,
                &sub.env,
                &mapped_sensors,
                &mapped_configs,
                &sub.inputs,
            )? {
                result = Some(PlacementResult {
                    sensors: mapped_sensors,
                    configurations: mapped_configs,
                    certified: true,
                });
                break;
            }
        }

        let result = match result {
            Some(r) => r,
            None => {
                let allowed: BTreeSet<ComponentId> = partition.modules[j]
                    .iter()
                    .filter(|c| !sub.system.observables.contains(c))
                    .cloned()
                    .collect();
                let pool = realizable_pool(system, &ground_rules, &sub, base_inputs)?;
                // Constraints naming components outside this module do not
                // constrain the sub-problem; drop the absent names.
                let local_constraints: Vec<SafetyConstraint> = constraints
                    .iter()
                    .filter_map(|c| match c {
                        SafetyConstraint::AlwaysPowered { components } => {
                            let present: BTreeSet<ComponentId> = components
                                .iter()
                                .filter(|c| sub.system.components.contains_key(*c))
                                .cloned()
                                .collect();
                            (!present.is_empty())
                                .then_some(SafetyConstraint::AlwaysPowered { components: present })
                        }
                        other => Some(other.clone()),
                    })
                    .collect();
                place::place_sensors_active(
                    &sub.system,
                    &sub_rules,
                    &sub.env,
                    &local_constraints,
                    m_max,
                    k_prime,
                    &sub.inputs,
                    Some(&allowed),
                    pool.as_deref(),
                )?
                .ok_or(ModularError::ModuleUnsat { index: j })?
            }
        };

        sensors.extend(result.sensors.sensors.iter().cloned());
        let mut lifted = Vec::with_capacity(result.configurations.len());
        for c in &result.configurations {
            lifted.push(lift_configuration(system, &ground_rules, &sub, c, base_inputs, j)?);
        }
        segments.push((j, lifted));
        solved.push((j, result));
    }

    let placement = SensorPlacement { sensors };
    let configurations: Vec<Configuration> =
        segments.iter().flat_map(|(_, cfgs)| cfgs.iter().cloned()).collect();
    let certified = place::certify_schedule(
        system,
        &ground_rules,
        env,
        &placement,
        &configurations,
        base_inputs,
    )?;
    Ok(ModularPlacement {
        result: PlacementResult { sensors: placement, configurations, certified },
        segments,
    })
}
