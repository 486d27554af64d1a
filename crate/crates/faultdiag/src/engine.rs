//! Grounding, forward simulation and the consistency check.
//!
//! Rule schemas are instantiated over a concrete system into propositional
//! ground rules. Simulation computes the unique least-fixpoint valuation for
//! a health assignment, switch configuration and source inputs: faulty
//! components are pinned to their fault value, healthy components derive
//! values by saturating ground rules, and anything never derived settles to
//! its type's closed-world default (which coincides with the fault value).
//!
//! Evaluation is stratified over strongly connected components of the atom
//! dependency graph; cycles may only propagate values monotonically, and a
//! final verification pass rejects rule sets with no consistent valuation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::graph::{DiGraph, NodeIndex};

use crate::model::{
    Atom, ComponentId, Condition, Configuration, Edge, Observation, RuleSchema, Selector, System,
};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("rule for type {0} references port {1}, which that type does not have")]
    UnknownPort(String, String),
    #[error("unsupported rule for type {0}: {1}")]
    UnsupportedSchema(String, String),
    #[error("no input value given for source {0}")]
    MissingInput(ComponentId),
    #[error("value {1} is not a state of {0}")]
    BadInputValue(ComponentId, String),
    #[error("configuration turns on {0}, which is not a switch")]
    NotASwitch(Edge),
    #[error("contradictory derivation at {atom}: {first} vs {second}\n  via {first_rule}\n  via {second_rule}")]
    Contradiction {
        atom: Atom,
        first: String,
        second: String,
        first_rule: String,
        second_rule: String,
    },
}

/// A single premise of a ground rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    /// The atom's value lies in the given set.
    ValueIn(Atom, BTreeSet<String>),
    Healthy(ComponentId),
    SwitchOn(Edge),
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::ValueIn(a, s) => {
                write!(f, "value({a}) in {{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(v)?;
                }
                f.write_str("}")
            }
            Guard::Healthy(c) => write!(f, "healthy({c})"),
            Guard::SwitchOn(e) => write!(f, "on({e})"),
        }
    }
}

/// A propositional rule over atoms of one concrete system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundRule {
    /// If every guard holds, `head` takes `value`.
    Derive {
        guards: Vec<Guard>,
        head: Atom,
        value: String,
    },
    /// Value propagation along one edge: if the source's value is in
    /// `allowed` (any value when `None`) and the side conditions hold, the
    /// target takes the source's value.
    Copy {
        from: Atom,
        to: Atom,
        allowed: Option<BTreeSet<String>>,
        switch: Option<Edge>,
        healthy: Option<ComponentId>,
    },
}

impl GroundRule {
    pub fn head(&self) -> &Atom {
        match self {
            GroundRule::Derive { head, .. } => head,
            GroundRule::Copy { to, .. } => to,
        }
    }

    fn premise_atoms(&self) -> Vec<&Atom> {
        match self {
            GroundRule::Derive { guards, .. } => guards
                .iter()
                .filter_map(|g| match g {
                    Guard::ValueIn(a, _) => Some(a),
                    _ => None,
                })
                .collect(),
            GroundRule::Copy { from, .. } => vec![from],
        }
    }
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundRule::Derive { guards, head, value } => {
                write!(f, "value({head}) := {value} <-")?;
                for (i, g) in guards.iter().enumerate() {
                    write!(f, "{} {g}", if i > 0 { " &" } else { "" })?;
                }
                Ok(())
            }
            GroundRule::Copy { from, to, allowed, switch, healthy } => {
                write!(f, "value({to}) <- value({from})")?;
                if let Some(a) = allowed {
                    write!(f, " & value({from}) in {{")?;
                    for (i, v) in a.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        f.write_str(v)?;
                    }
                    f.write_str("}")?;
                }
                if let Some(e) = switch {
                    write!(f, " & on({e})")?;
                }
                if let Some(c) = healthy {
                    write!(f, " & healthy({c})")?;
                }
                Ok(())
            }
        }
    }
}

/// Debug dump of a ground program, one rule per line.
pub fn dump_rules(rules: &[GroundRule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Which components are healthy; everything else is faulty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HealthAssignment {
    pub healthy: BTreeSet<ComponentId>,
}

impl HealthAssignment {
    pub fn all_healthy(system: &System) -> Self {
        HealthAssignment { healthy: system.components.keys().cloned().collect() }
    }

    pub fn from_faulty(system: &System, faulty: &BTreeSet<ComponentId>) -> Self {
        HealthAssignment {
            healthy: system.components.keys().filter(|c| !faulty.contains(c)).cloned().collect(),
        }
    }

    pub fn is_healthy(&self, c: &ComponentId) -> bool {
        self.healthy.contains(c)
    }

    pub fn faulty(&self, system: &System) -> BTreeSet<ComponentId> {
        system.components.keys().filter(|c| !self.is_healthy(c)).cloned().collect()
    }
}

/// A total assignment of values to the system's atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    pub values: BTreeMap<Atom, String>,
}

impl Valuation {
    pub fn get(&self, atom: &Atom) -> Option<&str> {
        self.values.get(atom).map(String::as_str)
    }

    /// The value carried by a component (its `out` port for gate-style types).
    pub fn component_value<'a>(&'a self, system: &System, c: &ComponentId) -> Option<&'a str> {
        self.get(&system.value_atom(c))
    }
}

/// Instantiate rule schemas over a concrete system.
///
/// Emits one value-copy rule per port-targeted edge (wiring is implicit), one
/// derive rule per (schema, matching component, disjunct), and one copy rule
/// per (flow schema, matching component, incoming edge of the right kind).
/// Every rule whose head is a component value is guarded on that component's
/// health.
pub fn ground(system: &System, rules: &[RuleSchema]) -> Result<Vec<GroundRule>, EngineError> {
    let mut out = Vec::new();
    for edge in &system.edges {
        if edge.to_port.is_some() {
            out.push(GroundRule::Copy {
                from: edge.source_atom(),
                to: edge.target_atom(),
                allowed: None,
                switch: system.switches.contains(edge).then(|| edge.clone()),
                healthy: None,
            });
        }
    }
    for schema in rules {
        ground_schema(system, schema, &mut out)?;
    }
    Ok(out)
}

fn ground_schema(
    system: &System,
    schema: &RuleSchema,
    out: &mut Vec<GroundRule>,
) -> Result<(), EngineError> {
    let uses_upstream = schema
        .conj_guards
        .keys()
        .chain(schema.disj_guards.keys())
        .any(|s| matches!(s, Selector::UpstreamSwitched | Selector::UpstreamPlain));
    for (comp, ty_name) in &system.components {
        let ty = match system.types.get(ty_name) {
            Some(t) if schema.applies_to(t) => t,
            _ => continue,
        };
        if uses_upstream {
            ground_flow(system, schema, comp, out)?;
            continue;
        }
        let mut base = vec![Guard::Healthy(comp.clone())];
        for (sel, cond) in &schema.conj_guards {
            base.push(port_guard(ty, comp, sel, cond)?);
        }
        let value = single_consequent(schema, ty)?;
        if schema.disj_guards.is_empty() {
            out.push(GroundRule::Derive { guards: base, head: system.value_atom(comp), value });
        } else {
            for (sel, cond) in &schema.disj_guards {
                let mut guards = base.clone();
                guards.push(port_guard(ty, comp, sel, cond)?);
                out.push(GroundRule::Derive {
                    guards,
                    head: system.value_atom(comp),
                    value: value.clone(),
                });
            }
        }
    }
    Ok(())
}

fn port_guard(
    ty: &crate::model::ComponentType,
    comp: &ComponentId,
    sel: &Selector,
    cond: &Condition,
) -> Result<Guard, EngineError> {
    match sel {
        Selector::Port(p) => {
            if !ty.port_names().iter().any(|q| q == p) {
                return Err(EngineError::UnknownPort(ty.name.clone(), p.clone()));
            }
            Ok(Guard::ValueIn(Atom::port(comp.clone(), p.clone()), cond.states.clone()))
        }
        _ => Err(EngineError::UnsupportedSchema(
            ty.name.clone(),
            "upstream selectors cannot be mixed with port guards".into(),
        )),
    }
}

fn single_consequent(
    schema: &RuleSchema,
    ty: &crate::model::ComponentType,
) -> Result<String, EngineError> {
    if schema.consequent_states.len() != 1 {
        return Err(EngineError::UnsupportedSchema(
            ty.name.clone(),
            "grounding requires a single consequent state".into(),
        ));
    }
    Ok(schema.consequent_states.iter().next().unwrap().clone())
}

/// Flow schemas: exactly one upstream selector, whose condition states equal
/// the consequent states; grounds to a value-preserving copy per incoming
/// edge of the matching kind.
fn ground_flow(
    system: &System,
    schema: &RuleSchema,
    comp: &ComponentId,
    out: &mut Vec<GroundRule>,
) -> Result<(), EngineError> {
    let ty = system.component_type(comp).unwrap();
    let guards: Vec<_> = schema.conj_guards.iter().chain(schema.disj_guards.iter()).collect();
    let (sel, cond) = match guards.as_slice() {
        [(sel, cond)] => (*sel, *cond),
        _ => {
            return Err(EngineError::UnsupportedSchema(
                ty.name.clone(),
                "flow rules take exactly one upstream guard".into(),
            ))
        }
    };
    if cond.states != schema.consequent_states {
        return Err(EngineError::UnsupportedSchema(
            ty.name.clone(),
            "flow consequent must equal the upstream condition".into(),
        ));
    }
    let want_switched = match sel {
        Selector::UpstreamSwitched => true,
        Selector::UpstreamPlain => false,
        Selector::Port(_) => unreachable!("checked by caller"),
    };
    for edge in &system.edges {
        if edge.to != *comp || edge.to_port.is_some() {
            continue;
        }
        if system.switches.contains(edge) != want_switched {
            continue;
        }
        if !cond.types.is_empty() {
            let src_ty = system.components.get(&edge.from);
            if !src_ty.map_or(false, |t| cond.types.contains(t)) {
                continue;
            }
        }
        out.push(GroundRule::Copy {
            from: edge.source_atom(),
            to: system.value_atom(comp),
            allowed: Some(cond.states.clone()),
            switch: want_switched.then(|| edge.clone()),
            healthy: Some(comp.clone()),
        });
    }
    Ok(())
}

/// Where a derived value came from, for contradiction reports.
#[derive(Clone)]
enum Provenance {
    Fault,
    Input,
    Rule(usize),
}

impl Provenance {
    fn describe(&self, rules: &[GroundRule]) -> String {
        match self {
            Provenance::Fault => "fault pinning".into(),
            Provenance::Input => "source input".into(),
            Provenance::Rule(i) => rules[*i].to_string(),
        }
    }
}

struct Evaluator<'a> {
    rules: &'a [GroundRule],
    health: &'a HealthAssignment,
    on: &'a BTreeSet<Edge>,
    /// Values fixed or derived so far, with provenance.
    derived: HashMap<Atom, (String, Provenance)>,
    /// Final values of atoms whose stratum is finished.
    settled: BTreeMap<Atom, String>,
}

impl<'a> Evaluator<'a> {
    fn lookup(&self, atom: &Atom) -> Option<&str> {
        self.settled
            .get(atom)
            .map(String::as_str)
            .or_else(|| self.derived.get(atom).map(|(v, _)| v.as_str()))
    }

    fn guard_holds(&self, guard: &Guard) -> bool {
        match guard {
            Guard::ValueIn(a, s) => self.lookup(a).map_or(false, |v| s.contains(v)),
            Guard::Healthy(c) => self.health.is_healthy(c),
            Guard::SwitchOn(e) => self.on.contains(e),
        }
    }

    /// The value a rule currently derives, if its premises hold.
    fn fires(&self, rule: &GroundRule) -> Option<String> {
        match rule {
            GroundRule::Derive { guards, value, .. } => {
                guards.iter().all(|g| self.guard_holds(g)).then(|| value.clone())
            }
            GroundRule::Copy { from, allowed, switch, healthy, .. } => {
                if let Some(e) = switch {
                    if !self.on.contains(e) {
                        return None;
                    }
                }
                if let Some(c) = healthy {
                    if !self.health.is_healthy(c) {
                        return None;
                    }
                }
                let v = self.lookup(from)?;
                match allowed {
                    Some(a) if !a.contains(v) => None,
                    _ => Some(v.to_string()),
                }
            }
        }
    }

    fn derive(&mut self, atom: &Atom, value: String, prov: Provenance) -> Result<bool, EngineError> {
        match self.derived.get(atom) {
            Some((old, old_prov)) => {
                if *old == value {
                    Ok(false)
                } else {
                    Err(EngineError::Contradiction {
                        atom: atom.clone(),
                        first: old.clone(),
                        second: value,
                        first_rule: old_prov.describe(self.rules),
                        second_rule: prov.describe(self.rules),
                    })
                }
            }
            None => {
                self.derived.insert(atom.clone(), (value, prov));
                Ok(true)
            }
        }
    }
}

fn default_value(system: &System, atom: &Atom) -> String {
    system
        .component_type(&atom.component)
        .map(|t| t.fault_value.clone())
        .unwrap_or_else(|| "0".to_string())
}

/// All value-carrying atoms of the system: a bare atom per port-free
/// component; `out` plus each input port for port-based components.
fn atom_universe(system: &System) -> Vec<Atom> {
    let mut atoms = Vec::new();
    for (comp, ty_name) in &system.components {
        match system.types.get(ty_name) {
            Some(t) if t.is_port_based() => {
                atoms.push(Atom::port(comp.clone(), "out"));
                for p in t.port_names() {
                    atoms.push(Atom::port(comp.clone(), p));
                }
            }
            _ => atoms.push(Atom::bare(comp.clone())),
        }
    }
    atoms
}

/// Compute the least-fixpoint valuation under a health assignment,
/// configuration and source inputs.
pub fn simulate(
    system: &System,
    ground_rules: &[GroundRule],
    health: &HealthAssignment,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
) -> Result<Valuation, EngineError> {
    for e in &config.on_switches {
        if !system.switches.contains(e) {
            return Err(EngineError::NotASwitch(e.clone()));
        }
    }
    let mut merged = inputs.clone();
    for (c, v) in &config.inputs {
        merged.insert(c.clone(), v.clone());
    }

    let mut eval = Evaluator {
        rules: ground_rules,
        health,
        on: &config.on_switches,
        derived: HashMap::new(),
        settled: BTreeMap::new(),
    };

    for comp in system.components.keys() {
        if !health.is_healthy(comp) {
            let ty = system.component_type(comp).expect("validated system");
            eval.derive(&system.value_atom(comp), ty.fault_value.clone(), Provenance::Fault)?;
        }
    }
    for src in &system.sources {
        let v = merged.get(src).ok_or_else(|| EngineError::MissingInput(src.clone()))?;
        let ty = system.component_type(src).expect("validated system");
        if !ty.states.contains(v) {
            return Err(EngineError::BadInputValue(src.clone(), v.clone()));
        }
        if health.is_healthy(src) {
            eval.derive(&system.value_atom(src), v.clone(), Provenance::Input)?;
        }
    }

    // Stratify atoms by SCC of the dependency graph (head depends on premises).
    let atoms = atom_universe(system);
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let mut index: HashMap<&Atom, NodeIndex> = HashMap::new();
    for a in &atoms {
        index.insert(a, graph.add_node(()));
    }
    let mut rules_by_head: HashMap<NodeIndex, Vec<usize>> = HashMap::new();
    for (i, rule) in ground_rules.iter().enumerate() {
        let head = index[rule.head()];
        rules_by_head.entry(head).or_default().push(i);
        for premise in rule.premise_atoms() {
            graph.add_edge(head, index[premise], ());
        }
    }
    let atom_of: HashMap<NodeIndex, &Atom> = index.iter().map(|(a, n)| (*n, *a)).collect();

    // tarjan_scc yields each SCC before any SCC that depends on it.
    for scc in petgraph::algo::tarjan_scc(&graph) {
        let members: Vec<&Atom> = scc.iter().map(|n| atom_of[n]).collect();
        let rule_ids: Vec<usize> =
            scc.iter().flat_map(|n| rules_by_head.get(n).into_iter().flatten().copied()).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for &i in &rule_ids {
                if let Some(v) = eval.fires(&ground_rules[i]) {
                    let head = ground_rules[i].head().clone();
                    changed |= eval.derive(&head, v, Provenance::Rule(i))?;
                }
            }
        }
        for atom in members {
            let v = eval
                .derived
                .get(atom)
                .map(|(v, _)| v.clone())
                .unwrap_or_else(|| default_value(system, atom));
            eval.settled.insert(atom.clone(), v);
        }
    }

    // Verification pass: with every atom settled, each rule whose premises
    // hold must agree with the final valuation. Failures indicate a cyclic
    // rule set with no consistent least model.
    eval.derived.clear();
    for (i, rule) in ground_rules.iter().enumerate() {
        if let Some(v) = eval.fires(rule) {
            let have = &eval.settled[rule.head()];
            if *have != v {
                return Err(EngineError::Contradiction {
                    atom: rule.head().clone(),
                    first: have.clone(),
                    second: v,
                    first_rule: "settled valuation".into(),
                    second_rule: Provenance::Rule(i).describe(ground_rules),
                });
            }
        }
    }

    Ok(Valuation { values: eval.settled })
}

/// Does the simulated valuation agree with the observation at every read
/// component?
pub fn consistent(
    system: &System,
    ground_rules: &[GroundRule],
    health: &HealthAssignment,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    obs: &Observation,
) -> Result<bool, EngineError> {
    let valuation = simulate(system, ground_rules, health, config, inputs)?;
    Ok(obs
        .readings
        .iter()
        .all(|(c, v)| valuation.component_value(system, c) == Some(v.as_str())))
}
