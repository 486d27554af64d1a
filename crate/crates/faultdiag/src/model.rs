//! Core domain types: systems, values, scenarios, configurations,
//! observations and diagnoses. No algorithms live here.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of a component, unique within its [`System`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(pub String);

impl ComponentId {
    pub fn new(name: impl Into<String>) -> Self {
        ComponentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> Self {
        ComponentId(s.to_string())
    }
}

/// A component type: its value domain, designated fault value and number of
/// named input ports (0 for port-free domains such as power networks).
///
/// The fault value doubles as the closed-world default: a value that is never
/// derived settles to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentType {
    pub name: String,
    /// Ordered, finite, non-empty set of value labels.
    pub states: Vec<String>,
    /// Value a faulty component of this type is pinned to.
    pub fault_value: String,
    /// Number of named input ports (`in1`, `in2`, ...).
    pub port_arity: usize,
}

impl ComponentType {
    pub fn is_port_based(&self) -> bool {
        self.port_arity > 0
    }

    /// Canonical name of the i-th input port (0-based index).
    pub fn port_name(i: usize) -> String {
        format!("in{}", i + 1)
    }

    pub fn port_names(&self) -> Vec<String> {
        (0..self.port_arity).map(Self::port_name).collect()
    }
}

/// A value-carrying location: either a component itself (port-free domains)
/// or a named port of a component.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub component: ComponentId,
    pub port: Option<String>,
}

impl Atom {
    pub fn bare(component: ComponentId) -> Self {
        Atom { component, port: None }
    }

    pub fn port(component: ComponentId, port: impl Into<String>) -> Self {
        Atom { component, port: Some(port.into()) }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.port {
            Some(p) => write!(f, "{}({})", p, self.component),
            None => write!(f, "{}", self.component),
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A directed connection between two components, optionally through named
/// ports. Gate-style edges run from an `out` port into a named input port;
/// port-free edges connect components directly.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: ComponentId,
    pub from_port: Option<String>,
    pub to: ComponentId,
    pub to_port: Option<String>,
}

impl Edge {
    pub fn plain(from: impl Into<ComponentId>, to: impl Into<ComponentId>) -> Self {
        Edge { from: from.into(), from_port: None, to: to.into(), to_port: None }
    }

    pub fn ported(
        from: impl Into<ComponentId>,
        from_port: Option<&str>,
        to: impl Into<ComponentId>,
        to_port: &str,
    ) -> Self {
        Edge {
            from: from.into(),
            from_port: from_port.map(str::to_string),
            to: to.into(),
            to_port: Some(to_port.to_string()),
        }
    }

    pub fn source_atom(&self) -> Atom {
        Atom { component: self.from.clone(), port: self.from_port.clone() }
    }

    pub fn target_atom(&self) -> Atom {
        Atom { component: self.to.clone(), port: self.to_port.clone() }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source_atom(), self.target_atom())
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A typed directed component graph with switchable edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct System {
    /// Type library, keyed by type name.
    pub types: BTreeMap<String, ComponentType>,
    /// Component -> type name.
    pub components: BTreeMap<ComponentId, String>,
    pub edges: Vec<Edge>,
    /// Subset of `edges` that carry a switch.
    pub switches: BTreeSet<Edge>,
    /// Externally driven inputs.
    pub sources: BTreeSet<ComponentId>,
    /// Components with permanent sensors (system inputs/outputs).
    pub observables: BTreeSet<ComponentId>,
}

impl System {
    pub fn empty() -> Self {
        System {
            types: BTreeMap::new(),
            components: BTreeMap::new(),
            edges: Vec::new(),
            switches: BTreeSet::new(),
            sources: BTreeSet::new(),
            observables: BTreeSet::new(),
        }
    }

    pub fn component_type(&self, id: &ComponentId) -> Option<&ComponentType> {
        self.components.get(id).and_then(|t| self.types.get(t))
    }

    /// The atom carrying a component's value: the `out` port for port-based
    /// types, the component itself otherwise.
    pub fn value_atom(&self, id: &ComponentId) -> Atom {
        match self.component_type(id) {
            Some(t) if t.is_port_based() => Atom::port(id.clone(), "out"),
            _ => Atom::bare(id.clone()),
        }
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &ComponentId> {
        self.components.keys()
    }

    /// Check all structural invariants. Returns an empty list iff the system
    /// is well-formed; each violation names the offending element.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        for (id, ty) in &self.components {
            if id.as_str().is_empty() {
                violations.push("component with empty name".to_string());
            }
            if !self.types.contains_key(ty) {
                violations.push(format!("component {id} has unknown type {ty}"));
            }
        }
        for (name, ty) in &self.types {
            if ty.states.is_empty() {
                violations.push(format!("type {name} has no states"));
            } else if !ty.states.contains(&ty.fault_value) {
                violations.push(format!(
                    "type {name} fault value {} not among its states",
                    ty.fault_value
                ));
            }
        }
        let mut seen_ports: BTreeMap<Atom, usize> = BTreeMap::new();
        for edge in &self.edges {
            for end in [&edge.from, &edge.to] {
                if !self.components.contains_key(end) {
                    violations.push(format!("edge {edge} references unknown component {end}"));
                }
            }
            if let Some(port) = &edge.to_port {
                if let Some(ty) = self.component_type(&edge.to) {
                    if !ty.port_names().iter().any(|p| p == port) {
                        violations.push(format!(
                            "edge {edge} targets unknown port {port} of {}",
                            edge.to
                        ));
                    }
                }
                *seen_ports.entry(edge.target_atom()).or_insert(0) += 1;
            }
        }
        for (atom, count) in seen_ports {
            if count > 1 {
                violations.push(format!("port {atom} has {count} incoming edges"));
            }
        }
        for sw in &self.switches {
            if !self.edges.contains(sw) {
                violations.push(format!("switch {sw} is not an edge of the system"));
            }
        }
        for (kind, set) in [("source", &self.sources), ("observable", &self.observables)] {
            for id in set {
                if !self.components.contains_key(id) {
                    violations.push(format!("{kind} {id} is not a component"));
                }
            }
        }
        violations
    }
}

/// A constraint on a neighbor's type and current state. An empty side is
/// unconstrained; at least one side must be non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub types: BTreeSet<String>,
    pub states: BTreeSet<String>,
}

impl Condition {
    pub fn states(states: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Condition {
            types: BTreeSet::new(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }
}

/// How a guard selects the neighbor it constrains.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Selector {
    /// A named input port of the subject (gate-style rules).
    Port(String),
    /// Any incoming switch edge of the subject (one ground rule per edge,
    /// each conditioned on the switch being on).
    UpstreamSwitched,
    /// Any incoming switchless edge of the subject.
    UpstreamPlain,
}

/// A guarded implication over neighbor conditions: if all conjunctive guards
/// hold (and at least one disjunctive guard, when any are given), the subject
/// takes a state in `consequent_states`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSchema {
    /// Component type this rule applies to; `"*"` matches every port-free type.
    pub subject_type: String,
    pub conj_guards: BTreeMap<Selector, Condition>,
    pub disj_guards: BTreeMap<Selector, Condition>,
    pub consequent_states: BTreeSet<String>,
}

impl RuleSchema {
    pub const ANY_TYPE: &'static str = "*";

    pub fn applies_to(&self, ty: &ComponentType) -> bool {
        if self.subject_type == Self::ANY_TYPE {
            !ty.is_port_based()
        } else {
            self.subject_type == ty.name
        }
    }
}

/// A fault hypothesis: the set of components conjectured faulty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaultScenario {
    pub faulty: BTreeSet<ComponentId>,
}

impl FaultScenario {
    pub fn single(id: impl Into<ComponentId>) -> Self {
        FaultScenario { faulty: BTreeSet::from([id.into()]) }
    }

    pub fn none() -> Self {
        FaultScenario { faulty: BTreeSet::new() }
    }
}

/// A switch setting, plus source-value overrides for switchless domains where
/// input vectors play the role of configurations.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub on_switches: BTreeSet<Edge>,
    pub inputs: BTreeMap<ComponentId, String>,
}

impl Configuration {
    pub fn switches(on: impl IntoIterator<Item = Edge>) -> Self {
        Configuration { on_switches: on.into_iter().collect(), inputs: BTreeMap::new() }
    }

    pub fn inputs(inputs: impl IntoIterator<Item = (ComponentId, String)>) -> Self {
        Configuration { on_switches: BTreeSet::new(), inputs: inputs.into_iter().collect() }
    }
}

/// Sensor readings: component -> observed value label.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub readings: BTreeMap<ComponentId, String>,
}

/// A set of components conjectured faulty that restores consistency.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnosis {
    pub delta: BTreeSet<ComponentId>,
}

impl Diagnosis {
    pub fn empty() -> Self {
        Diagnosis { delta: BTreeSet::new() }
    }
}

/// A chosen set of sensor locations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorPlacement {
    pub sensors: BTreeSet<ComponentId>,
}

impl SensorPlacement {
    pub fn of(ids: impl IntoIterator<Item = impl Into<ComponentId>>) -> Self {
        SensorPlacement { sensors: ids.into_iter().map(Into::into).collect() }
    }
}

/// Environment assumptions restricting the admissible fault scenarios.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvAssumptions {
    /// Components that can never be faulty.
    pub always_healthy: BTreeSet<ComponentId>,
    /// Pairs of which at least one is always healthy. Prunes nothing under
    /// single faults but is recorded for multi-fault extensions.
    pub one_healthy: Vec<(ComponentId, ComponentId)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_system() -> System {
        let mut sys = System::empty();
        sys.types.insert(
            "wire".into(),
            ComponentType {
                name: "wire".into(),
                states: vec!["off".into(), "on".into()],
                fault_value: "off".into(),
                port_arity: 0,
            },
        );
        sys.components.insert("x".into(), "wire".into());
        sys.components.insert("y".into(), "wire".into());
        sys.edges.push(Edge::plain(ComponentId::from("x"), ComponentId::from("y")));
        sys
    }

    #[test]
    fn valid_system_has_no_violations() {
        assert!(tiny_system().validate().is_empty());
    }

    #[test]
    fn unknown_edge_endpoint_is_reported() {
        let mut sys = tiny_system();
        sys.edges.push(Edge::plain(ComponentId::from("x"), ComponentId::from("n9")));
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("n9"), "{v:?}");
    }

    #[test]
    fn switch_not_in_edges_is_reported() {
        let mut sys = tiny_system();
        sys.switches.insert(Edge::plain(ComponentId::from("y"), ComponentId::from("x")));
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("switch"), "{v:?}");
    }

    #[test]
    fn fault_value_must_be_a_state() {
        let mut sys = tiny_system();
        sys.types.get_mut("wire").unwrap().fault_value = "broken".into();
        assert_eq!(sys.validate().len(), 1);
    }

    #[test]
    fn duplicate_port_feed_is_reported() {
        let mut sys = tiny_system();
        sys.types.insert(
            "buf".into(),
            ComponentType {
                name: "buf".into(),
                states: vec!["0".into(), "1".into()],
                fault_value: "0".into(),
                port_arity: 1,
            },
        );
        sys.components.insert("g".into(), "buf".into());
        sys.edges.push(Edge::ported(ComponentId::from("x"), None, ComponentId::from("g"), "in1"));
        sys.edges.push(Edge::ported(ComponentId::from("y"), None, ComponentId::from("g"), "in1"));
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("in1(g)"), "{v:?}");
    }
}
