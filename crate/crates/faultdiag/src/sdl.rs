//! The system description language: a line-oriented text format for systems,
//! behavior rules, safety constraints and environment assumptions, plus
//! builders for the two built-in domain libraries (logic gates from truth
//! tables, power-network flow rules).
//!
//! A description has sections introduced by uppercase headers:
//!
//! ```text
//! TYPES
//! nand states 0 1 fault 0 ports 2
//! probe states 0 1 fault 0
//! COMPONENTS
//! n1 nand
//! LINKS
//! a -> n1.in1
//! n1.out -> n2.in2
//! SWITCHES
//! C1 -> B1
//! SOURCES
//! a b
//! OBSERVABLES
//! a b s c
//! RULES
//! table nand 1 1 -> 0
//! flow probe plain 0 1
//! SAFETY
//! single_feed bus_ac
//! ASSUME
//! healthy a b s c
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::{
    ComponentId, ComponentType, Condition, Edge, EnvAssumptions, RuleSchema, Selector, System,
};

#[derive(Debug, thiserror::Error)]
pub enum SdlError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid system: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("truth table for {0}: {1}")]
    Table(String, String),
    #[error("cannot emit rule for type {0}: neither a table row nor a flow rule")]
    Emit(String),
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, SdlError> {
    Err(SdlError::Parse { line, msg: msg.into() })
}

/// An exhaustive input/output table for one gate type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    pub type_name: String,
    pub rows: Vec<(Vec<String>, String)>,
}

/// Restrictions on admissible configurations.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SafetyConstraint {
    /// No component of this type may receive power over two live feeds at
    /// once.
    SingleFeed { target_type: String },
    /// These components must be powered whenever every component is healthy.
    AlwaysPowered { components: BTreeSet<ComponentId> },
    /// A switch gating a component of one of these types may only be closed
    /// once that component's health is established: in the first
    /// configuration of a schedule such switches are restricted to
    /// components assumed healthy by the environment.
    SwitchHealth { adjacent_types: BTreeSet<String> },
}

/// Everything one `.sdl` file describes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDescription {
    pub system: System,
    pub rules: Vec<RuleSchema>,
    pub safety: Vec<SafetyConstraint>,
    pub assumptions: EnvAssumptions,
}

/// One behavior schema per table row: the row's inputs guard the gate's
/// ports, the row's output is the consequent.
pub fn gates_from_truth_table(tt: &TruthTable) -> Result<Vec<RuleSchema>, SdlError> {
    let fail = |msg: String| SdlError::Table(tt.type_name.clone(), msg);
    let arity = match tt.rows.first() {
        Some((ins, _)) => ins.len(),
        None => return Err(fail("empty table".into())),
    };
    let mut alphabet: BTreeSet<&String> = BTreeSet::new();
    for (ins, out) in &tt.rows {
        if ins.len() != arity {
            return Err(fail("rows have differing arity".into()));
        }
        alphabet.extend(ins);
        alphabet.insert(out);
    }
    let expect = alphabet.len().pow(arity as u32);
    let distinct: BTreeSet<&Vec<String>> = tt.rows.iter().map(|(ins, _)| ins).collect();
    if distinct.len() != tt.rows.len() {
        return Err(fail("duplicate input row".into()));
    }
    if tt.rows.len() != expect {
        return Err(fail(format!("{} rows, expected {expect}", tt.rows.len())));
    }
    Ok(tt
        .rows
        .iter()
        .map(|(ins, out)| RuleSchema {
            subject_type: tt.type_name.clone(),
            conj_guards: ins
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    (Selector::Port(ComponentType::port_name(i)), Condition::states([v.clone()]))
                })
                .collect(),
            disj_guards: BTreeMap::new(),
            consequent_states: [out.clone()].into(),
        })
        .collect())
}

fn flow_rule(subject: &str, switched: bool, states: &[String]) -> RuleSchema {
    let sel = if switched { Selector::UpstreamSwitched } else { Selector::UpstreamPlain };
    let states: BTreeSet<String> = states.iter().cloned().collect();
    RuleSchema {
        subject_type: subject.to_string(),
        conj_guards: BTreeMap::new(),
        disj_guards: BTreeMap::from([(
            sel,
            Condition { types: BTreeSet::new(), states: states.clone() },
        )]),
        consequent_states: states,
    }
}

/// The two power-propagation schemas: a component is powered when some live
/// upstream feed reaches it, either through a closed switch or over a plain
/// link. Health guards are added during grounding.
pub fn power_rules() -> Vec<RuleSchema> {
    let on = ["on".to_string()];
    vec![
        flow_rule(RuleSchema::ANY_TYPE, true, &on),
        flow_rule(RuleSchema::ANY_TYPE, false, &on),
    ]
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_endpoint(tok: &str, line: usize) -> Result<(ComponentId, Option<String>), SdlError> {
    let (name, port) = match tok.split_once('.') {
        Some((n, p)) => (n, Some(p)),
        None => (tok, None),
    };
    if !is_ident(name) || port.map_or(false, |p| !is_ident(p)) {
        return err(line, format!("bad endpoint {tok}"));
    }
    Ok((ComponentId::new(name), port.map(str::to_string)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Types,
    Components,
    Links,
    Switches,
    Sources,
    Observables,
    Rules,
    Safety,
    Assume,
}

/// Parse a description. The returned system has passed `validate`.
pub fn parse_system(text: &str) -> Result<SystemDescription, SdlError> {
    let mut system = System::empty();
    let mut safety = Vec::new();
    let mut assumptions = EnvAssumptions::default();
    // Table rows are collected per type and checked for exhaustiveness once
    // the whole file is read; flow rules are kept in file order after them.
    let mut table_order: Vec<String> = Vec::new();
    let mut tables: BTreeMap<String, TruthTable> = BTreeMap::new();
    let mut flows: Vec<RuleSchema> = Vec::new();

    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        section = match content {
            "TYPES" => Section::Types,
            "COMPONENTS" => Section::Components,
            "LINKS" => Section::Links,
            "SWITCHES" => Section::Switches,
            "SOURCES" => Section::Sources,
            "OBSERVABLES" => Section::Observables,
            "RULES" => Section::Rules,
            "SAFETY" => Section::Safety,
            "ASSUME" => Section::Assume,
            _ => {
                parse_line(
                    section, content, line, &mut system, &mut safety, &mut assumptions,
                    &mut table_order, &mut tables, &mut flows,
                )?;
                continue;
            }
        };
    }

    if system.components.is_empty() {
        return err(0, "no components");
    }
    let violations = system.validate();
    if !violations.is_empty() {
        return Err(SdlError::Invalid(violations));
    }

    let mut rules = Vec::new();
    for name in table_order {
        let tt = &tables[&name];
        let arity = system.types.get(&name).map(|t| t.port_arity).unwrap_or(0);
        if tt.rows.iter().any(|(ins, _)| ins.len() != arity) {
            return Err(SdlError::Table(name, format!("rows must have {arity} inputs")));
        }
        rules.extend(gates_from_truth_table(tt)?);
    }
    rules.extend(flows);
    Ok(SystemDescription { system, rules, safety, assumptions })
}

#[allow(clippy::too_many_arguments)]
fn parse_line(
    section: Section,
    content: &str,
    line: usize,
    system: &mut System,
    safety: &mut Vec<SafetyConstraint>,
    assumptions: &mut EnvAssumptions,
    table_order: &mut Vec<String>,
    tables: &mut BTreeMap<String, TruthTable>,
    flows: &mut Vec<RuleSchema>,
) -> Result<(), SdlError> {
    let toks: Vec<&str> = content.split_whitespace().collect();
    match section {
        Section::None => err(line, format!("expected a section header, got {content}")),
        Section::Types => {
            // <name> states <s...> fault <v> [ports <n>]
            let name = toks[0];
            if !is_ident(name) || toks.get(1) != Some(&"states") {
                return err(line, "expected: <name> states <s...> fault <v> [ports <n>]");
            }
            let fault_pos = toks.iter().position(|t| *t == "fault");
            let Some(fp) = fault_pos else { return err(line, "missing fault value") };
            let states: Vec<String> = toks[2..fp].iter().map(|s| s.to_string()).collect();
            let Some(fault_value) = toks.get(fp + 1).map(|s| s.to_string()) else {
                return err(line, "missing fault value");
            };
            let port_arity = match toks.get(fp + 2) {
                Some(&"ports") => match toks.get(fp + 3).and_then(|n| n.parse().ok()) {
                    Some(n) => n,
                    None => return err(line, "bad port count"),
                },
                Some(t) => return err(line, format!("unexpected {t}")),
                None => 0,
            };
            if states.is_empty() {
                return err(line, "type needs at least one state");
            }
            system.types.insert(
                name.to_string(),
                ComponentType { name: name.to_string(), states, fault_value, port_arity },
            );
            Ok(())
        }
        Section::Components => match toks.as_slice() {
            [name, ty] if is_ident(name) => {
                if !system.types.contains_key(*ty) {
                    return err(line, format!("unknown type {ty}"));
                }
                if system.components.insert(ComponentId::new(*name), ty.to_string()).is_some() {
                    return err(line, format!("duplicate component {name}"));
                }
                Ok(())
            }
            _ => err(line, "expected: <component> <type>"),
        },
        Section::Links | Section::Switches => match toks.as_slice() {
            [from, "->", to] => {
                let (from, from_port) = parse_endpoint(from, line)?;
                let (to, to_port) = parse_endpoint(to, line)?;
                let edge = Edge { from, from_port, to, to_port };
                if section == Section::Links {
                    system.edges.push(edge);
                } else {
                    system.switches.insert(edge);
                }
                Ok(())
            }
            _ => err(line, "expected: <from> -> <to>"),
        },
        Section::Sources | Section::Observables => {
            for t in toks {
                if !is_ident(t) {
                    return err(line, format!("bad identifier {t}"));
                }
                let set = if section == Section::Sources {
                    &mut system.sources
                } else {
                    &mut system.observables
                };
                set.insert(ComponentId::new(t));
            }
            Ok(())
        }
        Section::Rules => match toks.as_slice() {
            ["table", ty, rest @ ..] => {
                let arrow = rest.iter().position(|t| *t == "->");
                let (ins, out) = match arrow {
                    Some(p) if p + 2 == rest.len() => (&rest[..p], rest[p + 1]),
                    _ => return err(line, "expected: table <type> <in...> -> <out>"),
                };
                if !tables.contains_key(*ty) {
                    table_order.push(ty.to_string());
                    tables.insert(
                        ty.to_string(),
                        TruthTable { type_name: ty.to_string(), rows: Vec::new() },
                    );
                }
                tables
                    .get_mut(*ty)
                    .unwrap()
                    .rows
                    .push((ins.iter().map(|s| s.to_string()).collect(), out.to_string()));
                Ok(())
            }
            ["flow", subject, kind, states @ ..] if !states.is_empty() => {
                let switched = match *kind {
                    "switched" => true,
                    "plain" => false,
                    _ => return err(line, "expected switched or plain"),
                };
                let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
                flows.push(flow_rule(subject, switched, &states));
                Ok(())
            }
            _ => err(line, "expected a table or flow rule"),
        },
        Section::Safety => match toks.as_slice() {
            ["single_feed", ty] => {
                safety.push(SafetyConstraint::SingleFeed { target_type: ty.to_string() });
                Ok(())
            }
            ["always_powered", comps @ ..] if !comps.is_empty() => {
                safety.push(SafetyConstraint::AlwaysPowered {
                    components: comps.iter().map(|c| ComponentId::new(*c)).collect(),
                });
                Ok(())
            }
            ["switch_health", types @ ..] if !types.is_empty() => {
                safety.push(SafetyConstraint::SwitchHealth {
                    adjacent_types: types.iter().map(|t| t.to_string()).collect(),
                });
                Ok(())
            }
            _ => err(line, "unknown safety constraint"),
        },
        Section::Assume => match toks.as_slice() {
            ["healthy", comps @ ..] if !comps.is_empty() => {
                assumptions.always_healthy.extend(comps.iter().map(|c| ComponentId::new(*c)));
                Ok(())
            }
            ["one_of", a, b] => {
                assumptions.one_healthy.push((ComponentId::new(*a), ComponentId::new(*b)));
                Ok(())
            }
            _ => err(line, "unknown assumption"),
        },
    }
}

fn endpoint(c: &ComponentId, port: &Option<String>) -> String {
    match port {
        Some(p) => format!("{c}.{p}"),
        None => c.to_string(),
    }
}

/// Render a description back to text; `parse_system` returns an equal value.
pub fn emit_system(desc: &SystemDescription) -> Result<String, SdlError> {
    let mut out = String::new();
    let sys = &desc.system;
    out.push_str("TYPES\n");
    for ty in sys.types.values() {
        write!(out, "{} states {} fault {}", ty.name, ty.states.join(" "), ty.fault_value).unwrap();
        if ty.port_arity > 0 {
            write!(out, " ports {}", ty.port_arity).unwrap();
        }
        out.push('\n');
    }
    out.push_str("COMPONENTS\n");
    for (c, ty) in &sys.components {
        writeln!(out, "{c} {ty}").unwrap();
    }
    out.push_str("LINKS\n");
    for e in &sys.edges {
        writeln!(out, "{} -> {}", endpoint(&e.from, &e.from_port), endpoint(&e.to, &e.to_port))
            .unwrap();
    }
    if !sys.switches.is_empty() {
        out.push_str("SWITCHES\n");
        for e in &sys.switches {
            writeln!(out, "{} -> {}", endpoint(&e.from, &e.from_port), endpoint(&e.to, &e.to_port))
                .unwrap();
        }
    }
    if !sys.sources.is_empty() {
        out.push_str("SOURCES\n");
        let names: Vec<String> = sys.sources.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", names.join(" ")).unwrap();
    }
    if !sys.observables.is_empty() {
        out.push_str("OBSERVABLES\n");
        let names: Vec<String> = sys.observables.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", names.join(" ")).unwrap();
    }
    if !desc.rules.is_empty() {
        out.push_str("RULES\n");
        for rule in &desc.rules {
            out.push_str(&emit_rule(rule)?);
        }
    }
    if !desc.safety.is_empty() {
        out.push_str("SAFETY\n");
        for s in &desc.safety {
            match s {
                SafetyConstraint::SingleFeed { target_type } => {
                    writeln!(out, "single_feed {target_type}").unwrap()
                }
                SafetyConstraint::AlwaysPowered { components } => {
                    let names: Vec<String> = components.iter().map(|c| c.to_string()).collect();
                    writeln!(out, "always_powered {}", names.join(" ")).unwrap()
                }
                SafetyConstraint::SwitchHealth { adjacent_types } => {
                    let names: Vec<&str> = adjacent_types.iter().map(String::as_str).collect();
                    writeln!(out, "switch_health {}", names.join(" ")).unwrap()
                }
            }
        }
    }
    let assume = &desc.assumptions;
    if !assume.always_healthy.is_empty() || !assume.one_healthy.is_empty() {
        out.push_str("ASSUME\n");
        if !assume.always_healthy.is_empty() {
            let names: Vec<String> = assume.always_healthy.iter().map(|c| c.to_string()).collect();
            writeln!(out, "healthy {}", names.join(" ")).unwrap();
        }
        for (a, b) in &assume.one_healthy {
            writeln!(out, "one_of {a} {b}").unwrap();
        }
    }
    Ok(out)
}

fn emit_rule(rule: &RuleSchema) -> Result<String, SdlError> {
    // Flow form: one upstream disjunctive guard.
    if let Some((sel, cond)) = rule.disj_guards.iter().next() {
        let kind = match sel {
            Selector::UpstreamSwitched => "switched",
            Selector::UpstreamPlain => "plain",
            Selector::Port(_) => return Err(SdlError::Emit(rule.subject_type.clone())),
        };
        if rule.disj_guards.len() != 1
            || !rule.conj_guards.is_empty()
            || cond.states != rule.consequent_states
        {
            return Err(SdlError::Emit(rule.subject_type.clone()));
        }
        let states: Vec<&str> = cond.states.iter().map(String::as_str).collect();
        return Ok(format!("flow {} {kind} {}\n", rule.subject_type, states.join(" ")));
    }
    // Table form: singleton port guards in1..inN and a single consequent.
    let mut ins = Vec::new();
    for i in 0..rule.conj_guards.len() {
        let port = ComponentType::port_name(i);
        match rule.conj_guards.get(&Selector::Port(port)) {
            Some(cond) if cond.states.len() == 1 => {
                ins.push(cond.states.iter().next().unwrap().as_str())
            }
            _ => return Err(SdlError::Emit(rule.subject_type.clone())),
        }
    }
    if rule.consequent_states.len() != 1 {
        return Err(SdlError::Emit(rule.subject_type.clone()));
    }
    Ok(format!(
        "table {} {} -> {}\n",
        rule.subject_type,
        ins.join(" "),
        rule.consequent_states.iter().next().unwrap()
    ))
}

/// Built-in example systems.
pub mod fixtures {
    /// Five-gate half adder over two probed inputs and outputs.
    pub const HALF_ADDER: &str = include_str!("../fixtures/half_adder.sdl");
    /// Nine-gate full adder.
    pub const FULL_ADDER: &str = include_str!("../fixtures/full_adder.sdl");
    /// Sum-only 3-bit ripple-carry adder: one half-adder stage and two
    /// identical full-adder stages chained through their carry gates.
    pub const ADDER3: &str = include_str!("../fixtures/adder3.sdl");
    /// 22-component electrical power system with switched feeds.
    pub const EPS_SMALL: &str = include_str!("../fixtures/eps_small.sdl");
    /// Four-island electrical power system used by the modular solver.
    pub const EPS_LARGE: &str = include_str!("../fixtures/eps_large.sdl");
}
