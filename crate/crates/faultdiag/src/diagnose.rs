//! Minimal diagnosis from one observation, and active diagnosis across a
//! schedule of configurations.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{self, EngineError, GroundRule, HealthAssignment};
use crate::model::{
    ComponentId, Configuration, Diagnosis, EnvAssumptions, FaultScenario, Observation,
    SensorPlacement, System,
};

#[derive(Debug, thiserror::Error)]
pub enum DiagnoseError {
    #[error("no consistent diagnosis for configuration {index} within the size cap")]
    InconsistentConfig { index: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// All minimal diagnoses, together with their common cardinality.
///
/// An unsatisfiable query yields no diagnoses and cardinality `size_cap + 1`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DiagnosisResult {
    pub cardinality: usize,
    pub diagnoses: Vec<Diagnosis>,
}

impl DiagnosisResult {
    pub fn is_unsat(&self) -> bool {
        self.diagnoses.is_empty()
    }

    /// Union of the components appearing in any minimal diagnosis.
    pub fn support(&self) -> BTreeSet<ComponentId> {
        self.diagnoses.iter().flat_map(|d| d.delta.iter().cloned()).collect()
    }
}

/// Components that may appear in a diagnosis: everything not assumed healthy
/// by the environment.
pub fn fault_candidates(system: &System, env: &EnvAssumptions) -> Vec<ComponentId> {
    system
        .components
        .keys()
        .filter(|c| !env.always_healthy.contains(c))
        .cloned()
        .collect()
}

pub(crate) fn for_each_subset<E>(
    items: &[ComponentId],
    size: usize,
    f: &mut impl FnMut(&BTreeSet<ComponentId>) -> Result<(), E>,
) -> Result<(), E> {
    fn rec<E>(
        items: &[ComponentId],
        size: usize,
        start: usize,
        current: &mut BTreeSet<ComponentId>,
        f: &mut impl FnMut(&BTreeSet<ComponentId>) -> Result<(), E>,
    ) -> Result<(), E> {
        if current.len() == size {
            return f(current);
        }
        let needed = size - current.len();
        for i in start..items.len() {
            if items.len() - i < needed {
                break;
            }
            current.insert(items[i].clone());
            rec(items, size, i + 1, current, f)?;
            current.remove(&items[i]);
        }
        Ok(())
    }
    rec(items, size, 0, &mut BTreeSet::new(), f)
}

/// All fault sets of exactly the given size that are consistent with the
/// observation, in lexicographic order. This is diagnosis with minimality
/// disabled; `basic_diagnose` is the minimal-cardinality wrapper.
pub fn consistent_sets_of_size(
    system: &System,
    ground_rules: &[GroundRule],
    env: &EnvAssumptions,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    obs: &Observation,
    size: usize,
) -> Result<Vec<Diagnosis>, EngineError> {
    let candidates = fault_candidates(system, env);
    let mut found = Vec::new();
    for_each_subset(&candidates, size, &mut |faulty| {
        let health = HealthAssignment::from_faulty(system, faulty);
        if engine::consistent(system, ground_rules, &health, config, inputs, obs)? {
            found.push(Diagnosis { delta: faulty.clone() });
        }
        Ok::<(), EngineError>(())
    })?;
    Ok(found)
}

/// Iterative-deepening minimal diagnosis: test fault sets of size 0, 1, ...
/// up to `size_cap` and return every consistent set at the first size where
/// one exists.
pub fn basic_diagnose(
    system: &System,
    ground_rules: &[GroundRule],
    env: &EnvAssumptions,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    obs: &Observation,
    size_cap: usize,
) -> Result<DiagnosisResult, EngineError> {
    for k in 0..=size_cap {
        let found =
            consistent_sets_of_size(system, ground_rules, env, config, inputs, obs, k)?;
        if !found.is_empty() {
            return Ok(DiagnosisResult { cardinality: k, diagnoses: found });
        }
    }
    Ok(DiagnosisResult { cardinality: size_cap + 1, diagnoses: Vec::new() })
}

/// The single-fault explanations of one observation: every component whose
/// lone failure is consistent with it. A fault invisible under this
/// configuration stays a candidate; only contradicted components drop out.
pub fn single_fault_candidates(
    system: &System,
    ground_rules: &[GroundRule],
    env: &EnvAssumptions,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    obs: &Observation,
) -> Result<BTreeSet<ComponentId>, EngineError> {
    Ok(consistent_sets_of_size(system, ground_rules, env, config, inputs, obs, 1)?
        .into_iter()
        .flat_map(|d| d.delta)
        .collect())
}

/// Active diagnosis over a configuration schedule under the single-fault
/// regime: intersect the per-configuration single-fault explanation sets.
/// With a placement whose observation signatures separate all scenarios the
/// intersection pins down the faulty component exactly; if every
/// observation is consistent with full health the answer is the empty
/// diagnosis.
pub fn active_diagnose(
    system: &System,
    ground_rules: &[GroundRule],
    env: &EnvAssumptions,
    configs: &[Configuration],
    inputs_per_config: &[BTreeMap<ComponentId, String>],
    obs_per_config: &[Observation],
) -> Result<Diagnosis, DiagnoseError> {
    assert_eq!(configs.len(), obs_per_config.len(), "one observation per configuration");
    assert_eq!(configs.len(), inputs_per_config.len(), "one input map per configuration");
    let mut all_healthy_fits = true;
    let mut delta: Option<BTreeSet<ComponentId>> = None;
    for (i, config) in configs.iter().enumerate() {
        let inputs = &inputs_per_config[i];
        let obs = &obs_per_config[i];
        let nofault = HealthAssignment::all_healthy(system);
        all_healthy_fits &=
            engine::consistent(system, ground_rules, &nofault, config, inputs, obs)
                .map_err(DiagnoseError::Engine)?;
        let candidates =
            single_fault_candidates(system, ground_rules, env, config, inputs, obs)
                .map_err(DiagnoseError::Engine)?;
        let next = match delta {
            None => candidates,
            Some(acc) => acc.intersection(&candidates).cloned().collect(),
        };
        if next.is_empty() && !all_healthy_fits {
            return Err(DiagnoseError::InconsistentConfig { index: i });
        }
        delta = Some(next);
    }
    if all_healthy_fits {
        return Ok(Diagnosis::empty());
    }
    let delta = delta.unwrap_or_default();
    if delta.is_empty() {
        return Err(DiagnoseError::InconsistentConfig { index: configs.len() - 1 });
    }
    Ok(Diagnosis { delta })
}

/// The observation a given fault scenario would produce: the simulated
/// valuation restricted to observables plus placed sensors.
pub fn expected_observation(
    system: &System,
    ground_rules: &[GroundRule],
    scenario: &FaultScenario,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    placement: &SensorPlacement,
) -> Result<Observation, EngineError> {
    let health = HealthAssignment::from_faulty(system, &scenario.faulty);
    let valuation = engine::simulate(system, ground_rules, &health, config, inputs)?;
    let readings = system
        .observables
        .iter()
        .chain(placement.sensors.iter())
        .filter_map(|c| {
            valuation.component_value(system, c).map(|v| (c.clone(), v.to_string()))
        })
        .collect();
    Ok(Observation { readings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::{self, fixtures};

    fn half_adder() -> (System, Vec<GroundRule>, EnvAssumptions) {
        let desc = sdl::parse_system(fixtures::HALF_ADDER).unwrap();
        let gr = engine::ground(&desc.system, &desc.rules).unwrap();
        (desc.system, gr, desc.assumptions)
    }

    fn obs(pairs: &[(&str, &str)]) -> Observation {
        Observation {
            readings: pairs.iter().map(|(c, v)| (ComponentId::new(*c), v.to_string())).collect(),
        }
    }

    fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<ComponentId, String> {
        pairs.iter().map(|(c, v)| (ComponentId::new(*c), v.to_string())).collect()
    }

    fn deltas(result: &DiagnosisResult) -> Vec<Vec<&str>> {
        result
            .diagnoses
            .iter()
            .map(|d| d.delta.iter().map(|c| c.as_str()).collect())
            .collect()
    }

    #[test]
    fn dead_carry_gate_is_the_unique_single_fault() {
        let (sys, gr, env) = half_adder();
        let result = basic_diagnose(
            &sys,
            &gr,
            &env,
            &Configuration::default(),
            &inputs(&[("a", "1"), ("b", "1")]),
            &obs(&[("s", "0"), ("c", "0")]),
            5,
        )
        .unwrap();
        assert_eq!(result.cardinality, 1);
        assert_eq!(deltas(&result), [["n5"]]);
    }

    #[test]
    fn healthy_observation_yields_the_empty_diagnosis() {
        let (sys, gr, env) = half_adder();
        let result = basic_diagnose(
            &sys,
            &gr,
            &env,
            &Configuration::default(),
            &inputs(&[("a", "1"), ("b", "1")]),
            &obs(&[("s", "0"), ("c", "1")]),
            5,
        )
        .unwrap();
        assert_eq!(result.cardinality, 0);
        assert_eq!(result.diagnoses, [Diagnosis::empty()]);
    }

    #[test]
    fn double_fault_explanations_all_involve_the_carry_gate() {
        // With faulty outputs pinned low, c = 0 under inputs 1,1 forces the
        // carry gate n5 into every explanation; the pairs that also keep
        // s = 0 are exactly {n1,n5} and {n3,n5}.
        let (sys, gr, env) = half_adder();
        let sets = consistent_sets_of_size(
            &sys,
            &gr,
            &env,
            &Configuration::default(),
            &inputs(&[("a", "1"), ("b", "1")]),
            &obs(&[("s", "0"), ("c", "0")]),
            2,
        )
        .unwrap();
        let names: Vec<Vec<&str>> =
            sets.iter().map(|d| d.delta.iter().map(|c| c.as_str()).collect()).collect();
        assert_eq!(names, [vec!["n1", "n5"], vec!["n3", "n5"]]);
    }

    #[test]
    fn unsatisfiable_observation_reports_the_sentinel() {
        let (sys, gr, env) = half_adder();
        // s = 1 requires a high value, which no fault can create under
        // inputs 1,1 beyond what health already explains; c = 0 and s = 1
        // together need n5 faulty and some high s, impossible with all
        // gates pinned low... except via fewer faults. Cap at 0 to force
        // the sentinel.
        let result = basic_diagnose(
            &sys,
            &gr,
            &env,
            &Configuration::default(),
            &inputs(&[("a", "1"), ("b", "1")]),
            &obs(&[("s", "0"), ("c", "0")]),
            0,
        )
        .unwrap();
        assert!(result.is_unsat());
        assert_eq!(result.cardinality, 1);
    }

    #[test]
    fn sensor_reading_inside_the_circuit_is_simulated() {
        let (sys, gr, _) = half_adder();
        let observation = expected_observation(
            &sys,
            &gr,
            &FaultScenario::single("n5"),
            &Configuration::default(),
            &inputs(&[("a", "1"), ("b", "1")]),
            &SensorPlacement::of(["n1"]),
        )
        .unwrap();
        let keys: Vec<&str> = observation.readings.keys().map(|c| c.as_str()).collect();
        assert_eq!(keys, ["a", "b", "c", "n1", "s"]);
        assert_eq!(observation.readings[&ComponentId::new("n1")], "0");
        assert_eq!(observation.readings[&ComponentId::new("c")], "0");
    }

    #[test]
    fn two_inputs_isolate_the_carry_gate() {
        // A second input vector rules out the sum-side explanations.
        let (sys, gr, env) = half_adder();
        let configs = [Configuration::default(), Configuration::default()];
        let ins = [inputs(&[("a", "1"), ("b", "1")]), inputs(&[("a", "1"), ("b", "0")])];
        let scenario = FaultScenario::single("n5");
        let observations: Vec<Observation> = ins
            .iter()
            .zip(&configs)
            .map(|(i, cfg)| {
                expected_observation(&sys, &gr, &scenario, cfg, i, &SensorPlacement::default())
                    .unwrap()
            })
            .collect();
        let delta =
            active_diagnose(&sys, &gr, &env, &configs, &ins, &observations).unwrap();
        assert_eq!(delta.delta, [ComponentId::new("n5")].into());
    }

    #[test]
    fn healthy_run_diagnoses_nothing() {
        let (sys, gr, env) = half_adder();
        let ins = [inputs(&[("a", "0"), ("b", "1")])];
        let observation = expected_observation(
            &sys,
            &gr,
            &FaultScenario::none(),
            &Configuration::default(),
            &ins[0],
            &SensorPlacement::default(),
        )
        .unwrap();
        let delta = active_diagnose(
            &sys,
            &gr,
            &env,
            &[Configuration::default()],
            &ins,
            &[observation],
        )
        .unwrap();
        assert!(delta.delta.is_empty());
    }
}
