//! Model-based fault diagnosis toolkit for component-graph systems.
//!
//! A system is a typed directed graph of components with behavioral rules.
//! From a system description this crate computes minimal diagnoses from
//! observations, synthesizes safe switch configurations for active diagnosis,
//! and finds minimal sensor placements. A modular decomposition layer scales
//! placement to larger systems by solving each strongly-connected module
//! independently.

pub mod diagnose;
pub mod engine;
pub mod generate;
pub mod model;
pub mod modular;
pub mod place;
pub mod sdl;

pub use model::{
    ComponentId, ComponentType, Condition, Configuration, Diagnosis, Edge, FaultScenario,
    Observation, RuleSchema, SensorPlacement, System,
};
