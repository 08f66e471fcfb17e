//! Strategy prediction and inconsistency analysis over MOBA match telemetry.

pub mod events;
pub mod fixtures;
pub mod inconsistency;
pub mod matchgen;
pub mod predictor;
pub mod profiles;
pub mod store;
pub mod telemetry;
