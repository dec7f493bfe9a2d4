//! Health/economy trade-offs of epidemic control policies.
//!
//! * [`model`]: extended SEIR compartments with quarantine and a GDP index.
//! * [`policy`]: Bézier influence curves for social distancing and lockdown.
//! * [`simulator`]: RK4 integration and the two objectives.
//! * [`moea`]: NSGA-II, NSGA-III, MOEA/D and MOPSO over the trigger times.
//! * [`indicators`]: hypervolume, IGD, spread and rank-based tests.

pub mod error;
pub mod indicators;
pub mod model;
pub mod moea;
pub mod policy;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{CompartmentState, EconomyParams, ModelParams, PandemicParams, ParamId};
pub use policy::{InfluenceCurve, Policy, PolicySpec};
pub use simulator::{evaluate_triggers, integrate, objectives, Bounds, ObjectiveVector, Scenario, Trajectory, TriggerProblem};
pub use moea::{Algorithm, Front, RunConfig, RunResult};
pub use indicators::{hypervolume_2d, igd, normalized_hypervolume, spread, IndicatorReport, ReferencePoint};
