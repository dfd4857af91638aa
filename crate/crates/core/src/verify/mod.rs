//! Independent checks of equilibrium candidates.

mod bellman;
mod brute_force;
mod deviation;
mod mean_action;
mod scan;

pub use bellman::{bellman_consistency, bellman_optimum, BellmanReport};
pub use brute_force::{brute_force_oracle, BruteForceConfig, BruteForceResult, Candidate};
pub use deviation::{deviation_test, DeviationResult, WorstDeviation};
pub use mean_action::{direct_choice_check, mean_action_policy, mean_action_value_check, MeanActionCheck};
pub use scan::{standard_equilibrium_scan, standard_equilibrium_scan_with_cap, DEFAULT_SCAN_CAP};
