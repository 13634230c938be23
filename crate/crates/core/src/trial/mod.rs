//! Trial-level decision rule: isotonic adjustment, admissible-set selection,
//! Bayesian interim monitoring, and whole-trial simulation.

mod monitor;
mod pava;
mod sim;

pub use monitor::{
    admissible_set, interim_decision, posterior_exceedance, ArmRecord, ArmStatus, Direction, InterimDecision,
    InterimPolicy, TrialData, TrialOutcome,
};
pub use pava::pava_adjust;
pub use sim::{
    simulate_oc, simulate_oc_with_interim, simulate_trial, simulate_trial_cells, Estimate, InterimOcRow, RegimeOc,
    TrialDesign,
};
