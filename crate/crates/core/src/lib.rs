//! Stability analysis of polyhedral probabilistic hybrid systems through
//! weighted MDP abstractions and mean-payoff objectives.

pub mod abstraction;
pub mod chain;
pub mod graph;
pub mod harness;
pub mod io;
pub mod lp;
pub mod mdp;
pub mod mean_payoff;
pub mod models;
pub mod pphs;
