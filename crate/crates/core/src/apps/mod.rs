//! Application models: dynamical buffer networks and SIS epidemics on
//! uncertain networks, plus small graph utilities used by fixtures.

mod buffer;
pub mod graphs;
mod sis;

pub use buffer::{build_buffer_network, BufferNetwork, BufferProblem};
pub use sis::{build_sis_problem, sis_investments, NodeInvestment, SisNetwork, SisProblem};
