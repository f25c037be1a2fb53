//! Simulator for N charge qubits coupled to a damped nanomechanical resonator.
//!
//! Evolves the full density matrix under a Markovian master equation and
//! tracks entanglement measures (concurrence, tangle, convex-roof I-tangle,
//! von Neumann entropy) over time.

pub mod analytic;
pub mod entanglement;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod scenarios;
