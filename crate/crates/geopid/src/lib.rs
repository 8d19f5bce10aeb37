//! Geometric PID control on SO(3) and SE(3).
pub mod analysis;
pub mod control;
pub mod error_function;
pub mod lie;
pub mod scenarios;
pub mod sim;
