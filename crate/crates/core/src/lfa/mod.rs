//! Local Fourier analysis: symbols, closed-form smoothing optima and two-grid factors.

pub mod analytic;
pub mod symbols;
pub mod twogrid;
