//! Printed reference values used by the self-test and the acceptance suite.

use crate::params::{Restriction, Scheme};

/// Two-grid LFA factors `ρ_h(ν)`, `ν = 1..4`, at `h = 1/81` for each transfer
/// pair `(P25, R)` and scheme. "Q-BSR" rows use the exact Braess-Sarazin
/// smoother.
/// One printed table: the restriction and a `ρ_h(1..4)` row per scheme.
pub type LfaTable = (Restriction, [(Scheme, [f64; 4]); 3]);

pub const LFA_TWO_GRID: [LfaTable; 4] = [
    (
        Restriction::R1,
        [
            (Scheme::Qdr, [0.546, 0.222, 0.116, 0.087]),
            (Scheme::QbsrExact, [0.515, 0.245, 0.181, 0.098]),
            (Scheme::Quzawa, [0.642, 0.377, 0.226, 0.165]),
        ],
    ),
    (
        Restriction::R9,
        [
            (Scheme::Qdr, [0.419, 0.205, 0.157, 0.126]),
            (Scheme::QbsrExact, [0.361, 0.166, 0.097, 0.073]),
            (Scheme::Quzawa, [0.601, 0.361, 0.217, 0.154]),
        ],
    ),
    (
        Restriction::R9b,
        [
            (Scheme::Qdr, [0.431, 0.192, 0.144, 0.117]),
            (Scheme::QbsrExact, [0.361, 0.149, 0.091, 0.052]),
            (Scheme::Quzawa, [0.601, 0.361, 0.217, 0.150]),
        ],
    ),
    (
        Restriction::P25T,
        [
            (Scheme::Qdr, [0.387, 0.257, 0.197, 0.160]),
            (Scheme::QbsrExact, [0.361, 0.161, 0.123, 0.099]),
            (Scheme::Quzawa, [0.601, 0.361, 0.240, 0.197]),
        ],
    ),
];

/// Measured Dirichlet factors at `n = 81` with `(P25, P25ᵀ/9)` and the
/// experiment parameters.
#[derive(Debug, Clone, Copy)]
pub struct MeasuredRow {
    pub scheme: Scheme,
    pub two_grid: [f64; 4],
    pub v_cycle: [f64; 4],
    /// Allowed deviation per cell.
    pub tolerance: f64,
}

pub const MEASURED: [MeasuredRow; 3] = [
    MeasuredRow {
        scheme: Scheme::Qdr,
        two_grid: [0.525, 0.507, 0.443, 0.394],
        v_cycle: [0.797, 0.715, 0.658, 0.615],
        tolerance: 0.05,
    },
    MeasuredRow {
        scheme: Scheme::Quzawa,
        two_grid: [0.745, 0.602, 0.480, 0.382],
        v_cycle: [0.759, 0.632, 0.542, 0.442],
        tolerance: 0.05,
    },
    MeasuredRow {
        scheme: Scheme::Qibsr,
        two_grid: [0.349, 0.163, 0.115, 0.090],
        v_cycle: [0.350, 0.183, 0.129, 0.097],
        tolerance: 0.03,
    },
];

pub fn lfa_row(restriction: Restriction, scheme: Scheme) -> Option<[f64; 4]> {
    LFA_TWO_GRID
        .iter()
        .find(|(r, _)| *r == restriction)
        .and_then(|(_, rows)| rows.iter().find(|(s, _)| *s == scheme))
        .map(|&(_, row)| row)
}

pub fn measured_row(scheme: Scheme) -> Option<MeasuredRow> {
    MEASURED.iter().copied().find(|m| m.scheme == scheme)
}
