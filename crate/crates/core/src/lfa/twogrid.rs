//! Two-grid LFA in the space of 3h-harmonics.
//!
//! Every object is laid out harmonic-major, field-minor: the 27 rows of an
//! expanded symbol are `(harmonic (i, j), field ∈ {u, v, p})` with harmonics in
//! lexicographic `(i, j)` order for `i, j ∈ {−1, 0, 1}`.
//!
//! Symbols use physical coordinates, `e^{iθ·x/h}`, so staggered unknowns carry
//! half-integer positions. A coarse unknown of field `f` sits at fine position
//! `3·(I, J) + s_f` with `s_u = (0, 3/2)`, `s_v = (3/2, 0)`, `s_p = (3/2, 3/2)`,
//! and harmonic `(i, j)` reaches it with the phase `e^{i(2π/3)(i, j)·s_f}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lfa::symbols::{self, Frequency, Sym3};
use crate::linalg::{self, CMat, C64};
use crate::params::{RelaxParams, TransferPair};

pub const HARMONICS: usize = 9;
pub const DIM: usize = 3 * HARMONICS;

/// Offsets of the coarse unknowns within the fine lattice, in units of `h`.
pub const FIELD_SHIFTS: [(f64, f64); 3] = [(0.0, 1.5), (1.5, 0.0), (1.5, 1.5)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSet {
    pub base: Frequency,
    pub members: [Frequency; HARMONICS],
    pub shifts: [(i32, i32); HARMONICS],
}

/// Index of harmonic `(i, j)` in the fixed ordering.
pub fn harmonic_index(i: i32, j: i32) -> usize {
    ((i + 1) * 3 + (j + 1)) as usize
}

/// The nine 3h-harmonics `θ + (2π/3)(i, j)`. For `θ ∈ [−π/3, π/3)²` all of
/// them already lie in `[−π, π)²`, so no wrapping is applied; the staggered
/// symbols are not 2π-periodic and must see these exact values.
pub fn harmonics(theta: Frequency) -> HarmonicSet {
    let step = 2.0 * PI / 3.0;
    let mut members = [theta; HARMONICS];
    let mut shifts = [(0, 0); HARMONICS];
    for i in -1..=1 {
        for j in -1..=1 {
            let k = harmonic_index(i, j);
            members[k] = Frequency::new(theta.t1 + step * i as f64, theta.t2 + step * j as f64);
            shifts[k] = (i, j);
        }
    }
    HarmonicSet {
        base: theta,
        members,
        shifts,
    }
}

/// Block-diagonal placement of one 3×3 symbol per harmonic.
pub fn expanded_fine_symbol<F>(symbol: F, hs: &HarmonicSet) -> Result<CMat>
where
    F: Fn(Frequency) -> Result<Sym3>,
{
    let mut out = CMat::zeros(DIM, DIM);
    for (k, &t) in hs.members.iter().enumerate() {
        let block = symbol(t)?;
        out.fixed_view_mut::<3, 3>(3 * k, 3 * k).copy_from(&block);
    }
    Ok(out)
}

/// Direct rediscretization on the coarse mesh `H`, evaluated at `θ_c = 3θ`.
pub fn coarse_symbol(theta_c: Frequency, coarse_h: f64) -> Sym3 {
    symbols::stokes_symbol(theta_c, coarse_h).matrix
}

/// Prolongation (27×3) and restriction (3×27) symbols.
pub fn transfer_symbols(tp: TransferPair, hs: &HarmonicSet, h: f64) -> (CMat, CMat) {
    let ps = tp.prolongation_stencil();
    let rs = tp.restriction_stencil();
    let mut p = CMat::zeros(DIM, 3);
    let mut r = CMat::zeros(3, DIM);
    for (k, (&t, &(i, j))) in hs.members.iter().zip(&hs.shifts).enumerate() {
        let rhat = rs.symbol(t.as_tuple(), h);
        let phat = ps.symbol(t.as_tuple(), h).conj() / 9.0;
        for (f, &(sx, sy)) in FIELD_SHIFTS.iter().enumerate() {
            let phase = C64::from_polar(1.0, 2.0 * PI / 3.0 * (i as f64 * sx + j as f64 * sy));
            r[(f, 3 * k + f)] = rhat * phase;
            p[(3 * k + f, f)] = phat * phase.conj();
        }
    }
    (p, r)
}

/// How to treat a singular coarse symbol (only `3θ ≡ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseInverse {
    /// Report [`Error::Singular`].
    Strict,
    /// Use the Moore-Penrose pseudo-inverse, matching a coarse solve that
    /// ignores the constant null space.
    PseudoInverse,
}

#[derive(Debug, Clone)]
pub struct TwoGridSymbol {
    pub matrix: CMat,
    pub theta: Frequency,
    pub nu1: usize,
    pub nu2: usize,
    pub transfer: TransferPair,
}

fn pow(m: &CMat, k: usize) -> CMat {
    let mut out = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

fn invert_coarse(lc: Sym3, policy: CoarseInverse, theta: Frequency) -> Result<Sym3> {
    if let Some(inv) = lc.try_inverse() {
        return Ok(inv);
    }
    match policy {
        CoarseInverse::Strict => Err(Error::Singular(format!(
            "coarse symbol at 3θ for θ = ({}, {})",
            theta.t1, theta.t2
        ))),
        CoarseInverse::PseudoInverse => {
            let dense = DMatrix::from_iterator(3, 3, lc.iter().copied());
            let pinv = dense
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::Singular(e.to_string()))?;
            Ok(SMatrix::from_iterator(pinv.iter().copied()))
        }
    }
}

/// Coarse-grid correction `I − P̃ L̃_H⁻¹ R̃ L̃` at one low frequency.
pub fn coarse_grid_correction(
    theta: Frequency,
    tp: TransferPair,
    h: f64,
    policy: CoarseInverse,
) -> Result<CMat> {
    let hs = harmonics(theta);
    let l = expanded_fine_symbol(|t| Ok(symbols::stokes_symbol(t, h).matrix), &hs)?;
    let lc = coarse_symbol(theta.scaled(3.0), 3.0 * h);
    let lc_inv = invert_coarse(lc, policy, theta)?;
    let lc_inv = CMat::from_iterator(3, 3, lc_inv.iter().copied());
    let (p, r) = transfer_symbols(tp, &hs, h);
    Ok(CMat::identity(DIM, DIM) - p * lc_inv * r * l)
}

/// `Ẽ = S̃^{ν₂} (I − P̃ L̃_H⁻¹ R̃ L̃) S̃^{ν₁}`.
pub fn two_grid_symbol_with(
    theta: Frequency,
    nu1: usize,
    nu2: usize,
    p: &RelaxParams,
    tp: TransferPair,
    h: f64,
    policy: CoarseInverse,
) -> Result<TwoGridSymbol> {
    let hs = harmonics(theta);
    let s = expanded_fine_symbol(|t| Ok(symbols::relax_error_symbol(p, t, h)?.matrix), &hs)?;
    let cgc = coarse_grid_correction(theta, tp, h, policy)?;
    let matrix = pow(&s, nu2) * cgc * pow(&s, nu1);
    Ok(TwoGridSymbol {
        matrix,
        theta,
        nu1,
        nu2,
        transfer: tp,
    })
}

pub fn two_grid_symbol(
    theta: Frequency,
    nu1: usize,
    nu2: usize,
    p: &RelaxParams,
    tp: TransferPair,
    h: f64,
) -> Result<TwoGridSymbol> {
    two_grid_symbol_with(theta, nu1, nu2, p, tp, h, CoarseInverse::Strict)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGridFactor {
    pub rho: f64,
    /// Frequency attaining the maximum.
    pub argmax: Frequency,
    pub samples: usize,
    /// Samples skipped because the coarse symbol was singular.
    pub skipped: usize,
}

/// `ρ_h(ν₁, ν₂) = max_{θ ∈ T^L} ρ(Ẽ(θ))` over the half-step offset low
/// samples of resolution `n`.
pub fn two_grid_factor(
    nu1: usize,
    nu2: usize,
    p: &RelaxParams,
    tp: TransferPair,
    n: usize,
    h: f64,
) -> Result<TwoGridFactor> {
    p.validate()?;
    if !n.is_multiple_of(3) || n < 3 {
        return Err(Error::InvalidResolution(n));
    }
    let samples = symbols::low_freq_samples(n, true)?;
    let radii: Vec<Option<(f64, Frequency)>> = samples
        .par_iter()
        .map(|&t| match two_grid_symbol(t, nu1, nu2, p, tp, h) {
            Ok(e) => linalg::spectral_radius(&e.matrix).map(|r| Some((r, t))),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let skipped = radii.iter().filter(|r| r.is_none()).count();
    let (rho, argmax) =
        radii
            .into_iter()
            .flatten()
            .fold((0.0, Frequency::new(0.0, 0.0)), |acc, x| {
                if x.0 > acc.0 {
                    x
                } else {
                    acc
                }
            });
    Ok(TwoGridFactor {
        rho,
        argmax,
        samples: samples.len(),
        skipped,
    })
}

pub fn two_grid_convergence_factor(
    nu1: usize,
    nu2: usize,
    p: &RelaxParams,
    tp: TransferPair,
    n: usize,
    h: f64,
) -> Result<f64> {
    Ok(two_grid_factor(nu1, nu2, p, tp, n, h)?.rho)
}

/// Every eigenvalue of `Ẽ(θ)` over the grid lattice `θ = 2πk/n` in `T^L`,
/// with pseudo-inverse coarse solves. For a periodic `n × n` grid this is the
/// full spectrum of the two-grid error-propagation matrix.
pub fn lattice_spectrum(
    n: usize,
    nu1: usize,
    nu2: usize,
    p: &RelaxParams,
    tp: TransferPair,
) -> Result<Vec<C64>> {
    let h = 1.0 / n as f64;
    let mut out = Vec::with_capacity(3 * n * n);
    for t in symbols::low_freq_samples(n, false)? {
        let e = two_grid_symbol_with(t, nu1, nu2, p, tp, h, CoarseInverse::PseudoInverse)?;
        out.extend(linalg::eigenvalues(&e.matrix)?);
    }
    Ok(out)
}
