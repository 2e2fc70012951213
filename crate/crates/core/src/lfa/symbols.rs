//! Per-frequency 3×3 block symbols of the MAC Stokes operator and of the
//! mass-based smoothers, and sampled smoothing factors.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::params::{RelaxParams, Scheme};
use crate::stencil;

pub type Sym3 = Matrix3<C64>;

/// Constant term of the pressure Schur-complement stencil `B C⁻¹ Bᵀ` with
/// `C⁻¹ = diag(Q, Q)`; the weighted-Jacobi sweep divides by it.
pub const SCHUR_JACOBI_DIAGONAL: f64 = 4.0 / 3.0;

const I: C64 = C64::new(0.0, 1.0);

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A Fourier frequency `θ = (θ₁, θ₂)` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub t1: f64,
    pub t2: f64,
}

fn wrap(t: f64) -> f64 {
    t - 2.0 * PI * ((t + PI) / (2.0 * PI)).floor()
}

impl Frequency {
    pub const fn new(t1: f64, t2: f64) -> Self {
        Self { t1, t2 }
    }

    /// Representative in `[−π, π)²`.
    pub fn canonical(self) -> Self {
        Self::new(wrap(self.t1), wrap(self.t2))
    }

    /// Low for coarsening by three: both canonical components in `[−π/3, π/3)`.
    pub fn is_low(self) -> bool {
        let c = self.canonical();
        let low = |t: f64| (-PI / 3.0..PI / 3.0).contains(&t);
        low(c.t1) && low(c.t2)
    }

    pub fn is_high(self) -> bool {
        !self.is_low()
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.t1 * k, self.t2 * k)
    }

    pub fn as_tuple(self) -> (f64, f64) {
        (self.t1, self.t2)
    }
}

/// Scalar quantities shared by all the block symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSymbols {
    /// `sin²(θ₁/2) + sin²(θ₂/2)`.
    pub m: f64,
    /// Reciprocal of the dimensionless mass symbol `Q̃/h²`.
    pub m_s: f64,
    /// `4m/m_s`, the symbol of `Q·A_s`.
    pub m_r: f64,
}

impl AuxSymbols {
    pub fn at(theta: Frequency) -> Self {
        let m = (theta.t1 / 2.0).sin().powi(2) + (theta.t2 / 2.0).sin().powi(2);
        let q = stencil::mass_q().symbol(theta.as_tuple(), 1.0).re;
        let m_s = 1.0 / q;
        Self {
            m,
            m_s,
            m_r: 4.0 * m / m_s,
        }
    }
}

/// A 3×3 symbol over the `(u, v, p)` block ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymbol {
    pub matrix: Sym3,
    pub theta: Frequency,
    pub h: f64,
}

impl BlockSymbol {
    fn new(matrix: Sym3, theta: Frequency, h: f64) -> Self {
        Self { matrix, theta, h }
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.matrix)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        linalg::spectral_radius(&self.matrix)
    }
}

/// Symbols of the staggered gradient `Bᵀ`: `i·2 sin(θ_k/2)/h`.
fn grad(theta: Frequency, h: f64) -> (C64, C64) {
    (
        I * (2.0 * (theta.t1 / 2.0).sin() / h),
        I * (2.0 * (theta.t2 / 2.0).sin() / h),
    )
}

pub fn stokes_symbol(theta: Frequency, h: f64) -> BlockSymbol {
    assert!(h > 0.0);
    let lap = c(4.0 * AuxSymbols::at(theta).m / (h * h));
    let (gx, gy) = grad(theta, h);
    let z = c(0.0);
    let m = Sym3::new(lap, z, gx, z, lap, gy, -gx, -gy, z);
    BlockSymbol::new(m, theta, h)
}

/// Symbol of `K = L·P`, lower block-triangular.
pub fn dist_k_symbol(theta: Frequency, h: f64) -> BlockSymbol {
    let lap = c(4.0 * AuxSymbols::at(theta).m / (h * h));
    let (gx, gy) = grad(theta, h);
    let z = c(0.0);
    let m = Sym3::new(lap, z, z, z, lap, z, -gx, -gy, lap);
    BlockSymbol::new(m, theta, h)
}

/// Symbol of the distribution operator `P = [I Bᵀ; 0 −A_p]`.
pub fn dist_p_symbol(theta: Frequency, h: f64) -> BlockSymbol {
    let lap = c(4.0 * AuxSymbols::at(theta).m / (h * h));
    let (gx, gy) = grad(theta, h);
    let (z, one) = (c(0.0), c(1.0));
    let m = Sym3::new(one, z, gx, z, one, gy, z, z, -lap);
    BlockSymbol::new(m, theta, h)
}

/// Symbol of the smoother `M` for the given scheme. For Q-IBSR this is the
/// inverse of the one-sweep-Jacobi approximate inverse and can be singular.
pub fn smoother_symbol(p: &RelaxParams, theta: Frequency, h: f64) -> Result<BlockSymbol> {
    let aux = AuxSymbols::at(theta);
    let diag = c(p.alpha * aux.m_s / (h * h));
    let (gx, gy) = grad(theta, h);
    let z = c(0.0);
    let m = match p.scheme {
        Scheme::Qdr => Sym3::new(diag, z, z, z, diag, z, -gx, -gy, diag),
        Scheme::QbsrExact => Sym3::new(diag, z, gx, z, diag, gy, -gx, -gy, z),
        Scheme::Quzawa => Sym3::new(diag, z, z, z, diag, z, -gx, -gy, c(-1.0 / p.sigma)),
        Scheme::Qibsr => braess_sarazin_inverse(p, theta, h, false)
            .try_inverse()
            .ok_or_else(|| singular(theta))?,
    };
    Ok(BlockSymbol::new(m, theta, h))
}

fn singular(theta: Frequency) -> Error {
    Error::Singular(format!(
        "smoother symbol at θ = ({}, {})",
        theta.t1, theta.t2
    ))
}

/// Explicit symbol of the Braess-Sarazin update map `r ↦ δ`:
/// `δ_p = S⁻¹(B Q r_u − α r_p)`, `δ_u = Q(r_u − Bᵀ δ_p)/α`, where `S⁻¹` is the
/// exact (pseudo-)inverse of the Schur symbol or one weighted-Jacobi step.
fn braess_sarazin_inverse(p: &RelaxParams, theta: Frequency, h: f64, exact: bool) -> Sym3 {
    let aux = AuxSymbols::at(theta);
    let qh = c(h * h / aux.m_s);
    let (gx, gy) = grad(theta, h);
    let (bx, by) = (-gx, -gy);
    let schur_inv = if exact {
        let s = 4.0 * aux.m / aux.m_s;
        if s == 0.0 {
            0.0
        } else {
            1.0 / s
        }
    } else {
        p.omega_j / SCHUR_JACOBI_DIAGONAL
    };
    let si = c(schur_inv);
    let alpha = c(p.alpha);
    // Row vector mapping (r_u, r_v, r_p) to δ_p.
    let dp = Vector3::new(si * bx * qh, si * by * qh, -si * alpha);
    let mut w = Sym3::zeros();
    w.set_row(2, &dp.transpose());
    for (row, g) in [(0usize, gx), (1usize, gy)] {
        for col in 0..3 {
            let identity = if row == col { c(1.0) } else { c(0.0) };
            w[(row, col)] = qh / alpha * (identity - g * dp[col]);
        }
    }
    w
}

/// Symbol of the map `r ↦ δ` applied by one sweep before damping, i.e. the
/// approximate inverse the relaxation uses in place of `L⁻¹`.
pub fn update_symbol(p: &RelaxParams, theta: Frequency, h: f64) -> Result<Sym3> {
    match p.scheme {
        Scheme::Qdr => {
            let md = smoother_symbol(p, theta, h)?.matrix;
            let inv = md.try_inverse().ok_or_else(|| singular(theta))?;
            Ok(dist_p_symbol(theta, h).matrix * inv)
        }
        Scheme::QbsrExact => Ok(braess_sarazin_inverse(p, theta, h, true)),
        Scheme::Qibsr => Ok(braess_sarazin_inverse(p, theta, h, false)),
        Scheme::Quzawa => smoother_symbol(p, theta, h)?
            .matrix
            .try_inverse()
            .ok_or_else(|| singular(theta)),
    }
}

/// `S̃ = I − ω W̃ L̃` with `W̃` from [`update_symbol`].
pub fn relax_error_symbol(p: &RelaxParams, theta: Frequency, h: f64) -> Result<BlockSymbol> {
    let w = update_symbol(p, theta, h)?;
    let l = stokes_symbol(theta, h).matrix;
    let s = Sym3::identity() - w * l * c(p.omega);
    Ok(BlockSymbol::new(s, theta, h))
}

// Samples are stored as `θ = π·m/n` with integer numerators so that the
// low/high split is decided exactly.
fn canonical_numerator(m: i64, n: i64) -> i64 {
    (m + n).rem_euclid(2 * n) - n
}

fn is_low_numerator(m: i64, n: i64) -> bool {
    // π m / n ∈ [−π/3, π/3)  ⟺  −n ≤ 3m < n
    -n <= 3 * m && 3 * m < n
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 9 || !n.is_multiple_of(3) {
        return Err(Error::InvalidResolution(n));
    }
    Ok(())
}

/// Half-step offset samples `θ = 2π(k+½)/n`, canonicalized to `[−π, π)²` and
/// restricted to high frequencies.
pub fn high_freq_samples(n: usize) -> Result<Vec<Frequency>> {
    check_resolution(n)?;
    let nn = n as i64;
    let nums: Vec<i64> = (0..nn)
        .map(|k| canonical_numerator(2 * k + 1, nn))
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for &a in &nums {
        for &b in &nums {
            if !(is_low_numerator(a, nn) && is_low_numerator(b, nn)) {
                out.push(Frequency::new(
                    PI * a as f64 / n as f64,
                    PI * b as f64 / n as f64,
                ));
            }
        }
    }
    Ok(out)
}

/// Low frequencies in `[−π/3, π/3)²`. With `offset` the samples are the
/// half-step lattice `2π(k+½)/n`, otherwise the grid lattice `2πk/n`.
pub fn low_freq_samples(n: usize, offset: bool) -> Result<Vec<Frequency>> {
    if n < 3 || !n.is_multiple_of(3) {
        return Err(Error::InvalidResolution(n));
    }
    let nn = n as i64;
    let parity = i64::from(offset);
    let nums: Vec<i64> = (-nn..nn)
        .filter(|m| m.rem_euclid(2) == parity && is_low_numerator(*m, nn))
        .collect();
    let mut out = Vec::with_capacity(nums.len() * nums.len());
    for &a in &nums {
        for &b in &nums {
            out.push(Frequency::new(
                PI * a as f64 / n as f64,
                PI * b as f64 / n as f64,
            ));
        }
    }
    Ok(out)
}

/// Sampled LFA smoothing factor `max_{θ ∈ T^H} ρ(S̃(θ))`. Frequencies where the
/// smoother symbol is singular are skipped.
pub fn smoothing_factor(p: &RelaxParams, n: usize, h: f64) -> Result<f64> {
    p.validate()?;
    let samples = high_freq_samples(n)?;
    let radii: Vec<Option<f64>> = samples
        .par_iter()
        .map(|&t| match relax_error_symbol(p, t, h) {
            Ok(s) => s.spectral_radius().map(Some),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(radii.into_iter().flatten().fold(0.0, f64::max))
}
