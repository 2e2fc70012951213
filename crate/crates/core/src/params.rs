//! Relaxation parameters, scheme tags and grid-transfer pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{self, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Mass-based distributive relaxation.
    Qdr,
    /// Mass-based Braess-Sarazin relaxation with an exact Schur-complement solve.
    QbsrExact,
    /// Mass-based Braess-Sarazin relaxation with one weighted-Jacobi sweep on the Schur system.
    Qibsr,
    /// Mass-based σ-Uzawa relaxation.
    Quzawa,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Qdr,
        Scheme::QbsrExact,
        Scheme::Qibsr,
        Scheme::Quzawa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Qdr => "qdr",
            Scheme::QbsrExact => "qbsr",
            Scheme::Qibsr => "qibsr",
            Scheme::Quzawa => "quzawa",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "qdr" | "dr" => Ok(Scheme::Qdr),
            "qbsr" | "qbsrexact" | "bsr" => Ok(Scheme::QbsrExact),
            "qibsr" | "ibsr" => Ok(Scheme::Qibsr),
            "quzawa" | "uzawa" | "qσuzawa" | "qsigmauzawa" => Ok(Scheme::Quzawa),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

/// Parameters of one relaxation sweep `x ← x + ω M⁻¹ (b − L x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxParams {
    pub scheme: Scheme,
    pub omega: f64,
    pub alpha: f64,
    /// Pressure weight, Uzawa only.
    pub sigma: f64,
    /// Inner Jacobi weight, inexact Braess-Sarazin only.
    pub omega_j: f64,
}

impl RelaxParams {
    pub fn new(scheme: Scheme, omega: f64, alpha: f64) -> Self {
        Self {
            scheme,
            omega,
            alpha,
            sigma: 0.0,
            omega_j: 0.0,
        }
    }

    pub fn qdr(omega: f64, alpha: f64) -> Self {
        Self::new(Scheme::Qdr, omega, alpha)
    }

    pub fn qbsr(omega: f64, alpha: f64) -> Self {
        Self::new(Scheme::QbsrExact, omega, alpha)
    }

    pub fn qibsr(omega: f64, alpha: f64, omega_j: f64) -> Self {
        Self {
            omega_j,
            ..Self::new(Scheme::Qibsr, omega, alpha)
        }
    }

    pub fn quzawa(omega: f64, alpha: f64, sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::new(Scheme::Quzawa, omega, alpha)
        }
    }

    /// Parameters minimizing the smoothing factor, as used for the two-grid
    /// LFA tables.
    pub fn lfa_optimal(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Qdr => Self::qdr(36.0 / 47.0, 1.0),
            Scheme::QbsrExact => Self::qbsr(36.0 / 47.0, 1.0),
            Scheme::Qibsr => Self::qibsr(1.0, 47.0 / 36.0, 0.9),
            Scheme::Quzawa => Self::quzawa(1.0, 47.0 / 36.0, 15.0 / 32.0),
        }
    }

    /// Parameters used for the measured multigrid runs. Q-DR uses a smaller
    /// `α_D = 0.7` with the optimal ratio `ω_D/α_D = 36/47`.
    pub fn experiment(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Qdr => Self::qdr(0.7 * 36.0 / 47.0, 0.7),
            s => Self::lfa_optimal(s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return bad(format!("omega must be non-negative, got {}", self.omega));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        match self.scheme {
            Scheme::Quzawa if !(self.sigma.is_finite() && self.sigma > 0.0) => bad(format!(
                "sigma must be positive for Uzawa, got {}",
                self.sigma
            )),
            Scheme::Qibsr if !(self.omega_j > 0.0 && self.omega_j < 2.0) => {
                bad(format!("omega_j must lie in (0, 2), got {}", self.omega_j))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Restriction {
    R1,
    R9,
    R9b,
    /// `P_{h,25}ᵀ / 9`.
    P25T,
}

impl Restriction {
    pub const ALL: [Restriction; 4] = [
        Restriction::R1,
        Restriction::R9,
        Restriction::R9b,
        Restriction::P25T,
    ];

    pub fn stencil(self) -> Stencil {
        match self {
            Restriction::R1 => stencil::r1(),
            Restriction::R9 => stencil::r9(),
            Restriction::R9b => stencil::r9b(),
            Restriction::P25T => stencil::r_p25t(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Restriction::R1 => "r1",
            Restriction::R9 => "r9",
            Restriction::R9b => "r9b",
            Restriction::P25T => "p25t",
        }
    }
}

impl FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '/'], "").as_str() {
            "r1" => Ok(Restriction::R1),
            "r9" => Ok(Restriction::R9),
            "r9b" => Ok(Restriction::R9b),
            "p25t" | "p25t9" | "rp25t" => Ok(Restriction::P25T),
            _ => Err(Error::UnknownTransfer(s.to_string())),
        }
    }
}

/// Prolongation/restriction pair. Prolongation is always `P_{h,25}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransferPair {
    pub restriction: Restriction,
}

impl TransferPair {
    pub const fn new(restriction: Restriction) -> Self {
        Self { restriction }
    }

    pub fn prolongation_stencil(&self) -> Stencil {
        stencil::p25()
    }

    pub fn restriction_stencil(&self) -> Stencil {
        self.restriction.stencil()
    }

    pub fn all() -> [TransferPair; 4] {
        Restriction::ALL.map(TransferPair::new)
    }
}

impl fmt::Display for TransferPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p25/{}", self.restriction.name())
    }
}

impl FromStr for TransferPair {
    type Err = Error;

    /// Accepts `r9`, `p25,r9`, `p25/r9` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let restr = match lower.split_once([',', ':']) {
            Some((p, r)) => {
                if p.trim() != "p25" {
                    return Err(Error::UnknownTransfer(s.to_string()));
                }
                r.trim().to_string()
            }
            None => lower
                .strip_prefix("p25/")
                .map(str::to_string)
                .unwrap_or(lower.clone()),
        };
        Ok(TransferPair::new(
            restr
                .parse()
                .map_err(|_| Error::UnknownTransfer(s.to_string()))?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_tags() {
        assert_eq!("Q-BSR".parse::<Scheme>().unwrap(), Scheme::QbsrExact);
        assert_eq!("qibsr".parse::<Scheme>().unwrap(), Scheme::Qibsr);
        assert!("gs".parse::<Scheme>().is_err());
        assert_eq!(
            "p25,r9b".parse::<TransferPair>().unwrap(),
            TransferPair::new(Restriction::R9b)
        );
        assert_eq!(
            "P25T/9".parse::<TransferPair>().unwrap(),
            TransferPair::new(Restriction::P25T)
        );
        assert_eq!(
            "p25/r1".parse::<TransferPair>().unwrap().restriction,
            Restriction::R1
        );
        assert!("p9,r1".parse::<TransferPair>().is_err());
        assert!("r7".parse::<TransferPair>().is_err());
    }

    #[test]
    fn validation() {
        assert!(RelaxParams::lfa_optimal(Scheme::Quzawa).validate().is_ok());
        assert!(RelaxParams::quzawa(1.0, 1.0, 0.0).validate().is_err());
        assert!(RelaxParams::qibsr(1.0, 1.0, 2.0).validate().is_err());
        assert!(RelaxParams::qdr(0.5, -1.0).validate().is_err());
        let p = RelaxParams::experiment(Scheme::Qdr);
        assert!((p.omega / p.alpha - 36.0 / 47.0).abs() < 1e-15);
    }
}
