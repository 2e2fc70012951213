//! Closed-form smoothing results for coarsening by three.
//!
//! Over the high frequencies the symbol of `Q·A_s` ranges over `[5/6, 16/9]`,
//! which fixes the optimal damping `36/47` and smoothing factor `17/47` for the
//! distributive and Braess-Sarazin schemes. The σ-Uzawa scheme has a pair of
//! possibly complex eigenvalues and attains `√(17/47)`.

use std::fmt;

use nalgebra::Complex;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::Scheme;

pub type Rational = Ratio<i64>;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn to_f64(x: Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// A value known exactly: a rational or the square root of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exact {
    Rational(Rational),
    Sqrt(Rational),
}

impl Exact {
    pub fn value(self) -> f64 {
        match self {
            Exact::Rational(q) => to_f64(q),
            Exact::Sqrt(q) => to_f64(q).sqrt(),
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exact::Rational(q) => write!(f, "{q}"),
            Exact::Sqrt(q) => write!(f, "sqrt({q})"),
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `Q̃Ã_s` bounds over the high frequencies.
pub const MR_MIN: (i64, i64) = (5, 6);
pub const MR_MAX: (i64, i64) = (16, 9);

#[derive(Debug, Clone, Serialize)]
pub struct OptimalResult {
    pub scheme: Option<Scheme>,
    /// Optimal `ω/α` where the optimum only constrains the ratio.
    pub ratio: Option<Exact>,
    pub mu_opt: Exact,
    pub mu_opt_value: f64,
    /// Range of `Q̃Ã_s` over the high frequencies.
    pub bounds: (Exact, Exact),
    /// Admissible damping interval, where one is known.
    pub omega_interval: Option<(f64, f64)>,
    /// Exact endpoints of the admissible damping interval.
    pub omega_interval_exact: Option<(Exact, Exact)>,
    /// A representative optimal parameter point `(ω, α, σ)`.
    pub params: Option<(f64, f64, f64)>,
}

/// `g(x, y) = (2 − x − y)(4 + 2x + 2y + xy)` with `x = cos θ₁`, `y = cos θ₂`;
/// `Q̃Ã_s = (2/9)·g`.
pub fn g(x: f64, y: f64) -> f64 {
    (2.0 - x - y) * (4.0 + 2.0 * x + 2.0 * y + x * y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GExtrema {
    pub min: f64,
    pub max: f64,
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
}

/// Whether `(x, y)` lies in the image of the high frequencies under
/// `(cos θ₁, cos θ₂)`: `[−1,1]×[−1,½] ∪ [−1,½]×[½,1]`.
pub fn in_high_region(x: f64, y: f64) -> bool {
    (-1.0..=1.0).contains(&x) && (-1.0..=1.0).contains(&y) && (y <= 0.5 || x <= 0.5)
}

/// Extrema of `g` over the high region. The only interior critical point is
/// `(0, 0)`; on the boundary segments `g` reduces to one-variable quadratics
/// whose extrema are compared directly.
pub fn g_extrema() -> GExtrema {
    // Candidates: the interior critical point, segment endpoints and the
    // vertices of the one-variable quadratics along each boundary piece.
    let mut candidates = vec![(0.0, 0.0)];
    // x = −1: (3 − y)(2 + y), vertex at y = 1/2
    candidates.extend([(-1.0, -1.0), (-1.0, 1.0), (-1.0, 0.5)]);
    // x = 1, y ∈ [−1, 1/2]: 3(1 − y)(2 + y), vertex at y = −1/2
    candidates.extend([(1.0, -1.0), (1.0, 0.5), (1.0, -0.5)]);
    // y = 1/2, x ∈ [1/2, 1]: (5/2)(3/2 − x)(2 + x), vertex at x = −1/4 (outside)
    candidates.extend([(0.5, 0.5), (1.0, 0.5)]);
    // y = −1 and the remaining pieces follow by the symmetry g(x, y) = g(y, x)
    let mirrored: Vec<_> = candidates.iter().map(|&(x, y)| (y, x)).collect();
    candidates.extend(mirrored);

    let mut ext = GExtrema {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        argmin: (0.0, 0.0),
        argmax: (0.0, 0.0),
    };
    for (x, y) in candidates
        .into_iter()
        .filter(|&(x, y)| in_high_region(x, y))
    {
        let v = g(x, y);
        if v < ext.min {
            ext.min = v;
            ext.argmin = (x, y);
        }
        if v > ext.max {
            ext.max = v;
            ext.argmax = (x, y);
        }
    }
    ext
}

fn bounds() -> (Exact, Exact) {
    (
        Exact::Rational(r(MR_MIN.0, MR_MIN.1)),
        Exact::Rational(r(MR_MAX.0, MR_MAX.1)),
    )
}

/// Optimal damping for `I − ω Q A_s`: equioscillation of `|1 − ω·m_r|` at the
/// two ends of `[5/6, 16/9]`.
fn equioscillation() -> (Rational, Rational) {
    let (lo, hi) = (r(MR_MIN.0, MR_MIN.1), r(MR_MAX.0, MR_MAX.1));
    let omega = r(2, 1) / (lo + hi);
    let mu = r(1, 1) - lo * omega;
    (omega, mu)
}

pub fn optimal_scalar() -> OptimalResult {
    let (omega, mu) = equioscillation();
    OptimalResult {
        scheme: None,
        ratio: Some(Exact::Rational(omega)),
        mu_opt: Exact::Rational(mu),
        mu_opt_value: to_f64(mu),
        bounds: bounds(),
        omega_interval: None,
        omega_interval_exact: None,
        params: Some((to_f64(omega), 1.0, 0.0)),
    }
}

/// Q-DR: every eigenvalue of the error symbol is `1 − (ω/α)·m_r`.
pub fn optimal_qdr() -> OptimalResult {
    OptimalResult {
        scheme: Some(Scheme::Qdr),
        ..optimal_scalar()
    }
}

/// Exact Q-BSR: eigenvalues `1 − ω, 1 − ω, 1 − (ω/α)·m_r`. The damping
/// interval keeps `|1 − ω| ≤ 17/47` for the two unit eigenvalues.
pub fn optimal_qbsr() -> OptimalResult {
    let (_, mu) = equioscillation();
    let lo = r(1, 1) - mu;
    let hi = r(1, 1) + mu;
    OptimalResult {
        scheme: Some(Scheme::QbsrExact),
        omega_interval: Some((to_f64(lo), to_f64(hi))),
        omega_interval_exact: Some((Exact::Rational(lo), Exact::Rational(hi))),
        ..optimal_scalar()
    }
}

/// Eigenvalues of `M̃_U⁻¹L̃` for given `m_r`: `λ₃ = m_r/α` and the two roots of
/// `λ² − ((1+σ) m_r/α) λ + m_r σ/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UzawaSpectrum {
    pub lambda1: Complex<f64>,
    pub lambda2: Complex<f64>,
    pub lambda3: f64,
    /// Discriminant of the quadratic.
    pub discriminant: f64,
    /// `4ασ/(1+σ)²`: the quadratic has complex roots iff `m_r < m₂`.
    pub m2: f64,
}

pub fn uzawa_m2(alpha: f64, sigma: f64) -> f64 {
    4.0 * alpha * sigma / (1.0 + sigma).powi(2)
}

pub fn uzawa_spectrum(m_r: f64, alpha: f64, sigma: f64) -> Result<UzawaSpectrum> {
    if !(alpha > 0.0 && sigma > 0.0) {
        return Err(Error::Domain(format!(
            "Uzawa spectrum needs α > 0 and σ > 0, got α = {alpha}, σ = {sigma}"
        )));
    }
    if !(m_r > 0.0 && m_r.is_finite()) {
        return Err(Error::Domain(format!("m_r must be positive, got {m_r}")));
    }
    let b = (1.0 + sigma) * m_r / alpha;
    let c = m_r * sigma / alpha;
    let disc = b * b - 4.0 * c;
    let (l1, l2) = if disc >= 0.0 {
        // b > 0: take the larger root first, the other from the product
        let big = 0.5 * (b + disc.sqrt());
        (Complex::new(big, 0.0), Complex::new(c / big, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex::new(0.5 * b, im), Complex::new(0.5 * b, -im))
    };
    Ok(UzawaSpectrum {
        lambda1: l1,
        lambda2: l2,
        lambda3: m_r / alpha,
        discriminant: disc,
        m2: uzawa_m2(alpha, sigma),
    })
}

/// Smoothing factor of the complex pair over `m_r ∈ [5/6, γ]`, attained at
/// `m_r = 5/6`: `√(1 + 5ω(ωσ − σ − 1)/(6α))`.
pub fn uzawa_mu_c(omega: f64, alpha: f64, sigma: f64, gamma: f64) -> Result<f64> {
    if gamma < 5.0 / 6.0 {
        return Err(Error::Domain(format!("γ = {gamma} must be at least 5/6")));
    }
    let radicand = 1.0 + 5.0 * omega * (omega * sigma - sigma - 1.0) / (6.0 * alpha);
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "negative radicand {radicand} in μ^C"
        )));
    }
    Ok(radicand.sqrt())
}

/// Smoothing factor of the real pair over `m_r ∈ [γ, 16/9]`, from the extreme
/// values `χ₁, χ₂` of `(m_r/2)(1 ± √(1 − m₂/m_r))` at `m_r = 16/9`.
pub fn uzawa_mu_r(omega: f64, alpha: f64, sigma: f64, m2: f64) -> Result<f64> {
    let radicand = 1.0 - 9.0 * m2 / 16.0;
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "m₂ = {m2} exceeds 16/9: the pair is complex over all high frequencies, use μ^C"
        )));
    }
    let root = radicand.sqrt();
    let chi1 = 8.0 / 9.0 * (1.0 + root);
    let chi2 = 8.0 / 9.0 * (1.0 - root);
    let a = (1.0 + sigma) * omega / alpha;
    Ok(if a >= 9.0 / 8.0 {
        a * chi1 - 1.0
    } else {
        1.0 - a * chi2
    })
}

fn uzawa_mu() -> f64 {
    (17.0f64 / 47.0).sqrt()
}

/// Admissible `ω_U` interval for the optimal Uzawa family,
/// `[225/(47(16μ−1)), 30/(47(1−μ))]` with `μ = √(17/47)`.
pub fn uzawa_omega_interval() -> (f64, f64) {
    let mu = uzawa_mu();
    (
        225.0 / (47.0 * (16.0 * mu - 1.0)),
        30.0 / (47.0 * (1.0 - mu)),
    )
}

/// `α_U = 376ω²/(9(47ω − 15))`, `σ = 15/(47ω − 15)`.
pub fn uzawa_params_from_omega(omega: f64) -> Result<(f64, f64)> {
    let (lo, hi) = uzawa_omega_interval();
    if !(lo..=hi).contains(&omega) {
        return Err(Error::OutOfDomain {
            value: omega,
            lo,
            hi,
        });
    }
    let d = 47.0 * omega - 15.0;
    Ok((376.0 * omega * omega / (9.0 * d), 15.0 / d))
}

pub fn optimal_uzawa() -> OptimalResult {
    let interval = uzawa_omega_interval();
    let (alpha, sigma) = uzawa_params_from_omega(1.0).expect("ω = 1 is admissible");
    OptimalResult {
        scheme: Some(Scheme::Quzawa),
        ratio: None,
        mu_opt: Exact::Sqrt(r(17, 47)),
        mu_opt_value: uzawa_mu(),
        bounds: bounds(),
        omega_interval: Some(interval),
        omega_interval_exact: None,
        params: Some((1.0, alpha, sigma)),
    }
}

/// Exact optimal Uzawa point at `ω_U = 1`: `(α_U, σ) = (47/36, 15/32)`.
pub fn uzawa_unit_omega_exact() -> (Rational, Rational) {
    let d = r(47, 1) - r(15, 1);
    (r(376, 9) / d, r(15, 1) / d)
}

/// Optimal results for every scheme that has one. The inexact Braess-Sarazin
/// variant shares the exact scheme's target.
pub fn optimal_for(scheme: Scheme) -> OptimalResult {
    match scheme {
        Scheme::Qdr => optimal_qdr(),
        Scheme::QbsrExact | Scheme::Qibsr => OptimalResult {
            scheme: Some(scheme),
            ..optimal_qbsr()
        },
        Scheme::Quzawa => optimal_uzawa(),
    }
}

/// Work ratio of standard coarsening (factor `1/3` per cycle) against
/// coarsening by three (factor `17/47` at a third of the cost) to reach `ε`.
pub fn cost_ratio_for(eps: f64) -> f64 {
    let t1 = eps.ln() / (1.0f64 / 3.0).ln();
    let t2 = eps.ln() / (17.0f64 / 47.0).ln() / 3.0;
    t1 / t2
}

pub fn cost_ratio() -> f64 {
    cost_ratio_for(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g_values() {
        assert_eq!(g(0.0, 0.0), 8.0);
        assert_eq!(g(1.0, 0.5), 15.0 / 4.0);
        assert_eq!(g(-1.0, -1.0), 4.0);
        assert_eq!(g(-1.0, 0.5), 25.0 / 4.0);
        assert_eq!(g(1.0, -0.5), 27.0 / 4.0);
    }

    #[test]
    fn g_extrema_analytic() {
        let e = g_extrema();
        assert_eq!(e.min, 15.0 / 4.0);
        assert_eq!(e.max, 8.0);
        assert_eq!(e.argmax, (0.0, 0.0));
        assert!(e.argmin == (1.0, 0.5) || e.argmin == (0.5, 1.0));
    }

    #[test]
    fn g_bounds_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut seen = 0;
        while seen < 10_000 {
            let (x, y) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            if !in_high_region(x, y) {
                continue;
            }
            seen += 1;
            let v = g(x, y);
            assert!((15.0 / 4.0 - 1e-12..=8.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn scalar_optimum() {
        let o = optimal_scalar();
        assert_eq!(o.mu_opt, Exact::Rational(r(17, 47)));
        assert_eq!(o.ratio, Some(Exact::Rational(r(36, 47))));
        assert_eq!(
            o.bounds,
            (Exact::Rational(r(5, 6)), Exact::Rational(r(16, 9)))
        );
        assert_eq!(r(1, 1) - r(5, 6) * r(36, 47), r(17, 47));
        assert_eq!(r(16, 9) * r(36, 47) - r(1, 1), r(17, 47));
    }

    #[test]
    fn scheme_optima() {
        assert_eq!(optimal_qdr().mu_opt, Exact::Rational(r(17, 47)));
        let b = optimal_qbsr();
        assert_eq!(b.mu_opt, Exact::Rational(r(17, 47)));
        assert_eq!(
            b.omega_interval_exact,
            Some((Exact::Rational(r(30, 47)), Exact::Rational(r(64, 47))))
        );
        let u = optimal_uzawa();
        assert_eq!(u.mu_opt, Exact::Sqrt(r(17, 47)));
        assert!((u.mu_opt_value - 0.601).abs() < 5e-4);
    }

    #[test]
    fn uzawa_discriminant_zero_case() {
        let (alpha, sigma) = (47.0 / 36.0, 15.0 / 32.0);
        let m2 = uzawa_m2(alpha, sigma);
        assert!((m2 - 160.0 / 141.0).abs() < 1e-14);
        let sp = uzawa_spectrum(m2, alpha, sigma).unwrap();
        assert!(sp.discriminant.abs() < 1e-13);
        for l in [sp.lambda1, sp.lambda2] {
            assert!((l - Complex::new(30.0 / 47.0, 0.0)).norm() < 1e-7);
            assert!(((Complex::new(1.0, 0.0) - l).norm() - 17.0 / 47.0).abs() < 1e-7);
        }
    }

    #[test]
    fn uzawa_roots_satisfy_quadratic_and_vieta() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let m_r = rng.gen_range(5.0 / 6.0..=16.0 / 9.0);
            let alpha = rng.gen_range(0.2..3.0);
            let sigma = rng.gen_range(0.05..3.0);
            let sp = uzawa_spectrum(m_r, alpha, sigma).unwrap();
            let b = (1.0 + sigma) * m_r / alpha;
            let c = m_r * sigma / alpha;
            for l in [sp.lambda1, sp.lambda2] {
                let t = l * l - l * b + c;
                assert!(t.norm() < 1e-12 * (1.0 + b * b));
            }
            assert!((sp.lambda1 * sp.lambda2 - c).norm() < 1e-12 * (1.0 + c));
            assert!((sp.lambda1 + sp.lambda2 - b).norm() < 1e-12 * (1.0 + b));
            assert_eq!(sp.lambda1.im != 0.0, sp.discriminant < 0.0);
            if m_r < sp.m2 * (1.0 - 1e-9) {
                assert!(sp.lambda1.im != 0.0);
            }
        }
    }

    #[test]
    fn uzawa_mu_c_and_mu_r_at_optimum() {
        let (omega, alpha, sigma) = (1.0, 47.0 / 36.0, 15.0 / 32.0);
        let m2 = uzawa_m2(alpha, sigma);
        let gamma = m2.min(16.0 / 9.0);
        let target = (17.0f64 / 47.0).sqrt();
        assert!((uzawa_mu_c(omega, alpha, sigma, gamma).unwrap() - target).abs() < 1e-12);
        assert!((uzawa_mu_r(omega, alpha, sigma, m2).unwrap() - target).abs() < 1e-12);
    }

    #[test]
    fn uzawa_lower_bound_branches() {
        let bound = 34f64.sqrt() / 8.0;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut hits = 0;
        for _ in 0..20_000 {
            let omega = rng.gen_range(0.1..2.0);
            let alpha = rng.gen_range(0.1..4.0);
            let sigma = rng.gen_range(0.05..4.0);
            let m2 = uzawa_m2(alpha, sigma);
            if m2 > 16.0 / 9.0 {
                assert!(uzawa_mu_r(omega, alpha, sigma, m2).is_err());
                if let Ok(mc) = uzawa_mu_c(omega, alpha, sigma, 16.0 / 9.0) {
                    hits += 1;
                    assert!(mc >= bound - 1e-12);
                }
            }
        }
        assert!(hits > 100);
        // m₂ = 5/6 with (1+σ)ω/α = 9/8 attains √34/8
        let sigma: f64 = 0.5;
        let alpha = 5.0 / 6.0 * (1.0 + sigma).powi(2) / (4.0 * sigma);
        let omega = 9.0 / 8.0 * alpha / (1.0 + sigma);
        let mr = uzawa_mu_r(omega, alpha, sigma, 5.0 / 6.0).unwrap();
        assert!((mr - bound).abs() < 1e-12);
    }

    #[test]
    fn mu_c_increases_and_mu_r_decreases_along_optimal_family() {
        // Fix a = (1+σ)ω/α = 9/8 with ω = 1 and sweep b = ω²σ/α.
        let a = 9.0 / 8.0;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..200 {
            let b = 0.2 + 0.3 * k as f64 / 199.0;
            let sigma = b / (a - b);
            let alpha = (1.0 + sigma) / a;
            let m2 = uzawa_m2(alpha, sigma);
            let gamma = m2.clamp(5.0 / 6.0, 16.0 / 9.0);
            let mc = uzawa_mu_c(1.0, alpha, sigma, gamma).unwrap();
            let mr = uzawa_mu_r(1.0, alpha, sigma, m2).unwrap();
            if let Some((pc, pr)) = prev {
                assert!(mc > pc);
                assert!(mr < pr);
            }
            prev = Some((mc, mr));
        }
    }

    #[test]
    fn uzawa_parameter_map() {
        let (alpha, sigma) = uzawa_params_from_omega(1.0).unwrap();
        assert!((alpha - 47.0 / 36.0).abs() < 1e-15);
        assert!((sigma - 15.0 / 32.0).abs() < 1e-15);
        assert_eq!(uzawa_unit_omega_exact(), (r(47, 36), r(15, 32)));

        let (lo, hi) = uzawa_omega_interval();
        assert!((hi - (1.0 + uzawa_mu())).abs() < 1e-14);
        // endpoints located independently by bisection on a brute-force scan
        let brute = |w: f64| {
            let (a, s) = (
                376.0 * w * w / (9.0 * (47.0 * w - 15.0)),
                15.0 / (47.0 * w - 15.0),
            );
            (0..=4000)
                .map(|k| 5.0 / 6.0 + (16.0 / 9.0 - 5.0 / 6.0) * k as f64 / 4000.0)
                .map(|mr| {
                    let sp = uzawa_spectrum(mr, a, s).unwrap();
                    let e = |l: Complex<f64>| (Complex::new(1.0, 0.0) - l * w).norm();
                    e(sp.lambda1)
                        .max(e(sp.lambda2))
                        .max((1.0 - w * sp.lambda3).abs())
                })
                .fold(0.0, f64::max)
                - uzawa_mu()
                > 1e-12
        };
        let bisect = |mut bad: f64, mut good: f64| {
            for _ in 0..60 {
                let mid = 0.5 * (bad + good);
                if brute(mid) {
                    bad = mid
                } else {
                    good = mid
                }
            }
            good
        };
        assert!((bisect(0.5, 1.0) - lo).abs() < 1e-9, "{lo}");
        assert!((bisect(1.7, 1.0) - hi).abs() < 1e-9, "{hi}");
        assert!((lo - 0.555_192).abs() < 1e-6 && (hi - 1.601_417).abs() < 1e-6);
        assert!(uzawa_params_from_omega(0.5).is_err());
        assert!(matches!(
            uzawa_params_from_omega(1.7),
            Err(Error::OutOfDomain { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let omega = rng.gen_range(lo..=hi);
            let (alpha, sigma) = uzawa_params_from_omega(omega).unwrap();
            assert!(((1.0 + sigma) * omega / alpha - 9.0 / 8.0).abs() < 1e-12);
            assert!((omega * omega * sigma / alpha - 135.0 / 376.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_ratio_value() {
        let c = cost_ratio();
        assert!((c - 2.78).abs() <= 0.01, "{c}");
        assert!((cost_ratio_for(1e-6) - cost_ratio_for(1e-12)).abs() < 1e-12);
        let simplified = 3.0 * (17.0f64 / 47.0).ln() / (1.0f64 / 3.0).ln();
        assert!((c - simplified).abs() < 1e-12);
    }
}
