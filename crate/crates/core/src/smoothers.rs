//! One sweep of each mass-based relaxation, `x ← x + ω 𝓜⁻¹ (b − 𝓛 x)`.
//!
//! `C⁻¹ = diag(Q, Q)` is applied by multiplying with the mass stencil, so
//! only the exact Braess-Sarazin variant solves a linear system.

use ndarray::{Array2, Zip};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lfa::symbols::{Frequency, Sym3};
use crate::linalg::C64;
use crate::mac::{Bc, Field, SaddleSystem, StaggeredState};
use crate::params::{RelaxParams, Scheme};

/// `B C⁻¹ Bᵀ = B diag(Q, Q) Bᵀ` on pressure fields.
#[derive(Debug, Clone)]
pub struct SchurOperator {
    diag: Array2<f64>,
}

impl SchurOperator {
    /// Extracts the diagonal by probing with colored unit fields. The
    /// operator couples cells at most two apart, so colors repeating every
    /// nine cells never overlap; grids up to 9×9 are probed cell by cell.
    pub fn new(sys: &SaddleSystem) -> Result<Self> {
        let n = sys.n();
        let stride = if n.is_multiple_of(9) && n > 9 { 9 } else { n };
        let mut diag = Array2::zeros((n, n));
        for cx in 0..stride {
            for cy in 0..stride {
                let e = Array2::from_shape_fn((n, n), |(x, y)| {
                    (x % stride == cx && y % stride == cy) as u8 as f64
                });
                let col = Self::apply_raw(sys, &e)?;
                for x in (cx..n).step_by(stride) {
                    for y in (cy..n).step_by(stride) {
                        diag[[x, y]] = col[[x, y]];
                    }
                }
            }
        }
        if let Some(bad) = diag.iter().find(|&&d| d.is_nan() || d <= 0.0) {
            return Err(Error::Singular(format!("Schur diagonal entry {bad}")));
        }
        Ok(Self { diag })
    }

    fn apply_raw(sys: &SaddleSystem, p: &Array2<f64>) -> Result<Array2<f64>> {
        let (gu, gv) = sys.apply_bt(p);
        let qu = sys.apply_q(&gu, Field::U)?;
        let qv = sys.apply_q(&gv, Field::V)?;
        Ok(sys.apply_b(&qu, &qv))
    }

    pub fn diagonal(&self) -> &Array2<f64> {
        &self.diag
    }

    pub fn apply(&self, sys: &SaddleSystem, p: &Array2<f64>) -> Result<Array2<f64>> {
        Self::apply_raw(sys, p)
    }

    /// Minimum-norm solution of `S x = g` by conjugate gradients on the
    /// mean-zero subspace (the constants span the null space in both modes).
    pub fn solve(&self, sys: &SaddleSystem, g: &Array2<f64>, rel_tol: f64) -> Result<Array2<f64>> {
        let mean_free = |a: &Array2<f64>| {
            let m = a.mean().unwrap_or(0.0);
            a.mapv(|x| x - m)
        };
        let dot = |a: &Array2<f64>, b: &Array2<f64>| {
            a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>()
        };
        let b = mean_free(g);
        let bnorm = dot(&b, &b).sqrt();
        let mut x = Array2::zeros(b.dim());
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.clone();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        let max_iter = 20 * b.len() + 100;
        for _ in 0..max_iter {
            if rr.sqrt() <= rel_tol * bnorm {
                return Ok(mean_free(&x));
            }
            let sd = mean_free(&self.apply(sys, &d)?);
            let alpha = rr / dot(&d, &sd);
            Zip::from(&mut x).and(&d).for_each(|x, &d| *x += alpha * d);
            Zip::from(&mut r).and(&sd).for_each(|r, &s| *r -= alpha * s);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            Zip::from(&mut d)
                .and(&r)
                .for_each(|d, &r| *d = r + beta * *d);
        }
        Err(Error::SolveFailed(format!(
            "Schur CG stalled at relative residual {:e}",
            rr.sqrt() / bnorm
        )))
    }
}

/// Relative residual at which the exact Braess-Sarazin Schur solve stops.
pub const SCHUR_TOL: f64 = 1e-13;

/// Relaxation operator for one level, holding the Schur diagonal when needed.
#[derive(Debug, Clone)]
pub struct Smoother {
    pub params: RelaxParams,
    schur: Option<SchurOperator>,
}

impl Smoother {
    pub fn new(sys: &SaddleSystem, params: RelaxParams) -> Result<Self> {
        params.validate()?;
        let schur = match params.scheme {
            Scheme::QbsrExact | Scheme::Qibsr => Some(SchurOperator::new(sys)?),
            _ => None,
        };
        Ok(Self { params, schur })
    }

    /// Correction `𝓜⁻¹ r` before damping.
    pub fn correction(&self, sys: &SaddleSystem, r: &StaggeredState) -> Result<StaggeredState> {
        let p = &self.params;
        let a = p.alpha;
        match p.scheme {
            Scheme::Qdr => {
                let d1u = sys.apply_q(&r.u, Field::U)? / a;
                let d1v = sys.apply_q(&r.v, Field::V)? / a;
                let d2 = sys.apply_qp(&(&r.p - &sys.apply_b(&d1u, &d1v)))? / a;
                let (gu, gv) = sys.apply_bt(&d2);
                Ok(StaggeredState {
                    layout: r.layout,
                    u: d1u + gu,
                    v: d1v + gv,
                    p: -sys.apply_ap(&d2),
                })
            }
            Scheme::QbsrExact | Scheme::Qibsr => {
                let schur = self.schur.as_ref().expect("Schur operator built for BSR");
                let qu = sys.apply_q(&r.u, Field::U)?;
                let qv = sys.apply_q(&r.v, Field::V)?;
                let g = sys.apply_b(&qu, &qv) - &(&r.p * a);
                let dp = if p.scheme == Scheme::QbsrExact {
                    schur.solve(sys, &g, SCHUR_TOL)?
                } else {
                    g / schur.diagonal() * p.omega_j
                };
                let (gu, gv) = sys.apply_bt(&dp);
                Ok(StaggeredState {
                    layout: r.layout,
                    u: sys.apply_q(&(&r.u - &gu), Field::U)? / a,
                    v: sys.apply_q(&(&r.v - &gv), Field::V)? / a,
                    p: dp,
                })
            }
            Scheme::Quzawa => {
                let du = sys.apply_q(&r.u, Field::U)? / a;
                let dv = sys.apply_q(&r.v, Field::V)? / a;
                let dp = (&r.p - &sys.apply_b(&du, &dv)) * -p.sigma;
                Ok(StaggeredState {
                    layout: r.layout,
                    u: du,
                    v: dv,
                    p: dp,
                })
            }
        }
    }

    pub fn sweep(
        &self,
        sys: &SaddleSystem,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
    ) -> Result<()> {
        let r = sys.residual(x, rhs)?;
        let d = self.correction(sys, &r)?;
        x.axpy(self.params.omega, &d);
        Ok(())
    }
}

fn relax_as(
    scheme: Scheme,
    sys: &SaddleSystem,
    x: &StaggeredState,
    rhs: &StaggeredState,
    p: &RelaxParams,
) -> Result<StaggeredState> {
    if p.scheme != scheme {
        return Err(Error::InvalidParams(format!(
            "{} parameters passed to the {} sweep",
            p.scheme, scheme
        )));
    }
    let mut out = x.clone();
    Smoother::new(sys, *p)?.sweep(sys, &mut out, rhs)?;
    Ok(out)
}

pub fn relax_qdr(
    sys: &SaddleSystem,
    x: &StaggeredState,
    rhs: &StaggeredState,
    p: &RelaxParams,
) -> Result<StaggeredState> {
    relax_as(Scheme::Qdr, sys, x, rhs, p)
}

pub fn relax_qbsr_exact(
    sys: &SaddleSystem,
    x: &StaggeredState,
    rhs: &StaggeredState,
    p: &RelaxParams,
) -> Result<StaggeredState> {
    relax_as(Scheme::QbsrExact, sys, x, rhs, p)
}

pub fn relax_qibsr(
    sys: &SaddleSystem,
    x: &StaggeredState,
    rhs: &StaggeredState,
    p: &RelaxParams,
) -> Result<StaggeredState> {
    relax_as(Scheme::Qibsr, sys, x, rhs, p)
}

pub fn relax_uzawa(
    sys: &SaddleSystem,
    x: &StaggeredState,
    rhs: &StaggeredState,
    p: &RelaxParams,
) -> Result<StaggeredState> {
    relax_as(Scheme::Quzawa, sys, x, rhs, p)
}

/// Grid amplification matrix of one sweep on the Fourier mode with lattice
/// frequency `θ = 2π(k₁, k₂)/n` of a periodic grid, in `(u, v, p)` order.
/// Each field's mode is `e^{iθ·x/h}` at its staggered position, so the result
/// is directly comparable with the LFA error symbol.
pub fn periodic_mode_amplification(
    sys: &SaddleSystem,
    smoother: &Smoother,
    k: (usize, usize),
) -> Result<Sym3> {
    if sys.bc() != Bc::Periodic {
        return Err(Error::InvalidParams(
            "mode amplification needs periodic boundaries".into(),
        ));
    }
    let n = sys.n();
    let t = Frequency::new(
        2.0 * PI * k.0 as f64 / n as f64,
        2.0 * PI * k.1 as f64 / n as f64,
    )
    .canonical();
    let offsets = [(0.0, 0.5), (0.5, 0.0), (0.5, 0.5)];
    let mode = |f: usize, i: isize, j: isize| {
        let (ox, oy) = offsets[f];
        C64::from_polar(1.0, t.t1 * (i as f64 + ox) + t.t2 * (j as f64 + oy))
    };
    let index = |f: Field| Field::ALL.iter().position(|&g| g == f).expect("field");
    let zero = sys.zeros();
    let mut g = Sym3::zeros();
    for col in 0..3 {
        let part = |im: bool| {
            let mut x = StaggeredState::from_fn(sys.layout, |f, i, j| {
                if index(f) != col {
                    0.0
                } else if im {
                    mode(col, i, j).im
                } else {
                    mode(col, i, j).re
                }
            });
            smoother.sweep(sys, &mut x, &zero).map(|_| x)
        };
        let (re, im) = (part(false)?, part(true)?);
        for f in Field::ALL {
            let row = index(f);
            let mut acc = C64::new(0.0, 0.0);
            for ((x, y), &a) in re.field(f).indexed_iter() {
                let (i, j) = sys.layout.physical(f, x, y);
                acc += C64::new(a, im.field(f)[[x, y]]) * mode(row, i, j).conj();
            }
            g[(row, col)] = acc / sys.layout.len(f) as f64;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::Layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(layout: Layout, rng: &mut ChaCha8Rng) -> StaggeredState {
        StaggeredState::from_fn(layout, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn all_params() -> Vec<RelaxParams> {
        Scheme::ALL
            .iter()
            .map(|&s| RelaxParams::lfa_optimal(s))
            .collect()
    }

    #[test]
    fn schur_diagonal_matches_assembled_operator() {
        for bc in [Bc::Periodic, Bc::Dirichlet] {
            for n in [3, 9] {
                let sys = SaddleSystem::new(n, bc).unwrap();
                let s = SchurOperator::new(&sys).unwrap();
                for x in 0..n {
                    for y in 0..n {
                        let mut e = Array2::zeros((n, n));
                        e[[x, y]] = 1.0;
                        let col = s.apply(&sys, &e).unwrap();
                        assert!(
                            (col[[x, y]] - s.diagonal()[[x, y]]).abs() < 1e-12,
                            "{bc} {n} {x} {y}"
                        );
                    }
                }
                if n == 9 {
                    // interior value is the Schur stencil center
                    assert!((s.diagonal()[[4, 4]] - 4.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn schur_is_symmetric_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = SaddleSystem::new(27, Bc::Dirichlet).unwrap();
        let s = SchurOperator::new(&sys).unwrap();
        let dot = |a: &Array2<f64>, b: &Array2<f64>| {
            a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>()
        };
        for _ in 0..100 {
            let mut a = random_state(sys.layout, &mut rng).p;
            let b = random_state(sys.layout, &mut rng).p;
            let m = a.mean().unwrap();
            a.mapv_inplace(|x| x - m);
            let sa = s.apply(&sys, &a).unwrap();
            let sb = s.apply(&sys, &b).unwrap();
            assert!((dot(&sa, &b) - dot(&a, &sb)).abs() < 1e-12 * dot(&a, &a).max(1.0));
            assert!(dot(&sa, &a) >= 0.0);
        }
    }

    #[test]
    fn schur_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for bc in [Bc::Periodic, Bc::Dirichlet] {
            let sys = SaddleSystem::new(27, bc).unwrap();
            let s = SchurOperator::new(&sys).unwrap();
            let mut g = random_state(sys.layout, &mut rng).p;
            let m = g.mean().unwrap();
            g.mapv_inplace(|x| x - m);
            let x = s.solve(&sys, &g, 1e-13).unwrap();
            let r = &g - &s.apply(&sys, &x).unwrap();
            let rel = r.iter().map(|x| x * x).sum::<f64>().sqrt()
                / g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(rel < 1e-12, "{rel}");
            assert!(x.mean().unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn exact_solutions_are_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for bc in [Bc::Periodic, Bc::Dirichlet] {
            let sys = SaddleSystem::new(27, bc).unwrap();
            let x = random_state(sys.layout, &mut rng);
            let b = sys.apply(&x);
            for p in all_params() {
                let sm = Smoother::new(&sys, p).unwrap();
                let mut y = x.clone();
                sm.sweep(&sys, &mut y, &b).unwrap();
                assert!((&y - &x).norm() < 1e-11, "{}", p.scheme);
            }
        }
    }

    #[test]
    fn zero_residual_leaves_state() {
        let sys = SaddleSystem::new(9, Bc::Dirichlet).unwrap();
        let x = sys.zeros();
        for p in all_params() {
            let y = relax_as(p.scheme, &sys, &x, &sys.zeros(), &p).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn wrong_scheme_is_rejected() {
        let sys = SaddleSystem::new(9, Bc::Periodic).unwrap();
        let p = RelaxParams::lfa_optimal(Scheme::Qdr);
        assert!(relax_uzawa(&sys, &sys.zeros(), &sys.zeros(), &p).is_err());
        assert!(relax_qdr(&sys, &sys.zeros(), &sys.zeros(), &p).is_ok());
    }

    #[test]
    fn uzawa_without_pressure_weight_moves_only_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let sys = SaddleSystem::new(9, Bc::Dirichlet).unwrap();
        let x = random_state(sys.layout, &mut rng);
        let p = RelaxParams::quzawa(1.0, 1.0, 1e-300);
        let y = relax_uzawa(&sys, &x, &sys.zeros(), &p).unwrap();
        assert!((&y.p - &x.p).iter().all(|d| d.abs() < 1e-200));
        assert!((&y.u - &x.u).iter().any(|d| d.abs() > 1e-6));
    }

    #[test]
    fn gauge_preserved_by_mean_free_schemes() {
        // Q-IBSR divides by a non-constant diagonal near the walls and so
        // does not keep the pressure mean; the cycle projects it instead
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let sys = SaddleSystem::new(27, Bc::Dirichlet).unwrap();
        let mut x = random_state(sys.layout, &mut rng);
        x.project_gauge();
        for s in [Scheme::Qdr, Scheme::QbsrExact, Scheme::Quzawa] {
            let p = RelaxParams::lfa_optimal(s);
            let y = relax_as(s, &sys, &x, &sys.zeros(), &p).unwrap();
            assert!(y.pressure_mean().abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn divergence_free_residual_gives_zero_pressure_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let n = 27;
        let sys = SaddleSystem::new(n, Bc::Periodic).unwrap();
        let sm = Smoother::new(&sys, RelaxParams::qbsr(1.0, 1.0)).unwrap();
        // on a torus Q commutes with the discrete curl, so B Q curl ψ = 0
        let psi = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let at = |i: isize, j: isize| {
            psi[[
                i.rem_euclid(n as isize) as usize,
                j.rem_euclid(n as isize) as usize,
            ]]
        };
        let r = StaggeredState::from_fn(sys.layout, |f, i, j| match f {
            Field::U => at(i, j + 1) - at(i, j),
            Field::V => -(at(i + 1, j) - at(i, j)),
            Field::P => 0.0,
        });
        let d = sm.correction(&sys, &r).unwrap();
        assert!(
            d.p.iter().all(|x| x.abs() < 1e-10),
            "{}",
            d.p.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        );
    }
}
