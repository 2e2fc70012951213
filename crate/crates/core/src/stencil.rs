//! Constant-coefficient stencils and their Fourier symbols.
//!
//! A [`Stencil`] stores dimensionless coefficients together with the power of
//! the mesh width that scales them, so the same table serves every grid level.

use std::collections::BTreeMap;

use nalgebra::Complex;

pub type Offset = (i32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    entries: BTreeMap<Offset, f64>,
    h_power: i32,
}

impl Stencil {
    pub fn new(entries: impl IntoIterator<Item = (Offset, f64)>, h_power: i32) -> Self {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            assert!(v.is_finite(), "stencil coefficient at {k:?} is not finite");
            *map.entry(k).or_insert(0.0) += v;
        }
        Self {
            entries: map,
            h_power,
        }
    }

    /// Builds a stencil from a dense row-major table written the way stencils
    /// are usually printed: the first row is the top (largest y offset), columns
    /// run left to right in x. The table must have odd dimensions and is centered.
    pub fn from_table(rows: &[&[f64]], scale: f64, h_power: i32) -> Self {
        let ny = rows.len() as i32;
        assert!(ny % 2 == 1, "stencil table needs an odd number of rows");
        let mut entries = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let nx = row.len() as i32;
            assert!(nx % 2 == 1, "stencil table needs an odd number of columns");
            let dy = ny / 2 - r as i32;
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    entries.push(((c as i32 - nx / 2, dy), v * scale));
                }
            }
        }
        Self::new(entries, h_power)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Offset, f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn get(&self, offset: Offset) -> f64 {
        self.entries.get(&offset).copied().unwrap_or(0.0)
    }

    pub fn h_power(&self) -> i32 {
        self.h_power
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Half-width of the support in each direction.
    pub fn radius(&self) -> i32 {
        self.entries
            .keys()
            .map(|&(a, b)| a.abs().max(b.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(&(a, b), &v)| (self.get((-a, -b)) - v).abs() <= 1e-15 * v.abs().max(1.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.entries().map(|(k, v)| (k, v * factor)), self.h_power)
    }

    /// `h^p · Σ s_κ e^{i θ·κ}`.
    pub fn symbol(&self, theta: (f64, f64), h: f64) -> Complex<f64> {
        assert!(h > 0.0, "mesh width must be positive");
        let sum: Complex<f64> = self
            .entries
            .iter()
            .map(|(&(a, b), &v)| Complex::from_polar(v, theta.0 * a as f64 + theta.1 * b as f64))
            .sum();
        sum * h.powi(self.h_power)
    }
}

/// Five-point Laplacian `-Δ_h`, scaled by `h⁻²`.
pub fn laplacian_5pt() -> Stencil {
    Stencil::from_table(
        &[&[0.0, -1.0, 0.0], &[-1.0, 4.0, -1.0], &[0.0, -1.0, 0.0]],
        1.0,
        -2,
    )
}

/// Centered difference `(∂_{x1})_{h/2}` in the full-offset convention: the
/// unknowns it couples sit half a cell to either side of the target point.
pub fn grad_x_half() -> Stencil {
    Stencil::from_table(&[&[-1.0, 0.0, 1.0]], 1.0, -1)
}

/// Transpose layout of [`grad_x_half`]: `+1` above, `-1` below.
pub fn grad_y_half() -> Stencil {
    Stencil::from_table(&[&[1.0], &[0.0], &[-1.0]], 1.0, -1)
}

/// Bilinear finite-element mass stencil `(h²/36)[1 4 1; 4 16 4; 1 4 1]`.
pub fn mass_q() -> Stencil {
    Stencil::from_table(
        &[&[1.0, 4.0, 1.0], &[4.0, 16.0, 4.0], &[1.0, 4.0, 1.0]],
        1.0 / 36.0,
        2,
    )
}

/// Pressure mass stencil; identical to [`mass_q`] but centered at cell centers.
pub fn mass_qp() -> Stencil {
    mass_q()
}

/// Linear interpolation for coarsening by three, `(1/9)·[1 2 3 2 1]ᵀ[1 2 3 2 1]`.
pub fn p25() -> Stencil {
    let w = [1.0, 2.0, 3.0, 2.0, 1.0];
    let mut entries = Vec::with_capacity(25);
    for (i, wx) in w.iter().enumerate() {
        for (j, wy) in w.iter().enumerate() {
            entries.push(((i as i32 - 2, j as i32 - 2), wx * wy / 9.0));
        }
    }
    Stencil::new(entries, 0)
}

/// Injection.
pub fn r1() -> Stencil {
    Stencil::new([((0, 0), 1.0)], 0)
}

pub fn r9() -> Stencil {
    let ones: &[f64] = &[1.0, 1.0, 1.0];
    Stencil::from_table(&[ones, ones, ones], 1.0 / 9.0, 0)
}

pub fn r9b() -> Stencil {
    Stencil::from_table(
        &[&[1.0, 2.0, 1.0], &[2.0, 4.0, 2.0], &[1.0, 2.0, 1.0]],
        1.0 / 16.0,
        0,
    )
}

/// `P_{h,25}ᵀ / 9`, the restriction adjoint to [`p25`].
pub fn r_p25t() -> Stencil {
    p25().scaled(1.0 / 9.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex<f64>, b: f64, tol: f64) -> bool {
        (a.re - b).abs() <= tol && a.im.abs() <= tol
    }

    #[test]
    fn laplacian_symbol_at_pi_pi() {
        assert!(close(laplacian_5pt().symbol((PI, PI), 1.0), 8.0, 1e-13));
        let h = 1.0 / 81.0;
        let t: (f64, f64) = (0.3, -1.1);
        let expect = (4.0 - 2.0 * t.0.cos() - 2.0 * t.1.cos()) / (h * h);
        assert!(close(laplacian_5pt().symbol(t, h), expect, 1e-9));
    }

    #[test]
    fn mass_symbol_values() {
        assert!(close(mass_q().symbol((0.0, 0.0), 1.0), 1.0, 1e-15));
        assert!(close(
            mass_q().symbol((PI / 2.0, PI / 2.0), 1.0),
            4.0 / 9.0,
            1e-15
        ));
        let h = 0.1;
        let t: (f64, f64) = (0.7, 2.1);
        let (c1, c2) = (t.0.cos(), t.1.cos());
        let expect = h * h / 9.0 * (4.0 + 2.0 * c1 + 2.0 * c2 + c1 * c2);
        assert!(close(mass_q().symbol(t, h), expect, 1e-15));
    }

    #[test]
    fn gradient_symbols_match_half_sines() {
        let t: (f64, f64) = (0.9, -0.4);
        let gx = grad_x_half().symbol(t, 1.0);
        assert!((gx - Complex::new(0.0, 2.0 * t.0.sin())).norm() < 1e-14);
        let gy = grad_y_half().symbol(t, 1.0);
        assert!((gy - Complex::new(0.0, 2.0 * t.1.sin())).norm() < 1e-14);
    }

    #[test]
    fn builtin_coefficients() {
        assert_eq!(p25().get((0, 0)), 1.0);
        assert_eq!(p25().len(), 25);
        assert!((p25().get((2, -1)) - 2.0 / 9.0).abs() < 1e-16);
        assert_eq!(r9b().get((1, 1)), 1.0 / 16.0);
        assert_eq!(r1().entries().collect::<Vec<_>>(), vec![((0, 0), 1.0)]);
        assert!((r_p25t().sum() - 1.0).abs() < 1e-15);
        assert!((p25().sum() - 9.0).abs() < 1e-14);
        assert_eq!(mass_q().get((1, 0)), 4.0 / 36.0);
        assert_eq!(laplacian_5pt().get((0, 1)), -1.0);
        assert_eq!(laplacian_5pt().h_power(), -2);
        assert_eq!(p25().radius(), 2);
    }

    #[test]
    fn transfer_normalization() {
        for s in [r1(), r9(), r9b(), r_p25t()] {
            assert!(close(s.symbol((0.0, 0.0), 0.5), 1.0, 1e-15));
        }
    }

    #[test]
    fn symmetric_builtins() {
        for s in [
            laplacian_5pt(),
            mass_q(),
            mass_qp(),
            r9(),
            r9b(),
            p25(),
            r_p25t(),
        ] {
            assert!(s.is_symmetric());
        }
        assert!(!grad_x_half().is_symmetric());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn all() -> Vec<Stencil> {
            vec![
                laplacian_5pt(),
                grad_x_half(),
                grad_y_half(),
                mass_q(),
                p25(),
                r1(),
                r9(),
                r9b(),
                r_p25t(),
            ]
        }

        proptest! {
            #[test]
            fn conjugate_symmetry(t1 in -4.0f64..4.0, t2 in -4.0f64..4.0, h in 0.01f64..1.0) {
                for s in all() {
                    let a = s.symbol((t1, t2), h);
                    let b = s.symbol((-t1, -t2), h).conj();
                    prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
                }
            }

            #[test]
            fn symmetric_stencils_have_real_symbols(t1 in -4.0f64..4.0, t2 in -4.0f64..4.0) {
                for s in all().into_iter().filter(Stencil::is_symmetric) {
                    prop_assert!(s.symbol((t1, t2), 1.0).im.abs() < 1e-13);
                }
            }

            #[test]
            fn periodic_in_each_component(t1 in -4.0f64..4.0, t2 in -4.0f64..4.0, k1 in -2i32..3, k2 in -2i32..3) {
                let tau = 2.0 * PI;
                for s in all() {
                    let a = s.symbol((t1, t2), 1.0);
                    let b = s.symbol((t1 + tau * k1 as f64, t2 + tau * k2 as f64), 1.0);
                    prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
                }
            }
        }
    }
}
