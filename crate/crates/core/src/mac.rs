//! Staggered (MAC) discretization of the Stokes system on the unit square.
//!
//! Physical index conventions, with `h = 1/n`:
//!
//! * `u(i, j)` sits at `(i h, (j + ½) h)`, a vertical cell edge,
//! * `v(i, j)` sits at `((i + ½) h, j h)`, a horizontal cell edge,
//! * `p(i, j)` sits at `((i + ½) h, (j + ½) h)`, a cell center.
//!
//! Periodic fields are `n × n`. With Dirichlet walls the normal velocities on
//! the boundary are eliminated, so `u` stores physical columns `1..n` and `v`
//! stores physical rows `1..n`. Arrays are indexed `[x, y]`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{self, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc {
    Periodic,
    Dirichlet,
}

impl Bc {
    pub fn name(self) -> &'static str {
        match self {
            Bc::Periodic => "periodic",
            Bc::Dirichlet => "dirichlet",
        }
    }
}

impl fmt::Display for Bc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Bc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Bc::Periodic),
            "dirichlet" => Ok(Bc::Dirichlet),
            _ => Err(Error::InvalidParams(format!(
                "unknown boundary condition `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    V,
    P,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::U, Field::V, Field::P];

    /// Whether the unknowns lie on grid lines (`true`) or between them along
    /// x and y respectively.
    fn node_axes(self) -> (bool, bool) {
        match self {
            Field::U => (true, false),
            Field::V => (false, true),
            Field::P => (false, false),
        }
    }
}

/// How a stencil leg leaving the domain is closed under Dirichlet walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// Missing values are zero.
    Zero,
    /// Across a wall parallel to the unknown's offset direction, the ghost
    /// value is the negated mirror value (zero wall data at the midpoint).
    Reflect,
    /// [`Closure::Reflect`] for velocities, even reflection (zero normal
    /// derivative) for pressure.
    Mirror,
}

/// `n` must be `3·3^k`.
pub fn check_grid_size(n: usize) -> Result<()> {
    let mut m = n;
    if m < 3 {
        return Err(Error::InvalidGridSize(n));
    }
    while m.is_multiple_of(3) {
        m /= 3;
    }
    if m == 1 {
        Ok(())
    } else {
        Err(Error::InvalidGridSize(n))
    }
}

/// Grid geometry shared by all fields of one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub bc: Bc,
}

impl Layout {
    pub fn new(n: usize, bc: Bc) -> Result<Self> {
        check_grid_size(n)?;
        Ok(Self { n, bc })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn shape(&self, f: Field) -> (usize, usize) {
        let n = self.n;
        match (self.bc, f.node_axes()) {
            (Bc::Periodic, _) => (n, n),
            (Bc::Dirichlet, (nx, ny)) => (if nx { n - 1 } else { n }, if ny { n - 1 } else { n }),
        }
    }

    pub fn len(&self, f: Field) -> usize {
        let (a, b) = self.shape(f);
        a * b
    }

    pub fn unknowns(&self) -> usize {
        Field::ALL.iter().map(|&f| self.len(f)).sum()
    }

    /// Storage index along one axis for a physical index, or `None` if the
    /// position is not an unknown. The second component flags a reflected
    /// ghost.
    fn axis_index(&self, k: isize, node: bool, closure: Closure) -> Option<(usize, bool)> {
        let n = self.n as isize;
        match self.bc {
            Bc::Periodic => Some((k.rem_euclid(n) as usize, false)),
            Bc::Dirichlet if node => (1..n).contains(&k).then(|| ((k - 1) as usize, false)),
            Bc::Dirichlet => {
                if (0..n).contains(&k) {
                    Some((k as usize, false))
                } else if closure != Closure::Zero && k == -1 {
                    Some((0, true))
                } else if closure != Closure::Zero && k == n {
                    Some((self.n - 1, true))
                } else {
                    None
                }
            }
        }
    }

    /// Storage position and sign through which physical index `(i, j)` of
    /// field `f` is read under the given closure; `None` reads as zero.
    pub fn lookup(
        &self,
        f: Field,
        i: isize,
        j: isize,
        closure: Closure,
    ) -> Option<((usize, usize), f64)> {
        let (nx, ny) = f.node_axes();
        let (x, gx) = self.axis_index(i, nx, closure)?;
        let (y, gy) = self.axis_index(j, ny, closure)?;
        // a corner ghost is reflected twice
        let odd = gx ^ gy && !(closure == Closure::Mirror && f == Field::P);
        Some(((x, y), if odd { -1.0 } else { 1.0 }))
    }

    /// Value of field `f` at physical index `(i, j)` under the given closure.
    pub fn value(&self, a: &Array2<f64>, f: Field, i: isize, j: isize, closure: Closure) -> f64 {
        self.lookup(f, i, j, closure)
            .map_or(0.0, |(idx, s)| s * a[idx])
    }

    /// Physical index of storage position `(x, y)`.
    pub fn physical(&self, f: Field, x: usize, y: usize) -> (isize, isize) {
        let (nx, ny) = f.node_axes();
        let shift = |node: bool| (self.bc == Bc::Dirichlet && node) as isize;
        (x as isize + shift(nx), y as isize + shift(ny))
    }

    /// Storage position of physical index `(i, j)` if it is an unknown.
    pub fn storage(&self, f: Field, i: isize, j: isize) -> Option<(usize, usize)> {
        let (nx, ny) = f.node_axes();
        let x = self.axis_index(i, nx, Closure::Zero)?.0;
        let y = self.axis_index(j, ny, Closure::Zero)?.0;
        Some((x, y))
    }

    /// `Σ s_κ h^p a(X + κ)` on every unknown of field `f`.
    pub fn apply_stencil(
        &self,
        st: &Stencil,
        a: &Array2<f64>,
        f: Field,
        closure: Closure,
    ) -> Array2<f64> {
        let scale = self.h().powi(st.h_power());
        let entries: Vec<_> = st.entries().collect();
        Array2::from_shape_fn(self.shape(f), |(x, y)| {
            let (i, j) = self.physical(f, x, y);
            let s: f64 = entries
                .iter()
                .map(|&((a1, a2), c)| {
                    c * self.value(a, f, i + a1 as isize, j + a2 as isize, closure)
                })
                .sum();
            s * scale
        })
    }
}

/// Velocity and pressure unknowns of one grid level.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredState {
    pub layout: Layout,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub p: Array2<f64>,
}

impl StaggeredState {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            u: Array2::zeros(layout.shape(Field::U)),
            v: Array2::zeros(layout.shape(Field::V)),
            p: Array2::zeros(layout.shape(Field::P)),
        }
    }

    pub fn from_fn(layout: Layout, mut f: impl FnMut(Field, isize, isize) -> f64) -> Self {
        let mut s = Self::zeros(layout);
        for field in Field::ALL {
            let a = s.field_mut(field);
            for ((x, y), val) in a.indexed_iter_mut() {
                let (i, j) = layout.physical(field, x, y);
                *val = f(field, i, j);
            }
        }
        s
    }

    pub fn field(&self, f: Field) -> &Array2<f64> {
        match f {
            Field::U => &self.u,
            Field::V => &self.v,
            Field::P => &self.p,
        }
    }

    pub fn field_mut(&mut self, f: Field) -> &mut Array2<f64> {
        match f {
            Field::U => &mut self.u,
            Field::V => &mut self.v,
            Field::P => &mut self.p,
        }
    }

    pub fn len(&self) -> usize {
        self.layout.unknowns()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened `(u, v, p)` in row-major storage order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.u
            .iter()
            .chain(self.v.iter())
            .chain(self.p.iter())
            .copied()
            .collect()
    }

    pub fn from_slice(layout: Layout, data: &[f64]) -> Result<Self> {
        if data.len() != layout.unknowns() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} unknowns, got {}",
                layout.unknowns(),
                data.len()
            )));
        }
        let (nu, nv) = (layout.len(Field::U), layout.len(Field::V));
        let mk = |f: Field, s: &[f64]| {
            Array2::from_shape_vec(layout.shape(f), s.to_vec()).expect("shape")
        };
        Ok(Self {
            layout,
            u: mk(Field::U, &data[..nu]),
            v: mk(Field::V, &data[nu..nu + nv]),
            p: mk(Field::P, &data[nu + nv..]),
        })
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::ShapeMismatch(format!(
                "layouts differ: {:?} vs {:?}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let d = |a: &Array2<f64>, b: &Array2<f64>| {
            a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>()
        };
        d(&self.u, &other.u) + d(&self.v, &other.v) + d(&self.p, &other.p)
    }

    /// Euclidean norm over all unknowns.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for f in Field::ALL {
            Zip::from(self.field_mut(f))
                .and(other.field(f))
                .for_each(|x, &y| *x += a * y);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for f in Field::ALL {
            self.field_mut(f).mapv_inplace(|x| a * x);
        }
    }

    pub fn is_finite(&self) -> bool {
        Field::ALL
            .iter()
            .all(|&f| self.field(f).iter().all(|x| x.is_finite()))
    }

    pub fn pressure_mean(&self) -> f64 {
        self.p.mean().unwrap_or(0.0)
    }

    /// Removes the constant pressure mode, plus the constant velocity modes
    /// under periodic boundaries.
    pub fn project_gauge(&mut self) {
        let fields: &[Field] = match self.layout.bc {
            Bc::Periodic => &Field::ALL,
            Bc::Dirichlet => &[Field::P],
        };
        for &f in fields {
            let a = self.field_mut(f);
            let m = a.mean().unwrap_or(0.0);
            a.mapv_inplace(|x| x - m);
        }
    }
}

impl Add for &StaggeredState {
    type Output = StaggeredState;

    fn add(self, rhs: Self) -> StaggeredState {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &StaggeredState {
    type Output = StaggeredState;

    fn sub(self, rhs: Self) -> StaggeredState {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&StaggeredState> for f64 {
    type Output = StaggeredState;

    fn mul(self, rhs: &StaggeredState) -> StaggeredState {
        let mut out = rhs.clone();
        out.scale(self);
        out
    }
}

/// Matrix-free saddle-point operator
/// `𝓛 = [[A, 0, B₁ᵀ], [0, A, B₂ᵀ], [B₁, B₂, 0]]` with `A = −Δ_h` and
/// `B = −div_h`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub layout: Layout,
    /// Wall closure of the mass actions `Q` and `Q_p`. Defaults to
    /// [`Closure::Mirror`]: legs beyond a wall see the negated velocity and the
    /// mirrored pressure.
    pub mass_closure: Closure,
    laplacian: Stencil,
    mass: Stencil,
    mass_p: Stencil,
}

pub fn build_system(n: usize, bc: Bc) -> Result<SaddleSystem> {
    SaddleSystem::new(n, bc)
}

impl SaddleSystem {
    pub fn new(n: usize, bc: Bc) -> Result<Self> {
        Ok(Self {
            layout: Layout::new(n, bc)?,
            mass_closure: Closure::Mirror,
            laplacian: stencil::laplacian_5pt(),
            mass: stencil::mass_q(),
            mass_p: stencil::mass_qp(),
        })
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn bc(&self) -> Bc {
        self.layout.bc
    }

    pub fn h(&self) -> f64 {
        self.layout.h()
    }

    pub fn zeros(&self) -> StaggeredState {
        StaggeredState::zeros(self.layout)
    }

    fn check(&self, s: &StaggeredState) -> Result<()> {
        if s.layout != self.layout {
            return Err(Error::ShapeMismatch(format!(
                "state on {:?} applied to system on {:?}",
                s.layout, self.layout
            )));
        }
        Ok(())
    }

    fn check_array(&self, a: &Array2<f64>, f: Field) -> Result<()> {
        if a.dim() != self.layout.shape(f) {
            return Err(Error::ShapeMismatch(format!(
                "{f:?} field of shape {:?}, expected {:?}",
                a.dim(),
                self.layout.shape(f)
            )));
        }
        Ok(())
    }

    /// `−Δ_h` on one velocity component.
    pub fn apply_a(&self, a: &Array2<f64>, f: Field) -> Array2<f64> {
        self.layout
            .apply_stencil(&self.laplacian, a, f, Closure::Reflect)
    }

    /// `B (u, v) = −div_h`, on cell centers.
    pub fn apply_b(&self, u: &Array2<f64>, v: &Array2<f64>) -> Array2<f64> {
        let l = &self.layout;
        let h = l.h();
        Array2::from_shape_fn(l.shape(Field::P), |(x, y)| {
            let (i, j) = (x as isize, y as isize);
            let du = l.value(u, Field::U, i + 1, j, Closure::Zero)
                - l.value(u, Field::U, i, j, Closure::Zero);
            let dv = l.value(v, Field::V, i, j + 1, Closure::Zero)
                - l.value(v, Field::V, i, j, Closure::Zero);
            -(du + dv) / h
        })
    }

    /// `Bᵀ p`, the discrete gradient on velocity points.
    pub fn apply_bt(&self, p: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let l = &self.layout;
        let h = l.h();
        let grad = |f: Field, di: isize, dj: isize| {
            Array2::from_shape_fn(l.shape(f), |(x, y)| {
                let (i, j) = l.physical(f, x, y);
                (l.value(p, Field::P, i, j, Closure::Zero)
                    - l.value(p, Field::P, i - di, j - dj, Closure::Zero))
                    / h
            })
        };
        (grad(Field::U, 1, 0), grad(Field::V, 0, 1))
    }

    /// Velocity mass action (same stencil for both components).
    pub fn apply_q(&self, a: &Array2<f64>, f: Field) -> Result<Array2<f64>> {
        self.check_array(a, f)?;
        Ok(self
            .layout
            .apply_stencil(&self.mass, a, f, self.mass_closure))
    }

    pub fn apply_qp(&self, p: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_array(p, Field::P)?;
        Ok(self
            .layout
            .apply_stencil(&self.mass_p, p, Field::P, self.mass_closure))
    }

    /// Positive five-point cell-centered Laplacian `A_p`, with homogeneous
    /// Neumann closure under Dirichlet walls (missing legs dropped).
    pub fn apply_ap(&self, p: &Array2<f64>) -> Array2<f64> {
        let l = &self.layout;
        let h2 = l.h() * l.h();
        Array2::from_shape_fn(l.shape(Field::P), |(x, y)| {
            let (i, j) = (x as isize, y as isize);
            let c = p[[x, y]];
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter_map(|&(a, b)| l.storage(Field::P, i + a, j + b))
                .map(|idx| c - p[idx])
                .sum::<f64>()
                / h2
        })
    }

    /// `𝓛 x`.
    pub fn apply(&self, s: &StaggeredState) -> StaggeredState {
        let (gu, gv) = self.apply_bt(&s.p);
        StaggeredState {
            layout: self.layout,
            u: self.apply_a(&s.u, Field::U) + gu,
            v: self.apply_a(&s.v, Field::V) + gv,
            p: self.apply_b(&s.u, &s.v),
        }
    }

    /// `b − 𝓛 x`.
    pub fn residual(&self, x: &StaggeredState, rhs: &StaggeredState) -> Result<StaggeredState> {
        self.check(x)?;
        self.check(rhs)?;
        let mut r = rhs.clone();
        r.axpy(-1.0, &self.apply(x));
        Ok(r)
    }

    /// Dense matrix of a linear map on states, column by column.
    pub fn assemble(&self, op: impl Fn(&StaggeredState) -> StaggeredState) -> DMatrix<f64> {
        let dim = self.layout.unknowns();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for k in 0..dim {
            e[k] = 1.0;
            let col = op(&StaggeredState::from_slice(self.layout, &e).expect("size")).to_vec();
            m.column_mut(k).copy_from_slice(&col);
            e[k] = 0.0;
        }
        m
    }

    pub fn assemble_operator(&self) -> DMatrix<f64> {
        self.assemble(|s| self.apply(s))
    }

    /// Orthonormal basis of the operator's null space: the constant pressure
    /// and, for periodic boundaries, the two constant velocity components.
    pub fn null_space(&self) -> Vec<StaggeredState> {
        let fields: &[Field] = match self.bc() {
            Bc::Periodic => &Field::ALL,
            Bc::Dirichlet => &[Field::P],
        };
        fields
            .iter()
            .map(|&f| {
                let mut s = self.zeros();
                let len = self.layout.len(f) as f64;
                s.field_mut(f).fill(1.0 / len.sqrt());
                s
            })
            .collect()
    }
}
