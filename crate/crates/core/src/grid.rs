//! Uniform 1D and radial grids, sampled fields on them, and the
//! second-order finite-difference operators every residual is built from.
//!
//! Stencils:
//! - interior first derivative: `(f[i+1] - f[i-1]) / 2h`
//! - interior second derivative: `(f[i+1] - 2f[i] + f[i-1]) / h²`
//! - non-periodic edges: one-sided second-order forms
//!   `(-3f0 + 4f1 - f2) / 2h` and `(2f0 - 5f1 + 4f2 - f3) / h²`.

use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest node count any grid accepts.
pub const MIN_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Deserialize)]
struct Grid1DRaw {
    xmin: f64,
    xmax: f64,
    n: usize,
    boundary: Boundary,
}

/// Uniform grid on `[xmin, xmax]`.
///
/// Periodic grids hold `n` nodes `xmin + i*dx` with `dx = (xmax - xmin)/n`
/// (the node at `xmax` is the image of `xmin`). Dirichlet grids include
/// both end points, `dx = (xmax - xmin)/(n - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid1DRaw")]
pub struct Grid1D {
    xmin: f64,
    xmax: f64,
    n: usize,
    boundary: Boundary,
}

impl TryFrom<Grid1DRaw> for Grid1D {
    type Error = Error;

    fn try_from(raw: Grid1DRaw) -> Result<Self> {
        Grid1D::new(raw.xmin, raw.xmax, raw.n, raw.boundary)
    }
}

impl Grid1D {
    pub fn new(xmin: f64, xmax: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if xmax <= xmin {
            return Err(Error::InvalidGrid(format!("xmax {xmax} <= xmin {xmin}")));
        }
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        Ok(Grid1D {
            xmin,
            xmax,
            n,
            boundary,
        })
    }

    pub fn periodic(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        Self::new(xmin, xmax, n, Boundary::Periodic)
    }

    pub fn dirichlet(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        Self::new(xmin, xmax, n, Boundary::Dirichlet)
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn span(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn dx(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.span() / self.n as f64,
            Boundary::Dirichlet => self.span() / (self.n - 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Node index nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        Grid::Line(*self).nearest(x)
    }

    /// Same domain with half the spacing. Every node of `self` is a node of
    /// the result, at index `2i`.
    pub fn refined(&self) -> Grid1D {
        let n = match self.boundary {
            Boundary::Periodic => 2 * self.n,
            Boundary::Dirichlet => 2 * self.n - 1,
        };
        Grid1D { n, ..*self }
    }

    /// Rebuild a grid from node coordinates read back from a file.
    pub fn from_nodes(xs: &[f64], boundary: Boundary) -> Result<Self> {
        if xs.len() < MIN_NODES {
            return Err(Error::GridTooSmall {
                n: xs.len(),
                min: MIN_NODES,
            });
        }
        let n = xs.len();
        let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let tol = 1e-9 * xs[0].abs().max(xs[n - 1].abs()).max(1.0);
        for (i, &x) in xs.iter().enumerate() {
            if (x - (xs[0] + i as f64 * dx)).abs() > tol {
                return Err(Error::InvalidGrid(format!(
                    "node {i} at x = {x} breaks uniform spacing"
                )));
            }
        }
        let xmax = match boundary {
            Boundary::Periodic => xs[n - 1] + dx,
            Boundary::Dirichlet => xs[n - 1],
        };
        Grid1D::new(xs[0], xmax, n, boundary)
    }
}

#[derive(Deserialize)]
struct RadialGridRaw {
    rmin: f64,
    rmax: f64,
    n: usize,
}

/// Uniform grid in the radial coordinate of a spherically symmetric 3D
/// problem. The origin is excluded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialGridRaw")]
pub struct RadialGrid {
    rmin: f64,
    rmax: f64,
    n: usize,
}

impl TryFrom<RadialGridRaw> for RadialGrid {
    type Error = Error;

    fn try_from(raw: RadialGridRaw) -> Result<Self> {
        RadialGrid::new(raw.rmin, raw.rmax, raw.n)
    }
}

impl RadialGrid {
    pub fn new(rmin: f64, rmax: f64, n: usize) -> Result<Self> {
        if !(rmin.is_finite() && rmax.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if rmin <= 0.0 {
            return Err(Error::InvalidGrid(format!("rmin {rmin} must be > 0")));
        }
        if rmax <= rmin {
            return Err(Error::InvalidGrid(format!("rmax {rmax} <= rmin {rmin}")));
        }
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        Ok(RadialGrid { rmin, rmax, n })
    }

    pub fn rmin(&self) -> f64 {
        self.rmin
    }

    pub fn rmax(&self) -> f64 {
        self.rmax
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dr(&self) -> f64 {
        (self.rmax - self.rmin) / (self.n - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.rmin + i as f64 * self.dr()
    }

    pub fn refined(&self) -> RadialGrid {
        RadialGrid {
            n: 2 * self.n - 1,
            ..*self
        }
    }
}

/// Any grid a field can live on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Line(Grid1D),
    Radial(RadialGrid),
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::Line(g)
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}

impl Grid {
    pub fn n(&self) -> usize {
        match self {
            Grid::Line(g) => g.n(),
            Grid::Radial(g) => g.n(),
        }
    }

    pub fn dx(&self) -> f64 {
        match self {
            Grid::Line(g) => g.dx(),
            Grid::Radial(g) => g.dr(),
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        match self {
            Grid::Line(g) => g.x(i),
            Grid::Radial(g) => g.r(i),
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Grid::Line(g) if g.is_periodic())
    }

    pub fn line(&self) -> Result<&Grid1D> {
        match self {
            Grid::Line(g) => Ok(g),
            Grid::Radial(_) => Err(Error::WrongGrid { expected: "1D" }),
        }
    }

    pub fn refined(&self) -> Grid {
        match self {
            Grid::Line(g) => Grid::Line(g.refined()),
            Grid::Radial(g) => Grid::Radial(g.refined()),
        }
    }

    /// Quadrature weights: rectangle rule on periodic grids (the trapezoid
    /// rule for periodic integrands), trapezoid otherwise. Radial grids use
    /// the plain `dr` measure.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n();
        let h = self.dx();
        let mut w = vec![h; n];
        if !self.is_periodic() {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        w
    }

    /// Node index nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.x(0)) / self.dx()).round();
        (i.max(0.0) as usize).min(self.n() - 1)
    }
}

/// Scalar types a field can hold.
pub trait Sample:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn is_finite(self) -> bool;
    fn abs2(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// One sample per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> Field<T> {
    pub fn new(grid: impl Into<Grid>, values: Vec<T>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.n() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at node {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: impl Into<Grid>, f: impl Fn(f64) -> T) -> Result<Self> {
        let grid = grid.into();
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        Field {
            values: vec![T::zero(); grid.n()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Result<Field<U>> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Field<T> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * a).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(grid.n(), values.len());
        Field { grid, values }
    }

    pub fn same_grid<U>(&self, other: &Field<U>) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl ComplexField {
    pub fn density(&self) -> RealField {
        Field::from_parts_unchecked(self.grid, self.values.iter().map(|z| z.norm_sqr()).collect())
    }
}

pub(crate) fn first_derivative<T: Sample>(v: &[T], h: f64, periodic: bool) -> Vec<T> {
    let n = v.len();
    let c = 0.5 / h;
    let mut out = vec![T::zero(); n];
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) * c;
    }
    if periodic {
        out[0] = (v[1] - v[n - 1]) * c;
        out[n - 1] = (v[0] - v[n - 2]) * c;
    } else {
        out[0] = (v[1] * 4.0 - v[0] * 3.0 - v[2]) * c;
        out[n - 1] = (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * c;
    }
    out
}

pub(crate) fn second_derivative<T: Sample>(v: &[T], h: f64, periodic: bool) -> Vec<T> {
    let n = v.len();
    let c = 1.0 / (h * h);
    let mut out = vec![T::zero(); n];
    for i in 1..n - 1 {
        out[i] = (v[i + 1] + v[i - 1] - v[i] * 2.0) * c;
    }
    if periodic {
        out[0] = (v[1] + v[n - 1] - v[0] * 2.0) * c;
        out[n - 1] = (v[0] + v[n - 2] - v[n - 1] * 2.0) * c;
    } else {
        out[0] = (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) * c;
        out[n - 1] = (v[n - 1] * 2.0 - v[n - 2] * 5.0 + v[n - 3] * 4.0 - v[n - 4]) * c;
    }
    out
}

fn check_size(grid: &Grid) -> Result<()> {
    if grid.n() < MIN_NODES {
        return Err(Error::GridTooSmall {
            n: grid.n(),
            min: MIN_NODES,
        });
    }
    Ok(())
}

/// Centered second-order first derivative.
pub fn gradient<T: Sample>(f: &Field<T>) -> Result<Field<T>> {
    let g = f.grid.line()?;
    check_size(&f.grid)?;
    Ok(Field::from_parts_unchecked(
        f.grid,
        first_derivative(&f.values, g.dx(), g.is_periodic()),
    ))
}

/// Three-point second derivative.
pub fn laplacian<T: Sample>(f: &Field<T>) -> Result<Field<T>> {
    let g = f.grid.line()?;
    check_size(&f.grid)?;
    Ok(Field::from_parts_unchecked(
        f.grid,
        second_derivative(&f.values, g.dx(), g.is_periodic()),
    ))
}

/// Laplacian of a spherically symmetric function, `f'' + (2/r) f'`.
pub fn radial_laplacian_3d(f: &RealField) -> Result<RealField> {
    let g = match f.grid {
        Grid::Radial(g) => g,
        Grid::Line(_) => return Err(Error::WrongGrid { expected: "radial" }),
    };
    check_size(&f.grid)?;
    let d1 = first_derivative(&f.values, g.dr(), false);
    let d2 = second_derivative(&f.values, g.dr(), false);
    let values = (0..g.n())
        .map(|i| d2[i] + 2.0 * d1[i] / g.r(i))
        .collect();
    Ok(Field::from_parts_unchecked(f.grid, values))
}

/// `sqrt(∫|f|²)` by grid quadrature.
pub fn l2_norm<T: Sample>(f: &Field<T>) -> f64 {
    masked_l2(f.grid(), f.values(), None)
}

/// `∫ conj(f)·g` by grid quadrature.
pub fn inner_product<T: Sample>(f: &Field<T>, g: &Field<T>) -> Result<Complex64> {
    f.same_grid(g)?;
    let w = f.grid.weights();
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(&w)
        .map(|((&a, &b), &w)| a.to_complex().conj() * b.to_complex() * w)
        .sum())
}

pub fn l2_distance<T: Sample>(f: &Field<T>, g: &Field<T>) -> Result<f64> {
    f.same_grid(g)?;
    let diff: Vec<T> = f.values.iter().zip(&g.values).map(|(&a, &b)| a - b).collect();
    Ok(masked_l2(&f.grid, &diff, None))
}

/// Quadrature L2 norm of raw samples, optionally restricted to a mask.
pub fn masked_l2<T: Sample>(grid: &Grid, values: &[T], mask: Option<&[bool]>) -> f64 {
    let w = grid.weights();
    values
        .iter()
        .zip(&w)
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .map(|(_, (v, w))| v.abs2() * w)
        .sum::<f64>()
        .sqrt()
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_complex_csv<W: Write>(f: &ComplexField, mut w: W) -> std::io::Result<()> {
    writeln!(w, "x,re,im")?;
    for (i, z) in f.values.iter().enumerate() {
        writeln!(w, "{},{},{}", fmt_f64(f.grid.x(i)), fmt_f64(z.re), fmt_f64(z.im))?;
    }
    Ok(())
}

pub fn write_real_csv<W: Write>(f: &RealField, mut w: W) -> std::io::Result<()> {
    writeln!(w, "x,value")?;
    for (i, v) in f.values.iter().enumerate() {
        writeln!(w, "{},{}", fmt_f64(f.grid.x(i)), fmt_f64(*v))?;
    }
    Ok(())
}

/// Parse the `x,re,im` snapshot format. Line numbers in errors are 1-based
/// and count the header.
pub fn read_complex_csv<R: BufRead>(r: R, boundary: Boundary) -> Result<ComplexField> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "x,re,im" => {}
        Some((_, Ok(h))) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `x,re,im`, found `{}`", h.trim()),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty input".into(),
            })
        }
    }
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("`{s}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("`{s}` is not finite"),
                });
            }
            Ok(v)
        };
        xs.push(parse(cols[0])?);
        zs.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    let grid = Grid1D::from_nodes(&xs, boundary)?;
    Field::new(grid, zs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs_diff(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter()
            .enumerate()
            .map(|(i, v)| (v - b(i)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_spacing_conventions() {
        let p = Grid1D::periodic(0.0, 1.0, 10).unwrap();
        let d = Grid1D::dirichlet(0.0, 1.0, 11).unwrap();
        assert_eq!(p.dx(), 0.1);
        assert_eq!(d.dx(), 0.1);
        assert_eq!(d.x(10), 1.0);
        assert!(Grid1D::periodic(0.0, 1.0, 7).is_err());
        assert!(Grid1D::periodic(1.0, 1.0, 16).is_err());
        assert!(RadialGrid::new(0.0, 1.0, 16).is_err());
        assert_eq!(p.refined().x(2), p.x(1));
        assert_eq!(d.refined().x(2), d.x(1));
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = Grid1D::dirichlet(-1.0, 3.0, 41).unwrap();
        let c = RealField::from_fn(g, |_| 2.5).unwrap();
        assert!(gradient(&c).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let lin = RealField::from_fn(g, |x| 3.0 * x).unwrap();
        let d = gradient(&lin).unwrap();
        assert!(max_abs_diff(d.values(), |_| 3.0) < 1e-12);
    }

    #[test]
    fn gradient_and_laplacian_of_sine() {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 256).unwrap();
        let f = RealField::from_fn(g, f64::sin).unwrap();
        let d = gradient(&f).unwrap();
        assert!(max_abs_diff(d.values(), |i| g.x(i).cos()) < 1e-3);
        let l = laplacian(&f).unwrap();
        assert!(max_abs_diff(l.values(), |i| -g.x(i).sin()) < 1e-3);
    }

    #[test]
    fn laplacian_of_linear_and_quadratic() {
        let g = Grid1D::dirichlet(-2.0, 2.0, 33).unwrap();
        let lin = RealField::from_fn(g, |x| 1.5 * x - 0.25).unwrap();
        assert!(laplacian(&lin).unwrap().values().iter().all(|v| v.abs() < 1e-10));
        let q = RealField::from_fn(g, |x| x * x).unwrap();
        let l = laplacian(&q).unwrap();
        assert!(l.values()[1..32].iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn complex_fields_use_the_same_stencils() {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 256).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new(0.0, 2.0 * x).exp()).unwrap();
        let l = laplacian(&f).unwrap();
        let worst = l
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a + b * 4.0).norm())
            .fold(0.0, f64::max);
        assert!(worst < 2e-3);
    }

    #[test]
    fn radial_laplacian_of_inverse_r_and_r_squared() {
        let g = RadialGrid::new(0.5, 20.0, 2048).unwrap();
        let inv = RealField::from_fn(g, |r| 1.0 / r).unwrap();
        let l = radial_laplacian_3d(&inv).unwrap();
        let worst = l.values()[1..2047].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-4, "{worst}");
        let sq = RealField::from_fn(g, |r| r * r).unwrap();
        let l = radial_laplacian_3d(&sq).unwrap();
        assert!(l.values()[1..2047].iter().all(|v| (v - 6.0).abs() < 1e-6));
        let c = RealField::from_fn(g, |_| 4.0).unwrap();
        assert!(radial_laplacian_3d(&c).unwrap().values().iter().all(|v| v.abs() < 1e-9));
        assert!(laplacian(&c).is_err());
    }

    #[test]
    fn norms_and_distances() {
        let g = Grid1D::dirichlet(-12.0, 12.0, 2001).unwrap();
        let z = RealField::zeros(g);
        assert_eq!(l2_norm(&z), 0.0);
        // ground state (1/π)^{1/4} e^{-x²/2}
        let gs = RealField::from_fn(g, |x| PI.powf(-0.25) * (-0.5 * x * x).exp()).unwrap();
        assert!((l2_norm(&gs) - 1.0).abs() < 1e-8);
        assert_eq!(l2_distance(&gs, &gs).unwrap(), 0.0);
        let ip = inner_product(&gs, &gs).unwrap();
        assert!((ip.re - l2_norm(&gs).powi(2)).abs() < 1e-14);
        let other = Grid1D::dirichlet(-12.0, 12.0, 2000).unwrap();
        assert!(l2_distance(&gs, &RealField::zeros(other)).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let g = Grid1D::dirichlet(-1.0, 1.0, 9).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new(x.cos(), 0.1 * x)).unwrap();
        let mut buf = Vec::new();
        write_complex_csv(&f, &mut buf).unwrap();
        let back = read_complex_csv(buf.as_slice(), Boundary::Dirichlet).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());

        let bad = "x,re,im\n0,1,0\n0.1,1\n";
        match read_complex_csv(bad.as_bytes(), Boundary::Dirichlet) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
