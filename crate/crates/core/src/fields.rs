//! Scalar fields on ℍ: the evaluation trait, coercivity certificates,
//! grid-backed fields with trilinear interpolation and symmetry helpers.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::Point;

/// Linear-growth minorant `u(p) ≥ c1·|p|_E − c2` with `c1 > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub c1: f64,
    pub c2: f64,
}

impl Coercivity {
    #[inline]
    pub fn minorant(&self, p: Point) -> f64 {
        self.c1 * p.euclidean_norm() - self.c2
    }
}

/// An evaluation oracle `u: ℍ → ℝ`.
///
/// Implementations must be deterministic and safe to evaluate from many
/// threads at once.
pub trait ScalarField: Send + Sync {
    fn eval(&self, p: Point) -> f64;

    /// Declared coercivity certificate, if the field has one.
    fn certificate(&self) -> Option<Coercivity> {
        None
    }

    /// Declared global lower bound.
    fn lower_bound(&self) -> Option<f64> {
        None
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn eval(&self, p: Point) -> f64 {
        (**self).eval(p)
    }
    fn certificate(&self) -> Option<Coercivity> {
        (**self).certificate()
    }
    fn lower_bound(&self) -> Option<f64> {
        (**self).lower_bound()
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Box<T> {
    fn eval(&self, p: Point) -> f64 {
        (**self).eval(p)
    }
    fn certificate(&self) -> Option<Coercivity> {
        (**self).certificate()
    }
    fn lower_bound(&self) -> Option<f64> {
        (**self).lower_bound()
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn eval(&self, p: Point) -> f64 {
        (**self).eval(p)
    }
    fn certificate(&self) -> Option<Coercivity> {
        (**self).certificate()
    }
    fn lower_bound(&self) -> Option<f64> {
        (**self).lower_bound()
    }
}

/// Field backed by a closure, with optional declared bounds.
pub struct FnField<F> {
    f: F,
    certificate: Option<Coercivity>,
    lower_bound: Option<f64>,
}

impl<F: Fn(Point) -> f64 + Send + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, certificate: None, lower_bound: None }
    }

    pub fn with_certificate(mut self, c: Coercivity) -> Self {
        self.certificate = Some(c);
        self
    }

    pub fn with_lower_bound(mut self, m: f64) -> Self {
        self.lower_bound = Some(m);
        self
    }
}

impl<F: Fn(Point) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }
    fn certificate(&self) -> Option<Coercivity> {
        self.certificate
    }
    fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn eval(&self, _p: Point) -> f64 {
        self.0
    }
    fn lower_bound(&self) -> Option<f64> {
        Some(self.0)
    }
}

/// Polynomial `Σ c·xⁱ yʲ zᵏ` given as a coefficient table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Polynomial { terms }
    }

    pub fn from_table(table: &[(f64, u32, u32, u32)]) -> Self {
        Polynomial {
            terms: table
                .iter()
                .map(|&(coef, i, j, k)| Monomial { coef, powers: [i, j, k] })
                .collect(),
        }
    }
}

impl ScalarField for Polynomial {
    fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * powi(p.x, m.powers[0]) * powi(p.y, m.powers[1]) * powi(p.z, m.powers[2]))
            .sum()
    }
}

#[inline]
fn powi(v: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= v;
    }
    acc
}

/// `p ↦ f(−x, −y, z)`.
pub struct Reflected<F>(pub F);

impl<F: ScalarField> ScalarField for Reflected<F> {
    fn eval(&self, p: Point) -> f64 {
        self.0.eval(p.reflect_z_axis())
    }
    fn certificate(&self) -> Option<Coercivity> {
        // |p|_E is invariant under the reflection.
        self.0.certificate()
    }
    fn lower_bound(&self) -> Option<f64> {
        self.0.lower_bound()
    }
}

pub fn reflect_z_axis<F: ScalarField>(f: F) -> Reflected<F> {
    Reflected(f)
}

/// `p ↦ (f(p) + f(p'))/2`, the z-axis symmetrization of `f`.
pub struct Symmetrized<F>(pub F);

impl<F: ScalarField> ScalarField for Symmetrized<F> {
    fn eval(&self, p: Point) -> f64 {
        0.5 * (self.0.eval(p) + self.0.eval(p.reflect_z_axis()))
    }
    fn certificate(&self) -> Option<Coercivity> {
        self.0.certificate()
    }
    fn lower_bound(&self) -> Option<f64> {
        self.0.lower_bound()
    }
}

/// Axis-aligned box given by its center and per-axis half-widths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub center: Point,
    pub half_widths: [f64; 3],
}

impl GridBox {
    pub fn new(center: Point, half_widths: [f64; 3]) -> Self {
        GridBox { center, half_widths }
    }

    /// The cube `[−h, h]³`.
    pub fn cube(h: f64) -> Self {
        GridBox { center: Point::ORIGIN, half_widths: [h, h, h] }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::NonFinite("box center"));
        }
        if self.half_widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::DegenerateBox);
        }
        Ok(())
    }

    #[inline]
    pub fn lower(&self) -> [f64; 3] {
        let c = self.center.to_array();
        [c[0] - self.half_widths[0], c[1] - self.half_widths[1], c[2] - self.half_widths[2]]
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        let c = self.center.to_array();
        let q = p.to_array();
        (0..3).all(|i| libm::fabs(q[i] - c[i]) <= self.half_widths[i])
    }

    #[inline]
    pub fn clamp(&self, p: Point) -> Point {
        let c = self.center.to_array();
        let q = p.to_array();
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = q[i].clamp(c[i] - self.half_widths[i], c[i] + self.half_widths[i]);
        }
        Point::from(out)
    }

    /// Uniform random point of the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let c = self.center.to_array();
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = c[i] + self.half_widths[i] * rng.gen_range(-1.0..=1.0);
        }
        Point::from(out)
    }

    /// Box shrunk by `margin[i]` on each side of axis `i`.
    pub fn shrink(&self, margin: [f64; 3]) -> GridBox {
        let mut hw = self.half_widths;
        for i in 0..3 {
            hw[i] = (hw[i] - margin[i]).max(0.0);
        }
        GridBox { center: self.center, half_widths: hw }
    }
}

/// How a grid field is evaluated outside its box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FillMode {
    /// Value at the nearest point of the box.
    Clamp,
    /// The coercivity minorant `c1·|p|_E − c2`.
    Minorant { c1: f64, c2: f64 },
    /// A separately supplied source field (see [`GridView`]); falls back to
    /// clamping when no source is attached.
    Source,
}

impl FillMode {
    /// Minorant when a certificate exists, clamping otherwise.
    pub fn for_certificate(cert: Option<Coercivity>) -> FillMode {
        match cert {
            Some(c) => FillMode::Minorant { c1: c.c1, c2: c.c2 },
            None => FillMode::Clamp,
        }
    }
}

/// Values of a field on an axis-aligned box lattice, `x` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    #[serde(rename = "box")]
    pub bbox: GridBox,
    pub resolution: [usize; 3],
    pub fill_mode: FillMode,
    pub values: Vec<f64>,
}

/// Nodes closer than this (in cell units) to a lattice plane snap onto it.
const SNAP: f64 = 1e-9;

impl GridField {
    pub fn new(bbox: GridBox, resolution: [usize; 3], values: Vec<f64>, fill_mode: FillMode) -> Result<Self> {
        bbox.validate()?;
        if resolution.iter().any(|&n| n < 3) {
            return Err(Error::Resolution(resolution));
        }
        let len = resolution[0] * resolution[1] * resolution[2];
        if values.len() != len {
            return Err(Error::ValueCount { expected: len, found: values.len() });
        }
        Ok(GridField { bbox, resolution, fill_mode, values })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        let mut h = [0.0; 3];
        for i in 0..3 {
            h[i] = 2.0 * self.bbox.half_widths[i] / (self.resolution[i] - 1) as f64;
        }
        h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution[0] * (j + self.resolution[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let nx = self.resolution[0];
        let ny = self.resolution[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn node_point(&self, idx: [usize; 3]) -> Point {
        let c = self.bbox.center.to_array();
        let h = self.spacing();
        let mut out = [0.0; 3];
        for a in 0..3 {
            let half = (self.resolution[a] - 1) as f64 / 2.0;
            out[a] = c[a] + (idx[a] as f64 - half) * h[a];
        }
        Point::from(out)
    }

    #[inline]
    pub fn value_at(&self, idx: [usize; 3]) -> f64 {
        self.values[self.index(idx[0], idx[1], idx[2])]
    }

    /// Node indices whose distance to every box face is at least `margin` cells.
    pub fn interior_nodes(&self, margin: usize) -> impl Iterator<Item = [usize; 3]> + '_ {
        let r = self.resolution;
        (0..self.len()).map(move |i| self.unravel(i)).filter(move |n| {
            (0..3).all(|a| n[a] >= margin && n[a] + margin < r[a])
        })
    }

    /// Trilinear interpolation inside the box, [`FillMode`] outside.
    #[inline]
    pub fn interpolate(&self, p: Point) -> f64 {
        self.interpolate_with(p, None)
    }

    pub fn interpolate_with(&self, p: Point, source: Option<&dyn ScalarField>) -> f64 {
        if self.bbox.contains(p) {
            return self.trilinear(p);
        }
        match (self.fill_mode, source) {
            (FillMode::Minorant { c1, c2 }, _) => c1 * p.euclidean_norm() - c2,
            (FillMode::Source, Some(f)) => f.eval(p),
            _ => self.trilinear(self.bbox.clamp(p)),
        }
    }

    #[inline]
    fn trilinear(&self, p: Point) -> f64 {
        let lo = self.bbox.lower();
        let h = self.spacing();
        let q = p.to_array();
        let mut cell = [0usize; 3];
        let mut t = [0.0f64; 3];
        for a in 0..3 {
            let mut s = (q[a] - lo[a]) / h[a];
            let r = libm::round(s);
            if libm::fabs(s - r) < SNAP {
                s = r;
            }
            let last = (self.resolution[a] - 2) as f64;
            let i = libm::floor(s).clamp(0.0, last);
            cell[a] = i as usize;
            t[a] = (s - i).clamp(0.0, 1.0);
        }
        let nx = self.resolution[0];
        let nxy = nx * self.resolution[1];
        let base = cell[0] + nx * cell[1] + nxy * cell[2];
        let v = &self.values;
        let lerp = |a: f64, b: f64, w: f64| if w == 0.0 { a } else if w == 1.0 { b } else { a + w * (b - a) };
        let c00 = lerp(v[base], v[base + 1], t[0]);
        let c10 = lerp(v[base + nx], v[base + nx + 1], t[0]);
        let c01 = lerp(v[base + nxy], v[base + nxy + 1], t[0]);
        let c11 = lerp(v[base + nxy + nx], v[base + nxy + nx + 1], t[0]);
        let c0 = lerp(c00, c10, t[1]);
        let c1 = lerp(c01, c11, t[1]);
        lerp(c0, c1, t[2])
    }

    /// Maximum absolute node-wise difference to another grid of the same geometry.
    pub fn sup_distance(&self, other: &GridField) -> Result<f64> {
        if self.resolution != other.resolution || self.bbox != other.bbox {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max))
    }
}

impl ScalarField for GridField {
    fn eval(&self, p: Point) -> f64 {
        self.interpolate(p)
    }
    fn certificate(&self) -> Option<Coercivity> {
        match self.fill_mode {
            FillMode::Minorant { c1, c2 } => Some(Coercivity { c1, c2 }),
            _ => None,
        }
    }
    fn lower_bound(&self) -> Option<f64> {
        match self.fill_mode {
            FillMode::Clamp => Some(self.values.iter().copied().fold(f64::INFINITY, f64::min)),
            _ => None,
        }
    }
}

/// A grid evaluated with an attached source field for [`FillMode::Source`].
#[derive(Clone, Copy)]
pub struct GridView<'a> {
    pub grid: &'a GridField,
    pub source: Option<&'a dyn ScalarField>,
}

impl<'a> GridView<'a> {
    pub fn new(grid: &'a GridField, source: Option<&'a dyn ScalarField>) -> Self {
        GridView { grid, source }
    }
}

impl ScalarField for GridView<'_> {
    #[inline]
    fn eval(&self, p: Point) -> f64 {
        self.grid.interpolate_with(p, self.source)
    }
    fn certificate(&self) -> Option<Coercivity> {
        self.grid.certificate().or_else(|| self.source.and_then(|s| s.certificate()))
    }
    fn lower_bound(&self) -> Option<f64> {
        self.grid.lower_bound()
    }
}

#[inline]
pub fn evaluate<F: ScalarField + ?Sized>(f: &F, p: Point) -> f64 {
    f.eval(p)
}

/// Samples `f` at every node; fill mode follows the field's certificate.
pub fn sample_to_grid<F: ScalarField + ?Sized>(f: &F, bbox: GridBox, resolution: [usize; 3]) -> Result<GridField> {
    sample_to_grid_with(f, bbox, resolution, FillMode::for_certificate(f.certificate()))
}

pub fn sample_to_grid_with<F: ScalarField + ?Sized>(
    f: &F,
    bbox: GridBox,
    resolution: [usize; 3],
    fill_mode: FillMode,
) -> Result<GridField> {
    bbox.validate()?;
    if resolution.iter().any(|&n| n < 3) {
        return Err(Error::Resolution(resolution));
    }
    let mut grid = GridField::new(bbox, resolution, alloc::vec![0.0; resolution.iter().product()], fill_mode)?;
    for idx in 0..grid.len() {
        let p = grid.node_point(grid.unravel(idx));
        grid.values[idx] = f.eval(p);
    }
    Ok(grid)
}

/// Largest `|f(p) − f(p')|` over `n_samples` uniform points of `region`,
/// with `p' = (−x, −y, z)`.
pub fn symmetry_defect<F: ScalarField + ?Sized>(f: &F, region: GridBox, n_samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples.max(1))
        .map(|_| {
            let p = region.sample(&mut rng);
            libm::fabs(f.eval(p) - f.eval(p.reflect_z_axis()))
        })
        .fold(0.0, f64::max)
}

/// Checks a declared certificate at `n_samples` random points of `region`.
/// Returns the worst point on failure.
pub fn validate_certificate<F: ScalarField + ?Sized>(
    f: &F,
    cert: Coercivity,
    region: GridBox,
    n_samples: usize,
    seed: u64,
) -> Result<()> {
    if !(cert.c1 > 0.0) {
        return Err(Error::InvalidCertificate { point: Point::ORIGIN, slack: cert.c1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let p = region.sample(&mut rng);
        let slack = f.eval(p) - cert.minorant(p);
        if slack < -1e-12 * (1.0 + libm::fabs(f.eval(p))) {
            return Err(Error::InvalidCertificate { point: p, slack });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(p: Point) -> f64 {
        1.5 - 2.0 * p.x + 0.25 * p.y + 3.0 * p.z
    }

    #[test]
    fn constant_grid() {
        let g = sample_to_grid(&Constant(5.0), GridBox::cube(1.3), [3, 5, 7]).unwrap();
        assert!(g.values.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn z_field_slices() {
        let f = FnField::new(|p: Point| p.z);
        let g = sample_to_grid(&f, GridBox::cube(1.0), [3, 3, 3]).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                for i in 0..3 {
                    assert_eq!(g.value_at([i, j, k]), k as f64 - 1.0);
                }
            }
        }
    }

    #[test]
    fn rejects_small_resolution() {
        assert!(matches!(
            sample_to_grid(&Constant(1.0), GridBox::cube(1.0), [3, 2, 3]),
            Err(Error::Resolution(_))
        ));
        assert!(GridField::new(GridBox::cube(1.0), [3, 3, 3], alloc::vec![0.0; 26], FillMode::Clamp).is_err());
        assert!(matches!(
            sample_to_grid(&Constant(1.0), GridBox::new(Point::ORIGIN, [1.0, 0.0, 1.0]), [3, 3, 3]),
            Err(Error::DegenerateBox)
        ));
    }

    #[test]
    fn nodes_reproduce_values_exactly() {
        let f = FnField::new(|p: Point| libm::sin(3.0 * p.x) + p.y * p.z * p.z);
        let bbox = GridBox::new(Point::new(0.3, -0.2, 0.1), [1.1, 0.7, 2.3]);
        let g = sample_to_grid(&f, bbox, [9, 7, 11]).unwrap();
        for idx in 0..g.len() {
            let n = g.unravel(idx);
            assert_eq!(g.interpolate(g.node_point(n)), g.values[idx]);
        }
    }

    #[test]
    fn edge_midpoint_is_average() {
        let mut g = sample_to_grid(&Constant(0.0), GridBox::cube(1.0), [3, 3, 3]).unwrap();
        let i = g.index(2, 1, 1);
        g.values[i] = 2.0;
        assert_eq!(g.interpolate(Point::new(0.5, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn affine_reproduced_in_box() {
        let f = FnField::new(lin);
        let g = sample_to_grid(&f, GridBox::cube(2.0), [5, 5, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = g.bbox.sample(&mut rng);
            assert!((g.interpolate(p) - lin(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn fill_modes() {
        let f = FnField::new(|p: Point| p.x);
        let mut g = sample_to_grid(&f, GridBox::cube(1.0), [3, 3, 3]).unwrap();
        assert_eq!(g.fill_mode, FillMode::Clamp);
        assert_eq!(g.interpolate(Point::new(5.0, 0.0, 0.0)), 1.0);
        g.fill_mode = FillMode::Minorant { c1: 2.0, c2: 1.0 };
        assert_eq!(g.interpolate(Point::new(3.0, 0.0, 0.0)), 5.0);
        g.fill_mode = FillMode::Source;
        let src = FnField::new(|p: Point| 10.0 * p.x);
        assert_eq!(g.interpolate_with(Point::new(3.0, 0.0, 0.0), Some(&src)), 30.0);
        assert_eq!(g.interpolate(Point::new(3.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn reflection() {
        let f = FnField::new(|p: Point| p.x);
        let r = reflect_z_axis(&f);
        assert_eq!(r.eval(Point::new(2.0, 1.0, 0.0)), -2.0);
        let rr = reflect_z_axis(reflect_z_axis(&f));
        assert_eq!(rr.eval(Point::new(2.0, 1.0, 3.0)), 2.0);
        let z = FnField::new(|p: Point| p.z);
        assert_eq!(symmetry_defect(&z, GridBox::cube(2.0), 100, 1), 0.0);
        let avg = Symmetrized(FnField::new(|p: Point| p.x * p.x * p.x + p.y * p.z));
        assert!(symmetry_defect(&avg, GridBox::cube(2.0), 500, 2) < 1e-15);
    }

    #[test]
    fn polynomial_table() {
        let p = Polynomial::from_table(&[(1.0, 2, 0, 0), (-3.0, 0, 1, 1), (0.5, 0, 0, 0)]);
        assert_eq!(p.eval(Point::new(2.0, 1.0, -1.0)), 4.0 + 3.0 + 0.5);
    }

    #[test]
    fn certificate_checks() {
        let f = FnField::new(|p: Point| p.x * p.x + p.y * p.y + p.z * p.z);
        assert!(validate_certificate(&f, Coercivity { c1: 2.0, c2: 1.0 }, GridBox::cube(5.0), 1000, 7).is_ok());
        assert!(validate_certificate(&f, Coercivity { c1: 2.0, c2: 0.5 }, GridBox::cube(5.0), 5000, 7).is_err());
    }
}
