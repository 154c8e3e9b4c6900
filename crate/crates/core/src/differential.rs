//! Horizontal derivatives and h-convexity tests.
//!
//! Derivatives of analytic fields are taken along group lines
//! `t ↦ f(p·(t e, 0))` (or `f((t e, 0)·p)` for the right-invariant frame),
//! which are exact directional derivatives of `X`, `Y`. Central differences
//! are Richardson-extrapolated from steps `s` and `s/2`, so restrictions that
//! are polynomials of degree ≤ 5 in `t` are differentiated exactly up to
//! rounding.
//!
//! Grid fields use node-aligned Euclidean stencils composed with the
//! horizontal frame, `(∇²_H u)★ = M ∇²u Mᵀ`, which never evaluates the
//! interpolant between nodes.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{GridBox, GridField, ScalarField};
use crate::heisenberg::{PlaneCoord, Point, Side};

pub const DEFAULT_STEP: f64 = 1e-2;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Symmetric 2×2 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let r = libm::hypot(half_diff, self.a12);
        (mean - r, mean + r)
    }

    #[inline]
    pub fn least_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        libm::fabs(self.a11 - other.a11)
            .max(libm::fabs(self.a12 - other.a12))
            .max(libm::fabs(self.a22 - other.a22))
    }

    pub fn max_abs(&self) -> f64 {
        libm::fabs(self.a11).max(libm::fabs(self.a12)).max(libm::fabs(self.a22))
    }
}

#[inline]
fn line<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, dir: (f64, f64), t: f64) -> f64 {
    f.eval(side.plane_point(p, PlaneCoord::new(t * dir.0, t * dir.1)))
}

fn first_derivative<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, dir: (f64, f64), step: f64) -> f64 {
    let d = |s: f64| (line(f, side, p, dir, s) - line(f, side, p, dir, -s)) / (2.0 * s);
    (4.0 * d(0.5 * step) - d(step)) / 3.0
}

fn second_derivative<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, dir: (f64, f64), step: f64) -> f64 {
    let centre = f.eval(p);
    let d = |s: f64| (line(f, side, p, dir, s) + line(f, side, p, dir, -s) - 2.0 * centre) / (s * s);
    (4.0 * d(0.5 * step) - d(step)) / 3.0
}

pub fn side_gradient<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, step: f64) -> (f64, f64) {
    (
        first_derivative(f, side, p, (1.0, 0.0), step),
        first_derivative(f, side, p, (0.0, 1.0), step),
    )
}

pub fn side_hessian<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, step: f64) -> Sym2 {
    let a11 = second_derivative(f, side, p, (1.0, 0.0), step);
    let a22 = second_derivative(f, side, p, (0.0, 1.0), step);
    // (X + Y)² = X² + Y² + XY + YX along the diagonal group line.
    let diag = second_derivative(f, side, p, (1.0, 1.0), step);
    Sym2::new(a11, 0.5 * (diag - a11 - a22), a22)
}

/// `(Xu, Yu)` at `p`.
pub fn horizontal_gradient<F: ScalarField + ?Sized>(f: &F, p: Point, step: f64) -> (f64, f64) {
    side_gradient(f, Side::Left, p, step)
}

/// `(∇²_H u)★` at `p`.
pub fn symmetrized_horizontal_hessian<F: ScalarField + ?Sized>(f: &F, p: Point, step: f64) -> Sym2 {
    side_hessian(f, Side::Left, p, step)
}

/// `(X̃u, Ỹu)` at `p`.
pub fn right_horizontal_gradient<F: ScalarField + ?Sized>(f: &F, p: Point, step: f64) -> (f64, f64) {
    side_gradient(f, Side::Right, p, step)
}

pub fn right_symmetrized_hessian<F: ScalarField + ?Sized>(f: &F, p: Point, step: f64) -> Sym2 {
    side_hessian(f, Side::Right, p, step)
}

pub fn least_horizontal_eigenvalue<F: ScalarField + ?Sized>(f: &F, p: Point, step: f64) -> f64 {
    symmetrized_horizontal_hessian(f, p, step).least_eigenvalue()
}

/// `f(p·h) + f(p·h⁻¹) − 2 f(p)`; nonnegative for h-convex `f`.
pub fn midpoint_check<F: ScalarField + ?Sized>(f: &F, p: Point, h: PlaneCoord) -> f64 {
    side_midpoint_check(f, Side::Left, p, h)
}

pub fn side_midpoint_check<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point, h: PlaneCoord) -> f64 {
    f.eval(side.plane_point(p, h)) + f.eval(side.plane_point(p, h.inverse())) - 2.0 * f.eval(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Offence {
    None,
    Midpoint,
    Eigenvalue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub verdict: Verdict,
    pub worst_point: Point,
    /// Most negative least eigenvalue or midpoint defect seen (0 if none negative).
    pub worst_value: f64,
    pub worst_kind: Offence,
    pub samples_checked: usize,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub h_radius: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub step: f64,
    pub seed: u64,
    pub side: Side,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            h_radius: 0.5,
            n_samples: 2000,
            tol: DEFAULT_TOLERANCE,
            step: DEFAULT_STEP,
            seed: 0x5eed,
            side: Side::Left,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Worst {
    value: f64,
    point: Point,
    kind: Offence,
}

impl Worst {
    fn none() -> Self {
        Worst { value: 0.0, point: Point::ORIGIN, kind: Offence::None }
    }

    /// Min by value; ties resolved by lexicographic point order.
    fn absorb(&mut self, value: f64, point: Point, kind: Offence) {
        if value >= 0.0 {
            return;
        }
        let better = value < self.value
            || (value == self.value
                && self.kind != Offence::None
                && point.to_array().partial_cmp(&self.point.to_array()) == Some(core::cmp::Ordering::Less));
        if better {
            *self = Worst { value, point, kind };
        }
    }
}

/// Sampled h-convexity test: midpoint inequality with random horizontal
/// `h` of length ≤ `h_radius`, and positivity of the least eigenvalue.
pub fn hconvexity_scan<F: ScalarField + ?Sized>(f: &F, region: GridBox, cfg: &ScanConfig) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = Worst::none();
    let n = cfg.n_samples.max(1);
    for _ in 0..n {
        let p = region.sample(&mut rng);
        let h = random_horizontal(&mut rng, cfg.h_radius);
        worst.absorb(side_midpoint_check(f, cfg.side, p, h), p, Offence::Midpoint);
        let lam = side_hessian(f, cfg.side, p, cfg.step).least_eigenvalue();
        worst.absorb(lam, p, Offence::Eigenvalue);
    }
    report(worst, n, cfg.tol)
}

fn report(worst: Worst, n: usize, tol: f64) -> ConvexityReport {
    ConvexityReport {
        verdict: if worst.value < -tol { Verdict::Fail } else { Verdict::Pass },
        worst_point: worst.point,
        worst_value: worst.value,
        worst_kind: worst.kind,
        samples_checked: n,
        tolerance: tol,
    }
}

fn random_horizontal<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> PlaneCoord {
    let r = radius * libm::sqrt(rng.gen_range(0.0..=1.0));
    let th = rng.gen_range(0.0..core::f64::consts::TAU);
    PlaneCoord::new(r * libm::cos(th), r * libm::sin(th))
}

/// Euclidean gradient and Hessian of a grid at a node from central
/// differences spanning `cells` grid cells, or `None` when the stencil
/// leaves the grid.
pub fn grid_euclidean_derivatives(grid: &GridField, node: [usize; 3], cells: usize) -> Option<([f64; 3], [[f64; 3]; 3])> {
    let r = grid.resolution;
    if (0..3).any(|a| node[a] < cells || node[a] + cells >= r[a]) {
        return None;
    }
    let h = grid.spacing();
    let k = cells as isize;
    let at = |d: [isize; 3]| {
        let i = (node[0] as isize + d[0]) as usize;
        let j = (node[1] as isize + d[1]) as usize;
        let l = (node[2] as isize + d[2]) as usize;
        grid.values[grid.index(i, j, l)]
    };
    let unit = |a: usize, s: isize| {
        let mut d = [0isize; 3];
        d[a] = s;
        d
    };
    let c = at([0, 0, 0]);
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for a in 0..3 {
        let s = h[a] * cells as f64;
        let (fp, fm) = (at(unit(a, k)), at(unit(a, -k)));
        grad[a] = (fp - fm) / (2.0 * s);
        hess[a][a] = (fp + fm - 2.0 * c) / (s * s);
        for b in (a + 1)..3 {
            let sb = h[b] * cells as f64;
            let mut d = [0isize; 3];
            let mut corner = |sa: isize, sbb: isize| {
                d = [0; 3];
                d[a] = sa * k;
                d[b] = sbb * k;
                at(d)
            };
            let v = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * s * sb);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    Some((grad, hess))
}

/// Horizontal gradient and symmetrized Hessian of a grid at a node.
pub fn grid_horizontal_derivatives(grid: &GridField, side: Side, node: [usize; 3], cells: usize) -> Option<((f64, f64), Sym2)> {
    let (g, h) = grid_euclidean_derivatives(grid, node, cells)?;
    let frame = side.frame(grid.node_point(node));
    let hg = frame.apply(g);
    let (a11, a12, a22) = frame.congruence(&h);
    Some(((hg[0], hg[1]), Sym2::new(a11, a12, a22)))
}

/// Node-wise eigenvalue scan of a grid over nodes at least `margin` cells
/// from the boundary.
pub fn grid_hconvexity_scan(grid: &GridField, side: Side, margin: usize, cells: usize, tol: f64) -> ConvexityReport {
    let mut worst = Worst::none();
    let mut n = 0;
    for node in grid.interior_nodes(margin.max(cells)) {
        if let Some((_, hess)) = grid_horizontal_derivatives(grid, side, node, cells) {
            n += 1;
            worst.absorb(hess.least_eigenvalue(), grid.node_point(node), Offence::Eigenvalue);
        }
    }
    report(worst, n, tol)
}
