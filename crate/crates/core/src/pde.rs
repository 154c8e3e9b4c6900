//! Residuals of second-order sub-elliptic equations.
//!
//! An equation is an [`Operator`]: a function of the point, the value, the
//! horizontal gradient and the symmetrized horizontal Hessian. Residuals of
//! analytic fields use finite differences along group lines; grid fields use
//! node-aligned stencils composed with the horizontal frame.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::differential::{grid_horizontal_derivatives, side_gradient, side_hessian, Sym2};
use crate::envelope::is_kink;
use crate::error::{Error, Result};
use crate::fields::{GridField, ScalarField};
use crate::heisenberg::{Point, Side};

/// `F(p, u, ∇_H u, (∇²_H u)★)`; solutions have residual zero and
/// supersolutions a nonnegative residual.
pub trait Operator: Send + Sync {
    fn residual(&self, p: Point, u: f64, grad: (f64, f64), hess: &Sym2) -> f64;
}

impl<F> Operator for F
where
    F: Fn(Point, f64, (f64, f64), &Sym2) -> f64 + Send + Sync,
{
    fn residual(&self, p: Point, u: f64, grad: (f64, f64), hess: &Sym2) -> f64 {
        self(p, u, grad, hess)
    }
}

/// Residual of an analytic field under an operator, using left-invariant
/// derivatives with the given finite-difference step.
pub fn operator_residual<O: Operator + ?Sized, U: ScalarField + ?Sized>(op: &O, u: &U, p: Point, step: f64) -> f64 {
    let g = side_gradient(u, Side::Left, p, step);
    let h = side_hessian(u, Side::Left, p, step);
    op.residual(p, u.eval(p), g, &h)
}

/// `Δ_H u = X²u + Y²u`.
pub fn horizontal_laplacian<U: ScalarField + ?Sized>(u: &U, p: Point, step: f64) -> f64 {
    side_hessian(u, Side::Left, p, step).trace()
}

#[inline]
fn dot(z: [f64; 2], g: (f64, f64)) -> f64 {
    z[0] * g.0 + z[1] * g.1
}

/// `u = α Δ_H u + β sup_{ζ∈𝒜} ⟨ζ, ∇_H u⟩ + f`, with `𝒜` given by its
/// extreme points.
#[derive(Clone)]
pub struct SemilinearSpec {
    pub alpha: f64,
    pub beta: f64,
    pub directions: Vec<[f64; 2]>,
    pub f: Arc<dyn ScalarField>,
    symmetric: bool,
}

impl fmt::Debug for SemilinearSpec {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("SemilinearSpec")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("directions", &self.directions)
            .field("symmetric", &self.symmetric)
            .finish_non_exhaustive()
    }
}

impl SemilinearSpec {
    pub fn new(alpha: f64, beta: f64, directions: Vec<[f64; 2]>, f: Arc<dyn ScalarField>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument("alpha and beta must be finite and nonnegative"));
        }
        if beta > 0.0 && directions.is_empty() {
            return Err(Error::InvalidArgument("directions must be nonempty when beta > 0"));
        }
        if directions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("direction"));
        }
        let symmetric = directions
            .iter()
            .all(|z| directions.iter().any(|w| w[0] == -z[0] && w[1] == -z[1]));
        Ok(SemilinearSpec { alpha, beta, directions, f, symmetric })
    }

    /// Whether `𝒜` is invariant under `ζ ↦ −ζ`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `sup_{ζ∈𝒜} ⟨ζ, g⟩` (zero for an empty set).
    pub fn support(&self, g: (f64, f64)) -> f64 {
        self.directions.iter().map(|&z| dot(z, g)).reduce(f64::max).unwrap_or(0.0)
    }
}

impl Operator for SemilinearSpec {
    fn residual(&self, p: Point, u: f64, grad: (f64, f64), hess: &Sym2) -> f64 {
        u - self.alpha * hess.trace() - self.beta * self.support(grad) - self.f.eval(p)
    }
}

pub fn semilinear_residual<U: ScalarField + ?Sized>(spec: &SemilinearSpec, u: &U, p: Point, step: f64) -> f64 {
    operator_residual(spec, u, p, step)
}

/// `u − Δ_H u + ⟨ζ, ∇_H u⟩ − f`.
pub fn linear_transport_residual<F, U>(zeta: [f64; 2], f: &F, u: &U, p: Point, step: f64) -> f64
where
    F: ScalarField + ?Sized,
    U: ScalarField + ?Sized,
{
    let g = side_gradient(u, Side::Left, p, step);
    u.eval(p) - horizontal_laplacian(u, p, step) + dot(zeta, g) - f.eval(p)
}

/// `u − Δ_H u + |⟨ζ, ∇_H u⟩| − f`.
pub fn absolute_transport_residual<F, U>(zeta: [f64; 2], f: &F, u: &U, p: Point, step: f64) -> f64
where
    F: ScalarField + ?Sized,
    U: ScalarField + ?Sized,
{
    let g = side_gradient(u, Side::Left, p, step);
    u.eval(p) - horizontal_laplacian(u, p, step) + libm::fabs(dot(zeta, g)) - f.eval(p)
}

/// `u + |∇_H u|² − f`.
pub fn gradient_square_residual<F, U>(f: &F, u: &U, p: Point, step: f64) -> f64
where
    F: ScalarField + ?Sized,
    U: ScalarField + ?Sized,
{
    let (a, b) = side_gradient(u, Side::Left, p, step);
    u.eval(p) + a * a + b * b - f.eval(p)
}

/// The equations that appear in the corpus.
#[derive(Clone, Debug)]
pub enum Equation {
    Semilinear(SemilinearSpec),
    /// `u − Δ_H u + ⟨ζ, ∇_H u⟩ = f`, or with `|⟨ζ, ∇_H u⟩|` when `absolute`.
    LinearTransport { zeta: [f64; 2], absolute: bool, f: Rhs },
    /// `u + |∇_H u|² = f`.
    GradientSquare { f: Rhs },
}

/// Right-hand side wrapper with a `Debug` impl.
#[derive(Clone)]
pub struct Rhs(pub Arc<dyn ScalarField>);

impl fmt::Debug for Rhs {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.write_str("Rhs(..)")
    }
}

impl Equation {
    pub fn rhs(&self) -> &Arc<dyn ScalarField> {
        match self {
            Equation::Semilinear(s) => &s.f,
            Equation::LinearTransport { f, .. } | Equation::GradientSquare { f } => &f.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Equation::Semilinear(_) => "semilinear",
            Equation::LinearTransport { absolute: false, .. } => "linear_transport",
            Equation::LinearTransport { absolute: true, .. } => "absolute_transport",
            Equation::GradientSquare { .. } => "gradient_square",
        }
    }

    pub fn residual_at<U: ScalarField + ?Sized>(&self, u: &U, p: Point, step: f64) -> f64 {
        operator_residual(self, u, p, step)
    }
}

impl Operator for Equation {
    fn residual(&self, p: Point, u: f64, grad: (f64, f64), hess: &Sym2) -> f64 {
        match self {
            Equation::Semilinear(s) => s.residual(p, u, grad, hess),
            Equation::LinearTransport { zeta, absolute, f } => {
                let t = dot(*zeta, grad);
                let t = if *absolute { libm::fabs(t) } else { t };
                u - hess.trace() + t - f.0.eval(p)
            }
            Equation::GradientSquare { f } => u + grad.0 * grad.0 + grad.1 * grad.1 - f.0.eval(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: Point,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckReport {
    pub checked: usize,
    /// Nodes rejected by the kink screen or too close to the boundary.
    pub skipped: usize,
    pub violations: Vec<Violation>,
    /// Smallest residual among checked nodes (`+∞` if none).
    pub min_residual: f64,
    pub tolerance: f64,
}

impl SpotcheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckConfig {
    /// Stencil half-width in cells; the kink screen compares with twice this.
    pub cells: usize,
    pub tol: f64,
    pub kink_ratio: f64,
    pub kink_floor: f64,
}

impl Default for SpotcheckConfig {
    fn default() -> Self {
        SpotcheckConfig { cells: 1, tol: 1e-4, kink_ratio: 0.5, kink_floor: 1e-2 }
    }
}

/// Checks `residual ≥ −tol` at the given grid nodes, skipping nodes where
/// the stencil Hessian is unstable between widths `cells` and `2·cells`.
pub fn supersolution_spotcheck<O: Operator + ?Sized>(
    op: &O,
    v: &GridField,
    nodes: &[[usize; 3]],
    cfg: &SpotcheckConfig,
) -> SpotcheckReport {
    let k = cfg.cells.max(1);
    let mut out = SpotcheckReport {
        checked: 0,
        skipped: 0,
        violations: Vec::new(),
        min_residual: f64::INFINITY,
        tolerance: cfg.tol,
    };
    for &node in nodes {
        let (Some((grad, fine)), Some((_, coarse))) =
            (grid_horizontal_derivatives(v, Side::Left, node, k), grid_horizontal_derivatives(v, Side::Left, node, 2 * k))
        else {
            out.skipped += 1;
            continue;
        };
        if is_kink(&fine, &coarse, cfg.kink_ratio, cfg.kink_floor) {
            out.skipped += 1;
            continue;
        }
        let p = v.node_point(node);
        let r = op.residual(p, v.value_at(node), grad, &fine);
        out.checked += 1;
        out.min_residual = out.min_residual.min(r);
        if r < -cfg.tol {
            out.violations.push(Violation { point: p, residual: r });
        }
    }
    out
}

/// `n` distinct-or-repeated interior nodes drawn uniformly with a fixed seed.
pub fn sample_interior_nodes(grid: &GridField, margin: usize, n: usize, seed: u64) -> Vec<[usize; 3]> {
    let r = grid.resolution;
    if (0..3).any(|a| r[a] <= 2 * margin) {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut node = [0; 3];
            for a in 0..3 {
                node[a] = rng.gen_range(margin..r[a] - margin);
            }
            node
        })
        .collect()
}
