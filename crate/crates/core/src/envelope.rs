//! Iterated convexification `Sⁿ[u]` on grids and checks of the result.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::convexify::{plane_envelope_point, Growth, WindowSpec};
use crate::differential::{grid_horizontal_derivatives, Sym2};
use crate::error::{Error, Result};
use crate::fields::{sample_to_grid_with, FillMode, GridBox, GridField, GridView, ScalarField};
use crate::heisenberg::{Point, Side};

/// Evaluates a node kernel for every index in `0..n`.
///
/// Implementations may run the kernel concurrently but must return values
/// in index order and, on failure, the error of the lowest failing index.
pub trait Executor: Sync {
    fn map_nodes(&self, n: usize, kernel: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_nodes(&self, n: usize, kernel: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        (0..n).map(kernel).collect()
    }
}

/// One application of `S` (or `S̃`) at every node of `g`.
///
/// The previous iterate is evaluated by trilinear interpolation; outside the
/// box it follows the grid's fill mode, with `source` backing
/// [`FillMode::Source`].
pub fn apply_s(
    g: &GridField,
    w: &WindowSpec,
    side: Side,
    source: Option<&dyn ScalarField>,
    exec: &dyn Executor,
) -> Result<GridField> {
    apply_s_with(g, w, side, source, Growth::default(), exec)
}

/// [`apply_s`] with an explicit window growth policy.
pub fn apply_s_with(
    g: &GridField,
    w: &WindowSpec,
    side: Side,
    source: Option<&dyn ScalarField>,
    growth: Growth,
    exec: &dyn Executor,
) -> Result<GridField> {
    w.validate()?;
    if g.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid value"));
    }
    let view = GridView::new(g, source);
    let kernel = |idx: usize| -> Result<f64> {
        let p = g.node_point(g.unravel(idx));
        Ok(plane_envelope_point(&view, side, p, w, growth)?.value)
    };
    let values = exec.map_nodes(g.len(), &kernel)?;
    GridField::new(g.bbox, g.resolution, values, g.fill_mode)
}

/// Window radius past which every plane point through a node lies outside the box.
pub fn box_span(bbox: &GridBox) -> f64 {
    2.0 * bbox.half_widths[0].max(bbox.half_widths[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopeConfig {
    #[serde(rename = "box")]
    pub bbox: GridBox,
    pub resolution: [usize; 3],
    pub window: WindowSpec,
    pub side: Side,
    pub tol: f64,
    pub max_iter: usize,
    /// Changes below this are attributed to lattice discretization when
    /// counting iterations.
    pub lattice_tol: f64,
    /// Outside-box evaluation of the iterates.
    pub fill: FillMode,
    /// Doubling rings searched on the first pass, where the fill is exact.
    pub probe_rings: u32,
}

pub const DEFAULT_PROBE_RINGS: u32 = 4;

/// Sup-norm accuracy expected from the default plane lattice and grid.
pub const LATTICE_TOLERANCE: f64 = 5e-2;

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            bbox: GridBox::cube(2.0),
            resolution: [41; 3],
            window: WindowSpec::default(),
            side: Side::Left,
            tol: 1e-3,
            max_iter: 50,
            lattice_tol: LATTICE_TOLERANCE,
            fill: FillMode::Source,
            probe_rings: DEFAULT_PROBE_RINGS,
        }
    }
}

impl EnvelopeConfig {
    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        self.window.validate()?;
        if self.resolution.iter().any(|&n| n < 3) {
            return Err(Error::Resolution(self.resolution));
        }
        if !(self.tol > 0.0) || !(self.lattice_tol >= 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument("tol must be positive and max_iter at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// Passes that moved some node by at least the lattice tolerance (at
    /// least 1). Later passes only redistribute discretization error.
    pub iterations: usize,
    /// `‖Sⁿ⁺¹ − Sⁿ‖_∞` for every completed pass.
    pub sup_deltas: Vec<f64>,
    /// Largest node-wise increase `Sⁿ⁺¹ − Sⁿ` seen over all passes.
    pub max_increase: f64,
    pub converged: bool,
    #[serde(rename = "final")]
    pub final_grid: GridField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle_residual: Option<f64>,
}

impl EnvelopeReport {
    pub fn passes(&self) -> usize {
        self.sup_deltas.len()
    }
}

/// Repeats [`apply_s`] from the sampled field until the sup node change
/// drops below `tol` or `max_iter` passes have run.
pub fn iterate_envelope<F: ScalarField + ?Sized>(f: &F, cfg: &EnvelopeConfig, exec: &dyn Executor) -> Result<EnvelopeReport> {
    iterate_envelope_observed(f, cfg, exec, &mut |_, _| {})
}

/// As [`iterate_envelope`], calling `observe(pass, grid)` after every pass.
pub fn iterate_envelope_observed<F: ScalarField + ?Sized>(
    f: &F,
    cfg: &EnvelopeConfig,
    exec: &dyn Executor,
    observe: &mut dyn FnMut(usize, &GridField),
) -> Result<EnvelopeReport> {
    cfg.validate()?;
    let mut current = sample_to_grid_with(f, cfg.bbox, cfg.resolution, cfg.fill)?;
    let source: Option<&dyn ScalarField> = match cfg.fill {
        FillMode::Source => Some(&f),
        _ => None,
    };
    let mut sup_deltas = Vec::new();
    let mut max_increase = f64::NEG_INFINITY;
    let mut converged = false;
    for pass in 1..=cfg.max_iter {
        // Outside the box only the first Source pass sees exact values; later
        // passes would grow the window into the fill rather than the iterate.
        let growth = if pass == 1 && cfg.fill == FillMode::Source {
            Growth::Probe(cfg.probe_rings)
        } else {
            Growth::Capped(box_span(&cfg.bbox).max(cfg.window.radius))
        };
        let next = apply_s_with(&current, &cfg.window, cfg.side, source, growth, exec)?;
        let mut delta = 0.0f64;
        for (a, b) in next.values.iter().zip(&current.values) {
            delta = delta.max(libm::fabs(a - b));
            max_increase = max_increase.max(a - b);
        }
        sup_deltas.push(delta);
        current = next;
        observe(pass, &current);
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    let moving = sup_deltas.iter().filter(|&&d| d >= cfg.lattice_tol).count();
    Ok(EnvelopeReport {
        iterations: moving.max(1),
        sup_deltas,
        max_increase,
        converged,
        final_grid: current,
        obstacle_residual: None,
    })
}

/// One-sided defects of the obstacle problem `max{−λ★[v], v − u} = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleReport {
    /// Worst `min(−λ★, env − f)` over screened nodes.
    pub residual: f64,
    /// `max(env − f)` over interior nodes; the envelope must stay below the obstacle.
    pub upper: f64,
    /// `max(−λ★)` over screened nodes.
    pub convexity: f64,
    /// `max(min(λ★, f − env))` over screened nodes: off the contact set the
    /// envelope must be degenerate.
    pub complementarity: f64,
    pub worst_point: Option<Point>,
    pub screened_nodes: usize,
    pub skipped_nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleConfig {
    pub side: Side,
    /// Stencil half-width in grid cells; the kink screen compares with twice this.
    pub cells: usize,
    pub interior_margin: usize,
    /// Relative Hessian change between the two stencils that marks a kink.
    pub kink_ratio: f64,
    /// Absolute allowance added to the kink screen.
    pub kink_floor: f64,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig { side: Side::Left, cells: 1, interior_margin: 2, kink_ratio: 0.5, kink_floor: 1e-2 }
    }
}

/// `true` when the Hessians at two stencil widths disagree by more than
/// `ratio` of their size plus `floor`.
pub fn is_kink(fine: &Sym2, coarse: &Sym2, ratio: f64, floor: f64) -> bool {
    fine.max_abs_diff(coarse) > ratio * fine.max_abs().max(coarse.max_abs()) + floor
}

/// Obstacle-problem residual of a computed envelope, from node-aligned
/// finite differences composed with the horizontal frame.
pub fn obstacle_residual<F: ScalarField + ?Sized>(env: &GridField, f: &F, cfg: &ObstacleConfig) -> ObstacleReport {
    let k = cfg.cells.max(1);
    let margin = cfg.interior_margin.max(2 * k);
    let mut out = ObstacleReport {
        residual: f64::NEG_INFINITY,
        upper: f64::NEG_INFINITY,
        convexity: f64::NEG_INFINITY,
        complementarity: f64::NEG_INFINITY,
        worst_point: None,
        screened_nodes: 0,
        skipped_nodes: 0,
    };
    for node in env.interior_nodes(margin) {
        let p = env.node_point(node);
        let gap = env.value_at(node) - f.eval(p);
        out.upper = out.upper.max(gap);
        let (Some((_, fine)), Some((_, coarse))) =
            (grid_horizontal_derivatives(env, cfg.side, node, k), grid_horizontal_derivatives(env, cfg.side, node, 2 * k))
        else {
            out.skipped_nodes += 1;
            continue;
        };
        if is_kink(&fine, &coarse, cfg.kink_ratio, cfg.kink_floor) {
            out.skipped_nodes += 1;
            continue;
        }
        out.screened_nodes += 1;
        let lam = fine.least_eigenvalue();
        let r = (-lam).min(gap);
        if r > out.residual {
            out.residual = r;
            out.worst_point = Some(p);
        }
        out.convexity = out.convexity.max(-lam);
        out.complementarity = out.complementarity.max(lam.min(-gap));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceError {
    pub sup_error: f64,
    pub mean_error: f64,
    pub worst_point: Point,
    pub nodes: usize,
}

/// Node-wise comparison against a reference field over nodes at least
/// `margin` cells inside the box.
pub fn reference_compare<F: ScalarField + ?Sized>(env: &GridField, reference: &F, margin: usize) -> ReferenceError {
    let mut out = ReferenceError { sup_error: 0.0, mean_error: 0.0, worst_point: Point::ORIGIN, nodes: 0 };
    let mut total = 0.0;
    for node in env.interior_nodes(margin) {
        let p = env.node_point(node);
        let e = libm::fabs(env.value_at(node) - reference.eval(p));
        total += e;
        out.nodes += 1;
        if e > out.sup_error {
            out.sup_error = e;
            out.worst_point = p;
        }
    }
    if out.nodes > 0 {
        out.mean_error = total / out.nodes as f64;
    }
    out
}
