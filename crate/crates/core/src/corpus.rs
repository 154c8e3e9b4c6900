//! Worked examples with closed-form data, and the pipeline that checks
//! their expected facts.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexify::{euclid_envelope_point, plane_envelope_point, Growth, WindowSpec};
use crate::differential::{hconvexity_scan, side_hessian, ScanConfig, Sym2, Verdict, DEFAULT_STEP};
use crate::envelope::{
    apply_s, iterate_envelope_observed, obstacle_residual, reference_compare, EnvelopeConfig, EnvelopeReport, Executor,
    ObstacleConfig, LATTICE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::fields::{
    sample_to_grid_with, symmetry_defect, validate_certificate, Coercivity, FillMode, FnField, GridBox, GridField,
    ScalarField,
};
use crate::heisenberg::{Point, Side};
use crate::pde::{Equation, Rhs, SemilinearSpec};

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated in the published example.
    Published,
    /// Immediate from the definitions.
    Elementary,
    /// Obtained by an independent computation (symbolic or numerical).
    Computed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Field,
    Rhs,
}

/// A set of envelope grid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nodes {
    /// The node nearest to a point.
    Nearest(Point),
    /// Nodes on the z-axis with `|z| ≤ zmax`.
    Axis { zmax: f64 },
    /// Nodes off the z-axis with `|z| ≤ zmax`.
    OffAxis { zmax: f64 },
}

impl Nodes {
    fn contains(&self, g: &GridField, node: [usize; 3]) -> bool {
        let p = g.node_point(node);
        let tiny = 1e-9 * g.spacing()[0].min(g.spacing()[1]);
        let on_axis = libm::fabs(p.x) < tiny && libm::fabs(p.y) < tiny;
        match *self {
            Nodes::Nearest(q) => node == nearest_node(g, q),
            Nodes::Axis { zmax } => on_axis && libm::fabs(p.z) <= zmax + 1e-12,
            Nodes::OffAxis { zmax } => !on_axis && libm::fabs(p.z) <= zmax + 1e-12,
        }
    }
}

fn nearest_node(g: &GridField, q: Point) -> [usize; 3] {
    let lo = g.bbox.lower();
    let h = g.spacing();
    let c = q.to_array();
    let mut n = [0; 3];
    for a in 0..3 {
        let i = libm::round((c[a] - lo[a]) / h[a]);
        n[a] = i.clamp(0.0, (g.resolution[a] - 1) as f64) as usize;
    }
    n
}

/// What a fact asserts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expect {
    /// Symmetrized horizontal Hessian at a point.
    Hessian { of: Target, point: Point, value: Sym2, tol: f64 },
    /// Verdict of the sampled h-convexity scan.
    HConvex { of: Target, side: Side, region: GridBox, convex: bool },
    /// `|residual| ≤ tol` at random points of the region.
    Residual { region: GridBox, samples: usize, tol: f64 },
    /// Largest `|residual|` at random points; reported, never failing.
    ResidualObserved { region: GridBox, samples: usize },
    /// Declared coercivity certificate holds at random points.
    Certificate { region: GridBox, samples: usize },
    /// `lo ≤ S[u](p) ≤ hi` on the given window (with growth).
    SValue { side: Side, point: Point, window: WindowSpec, lo: f64, hi: f64 },
    /// `S[u](h_t) + S[u](h_t⁻¹) − 2 S[u](0) < 0` with `h_t = (t, t, 0)`.
    MidpointDefect { t: f64, window: WindowSpec },
    /// `|S[u] − S̃[u]| ≤ tol` at random points.
    LeftRight { region: GridBox, samples: usize, tol: f64 },
    /// `|Γ_E u(p) − u(p)| ≤ tol` at the given points.
    EuclidFixed { points: Vec<Point>, window: WindowSpec, tol: f64 },
    /// `|u(p) − u(−x, −y, z)| ≤ tol` at random points.
    Symmetric { region: GridBox, samples: usize, tol: f64 },
    /// One grid application of `S` moves no node by more than `tol`.
    FixedPoint { tol: f64 },
    /// Envelope iteration count in `[lo, hi]`.
    Iterations { lo: usize, hi: usize },
    /// After pass `pass`, every selected node lies in `[lo, hi]`.
    PassValues { pass: usize, nodes: Nodes, lo: f64, hi: f64 },
    /// Sup error of the final envelope against the reference.
    ReferenceError { tol: f64 },
    /// Obstacle residual of the final envelope.
    Obstacle { tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub name: String,
    pub provenance: Provenance,
    pub expect: Expect,
}

fn fact(name: &str, provenance: Provenance, expect: Expect) -> Fact {
    Fact { name: String::from(name), provenance, expect }
}

pub struct CorpusEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub field: Arc<dyn ScalarField>,
    pub reference: Option<Arc<dyn ScalarField>>,
    pub equation: Option<Equation>,
    /// Invariant under `(x, y, z) ↦ (−x, −y, z)`.
    pub symmetric: bool,
    pub facts: Vec<Fact>,
}

pub const IDS: [&str; 9] = [
    "one_step",
    "two_step",
    "failure",
    "no_symmetry",
    "no_symmetry2",
    "hconvex_sol",
    "euclid_convex_sol",
    "strong_concavity",
    "hconvex_right_example",
];

const DESCRIPTIONS: [&str; 9] = [
    "(x²+y²+z²−1)²; S[u] is already the envelope",
    "(z²−1)²; the envelope needs two applications of S",
    "coercive u whose S[u] is not h-convex",
    "solution of u − Δ_H u + ⟨(0,2), ∇_H u⟩ = f that is not h-convex",
    "the same u with |⟨(0,2), ∇_H u⟩| and a 6|y| term in f",
    "x²+y²+x²y²+2z², solution of u = 0.2 Δ_H u + f",
    "1.5(x²+y²+4)+x+2z², solution of u = Δ_H u + f",
    "−0.1(x²+y²)+2z, solution of u + |∇_H u|² = f",
    "x²y²+2z², h-convex and right h-convex",
];

/// `(id, description)` pairs in a fixed order.
pub fn corpus_list() -> Vec<(&'static str, &'static str)> {
    IDS.iter().copied().zip(DESCRIPTIONS.iter().copied()).collect()
}

pub mod formulas {
    //! Closed forms of the corpus fields.
    use crate::heisenberg::Point;

    #[inline]
    fn r2(p: Point) -> f64 {
        p.x * p.x + p.y * p.y + p.z * p.z
    }

    pub fn one_step(p: Point) -> f64 {
        let s = r2(p) - 1.0;
        s * s
    }

    pub fn one_step_envelope(p: Point) -> f64 {
        if r2(p) <= 1.0 {
            0.0
        } else {
            one_step(p)
        }
    }

    pub fn two_step(p: Point) -> f64 {
        let s = p.z * p.z - 1.0;
        s * s
    }

    pub fn two_step_first_pass(p: Point) -> f64 {
        if libm::fabs(p.z) > 1.0 || (p.x == 0.0 && p.y == 0.0) {
            two_step(p)
        } else {
            0.0
        }
    }

    pub fn two_step_envelope(p: Point) -> f64 {
        if libm::fabs(p.z) <= 1.0 {
            0.0
        } else {
            two_step(p)
        }
    }

    pub fn failure(p: Point) -> f64 {
        let w = (p.x - p.y) * p.z;
        let q = p.x * p.x + p.y * p.y;
        w + w * w + q * q + p.z * p.z
    }

    pub fn no_symmetry(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        2.0 * x * z + x * x * y + 0.25 * x * x * x * x - x * x + 1.5 * y * y
    }

    pub fn no_symmetry_rhs(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        2.0 * x * z + x * x * y + 0.25 * x * x * x * x + 1.5 * y * y + 6.0 * y - 1.0
    }

    pub fn no_symmetry2_rhs(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        2.0 * x * z + x * x * y + 0.25 * x * x * x * x + 1.5 * y * y + 6.0 * libm::fabs(y) - 1.0
    }

    pub const HCONVEX_ALPHA: f64 = 0.2;

    pub fn hconvex_sol(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        x * x + y * y + x * x * y * y + 2.0 * z * z
    }

    pub fn hconvex_sol_rhs(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        let a = HCONVEX_ALPHA;
        (1.0 - 3.0 * a) * (x * x + y * y) + x * x * y * y + 2.0 * z * z - 4.0 * a
    }

    pub const EUCLID_EPS: f64 = 0.5;

    pub fn euclid_convex_sol(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        (1.0 + EUCLID_EPS) * (x * x + y * y + 4.0) + x + 2.0 * z * z
    }

    pub fn euclid_convex_rhs(p: Point) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        x + 2.0 * z * z + EUCLID_EPS * (x * x + y * y)
    }

    pub const CONCAVITY_EPS: f64 = 0.1;

    pub fn strong_concavity(p: Point) -> f64 {
        -CONCAVITY_EPS * (p.x * p.x + p.y * p.y) + 2.0 * p.z
    }

    /// `u + |∇_H u|²` for the field above, recomputed from `u`.
    pub fn strong_concavity_rhs(p: Point) -> f64 {
        let e = CONCAVITY_EPS;
        (4.0 * e * e + 1.0 - e) * (p.x * p.x + p.y * p.y) + 2.0 * p.z
    }

    pub fn hconvex_right(p: Point) -> f64 {
        p.x * p.x * p.y * p.y + 2.0 * p.z * p.z
    }
}

type Formula = fn(Point) -> f64;

fn plain(f: Formula) -> Arc<dyn ScalarField> {
    Arc::new(FnField::new(f))
}

fn certified(f: Formula, c1: f64, c2: f64, lower: f64) -> Arc<dyn ScalarField> {
    Arc::new(FnField::new(f).with_certificate(Coercivity { c1, c2 }).with_lower_bound(lower))
}

/// Closed-form envelope value for the examples that have one.
pub fn reference_envelope_value(id: &str, p: Point) -> Result<f64> {
    match id {
        "one_step" => Ok(formulas::one_step_envelope(p)),
        "two_step" => Ok(formulas::two_step_envelope(p)),
        other => match IDS.iter().find(|&&i| i == other) {
            Some(&known) => Err(Error::NoReference(known)),
            None => Err(Error::UnknownCorpusId),
        },
    }
}

const FAILURE_T: f64 = 0.1;

/// Window for the failure witness: spacing 0.1 puts `(±t, ∓t)` on the lattice.
pub fn failure_window() -> WindowSpec {
    WindowSpec { radius: 0.4, samples_per_axis: 9 }
}

/// Half of `[−2, 2]³` with `±y ≥ 0.05`, where stencils do not straddle `y = 0`.
fn away_from_kink(sign: f64) -> GridBox {
    GridBox::new(Point::new(0.0, sign * 1.025, 0.0), [2.0, 0.975, 2.0])
}

pub fn entry(id: &str) -> Result<CorpusEntry> {
    use formulas as fm;
    use Provenance::*;
    let cube2 = GridBox::cube(2.0);
    let lt = LATTICE_TOLERANCE;
    let e = match id {
        "one_step" => CorpusEntry {
            id: "one_step",
            description: DESCRIPTIONS[0],
            field: certified(fm::one_step, 24.0, 39.0, 0.0),
            reference: Some(plain(fm::one_step_envelope)),
            equation: None,
            symmetric: true,
            facts: vec![
                fact("certificate", Computed, Expect::Certificate { region: GridBox::cube(4.0), samples: 2000 }),
                fact("not_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: false }),
                fact(
                    "s_inside_sphere",
                    Published,
                    Expect::SValue { side: Side::Left, point: Point::new(0.0, 0.0, 0.5), window: WindowSpec::default(), lo: 0.0, hi: lt },
                ),
                fact("iterations", Published, Expect::Iterations { lo: 1, hi: 2 }),
                fact("reference_error", Computed, Expect::ReferenceError { tol: lt }),
                fact("obstacle_residual", Computed, Expect::Obstacle { tol: lt }),
            ],
        },
        "two_step" => CorpusEntry {
            id: "two_step",
            description: DESCRIPTIONS[1],
            field: plain(fm::two_step),
            reference: Some(plain(fm::two_step_envelope)),
            equation: None,
            symmetric: true,
            facts: vec![
                fact("symmetric", Elementary, Expect::Symmetric { region: cube2, samples: 1000, tol: 0.0 }),
                fact(
                    "first_pass_axis",
                    Published,
                    Expect::PassValues { pass: 1, nodes: Nodes::Nearest(Point::new(0.0, 0.0, 0.5)), lo: 0.5625 - 1e-3, hi: 0.5625 + 1e-3 },
                ),
                fact("first_pass_axis_band", Published, Expect::PassValues { pass: 1, nodes: Nodes::Axis { zmax: 1.0 }, lo: -1e-9, hi: 1.0 + 1e-9 }),
                fact("first_pass_off_axis", Published, Expect::PassValues { pass: 1, nodes: Nodes::OffAxis { zmax: 1.0 }, lo: -1e-9, hi: lt }),
                fact("second_pass_axis", Published, Expect::PassValues { pass: 2, nodes: Nodes::Axis { zmax: 1.0 }, lo: -1e-9, hi: lt }),
                fact("iterations", Published, Expect::Iterations { lo: 2, hi: 2 }),
                fact("reference_error", Computed, Expect::ReferenceError { tol: lt }),
                fact("obstacle_residual", Computed, Expect::Obstacle { tol: lt }),
                fact("left_right", Published, Expect::LeftRight { region: GridBox::cube(1.5), samples: 200, tol: 2.0 * lt }),
            ],
        },
        "failure" => {
            let t = FAILURE_T;
            let t2 = t * t;
            let bound = -2.0 * t2 * t + 4.0 * t2 * t2 * t2 + 17.0 * t2 * t2;
            CorpusEntry {
                id: "failure",
                description: DESCRIPTIONS[2],
                field: certified(fm::failure, 1.0, 1.0, -0.25),
                reference: None,
                equation: None,
                symmetric: false,
                facts: vec![
                    fact("certificate", Computed, Expect::Certificate { region: GridBox::cube(4.0), samples: 2000 }),
                    fact(
                        "s_at_h_t",
                        Published,
                        Expect::SValue { side: Side::Left, point: Point::new(t, t, 0.0), window: failure_window(), lo: -0.25, hi: bound + 1e-4 },
                    ),
                    fact(
                        "s_at_h_t_inverse",
                        Published,
                        Expect::SValue { side: Side::Left, point: Point::new(-t, -t, 0.0), window: failure_window(), lo: 0.0, hi: 4.0 * t2 * t2 + 1e-12 },
                    ),
                    fact(
                        "s_at_origin",
                        Published,
                        Expect::SValue { side: Side::Left, point: Point::ORIGIN, window: failure_window(), lo: 0.0, hi: 0.0 },
                    ),
                    fact("midpoint_defect", Published, Expect::MidpointDefect { t, window: failure_window() }),
                    fact("midpoint_defect_smaller_t", Computed, Expect::MidpointDefect { t: 0.09, window: failure_window() }),
                ],
            }
        }
        "no_symmetry" => CorpusEntry {
            id: "no_symmetry",
            description: DESCRIPTIONS[3],
            field: plain(fm::no_symmetry),
            reference: None,
            equation: Some(Equation::LinearTransport { zeta: [0.0, 2.0], absolute: false, f: Rhs(plain(fm::no_symmetry_rhs)) }),
            symmetric: false,
            facts: vec![
                fact(
                    "hessian_u_origin",
                    Published,
                    Expect::Hessian { of: Target::Field, point: Point::ORIGIN, value: Sym2::new(-2.0, 0.0, 3.0), tol: 1e-6 },
                ),
                fact(
                    "hessian_f_origin",
                    Published,
                    Expect::Hessian { of: Target::Rhs, point: Point::ORIGIN, value: Sym2::new(0.0, 0.0, 3.0), tol: 1e-6 },
                ),
                fact("u_not_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: false }),
                fact("f_hconvex", Published, Expect::HConvex { of: Target::Rhs, side: Side::Left, region: cube2, convex: true }),
                fact("residual", Published, Expect::Residual { region: cube2, samples: 100, tol: 1e-4 }),
            ],
        },
        "no_symmetry2" => CorpusEntry {
            id: "no_symmetry2",
            description: DESCRIPTIONS[4],
            field: plain(fm::no_symmetry),
            reference: None,
            equation: Some(Equation::LinearTransport { zeta: [0.0, 2.0], absolute: true, f: Rhs(plain(fm::no_symmetry2_rhs)) }),
            symmetric: false,
            facts: vec![
                fact(
                    "hessian_u_origin",
                    Published,
                    Expect::Hessian { of: Target::Field, point: Point::ORIGIN, value: Sym2::new(-2.0, 0.0, 3.0), tol: 1e-6 },
                ),
                fact("f_hconvex_upper", Published, Expect::HConvex { of: Target::Rhs, side: Side::Left, region: away_from_kink(1.0), convex: true }),
                fact("f_hconvex_lower", Published, Expect::HConvex { of: Target::Rhs, side: Side::Left, region: away_from_kink(-1.0), convex: true }),
                fact(
                    "residual_upper_half",
                    Computed,
                    Expect::Residual { region: GridBox::new(Point::new(0.0, 1.0, 0.0), [2.0, 1.0, 2.0]), samples: 100, tol: 1e-4 },
                ),
                fact(
                    "residual_lower_half",
                    Computed,
                    Expect::ResidualObserved { region: GridBox::new(Point::new(0.0, -1.0, 0.0), [2.0, 1.0, 2.0]), samples: 100 },
                ),
            ],
        },
        "hconvex_sol" => {
            let spec = SemilinearSpec::new(fm::HCONVEX_ALPHA, 0.0, Vec::new(), certified(fm::hconvex_sol_rhs, 2.0, 6.0, -1.0))?;
            CorpusEntry {
                id: "hconvex_sol",
                description: DESCRIPTIONS[5],
                field: certified(fm::hconvex_sol, 4.0, 4.0, 0.0),
                reference: None,
                equation: Some(Equation::Semilinear(spec)),
                symmetric: true,
                facts: vec![
                    fact("certificate", Computed, Expect::Certificate { region: GridBox::cube(4.0), samples: 2000 }),
                    fact("residual", Published, Expect::Residual { region: cube2, samples: 100, tol: 1e-4 }),
                    fact("u_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: true }),
                    fact("f_hconvex", Published, Expect::HConvex { of: Target::Rhs, side: Side::Left, region: cube2, convex: true }),
                    fact("fixed_point", Published, Expect::FixedPoint { tol: lt }),
                ],
            }
        }
        "euclid_convex_sol" => CorpusEntry {
            id: "euclid_convex_sol",
            description: DESCRIPTIONS[6],
            field: certified(fm::euclid_convex_sol, 4.0, 0.0, 0.0),
            reference: None,
            equation: Some(Equation::Semilinear(SemilinearSpec::new(1.0, 0.0, Vec::new(), plain(fm::euclid_convex_rhs))?)),
            symmetric: false,
            facts: vec![
                fact("certificate", Computed, Expect::Certificate { region: GridBox::cube(4.0), samples: 2000 }),
                fact("residual", Published, Expect::Residual { region: cube2, samples: 100, tol: 1e-4 }),
                fact("u_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: true }),
                fact(
                    "euclid_fixed",
                    Elementary,
                    Expect::EuclidFixed {
                        points: vec![Point::ORIGIN, Point::new(0.5, -0.5, 0.25), Point::new(-1.0, 0.3, -0.6)],
                        window: WindowSpec { radius: 1.0, samples_per_axis: 9 },
                        tol: 1e-9,
                    },
                ),
            ],
        },
        "strong_concavity" => CorpusEntry {
            id: "strong_concavity",
            description: DESCRIPTIONS[7],
            field: plain(fm::strong_concavity),
            reference: None,
            equation: Some(Equation::GradientSquare { f: Rhs(plain(fm::strong_concavity_rhs)) }),
            symmetric: true,
            facts: vec![
                fact("residual", Computed, Expect::Residual { region: cube2, samples: 100, tol: 1e-4 }),
                fact("u_not_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: false }),
                fact(
                    "u_not_right_hconvex",
                    Published,
                    Expect::HConvex { of: Target::Field, side: Side::Right, region: cube2, convex: false },
                ),
                fact("f_hconvex", Published, Expect::HConvex { of: Target::Rhs, side: Side::Left, region: cube2, convex: true }),
                fact("f_right_hconvex", Published, Expect::HConvex { of: Target::Rhs, side: Side::Right, region: cube2, convex: true }),
            ],
        },
        "hconvex_right_example" => {
            let w = WindowSpec { radius: 1.0, samples_per_axis: 21 };
            let p = Point::new(0.5, -0.7, 0.3);
            let v = formulas::hconvex_right(p);
            CorpusEntry {
                id: "hconvex_right_example",
                description: DESCRIPTIONS[8],
                field: plain(fm::hconvex_right),
                reference: None,
                equation: None,
                symmetric: true,
                facts: vec![
                    fact("hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Left, region: cube2, convex: true }),
                    fact("right_hconvex", Published, Expect::HConvex { of: Target::Field, side: Side::Right, region: cube2, convex: true }),
                    fact("s_fixed", Published, Expect::SValue { side: Side::Left, point: p, window: w, lo: v - 1e-9, hi: v + 1e-9 }),
                    fact("s_tilde_fixed", Published, Expect::SValue { side: Side::Right, point: p, window: w, lo: v - 1e-9, hi: v + 1e-9 }),
                ],
            }
        }
        _ => return Err(Error::UnknownCorpusId),
    };
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReproduceConfig {
    pub envelope: EnvelopeConfig,
    pub obstacle: ObstacleConfig,
    pub scan: ScanConfig,
    pub step: f64,
    pub seed: u64,
    /// Nodes this many cells from the box faces are left out of the
    /// reference comparison.
    pub reference_margin: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            envelope: EnvelopeConfig::default(),
            obstacle: ObstacleConfig::default(),
            scan: ScanConfig::default(),
            step: DEFAULT_STEP,
            seed: 0x5eed,
            reference_margin: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactOutcome {
    pub name: String,
    pub provenance: Provenance,
    pub passed: bool,
    /// Reported only; never counts as a failure.
    pub observational: bool,
    pub observed: f64,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub iterations: usize,
    pub sup_deltas: Vec<f64>,
    pub converged: bool,
    pub max_increase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub id: String,
    pub passed: bool,
    pub facts: Vec<FactOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSummary>,
}

impl ReproduceReport {
    pub fn first_failure(&self) -> Option<&FactOutcome> {
        self.facts.iter().find(|f| !f.passed && !f.observational)
    }
}

struct EnvelopeRun {
    report: EnvelopeReport,
    passes: Vec<GridField>,
}

fn random_points(region: GridBox, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| region.sample(&mut rng)).collect()
}

/// Runs every expected fact of a corpus entry.
pub fn reproduce(id: &str, cfg: &ReproduceConfig, exec: &dyn Executor) -> Result<ReproduceReport> {
    let e = entry(id)?;
    let mut run: Option<EnvelopeRun> = None;
    let mut outcomes = Vec::with_capacity(e.facts.len());
    for f in &e.facts {
        let needs_envelope = matches!(
            f.expect,
            Expect::Iterations { .. } | Expect::PassValues { .. } | Expect::ReferenceError { .. } | Expect::Obstacle { .. }
        );
        if needs_envelope && run.is_none() {
            let mut passes = Vec::new();
            let report = iterate_envelope_observed(&*e.field, &cfg.envelope, exec, &mut |_, g| {
                if passes.len() < 2 {
                    passes.push(g.clone());
                }
            })?;
            run = Some(EnvelopeRun { report, passes });
        }
        outcomes.push(check(&e, f, cfg, exec, run.as_ref())?);
    }
    let passed = outcomes.iter().all(|o| o.passed || o.observational);
    Ok(ReproduceReport {
        id: String::from(e.id),
        passed,
        facts: outcomes,
        envelope: run.map(|r| EnvelopeSummary {
            iterations: r.report.iterations,
            sup_deltas: r.report.sup_deltas,
            converged: r.report.converged,
            max_increase: r.report.max_increase,
        }),
    })
}

fn target(e: &CorpusEntry, t: Target) -> Result<&dyn ScalarField> {
    match t {
        Target::Field => Ok(&*e.field),
        Target::Rhs => e.equation.as_ref().map(|q| &**q.rhs()).ok_or(Error::InvalidArgument("entry has no equation")),
    }
}

fn check(e: &CorpusEntry, f: &Fact, cfg: &ReproduceConfig, exec: &dyn Executor, run: Option<&EnvelopeRun>) -> Result<FactOutcome> {
    let mut observational = false;
    let field = &*e.field;
    let (observed, passed, expected): (f64, bool, String) = match &f.expect {
        Expect::Hessian { of, point, value, tol } => {
            let h = side_hessian(target(e, *of)?, Side::Left, *point, cfg.step);
            let d = h.max_abs_diff(value);
            (d, d <= *tol, format!("Hessian {:?} within {tol:e}", [[value.a11, value.a12], [value.a12, value.a22]]))
        }
        Expect::HConvex { of, side, region, convex } => {
            let scan = ScanConfig { side: *side, seed: cfg.seed, ..cfg.scan };
            let r = hconvexity_scan(target(e, *of)?, *region, &scan);
            let is_convex = r.verdict == Verdict::Pass;
            (r.worst_value, is_convex == *convex, format!("h-convex ({side:?}) = {convex}"))
        }
        Expect::Residual { region, samples, tol } => {
            let worst = worst_residual(e, *region, *samples, cfg)?;
            (worst, worst <= *tol, format!("|residual| <= {tol:e}"))
        }
        Expect::ResidualObserved { region, samples } => {
            observational = true;
            (worst_residual(e, *region, *samples, cfg)?, true, String::from("reported"))
        }
        Expect::Certificate { region, samples } => {
            let cert = field.certificate().ok_or(Error::NoCertificate)?;
            let ok = validate_certificate(field, cert, *region, *samples, cfg.seed).is_ok();
            (cert.c1, ok, format!("u >= {}|p| - {}", cert.c1, cert.c2))
        }
        Expect::SValue { side, point, window, lo, hi } => {
            let v = plane_envelope_point(field, *side, *point, window, Growth::default())?.value;
            (v, *lo <= v && v <= *hi, format!("value in [{lo:e}, {hi:e}]"))
        }
        Expect::MidpointDefect { t, window } => {
            let s = |p: Point| plane_envelope_point(field, Side::Left, p, window, Growth::default()).map(|c| c.value);
            let d = s(Point::new(*t, *t, 0.0))? + s(Point::new(-t, -t, 0.0))? - 2.0 * s(Point::ORIGIN)?;
            (d, d < 0.0, String::from("S(h_t) + S(h_t^-1) - 2 S(0) < 0"))
        }
        Expect::LeftRight { region, samples, tol } => {
            let w = cfg.envelope.window;
            let mut worst = 0.0f64;
            for p in random_points(*region, *samples, cfg.seed) {
                let l = plane_envelope_point(field, Side::Left, p, &w, Growth::default())?.value;
                let r = plane_envelope_point(field, Side::Right, p, &w, Growth::default())?.value;
                worst = worst.max(libm::fabs(l - r));
            }
            (worst, worst <= *tol, format!("|S - S~| <= {tol:e}"))
        }
        Expect::EuclidFixed { points, window, tol } => {
            let mut worst = 0.0f64;
            for p in points {
                worst = worst.max(libm::fabs(euclid_envelope_point(field, *p, window)?.value - field.eval(*p)));
            }
            (worst, worst <= *tol, format!("|Gamma_E u - u| <= {tol:e}"))
        }
        Expect::Symmetric { region, samples, tol } => {
            let d = symmetry_defect(field, *region, *samples, cfg.seed);
            (d, d <= *tol, format!("symmetry defect <= {tol:e}"))
        }
        Expect::FixedPoint { tol } => {
            let env = &cfg.envelope;
            let g = sample_to_grid_with(field, env.bbox, env.resolution, FillMode::Source)?;
            let s = apply_s(&g, &env.window, env.side, Some(field), exec)?;
            let d = s.sup_distance(&g)?;
            (d, d <= *tol, format!("sup |S[u] - u| <= {tol:e}"))
        }
        Expect::Iterations { lo, hi } => {
            let n = envelope_run(run)?.report.iterations;
            (n as f64, *lo <= n && n <= *hi, format!("iterations in [{lo}, {hi}]"))
        }
        Expect::PassValues { pass, nodes, lo, hi } => {
            let r = envelope_run(run)?;
            let g = r.passes.get(pass - 1).unwrap_or(&r.report.final_grid);
            let mut count = 0usize;
            let mut ok = true;
            for idx in 0..g.len() {
                if nodes.contains(g, g.unravel(idx)) {
                    count += 1;
                    ok &= *lo <= g.values[idx] && g.values[idx] <= *hi;
                }
            }
            let observed = pass_observed(g, nodes);
            (observed, ok && count > 0, format!("pass {pass} values in [{lo:e}, {hi:e}]"))
        }
        Expect::ReferenceError { tol } => {
            let r = envelope_run(run)?;
            let reference = e.reference.as_ref().ok_or(Error::NoReference(e.id))?;
            let err = reference_compare(&r.report.final_grid, &**reference, cfg.reference_margin);
            (err.sup_error, err.sup_error <= *tol, format!("sup error <= {tol:e}"))
        }
        Expect::Obstacle { tol } => {
            let r = envelope_run(run)?;
            let ob = obstacle_residual(&r.report.final_grid, field, &cfg.obstacle);
            (ob.residual, ob.residual <= *tol && ob.upper <= 1e-9, format!("obstacle residual <= {tol:e}"))
        }
    };
    Ok(FactOutcome { name: f.name.clone(), provenance: f.provenance, passed, observational, observed, expected })
}

fn worst_residual(e: &CorpusEntry, region: GridBox, samples: usize, cfg: &ReproduceConfig) -> Result<f64> {
    let eq = e.equation.as_ref().ok_or(Error::InvalidArgument("entry has no equation"))?;
    Ok(random_points(region, samples, cfg.seed)
        .into_iter()
        .map(|p| libm::fabs(eq.residual_at(&*e.field, p, cfg.step)))
        .fold(0.0, f64::max))
}

/// Value at a single node, otherwise the largest value over the set.
fn pass_observed(g: &GridField, nodes: &Nodes) -> f64 {
    match nodes {
        Nodes::Nearest(q) => g.value_at(nearest_node(g, *q)),
        _ => (0..g.len())
            .map(|i| g.unravel(i))
            .filter(|&n| nodes.contains(g, n))
            .map(|n| g.value_at(n))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

fn envelope_run(run: Option<&EnvelopeRun>) -> Result<&EnvelopeRun> {
    run.ok_or(Error::InvalidArgument("envelope was not computed"))
}

/// Boxed field for a corpus id.
pub fn field(id: &str) -> Result<Arc<dyn ScalarField>> {
    Ok(entry(id)?.field)
}
