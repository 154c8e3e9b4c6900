//! Pointwise convexification over sampled candidate sets.
//!
//! Every operator here is a small linear program: minimize `Σ cⱼ vⱼ` over
//! candidate offsets `oⱼ` (plane coordinates or 3-D displacements) subject to
//! `Σ cⱼ = 1`, `Σ cⱼ oⱼ = 0`, `c ≥ 0`. A basic optimal solution has at most
//! `dim + 1` nonzero weights.
//!
//! Candidates form a square lattice of `samples_per_axis` points per axis on
//! `[−radius, radius]`. When the optimal support touches the outer boundary
//! the lattice is extended by nested rings at twice the radius (same number
//! of points per axis, so the ring is twice as coarse). The candidate set only
//! ever grows, so values never increase across retries.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::heisenberg::{plane_residual_right, Point, PlaneCoord, Side};
use crate::lp::Problem;

/// Weights at or below this are dropped from returned combinations.
pub const WEIGHT_EPS: f64 = 1e-12;

pub const DEFAULT_MAX_DOUBLINGS: u32 = 6;

/// Search window for minimizers: a lattice of `samples_per_axis` points per
/// axis on `[−radius, radius]`, centred on the query point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub radius: f64,
    pub samples_per_axis: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { radius: 4.0, samples_per_axis: 41 }
    }
}

impl WindowSpec {
    pub fn new(radius: f64, samples_per_axis: usize) -> Result<Self> {
        let w = WindowSpec { radius, samples_per_axis };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.samples_per_axis;
        if !(self.radius > 0.0 && self.radius.is_finite()) || n < 5 || n.is_multiple_of(2) {
            return Err(Error::InvalidWindow { radius: self.radius, samples: n });
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.samples_per_axis - 1) as f64
    }

    /// Axis coordinate of lattice index `i`; index `(n−1)/2` is exactly zero.
    #[inline]
    pub fn axis(&self, i: usize) -> f64 {
        let d = (self.samples_per_axis - 1) as f64;
        self.radius * ((2 * i) as f64 - d) / d
    }
}

/// What to do when the optimal support reaches the window boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth {
    /// Solve on the given lattice only.
    Fixed,
    /// Add up to this many doubling rings, then fail with `WindowTooSmall`.
    Doubling(u32),
    /// Add doubling rings until the radius reaches the cap, then accept.
    Capped(f64),
    /// Always add this many rings and keep the best combination. Finds
    /// minimizers that a local window cannot see.
    Probe(u32),
}

impl Default for Growth {
    fn default() -> Self {
        Growth::Doubling(DEFAULT_MAX_DOUBLINGS)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Plane(Vec<PlaneCoord>),
    Space(Vec<Point>),
}

impl Coords {
    pub fn len(&self) -> usize {
        match self {
            Coords::Plane(v) => v.len(),
            Coords::Space(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An optimal combination `Σ cᵢ u(pᵢ)` with `Σ cᵢ = 1`, `Σ cᵢ pᵢ = p`.
///
/// `coords` are plane coordinates for the plane operators and displacements
/// `pᵢ − p` for the 3-D operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexCombination {
    pub weights: Vec<f64>,
    pub coords: Coords,
    pub points: Vec<Point>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    /// Outer radius of the candidate set the optimum was found on.
    pub window_radius: f64,
}

impl ConvexCombination {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Euclidean barycenter `Σ cᵢ pᵢ`.
    pub fn barycenter(&self) -> Point {
        self.weights
            .iter()
            .zip(&self.points)
            .fold(Point::ORIGIN, |acc, (&c, q)| acc.add_scaled(c, q))
    }
}

struct LatticeSolution<const D: usize> {
    offsets: Vec<[f64; D]>,
    weights: Vec<f64>,
    costs: Vec<f64>,
    radius: f64,
}

/// Candidate offsets of one lattice layer; `hole` excludes the inner square.
fn layer<const D: usize>(w: &WindowSpec, hole: Option<f64>, out: &mut Vec<[f64; D]>) {
    let n = w.samples_per_axis;
    let total = n.pow(D as u32);
    for idx in 0..total {
        let mut o = [0.0; D];
        let mut rest = idx;
        for c in o.iter_mut() {
            *c = w.axis(rest % n);
            rest /= n;
        }
        if let Some(h) = hole {
            let m = o.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
            if m <= h * (1.0 + 1e-12) {
                continue;
            }
        }
        out.push(o);
    }
}

fn max_abs<const D: usize>(o: &[f64; D]) -> f64 {
    o.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)))
}

/// Minimizes `Σ cⱼ cost(oⱼ)` over barycentric combinations of lattice offsets
/// centred on zero. `WindowTooSmall` carries the origin; callers substitute
/// the query point.
fn solve_lattice<const D: usize, C>(w: &WindowSpec, growth: Growth, mut cost: C) -> Result<LatticeSolution<D>>
where
    C: FnMut(&[f64; D]) -> f64,
{
    w.validate()?;
    if let Growth::Capped(cap) = growth {
        if !cap.is_finite() {
            return Err(Error::InvalidArgument("growth cap must be finite"));
        }
    }
    let m = D + 1;
    let n = w.samples_per_axis;
    let mut offsets: Vec<[f64; D]> = Vec::new();
    layer(w, None, &mut offsets);
    let mut columns = Vec::with_capacity(offsets.len() * m);
    let mut costs = Vec::with_capacity(offsets.len());
    let push = |o: &[f64; D], columns: &mut Vec<f64>, costs: &mut Vec<f64>, cost: &mut C| -> Result<()> {
        let v = cost(o);
        if !v.is_finite() {
            return Err(Error::NonFinite("field value"));
        }
        columns.push(1.0);
        columns.extend_from_slice(o);
        costs.push(v);
        Ok(())
    };
    for o in &offsets {
        push(o, &mut columns, &mut costs, &mut cost)?;
    }
    // Singleton basis: the centre plus its positive neighbour on each axis.
    let half = (n - 1) / 2;
    let centre: usize = (0..D).map(|a| half * n.pow(a as u32)).sum();
    let mut basis: Vec<usize> = vec![centre];
    basis.extend((0..D).map(|a| centre + n.pow(a as u32)));
    if !costs[centre].is_finite() {
        return Err(Error::NonFinite("field value at the query point"));
    }
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;

    let mut radius = w.radius;
    let mut doublings = 0;
    let mut previous: Option<f64> = None;
    loop {
        let lp = Problem { rows: m, columns: &columns, costs: &costs, rhs: &rhs };
        let sol = lp.solve_from(&basis)?;
        basis = sol.basis.clone();
        let support = sol.support(WEIGHT_EPS);
        let touching = support.iter().any(|&(j, _)| max_abs(&offsets[j]) >= radius * (1.0 - 1e-12));
        let improved = previous.is_none_or(|v| sol.value < v - 1e-12 * (1.0 + libm::fabs(v)));
        let done = match growth {
            Growth::Fixed => true,
            Growth::Doubling(limit) => {
                if touching && improved && doublings >= limit {
                    return Err(Error::WindowTooSmall { point: Point::ORIGIN, radius });
                }
                !(touching && improved)
            }
            Growth::Capped(cap) => !(touching && improved) || radius >= cap,
            Growth::Probe(rings) => doublings >= rings,
        };
        if done {
            return Ok(LatticeSolution {
                offsets: support.iter().map(|&(j, _)| offsets[j]).collect(),
                weights: support.iter().map(|&(_, c)| c).collect(),
                costs: support.iter().map(|&(j, _)| costs[j]).collect(),
                radius,
            });
        }
        previous = Some(sol.value);
        let ring = WindowSpec { radius: 2.0 * radius, samples_per_axis: n };
        let start = offsets.len();
        layer(&ring, Some(radius), &mut offsets);
        for o in &offsets[start..] {
            push(o, &mut columns, &mut costs, &mut cost)?;
        }
        radius *= 2.0;
        doublings += 1;
    }
}

fn escaped(p: Point) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::WindowTooSmall { radius, .. } => Error::WindowTooSmall { point: p, radius },
        other => other,
    }
}

/// `v_p(a, b) = f(p·(a, b, 0))`.
pub fn restrict_to_left_plane<F: ScalarField + ?Sized>(f: &F, p: Point) -> impl Fn(PlaneCoord) -> f64 + '_ {
    restrict_to_plane(f, Side::Left, p)
}

/// `f` along the left or right horizontal plane through `p`.
pub fn restrict_to_plane<F: ScalarField + ?Sized>(f: &F, side: Side, p: Point) -> impl Fn(PlaneCoord) -> f64 + '_ {
    move |h| f.eval(side.plane_point(p, h))
}

/// Convexification over the horizontal plane through `p` on the given side.
pub fn plane_envelope_point<F: ScalarField + ?Sized>(
    f: &F,
    side: Side,
    p: Point,
    w: &WindowSpec,
    growth: Growth,
) -> Result<ConvexCombination> {
    if !p.is_finite() {
        return Err(Error::NonFinite("query point"));
    }
    let v = restrict_to_plane(f, side, p);
    let sol = solve_lattice::<2, _>(w, growth, |o| v(PlaneCoord::new(o[0], o[1]))).map_err(escaped(p))?;
    let coords: Vec<PlaneCoord> = sol.offsets.iter().map(|o| PlaneCoord::new(o[0], o[1])).collect();
    let points = coords.iter().map(|&h| side.plane_point(p, h)).collect();
    let value = sol.weights.iter().zip(&sol.costs).map(|(c, v)| c * v).sum();
    Ok(ConvexCombination {
        weights: sol.weights,
        coords: Coords::Plane(coords),
        points,
        value,
        penalty: None,
        window_radius: sol.radius,
    })
}

/// `S[u](p)` on the lattice window, growing it if the minimizer escapes.
pub fn s_point<F: ScalarField + ?Sized>(f: &F, p: Point, w: &WindowSpec) -> Result<ConvexCombination> {
    plane_envelope_point(f, Side::Left, p, w, Growth::default())
}

/// `S̃[u](p)`: the same problem over the right-invariant plane `{h·p}`.
pub fn s_tilde_point<F: ScalarField + ?Sized>(f: &F, p: Point, w: &WindowSpec) -> Result<ConvexCombination> {
    plane_envelope_point(f, Side::Right, p, w, Growth::default())
}

/// Convexification over 3-D displacements with a per-point penalty.
fn space_envelope_point<F, P>(f: &F, p: Point, w3: &WindowSpec, growth: Growth, penalty: P) -> Result<(ConvexCombination, f64)>
where
    F: ScalarField + ?Sized,
    P: Fn(Point) -> f64,
{
    if !p.is_finite() {
        return Err(Error::NonFinite("query point"));
    }
    let at = |o: &[f64; 3]| Point::new(p.x + o[0], p.y + o[1], p.z + o[2]);
    let sol = solve_lattice::<3, _>(w3, growth, |o| {
        let q = at(o);
        f.eval(q) + penalty(q)
    })
    .map_err(escaped(p))?;
    let points: Vec<Point> = sol.offsets.iter().map(at).collect();
    let mut value = 0.0;
    let mut pen = 0.0;
    for (c, q) in sol.weights.iter().zip(&points) {
        value += c * f.eval(*q);
        pen += c * penalty(*q);
    }
    let comb = ConvexCombination {
        weights: sol.weights,
        coords: Coords::Space(sol.offsets.iter().map(|o| Point::from(*o)).collect()),
        points,
        value: value + pen,
        penalty: None,
        window_radius: sol.radius,
    };
    Ok((comb, pen))
}

/// `S̃_ε[u](p)` with penalty `(1/ε) Σ cᵢ g̃ᵢ²` over a 3-D lattice around `p`.
///
/// The weighted sums `Σ cᵢ xᵢ`, `Σ cᵢ yᵢ`, `Σ cᵢ zᵢ` inside `g̃ᵢ` are the
/// coordinates of `p` whenever the barycentric constraint holds, so
/// `g̃ᵢ = plane_residual_right(p, pᵢ)` and the penalty is a per-point cost.
/// This keeps the problem linear in the weights.
pub fn s_tilde_eps_point<F: ScalarField + ?Sized>(f: &F, p: Point, eps: f64, w3: &WindowSpec) -> Result<ConvexCombination> {
    s_tilde_eps_point_with(f, p, eps, w3, Growth::default())
}

pub fn s_tilde_eps_point_with<F: ScalarField + ?Sized>(
    f: &F,
    p: Point,
    eps: f64,
    w3: &WindowSpec,
    growth: Growth,
) -> Result<ConvexCombination> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument("eps must be positive"));
    }
    let (mut comb, pen) = space_envelope_point(f, p, w3, growth, |q| {
        let g = plane_residual_right(p, q);
        g * g / eps
    })?;
    comb.penalty = Some(pen);
    Ok(comb)
}

/// `(1/ε) Σ cᵢ g̃ᵢ²` with `g̃ᵢ` built from the weighted sums of the
/// combination itself rather than from the query point.
pub fn penalty_from_weighted_sums(comb: &ConvexCombination, eps: f64) -> f64 {
    let bar = comb.barycenter();
    comb.weights
        .iter()
        .zip(&comb.points)
        .map(|(&c, q)| {
            let g = bar.y * q.x - bar.x * q.y - 2.0 * q.z + 2.0 * bar.z;
            c * g * g
        })
        .sum::<f64>()
        / eps
}

/// Euclidean pointwise convex envelope over ≤ 4 points in a 3-D window.
pub fn euclid_envelope_point<F: ScalarField + ?Sized>(f: &F, p: Point, w3: &WindowSpec) -> Result<ConvexCombination> {
    euclid_envelope_point_with(f, p, w3, Growth::default())
}

pub fn euclid_envelope_point_with<F: ScalarField + ?Sized>(
    f: &F,
    p: Point,
    w3: &WindowSpec,
    growth: Growth,
) -> Result<ConvexCombination> {
    space_envelope_point(f, p, w3, growth, |_| 0.0).map(|(c, _)| c)
}

/// Smallest dyadic radius `R` with `c1·(R − ρ) − c2 > f(p)`, where `ρ` is the
/// distance of `p` to the z-axis. Plane points at coordinate radius `R` lie
/// at Euclidean distance at least `R − ρ` from the origin, so the
/// certificate puts them above `f(p)`.
pub fn choose_window<F: ScalarField + ?Sized>(
    f: &F,
    p: Point,
    explicit_radius: Option<f64>,
    samples_per_axis: usize,
) -> Result<WindowSpec> {
    if let Some(r) = explicit_radius {
        return WindowSpec::new(r, samples_per_axis);
    }
    let cert = f.certificate().ok_or(Error::NoCertificate)?;
    if !(cert.c1 > 0.0) {
        return Err(Error::NoCertificate);
    }
    let fp = f.eval(p);
    if !fp.is_finite() {
        return Err(Error::NonFinite("field value at the query point"));
    }
    let rho = libm::hypot(p.x, p.y);
    let mut r = 0.25;
    while !(cert.c1 * (r - rho) - cert.c2 > fp) {
        r *= 2.0;
        if !r.is_finite() {
            return Err(Error::NoCertificate);
        }
    }
    WindowSpec::new(r, samples_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Coercivity, Constant, FnField};
    use crate::heisenberg::plane_residual_left;

    fn two_step(p: Point) -> f64 {
        let s = p.z * p.z - 1.0;
        s * s
    }

    fn check_invariants(c: &ConvexCombination, p: Point, side: Option<Side>) {
        assert!((c.weight_sum() - 1.0).abs() <= 1e-9);
        assert!(c.weights.iter().all(|&w| w >= 0.0));
        let bar = c.barycenter();
        assert!((bar.x - p.x).abs() <= 1e-9 && (bar.y - p.y).abs() <= 1e-9 && (bar.z - p.z).abs() <= 1e-9, "{bar:?} vs {p:?}");
        if let Some(side) = side {
            assert!(c.weights.len() <= 3);
            for q in &c.points {
                assert!(side.plane_residual(p, *q).abs() <= 1e-9);
            }
        } else {
            assert!(c.weights.len() <= 4);
        }
    }

    #[test]
    fn window_validation() {
        assert!(WindowSpec::new(1.0, 4).is_err());
        assert!(WindowSpec::new(1.0, 6).is_err());
        assert!(WindowSpec::new(0.0, 5).is_err());
        let w = WindowSpec::new(4.0, 41).unwrap();
        assert_eq!(w.axis(20), 0.0);
        assert_eq!(w.axis(0), -4.0);
        assert_eq!(w.axis(40), 4.0);
        assert!((w.spacing() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn plane_restriction_examples() {
        let f = FnField::new(two_step);
        let v = restrict_to_left_plane(&f, Point::new(0.0, 0.0, 0.5));
        assert_eq!(v(PlaneCoord::new(1.3, -0.7)), 0.5625);
        let v = restrict_to_left_plane(&f, Point::new(1.0, 0.0, 0.0));
        let b: f64 = 0.8;
        assert!((v(PlaneCoord::new(-0.4, b)) - ((b / 2.0).powi(2) - 1.0).powi(2)).abs() < 1e-15);
        let g = FnField::new(|p: Point| p.x * p.y + p.z);
        let p = Point::new(0.2, 0.3, -0.4);
        assert_eq!(restrict_to_left_plane(&g, p)(PlaneCoord::new(0.0, 0.0)), g.eval(p));
    }

    #[test]
    fn two_step_axis_point_is_fixed() {
        let f = FnField::new(two_step);
        let p = Point::new(0.0, 0.0, 0.5);
        let c = s_point(&f, p, &WindowSpec::default()).unwrap();
        assert_eq!(c.value, 0.5625);
        check_invariants(&c, p, Some(Side::Left));
    }

    #[test]
    fn two_step_off_axis_drops_to_zero() {
        let f = FnField::new(two_step);
        let p = Point::new(1.0, 0.0, 0.0);
        let c = s_point(&f, p, &WindowSpec::default()).unwrap();
        assert!(c.value.abs() < 1e-12, "{}", c.value);
        check_invariants(&c, p, Some(Side::Left));
        let c = s_tilde_point(&f, p, &WindowSpec::default()).unwrap();
        assert!(c.value.abs() < 1e-12);
        check_invariants(&c, p, Some(Side::Right));
    }

    #[test]
    fn one_step_inside_sphere() {
        let f = FnField::new(|p: Point| {
            let s = p.x * p.x + p.y * p.y + p.z * p.z - 1.0;
            s * s
        });
        let p = Point::new(0.0, 0.0, 0.5);
        let c = s_point(&f, p, &WindowSpec::default()).unwrap();
        assert!(c.value.abs() < 1e-12 || c.value <= 0.01, "{}", c.value);
        check_invariants(&c, p, Some(Side::Left));
    }

    #[test]
    fn right_plane_fixed_point() {
        let f = FnField::new(|p: Point| p.x * p.x * p.y * p.y + 2.0 * p.z * p.z);
        let w = WindowSpec::new(1.0, 21).unwrap();
        for p in [Point::new(0.3, -0.4, 0.2), Point::new(1.0, 1.0, -0.5), Point::ORIGIN] {
            let l = s_point(&f, p, &w).unwrap();
            let r = s_tilde_point(&f, p, &w).unwrap();
            assert!((l.value - f.eval(p)).abs() < 1e-12);
            assert!((r.value - f.eval(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn planes_coincide_at_origin() {
        let f = FnField::new(|p: Point| (p.x - 0.3) * (p.y + 0.1) * p.z + p.x.powi(4) + p.y.powi(4));
        let w = WindowSpec::new(1.0, 11).unwrap();
        let l = s_point(&f, Point::ORIGIN, &w).unwrap();
        let r = s_tilde_point(&f, Point::ORIGIN, &w).unwrap();
        assert_eq!(l.value, r.value);
    }

    #[test]
    fn value_never_exceeds_field() {
        let f = FnField::new(|p: Point| libm::sin(3.0 * p.x) + p.y * p.z + p.x * p.x);
        let w = WindowSpec::new(1.0, 9).unwrap();
        for p in [Point::new(0.5, 0.1, 0.2), Point::new(-1.0, 0.7, 0.0)] {
            let c = plane_envelope_point(&f, Side::Left, p, &w, Growth::Fixed).unwrap();
            assert!(c.value <= f.eval(p) + 1e-12);
            check_invariants(&c, p, Some(Side::Left));
            assert!(plane_residual_left(p, c.points[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn escaping_minimizer_is_reported() {
        // Unbounded below along the plane: the minimizer runs off to infinity.
        let f = FnField::new(|p: Point| -(p.x * p.x + p.y * p.y));
        let p = Point::new(0.1, 0.0, 0.0);
        match s_point(&f, p, &WindowSpec::new(1.0, 5).unwrap()) {
            Err(Error::WindowTooSmall { point, radius }) => {
                assert_eq!(point, p);
                assert_eq!(radius, 64.0);
            }
            other => panic!("{other:?}"),
        }
        let fixed = plane_envelope_point(&f, Side::Left, p, &WindowSpec::new(1.0, 5).unwrap(), Growth::Fixed).unwrap();
        assert!(fixed.value < f.eval(p));
    }

    #[test]
    fn ring_growth_reaches_far_minimizers() {
        // Minimum ring of radius 3 in the plane, starting window radius 1.
        let f = FnField::new(|p: Point| {
            let r = p.x * p.x + p.y * p.y;
            (r - 9.0) * (r - 9.0) / 81.0 + p.z * p.z
        });
        let c = s_point(&f, Point::ORIGIN, &WindowSpec::new(1.0, 7).unwrap()).unwrap();
        assert!(c.window_radius >= 4.0);
        assert!(c.value < 1e-3, "{}", c.value);
    }

    #[test]
    fn euclidean_examples() {
        let w3 = WindowSpec::new(1.5, 7).unwrap();
        let convex = FnField::new(|p: Point| p.x * p.x + p.y * p.y + p.z * p.z);
        let p = Point::new(0.5, -0.5, 0.0);
        let c = euclid_envelope_point(&convex, p, &w3).unwrap();
        assert!((c.value - convex.eval(p)).abs() < 1e-12);
        check_invariants(&c, p, None);
        let f = FnField::new(two_step);
        let c = euclid_envelope_point(&f, Point::ORIGIN, &w3).unwrap();
        assert!(c.value.abs() < 1e-12);
        check_invariants(&c, Point::ORIGIN, None);
    }

    #[test]
    fn penalty_matches_weighted_sum_formula() {
        let f = FnField::new(two_step);
        let w3 = WindowSpec::new(1.0, 9).unwrap();
        for (p, eps) in [(Point::new(1.0, 0.0, 0.0), 1e-1), (Point::new(0.3, -0.6, 0.25), 1e-2)] {
            let c = s_tilde_eps_point(&f, p, eps, &w3).unwrap();
            check_invariants(&c, p, None);
            let direct = penalty_from_weighted_sums(&c, eps);
            let pen = c.penalty.unwrap();
            assert!((direct - pen).abs() <= 1e-9 * (1.0 + pen), "{direct} vs {pen}");
            let plain: f64 = c.weights.iter().zip(&c.points).map(|(w, q)| w * f.eval(*q)).sum();
            assert!((c.value - plain - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn penalized_values_are_ordered_in_eps() {
        let f = FnField::new(two_step);
        let p = Point::new(0.0, 0.0, 0.5);
        let w3 = WindowSpec::new(1.0, 9).unwrap();
        let vals: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| s_tilde_eps_point(&f, p, e, &w3).unwrap().value).collect();
        assert!(vals[0] <= vals[1] + 1e-12 && vals[1] <= vals[2] + 1e-12, "{vals:?}");
        assert!(vals[2] <= f.eval(p) + 1e-12);
    }

    #[test]
    fn window_choice() {
        let one_step = FnField::new(|p: Point| {
            let s = p.x * p.x + p.y * p.y + p.z * p.z - 1.0;
            s * s
        })
        .with_certificate(Coercivity { c1: 24.0, c2: 39.0 });
        let w = choose_window(&one_step, Point::ORIGIN, None, 41).unwrap();
        assert!(w.radius.is_finite() && w.radius >= 1.0);
        assert_eq!(choose_window(&Constant(1.0), Point::ORIGIN, Some(2.0), 41).unwrap().radius, 2.0);
        let linear = FnField::new(|p: Point| p.euclidean_norm());
        assert_eq!(choose_window(&linear, Point::ORIGIN, None, 41), Err(Error::NoCertificate));
    }

    #[test]
    fn combination_serializes() {
        let f = FnField::new(two_step);
        let c = s_point(&f, Point::new(1.0, 0.0, 0.0), &WindowSpec::new(2.0, 9).unwrap()).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"weights\"") && s.contains("\"coords\"") && !s.contains("penalty"));
        let back: ConvexCombination = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
