//! Market partition for a given price vector.
//!
//! With `q = 0` the brand term is the same constant for everybody, so the
//! partition is the power diagram of the sites with additive weights `P_i`.
//! With `q = 1` (1D only) each weight `P_i − β S_i` depends on the areas
//! being solved for; the boundaries then satisfy a tridiagonal linear
//! system, re-solved while unstable or empty companies are removed.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    bisector, intersect_halflines, intersect_halfplanes, Clipped, ConvexPolygon, HalfPlane,
    Interval, Point, EPS_GEOM,
};
use crate::model::{BrandExponent, Dimension, PriceVector, Scenario};

/// The market cell of one company.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Empty,
    Interval(Interval),
    Polygon(ConvexPolygon),
}

impl Cell {
    pub fn measure(&self) -> f64 {
        match self {
            Cell::Empty => 0.0,
            Cell::Interval(iv) => iv.length(),
            Cell::Polygon(p) => p.area(),
        }
    }

    /// Length of the boundary (two points count as 2 in 1D).
    pub fn perimeter(&self) -> f64 {
        match self {
            Cell::Empty => 0.0,
            Cell::Interval(_) => 2.0,
            Cell::Polygon(p) => p.perimeter(),
        }
    }

    fn boundary_points(&self) -> Vec<Point> {
        match self {
            Cell::Empty => Vec::new(),
            Cell::Interval(iv) => vec![Point::on_line(iv.lo), Point::on_line(iv.hi)],
            Cell::Polygon(p) => p.vertices.clone(),
        }
    }

    pub fn contains(&self, x: Point, eps: f64) -> bool {
        match self {
            Cell::Empty => false,
            Cell::Interval(iv) => x.x >= iv.lo - eps && x.x <= iv.hi + eps,
            Cell::Polygon(p) => p.contains(x, eps),
        }
    }
}

/// Another company whose aggregate price ties with company `i` somewhere on
/// the closure of `i`'s cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: usize,
    /// Length of the shared border; 1 for a shared boundary point in 1D.
    pub border: f64,
    pub distance: f64,
    /// Zero-area company tying on the cell, or a survivor touching in a
    /// single point.
    pub potential_competitor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketPartition {
    pub cells: Vec<Cell>,
    pub areas: Vec<f64>,
    /// Per company; empty for non-survivors. Symmetric among survivors.
    pub neighbors: Vec<Vec<Neighbor>>,
    pub survivors: BTreeSet<usize>,
}

impl MarketPartition {
    pub fn is_survivor(&self, id: usize) -> bool {
        self.survivors.contains(&id)
    }

    /// Survivors sharing a border of positive length with `id`.
    pub fn actual_neighbors(&self, id: usize) -> impl Iterator<Item = &Neighbor> {
        self.neighbors[id]
            .iter()
            .filter(|n| !n.potential_competitor)
    }

    pub fn has_potential_competitor(&self, id: usize) -> bool {
        self.neighbors[id].iter().any(|n| n.potential_competitor)
    }
}

/// `Σ_j l_ij / (2 d_ij)` over neighbours with a border of positive length.
pub fn competition_intensity(neighbors: &[Neighbor]) -> f64 {
    neighbors
        .iter()
        .filter(|n| !n.potential_competitor)
        .map(|n| n.border / (2.0 * n.distance))
        .sum()
}

/// Wipe-out indicators for one company in a 1D market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WipeoutEntry {
    /// `2 d_i d_{i-1} / (d_i + d_{i-1})`; the company is wiped out for β at
    /// or above this value.
    pub threshold: f64,
    /// Stability margin with the current areas; for a survivor this is
    /// `(1 − β/2d_i − β/2d_{i−1}) S_i`.
    pub psi: f64,
    /// The same margin with the company hidden (neighbour areas re-solved
    /// without it); positive iff it can re-enter from zero area.
    pub psi_entry: f64,
    /// Boundary between the two neighbours while the company is hidden.
    pub entry_point: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WipeoutDiagnostics {
    pub entries: BTreeMap<usize, WipeoutEntry>,
}

/// Additive weight of company `j` in the power diagram.
fn weight(scn: &Scenario, prices: &PriceVector, areas: Option<&[f64]>, j: usize) -> f64 {
    match (scn.q, areas) {
        (BrandExponent::One, Some(a)) => prices.get(j) - scn.beta * a[j],
        _ => prices.get(j),
    }
}

fn planes_for(
    scn: &Scenario,
    weights: &[f64],
    i: usize,
    active: impl Iterator<Item = usize>,
) -> Vec<(usize, HalfPlane)> {
    let xi = scn.position(i);
    active
        .filter(|&j| j != i)
        .map(|j| {
            let plane = bisector(xi, weights[i], scn.position(j), weights[j])
                .expect("validated scenarios have distinct positions");
            (j, plane)
        })
        .collect()
}

/// Cell of `i` against every other company in `active`.
fn cell_against(scn: &Scenario, planes: &[(usize, HalfPlane)]) -> (Cell, bool) {
    let w = &scn.window;
    match scn.dimension {
        Dimension::One => {
            let hp: Vec<HalfPlane> = planes.iter().map(|(_, p)| *p).collect();
            match intersect_halflines(&hp, w.min.x, w.max.x) {
                Some(iv) if iv.length() > 0.0 => {
                    let touches = (iv.lo - w.min.x).abs() <= EPS_GEOM
                        || (iv.hi - w.max.x).abs() <= EPS_GEOM;
                    (Cell::Interval(iv), touches)
                }
                _ => (Cell::Empty, false),
            }
        }
        Dimension::Two => {
            let hp: Vec<HalfPlane> = planes.iter().map(|(_, p)| *p).collect();
            let clipped = intersect_halfplanes(&hp, w);
            let touches = clipped.touches_window();
            match clipped {
                Clipped::Empty => (Cell::Empty, false),
                c => (Cell::Polygon(c.into_polygon().unwrap()), touches),
            }
        }
    }
}

/// Companies whose bisector with `i` passes through the closure of `cell`,
/// with the length of boundary lying on that bisector.
fn contacts(scn: &Scenario, cell: &Cell, planes: &[(usize, HalfPlane)]) -> Vec<(usize, f64)> {
    let pts = cell.boundary_points();
    if pts.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &(j, plane) in planes {
        let on_line: Vec<bool> = pts
            .iter()
            .map(|&v| plane.signed_distance(v) >= -EPS_GEOM)
            .collect();
        if !on_line.iter().any(|&b| b) {
            continue;
        }
        let border = match (scn.dimension, cell) {
            (Dimension::Two, Cell::Polygon(_)) => {
                let n = pts.len();
                (0..n)
                    .filter(|&k| on_line[k] && on_line[(k + 1) % n])
                    .map(|k| pts[k].distance(pts[(k + 1) % n]))
                    .sum()
            }
            // one shared point; marked as such below
            _ => 1.0,
        };
        out.push((j, border));
    }
    out
}

fn build_neighbors(
    scn: &Scenario,
    i: usize,
    contacts: &[(usize, f64)],
    survivors: &BTreeSet<usize>,
) -> Vec<Neighbor> {
    let xi = scn.position(i);
    contacts
        .iter()
        .map(|&(j, border)| {
            let survives = survivors.contains(&j);
            let border = if survives { border } else { 0.0 };
            Neighbor {
                id: j,
                border,
                distance: xi.distance(scn.position(j)),
                potential_competitor: !survives || border <= EPS_GEOM,
            }
        })
        .collect()
}

/// Partition when the brand term is a uniform constant (`q = 0`), or for
/// `q = 1` with the areas in the brand term held fixed at `brand_areas`.
pub fn solve_areas_q0(scn: &Scenario, prices: &PriceVector) -> Result<MarketPartition> {
    solve_power_diagram(scn, prices, None)
}

fn solve_power_diagram(
    scn: &Scenario,
    prices: &PriceVector,
    brand_areas: Option<&[f64]>,
) -> Result<MarketPartition> {
    let n = scn.len();
    let weights: Vec<f64> = (0..n).map(|j| weight(scn, prices, brand_areas, j)).collect();
    let mut cells = Vec::with_capacity(n);
    let mut all_planes = Vec::with_capacity(n);
    let mut touching = Vec::with_capacity(n);
    for i in 0..n {
        let planes = planes_for(scn, &weights, i, 0..n);
        let (cell, touches) = cell_against(scn, &planes);
        cells.push(cell);
        all_planes.push(planes);
        touching.push(touches);
    }
    let eps_area = scn.eps_area();
    let areas: Vec<f64> = cells.iter().map(Cell::measure).collect();
    let survivors: BTreeSet<usize> = (0..n).filter(|&i| areas[i] > eps_area).collect();
    for &i in &survivors {
        if touching[i] && !scn.is_frozen(i) {
            return Err(Error::WindowTooSmall { company: i });
        }
    }
    let neighbors = (0..n)
        .map(|i| {
            if survivors.contains(&i) {
                let c = contacts(scn, &cells[i], &all_planes[i]);
                build_neighbors(scn, i, &c, &survivors)
            } else {
                Vec::new()
            }
        })
        .collect();
    let cells = cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| if survivors.contains(&i) { c } else { Cell::Empty })
        .collect();
    Ok(MarketPartition {
        cells,
        areas: (0..n)
            .map(|i| if survivors.contains(&i) { areas[i] } else { 0.0 })
            .collect(),
        neighbors,
        survivors,
    })
}

/// Area of a single company under `q = 0`, with the ids of companies sharing
/// a border of positive length. Cheaper than a full partition.
pub fn focal_area_q0(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<(f64, Vec<usize>)> {
    let n = scn.len();
    let weights: Vec<f64> = prices.as_slice().to_vec();
    let planes = planes_for(scn, &weights, i, 0..n);
    let (cell, touches) = cell_against(scn, &planes);
    let area = cell.measure();
    if area <= scn.eps_area() {
        return Ok((0.0, Vec::new()));
    }
    if touches && !scn.is_frozen(i) {
        return Err(Error::WindowTooSmall { company: i });
    }
    let mut sig: Vec<usize> = contacts(scn, &cell, &planes)
        .into_iter()
        .filter(|&(_, border)| border > EPS_GEOM)
        .map(|(j, _)| j)
        .collect();
    sig.sort_unstable();
    Ok((area, sig))
}

/// Area of `i`'s cell together with `γ = Σ_j l_ij / (2 d_ij)`, the exact
/// rate at which the area shrinks with `i`'s own price when `q = 0`. Each
/// cell edge is charged to the one bisector it lies on, so corner contacts
/// of vanishing length contribute vanishingly.
pub fn focal_area_slope_q0(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<(f64, f64)> {
    let n = scn.len();
    let weights: Vec<f64> = prices.as_slice().to_vec();
    let planes = planes_for(scn, &weights, i, 0..n);
    let (cell, touches) = cell_against(scn, &planes);
    let area = cell.measure();
    if area <= scn.eps_area() {
        return Ok((0.0, 0.0));
    }
    if touches && !scn.is_frozen(i) {
        return Err(Error::WindowTooSmall { company: i });
    }
    let xi = scn.position(i);
    let closest = |a: Point, b: Point| {
        planes
            .iter()
            .map(|(j, pl)| (*j, pl.signed_distance(a).abs() + pl.signed_distance(b).abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .filter(|&(_, off)| off <= 2.0 * EPS_GEOM)
            .map(|(j, _)| j)
    };
    let rate = |j: usize, len: f64| len / (2.0 * xi.distance(scn.position(j)));
    let gamma = match &cell {
        Cell::Polygon(poly) => poly
            .edges()
            .filter_map(|(a, b)| closest(a, b).map(|j| rate(j, a.distance(b))))
            .sum(),
        Cell::Interval(iv) => [iv.lo, iv.hi]
            .into_iter()
            .filter_map(|x| {
                let p = Point::on_line(x);
                closest(p, p).map(|j| rate(j, 1.0))
            })
            .sum(),
        Cell::Empty => 0.0,
    };
    Ok((area, gamma))
}

// ---------------------------------------------------------------------------
// q = 1, one dimension

/// Areas of `members` (sorted by position) from the boundary system
/// `2 d (b_k) − β (S_k − S_{k+1}) = P_b − P_a + x_b² − x_a²`.
fn boundary_areas(scn: &Scenario, prices: &PriceVector, members: &[usize]) -> Result<Vec<f64>> {
    let lo = scn.window.min.x;
    let hi = scn.window.max.x;
    let m = members.len();
    if m == 1 {
        return Ok(vec![hi - lo]);
    }
    let beta = scn.beta;
    let unknowns = m - 1;
    let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut rhs = DVector::<f64>::zeros(unknowns);
    for k in 0..unknowns {
        let (ia, ib) = (members[k], members[k + 1]);
        let (xa, xb) = (scn.position(ia).x, scn.position(ib).x);
        a[(k, k)] = 2.0 * (xb - xa) - 2.0 * beta;
        rhs[k] = prices.get(ib) - prices.get(ia) + xb * xb - xa * xa;
        if k > 0 {
            a[(k, k - 1)] = beta;
        } else {
            rhs[k] -= beta * lo;
        }
        if k + 1 < unknowns {
            a[(k, k + 1)] = beta;
        } else {
            rhs[k] -= beta * hi;
        }
    }
    let singular = || Error::SingularSystem {
        beta,
        threshold: min_threshold(scn, members),
    };
    let lu = a.lu();
    let b = lu.solve(&rhs).ok_or_else(singular)?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let mut areas = Vec::with_capacity(m);
    let mut prev = lo;
    for k in 0..m {
        let next = if k < unknowns { b[k] } else { hi };
        areas.push(next - prev);
        prev = next;
    }
    Ok(areas)
}

fn threshold(d_left: f64, d_right: f64) -> f64 {
    2.0 * d_left * d_right / (d_left + d_right)
}

fn min_threshold(scn: &Scenario, members: &[usize]) -> f64 {
    members
        .windows(3)
        .map(|w| {
            let x = |k: usize| scn.position(w[k]).x;
            threshold(x(1) - x(0), x(2) - x(1))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Runs the elimination loop and returns the surviving members (sorted by
/// position) with their areas.
fn settle_survivors(
    scn: &Scenario,
    prices: &PriceVector,
    excluded: &[usize],
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut members: Vec<usize> = scn
        .ids_by_position()
        .into_iter()
        .filter(|id| !excluded.contains(id))
        .collect();
    let n = members.len();
    let eps_area = scn.eps_area();
    for _ in 0..=n {
        if members.is_empty() {
            break;
        }
        let areas = boundary_areas(scn, prices, &members)?;
        let smallest = |candidates: &mut dyn Iterator<Item = usize>| {
            candidates.min_by(|&a, &b| {
                areas[a]
                    .total_cmp(&areas[b])
                    .then(members[a].cmp(&members[b]))
            })
        };
        let empty = smallest(&mut (0..members.len()).filter(|&k| areas[k] <= eps_area));
        if let Some(k) = empty {
            members.remove(k);
            continue;
        }
        let unstable = smallest(&mut (1..members.len().saturating_sub(1)).filter(|&k| {
            let x = |id: usize| scn.position(id).x;
            let dl = x(members[k]) - x(members[k - 1]);
            let dr = x(members[k + 1]) - x(members[k]);
            stability_coefficient(scn.beta, dl, dr) * areas[k] <= 0.0
        }));
        if let Some(k) = unstable {
            members.remove(k);
            continue;
        }
        return Ok((members, areas));
    }
    Err(Error::NoStableSurvivorSet { removals: n })
}

/// `1 − β/(2 d_i) − β/(2 d_{i−1})`.
pub fn stability_coefficient(beta: f64, d_left: f64, d_right: f64) -> f64 {
    1.0 - beta / (2.0 * d_left) - beta / (2.0 * d_right)
}

fn partition_from_members(
    scn: &Scenario,
    prices: &PriceVector,
    members: &[usize],
    member_areas: &[f64],
) -> Result<MarketPartition> {
    let n = scn.len();
    let mut areas = vec![0.0; n];
    let mut cells = vec![Cell::Empty; n];
    let mut lo = scn.window.min.x;
    for (k, &id) in members.iter().enumerate() {
        areas[id] = member_areas[k];
        let hi = if k + 1 == members.len() {
            scn.window.max.x
        } else {
            lo + member_areas[k]
        };
        cells[id] = Cell::Interval(Interval { lo, hi });
        lo = hi;
    }
    for &end in [members.first(), members.last()].iter().flatten() {
        if !scn.is_frozen(*end) {
            return Err(Error::WindowTooSmall { company: *end });
        }
    }
    let survivors: BTreeSet<usize> = members.iter().copied().collect();
    let tie_tol = tie_tolerance(scn);
    let agg = |j: usize, x: f64| {
        let d = x - scn.position(j).x;
        prices.get(j) + d * d - scn.beta * areas[j]
    };
    let mut neighbors = vec![Vec::new(); n];
    for (k, &i) in members.iter().enumerate() {
        let xi = scn.position(i);
        let mut list = Vec::new();
        for adj in [k.checked_sub(1), Some(k + 1)].into_iter().flatten() {
            if let Some(&j) = members.get(adj) {
                list.push(Neighbor {
                    id: j,
                    border: 1.0,
                    distance: xi.distance(scn.position(j)),
                    potential_competitor: false,
                });
            }
        }
        let Cell::Interval(iv) = cells[i] else { unreachable!() };
        for j in (0..n).filter(|j| !survivors.contains(j)) {
            let ties = [iv.lo, iv.hi]
                .iter()
                .any(|&x| (agg(j, x) - agg(i, x)).abs() <= tie_tol);
            if ties {
                list.push(Neighbor {
                    id: j,
                    border: 0.0,
                    distance: xi.distance(scn.position(j)),
                    potential_competitor: true,
                });
            }
        }
        neighbors[i] = list;
    }
    Ok(MarketPartition {
        cells,
        areas,
        neighbors,
        survivors,
    })
}

/// Tolerance for "equal aggregate price" comparisons.
pub fn tie_tolerance(scn: &Scenario) -> f64 {
    let extent = scn.window.width().max(scn.window.height());
    1e-9 * scn.price_upper.max(extent * extent).max(1.0)
}

/// `q = 1` partition in 1D without wipe-out diagnostics.
pub fn solve_partition_q1_1d(scn: &Scenario, prices: &PriceVector) -> Result<MarketPartition> {
    solve_q1_excluding(scn, prices, &[])
}

fn solve_q1_excluding(
    scn: &Scenario,
    prices: &PriceVector,
    excluded: &[usize],
) -> Result<MarketPartition> {
    let (members, areas) = settle_survivors(scn, prices, excluded)?;
    if members.is_empty() {
        return Err(Error::NoStableSurvivorSet { removals: scn.len() });
    }
    partition_from_members(scn, prices, &members, &areas)
}

/// Area of company `i` under `q = 1` in 1D and its surviving neighbours.
pub fn focal_area_q1_1d(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
) -> Result<(f64, Vec<usize>)> {
    let (members, areas) = settle_survivors(scn, prices, &[])?;
    let Some(k) = members.iter().position(|&m| m == i) else {
        return Ok((0.0, Vec::new()));
    };
    let mut sig: Vec<usize> = [k.checked_sub(1), Some(k + 1)]
        .into_iter()
        .flatten()
        .filter_map(|a| members.get(a).copied())
        .collect();
    sig.sort_unstable();
    Ok((areas[k], sig))
}

/// `q = 1` partition with wipe-out diagnostics for every focal company that
/// has surviving neighbours on both sides.
pub fn solve_areas_q1_1d(
    scn: &Scenario,
    prices: &PriceVector,
) -> Result<(MarketPartition, WipeoutDiagnostics)> {
    let part = solve_partition_q1_1d(scn, prices)?;
    let mut diag = WipeoutDiagnostics::default();
    for i in scn.focal_ids() {
        match compute_wipeout_diagnostics(scn, prices, &part, i) {
            Ok(entry) => {
                diag.entries.insert(i, entry);
            }
            Err(Error::BoundaryCompany { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((part, diag))
}

/// Partition for whatever brand exponent the scenario uses.
pub fn solve_areas(scn: &Scenario, prices: &PriceVector) -> Result<MarketPartition> {
    match scn.q {
        BrandExponent::Zero => solve_areas_q0(scn, prices),
        BrandExponent::One => solve_partition_q1_1d(scn, prices),
    }
}

/// Area of one company and the signature of its positive-border neighbours.
pub fn focal_area(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<(f64, Vec<usize>)> {
    match scn.q {
        BrandExponent::Zero => focal_area_q0(scn, prices, i),
        BrandExponent::One => focal_area_q1_1d(scn, prices, i),
    }
}

fn side_neighbors(scn: &Scenario, part: &MarketPartition, i: usize) -> Result<(usize, usize)> {
    let xi = scn.position(i).x;
    let mut left: Option<usize> = None;
    let mut right: Option<usize> = None;
    for &j in part.survivors.iter().filter(|&&j| j != i) {
        let xj = scn.position(j).x;
        if xj < xi && left.is_none_or(|l| xj > scn.position(l).x) {
            left = Some(j);
        }
        if xj > xi && right.is_none_or(|r| xj < scn.position(r).x) {
            right = Some(j);
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Error::BoundaryCompany { company: i }),
    }
}

/// Stability margin of `i` given the weights of the neighbours around it.
fn psi_between(
    scn: &Scenario,
    prices: &PriceVector,
    part: &MarketPartition,
    i: usize,
    left: usize,
    right: usize,
) -> f64 {
    let xi = scn.position(i).x;
    let brand = |j: usize| match scn.q {
        BrandExponent::Zero => scn.beta,
        BrandExponent::One => scn.beta * part.areas[j],
    };
    // i's own brand term is kept on the area side; with q = 0 it is β
    let own = prices.get(i)
        - match scn.q {
            BrandExponent::Zero => scn.beta,
            BrandExponent::One => 0.0,
        };
    let term = |j: usize| {
        let d = (scn.position(j).x - xi).abs();
        (prices.get(j) + d * d - brand(j) - own) / (2.0 * d)
    };
    term(right) + term(left)
}

/// Wipe-out threshold, stability margin and entry analysis for company `i`
/// in a 1D market.
pub fn compute_wipeout_diagnostics(
    scn: &Scenario,
    prices: &PriceVector,
    part: &MarketPartition,
    i: usize,
) -> Result<WipeoutEntry> {
    if scn.dimension != Dimension::One {
        return Err(Error::BoundaryCompany { company: i });
    }
    if i >= scn.len() {
        return Err(Error::UnknownCompany(i));
    }
    let (left, right) = side_neighbors(scn, part, i)?;
    let psi = psi_between(scn, prices, part, i, left, right);

    let hidden = match scn.q {
        BrandExponent::Zero => {
            let mut p = prices.clone();
            // a price high enough to own nothing hides the company
            let span = scn.window.width();
            p.set(i, scn.price_upper.max(0.0) + 4.0 * span * span);
            solve_areas_q0(scn, &p)?
        }
        BrandExponent::One => solve_q1_excluding(scn, prices, &[i])?,
    };
    let (hl, hr) = side_neighbors(scn, &hidden, i)?;
    let xl = scn.position(hl).x;
    let xr = scn.position(hr).x;
    let xi = scn.position(i).x;
    let weight = |j: usize| match scn.q {
        BrandExponent::Zero => prices.get(j) - scn.beta,
        BrandExponent::One => prices.get(j) - scn.beta * hidden.areas[j],
    };
    let entry_point = (weight(hr) - weight(hl)) / (2.0 * (xr - xl)) + 0.5 * (xr + xl);
    let psi_entry = psi_between(scn, prices, &hidden, i, hl, hr);
    Ok(WipeoutEntry {
        threshold: threshold(xi - xl, xr - xi),
        psi,
        psi_entry,
        entry_point,
    })
}
