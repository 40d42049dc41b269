//! Brute-force ground truth on a regular grid.
//!
//! Nothing here touches the power-diagram or linear-system code: ownership
//! is the argmin of aggregate prices at each grid-cell centre.

use rayon::prelude::*;
use serde::Serialize;

use crate::areas::{Cell, MarketPartition};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};
use crate::model::{aggregate_price_at, BrandExponent, Dimension, PriceVector, Scenario};

const DAMPING: f64 = 0.5;
const FIXED_POINT_CAP: usize = 10_000;

/// Regular grid over the scenario window. The requested resolution is
/// shrunk slightly so that a whole number of cells fits each edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub window: Aabb,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub dimension: Dimension,
}

impl GridSpec {
    pub fn new(window: Aabb, dimension: Dimension, h: f64) -> Self {
        let count = |len: f64| ((len / h).round() as usize).max(1);
        let nx = count(window.width());
        let hx = window.width() / nx as f64;
        let (ny, hy) = match dimension {
            Dimension::One => (1, 1.0),
            Dimension::Two => {
                let ny = count(window.height());
                (ny, window.height() / ny as f64)
            }
        };
        GridSpec {
            window,
            nx,
            ny,
            hx,
            hy,
            dimension,
        }
    }

    /// Grid with cell edge `fraction` times the longest window edge.
    pub fn relative(scn: &Scenario, fraction: f64) -> Self {
        let edge = scn.window.width().max(scn.window.height());
        GridSpec::new(scn.window, scn.dimension, fraction * edge)
    }

    /// Largest cell edge.
    pub fn h(&self) -> f64 {
        match self.dimension {
            Dimension::One => self.hx,
            Dimension::Two => self.hx.max(self.hy),
        }
    }

    pub fn cell_measure(&self) -> f64 {
        match self.dimension {
            Dimension::One => self.hx,
            Dimension::Two => self.hx * self.hy,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, index: usize) -> Point {
        let (col, row) = (index % self.nx, index / self.nx);
        let x = self.window.min.x + (col as f64 + 0.5) * self.hx;
        match self.dimension {
            Dimension::One => Point::on_line(x),
            Dimension::Two => Point::new(x, self.window.min.y + (row as f64 + 0.5) * self.hy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OwnershipMap {
    pub grid: GridSpec,
    /// Owner of each grid cell, row-major from the lower-left corner.
    pub owners: Vec<usize>,
}

impl OwnershipMap {
    pub fn owner(&self, index: usize) -> usize {
        self.owners[index]
    }

    pub fn cells(&self) -> impl Iterator<Item = (Point, usize)> + '_ {
        self.owners
            .iter()
            .enumerate()
            .map(|(k, &o)| (self.grid.center(k), o))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    pub ownership: OwnershipMap,
    pub areas: Vec<f64>,
    /// Fixed-point iterations spent (0 for q = 0).
    pub iterations: usize,
}

fn owners_for(scn: &Scenario, prices: &PriceVector, areas: &[f64], grid: &GridSpec) -> Vec<usize> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.center(k);
            let mut best = (0, f64::INFINITY);
            for c in &scn.companies {
                let v = aggregate_price_at(prices.get(c.id), c.position, scn.beta, scn.q, x, areas[c.id]);
                if v < best.1 {
                    best = (c.id, v);
                }
            }
            best.0
        })
        .collect()
}

fn tally(n: usize, owners: &[usize], grid: &GridSpec) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    for &o in owners {
        counts[o] += 1;
    }
    counts.into_iter().map(|c| c as f64 * grid.cell_measure()).collect()
}

/// Grid ownership and areas. For `q = 1` the areas entering the brand term
/// are found by a damped fixed point on the area vector.
pub fn grid_partition(scn: &Scenario, prices: &PriceVector, grid: &GridSpec) -> Result<GridPartition> {
    let n = scn.len();
    match scn.q {
        BrandExponent::Zero => {
            let owners = owners_for(scn, prices, &vec![0.0; n], grid);
            let areas = tally(n, &owners, grid);
            Ok(GridPartition {
                ownership: OwnershipMap { grid: *grid, owners },
                areas,
                iterations: 0,
            })
        }
        BrandExponent::One => {
            let eps = scn.eps_area();
            let mut areas = tally(n, &owners_for(scn, prices, &vec![0.0; n], grid), grid);
            let mut change = f64::INFINITY;
            for it in 1..=FIXED_POINT_CAP {
                let target = tally(n, &owners_for(scn, prices, &areas, grid), grid);
                change = 0.0;
                for (s, t) in areas.iter_mut().zip(&target) {
                    let next = (1.0 - DAMPING) * *s + DAMPING * t;
                    change = f64::max(change, (next - *s).abs());
                    *s = next;
                }
                if change < eps {
                    let owners = owners_for(scn, prices, &areas, grid);
                    let areas = tally(n, &owners, grid);
                    return Ok(GridPartition {
                        ownership: OwnershipMap { grid: *grid, owners },
                        areas,
                        iterations: it,
                    });
                }
            }
            Err(Error::OracleNoConvergence {
                iterations: FIXED_POINT_CAP,
                change,
            })
        }
    }
}

/// Grid cells whose centre lies inside the analytic cell of one company,
/// shrunk by `margin`, but which the grid assigns to another.
pub fn ownership_conflicts(part: &MarketPartition, map: &OwnershipMap, margin: f64) -> Vec<(Point, usize, usize)> {
    map.cells()
        .filter_map(|(x, owner)| {
            part.cells
                .iter()
                .enumerate()
                .find(|(_, cell)| strictly_inside(cell, x, margin))
                .filter(|(id, _)| *id != owner)
                .map(|(id, _)| (x, id, owner))
        })
        .collect()
}

fn strictly_inside(cell: &Cell, x: Point, margin: f64) -> bool {
    match cell {
        Cell::Empty => false,
        Cell::Interval(iv) => x.x > iv.lo + margin && x.x < iv.hi - margin,
        Cell::Polygon(p) => p.contains(x, -margin),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridBestResponse {
    pub price: f64,
    pub profit: f64,
}

/// Best price for `i` on a uniform grid of `price_samples` prices over
/// `[0, P_upper]`, with profits from grid areas. Ties go to the lower price.
pub fn grid_best_response(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    price_samples: usize,
    grid: &GridSpec,
) -> Result<GridBestResponse> {
    if i >= scn.len() {
        return Err(Error::UnknownCompany(i));
    }
    let samples = price_samples.max(2);
    let profits: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            let price = scn.price_upper * k as f64 / (samples - 1) as f64;
            let mut p = prices.clone();
            p.set(i, price);
            grid_partition(scn, &p, grid).map(|g| (price, price * g.areas[i]))
        })
        .collect::<Result<_>>()?;
    let (price, profit) = profits
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(GridBestResponse { price, profit })
}
