#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use brandmarket::areas::focal_area;
use brandmarket::{solve_areas, Aabb, BrandExponent, Company, Dimension, Point, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// 1D, q = 0, frozen endpoints.
    Line,
    /// 2D, q = 0, frozen ring around a few focal companies.
    Plane,
    /// 1D, q = 1, beta below half the smallest spacing.
    LineBrand,
}

impl Kind {
    pub const ALL: [Kind; 3] = [Kind::Line, Kind::Plane, Kind::LineBrand];

    pub fn label(self) -> &'static str {
        match self {
            Kind::Line => "line",
            Kind::Plane => "plane",
            Kind::LineBrand => "line-brand",
        }
    }
}

fn company(id: usize, position: Point, price: f64, frozen: bool) -> Company {
    Company {
        id,
        position,
        price,
        frozen,
    }
}

fn draw_line(rng: &mut ChaCha8Rng, brand: bool) -> Scenario {
    let n = rng.gen_range(4..=12);
    let mut xs = vec![0.0];
    for _ in 1..n {
        let gap = rng.gen_range(0.5..1.5);
        xs.push(xs.last().unwrap() + gap);
    }
    let mid = 0.5 * (xs[0] + xs[n - 1]);
    for x in &mut xs {
        *x -= mid;
    }
    let d_min = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let companies = xs
        .iter()
        .enumerate()
        .map(|(id, &x)| {
            let frozen = id == 0 || id == n - 1;
            let price = if frozen {
                rng.gen_range(0.05..0.2)
            } else {
                rng.gen_range(0.1..1.0)
            };
            company(id, Point::on_line(x), price, frozen)
        })
        .collect();
    let half = 0.5 * (xs[n - 1] - xs[0]);
    Scenario {
        dimension: Dimension::One,
        beta: if brand { rng.gen_range(0.0..0.45 * d_min) } else { rng.gen_range(0.0..1.0) },
        q: if brand { BrandExponent::One } else { BrandExponent::Zero },
        companies,
        focal_box_half: half,
        price_upper: 3.0,
        window: Aabb::new(Point::on_line(xs[0] - 0.5), Point::on_line(xs[n - 1] + 0.5)),
    }
}

fn draw_plane(rng: &mut ChaCha8Rng) -> Scenario {
    let ring = 8;
    let radius = 2.5;
    let mut companies = Vec::new();
    let phase = rng.gen_range(0.0..PI / 4.0);
    for k in 0..ring {
        let a = phase + 2.0 * PI * k as f64 / ring as f64 + rng.gen_range(-0.1..0.1);
        let pos = Point::new(radius * a.cos(), radius * a.sin());
        companies.push(company(k, pos, rng.gen_range(0.3..0.8), true));
    }
    let focal = rng.gen_range(2..=4);
    let mut placed: Vec<Point> = Vec::new();
    while placed.len() < focal {
        let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if placed.iter().all(|q| q.distance(p) > 0.4) {
            placed.push(p);
        }
    }
    for (k, p) in placed.into_iter().enumerate() {
        companies.push(company(ring + k, p, rng.gen_range(0.1..1.0), false));
    }
    Scenario {
        dimension: Dimension::Two,
        beta: rng.gen_range(0.0..1.0),
        q: BrandExponent::Zero,
        companies,
        focal_box_half: 1.5,
        price_upper: 3.0,
        window: Aabb::new(Point::new(-3.2, -3.2), Point::new(3.2, 3.2)),
    }
}

/// Valid, solvable at its own prices, and no focal company can reach the
/// window even when it charges nothing and every other focal company charges
/// the maximum.
pub fn well_posed(scn: &Scenario) -> bool {
    if scn.validate().is_err() || solve_areas(scn, &scn.prices()).is_err() {
        return false;
    }
    scn.focal_ids().all(|i| {
        let mut p = scn.prices();
        for j in scn.focal_ids() {
            p.set(j, scn.price_upper);
        }
        p.set(i, 0.0);
        focal_area(scn, &p, i).is_ok()
    })
}

/// Deterministic random scenario of the given kind.
pub fn random_scenario(kind: Kind, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let scn = match kind {
            Kind::Line => draw_line(&mut rng, false),
            Kind::Plane => draw_plane(&mut rng),
            Kind::LineBrand => draw_line(&mut rng, true),
        };
        if well_posed(&scn) {
            return scn;
        }
    }
}

/// `count` scenarios cycling through the kinds.
pub fn suite(count: usize, base_seed: u64) -> Vec<(String, Scenario)> {
    (0..count)
        .map(|k| {
            let kind = Kind::ALL[k % Kind::ALL.len()];
            let seed = base_seed + k as u64;
            (format!("{}#{seed}", kind.label()), random_scenario(kind, seed))
        })
        .collect()
}

/// Eleven companies at spacing 1, endpoints frozen at price 1.
pub fn lattice_line() -> Scenario {
    let companies = (0..11)
        .map(|id| {
            let frozen = id == 0 || id == 10;
            let price = if frozen { 1.0 } else { 0.3 + 0.07 * id as f64 };
            company(id, Point::on_line(id as f64 - 5.0), price, frozen)
        })
        .collect();
    Scenario {
        dimension: Dimension::One,
        beta: 0.0,
        q: BrandExponent::Zero,
        companies,
        focal_box_half: 4.5,
        price_upper: 3.0,
        window: Aabb::new(Point::on_line(-5.5), Point::on_line(5.5)),
    }
}

/// 7×7 unit lattice, outer ring frozen at 0.5.
pub fn lattice_plane() -> Scenario {
    let mut companies = Vec::new();
    for y in -3..=3 {
        for x in -3..=3 {
            let ring = i32::abs(x) == 3 || i32::abs(y) == 3;
            let id = companies.len();
            let price = if ring { 0.5 } else { 0.2 + 0.02 * id as f64 };
            companies.push(company(id, Point::new(x as f64, y as f64), price, ring));
        }
    }
    Scenario {
        dimension: Dimension::Two,
        beta: 0.0,
        q: BrandExponent::Zero,
        companies,
        focal_box_half: 2.5,
        price_upper: 2.0,
        window: Aabb::new(Point::new(-3.5, -3.5), Point::new(3.5, 3.5)),
    }
}

/// Companies at 0, 1, 2, all frozen at the same price.
pub fn triple(beta: f64) -> Scenario {
    Scenario {
        dimension: Dimension::One,
        beta,
        q: BrandExponent::One,
        companies: (0..3).map(|id| company(id, Point::on_line(id as f64), 1.0, true)).collect(),
        focal_box_half: 5.0,
        price_upper: 2.0,
        window: Aabb::new(Point::on_line(-0.5), Point::on_line(2.5)),
    }
}

/// True when no sample dips more than `tol` below the running maxima on
/// both of its sides, i.e. the sequence rises then falls.
pub fn is_unimodal(values: &[f64], tol: f64) -> bool {
    let n = values.len();
    let mut right_max = vec![f64::NEG_INFINITY; n + 1];
    for k in (0..n).rev() {
        right_max[k] = right_max[k + 1].max(values[k]);
    }
    let mut left_max = f64::NEG_INFINITY;
    for k in 0..n {
        if values[k] < left_max.min(right_max[k + 1]) - tol {
            return false;
        }
        left_max = left_max.max(values[k]);
    }
    true
}

/// Uniform price grid over `[0, upper]` with `samples` points.
pub fn price_grid(upper: f64, samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |k| upper * k as f64 / (samples - 1) as f64)
}
