//! Scenario description and the aggregate price customers perceive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};

/// Number of product features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// Exponent `q` on the market area in the brand term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrandExponent {
    Zero,
    One,
}

impl BrandExponent {
    pub fn as_u32(self) -> u32 {
        match self {
            BrandExponent::Zero => 0,
            BrandExponent::One => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Company {
    pub id: usize,
    pub position: Point,
    pub price: f64,
    /// Price is exogenous (company lies outside the chosen box).
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dimension: Dimension,
    pub beta: f64,
    pub q: BrandExponent,
    /// Sorted by id; `companies[k].id == k`.
    pub companies: Vec<Company>,
    pub focal_box_half: f64,
    pub price_upper: f64,
    pub window: Aabb,
}

/// Prices of every company, indexed by company id.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(pub Vec<f64>);

impl PriceVector {
    pub fn get(&self, id: usize) -> f64 {
        self.0[id]
    }

    pub fn set(&mut self, id: usize, price: f64) {
        self.0[id] = price;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &PriceVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.companies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.companies.is_empty()
    }

    pub fn k(&self) -> usize {
        self.dimension.as_usize()
    }

    pub fn prices(&self) -> PriceVector {
        PriceVector(self.companies.iter().map(|c| c.price).collect())
    }

    pub fn position(&self, id: usize) -> Point {
        self.companies[id].position
    }

    pub fn is_frozen(&self, id: usize) -> bool {
        self.companies[id].frozen
    }

    /// Ids of companies whose prices the game optimises.
    pub fn focal_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.companies.iter().filter(|c| !c.frozen).map(|c| c.id)
    }

    /// Lebesgue measure of the window (length in 1D, area in 2D).
    pub fn window_measure(&self) -> f64 {
        match self.dimension {
            Dimension::One => self.window.width(),
            Dimension::Two => self.window.width() * self.window.height(),
        }
    }

    /// Areas at or below this are treated as zero.
    pub fn eps_area(&self) -> f64 {
        1e-9 * self.window_measure()
    }

    /// Copy of the scenario with different company prices.
    pub fn with_prices(&self, prices: &PriceVector) -> Scenario {
        let mut out = self.clone();
        for (c, &p) in out.companies.iter_mut().zip(prices.as_slice()) {
            c.price = p;
        }
        out
    }

    pub fn with_beta(&self, beta: f64) -> Scenario {
        Scenario {
            beta,
            ..self.clone()
        }
    }

    /// Ids sorted by position along the line (1D only).
    pub fn ids_by_position(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.len()).collect();
        ids.sort_by(|&a, &b| {
            self.companies[a]
                .position
                .x
                .total_cmp(&self.companies[b].position.x)
        });
        ids
    }

    /// Checks every scenario invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let fail = |invariant: &'static str, detail: String| {
            Err(Error::Validation { invariant, detail })
        };
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail("beta >= 0", format!("beta = {}", self.beta));
        }
        if !(self.price_upper > 0.0 && self.price_upper.is_finite()) {
            return fail("price_upper > 0", format!("price_upper = {}", self.price_upper));
        }
        if !(self.focal_box_half > 0.0 && self.focal_box_half.is_finite()) {
            return fail(
                "focal_box_half > 0",
                format!("focal_box_half = {}", self.focal_box_half),
            );
        }
        if self.q == BrandExponent::One && self.dimension != Dimension::One {
            return fail("q = 1 requires dimension = 1", "dimension = 2".into());
        }
        if self.companies.is_empty() {
            return fail("at least one company", "no companies".into());
        }
        let k = self.k();
        let w = &self.window;
        if !(w.min.x < w.max.x && (k == 1 || w.min.y < w.max.y)) {
            return fail("window is a non-empty box", format!("{:?}", w));
        }
        for c in &self.companies {
            if !(c.price >= 0.0 && c.price <= self.price_upper) {
                return fail(
                    "0 <= price <= price_upper",
                    format!("company {} has price {}", c.id, c.price),
                );
            }
            if !w.contains_strictly(c.position, k) {
                return fail(
                    "every company strictly inside window",
                    format!("company {} at {:?}", c.id, c.position),
                );
            }
        }
        for (a, ca) in self.companies.iter().enumerate() {
            for cb in &self.companies[a + 1..] {
                if ca.position == cb.position {
                    return fail(
                        "company positions pairwise distinct",
                        format!("companies {} and {}", ca.id, cb.id),
                    );
                }
            }
        }
        let half = self.focal_box_half;
        let in_box = |p: Point| p.x.abs() <= half && (k == 1 || p.y.abs() <= half);
        if !self.companies.iter().any(|c| in_box(c.position)) {
            return fail(
                "at least one company inside the chosen box",
                format!("no company within [-{half}, {half}]^{k}"),
            );
        }
        if self.dimension == Dimension::One {
            let order = self.ids_by_position();
            for &end in [order[0], order[order.len() - 1]].iter() {
                if !self.companies[end].frozen {
                    return fail(
                        "outermost companies are frozen in 1D",
                        format!("company {end} is outermost but not frozen"),
                    );
                }
            }
        }
        Ok(())
    }
}

/// Aggregate price of company `i` at `x`: mill price plus squared feature
/// distance minus the brand term `beta * area^q` (with `area^0 == 1`).
pub fn aggregate_price(scn: &Scenario, i: usize, x: Point, area_i: f64) -> f64 {
    let c = &scn.companies[i];
    aggregate_price_at(c.price, c.position, scn.beta, scn.q, x, area_i)
}

pub fn aggregate_price_at(
    price: f64,
    site: Point,
    beta: f64,
    q: BrandExponent,
    x: Point,
    area: f64,
) -> f64 {
    let brand = match q {
        BrandExponent::Zero => beta,
        BrandExponent::One => beta * area,
    };
    price + (x - site).norm_sq() - brand
}

// ---------------------------------------------------------------------------
// Scenario document

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowDoc {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompanyDoc {
    id: usize,
    position: Vec<f64>,
    price: f64,
    frozen: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    dimension: i64,
    beta: f64,
    q: i64,
    price_upper: f64,
    focal_box_half: f64,
    window: WindowDoc,
    companies: Vec<CompanyDoc>,
}

fn point_from(coords: &[f64], k: usize, what: &str) -> Result<Point> {
    if coords.len() != k {
        return Err(Error::Schema(format!(
            "{what} has {} coordinates, dimension is {k}",
            coords.len()
        )));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::Schema(format!("{what} has a non-finite coordinate")));
    }
    Ok(Point::new(coords[0], if k == 2 { coords[1] } else { 0.0 }))
}

fn coords_of(p: Point, k: usize) -> Vec<f64> {
    if k == 1 {
        vec![p.x]
    } else {
        vec![p.x, p.y]
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let dimension = match doc.dimension {
        1 => Dimension::One,
        2 => Dimension::Two,
        d => return Err(Error::Schema(format!("dimension must be 1 or 2, got {d}"))),
    };
    let q = match doc.q {
        0 => BrandExponent::Zero,
        1 => BrandExponent::One,
        q => return Err(Error::Schema(format!("q must be 0 or 1, got {q}"))),
    };
    let k = dimension.as_usize();
    let window = Aabb::new(
        point_from(&doc.window.min, k, "window.min")?,
        point_from(&doc.window.max, k, "window.max")?,
    );
    let n = doc.companies.len();
    let mut slots: Vec<Option<Company>> = vec![None; n];
    for c in doc.companies {
        if c.id >= n {
            return Err(Error::Schema(format!(
                "company ids must be 0..{n}, found {}",
                c.id
            )));
        }
        if slots[c.id].is_some() {
            return Err(Error::Schema(format!("duplicate company id {}", c.id)));
        }
        let position = point_from(&c.position, k, &format!("company {} position", c.id))?;
        slots[c.id] = Some(Company {
            id: c.id,
            position,
            price: c.price,
            frozen: c.frozen,
        });
    }
    let scn = Scenario {
        dimension,
        beta: doc.beta,
        q,
        companies: slots.into_iter().map(|c| c.unwrap()).collect(),
        focal_box_half: doc.focal_box_half,
        price_upper: doc.price_upper,
        window,
    };
    scn.validate()?;
    Ok(scn)
}

/// Serialises a scenario to its JSON document form.
pub fn emit_scenario(scn: &Scenario) -> String {
    let k = scn.k();
    let doc = ScenarioDoc {
        dimension: k as i64,
        beta: scn.beta,
        q: scn.q.as_u32() as i64,
        price_upper: scn.price_upper,
        focal_box_half: scn.focal_box_half,
        window: WindowDoc {
            min: coords_of(scn.window.min, k),
            max: coords_of(scn.window.max, k),
        },
        companies: scn
            .companies
            .iter()
            .map(|c| CompanyDoc {
                id: c.id,
                position: coords_of(c.position, k),
                price: c.price,
                frozen: c.frozen,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("scenario document serialises")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
        "dimension": 1, "beta": 0.0, "q": 0, "price_upper": 10.0,
        "focal_box_half": 5.0,
        "window": {"min": [-1.0], "max": [3.0]},
        "companies": [
            {"id": 0, "position": [0.0], "price": 1.0, "frozen": true},
            {"id": 1, "position": [2.0], "price": 1.0, "frozen": true}
        ]
    }"#;

    fn invariant_of(err: Error) -> &'static str {
        match err {
            Error::Validation { invariant, .. } => invariant,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_minimal_document() {
        let scn = load_scenario(MINIMAL).unwrap();
        assert_eq!(scn.dimension, Dimension::One);
        assert_eq!(scn.len(), 2);
        assert_eq!(scn.position(1), Point::on_line(2.0));
    }

    #[test]
    fn duplicate_positions_rejected() {
        let text = MINIMAL.replace("[2.0]", "[0.0]");
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(invariant_of(err), "company positions pairwise distinct");
    }

    #[test]
    fn q1_in_two_dimensions_rejected() {
        let text = r#"{
            "dimension": 2, "beta": 0.1, "q": 1, "price_upper": 1.0,
            "focal_box_half": 1.0,
            "window": {"min": [-2.0, -2.0], "max": [2.0, 2.0]},
            "companies": [{"id": 0, "position": [0.0, 0.0], "price": 0.5, "frozen": false}]
        }"#;
        assert_eq!(
            invariant_of(load_scenario(text).unwrap_err()),
            "q = 1 requires dimension = 1"
        );
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"beta\"", "\"colour\": 1, \"beta\"");
        assert!(matches!(load_scenario(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn wrong_coordinate_count_rejected() {
        let text = MINIMAL.replace("[2.0]", "[2.0, 1.0]");
        assert!(matches!(load_scenario(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn other_invariants() {
        let base = load_scenario(MINIMAL).unwrap();
        let mut s = base.clone();
        s.companies[0].price = 11.0;
        assert_eq!(invariant_of(s.validate().unwrap_err()), "0 <= price <= price_upper");

        let mut s = base.clone();
        s.companies[1].position = Point::on_line(3.0);
        assert_eq!(
            invariant_of(s.validate().unwrap_err()),
            "every company strictly inside window"
        );

        let mut s = base.clone();
        s.focal_box_half = 0.5;
        s.companies[0].position = Point::on_line(-0.9);
        s.companies[1].position = Point::on_line(2.0);
        assert_eq!(
            invariant_of(s.validate().unwrap_err()),
            "at least one company inside the chosen box"
        );

        let mut s = base.clone();
        s.companies[1].frozen = false;
        assert_eq!(
            invariant_of(s.validate().unwrap_err()),
            "outermost companies are frozen in 1D"
        );

        let mut s = base;
        s.beta = -0.1;
        assert_eq!(invariant_of(s.validate().unwrap_err()), "beta >= 0");
    }

    #[test]
    fn aggregate_price_examples() {
        let site = Point::on_line(0.0);
        let q0 = BrandExponent::Zero;
        assert_eq!(aggregate_price_at(1.0, site, 0.0, q0, site, 0.0), 1.0);
        assert_eq!(
            aggregate_price_at(1.0, site, 0.5, q0, Point::on_line(2.0), 123.0),
            4.5
        );
        assert_eq!(
            aggregate_price_at(1.0, site, 0.5, BrandExponent::One, Point::on_line(1.0), 2.0),
            1.0
        );
        // S^0 == 1 even for an empty cell
        assert_eq!(aggregate_price_at(1.0, site, 0.5, q0, site, 0.0), 0.5);
    }

    fn scenario_strategy() -> impl Strategy<Value = Scenario> {
        (
            prop::bool::ANY,
            0.0..3.0f64,
            prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64, 0.0..1.0f64, prop::bool::ANY), 2..8),
        )
            .prop_filter_map("valid scenario", |(two_d, beta, raw)| {
                let dimension = if two_d { Dimension::Two } else { Dimension::One };
                let mut companies: Vec<Company> = raw
                    .iter()
                    .enumerate()
                    .map(|(id, &(x, y, p, frozen))| Company {
                        id,
                        position: Point::new(x, if two_d { y } else { 0.0 }),
                        price: 2.0 * p,
                        frozen,
                    })
                    .collect();
                if !two_d {
                    let scn = Scenario {
                        dimension,
                        beta,
                        q: BrandExponent::One,
                        companies: companies.clone(),
                        focal_box_half: 4.0,
                        price_upper: 2.0,
                        window: Aabb::new(Point::new(-5.0, 0.0), Point::new(5.0, 0.0)),
                    };
                    let order = scn.ids_by_position();
                    companies[order[0]].frozen = true;
                    companies[order[order.len() - 1]].frozen = true;
                }
                let scn = Scenario {
                    dimension,
                    beta,
                    q: if two_d { BrandExponent::Zero } else { BrandExponent::One },
                    companies,
                    focal_box_half: 4.0,
                    price_upper: 2.0,
                    window: Aabb::new(Point::new(-5.0, -5.0), Point::new(5.0, 5.0)),
                };
                scn.validate().ok().map(|_| scn)
            })
    }

    proptest! {
        #[test]
        fn emit_then_load_is_identity(scn in scenario_strategy()) {
            let mut expected = scn.clone();
            if expected.dimension == Dimension::One {
                expected.window.min.y = 0.0;
                expected.window.max.y = 0.0;
            }
            let back = load_scenario(&emit_scenario(&scn)).unwrap();
            prop_assert_eq!(back, expected);
        }

        #[test]
        fn aggregate_price_monotone(d1 in 0.0..5.0f64, d2 in 0.0..5.0f64, p in 0.0..3.0f64, s in 0.0..3.0f64) {
            let site = Point::new(0.0, 0.0);
            let q1 = BrandExponent::One;
            let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assume!(far - near > 1e-6);
            let a = aggregate_price_at(p, site, 0.4, q1, Point::new(near, 0.0), s);
            let b = aggregate_price_at(p, site, 0.4, q1, Point::new(far, 0.0), s);
            prop_assert!(a < b);
            let cheaper = aggregate_price_at(p, site, 0.4, q1, Point::new(near, 0.0), s + 0.5);
            prop_assert!(cheaper < a);
            let dearer = aggregate_price_at(p + 0.1, site, 0.4, q1, Point::new(near, 0.0), s);
            prop_assert!(dearer > a);
        }
    }

    #[test]
    fn window_measure_and_eps_area() {
        let scn = load_scenario(MINIMAL).unwrap();
        assert_abs_diff_eq!(scn.window_measure(), 4.0);
        assert_abs_diff_eq!(scn.eps_area(), 4e-9);
    }
}
