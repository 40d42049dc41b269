//! Iterated best response and verification of equilibrium conditions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::areas::{competition_intensity, solve_areas};
use crate::best_response::{area_slope, best_response, utility, Side};
use crate::error::{Error, Result};
use crate::model::{BrandExponent, PriceVector, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Gauss–Seidel sweeps in company-id order.
    RoundRobin,
    /// Jacobi sweeps against a frozen snapshot.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub schedule: Schedule,
}

impl SolverOptions {
    pub fn for_scenario(scn: &Scenario) -> Self {
        SolverOptions {
            tol: 1e-8 * scn.price_upper,
            max_iter: 10_000,
            schedule: Schedule::RoundRobin,
        }
    }
}

/// Split of companies into those playing the game and those kept out of the
/// market at `P_upper`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationScheme {
    pub activated: BTreeSet<usize>,
    pub hidden: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyReport {
    pub area: f64,
    pub frozen: bool,
    pub hidden: bool,
    pub survivor: bool,
    /// Competition intensity `Σ l_ij / (2 d_ij)`.
    pub gamma: f64,
    /// Violation of the equilibrium price/area identity (or band).
    pub condition_residual: Option<f64>,
    /// `−dP/dS` from a central difference.
    pub c: Option<f64>,
    /// `−dP/dS` from the right (`P*+`).
    pub c_lower: Option<f64>,
    /// `−dP/dS` from the left (`P*−`).
    pub c_upper: Option<f64>,
    /// Small-β closed-form estimate of `c`.
    pub c_approx: Option<f64>,
    pub has_potential_competitor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub prices: BTreeMap<usize, f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub initial_prices: BTreeMap<usize, f64>,
    pub schedule: Schedule,
    /// Two alternating price vectors when the simultaneous schedule cycles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<[BTreeMap<usize, f64>; 2]>,
    pub activation: Option<ActivationScheme>,
    pub per_company: BTreeMap<usize, CompanyReport>,
}

impl EquilibriumReport {
    pub fn price_vector(&self) -> PriceVector {
        PriceVector(self.prices.values().copied().collect())
    }
}

fn as_map(p: &PriceVector) -> BTreeMap<usize, f64> {
    p.as_slice().iter().copied().enumerate().collect()
}

// ---------------------------------------------------------------------------
// Activation

/// Focal companies among `active` that violate `β < 2 d_i d_{i−1} / (d_i + d_{i−1})`
/// with respect to their neighbours in `active`.
fn violators(scn: &Scenario, order: &[usize], active: &BTreeSet<usize>) -> Vec<usize> {
    let members: Vec<usize> = order.iter().copied().filter(|id| active.contains(id)).collect();
    members
        .windows(3)
        .filter(|w| !scn.is_frozen(w[1]))
        .filter(|w| {
            let x = |k: usize| scn.position(w[k]).x;
            let (dl, dr) = (x(1) - x(0), x(2) - x(1));
            scn.beta >= 2.0 * dl * dr / (dl + dr)
        })
        .map(|w| w[1])
        .collect()
}

/// `j` would satisfy its own condition if activated next to `active`.
fn satisfies_own(scn: &Scenario, order: &[usize], active: &BTreeSet<usize>, j: usize) -> bool {
    let xj = scn.position(j).x;
    let left = order
        .iter()
        .rev()
        .find(|&&id| active.contains(&id) && scn.position(id).x < xj);
    let right = order
        .iter()
        .find(|&&id| active.contains(&id) && scn.position(id).x > xj);
    match (left, right) {
        (Some(&l), Some(&r)) => {
            let (dl, dr) = (xj - scn.position(l).x, scn.position(r).x - xj);
            scn.beta < 2.0 * dl * dr / (dl + dr)
        }
        _ => true,
    }
}

fn greedy_fill(scn: &Scenario, order: &[usize], active: &mut BTreeSet<usize>) {
    let candidates: Vec<usize> = scn.focal_ids().filter(|id| !active.contains(id)).collect();
    for id in candidates {
        active.insert(id);
        if !violators(scn, order, active).is_empty() {
            active.remove(&id);
        }
    }
}

/// Greedy maximal activation followed by swaps until every hidden company
/// violates its own survival condition.
pub fn construct_activation(scn: &Scenario) -> Result<ActivationScheme> {
    let all: BTreeSet<usize> = (0..scn.len()).collect();
    if scn.q == BrandExponent::Zero {
        return Ok(ActivationScheme {
            activated: all,
            hidden: BTreeSet::new(),
        });
    }
    let order = scn.ids_by_position();
    let mut active: BTreeSet<usize> = (0..scn.len()).filter(|&id| scn.is_frozen(id)).collect();
    greedy_fill(scn, &order, &mut active);

    let n = scn.len();
    let cap = n * n;
    let mut swaps = 0;
    loop {
        let entering = scn
            .focal_ids()
            .find(|j| !active.contains(j) && satisfies_own(scn, &order, &active, *j));
        let Some(j) = entering else { break };
        active.insert(j);
        let displaced: Vec<usize> = violators(scn, &order, &active)
            .into_iter()
            .filter(|&k| k != j)
            .collect();
        if displaced.is_empty() {
            // j fits without displacing anybody
            continue;
        }
        for k in displaced {
            active.remove(&k);
        }
        swaps += 1;
        if swaps > cap {
            return Err(Error::NoValidScheme { cap });
        }
        greedy_fill(scn, &order, &mut active);
    }
    let hidden = all.difference(&active).copied().collect();
    Ok(ActivationScheme {
        activated: active,
        hidden,
    })
}

// ---------------------------------------------------------------------------
// Iteration

fn movers(scn: &Scenario, activation: Option<&ActivationScheme>) -> Vec<usize> {
    scn.focal_ids()
        .filter(|id| activation.is_none_or(|a| !a.hidden.contains(id)))
        .collect()
}

fn prepare(scn: &Scenario, init: &PriceVector) -> Result<(PriceVector, Option<ActivationScheme>)> {
    let mut prices = init.clone();
    for c in &scn.companies {
        if c.frozen {
            prices.set(c.id, c.price);
        }
    }
    let activation = match scn.q {
        BrandExponent::Zero => None,
        BrandExponent::One => Some(construct_activation(scn)?),
    };
    if let Some(a) = &activation {
        for &h in &a.hidden {
            prices.set(h, scn.price_upper);
        }
    }
    Ok((prices, activation))
}

/// Replaces each active focal company's price by its best response until the
/// largest change in a sweep is at most `opts.tol`.
pub fn iterate_best_response(
    scn: &Scenario,
    init: &PriceVector,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    let (mut prices, activation) = prepare(scn, init)?;
    let initial = prices.clone();
    let ids = movers(scn, activation.as_ref());
    let mut history: Vec<PriceVector> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut residual;
    let mut cycle = None;
    for sweep in 0..opts.max_iter {
        residual = 0.0;
        match opts.schedule {
            Schedule::RoundRobin => {
                for &i in &ids {
                    let br = best_response(scn, &prices, i)?;
                    residual = f64::max(residual, (br.price - prices.get(i)).abs());
                    prices.set(i, br.price);
                }
            }
            Schedule::Simultaneous => {
                let snapshot = prices.clone();
                let responses: Vec<(usize, f64)> = ids
                    .par_iter()
                    .map(|&i| best_response(scn, &snapshot, i).map(|br| (i, br.price)))
                    .collect::<Result<_>>()?;
                for (i, p) in responses {
                    residual = f64::max(residual, (p - prices.get(i)).abs());
                    prices.set(i, p);
                }
            }
        }
        if residual <= opts.tol {
            converged = true;
            iterations = sweep;
            break;
        }
        iterations = sweep + 1;
        if let Some(prev) = history.len().checked_sub(2).map(|k| &history[k]) {
            if prev.max_abs_diff(&prices) <= opts.tol {
                cycle = Some([as_map(&history[history.len() - 1]), as_map(&prices)]);
                break;
            }
        }
        history.push(prices.clone());
        if history.len() > 2 {
            history.remove(0);
        }
    }
    // reported residual comes from a fresh sweep against the final prices so
    // that re-verifying a saved report reproduces it
    residual = verification_residual(scn, &prices, &ids)?;
    let per_company = analyse_companies(scn, &prices, activation.as_ref())?;
    Ok(EquilibriumReport {
        prices: as_map(&prices),
        converged,
        iterations,
        residual,
        initial_prices: as_map(&initial),
        schedule: opts.schedule,
        cycle,
        activation,
        per_company,
    })
}

fn verification_residual(scn: &Scenario, prices: &PriceVector, ids: &[usize]) -> Result<f64> {
    Ok(ids
        .par_iter()
        .map(|&i| best_response(scn, prices, i).map(|br| (br.price - prices.get(i)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Checks a candidate equilibrium: one simultaneous best-response sweep for
/// the residual, plus the per-company price/area identities.
pub fn verify_equilibrium(scn: &Scenario, prices: &PriceVector) -> Result<EquilibriumReport> {
    let opts = SolverOptions::for_scenario(scn);
    let (prices, activation) = prepare(scn, prices)?;
    let ids = movers(scn, activation.as_ref());
    let residual = verification_residual(scn, &prices, &ids)?;
    let per_company = analyse_companies(scn, &prices, activation.as_ref())?;
    Ok(EquilibriumReport {
        prices: as_map(&prices),
        converged: residual <= opts.tol,
        iterations: 0,
        residual,
        initial_prices: as_map(&prices),
        schedule: Schedule::Simultaneous,
        cycle: None,
        activation,
        per_company,
    })
}

fn analyse_companies(
    scn: &Scenario,
    prices: &PriceVector,
    activation: Option<&ActivationScheme>,
) -> Result<BTreeMap<usize, CompanyReport>> {
    let part = solve_areas(scn, prices)?;
    let mut out = BTreeMap::new();
    for c in &scn.companies {
        let i = c.id;
        let hidden = activation.is_some_and(|a| a.hidden.contains(&i));
        let survivor = part.is_survivor(i);
        let neighbors = &part.neighbors[i];
        let gamma = competition_intensity(neighbors);
        let mut report = CompanyReport {
            area: part.areas[i],
            frozen: c.frozen,
            hidden,
            survivor,
            gamma,
            condition_residual: None,
            c: None,
            c_lower: None,
            c_upper: None,
            c_approx: None,
            has_potential_competitor: part.has_potential_competitor(i),
        };
        if !c.frozen && !hidden && survivor {
            let p = prices.get(i);
            let s = part.areas[i];
            let slope = |side| area_slope(scn, prices, i, p, side);
            let (central, fwd, bwd) = (slope(Side::Central)?, slope(Side::Forward)?, slope(Side::Backward)?);
            let c_num = -1.0 / central;
            let (c_lo, c_hi) = (-1.0 / fwd, -1.0 / bwd);
            report.c = Some(c_num);
            report.c_lower = Some(c_lo);
            report.c_upper = Some(c_hi);
            match scn.q {
                BrandExponent::Zero => {
                    report.c_approx = Some(1.0 / gamma);
                    report.condition_residual = Some((p * gamma - s).abs());
                }
                BrandExponent::One => {
                    let beta = scn.beta;
                    let denom: f64 = part
                        .actual_neighbors(i)
                        .map(|n| {
                            let r = n.border / (2.0 * n.distance);
                            r * (beta * r + 1.0)
                        })
                        .sum();
                    report.c_approx = Some((1.0 - beta * gamma) / denom);
                    report.condition_residual = Some(if report.has_potential_competitor {
                        (c_lo * s - p).max(p - c_hi * s).max(0.0)
                    } else {
                        (p - c_num * s).abs()
                    });
                }
            }
        }
        out.insert(i, report);
    }
    Ok(out)
}

/// Largest profit gain available to each non-frozen company by a unilateral
/// deviation on a uniform price grid, and its current profit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationAudit {
    pub company: usize,
    pub profit: f64,
    pub best_deviation_profit: f64,
    pub best_deviation_price: f64,
}

impl DeviationAudit {
    pub fn improvement(&self) -> f64 {
        (self.best_deviation_profit - self.profit).max(0.0)
    }
}

pub fn deviation_audit(
    scn: &Scenario,
    prices: &PriceVector,
    samples: usize,
) -> Result<Vec<DeviationAudit>> {
    let ids: Vec<usize> = scn.focal_ids().collect();
    ids.par_iter()
        .map(|&i| {
            let (profit, _) = utility(scn, prices, i, prices.get(i))?;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for k in 0..samples {
                let p = scn.price_upper * k as f64 / (samples.max(2) - 1) as f64;
                let (w, _) = utility(scn, prices, i, p)?;
                if w > best.0 {
                    best = (w, p);
                }
            }
            Ok(DeviationAudit {
                company: i,
                profit,
                best_deviation_profit: best.0,
                best_deviation_price: best.1,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Point};
    use crate::model::{Company, Dimension};
    use approx::assert_abs_diff_eq;

    fn line(positions: &[f64], price: f64, beta: f64, q: BrandExponent, window: (f64, f64)) -> Scenario {
        let n = positions.len();
        Scenario {
            dimension: Dimension::One,
            beta,
            q,
            companies: positions
                .iter()
                .enumerate()
                .map(|(id, &x)| Company {
                    id,
                    position: Point::on_line(x),
                    price,
                    frozen: id == 0 || id == n - 1,
                })
                .collect(),
            focal_box_half: 100.0,
            price_upper: 2.0,
            window: Aabb::new(Point::on_line(window.0), Point::on_line(window.1)),
        }
    }

    #[test]
    fn activation_below_threshold_keeps_everybody() {
        let scn = line(&[0.0, 1.0, 2.0], 1.0, 0.5, BrandExponent::One, (-0.5, 2.5));
        let a = construct_activation(&scn).unwrap();
        assert_eq!(a.activated.len(), 3);
        assert!(a.hidden.is_empty());
    }

    #[test]
    fn activation_above_threshold_hides_the_middle() {
        let scn = line(&[0.0, 1.0, 2.0], 1.0, 1.2, BrandExponent::One, (-0.5, 2.5));
        let a = construct_activation(&scn).unwrap();
        assert_eq!(a.hidden, BTreeSet::from([1]));
        assert_eq!(a.activated, BTreeSet::from([0, 2]));
    }

    #[test]
    fn single_company_is_activated() {
        let scn = line(&[0.0], 1.0, 5.0, BrandExponent::One, (-1.0, 1.0));
        let a = construct_activation(&scn).unwrap();
        assert_eq!(a.activated, BTreeSet::from([0]));
    }

    #[test]
    fn dense_cluster_alternates() {
        // unit spacing, β = 1.5: every interior company alone between two
        // activated neighbours at distance 1 would be wiped out, but with
        // spacing 2 the threshold is 2 > 1.5
        let pos: Vec<f64> = (0..7).map(f64::from).collect();
        let scn = line(&pos, 1.0, 1.5, BrandExponent::One, (-0.5, 6.5));
        let a = construct_activation(&scn).unwrap();
        let order = scn.ids_by_position();
        assert!(violators(&scn, &order, &a.activated).is_empty());
        for &h in &a.hidden {
            assert!(!satisfies_own(&scn, &order, &a.activated, h), "hidden {h} could enter");
        }
        assert!(!a.hidden.is_empty());
    }

    #[test]
    fn lattice_line_converges_to_unit_prices() {
        let pos: Vec<f64> = (0..11).map(|k| k as f64 - 5.0).collect();
        let scn = line(&pos, 1.0, 0.0, BrandExponent::Zero, (-5.5, 5.5));
        let mut init = scn.prices();
        for i in 1..10 {
            init.set(i, 0.2 + 0.1 * i as f64);
        }
        let report = iterate_best_response(&scn, &init, &SolverOptions::for_scenario(&scn)).unwrap();
        assert!(report.converged);
        for i in 1..10 {
            assert_abs_diff_eq!(report.prices[&i], 1.0, epsilon = 1e-6);
            let c = &report.per_company[&i];
            assert_abs_diff_eq!(c.area, 1.0, epsilon = 1e-6);
            assert!(c.condition_residual.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn starting_at_equilibrium_needs_no_iterations() {
        let pos: Vec<f64> = (0..5).map(|k| k as f64 - 2.0).collect();
        let scn = line(&pos, 1.0, 0.0, BrandExponent::Zero, (-2.5, 2.5));
        let report =
            iterate_best_response(&scn, &scn.prices(), &SolverOptions::for_scenario(&scn)).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert!(report.residual <= 1e-8 * scn.price_upper);
    }

    #[test]
    fn perturbed_price_shows_in_residual() {
        let pos: Vec<f64> = (0..5).map(|k| k as f64 - 2.0).collect();
        let scn = line(&pos, 1.0, 0.0, BrandExponent::Zero, (-2.5, 2.5));
        let mut p = scn.prices();
        p.set(2, 1.1);
        let report = verify_equilibrium(&scn, &p).unwrap();
        assert!(!report.converged);
        assert!(report.per_company[&2].condition_residual.unwrap() > 0.01);
    }

    #[test]
    fn simultaneous_schedule_also_converges() {
        let pos: Vec<f64> = (0..7).map(|k| k as f64 - 3.0).collect();
        let scn = line(&pos, 1.0, 0.0, BrandExponent::Zero, (-3.5, 3.5));
        let mut opts = SolverOptions::for_scenario(&scn);
        opts.schedule = Schedule::Simultaneous;
        let mut init = scn.prices();
        for i in 1..6 {
            init.set(i, 0.0);
        }
        let report = iterate_best_response(&scn, &init, &opts).unwrap();
        assert!(report.converged);
        assert!(report.cycle.is_none());
        assert_eq!(report.schedule, Schedule::Simultaneous);
    }

    #[test]
    fn hidden_company_priced_at_upper_and_out_of_market() {
        let scn = line(&[0.0, 1.0, 2.0], 1.0, 1.2, BrandExponent::One, (-0.5, 2.5));
        let report =
            iterate_best_response(&scn, &scn.prices(), &SolverOptions::for_scenario(&scn)).unwrap();
        assert!(report.converged);
        assert_eq!(report.prices[&1], scn.price_upper);
        let mid = &report.per_company[&1];
        assert!(mid.hidden);
        assert_eq!(mid.area, 0.0);
        let audit = deviation_audit(&scn, &report.price_vector(), 2001).unwrap();
        let mid_audit = audit.iter().find(|a| a.company == 1).unwrap();
        assert_eq!(mid_audit.best_deviation_profit, 0.0);
    }
}
