//! Profit of a single company as a function of its own price, and the
//! profit-maximising price against fixed competitor prices.
//!
//! `W_i(P_i) = P_i · S_i(P_i)` is piecewise smooth: a piece ends whenever
//! the set of companies sharing a border with `i` changes. Breakpoints are
//! found by a coarse scan plus bisection on the neighbour signature, and
//! each piece is maximised separately.

use serde::Serialize;

use crate::areas::{focal_area, focal_area_slope_q0};
use crate::error::{Error, Result};
use crate::model::{BrandExponent, Dimension, PriceVector, Scenario};

/// Coarse scan resolution used to locate breakpoints.
pub const SCAN_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub price: f64,
    pub profit: f64,
    /// `W_i ≡ 0` on `[0, P_upper]`.
    pub wiped_out: bool,
}

/// A price interval on which the neighbour set of the company is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    /// Ids sharing a border of positive length; empty when the company has
    /// no area.
    pub signature: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub price: f64,
    pub area: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityProfile {
    pub pieces: Vec<Piece>,
    pub samples: Vec<Sample>,
}

/// One-sided or central finite difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Central,
    Forward,
    Backward,
}

fn check_company(scn: &Scenario, i: usize) -> Result<()> {
    if i >= scn.len() {
        Err(Error::UnknownCompany(i))
    } else {
        Ok(())
    }
}

fn eps_bp(scn: &Scenario) -> f64 {
    1e-10 * scn.price_upper
}

/// Finite-difference step for area derivatives.
pub fn derivative_step(scn: &Scenario) -> f64 {
    1e-6 * scn.price_upper
}

fn area_and_signature(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    price: f64,
) -> Result<(f64, Vec<usize>)> {
    let mut p = prices.clone();
    p.set(i, price);
    focal_area(scn, &p, i)
}

/// `(W_i, S_i)` with company `i` charging `price` and everybody else as in
/// `prices`.
pub fn utility(scn: &Scenario, prices: &PriceVector, i: usize, price: f64) -> Result<(f64, f64)> {
    check_company(scn, i)?;
    let (area, _) = area_and_signature(scn, prices, i, price)?;
    Ok((price * area, area))
}

/// Numeric `dS_i/dP_i` at `price`.
pub fn area_slope(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    price: f64,
    side: Side,
) -> Result<f64> {
    let h = derivative_step(scn);
    let s = |p: f64| utility(scn, prices, i, p).map(|(_, s)| s);
    Ok(match side {
        Side::Central => (s(price + h)? - s(price - h)?) / (2.0 * h),
        Side::Forward => (s(price + h)? - s(price)?) / h,
        Side::Backward => (s(price)? - s(price - h)?) / h,
    })
}

/// `(lo, hi, signature below, signature above)`.
type Bracket = (f64, f64, Vec<usize>, Vec<usize>);

/// Price pairs `(lo, hi)` bracketing each change of neighbour signature,
/// with `hi − lo <= ε_bp`.
fn breakpoint_brackets(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<Vec<Bracket>> {
    let upper = scn.price_upper;
    let sig = |p: f64| area_and_signature(scn, prices, i, p).map(|(_, s)| s);
    let grid: Vec<f64> = (0..=SCAN_SAMPLES)
        .map(|k| upper * k as f64 / SCAN_SAMPLES as f64)
        .collect();
    let sigs: Vec<Vec<usize>> = grid.iter().map(|&p| sig(p)).collect::<Result<_>>()?;
    if sigs[0].is_empty() {
        return Ok(Vec::new());
    }
    let tol = eps_bp(scn);
    let mut out = Vec::new();
    for k in 0..SCAN_SAMPLES {
        let (mut a, mut sig_a) = (grid[k], sigs[k].clone());
        let (b, sig_b) = (grid[k + 1], &sigs[k + 1]);
        // several changes may sit inside one scan cell
        while sig_a != *sig_b {
            let (mut lo, mut hi) = (a, b);
            let mut sig_hi = sig_b.clone();
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let s = sig(mid)?;
                if s == sig_a {
                    lo = mid;
                } else {
                    hi = mid;
                    sig_hi = s;
                }
            }
            out.push((lo, hi, sig_a.clone(), sig_hi.clone()));
            a = hi;
            sig_a = sig_hi;
        }
    }
    Ok(out)
}

/// Sorted prices in `(0, P_upper)` where the company's neighbour set
/// changes.
pub fn find_breakpoints(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<Vec<f64>> {
    check_company(scn, i)?;
    Ok(breakpoint_brackets(scn, prices, i)?
        .into_iter()
        .map(|(lo, hi, _, _)| 0.5 * (lo + hi))
        .collect())
}

/// Breakpoint pieces plus a uniform sample of `W_i`.
pub fn utility_profile(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    samples: usize,
) -> Result<UtilityProfile> {
    check_company(scn, i)?;
    let pieces = pieces(scn, prices, i)?;
    let samples = (0..samples)
        .map(|k| {
            let p = scn.price_upper * k as f64 / (samples.max(2) - 1) as f64;
            utility(scn, prices, i, p).map(|(w, s)| Sample {
                price: p,
                area: s,
                profit: w,
            })
        })
        .collect::<Result<_>>()?;
    Ok(UtilityProfile { pieces, samples })
}

fn pieces(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<Vec<Piece>> {
    let brackets = breakpoint_brackets(scn, prices, i)?;
    let mut out = Vec::with_capacity(brackets.len() + 1);
    let mut lo = 0.0;
    let mut signature = area_and_signature(scn, prices, i, 0.0)?.1;
    for (blo, bhi, _, after) in brackets {
        out.push(Piece {
            lo,
            hi: blo,
            signature,
        });
        lo = bhi;
        signature = after;
    }
    out.push(Piece {
        lo,
        hi: scn.price_upper,
        signature,
    });
    Ok(out)
}

/// Profit-maximising price for company `i` against `prices`.
pub fn best_response(scn: &Scenario, prices: &PriceVector, i: usize) -> Result<BestResponse> {
    best_response_with(scn, prices, i, true)
}

/// Same as [`best_response`] but always using the numeric per-piece
/// maximisation, also in 1D with `q = 0`.
pub fn best_response_numeric(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
) -> Result<BestResponse> {
    best_response_with(scn, prices, i, false)
}

fn best_response_with(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    closed_form: bool,
) -> Result<BestResponse> {
    check_company(scn, i)?;
    let upper = scn.price_upper;
    let (_, s0) = utility(scn, prices, i, 0.0)?;
    if s0 <= 0.0 {
        return Ok(BestResponse {
            price: upper,
            profit: 0.0,
            wiped_out: true,
        });
    }
    let use_parabola =
        closed_form && scn.dimension == Dimension::One && scn.q == BrandExponent::Zero;
    // (price, is a stationary point of W)
    let mut candidates: Vec<(f64, bool)> = Vec::new();
    for piece in pieces(scn, prices, i)? {
        candidates.push((piece.lo, false));
        candidates.push((piece.hi, false));
        if piece.signature.is_empty() {
            continue;
        }
        if use_parabola && piece.signature.len() == 2 {
            let v = parabola_vertex(scn, prices, i, &piece.signature);
            candidates.push((v.clamp(piece.lo, piece.hi), true));
        } else if scn.q == BrandExponent::Zero {
            candidates.extend(exact_slope_root(scn, prices, i, piece.lo, piece.hi)?.map(|r| (r, true)));
        } else if let Some(roots) = polynomial_stationary(scn, prices, i, piece.lo, piece.hi)? {
            candidates.extend(roots.into_iter().map(|r| (r, true)));
        } else {
            candidates.push((maximise_piece(scn, prices, i, piece.lo, piece.hi)?, true));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let scored: Vec<(f64, bool, f64)> = candidates
        .into_iter()
        .map(|(p, root)| utility(scn, prices, i, p).map(|(w, _)| (p, root, w)))
        .collect::<Result<_>>()?;
    let top = scored.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    // Near the optimum W is flat to second order, so profits within rounding
    // noise cannot rank prices closer than ~1e-8. Among such near-ties a
    // stationary point is the accurate location; otherwise the lowest price.
    let noise = 1e-12 * top.abs().max(f64::MIN_POSITIVE);
    let near: Vec<&(f64, bool, f64)> = scored.iter().filter(|c| c.2 >= top - noise).collect();
    let &(price, _, profit) = near
        .iter()
        .find(|c| c.1 && c.2 > 0.0)
        .or_else(|| near.first())
        .copied()
        .expect("at least the endpoints are candidates");
    Ok(BestResponse {
        price,
        profit,
        wiped_out: false,
    })
}

/// Vertex of `W = P (A − γ P)` with both line neighbours fixed. From the
/// two boundary equations, in coordinates centred on `x_i`,
/// `S = Σ_j (P_j + d_j²) / (2 d_j) − P Σ_j 1 / (2 d_j)`.
fn parabola_vertex(scn: &Scenario, prices: &PriceVector, i: usize, neighbors: &[usize]) -> f64 {
    let xi = scn.position(i).x;
    let (a, gamma) = neighbors.iter().fold((0.0, 0.0), |(a, g), &j| {
        let d = (scn.position(j).x - xi).abs();
        (a + (prices.get(j) + d * d) / (2.0 * d), g + 1.0 / (2.0 * d))
    });
    a / (2.0 * gamma)
}

/// Root of `W'(P) = S(P) − P γ(P)` on `[lo, hi]` by bisection, using the
/// geometric slope `dS/dP = −γ` (valid for `q = 0`). `W'` is continuous in
/// the price, so a sign change brackets the stationary point.
fn exact_slope_root(scn: &Scenario, prices: &PriceVector, i: usize, lo: f64, hi: f64) -> Result<Option<f64>> {
    let mut trial = prices.clone();
    let mut slope = |p: f64| -> Result<f64> {
        trial.set(i, p);
        let (s, gamma) = focal_area_slope_q0(scn, &trial, i)?;
        Ok(s - p * gamma)
    };
    let (ga, gb) = (slope(lo)?, slope(hi)?);
    if !(ga > 0.0 && gb < 0.0) {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// With the neighbour set fixed, every cell edge moves linearly in the price,
/// so `S(P)` is a polynomial of degree at most two on the piece and
/// `W = P S(P)` at most cubic. Fits `S` through three interior samples,
/// confirms the fit at two more, and returns the stationary points of `W`.
/// Roots a little outside the piece are kept because an optimum sitting on a
/// breakpoint is only bracketed to `ε_bp`. `None` when the fit is off.
fn polynomial_stationary(
    scn: &Scenario,
    prices: &PriceVector,
    i: usize,
    lo: f64,
    hi: f64,
) -> Result<Option<Vec<f64>>> {
    let width = hi - lo;
    if width <= 1e-6 * scn.price_upper {
        return Ok(None);
    }
    let area = |t: f64| utility(scn, prices, i, lo + t * width).map(|(_, s)| s);
    // quadratic in the local coordinate t ∈ [0, 1]
    let (s0, s1, s2) = (area(0.2)?, area(0.5)?, area(0.8)?);
    let c2 = (s0 - 2.0 * s1 + s2) / (2.0 * 0.09);
    let c1 = (s2 - s0) / 0.6 - c2 * (0.2 + 0.8);
    let c0 = s1 - c1 * 0.5 - c2 * 0.25;
    let fit = |t: f64| c0 + t * (c1 + t * c2);
    let scale = s0.abs().max(s2.abs()).max(1e-300);
    for t in [0.35, 0.65] {
        if (area(t)? - fit(t)).abs() > 1e-9 * scale {
            return Ok(None);
        }
    }
    // back to P: S = a + b P + c P²
    let c = c2 / (width * width);
    let b = c1 / width - 2.0 * c * lo;
    let a = c0 - b * lo - c * lo * lo;
    // W' = a + 2 b P + 3 c P²
    let (qa, qb, qc) = (3.0 * c, 2.0 * b, a);
    let mut roots = Vec::new();
    if qa.abs() <= 1e-12 * (qb.abs() + qc.abs()) {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                roots.push(q / qa);
                roots.push(qc / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    let slack = derivative_step(scn);
    Ok(Some(
        roots
            .into_iter()
            .filter(|r| r.is_finite() && *r >= lo - slack && *r <= hi + slack)
            .map(|r| r.clamp(0.0, scn.price_upper))
            .collect(),
    ))
}

/// Maximiser of `W` on `[lo, hi]` where the neighbour set is constant.
fn maximise_piece(scn: &Scenario, prices: &PriceVector, i: usize, lo: f64, hi: f64) -> Result<f64> {
    let h = derivative_step(scn);
    let w = |p: f64| utility(scn, prices, i, p).map(|(w, _)| w);
    if hi - lo <= 2.0 * h {
        return Ok(if w(lo)? >= w(hi)? { lo } else { hi });
    }
    let slope = |p: f64| -> Result<f64> {
        if p - h < lo {
            Ok((w(p + h)? - w(p)?) / h)
        } else if p + h > hi {
            Ok((w(p)? - w(p - h)?) / h)
        } else {
            Ok((w(p + h)? - w(p - h)?) / (2.0 * h))
        }
    };
    let (ga, gb) = (slope(lo)?, slope(hi)?);
    let tol = 1e-13 * scn.price_upper;
    if ga > 0.0 && gb < 0.0 {
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if slope(mid)? > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok(0.5 * (a + b));
    }
    golden_section(&w, lo, hi, tol)
}

fn golden_section(w: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (w(c)?, w(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = w(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = w(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Point};
    use crate::model::Company;
    use approx::assert_abs_diff_eq;

    fn line(positions: &[f64], prices: &[f64], beta: f64, q: BrandExponent, window: (f64, f64)) -> Scenario {
        let n = positions.len();
        Scenario {
            dimension: Dimension::One,
            beta,
            q,
            companies: positions
                .iter()
                .zip(prices)
                .enumerate()
                .map(|(id, (&x, &p))| Company {
                    id,
                    position: Point::on_line(x),
                    price: p,
                    frozen: id == 0 || id == n - 1,
                })
                .collect(),
            focal_box_half: 100.0,
            price_upper: 3.0,
            window: Aabb::new(Point::on_line(window.0), Point::on_line(window.1)),
        }
    }

    fn neighbours_at_unit_distance() -> Scenario {
        line(&[-1.0, 0.0, 1.0], &[1.0, 1.0, 1.0], 0.0, BrandExponent::Zero, (-2.0, 2.0))
    }

    #[test]
    fn utility_with_unit_neighbours() {
        let scn = neighbours_at_unit_distance();
        // S = 1 + (1 − P)
        let (w, s) = utility(&scn, &scn.prices(), 1, 1.0).unwrap();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-14);
        let (w, s) = utility(&scn, &scn.prices(), 1, 0.5).unwrap();
        assert_abs_diff_eq!(s, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w, 0.75, epsilon = 1e-14);
        assert_eq!(utility(&scn, &scn.prices(), 1, 0.0).unwrap().0, 0.0);
        // choke price: 2 − P = 0
        assert_eq!(utility(&scn, &scn.prices(), 1, 2.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn best_response_is_parabola_vertex() {
        let scn = neighbours_at_unit_distance();
        let br = best_response(&scn, &scn.prices(), 1).unwrap();
        assert_abs_diff_eq!(br.price, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(br.profit, 1.0, epsilon = 1e-12);
        assert!(!br.wiped_out);
    }

    #[test]
    fn closed_form_agrees_with_numeric_path() {
        let scn = line(
            &[-1.3, -0.2, 0.9, 2.5],
            &[0.7, 0.4, 1.1, 0.2],
            0.0,
            BrandExponent::Zero,
            (-2.0, 3.0),
        );
        for i in [1, 2] {
            let a = best_response(&scn, &scn.prices(), i).unwrap();
            let b = best_response_numeric(&scn, &scn.prices(), i).unwrap();
            assert_abs_diff_eq!(a.price, b.price, epsilon = 1e-9);
            assert_abs_diff_eq!(a.profit, b.profit, epsilon = 1e-9);
        }
    }

    #[test]
    fn interior_company_on_line_has_no_breakpoints() {
        let mut scn = neighbours_at_unit_distance();
        scn.price_upper = 1.5;
        assert!(find_breakpoints(&scn, &scn.prices(), 1).unwrap().is_empty());
    }

    #[test]
    fn choke_price_is_the_only_breakpoint_on_a_line() {
        let scn = neighbours_at_unit_distance();
        let bps = find_breakpoints(&scn, &scn.prices(), 1).unwrap();
        // the only change is the choke price where the area drops below
        // ε_area = 4e-9
        assert_eq!(bps.len(), 1);
        assert_abs_diff_eq!(bps[0], 2.0 - 4e-9, epsilon = 1e-9);
    }

    #[test]
    fn wiped_out_company() {
        // β above the threshold: the middle company never survives
        let mut scn = line(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0], 1.2, BrandExponent::One, (-0.5, 2.5));
        scn.price_upper = 3.0;
        let br = best_response(&scn, &scn.prices(), 1).unwrap();
        assert!(br.wiped_out);
        assert_eq!(br.price, scn.price_upper);
        assert_eq!(br.profit, 0.0);
        assert!(find_breakpoints(&scn, &scn.prices(), 1).unwrap().is_empty());
    }

    #[test]
    fn best_response_beats_dense_scan() {
        let scn = line(
            &[0.0, 0.8, 1.5, 2.9, 3.6],
            &[0.5, 0.2, 0.9, 0.4, 0.6],
            0.3,
            BrandExponent::One,
            (-0.6, 4.2),
        );
        for i in 1..4 {
            let br = best_response(&scn, &scn.prices(), i).unwrap();
            for k in 0..=2000 {
                let p = scn.price_upper * k as f64 / 2000.0;
                let (w, _) = utility(&scn, &scn.prices(), i, p).unwrap();
                assert!(w <= br.profit * (1.0 + 1e-9) + 1e-15, "i={i} p={p} w={w} br={br:?}");
            }
        }
    }

    #[test]
    fn unknown_company_is_an_error() {
        let scn = neighbours_at_unit_distance();
        assert!(matches!(
            best_response(&scn, &scn.prices(), 7),
            Err(Error::UnknownCompany(7))
        ));
    }
}
