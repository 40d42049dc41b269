use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use brandmarket::areas::compute_wipeout_diagnostics;
use brandmarket::{
    best_response, find_breakpoints, grid_best_response, grid_partition, iterate_best_response,
    load_scenario, ownership_conflicts, solve_areas, verify_equilibrium, Dimension, Error,
    EquilibriumReport, GridSpec, Scenario, SolverOptions,
};

use crate::{svg, Command, Output, Solver};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, source: std::io::Error },
    Report(String),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Io { .. } => "IoError",
            CliError::Report(_) => "SchemaError",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Report(msg) => write!(f, "malformed report: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_scenario(path: &Path) -> CliResult<Scenario> {
    Ok(load_scenario(&read(path)?)?)
}

fn read_report(path: &Path) -> CliResult<EquilibriumReport> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Report(e.to_string()))
}

fn emit(output: &Output, text: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json<T: Serialize>(output: &Output, value: &T) -> CliResult<()> {
    emit(output, &serde_json::to_string_pretty(value).expect("serialisable"))
}

fn options(scn: &Scenario, solver: &Solver) -> SolverOptions {
    let mut opts = SolverOptions::for_scenario(scn);
    if let Some(tol) = solver.tol {
        opts.tol = tol;
    }
    opts.max_iter = solver.max_iter;
    opts.schedule = solver.schedule.into();
    opts
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Validate { scenario } => {
            let scn = read_scenario(&scenario)?;
            println!(
                "ok: {} companies ({} focal), dimension {}, q = {}, beta = {}",
                scn.len(),
                scn.focal_ids().count(),
                scn.k(),
                scn.q.as_u32(),
                scn.beta
            );
            Ok(())
        }
        Command::Cells { scenario, output } => {
            let scn = read_scenario(&scenario)?;
            let prices = scn.prices();
            let part = solve_areas(&scn, &prices)?;
            let mut wipeout = serde_json::Map::new();
            if scn.dimension == Dimension::One {
                for i in scn.focal_ids() {
                    match compute_wipeout_diagnostics(&scn, &prices, &part, i) {
                        Ok(entry) => {
                            wipeout.insert(i.to_string(), serde_json::to_value(entry).unwrap());
                        }
                        Err(Error::BoundaryCompany { .. }) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            emit_json(
                &output,
                &json!({
                    "areas": part.areas,
                    "survivors": part.survivors,
                    "cells": part.cells,
                    "neighbors": part.neighbors,
                    "wipeout": wipeout,
                }),
            )
        }
        Command::BestResponse {
            scenario,
            company,
            output,
        } => {
            let scn = read_scenario(&scenario)?;
            let prices = scn.prices();
            let br = best_response(&scn, &prices, company)?;
            let breakpoints = find_breakpoints(&scn, &prices, company)?;
            emit_json(
                &output,
                &json!({
                    "company": company,
                    "price": br.price,
                    "profit": br.profit,
                    "wiped_out": br.wiped_out,
                    "breakpoints": breakpoints,
                }),
            )
        }
        Command::Equilibrium {
            scenario,
            solver,
            multi_start,
            seed,
            verify,
            output,
        } => {
            let scn = read_scenario(&scenario)?;
            let report = match verify {
                Some(path) => {
                    let saved = read_report(&path)?;
                    if saved.prices.len() != scn.len() {
                        return Err(CliError::Report(format!(
                            "report has {} prices, scenario has {} companies",
                            saved.prices.len(),
                            scn.len()
                        )));
                    }
                    verify_equilibrium(&scn, &saved.price_vector())?
                }
                None => solve_multi_start(&scn, &options(&scn, &solver), multi_start, seed)?,
            };
            emit_json(&output, &report)
        }
        Command::SweepBeta {
            scenario,
            from,
            to,
            steps,
            solver,
            output,
        } => {
            let scn = read_scenario(&scenario)?;
            emit_json(&output, &sweep_beta(&scn, &solver, from, to, steps)?)
        }
        Command::OracleCheck {
            scenario,
            grid_res,
            price_samples,
            output,
        } => {
            let scn = read_scenario(&scenario)?;
            emit_json(&output, &oracle_check(&scn, grid_res, price_samples)?)
        }
        Command::Render {
            scenario,
            report,
            output,
        } => {
            let scn = read_scenario(&scenario)?;
            let prices = match report {
                Some(path) => read_report(&path)?.price_vector(),
                None => scn.prices(),
            };
            let scn = scn.with_prices(&prices);
            let part = solve_areas(&scn, &prices)?;
            emit(&output, &svg::render(&scn, &part))
        }
    }
}

fn solve_multi_start(
    scn: &Scenario,
    opts: &SolverOptions,
    extra: usize,
    seed: u64,
) -> CliResult<EquilibriumReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![scn.prices()];
    for _ in 0..extra {
        let mut p = scn.prices();
        for i in scn.focal_ids() {
            p.set(i, rng.gen_range(0.0..=scn.price_upper));
        }
        starts.push(p);
    }
    let mut reports = Vec::with_capacity(starts.len());
    for start in &starts {
        reports.push(iterate_best_response(scn, start, opts)?);
    }
    let best = reports
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            b.converged
                .cmp(&a.converged)
                .then(a.residual.total_cmp(&b.residual))
        })
        .map(|(k, _)| k)
        .expect("at least one start");
    let chosen = reports.swap_remove(best);
    let distinct = reports
        .iter()
        .filter(|r| r.converged && r.price_vector().max_abs_diff(&chosen.price_vector()) > 1e-6)
        .count();
    if distinct > 0 {
        eprintln!("note: {distinct} start(s) converged to a different equilibrium");
    }
    Ok(chosen)
}

#[derive(Debug, Serialize)]
struct SweepPoint {
    beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    converged: bool,
    iterations: usize,
    residual: f64,
    survivors: usize,
    hidden: Vec<usize>,
    prices: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Transition {
    beta_before: f64,
    beta_after: f64,
    survivors_before: usize,
    survivors_after: usize,
}

#[derive(Debug, Serialize)]
struct Sweep {
    points: Vec<SweepPoint>,
    transitions: Vec<Transition>,
}

fn sweep_beta(scn: &Scenario, solver: &Solver, from: f64, to: f64, steps: usize) -> CliResult<Sweep> {
    let steps = steps.max(1);
    let mut warm = scn.prices();
    let mut points: Vec<SweepPoint> = Vec::with_capacity(steps);
    for k in 0..steps {
        let beta = if steps == 1 {
            from
        } else {
            from + (to - from) * k as f64 / (steps - 1) as f64
        };
        let scn_b = scn.with_beta(beta);
        let report = match iterate_best_response(&scn_b, &warm, &options(&scn_b, solver)) {
            Ok(r) => r,
            Err(e) if e.is_input_error() => return Err(e.into()),
            Err(e) => {
                // keep sweeping; a failed point keeps the previous warm start
                points.push(SweepPoint {
                    beta,
                    error: Some(format!("{}: {e}", e.name())),
                    converged: false,
                    iterations: 0,
                    residual: f64::NAN,
                    survivors: 0,
                    hidden: Vec::new(),
                    prices: Vec::new(),
                });
                continue;
            }
        };
        warm = report.price_vector();
        points.push(SweepPoint {
            beta,
            error: None,
            converged: report.converged,
            iterations: report.iterations,
            residual: report.residual,
            survivors: report.per_company.values().filter(|c| c.survivor).count(),
            hidden: report
                .activation
                .map(|a| a.hidden.into_iter().collect())
                .unwrap_or_default(),
            prices: warm.0.clone(),
        });
    }
    let solved: Vec<&SweepPoint> = points.iter().filter(|p| p.error.is_none()).collect();
    let transitions = solved
        .windows(2)
        .filter(|w| w[0].survivors != w[1].survivors)
        .map(|w| Transition {
            beta_before: w[0].beta,
            beta_after: w[1].beta,
            survivors_before: w[0].survivors,
            survivors_after: w[1].survivors,
        })
        .collect();
    Ok(Sweep { points, transitions })
}

#[derive(Debug, Serialize)]
struct AreaCheck {
    company: usize,
    analytic: f64,
    grid: f64,
    tolerance: f64,
    ok: bool,
}

#[derive(Debug, Serialize)]
struct PriceCheck {
    company: usize,
    analytic_price: f64,
    analytic_profit: f64,
    grid_price: f64,
    grid_profit: f64,
}

#[derive(Debug, Serialize)]
struct OracleCheck {
    h: f64,
    areas: Vec<AreaCheck>,
    ownership_conflicts: usize,
    best_responses: Vec<PriceCheck>,
    pass: bool,
}

fn oracle_check(scn: &Scenario, grid_res: f64, price_samples: Option<usize>) -> CliResult<OracleCheck> {
    let prices = scn.prices();
    let grid = GridSpec::relative(scn, grid_res);
    let h = grid.h();
    let exact = solve_areas(scn, &prices)?;
    let approx = grid_partition(scn, &prices, &grid)?;
    let areas: Vec<AreaCheck> = exact
        .survivors
        .iter()
        .map(|&id| {
            let analytic = exact.areas[id];
            let tolerance = f64::max(0.01 * analytic, 2.0 * h * exact.cells[id].perimeter());
            AreaCheck {
                company: id,
                analytic,
                grid: approx.areas[id],
                tolerance,
                ok: (analytic - approx.areas[id]).abs() <= tolerance,
            }
        })
        .collect();
    let conflicts = ownership_conflicts(&exact, &approx.ownership, 2.0 * h).len();
    let mut best_responses = Vec::new();
    if let Some(samples) = price_samples {
        for i in scn.focal_ids() {
            let analytic = best_response(scn, &prices, i)?;
            let grid_br = grid_best_response(scn, &prices, i, samples, &grid)?;
            best_responses.push(PriceCheck {
                company: i,
                analytic_price: analytic.price,
                analytic_profit: analytic.profit,
                grid_price: grid_br.price,
                grid_profit: grid_br.profit,
            });
        }
    }
    let pass = conflicts == 0 && areas.iter().all(|a| a.ok);
    Ok(OracleCheck {
        h,
        areas,
        ownership_conflicts: conflicts,
        best_responses,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ScheduleArg;
    use brandmarket::{Aabb, BrandExponent, Company, Point};

    fn triple() -> Scenario {
        Scenario {
            dimension: Dimension::One,
            beta: 0.0,
            q: BrandExponent::One,
            companies: (0..3)
                .map(|id| Company {
                    id,
                    position: Point::on_line(id as f64),
                    price: 1.0,
                    frozen: true,
                })
                .collect(),
            focal_box_half: 5.0,
            price_upper: 2.0,
            window: Aabb::new(Point::on_line(-0.5), Point::on_line(2.5)),
        }
    }

    fn solver() -> Solver {
        Solver {
            tol: None,
            max_iter: 100,
            schedule: ScheduleArg::Roundrobin,
        }
    }

    #[test]
    fn sweep_finds_the_drop_next_to_one() {
        let sweep = sweep_beta(&triple(), &solver(), 0.0, 1.5, 31).unwrap();
        assert_eq!(sweep.points.len(), 31);
        assert_eq!(sweep.transitions.len(), 1);
        let t = &sweep.transitions[0];
        assert_eq!((t.survivors_before, t.survivors_after), (3, 2));
        assert!(t.beta_before <= 1.0 && t.beta_after >= 1.0 - 1e-12);
    }

    #[test]
    fn input_errors_exit_one_and_solver_errors_two() {
        let input = CliError::Core(Error::UnknownCompany(7));
        assert_eq!(input.exit_code(), 1);
        let solver = CliError::Core(Error::WindowTooSmall { company: 1 });
        assert_eq!(solver.exit_code(), 2);
        assert_eq!(CliError::Report("x".into()).exit_code(), 1);
    }

    #[test]
    fn oracle_check_passes_on_the_triple() {
        let check = oracle_check(&triple(), 1e-3, Some(21)).unwrap();
        assert!(check.pass);
        assert_eq!(check.best_responses.len(), 0);
    }
}
