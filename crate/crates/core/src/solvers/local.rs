use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_wrp, Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{better, items, nominal_solve, Instance};
use crate::uncertainty::Mixture;
use crate::TOL;

/// Steepest descent on the mixture objective from nominal starts.
///
/// The first start solves the nominal problem on the mixed center costs;
/// each of the `restarts` further starts perturbs those costs by factors
/// drawn from `[0.75, 1.25)`. Neighbors of a selection are single swaps;
/// neighbors of a path are the shortest center-cost paths through one arc
/// the path does not use.
pub fn solve_local_search(inst: &Instance, mix: &Mixture, restarts: usize, seed: u64) -> Result<SolveReport> {
    let center = mix.center_costs()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut moves = 0;
    let mut calls = 0;

    for r in 0..=restarts {
        let costs: Vec<f64> = if r == 0 {
            center.clone()
        } else {
            center.iter().map(|c| c * rng.random_range(0.75..1.25)).collect()
        };
        calls += 1;
        let mut x = nominal_solve(inst, &costs, &[], &[])?.x;
        let mut value = evaluate_wrp(mix, &x)?;
        loop {
            let mut step: Option<(f64, Vec<bool>)> = None;
            for y in neighbors(inst, &center, &x, &mut calls)? {
                let v = evaluate_wrp(mix, &y)?;
                if step.as_ref().is_none_or(|(sv, sx)| better(v, &y, *sv, sx, TOL)) {
                    step = Some((v, y));
                }
            }
            match step {
                Some((v, y)) if v < value - TOL => {
                    x = y;
                    value = v;
                    moves += 1;
                }
                _ => break,
            }
        }
        if best.as_ref().is_none_or(|(bv, bx)| better(value, &x, *bv, bx, TOL)) {
            best = Some((value, x));
        }
    }

    let (_, x) = best.expect("at least one start");
    let mut report = SolveReport::new(mix, x, Method::Local, false)?;
    report.improving_moves = moves;
    report.oracle_calls = calls;
    Ok(report)
}

fn neighbors(inst: &Instance, center: &[f64], x: &[bool], calls: &mut usize) -> Result<Vec<Vec<bool>>> {
    let mut out = Vec::new();
    match inst {
        Instance::Selection { .. } => {
            let chosen = items(x);
            for &i in &chosen {
                for j in (0..x.len()).filter(|&j| !x[j]) {
                    let mut y = x.to_vec();
                    y[i] = false;
                    y[j] = true;
                    out.push(y);
                }
            }
        }
        Instance::ShortestPath { .. } => {
            for e in (0..x.len()).filter(|&e| !x[e]) {
                *calls += 1;
                match nominal_solve(inst, center, &[e], &[]) {
                    Ok(sol) => {
                        if !out.contains(&sol.x) {
                            out.push(sol.x);
                        }
                    }
                    Err(Error::Infeasible(_)) => {}
                    Err(err) => return Err(err),
                }
            }
        }
    }
    Ok(out)
}
