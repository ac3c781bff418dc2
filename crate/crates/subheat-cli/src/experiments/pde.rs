use serde_json::json;

use subheat::pde::{
    fixed_point_solve, integrating_factor_rk4, residual_check, sup_norm_path_diff, CauchyProblem,
};

use crate::config::PdeConfig;
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &PdeConfig, mut report: Report) -> Result<bool, RunError> {
    let grid = config.grid.build()?;
    let members = config.u0.build(grid);
    let (_, shape) = members
        .first()
        .ok_or_else(|| RunError::Numerics("u0 config produced no field".into()))?;
    let mut u0 = shape.to_physical()?;
    for v in u0.values_mut() {
        *v *= config.amplitude;
    }

    let mut problem = CauchyProblem::new(config.beta, u0, config.t_final, config.time_slices);
    problem.experimental = config.experimental;
    if let Some(w) = &config.weighted_norm {
        problem.weighted_norm = w.build()?;
    }

    let state = fixed_point_solve(&problem, config.tol, config.max_iter)?;
    let residual = residual_check(&problem, &state.path)?;
    let max_factor = state
        .contraction_factors
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);

    // convergence history
    let hist_rows: Vec<String> = state
        .diff_history
        .iter()
        .enumerate()
        .map(|(i, &diff)| {
            let factor = if i == 0 {
                f64::NAN
            } else {
                state.contraction_factors[i - 1]
            };
            format!("{},{},{}", i + 1, fmt(diff), fmt(factor))
        })
        .collect();
    report.csv("history.csv", "iter,diff_norm,contraction_factor", &hist_rows)?;

    // solution path, one row per (slice, lattice index)
    let dt = config.t_final / config.time_slices as f64;
    let mut path_rows = Vec::new();
    for (k, slice) in state.path.iter().enumerate() {
        let phys = slice.to_physical()?;
        for (i, v) in phys.values().iter().enumerate() {
            path_rows.push(format!(
                "{},{},{},{},{}",
                k,
                fmt(k as f64 * dt),
                i,
                fmt(v.re),
                fmt(v.im)
            ));
        }
    }
    report.csv("path.csv", "slice,t,index,re,im", &path_rows)?;

    report.gate(Gate::flag("fixed point converged", state.converged));
    report.gate(Gate::le("residual ||u - Qu||", residual, 10.0 * config.tol));
    report.gate(Gate::le("max contraction factor", max_factor, 1.0));

    // mean preservation along the path
    let mean0 = problem.u0.to_frequency()?.values()[0];
    let mean_drift = state
        .path
        .iter()
        .map(|s| (s.values()[0] - mean0).norm())
        .fold(0.0f64, f64::max);
    report.gate(Gate::le("mean preservation", mean_drift, 1e-12));

    let mut oracle_diff = f64::NAN;
    if let Some(tolerance) = config.oracle_tolerance {
        let oracle = integrating_factor_rk4(&problem, config.oracle_oversample)?;
        oracle_diff = sup_norm_path_diff(&state.path, &oracle)?;
        report.gate(Gate::le(
            "integrating-factor RK4 agreement (sup norm)",
            oracle_diff,
            tolerance,
        ));
    }

    Ok(report.finish(
        "pde",
        json!({
            "beta": config.beta,
            "iterations": state.iterations,
            "residual": residual,
            "max_contraction_factor": max_factor,
            "oracle_sup_diff": if oracle_diff.is_nan() { json!(null) } else { json!(oracle_diff) },
        }),
    )?)
}
