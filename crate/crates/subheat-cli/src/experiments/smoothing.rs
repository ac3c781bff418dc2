use serde_json::json;

use subheat::smoothing::{
    constant_bound_check, exponent_fit, gamma_ratio, general_f_smoothing_check, log_time_grid,
    smoothing_ratio, SmoothingExperiment,
};

use crate::config::{build_fields, SmoothingConfig};
use crate::report::{fmt, loglog_svg, Gate, Report};

use super::RunError;

pub fn run(config: &SmoothingConfig, mut report: Report) -> Result<bool, RunError> {
    let grid = config.grid.build()?;
    let norm_in = config.norm_in.build()?;
    let t_grid = log_time_grid(config.t_range[0], config.t_range[1], config.t_points);
    let rate = config.semigroup.rate_exponent();

    let mut detail = Vec::new();
    for &d in &config.d_values {
        let exp = SmoothingExperiment {
            kind: config.semigroup.build(),
            norm_in,
            gain_d: d,
            t_grid: t_grid.clone(),
            fields: build_fields(&config.fields, grid),
        };
        let table = smoothing_ratio(&exp)?;
        let fit = exponent_fit(&table.max_per_t, config.fit_window_frac)?;

        // Gamma-ratio bound when the symbol has a rate exponent; the bound
        // shape is c (t^{-d/(2a)} Gamma(1+d/(2a))/Gamma(1+d/2) + 1) with c
        // calibrated as the grid max.
        let bound = rate.map(|a| constant_bound_check(a, d, &table.max_per_t));
        let bound_at = |t: f64| -> f64 {
            match (&bound, rate) {
                (Some(b), Some(a)) => {
                    b.calibrated * (t.powf(-d / (2.0 * a)) * gamma_ratio(a, d) + 1.0)
                }
                _ => f64::NAN,
            }
        };

        let rows: Vec<String> = table
            .rows
            .iter()
            .map(|r| {
                let b = bound_at(r.t);
                format!(
                    "{},{},{},{},{}",
                    fmt(r.t),
                    r.field,
                    fmt(r.ratio),
                    fmt(b),
                    fmt(b - r.ratio)
                )
            })
            .collect();
        report.csv(
            &format!("smoothing_d{d}.csv"),
            "t,field_id,ratio,bound,margin",
            &rows,
        )?;

        if config.check_slope {
            let a = rate.expect("validated: slope check needs a rate exponent");
            let target = -d / (2.0 * a);
            let tol = 0.05f64.max(0.05 * target.abs());
            report.gate(Gate::le(
                format!("d={d}: |fitted slope - ({target:.4})|"),
                (fit.slope - target).abs(),
                tol,
            ));
            report.gate(Gate::ge(format!("d={d}: fit r^2"), fit.r_squared, 0.98));
        }
        if let Some(check) = &bound {
            let worst_margin = check
                .margins
                .iter()
                .map(|&(_, m)| m)
                .fold(f64::INFINITY, f64::min);
            report.gate(Gate::ge(
                format!("d={d}: Gamma-ratio bound margin"),
                worst_margin,
                -1e-12,
            ));
            report.gate(Gate::le(
                format!("d={d}: calibrated constant stability"),
                check.stability,
                10.0,
            ));
        }
        let mut general_stability = f64::NAN;
        if let Some(family) = &config.check_general_bound {
            let f = family.build();
            let check = general_f_smoothing_check(&f, d, &table.max_per_t)?;
            let worst_margin = check
                .margins
                .iter()
                .map(|&(_, m)| m)
                .fold(f64::INFINITY, f64::min);
            report.gate(Gate::ge(
                format!("d={d}: general-f bound margin ({})", f.name()),
                worst_margin,
                -1e-12,
            ));
            report.gate(Gate::le(
                format!("d={d}: general-f constant stability"),
                check.stability,
                10.0,
            ));
            general_stability = check.stability;
        }

        if config.plot {
            let series = vec![("max ratio".to_string(), table.max_per_t.clone())];
            let svg = loglog_svg(
                &format!("smoothing ratio, d = {d}"),
                &series,
                Some((fit.slope, fit.intercept)),
            );
            report.svg(&format!("smoothing_d{d}.svg"), &svg)?;
        }

        detail.push(json!({
            "d": d,
            "slope": fit.slope,
            "r_squared": fit.r_squared,
            "target_slope": rate.map(|a| -d / (2.0 * a)),
            "bound_stability": bound.as_ref().map(|b| b.stability),
            "general_f_stability": if general_stability.is_nan() { json!(null) } else { json!(general_stability) },
        }));
    }
    Ok(report.finish("smoothing", json!({ "gains": detail }))?)
}
