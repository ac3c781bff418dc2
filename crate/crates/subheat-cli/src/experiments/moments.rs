use serde_json::json;

use subheat::subordinator::{
    moment_closed_form, moment_quadrature, moment_sandwich_check, power_mean, sample_stable,
};

use crate::config::MomentsConfig;
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &MomentsConfig, mut report: Report) -> Result<bool, RunError> {
    let mut rows = Vec::new();
    let mut worst_rel = 0.0f64;
    for &alpha in &config.alpha_grid {
        for &r in &config.r_grid {
            for &t in &config.t_grid {
                let closed = moment_closed_form(alpha, -r, t)?;
                let quad = moment_quadrature(alpha, r, t)?;
                worst_rel = worst_rel.max((closed - quad).abs() / closed.abs());
                let (mc, stderr) = if config.mc_count > 0 {
                    let batch = sample_stable(alpha, t, config.mc_count, config.seed);
                    power_mean(&batch, -r)
                } else {
                    (f64::NAN, f64::NAN)
                };
                rows.push(format!(
                    "{},{},{},{},{},{},{}",
                    fmt(alpha),
                    fmt(t),
                    fmt(r),
                    fmt(closed),
                    fmt(quad),
                    fmt(mc),
                    fmt(stderr)
                ));
            }
        }
    }
    report.csv(
        "moments.csv",
        "alpha,t,r,closed_form,quadrature,mc_estimate,mc_stderr",
        &rows,
    )?;
    report.gate(Gate::le(
        "closed form vs quadrature relative error",
        worst_rel,
        config.tolerance_rel,
    ));

    let mut sandwich_detail = json!(null);
    if let Some(sandwich) = &config.sandwich {
        let mut rows = Vec::new();
        let mut all_hold = true;
        for family in &sandwich.families {
            let f = family.build();
            for &r in &sandwich.r_grid {
                let records = moment_sandwich_check(&f, r, &sandwich.t_grid)?;
                for rec in records {
                    all_hold &= rec.holds;
                    rows.push(format!(
                        "{},{},{},{},{},{},{},{}",
                        f.name(),
                        fmt(r),
                        fmt(rec.t),
                        fmt(rec.lower),
                        fmt(rec.estimate),
                        fmt(rec.upper),
                        rec.divergent,
                        rec.holds
                    ));
                }
            }
        }
        report.csv(
            "sandwich.csv",
            "family,r,t,lower,estimate,upper,divergent,holds",
            &rows,
        )?;
        report.gate(Gate::flag("moment sandwich holds at every point", all_hold));
        sandwich_detail = json!({"points": rows.len()});
    }

    Ok(report.finish(
        "moments",
        json!({
            "worst_relative_error": worst_rel,
            "sandwich": sandwich_detail,
        }),
    )?)
}
