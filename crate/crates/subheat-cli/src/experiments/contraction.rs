use serde_json::json;

use subheat::smoothing::{contraction_norm_suite, contraction_suite};

use crate::config::{build_fields, ContractionConfig};
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &ContractionConfig, mut report: Report) -> Result<bool, RunError> {
    let grid = config.grid.build()?;
    let fields = build_fields(&config.fields, grid);
    let specs = match &config.norms {
        Some(norms) => norms
            .iter()
            .map(|n| n.build())
            .collect::<Result<Vec<_>, _>>()?,
        None => contraction_norm_suite(),
    };

    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for kind_config in &config.kinds {
        let kind = kind_config.build();
        let result = contraction_suite(&kind, &config.t_grid, &specs, &fields)?;
        worst = worst.max(result.max_ratio);
        for (norm, t, field, ratio) in result.rows {
            rows.push(format!(
                "{},{},{},{},{}",
                kind.label(),
                norm,
                fmt(t),
                field,
                fmt(ratio)
            ));
        }
    }
    report.csv("contraction.csv", "kind,norm,t,field,ratio", &rows)?;
    report.gate(Gate::le(
        "max ||W_t u|| / ||u|| over the suite",
        worst,
        1.0 + config.tolerance,
    ));
    Ok(report.finish(
        "contraction",
        json!({
            "norms": specs.len(),
            "fields": fields.len(),
            "kinds": config.kinds.len(),
            "max_ratio": worst,
        }),
    )?)
}
