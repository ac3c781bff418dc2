use serde_json::json;

use subheat::grid::DyadicPartition;
use subheat::norms::norm_value;

use crate::config::{build_fields, NormsConfig};
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &NormsConfig, mut report: Report) -> Result<bool, RunError> {
    let grid = config.grid.build()?;
    let part = DyadicPartition::build(grid)?;
    let fields = build_fields(&config.fields, grid);
    let mut rows = Vec::new();
    let mut all_finite = true;
    for (name, field) in &fields {
        for norm in &config.norms {
            let spec = norm.build()?;
            let value = norm_value(field, &part, &spec)?;
            all_finite &= value.is_finite();
            let scale = match spec.scale {
                subheat::norms::NormScale::Besov => "B",
                subheat::norms::NormScale::Triebel => "F",
            };
            rows.push(format!(
                "{},{},{},{},{},{}",
                name,
                scale,
                fmt(spec.s),
                fmt(spec.p),
                fmt(spec.q),
                fmt(value)
            ));
        }
    }
    report.csv("norms.csv", "field,norm_scale,s,p,q,value", &rows)?;
    report.gate(Gate::flag("all norm values finite", all_finite));
    Ok(report.finish(
        "norms",
        json!({"fields": fields.len(), "norms": config.norms.len()}),
    )?)
}
