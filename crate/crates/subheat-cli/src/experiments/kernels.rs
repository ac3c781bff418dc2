use serde_json::json;

use subheat::bernstein::BernsteinFunction;
use subheat::semigroup::{SemigroupKind, SemigroupSpec};

use crate::config::{KernelCheckConfig, KernelsConfig};
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &KernelsConfig, mut report: Report) -> Result<bool, RunError> {
    let mut details = Vec::new();
    for (i, check) in config.checks.iter().enumerate() {
        match check {
            KernelCheckConfig::PoissonReference {
                grid,
                t_values,
                tolerance_abs,
            } => {
                let grid = grid.build()?;
                let mut worst = 0.0f64;
                for &t in t_values {
                    let spec = SemigroupSpec::new(
                        SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
                        t,
                    )?;
                    let kernel = spec.kernel_extract(&grid)?;
                    let mut rows = Vec::new();
                    for (j, v) in kernel.values().iter().enumerate() {
                        let x = grid.x(j)[0];
                        let reference = t / (std::f64::consts::PI * (t * t + x * x));
                        if x.abs() <= grid.half_length() / 2.0 {
                            worst = worst.max((v.re - reference).abs());
                        }
                        rows.push(format!(
                            "{},{},{},{}",
                            j,
                            fmt(x),
                            fmt(v.re),
                            fmt(reference)
                        ));
                    }
                    if config.dump_kernels {
                        report.csv(
                            &format!("poisson_kernel_t{t}.csv"),
                            "index,x,kernel,reference",
                            &rows,
                        )?;
                    }
                }
                report.gate(Gate::le(
                    format!("check {i}: Poisson kernel max abs deviation on |x| <= L/2"),
                    worst,
                    *tolerance_abs,
                ));
                details.push(json!({"check": "poisson_reference", "worst_abs": worst}));
            }
            KernelCheckConfig::Positivity {
                grid,
                semigroup,
                t,
                expect,
                threshold,
            } => {
                let grid = grid.build()?;
                let spec = SemigroupSpec::new(semigroup.build(), *t)?;
                let (min, neg_mass) = spec.positivity_probe(&grid)?;
                let label = spec.kind.label();
                if expect == "nonnegative" {
                    report.gate(Gate::ge(
                        format!("check {i}: {label} kernel minimum"),
                        min,
                        -*threshold,
                    ));
                } else {
                    report.gate(Gate::le(
                        format!("check {i}: {label} kernel minimum is negative"),
                        min,
                        -*threshold,
                    ));
                }
                if config.dump_kernels {
                    let kernel = spec.kernel_extract(&grid)?;
                    let rows: Vec<String> = kernel
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(j, v)| format!("{},{},{}", j, fmt(grid.x(j)[0]), fmt(v.re)))
                        .collect();
                    report.csv(&format!("kernel_{i}.csv"), "index,x,kernel", &rows)?;
                }
                details.push(json!({
                    "check": "positivity",
                    "kind": label,
                    "min": min,
                    "negative_mass_fraction": neg_mass,
                }));
            }
            KernelCheckConfig::Mass {
                grid,
                semigroup,
                t,
                tolerance,
            } => {
                let grid = grid.build()?;
                let spec = SemigroupSpec::new(semigroup.build(), *t)?;
                let kernel = spec.kernel_extract(&grid)?;
                let mass: f64 =
                    kernel.values().iter().map(|v| v.re).sum::<f64>() * grid.cell_volume();
                report.gate(Gate::le(
                    format!("check {i}: {} kernel mass deviation", spec.kind.label()),
                    (mass - 1.0).abs(),
                    *tolerance,
                ));
                details.push(json!({"check": "mass", "mass": mass}));
            }
        }
    }
    Ok(report.finish("kernels", json!({ "checks": details }))?)
}
