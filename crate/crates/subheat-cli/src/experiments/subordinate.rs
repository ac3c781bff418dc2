use serde_json::json;

use subheat::bernstein::BernsteinFunction;
use subheat::semigroup::{SemigroupKind, SemigroupSpec};
use subheat::subordinator::{laplace_mean, mc_subordinate, sample_stable};

use crate::config::SubordinateConfig;
use crate::report::{fmt, Gate, Report};

use super::RunError;

pub fn run(config: &SubordinateConfig, mut report: Report) -> Result<bool, RunError> {
    match config {
        SubordinateConfig::Laplace {
            alpha_grid,
            lambda_grid,
            t,
            count,
            seed,
        } => {
            let mut rows = Vec::new();
            let mut worst_sigmas = 0.0f64;
            for &alpha in alpha_grid {
                let batch = sample_stable(alpha, *t, *count, *seed);
                for &lambda in lambda_grid {
                    let (mean, stderr) = laplace_mean(&batch, lambda);
                    let exact = (-*t * lambda.powf(alpha)).exp();
                    let sigmas = (mean - exact).abs() / stderr;
                    worst_sigmas = worst_sigmas.max(sigmas);
                    rows.push(format!(
                        "{},{},{},{},{},{},{}",
                        fmt(alpha),
                        fmt(lambda),
                        fmt(*t),
                        fmt(mean),
                        fmt(stderr),
                        fmt(exact),
                        fmt(sigmas)
                    ));
                }
            }
            report.csv(
                "laplace.csv",
                "alpha,lambda,t,mc_mean,mc_stderr,exact,sigmas",
                &rows,
            )?;
            report.gate(Gate::le(
                "Laplace identity within standard errors",
                worst_sigmas,
                3.0,
            ));
            Ok(report.finish(
                "subordinate",
                json!({"mode": "laplace", "draws": count, "worst_sigmas": worst_sigmas}),
            )?)
        }
        SubordinateConfig::Field {
            grid,
            field,
            alpha,
            t,
            count,
            seed,
        } => {
            let grid = grid.build()?;
            let members = field.build(grid);
            let (name, u_raw) = members
                .first()
                .ok_or_else(|| RunError::Numerics("field config produced no field".into()))?;
            let u = u_raw.to_physical()?;
            let f = BernsteinFunction::stable(*alpha);
            let mc = mc_subordinate(&f, *t, &u, *count, *seed)?;
            let exact = SemigroupSpec::new(SemigroupKind::Subordinated(f), *t)?.apply(&u)?;

            let l2 = (mc
                .field
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                * grid.dx())
            .sqrt();
            let bound = 3.0 * mc.aggregated_stderr_l2;

            let rows: Vec<String> = (0..grid.len())
                .map(|i| {
                    format!(
                        "{},{},{},{},{}",
                        i,
                        fmt(mc.field.values()[i].re),
                        fmt(mc.field.values()[i].im),
                        fmt(exact.values()[i].re),
                        fmt(exact.values()[i].im)
                    )
                })
                .collect();
            report.csv(
                "subordinate_field.csv",
                "index,mc_re,mc_im,exact_re,exact_im",
                &rows,
            )?;
            report.gate(Gate::le("L2 discrepancy vs 3 sigma", l2, bound));
            Ok(report.finish(
                "subordinate",
                json!({
                    "mode": "field",
                    "field": name,
                    "draws": count,
                    "l2_discrepancy": l2,
                    "three_sigma": bound,
                }),
            )?)
        }
    }
}
