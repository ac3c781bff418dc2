//! Artifact writers: CSV with 17 significant digits, JSON summaries with
//! sorted keys, and self-contained log-log SVG plots. Everything is written
//! in a deterministic order so identical runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Formats a float with 17 significant digits (lossless for f64).
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// One gate of an experiment: a named pass/fail with the measured value.
#[derive(Debug, Clone)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Gate {
    pub fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
        }
    }

    pub fn ge(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            pass: value >= threshold,
            value,
            threshold,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Gate {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

/// Collects artifacts for one experiment run.
pub struct Report {
    dir: PathBuf,
    gates: Vec<Gate>,
    artifacts: Vec<String>,
}

impl Report {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Report {
            dir: dir.to_path_buf(),
            gates: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn gate(&mut self, gate: Gate) {
        println!(
            "  [{}] {} (value {:.6e}, threshold {:.6e})",
            if gate.pass { "pass" } else { "FAIL" },
            gate.name,
            gate.value,
            gate.threshold
        );
        self.gates.push(gate);
    }

    pub fn all_pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn first_failure(&self) -> Option<&Gate> {
        self.gates.iter().find(|g| !g.pass)
    }

    /// Writes a CSV file; rows are written exactly as provided.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn svg(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes `summary.json` with per-gate results; returns overall status.
    pub fn finish(mut self, experiment: &str, extra: Value) -> std::io::Result<bool> {
        let pass = self.all_pass();
        let gates: Vec<Value> = self
            .gates
            .iter()
            .map(|g| {
                json!({
                    "name": g.name,
                    "pass": g.pass,
                    "value": finite_or_string(g.value),
                    "threshold": finite_or_string(g.threshold),
                })
            })
            .collect();
        self.artifacts.push("summary.json".into());
        let summary = json!({
            "experiment": experiment,
            "status": if pass { "pass" } else { "fail" },
            "gates": gates,
            "artifacts": self.artifacts,
            "details": extra,
        });
        fs::write(
            self.dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
        Ok(pass)
    }
}

fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt(v))
    }
}

/// Minimal self-contained log-log plot: one polyline per series plus an
/// optional fitted reference line.
pub fn loglog_svg(
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    fit: Option<(f64, f64)>,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in series {
        for &(x, y) in pts {
            if x > 0.0 && y > 0.0 && y.is_finite() {
                xs.push(x.log10());
                ys.push(y.log10());
            }
        }
    }
    if xs.is_empty() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\"><text x=\"20\" y=\"40\">{title}: no finite data</text></svg>");
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = |x: f64| M + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    ));
    // axes
    out.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - M,
        W - M,
        H - M,
        H - M
    ));
    // decade ticks
    for dec in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let x = sx(10f64.powi(dec as i32));
        if (M..=W - M).contains(&x) {
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/><text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">1e{dec}</text>\n",
                H - M,
                H - M + 6.0,
                H - M + 20.0
            ));
        }
    }
    for dec in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let y = sy(10f64.powi(dec as i32));
        if (M..=H - M).contains(&y) {
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{M}\" y2=\"{y:.1}\" stroke=\"black\"/><text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">1e{dec}</text>\n",
                M - 6.0,
                M - 10.0
            ));
        }
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|&&(x, y)| x > 0.0 && y > 0.0 && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            W - M - 180.0,
            M + 16.0 * (i as f64 + 1.0)
        ));
    }
    if let Some((slope, intercept)) = fit {
        // fitted line in natural log coordinates: ln y = intercept + slope ln x
        let ends = [10f64.powf(x0), 10f64.powf(x1)];
        let pts: Vec<String> = ends
            .iter()
            .map(|&x| {
                let y = (intercept + slope * x.ln()).exp();
                format!("{:.2},{:.2}", sx(x), sy(y.clamp(10f64.powf(y0), 10f64.powf(y1))))
            })
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#444444\" stroke-dasharray=\"6,4\"/>\n<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"#444444\">fit slope {slope:.4}</text>\n",
            pts.join(" "),
            W - M - 180.0,
            M
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
