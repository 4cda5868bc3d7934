//! Text renderings of experiment, separation and spectrum results.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentResult, SeparationReport};
use crate::error::{usage, Error, Result};
use crate::spectral::SpectralReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Table,
    Plotdata,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            "plotdata" => Ok(Self::Plotdata),
            other => Err(usage(format!("unknown format {other:?}; expected csv, table or plotdata"))),
        }
    }
}

pub const CSV_HEADER: &str = "experiment_id,optimizer,cond,gamma,alpha,beta,epsilon,predicted_rate,\
rho_hat_mean,rho_hat_max_dev,verdict,steps_used,terminated";

/// 17 significant digits, round-trippable.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_results(results: &[ExperimentResult], format: OutputFormat) -> Result<String> {
    if results.is_empty() {
        return Err(usage("no results to emit"));
    }
    Ok(match format {
        OutputFormat::Csv => csv(results),
        OutputFormat::Table => table(results),
        OutputFormat::Plotdata => plotdata(results),
    })
}

fn csv(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in results {
        let fields = [
            csv_field(&r.id),
            r.kind().name().to_string(),
            num(r.objective.cond()),
            num(r.gamma_used()),
            opt_num(r.alpha_used()),
            opt_num(r.beta_used()),
            opt_num(r.epsilon_used()),
            num(r.predicted_rate),
            opt_num(r.rho_hat_mean()),
            opt_num(r.rho_hat_max_dev()),
            r.verdict().to_string(),
            r.steps_used().to_string(),
            r.terminated(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn fixed(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

fn table(results: &[ExperimentResult]) -> String {
    let headers = [
        "experiment", "optimizer", "cond", "gamma", "alpha", "epsilon", "predicted", "rho_hat", "max_dev", "verdict",
    ];
    let rows: Vec<[String; 10]> = results
        .iter()
        .map(|r| {
            [
                r.id.clone(),
                r.kind().name().to_string(),
                format!("{:.4}", r.objective.cond()),
                fixed(Some(r.gamma_used())),
                fixed(r.alpha_used()),
                fixed(r.epsilon_used()),
                fixed(Some(r.predicted_rate)),
                fixed(r.rho_hat_mean()),
                fixed(r.rho_hat_max_dev()),
                r.verdict().to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &mut dyn Iterator<Item = &str>, out: &mut String| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut headers.iter().copied(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in &rows {
        line(&mut row.iter().map(String::as_str), &mut out);
    }
    out
}

/// One line per iterate: `experiment_id,repeat,n,distance,reference` where
/// `reference = predicted_rate^n`.
fn plotdata(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    for r in results {
        for (i, rep) in r.repeats.iter().enumerate() {
            for (n, d) in rep.distances.iter().enumerate() {
                let reference = r.predicted_rate.powi(n as i32);
                let _ = writeln!(out, "{},{i},{n},{},{}", csv_field(&r.id), num(*d), num(reference));
            }
        }
    }
    out
}

pub fn emit_separation(report: &SeparationReport, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(
                "alpha,adam_gamma,gd_rate,adam_rate,gd_reference,adam_reference,gd_log_ratio,adam_log_ratio,signs_as_predicted\n",
            );
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                num(report.alpha),
                num(report.adam_gamma),
                num(report.gd_rate),
                num(report.adam_rate),
                num(report.gd_reference),
                num(report.adam_reference),
                num(report.gd_log_ratio),
                num(report.adam_log_ratio),
                report.signs_as_predicted()
            );
        }
        OutputFormat::Table => {
            let _ = writeln!(out, "spectrum          {:?}", report.spectrum);
            let _ = writeln!(out, "adam alpha        {:.6}", report.alpha);
            let _ = writeln!(out, "adam gamma        {:.6}", report.adam_gamma);
            let _ = writeln!(out, "gd local rate     {:.6}", report.gd_rate);
            let _ = writeln!(out, "adam local rate   {:.6}", report.adam_rate);
            let _ = writeln!(
                out,
                "gd scaled log-ratio    {:+.6}  (reference {:.6}, expected > 0)",
                report.gd_log_ratio, report.gd_reference
            );
            let _ = writeln!(
                out,
                "adam scaled log-ratio  {:+.6}  (reference {:.6}, expected < 0)",
                report.adam_log_ratio, report.adam_reference
            );
            let _ = writeln!(
                out,
                "signs as predicted: {}",
                if report.signs_as_predicted() { "yes" } else { "no" }
            );
        }
        OutputFormat::Plotdata => {
            for (n, (g, a)) in report.gd_log_scaled.iter().zip(&report.adam_log_scaled).enumerate() {
                let _ = writeln!(out, "{n},{},{}", num(*g), num(*a));
            }
        }
    }
    out
}

pub fn emit_spectrum(report: &SpectralReport, alpha: f64, gamma: f64, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv | OutputFormat::Plotdata => {
            out.push_str("kind,index,re,im,modulus\n");
            for (i, (re, im)) in report.eigenvalues.iter().enumerate() {
                let _ = writeln!(out, "eigenvalue,{i},{},{},{}", num(*re), num(*im), num(re.hypot(*im)));
            }
            for (i, m) in report.per_mode.iter().enumerate() {
                for (tag, (re, im)) in [("mu_plus", m.mu_plus), ("mu_minus", m.mu_minus)] {
                    let _ = writeln!(out, "{tag},{i},{},{},{}", num(re), num(im), num(re.hypot(im)));
                }
            }
            let _ = writeln!(out, "spectral_radius,0,{},,", num(report.spectral_radius));
        }
        OutputFormat::Table => {
            let _ = writeln!(out, "alpha = {alpha:.6}, gamma = {gamma:.6}");
            let _ = writeln!(out, "spectral radius = {:.12}", report.spectral_radius);
            match report.predicted_rate {
                Some(r) => {
                    let _ = writeln!(out, "predicted rate  = {r:.12}");
                }
                None => out.push_str("predicted rate  = none (not contractive)\n"),
            }
            out.push_str("lambda        mu_plus                     mu_minus\n");
            for m in &report.per_mode {
                let _ = writeln!(
                    out,
                    "{:<12.6}  {:+.6} {:+.6}i  {:+.6} {:+.6}i",
                    m.lambda, m.mu_plus.0, m.mu_plus.1, m.mu_minus.0, m.mu_minus.1
                );
            }
        }
    }
    out
}
