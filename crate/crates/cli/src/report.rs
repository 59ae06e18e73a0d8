//! The `report` subcommand: one markdown document from a directory of summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{CliError, CliResult, ExperimentConfig};
use crate::ensemble::{Fitted, Summary};
use crate::mart::MartingaleSummary;
use crate::suites::SuiteReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub kind: String,
    pub schema: u32,
    pub config: ExperimentConfig,
    pub reports: Vec<SuiteReport>,
}

pub enum Document {
    Ensemble(Box<Summary>),
    Martingale(Box<MartingaleSummary>),
    Verify(Box<VerifySummary>),
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {msg}", path.display()))
}

pub fn load(path: &Path) -> CliResult<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(path, format!("malformed JSON: {e}")))?;
    let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or("").to_string();
    let doc = match kind.as_str() {
        "ensemble" => serde_json::from_value(value).map(|s| Document::Ensemble(Box::new(s))),
        "martingale" => serde_json::from_value(value).map(|s| Document::Martingale(Box::new(s))),
        "verify" => serde_json::from_value(value).map(|s| Document::Verify(Box::new(s))),
        other => return Err(bad(path, format!("unknown summary kind '{other}'"))),
    };
    doc.map_err(|e| bad(path, format!("not a valid {kind} summary: {e}")))
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn summary_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| bad(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(bad(dir, "no summary .json files found"));
    }
    Ok(files)
}

fn g(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if (1e-3..1e6).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

fn ci((lo, hi): (f64, f64)) -> String {
    format!("[{}, {}]", g(lo), g(hi))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn render(docs: &[(PathBuf, Document)]) -> String {
    let ens: Vec<(String, &Summary)> = docs
        .iter()
        .filter_map(|(p, d)| match d {
            Document::Ensemble(s) => Some((name(p), s.as_ref())),
            _ => None,
        })
        .collect();
    let marts: Vec<(String, &MartingaleSummary)> = docs
        .iter()
        .filter_map(|(p, d)| match d {
            Document::Martingale(s) => Some((name(p), s.as_ref())),
            _ => None,
        })
        .collect();
    let verifies: Vec<(String, &VerifySummary)> = docs
        .iter()
        .filter_map(|(p, d)| match d {
            Document::Verify(s) => Some((name(p), s.as_ref())),
            _ => None,
        })
        .collect();

    let mut s = String::from("# fpp report\n\n");
    let _ = writeln!(s, "Sources: {}\n", docs.iter().map(|(p, _)| name(p)).collect::<Vec<_>>().join(", "));

    if !ens.is_empty() {
        s.push_str("## Ensembles\n\n| file | quantity | dist | n | N | mean | var | stderr |\n|---|---|---|---|---|---|---|---|\n");
        for (f, e) in &ens {
            for x in &e.entries {
                let _ = writeln!(
                    s,
                    "| {f} | {} | {} | {} | {} | {} | {} | {} |",
                    x.quantity,
                    e.config.dist,
                    x.n,
                    x.replicas,
                    g(x.mean),
                    g(x.var),
                    g(x.stderr)
                );
            }
        }

        s.push_str("\n## Variance scaling\n\nModel `var = c n^gamma` on log-log axes.\n\n| file | gamma | 95% CI | c | R^2 | note |\n|---|---|---|---|---|---|\n");
        for (f, e) in &ens {
            match &e.variance {
                Fitted::Ok(p) => {
                    let _ = writeln!(
                        s,
                        "| {f} | {} | {} | {} | {} | |",
                        g(p.exponent),
                        ci(p.exponent_ci),
                        g(p.prefactor),
                        g(p.fit.r2)
                    );
                }
                Fitted::Unavailable(why) => {
                    let _ = writeln!(s, "| {f} | - | - | - | - | {why} |");
                }
            }
        }

        s.push_str("\n## Moment growth\n\nModel `E|X - mean|^(2m) = c n^slope`; consistent when the upper 95% bound is within the envelope.\n\n| file | order 2m | slope | 95% CI | envelope | consistent |\n|---|---|---|---|---|---|\n");
        for (f, e) in &ens {
            for (m, r) in e.moments.iter().enumerate() {
                let order = 2 * (m + 1);
                match r {
                    Fitted::Ok(r) => match &r.fit {
                        Some(p) => {
                            let _ = writeln!(
                                s,
                                "| {f} | {order} | {} | {} | {} | {} |",
                                g(p.exponent),
                                ci(p.exponent_ci),
                                g(r.envelope),
                                yes(r.consistent)
                            );
                        }
                        None => {
                            let _ = writeln!(s, "| {f} | {order} | - | - | {} | degenerate (zero moment) |", g(r.envelope));
                        }
                    },
                    Fitted::Unavailable(why) => {
                        let _ = writeln!(s, "| {f} | {order} | - | - | - | {why} |");
                    }
                }
            }
        }

        s.push_str("\n## Time constant\n\n| file | mu_hat | min mean/n | extrapolated | n mu_hat <= mean | gap >= -3 se | trend not decreasing | gap c | gap R^2 |\n|---|---|---|---|---|---|---|---|---|\n");
        for (f, e) in &ens {
            match &e.time_constant {
                Fitted::Ok(t) => {
                    let (c, r2) = t.gap_fit.as_ref().map_or(("-".into(), "-".into()), |f| (g(f.c), g(f.r2)));
                    let _ = writeln!(
                        s,
                        "| {f} | {} | {} | {} | {} | {} | {} | {c} | {r2} |",
                        g(t.mu_hat),
                        g(t.min_ratio),
                        g(t.mu_extrapolated),
                        yes(t.lower_bound_holds),
                        yes(t.gaps_nonnegative),
                        yes(t.trend_nondecreasing)
                    );
                }
                Fitted::Unavailable(why) => {
                    let _ = writeln!(s, "| {f} | - | - | - | - | - | - | - | {why} |");
                }
            }
        }
        for (f, e) in &ens {
            if let Fitted::Ok(t) = &e.time_constant {
                let _ = writeln!(s, "\nGaps for {f}:\n\n| n | mean | mean/n | gap | stderr |\n|---|---|---|---|---|");
                for p in &t.gaps {
                    let _ = writeln!(s, "| {} | {} | {} | {} | {} |", p.n, g(p.mean), g(p.ratio), g(p.gap), g(p.stderr));
                }
            }
        }

        let rated: Vec<_> = ens.iter().filter_map(|(f, e)| e.tau_rates.as_ref().map(|r| (f, r))).collect();
        if !rated.is_empty() {
            s.push_str("\n## Tau-equality rates\n\nFraction of configurations with `T != T_tau` between the boxes.\n\n| file | n | differ / N | rate | Wilson 95% | nonincreasing |\n|---|---|---|---|---|---|\n");
            for (f, r) in rated {
                for x in &r.rates {
                    let _ = writeln!(
                        s,
                        "| {f} | {} | {} / {} | {} | {} | {} |",
                        x.n,
                        x.count,
                        x.total,
                        g(x.rate),
                        ci((x.lo, x.hi)),
                        yes(r.nonincreasing)
                    );
                }
            }
        }
    }

    if !marts.is_empty() {
        s.push_str("\n## Martingale differences\n\n| file | n | bases | skipped | max abs diff | C | zero after hit | telescoping residual |\n|---|---|---|---|---|---|---|---|\n");
        for (f, m) in &marts {
            let _ = writeln!(
                s,
                "| {f} | {} | {} | {} | {} | {} | {} | {} |",
                m.n,
                m.traces.len(),
                m.skipped.len(),
                g(m.max_abs_difference),
                g(m.difference_constant),
                yes(m.zero_after_hit),
                g(m.max_telescoping_residual)
            );
        }
        for (f, m) in &marts {
            let _ = writeln!(s, "\nPer-level differences for {f}:\n\n| k | bases | mean | stderr | within 3 se |\n|---|---|---|---|---|");
            for l in &m.levels {
                let _ = writeln!(s, "| {} | {} | {} | {} | {} |", l.k, l.bases, g(l.mean), g(l.stderr), yes(l.centred));
            }
        }
    }

    if !verifies.is_empty() {
        s.push_str("\n## Verification suites\n\n| file | suite | n | configurations | checks | pass | fail | skip | outcome |\n|---|---|---|---|---|---|---|---|---|\n");
        for (f, v) in &verifies {
            for r in &v.reports {
                let _ = writeln!(
                    s,
                    "| {f} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    r.suite,
                    r.n,
                    r.configurations,
                    r.checks,
                    r.pass,
                    r.fail,
                    r.skip,
                    r.outcome()
                );
            }
        }
    }
    s
}

/// Renders every summary in `dir` and writes `report.md` there.
pub fn report(dir: &Path) -> CliResult<(PathBuf, String)> {
    let docs = summary_files(dir)?
        .into_iter()
        .map(|p| load(&p).map(|d| (p, d)))
        .collect::<CliResult<Vec<_>>>()?;
    let text = render(&docs);
    let out = dir.join("report.md");
    std::fs::write(&out, &text)?;
    Ok((out, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble;
    use fpp_core::DistributionSpec;

    #[test]
    fn point_mass_report_shows_zero_variance() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            n: vec![8, 16],
            replicas: 3,
            dist: DistributionSpec::PointMass { c: 1.0 },
            ..Default::default()
        };
        let (ens, s) = ensemble::run(&cfg).unwrap();
        ensemble::write(dir.path(), &ens, &s).unwrap();
        let (path, text) = report(dir.path()).unwrap();
        assert!(path.ends_with("report.md"));
        assert!(text.contains("zero variance"));
        assert!(text.contains("| summary.json | a0n | point_mass:c=1 | 16 | 3 | 16.0000 | 0 | 0 |"), "{text}");
    }

    #[test]
    fn errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(report(dir.path()).unwrap_err().exit_code(), 2);
        std::fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
        let e = report(dir.path()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("broken.json"));
        std::fs::write(dir.path().join("broken.json"), "{\"kind\": \"weather\"}").unwrap();
        assert!(report(dir.path()).unwrap_err().to_string().contains("weather"));
    }
}
