//! The `run` subcommand: ensemble, CSV, JSON summary and plot script.

use std::fmt::Write as _;
use std::path::Path;

use fpp_core::stats::{
    default_x_grid, moment_growth, ols, rates_nonincreasing, tail_shape, tau_equality_rate, time_constant,
    variance_scaling, MomentReport, PowerFit, RateEstimate, TailPoint, TailShape, TimeConstantReport,
};
use fpp_core::{azuma_curve, run_ensemble, Ensemble, EnsembleSpec, Quantity, ReplicaRecord, ReplicaStats};
use serde::{Deserialize, Serialize};

use crate::config::{ensure_dir, CliError, CliResult, ExperimentConfig};

pub const SCHEMA: u32 = 1;
pub const CSV_HEADER: &str = "quantity,n,replica,seed,value,path_len,max_edge";

/// Fit of `ln P(|X - mean| >= x sqrt(n)) = a + b x²` over well-populated grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub model: String,
    pub params: TailFitParams,
    pub ci: TailFitCi,
    pub shape: Option<TailShape>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFitParams {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFitCi {
    pub b: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

/// One `n` of the ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub quantity: Quantity,
    pub n: u64,
    #[serde(rename = "N")]
    pub replicas: usize,
    pub mean: f64,
    pub var: f64,
    pub stderr: f64,
    /// Central moments of orders `1..=2 m`.
    pub moments: Vec<f64>,
    pub tails: Vec<TailRow>,
    /// `None` when fewer than three grid points have 10 or more exceedances.
    pub fit: Option<TailFit>,
}

/// A fit that either ran or was not applicable, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitted<T> {
    Ok(T),
    Unavailable(String),
}

impl<T> Fitted<T> {
    fn from(r: fpp_core::Result<T>) -> Self {
        match r {
            Ok(v) => Self::Ok(v),
            Err(e) => Self::Unavailable(e.to_string()),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Self::Ok(v) => Some(v),
            Self::Unavailable(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauRates {
    pub rates: Vec<RateEstimate>,
    pub nonincreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub schema: u32,
    pub config: ExperimentConfig,
    pub entries: Vec<Entry>,
    pub variance: Fitted<PowerFit>,
    pub moments: Vec<Fitted<MomentReport>>,
    pub time_constant: Fitted<TimeConstantReport>,
    /// Only for box-to-box quantities.
    pub tau_rates: Option<TauRates>,
    pub warnings: Vec<String>,
}

fn tail_fit(tails: &[TailPoint], replicas: usize) -> Option<TailFit> {
    let pts: Vec<(f64, f64)> = tails
        .iter()
        .filter(|t| t.x > 0.0 && t.count >= 10)
        .map(|t| (t.x * t.x, t.p.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let f = ols(&pts)?;
    Some(TailFit {
        model: "ln P(|X - mean| >= x sqrt(n)) = a + b x^2".into(),
        params: TailFitParams {
            a: f.intercept,
            b: f.slope,
            r2: f.r2,
            points: pts.len(),
        },
        ci: TailFitCi { b: f.slope_ci(0.95) },
        shape: tail_shape(tails, replicas),
    })
}

fn entry(s: &ReplicaStats) -> Entry {
    Entry {
        quantity: s.quantity,
        n: s.n,
        replicas: s.replicas,
        mean: s.mean,
        var: s.var,
        stderr: s.stderr,
        moments: s.moments.clone(),
        tails: s
            .tails
            .iter()
            .map(|t| TailRow {
                x: t.x,
                p: t.p,
                lo: t.lo,
                hi: t.hi,
            })
            .collect(),
        fit: tail_fit(&s.tails, s.replicas),
    }
}

pub fn spec(cfg: &ExperimentConfig) -> EnsembleSpec {
    EnsembleSpec {
        quantity: cfg.quantity,
        n_list: cfg.n.clone(),
        replicas: cfg.replicas,
        dist: cfg.dist,
        params: cfg.params(),
        seed: cfg.seed,
        m_max: cfg.moments,
        x_grid: default_x_grid(),
    }
}

fn box_warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let p = cfg.params();
    cfg.n
        .iter()
        .filter_map(|&n| {
            let h = p.box_half(n).ok()?;
            (2 * h >= n as i64).then(|| {
                format!("n = {n}: box half-width {h} makes D_n(0) and D_n(nu) overlap; pass --box-scale")
            })
        })
        .collect()
}

/// Runs the ensemble and all fits.
pub fn run(cfg: &ExperimentConfig) -> CliResult<(Ensemble, Summary)> {
    if cfg.replicas < 2 {
        return Err(CliError::Usage("replicas: an ensemble needs at least 2".into()));
    }
    let ens = run_ensemble(&spec(cfg))?;
    let mut warnings = Vec::new();
    let boxed = matches!(cfg.quantity, Quantity::BoxBox | Quantity::BoxBoxTau);
    if boxed {
        warnings.extend(box_warnings(cfg));
    }
    let time_constant = Fitted::from(time_constant(&ens.stats));
    if let Fitted::Ok(t) = &time_constant {
        warnings.extend(t.warnings.iter().cloned());
    }
    let tau_rates = if boxed {
        let rates = cfg
            .n
            .iter()
            .map(|&n| tau_equality_rate(&cfg.dist, &cfg.params(), n, cfg.replicas, cfg.seed))
            .collect::<fpp_core::Result<Vec<_>>>()?;
        Some(TauRates {
            nonincreasing: rates_nonincreasing(&rates),
            rates,
        })
    } else {
        None
    };
    let summary = Summary {
        kind: "ensemble".into(),
        schema: SCHEMA,
        config: cfg.clone(),
        entries: ens.stats.iter().map(entry).collect(),
        variance: Fitted::from(variance_scaling(&ens.stats)),
        moments: (1..=cfg.moments).map(|m| Fitted::from(moment_growth(&ens.stats, m))).collect(),
        time_constant,
        tau_rates,
        warnings,
    };
    Ok((ens, summary))
}

/// Shortest round-tripping decimal form.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv(records: &[ReplicaRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.quantity,
            r.n,
            r.replica,
            r.seed,
            num(r.value),
            r.path_len,
            num(r.max_edge)
        );
    }
    s
}

/// Gnuplot script with inline data blocks: variance against n, tail
/// profiles with Gaussian-scale Azuma curves, and the time-constant gap.
pub fn plot_script(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} n = {:?}", summary.config.quantity, summary.config.n);
    s.push_str("set terminal pngcairo size 900,650\nset key top left\n\n");

    s.push_str("$variance << EOD\n# n var\n");
    for e in &summary.entries {
        let _ = writeln!(s, "{} {}", e.n, num(e.var));
    }
    s.push_str("EOD\n");
    s.push_str("set output 'variance.png'\nset logscale xy\nset xlabel 'n'\nset ylabel 'var'\n");
    match summary.variance.ok() {
        Some(f) => {
            let _ = writeln!(s, "fit_c = {}\nfit_g = {}", num(f.prefactor), num(f.exponent));
            s.push_str("plot $variance using 1:2 with points pt 7 title 'var', fit_c * x**fit_g with lines title sprintf('c n^%.3f', fit_g)\n");
        }
        None => s.push_str("plot $variance using 1:2 with linespoints pt 7 title 'var'\n"),
    }
    s.push_str("unset logscale\n\n");

    for (i, e) in summary.entries.iter().enumerate() {
        let grid: Vec<f64> = e.tails.iter().map(|t| t.x).collect();
        let azuma = if e.var > 0.0 {
            azuma_curve(e.var.sqrt() / e.n as f64, e.n, &grid).ok()
        } else {
            None
        };
        let _ = writeln!(s, "$tail{i} << EOD\n# x p lo hi azuma");
        for (j, t) in e.tails.iter().enumerate() {
            let a = azuma.as_ref().map_or(f64::NAN, |a| a[j].min(1.0));
            let _ = writeln!(s, "{} {} {} {} {}", num(t.x), num(t.p), num(t.lo), num(t.hi), num(a));
        }
        s.push_str("EOD\n");
    }
    if !summary.entries.is_empty() {
        s.push_str("set output 'tails.png'\nset logscale y\nset yrange [1e-4:1.5]\nset xlabel 'x'\nset ylabel 'P(|X - mean| >= x sqrt(n))'\nplot ");
        let parts: Vec<String> = summary
            .entries
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                [
                    format!("$tail{i} using 1:2:3:4 with yerrorlines title 'n = {}'", e.n),
                    format!("$tail{i} using 1:5 with lines dt 2 title 'Azuma n = {}'", e.n),
                ]
            })
            .collect();
        s.push_str(&parts.join(", \\\n     "));
        s.push_str("\nunset logscale\nset autoscale y\n\n");
    }

    if let Some(t) = summary.time_constant.ok() {
        s.push_str("$gap << EOD\n# n gap stderr\n");
        for g in &t.gaps {
            let _ = writeln!(s, "{} {} {}", g.n, num(g.gap), num(g.stderr));
        }
        s.push_str("EOD\n");
        let _ = writeln!(s, "set output 'gap.png'\nset logscale x\nset xlabel 'n'\nset ylabel 'mean - n mu'");
        match &t.gap_fit {
            Some(f) => {
                let _ = writeln!(s, "gap_c = {}", num(f.c));
                s.push_str("plot $gap using 1:2:3 with yerrorbars title 'gap', gap_c * sqrt(x) * log(x)**4 with lines title 'c sqrt(n) (ln n)^4'\n");
            }
            None => s.push_str("plot $gap using 1:2:3 with yerrorbars title 'gap'\n"),
        }
    } else {
        s.push_str("# gap plot omitted: time constant needs at least 4 values of n\n");
    }
    s
}

/// Writes `ensemble.csv`, `summary.json` and `plot.gp` into `dir`.
pub fn write(dir: &Path, ens: &Ensemble, summary: &Summary) -> CliResult<()> {
    ensure_dir(dir)?;
    std::fs::write(dir.join("ensemble.csv"), csv(&ens.records))?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    std::fs::write(dir.join("plot.gp"), plot_script(summary))?;
    Ok(())
}
