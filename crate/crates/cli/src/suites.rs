//! Exact verification suites over sampled configurations.

use std::fmt;

use clap::ValueEnum;
use fpp_core::clusters::{lemma1_bypass, open_ld_clusters};
use fpp_core::lattice::exterior_boundary;
use fpp_core::passage::{
    ball_growth, comparison_check, crossing_check, sandwich_check, verify_ball_invariants, verify_lemma2,
    verify_lemma2_upper, verify_lemma3, verify_lemma5, verify_lemma6, verify_lemma7,
};
use fpp_core::rng::derive_seed;
use fpp_core::tau::tau_locality_check;
use fpp_core::{passage_time, sample_configuration, tau_transform, BallStatus, Region, Result, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Bypass paths around open clusters: length <= 3^d |A|, weights <= M.
    Lemma1,
    /// `k + T_τ(B(k), D_n(nu)) = T_τ(D_n(0), D_n(nu))` for every `k < k*`.
    Lemma2,
    /// The one-sided form of lemma2, which holds for any weights.
    Lemma2Upper,
    /// `τ` along the optimal path is at most `3^d M (ln n)^{1+δ}`.
    Lemma3,
    /// Balls stay within sup-distance `(k+1)(ln n)^{1+δ}` of the source.
    Lemma5,
    /// `T_τ(D_n(0), D_n(nu))` is at most the gap times the edge bound.
    Lemma6,
    /// The optimal path lies inside `B(k*)`.
    Lemma7,
    /// `T(D0, Dn) <= T(0, nu) <= box sum + T(D0, Dn)`.
    Sandwich,
    /// `b_{0,n} <= a_{0,n}` and `s_{0,n} <= a_{0,n}`.
    Comparison,
    /// Four slab crossings sum to at most `s_{0,4n}`.
    Crossing,
    /// `τ(e)` ignores every edge farther than `θ_n`.
    TauLocality,
    /// Nesting, connectedness and threshold form of the balls.
    BallInvariants,
}

impl Suite {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub replica: usize,
    pub seed: u64,
    pub message: String,
}

/// Tallies of one suite at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub n: u64,
    pub configurations: usize,
    pub checks: usize,
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
    /// First few failures.
    pub failures: Vec<Note>,
    /// First few skip reasons.
    pub skips: Vec<Note>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    AllSkip,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::AllSkip => "ALL-SKIP",
            Self::Fail => "FAIL",
        })
    }
}

const KEEP_NOTES: usize = 10;

impl SuiteReport {
    pub fn outcome(&self) -> Outcome {
        if self.fail > 0 {
            Outcome::Fail
        } else if self.pass == 0 {
            Outcome::AllSkip
        } else {
            Outcome::Pass
        }
    }

    fn tally(suite: Suite, n: u64, seeds: &[u64], per_config: &[Vec<Verdict>]) -> Self {
        let mut r = Self {
            suite,
            n,
            configurations: per_config.len(),
            checks: 0,
            pass: 0,
            fail: 0,
            skip: 0,
            failures: Vec::new(),
            skips: Vec::new(),
        };
        for (replica, verdicts) in per_config.iter().enumerate() {
            for v in verdicts {
                r.checks += 1;
                let note = |m: &str| Note {
                    replica,
                    seed: seeds[replica],
                    message: m.to_string(),
                };
                match v {
                    Verdict::Pass => r.pass += 1,
                    Verdict::Fail(m) => {
                        r.fail += 1;
                        if r.failures.len() < KEEP_NOTES {
                            r.failures.push(note(m));
                        }
                    }
                    Verdict::Skip(m) => {
                        r.skip += 1;
                        if r.skips.len() < KEEP_NOTES {
                            r.skips.push(note(m));
                        }
                    }
                }
            }
        }
        r
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} n={}: {} configurations, {} checks: {} pass, {} fail, {} skip -> {}",
            self.suite,
            self.n,
            self.configurations,
            self.checks,
            self.pass,
            self.fail,
            self.skip,
            self.outcome()
        )
    }
}

/// Upper limit on ball levels when no `k_max` is given.
fn default_k_cap(n: u64) -> u64 {
    100 * n
}

fn check_one(suite: Suite, cfg: &ExperimentConfig, n: u64, seed: u64) -> Result<Vec<Verdict>> {
    let params = cfg.params();
    let dist = &cfg.dist;
    match suite {
        Suite::Lemma1 => {
            let region = Arc::new(Region::cube(cfg.dim, n as i64)?);
            let field = sample_configuration(&region, dist, seed)?;
            let rep = open_ld_clusters(&field, cfg.m_level)?;
            let bound = 3usize.pow(cfg.dim as u32);
            let mut out = Vec::new();
            for label in 0..rep.cluster_count() {
                let a = rep.members(&region, label);
                if a.touches_face() {
                    continue;
                }
                let ext: Vec<usize> = exterior_boundary(&a)?.iter().collect();
                let (x, y) = (ext[0], ext[ext.len() - 1]);
                let p = lemma1_bypass(&a, &field, cfg.m_level, x, y)?;
                let max = p.max_weight(&field);
                out.push(if p.len() > bound * a.len() {
                    Verdict::Fail(format!("bypass of length {} around a cluster of {}", p.len(), a.len()))
                } else if max > cfg.m_level {
                    Verdict::Fail(format!("bypass edge weight {max} exceeds M = {}", cfg.m_level))
                } else {
                    Verdict::Pass
                });
            }
            if out.is_empty() {
                out.push(Verdict::Skip("no open cluster away from the window face".into()));
            }
            Ok(out)
        }
        Suite::Lemma2 | Suite::Lemma2Upper | Suite::Lemma5 | Suite::Lemma7 | Suite::BallInvariants => {
            let region = params.box_window(n)?;
            let field = sample_configuration(&region, dist, seed)?;
            let tf = tau_transform(&field, &params.tau_params(n))?;
            let (d0, dn) = params.boxes(&region, n)?;
            let cap = cfg.k_max.unwrap_or_else(|| default_k_cap(n));
            let seq = ball_growth(&tf, &d0, &dn, cap)?;
            let k_star = match seq.status() {
                BallStatus::Hit { k_star } => k_star,
                other => return Ok(vec![Verdict::Skip(format!("target not reached: {other:?}"))]),
            };
            Ok(match suite {
                Suite::Lemma2 | Suite::Lemma2Upper => {
                    if k_star == 0 {
                        return Ok(vec![Verdict::Skip("k* = 0: the boxes meet".into())]);
                    }
                    (0..k_star)
                        .map(|k| {
                            if suite == Suite::Lemma2 {
                                verify_lemma2(&seq, &tf, &dn, k)
                            } else {
                                verify_lemma2_upper(&seq, &tf, &dn, k)
                            }
                        })
                        .collect()
                }
                Suite::Lemma5 => vec![verify_lemma5(&seq, params.theta(n))],
                Suite::Lemma7 => vec![verify_lemma7(&seq, &tf, &dn, k_star)],
                _ => vec![verify_ball_invariants(&seq, &tf)],
            })
        }
        Suite::Lemma3 | Suite::Lemma6 => {
            let region = params.box_window(n)?;
            let field = sample_configuration(&region, dist, seed)?;
            let tf = tau_transform(&field, &params.tau_params(n))?;
            if suite == Suite::Lemma6 {
                return Ok(vec![verify_lemma6(&tf, n, &params)?]);
            }
            let (d0, dn) = params.boxes(&region, n)?;
            let path = passage_time(&tf, &d0, &dn, None);
            Ok(vec![verify_lemma3(&tf, &path, n, cfg.m_level, cfg.delta, cfg.dim)])
        }
        Suite::Sandwich => {
            let region = params.box_window(n)?;
            let field = sample_configuration(&region, dist, seed)?;
            Ok(vec![sandwich_check(&field, n, &params)?])
        }
        Suite::Comparison => {
            let region = params.cylinder_window(n, params.transverse(n))?;
            let field = sample_configuration(&region, dist, seed)?;
            Ok(vec![comparison_check(&field, n, &params)?])
        }
        Suite::Crossing => Ok(vec![crossing_check(dist, n, seed, &params, params.transverse(n))?.verdict]),
        Suite::TauLocality => {
            let tp = params.tau_params(n);
            let radius = tp.theta().ceil() as i64;
            let region = Arc::new(Region::cube(cfg.dim, radius + 2)?);
            let field = sample_configuration(&region, dist, seed)?;
            let origin = region.index(&vec![0; cfg.dim]).expect("origin lies in the cube");
            let e1 = region.edge(origin, 0).expect("edge along the first axis");
            let rep = tau_locality_check(&field, e1, &tp, 3)?;
            Ok(vec![match rep.changed_in_round {
                None => Verdict::Pass,
                Some(round) => Verdict::Fail(format!("tau(e) moved in redraw {round}")),
            }])
        }
    }
}

/// Runs `suite` over `cfg.replicas` configurations at one `n`.
pub fn run_suite_at(suite: Suite, cfg: &ExperimentConfig, n: u64) -> Result<SuiteReport> {
    let seeds: Vec<u64> = (0..cfg.replicas).map(|r| derive_seed(cfg.seed, &[n, r as u64])).collect();
    let per_config = seeds
        .par_iter()
        .map(|&s| check_one(suite, cfg, n, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::tally(suite, n, &seeds, &per_config))
}

/// Runs `suite` at every `n` of the config.
pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<Vec<SuiteReport>> {
    cfg.n.iter().map(|&n| run_suite_at(suite, cfg, n)).collect()
}
