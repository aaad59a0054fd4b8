//! Strategy comparison, discount-factor sweep and report emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::agent::{train, training_csv, EpisodeLog, TrainedModel, TrainingConfig};
use crate::baselines::{hybrid_first_year_plan, progressive_lp_plan, worst_first_plan};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::network::{NetworkState, Trajectory};
use crate::plan::MaintenancePlan;
use crate::plot::{line_chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    WorstFirst,
    ProgressiveLp,
    Dql,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::WorstFirst,
        Strategy::ProgressiveLp,
        Strategy::Dql,
        Strategy::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::WorstFirst => "worst_first",
            Strategy::ProgressiveLp => "progressive_lp",
            Strategy::Dql => "dql",
            Strategy::Hybrid => "hybrid",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(self, Strategy::Dql | Strategy::Hybrid)
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Strategy::name).join(", ")
    }

    /// Parses a comma-separated list, rejecting empty lists and unknown names.
    pub fn parse_list(s: &str) -> Result<Vec<Strategy>> {
        let list = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::InvalidConfig("no strategies given".into()));
        }
        Ok(list)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown strategy '{s}' (valid: {})",
                    Self::valid_names()
                ))
            })
    }
}

/// Rolls out one strategy and validates the resulting plan.
pub fn evaluate(
    strategy: Strategy,
    network: &NetworkState,
    model: Option<&TrainedModel>,
) -> Result<(MaintenancePlan, Trajectory)> {
    let need = || {
        model.ok_or_else(|| {
            Error::InvalidConfig(format!("strategy {} needs a trained model", strategy.name()))
        })
    };
    let out = match strategy {
        Strategy::WorstFirst => worst_first_plan(network)?,
        Strategy::ProgressiveLp => progressive_lp_plan(network)?,
        Strategy::Dql => need()?.greedy_plan(network)?,
        Strategy::Hybrid => hybrid_first_year_plan(need()?, network)?,
    };
    out.0.validate(network)?;
    Ok(out)
}

/// Per-strategy metrics, averaged over runs. Costs are in dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub runs: usize,
    pub halos: f64,
    pub ehlos: f64,
    /// LoS for years `0..=h`.
    pub los: Vec<f64>,
    /// Spend for years `1..=h`.
    pub rehab_cost: Vec<f64>,
    pub recon_cost: Vec<f64>,
}

impl StrategyResult {
    /// Mean LoS over years `from..=to` (1-based, clipped to the horizon).
    pub fn mean_los(&self, from: usize, to: usize) -> f64 {
        let to = to.min(self.los.len() - 1);
        let s = &self.los[from..=to];
        s.iter().sum::<f64>() / s.len() as f64
    }

    /// Reconstruction share of spend over years `from..=to` (1-based).
    pub fn recon_share(&self, from: usize, to: usize) -> f64 {
        let r: f64 = self.recon_cost[from - 1..to].iter().sum();
        let t: f64 = r + self.rehab_cost[from - 1..to].iter().sum::<f64>();
        if t > 0.0 {
            r / t
        } else {
            0.0
        }
    }
}

pub fn summarize(name: &str, runs: &[(MaintenancePlan, Trajectory)]) -> Result<StrategyResult> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidConfig("nothing to summarize".into()))?;
    let k = runs.len() as f64;
    let years = first.0.years();
    let mut out = StrategyResult {
        strategy: name.to_string(),
        runs: runs.len(),
        halos: 0.0,
        ehlos: 0.0,
        los: vec![0.0; years + 1],
        rehab_cost: vec![0.0; years],
        recon_cost: vec![0.0; years],
    };
    for (plan, traj) in runs {
        out.halos += traj.halos()? / k;
        out.ehlos += traj.ehlos()? / k;
        for (acc, v) in out.los.iter_mut().zip(traj.los_series()?) {
            *acc += v / k;
        }
        for (t, c) in plan.annual.iter().enumerate() {
            out.rehab_cost[t] += c.rehab.dollars() / k;
            out.recon_cost[t] += c.recon.dollars() / k;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub results: Vec<StrategyResult>,
    /// Training log of the first model, if any was trained.
    pub training: Vec<EpisodeLog>,
    pub manifest: serde_json::Value,
}

impl ComparisonReport {
    pub fn get(&self, strategy: &str) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }
}

fn network_manifest(network: &NetworkState) -> serde_json::Value {
    json!({
        "segments": network.len(),
        "horizon": network.horizon,
        "total_area": network.total_area(),
        "budgets_cents": network.budgets.iter().map(|b| b.cents()).collect::<Vec<_>>(),
    })
}

/// Compares strategies using already trained models; model-based
/// strategies are averaged over `models`.
pub fn compare_with_models(
    network: &NetworkState,
    strategies: &[Strategy],
    models: &[TrainedModel],
) -> Result<ComparisonReport> {
    if strategies.is_empty() {
        return Err(Error::InvalidConfig("no strategies given".into()));
    }
    let mut results = Vec::with_capacity(strategies.len());
    for &s in strategies {
        let runs = if s.needs_model() {
            if models.is_empty() {
                return Err(Error::InvalidConfig(format!("strategy {} needs a trained model", s.name())));
            }
            models
                .par_iter()
                .map(|m| evaluate(s, network, Some(m)))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![evaluate(s, network, None)?]
        };
        results.push(summarize(s.name(), &runs)?);
    }
    let manifest = json!({
        "kind": "comparison",
        "strategies": strategies.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "model_seeds": models.iter().map(|m| m.config.seed).collect::<Vec<_>>(),
        "training": models.first().map(|m| &m.config),
        "network": network_manifest(network),
    });
    Ok(ComparisonReport {
        results,
        training: Vec::new(),
        manifest,
    })
}

/// Trains `runs` models (seeds `config.seed + r`) when a model-based
/// strategy is requested, then compares.
pub fn compare(
    network: &NetworkState,
    strategies: &[Strategy],
    runs: usize,
    config: &TrainingConfig,
) -> Result<ComparisonReport> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let trained: Vec<(TrainedModel, Vec<EpisodeLog>)> = if strategies.iter().any(|s| s.needs_model()) {
        (0..runs as u64)
            .into_par_iter()
            .map(|r| {
                let cfg = TrainingConfig {
                    seed: config.seed.wrapping_add(r),
                    ..config.clone()
                };
                train(network, cfg)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let models: Vec<TrainedModel> = trained.iter().map(|(m, _)| m.clone()).collect();
    let mut report = compare_with_models(network, strategies, &models)?;
    report.manifest["runs"] = json!(runs);
    if let Some((_, log)) = trained.into_iter().next() {
        report.training = log;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub gamma: f64,
    pub result: StrategyResult,
    pub training: Vec<EpisodeLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub manifest: serde_json::Value,
}

pub fn gamma_label(gamma: f64) -> String {
    format!("gamma_{gamma}")
}

/// Trains one agent per discount factor with the same seed and evaluates
/// its greedy plan.
pub fn gamma_sweep(
    network: &NetworkState,
    gammas: &[f64],
    config: &TrainingConfig,
) -> Result<SweepReport> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig("gamma list is empty".into()));
    }
    let entries = gammas
        .par_iter()
        .map(|&gamma| {
            let cfg = TrainingConfig {
                gamma,
                ..config.clone()
            };
            let (model, training) = train(network, cfg)?;
            let run = evaluate(Strategy::Dql, network, Some(&model))?;
            Ok(SweepEntry {
                gamma,
                result: summarize(&gamma_label(gamma), &[run])?,
                training,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "kind": "gamma_sweep",
        "gammas": gammas,
        "seed": config.seed,
        "training": config,
        "network": network_manifest(network),
    });
    Ok(SweepReport { entries, manifest })
}

impl SweepReport {
    pub fn to_comparison(&self) -> ComparisonReport {
        ComparisonReport {
            results: self.entries.iter().map(|e| e.result.clone()).collect(),
            training: Vec::new(),
            manifest: self.manifest.clone(),
        }
    }
}

pub const SUMMARY_HEADER: &str = "strategy,halos,ehlos";
pub const SERIES_HEADER: &str = "strategy,year,los,rehab_cost,recon_cost";

pub fn summary_csv(results: &[StrategyResult]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in results {
        let _ = writeln!(s, "{},{},{}", r.strategy, r.halos, r.ehlos);
    }
    s
}

/// Year 0 carries the initial LoS and zero spend.
pub fn series_csv(results: &[StrategyResult]) -> String {
    let mut s = format!("{SERIES_HEADER}\n");
    for r in results {
        for (year, los) in r.los.iter().enumerate() {
            let (rehab, recon) = if year == 0 {
                (0.0, 0.0)
            } else {
                (r.rehab_cost[year - 1], r.recon_cost[year - 1])
            };
            let _ = writeln!(s, "{},{year},{los},{rehab:.2},{recon:.2}", r.strategy);
        }
    }
    s
}

fn los_chart(results: &[StrategyResult]) -> String {
    let series: Vec<Series> = results
        .iter()
        .map(|r| Series::new(&r.strategy, r.los.iter().enumerate().map(|(t, &v)| (t as f64, v)).collect()))
        .collect();
    line_chart("Network LoS by year", "year", "LoS", "series.csv (los)", &series)
}

fn cost_chart(results: &[StrategyResult]) -> String {
    let mut series = Vec::new();
    for r in results {
        let pts = |v: &[f64]| v.iter().enumerate().map(|(t, &c)| ((t + 1) as f64, c)).collect();
        series.push(Series::new(format!("{} recon", r.strategy), pts(&r.recon_cost)));
        series.push(Series::new(format!("{} rehab", r.strategy), pts(&r.rehab_cost)).dashed());
    }
    line_chart(
        "Annual spend by treatment",
        "year",
        "spend ($)",
        "series.csv (rehab_cost, recon_cost)",
        &series,
    )
}

fn training_charts(log: &[EpisodeLog], source: &str) -> (String, String) {
    let pts = |f: &dyn Fn(&EpisodeLog) -> f64| -> Vec<(f64, f64)> {
        log.iter().map(|l| (l.episode as f64, f(l))).collect()
    };
    let ret = line_chart(
        "Episode return",
        "episode",
        "return",
        source,
        &[Series::new("return", pts(&|l| l.episode_return))],
    );
    let loss = line_chart(
        "Training losses and exploration",
        "episode",
        "value",
        source,
        &[
            Series::new("q_loss", pts(&|l| l.q_loss)),
            Series::new("v_loss", pts(&|l| l.v_loss)),
            Series::new("epsilon", pts(&|l| l.epsilon)).dashed(),
        ],
    );
    (ret, loss)
}

fn write(dir: &Path, name: &str, text: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    write_atomic(&p, text.as_bytes())?;
    out.push(p);
    Ok(())
}

/// Writes `summary.csv`, `series.csv`, `los.svg`, `costs.svg`,
/// `manifest.json` and, when a training log is present, `training.csv`
/// with its charts. Returns the written paths.
pub fn emit_report(report: &ComparisonReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    write(dir, "summary.csv", &summary_csv(&report.results), &mut out)?;
    write(dir, "series.csv", &series_csv(&report.results), &mut out)?;
    write(dir, "los.svg", &los_chart(&report.results), &mut out)?;
    write(dir, "costs.svg", &cost_chart(&report.results), &mut out)?;
    if !report.training.is_empty() {
        write(dir, "training.csv", &training_csv(&report.training), &mut out)?;
        let (ret, loss) = training_charts(&report.training, "training.csv");
        write(dir, "training_return.svg", &ret, &mut out)?;
        write(dir, "training_loss.svg", &loss, &mut out)?;
    }
    let manifest = serde_json::to_string_pretty(&report.manifest).expect("manifest serializes");
    write(dir, "manifest.json", &manifest, &mut out)?;
    Ok(out)
}

/// Comparison-style report plus one `training_<label>.csv` per γ.
pub fn emit_sweep_report(report: &SweepReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    let mut out = emit_report(&report.to_comparison(), dir)?;
    for e in &report.entries {
        write(
            dir,
            &format!("training_{}.csv", gamma_label(e.gamma)),
            &training_csv(&e.training),
            &mut out,
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Money;
    use crate::network::tests::local;
    use crate::network::CostTable;

    fn net() -> NetworkState {
        NetworkState::with_constant_budget(
            vec![local(0, 10.0, 6.0), local(1, 10.0, 3.0), local(2, 20.0, 8.0)],
            4,
            Money::from_dollars(1200.0),
            CostTable::default(),
        )
        .unwrap()
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        let err = "best".parse::<Strategy>().unwrap_err().to_string();
        assert!(err.contains("worst_first") && err.contains("hybrid"));
        assert_eq!(
            Strategy::parse_list("worst_first, dql").unwrap(),
            vec![Strategy::WorstFirst, Strategy::Dql]
        );
        assert!(Strategy::parse_list(" , ").is_err());
    }

    #[test]
    fn single_deterministic_run_matches_rollout() {
        let n = net();
        let report = compare(&n, &[Strategy::WorstFirst], 3, &TrainingConfig::default()).unwrap();
        let (plan, traj) = worst_first_plan(&n).unwrap();
        let r = &report.results[0];
        assert_eq!(r.runs, 1);
        assert_eq!(r.halos, traj.halos().unwrap());
        assert_eq!(r.ehlos, traj.ehlos().unwrap());
        assert_eq!(r.los, traj.los_series().unwrap());
        for (t, c) in plan.annual.iter().enumerate() {
            assert_eq!(r.recon_cost[t] + r.rehab_cost[t], c.total().dollars());
        }
        assert!(report.training.is_empty());
    }

    #[test]
    fn model_strategies_require_model() {
        assert!(compare_with_models(&net(), &[Strategy::Dql], &[]).is_err());
        assert!(compare_with_models(&net(), &[], &[]).is_err());
    }

    #[test]
    fn csv_schemas() {
        let n = net();
        let report = compare(&n, &[Strategy::WorstFirst, Strategy::ProgressiveLp], 1, &TrainingConfig::default())
            .unwrap();
        let summary = summary_csv(&report.results);
        assert!(summary.starts_with("strategy,halos,ehlos\n"));
        assert_eq!(summary.lines().count(), 3);
        let series = series_csv(&report.results);
        assert!(series.starts_with("strategy,year,los,rehab_cost,recon_cost\n"));
        assert_eq!(series.lines().count(), 1 + 2 * 5);
    }

    #[test]
    fn shares_and_means() {
        let r = StrategyResult {
            strategy: "x".into(),
            runs: 1,
            halos: 0.0,
            ehlos: 0.0,
            los: vec![1.0, 2.0, 3.0, 4.0],
            rehab_cost: vec![1.0, 0.0, 3.0],
            recon_cost: vec![3.0, 0.0, 1.0],
        };
        assert_eq!(r.mean_los(1, 2), 2.5);
        assert_eq!(r.mean_los(1, 10), 3.0);
        assert_eq!(r.recon_share(1, 1), 0.75);
        assert_eq!(r.recon_share(2, 2), 0.0);
        assert_eq!(r.recon_share(1, 3), 0.5);
    }
}
