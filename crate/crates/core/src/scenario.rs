//! Random scenarios, configuration files, the Monte-Carlo driver and its
//! output files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balancer::{refine, BalancerConfig};
use crate::coverage_graph::{build_graph, run_stage1, BeamPlan, Stage1Config};
use crate::error::{Error, Result};
use crate::geometry::{GeoPoint, SatellitePose};
use crate::link_budget::{LinkBudgetParams, PowerAllocation};
use crate::metrics::{
    beam_aperture_baseline, evaluate, homogeneous_balance_baseline, LoadGapMetric, UserRow, Weights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Clique packing followed by constrained K-means.
    TwoStage,
    Stage1Only,
    BeamAperture,
    HomoBalance,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::TwoStage,
        Algorithm::Stage1Only,
        Algorithm::BeamAperture,
        Algorithm::HomoBalance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::TwoStage => "two_stage",
            Algorithm::Stage1Only => "stage1_only",
            Algorithm::BeamAperture => "beam_aperture",
            Algorithm::HomoBalance => "homo_balance",
        }
    }

    /// Whether the plan is built from cliques of the coverage graph.
    pub fn is_clique_based(&self) -> bool {
        matches!(self, Algorithm::TwoStage | Algorithm::Stage1Only)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown algorithm {s:?}; expected one of two_stage, stage1_only, beam_aperture, homo_balance"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteConfig {
    pub lat: f64,
    pub lon: f64,
    /// km above the surface.
    pub altitude_km: f64,
}

impl Default for SatelliteConfig {
    fn default() -> Self {
        SatelliteConfig {
            lat: 0.0,
            lon: -88.7,
            altitude_km: 8063.0,
        }
    }
}

impl SatelliteConfig {
    pub fn pose(&self) -> Result<SatellitePose> {
        SatellitePose::new(GeoPoint::new(self.lat, self.lon)?, self.altitude_km)
    }
}

/// Everything a run needs. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Users per trial.
    pub n_users: usize,
    /// Run every listed user count instead of `n_users`.
    pub k_sweep: Option<Vec<usize>>,
    /// Fixed user positions `[lat, lon]`; replaces random placement.
    pub users: Option<Vec<[f64; 2]>>,
    pub lat_range: [f64; 2],
    pub lon_range: [f64; 2],
    pub satellite: SatelliteConfig,
    pub link: LinkBudgetParams,
    pub weights: Weights,
    pub seed: u64,
    pub n_trials: usize,
    pub algorithms: Vec<Algorithm>,
    /// Beams the payload can form; defaults to the user count.
    pub max_beams: Option<usize>,
    pub stage1: Stage1Config,
    pub balancer: BalancerConfig,
    pub power_allocation: PowerAllocation,
    pub load_gap_metric: LoadGapMetric,
    /// Worker threads; all cores when unset.
    pub workers: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_users: 10,
            k_sweep: None,
            users: None,
            lat_range: [30.0, 40.0],
            lon_range: [-120.0, -110.0],
            satellite: SatelliteConfig::default(),
            link: LinkBudgetParams::default(),
            weights: Weights::default(),
            seed: 42,
            n_trials: 200,
            algorithms: Algorithm::ALL.to_vec(),
            max_beams: None,
            stage1: Stage1Config::default(),
            balancer: BalancerConfig::default(),
            power_allocation: PowerAllocation::default(),
            load_gap_metric: LoadGapMetric::default(),
            workers: None,
        }
    }
}

impl ScenarioConfig {
    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// User counts to run.
    pub fn user_counts(&self) -> Vec<usize> {
        if let Some(users) = &self.users {
            return vec![users.len()];
        }
        self.k_sweep.clone().unwrap_or_else(|| vec![self.n_users])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if let Some(ks) = &self.k_sweep {
            if ks.is_empty() || ks.contains(&0) {
                return bad("k_sweep must list positive user counts".into());
            }
        }
        if let Some(users) = &self.users {
            if users.is_empty() {
                return bad("users must not be empty".into());
            }
            for &[lat, lon] in users {
                GeoPoint::new(lat, lon).map_err(|e| Error::Config(format!("users: {e}")))?;
            }
        }
        check_range("lat_range", self.lat_range, 90.0)?;
        check_range("lon_range", self.lon_range, 180.0)?;
        self.satellite
            .pose()
            .map_err(|e| Error::Config(format!("satellite: {e}")))?;
        self.link
            .validate()
            .map_err(|e| Error::Config(format!("link: {e}")))?;
        self.weights
            .validate()
            .map_err(|e| Error::Config(format!("weights: {e}")))?;
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return bad("algorithms lists a duplicate".into());
        }
        if self.max_beams == Some(0) {
            return bad("max_beams must be at least 1".into());
        }
        if self.stage1.beam_width == 0 {
            return bad("stage1.beam_width must be at least 1".into());
        }
        if self.stage1.clique_size_cap == Some(0) {
            return bad("stage1.clique_size_cap must be at least 1".into());
        }
        if self.balancer.restarts == 0 {
            return bad("balancer.restarts must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

fn check_range(name: &str, r: [f64; 2], limit: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] || r[0] < -limit || r[1] > limit {
        return Err(Error::Config(format!(
            "{name} must satisfy -{limit} <= lo <= hi <= {limit}, got {r:?}"
        )));
    }
    Ok(())
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn draw_users(cfg: &ScenarioConfig, n_users: usize, rng: &mut ChaCha8Rng) -> Result<Vec<GeoPoint>> {
    let ([lat0, lat1], [lon0, lon1]) = (cfg.lat_range, cfg.lon_range);
    if !(lat0 <= lat1 && lon0 <= lon1) {
        return Err(Error::domain(format!(
            "degenerate region {:?} x {:?}",
            cfg.lat_range, cfg.lon_range
        )));
    }
    (0..n_users)
        .map(|_| {
            let lat = lat0 + (lat1 - lat0) * rng.random::<f64>();
            let lon = lon0 + (lon1 - lon0) * rng.random::<f64>();
            GeoPoint::new(lat, lon)
        })
        .collect()
}

/// `n_users` positions uniform over the configured rectangle, drawn from
/// the stream of `(cfg.seed, trial)`.
pub fn generate_users(cfg: &ScenarioConfig, n_users: usize, trial: usize) -> Result<Vec<GeoPoint>> {
    draw_users(cfg, n_users, &mut trial_rng(cfg.seed, trial))
}

/// Outcome of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub plan: BeamPlan,
    pub n_beams: usize,
    pub load_gap: usize,
    /// The configured load statistic.
    pub load_metric: f64,
    pub min_cnr_db: f64,
    pub avg_cnr_db: f64,
    pub objective: f64,
    /// Same-beam pairs further apart than the half beamwidth.
    pub pair_violations: usize,
    /// Stage 2 kept the Stage-1 plan; only set for `two_stage`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fallback: Option<bool>,
    #[serde(skip)]
    pub per_user: Vec<UserRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n_users: usize,
    pub trial: usize,
    pub users: Vec<GeoPoint>,
    pub edges: usize,
    pub results: Vec<AlgorithmResult>,
}

impl TrialRecord {
    pub fn result(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }
}

/// A plan that needs more beams than the payload provides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub n_users: usize,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub n_beams: usize,
    pub max_beams: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub n_users: usize,
    /// Mean over trials of the worst user's CNR.
    pub min_cnr_db: f64,
    /// Mean CNR over every user of every trial.
    pub avg_cnr_db: f64,
    pub avg_load_gap: f64,
    pub avg_n_beams: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub generated_at: u64,
    pub config: ScenarioConfig,
    pub summary: Vec<SummaryRow>,
    /// Mean load statistic per user count, by algorithm.
    pub load_gap_series: BTreeMap<Algorithm, Vec<(usize, f64)>>,
    /// Pooled per-user SCGNR samples, sorted, by algorithm then user count.
    pub cdf: BTreeMap<Algorithm, BTreeMap<usize, Vec<f64>>>,
    pub violations: Vec<Violation>,
    pub trials: Vec<TrialRecord>,
}

impl RunDocument {
    /// Serialized form with the timestamp zeroed, for comparing runs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.generated_at = 0;
        serde_json::to_string_pretty(&copy).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Recheck every plan: a partition of the trial's users, and for the
    /// clique-based algorithms no pair beyond the half beamwidth.
    pub fn validate(&self) -> Result<()> {
        let sat = self.config.satellite.pose()?;
        for t in &self.trials {
            let g = build_graph(&t.users, &sat, self.config.link.half_beamwidth_deg)?;
            for r in &t.results {
                let ctx = |e: Error| {
                    Error::Internal(format!(
                        "{} K={} trial {}: {e}",
                        r.algorithm, t.n_users, t.trial
                    ))
                };
                r.plan.validate_partition(t.users.len()).map_err(ctx)?;
                if r.algorithm.is_clique_based() {
                    r.plan.validate(&g).map_err(ctx)?;
                }
            }
        }
        Ok(())
    }
}

fn run_trial(
    cfg: &ScenarioConfig,
    sat: &SatellitePose,
    n_users: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, trial);
    let users = match &cfg.users {
        Some(fixed) => fixed
            .iter()
            .map(|&[lat, lon]| GeoPoint::new(lat, lon))
            .collect::<Result<Vec<_>>>()?,
        None => draw_users(cfg, n_users, &mut rng)?,
    };
    let balancer = BalancerConfig {
        seed: cfg.balancer.seed ^ rng.next_u64(),
        ..cfg.balancer
    };
    let half_bw = cfg.link.half_beamwidth_deg;
    let g = build_graph(&users, sat, half_bw)?;

    let wants = |a: Algorithm| cfg.algorithms.contains(&a);
    let needs_stage1 =
        wants(Algorithm::TwoStage) || wants(Algorithm::Stage1Only) || wants(Algorithm::HomoBalance);
    let stage1 = if needs_stage1 {
        Some(run_stage1(&g, &users, &cfg.stage1)?.plan)
    } else {
        None
    };

    let mut results = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let (plan, fallback) = match algorithm {
            Algorithm::Stage1Only => (stage1.clone().expect("computed"), None),
            Algorithm::TwoStage => {
                let out = refine(stage1.as_ref().expect("computed"), &users, &g, &balancer)?;
                (out.plan, Some(out.fallback))
            }
            Algorithm::BeamAperture => (beam_aperture_baseline(&users, sat, half_bw)?, None),
            Algorithm::HomoBalance => {
                let b = stage1.as_ref().expect("computed").n_beams();
                (homogeneous_balance_baseline(&users, b)?, None)
            }
        };
        let report = evaluate(
            &plan,
            &users,
            sat,
            &cfg.link,
            cfg.weights,
            &cfg.power_allocation,
        )?;
        results.push(AlgorithmResult {
            algorithm,
            n_beams: report.n_beams,
            load_gap: report.load_gap,
            load_metric: cfg.load_gap_metric.apply(&plan),
            min_cnr_db: report.min_cnr_db,
            avg_cnr_db: report.avg_cnr_db,
            objective: report.objective,
            pair_violations: plan.violations(&g).len(),
            fallback,
            per_user: report.per_user,
            plan,
        });
    }
    Ok(TrialRecord {
        n_users: users.len(),
        trial,
        edges: g.edge_count(),
        users,
        results,
    })
}

/// Run every trial of every user count and aggregate.
pub fn run(cfg: &ScenarioConfig) -> Result<RunDocument> {
    cfg.validate()?;
    let sat = cfg.satellite.pose()?;
    let jobs: Vec<(usize, usize)> = cfg
        .user_counts()
        .into_iter()
        .flat_map(|k| (0..cfg.n_trials).map(move |t| (k, t)))
        .collect();

    let work = || -> Result<Vec<TrialRecord>> {
        jobs.par_iter()
            .map(|&(k, t)| run_trial(cfg, &sat, k, t))
            .collect()
    };
    let trials = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let doc = aggregate(cfg.clone(), trials, generated_at);
    doc.validate()?;
    Ok(doc)
}

/// Fold trial records, in order, into the summary tables.
pub fn aggregate(
    config: ScenarioConfig,
    trials: Vec<TrialRecord>,
    generated_at: u64,
) -> RunDocument {
    #[derive(Default)]
    struct Acc {
        trials: usize,
        min_sum: f64,
        cnr_sum: f64,
        cnr_count: usize,
        gap_sum: f64,
        metric_sum: f64,
        beams_sum: f64,
        scgnr: Vec<f64>,
    }
    let max_beams = config.max_beams;
    let mut acc: BTreeMap<(Algorithm, usize), Acc> = BTreeMap::new();
    let mut violations = Vec::new();
    for t in &trials {
        for r in &t.results {
            let a = acc.entry((r.algorithm, t.n_users)).or_default();
            a.trials += 1;
            a.min_sum += r.min_cnr_db;
            a.cnr_sum += r.per_user.iter().map(|u| u.cnr_db).sum::<f64>();
            a.cnr_count += r.per_user.len();
            a.gap_sum += r.load_gap as f64;
            a.metric_sum += r.load_metric;
            a.beams_sum += r.n_beams as f64;
            a.scgnr.extend(r.per_user.iter().map(|u| u.scgnr_db));
            let limit = max_beams.unwrap_or(t.n_users);
            if r.n_beams > limit {
                violations.push(Violation {
                    n_users: t.n_users,
                    trial: t.trial,
                    algorithm: r.algorithm,
                    n_beams: r.n_beams,
                    max_beams: limit,
                });
            }
        }
    }

    let mut summary = Vec::new();
    let mut load_gap_series: BTreeMap<Algorithm, Vec<(usize, f64)>> = BTreeMap::new();
    let mut cdf: BTreeMap<Algorithm, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for ((algorithm, k), mut a) in acc {
        let n = a.trials as f64;
        summary.push(SummaryRow {
            algorithm,
            n_users: k,
            min_cnr_db: a.min_sum / n,
            avg_cnr_db: a.cnr_sum / a.cnr_count.max(1) as f64,
            avg_load_gap: a.gap_sum / n,
            avg_n_beams: a.beams_sum / n,
        });
        load_gap_series
            .entry(algorithm)
            .or_default()
            .push((k, a.metric_sum / n));
        a.scgnr.sort_by(f64::total_cmp);
        cdf.entry(algorithm).or_default().insert(k, a.scgnr);
    }

    RunDocument {
        generated_at,
        config,
        summary,
        load_gap_series,
        cdf,
        violations,
        trials,
    }
}

#[derive(Serialize)]
struct PerUserCsvRow {
    trial: usize,
    #[serde(rename = "K")]
    n_users: usize,
    algorithm: Algorithm,
    user: usize,
    beam: usize,
    theta_deg: f64,
    scgnr_db: f64,
    cnr_db: f64,
}

#[derive(Serialize)]
struct CdfCsvRow {
    #[serde(rename = "K")]
    n_users: usize,
    scgnr_db: f64,
    cdf: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Serialize(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write `run.json`, `per_user.csv`, `summary.csv` and one
/// `cdf_<algorithm>.csv` per algorithm into `dir`.
pub fn write_outputs(doc: &RunDocument, dir: &Path) -> Result<()> {
    doc.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let json = serde_json::to_string_pretty(doc).map_err(|e| Error::Serialize(e.to_string()))?;
    let run_path = dir.join("run.json");
    fs::write(&run_path, json).map_err(|e| Error::io(&run_path, e))?;

    let rows = doc.trials.iter().flat_map(|t| {
        t.results.iter().flat_map(move |r| {
            r.per_user.iter().map(move |u| PerUserCsvRow {
                trial: t.trial,
                n_users: t.n_users,
                algorithm: r.algorithm,
                user: u.user,
                beam: u.beam,
                theta_deg: u.theta_deg,
                scgnr_db: u.scgnr_db,
                cnr_db: u.cnr_db,
            })
        })
    });
    write_csv(&dir.join("per_user.csv"), rows)?;
    write_csv(&dir.join("summary.csv"), doc.summary.iter())?;

    for (algorithm, by_k) in &doc.cdf {
        let rows = by_k.iter().flat_map(|(&k, samples)| {
            let n = samples.len() as f64;
            samples.iter().enumerate().map(move |(i, &x)| CdfCsvRow {
                n_users: k,
                scgnr_db: x,
                cdf: (i + 1) as f64 / n,
            })
        });
        write_csv(&dir.join(format!("cdf_{algorithm}.csv")), rows)?;
    }
    Ok(())
}
