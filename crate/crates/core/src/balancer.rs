//! Stage 2: rebalance users across the Stage-1 beams with K-means in
//! Earth-centred Cartesian coordinates.
//!
//! The number of clusters is fixed to the Stage-1 beam count. Restart 0
//! starts from the Stage-1 centroids; later restarts use k-means++ seeds
//! from a per-restart ChaCha stream. A restart is acceptable only if every
//! pair of users in a cluster is adjacent in the coverage graph and its
//! inertia does not exceed that of the Stage-1 plan. Among acceptable
//! restarts the lowest inertia wins, ties to the lowest restart index.
//! With none acceptable, the Stage-1 plan is returned and flagged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage_graph::{pairs, BeamPlan, CoverageGraph};
use crate::error::{Error, Result};
use crate::geometry::{geo_to_ecef, EcefVector, GeoPoint, EARTH_RADIUS_KM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalancerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig {
            restarts: 20,
            max_iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansState {
    pub centroids: Vec<EcefVector>,
    /// Cluster index of every point.
    pub assignment: Vec<usize>,
    pub iteration: usize,
    /// Sum of squared distances from points to their centroid, km^2.
    pub inertia: f64,
}

impl KMeansState {
    /// State with `centroids` and every point on its nearest centroid.
    pub fn from_centroids(centroids: Vec<EcefVector>, points: &[EcefVector]) -> Self {
        let assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let inertia = inertia(points, &assignment, &centroids);
        KMeansState {
            centroids,
            assignment,
            iteration: 0,
            inertia,
        }
    }

    /// State for a given labelling, centroids at the cluster means.
    pub fn from_assignment(
        assignment: Vec<usize>,
        n_clusters: usize,
        points: &[EcefVector],
    ) -> Self {
        let centroids = cluster_means(
            points,
            &assignment,
            n_clusters,
            &vec![EcefVector::ZERO; n_clusters],
        );
        let inertia = inertia(points, &assignment, &centroids);
        KMeansState {
            centroids,
            assignment,
            iteration: 0,
            inertia,
        }
    }
}

pub fn inertia(points: &[EcefVector], assignment: &[usize], centroids: &[EcefVector]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.distance_squared(&centroids[c]))
        .sum()
}

fn nearest(p: &EcefVector, centroids: &[EcefVector]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = p.distance_squared(c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Means of each cluster; an empty cluster keeps its entry from `fallback`.
fn cluster_means(
    points: &[EcefVector],
    assignment: &[usize],
    n_clusters: usize,
    fallback: &[EcefVector],
) -> Vec<EcefVector> {
    let mut sums = vec![EcefVector::ZERO; n_clusters];
    let mut counts = vec![0usize; n_clusters];
    for (p, &c) in points.iter().zip(assignment) {
        sums[c] = sums[c] + *p;
        counts[c] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (s, n))| if n == 0 { fallback[i] } else { s / n as f64 })
        .collect()
}

/// One assignment + update round.
///
/// Points go to their nearest centroid (lowest index on ties). Each empty
/// cluster then takes the point farthest from its centroid among clusters
/// with more than one member. Centroids move to the member means.
pub fn lloyd_step(state: &KMeansState, points: &[EcefVector]) -> KMeansState {
    let k = state.centroids.len();
    let mut assignment: Vec<usize> = points
        .iter()
        .map(|p| nearest(p, &state.centroids))
        .collect();

    let mut counts = vec![0usize; k];
    for &c in &assignment {
        counts[c] += 1;
    }
    let mut centroids = state.centroids.clone();
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| counts[assignment[i]] > 1)
            .map(|(i, p)| (i, p.distance_squared(&centroids[assignment[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = donor {
            counts[assignment[i]] -= 1;
            assignment[i] = empty;
            counts[empty] = 1;
            centroids[empty] = points[i];
        }
    }

    let centroids = cluster_means(points, &assignment, k, &centroids);
    let inertia = inertia(points, &assignment, &centroids);
    KMeansState {
        centroids,
        assignment,
        iteration: state.iteration + 1,
        inertia,
    }
}

/// Same-cluster pairs that are not adjacent in the graph.
pub fn feasibility_check(assignment: &[usize], g: &CoverageGraph) -> Vec<(usize, usize)> {
    let n_clusters = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); n_clusters];
    for (k, &c) in assignment.iter().enumerate() {
        groups[c].push(k);
    }
    let mut out: Vec<(usize, usize)> = groups
        .iter()
        .flat_map(|m| pairs(m).collect::<Vec<_>>())
        .filter(|&(k, l)| !g.adjacent(k, l))
        .collect();
    out.sort_unstable();
    out
}

/// k-means++ seeding.
fn plus_plus_seeds(points: &[EcefVector], k: usize, rng: &mut ChaCha8Rng) -> Vec<EcefVector> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| p.distance_squared(&centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.distance_squared(&c));
        }
        centroids.push(c);
    }
    centroids
}

/// Trace of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartLog {
    pub restart: usize,
    /// Inertia of the starting state followed by one entry per Lloyd step.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
    pub feasible: bool,
    #[serde(skip)]
    pub assignment: Vec<usize>,
}

impl RestartLog {
    pub fn final_inertia(&self) -> f64 {
        *self.inertia_history.last().expect("history is never empty")
    }

    /// Inertia never went up, up to rounding.
    pub fn is_monotone(&self) -> bool {
        self.inertia_history
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub plan: BeamPlan,
    /// Restart whose result was accepted; `None` on fallback.
    pub accepted_restart: Option<usize>,
    /// No acceptable restart; `plan` is the Stage-1 plan.
    pub fallback: bool,
    pub inertia: f64,
    pub stage1_inertia: f64,
    pub restarts: Vec<RestartLog>,
}

fn run_restart(
    restart: usize,
    mut state: KMeansState,
    points: &[EcefVector],
    g: &CoverageGraph,
    max_iterations: usize,
) -> RestartLog {
    let mut history = vec![state.inertia];
    let mut converged = false;
    while state.iteration < max_iterations {
        let next = lloyd_step(&state, points);
        history.push(next.inertia);
        let unchanged = next.assignment == state.assignment;
        state = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    let feasible = feasibility_check(&state.assignment, g).is_empty();
    RestartLog {
        restart,
        inertia_history: history,
        converged,
        feasible,
        assignment: state.assignment,
    }
}

/// Refine a Stage-1 plan by constrained K-means.
pub fn refine(
    plan: &BeamPlan,
    users: &[GeoPoint],
    g: &CoverageGraph,
    cfg: &BalancerConfig,
) -> Result<RefineOutcome> {
    let n = users.len();
    if g.n_users() != n {
        return Err(Error::domain(format!(
            "graph has {} users but {n} positions were given",
            g.n_users()
        )));
    }
    plan.validate_partition(n)
        .map_err(|e| Error::domain(format!("stage-1 plan: {e}")))?;

    let k = plan.n_beams();
    let points: Vec<EcefVector> = users
        .iter()
        .map(|u| geo_to_ecef(*u, EARTH_RADIUS_KM))
        .collect();
    let warm = KMeansState::from_assignment(plan.assignment(n), k, &points);
    let stage1_inertia = warm.inertia;

    let n_restarts = cfg.restarts.max(1);
    let restarts: Vec<RestartLog> = (0..n_restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                warm.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r as u64);
                KMeansState::from_centroids(plus_plus_seeds(&points, k, &mut rng), &points)
            };
            run_restart(r, start, &points, g, cfg.max_iterations)
        })
        .collect();

    let tol = 1e-9 * stage1_inertia.max(1.0);
    let best = restarts
        .iter()
        .filter(|log| log.feasible && log.final_inertia() <= stage1_inertia + tol)
        .filter(|log| cluster_count(&log.assignment) == k)
        .fold(None::<&RestartLog>, |best, log| match best {
            Some(b) if b.final_inertia() <= log.final_inertia() => Some(b),
            _ => Some(log),
        });

    match best {
        Some(log) => {
            let mut groups = vec![Vec::new(); k];
            for (u, &c) in log.assignment.iter().enumerate() {
                groups[c].push(u);
            }
            let refined = BeamPlan::from_partition(&groups, users)?;
            refined.validate(g)?;
            Ok(RefineOutcome {
                plan: refined,
                accepted_restart: Some(log.restart),
                fallback: false,
                inertia: log.final_inertia(),
                stage1_inertia,
                restarts,
            })
        }
        None => Ok(RefineOutcome {
            plan: plan.clone(),
            accepted_restart: None,
            fallback: true,
            inertia: stage1_inertia,
            stage1_inertia,
            restarts,
        }),
    }
}

fn cluster_count(assignment: &[usize]) -> usize {
    let mut seen: Vec<usize> = assignment.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}
