//! Stage 1: fewest beams.
//!
//! Users are vertices; two users share an edge when the satellite sees them
//! within the half beamwidth of each other. A beam can only serve a clique
//! of that graph, so the stage enumerates cliques by size and packs
//! disjoint ones, largest first, into candidate partitions. The candidate
//! with the fewest cliques wins and each beam is centred on its members'
//! centroid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    geo_to_ecef, great_circle_distance, spherical_centroid, view_angle, view_angle_ecef, GeoPoint,
    SatellitePose, EARTH_RADIUS_KM,
};

/// Sorted, 0-based user indices.
pub type Clique = Vec<usize>;

/// Cliques covering users, kept in lexicographic order.
pub type Partition = Vec<Clique>;

/// Adjacency of users under the half-beamwidth predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGraph {
    n: usize,
    adjacency: Vec<bool>,
    /// Pairwise view angles in degrees, when built from coordinates.
    angles: Option<Vec<f64>>,
}

impl CoverageGraph {
    /// Wrap an explicit 0/1 matrix. It must be square, symmetric and have a
    /// unit diagonal.
    pub fn from_adjacency<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::domain("adjacency matrix is empty"));
        }
        let mut adjacency = vec![false; n * n];
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::domain(format!(
                    "adjacency row {k} has {} entries, want {n}",
                    row.len()
                )));
            }
            for (l, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::domain(format!(
                        "adjacency entry ({k}, {l}) = {v} is not 0/1"
                    )));
                }
                adjacency[k * n + l] = v == 1;
            }
        }
        for k in 0..n {
            if !adjacency[k * n + k] {
                return Err(Error::domain(format!(
                    "adjacency diagonal entry {k} must be 1"
                )));
            }
            for l in 0..k {
                if adjacency[k * n + l] != adjacency[l * n + k] {
                    return Err(Error::domain(format!(
                        "adjacency not symmetric at ({k}, {l})"
                    )));
                }
            }
        }
        Ok(CoverageGraph {
            n,
            adjacency,
            angles: None,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn adjacent(&self, k: usize, l: usize) -> bool {
        self.adjacency[k * self.n + l]
    }

    /// View angle between two users, if the graph was built from coordinates.
    pub fn angle(&self, k: usize, l: usize) -> Option<f64> {
        self.angles.as_ref().map(|a| a[k * self.n + l])
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .flat_map(|k| (k + 1..self.n).map(move |l| (k, l)))
            .filter(|&(k, l)| self.adjacent(k, l))
            .count()
    }

    /// Adjacency as 0/1 rows.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|k| (0..self.n).map(|l| u8::from(self.adjacent(k, l))).collect())
            .collect()
    }

    pub fn is_clique(&self, members: &[usize]) -> bool {
        members
            .iter()
            .enumerate()
            .all(|(i, &a)| members[i + 1..].iter().all(|&b| self.adjacent(a, b)))
    }

    /// Copy with edge `{k, l}` added.
    pub fn with_edge(&self, k: usize, l: usize) -> Self {
        let mut g = self.clone();
        g.adjacency[k * self.n + l] = true;
        g.adjacency[l * self.n + k] = true;
        g.angles = None;
        g
    }
}

/// Build the graph from user positions: `{k, l}` is an edge iff the
/// satellite sees the two users within `half_beamwidth` degrees.
pub fn build_graph(
    users: &[GeoPoint],
    sat: &SatellitePose,
    half_beamwidth: f64,
) -> Result<CoverageGraph> {
    let n = users.len();
    if n == 0 {
        return Err(Error::domain("cannot build a coverage graph without users"));
    }
    let s = sat.ecef();
    let pts: Vec<_> = users
        .iter()
        .map(|u| geo_to_ecef(*u, EARTH_RADIUS_KM))
        .collect();
    let mut angles = vec![0.0; n * n];
    let mut adjacency = vec![false; n * n];
    for k in 0..n {
        adjacency[k * n + k] = true;
        for l in k + 1..n {
            let psi = view_angle_ecef(s, pts[k], pts[l]);
            angles[k * n + l] = psi;
            angles[l * n + k] = psi;
            let edge = psi <= half_beamwidth;
            adjacency[k * n + l] = edge;
            adjacency[l * n + k] = edge;
        }
    }
    Ok(CoverageGraph {
        n,
        adjacency,
        angles: Some(angles),
    })
}

/// All cliques of the graph grouped by vertex count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueCatalog {
    pub by_size: BTreeMap<usize, Vec<Clique>>,
    /// Largest clique size present.
    pub max_size: usize,
}

impl CliqueCatalog {
    pub fn of_size(&self, size: usize) -> &[Clique] {
        self.by_size.get(&size).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Default clique-size cap, `min(K, 12)`.
pub fn default_clique_cap(n_users: usize) -> usize {
    n_users.clamp(1, 12)
}

/// Every clique with at most `max_clique_size` vertices, listed
/// lexicographically within each size.
///
/// Cliques that could grow past the cap are extended greedily (lowest
/// index first) and the results are listed under their true size; those
/// larger sizes are therefore samples, not complete lists.
pub fn enumerate_cliques(g: &CoverageGraph, max_clique_size: usize) -> CliqueCatalog {
    let cap = max_clique_size.max(1);
    let n = g.n_users();
    let mut by_size = BTreeMap::new();
    let mut level: Vec<Clique> = (0..n).map(|k| vec![k]).collect();
    let mut size = 1;
    loop {
        let next: Vec<Clique> = if size < cap {
            level
                .iter()
                .flat_map(|c| {
                    let last = *c.last().expect("cliques are non-empty");
                    (last + 1..n)
                        .filter(|&v| c.iter().all(|&u| g.adjacent(u, v)))
                        .map(move |v| {
                            let mut e = c.clone();
                            e.push(v);
                            e
                        })
                })
                .collect()
        } else {
            Vec::new()
        };
        if size == cap {
            for c in &level {
                let grown = greedy_extend(g, c);
                if grown.len() > cap {
                    by_size
                        .entry(grown.len())
                        .or_insert_with(Vec::new)
                        .push(grown);
                }
            }
        }
        by_size.insert(size, level);
        if next.is_empty() {
            break;
        }
        level = next;
        size += 1;
    }
    for list in by_size.values_mut() {
        list.sort();
        list.dedup();
    }
    let max_size = by_size
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&k, _)| k)
        .max()
        .unwrap_or(1);
    CliqueCatalog { by_size, max_size }
}

fn greedy_extend(g: &CoverageGraph, c: &[usize]) -> Clique {
    let mut out = c.to_vec();
    for v in 0..g.n_users() {
        if !out.contains(&v) && out.iter().all(|&u| g.adjacent(u, v)) {
            out.push(v);
        }
    }
    out.sort_unstable();
    out
}

/// Maximal families of pairwise-disjoint cliques drawn from `list`, with
/// `blocked` users unavailable. Families come out in include-first DFS
/// order over `list`; at most `limit` are produced.
fn maximal_packings<'a>(
    list: &[&'a Clique],
    blocked: &[bool],
    limit: usize,
) -> Vec<Vec<&'a Clique>> {
    struct Search<'s, 'a> {
        list: &'s [&'a Clique],
        used: Vec<bool>,
        chosen: Vec<&'a Clique>,
        out: Vec<Vec<&'a Clique>>,
        limit: usize,
        budget: usize,
    }

    impl<'s, 'a> Search<'s, 'a> {
        fn free(&self, c: &Clique) -> bool {
            c.iter().all(|&v| !self.used[v])
        }

        fn set(&mut self, c: &Clique, on: bool) {
            for &v in c {
                self.used[v] = on;
            }
        }

        fn run(&mut self, idx: usize) {
            if self.out.len() >= self.limit || self.budget == 0 {
                return;
            }
            self.budget -= 1;
            if idx == self.list.len() {
                if self.list.iter().all(|c| !self.free(c)) {
                    self.out.push(self.chosen.clone());
                }
                return;
            }
            let c = self.list[idx];
            if !self.free(c) {
                self.run(idx + 1);
                return;
            }
            self.set(c, true);
            self.chosen.push(c);
            self.run(idx + 1);
            self.chosen.pop();
            self.set(c, false);
            // Skipping c only leads to a maximal family if a later clique
            // that overlaps c can still be taken.
            let blockable = self.list[idx + 1..]
                .iter()
                .any(|d| d.iter().any(|v| c.contains(v)) && self.free(d));
            if blockable {
                self.run(idx + 1);
            }
        }
    }

    let mut s = Search {
        list,
        used: blocked.to_vec(),
        chosen: Vec::new(),
        out: Vec::new(),
        limit: limit.max(1),
        budget: 1_000_000,
    };
    s.run(0);
    s.out
}

#[derive(Debug, Clone)]
struct Candidate {
    cliques: Partition,
    covered: Vec<bool>,
    n_covered: usize,
}

impl Candidate {
    fn extended(&self, family: &[&Clique]) -> Candidate {
        let mut c = self.clone();
        for clique in family {
            for &v in clique.iter() {
                debug_assert!(!c.covered[v]);
                c.covered[v] = true;
            }
            c.n_covered += clique.len();
            c.cliques.push((*clique).clone());
        }
        c.cliques.sort();
        c
    }
}

fn prune(mut cands: Vec<Candidate>, beam_width: usize) -> Vec<Candidate> {
    cands.sort_by(|a, b| {
        b.n_covered
            .cmp(&a.n_covered)
            .then_with(|| a.cliques.cmp(&b.cliques))
    });
    cands.dedup_by(|a, b| a.cliques == b.cliques);
    cands.truncate(beam_width.max(1));
    cands
}

/// Build the candidate dictionary: seed with every maximal packing of the
/// largest cliques, then for each smaller size extend every candidate by
/// every maximal packing of the cliques still disjoint from it. Complete
/// candidates stop growing; anything left uncovered at the end becomes a
/// singleton. At most `beam_width` candidates survive each size.
pub fn expand_dictionary(
    catalog: &CliqueCatalog,
    n_users: usize,
    beam_width: usize,
) -> Vec<Partition> {
    let empty = Candidate {
        cliques: Vec::new(),
        covered: vec![false; n_users],
        n_covered: 0,
    };
    let mut sizes: Vec<usize> = catalog
        .by_size
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&k, _)| k)
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));

    let mut cands = vec![empty];
    for size in sizes {
        let mut next = Vec::new();
        for cand in &cands {
            if cand.n_covered == n_users {
                next.push(cand.clone());
                continue;
            }
            let avail: Vec<&Clique> = catalog
                .of_size(size)
                .iter()
                .filter(|c| c.iter().all(|&v| v < n_users && !cand.covered[v]))
                .collect();
            if avail.is_empty() {
                next.push(cand.clone());
                continue;
            }
            for family in maximal_packings(&avail, &cand.covered, beam_width) {
                next.push(cand.extended(&family));
            }
        }
        cands = prune(next, beam_width);
    }

    cands
        .into_iter()
        .map(|mut c| {
            for v in 0..n_users {
                if !c.covered[v] {
                    c.cliques.push(vec![v]);
                }
            }
            c.cliques.sort();
            c.cliques
        })
        .collect()
}

/// The candidates with the fewest cliques, in lexicographic order.
pub fn fewest_beams(candidates: &[Partition]) -> Vec<&Partition> {
    let Some(best) = candidates.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    let mut out: Vec<&Partition> = candidates.iter().filter(|c| c.len() == best).collect();
    out.sort();
    out.dedup();
    out
}

/// One active beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub users: Vec<usize>,
    pub center: GeoPoint,
}

/// Partition of users into beams together with the beam centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPlan {
    pub beams: Vec<Beam>,
}

impl BeamPlan {
    /// Plan whose centres are the spherical centroids of each group.
    pub fn from_partition(partition: &[Clique], users: &[GeoPoint]) -> Result<Self> {
        let mut groups: Vec<Clique> = partition
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        groups.sort();
        let beams = groups
            .into_iter()
            .map(|members| {
                if let Some(&bad) = members.iter().find(|&&k| k >= users.len()) {
                    return Err(Error::domain(format!("user index {bad} out of range")));
                }
                let pts: Vec<GeoPoint> = members.iter().map(|&k| users[k]).collect();
                Ok(Beam {
                    center: spherical_centroid(&pts)?,
                    users: members,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BeamPlan { beams })
    }

    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.beams.iter().map(|b| b.users.len()).collect()
    }

    pub fn partition(&self) -> Partition {
        self.beams.iter().map(|b| b.users.clone()).collect()
    }

    /// Beam index of every user. Requires a valid partition.
    pub fn assignment(&self, n_users: usize) -> Vec<usize> {
        let mut a = vec![usize::MAX; n_users];
        for (b, beam) in self.beams.iter().enumerate() {
            for &k in &beam.users {
                a[k] = b;
            }
        }
        a
    }

    /// Non-empty, disjoint beams whose union is every user.
    pub fn validate_partition(&self, n_users: usize) -> Result<()> {
        let mut seen = vec![false; n_users];
        for (b, beam) in self.beams.iter().enumerate() {
            if beam.users.is_empty() {
                return Err(Error::Internal(format!("beam {b} serves no user")));
            }
            for &k in &beam.users {
                if k >= n_users {
                    return Err(Error::Internal(format!("beam {b} lists unknown user {k}")));
                }
                if seen[k] {
                    return Err(Error::Internal(format!(
                        "user {k} is served by more than one beam"
                    )));
                }
                seen[k] = true;
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Internal(format!("user {k} is not served")));
        }
        Ok(())
    }

    /// Same-beam pairs that are not adjacent in `g`.
    pub fn violations(&self, g: &CoverageGraph) -> Vec<(usize, usize)> {
        self.beams
            .iter()
            .flat_map(|b| pairs(&b.users))
            .filter(|&(k, l)| !g.adjacent(k, l))
            .collect()
    }

    /// Partition plus pairwise-adjacency check.
    pub fn validate(&self, g: &CoverageGraph) -> Result<()> {
        self.validate_partition(g.n_users())?;
        match self.violations(g).first() {
            Some(&(k, l)) => Err(Error::Internal(format!(
                "users {k} and {l} share a beam but are not within the half beamwidth"
            ))),
            None => Ok(()),
        }
    }
}

pub(crate) fn pairs(members: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    members
        .iter()
        .enumerate()
        .flat_map(move |(i, &a)| members[i + 1..].iter().map(move |&b| (a.min(b), a.max(b))))
}

/// Sum of squared great-circle distances (km^2) from users to their beam centre.
pub fn squared_distance_sum(plan: &BeamPlan, users: &[GeoPoint]) -> f64 {
    plan.beams
        .iter()
        .flat_map(|b| b.users.iter().map(move |&k| (k, b.center)))
        .map(|(k, c)| great_circle_distance(users[k], c, EARTH_RADIUS_KM).powi(2))
        .sum()
}

/// Pick the candidate with the fewest beams. Ties go to the smaller sum of
/// squared user-to-centroid distances, then to the lexicographically
/// smaller partition.
pub fn select_min_beams(candidates: &[Partition], users: &[GeoPoint]) -> Result<BeamPlan> {
    let best = fewest_beams(candidates);
    if best.is_empty() {
        return Err(Error::Internal(
            "no candidate partitions to select from".into(),
        ));
    }
    let mut chosen: Option<(f64, BeamPlan)> = None;
    for partition in best {
        let plan = BeamPlan::from_partition(partition, users)?;
        let cost = squared_distance_sum(&plan, users);
        if chosen.as_ref().is_none_or(|(c, _)| cost < *c) {
            chosen = Some((cost, plan));
        }
    }
    Ok(chosen.expect("at least one candidate").1)
}

/// `ceil(K / ceil((K - 1) / 2))`, and 1 for fewer than two users.
pub fn beam_count_lower_bound(n_users: usize) -> usize {
    if n_users < 2 {
        return 1;
    }
    n_users.div_ceil((n_users - 1).div_ceil(2))
}

/// A beam member sitting outside the pattern's half-power cone around its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpbwWarning {
    pub beam: usize,
    pub user: usize,
    pub theta_deg: f64,
    /// How far past the half-power angle, degrees.
    pub excess_deg: f64,
}

/// Check every member against the half-power angle after centres are placed.
pub fn hpbw_audit(
    plan: &BeamPlan,
    users: &[GeoPoint],
    sat: &SatellitePose,
    half_power_deg: f64,
) -> Vec<HpbwWarning> {
    let mut out = Vec::new();
    for (b, beam) in plan.beams.iter().enumerate() {
        for &k in &beam.users {
            let theta = view_angle(sat, beam.center, users[k]);
            if theta > half_power_deg {
                out.push(HpbwWarning {
                    beam: b,
                    user: k,
                    theta_deg: theta,
                    excess_deg: theta - half_power_deg,
                });
            }
        }
    }
    out
}

/// Knobs of the clique stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage1Config {
    /// Candidates retained per clique size.
    pub beam_width: usize,
    /// Largest clique size enumerated exhaustively; `None` means `min(K, 12)`.
    pub clique_size_cap: Option<usize>,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            beam_width: 64,
            clique_size_cap: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stage1Output {
    pub catalog: CliqueCatalog,
    pub candidates: Vec<Partition>,
    pub plan: BeamPlan,
}

/// Catalog, dictionary and selection in one call.
pub fn run_stage1(
    g: &CoverageGraph,
    users: &[GeoPoint],
    cfg: &Stage1Config,
) -> Result<Stage1Output> {
    if users.len() != g.n_users() {
        return Err(Error::domain(format!(
            "graph has {} users but {} positions were given",
            g.n_users(),
            users.len()
        )));
    }
    let cap = cfg
        .clique_size_cap
        .unwrap_or_else(|| default_clique_cap(g.n_users()));
    let catalog = enumerate_cliques(g, cap);
    let candidates = expand_dictionary(&catalog, g.n_users(), cfg.beam_width);
    let plan = select_min_beams(&candidates, users)?;
    plan.validate(g)?;
    Ok(Stage1Output {
        catalog,
        candidates,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example1::{self, EXAMPLE1_ADJACENCY};

    fn one_based(list: &[Clique]) -> Vec<Vec<usize>> {
        list.iter()
            .map(|c| c.iter().map(|v| v + 1).collect())
            .collect()
    }

    fn parts(s: &[&[usize]]) -> Partition {
        let mut p: Partition = s
            .iter()
            .map(|c| c.iter().map(|v| v - 1).collect())
            .collect();
        for c in &mut p {
            c.sort_unstable();
        }
        p.sort();
        p
    }

    fn ex1() -> CoverageGraph {
        CoverageGraph::from_adjacency(&EXAMPLE1_ADJACENCY).unwrap()
    }

    #[test]
    fn adjacency_validation() {
        assert!(CoverageGraph::from_adjacency::<[u8; 0]>(&[]).is_err());
        assert!(CoverageGraph::from_adjacency(&[[1u8, 1], [0, 1]]).is_err());
        assert!(CoverageGraph::from_adjacency(&[[0u8]]).is_err());
        assert!(CoverageGraph::from_adjacency(&[vec![1u8, 2], vec![2, 1]]).is_err());
        assert_eq!(ex1().edge_count(), 14);
    }

    #[test]
    fn graph_from_positions_small_cases() {
        let sat = SatellitePose::new(GeoPoint::new(0.0, -88.7).unwrap(), 8063.0).unwrap();
        let p = GeoPoint::new(35.0, -115.0).unwrap();
        let g = build_graph(&[p], &sat, 1.6).unwrap();
        assert_eq!(g.matrix(), vec![vec![1]]);
        let g = build_graph(&[p, p], &sat, 1.6).unwrap();
        assert_eq!(g.matrix(), vec![vec![1, 1], vec![1, 1]]);
        assert!(build_graph(&[], &sat, 1.6).is_err());
    }

    #[test]
    fn example1_catalog() {
        let cat = enumerate_cliques(&ex1(), 10);
        assert_eq!(
            one_based(cat.of_size(1)),
            (1..=10).map(|v| vec![v]).collect::<Vec<_>>()
        );
        let h2 = vec![
            vec![1, 3],
            vec![1, 4],
            vec![1, 5],
            vec![1, 7],
            vec![2, 3],
            vec![2, 8],
            vec![2, 10],
            vec![3, 4],
            vec![3, 6],
            vec![4, 5],
            vec![4, 9],
            vec![5, 7],
            vec![6, 8],
            vec![8, 10],
        ];
        assert_eq!(one_based(cat.of_size(2)), h2);
        assert_eq!(
            one_based(cat.of_size(3)),
            vec![vec![1, 3, 4], vec![1, 4, 5], vec![1, 5, 7], vec![2, 8, 10]]
        );
        assert!(cat.of_size(4).is_empty());
        assert_eq!(cat.max_size, 3);
    }

    #[test]
    fn example1_seeds_from_largest_cliques() {
        let cat = enumerate_cliques(&ex1(), 10);
        let list: Vec<&Clique> = cat.of_size(3).iter().collect();
        let seeds = maximal_packings(&list, &[false; 10], 64);
        let mut seeds: Vec<Partition> = seeds
            .into_iter()
            .map(|f| {
                let mut p: Partition = f.into_iter().cloned().collect();
                p.sort();
                p
            })
            .collect();
        seeds.sort();
        assert_eq!(
            seeds,
            vec![
                parts(&[&[2, 8, 10], &[1, 3, 4]]),
                parts(&[&[2, 8, 10], &[1, 4, 5]]),
                parts(&[&[2, 8, 10], &[1, 5, 7]]),
            ]
        );
    }

    #[test]
    fn example1_dictionary_and_selection() {
        let g = ex1();
        let cat = enumerate_cliques(&g, 10);
        let cands = expand_dictionary(&cat, 10, 64);
        let k3 = parts(&[&[2, 8, 10], &[1, 5, 7], &[3, 6], &[4, 9]]);
        assert!(cands.contains(&k3));
        assert!(cands.contains(&parts(&[&[2, 8, 10], &[1, 3, 4], &[5, 7], &[6], &[9]])));
        assert!(cands.contains(&parts(&[&[2, 8, 10], &[1, 4, 5], &[3, 6], &[7], &[9]])));
        for c in &cands {
            let mut all: Vec<usize> = c.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
            assert!(c.iter().all(|q| g.is_clique(q)));
        }
        let best = fewest_beams(&cands);
        assert_eq!(best, vec![&k3]);
    }

    #[test]
    fn example1_selection_with_coordinates() {
        let users = example1::users();
        let g = example1::graph().unwrap();
        let out = run_stage1(&g, &users, &Stage1Config::default()).unwrap();
        assert_eq!(out.plan.n_beams(), 4);
        assert_eq!(
            out.plan.partition(),
            parts(&[&[2, 8, 10], &[1, 5, 7], &[3, 6], &[4, 9]])
        );
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let rows: Vec<Vec<u8>> = (0..5)
            .map(|k| (0..5).map(|l| u8::from(k == l)).collect())
            .collect();
        let g = CoverageGraph::from_adjacency(&rows).unwrap();
        let cands = expand_dictionary(&enumerate_cliques(&g, 5), 5, 64);
        assert_eq!(cands, vec![(0..5).map(|k| vec![k]).collect::<Partition>()]);
    }

    #[test]
    fn single_and_coincident_users() {
        let sat = SatellitePose::new(GeoPoint::new(0.0, -88.7).unwrap(), 8063.0).unwrap();
        let p = GeoPoint::new(33.3, -117.2).unwrap();
        let g = build_graph(&[p], &sat, 1.6).unwrap();
        let out = run_stage1(&g, &[p], &Stage1Config::default()).unwrap();
        assert_eq!(out.plan.n_beams(), 1);
        assert!((out.plan.beams[0].center.lat - p.lat).abs() < 1e-9);

        let users = vec![p; 6];
        let g = build_graph(&users, &sat, 1.6).unwrap();
        let out = run_stage1(&g, &users, &Stage1Config::default()).unwrap();
        assert_eq!(out.plan.n_beams(), 1);
        assert_eq!(out.plan.beams[0].users, (0..6).collect::<Vec<_>>());
        assert!((out.plan.beams[0].center.lon - p.lon).abs() < 1e-9);
    }

    #[test]
    fn clique_cap_extends_greedily() {
        let rows = vec![vec![1u8; 6]; 6];
        let g = CoverageGraph::from_adjacency(&rows).unwrap();
        let cat = enumerate_cliques(&g, 3);
        assert_eq!(cat.of_size(3).len(), 20);
        assert!(cat.of_size(4).is_empty());
        assert_eq!(cat.of_size(6), &[vec![0, 1, 2, 3, 4, 5]]);
        assert_eq!(cat.max_size, 6);
        let cands = expand_dictionary(&cat, 6, 64);
        assert_eq!(fewest_beams(&cands)[0].len(), 1);
    }

    #[test]
    fn select_requires_candidates() {
        assert!(matches!(
            select_min_beams(&[], &[]),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn lower_bound() {
        assert_eq!(beam_count_lower_bound(10), 2);
        assert_eq!(beam_count_lower_bound(2), 2);
        assert_eq!(beam_count_lower_bound(3), 3);
        assert_eq!(beam_count_lower_bound(1), 1);
        assert_eq!(beam_count_lower_bound(0), 1);
        assert_eq!(beam_count_lower_bound(25), 3);
    }

    #[test]
    fn plan_validation_catches_bad_partitions() {
        let p = GeoPoint::new(35.0, -115.0).unwrap();
        let users = vec![p; 3];
        let overlap = BeamPlan::from_partition(&[vec![0, 1], vec![1, 2]], &users).unwrap();
        assert!(overlap.validate_partition(3).is_err());
        let missing = BeamPlan::from_partition(&[vec![0, 1]], &users).unwrap();
        assert!(missing.validate_partition(3).is_err());
        let empty = BeamPlan {
            beams: vec![Beam {
                users: vec![],
                center: p,
            }],
        };
        assert!(empty.validate_partition(0).is_err());
        assert!(BeamPlan::from_partition(&[vec![0, 7]], &users).is_err());
    }

    #[test]
    fn violations_on_example1() {
        let g = ex1();
        let users = vec![GeoPoint::new(0.0, 0.0).unwrap(); 10];
        let plan =
            BeamPlan::from_partition(&[vec![0, 1], vec![2, 3, 4, 5, 6, 7, 8, 9]], &users).unwrap();
        assert!(plan.violations(&g).contains(&(0, 1)));
        let plan =
            BeamPlan::from_partition(&parts(&[&[2, 8, 10], &[1, 5, 7], &[3, 6], &[4, 9]]), &users)
                .unwrap();
        assert!(plan.violations(&g).is_empty());
    }
}
