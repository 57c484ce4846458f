//! Evaluation of beam plans and the two comparison baselines.

use serde::{Deserialize, Serialize};

use crate::coverage_graph::{squared_distance_sum, BeamPlan, Clique};
use crate::error::{Error, Result};
use crate::geometry::{
    geo_to_ecef, slant_range, view_angle, EcefVector, GeoPoint, SatellitePose, EARTH_RADIUS_KM,
};
use crate::link_budget::{LinkBudgetParams, LinkMetrics, PowerPolicy};

/// Weights of the distance and beam-count terms of the planning objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub distance: f64,
    pub beam_count: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            distance: 0.5,
            beam_count: 0.5,
        }
    }
}

impl Weights {
    pub fn new(distance: f64, beam_count: f64) -> Result<Self> {
        let w = Weights {
            distance,
            beam_count,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.distance >= 0.0
            && self.beam_count >= 0.0
            && (self.distance + self.beam_count - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "weights must be non-negative and sum to 1, got ({}, {})",
                self.distance, self.beam_count
            )))
        }
    }
}

/// Link figures of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub user: usize,
    pub beam: usize,
    pub theta_deg: f64,
    pub scgnr_db: f64,
    pub cnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// One row per user, in user order.
    pub per_user: Vec<UserRow>,
    pub min_cnr_db: f64,
    /// Arithmetic mean of the per-user CNR in dB.
    pub avg_cnr_db: f64,
    pub load_gap: usize,
    pub n_beams: usize,
    pub objective: f64,
    /// Per-user SCGNR, ascending.
    pub cdf_points: Vec<f64>,
}

/// Per-user link figures and aggregate statistics of a plan.
pub fn evaluate(
    plan: &BeamPlan,
    users: &[GeoPoint],
    sat: &SatellitePose,
    params: &LinkBudgetParams,
    weights: Weights,
    policy: &impl PowerPolicy,
) -> Result<EvaluationReport> {
    weights.validate()?;
    if users.is_empty() {
        return Err(Error::domain("no users to evaluate"));
    }
    plan.validate_partition(users.len())
        .map_err(|e| Error::domain(format!("plan does not cover the users: {e}")))?;

    let sizes = plan.sizes();
    let mut per_user = Vec::with_capacity(users.len());
    for (b, beam) in plan.beams.iter().enumerate() {
        let power = policy.user_power_dbw(params.total_power_dbw, &sizes, b);
        for &k in &beam.users {
            let theta = view_angle(sat, beam.center, users[k]);
            let m = LinkMetrics::compute(theta, slant_range(sat, users[k]), power, params)?;
            per_user.push(UserRow {
                user: k,
                beam: b,
                theta_deg: theta,
                scgnr_db: m.scgnr_db,
                cnr_db: m.cnr_db,
            });
        }
    }
    per_user.sort_by_key(|r| r.user);

    let min_cnr_db = per_user
        .iter()
        .map(|r| r.cnr_db)
        .fold(f64::INFINITY, f64::min);
    let avg_cnr_db = per_user.iter().map(|r| r.cnr_db).sum::<f64>() / per_user.len() as f64;
    let mut cdf_points: Vec<f64> = per_user.iter().map(|r| r.scgnr_db).collect();
    cdf_points.sort_by(f64::total_cmp);

    Ok(EvaluationReport {
        min_cnr_db,
        avg_cnr_db,
        load_gap: load_gap(plan),
        n_beams: plan.n_beams(),
        objective: objective(plan, users, weights),
        cdf_points,
        per_user,
    })
}

/// Weighted sum of squared great-circle distances (km^2) and beam count.
pub fn objective(plan: &BeamPlan, users: &[GeoPoint], weights: Weights) -> f64 {
    let beams = weights.beam_count * plan.n_beams() as f64;
    if weights.distance == 0.0 {
        return beams;
    }
    weights.distance * squared_distance_sum(plan, users) + beams
}

/// Largest minus smallest beam occupancy.
pub fn load_gap(plan: &BeamPlan) -> usize {
    let sizes = plan.sizes();
    match (sizes.iter().max(), sizes.iter().min()) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => 0,
    }
}

/// Statistic used to summarise how unevenly users spread over beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadGapMetric {
    #[default]
    MaxMinusMin,
    /// Population variance of the beam occupancies.
    Variance,
}

impl LoadGapMetric {
    pub fn apply(&self, plan: &BeamPlan) -> f64 {
        match self {
            LoadGapMetric::MaxMinusMin => load_gap(plan) as f64,
            LoadGapMetric::Variance => {
                let sizes = plan.sizes();
                if sizes.is_empty() {
                    return 0.0;
                }
                let n = sizes.len() as f64;
                let mean = sizes.iter().sum::<usize>() as f64 / n;
                sizes
                    .iter()
                    .map(|&s| (s as f64 - mean).powi(2))
                    .sum::<f64>()
                    / n
            }
        }
    }
}

/// Fraction of `sorted` samples that are `<= x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Largest amount by which the CDF of `a` rises above that of `b`,
/// checked at every sample of either set. Both inputs must be sorted.
pub fn max_cdf_excess(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .chain(b)
        .map(|&x| empirical_cdf(a, x) - empirical_cdf(b, x))
        .fold(0.0, f64::max)
}

/// Greedy cover by beam aperture: the lowest-index unserved user seeds a
/// beam that takes every unserved user within `half_beamwidth` degrees of
/// it. Members other than the seed may end up up to twice that apart.
pub fn beam_aperture_baseline(
    users: &[GeoPoint],
    sat: &SatellitePose,
    half_beamwidth: f64,
) -> Result<BeamPlan> {
    if users.is_empty() {
        return Err(Error::domain("no users"));
    }
    let mut served = vec![false; users.len()];
    let mut groups: Vec<Clique> = Vec::new();
    for seed in 0..users.len() {
        if served[seed] {
            continue;
        }
        let group: Clique = (seed..users.len())
            .filter(|&k| {
                !served[k]
                    && (k == seed || view_angle(sat, users[seed], users[k]) <= half_beamwidth)
            })
            .collect();
        for &k in &group {
            served[k] = true;
        }
        groups.push(group);
    }
    BeamPlan::from_partition(&groups, users)
}

/// Agglomerative clustering of the users' Earth-centred positions into
/// `n_beams` groups, always merging the two groups with the closest means.
pub fn homogeneous_balance_baseline(users: &[GeoPoint], n_beams: usize) -> Result<BeamPlan> {
    if n_beams == 0 || n_beams > users.len() {
        return Err(Error::domain(format!(
            "beam count {n_beams} outside 1..={}",
            users.len()
        )));
    }
    struct Group {
        members: Vec<usize>,
        sum: EcefVector,
    }
    impl Group {
        fn mean(&self) -> EcefVector {
            self.sum / self.members.len() as f64
        }
    }
    let mut groups: Vec<Group> = users
        .iter()
        .enumerate()
        .map(|(k, u)| Group {
            members: vec![k],
            sum: geo_to_ecef(*u, EARTH_RADIUS_KM),
        })
        .collect();

    while groups.len() > n_beams {
        let means: Vec<EcefVector> = groups.iter().map(Group::mean).collect();
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let d = means[i].distance_squared(&means[j]);
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, _) = best;
        let absorbed = groups.swap_remove(j);
        let target = &mut groups[i];
        target.members.extend(absorbed.members);
        target.sum = target.sum + absorbed.sum;
    }

    let partition: Vec<Clique> = groups.into_iter().map(|g| g.members).collect();
    BeamPlan::from_partition(&partition, users)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage_graph::{run_stage1, Stage1Config};
    use crate::example1;
    use crate::geometry::great_circle_distance;
    use crate::link_budget::{self, PowerAllocation};
    use proptest::prelude::*;

    fn sat() -> SatellitePose {
        example1::satellite()
    }

    fn plan_of(groups: &[&[usize]], users: &[GeoPoint]) -> BeamPlan {
        let p: Vec<Clique> = groups.iter().map(|g| g.to_vec()).collect();
        BeamPlan::from_partition(&p, users).unwrap()
    }

    fn params() -> LinkBudgetParams {
        LinkBudgetParams::default()
    }

    #[test]
    fn nadir_user_at_centre() {
        let s = sat();
        let users = vec![s.position];
        let plan = plan_of(&[&[0]], &users);
        let r = evaluate(
            &plan,
            &users,
            &s,
            &params(),
            Weights::default(),
            &PowerAllocation::EqualSplit,
        )
        .unwrap();
        let row = r.per_user[0];
        assert!(row.theta_deg.abs() < 1e-9);
        // Independent linear-domain composition at S = altitude, one beam, one user.
        let p = params();
        let lambda = link_budget::SPEED_OF_LIGHT / p.carrier_freq;
        let s_m = 8063e3;
        let fspl = 16.0 * std::f64::consts::PI.powi(2) * s_m * s_m / (lambda * lambda);
        let g_rx =
            p.antenna_efficiency * (std::f64::consts::PI * p.antenna_diameter / lambda).powi(2);
        let lin =
            10f64.powf(p.total_power_dbw / 10.0) * g_rx * 10f64.powf(p.max_beam_gain_db / 10.0)
                / (fspl * 10f64.powf(p.atmospheric_loss_db / 10.0))
                / 10f64.powf(p.noise_power_dbw / 10.0);
        assert!((row.cnr_db - 10.0 * lin.log10()).abs() < 1e-9);
        assert_eq!(r.min_cnr_db, r.avg_cnr_db);
        assert_eq!(r.cdf_points.len(), 1);
    }

    #[test]
    fn objective_edge_cases() {
        let users = example1::users();
        let plan = plan_of(&[&[1, 7, 9], &[0, 4, 6], &[2, 5], &[3, 8]], &users);
        assert_eq!(
            objective(&plan, &users, Weights::new(0.0, 1.0).unwrap()),
            4.0
        );
        let at_centres = vec![users[0], users[1]];
        let singles = plan_of(&[&[0], &[1]], &at_centres);
        assert!((objective(&singles, &at_centres, Weights::default()) - 1.0).abs() < 1e-12);

        // (1, 0): an independent pass over the same distances.
        let mut sum = 0.0;
        for beam in &plan.beams {
            let pts: Vec<GeoPoint> = beam.users.iter().map(|&k| users[k]).collect();
            let c = crate::geometry::spherical_centroid(&pts).unwrap();
            for p in pts {
                sum += great_circle_distance(p, c, EARTH_RADIUS_KM).powi(2);
            }
        }
        let got = objective(&plan, &users, Weights::new(1.0, 0.0).unwrap());
        assert!((got - sum).abs() <= 1e-9 * sum);
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(Weights::new(0.7, 0.7).is_err());
        assert!(Weights::new(-0.1, 1.1).is_err());
    }

    #[test]
    fn uncovered_user_is_domain_error() {
        let users = example1::users();
        let plan = plan_of(&[&[0, 2]], &users);
        let err = evaluate(
            &plan,
            &users,
            &sat(),
            &params(),
            Weights::default(),
            &PowerAllocation::EqualSplit,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn example1_report() {
        let users = example1::users();
        let g = example1::graph().unwrap();
        let s1 = run_stage1(&g, &users, &Stage1Config::default()).unwrap();
        let r = evaluate(
            &s1.plan,
            &users,
            &sat(),
            &params(),
            Weights::default(),
            &PowerAllocation::EqualSplit,
        )
        .unwrap();
        assert_eq!(r.n_beams, 4);
        assert_eq!(r.load_gap, 1);
        assert_eq!(r.per_user.len(), 10);
        assert!(r.min_cnr_db <= r.avg_cnr_db);
        assert!(r.cdf_points.windows(2).all(|w| w[0] <= w[1]));
        let again = evaluate(
            &s1.plan,
            &users,
            &sat(),
            &params(),
            Weights::default(),
            &PowerAllocation::EqualSplit,
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn example1_refinement_cannot_widen_gap() {
        // Every feasible 4-beam partition of the fixture has gap >= 1.
        let users = example1::users();
        let g = example1::graph().unwrap();
        let mut best = usize::MAX;
        let mut labels = vec![0usize; 10];
        fn rec(
            i: usize,
            labels: &mut Vec<usize>,
            used: usize,
            g: &crate::coverage_graph::CoverageGraph,
            best: &mut usize,
        ) {
            if i == labels.len() {
                if used != 4 {
                    return;
                }
                let mut sizes = [0usize; 4];
                for &l in labels.iter() {
                    sizes[l] += 1;
                }
                if crate::balancer::feasibility_check(labels, g).is_empty() {
                    *best = (*best).min(sizes.iter().max().unwrap() - sizes.iter().min().unwrap());
                }
                return;
            }
            for l in 0..(used + 1).min(4) {
                labels[i] = l;
                rec(i + 1, labels, used.max(l + 1), g, best);
            }
        }
        rec(0, &mut labels, 0, &g, &mut best);
        assert_eq!(best, 1);
        let s1 = run_stage1(&g, &users, &Stage1Config::default()).unwrap();
        let out = crate::balancer::refine(&s1.plan, &users, &g, &Default::default()).unwrap();
        assert!(load_gap(&out.plan) <= load_gap(&s1.plan));
    }

    #[test]
    fn load_gap_values() {
        let users = example1::users();
        assert_eq!(
            load_gap(&plan_of(
                &[&[0, 1, 2], &[3, 4, 5], &[6, 7], &[8, 9]],
                &users
            )),
            1
        );
        assert_eq!(
            load_gap(&plan_of(&[&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]], &users)),
            0
        );
        let v = LoadGapMetric::Variance.apply(&plan_of(
            &[&[0, 1, 2], &[3, 4, 5], &[6, 7], &[8, 9]],
            &users,
        ));
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cdf_helpers() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_cdf(&a, 0.5), 0.0);
        assert_eq!(empirical_cdf(&a, 2.0), 0.5);
        assert_eq!(empirical_cdf(&a, 9.0), 1.0);
        let shifted = [2.0, 3.0, 4.0, 5.0];
        assert_eq!(max_cdf_excess(&shifted, &a), 0.0);
        assert_eq!(max_cdf_excess(&a, &shifted), 0.25);
    }

    #[test]
    fn aperture_single_and_boundary() {
        let s = sat();
        let one = vec![GeoPoint::new(35.0, -115.0).unwrap()];
        let plan = beam_aperture_baseline(&one, &s, 1.6).unwrap();
        assert_eq!(plan.partition(), vec![vec![0]]);
        assert_eq!(plan.beams[0].center, one[0]);

        let two = vec![
            GeoPoint::new(35.0, -115.0).unwrap(),
            GeoPoint::new(35.3, -114.6).unwrap(),
        ];
        let exact = view_angle(&s, two[0], two[1]);
        let plan = beam_aperture_baseline(&two, &s, exact).unwrap();
        assert_eq!(plan.n_beams(), 1);
        let plan = beam_aperture_baseline(&two, &s, exact * (1.0 - 1e-9)).unwrap();
        assert_eq!(plan.n_beams(), 2);
    }

    #[test]
    fn aperture_on_example1_never_beats_four() {
        let users = example1::users();
        let plan = beam_aperture_baseline(&users, &sat(), example1::HALF_BEAMWIDTH_DEG).unwrap();
        plan.validate_partition(10).unwrap();
        assert!(plan.n_beams() >= 4);
        // Seeds see all their members within the half beamwidth.
        for beam in &plan.beams {
            let seed = beam.users[0];
            for &k in &beam.users {
                assert!(view_angle(&sat(), users[seed], users[k]) <= example1::HALF_BEAMWIDTH_DEG);
            }
        }
    }

    #[test]
    fn homo_balance_extremes() {
        let users = example1::users();
        let all = homogeneous_balance_baseline(&users, 10).unwrap();
        assert_eq!(all.n_beams(), 10);
        let one = homogeneous_balance_baseline(&users, 1).unwrap();
        assert_eq!(one.partition(), vec![(0..10).collect::<Vec<_>>()]);
        assert!(homogeneous_balance_baseline(&users, 0).is_err());
        assert!(homogeneous_balance_baseline(&users, 11).is_err());
    }

    #[test]
    fn homo_balance_two_tight_groups() {
        let mut users = Vec::new();
        for i in 0..5 {
            users.push(GeoPoint::new(31.0 + 0.01 * i as f64, -118.0).unwrap());
            users.push(GeoPoint::new(38.0, -112.0 + 0.01 * i as f64).unwrap());
        }
        let plan = homogeneous_balance_baseline(&users, 2).unwrap();
        // Exhaustive 2-partition oracle on the ECEF sum of squares.
        let pts: Vec<EcefVector> = users
            .iter()
            .map(|u| geo_to_ecef(*u, EARTH_RADIUS_KM))
            .collect();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << 10) - 1 {
            let a: Vec<usize> = (0..10).map(|i| ((mask >> i) & 1) as usize).collect();
            let cost = crate::balancer::KMeansState::from_assignment(a, 2, &pts).inertia;
            if cost < best.0 {
                best = (cost, mask);
            }
        }
        let mut expected: Vec<Vec<usize>> = vec![vec![], vec![]];
        for i in 0..10 {
            expected[((best.1 >> i) & 1) as usize].push(i);
        }
        expected.sort();
        assert_eq!(plan.partition(), expected);
        assert_eq!(
            plan.partition(),
            vec![vec![0, 2, 4, 6, 8], vec![1, 3, 5, 7, 9]]
        );
    }

    fn region_users(max: usize) -> impl Strategy<Value = Vec<GeoPoint>> {
        prop::collection::vec((30.0..40.0f64, -120.0..-110.0f64), 1..max).prop_map(|v| {
            v.into_iter()
                .map(|(a, b)| GeoPoint::new(a, b).unwrap())
                .collect()
        })
    }

    fn as_sets(plan: &BeamPlan, relabel: &[usize]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = plan
            .partition()
            .into_iter()
            .map(|g| {
                let mut g: Vec<usize> = g.into_iter().map(|k| relabel[k]).collect();
                g.sort_unstable();
                g
            })
            .collect();
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn homo_balance_relabel_invariant(users in region_users(14), rot in 0usize..14, frac in 0.0..1.0f64) {
            let n = users.len();
            let b = 1 + ((n - 1) as f64 * frac) as usize;
            let shift = rot % n;
            // new index i holds old user (i + shift) % n
            let permuted: Vec<GeoPoint> = (0..n).map(|i| users[(i + shift) % n]).collect();
            let to_old: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let identity: Vec<usize> = (0..n).collect();
            let a = homogeneous_balance_baseline(&users, b).unwrap();
            let c = homogeneous_balance_baseline(&permuted, b).unwrap();
            prop_assert_eq!(as_sets(&a, &identity), as_sets(&c, &to_old));
        }

        #[test]
        fn baselines_are_partitions(users in region_users(20)) {
            let n = users.len();
            beam_aperture_baseline(&users, &sat(), 1.6).unwrap().validate_partition(n).unwrap();
            homogeneous_balance_baseline(&users, n.div_ceil(2)).unwrap().validate_partition(n).unwrap();
        }

        #[test]
        fn closer_in_main_lobe_never_hurts(a in 0.0..5.0f64, b in 0.0..5.0f64, range in 8063.0..10000.0f64) {
            let p = params();
            let null = link_budget::first_null_angle(&p);
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            prop_assume!(far < null);
            let c_near = link_budget::cnr(near, range, 0.0, &p).unwrap();
            let c_far = link_budget::cnr(far, range, 0.0, &p).unwrap();
            prop_assert!(c_near >= c_far);
        }

        #[test]
        fn report_invariants(users in region_users(16)) {
            let n = users.len();
            let plan = beam_aperture_baseline(&users, &sat(), 1.6).unwrap();
            let r = evaluate(&plan, &users, &sat(), &params(), Weights::default(), &PowerAllocation::EqualSplit).unwrap();
            prop_assert!(r.min_cnr_db <= r.avg_cnr_db + 1e-12);
            prop_assert_eq!(r.cdf_points.len(), n);
            prop_assert!(r.cdf_points.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
