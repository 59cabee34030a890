//! Generalized single-arc packing cuts separated by Fenchel row generation.
//!
//! The master problem proposes integer coefficients (theta, alpha) with
//! theta bounded by B; the oracle checks validity over the arc set by
//! solving one knapsack per capacity multiplicity. Because theta is small,
//! each knapsack is solved through the profit-indexed min-knapsack with a
//! bisection on the guessed optimal value.

use crate::arcset::ArcSet;
use crate::cuts::{PackCut, PackEntry};
use crate::error::Result;
use crate::model::{ModelKind, ModelSpec, ObjSense, RowRole, Sense, VarDomain, VarRole};
use crate::solver::{MipLimits, SolveStatus, Solver};

/// Result of a separation attempt, shared by every cut family.
#[derive(Debug, Clone)]
pub enum SeparationOutcome {
    Violated { cut: PackCut, violation: f64 },
    /// Certificate that no inequality of the family cuts the point.
    NoViolation,
    /// Hit an internal cap; treated as "no cut this round".
    Inconclusive,
}

impl SeparationOutcome {
    pub fn cut(&self) -> Option<&PackCut> {
        match self {
            SeparationOutcome::Violated { cut, .. } => Some(cut),
            _ => None,
        }
    }
}

/// Minimum total weight of a subset whose profit reaches at least `gamma`;
/// also returns one attaining subset. `u64::MAX` when unreachable.
///
/// Runs the profit-indexed dynamic program in O(n * gamma) with a full
/// item-by-item table so the witness backtracks without copying.
pub fn min_knapsack_val(profits: &[u64], weights: &[u64], gamma: u64) -> (u64, Vec<usize>) {
    let cap = gamma as usize;
    if cap == 0 {
        return (0, Vec::new());
    }
    const INF: u64 = u64::MAX;
    let n = profits.len();
    // dp[j][g]: min weight reaching profit >= g using items 0..j.
    let mut dp = vec![INF; (n + 1) * (cap + 1)];
    dp[0] = 0;
    for j in 0..n {
        let (prev, cur) = dp.split_at_mut((j + 1) * (cap + 1));
        let prev = &prev[j * (cap + 1)..];
        let cur = &mut cur[..cap + 1];
        cur.copy_from_slice(&prev[..cap + 1]);
        if profits[j] == 0 {
            continue;
        }
        for g in 0..=cap {
            if prev[g] == INF {
                continue;
            }
            let ng = (g + profits[j] as usize).min(cap);
            let w = prev[g] + weights[j];
            if w < cur[ng] {
                cur[ng] = w;
            }
        }
    }
    if dp[n * (cap + 1) + cap] == INF {
        return (INF, Vec::new());
    }
    // Backtrack. Levels below cap hold exact profits, the cap level holds
    // "profit >= cap", so a step onto cap scans its predecessor window.
    let row = |jj: usize, gg: usize| dp[jj * (cap + 1) + gg];
    let mut subset = Vec::new();
    let mut g = cap;
    for j in (0..n).rev() {
        if row(j + 1, g) == row(j, g) {
            continue;
        }
        let pj = profits[j] as usize;
        let target = row(j + 1, g);
        let from = if g == cap {
            (cap.saturating_sub(pj)..=cap)
                .find(|&f| row(j, f) != INF && row(j, f) + weights[j] == target)
                .expect("dp transition must have a predecessor")
        } else {
            debug_assert!(pj <= g);
            g - pj
        };
        subset.push(j);
        g = from;
    }
    subset.reverse();
    (dp[n * (cap + 1) + cap], subset)
}

/// Maximum-profit 0/1 knapsack solved through bisection on the guessed
/// value, using [`min_knapsack_val`] as the feasibility test. Returns the
/// optimum and one optimal subset.
pub fn min_knapsack_bisect(profits: &[u64], weights: &[u64], capacity: u64) -> (u64, Vec<usize>) {
    let total: u64 = profits.iter().sum();
    // Pre-process: guessing the largest possible value first settles the
    // easy case where everything fits.
    let (w, subset) = min_knapsack_val(profits, weights, total);
    if w <= capacity {
        return (total, subset);
    }
    let mut lb = 0u64;
    let mut ub = total;
    let mut best: Vec<usize> = Vec::new();
    // Invariant: VAL(lb) <= capacity < VAL(ub).
    while ub - lb > 1 {
        let gamma = (lb + ub).div_ceil(2);
        let (w, subset) = min_knapsack_val(profits, weights, gamma);
        if w <= capacity {
            lb = gamma;
            best = subset;
        } else {
            ub = gamma;
        }
    }
    (lb, best)
}

/// Oracle value of a candidate cut over the arc set: the largest gap
/// `theta^T x - alpha^T y` over feasible points, never below zero (the
/// origin attains zero). Also returns a maximising point as (member
/// subset, selector) when the value is positive.
pub fn feasval(
    theta: &[u64],
    alpha: &[u64],
    arc: &ArcSet,
) -> (i64, Option<(Vec<usize>, u32)>) {
    debug_assert_eq!(theta.len(), arc.members.len());
    debug_assert_eq!(alpha.len(), arc.t_max as usize);
    let demands: Vec<u64> = arc.members.iter().map(|m| m.demand).collect();
    let mut best = 0i64;
    let mut witness = None;
    for t in 1..=arc.t_max {
        let (opt, subset) = min_knapsack_bisect(theta, &demands, u64::from(t) * arc.capacity);
        let margin = opt as i64 - alpha[t as usize - 1] as i64;
        if margin > best {
            best = margin;
            witness = Some((subset, t));
        }
    }
    (best, witness)
}

/// Working state of the row-generation loop: points of the arc set
/// accumulated as master constraints. Membership is asserted on insertion.
#[derive(Debug, Clone)]
pub struct RowGenState {
    /// (selected member indices, selector); the all-zero point is implicit.
    pub points: Vec<(Vec<usize>, u32)>,
    pub iterations: usize,
    pub b_bound: u64,
}

impl RowGenState {
    pub fn new(arc: &ArcSet, b_bound: u64) -> Self {
        let mut state = RowGenState {
            points: Vec::new(),
            iterations: 0,
            b_bound,
        };
        // Unit selector points (0, e_t) are trivially feasible; the greedy
        // smallest-demand prefix at each t seeds the master with the packing
        // that defines the plain cut coefficients, saving early iterations.
        let mut order: Vec<usize> = (0..arc.members.len()).collect();
        order.sort_by_key(|&i| arc.members[i].demand);
        for t in 1..=arc.t_max {
            state.push_point(arc, Vec::new(), t);
            let budget = u64::from(t) * arc.capacity;
            let mut used = 0u64;
            let mut prefix = Vec::new();
            for &i in &order {
                if used + arc.members[i].demand > budget {
                    break;
                }
                used += arc.members[i].demand;
                prefix.push(i);
            }
            if !prefix.is_empty() {
                state.push_point(arc, prefix, t);
            }
        }
        state
    }

    pub fn push_point(&mut self, arc: &ArcSet, members: Vec<usize>, t: u32) {
        let load: u64 = members.iter().map(|&i| arc.members[i].demand).sum();
        assert!(t >= 1 && t <= arc.t_max, "selector out of range");
        assert!(
            load <= u64::from(t) * arc.capacity,
            "point violates the arc capacity; not a member of the arc set"
        );
        let mut sorted = members;
        sorted.sort_unstable();
        sorted.dedup();
        self.points.push((sorted, t));
    }
}

/// Separate a Gen-SAC-Pack cut at the aggregated point (`x_star` per
/// member, `y_star` per t) by row generation. `NoViolation` certifies that
/// no inequality with coefficients bounded by `b_bound` separates the point.
///
/// The master is restricted to commodities with positive point mass: a
/// coefficient on a zero-valued commodity cannot raise the violation, and
/// a cut over the restricted support stays valid for the full arc set
/// because omitted commodities enter every packing with coefficient zero.
pub fn rowgen_separate(
    arc: &ArcSet,
    x_star: &[f64],
    y_star: &[f64],
    b_bound: u64,
    max_iters: usize,
    violation_threshold: f64,
    solver: &dyn Solver,
) -> Result<SeparationOutcome> {
    let support: Vec<usize> = (0..arc.members.len())
        .filter(|&i| x_star[i] > 1e-9)
        .collect();
    if support.is_empty() {
        return Ok(SeparationOutcome::NoViolation);
    }
    let restricted = ArcSet {
        arc: arc.arc,
        capacity: arc.capacity,
        t_max: arc.t_max,
        members: support.iter().map(|&i| arc.members[i].clone()).collect(),
    };
    let xs: Vec<f64> = support.iter().map(|&i| x_star[i]).collect();
    let mut state = RowGenState::new(&restricted, b_bound);
    rowgen_separate_from(&mut state, &restricted, &xs, y_star, max_iters, violation_threshold, solver)
}

/// Row generation resuming from an explicit state (exposed for tests and
/// warm-started loops).
pub fn rowgen_separate_from(
    state: &mut RowGenState,
    arc: &ArcSet,
    x_star: &[f64],
    y_star: &[f64],
    max_iters: usize,
    violation_threshold: f64,
    solver: &dyn Solver,
) -> Result<SeparationOutcome> {
    let n = arc.members.len();
    if n == 0 {
        return Ok(SeparationOutcome::NoViolation);
    }
    let alpha_ub = (n as u64) * state.b_bound;
    for _ in 0..max_iters {
        state.iterations += 1;
        let master = build_master(state, arc, x_star, y_star, alpha_ub);
        let (sepval, theta, alpha) = solve_master(&master, solver)?;
        if sepval <= violation_threshold {
            return Ok(SeparationOutcome::NoViolation);
        }
        let (gap, witness) = feasval(&theta, &alpha, arc);
        if gap == 0 {
            // Tie-break only once a valid cut is in hand: minimise total
            // alpha, then total theta, at (almost) unchanged violation, so
            // regenerated cuts are reproducible. The tie-broken optimum is
            // re-certified and, if the oracle rejects it, feeds the loop.
            let (theta, alpha) =
                match tie_break(&master, state, arc, x_star, y_star, sepval, solver)? {
                    Some((t2, a2)) => {
                        let (gap2, witness2) = feasval(&t2, &a2, arc);
                        if gap2 == 0 {
                            (t2, a2)
                        } else {
                            let (subset, t) =
                                witness2.expect("positive oracle gap must carry a witness");
                            state.push_point(arc, subset, t);
                            continue;
                        }
                    }
                    None => (theta, alpha),
                };
            let entries = arc
                .members
                .iter()
                .zip(&theta)
                .filter(|&(_, &th)| th > 0)
                .map(|(m, &th)| PackEntry {
                    commodity: m.commodity,
                    demand: m.demand,
                    theta: th,
                    x_keys: m.x_keys.clone(),
                })
                .collect();
            let cut = PackCut {
                arc: arc.arc,
                kind_is_lifted: false,
                entries,
                alpha,
            };
            return Ok(SeparationOutcome::Violated { cut, violation: sepval });
        }
        let (subset, t) = witness.expect("positive oracle gap must carry a witness");
        state.push_point(arc, subset, t);
    }
    Ok(SeparationOutcome::Inconclusive)
}

struct Master {
    model: ModelSpec,
    thetas: Vec<usize>,
    alphas: Vec<usize>,
}

/// The master: maximise theta^T x* - alpha^T y* over integer coefficients
/// valid for every stored point, with monotone alpha and theta <= B.
fn build_master(
    state: &RowGenState,
    arc: &ArcSet,
    x_star: &[f64],
    y_star: &[f64],
    alpha_ub: u64,
) -> Master {
    let n = arc.members.len();
    let mut m = ModelSpec::new("rowgen-master", ModelKind::Auxiliary, ObjSense::Maximize);
    let thetas: Vec<usize> = (0..n)
        .map(|k| {
            m.add_var(
                VarRole::MasterTheta { member: k },
                VarDomain::Integer { ub: Some(state.b_bound as f64) },
                x_star[k],
            )
        })
        .collect();
    let alphas: Vec<usize> = (1..=arc.t_max)
        .map(|t| {
            m.add_var(
                VarRole::MasterAlpha { t },
                VarDomain::Integer { ub: Some(alpha_ub as f64) },
                -y_star[t as usize - 1],
            )
        })
        .collect();
    for (members, t) in &state.points {
        let mut coeffs: Vec<(usize, f64)> =
            members.iter().map(|&k| (thetas[k], 1.0)).collect();
        coeffs.push((alphas[*t as usize - 1], -1.0));
        m.add_row(coeffs, Sense::Le, 0.0, RowRole::Internal);
    }
    for w in alphas.windows(2) {
        m.add_row(vec![(w[0], 1.0), (w[1], -1.0)], Sense::Le, 0.0, RowRole::Internal);
    }
    Master { model: m, thetas, alphas }
}

fn solve_master(master: &Master, solver: &dyn Solver) -> Result<(f64, Vec<u64>, Vec<u64>)> {
    let res = solver.solve_mip(&master.model, &MipLimits::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(crate::error::McndError::Solver(format!(
            "row-generation master ended with {:?}",
            res.status
        )));
    }
    let sepval = res.incumbent.expect("optimal master has an incumbent");
    let values = res.incumbent_values.expect("master solve returned no point");
    let theta = master.thetas.iter().map(|&v| values[v].round() as u64).collect();
    let alpha = master.alphas.iter().map(|&v| values[v].round() as u64).collect();
    Ok((sepval, theta, alpha))
}

fn tie_break(
    master: &Master,
    state: &RowGenState,
    arc: &ArcSet,
    x_star: &[f64],
    y_star: &[f64],
    sepval: f64,
    solver: &dyn Solver,
) -> Result<Option<(Vec<u64>, Vec<u64>)>> {
    let mut tie = master.model.clone();
    let obj_row: Vec<(usize, f64)> = master
        .thetas
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, x_star[k]))
        .chain(master.alphas.iter().enumerate().map(|(i, &v)| (v, -y_star[i])))
        .collect();
    tie.add_row(obj_row, Sense::Ge, sepval - 1e-9, RowRole::Internal);
    tie.sense = ObjSense::Minimize;
    let alpha_weight = (arc.members.len() as f64) * state.b_bound as f64 + 1.0;
    for &v in &master.thetas {
        tie.set_obj(v, 1.0);
    }
    for &v in &master.alphas {
        tie.set_obj(v, alpha_weight);
    }
    let res = solver.solve_mip(&tie, &MipLimits::default())?;
    let Some(values) = res.incumbent_values else {
        return Ok(None);
    };
    let theta = master.thetas.iter().map(|&v| values[v].round() as u64).collect();
    let alpha = master.alphas.iter().map(|&v| values[v].round() as u64).collect();
    Ok(Some((theta, alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcset::ArcMember;
    use crate::cuts::XKey;
    use crate::solver::HighsSolver;

    fn arcset(demands: &[u64], q: u64, t_max: u32) -> ArcSet {
        ArcSet {
            arc: 0,
            capacity: q,
            t_max,
            members: demands
                .iter()
                .enumerate()
                .map(|(k, &d)| ArcMember {
                    commodity: k,
                    demand: d,
                    x_keys: vec![XKey::Path(k)],
                })
                .collect(),
        }
    }

    fn brute_knapsack(profits: &[u64], weights: &[u64], capacity: u64) -> u64 {
        let n = profits.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let (mut p, mut w) = (0u64, 0u64);
            for b in 0..n {
                if mask & (1 << b) != 0 {
                    p += profits[b];
                    w += weights[b];
                }
            }
            if w <= capacity {
                best = best.max(p);
            }
        }
        best
    }

    #[test]
    fn bisect_small_weighted_case() {
        let profits = [1, 1, 1, 2];
        let weights = [30, 30, 30, 60];
        // Brute force first, then freeze: profit 4 needs {30,30,60} = 120 > 100,
        // so the optimum is 3 ({30,30,30} or {30,60}).
        assert_eq!(brute_knapsack(&profits, &weights, 100), 3);
        let (opt, subset) = min_knapsack_bisect(&profits, &weights, 100);
        assert_eq!(opt, 3);
        let w: u64 = subset.iter().map(|&j| weights[j]).sum();
        let p: u64 = subset.iter().map(|&j| profits[j]).sum();
        assert!(w <= 100 && p == 3);
    }

    #[test]
    fn bisect_all_items_too_heavy() {
        let (opt, subset) = min_knapsack_bisect(&[2, 3], &[50, 60], 10);
        assert_eq!(opt, 0);
        assert!(subset.is_empty());
    }

    #[test]
    fn bisect_matches_weight_indexed_dp() {
        // Classical O(n*q) max-knapsack DP as the independent oracle.
        fn weight_dp(profits: &[u64], weights: &[u64], capacity: u64) -> u64 {
            let cap = capacity as usize;
            let mut dp = vec![0u64; cap + 1];
            for j in 0..profits.len() {
                let wj = weights[j] as usize;
                if wj > cap {
                    continue;
                }
                for w in (wj..=cap).rev() {
                    dp[w] = dp[w].max(dp[w - wj] + profits[j]);
                }
            }
            dp[cap]
        }
        let mut s = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        for _ in 0..200 {
            let n = 1 + (next() % 14) as usize;
            let b = 1 + next() % 10;
            let profits: Vec<u64> = (0..n).map(|_| next() % (b + 1)).collect();
            let weights: Vec<u64> = (0..n).map(|_| 1 + next() % 90).collect();
            let capacity = 1 + next() % 220;
            let (opt, subset) = min_knapsack_bisect(&profits, &weights, capacity);
            assert_eq!(opt, weight_dp(&profits, &weights, capacity));
            let w: u64 = subset.iter().map(|&j| weights[j]).sum();
            let p: u64 = subset.iter().map(|&j| profits[j]).sum();
            assert!(w <= capacity && p == opt);
        }
    }

    #[test]
    fn feasval_zero_for_zero_theta_and_valid_cuts() {
        let arc = arcset(&[30, 30, 30, 60], 100, 2);
        let (v, w) = feasval(&[0, 0, 0, 0], &[0, 0], &arc);
        assert_eq!(v, 0);
        assert!(w.is_none());
        // The lifted worked-example cut is valid: zero oracle gap.
        let (v, _) = feasval(&[1, 1, 1, 2], &[3, 5], &arc);
        assert_eq!(v, 0);
        // Dropping the second-level coefficient to 4 leaves a violated point.
        let (v, w) = feasval(&[1, 1, 1, 2], &[3, 4], &arc);
        assert_eq!(v, 1);
        let (subset, t) = w.unwrap();
        assert_eq!(t, 2);
        let load: u64 = subset.iter().map(|&i| arc.members[i].demand).sum();
        assert!(load <= 200);
    }

    #[test]
    fn feasval_matches_exhaustive_enumeration() {
        let mut s = 0xA5A5A5A5DEADBEEFu64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        for _ in 0..120 {
            let n = 1 + (next() % 10) as usize;
            let demands: Vec<u64> = (0..n).map(|_| 1 + next() % 80).collect();
            let q = 30 + next() % 120;
            let total: u64 = demands.iter().sum();
            let t_max = (total.div_ceil(q) as u32).min(4);
            let arc = arcset(&demands, q, t_max);
            let theta: Vec<u64> = (0..n).map(|_| next() % 4).collect();
            let alpha_raw: Vec<u64> = (0..t_max).map(|_| next() % 12).collect();
            let mut alpha = alpha_raw;
            alpha.sort_unstable();
            let (v, _) = feasval(&theta, &alpha, &arc);
            // Exhaustive: every subset at every t, plus the origin.
            let mut best = 0i64;
            for mask in 0u32..(1 << n) {
                let (mut p, mut w) = (0i64, 0u64);
                for b in 0..n {
                    if mask & (1 << b) != 0 {
                        p += theta[b] as i64;
                        w += demands[b];
                    }
                }
                for t in 1..=t_max {
                    if w <= u64::from(t) * q {
                        best = best.max(p - alpha[t as usize - 1] as i64);
                    }
                }
            }
            assert_eq!(v, best.max(0));
        }
    }

    #[test]
    fn rowgen_integral_point_is_not_separated() {
        let arc = arcset(&[60, 70], 100, 2);
        let solver = HighsSolver::default();
        // The integral point "commodity 0 routed, one unit installed".
        let mut state = RowGenState::new(&arc, 3);
        state.push_point(&arc, vec![0], 1);
        let out = rowgen_separate_from(
            &mut state,
            &arc,
            &[1.0, 0.0],
            &[1.0, 0.0],
            50,
            1e-4,
            &solver,
        )
        .unwrap();
        assert!(matches!(out, SeparationOutcome::NoViolation));
    }

    #[test]
    fn rowgen_separates_worked_example_point() {
        // Four commodities at x = 0.5 with y = (0.75, 0): the lifted cut
        // x1+x2+x3+2x4 <= 3y1+5y2 is violated by 0.25, so the exact
        // separation must find at least that much.
        let arc = arcset(&[30, 30, 30, 60], 100, 2);
        let solver = HighsSolver::default();
        let out = rowgen_separate(
            &arc,
            &[0.5, 0.5, 0.5, 0.5],
            &[0.75, 0.0],
            3,
            100,
            1e-4,
            &solver,
        )
        .unwrap();
        match out {
            SeparationOutcome::Violated { cut, violation } => {
                assert!(violation >= 0.25 - 1e-9, "violation {violation}");
                // The emitted cut must be valid on the enumerated arc set.
                let pts = crate::arcset::enumerate_arc_set(&arc).unwrap();
                let verdict = crate::arcset::validate_cut(
                    &cut.to_cut(crate::cuts::CutKind::GenSacPackRowGen),
                    &pts,
                );
                assert_eq!(verdict, crate::arcset::CutVerdict::Valid);
            }
            other => panic!("expected violated cut, got {other:?}"),
        }
    }
}
