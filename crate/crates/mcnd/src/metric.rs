//! Metric inequalities from the dual of the aggregated multicommodity-flow
//! LP, and the Lagrangian loop that harvests them from a sequence of LP
//! points.
//!
//! For a capacity vector taken from an LP-feasible point, anchoring one
//! arc's dual weight at one and maximising the dual objective either
//! certifies the capacities (objective zero, yielding a helper inequality
//! tight at the generating point) or proves nothing for that anchor. The
//! helper form is valid for every LP point and therefore leaves the LP
//! optimum unchanged; its ceiling-rounded integral form may cut fractional
//! points and is used to steer the next LP point, not as a model row.

use std::collections::{BTreeMap, HashSet};

use crate::cuts::{Cut, CutFingerprint, CutKind};
use crate::error::{McndError, Result};
use crate::instance::{Formulation, Instance};
use crate::model::{ModelKind, ModelSpec, ObjSense, RowRole, Sense, VarDomain, VarRole};
use crate::solver::{LpPoint, SolveStatus, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggMode {
    Origin,
    Destination,
}

/// One aggregated commodity: all commodities sharing the root node, with
/// node balances and the union of their path arcs oriented in flow
/// direction (reversed under destination aggregation, which mirrors the
/// network so the same dual machinery applies).
#[derive(Debug, Clone)]
pub struct AggCommodity {
    pub root: usize,
    pub commodities: Vec<usize>,
    /// (node, balance); positive at delivery nodes, the root carries the
    /// negated total. Nodes not listed have zero balance.
    pub balances: Vec<(usize, i64)>,
    pub arcs: Vec<AggArc>,
    pub nodes: Vec<usize>,
}

/// An arc of a merged path set in flow orientation. Direct arcs carry no
/// capacity machinery in the models, so the dual treats them as free
/// (zero-weight) arcs.
#[derive(Debug, Clone, Copy)]
pub struct AggArc {
    pub arc: usize,
    pub tail: usize,
    pub head: usize,
    pub capacitated: bool,
}

#[derive(Debug, Clone)]
pub struct AggCommoditySet {
    pub mode: AggMode,
    pub groups: Vec<AggCommodity>,
    /// Group indices whose merged path set uses each arc.
    pub arc_groups: Vec<Vec<usize>>,
}

/// Merge commodities by origin or destination. Aggregation is feasible for
/// the LP because fractional flow is splittable across the merged paths.
pub fn aggregate(inst: &Instance, mode: AggMode) -> AggCommoditySet {
    assert_eq!(inst.kind, Formulation::PathBased);
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, com) in inst.commodities.iter().enumerate() {
        let root = match mode {
            AggMode::Origin => com.origin,
            AggMode::Destination => com.dest,
        };
        by_root.entry(root).or_default().push(k);
    }
    let mut groups = Vec::with_capacity(by_root.len());
    let mut arc_groups = vec![Vec::new(); inst.arcs.len()];
    for (root, commodities) in by_root {
        let mut balance: BTreeMap<usize, i64> = BTreeMap::new();
        let mut arcs: BTreeMap<usize, (usize, usize, bool)> = BTreeMap::new();
        for &k in &commodities {
            let com = &inst.commodities[k];
            let delivery = match mode {
                AggMode::Origin => com.dest,
                AggMode::Destination => com.origin,
            };
            *balance.entry(delivery).or_insert(0) += com.demand as i64;
            *balance.entry(root).or_insert(0) -= com.demand as i64;
            for &p in inst.paths_of(k) {
                for &a in &inst.path(p).arcs {
                    let arc = &inst.arcs[a];
                    let oriented = match mode {
                        AggMode::Origin => (arc.tail, arc.head),
                        AggMode::Destination => (arc.head, arc.tail),
                    };
                    arcs.insert(a, (oriented.0, oriented.1, !arc.is_direct));
                }
            }
        }
        let mut nodes: HashSet<usize> = HashSet::new();
        for (_, &(t, h, _)) in &arcs {
            nodes.insert(t);
            nodes.insert(h);
        }
        nodes.insert(root);
        let gi = groups.len();
        for &a in arcs.keys() {
            arc_groups[a].push(gi);
        }
        let mut nodes: Vec<usize> = nodes.into_iter().collect();
        nodes.sort_unstable();
        groups.push(AggCommodity {
            root,
            commodities,
            balances: balance.into_iter().filter(|&(_, b)| b != 0).collect(),
            arcs: arcs
                .into_iter()
                .map(|(a, (tail, head, capacitated))| AggArc { arc: a, tail, head, capacitated })
                .collect(),
            nodes,
        });
    }
    AggCommoditySet { mode, groups, arc_groups }
}

/// The dual feasibility LP for a given capacity vector with the anchor
/// arc's weight pinned to one. Maximising it decides whether the
/// capacities support the aggregated flows.
pub fn build_metric_dual(
    agg: &AggCommoditySet,
    q_bar: &[f64],
    anchor: usize,
) -> ModelSpec {
    let mut m = ModelSpec::new("metric-dual", ModelKind::Auxiliary, ObjSense::Maximize);
    let mut weight_arcs: BTreeMap<usize, usize> = BTreeMap::new();
    for group in &agg.groups {
        for a in &group.arcs {
            if a.capacitated {
                weight_arcs.entry(a.arc).or_insert(0);
            }
        }
    }
    for (&a, var) in weight_arcs.iter_mut() {
        let (lb, ub) = if a == anchor { (1.0, Some(1.0)) } else { (0.0, None) };
        *var = m.add_var(
            VarRole::DualWeight { arc: a },
            VarDomain::Continuous { lb, ub },
            -q_bar[a],
        );
    }
    for (gi, group) in agg.groups.iter().enumerate() {
        for &node in &group.nodes {
            if node == group.root {
                continue;
            }
            let psi = group
                .balances
                .iter()
                .find(|&&(n, _)| n == node)
                .map_or(0.0, |&(_, b)| b as f64);
            m.add_var(
                VarRole::DualPotential { group: gi, node },
                VarDomain::Continuous { lb: f64::NEG_INFINITY, ub: None },
                psi,
            );
        }
        for a in &group.arcs {
            // u_head - u_tail <= v_a with the root potential fixed at zero;
            // uncapacitated (direct) arcs act as weight-zero arcs.
            let mut coeffs = Vec::with_capacity(3);
            if a.head != group.root {
                coeffs.push((
                    m.var(VarRole::DualPotential { group: gi, node: a.head }).unwrap(),
                    1.0,
                ));
            }
            if a.tail != group.root {
                coeffs.push((
                    m.var(VarRole::DualPotential { group: gi, node: a.tail }).unwrap(),
                    -1.0,
                ));
            }
            if a.capacitated {
                coeffs.push((weight_arcs[&a.arc], -1.0));
            }
            m.add_row(coeffs, Sense::Le, 0.0, RowRole::Internal);
        }
    }
    m
}

/// A solved metric dual: arc weights, node potentials, objective.
#[derive(Debug, Clone)]
pub struct MetricDualSolution {
    pub objective: f64,
    /// (arc, weight) for weights above tolerance.
    pub weights: Vec<(usize, f64)>,
    /// ((group, node), potential).
    pub potentials: Vec<((usize, usize), f64)>,
}

fn extract_dual(m: &ModelSpec, point: &LpPoint, agg: &AggCommoditySet) -> MetricDualSolution {
    let mut weights = Vec::new();
    let mut potentials = Vec::new();
    for (v, var) in m.vars().iter().enumerate() {
        match var.role {
            VarRole::DualWeight { arc } => {
                if point.values[v] > 1e-9 {
                    weights.push((arc, point.values[v]));
                }
            }
            VarRole::DualPotential { group, node } => {
                if point.values[v].abs() > 1e-9 {
                    potentials.push(((group, node), point.values[v]));
                }
            }
            _ => {}
        }
    }
    let _ = agg;
    MetricDualSolution {
        objective: point.objective,
        weights,
        potentials,
    }
}

/// Derive the helper inequality and its ceiling-rounded integral form from
/// an optimal dual solution with objective zero.
fn cuts_from_dual(
    dual: &MetricDualSolution,
    agg: &AggCommoditySet,
    inst: &Instance,
    t_max: &[u32],
) -> (Cut, Cut) {
    let rhs: f64 = dual
        .potentials
        .iter()
        .map(|&((g, node), u)| {
            let psi = agg.groups[g]
                .balances
                .iter()
                .find(|&&(n, _)| n == node)
                .map_or(0.0, |&(_, b)| b as f64);
            psi * u
        })
        .sum();
    let mut helper_y = Vec::new();
    for &(a, w) in &dual.weights {
        let q = inst.arcs[a].capacity as f64;
        for t in 1..=t_max[a] {
            helper_y.push(((a, t), w * q * f64::from(t)));
        }
    }
    let helper = Cut {
        kind: CutKind::MetricHelper,
        x: Vec::new(),
        y: helper_y,
        rhs,
    };

    // Rounding divisor: the smallest capacity among arcs at weight one.
    let q_prime = dual
        .weights
        .iter()
        .filter(|&&(_, w)| (w - 1.0).abs() <= 1e-6)
        .map(|&(a, _)| inst.arcs[a].capacity)
        .min()
        .unwrap_or(1);
    let mut int_y = Vec::new();
    for &(a, w) in &dual.weights {
        let ratio = inst.arcs[a].capacity.div_ceil(q_prime) as f64;
        for t in 1..=t_max[a] {
            int_y.push(((a, t), w * ratio * f64::from(t)));
        }
    }
    let int_rhs: f64 = dual
        .potentials
        .iter()
        .map(|&((g, node), u)| {
            let psi = agg.groups[g]
                .balances
                .iter()
                .find(|&&(n, _)| n == node)
                .map_or(0, |&(_, b)| b);
            // Non-root balances are positive by construction.
            (psi as f64 / q_prime as f64).ceil() * u
        })
        .sum();
    let integral = Cut {
        kind: CutKind::MetricIntegral,
        x: Vec::new(),
        y: int_y,
        rhs: int_rhs,
    };
    (helper, integral)
}

#[derive(Debug, Clone, Default)]
pub struct MetricHarvest {
    pub helpers: Vec<Cut>,
    pub integrals: Vec<Cut>,
    /// Anchors whose dual went unbounded (capacity vector did not support
    /// the aggregate flow; indicates a violated precondition).
    pub skipped_unbounded: usize,
    /// Anchors whose constrained dual optimum stayed below zero.
    pub no_cut: usize,
}

/// Generate helper and integral metric inequalities from one LP point of a
/// BIN-style model: one dual solve per active arc, duplicates discarded.
pub fn generate_metric_cuts(
    model: &ModelSpec,
    inst: &Instance,
    agg: &AggCommoditySet,
    point: &LpPoint,
    t_max: &[u32],
    solver: &dyn Solver,
) -> Result<MetricHarvest> {
    let mut out = MetricHarvest::default();
    let mut seen: HashSet<CutFingerprint> = HashSet::new();
    let n_arcs = inst.arcs.len();
    let mut q_bar = vec![0.0; n_arcs];
    let mut active = Vec::new();
    for a in 0..n_arcs {
        let installed = model.installed_capacity(a, &point.values);
        q_bar[a] = inst.arcs[a].capacity as f64 * installed;
        let selected: f64 = (1..=t_max[a])
            .filter_map(|t| model.var_for_selector(a, t))
            .map(|v| point.values[v])
            .sum();
        if selected > 1e-9 && !agg.arc_groups[a].is_empty() {
            active.push(a);
        }
    }
    for &anchor in &active {
        let dual_model = build_metric_dual(agg, &q_bar, anchor);
        let sol = solver.solve_lp(&dual_model)?;
        match sol.status {
            SolveStatus::Unbounded => {
                out.skipped_unbounded += 1;
                continue;
            }
            SolveStatus::Optimal => {}
            other => return Err(McndError::NotOptimal(other)),
        }
        if sol.objective.abs() > 1e-6 {
            out.no_cut += 1;
            continue;
        }
        let dual = extract_dual(&dual_model, &sol, agg);
        let (helper, integral) = cuts_from_dual(&dual, agg, inst, t_max);
        if seen.insert(helper.dedup_key()) {
            out.helpers.push(helper);
            out.integrals.push(integral);
        }
    }
    Ok(out)
}

/// One pass of the Lagrangian metric-selection loop.
#[derive(Debug)]
pub struct LagrangianRound {
    pub helpers: Vec<Cut>,
    pub integrals: Vec<Cut>,
    /// Multipliers read off the integral rows after the re-solve.
    pub multipliers: Vec<f64>,
    /// The input model with the integral cuts moved into the objective.
    pub modified: ModelSpec,
    /// Optimum of the LP with the integral cuts as hard rows.
    pub point: LpPoint,
    pub skipped_unbounded: usize,
}

/// Collect metric inequalities at the given LP point, re-solve with the
/// integral forms as constraints, then relax them into the objective with
/// their dual multipliers. Returns the helper set, the modified model, and
/// the new point for further rounds.
pub fn lagrangian_round(
    model: &ModelSpec,
    inst: &Instance,
    agg: &AggCommoditySet,
    point: &LpPoint,
    t_max: &[u32],
    solver: &dyn Solver,
) -> Result<LagrangianRound> {
    let harvest = generate_metric_cuts(model, inst, agg, point, t_max, solver)?;
    let mut constrained = model.clone();
    let first_row = constrained.num_rows();
    for cut in &harvest.integrals {
        cut.apply(&mut constrained);
    }
    let new_point = solver.solve_lp(&constrained)?.expect_optimal()?;
    let duals = new_point
        .row_duals
        .as_ref()
        .expect("LP solve returns duals");
    let multipliers: Vec<f64> = (0..harvest.integrals.len())
        .map(|i| duals[first_row + i])
        .collect();

    let mut modified = model.clone();
    for (i, cut) in harvest.integrals.iter().enumerate() {
        let lambda = multipliers[i];
        if lambda.abs() <= 1e-12 {
            continue;
        }
        // min c^T x + lambda (rhs - a^T x): fold the row into the objective.
        for &((arc, t), coeff) in &cut.y {
            let v = modified
                .var_for_selector(arc, t)
                .expect("selector exists in source model");
            modified.set_obj(v, modified.obj(v) - lambda * coeff);
        }
        modified.obj_offset += lambda * cut.rhs;
    }
    Ok(LagrangianRound {
        helpers: harvest.helpers,
        integrals: harvest.integrals,
        multipliers,
        modified,
        point: new_point,
        skipped_unbounded: harvest.skipped_unbounded,
    })
}

/// Run `rounds` passes of the Lagrangian loop starting from the model's LP
/// optimum, returning the union of helper inequalities.
pub fn run_metric_rounds(
    model: &ModelSpec,
    inst: &Instance,
    agg: &AggCommoditySet,
    t_max: &[u32],
    rounds: u32,
    solver: &dyn Solver,
) -> Result<Vec<Cut>> {
    let mut helpers: Vec<Cut> = Vec::new();
    let mut seen: HashSet<CutFingerprint> = HashSet::new();
    let mut current = model.clone();
    let mut point = solver.solve_lp(&current)?.expect_optimal()?;
    for _ in 0..rounds {
        let round = lagrangian_round(&current, inst, agg, &point, t_max, solver)?;
        for h in round.helpers {
            if seen.insert(h.dedup_key()) {
                helpers.push(h);
            }
        }
        current = round.modified;
        point = round.point;
    }
    Ok(helpers)
}
