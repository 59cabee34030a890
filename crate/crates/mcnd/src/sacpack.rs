//! Single-arc commodity packing (SAC-Pack) cuts: IP-based separation,
//! coefficient lifting, and the saturation loop that drives a model to its
//! strengthened LP fixpoint.

use std::collections::HashSet;
use std::time::Duration;

use crate::arcset::{alpha_coefficients, ArcSet};
use crate::cuts::{Cut, CutFingerprint, CutKind, PackCut, PackEntry};
use crate::error::Result;
use crate::gensacpack::{
    min_knapsack_bisect, rowgen_separate, SeparationOutcome,
};
use crate::model::{ModelKind, ModelSpec, ObjSense, RowRole, Sense, VarDomain, VarRole};
use crate::solver::{MipLimits, SolveStatus, Solver};

#[derive(Debug, Clone)]
pub struct SacPackConfig {
    /// Slack that keeps the prefix-selection constraints strict at exact
    /// capacity multiples. Rescaled per arc to half the smallest demand
    /// ratio whenever that ratio does not exceed it.
    pub eps: f64,
    /// Minimum objective value at which a cut is accepted as violated.
    pub violation_threshold: f64,
    /// Time cap per separation IP; a capped solve is inconclusive.
    pub time_cap: Duration,
    /// Restrict the IP to variables with non-zero point values.
    pub restrict_to_nonzero: bool,
}

impl Default for SacPackConfig {
    fn default() -> Self {
        SacPackConfig {
            eps: 1e-3,
            violation_threshold: 1e-4,
            time_cap: Duration::from_secs(5),
            restrict_to_nonzero: true,
        }
    }
}

/// Separate with one selector per path-level flow variable.
pub fn separate_sacpack(
    arc: &ArcSet,
    x_star: &[Vec<f64>],
    y_star: &[f64],
    cfg: &SacPackConfig,
    solver: &dyn Solver,
) -> Result<SeparationOutcome> {
    Ok(separate_inner(arc, x_star, y_star, cfg, false, solver)?.0)
}

/// Separate with paths of the same commodity aggregated into one selector,
/// reducing the IP by |P_a| - |K_a| variables.
pub fn separate_sacpack_aggregated(
    arc: &ArcSet,
    x_star: &[Vec<f64>],
    y_star: &[f64],
    cfg: &SacPackConfig,
    solver: &dyn Solver,
) -> Result<SeparationOutcome> {
    Ok(separate_inner(arc, x_star, y_star, cfg, true, solver)?.0)
}

pub(crate) fn separate_inner(
    arc: &ArcSet,
    x_star: &[Vec<f64>],
    y_star: &[f64],
    cfg: &SacPackConfig,
    aggregate: bool,
    solver: &dyn Solver,
) -> Result<(SeparationOutcome, bool)> {
    debug_assert_eq!(x_star.len(), arc.members.len());
    debug_assert_eq!(y_star.len(), arc.t_max as usize);

    // Candidate members and, in plain mode, candidate keys per member.
    let mut cands: Vec<(usize, Vec<usize>)> = Vec::new();
    for (mi, keys) in x_star.iter().enumerate() {
        let sel: Vec<usize> = (0..keys.len())
            .filter(|&j| !cfg.restrict_to_nonzero || keys[j] > 1e-9)
            .collect();
        if !sel.is_empty() {
            cands.push((mi, sel));
        }
    }
    if cands.is_empty() {
        return Ok((SeparationOutcome::NoViolation, false));
    }
    let active_t: Vec<u32> = (1..=arc.t_max)
        .filter(|&t| !cfg.restrict_to_nonzero || y_star[t as usize - 1] > 1e-9)
        .collect();

    // With no active selector, any non-empty selection of positive mass is
    // already a violated cut; take everything positive.
    if active_t.is_empty() {
        let selected: Vec<usize> = cands.iter().map(|&(mi, _)| mi).collect();
        let (cut, violation) = emit_cut(arc, x_star, y_star, &selected, aggregate, &cands)?;
        return Ok(if violation > cfg.violation_threshold {
            (SeparationOutcome::Violated { cut, violation }, false)
        } else {
            (SeparationOutcome::NoViolation, false)
        });
    }

    // Effective epsilon must stay below the smallest demand ratio.
    let q = arc.capacity as f64;
    let min_ratio = cands
        .iter()
        .map(|&(mi, _)| arc.members[mi].demand as f64 / q)
        .fold(f64::INFINITY, f64::min);
    let (eps, eps_rescaled) = if cfg.eps < min_ratio {
        (cfg.eps, false)
    } else {
        (min_ratio / 2.0, true)
    };

    // Members in non-decreasing demand order drive the prefix constraints.
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by_key(|&ci| {
        let m = &arc.members[cands[ci].0];
        (m.demand, m.commodity)
    });

    let n = cands.len();
    let mut m = ModelSpec::new("sacpack-sep", ModelKind::Auxiliary, ObjSense::Maximize);
    // Selector variables: one per member (aggregated) or per member path.
    let mut z_vars: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (ci, &(mi, ref keys)) in cands.iter().enumerate() {
        if aggregate {
            let obj: f64 = keys.iter().map(|&j| x_star[mi][j]).sum();
            let v = m.add_var(VarRole::SepSelect { id: ci }, VarDomain::Binary, obj);
            z_vars.push(vec![v]);
        } else {
            let vs = keys
                .iter()
                .map(|&j| {
                    m.add_var(
                        VarRole::SepSelect { id: ci * 64 + j },
                        VarDomain::Binary,
                        x_star[mi][j],
                    )
                })
                .collect();
            z_vars.push(vs);
        }
    }
    let mut alpha_vars = Vec::new();
    let mut s_vars = vec![vec![0usize; n]; active_t.len()];
    let mut w_vars = vec![vec![0usize; n]; active_t.len()];
    let mut u_vars = Vec::new();
    let mut v_vars = Vec::new();
    for (ti, &t) in active_t.iter().enumerate() {
        alpha_vars.push(m.add_var(
            VarRole::SepAlpha { t },
            VarDomain::Integer { ub: Some(n as f64) },
            -y_star[t as usize - 1],
        ));
        u_vars.push(m.add_var(VarRole::SepU { t }, VarDomain::Binary, 0.0));
        v_vars.push(m.add_var(VarRole::SepV { t }, VarDomain::Binary, 0.0));
        for ci in 0..n {
            s_vars[ti][ci] = m.add_var(VarRole::SepS { member: ci, t }, VarDomain::Binary, 0.0);
            w_vars[ti][ci] = m.add_var(VarRole::SepW { member: ci, t }, VarDomain::Binary, 0.0);
        }
    }

    for (ti, &t) in active_t.iter().enumerate() {
        // alpha_t >= sum_k s_kt - 1 + u_t
        let mut coeffs = vec![(alpha_vars[ti], 1.0), (u_vars[ti], -1.0)];
        for ci in 0..n {
            coeffs.push((s_vars[ti][ci], -1.0));
        }
        m.add_row(coeffs, Sense::Ge, -1.0, RowRole::Internal);

        for ci in 0..n {
            // s_kt <= sum of the commodity's selectors.
            let mut coeffs = vec![(s_vars[ti][ci], 1.0)];
            for &z in &z_vars[ci] {
                coeffs.push((z, -1.0));
            }
            m.add_row(coeffs, Sense::Le, 0.0, RowRole::Internal);
            // Selected but not packed: w_kt >= z - s_kt, per selector.
            for &z in &z_vars[ci] {
                m.add_row(
                    vec![(z, 1.0), (s_vars[ti][ci], -1.0), (w_vars[ti][ci], -1.0)],
                    Sense::Le,
                    0.0,
                    RowRole::Internal,
                );
            }
        }

        // The packed prefix exceeds t units unless u_t deactivates the row:
        // sum (d_k/q) s_kt + t u_t >= t + eps.
        let mut coeffs: Vec<(usize, f64)> = (0..n)
            .map(|ci| {
                (
                    s_vars[ti][ci],
                    arc.members[cands[ci].0].demand as f64 / q,
                )
            })
            .collect();
        coeffs.push((u_vars[ti], f64::from(t)));
        m.add_row(coeffs, Sense::Ge, f64::from(t) + eps, RowRole::Internal);

        // v_t flags any unpacked selection; u_t then stays off.
        let mut coeffs: Vec<(usize, f64)> =
            (0..n).map(|ci| (w_vars[ti][ci], 1.0)).collect();
        coeffs.push((v_vars[ti], -(n as f64)));
        m.add_row(coeffs, Sense::Le, 0.0, RowRole::Internal);
        m.add_row(
            vec![(u_vars[ti], 1.0), (v_vars[ti], 1.0)],
            Sense::Le,
            1.0,
            RowRole::Internal,
        );

        // Precedence: commodities enter the packed prefix in non-decreasing
        // demand order.
        for (pos, &ci1) in order.iter().enumerate() {
            let later = &order[pos + 1..];
            if later.is_empty() {
                continue;
            }
            let n_gt = later.len() as f64;
            let mut coeffs = vec![
                (s_vars[ti][ci1], n_gt),
                (w_vars[ti][ci1], -n_gt),
            ];
            for &ci2 in later {
                coeffs.push((s_vars[ti][ci2], -1.0));
            }
            m.add_row(coeffs, Sense::Ge, -n_gt, RowRole::Internal);
        }
    }

    let limits = MipLimits {
        time: Some(cfg.time_cap),
        focus_best_bound: false,
    };
    let res = solver.solve_mip(&m, &limits)?;
    if res.status == SolveStatus::Limit {
        return Ok((SeparationOutcome::Inconclusive, eps_rescaled));
    }
    if res.status != SolveStatus::Optimal {
        return Err(crate::error::McndError::Solver(format!(
            "separation IP ended with {:?}",
            res.status
        )));
    }
    let obj = res.incumbent.expect("optimal IP has an incumbent");
    if obj <= cfg.violation_threshold {
        return Ok((SeparationOutcome::NoViolation, eps_rescaled));
    }
    let values = res.incumbent_values.expect("optimal IP has a point");
    let selected: Vec<usize> = cands
        .iter()
        .enumerate()
        .filter(|&(ci, _)| z_vars[ci].iter().any(|&v| values[v] > 0.5))
        .map(|(_, &(mi, _))| mi)
        .collect();
    let (cut, violation) = emit_cut(arc, x_star, y_star, &selected, aggregate, &cands)?;
    debug_assert!(
        (violation - obj).abs() < 1e-6,
        "closed-form violation {violation} vs IP objective {obj}"
    );
    Ok((SeparationOutcome::Violated { cut, violation }, eps_rescaled))
}

/// Build the cut for the selected commodities with closed-form alpha over
/// the full selector range, and evaluate its violation at the point.
fn emit_cut(
    arc: &ArcSet,
    x_star: &[Vec<f64>],
    y_star: &[f64],
    selected_members: &[usize],
    aggregate: bool,
    cands: &[(usize, Vec<usize>)],
) -> Result<(PackCut, f64)> {
    let demands: Vec<u64> = selected_members
        .iter()
        .map(|&mi| arc.members[mi].demand)
        .collect();
    let alpha = alpha_coefficients(&demands, arc.capacity, arc.t_max)?;
    let entries: Vec<PackEntry> = selected_members
        .iter()
        .map(|&mi| {
            let member = &arc.members[mi];
            // Aggregated selection stands for the whole commodity, so the cut
            // carries every crossing path; plain selection keeps the chosen
            // paths only.
            let x_keys = if aggregate {
                member.x_keys.clone()
            } else {
                let keys = &cands
                    .iter()
                    .find(|&&(ci_mi, _)| ci_mi == mi)
                    .expect("selected member is a candidate")
                    .1;
                keys.iter().map(|&j| member.x_keys[j]).collect()
            };
            PackEntry {
                commodity: member.commodity,
                demand: member.demand,
                theta: 1,
                x_keys,
            }
        })
        .collect();
    let cut = PackCut {
        arc: arc.arc,
        kind_is_lifted: false,
        entries,
        alpha,
    };
    let violation = pack_cut_violation(&cut, arc, x_star, y_star);
    Ok((cut, violation))
}

/// Violation of a pack cut at the per-member point values.
pub fn pack_cut_violation(
    cut: &PackCut,
    arc: &ArcSet,
    x_star: &[Vec<f64>],
    y_star: &[f64],
) -> f64 {
    let mut lhs = 0.0;
    for e in &cut.entries {
        let mi = arc
            .members
            .iter()
            .position(|m| m.commodity == e.commodity)
            .expect("cut commodity crosses the arc");
        for key in &e.x_keys {
            if let Some(j) = arc.members[mi].x_keys.iter().position(|k| k == key) {
                lhs += e.theta as f64 * x_star[mi][j];
            }
        }
    }
    let rhs: f64 = cut
        .alpha
        .iter()
        .zip(y_star)
        .map(|(&a, &y)| a as f64 * y)
        .sum();
    lhs - rhs
}

/// Strengthen a SAC-Pack cut by raising the coefficient of commodities that
/// cannot ride along with `alpha - 1` others at the smallest installed
/// multiplicity, then restoring validity of the remaining alpha values
/// against the reweighted packing definition. Returns the input unchanged
/// when no commodity qualifies.
pub fn postprocess_lift(cut: &PackCut, arc: &ArcSet, y_star: &[f64]) -> PackCut {
    let t_star = (1..=arc.t_max)
        .find(|&t| y_star[t as usize - 1] > 1e-9)
        .unwrap_or(1);
    let a_star = cut.alpha[t_star as usize - 1];
    if a_star == 0 || cut.entries.len() < 2 {
        return cut.clone();
    }
    let budget = u64::from(t_star) * arc.capacity;
    let mut lifted = cut.clone();
    let mut any = false;
    for i in 0..cut.entries.len() {
        if cut.entries[i].theta != 1 {
            continue;
        }
        let mut others: Vec<u64> = cut
            .entries
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, e)| e.demand)
            .collect();
        others.sort_unstable();
        let companions: u64 = others.iter().take(a_star as usize - 1).sum();
        if cut.entries[i].demand + companions > budget {
            lifted.entries[i].theta = 2;
            any = true;
        }
    }
    if !any {
        return cut.clone();
    }
    // Re-derive every alpha against the new weights; the smallest installed
    // multiplicity keeps its value because lifted commodities are pairwise
    // incompatible there.
    let theta: Vec<u64> = lifted.entries.iter().map(|e| e.theta).collect();
    let demands: Vec<u64> = lifted.entries.iter().map(|e| e.demand).collect();
    for t in 1..=arc.t_max {
        let (opt, _) = min_knapsack_bisect(&theta, &demands, u64::from(t) * arc.capacity);
        lifted.alpha[t as usize - 1] = opt;
    }
    debug_assert_eq!(lifted.alpha[t_star as usize - 1], a_star);
    lifted.kind_is_lifted = true;
    lifted
}

/// Which cut families a saturation loop separates.
#[derive(Debug, Clone)]
pub struct SaturateConfig {
    pub sac: SacPackConfig,
    pub aggregate: bool,
    pub lift: bool,
    /// Row-generation bound B; `None` disables the family.
    pub rowgen_b: Option<u64>,
    pub rowgen_max_iters: usize,
    /// Stop once the relative LP improvement of a round drops below this.
    pub improvement_tol: f64,
    pub max_rounds: usize,
    /// Cap on cuts added per round (most violated first).
    pub per_round_cap: usize,
    /// Wall-clock point after which no further round starts.
    pub deadline: Option<std::time::Instant>,
}

impl Default for SaturateConfig {
    fn default() -> Self {
        SaturateConfig {
            sac: SacPackConfig::default(),
            aggregate: true,
            lift: false,
            rowgen_b: None,
            rowgen_max_iters: 100,
            improvement_tol: 1e-7,
            max_rounds: 50,
            per_round_cap: usize::MAX,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SaturateOutcome {
    pub cuts_added: usize,
    pub sac_cuts: usize,
    pub lifted_cuts: usize,
    pub rowgen_cuts: usize,
    pub rounds: usize,
    pub final_lp: f64,
    pub truncated: bool,
    pub inconclusive_arcs: usize,
    pub eps_rescaled_arcs: usize,
}

/// Solve-separate-add until no violated cut remains or the LP value stops
/// improving. Cuts are deduplicated across rounds.
pub fn saturate(
    model: &mut ModelSpec,
    arcs: &[ArcSet],
    cfg: &SaturateConfig,
    solver: &dyn Solver,
) -> Result<SaturateOutcome> {
    let mut out = SaturateOutcome::default();
    let mut seen: HashSet<CutFingerprint> = HashSet::new();
    let mut prev_lp: Option<f64> = None;
    loop {
        let point = solver.solve_lp(model)?.expect_optimal()?;
        out.final_lp = point.objective;
        if let Some(prev) = prev_lp {
            let denom = prev.abs().max(1.0);
            if (point.objective - prev) / denom < cfg.improvement_tol {
                break;
            }
        }
        if out.rounds >= cfg.max_rounds
            || cfg.deadline.is_some_and(|d| std::time::Instant::now() >= d)
        {
            out.truncated = true;
            break;
        }
        let mut round_cuts: Vec<(Cut, f64, &'static str)> = Vec::new();
        for arc in arcs {
            if cfg.deadline.is_some_and(|d| std::time::Instant::now() >= d) {
                out.truncated = true;
                break;
            }
            let (xs, ys) = arc.point_values(model, &point);
            let (outcome, eps_rescaled) =
                separate_inner(arc, &xs, &ys, &cfg.sac, cfg.aggregate, solver)?;
            if eps_rescaled {
                out.eps_rescaled_arcs += 1;
            }
            match outcome {
                SeparationOutcome::Violated { cut, violation } => {
                    if cfg.lift {
                        let lifted = postprocess_lift(&cut, arc, &ys);
                        if lifted != cut {
                            let v = pack_cut_violation(&lifted, arc, &xs, &ys);
                            if v > cfg.sac.violation_threshold {
                                round_cuts.push((
                                    lifted.to_cut(CutKind::GenSacPackPost),
                                    v,
                                    "lift",
                                ));
                            }
                        }
                    }
                    round_cuts.push((cut.to_cut(CutKind::SacPack), violation, "sac"));
                }
                SeparationOutcome::Inconclusive => out.inconclusive_arcs += 1,
                SeparationOutcome::NoViolation => {}
            }
            if let Some(b) = cfg.rowgen_b {
                let x_agg: Vec<f64> = xs.iter().map(|ks| ks.iter().sum()).collect();
                match rowgen_separate(
                    arc,
                    &x_agg,
                    &ys,
                    b,
                    cfg.rowgen_max_iters,
                    cfg.sac.violation_threshold,
                    solver,
                )? {
                    SeparationOutcome::Violated { cut, violation } => {
                        round_cuts.push((
                            cut.to_cut(CutKind::GenSacPackRowGen),
                            violation,
                            "rowgen",
                        ));
                    }
                    SeparationOutcome::Inconclusive => out.inconclusive_arcs += 1,
                    SeparationOutcome::NoViolation => {}
                }
            }
        }
        round_cuts.retain(|(cut, _, _)| !seen.contains(&cut.dedup_key()));
        if round_cuts.is_empty() {
            break;
        }
        round_cuts.sort_by(|a, b| b.1.total_cmp(&a.1));
        round_cuts.truncate(cfg.per_round_cap);
        for (cut, _, tag) in &round_cuts {
            if seen.insert(cut.dedup_key()) {
                cut.apply(model);
                out.cuts_added += 1;
                match *tag {
                    "sac" => out.sac_cuts += 1,
                    "lift" => out.lifted_cuts += 1,
                    _ => out.rowgen_cuts += 1,
                }
            }
        }
        prev_lp = Some(point.objective);
        out.rounds += 1;
    }
    Ok(out)
}
