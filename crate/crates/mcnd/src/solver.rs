//! Backend contract for LP/MIP solving plus the HiGHS implementation.
//!
//! Cut modules interact with solvers only through [`ModelSpec`] and
//! [`LpPoint`]; swapping the backend must not change test semantics.

use std::num::NonZeroU32;
use std::time::{Duration, Instant};

use crate::cuts::Cut;
use crate::error::{McndError, Result};
use crate::model::{ModelSpec, ObjSense, Sense, VarDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at a time/iteration/work limit.
    Limit,
}

/// A primal (and optionally dual) solution of an LP relaxation.
#[derive(Debug, Clone)]
pub struct LpPoint {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub row_duals: Option<Vec<f64>>,
}

impl LpPoint {
    pub fn expect_optimal(self) -> Result<LpPoint> {
        if self.status != SolveStatus::Optimal {
            return Err(McndError::NotOptimal(self.status));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MipLimits {
    pub time: Option<Duration>,
    /// Generic hint asking the backend to prioritise the dual bound; the
    /// effect is backend-defined.
    pub focus_best_bound: bool,
}

impl MipLimits {
    pub fn with_time(secs: f64) -> Self {
        MipLimits {
            time: Some(Duration::from_secs_f64(secs)),
            focus_best_bound: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: SolveStatus,
    pub incumbent: Option<f64>,
    pub incumbent_values: Option<Vec<f64>>,
    /// Best dual bound (lower bound for minimisation).
    pub best_bound: f64,
    pub gap: Option<f64>,
    pub wall: Duration,
    pub nodes: i64,
}

pub trait Solver {
    /// Solve the continuous relaxation of the model (integrality dropped,
    /// bounds kept) and return primal values, row duals, and the objective.
    fn solve_lp(&self, model: &ModelSpec) -> Result<LpPoint>;

    /// Solve the model with integrality enforced.
    fn solve_mip(&self, model: &ModelSpec, limits: &MipLimits) -> Result<MipResult>;

    /// Whether the backend can accept user cuts inside its own tree search.
    fn supports_root_cuts(&self) -> bool {
        false
    }

    /// Solve a MIP offering root cuts from `source`. Backends without cut
    /// callbacks fall back to a cut loop: solve the LP relaxation, ask the
    /// source for violated cuts, add them as rows, and re-solve, for at most
    /// `max_rounds` rounds before the final MIP solve. All cuts are valid
    /// inequalities, so the resulting bound claims are unchanged.
    fn solve_mip_with_root_cuts(
        &self,
        model: &mut ModelSpec,
        limits: &MipLimits,
        source: &mut dyn FnMut(&LpPoint) -> Vec<Cut>,
        max_rounds: usize,
    ) -> Result<MipResult> {
        let started = Instant::now();
        for _ in 0..max_rounds {
            let point = self.solve_lp(model)?;
            if point.status != SolveStatus::Optimal {
                break;
            }
            let cuts = source(&point);
            if cuts.is_empty() {
                break;
            }
            for cut in &cuts {
                cut.apply(model);
            }
        }
        let remaining = limits
            .time
            .map(|t| t.saturating_sub(started.elapsed()))
            .map(|t| t.max(Duration::from_secs(1)));
        let mut res = self.solve_mip(
            model,
            &MipLimits {
                time: remaining,
                focus_best_bound: limits.focus_best_bound,
            },
        )?;
        res.wall += started.elapsed() - res.wall.min(started.elapsed());
        Ok(res)
    }
}

/// HiGHS-backed solver. One in-flight solve per call; distinct calls may
/// run concurrently on distinct models.
#[derive(Debug, Clone)]
pub struct HighsSolver {
    pub threads: u32,
    pub log_to_console: bool,
    /// Relative MIP gap at which the solver may stop (backend default when
    /// `None`).
    pub mip_rel_gap: Option<f64>,
}

impl Default for HighsSolver {
    fn default() -> Self {
        HighsSolver {
            threads: 1,
            log_to_console: false,
            mip_rel_gap: None,
        }
    }
}

impl HighsSolver {
    fn build(&self, model: &ModelSpec, integral: bool) -> highs::Model {
        let mut pb = highs::RowProblem::default();
        let mut cols = Vec::with_capacity(model.num_vars());
        for var in model.vars() {
            let (lb, ub, int) = match var.domain {
                VarDomain::Binary => (0.0, 1.0, true),
                VarDomain::Integer { ub } => (0.0, ub.unwrap_or(f64::INFINITY), true),
                VarDomain::Continuous { lb, ub } => (lb, ub.unwrap_or(f64::INFINITY), false),
            };
            let col = pb.add_column_with_integrality(var.obj, lb..=ub, integral && int);
            cols.push(col);
        }
        for row in model.rows() {
            let factors: Vec<(highs::Col, f64)> =
                row.coeffs.iter().map(|&(v, c)| (cols[v], c)).collect();
            match row.sense {
                Sense::Le => pb.add_row(..=row.rhs, factors),
                Sense::Ge => pb.add_row(row.rhs.., factors),
                Sense::Eq => pb.add_row(row.rhs..=row.rhs, factors),
            };
        }
        let sense = match model.sense {
            ObjSense::Minimize => highs::Sense::Minimise,
            ObjSense::Maximize => highs::Sense::Maximise,
        };
        let mut m = pb.optimise(sense);
        m.set_option("output_flag", self.log_to_console);
        if let Some(threads) = NonZeroU32::new(self.threads) {
            m.set_threads(threads);
        }
        m
    }
}

fn map_status(status: highs::HighsModelStatus) -> Result<SolveStatus> {
    use highs::HighsModelStatus as H;
    Ok(match status {
        H::Optimal => SolveStatus::Optimal,
        H::Infeasible => SolveStatus::Infeasible,
        H::Unbounded | H::UnboundedOrInfeasible => SolveStatus::Unbounded,
        H::ReachedTimeLimit
        | H::ReachedIterationLimit
        | H::ReachedSolutionLimit
        | H::ObjectiveBound
        | H::ObjectiveTarget => SolveStatus::Limit,
        other => {
            return Err(McndError::Solver(format!(
                "backend returned status {other:?}"
            )))
        }
    })
}

impl Solver for HighsSolver {
    fn solve_lp(&self, model: &ModelSpec) -> Result<LpPoint> {
        if model.num_vars() == 0 {
            return Ok(LpPoint {
                status: SolveStatus::Optimal,
                objective: model.obj_offset,
                values: Vec::new(),
                row_duals: Some(vec![0.0; model.num_rows()]),
            });
        }
        let solved = self
            .build(model, false)
            .try_solve()
            .map_err(|e| McndError::Solver(format!("{e:?}")))?;
        let status = map_status(solved.status())?;
        if status != SolveStatus::Optimal {
            return Ok(LpPoint {
                status,
                objective: f64::NAN,
                values: Vec::new(),
                row_duals: None,
            });
        }
        let solution = solved.get_solution();
        Ok(LpPoint {
            status,
            objective: model.obj_offset + solved.objective_value(),
            values: solution.columns().to_vec(),
            row_duals: Some(solution.dual_rows().to_vec()),
        })
    }

    fn solve_mip(&self, model: &ModelSpec, limits: &MipLimits) -> Result<MipResult> {
        let started = Instant::now();
        let mut m = self.build(model, true);
        if let Some(t) = limits.time {
            m.set_option("time_limit", t.as_secs_f64());
        }
        if let Some(gap) = self.mip_rel_gap {
            m.set_option("mip_rel_gap", gap);
        }
        if limits.focus_best_bound {
            // HiGHS has no direct bound-focus switch; steering the heuristic
            // effort down is the closest generic analogue.
            m.set_option("mip_heuristic_effort", 0.01);
        }
        let solved = m
            .try_solve()
            .map_err(|e| McndError::Solver(format!("{e:?}")))?;
        let wall = started.elapsed();
        let status = map_status(solved.status())?;
        if status == SolveStatus::Infeasible || status == SolveStatus::Unbounded {
            return Ok(MipResult {
                status,
                incumbent: None,
                incumbent_values: None,
                best_bound: f64::NAN,
                gap: None,
                wall,
                nodes: 0,
            });
        }
        let nodes = solved.int_info_value(c"mip_node_count").unwrap_or(0);
        let has_incumbent = solved
            .int_info_value(c"primal_solution_status")
            .map(|s| s == 2) // kSolutionStatusFeasible
            .unwrap_or(status == SolveStatus::Optimal);
        let incumbent = has_incumbent.then(|| model.obj_offset + solved.objective_value());
        let incumbent_values = has_incumbent.then(|| solved.get_solution().columns().to_vec());
        let raw_bound = solved
            .double_info_value(c"mip_dual_bound")
            .unwrap_or(f64::NAN);
        let best_bound = model.obj_offset
            + if raw_bound.is_finite() {
                raw_bound
            } else if status == SolveStatus::Optimal {
                solved.objective_value()
            } else {
                f64::NEG_INFINITY
            };
        let gap = match incumbent {
            Some(inc) if inc.abs() > 1e-12 => Some((inc - best_bound).abs() / inc.abs()),
            _ => None,
        };
        Ok(MipResult {
            status,
            incumbent,
            incumbent_values,
            best_bound,
            gap,
            wall,
            nodes,
        })
    }
}
