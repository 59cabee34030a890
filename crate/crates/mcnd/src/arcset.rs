//! Single-arc relaxations: the packing coefficient rule, exhaustive
//! enumeration of the arc-set feasible points, and cut validation against
//! the enumerated set.

use crate::cuts::{Cut, XKey};
use crate::error::{McndError, Result};
use crate::instance::{CapacityProfile, Formulation, Instance};
use crate::model::ModelSpec;
use crate::solver::LpPoint;

/// One commodity's footprint on an arc: demand plus the flow variables
/// through which it can load the arc.
#[derive(Debug, Clone)]
pub struct ArcMember {
    pub commodity: usize,
    pub demand: u64,
    pub x_keys: Vec<XKey>,
}

/// The data of a single-arc relaxation: selector range 1..=t_max and the
/// commodities that can cross the arc.
#[derive(Debug, Clone)]
pub struct ArcSet {
    pub arc: usize,
    pub capacity: u64,
    pub t_max: u32,
    /// Commodity-ascending.
    pub members: Vec<ArcMember>,
}

impl ArcSet {
    pub fn from_profile(inst: &Instance, profile: &CapacityProfile, arc: usize) -> Self {
        debug_assert_eq!(inst.kind, Formulation::PathBased);
        let members = profile.members[arc]
            .iter()
            .map(|&k| ArcMember {
                commodity: k,
                demand: inst.commodities[k].demand,
                x_keys: inst
                    .paths_of(k)
                    .iter()
                    .copied()
                    .filter(|&p| inst.path(p).arcs.contains(&arc))
                    .map(XKey::Path)
                    .collect(),
            })
            .collect();
        ArcSet {
            arc,
            capacity: inst.arcs[arc].capacity,
            t_max: profile.t_max[arc],
            members,
        }
    }

    /// Arc-based instances have one on/off capacity unit and one flow
    /// variable per commodity.
    pub fn from_arc_based(inst: &Instance, arc: usize) -> Self {
        debug_assert_eq!(inst.kind, Formulation::ArcBased);
        let members = inst
            .commodities
            .iter()
            .enumerate()
            .map(|(k, com)| ArcMember {
                commodity: k,
                demand: com.demand,
                x_keys: vec![XKey::ArcFlow { arc, commodity: k }],
            })
            .collect();
        ArcSet {
            arc,
            capacity: inst.arcs[arc].capacity,
            t_max: 1,
            members,
        }
    }

    pub fn num_paths(&self) -> usize {
        self.members.iter().map(|m| m.x_keys.len()).sum()
    }

    /// Read the x* values per member key and the y* values per t out of an
    /// LP point solved on `model`.
    pub fn point_values(&self, model: &ModelSpec, point: &LpPoint) -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs = self
            .members
            .iter()
            .map(|m| {
                m.x_keys
                    .iter()
                    .map(|&k| model.var_for_xkey(k).map_or(0.0, |v| point.values[v]))
                    .collect()
            })
            .collect();
        let ys = (1..=self.t_max)
            .map(|t| {
                model
                    .var_for_selector(self.arc, t)
                    .map_or(0.0, |v| point.values[v])
            })
            .collect();
        (xs, ys)
    }
}

/// Packing coefficients: `alpha[t-1]` is the largest number of distinct
/// selected commodities whose demands fit into `t` capacity units, computed
/// by the sort-and-accumulate rule. Errors on an empty selection.
pub fn alpha_coefficients(demands: &[u64], capacity: u64, t_max: u32) -> Result<Vec<u64>> {
    if demands.is_empty() {
        return Err(McndError::EmptySelection);
    }
    let mut sorted = demands.to_vec();
    sorted.sort_unstable();
    let mut alpha = Vec::with_capacity(t_max as usize);
    for t in 1..=u64::from(t_max) {
        let budget = t * capacity;
        let mut used = 0u64;
        let mut count = 0u64;
        for &d in &sorted {
            if used + d > budget {
                break;
            }
            used += d;
            count += 1;
        }
        alpha.push(count);
    }
    Ok(alpha)
}

/// All feasible points of the single-arc relaxation, bit-packed over the
/// flattened path list. A point selects at most one flow key per commodity,
/// respects the knapsack for its active selector, and either installs one
/// selector or nothing (in which case no flow is allowed).
#[derive(Debug, Clone)]
pub struct EnumeratedArcSet {
    pub keys: Vec<XKey>,
    pub key_commodity: Vec<usize>,
    pub key_demand: Vec<u64>,
    pub arc: usize,
    pub t_max: u32,
    /// (selected-keys mask, installed multiplicity; `None` = no capacity).
    pub points: Vec<(u32, Option<u32>)>,
}

pub const ENUMERATION_GUARD: usize = 14;

/// Exhaustively enumerate the arc-set points. Refuses arcs with more than
/// [`ENUMERATION_GUARD`] crossing paths.
pub fn enumerate_arc_set(arc: &ArcSet) -> Result<EnumeratedArcSet> {
    let mut keys = Vec::new();
    let mut key_commodity = Vec::new();
    let mut key_demand = Vec::new();
    for m in &arc.members {
        for &k in &m.x_keys {
            keys.push(k);
            key_commodity.push(m.commodity);
            key_demand.push(m.demand);
        }
    }
    let n = keys.len();
    if n > ENUMERATION_GUARD {
        return Err(McndError::EnumerationGuard {
            paths: n,
            guard: ENUMERATION_GUARD,
        });
    }
    let mut points = vec![(0u32, None)];
    for mask in 0u32..(1u32 << n) {
        // Reject masks selecting two keys of the same commodity; those do
        // not arise from any unsplittable assignment.
        let mut load = 0u64;
        let mut ok = true;
        let mut seen_commodity = [false; ENUMERATION_GUARD + 1];
        for b in 0..n {
            if mask & (1 << b) != 0 {
                let k = key_commodity[b];
                let slot = arc
                    .members
                    .iter()
                    .position(|m| m.commodity == k)
                    .expect("member exists");
                if seen_commodity[slot] {
                    ok = false;
                    break;
                }
                seen_commodity[slot] = true;
                load += key_demand[b];
            }
        }
        if !ok {
            continue;
        }
        for t in 1..=arc.t_max {
            if load <= u64::from(t) * arc.capacity {
                points.push((mask, Some(t)));
            }
        }
    }
    Ok(EnumeratedArcSet {
        keys,
        key_commodity,
        key_demand,
        arc: arc.arc,
        t_max: arc.t_max,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CutVerdict {
    Valid,
    /// The first violating point, as (mask, selector).
    Violated { mask: u32, t: Option<u32>, slack: f64 },
}

/// Check a single-arc cut at every enumerated point.
pub fn validate_cut(cut: &Cut, pts: &EnumeratedArcSet) -> CutVerdict {
    let coeff_of = |key: XKey| -> f64 {
        cut.x
            .iter()
            .filter(|&&(k, _)| k == key)
            .map(|&(_, c)| c)
            .sum()
    };
    let key_coeffs: Vec<f64> = pts.keys.iter().map(|&k| coeff_of(k)).collect();
    for &(mask, t) in &pts.points {
        let mut lhs = 0.0;
        for b in 0..pts.keys.len() {
            if mask & (1 << b) != 0 {
                lhs += key_coeffs[b];
            }
        }
        let rhs = cut.rhs
            + t.map_or(0.0, |t| {
                cut.y
                    .iter()
                    .filter(|&&((a, tt), _)| a == pts.arc && tt == t)
                    .map(|&(_, c)| c)
                    .sum()
            });
        if lhs > rhs + 1e-9 {
            return CutVerdict::Violated {
                mask,
                t,
                slack: lhs - rhs,
            };
        }
    }
    CutVerdict::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::CutKind;

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

    #[test]
    fn alpha_matches_worked_cases() {
        // Four commodities, three small and one large.
        assert_eq!(alpha_coefficients(&[30, 30, 30, 60], 100, 2).unwrap(), vec![3, 4]);
        // Two commodities that only fit together in two units.
        assert_eq!(alpha_coefficients(&[60, 70], 100, 2).unwrap(), vec![1, 2]);
        // A single commodity that fits one unit.
        assert_eq!(alpha_coefficients(&[40], 100, 3).unwrap(), vec![1, 1, 1]);
        assert!(matches!(
            alpha_coefficients(&[], 100, 2),
            Err(McndError::EmptySelection)
        ));
    }

    /// Brute force: the best subset of distinct commodities fitting t*q.
    fn alpha_brute(demands: &[u64], capacity: u64, t: u64) -> u64 {
        let n = demands.len();
        let mut best = 0u64;
        for mask in 0u32..(1 << n) {
            let mut load = 0u64;
            for b in 0..n {
                if mask & (1 << b) != 0 {
                    load += demands[b];
                }
            }
            if load <= t * capacity {
                best = best.max(mask.count_ones() as u64);
            }
        }
        best
    }

    #[test]
    fn alpha_greedy_equals_brute_force() {
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            rng
        };
        for _ in 0..300 {
            let n = 1 + (next() % 8) as usize;
            let demands: Vec<u64> = (0..n).map(|_| 1 + next() % 120).collect();
            let q = 20 + next() % 150;
            let total: u64 = demands.iter().sum();
            let t_max = total.div_ceil(q) as u32;
            let alpha = alpha_coefficients(&demands, q, t_max).unwrap();
            for t in 1..=t_max {
                assert_eq!(
                    alpha[t as usize - 1],
                    alpha_brute(&demands, q, u64::from(t)),
                    "demands {demands:?} q {q} t {t}"
                );
            }
            // Monotone, and everything fits at T_max.
            assert!(alpha.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*alpha.last().unwrap(), n as u64);
        }
    }

    #[test]
    fn enumeration_fixed_points() {
        // No crossing paths: only the origin and the pure-selector points.
        let empty = ArcSet { arc: 0, capacity: 10, t_max: 3, members: vec![] };
        let pts = enumerate_arc_set(&empty).unwrap();
        assert_eq!(pts.points.len(), 4);
        assert!(pts.points.contains(&(0, None)));
        for t in 1..=3 {
            assert!(pts.points.contains(&(0, Some(t))));
        }

        // Demands 60 and 70 with q = 100: both paths need two units.
        let pts = enumerate_arc_set(&arcset(&[60, 70], 100, 2)).unwrap();
        assert!(!pts.points.contains(&(0b11, Some(1))));
        assert!(pts.points.contains(&(0b11, Some(2))));
    }

    /// Independent recursive generator used to cross-check the point count.
    fn recursive_count(
        demands: &[u64],
        commodities: &[usize],
        idx: usize,
        load: u64,
        budget: u64,
        taken: &mut Vec<usize>,
    ) -> u64 {
        if idx == demands.len() {
            return 1;
        }
        let mut total = recursive_count(demands, commodities, idx + 1, load, budget, taken);
        let c = commodities[idx];
        if !taken.contains(&c) && load + demands[idx] <= budget {
            taken.push(c);
            total += recursive_count(demands, commodities, idx + 1, load + demands[idx], budget, taken);
            taken.pop();
        }
        total
    }

    #[test]
    fn enumeration_count_cross_check() {
        // Two commodities, the second with two alternative paths.
        let arc = ArcSet {
            arc: 0,
            capacity: 50,
            t_max: 2,
            members: vec![
                ArcMember { commodity: 0, demand: 30, x_keys: vec![XKey::Path(0)] },
                ArcMember { commodity: 1, demand: 45, x_keys: vec![XKey::Path(1), XKey::Path(2)] },
            ],
        };
        let pts = enumerate_arc_set(&arc).unwrap();
        let mut expected = 1; // (0, None)
        for t in 1..=2u64 {
            expected += recursive_count(
                &pts.key_demand,
                &pts.key_commodity,
                0,
                0,
                t * 50,
                &mut Vec::new(),
            );
        }
        assert_eq!(pts.points.len() as u64, expected);
    }

    #[test]
    fn validate_cut_reports_witness() {
        let arc = arcset(&[60, 70], 100, 2);
        let pts = enumerate_arc_set(&arc).unwrap();
        // x_1 + x_2 <= y_1 + 2 y_2 is valid.
        let good = Cut {
            kind: CutKind::SacPack,
            x: vec![(XKey::Path(0), 1.0), (XKey::Path(1), 1.0)],
            y: vec![((0, 1), 1.0), ((0, 2), 2.0)],
            rhs: 0.0,
        };
        assert_eq!(validate_cut(&good, &pts), CutVerdict::Valid);
        // x_1 <= 0 is violated by the point selecting path 0 with one unit.
        let bad = Cut {
            kind: CutKind::SacPack,
            x: vec![(XKey::Path(0), 1.0)],
            y: vec![],
            rhs: 0.0,
        };
        assert!(matches!(validate_cut(&bad, &pts), CutVerdict::Violated { .. }));
    }

    #[test]
    fn enumeration_guard_refuses_large_arcs() {
        let arc = arcset(&[1; 15], 100, 1);
        assert!(matches!(
            enumerate_arc_set(&arc),
            Err(McndError::EnumerationGuard { .. })
        ));
    }
}
