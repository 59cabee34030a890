//! Domain types: networks, commodities, path sets, and the per-arc
//! capacity profile shared by every formulation.

use crate::error::{McndError, Result};

/// Role of a node in a path-based fulfillment network. Arc-based instances
/// use [`NodeRole::Plain`] throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Vendor,
    FulfillmentCenter,
    Destination,
    Plain,
}

impl NodeRole {
    pub fn tag(self) -> &'static str {
        match self {
            NodeRole::Vendor => "vendor",
            NodeRole::FulfillmentCenter => "fc",
            NodeRole::Destination => "dest",
            NodeRole::Plain => "plain",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "vendor" => Some(NodeRole::Vendor),
            "fc" => Some(NodeRole::FulfillmentCenter),
            "dest" => Some(NodeRole::Destination),
            "plain" => Some(NodeRole::Plain),
            _ => None,
        }
    }
}

/// A directed arc. `capacity` is the size of one installable capacity unit
/// (path formulations may install several units; the arc-based fixed
/// formulation switches the whole capacity on or off).
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    /// Unit capacity q_a, a strictly positive integer.
    pub capacity: u64,
    /// Fixed cost f_a per installed capacity unit.
    pub fixed_cost: f64,
    /// Variable cost c_a per unit of demand routed over the arc.
    pub unit_cost: f64,
    /// Length in miles; used by the generator and retained for audit.
    pub length: f64,
    /// Direct vendor-to-destination arcs are costed through the freight
    /// tier table and excluded from the capacitated arc set of the models.
    pub is_direct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commodity {
    pub origin: usize,
    pub dest: usize,
    /// Demand volume d_k, a strictly positive integer.
    pub demand: u64,
}

/// One admissible routing for a commodity: an adjoined arc sequence from
/// the commodity origin to its destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub commodity: usize,
    pub arcs: Vec<usize>,
    /// Cost added to the per-unit path cost on top of the sum of arc unit
    /// costs. Holds folded direct-freight cost for direct paths.
    pub extra_unit_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Path selection with multiplicative capacity units per arc.
    PathBased,
    /// Arc flows with a single on/off capacity per arc (Canad style).
    ArcBased,
}

/// An immutable, validated problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub kind: Formulation,
    pub nodes: Vec<NodeRole>,
    pub arcs: Vec<Arc>,
    pub commodities: Vec<Commodity>,
    paths: Vec<Path>,
    paths_by_commodity: Vec<Vec<usize>>,
    path_unit_cost: Vec<f64>,
}

impl Instance {
    /// Build a path-based instance. Paths are re-ordered canonically by
    /// (commodity id, insertion order) so that downstream variable indexing
    /// and cut generation are deterministic.
    pub fn path_based(
        name: impl Into<String>,
        nodes: Vec<NodeRole>,
        arcs: Vec<Arc>,
        commodities: Vec<Commodity>,
        mut paths: Vec<Path>,
    ) -> Result<Self> {
        let name = name.into();
        validate_network(&nodes, &arcs, &commodities)?;

        paths.sort_by_key(|p| p.commodity);
        let mut paths_by_commodity = vec![Vec::new(); commodities.len()];
        for (pid, path) in paths.iter().enumerate() {
            if path.commodity >= commodities.len() {
                return Err(McndError::MalformedInstance(format!(
                    "path {pid} references unknown commodity {}",
                    path.commodity
                )));
            }
            check_path(&arcs, &commodities[path.commodity], path, pid)?;
            paths_by_commodity[path.commodity].push(pid);
        }
        for (k, plist) in paths_by_commodity.iter().enumerate() {
            for (i, &p) in plist.iter().enumerate() {
                for &q in &plist[i + 1..] {
                    if paths[p].arcs == paths[q].arcs {
                        return Err(McndError::MalformedInstance(format!(
                            "duplicate path {:?} for commodity {k}",
                            paths[p].arcs
                        )));
                    }
                }
            }
        }

        let path_unit_cost = paths
            .iter()
            .map(|p| p.arcs.iter().map(|&a| arcs[a].unit_cost).sum::<f64>() + p.extra_unit_cost)
            .collect();

        Ok(Instance {
            name,
            kind: Formulation::PathBased,
            nodes,
            arcs,
            commodities,
            paths,
            paths_by_commodity,
            path_unit_cost,
        })
    }

    /// Build an arc-based instance (no explicit path sets).
    pub fn arc_based(
        name: impl Into<String>,
        nodes: Vec<NodeRole>,
        arcs: Vec<Arc>,
        commodities: Vec<Commodity>,
    ) -> Result<Self> {
        validate_network(&nodes, &arcs, &commodities)?;
        Ok(Instance {
            name: name.into(),
            kind: Formulation::ArcBased,
            nodes,
            arcs,
            commodities,
            paths: Vec::new(),
            paths_by_commodity: Vec::new(),
            path_unit_cost: Vec::new(),
        })
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, p: usize) -> &Path {
        &self.paths[p]
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Per-unit variable cost c_p of a path.
    pub fn path_unit_cost(&self, p: usize) -> f64 {
        self.path_unit_cost[p]
    }

    pub fn paths_of(&self, commodity: usize) -> &[usize] {
        &self.paths_by_commodity[commodity]
    }

    /// Arcs that carry at least one path and are not direct shipping arcs;
    /// these are the arcs that receive capacity variables in the models.
    pub fn consolidation_arcs(&self) -> Vec<usize> {
        match self.kind {
            Formulation::ArcBased => (0..self.arcs.len()).collect(),
            Formulation::PathBased => {
                let mut used = vec![false; self.arcs.len()];
                for path in &self.paths {
                    for &a in &path.arcs {
                        used[a] = true;
                    }
                }
                (0..self.arcs.len())
                    .filter(|&a| used[a] && !self.arcs[a].is_direct)
                    .collect()
            }
        }
    }

    pub fn total_demand(&self) -> u64 {
        self.commodities.iter().map(|k| k.demand).sum()
    }
}

fn validate_network(nodes: &[NodeRole], arcs: &[Arc], commodities: &[Commodity]) -> Result<()> {
    for (i, arc) in arcs.iter().enumerate() {
        if arc.tail >= nodes.len() || arc.head >= nodes.len() {
            return Err(McndError::MalformedInstance(format!(
                "arc {i} endpoints ({}, {}) outside node range 0..{}",
                arc.tail,
                arc.head,
                nodes.len()
            )));
        }
        if arc.capacity == 0 {
            return Err(McndError::MalformedInstance(format!(
                "arc {i} has zero capacity"
            )));
        }
        if arc.fixed_cost < 0.0 || arc.unit_cost < 0.0 || arc.length < 0.0 {
            return Err(McndError::MalformedInstance(format!(
                "arc {i} has a negative cost or length"
            )));
        }
    }
    for (k, com) in commodities.iter().enumerate() {
        if com.origin >= nodes.len() || com.dest >= nodes.len() {
            return Err(McndError::MalformedInstance(format!(
                "commodity {k} endpoints outside node range"
            )));
        }
        if com.demand == 0 {
            return Err(McndError::MalformedInstance(format!(
                "commodity {k} has zero demand"
            )));
        }
        if com.origin == com.dest {
            return Err(McndError::MalformedInstance(format!(
                "commodity {k} has identical origin and destination"
            )));
        }
    }
    Ok(())
}

fn check_path(arcs: &[Arc], commodity: &Commodity, path: &Path, pid: usize) -> Result<()> {
    let fail = |reason: String| McndError::InfeasiblePath {
        commodity: path.commodity,
        path: pid,
        reason,
    };
    if path.arcs.is_empty() {
        return Err(fail("empty arc list".into()));
    }
    for &a in &path.arcs {
        if a >= arcs.len() {
            return Err(fail(format!("unknown arc {a}")));
        }
    }
    if arcs[path.arcs[0]].tail != commodity.origin {
        return Err(fail(format!(
            "starts at node {} instead of origin {}",
            arcs[path.arcs[0]].tail,
            commodity.origin
        )));
    }
    for w in path.arcs.windows(2) {
        if arcs[w[0]].head != arcs[w[1]].tail {
            return Err(fail(format!(
                "arcs {} and {} are not adjoined",
                w[0], w[1]
            )));
        }
    }
    let last = *path.arcs.last().unwrap();
    if arcs[last].head != commodity.dest {
        return Err(fail(format!(
            "ends at node {} instead of destination {}",
            arcs[last].head, commodity.dest
        )));
    }
    Ok(())
}

/// Per-arc capacity bookkeeping for path-based formulations: which
/// commodities can touch the arc, how many units each needs on its own,
/// and the largest multiplicity that could ever be required.
#[derive(Debug, Clone)]
pub struct CapacityProfile {
    /// T^max per arc; zero for arcs outside the consolidation set.
    pub t_max: Vec<u32>,
    /// Commodities k with delta_a^k = 1, ascending, per arc.
    pub members: Vec<Vec<usize>>,
    /// Paths crossing each arc, ascending.
    pub crossing_paths: Vec<Vec<usize>>,
}

impl CapacityProfile {
    pub fn compute(inst: &Instance) -> Result<Self> {
        assert_eq!(inst.kind, Formulation::PathBased);
        let n_arcs = inst.arcs.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_arcs];
        let mut crossing: Vec<Vec<usize>> = vec![Vec::new(); n_arcs];
        for (pid, path) in inst.paths().iter().enumerate() {
            for &a in &path.arcs {
                crossing[a].push(pid);
                if members[a].last() != Some(&path.commodity) {
                    if !members[a].contains(&path.commodity) {
                        members[a].push(path.commodity);
                    }
                }
            }
        }
        let mut t_max = vec![0u32; n_arcs];
        for a in 0..n_arcs {
            members[a].sort_unstable();
            if members[a].is_empty() {
                continue;
            }
            let total: u64 = members[a].iter().map(|&k| inst.commodities[k].demand).sum();
            let tm = total.div_ceil(inst.arcs[a].capacity);
            if tm == 0 {
                return Err(McndError::CapacityProfile {
                    arc: a,
                    reason: "arc is crossed by paths but needs zero capacity".into(),
                });
            }
            t_max[a] = u32::try_from(tm).map_err(|_| McndError::CapacityProfile {
                arc: a,
                reason: format!("T_max {tm} exceeds u32"),
            })?;
        }
        Ok(CapacityProfile {
            t_max,
            members,
            crossing_paths: crossing,
        })
    }

    /// Minimum capacity units t_ak^min needed to carry commodity k alone.
    pub fn t_min(&self, inst: &Instance, arc: usize, commodity: usize) -> u32 {
        let d = inst.commodities[commodity].demand;
        let q = inst.arcs[arc].capacity;
        u32::try_from(d.div_ceil(q)).expect("t_min fits u32")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn arc(tail: usize, head: usize, q: u64) -> Arc {
        Arc {
            tail,
            head,
            capacity: q,
            fixed_cost: 1.0,
            unit_cost: 0.0,
            length: 1.0,
            is_direct: false,
        }
    }

    fn path(commodity: usize, arcs: Vec<usize>) -> Path {
        Path {
            commodity,
            arcs,
            extra_unit_cost: 0.0,
        }
    }

    #[test]
    fn accepts_shared_arc_paths() {
        // Two commodities share one arc, as in the linking-constraint example.
        let inst = Instance::path_based(
            "shared",
            vec![NodeRole::Plain, NodeRole::Plain],
            vec![arc(0, 1, 100)],
            vec![
                Commodity { origin: 0, dest: 1, demand: 5 },
                Commodity { origin: 0, dest: 1, demand: 105 },
            ],
            vec![path(0, vec![0]), path(1, vec![0])],
        )
        .unwrap();
        let profile = CapacityProfile::compute(&inst).unwrap();
        assert_eq!(profile.t_max[0], 2); // ceil(110/100)
        assert_eq!(profile.t_min(&inst, 0, 0), 1);
        assert_eq!(profile.t_min(&inst, 0, 1), 2);
        assert_eq!(profile.members[0], vec![0, 1]);
    }

    #[test]
    fn rejects_non_adjoined_path() {
        let err = Instance::path_based(
            "bad",
            vec![NodeRole::Plain; 4],
            vec![arc(0, 1, 10), arc(2, 3, 10)],
            vec![Commodity { origin: 0, dest: 3, demand: 1 }],
            vec![path(0, vec![0, 1])],
        )
        .unwrap_err();
        assert!(matches!(err, McndError::InfeasiblePath { .. }));
    }

    #[test]
    fn rejects_wrong_endpoints_and_duplicates() {
        let nodes = vec![NodeRole::Plain; 3];
        let arcs = vec![arc(0, 1, 10), arc(1, 2, 10)];
        let coms = vec![Commodity { origin: 0, dest: 2, demand: 3 }];
        // Wrong destination.
        assert!(Instance::path_based(
            "e1",
            nodes.clone(),
            arcs.clone(),
            coms.clone(),
            vec![path(0, vec![0])],
        )
        .is_err());
        // Duplicate path.
        assert!(Instance::path_based(
            "e2",
            nodes,
            arcs,
            coms,
            vec![path(0, vec![0, 1]), path(0, vec![0, 1])],
        )
        .is_err());
    }

    #[test]
    fn rejects_zero_demand_and_capacity() {
        let nodes = vec![NodeRole::Plain; 2];
        assert!(Instance::arc_based(
            "z1",
            nodes.clone(),
            vec![arc(0, 1, 0)],
            vec![Commodity { origin: 0, dest: 1, demand: 1 }],
        )
        .is_err());
        assert!(Instance::arc_based(
            "z2",
            nodes,
            vec![arc(0, 1, 5)],
            vec![Commodity { origin: 0, dest: 1, demand: 0 }],
        )
        .is_err());
    }

    #[test]
    fn consolidation_arcs_skip_direct_and_unused() {
        let mut direct = arc(0, 2, 100);
        direct.is_direct = true;
        let inst = Instance::path_based(
            "mix",
            vec![NodeRole::Vendor, NodeRole::FulfillmentCenter, NodeRole::Destination],
            vec![direct, arc(0, 1, 100), arc(1, 2, 100), arc(0, 1, 50)],
            vec![Commodity { origin: 0, dest: 2, demand: 10 }],
            vec![path(0, vec![0]), path(0, vec![1, 2])],
        )
        .unwrap();
        // Arc 3 is unused by any path, arc 0 is direct.
        assert_eq!(inst.consolidation_arcs(), vec![1, 2]);
    }
}
