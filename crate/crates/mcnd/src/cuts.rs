//! Valid-inequality representations shared by the separation modules.

use crate::model::ModelSpec;

/// Where a cut came from; recorded on every emitted inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    SacPack,
    GenSacPackPost,
    GenSacPackRowGen,
    MetricHelper,
    MetricIntegral,
    Linking,
}

/// Key of a flow-side variable in a cut, independent of any concrete model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum XKey {
    /// Path-selection variable x_p.
    Path(usize),
    /// Arc-flow variable x^k_ij of the arc-based formulation.
    ArcFlow { arc: usize, commodity: usize },
}

/// A linear valid inequality over flow variables (x side) and capacity
/// selectors (y side).
///
/// Packing cuts read `sum theta_p x_p <= sum alpha_t y_at` (zero constant),
/// metric inequalities read `sum w_at y_at >= rhs` (empty x side).
#[derive(Debug, Clone)]
pub struct Cut {
    pub kind: CutKind,
    pub x: Vec<(XKey, f64)>,
    pub y: Vec<((usize, u32), f64)>,
    pub rhs: f64,
}

impl Cut {
    /// Violation at a point described by lookup closures; positive means the
    /// point is cut off.
    pub fn violation(
        &self,
        x_value: impl Fn(XKey) -> f64,
        y_value: impl Fn(usize, u32) -> f64,
    ) -> f64 {
        let xs: f64 = self.x.iter().map(|&(k, c)| c * x_value(k)).sum();
        let ys: f64 = self.y.iter().map(|&((a, t), c)| c * y_value(a, t)).sum();
        match self.kind {
            CutKind::MetricHelper | CutKind::MetricIntegral => self.rhs - ys,
            _ => xs - ys - self.rhs,
        }
    }

    /// Append the cut to a model as a hard row. Panics if the model lacks a
    /// referenced variable, which indicates a model/cut mismatch.
    pub fn apply(&self, model: &mut ModelSpec) {
        model.add_cut_row(self);
    }

    /// Deduplication key: sorted integer-rounded terms plus right-hand side.
    pub fn dedup_key(&self) -> CutFingerprint {
        const SCALE: f64 = 1e6;
        let mut xs: Vec<(XKey, i64)> = self
            .x
            .iter()
            .map(|&(k, c)| (k, (c * SCALE).round() as i64))
            .filter(|&(_, c)| c != 0)
            .collect();
        xs.sort_unstable();
        let mut ys: Vec<((usize, u32), i64)> = self
            .y
            .iter()
            .map(|&(k, c)| (k, (c * SCALE).round() as i64))
            .filter(|&(_, c)| c != 0)
            .collect();
        ys.sort_unstable();
        CutFingerprint {
            x: xs,
            y: ys,
            rhs: (self.rhs * SCALE).round() as i64,
        }
    }
}

/// Rounded, order-normalized cut contents; used as a hash key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutFingerprint {
    x: Vec<(XKey, i64)>,
    y: Vec<((usize, u32), i64)>,
    rhs: i64,
}

/// A single-arc packing cut in structured form: per-commodity integer
/// coefficients theta and capacity coefficients alpha indexed by t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackCut {
    pub arc: usize,
    pub kind_is_lifted: bool,
    /// (commodity, demand, theta coefficient, x keys the commodity
    /// contributes on this arc), commodity-ascending.
    pub entries: Vec<PackEntry>,
    /// alpha_t for t = 1..=T_max, non-decreasing.
    pub alpha: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackEntry {
    pub commodity: usize,
    pub demand: u64,
    pub theta: u64,
    pub x_keys: Vec<XKey>,
}

impl PackCut {
    pub fn to_cut(&self, kind: CutKind) -> Cut {
        let mut x = Vec::new();
        for e in &self.entries {
            for &k in &e.x_keys {
                x.push((k, e.theta as f64));
            }
        }
        let y = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, &a)| ((self.arc, i as u32 + 1), a as f64))
            .collect();
        Cut {
            kind,
            x,
            y,
            rhs: 0.0,
        }
    }

    /// Largest theta coefficient; 1 for plain SAC-Pack cuts.
    pub fn theta_bound(&self) -> u64 {
        self.entries.iter().map(|e| e.theta).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_key_ignores_order_and_zero_terms() {
        let a = Cut {
            kind: CutKind::SacPack,
            x: vec![(XKey::Path(2), 1.0), (XKey::Path(0), 2.0)],
            y: vec![((0, 1), 3.0), ((0, 2), 0.0)],
            rhs: 0.0,
        };
        let b = Cut {
            kind: CutKind::SacPack,
            x: vec![(XKey::Path(0), 2.0), (XKey::Path(2), 1.0)],
            y: vec![((0, 1), 3.0)],
            rhs: 0.0,
        };
        assert_eq!(a.dedup_key(), b.dedup_key());
    }

    #[test]
    fn pack_cut_violation_matches_manual_arithmetic() {
        // x1+x2 <= y1 + 2 y2 at x = (0.5, 0.4), y = (0.58, 0).
        let cut = PackCut {
            arc: 0,
            kind_is_lifted: false,
            entries: vec![
                PackEntry { commodity: 0, demand: 60, theta: 1, x_keys: vec![XKey::Path(0)] },
                PackEntry { commodity: 1, demand: 70, theta: 1, x_keys: vec![XKey::Path(1)] },
            ],
            alpha: vec![1, 2],
        }
        .to_cut(CutKind::SacPack);
        let viol = cut.violation(
            |k| match k {
                XKey::Path(0) => 0.5,
                XKey::Path(1) => 0.4,
                _ => 0.0,
            },
            |_, t| if t == 1 { 0.58 } else { 0.0 },
        );
        assert!((viol - 0.32).abs() < 1e-12);
    }
}
