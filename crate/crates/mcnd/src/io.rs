//! Instance serialization: the crate's canonical text format and the
//! Canad benchmark layout.
//!
//! # Canonical format
//!
//! A self-describing text document, whitespace-separated, all ids
//! zero-based:
//!
//! ```text
//! mcnd-instance v1
//! name <token>
//! kind <path|arc>
//! NODES <n>
//!   <role>                     # one per line: vendor|fc|dest|plain
//! ARCS <m>
//!   <tail> <head> <q> <f> <c> <l> <direct:0|1>
//! COMMODITIES <k>
//!   <origin> <dest> <demand>
//! PATHS <p>                    # section present only for kind = path
//!   <commodity> <narcs> <arc ...> <extra-unit-cost>
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write-parse cycle reproduces every field bit-exactly.
//!
//! # Canad layout
//!
//! Line 1 is a free-form title. Line 2 holds `<nodes> <arcs> <commodities>`.
//! Each arc record holds `<tail> <head> <unit-cost> <capacity> <fixed-cost>`
//! (extra trailing tokens are ignored), 1-based node ids. Each commodity
//! record holds `<origin> <dest> <demand>`.

use crate::error::{McndError, Result};
use crate::instance::{Arc, Commodity, Formulation, Instance, NodeRole, Path};

pub fn write_canonical(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("mcnd-instance v1\n");
    out.push_str(&format!("name {}\n", inst.name.replace(' ', "_")));
    out.push_str(&format!(
        "kind {}\n",
        match inst.kind {
            Formulation::PathBased => "path",
            Formulation::ArcBased => "arc",
        }
    ));
    out.push_str(&format!("NODES {}\n", inst.nodes.len()));
    for role in &inst.nodes {
        out.push_str(role.tag());
        out.push('\n');
    }
    out.push_str(&format!("ARCS {}\n", inst.arcs.len()));
    for a in &inst.arcs {
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            a.tail,
            a.head,
            a.capacity,
            a.fixed_cost,
            a.unit_cost,
            a.length,
            u8::from(a.is_direct)
        ));
    }
    out.push_str(&format!("COMMODITIES {}\n", inst.commodities.len()));
    for k in &inst.commodities {
        out.push_str(&format!("{} {} {}\n", k.origin, k.dest, k.demand));
    }
    if inst.kind == Formulation::PathBased {
        out.push_str(&format!("PATHS {}\n", inst.num_paths()));
        for p in inst.paths() {
            out.push_str(&format!("{} {}", p.commodity, p.arcs.len()));
            for &a in &p.arcs {
                out.push_str(&format!(" {a}"));
            }
            out.push_str(&format!(" {}\n", p.extra_unit_cost));
        }
    }
    out
}

struct Tokens<'a> {
    words: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(source: &'a str) -> Self {
        let mut words = Vec::new();
        for (i, line) in source.lines().enumerate() {
            for w in line.split_whitespace() {
                words.push((i + 1, w));
            }
        }
        Tokens { words, pos: 0 }
    }

    fn line(&self) -> usize {
        self.words
            .get(self.pos.min(self.words.len().saturating_sub(1)))
            .map_or(0, |&(l, _)| l)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let w = self.words.get(self.pos).copied().ok_or_else(|| McndError::Parse {
            line: self.line(),
            reason: format!("unexpected end of input while reading {what}"),
        })?;
        self.pos += 1;
        Ok(w)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, w) = self.next(what)?;
        w.parse().map_err(|_| McndError::Parse {
            line,
            reason: format!("cannot parse {what} from {w:?}"),
        })
    }
}

pub fn parse_canonical(source: &str) -> Result<Instance> {
    let mut t = Tokens::new(source);
    let (line, magic) = t.next("header")?;
    let (_, version) = t.next("version")?;
    if magic != "mcnd-instance" || version != "v1" {
        return Err(McndError::Parse {
            line,
            reason: "expected header 'mcnd-instance v1'".into(),
        });
    }
    expect_keyword(&mut t, "name")?;
    let (_, name) = t.next("name value")?;
    let name = name.to_string();
    expect_keyword(&mut t, "kind")?;
    let (kline, kind_word) = t.next("kind value")?;
    let kind = match kind_word {
        "path" => Formulation::PathBased,
        "arc" => Formulation::ArcBased,
        other => {
            return Err(McndError::Parse {
                line: kline,
                reason: format!("unknown kind {other:?}"),
            })
        }
    };
    expect_keyword(&mut t, "NODES")?;
    let n_nodes: usize = t.parse("node count")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (rline, tag) = t.next("node role")?;
        nodes.push(NodeRole::from_tag(tag).ok_or_else(|| McndError::Parse {
            line: rline,
            reason: format!("unknown node role {tag:?}"),
        })?);
    }
    expect_keyword(&mut t, "ARCS")?;
    let n_arcs: usize = t.parse("arc count")?;
    let mut arcs = Vec::with_capacity(n_arcs);
    for _ in 0..n_arcs {
        arcs.push(Arc {
            tail: t.parse("arc tail")?,
            head: t.parse("arc head")?,
            capacity: parse_positive(&mut t, "arc capacity")?,
            fixed_cost: t.parse("arc fixed cost")?,
            unit_cost: t.parse("arc unit cost")?,
            length: t.parse("arc length")?,
            is_direct: t.parse::<u8>("arc direct flag")? != 0,
        });
    }
    expect_keyword(&mut t, "COMMODITIES")?;
    let n_coms: usize = t.parse("commodity count")?;
    let mut commodities = Vec::with_capacity(n_coms);
    for _ in 0..n_coms {
        commodities.push(Commodity {
            origin: t.parse("commodity origin")?,
            dest: t.parse("commodity destination")?,
            demand: parse_positive(&mut t, "commodity demand")?,
        });
    }
    match kind {
        Formulation::ArcBased => Instance::arc_based(name, nodes, arcs, commodities),
        Formulation::PathBased => {
            expect_keyword(&mut t, "PATHS")?;
            let n_paths: usize = t.parse("path count")?;
            let mut paths = Vec::with_capacity(n_paths);
            for _ in 0..n_paths {
                let commodity = t.parse("path commodity")?;
                let n: usize = t.parse("path arc count")?;
                let mut path_arcs = Vec::with_capacity(n);
                for _ in 0..n {
                    path_arcs.push(t.parse("path arc id")?);
                }
                let extra_unit_cost = t.parse("path extra cost")?;
                paths.push(Path { commodity, arcs: path_arcs, extra_unit_cost });
            }
            Instance::path_based(name, nodes, arcs, commodities, paths)
        }
    }
}

fn expect_keyword(t: &mut Tokens, keyword: &str) -> Result<()> {
    let (line, w) = t.next(keyword)?;
    if w != keyword {
        return Err(McndError::Parse {
            line,
            reason: format!("expected {keyword:?}, found {w:?}"),
        });
    }
    Ok(())
}

fn parse_positive(t: &mut Tokens, what: &str) -> Result<u64> {
    let line = t.line();
    let v: i64 = t.parse(what)?;
    if v <= 0 {
        return Err(McndError::Parse {
            line,
            reason: format!("{what} must be strictly positive, found {v}"),
        });
    }
    Ok(v as u64)
}

/// Parse a Canad-format instance into an arc-based [`Instance`].
/// Fractional costs are accepted; capacities and demands must be positive.
/// Arc records may carry extra trailing fields, which are skipped.
pub fn parse_canad(source: &str) -> Result<Instance> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, _title) = lines.next().ok_or(McndError::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    let (hline, header) = lines.next().ok_or(McndError::Parse {
        line: 2,
        reason: "missing size header".into(),
    })?;
    let sizes: Vec<usize> = header
        .split_whitespace()
        .map(|w| {
            w.parse().map_err(|_| McndError::Parse {
                line: hline,
                reason: format!("bad size token {w:?}"),
            })
        })
        .collect::<Result<_>>()?;
    if sizes.len() != 3 {
        return Err(McndError::Parse {
            line: hline,
            reason: format!("size header needs 3 fields, found {}", sizes.len()),
        });
    }
    let (n_nodes, n_arcs, n_coms) = (sizes[0], sizes[1], sizes[2]);

    let mut arcs = Vec::with_capacity(n_arcs);
    for _ in 0..n_arcs {
        let (line, text) = lines.next().ok_or(McndError::Parse {
            line: hline,
            reason: format!("arc section ended early: expected {n_arcs} records"),
        })?;
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() < 5 {
            return Err(McndError::Parse {
                line,
                reason: format!("arc record needs 5 fields, found {}", f.len()),
            });
        }
        let num = |idx: usize, what: &str| -> Result<f64> {
            f[idx].parse().map_err(|_| McndError::Parse {
                line,
                reason: format!("cannot parse {what} from {:?}", f[idx]),
            })
        };
        let tail = num(0, "tail")? as i64;
        let head = num(1, "head")? as i64;
        let unit_cost = num(2, "unit cost")?;
        let capacity = num(3, "capacity")?;
        let fixed_cost = num(4, "fixed cost")?;
        if tail < 1 || head < 1 || tail as usize > n_nodes || head as usize > n_nodes {
            return Err(McndError::Parse {
                line,
                reason: format!("arc endpoints ({tail}, {head}) out of 1..={n_nodes}"),
            });
        }
        if capacity <= 0.0 {
            return Err(McndError::Parse {
                line,
                reason: format!("non-positive capacity {capacity}"),
            });
        }
        arcs.push(Arc {
            tail: tail as usize - 1,
            head: head as usize - 1,
            capacity: capacity.round() as u64,
            fixed_cost,
            unit_cost,
            length: 0.0,
            is_direct: false,
        });
    }
    let mut commodities = Vec::with_capacity(n_coms);
    for _ in 0..n_coms {
        let (line, text) = lines.next().ok_or(McndError::Parse {
            line: hline,
            reason: format!("commodity section ended early: expected {n_coms} records"),
        })?;
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() < 3 {
            return Err(McndError::Parse {
                line,
                reason: format!("commodity record needs 3 fields, found {}", f.len()),
            });
        }
        let num = |idx: usize| -> Result<i64> {
            f[idx]
                .parse::<f64>()
                .map(|v| v.round() as i64)
                .map_err(|_| McndError::Parse {
                    line,
                    reason: format!("cannot parse {:?}", f[idx]),
                })
        };
        let (o, d, dem) = (num(0)?, num(1)?, num(2)?);
        if o < 1 || d < 1 || o as usize > n_nodes || d as usize > n_nodes {
            return Err(McndError::Parse {
                line,
                reason: format!("commodity endpoints ({o}, {d}) out of range"),
            });
        }
        if dem <= 0 {
            return Err(McndError::Parse {
                line,
                reason: format!("non-positive demand {dem}"),
            });
        }
        commodities.push(Commodity {
            origin: o as usize - 1,
            dest: d as usize - 1,
            demand: dem as u64,
        });
    }
    if commodities.is_empty() {
        return Err(McndError::Parse {
            line: hline,
            reason: "instance declares zero commodities".into(),
        });
    }
    let name = format!("canad-{n_nodes}-{n_arcs}-{n_coms}");
    Instance::arc_based(name, vec![NodeRole::Plain; n_nodes], arcs, commodities)
}

pub fn read_instance_file(path: &std::path::Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    if text.starts_with("mcnd-instance") {
        parse_canonical(&text)
    } else {
        parse_canad(&text)
    }
}
