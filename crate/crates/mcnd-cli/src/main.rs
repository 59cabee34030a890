use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mcnd::arcset::{enumerate_arc_set, validate_cut, ArcMember, ArcSet, CutVerdict};
use mcnd::bench::{canad_dir, canad_reference, ladder_csv, load_canad_instance, run_ladder, ConfigId};
use mcnd::cuts::{Cut, CutKind, XKey};
use mcnd::gen::{generate_ecommerce, EcommerceParams};
use mcnd::icg::{run_icg, IcgConfig};
use mcnd::instance::{CapacityProfile, Formulation, Instance};
use mcnd::metric::{aggregate, run_metric_rounds, AggMode};
use mcnd::model::{build_arc_fixed_model, build_bin_model_with_profile};
use mcnd::sacpack::{saturate, SacPackConfig, SaturateConfig};
use mcnd::solver::{HighsSolver, Solver};

#[derive(Parser)]
#[command(name = "mcnd", about = "Unsplittable MCND dual-bound toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic e-commerce fulfillment instance.
    GenInstance {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        group: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert between instance formats.
    Convert {
        #[arg(long, default_value = "canad")]
        from: String,
        #[arg(long, default_value = "canonical")]
        to: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one cut-family saturation on an instance and report the LP trail.
    Separate {
        #[arg(long)]
        instance: PathBuf,
        /// Cut family: sacpack | gensacpack.
        #[arg(long, default_value = "sacpack")]
        family: String,
        #[arg(long, default_value_t = 5.0)]
        arc_cap_seconds: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        b: u64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
    },
    /// Generate metric inequalities through the Lagrangian loop.
    Metric {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "origin")]
        mode: String,
        #[arg(long, default_value_t = 2)]
        rounds: u32,
    },
    /// Run the two-phase integrated cut-generation pipeline.
    Icg {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 600)]
        budget_seconds: u64,
        #[arg(long, default_value_t = 3)]
        b: u64,
        #[arg(long, default_value_t = 2)]
        rounds: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the configuration ladder over a benchmark suite or one file.
    Bench {
        /// "canad" (uses --dir or the default data directory) or a file path.
        #[arg(long, default_value = "canad")]
        suite: String,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value = "a,b,d")]
        configs: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a cut against the exhaustively enumerated arc set.
    Oracle {
        /// Arc description: line 1 "q t_max", then one "commodity demand"
        /// line per member.
        #[arg(long)]
        arc_file: PathBuf,
        /// Cut description: line 1 theta coefficients, line 2 alpha values.
        #[arg(long)]
        cut_file: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let solver = HighsSolver::default();
    match cli.command {
        Command::GenInstance { group, seed, out } => {
            let params = EcommerceParams::group(group, seed)?;
            let inst = generate_ecommerce(&params)?;
            std::fs::write(&out, mcnd::io::write_canonical(&inst))?;
            println!(
                "wrote {} ({} nodes, {} arcs, {} commodities, {} paths)",
                out.display(),
                inst.nodes.len(),
                inst.arcs.len(),
                inst.commodities.len(),
                inst.num_paths()
            );
        }
        Command::Convert { from, to, input, out } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let inst = match from.as_str() {
                "canad" => mcnd::io::parse_canad(&text)?,
                "canonical" => mcnd::io::parse_canonical(&text)?,
                other => bail!("unknown input format {other}"),
            };
            if to != "canonical" {
                bail!("only canonical output is supported");
            }
            std::fs::write(&out, mcnd::io::write_canonical(&inst))?;
            println!("wrote {}", out.display());
        }
        Command::Separate { instance, family, arc_cap_seconds, eps, b, max_iters } => {
            let inst = mcnd::io::read_instance_file(&instance)?;
            let (mut model, arcs) = build_for(&inst)?;
            let before = solver.solve_lp(&model)?.expect_optimal()?.objective;
            let cfg = SaturateConfig {
                sac: SacPackConfig {
                    eps,
                    time_cap: Duration::from_secs_f64(arc_cap_seconds),
                    ..SacPackConfig::default()
                },
                aggregate: true,
                lift: family == "gensacpack",
                rowgen_b: (family == "gensacpack").then_some(b),
                rowgen_max_iters: max_iters,
                ..SaturateConfig::default()
            };
            let out = saturate(&mut model, &arcs, &cfg, &solver)?;
            println!("LP before: {before:.4}");
            println!(
                "LP after:  {:.4}  (+{:.4})",
                out.final_lp,
                out.final_lp - before
            );
            println!(
                "cuts: {} (sac {}, lifted {}, rowgen {}), rounds {}, truncated {}, inconclusive arcs {}, eps rescales {}",
                out.cuts_added,
                out.sac_cuts,
                out.lifted_cuts,
                out.rowgen_cuts,
                out.rounds,
                out.truncated,
                out.inconclusive_arcs,
                out.eps_rescaled_arcs
            );
        }
        Command::Metric { instance, mode, rounds } => {
            let inst = mcnd::io::read_instance_file(&instance)?;
            if inst.kind != Formulation::PathBased {
                bail!("metric generation needs a path-based instance");
            }
            let mode = match mode.as_str() {
                "origin" => AggMode::Origin,
                "destination" | "dest" => AggMode::Destination,
                other => bail!("unknown aggregation mode {other}"),
            };
            let profile = CapacityProfile::compute(&inst)?;
            let model = build_bin_model_with_profile(&inst, &profile)?;
            let agg = aggregate(&inst, mode);
            let helpers = run_metric_rounds(&model, &inst, &agg, &profile.t_max, rounds, &solver)?;
            println!("collected {} helper metric inequalities over {rounds} round(s)", helpers.len());
        }
        Command::Icg { instance, budget_seconds, b, rounds, report } => {
            let inst = mcnd::io::read_instance_file(&instance)?;
            let cfg = IcgConfig {
                budget: Duration::from_secs(budget_seconds),
                b_bound: b,
                lagrangian_rounds: rounds,
                ..IcgConfig::default()
            };
            let rep = run_icg(&inst, &cfg, &solver)?;
            println!(
                "{}: bound {:.2}, incumbent {}, gap {}, helpers {}, user cuts {}, presolve {:.1}s, solve {:.1}s",
                rep.instance,
                rep.final_bound,
                rep.incumbent.map_or("-".into(), |v| format!("{v:.2}")),
                rep.ip_gap.map_or("-".into(), |v| format!("{:.2}%", 100.0 * v)),
                rep.helper_cuts,
                rep.user_cuts,
                rep.presolve_seconds,
                rep.solve_seconds
            );
            if let Some(path) = report {
                std::fs::write(&path, serde_json::to_string_pretty(&rep)?)?;
                println!("report written to {}", path.display());
            }
        }
        Command::Bench { suite, dir, configs, out } => {
            let configs: Vec<ConfigId> = configs
                .split(',')
                .map(|s| ConfigId::parse(s.trim()).with_context(|| format!("unknown config {s}")))
                .collect::<Result<_>>()?;
            let mut csv = String::new();
            if suite == "canad" {
                let dir = dir
                    .or_else(canad_dir)
                    .context("no Canad directory; pass --dir or set MCND_CANAD_DIR")?;
                for reference in canad_reference() {
                    let inst = match load_canad_instance(&dir, &reference.instance) {
                        Ok(i) => i,
                        Err(e) => {
                            eprintln!("skipping {}: {e}", reference.instance);
                            continue;
                        }
                    };
                    let entries = run_ladder(&inst, &configs, Some(reference.obj), &solver)?;
                    print_ladder(&reference.instance, &entries);
                    csv.push_str(&ladder_csv(&reference.instance, &entries));
                }
            } else {
                let path = PathBuf::from(&suite);
                let inst = mcnd::io::read_instance_file(&path)?;
                let entries = run_ladder(&inst, &configs, None, &solver)?;
                print_ladder(&inst.name, &entries);
                csv.push_str(&ladder_csv(&inst.name, &entries));
            }
            if let Some(path) = out {
                std::fs::write(&path, csv)?;
                println!("results written to {}", path.display());
            }
        }
        Command::Oracle { arc_file, cut_file } => {
            let arc = read_arc_file(&arc_file)?;
            let (theta, alpha) = read_cut_file(&cut_file, arc.members.len(), arc.t_max)?;
            let cut = Cut {
                kind: CutKind::GenSacPackRowGen,
                x: arc
                    .members
                    .iter()
                    .zip(&theta)
                    .flat_map(|(m, &th)| m.x_keys.iter().map(move |&k| (k, th as f64)))
                    .collect(),
                y: alpha
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| ((arc.arc, i as u32 + 1), a as f64))
                    .collect(),
                rhs: 0.0,
            };
            let pts = enumerate_arc_set(&arc)?;
            match validate_cut(&cut, &pts) {
                CutVerdict::Valid => println!("valid over {} enumerated points", pts.points.len()),
                CutVerdict::Violated { mask, t, slack } => {
                    println!("INVALID: mask {mask:#b}, selector {t:?}, excess {slack:.6}");
                    std::process::exit(1);
                }
            }
        }
    }
    Ok(())
}

fn build_for(inst: &Instance) -> Result<(mcnd::ModelSpec, Vec<ArcSet>)> {
    Ok(match inst.kind {
        Formulation::PathBased => {
            let profile = CapacityProfile::compute(inst)?;
            let arcs = inst
                .consolidation_arcs()
                .iter()
                .map(|&a| ArcSet::from_profile(inst, &profile, a))
                .collect();
            (build_bin_model_with_profile(inst, &profile)?, arcs)
        }
        Formulation::ArcBased => {
            let arcs = (0..inst.arcs.len())
                .map(|a| ArcSet::from_arc_based(inst, a))
                .collect();
            (build_arc_fixed_model(inst)?, arcs)
        }
    })
}

fn print_ladder(instance: &str, entries: &[mcnd::bench::LadderEntry]) {
    println!("{instance}");
    for e in entries {
        match e.lpr {
            Some(lpr) => println!(
                "  ({:?})  LPR {:>14.2}  cuts {:>6}  {:>7.1}s  gap {}  impr {}",
                e.config,
                lpr,
                e.cuts_added,
                e.cut_seconds,
                e.ip_gap.map_or("    -".into(), |g| format!("{:5.2}%", 100.0 * g)),
                e.improvement.map_or("    -".into(), |i| format!("{:5.1}%", 100.0 * i)),
            ),
            None => println!("  ({:?})  {}", e.config, e.description),
        }
    }
}

fn read_arc_file(path: &PathBuf) -> Result<ArcSet> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty arc file")?;
    let h: Vec<u64> = header
        .split_whitespace()
        .map(|w| w.parse().context("bad arc header"))
        .collect::<Result<_>>()?;
    let (q, t_max) = (h[0], h[1] as u32);
    let mut members = Vec::new();
    for line in lines {
        let f: Vec<u64> = line
            .split_whitespace()
            .map(|w| w.parse().context("bad member line"))
            .collect::<Result<_>>()?;
        members.push(ArcMember {
            commodity: f[0] as usize,
            demand: f[1],
            x_keys: vec![XKey::Path(members.len())],
        });
    }
    Ok(ArcSet { arc: 0, capacity: q, t_max, members })
}

fn read_cut_file(path: &PathBuf, n: usize, t_max: u32) -> Result<(Vec<u64>, Vec<u64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let theta: Vec<u64> = lines
        .next()
        .context("missing theta line")?
        .split_whitespace()
        .map(|w| w.parse().context("bad theta"))
        .collect::<Result<_>>()?;
    let alpha: Vec<u64> = lines
        .next()
        .context("missing alpha line")?
        .split_whitespace()
        .map(|w| w.parse().context("bad alpha"))
        .collect::<Result<_>>()?;
    if theta.len() != n || alpha.len() != t_max as usize {
        bail!(
            "cut shape mismatch: {} thetas for {} members, {} alphas for t_max {}",
            theta.len(),
            n,
            alpha.len(),
            t_max
        );
    }
    Ok((theta, alpha))
}
