use std::time::Duration;
use mcnd::gen::{generate_ecommerce, EcommerceParams};
use mcnd::icg::{run_icg, run_plain_bin, IcgConfig};
use mcnd::solver::HighsSolver;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let budget: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(600);
    let params = EcommerceParams::group(1, seed).unwrap();
    let inst = generate_ecommerce(&params).unwrap();
    eprintln!("seed {seed}: {} commodities, {} paths", inst.commodities.len(), inst.num_paths());
    let solver = HighsSolver::default();
    let t0 = std::time::Instant::now();
    let plain = run_plain_bin(&inst, Duration::from_secs(budget), &solver).unwrap();
    eprintln!(
        "plain BIN: bound {:.2}, incumbent {:?}, status {:?}, wall {:.0}s",
        plain.best_bound, plain.incumbent, plain.status, t0.elapsed().as_secs_f64()
    );
    let cfg = IcgConfig { budget: Duration::from_secs(budget), ..IcgConfig::default() };
    let rep = run_icg(&inst, &cfg, &solver).unwrap();
    eprintln!(
        "ICG: bound {:.2}, incumbent {:?}, helpers {}, user cuts {}, presolve {:.0}s, solve {:.0}s, lp {:.2} -> {:.2}",
        rep.final_bound, rep.incumbent, rep.helper_cuts, rep.user_cuts,
        rep.presolve_seconds, rep.solve_seconds, rep.lp_bin, rep.lp_after_phase1
    );
    let rel = (rep.final_bound - plain.best_bound) / plain.best_bound.abs().max(1.0);
    eprintln!("dominance: icg - plain = {:.4}% relative", 100.0 * rel);
}
