use std::time::Instant;
use mcnd::arcset::ArcSet;
use mcnd::gen::{generate_ecommerce, EcommerceParams};
use mcnd::instance::CapacityProfile;
use mcnd::model::build_bin_model_with_profile;
use mcnd::sacpack::{saturate, SaturateConfig};
use mcnd::solver::{HighsSolver, Solver};

fn main() {
    let params = EcommerceParams::group(1, 1).unwrap();
    let inst = generate_ecommerce(&params).unwrap();
    let profile = CapacityProfile::compute(&inst).unwrap();
    let mut model = build_bin_model_with_profile(&inst, &profile).unwrap();
    let arcs: Vec<ArcSet> = inst
        .consolidation_arcs()
        .iter()
        .map(|&a| ArcSet::from_profile(&inst, &profile, a))
        .collect();
    let solver = HighsSolver::default();
    let lp0 = solver.solve_lp(&model).unwrap().objective;
    eprintln!("lp0 {lp0:.2}");
    for round in 0..12 {
        let t0 = Instant::now();
        let cfg = SaturateConfig { max_rounds: 1, ..SaturateConfig::default() };
        let out = saturate(&mut model, &arcs, &cfg, &solver).unwrap();
        eprintln!(
            "round {round}: {:.1}s, +{} cuts, lp {:.2}, inconclusive {}",
            t0.elapsed().as_secs_f64(), out.cuts_added, out.final_lp, out.inconclusive_arcs
        );
        if out.cuts_added == 0 { break; }
    }
    let t0 = Instant::now();
    let cfg = SaturateConfig { max_rounds: 2, lift: true, rowgen_b: Some(3), ..SaturateConfig::default() };
    let out = saturate(&mut model, &arcs, &cfg, &solver).unwrap();
    eprintln!(
        "lift+rowgen 2 rounds: {:.1}s, +{} cuts ({} lift, {} rowgen), lp {:.2}",
        t0.elapsed().as_secs_f64(), out.cuts_added, out.lifted_cuts, out.rowgen_cuts, out.final_lp
    );
}
// (appended) rowgen probe entry: cargo run --example probe_timing -- rowgen
