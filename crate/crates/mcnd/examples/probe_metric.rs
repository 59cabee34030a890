// scratch: examine metric harvest counters on a Group-1 instance
use mcnd::gen::{generate_ecommerce, EcommerceParams};
use mcnd::instance::CapacityProfile;
use mcnd::metric::{aggregate, generate_metric_cuts, AggMode};
use mcnd::model::build_bin_model_with_profile;
use mcnd::solver::{HighsSolver, Solver};

fn main() {
    let params = EcommerceParams::group(1, 1).unwrap();
    let inst = generate_ecommerce(&params).unwrap();
    let profile = CapacityProfile::compute(&inst).unwrap();
    let model = build_bin_model_with_profile(&inst, &profile).unwrap();
    let solver = HighsSolver::default();
    let point = solver.solve_lp(&model).unwrap().expect_optimal().unwrap();
    let agg = aggregate(&inst, AggMode::Origin);
    let h = generate_metric_cuts(&model, &inst, &agg, &point, &profile.t_max, &solver).unwrap();
    println!(
        "helpers {} integrals {} no_cut {} unbounded {} consolidation arcs {}",
        h.helpers.len(), h.integrals.len(), h.no_cut, h.skipped_unbounded,
        inst.consolidation_arcs().len()
    );
}
