use std::time::Instant;
use mcnd::gen::{generate_ecommerce, EcommerceParams};
use mcnd::instance::CapacityProfile;
use mcnd::model::build_bin_model_with_profile;
use mcnd::solver::{HighsSolver, Solver};
fn main() {
    let t = Instant::now();
    let params = EcommerceParams::group(1, 1).unwrap();
    let inst = generate_ecommerce(&params).unwrap();
    eprintln!("gen: {:.2}s", t.elapsed().as_secs_f64());
    let profile = CapacityProfile::compute(&inst).unwrap();
    eprintln!("profile: {:.2}s", t.elapsed().as_secs_f64());
    let model = build_bin_model_with_profile(&inst, &profile).unwrap();
    eprintln!("model: {:.2}s ({} vars, {} rows)", t.elapsed().as_secs_f64(), model.num_vars(), model.num_rows());
    let solver = HighsSolver::default();
    let lp = solver.solve_lp(&model).unwrap();
    eprintln!("lp: {:.2}s obj {:.2}", t.elapsed().as_secs_f64(), lp.objective);
}
