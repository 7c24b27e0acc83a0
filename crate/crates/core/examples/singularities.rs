//! Transcritical points on the consensus branch of three agents with a
//! double-well response, for both signs of a uniform perturbation.

use alf::response::ResponseFunction;
use alf::slowfast::PlaneSystem;

fn main() -> alf::error::Result<()> {
    for h in [-1.0, 1.0] {
        let ps = PlaneSystem::new(3, ResponseFunction::double_well(), h, h, 0.1)?;
        println!("h = {h}");
        for r in ps.singularities((-2.0, 2.0))? {
            println!(
                "  k = {:5}  f'' = {:3}  {:?}  lambda = {:?}  canard = {}  tangent slope {}",
                r.k_s, r.d2f, r.sing_type, r.lambda, r.canard, r.tangent.slope
            );
            let slope = ps.tangent_slope_estimate(&r, 1e-4)?;
            println!("      continued slope {slope:.6}");
        }
    }
    Ok(())
}
