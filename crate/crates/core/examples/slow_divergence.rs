//! Slow-divergence integral along the consensus branch: quadrature against
//! the closed form.

use alf::response::ResponseFunction;
use alf::slowfast::PlaneSystem;

fn main() -> alf::error::Result<()> {
    let ps = PlaneSystem::new(3, ResponseFunction::double_well(), -1.0, -1.0, 0.1)?;
    for (k1, k2) in [(-3.0, 3.0), (0.0, 3.0), (-3.0, 0.0), (-4.0, 4.5)] {
        let d = ps.slow_divergence_integral(k1, k2, 1e-12)?;
        println!("[{k1}, {k2}]: quadrature {:.15} exact {:?}", d.integral, d.exact);
    }
    Ok(())
}
