//! Ten agents on a complete graph with a double-well response under a random
//! perturbation. The states collapse onto consensus, split while the mean
//! crosses the repelling interval (0, 1), and regroup beyond it.

use alf::dynamics::{Perturbation, PerturbedSystem};
use alf::graph::Graph;
use alf::integrate::{integrate, IntegratorConfig};
use alf::response::{ResponseField, ResponseFunction};
use alf::rng::SeededRng;

fn main() -> alf::error::Result<()> {
    let n = 10;
    let sys = PerturbedSystem::new(
        Graph::complete(n)?,
        ResponseField::homogeneous(ResponseFunction::double_well()),
        Perturbation::random_constant(n, 2, 0.0, 1.0)?,
        0.01,
    )?;
    let x0 = SeededRng::new(1).uniform_vec(n, -1.0, 0.0);
    let cfg = IntegratorConfig::dp45(1e-9).with_stride(50);
    let tr = integrate(&sys.kernel::<f64>(), &x0, (0.0, 500.0), &cfg).map_err(|f| f.error)?;
    println!("{:>9} {:>10} {:>10}", "t", "spread", "k");
    for (t, x) in tr.times.iter().zip(&tr.states).step_by(tr.len() / 12 + 1) {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{t:9.3} {:10.3e} {:10.5}", hi - lo, x.iter().sum::<f64>());
    }
    println!("{} accepted steps, {} rejected", tr.meta.steps, tr.meta.rejected);
    Ok(())
}
