//! The same plane integration in double, double-double and quad-double.
//! Past the singular point the consensus branch repels, so rounding noise
//! decides when each run leaves it.

use alf::integrate::IntegratorConfig;
use alf::precision::{format_scientific, DoubleDouble, QuadDouble, Real};
use alf::response::ResponseFunction;
use alf::slowfast::{canard_metrics, simulate_plane, PlaneSystem};

fn run<S: Real>(ps: &PlaneSystem) {
    let k0 = S::from_f64(4.0);
    let x0 = k0 / S::from_f64(3.0);
    let cfg = IntegratorConfig::rk4(1e-3).with_stride(10);
    let tr = match simulate_plane(ps, x0, k0, (0.0, 80.0), &cfg) {
        Ok(t) => t,
        Err(f) => f.partial,
    };
    let m = canard_metrics(&tr, 3, 0, ps.epsilon(), 3.0);
    let k_end = format_scientific(*tr.totals.last().expect("non-empty"), 12);
    println!("{:2} digits: departure k {:?}, final k {k_end}", S::DIGITS, m.departure_k);
}

fn main() -> alf::error::Result<()> {
    let ps = PlaneSystem::new(3, ResponseFunction::double_well(), -1.0, -1.0, 0.01)?;
    run::<f64>(&ps);
    run::<DoubleDouble>(&ps);
    run::<QuadDouble>(&ps);
    Ok(())
}
