//! Canard through the type-1 point at k = 3 in double-double precision,
//! with the critical perturbation and with the last node's component zeroed.

use alf::integrate::IntegratorConfig;
use alf::precision::{DoubleDouble, Scalar};
use alf::response::ResponseFunction;
use alf::slowfast::{canard_metrics, simulate_plane, PlaneSystem};

fn main() -> alf::error::Result<()> {
    let eps = 0.01;
    for h_tilde in [-1.0, 0.0] {
        let ps = PlaneSystem::new(3, ResponseFunction::double_well(), -1.0, h_tilde, eps)?;
        let rate = 2.0 - h_tilde;
        let k0 = DoubleDouble::from_f64(4.0);
        let x0 = k0 / DoubleDouble::from_f64(3.0);
        let cfg = IntegratorConfig::rk4(1e-3).with_stride(10);
        let tr = match simulate_plane(&ps, x0, k0, (0.0, 2.5 / (rate * eps)), &cfg) {
            Ok(t) => t,
            Err(f) => f.partial,
        };
        let m = canard_metrics(&tr, 3, 0, eps, 3.0);
        println!(
            "h_tilde = {h_tilde}: crossed in tube {}, departure k {:?} (delta {:?}), after/before {:?}",
            m.crossed_in_tube, m.departure_k, m.departure_delta_k, m.symmetry_ratio
        );
    }
    Ok(())
}
