//! Branch counts of the critical manifold along two one-parameter response
//! families.

use alf::response::Family;
use alf::slowfast::{ManifoldGrid, PlaneSystem};

fn main() -> alf::error::Result<()> {
    let grid = ManifoldGrid::new((-4.5, 4.5), (-3.0, 3.0), 181, 121);
    for family in [Family::Ex3a, Family::Ex3b] {
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let ps = PlaneSystem::new(3, family.instantiate(lambda)?, -1.0, -1.0, 0.1)?;
            let m = ps.sample_manifold(&grid)?;
            println!("{} lambda = {lambda:4}: {} branches, at most {} roots per line", family.name(), m.branch_count(), m.max_roots_per_line);
        }
    }
    Ok(())
}
