//! Critical manifold of the reduced three-agent system, written as CSV.

use alf::response::ResponseFunction;
use alf::slowfast::{ManifoldGrid, PlaneSystem};

fn main() -> alf::error::Result<()> {
    let ps = PlaneSystem::new(3, ResponseFunction::double_well(), -1.0, -1.0, 0.1)?;
    let m = ps.sample_manifold(&ManifoldGrid::new((-4.5, 4.5), (-3.0, 3.0), 181, 121))?;
    println!("{} points on {} branches", m.points.len(), m.branch_count());
    let path = std::env::temp_dir().join("manifold.csv");
    std::fs::write(&path, m.to_csv()).expect("writable temp dir");
    println!("wrote {}", path.display());
    Ok(())
}
