//! Laplacian spectra of small graphs, and the Jacobian sign pattern at a
//! consensus point for a weighted and an unweighted complete graph.

use alf::dynamics::{sign_pattern, Perturbation, PerturbedSystem};
use alf::graph::Graph;
use alf::response::{ResponseField, ResponseFunction};

fn main() -> alf::error::Result<()> {
    for (name, g) in [("K4", Graph::complete(4)?), ("P4", Graph::path(4)?), ("C4", Graph::cycle(4)?)] {
        println!("{name}: eigenvalues {:?}", g.laplacian().eigenvalues());
    }

    let f = ResponseField::homogeneous(ResponseFunction::double_well());
    let unit = Graph::complete(10)?;
    let weighted = unit.with_random_weights(3, 1.0, 5.0)?;
    for x in [-1.5, -0.5, 0.5, 1.5] {
        let a = PerturbedSystem::new(unit.clone(), f.clone(), Perturbation::zero(10), 0.0)?;
        let b = PerturbedSystem::new(weighted.clone(), f.clone(), Perturbation::zero(10), 0.0)?;
        let pa = sign_pattern(&a.consensus_jacobian_eigenvalues(x)?, 1e-9);
        let pb = sign_pattern(&b.consensus_jacobian_eigenvalues(x)?, 1e-9);
        println!("x* = {x:5}: unit {pa:?} weighted {pb:?} agree {}", pa == pb);
    }
    Ok(())
}
