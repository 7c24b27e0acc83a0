//! Symmetry of a complete graph: group order, fixed-point space, and the
//! certificate that consensus is invariant under a uniform perturbation.

use alf::dynamics::{Perturbation, PerturbedSystem};
use alf::graph::Graph;
use alf::response::{ResponseField, ResponseFunction};
use alf::symmetry::{fixed_point_space, maximal_canard_certificate, symmetry_generated_equilibria, PermutationGroup, GROUP_CAP};

fn main() -> alf::error::Result<()> {
    let n = 5;
    let sys = PerturbedSystem::new(
        Graph::complete(n)?,
        ResponseField::homogeneous(ResponseFunction::from_coeffs(&[0.0, 0.0, -1.0, 0.0, 1.0])?),
        Perturbation::uniform(n, 0.5)?,
        0.1,
    )?;
    for (name, g) in [("cyclic", PermutationGroup::cyclic(n)?), ("dihedral", PermutationGroup::dihedral(n)?)] {
        let fix = fixed_point_space(&g, n)?;
        println!("{name}: order {}, Fix dim {}, consensus {}", g.order(GROUP_CAP)?, fix.dim(), fix.is_consensus());
    }
    let cert = maximal_canard_certificate(&sys, &PermutationGroup::cyclic(n)?, &[vec![0.1, 0.2, 0.3, 0.4, 0.5]])?;
    println!("certificate: {cert:?}");

    let unperturbed = PerturbedSystem::unperturbed(sys.graph().clone(), sys.response().clone());
    let eq = symmetry_generated_equilibria(&unperturbed, 1.0, &[1, -1, 1, -1, 1])?;
    println!("signed equilibrium {:?}, residual {:.1e}", eq.state, eq.residual);
    Ok(())
}
