use std::time::Instant;

use scarloc::eigen::{solve_lowest_with, HamiltonianOperator, SolverOptions};
use scarloc::grid::make_grid;
use scarloc::potential::{build_lattice_potential, FermiParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let wells: usize = args.get(1).map_or(3, |s| s.parse().unwrap());
    let points: usize = args.get(2).map_or(133, |s| s.parse().unwrap());
    let k: usize = args.get(3).map_or(100, |s| s.parse().unwrap());
    let b: usize = args.get(4).map_or(8, |s| s.parse().unwrap());
    let p = FermiParams::with_wells(wells);
    let g = make_grid(p.side_length(), points).unwrap();
    let op = HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap());
    let t = Instant::now();
    let res = solve_lowest_with(
        &op,
        &SolverOptions {
            n_states: k,
            tol: 1e-6,
            block_size: b,
            ..Default::default()
        },
    )
    .unwrap();
    println!(
        "{:?} steps={} basis={} E0={} Emax={} maxres={:e}",
        t.elapsed(),
        res.meta.block_steps,
        res.meta.basis_size,
        res.energies[0],
        res.energies[k - 1],
        res.residuals.iter().cloned().fold(0.0, f64::max)
    );
}
