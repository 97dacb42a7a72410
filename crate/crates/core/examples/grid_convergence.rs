use scarloc::eigen::solve_lowest;
use scarloc::eigen::HamiltonianOperator;
use scarloc::grid::make_grid;
use scarloc::potential::{build_lattice_potential, FermiParams};
use scarloc::run::grid_rule_points;

fn main() {
    let wells: usize = std::env::args().nth(1).map_or(3, |s| s.parse().unwrap());
    let k: usize = std::env::args().nth(2).map_or(20, |s| s.parse().unwrap());
    let p = FermiParams::with_wells(wells);
    let n = grid_rule_points(&p, Some(0.2), p.v0);
    let mut levels = Vec::new();
    for m in [n, 2 * n + 1] {
        let g = make_grid(p.side_length(), m).unwrap();
        let op = HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap());
        levels.push(solve_lowest(&op, k, 1e-8).unwrap().energies);
    }
    let worst = levels[0]
        .iter()
        .zip(&levels[1])
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    println!("L={wells} n={n} vs {}: max relative change of the lowest {k} levels {worst:.2e}", 2 * n + 1);
}
