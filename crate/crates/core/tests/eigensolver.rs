use faer::{Mat, Side};

use scarloc::eigen::{
    box_mode_energy_discrete, residual_norm, solve_lowest, solve_lowest_with, HamiltonianOperator, SolverOptions,
};
use scarloc::grid::{inner_product, make_grid, ScalarField, Wavefunction};
use scarloc::potential::{build_lattice_potential, FermiParams};
use scarloc::Error;

fn dense_hamiltonian(v: &ScalarField) -> Mat<f64> {
    let g = v.grid();
    let n = g.points_per_axis();
    let h = g.spacing();
    let w = 0.5 / (h * h);
    let mut m = Mat::<f64>::zeros(g.len(), g.len());
    for iy in 0..n {
        for ix in 0..n {
            let i = g.index(ix, iy);
            m[(i, i)] = 4.0 * w + v.values()[i];
            if ix + 1 < n {
                let j = g.index(ix + 1, iy);
                m[(i, j)] = -w;
                m[(j, i)] = -w;
            }
            if iy + 1 < n {
                let j = g.index(ix, iy + 1);
                m[(i, j)] = -w;
                m[(j, i)] = -w;
            }
        }
    }
    m
}

fn dense_spectrum(v: &ScalarField) -> Vec<f64> {
    let evd = dense_hamiltonian(v).self_adjoint_eigen(Side::Lower).unwrap();
    let s = evd.S().column_vector();
    (0..s.nrows()).map(|i| s[i]).collect()
}

#[test]
fn single_well_matches_dense_diagonalization() {
    let p = FermiParams::with_wells(1);
    let g = make_grid(2.0, 40).unwrap();
    let v = build_lattice_potential(&p, &g).unwrap();
    let dense = dense_spectrum(&v);
    let set = solve_lowest(&HamiltonianOperator::new(v), 12, 1e-9).unwrap();
    for (e, d) in set.energies.iter().zip(&dense) {
        assert!((e - d).abs() < 1e-8, "{e} vs {d}");
    }
}

#[test]
fn disordered_lattice_matches_dense_diagonalization() {
    let g = make_grid(4.0, 36).unwrap();
    let v = ScalarField::from_fn(g, |[x, y]| 3.0 * (1.7 * x).sin().powi(2) + (x * y).cos()).unwrap();
    let dense = dense_spectrum(&v);
    let set = solve_lowest(&HamiltonianOperator::new(v), 30, 1e-9).unwrap();
    let worst = set
        .energies
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "worst {worst}");
}

#[test]
fn residuals_below_tolerance_and_states_orthonormal() {
    let p = FermiParams::with_wells(2);
    let g = make_grid(4.0, 70).unwrap();
    let op = HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap());
    let tol = 1e-7;
    let set = solve_lowest(&op, 24, tol).unwrap();
    assert!(set.meta.orthogonality < 1e-10);
    for (i, psi) in set.states.iter().enumerate() {
        assert!(residual_norm(&op, psi, set.energies[i]).unwrap() < tol);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        for other in &set.states[..i] {
            assert!(inner_product(psi, other).unwrap().abs() < 1e-9);
        }
    }
    assert!(set.energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn degenerate_box_pair_spans_the_exact_subspace() {
    let g = make_grid(5.0, 60).unwrap();
    let set = solve_lowest(&HamiltonianOperator::free(g), 3, 1e-10).unwrap();
    let e12 = box_mode_energy_discrete(&g, 1, 2);
    assert!((set.energies[1] - e12).abs() < 1e-9);
    assert!((set.energies[2] - e12).abs() < 1e-9);
    // projection of each exact mode onto the computed pair has unit norm
    for (k, m) in [(1, 2), (2, 1)] {
        let mode = scarloc::grid::normalize(&scarloc::eigen::box_mode(&g, k, m)).unwrap();
        let proj: f64 = set.states[1..3]
            .iter()
            .map(|s| inner_product(s, &mode).unwrap().powi(2))
            .sum();
        assert!((proj - 1.0).abs() < 1e-8, "projection {proj}");
    }
}

#[test]
fn ground_state_of_symmetric_well_is_symmetric_and_positive() {
    let p = FermiParams::with_wells(1);
    let g = make_grid(2.0, 51).unwrap();
    let set = solve_lowest(
        &HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap()),
        1,
        1e-10,
    )
    .unwrap();
    let psi = &set.states[0];
    let n = g.points_per_axis();
    assert!(psi.values().iter().all(|&v| v > -1e-10));
    for iy in 0..n {
        for ix in 0..n {
            let a = psi.values()[g.index(ix, iy)];
            for b in [
                psi.values()[g.index(n - 1 - ix, iy)],
                psi.values()[g.index(ix, n - 1 - iy)],
                psi.values()[g.index(iy, ix)],
            ] {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn rayleigh_quotient_bounds_ground_energy() {
    let g = make_grid(3.0, 30).unwrap();
    let v = ScalarField::from_fn(g, |[x, y]| (x - 1.5).powi(2) + 2.0 * (y - 1.5).powi(2)).unwrap();
    let op = HamiltonianOperator::new(v);
    let set = solve_lowest(&op, 1, 1e-10).unwrap();
    let trial = Wavefunction::from_fn(g, |[x, y]| (-(x - 1.5).powi(2) - (y - 1.5).powi(2)).exp());
    let hpsi = op.apply(&trial).unwrap();
    let rq = inner_product(&trial, &hpsi).unwrap() / inner_product(&trial, &trial).unwrap();
    assert!(set.energies[0] <= rq + 1e-12);
}

#[test]
fn restarted_solve_agrees_with_large_basis() {
    let p = FermiParams::with_wells(3);
    let g = make_grid(6.0, 90).unwrap();
    let op = HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap());
    let big = solve_lowest_with(
        &op,
        &SolverOptions {
            n_states: 40,
            tol: 1e-8,
            ..SolverOptions::default()
        },
    )
    .unwrap();
    let small = solve_lowest_with(
        &op,
        &SolverOptions {
            n_states: 40,
            tol: 1e-8,
            max_basis: 72,
            ..SolverOptions::default()
        },
    )
    .unwrap();
    assert!(small.meta.restarts > 0);
    for (a, b) in big.energies.iter().zip(&small.energies) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn same_seed_gives_identical_output() {
    let p = FermiParams::with_wells(2);
    let g = make_grid(4.0, 50).unwrap();
    let op = HamiltonianOperator::new(build_lattice_potential(&p, &g).unwrap());
    let a = solve_lowest(&op, 10, 1e-8).unwrap();
    let b = solve_lowest(&op, 10, 1e-8).unwrap();
    assert_eq!(a.energies, b.energies);
    assert_eq!(a.states[9].values(), b.states[9].values());
}

#[test]
fn rejects_impossible_requests() {
    let g = make_grid(2.0, 10).unwrap();
    let op = HamiltonianOperator::free(g);
    assert!(matches!(solve_lowest(&op, 0, 1e-6), Err(Error::Parameter { .. })));
    assert!(matches!(solve_lowest(&op, 50, 1e-6), Err(Error::Parameter { .. })));
    assert!(matches!(solve_lowest(&op, 3, -1.0), Err(Error::Parameter { .. })));
}
