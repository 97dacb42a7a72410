//! Block shift-and-invert Lanczos with full reorthogonalization.
//!
//! The shift sits at `min(V)`, where `H - σ` is positive definite, so a sparse
//! Cholesky factor provides the inverse. The lowest eigenvalues of `H` become
//! the dominant ones of `(H - σ)⁻¹`. Blocks (rather than single vectors) are
//! needed because symmetric potentials produce exactly degenerate pairs.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenpairSet, HamiltonianOperator, SolverMeta, SolverOptions, MAX_POINTS_PER_AXIS, MAX_STATES};
use crate::error::{Error, Result};
use crate::grid::Wavefunction;

pub const METHOD_TAG: &str = "block-shift-invert-lanczos";
const ORTHOGONALITY_LIMIT: f64 = 1e-8;
const MAX_RESTARTS: usize = 30;

pub fn solve_lowest_with(op: &HamiltonianOperator, opts: &SolverOptions) -> Result<EigenpairSet> {
    let grid = *op.grid();
    let n = grid.len();
    let k = opts.n_states;
    if k == 0 {
        return Err(Error::param("n_states", "must be at least 1"));
    }
    if k > MAX_STATES {
        return Err(Error::param("n_states", format!("{k} exceeds the cap of {MAX_STATES}")));
    }
    if 5 * k > n {
        return Err(Error::param(
            "n_states",
            format!("{k} exceeds 20% of the {n} grid points"),
        ));
    }
    if grid.points_per_axis() > MAX_POINTS_PER_AXIS {
        return Err(Error::param(
            "points_per_axis",
            format!("{} exceeds the cap of {MAX_POINTS_PER_AXIS}", grid.points_per_axis()),
        ));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if opts.block_size == 0 {
        return Err(Error::param("block_size", "must be at least 1"));
    }
    let b = opts.block_size;
    // Ritz values near the edge of the wanted set converge slowest, so a guard
    // band of extra pairs is carried and discarded at the end.
    let guard = (2 * b).max(k / 4);
    let kg = k + guard;
    let max_basis = match opts.max_basis {
        0 => 3 * kg + 10 * b,
        m => m,
    }
    .max(kg + b)
    .min(n - b);
    let max_blocks = (max_basis / b).max(1);

    let shift = op.potential().min();
    let llt = op
        .shifted_lower(shift)?
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;

    let cap = (max_blocks + 1) * b;
    let mut q = Mat::<f64>::zeros(n, cap);
    let mut t = Mat::<f64>::zeros(cap, cap);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let start = Mat::<f64>::from_fn(n, b, |_, _| rng.random::<f64>() - 0.5);
    orthonormalize_block(&mut q, 0, start, &mut rng);

    // Ritz pairs kept across a thick restart, a whole number of blocks
    let keep = (kg.div_ceil(b) * b).min(max_blocks.saturating_sub(1) * b);
    let first_check = kg.div_ceil(b) + 2;
    let mut next_check = first_check;
    let mut steps = 0;
    let mut restarts = 0;

    loop {
        let cur = steps * b;
        let m = cur + b;

        let mut w = q.as_ref().subcols(cur, b).to_owned();
        llt.solve_in_place(w.as_mut());

        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            let basis = q.as_ref().subcols(0, m);
            let mut c = Mat::<f64>::zeros(m, b);
            matmul(c.as_mut(), Accum::Replace, basis.transpose(), w.as_ref(), 1.0, Par::Seq);
            matmul(w.as_mut(), Accum::Add, basis, c.as_ref(), -1.0, Par::Seq);
            for j in 0..b {
                for i in 0..m {
                    t[(i, cur + j)] += c[(i, j)];
                }
            }
        }
        let r = orthonormalize_block(&mut q, m, w, &mut rng);
        for j in 0..b {
            for i in 0..b {
                t[(m + i, cur + j)] = r[(i, j)];
            }
        }
        steps += 1;

        let exhausted = steps >= max_blocks;
        if steps < next_check && !exhausted {
            continue;
        }
        next_check = steps + (steps / 6).max(1);

        let m = steps * b;
        let ts = Mat::<f64>::from_fn(m, m, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
        let evd = ts
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Factorization(format!("projected eigenproblem: {e:?}")))?;
        let theta = evd.S().column_vector();
        let u = evd.U();
        if m < kg {
            if exhausted {
                return Err(Error::param(
                    "max_basis",
                    format!("basis of {m} cannot hold {kg} Ritz pairs"),
                ));
            }
            continue;
        }
        let wanted: Vec<usize> = (m - k..m).rev().collect();

        // residual estimate: (H - E) y = -(H - σ) Q_next R_last s_last / θ
        let mut g = Mat::<f64>::zeros(n, b);
        for j in 0..b {
            let mut col = vec![0.0; n];
            op.apply_raw(q.col_as_slice(m + j), &mut col);
            for (i, v) in col.into_iter().enumerate() {
                g[(i, j)] = v - shift * q[(i, m + j)];
            }
        }
        let mut gram = Mat::<f64>::zeros(b, b);
        matmul(gram.as_mut(), Accum::Replace, g.transpose(), g.as_ref(), 1.0, Par::Seq);
        let estimates: Vec<f64> = wanted
            .iter()
            .map(|&i| {
                if theta[i] <= 0.0 {
                    return f64::INFINITY;
                }
                let z: Vec<f64> = (0..b)
                    .map(|row| (0..b).map(|c| t[(m + row, m - b + c)] * u[(m - b + c, i)]).sum())
                    .collect();
                let mut s = 0.0;
                for a in 0..b {
                    for c in 0..b {
                        s += z[a] * gram[(a, c)] * z[c];
                    }
                }
                s.max(0.0).sqrt() / theta[i]
            })
            .collect();
        let worst_estimate = estimates.iter().copied().fold(0.0, f64::max);
        if worst_estimate > 0.5 * opts.tol {
            if !exhausted {
                continue;
            }
            if restarts < MAX_RESTARTS {
                restarts += 1;
                steps = thick_restart(
                    &mut q,
                    &mut t,
                    u,
                    theta.try_as_col_major().unwrap().as_slice(),
                    m,
                    b,
                    keep,
                );
                next_check = steps + 1;
                continue;
            }
        }

        let mut s = Mat::<f64>::zeros(m, k);
        for (c, &i) in wanted.iter().enumerate() {
            for row in 0..m {
                s[(row, c)] = u[(row, i)];
            }
        }
        let mut y = Mat::<f64>::zeros(n, k);
        matmul(
            y.as_mut(),
            Accum::Replace,
            q.as_ref().subcols(0, m),
            s.as_ref(),
            1.0,
            Par::Seq,
        );

        let mut pairs = Vec::with_capacity(k);
        let mut hy = vec![0.0; n];
        for c in 0..k {
            let col = y.col_as_slice(c);
            op.apply_raw(col, &mut hy);
            let nrm2: f64 = col.iter().map(|v| v * v).sum();
            let energy = col.iter().zip(&hy).map(|(a, b)| a * b).sum::<f64>() / nrm2;
            let res = col
                .iter()
                .zip(&hy)
                .map(|(a, b)| (b - energy * a).powi(2))
                .sum::<f64>()
                .sqrt()
                / nrm2.sqrt();
            pairs.push((energy, res, c));
        }
        let worst = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
        if worst >= opts.tol {
            if exhausted && restarts < MAX_RESTARTS {
                restarts += 1;
                steps = thick_restart(
                    &mut q,
                    &mut t,
                    u,
                    theta.try_as_col_major().unwrap().as_slice(),
                    m,
                    b,
                    keep,
                );
                next_check = steps + 1;
                continue;
            }
            if exhausted {
                let mut best: Vec<(f64, f64)> = pairs.iter().map(|p| (p.0, p.1)).collect();
                best.sort_by(|a, b| a.0.total_cmp(&b.0));
                return Err(Error::NotConverged {
                    iterations: steps,
                    tol: opts.tol,
                    worst_residual: worst,
                    best_residuals: best.into_iter().map(|p| p.1).collect(),
                });
            }
            continue;
        }
        let orthogonality = orthogonality_defect(&y);
        if orthogonality > ORTHOGONALITY_LIMIT {
            return Err(Error::Factorization(format!(
                "Ritz vectors lost orthogonality (defect {orthogonality:e})"
            )));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let h = grid.spacing();
        let mut energies = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut states = Vec::with_capacity(k);
        for (energy, res, c) in pairs {
            let col = y.col_as_slice(c);
            let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            // largest-magnitude component is made positive
            let pivot = col
                .iter()
                .copied()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            let scale = pivot.signum() / (nrm * h);
            let values = col.iter().map(|v| v * scale).collect();
            energies.push(energy);
            residuals.push(res);
            states.push(Wavefunction::new(grid, values)?);
        }
        return Ok(EigenpairSet {
            energies,
            states,
            residuals,
            meta: SolverMeta {
                method: METHOD_TAG.to_string(),
                block_steps: steps,
                basis_size: m,
                tol: opts.tol,
                shift,
                seed: opts.seed,
                orthogonality,
                restarts,
            },
        });
    }
}

/// Replaces the first `m` basis vectors by the `keep` dominant Ritz vectors,
/// moves the pending block behind them and rebuilds the projected matrix:
/// `θ` on the diagonal and the coupling `R_last · U_last` to the pending block.
/// Returns the new step count.
fn thick_restart(
    q: &mut Mat<f64>,
    t: &mut Mat<f64>,
    u: faer::MatRef<'_, f64>,
    theta: &[f64],
    m: usize,
    b: usize,
    keep: usize,
) -> usize {
    let n = q.nrows();
    let top: Vec<usize> = (m - keep..m).collect();
    let mut s = Mat::<f64>::zeros(m, keep);
    for (c, &i) in top.iter().enumerate() {
        for row in 0..m {
            s[(row, c)] = u[(row, i)];
        }
    }
    let mut y = Mat::<f64>::zeros(n, keep);
    matmul(
        y.as_mut(),
        Accum::Replace,
        q.as_ref().subcols(0, m),
        s.as_ref(),
        1.0,
        Par::Seq,
    );
    let coupling = Mat::<f64>::from_fn(b, keep, |row, c| {
        (0..b).map(|j| t[(m + row, m - b + j)] * u[(m - b + j, top[c])]).sum()
    });
    let pending = q.as_ref().subcols(m, b).to_owned();
    q.as_mut().subcols_mut(0, keep).copy_from(y.as_ref());
    q.as_mut().subcols_mut(keep, b).copy_from(pending.as_ref());
    t.fill(0.0);
    for c in 0..keep {
        t[(c, c)] = theta[top[c]];
        for row in 0..b {
            t[(keep + row, c)] = coupling[(row, c)];
        }
    }
    keep / b
}

/// Largest `|⟨y_i, y_j⟩ / (|y_i| |y_j|) - δ_ij|` over the columns of `y`. Above
/// 64 columns only the 16 lowest and 16 highest are checked against all.
fn orthogonality_defect(y: &Mat<f64>) -> f64 {
    let k = y.ncols();
    let probe: Vec<usize> = if k <= 64 {
        (0..k).collect()
    } else {
        (0..16).chain(k - 16..k).collect()
    };
    let norms: Vec<f64> = (0..k)
        .map(|c| y.col_as_slice(c).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut worst = 0.0f64;
    for &a in &probe {
        let ya = y.col_as_slice(a);
        for b in 0..k {
            let dot: f64 = ya.iter().zip(y.col_as_slice(b)).map(|(p, q)| p * q).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot / (norms[a] * norms[b]) - target).abs());
        }
    }
    worst
}

/// Orthonormalizes the columns of `w` against each other (and, for deflated
/// columns, against the existing basis) and stores them in `q[:, at..at+b]`.
/// Returns the triangular factor.
fn orthonormalize_block(q: &mut Mat<f64>, at: usize, mut w: Mat<f64>, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let n = w.nrows();
    let b = w.ncols();
    let mut r = Mat::<f64>::zeros(b, b);
    for c in 0..b {
        let original = norm(w.col_as_slice(c));
        for _ in 0..2 {
            for prev in 0..c {
                let coeff = dot(q.col_as_slice(at + prev), w.col_as_slice(c));
                r[(prev, c)] += coeff;
                axpy(-coeff, q.col_as_slice(at + prev), w.col_as_slice_mut(c));
            }
        }
        let nrm = norm(w.col_as_slice(c));
        let col: Vec<f64> = if nrm > 1e-10 * original && nrm > 0.0 {
            r[(c, c)] = nrm;
            w.col_as_slice(c).iter().map(|v| v / nrm).collect()
        } else {
            // Krylov space exhausted in this direction: continue with a fresh random vector
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..2 {
                for j in 0..at + c {
                    let coeff = dot(q.col_as_slice(j), &v);
                    axpy(-coeff, q.col_as_slice(j), &mut v);
                }
            }
            let nv = norm(&v);
            v.iter().map(|x| x / nv).collect()
        };
        q.col_as_slice_mut(at + c).copy_from_slice(&col);
    }
    r
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
