//! Linear and generalized-eigenvalue solvers.
//!
//! The source problem is solved by a sparse LDL^T factorization (reverse
//! Cuthill-McKee ordered), with a Jacobi-preconditioned conjugate-gradient
//! fallback behind a flag. Eigenproblems run block subspace iteration on
//! A^{-1} B with Rayleigh-Ritz extraction: the dominant eigenvalues of
//! A^{-1} B are the reciprocals of the smallest eigenvalues of
//! A x = lambda B x, and a rank-deficient or indefinite B only shrinks the
//! reachable subspace without breaking the iteration.

use crate::assembly::SparseSymSystem;
use crate::error::{Error, Result};
use crate::local_forms::MaterialParams;
use crate::mesh::PolygonalMesh;
use crate::spaces::{discrete_gradient, reduction, DeflectionField, DofMap, RotationField, ShearField};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sprs_ldl::LdlNumeric;

/// Normwise backward error demanded of the direct/iterative linear solve:
/// ||b - A x|| / (||A|| ||x|| + ||b||). For the badly scaled thin-plate
/// systems (shear coefficient ~ t^{-2}) this is the attainable measure; the
/// plain residual over ||b|| saturates at eps * t^{-2}.
const LINEAR_TOL: f64 = 1e-10;
/// Relative eigenpair residual target.
const EIG_TOL: f64 = 1e-9;
const EIG_MAX_ITER: usize = 500;
/// Sweeps without a residual improvement past which a stable spectrum is
/// accepted at its attainable floor (ill-conditioned thin-plate systems stop
/// short of `EIG_TOL`).
const STAGNATION_SWEEPS: usize = 6;

/// Backend for the source solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

pub struct Factorization {
    ldl: LdlNumeric<f64, usize>,
    dim: usize,
}

impl Factorization {
    pub fn new(sys: &SparseSymSystem) -> Result<Self> {
        let csc = sys.matrix().to_csc();
        let ldl = sprs_ldl::Ldl::new()
            .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(csc.view())
            .map_err(|e| Error::SolveFailure(format!("LDL^T factorization failed: {e}")))?;
        Ok(Factorization {
            ldl,
            dim: sys.dim(),
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.dim);
        self.ldl.solve(rhs)
    }
}

/// Discrete solution of the source problem with the lift values reinstated.
#[derive(Debug, Clone)]
pub struct SourceSolution {
    pub rotations: RotationField,
    pub deflection: DeflectionField,
    /// Relative algebraic residual of the linear solve.
    pub residual: f64,
}

/// Solves the assembled source problem `A x = f + lift`.
pub fn solve_source(
    system: &SparseSymSystem,
    load: &[f64],
    dofmap: &DofMap,
    solver: LinearSolver,
) -> Result<SourceSolution> {
    let n = system.dim();
    if load.len() != n {
        return Err(Error::InvalidInput(format!(
            "load vector length {} does not match system dimension {n}",
            load.len()
        )));
    }
    let rhs: Vec<f64> = load
        .iter()
        .zip(&system.lift_rhs)
        .map(|(f, l)| f + l)
        .collect();
    let rhs_norm = norm(&rhs);

    let x = match solver {
        LinearSolver::Direct => {
            let fact = Factorization::new(system)?;
            let mut x = fact.solve(&rhs);
            // two steps of iterative refinement for badly scaled systems
            for _ in 0..2 {
                let r = residual_vec(system, &x, &rhs);
                let dx = fact.solve(&r);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
            }
            x
        }
        LinearSolver::ConjugateGradient => conjugate_gradient(system, &rhs)?,
    };

    let norm_a = inf_norm_of_matrix(system);
    let res = if rhs_norm > 0.0 {
        norm(&residual_vec(system, &x, &rhs)) / (norm_a * norm(&x) + rhs_norm)
    } else {
        0.0
    };
    if res > LINEAR_TOL && rhs_norm > 0.0 {
        return Err(Error::SolveFailure(format!(
            "normwise backward error {res:.3e} exceeds {LINEAR_TOL:.0e}"
        )));
    }
    let (rotations, deflection) = dofmap.from_free(&x);
    Ok(SourceSolution {
        rotations,
        deflection,
        residual: res,
    })
}

fn inf_norm_of_matrix(system: &SparseSymSystem) -> f64 {
    let mut best = 0.0f64;
    for vec in system.matrix().outer_iterator() {
        let row_sum: f64 = vec.iter().map(|(_, &v)| v.abs()).sum();
        best = best.max(row_sum);
    }
    best
}

fn residual_vec(system: &SparseSymSystem, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    let ax = system.matvec(x);
    rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn conjugate_gradient(system: &SparseSymSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = system.dim();
    let mut diag = vec![0.0; n];
    for (row, vec) in system.matrix().outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            if row == col {
                diag[row] = v;
            }
        }
    }
    let precond = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .zip(&diag)
            .map(|(x, d)| if *d > 0.0 { x / d } else { *x })
            .collect()
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let rhs_norm = norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 50 * n;
    for _ in 0..max_iter {
        let ap = system.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::SolveFailure(
                "conjugate gradients hit a non-positive curvature direction".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= 0.1 * LINEAR_TOL * rhs_norm {
            return Ok(x);
        }
        // accept at the attainable backward-error level for stiff systems
        if norm(&r) <= 0.01 * LINEAR_TOL * (inf_norm_of_matrix(system) * norm(&x) + rhs_norm) {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolveFailure(format!(
        "conjugate gradients stalled at relative residual {:.3e}",
        norm(&r) / rhs_norm
    )))
}

/// Which eigenproblem is being solved; recorded in the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMode {
    Vibration,
    Buckling,
}

#[derive(Debug, Clone)]
pub struct EigDiagnostics {
    pub mode: EigMode,
    pub iterations: usize,
    /// Relative residual of each reported pair.
    pub residuals: Vec<f64>,
    /// True when every reported pair met the nominal tolerance; pairs that
    /// only stagnated at their attainable floor leave this false.
    pub at_nominal_tolerance: bool,
}

/// Eigenvalues (ascending, positive part) with eigenvectors expanded back to
/// full fields.
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<(RotationField, DeflectionField)>,
    pub diagnostics: EigDiagnostics,
}

/// Computes the `count` smallest positive eigenvalues of
/// `A x = lambda B x` by block shift-invert subspace iteration with shift 0.
pub fn solve_eig(
    a: &SparseSymSystem,
    b: &SparseSymSystem,
    count: usize,
    mode: EigMode,
    dofmap: &DofMap,
) -> Result<Spectrum> {
    let n = a.dim();
    if b.matrix().data().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroEigRhs);
    }
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "requested {count} eigenpairs of a {n}-dimensional system"
        )));
    }
    // generous block: an indefinite B splits the dominant directions of
    // A^{-1} B between both signs
    let block = (2 * count + 2).max(count + 6).min(n);
    let fact = Factorization::new(a)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::<f64>::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));

    let mut prev_lambdas: Vec<f64> = Vec::new();
    let mut stagnant_sweeps = 0usize;
    let mut iterations = 0usize;
    let mut last_worst = f64::NAN;
    let mut best_worst = f64::INFINITY;

    for it in 0..EIG_MAX_ITER {
        iterations = it + 1;
        // y = A^{-1} B x, column by column
        let mut y = DMatrix::<f64>::zeros(n, block);
        for j in 0..block {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let bx = b.matvec(&col);
            if norm(&bx) == 0.0 {
                // column fell into the kernel of B; refresh it
                for i in 0..n {
                    y[(i, j)] = rng.gen_range(-1.0..1.0);
                }
                continue;
            }
            let sol = fact.solve(&bx);
            for i in 0..n {
                y[(i, j)] = sol[i];
            }
        }

        // Rayleigh-Ritz on span(y)
        let mut ay = DMatrix::<f64>::zeros(n, block);
        let mut by = DMatrix::<f64>::zeros(n, block);
        for j in 0..block {
            let col: Vec<f64> = y.column(j).iter().copied().collect();
            let av = a.matvec(&col);
            let bv = b.matvec(&col);
            for i in 0..n {
                ay[(i, j)] = av[i];
                by[(i, j)] = bv[i];
            }
        }
        let ar = y.transpose() * &ay;
        let br = y.transpose() * &by;
        let ar = (&ar + ar.transpose()) * 0.5;
        let br = (&br + br.transpose()) * 0.5;

        let chol = ar.clone().cholesky().ok_or_else(|| {
            Error::SolveFailure("projected operator lost positive definiteness".into())
        })?;
        let linv = chol.l().try_inverse().ok_or_else(|| {
            Error::SolveFailure("projected Cholesky factor is singular".into())
        })?;
        let w = &linv * &br * linv.transpose();
        let w = (&w + w.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(w);

        // order Ritz directions by |mu| descending (dominant subspace first)
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&p, &q| {
            eig.eigenvalues[q]
                .abs()
                .total_cmp(&eig.eigenvalues[p].abs())
        });

        let coeffs = linv.transpose() * &eig.eigenvectors;
        let mut next = DMatrix::<f64>::zeros(n, block);
        for (slot, &k) in order.iter().enumerate() {
            let c = coeffs.column(k);
            let mut col = y.column(0) * c[0];
            for j in 1..block {
                col += y.column(j) * c[j];
            }
            next.set_column(slot, &col);
        }

        // wanted pairs: the `count` smallest positive lambda = largest positive mu
        let mu_max = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut positive: Vec<(f64, usize)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &mu)| mu > 1e-12 * mu_max)
            .map(|(k, &mu)| (mu, k))
            .collect();
        positive.sort_by(|a, b| b.0.total_cmp(&a.0));

        if positive.len() >= count {
            let lambdas: Vec<f64> = positive[..count].iter().map(|(mu, _)| 1.0 / mu).collect();

            // residual check on the candidate pairs
            let mut residuals = Vec::with_capacity(count);
            let mut worst: f64 = 0.0;
            for (slot, _) in positive[..count].iter().enumerate() {
                // after reordering, slot k of `next` holds the k-th dominant
                // |mu|; positive mus interleave with negative ones, find slot
                let k_src = positive[slot].1;
                let slot_in_next = order.iter().position(|&o| o == k_src).unwrap();
                let z: Vec<f64> = next.column(slot_in_next).iter().copied().collect();
                let az = a.matvec(&z);
                let bz = b.matvec(&z);
                let lambda = lambdas[slot];
                let r: Vec<f64> = az
                    .iter()
                    .zip(&bz)
                    .map(|(av, bv)| av - lambda * bv)
                    .collect();
                let rel = norm(&r) / norm(&az).max(1e-300);
                residuals.push(rel);
                worst = worst.max(rel);
            }
            last_worst = worst;

            // Stagnation: the rolling-best residual has stopped improving and
            // the Ritz values only jitter at the level the residual floor
            // allows. That is the attainable state for ill-conditioned
            // thin-plate systems, where round-off in the inner solves keeps
            // both quantities bouncing around fixed values.
            let lambda_tol = (0.1 * worst).max(1e-13);
            let lambdas_stable = prev_lambdas.len() == count
                && lambdas
                    .iter()
                    .zip(&prev_lambdas)
                    .all(|(now, old)| (now - old).abs() <= lambda_tol * now.abs().max(1e-300));
            prev_lambdas = lambdas.clone();
            if worst < 0.9 * best_worst {
                best_worst = worst;
                stagnant_sweeps = 0;
            } else if lambdas_stable {
                stagnant_sweeps += 1;
            } else {
                stagnant_sweeps = 0;
            }

            let nominal = worst <= EIG_TOL;
            if nominal || stagnant_sweeps >= STAGNATION_SWEEPS {
                // B-normalize the reported modes
                let mut eigenvalues = Vec::with_capacity(count);
                let mut modes = Vec::with_capacity(count);
                for (slot, &(_, k_src)) in positive[..count].iter().enumerate() {
                    let slot_in_next = order.iter().position(|&o| o == k_src).unwrap();
                    let mut z: Vec<f64> = next.column(slot_in_next).iter().copied().collect();
                    let bz = b.matvec(&z);
                    let bnorm: f64 = z.iter().zip(&bz).map(|(a, b)| a * b).sum::<f64>();
                    if bnorm > 0.0 {
                        let s = bnorm.sqrt();
                        for v in z.iter_mut() {
                            *v /= s;
                        }
                    }
                    eigenvalues.push(lambdas[slot]);
                    modes.push(dofmap.from_free(&z));
                }
                return Ok(Spectrum {
                    eigenvalues,
                    modes,
                    diagnostics: EigDiagnostics {
                        mode,
                        iterations,
                        residuals,
                        at_nominal_tolerance: nominal,
                    },
                });
            }
        }

        x = next;
    }

    Err(Error::EigNonConvergence {
        iterations,
        residual: last_worst,
    })
}

/// Discrete shear recovery: scaled difference of the discrete gradient and
/// the reduced rotations, per cell edge.
pub fn recover_shear(
    rotations: &RotationField,
    deflection: &DeflectionField,
    mat: &MaterialParams,
    mesh: &PolygonalMesh,
) -> ShearField {
    let grad = discrete_gradient(deflection, mesh);
    let red = reduction(rotations, mesh);
    let scale = mat.shear_coefficient();
    ShearField(
        grad.0
            .iter()
            .zip(&red.0)
            .map(|(g, r)| {
                g.iter()
                    .zip(r)
                    .map(|(gv, rv)| scale * (gv - rv))
                    .collect()
            })
            .collect(),
    )
}
