//! Entanglement measures: Wootters concurrence, the two-qubit tangle, the
//! convex-roof I-tangle for general bipartitions, the effective two-level
//! resonator reduction, and von Neumann entropy.

use crate::evolution::DensityMatrix;
use crate::linalg::{
    hermitian_eigs, partial_trace, psd_sqrt, thin_qr_positive, CMatrix, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum EntangleError {
    #[error("expected a {expected}-dimensional density matrix, got {got}")]
    WrongDim { expected: usize, got: usize },
    #[error(
        "not a density matrix: trace deviation {trace_dev:.3e}, hermiticity \
         defect {herm_defect:.3e}, min eigenvalue {min_eig:.3e}"
    )]
    NotADensityMatrix {
        trace_dev: f64,
        herm_defect: f64,
        min_eig: f64,
    },
    #[error("bipartite dims {da} x {db} do not match matrix dimension {dim}")]
    BadBipartition { da: usize, db: usize, dim: usize },
    #[error("convex-roof bipartition needs one side of dimension <= 4, got {da} x {db}")]
    SideTooLarge { da: usize, db: usize },
    #[error("bipartition sides must be disjoint, non-empty subsystem sets within the space")]
    BadPartitionSets,
    #[error("two-level reduction requires the resonator inside the bipartition")]
    ReductionNeedsResonator,
    #[error("operation needs at least {needed} qubits, the space has {got}")]
    TooFewQubits { needed: usize, got: usize },
    #[error("state lies fully outside the two-level resonator subspace (leakage {leakage:.3})")]
    FullLeakage { leakage: f64 },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, EntangleError>;

/// Relative eigenvalue floor for the concurrence kernel: eigen-based square
/// roots turn exact-zero eigenvalues into values of order sqrt(machine
/// epsilon) ~ 1e-8, so spectrum entries of Y below this fraction of the
/// largest are round-off noise and are treated as zero.
pub const Y_ROUNDOFF_FLOOR: f64 = 1e-7;

/// PSD clamp for validated density-matrix inputs (matches the evolution
/// module's monitoring tolerance).
const INPUT_EIG_TOL: f64 = 1e-8;

fn validate_density(rho: &CMatrix, expected_dim: Option<usize>) -> Result<()> {
    if let Some(d) = expected_dim {
        if rho.rows() != d || rho.cols() != d {
            return Err(EntangleError::WrongDim {
                expected: d,
                got: rho.rows(),
            });
        }
    }
    if !rho.is_square() {
        return Err(EntangleError::WrongDim {
            expected: rho.rows(),
            got: rho.cols(),
        });
    }
    let herm_defect = rho.hermiticity_defect();
    let trace_dev = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let min_eig = if herm_defect <= 1e-9 {
        let (w, _) = hermitian_eigs(rho)?;
        w.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        f64::NEG_INFINITY
    };
    if herm_defect > 1e-9 || trace_dev > 1e-8 || min_eig < -INPUT_EIG_TOL {
        return Err(EntangleError::NotADensityMatrix {
            trace_dev,
            herm_defect,
            min_eig,
        });
    }
    Ok(())
}

/// The spin-flipped state rho_tilde = (sigma_y x sigma_y) conj(rho)
/// (sigma_y x sigma_y), with conjugation in the fixed computational basis.
fn spin_flip(rho: &CMatrix) -> CMatrix {
    let mut yy = CMatrix::zeros(4, 4);
    yy.set(0, 3, C64::new(-1.0, 0.0));
    yy.set(1, 2, C64::new(1.0, 0.0));
    yy.set(2, 1, C64::new(1.0, 0.0));
    yy.set(3, 0, C64::new(-1.0, 0.0));
    yy.matmul(&rho.conj()).matmul(&yy)
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// Computes Y = sqrt( sqrt(rho) rho_tilde sqrt(rho) ) through Hermitian
/// eigendecompositions and returns max(0, l1 - l2 - l3 - l4) over Y's
/// descending spectrum. Spectrum entries below `Y_ROUNDOFF_FLOOR` times the
/// largest are zeroed as square-root-amplified round-off.
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    validate_density(rho, Some(4))?;
    let rho_tilde = spin_flip(rho);
    let s = psd_sqrt(rho, INPUT_EIG_TOL)?;
    let inner = s.matrix.matmul(&rho_tilde).matmul(&s.matrix);
    let (w, _) = hermitian_eigs(&inner)?;
    // inner is PSD up to round-off; eigenvalues of Y are its square roots.
    if let Some(&lowest) = w.last() {
        if lowest < -1e-10 {
            return Err(EntangleError::NotADensityMatrix {
                trace_dev: 0.0,
                herm_defect: 0.0,
                min_eig: lowest,
            });
        }
    }
    let lambda: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let floor = lambda[0] * Y_ROUNDOFF_FLOOR;
    let cleaned: Vec<f64> = lambda
        .iter()
        .map(|&l| if l < floor { 0.0 } else { l })
        .collect();
    let c = cleaned[0] - cleaned[1] - cleaned[2] - cleaned[3];
    Ok(c.clamp(0.0, 1.0))
}

/// Two-qubit tangle: the squared concurrence.
pub fn tangle_two_qubit(rho: &CMatrix) -> Result<f64> {
    let c = concurrence(rho)?;
    Ok(c * c)
}

/// Von Neumann entropy -sum_i l_i log2(l_i), with 0 log 0 = 0.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    validate_density(rho, None)?;
    let (w, _) = hermitian_eigs(rho)?;
    Ok(w.iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum())
}

/// Tangle of every unordered qubit pair, obtained by tracing out all other
/// subsystems. The space convention is qubits first, resonator last.
pub fn pairwise_tangles(dm: &DensityMatrix) -> Result<Vec<((usize, usize), f64)>> {
    let n_qubits = dm.space.n_subsystems() - 1;
    if n_qubits < 2 {
        return Err(EntangleError::TooFewQubits {
            needed: 2,
            got: n_qubits,
        });
    }
    let mut out = Vec::new();
    for i in 0..n_qubits {
        for j in (i + 1)..n_qubits {
            let pair = partial_trace(&dm.matrix, &dm.space, &[i, j])?;
            out.push(((i, j), tangle_two_qubit(&pair)?));
        }
    }
    Ok(out)
}

/// Result of the two-level resonator reduction.
pub struct TwoLevelReduction {
    /// 4 x 4 state in the basis |0,e>, |0,g>, |1,e>, |1,g>
    /// (resonator level first, then the designated qubit).
    pub matrix: CMatrix,
    /// Probability weight outside the resonator span{|0>, |1>}.
    pub leakage: f64,
    /// True when leakage exceeded the caller's bound (the reduced measure
    /// is still computed; meaningfulness is the caller's judgement).
    pub flagged: bool,
}

/// Project onto the resonator's two lowest Fock levels and reorder to the
/// four-dimensional qubit-resonator standard basis, renormalizing and
/// reporting the projected-out weight as leakage.
pub fn effective_two_level_reduce(
    dm: &DensityMatrix,
    qubit: usize,
    leakage_bound: f64,
) -> Result<TwoLevelReduction> {
    let n_sub = dm.space.n_subsystems();
    let n_qubits = n_sub - 1;
    if qubit >= n_qubits {
        return Err(EntangleError::TooFewQubits {
            needed: qubit + 1,
            got: n_qubits,
        });
    }
    let reduced = partial_trace(&dm.matrix, &dm.space, &[qubit, n_sub - 1])?;
    let fock_dim = dm.space.dims()[n_sub - 1];
    // reduced index = q * fock_dim + n; target index = n * 2 + q with
    // q in {e = 0, g = 1} and n in {0, 1}.
    let mut proj = CMatrix::zeros(4, 4);
    for q_row in 0..2 {
        for n_row in 0..2 {
            for q_col in 0..2 {
                for n_col in 0..2 {
                    proj.set(
                        n_row * 2 + q_row,
                        n_col * 2 + q_col,
                        reduced.at(q_row * fock_dim + n_row, q_col * fock_dim + n_col),
                    );
                }
            }
        }
    }
    let weight = proj.trace().re;
    let leakage = 1.0 - weight;
    if weight < 1e-12 {
        return Err(EntangleError::FullLeakage { leakage });
    }
    proj.scale_mut(C64::new(1.0 / weight, 0.0));
    Ok(TwoLevelReduction {
        matrix: proj,
        leakage,
        flagged: leakage > leakage_bound,
    })
}

/// Optional mapping applied before a bipartite measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    None,
    /// Project the resonator onto its two lowest Fock levels (see
    /// [`effective_two_level_reduce`]).
    ResonatorTwoLevel,
}

/// A bipartition of the composite system by subsystem index (qubits are
/// 0..N-1, the resonator is index N).
#[derive(Clone, Debug)]
pub struct BipartitionSpec {
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
    pub reduction: Reduction,
}

impl BipartitionSpec {
    /// Both sides non-empty, disjoint, in range; the two-level reduction
    /// additionally requires the resonator to be part of the bipartition.
    pub fn validate(&self, n_subsystems: usize) -> Result<()> {
        if self.side_a.is_empty() || self.side_b.is_empty() {
            return Err(EntangleError::BadPartitionSets);
        }
        let mut seen = vec![false; n_subsystems];
        for &k in self.side_a.iter().chain(&self.side_b) {
            if k >= n_subsystems || seen[k] {
                return Err(EntangleError::BadPartitionSets);
            }
            seen[k] = true;
        }
        if self.reduction == Reduction::ResonatorTwoLevel
            && !seen[n_subsystems - 1]
        {
            return Err(EntangleError::ReductionNeedsResonator);
        }
        Ok(())
    }
}

/// Reorder the subsystems of a density matrix on a composite space so they
/// appear in `order` (a permutation of the kept subsystem indices).
fn permute_subsystems(rho: &CMatrix, dims: &[usize], order: &[usize]) -> CMatrix {
    let n = dims.len();
    let mut old_strides = vec![1usize; n];
    for k in (0..n - 1).rev() {
        old_strides[k] = old_strides[k + 1] * dims[k + 1];
    }
    let mut new_strides = vec![1usize; n];
    for p in (0..n - 1).rev() {
        new_strides[p] = new_strides[p + 1] * dims[order[p + 1]];
    }
    let dim = rho.rows();
    let remap = |idx: usize| -> usize {
        let mut out = 0;
        for p in 0..n {
            let k = order[p];
            out += (idx / old_strides[k]) % dims[k] * new_strides[p];
        }
        out
    };
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let rr = remap(r);
        for c in 0..dim {
            out.set(rr, remap(c), rho.at(r, c));
        }
    }
    out
}

/// Convex-roof I-tangle across a declared bipartition: traces out everything
/// outside the two sides, optionally applies the two-level resonator
/// reduction, groups side A before side B, and runs the roof optimizer.
pub fn i_tangle_bipartition(
    dm: &DensityMatrix,
    spec: &BipartitionSpec,
    opt: &RoofOptions,
) -> Result<RoofResult> {
    let n_sub = dm.space.n_subsystems();
    spec.validate(n_sub)?;
    if spec.reduction == Reduction::ResonatorTwoLevel {
        // Meaningful for one qubit against the two-level resonator; the
        // reduced basis is resonator-major, and the roof is side-symmetric.
        let qubits: Vec<usize> = spec
            .side_a
            .iter()
            .chain(&spec.side_b)
            .copied()
            .filter(|&k| k != n_sub - 1)
            .collect();
        if qubits.len() != 1 {
            return Err(EntangleError::BadPartitionSets);
        }
        let red = effective_two_level_reduce(dm, qubits[0], 1.0)?;
        return i_tangle_convex_roof(&red.matrix, 2, 2, opt);
    }
    let mut keep: Vec<usize> = spec.side_a.iter().chain(&spec.side_b).copied().collect();
    keep.sort_unstable();
    let reduced = partial_trace(&dm.matrix, &dm.space, &keep)?;
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dm.space.dims()[k]).collect();
    // Position of each kept subsystem inside the reduced ordering.
    let pos = |k: usize| keep.iter().position(|&x| x == k).unwrap();
    let order: Vec<usize> = spec
        .side_a
        .iter()
        .chain(&spec.side_b)
        .map(|&k| pos(k))
        .collect();
    let grouped = permute_subsystems(&reduced, &kept_dims, &order);
    let da: usize = spec.side_a.iter().map(|&k| dm.space.dims()[k]).product();
    let db: usize = spec.side_b.iter().map(|&k| dm.space.dims()[k]).product();
    i_tangle_convex_roof(&grouped, da, db, opt)
}

// --- convex-roof I-tangle ---

/// Optimizer settings for [`i_tangle_convex_roof`]; `Default` matches the
/// documented defaults.
#[derive(Clone, Debug)]
pub struct RoofOptions {
    /// Independent optimizer starts (start 0 is the eigenensemble).
    pub restarts: usize,
    /// Base RNG seed; restart s uses seed + s, so results are independent
    /// of restart execution order (and of parallelism).
    pub seed: u64,
    /// Ensemble size = rank + extra_columns (capped at rank squared).
    pub extra_columns: usize,
    /// Hard iteration cap per start.
    pub max_iters: usize,
    /// Stop when the improvement over this many iterations falls below
    /// `stall_tol`.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Central finite-difference step for the gradient.
    pub fd_step: f64,
    /// Stop when the projected-gradient norm falls below this.
    pub grad_tol: f64,
    /// Backtracking line-search attempts per iteration.
    pub line_search_tries: usize,
}

impl Default for RoofOptions {
    fn default() -> Self {
        RoofOptions {
            restarts: 8,
            seed: 0x5eed,
            extra_columns: 2,
            max_iters: 1000,
            stall_window: 50,
            stall_tol: 1e-6,
            fd_step: 1e-6,
            grad_tol: 1e-10,
            line_search_tries: 30,
        }
    }
}

/// Outcome of the convex-roof minimization. The value is an upper bound on
/// the true convex roof: the optimizer is local, multi-start descent.
#[derive(Clone, Debug)]
pub struct RoofResult {
    pub value: f64,
    /// True when the state was pure and the closed form was used directly.
    pub pure_shortcut: bool,
    /// Final objective of each start (diagnostics).
    pub restart_values: Vec<f64>,
    /// Iterations used by each start.
    pub iterations: Vec<usize>,
}

/// I-tangle of a pure bipartite state given as an unnormalized vector.
fn pure_tangle(psi: &[C64], da: usize, db: usize) -> f64 {
    // Marginal of the smaller side: the two marginals of a pure state share
    // their purity, so pick the cheaper one.
    let p: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if p < 1e-300 {
        return 0.0;
    }
    let tr_sq = if da <= db {
        // G = M M^dag with M = reshape(psi, da x db).
        let mut tr = 0.0;
        for a1 in 0..da {
            for a2 in 0..da {
                let mut g = C64::new(0.0, 0.0);
                for b in 0..db {
                    g += psi[a1 * db + b] * psi[a2 * db + b].conj();
                }
                tr += g.norm_sqr();
            }
        }
        tr
    } else {
        let mut tr = 0.0;
        for b1 in 0..db {
            for b2 in 0..db {
                let mut g = C64::new(0.0, 0.0);
                for a in 0..da {
                    g += psi[a * db + b1] * psi[a * db + b2].conj();
                }
                tr += g.norm_sqr();
            }
        }
        tr
    };
    (2.0 * (1.0 - tr_sq / (p * p))).max(0.0)
}

/// Objective: sum over ensemble members of 2 (p_i - Tr[rho_a_i^2] / p_i),
/// where the columns of A U^T are the subnormalized member vectors.
fn roof_objective(a: &CMatrix, u: &CMatrix, da: usize, db: usize) -> f64 {
    let d = a.rows();
    let r = a.cols();
    let m = u.rows();
    let mut total = 0.0;
    let mut phi = vec![C64::new(0.0, 0.0); d];
    for i in 0..m {
        for (row, slot) in phi.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..r {
                acc += a.at(row, j) * u.at(i, j);
            }
            *slot = acc;
        }
        let p: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        if p < 1e-14 {
            continue;
        }
        let tr_sq = if da <= db {
            let mut tr = 0.0;
            for a1 in 0..da {
                for a2 in 0..da {
                    let mut g = C64::new(0.0, 0.0);
                    for b in 0..db {
                        g += phi[a1 * db + b] * phi[a2 * db + b].conj();
                    }
                    tr += g.norm_sqr();
                }
            }
            tr
        } else {
            let mut tr = 0.0;
            for b1 in 0..db {
                for b2 in 0..db {
                    let mut g = C64::new(0.0, 0.0);
                    for a in 0..da {
                        g += phi[a * db + b1] * phi[a * db + b2].conj();
                    }
                    tr += g.norm_sqr();
                }
            }
            tr
        };
        total += 2.0 * (p - tr_sq / p);
    }
    total
}

/// Central finite-difference Euclidean gradient of the objective in the
/// real and imaginary parts of U.
fn fd_gradient(a: &CMatrix, u: &CMatrix, da: usize, db: usize, h: f64) -> CMatrix {
    let m = u.rows();
    let r = u.cols();
    let mut grad = CMatrix::zeros(m, r);
    let mut probe = u.clone();
    for row in 0..m {
        for col in 0..r {
            let base = u.at(row, col);
            let mut g = C64::new(0.0, 0.0);
            for comp in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                probe.set(row, col, base + comp * h);
                let fp = roof_objective(a, &probe, da, db);
                probe.set(row, col, base - comp * h);
                let fm = roof_objective(a, &probe, da, db);
                g += comp * ((fp - fm) / (2.0 * h));
            }
            probe.set(row, col, base);
            grad.set(row, col, g);
        }
    }
    grad
}

/// Project a Euclidean gradient onto the Stiefel tangent space at U:
/// Z = G - U sym(U^dag G).
fn project_tangent(u: &CMatrix, g: &CMatrix) -> CMatrix {
    let utg = u.dagger().matmul(g);
    let sym = CMatrix::from_fn(utg.rows(), utg.cols(), |r, c| {
        0.5 * (utg.at(r, c) + utg.at(c, r).conj())
    });
    let mut z = g.clone();
    z.add_scaled(&u.matmul(&sym), C64::new(-1.0, 0.0));
    z
}

fn descend_from(
    a: &CMatrix,
    mut u: CMatrix,
    da: usize,
    db: usize,
    opt: &RoofOptions,
) -> (f64, usize) {
    let mut f_u = roof_objective(a, &u, da, db);
    let mut step = 0.1;
    let mut history = vec![f_u];
    let mut iters = 0;
    while iters < opt.max_iters {
        iters += 1;
        let grad = fd_gradient(a, &u, da, db, opt.fd_step);
        let z = project_tangent(&u, &grad);
        if z.frobenius_norm() < opt.grad_tol {
            break;
        }
        let mut improved = false;
        for _ in 0..opt.line_search_tries {
            let mut trial = u.clone();
            trial.add_scaled(&z, C64::new(-step, 0.0));
            let candidate = thin_qr_positive(&trial);
            let f_c = roof_objective(a, &candidate, da, db);
            if f_c < f_u - 1e-14 {
                u = candidate;
                f_u = f_c;
                step *= 1.3;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        history.push(f_u);
        if history.len() > opt.stall_window
            && history[history.len() - 1 - opt.stall_window] - f_u < opt.stall_tol
        {
            break;
        }
    }
    (f_u, iters)
}

/// Convex-roof I-tangle of a bipartite state:
/// tau(rho) = 2 min over ensembles {p_i, psi_i} of
/// sum_i p_i (1 - Tr[(rho_a^i)^2]),
/// approximated by multi-start projected descent over the isometries that
/// mix the eigenensemble. The returned value is an upper bound (local
/// optimization; global optimality is not guaranteed).
pub fn i_tangle_convex_roof(
    rho: &CMatrix,
    da: usize,
    db: usize,
    opt: &RoofOptions,
) -> Result<RoofResult> {
    if da * db != rho.rows() || da < 2 || db < 2 {
        return Err(EntangleError::BadBipartition {
            da,
            db,
            dim: rho.rows(),
        });
    }
    if da > 4 && db > 4 {
        return Err(EntangleError::SideTooLarge { da, db });
    }
    validate_density(rho, None)?;
    let (w, v) = hermitian_eigs(rho)?;
    let kept: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 1e-12)
        .map(|(k, &x)| (x, k))
        .collect();
    let r = kept.len();
    let d = rho.rows();
    if r <= 1 {
        // Pure state: the single-term decomposition is optimal.
        let psi: Vec<C64> = (0..d).map(|row| v.at(row, kept[0].1)).collect();
        return Ok(RoofResult {
            value: pure_tangle(&psi, da, db),
            pure_shortcut: true,
            restart_values: Vec::new(),
            iterations: Vec::new(),
        });
    }
    // A = V_r diag(sqrt(w_r)): columns resolve rho = A A^dag.
    let a = CMatrix::from_fn(d, r, |row, col| {
        v.at(row, kept[col].1) * C64::new(kept[col].0.sqrt(), 0.0)
    });
    let m = (r + opt.extra_columns).min(r * r).max(r);

    let run_start = |s: usize| -> (f64, usize) {
        let u0 = if s == 0 {
            // Eigenensemble embedding.
            CMatrix::from_fn(m, r, |row, col| {
                C64::new(f64::from(u8::from(row == col)), 0.0)
            })
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opt.seed.wrapping_add(s as u64));
            let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
            let z = CMatrix::from_fn(m, r, |_, _| {
                let re = gauss(&mut rng);
                let im = gauss(&mut rng);
                C64::new(re, im)
            });
            thin_qr_positive(&z)
        };
        descend_from(&a, u0, da, db, opt)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<(f64, usize)> = (0..opt.restarts.max(1))
        .into_par_iter()
        .map(run_start)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<(f64, usize)> = (0..opt.restarts.max(1)).map(run_start).collect();

    let value = outcomes
        .iter()
        .map(|&(v, _)| v)
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(RoofResult {
        value,
        pure_shortcut: false,
        restart_values: outcomes.iter().map(|&(v, _)| v).collect(),
        iterations: outcomes.iter().map(|&(_, n)| n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CompositeSpace;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ket_to_rho(psi: &[C64]) -> CMatrix {
        let n = psi.len();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        CMatrix::from_fn(n, n, |r, cc| psi[r] * psi[cc].conj() / (norm * norm))
    }

    /// Basis order |ee>, |eg>, |ge>, |gg> (e = 0, g = 1).
    fn bell_plus() -> CMatrix {
        ket_to_rho(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn werner(p: f64) -> CMatrix {
        // p |Psi-><Psi-| + (1-p) I/4, |Psi-> = (|eg> - |ge>)/sqrt(2).
        let psi_minus = ket_to_rho(&[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let mut rho = CMatrix::identity(4).scale(c((1.0 - p) / 4.0, 0.0));
        rho.add_scaled(&psi_minus, c(p, 0.0));
        rho
    }

    fn random_density(rng: &mut impl Rng, d: usize, rank: usize) -> CMatrix {
        let g = CMatrix::from_fn(d, rank, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let mut rho = g.matmul(&g.dagger());
        let tr = rho.trace().re;
        rho.scale_mut(c(1.0 / tr, 0.0));
        rho
    }

    fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
        let z = CMatrix::from_fn(d, d, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        thin_qr_positive(&z)
    }

    #[test]
    fn bell_state_concurrence_is_one() {
        let rho = bell_plus();
        let got = concurrence(&rho).unwrap();
        assert!((got - 1.0).abs() <= 1e-12, "C = {}", got);
        assert!((tangle_two_qubit(&rho).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn product_state_concurrence_is_zero() {
        let mut rho = CMatrix::zeros(4, 4);
        rho.set(1, 1, c(1.0, 0.0)); // |eg><eg|
        assert_eq!(concurrence(&rho).unwrap(), 0.0);
        // Any diagonal separable state.
        let diag = CMatrix::from_diag(&[0.4, 0.3, 0.2, 0.1]);
        assert_eq!(tangle_two_qubit(&diag).unwrap(), 0.0);
    }

    #[test]
    fn werner_concurrence_closed_form() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
            let expect = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            let got = concurrence(&werner(p)).unwrap();
            assert!(
                (got - expect).abs() <= 1e-10,
                "p = {}: {} vs {}",
                p,
                got,
                expect
            );
        }
    }

    #[test]
    fn concurrence_local_unitary_invariance() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(31);
        for rank in [1, 2, 4] {
            let rho = random_density(&mut rng, 4, rank);
            let base = concurrence(&rho).unwrap();
            for _ in 0..3 {
                let ua = random_unitary(&mut rng, 2);
                let ub = random_unitary(&mut rng, 2);
                let u = crate::linalg::kron(&ua, &ub);
                let rotated = u.matmul(&rho).matmul(&u.dagger());
                let got = concurrence(&rotated).unwrap();
                assert!(
                    (got - base).abs() <= 1e-10,
                    "rank {}: {} vs {}",
                    rank,
                    got,
                    base
                );
            }
        }
    }

    #[test]
    fn concurrence_rejects_bad_input() {
        // Wrong dimension.
        assert!(matches!(
            concurrence(&CMatrix::identity(5)),
            Err(EntangleError::WrongDim { .. })
        ));
        // Wrong trace.
        assert!(matches!(
            concurrence(&CMatrix::identity(4)),
            Err(EntangleError::NotADensityMatrix { .. })
        ));
        // Non-Hermitian.
        let mut m = CMatrix::identity(4).scale(c(0.25, 0.0));
        m.set(0, 1, c(0.3, 0.1));
        assert!(matches!(
            concurrence(&m),
            Err(EntangleError::NotADensityMatrix { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let mut pure = CMatrix::zeros(4, 4);
        pure.set(2, 2, c(1.0, 0.0));
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let half = CMatrix::identity(2).scale(c(0.5, 0.0));
        assert!((von_neumann_entropy(&half).unwrap() - 1.0).abs() < 1e-12);
        let biased = CMatrix::from_diag(&[0.25, 0.75]);
        assert!((von_neumann_entropy(&biased).unwrap() - 0.811278).abs() < 1e-6);
    }

    fn embed_qubit_state(qubit_rho: &CMatrix, n_qubits: usize, n_max: usize) -> DensityMatrix {
        // qubit_rho on the qubit block, vacuum resonator.
        let space = CompositeSpace::qubits_and_resonator(n_qubits, n_max);
        let mut vac = CMatrix::zeros(n_max + 1, n_max + 1);
        vac.set(0, 0, c(1.0, 0.0));
        let full = crate::linalg::kron(qubit_rho, &vac);
        DensityMatrix::new(full, space).unwrap()
    }

    #[test]
    fn pairwise_tangles_product_and_bell() {
        // Fully product three-qubit state: all pairs zero.
        let mut product = CMatrix::zeros(8, 8);
        product.set(0, 0, c(1.0, 0.0));
        let dm = embed_qubit_state(&product, 3, 2);
        for (_, t) in pairwise_tangles(&dm).unwrap() {
            assert!(t.abs() < 1e-12);
        }
        // (|eg> + |ge>)/sqrt(2) on qubits 1,2; qubit 3 in |g>.
        let mut psi = vec![c(0.0, 0.0); 8];
        // |e g g> index: e=0,g=1,g=1 -> 0*4 + 1*2 + 1 = 3
        // |g e g| index: 1*4 + 0*2 + 1 = 5
        psi[3] = c(1.0, 0.0);
        psi[5] = c(1.0, 0.0);
        let dm = embed_qubit_state(&ket_to_rho(&psi), 3, 2);
        let pairs = pairwise_tangles(&dm).unwrap();
        for ((i, j), t) in pairs {
            if (i, j) == (0, 1) {
                assert!((t - 1.0).abs() < 1e-10, "pair (0,1): {}", t);
            } else {
                assert!(t < 1e-10, "pair ({},{}): {}", i, j, t);
            }
        }
    }

    #[test]
    fn pairwise_tangles_w_state() {
        // W = (|egg> + |geg> + |gge>)/sqrt(3): every pair tangle 4/9.
        let mut psi = vec![c(0.0, 0.0); 8];
        psi[3] = c(1.0, 0.0); // |egg>
        psi[5] = c(1.0, 0.0); // |geg>
        psi[6] = c(1.0, 0.0); // |gge>
        let dm = embed_qubit_state(&ket_to_rho(&psi), 3, 1);
        for ((i, j), t) in pairwise_tangles(&dm).unwrap() {
            assert!(
                (t - 4.0 / 9.0).abs() <= 1e-9,
                "pair ({},{}): {}",
                i,
                j,
                t
            );
        }
    }

    #[test]
    fn pairwise_needs_two_qubits() {
        let space = CompositeSpace::qubits_and_resonator(1, 2);
        let mut m = CMatrix::zeros(6, 6);
        m.set(0, 0, c(1.0, 0.0));
        let dm = DensityMatrix::new(m, space).unwrap();
        assert!(matches!(
            pairwise_tangles(&dm),
            Err(EntangleError::TooFewQubits { .. })
        ));
    }

    #[test]
    fn two_level_reduce_exact_on_low_fock() {
        // |e,1> with n_max = 4: fully inside the kept subspace.
        let space = CompositeSpace::qubits_and_resonator(1, 4);
        let mut m = CMatrix::zeros(10, 10);
        m.set(1, 1, c(1.0, 0.0)); // qubit e (0), fock 1 -> index 0*5+1
        let dm = DensityMatrix::new(m, space).unwrap();
        let red = effective_two_level_reduce(&dm, 0, 0.05).unwrap();
        assert!(red.leakage.abs() < 1e-12);
        assert!(!red.flagged);
        // |1,e> is index 2 of the reduced basis |0,e>,|0,g>,|1,e>,|1,g>.
        assert!((red.matrix.at(2, 2) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_level_reduce_full_leakage_rejected() {
        // |g,2>: resonator entirely outside span{|0>,|1>}.
        let space = CompositeSpace::qubits_and_resonator(1, 3);
        let mut m = CMatrix::zeros(8, 8);
        m.set(4 + 2, 4 + 2, c(1.0, 0.0)); // g block offset 4, fock 2
        let dm = DensityMatrix::new(m, space).unwrap();
        assert!(matches!(
            effective_two_level_reduce(&dm, 0, 0.05),
            Err(EntangleError::FullLeakage { .. })
        ));
    }

    #[test]
    fn two_level_reduce_flags_partial_leakage() {
        // Mixture with 10% weight on |g,3>: leakage 0.1 > bound 0.05.
        let space = CompositeSpace::qubits_and_resonator(1, 3);
        let mut m = CMatrix::zeros(8, 8);
        m.set(0, 0, c(0.9, 0.0)); // |e,0>
        m.set(4 + 3, 4 + 3, c(0.1, 0.0)); // |g,3>
        let dm = DensityMatrix::new(m, space).unwrap();
        let red = effective_two_level_reduce(&dm, 0, 0.05).unwrap();
        assert!((red.leakage - 0.1).abs() < 1e-12);
        assert!(red.flagged);
        assert!((red.matrix.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roof_pure_states_exact() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(17);
        let opt = RoofOptions::default();
        for _ in 0..5 {
            let psi: Vec<C64> = (0..4)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let rho = ket_to_rho(&psi);
            let roof = i_tangle_convex_roof(&rho, 2, 2, &opt).unwrap();
            assert!(roof.pure_shortcut);
            let expect = tangle_two_qubit(&rho).unwrap();
            assert!(
                (roof.value - expect).abs() <= 1e-10,
                "{} vs {}",
                roof.value,
                expect
            );
        }
    }

    #[test]
    fn roof_matches_wootters_on_mixed_states() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(23);
        let opt = RoofOptions::default();
        for k in 0..4 {
            let rho = random_density(&mut rng, 4, 1 + k % 4);
            let roof = i_tangle_convex_roof(&rho, 2, 2, &opt).unwrap();
            let expect = tangle_two_qubit(&rho).unwrap();
            assert!(
                (roof.value - expect).abs() <= 2e-3,
                "state {}: roof {} vs wootters {}",
                k,
                roof.value,
                expect
            );
        }
    }

    #[test]
    fn roof_zero_on_separable_mixture() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(5);
        let mut rho = CMatrix::zeros(4, 4);
        for _ in 0..3 {
            let a: Vec<C64> = (0..2)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let b: Vec<C64> = (0..2)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let prod: Vec<C64> = (0..4)
                .map(|idx| a[idx / 2] * b[idx % 2] / (na * nb))
                .collect();
            let term = CMatrix::from_fn(4, 4, |r, cc| prod[r] * prod[cc].conj());
            rho.add_scaled(&term, c(1.0 / 3.0, 0.0));
        }
        let roof = i_tangle_convex_roof(&rho, 2, 2, &RoofOptions::default()).unwrap();
        assert!(roof.value <= 1e-5, "separable roof = {}", roof.value);
    }

    #[test]
    fn roof_upper_bounded_by_mixture_linear_entropy() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(41);
        let rho = random_density(&mut rng, 4, 3);
        // Naive linear-entropy value on the mixture itself.
        let space = CompositeSpace::new(vec![2, 2]);
        let ra = partial_trace(&rho, &space, &[0]).unwrap();
        let naive = 2.0 * (1.0 - ra.matmul(&ra).trace().re);
        let roof = i_tangle_convex_roof(&rho, 2, 2, &RoofOptions::default()).unwrap();
        assert!(roof.value <= naive + 1e-9);
        // The eigenensemble start bounds the result from above too.
        assert!(roof.value <= roof.restart_values[0] + 1e-12);
    }

    #[test]
    fn roof_monotone_under_restarts() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(53);
        let rho = random_density(&mut rng, 4, 2);
        let mut opt = RoofOptions {
            restarts: 3,
            ..RoofOptions::default()
        };
        let few = i_tangle_convex_roof(&rho, 2, 2, &opt).unwrap();
        opt.restarts = 8;
        let many = i_tangle_convex_roof(&rho, 2, 2, &opt).unwrap();
        // Same seeds per start index: more restarts can only improve.
        assert!(many.value <= few.value + 1e-15);
        assert_eq!(&many.restart_values[..3], &few.restart_values[..]);
    }

    #[test]
    fn roof_bad_bipartition_rejected() {
        let rho = CMatrix::identity(4).scale(c(0.25, 0.0));
        assert!(matches!(
            i_tangle_convex_roof(&rho, 3, 2, &RoofOptions::default()),
            Err(EntangleError::BadBipartition { .. })
        ));
        let big = CMatrix::identity(25).scale(c(1.0 / 25.0, 0.0));
        assert!(matches!(
            i_tangle_convex_roof(&big, 5, 5, &RoofOptions::default()),
            Err(EntangleError::SideTooLarge { .. })
        ));
    }

    #[test]
    fn bipartition_spec_validation() {
        let valid = BipartitionSpec {
            side_a: vec![0],
            side_b: vec![1, 2],
            reduction: Reduction::None,
        };
        assert!(valid.validate(3).is_ok());
        for bad in [
            BipartitionSpec {
                side_a: vec![],
                side_b: vec![1],
                reduction: Reduction::None,
            },
            BipartitionSpec {
                side_a: vec![0, 1],
                side_b: vec![1],
                reduction: Reduction::None,
            },
            BipartitionSpec {
                side_a: vec![0],
                side_b: vec![3],
                reduction: Reduction::None,
            },
        ] {
            assert!(matches!(
                bad.validate(3),
                Err(EntangleError::BadPartitionSets)
            ));
        }
        // Two-level reduction without the resonator in the partition.
        let no_res = BipartitionSpec {
            side_a: vec![0],
            side_b: vec![1],
            reduction: Reduction::ResonatorTwoLevel,
        };
        assert!(matches!(
            no_res.validate(3),
            Err(EntangleError::ReductionNeedsResonator)
        ));
    }

    #[test]
    fn bipartition_i_tangle_bell_pair_any_grouping() {
        // (|eg> + |ge>)/sqrt(2) on the two qubits, vacuum resonator.
        let mut psi = vec![c(0.0, 0.0); 4];
        psi[1] = c(1.0, 0.0);
        psi[2] = c(1.0, 0.0);
        let dm = embed_qubit_state(&ket_to_rho(&psi), 2, 2);
        let opt = RoofOptions::default();
        for (a, b) in [(vec![0], vec![1]), (vec![1], vec![0])] {
            let spec = BipartitionSpec {
                side_a: a,
                side_b: b,
                reduction: Reduction::None,
            };
            let roof = i_tangle_bipartition(&dm, &spec, &opt).unwrap();
            assert!((roof.value - 1.0).abs() <= 1e-9, "value {}", roof.value);
        }
        // Qubit 0 against qubit 1 + resonator: global state is pure, so the
        // roof equals the pure-state linear entropy of qubit 0 (also 1).
        let spec = BipartitionSpec {
            side_a: vec![0],
            side_b: vec![1, 2],
            reduction: Reduction::None,
        };
        let roof = i_tangle_bipartition(&dm, &spec, &opt).unwrap();
        assert!(roof.pure_shortcut);
        assert!((roof.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn bipartition_two_level_reduction_route() {
        // |e,1> - |g,0> style single-qubit entangled state with the
        // resonator: build (|e,0> + |g,1>)/sqrt(2) for one qubit, n_max = 3.
        let space = CompositeSpace::qubits_and_resonator(1, 3);
        let mut psi = vec![c(0.0, 0.0); 8];
        psi[0] = c(1.0, 0.0); // |e, 0>
        psi[4 + 1] = c(1.0, 0.0); // |g, 1>
        let dm = DensityMatrix::new(ket_to_rho(&psi), space).unwrap();
        let spec = BipartitionSpec {
            side_a: vec![0],
            side_b: vec![1],
            reduction: Reduction::ResonatorTwoLevel,
        };
        let roof = i_tangle_bipartition(&dm, &spec, &RoofOptions::default()).unwrap();
        assert!((roof.value - 1.0).abs() <= 1e-9, "value {}", roof.value);
    }

    #[test]
    fn roof_2x3_bipartition_runs() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(9);
        let rho = random_density(&mut rng, 6, 2);
        let roof = i_tangle_convex_roof(&rho, 2, 3, &RoofOptions::default()).unwrap();
        assert!(roof.value >= 0.0);
        // All starts should agree on this small landscape within tolerance.
        let spread = roof
            .restart_values
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v))
            - roof.value;
        assert!(spread < 0.2, "restart spread {}", spread);
    }
}
