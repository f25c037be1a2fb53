//! Master-equation integration in the Schrödinger picture.
//!
//! Two independent methods are provided for cross-validation: `Direct`
//! adaptive Runge-Kutta integration of the right-hand side, and
//! `Exponential` propagation by the matrix exponential of the vectorized
//! generator. Physicality (trace, Hermiticity, positivity) is monitored at
//! every grid point and never silently repaired: violations abort the run.

use crate::linalg::{hermitian_eigs, kron, CMatrix, CompositeSpace, C64};
use crate::model::{CollapseSet, ModelParams};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("dimension mismatch: state is {state}, operator is {op}")]
    DimMismatch { state: usize, op: usize },
    #[error("time grid must start at 0 and be strictly increasing")]
    BadGrid,
    #[error(
        "state is not a density matrix: trace deviation {trace_dev:.3e}, \
         hermiticity defect {herm_defect:.3e}, min eigenvalue {min_eig:.3e}"
    )]
    NotADensityMatrix {
        trace_dev: f64,
        herm_defect: f64,
        min_eig: f64,
    },
    #[error(
        "physicality violated at t = {t}: trace deviation {trace_dev:.3e} \
         (abort above {trace_bound:.1e}), min eigenvalue {min_eig:.3e} \
         (abort below -{eig_bound:.1e}); raise n_max or tighten tolerances"
    )]
    PhysicalityViolation {
        t: f64,
        trace_dev: f64,
        min_eig: f64,
        trace_bound: f64,
        eig_bound: f64,
    },
    #[error(
        "exponential method refused: dim = {dim} exceeds the memory bound \
         (dim <= {bound}); the vectorized generator would be {sq} x {sq}. \
         Use the direct method or raise `exp_dim_bound`"
    )]
    ExponentialRefused { dim: usize, bound: usize, sq: usize },
    #[error("step size underflow at t = {t}: error control cannot reach the tolerance")]
    StepUnderflow { t: f64 },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, EvolveError>;

/// Integration method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Adaptive embedded Runge-Kutta 5(4) on the right-hand side.
    Direct,
    /// Matrix exponential of the vectorized generator between grid points.
    Exponential,
}

/// Tunable evolution settings; `Default` gives the documented defaults.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Per-component absolute error tolerance of the step controller.
    pub atol: f64,
    /// Initial step size (in the same dimensionless time unit as the grid).
    pub initial_step: f64,
    /// Keep every grid-point state in the trajectory.
    pub store_states: bool,
    /// Abort when |Tr rho - 1| exceeds this.
    pub trace_abort: f64,
    /// Abort when the minimum eigenvalue drops below minus this.
    pub min_eig_abort: f64,
    /// Refuse the exponential method above this Hilbert-space dimension.
    pub exp_dim_bound: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            atol: 1e-9,
            initial_step: 1e-3,
            store_states: true,
            trace_abort: 1e-6,
            min_eig_abort: 1e-5,
            exp_dim_bound: 64,
        }
    }
}

/// A density matrix tied to its tensor-product space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    pub space: CompositeSpace,
}

/// Validation tolerances for [`DensityMatrix::new`].
pub const DM_HERM_TOL: f64 = 1e-9;
pub const DM_TRACE_TOL: f64 = 1e-8;
pub const DM_EIG_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Validate and wrap: Hermitian within 1e-9, unit trace within 1e-8,
    /// minimum eigenvalue >= -1e-8.
    pub fn new(matrix: CMatrix, space: CompositeSpace) -> Result<Self> {
        if matrix.rows() != space.total_dim() || !matrix.is_square() {
            return Err(EvolveError::DimMismatch {
                state: matrix.rows(),
                op: space.total_dim(),
            });
        }
        let herm_defect = matrix.hermiticity_defect();
        let trace_dev = (matrix.trace() - C64::new(1.0, 0.0)).norm();
        let min_eig = min_eigenvalue(&matrix);
        if herm_defect > DM_HERM_TOL || trace_dev > DM_TRACE_TOL || min_eig < -DM_EIG_TOL {
            return Err(EvolveError::NotADensityMatrix {
                trace_dev,
                herm_defect,
                min_eig,
            });
        }
        Ok(DensityMatrix { matrix, space })
    }
}

/// Smallest eigenvalue of the Hermitian part of m.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let n = m.rows();
    let sym = CMatrix::from_fn(n, n, |r, c| 0.5 * (m.at(r, c) + m.at(c, r).conj()));
    let (w, _) = hermitian_eigs(&sym).expect("symmetrized matrix is Hermitian");
    w.into_iter().fold(f64::INFINITY, f64::min)
}

/// Per-grid-point physicality diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct PointDiagnostics {
    pub t: f64,
    pub trace_dev: f64,
    pub herm_defect: f64,
    pub min_eig: f64,
}

/// Result of an evolution run: grid times, states (when stored), and
/// diagnostics aligned one-to-one with the times.
#[derive(Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub diagnostics: Vec<PointDiagnostics>,
    /// Set by the cutoff-convergence wrapper; `None` when not checked.
    pub cutoff_converged: Option<bool>,
    /// Number of right-hand-side evaluations (direct method).
    pub rhs_evals: u64,
}

/// Summary of a trajectory's physicality.
#[derive(Clone, Copy, Debug)]
pub struct PhysicalityReport {
    pub max_trace_dev: f64,
    pub max_herm_defect: f64,
    pub min_eigenvalue: f64,
    pub cutoff_converged: Option<bool>,
}

/// Worst-case physicality over the whole run.
pub fn physicality_report(traj: &Trajectory) -> PhysicalityReport {
    let mut report = PhysicalityReport {
        max_trace_dev: 0.0,
        max_herm_defect: 0.0,
        min_eigenvalue: f64::INFINITY,
        cutoff_converged: traj.cutoff_converged,
    };
    for d in &traj.diagnostics {
        report.max_trace_dev = report.max_trace_dev.max(d.trace_dev);
        report.max_herm_defect = report.max_herm_defect.max(d.herm_defect);
        report.min_eigenvalue = report.min_eigenvalue.min(d.min_eig);
    }
    report
}

/// Master-equation right-hand side, written exactly as the sum of the
/// commutator and the weighted Lindblad channels:
/// drho/dt = -i[H, rho] + sum_k w_k (J_k rho J_k^dag - {J_k^dag J_k, rho}/2).
///
/// The output is Hermitian and traceless (within round-off).
pub fn rhs(rho: &CMatrix, h: &CMatrix, d: &CollapseSet) -> Result<CMatrix> {
    if rho.rows() != h.rows() || !rho.is_square() || !h.is_square() {
        return Err(EvolveError::DimMismatch {
            state: rho.rows(),
            op: h.rows(),
        });
    }
    let mut out = CMatrix::zeros(rho.rows(), rho.cols());
    let i = C64::new(0.0, 1.0);
    crate::linalg::gemm_acc(-i, h, rho, C64::new(0.0, 0.0), &mut out);
    crate::linalg::gemm_acc(i, rho, h, C64::new(1.0, 0.0), &mut out);
    let mut tmp = CMatrix::zeros(rho.rows(), rho.cols());
    for ch in &d.channels {
        if ch.op.rows() != rho.rows() {
            return Err(EvolveError::DimMismatch {
                state: rho.rows(),
                op: ch.op.rows(),
            });
        }
        let w = C64::new(ch.weight, 0.0);
        // + w J rho J^dag
        crate::linalg::gemm_acc(C64::new(1.0, 0.0), &ch.op, rho, C64::new(0.0, 0.0), &mut tmp);
        crate::linalg::gemm_acc(w, &tmp, &ch.op.dagger(), C64::new(1.0, 0.0), &mut out);
        // - w/2 {J^dag J, rho}
        let half = C64::new(-0.5 * ch.weight, 0.0);
        crate::linalg::gemm_acc(half, &ch.op_dag_op, rho, C64::new(1.0, 0.0), &mut out);
        crate::linalg::gemm_acc(half, rho, &ch.op_dag_op, C64::new(1.0, 0.0), &mut out);
    }
    Ok(out)
}

/// Precomputed generator pieces for the hot path: the drift
/// K = -iH - (1/2) sum_k w_k J_k^dag J_k lets the right-hand side be
/// evaluated as K rho + rho K^dag + sum_k w_k J_k rho J_k^dag.
pub(crate) struct Generator {
    drift: CMatrix,
    drift_dag: CMatrix,
    jumps: Vec<(f64, CMatrix, CMatrix)>, // (weight, J, J^dag)
    dim: usize,
}

impl Generator {
    pub(crate) fn new(h: &CMatrix, d: &CollapseSet) -> Generator {
        let n = h.rows();
        let mut drift = h.scale(C64::new(0.0, -1.0));
        for ch in &d.channels {
            drift.add_scaled(&ch.op_dag_op, C64::new(-0.5 * ch.weight, 0.0));
        }
        let drift_dag = drift.dagger();
        let jumps = d
            .channels
            .iter()
            .map(|ch| (ch.weight, ch.op.clone(), ch.op.dagger()))
            .collect();
        Generator {
            drift,
            drift_dag,
            jumps,
            dim: n,
        }
    }

    /// out = K rho + rho K^dag + sum w J rho J^dag, using tmp as workspace.
    pub(crate) fn apply(&self, rho: &CMatrix, out: &mut CMatrix, tmp: &mut CMatrix) {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        crate::linalg::gemm_acc(one, &self.drift, rho, zero, out);
        crate::linalg::gemm_acc(one, rho, &self.drift_dag, one, out);
        for (w, j, j_dag) in &self.jumps {
            crate::linalg::gemm_acc(one, j, rho, zero, tmp);
            crate::linalg::gemm_acc(C64::new(*w, 0.0), tmp, j_dag, one, out);
        }
    }
}

/// The vectorized generator L with row-major vectorization
/// vec(A X B) = (A kron B^T) vec(X):
/// L = -i(H kron I - I kron H^T)
///   + sum_k w_k [ J kron conj(J) - (J^dag J kron I + I kron (J^dag J)^T)/2 ].
pub fn vectorized_generator(h: &CMatrix, d: &CollapseSet) -> CMatrix {
    let n = h.rows();
    let eye = CMatrix::identity(n);
    let i = C64::new(0.0, 1.0);
    let mut l = kron(h, &eye).scale(-i);
    l.add_scaled(&kron(&eye, &h.transpose()), i);
    for ch in &d.channels {
        l.add_scaled(&kron(&ch.op, &ch.op.conj()), C64::new(ch.weight, 0.0));
        let half = C64::new(-0.5 * ch.weight, 0.0);
        l.add_scaled(&kron(&ch.op_dag_op, &eye), half);
        l.add_scaled(&kron(&eye, &ch.op_dag_op.transpose()), half);
    }
    l
}

// Dormand-Prince 5(4) tableau (FSAL: the 7th stage is the next step's 1st).
// The generator is time-independent, so the stage-time coefficients c_s are
// never consulted.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (identical to the last tableau row: FSAL).
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Dopri5 {
    gen: Generator,
    stages: Vec<CMatrix>,
    work: CMatrix,
    tmp: CMatrix,
    atol: f64,
    h: f64,
    first_stage_fresh: bool,
    rhs_evals: u64,
}

impl Dopri5 {
    fn new(gen: Generator, atol: f64, h0: f64) -> Dopri5 {
        let n = gen.dim;
        Dopri5 {
            gen,
            stages: (0..7).map(|_| CMatrix::zeros(n, n)).collect(),
            work: CMatrix::zeros(n, n),
            tmp: CMatrix::zeros(n, n),
            atol,
            h: h0,
            first_stage_fresh: false,
            rhs_evals: 0,
        }
    }

    /// Advance y from t_from to t_to with adaptive steps.
    fn integrate(&mut self, y: &mut CMatrix, t_from: f64, t_to: f64) -> Result<()> {
        let mut t = t_from;
        if !self.first_stage_fresh {
            let (gen, tmp) = (&self.gen, &mut self.tmp);
            gen.apply(y, &mut self.stages[0], tmp);
            self.rhs_evals += 1;
            self.first_stage_fresh = true;
        }
        while t < t_to {
            let final_step = self.h >= t_to - t;
            let h = if final_step { t_to - t } else { self.h };
            // Stages 2..=7 (stage 1 is carried over: FSAL).
            #[allow(clippy::needless_range_loop)]
            for s in 1..7 {
                self.work.clone_from(y);
                for (j, stage) in self.stages.iter().take(s).enumerate() {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        self.work.add_scaled(stage, C64::new(h * a, 0.0));
                    }
                }
                let (gen, tmp) = (&self.gen, &mut self.tmp);
                let (_, tail) = self.stages.split_at_mut(s);
                gen.apply(&self.work, &mut tail[0], tmp);
                self.rhs_evals += 1;
            }
            // Error estimate: h * sum (b5 - b4)_s k_s. With b5 = the last
            // tableau row, stage 7 already evaluates at the 5th-order result.
            let mut err = 0.0f64;
            let n2 = y.rows() * y.cols();
            for idx in 0..n2 {
                let mut e = C64::new(0.0, 0.0);
                for s in 0..7 {
                    let db = DP_B5[s] - DP_B4[s];
                    if db != 0.0 {
                        e += C64::new(h * db, 0.0) * self.stages[s].data()[idx];
                    }
                }
                err = err.max(e.norm());
            }
            // Error-per-unit-time control: the tolerance bounds the local
            // error density err/h, so the accumulated defect over a run of
            // length T stays near atol * T instead of atol * n_steps.
            let err = err / h;
            if err <= self.atol {
                // Accept: y += h sum b5_s k_s, which equals the stage-7 input.
                for (s, stage) in self.stages.iter().enumerate() {
                    if DP_B5[s] != 0.0 {
                        y.add_scaled(stage, C64::new(h * DP_B5[s], 0.0));
                    }
                }
                t = if final_step { t_to } else { t + h };
                self.stages.swap(0, 6); // FSAL: k7 = f(t+h, y_new) = next k1.
                let grow = if err == 0.0 {
                    5.0
                } else {
                    // err/h ~ C h^4 for the embedded 4th-order estimate.
                    (0.9 * (self.atol / err).powf(0.25)).clamp(0.2, 5.0)
                };
                // When h was clamped to land on t_to, don't let the clamp
                // shrink the controller's step estimate.
                self.h = if final_step {
                    self.h.max(h * grow)
                } else {
                    h * grow
                };
            } else {
                let shrink = (0.9 * (self.atol / err).powf(0.25)).clamp(0.2, 1.0);
                self.h = h * shrink;
                if self.h < 1e-300 {
                    return Err(EvolveError::StepUnderflow { t });
                }
            }
        }
        Ok(())
    }
}

/// Evolve `rho0` under the model's master equation, sampling on `grid`.
///
/// `grid` must start at 0 and be strictly increasing. Physicality is
/// checked at every grid point; a trace deviation above
/// `opts.trace_abort` or a minimum eigenvalue below `-opts.min_eig_abort`
/// aborts with a diagnostic rather than repairing the state.
pub fn evolve(
    rho0: &DensityMatrix,
    p: &ModelParams,
    grid: &[f64],
    method: Method,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let h = p.hamiltonian();
    let d = crate::model::build_collapse_set(p);
    evolve_raw(rho0, &h, &d, grid, method, opts)
}

/// Lower-level evolution entry taking the Hamiltonian and dissipator
/// explicitly (used for cross-validation fixtures that bypass ModelParams).
pub fn evolve_raw(
    rho0: &DensityMatrix,
    h: &CMatrix,
    d: &CollapseSet,
    grid: &[f64],
    method: Method,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvolveError::BadGrid);
    }
    if rho0.matrix.rows() != h.rows() {
        return Err(EvolveError::DimMismatch {
            state: rho0.matrix.rows(),
            op: h.rows(),
        });
    }
    let dim = h.rows();
    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        states: Vec::new(),
        diagnostics: Vec::with_capacity(grid.len()),
        cutoff_converged: None,
        rhs_evals: 0,
    };

    let record = |traj: &mut Trajectory, t: f64, state: &CMatrix| -> Result<()> {
        let trace_dev = (state.trace() - C64::new(1.0, 0.0)).norm();
        let herm_defect = state.hermiticity_defect();
        let min_eig = min_eigenvalue(state);
        traj.times.push(t);
        traj.diagnostics.push(PointDiagnostics {
            t,
            trace_dev,
            herm_defect,
            min_eig,
        });
        if opts.store_states {
            traj.states.push(state.clone());
        }
        if trace_dev > opts.trace_abort || min_eig < -opts.min_eig_abort {
            return Err(EvolveError::PhysicalityViolation {
                t,
                trace_dev,
                min_eig,
                trace_bound: opts.trace_abort,
                eig_bound: opts.min_eig_abort,
            });
        }
        Ok(())
    };

    match method {
        Method::Direct => {
            let mut y = rho0.matrix.clone();
            record(&mut traj, grid[0], &y)?;
            let mut stepper = Dopri5::new(Generator::new(h, d), opts.atol, opts.initial_step);
            for w in grid.windows(2) {
                stepper.integrate(&mut y, w[0], w[1])?;
                record(&mut traj, w[1], &y)?;
            }
            traj.rhs_evals = stepper.rhs_evals;
        }
        Method::Exponential => {
            if dim > opts.exp_dim_bound {
                return Err(EvolveError::ExponentialRefused {
                    dim,
                    bound: opts.exp_dim_bound,
                    sq: dim * dim,
                });
            }
            let l = vectorized_generator(h, d);
            let mut propagators: HashMap<u64, CMatrix> = HashMap::new();
            let mut vec_state =
                CMatrix::from_row_slice(dim * dim, 1, rho0.matrix.data());
            record(&mut traj, grid[0], &rho0.matrix)?;
            for w in grid.windows(2) {
                let dt = w[1] - w[0];
                let prop = match propagators.entry(dt.to_bits()) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(crate::linalg::expm(&l.scale(C64::new(dt, 0.0))))
                    }
                };
                vec_state = prop.matmul(&vec_state);
                let state = CMatrix::from_row_slice(dim, dim, vec_state.data());
                record(&mut traj, w[1], &state)?;
            }
        }
    }
    Ok(traj)
}
