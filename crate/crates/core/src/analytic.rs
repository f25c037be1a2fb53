//! Closed-form references used to cross-validate the main pipeline: the
//! literal closed-form tangle expression for the damped single-qubit case, an
//! independently integrated single-excitation oracle, and an eigenvalue-route
//! concurrence that shares no code path with the entanglement module's
//! square-root construction.

use crate::linalg::{general_eigenvalues, CMatrix, C64};
use crate::model::ModelParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("parameter {name} must be non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("oracle requires {name} = 0, got {value}")]
    UnsupportedRate { name: &'static str, value: f64 },
    #[error("oracle is defined for exactly one qubit, got {got}")]
    WrongQubitCount { got: usize },
    #[error("time grid must start at 0 and be strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Arguments of the closed-form damped tangle expression.
#[derive(Clone, Copy, Debug)]
pub struct Eq4Params {
    /// Dimensionless time omega*t (>= 0).
    pub omega_t: f64,
    /// Resonator decay in coupling units, kappa/omega (>= 0).
    pub kappa_over_omega: f64,
}

impl Eq4Params {
    pub fn new(omega_t: f64, kappa_over_omega: f64) -> Result<Self> {
        // NaN is rejected along with negative values.
        if omega_t.is_nan() || omega_t < 0.0 {
            return Err(AnalyticError::NegativeParameter {
                name: "omega_t",
                value: omega_t,
            });
        }
        if kappa_over_omega.is_nan() || kappa_over_omega < 0.0 {
            return Err(AnalyticError::NegativeParameter {
                name: "kappa_over_omega",
                value: kappa_over_omega,
            });
        }
        Ok(Eq4Params {
            omega_t,
            kappa_over_omega,
        })
    }
}

/// Literal closed-form tangle for the damped resonant single-qubit case:
///
/// max[0, sin(2 omega t) * (2 e^{-kappa t} + e^{-3 kappa t})]
///
/// (an equivalent cosh/sinh combination collapses to the two decaying
/// exponentials). Evaluated exactly as written — no renormalization: the
/// amplitude reaches 3 at kappa = 0, exceeding the tangle's defined range,
/// so only its structure (zeros, clamped intervals, envelope decay) is
/// meaningful for comparisons.
pub fn eq4_tangle(p: Eq4Params) -> f64 {
    let kt = p.kappa_over_omega * p.omega_t;
    let envelope = 2.0 * (-kt).exp() + (-3.0 * kt).exp();
    ((2.0 * p.omega_t).sin() * envelope).max(0.0)
}

/// Concurrence by the eigenvalue route: the square roots of the eigenvalues
/// of the (non-Hermitian) product rho * rho_tilde, sorted descending; the
/// result is max(0, l1 - l2 - l3 - l4). This is the independent reference
/// implementation against which the pipeline's Hermitian square-root
/// construction is validated; it deliberately shares none of that code.
///
/// Spectrum entries below 1e-14 of the largest are exact-zero round-off and
/// are dropped before the square root (which would otherwise amplify them to
/// the 1e-9 scale and bias the alternating sum).
pub fn reference_concurrence(rho: &CMatrix) -> Result<f64> {
    assert_eq!(rho.rows(), 4, "reference concurrence is a two-qubit measure");
    let mut yy = CMatrix::zeros(4, 4);
    yy.set(0, 3, C64::new(-1.0, 0.0));
    yy.set(1, 2, C64::new(1.0, 0.0));
    yy.set(2, 1, C64::new(1.0, 0.0));
    yy.set(3, 0, C64::new(-1.0, 0.0));
    let rho_tilde = yy.matmul(&rho.conj()).matmul(&yy);
    let eigs = general_eigenvalues(&rho.matmul(&rho_tilde))?;
    // The product has real non-negative spectrum up to round-off.
    let top = eigs.iter().map(|z| z.re).fold(0.0f64, f64::max);
    let floor = top * 1e-14;
    let mut lambda: Vec<f64> = eigs
        .iter()
        .map(|z| if z.re < floor { 0.0 } else { z.re.sqrt() })
        .collect();
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let c = lambda[0] - lambda[1] - lambda[2] - lambda[3];
    Ok(c.clamp(0.0, 1.0))
}

/// Output of [`single_excitation_oracle`]: per grid point, the qubit-resonator
/// tangle and the populations of the three sector states, ordered
/// [upper qubit level with 0 phonons, lower level with 1 phonon,
/// lower level with 0 phonons] in the dressed two-level basis.
#[derive(Clone, Debug)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub tangle: Vec<f64>,
    pub populations: Vec<[f64; 3]>,
}

/// Absolute accuracy target of the oracle's embedded integrator.
const ORACLE_TOL: f64 = 1e-12;

fn sector_rhs(h: &CMatrix, weight: f64, rho: &CMatrix) -> CMatrix {
    // -i[H, rho] + w (J rho J^dag - {J^dag J, rho}/2) with J = |l,0><l,1|
    // (sector indices: J has its only entry at (2, 1), J^dag J at (1, 1)).
    let i = C64::new(0.0, 1.0);
    let mut out = h.matmul(rho).scale(-i);
    out.add_scaled(&rho.matmul(h), i);
    if weight > 0.0 {
        // J rho J^dag contributes only to the (2,2) element.
        let mut jump = CMatrix::zeros(3, 3);
        jump.set(2, 2, rho.at(1, 1) * weight);
        out.add_scaled(&jump, C64::new(1.0, 0.0));
        // anticommutator {J^dag J, rho}/2 scales row 1 and column 1.
        let half = C64::new(-0.5 * weight, 0.0);
        let mut anti = CMatrix::zeros(3, 3);
        for k in 0..3 {
            anti.set(1, k, rho.at(1, k));
            anti.set(k, 1, anti.at(k, 1) + rho.at(k, 1));
        }
        out.add_scaled(&anti, half);
    }
    out
}

fn rk4_fixed(h: &CMatrix, weight: f64, rho: &CMatrix, dt: f64, steps: usize) -> CMatrix {
    let mut y = rho.clone();
    let hstep = dt / steps as f64;
    for _ in 0..steps {
        let k1 = sector_rhs(h, weight, &y);
        let mut y2 = y.clone();
        y2.add_scaled(&k1, C64::new(0.5 * hstep, 0.0));
        let k2 = sector_rhs(h, weight, &y2);
        let mut y3 = y.clone();
        y3.add_scaled(&k2, C64::new(0.5 * hstep, 0.0));
        let k3 = sector_rhs(h, weight, &y3);
        let mut y4 = y.clone();
        y4.add_scaled(&k3, C64::new(hstep, 0.0));
        let k4 = sector_rhs(h, weight, &y4);
        let sixth = hstep / 6.0;
        y.add_scaled(&k1, C64::new(sixth, 0.0));
        y.add_scaled(&k2, C64::new(2.0 * sixth, 0.0));
        y.add_scaled(&k3, C64::new(2.0 * sixth, 0.0));
        y.add_scaled(&k4, C64::new(sixth, 0.0));
    }
    y
}

/// Integrate one grid interval with classic RK4 under step-doubling control:
/// refine until two successive resolutions agree to `ORACLE_TOL`.
fn integrate_interval(h: &CMatrix, weight: f64, rho: &CMatrix, dt: f64, scale: f64) -> CMatrix {
    let mut steps = ((dt * scale).ceil() as usize).max(4);
    let mut coarse = rk4_fixed(h, weight, rho, dt, steps);
    for _ in 0..16 {
        steps *= 2;
        let fine = rk4_fixed(h, weight, rho, dt, steps);
        let mut diff = fine.clone();
        diff.add_scaled(&coarse, C64::new(-1.0, 0.0));
        if diff.max_abs() <= ORACLE_TOL {
            return fine;
        }
        coarse = fine;
    }
    coarse
}

/// Map a sector density matrix (basis: upper/0, lower/1, lower/0) into the
/// four-dimensional qubit-resonator basis |0,u>, |0,l>, |1,u>, |1,l>
/// (resonator level first). The unpopulated |1,u> level stays zero.
fn embed_sector(rho: &CMatrix) -> CMatrix {
    let map = [0usize, 3, 1];
    let mut out = CMatrix::zeros(4, 4);
    for r in 0..3 {
        for c in 0..3 {
            out.set(map[r], map[c], rho.at(r, c));
        }
    }
    out
}

/// Independent single-excitation reference dynamics.
///
/// Restricts the master equation, under the rotating-wave approximation, to
/// the closed sector spanned by {upper level, 0 phonons}, {lower level,
/// 1 phonon}, {lower level, 0 phonons} in the dressed qubit basis and
/// integrates the resulting 3x3 problem directly (embedded RK4 with
/// step-doubling control at 1e-12), sharing none of the evolution module's
/// machinery. The initial state is the bare excited qubit with the resonator
/// in vacuum. Emits the qubit-resonator tangle via the four-dimensional
/// two-level-resonator basis along with the three sector populations.
///
/// Requires exactly one qubit and chi = gamma = Gamma = n_bar = 0 (only
/// resonator decay is representable inside the sector).
pub fn single_excitation_oracle(p: &ModelParams, grid: &[f64]) -> Result<OracleTrajectory> {
    p.validate()?;
    if p.n_qubits != 1 {
        return Err(AnalyticError::WrongQubitCount { got: p.n_qubits });
    }
    for (name, value) in [
        ("chi", p.chi),
        ("gamma", p.gamma),
        ("gamma_cross", p.gamma_cross),
        ("n_bar", p.n_bar),
    ] {
        if value != 0.0 {
            return Err(AnalyticError::UnsupportedRate { name, value });
        }
    }
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalyticError::BadGrid);
    }

    let omega_big = p.dressed_splitting();
    let g = p.g_eff();
    // Dressed-basis overlap of the bare excited state: |e> = cos(theta/2) |u>
    // + sin(theta/2) |l> with cos(theta) = 2V/Omega, sin(theta) = E_J/Omega.
    let (half_cos, half_sin) = if omega_big > 0.0 {
        let cos_theta = 2.0 * p.v_gate / omega_big;
        let half = 0.5 * cos_theta.clamp(-1.0, 1.0).acos();
        (half.cos(), half.sin())
    } else {
        (1.0, 0.0)
    };

    let mut h = CMatrix::zeros(3, 3);
    h.set(0, 0, C64::new(0.5 * omega_big, 0.0));
    h.set(1, 1, C64::new(p.nu - 0.5 * omega_big, 0.0));
    h.set(2, 2, C64::new(-0.5 * omega_big, 0.0));
    h.set(0, 1, C64::new(g, 0.0));
    h.set(1, 0, C64::new(g, 0.0));
    let weight = 2.0 * p.kappa;

    let psi0 = [
        C64::new(half_cos, 0.0),
        C64::new(0.0, 0.0),
        C64::new(half_sin, 0.0),
    ];
    let mut rho = CMatrix::from_fn(3, 3, |r, c| psi0[r] * psi0[c].conj());

    let scale = [p.nu.abs(), omega_big, 2.0 * g, weight, 1.0]
        .into_iter()
        .fold(0.0f64, f64::max);

    let mut out = OracleTrajectory {
        times: Vec::with_capacity(grid.len()),
        tangle: Vec::with_capacity(grid.len()),
        populations: Vec::with_capacity(grid.len()),
    };
    let mut record = |t: f64, rho: &CMatrix| -> Result<()> {
        let c = reference_concurrence(&embed_sector(rho))?;
        out.times.push(t);
        out.tangle.push(c * c);
        out.populations
            .push([rho.at(0, 0).re, rho.at(1, 1).re, rho.at(2, 2).re]);
        Ok(())
    };
    record(grid[0], &rho)?;
    for w in grid.windows(2) {
        rho = integrate_interval(&h, weight, &rho, w[1] - w[0], scale);
        record(w[1], &rho)?;
    }
    Ok(out)
}
