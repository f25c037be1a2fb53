//! Physical model: the qubit–resonator Hamiltonian, its excitation-conserving
//! rotating-wave variant, the dissipator structure of the master equation,
//! and the device-level formula for the effective coupling.
//!
//! Basis conventions, fixed crate-wide:
//! - qubit basis |e> = index 0, |g> = index 1, so sigma_z = diag(+1, -1)
//!   and sigma_z |e> = +|e>;
//! - composite ordering: qubit 1, ..., qubit N, resonator last;
//! - resonator Fock basis |0>, ..., |n_max>.

use crate::linalg::{embed, CMatrix, CompositeSpace, C64};
use thiserror::Error;

/// Electron charge in coulombs (exact, 2019 SI).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant in joule-seconds (2018 CODATA).
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("n_qubits must be between 1 and 3, got {0}")]
    BadQubitCount(usize),
    #[error("n_max must be at least 1, got {0}")]
    BadCutoff(usize),
    #[error("{name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("gamma_cross ({cross}) must not exceed gamma ({diag}): the decay-rate matrix would not be positive semidefinite")]
    CrossRateTooLarge { cross: f64, diag: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// All physical constants of the model, as angular frequencies (energies
/// divided by hbar). Time is reported as the dimensionless omega*t.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Number of charge qubits (1 to 3).
    pub n_qubits: usize,
    /// Resonator angular frequency nu.
    pub nu: f64,
    /// Qubit-resonator coupling omega.
    pub omega: f64,
    /// Gate-voltage energy V.
    pub v_gate: f64,
    /// Josephson coupling energy E_J.
    pub e_j: f64,
    /// Dipole-dipole coupling chi.
    pub chi: f64,
    /// Resonator decay rate kappa.
    pub kappa: f64,
    /// Single-qubit decay rate gamma (the diagonal of the rate matrix).
    pub gamma: f64,
    /// Correlated decay rate Gamma (every off-diagonal rate-matrix entry).
    pub gamma_cross: f64,
    /// Mean thermal phonon number of the qubit bath.
    pub n_bar: f64,
    /// Fock-space cutoff: the resonator keeps levels 0..=n_max.
    pub n_max: usize,
    /// Use the excitation-conserving rotating-wave Hamiltonian.
    pub rwa: bool,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_qubits < 1 || self.n_qubits > 3 {
            return Err(ModelError::BadQubitCount(self.n_qubits));
        }
        if self.n_max < 1 {
            return Err(ModelError::BadCutoff(self.n_max));
        }
        for (name, value) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_cross", self.gamma_cross),
            ("n_bar", self.n_bar),
        ] {
            if value < 0.0 {
                return Err(ModelError::NegativeRate { name, value });
            }
        }
        if self.n_qubits > 1 && self.gamma_cross > self.gamma {
            return Err(ModelError::CrossRateTooLarge {
                cross: self.gamma_cross,
                diag: self.gamma,
            });
        }
        Ok(())
    }

    pub fn space(&self) -> CompositeSpace {
        CompositeSpace::qubits_and_resonator(self.n_qubits, self.n_max)
    }

    /// Dressed qubit splitting Omega = sqrt((2V)^2 + E_J^2).
    pub fn dressed_splitting(&self) -> f64 {
        (2.0 * self.v_gate).hypot(self.e_j)
    }

    /// Effective transverse coupling in the dressed basis,
    /// g_eff = omega * E_J / Omega.
    pub fn g_eff(&self) -> f64 {
        let omega_split = self.dressed_splitting();
        if omega_split == 0.0 {
            // Degenerate qubit: the coupling is purely longitudinal.
            0.0
        } else {
            self.omega * self.e_j / omega_split
        }
    }

    /// The Hamiltonian selected by the `rwa` flag.
    pub fn hamiltonian(&self) -> CMatrix {
        if self.rwa {
            build_hamiltonian_rwa(self)
        } else {
            build_hamiltonian(self)
        }
    }
}

// --- elementary operators ---

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Lowering operator |g><e| (basis |e> = 0, |g> = 1).
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_plus() -> CMatrix {
    sigma_minus().dagger()
}

/// Fock-space annihilation operator on levels 0..=n_max.
pub fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a.set(n - 1, n, c((n as f64).sqrt(), 0.0));
    }
    a
}

pub fn number_op(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    CMatrix::from_fn(d, d, |r, cc| {
        if r == cc {
            c(r as f64, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Embed a single-qubit operator on qubit `j` (0-based) of the full space.
pub fn qubit_op(op: &CMatrix, j: usize, p: &ModelParams) -> CMatrix {
    embed(op, j, &p.space()).expect("qubit operator embedding")
}

/// Embed a resonator operator on the last factor of the full space.
pub fn resonator_op(op: &CMatrix, p: &ModelParams) -> CMatrix {
    let space = p.space();
    embed(op, space.n_subsystems() - 1, &space).expect("resonator operator embedding")
}

// --- Hamiltonians ---

/// Ordering of the resonator energy term. On an infinite Fock space the two
/// differ by the constant nu (which commutes out of the state evolution);
/// on the truncated space `AADag` additionally misplaces the top level, so
/// `ADagA` is the implemented default and the invariance of observables
/// under the swap is verified by test rather than assumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonatorOrdering {
    /// nu a^dag a (default).
    ADagA,
    /// nu a a^dag.
    AADag,
}

/// Full Hamiltonian:
/// H = nu a^dag a + sum_{i != j} chi sigma_x^(i) sigma_x^(j)
///   + sum_j [ V sigma_z^(j) - E_J/2 sigma_x^(j) + omega (a^dag + a) sigma_z^(j) ].
///
/// The i != j sum runs over ordered pairs, so each unordered pair
/// contributes 2 chi sigma_x sigma_x.
pub fn build_hamiltonian(p: &ModelParams) -> CMatrix {
    build_hamiltonian_ordered(p, ResonatorOrdering::ADagA)
}

/// `build_hamiltonian` with an explicit resonator-energy ordering; see
/// [`ResonatorOrdering`].
pub fn build_hamiltonian_ordered(p: &ModelParams, ordering: ResonatorOrdering) -> CMatrix {
    p.validate().expect("invalid model parameters");
    let n = p.space().total_dim();
    let mut h = CMatrix::zeros(n, n);

    let a = resonator_op(&annihilation(p.n_max), p);
    let ad = a.dagger();
    let res_energy = match ordering {
        ResonatorOrdering::ADagA => ad.matmul(&a),
        ResonatorOrdering::AADag => a.matmul(&ad),
    };
    h.add_scaled(&res_energy, c(p.nu, 0.0));

    let x_pos = &ad + &a;
    for j in 0..p.n_qubits {
        h.add_scaled(&qubit_op(&sigma_z(), j, p), c(p.v_gate, 0.0));
        h.add_scaled(&qubit_op(&sigma_x(), j, p), c(-0.5 * p.e_j, 0.0));
        let coupling = x_pos.matmul(&qubit_op(&sigma_z(), j, p));
        h.add_scaled(&coupling, c(p.omega, 0.0));
    }

    if p.chi != 0.0 && p.n_qubits > 1 {
        for i in 0..p.n_qubits {
            for j in 0..p.n_qubits {
                if i != j {
                    let xx = qubit_op(&sigma_x(), i, p).matmul(&qubit_op(&sigma_x(), j, p));
                    h.add_scaled(&xx, c(p.chi, 0.0));
                }
            }
        }
    }
    h
}

/// Dressed-basis Pauli operators: the qubit part V sigma_z - E_J/2 sigma_x
/// equals (Omega/2) Sigma_z with Sigma_z = cos(theta) sigma_z - sin(theta)
/// sigma_x, cos(theta) = 2V/Omega, sin(theta) = E_J/Omega.
fn dressed_paulis(p: &ModelParams) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let omega_split = p.dressed_splitting();
    let (cos_t, sin_t) = if omega_split == 0.0 {
        (1.0, 0.0)
    } else {
        (2.0 * p.v_gate / omega_split, p.e_j / omega_split)
    };
    let mut big_z = sigma_z().scale(c(cos_t, 0.0));
    big_z.add_scaled(&sigma_x(), c(-sin_t, 0.0));
    let mut big_x = sigma_z().scale(c(sin_t, 0.0));
    big_x.add_scaled(&sigma_x(), c(cos_t, 0.0));
    // Sigma_+- = (Sigma_x -+ i sigma_y)/2; sigma_y is unchanged by the
    // rotation about the y axis.
    let mut lower = big_x.clone();
    lower.add_scaled(&sigma_y(), c(0.0, -1.0));
    lower.scale_mut(c(0.5, 0.0));
    let raise = lower.dagger();
    (big_z, big_x, lower, raise)
}

/// Excitation-conserving rotating-wave Hamiltonian.
///
/// Construction: rotate each qubit to the eigenbasis of
/// V sigma_z - E_J/2 sigma_x (splitting Omega), write the coupling
/// omega (a^dag + a) sigma_z in that basis, discard the longitudinal part
/// and the counter-rotating transverse terms. What survives is
///
/// ```text
/// nu a^dag a + sum_j (Omega/2) Sigma_z^(j)
///            + g_eff sum_j (a^dag Sigma_-^(j) + a Sigma_+^(j))
/// ```
///
/// with g_eff = omega E_J / Omega. The dipole term keeps only its
/// excitation-conserving dressed-basis components
///
/// ```text
/// chi [ sin^2(theta) Sigma_z Sigma_z
///       + cos^2(theta) (Sigma_+ Sigma_- + Sigma_- Sigma_+) ]
/// ```
///
/// per ordered pair. Commutes with the total excitation number.
pub fn build_hamiltonian_rwa(p: &ModelParams) -> CMatrix {
    p.validate().expect("invalid model parameters");
    let n = p.space().total_dim();
    let mut h = CMatrix::zeros(n, n);

    let a = resonator_op(&annihilation(p.n_max), p);
    let ad = a.dagger();
    h.add_scaled(&ad.matmul(&a), c(p.nu, 0.0));

    let omega_split = p.dressed_splitting();
    let (big_z, _big_x, lower, raise) = dressed_paulis(p);
    let g = p.g_eff();

    for j in 0..p.n_qubits {
        h.add_scaled(&qubit_op(&big_z, j, p), c(0.5 * omega_split, 0.0));
        let co = ad.matmul(&qubit_op(&lower, j, p));
        h.add_scaled(&co, c(g, 0.0));
        let co_dag = a.matmul(&qubit_op(&raise, j, p));
        h.add_scaled(&co_dag, c(g, 0.0));
    }

    if p.chi != 0.0 && p.n_qubits > 1 {
        let (cos_t, sin_t) = if omega_split == 0.0 {
            (1.0, 0.0)
        } else {
            (2.0 * p.v_gate / omega_split, p.e_j / omega_split)
        };
        for i in 0..p.n_qubits {
            for j in 0..p.n_qubits {
                if i != j {
                    let zz = qubit_op(&big_z, i, p).matmul(&qubit_op(&big_z, j, p));
                    h.add_scaled(&zz, c(p.chi * sin_t * sin_t, 0.0));
                    let pm = qubit_op(&raise, i, p).matmul(&qubit_op(&lower, j, p));
                    h.add_scaled(&pm, c(p.chi * cos_t * cos_t, 0.0));
                    let mp = qubit_op(&lower, i, p).matmul(&qubit_op(&raise, j, p));
                    h.add_scaled(&mp, c(p.chi * cos_t * cos_t, 0.0));
                }
            }
        }
    }
    h
}

/// Total excitation number: a^dag a + sum_j (Sigma_z^(j) + 1)/2.
pub fn excitation_number(p: &ModelParams) -> CMatrix {
    let a = resonator_op(&annihilation(p.n_max), p);
    let mut n_exc = a.dagger().matmul(&a);
    let (big_z, ..) = dressed_paulis(p);
    let total = p.space().total_dim();
    for j in 0..p.n_qubits {
        n_exc.add_scaled(&qubit_op(&big_z, j, p), c(0.5, 0.0));
        n_exc.add_scaled(&CMatrix::identity(total), c(0.5, 0.0));
    }
    n_exc
}

// --- dissipator ---

/// One Lindblad channel: contributes weight * (J rho J^dag - {J^dag J, rho}/2)
/// to the master-equation right-hand side.
pub struct Collapse {
    pub weight: f64,
    pub op: CMatrix,
    /// Cached J^dag J for the drift term.
    pub op_dag_op: CMatrix,
    pub label: String,
}

/// The full dissipator as a weighted list of Lindblad channels.
pub struct CollapseSet {
    pub channels: Vec<Collapse>,
}

impl CollapseSet {
    fn push(&mut self, weight: f64, op: CMatrix, label: String) {
        if weight > 0.0 {
            let op_dag_op = op.dagger().matmul(&op);
            self.channels.push(Collapse {
                weight,
                op,
                op_dag_op,
                label,
            });
        }
    }
}

/// Build the dissipator of the master equation.
///
/// The rate matrix gamma_ij (diagonal gamma, off-diagonal gamma_cross) is
/// split exactly as gamma_ij = (gamma - gamma_cross) delta_ij +
/// gamma_cross * (all-ones), which turns the double sum over qubits into
/// independent channels sigma_-^(j) at rate (gamma - gamma_cross) plus one
/// collective channel S_- = sum_j sigma_-^(j) at rate gamma_cross (and the
/// corresponding upward channels weighted by n_bar). The resonator bath is
/// zero-temperature: a single channel a at rate 2 kappa.
pub fn build_collapse_set(p: &ModelParams) -> CollapseSet {
    p.validate().expect("invalid model parameters");
    let mut set = CollapseSet {
        channels: Vec::new(),
    };

    set.push(
        2.0 * p.kappa,
        resonator_op(&annihilation(p.n_max), p),
        "resonator decay".into(),
    );

    let individual = p.gamma - p.gamma_cross;
    let collective = p.gamma_cross;
    let down = 1.0 + p.n_bar;
    let up = p.n_bar;

    for j in 0..p.n_qubits {
        set.push(
            individual * down,
            qubit_op(&sigma_minus(), j, p),
            format!("qubit {} decay", j + 1),
        );
        set.push(
            individual * up,
            qubit_op(&sigma_plus(), j, p),
            format!("qubit {} thermal excitation", j + 1),
        );
    }
    if p.n_qubits > 1 {
        let total = p.space().total_dim();
        let mut s_minus = CMatrix::zeros(total, total);
        for j in 0..p.n_qubits {
            s_minus.add_scaled(&qubit_op(&sigma_minus(), j, p), c(1.0, 0.0));
        }
        set.push(
            collective * down,
            s_minus.clone(),
            "collective decay".into(),
        );
        set.push(
            collective * up,
            s_minus.dagger(),
            "collective thermal excitation".into(),
        );
    } else {
        // For a single qubit the rate matrix is 1x1: the identity split
        // still applies with the "collective" operator equal to sigma_-,
        // so fold the cross rate back into the individual channel.
        set.push(
            collective * down,
            qubit_op(&sigma_minus(), 0, p),
            "qubit 1 decay (cross fold)".into(),
        );
        set.push(
            collective * up,
            qubit_op(&sigma_plus(), 0, p),
            "qubit 1 thermal excitation (cross fold)".into(),
        );
    }
    set
}

// --- device-level coupling ---

/// Lumped device parameters for the effective-coupling formula, SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    /// Junction capacitance C_J in farads.
    pub c_j: f64,
    /// Gate capacitance C_g in farads.
    pub c_g: f64,
    /// Thickness-dependent capacitance parameter C_F in farads.
    pub c_f: f64,
    /// Resonator angular frequency nu in rad/s.
    pub nu: f64,
}

/// Effective resonator-qubit coupling
/// omega = e C_J / (2 (C_g + C_J)) * sqrt(nu / (2 hbar C_F)),
/// evaluated in SI units (result in rad/s when nu is in rad/s).
pub fn effective_coupling(d: &DeviceParams) -> Result<f64, ModelError> {
    for (name, value) in [("c_j", d.c_j), ("c_g", d.c_g), ("c_f", d.c_f), ("nu", d.nu)] {
        if value <= 0.0 {
            return Err(ModelError::NonPositive { name, value });
        }
    }
    let prefactor = ELECTRON_CHARGE * d.c_j / (2.0 * (d.c_g + d.c_j));
    Ok(prefactor * (d.nu / (2.0 * HBAR * d.c_f)).sqrt())
}

// --- interaction picture ---

/// rho_tilde(t) = exp(+iHt) rho exp(-iHt), via the eigendecomposition of H.
pub fn interaction_picture_transform(
    rho: &CMatrix,
    h: &CMatrix,
    t: f64,
) -> crate::linalg::Result<CMatrix> {
    let (w, v) = crate::linalg::hermitian_eigs(h)?;
    let phases: Vec<C64> = w.iter().map(|&e| (c(0.0, 1.0) * e * t).exp()).collect();
    let n = h.rows();
    // U = V diag(e^{i w t}) V^dag
    let vp = CMatrix::from_fn(n, n, |r, cc| v.at(r, cc) * phases[cc]);
    let u = vp.matmul(&v.dagger());
    Ok(u.matmul(rho).matmul(&u.dagger()))
}
