//! Declarative run configuration, initial-state construction, figure
//! presets, parameter sweeps, and file output (config in, CSV/SVG out).
//!
//! A [`ScenarioConfig`] pins the model parameters, the initial state, the
//! time grid, and the measures recorded per grid point.  [`run_scenario`]
//! evolves the state, evaluates the measures, validates the Fock cutoff by
//! re-running at a raised cutoff, and writes the result table as CSV with a
//! metadata footer (plus an optional SVG line plot).  All rates and energies
//! are expressed in units of the qubit-resonator coupling (omega = 1
//! internally); times are the dimensionless omega*t.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytic::single_excitation_oracle;
use crate::entanglement::{
    effective_two_level_reduce, i_tangle_bipartition, pairwise_tangles, tangle_two_qubit,
    von_neumann_entropy, BipartitionSpec, RoofOptions,
};
use crate::evolution::{
    evolve, physicality_report, DensityMatrix, EvolveOptions, Method, PhysicalityReport,
};
use crate::linalg::{hermitian_eigs, kron, partial_trace, CMatrix, CompositeSpace, C64};
use crate::model::ModelParams;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("config line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required config key `{key}`")]
    MissingKey { key: &'static str },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("unknown preset `{name}` (expected fig1..fig7)")]
    UnknownPreset { name: String },
    #[error("initial qubit string `{s}` must give one of e/g per qubit ({n} qubits)")]
    BadBasisString { s: String, n: usize },
    #[error("a mixed two-qubit initial state requires n_qubits = 2, got {n}")]
    MixedNeedsTwoQubits { n: usize },
    #[error("fock({n}) initial state exceeds the cutoff n_max = {n_max}")]
    FockAboveCutoff { n: usize, n_max: usize },
    #[error("mixed initial state rejected: trace = {trace}")]
    MixedBadTrace { trace: f64 },
    #[error("mixed initial state rejected: eigenvalue {eig:.6e} is below -1e-10")]
    MixedNotPsd { eig: f64 },
    #[error("thermal mean occupation must be finite and >= 0, got {n_bar}")]
    BadThermal { n_bar: f64 },
    #[error("time grid must have n_points >= 2 and t_max > 0")]
    BadGrid,
    #[error("duplicate measure column `{name}`")]
    DuplicateMeasure { name: &'static str },
    #[error("measure `{name}` is not available for n_qubits = {n}")]
    MeasureUnavailable { name: &'static str, n: usize },
    #[error("oracle comparison requires the single excited qubit with vacuum resonator initial state")]
    OracleScope,
    #[error("csv parse: {detail}")]
    CsvParse { detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Evolve(#[from] crate::evolution::EvolveError),
    #[error(transparent)]
    Entangle(#[from] crate::entanglement::EntangleError),
    #[error(transparent)]
    Analytic(#[from] crate::analytic::AnalyticError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Resonator-leakage weight above which the two-level reduction behind the
/// `tangle_qr` column is flagged as unreliable.
pub const LEAKAGE_FLAG_BOUND: f64 = 0.05;
/// Convergence threshold on the tangle columns for the cutoff check.
pub const CUTOFF_DELTA_TOL: f64 = 1e-4;
/// Cutoff increment per escalation round of the convergence check.
pub const CUTOFF_STEP: usize = 4;
/// Escalation rounds before the check reports non-convergence.
pub const CUTOFF_MAX_ROUNDS: usize = 3;
/// Default kappa sweep grid for the presets that scan the resonator decay.
pub const DEFAULT_KAPPA_SWEEP: [f64; 6] = [0.01, 0.05, 0.1, 0.5, 1.0, 5.0];

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

/// Mixed two-qubit initial state: diagonal (a, b, c, 1-a) in the basis
/// |ee>, |eg>, |ge>, |gg| with a coherence f between |eg> and |ge>.
/// With `normalize` the assembled matrix is divided by its trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedTwoQubit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: C64,
    pub normalize: bool,
}

impl MixedTwoQubit {
    /// Assemble and validate the 4 x 4 density matrix.  Hermiticity holds by
    /// construction; the trace must equal 1 (after optional normalization)
    /// and every eigenvalue must be >= -1e-10, otherwise the offending
    /// trace/eigenvalue is reported.
    pub fn matrix(&self) -> Result<CMatrix> {
        let mut m = CMatrix::zeros(4, 4);
        m.set(0, 0, C64::new(self.a, 0.0));
        m.set(1, 1, C64::new(self.b, 0.0));
        m.set(2, 2, C64::new(self.c, 0.0));
        m.set(3, 3, C64::new(1.0 - self.a, 0.0));
        m.set(1, 2, self.f);
        m.set(2, 1, self.f.conj());
        let trace = m.trace().re;
        if self.normalize {
            // NaN is rejected along with non-positive traces.
            if trace.is_nan() || trace <= 0.0 {
                return Err(ScenarioError::MixedBadTrace { trace });
            }
            m.scale_mut(C64::new(1.0 / trace, 0.0));
        } else if (trace - 1.0).abs() > 1e-10 {
            return Err(ScenarioError::MixedBadTrace { trace });
        }
        let (w, _) = hermitian_eigs(&m)?;
        let min_eig = w.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(ScenarioError::MixedNotPsd { eig: min_eig });
        }
        Ok(m)
    }
}

/// Initial state of the qubit register.
#[derive(Clone, Debug, PartialEq)]
pub enum QubitInitial {
    /// One letter per qubit over {e, g}; "eg" puts qubit 1 excited and
    /// qubit 2 in the ground state.
    Basis(String),
    /// Mixed two-qubit state (n_qubits = 2 only).
    Mixed(MixedTwoQubit),
}

/// Initial state of the resonator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResonatorInitial {
    Vacuum,
    /// Fock state |n>; requires n <= n_max.
    Fock(usize),
    /// Thermal state with mean occupation n_bar, truncated-geometric
    /// renormalized on the cutoff.
    Thermal(f64),
}

/// Probability weight of the thermal state above the cutoff (the mass
/// removed by truncating the geometric distribution at dim levels).
pub fn thermal_truncated_mass(n_bar: f64, dim: usize) -> f64 {
    let r = n_bar / (1.0 + n_bar);
    r.powi(dim as i32)
}

/// Truncated-geometric populations p_n = (1-r) r^n / (1 - r^dim) with
/// r = n_bar / (1 + n_bar), for n = 0..dim-1.
fn thermal_populations(n_bar: f64, dim: usize) -> Result<Vec<f64>> {
    if !n_bar.is_finite() || n_bar < 0.0 {
        return Err(ScenarioError::BadThermal { n_bar });
    }
    let r = n_bar / (1.0 + n_bar);
    let norm = 1.0 - r.powi(dim as i32);
    let mut p = Vec::with_capacity(dim);
    let mut w = (1.0 - r) / norm;
    for _ in 0..dim {
        p.push(w);
        w *= r;
    }
    Ok(p)
}

fn resonator_matrix(init: &ResonatorInitial, dim: usize) -> Result<CMatrix> {
    match init {
        ResonatorInitial::Vacuum => {
            let mut m = CMatrix::zeros(dim, dim);
            m.set(0, 0, C64::new(1.0, 0.0));
            Ok(m)
        }
        ResonatorInitial::Fock(n) => {
            if *n >= dim {
                return Err(ScenarioError::FockAboveCutoff {
                    n: *n,
                    n_max: dim - 1,
                });
            }
            let mut m = CMatrix::zeros(dim, dim);
            m.set(*n, *n, C64::new(1.0, 0.0));
            Ok(m)
        }
        ResonatorInitial::Thermal(n_bar) => {
            Ok(CMatrix::from_diag(&thermal_populations(*n_bar, dim)?))
        }
    }
}

fn qubit_matrix(init: &QubitInitial, n_qubits: usize) -> Result<CMatrix> {
    match init {
        QubitInitial::Basis(s) => {
            if s.chars().count() != n_qubits {
                return Err(ScenarioError::BadBasisString {
                    s: s.clone(),
                    n: n_qubits,
                });
            }
            let mut idx = 0usize;
            for ch in s.chars() {
                idx = 2 * idx
                    + match ch {
                        'e' => 0,
                        'g' => 1,
                        _ => {
                            return Err(ScenarioError::BadBasisString {
                                s: s.clone(),
                                n: n_qubits,
                            })
                        }
                    };
            }
            let dim = 1 << n_qubits;
            let mut m = CMatrix::zeros(dim, dim);
            m.set(idx, idx, C64::new(1.0, 0.0));
            Ok(m)
        }
        QubitInitial::Mixed(mix) => {
            if n_qubits != 2 {
                return Err(ScenarioError::MixedNeedsTwoQubits { n: n_qubits });
            }
            mix.matrix()
        }
    }
}

/// Build the full initial density matrix: qubit-register state tensored
/// with the resonator state, in the given composite space.
pub fn build_initial_state(cfg: &ScenarioConfig, space: &CompositeSpace) -> Result<DensityMatrix> {
    let n_qubits = space.n_subsystems() - 1;
    let fock_dim = *space.dims().last().expect("space has a resonator factor");
    let q = qubit_matrix(&cfg.initial_qubits, n_qubits)?;
    let r = resonator_matrix(&cfg.initial_resonator, fock_dim)?;
    Ok(DensityMatrix::new(kron(&q, &r), space.clone())?)
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Time grid: n_points samples evenly spaced over [0, t_max].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn times(&self) -> Result<Vec<f64>> {
        if self.n_points < 2 || self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(ScenarioError::BadGrid);
        }
        let n = self.n_points;
        Ok((0..n)
            .map(|k| self.t_max * k as f64 / (n - 1) as f64)
            .collect())
    }
}

/// Subsystem whose marginal entropy the `entropy` column reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyTarget {
    QubitRegister,
    Resonator,
    Qubit(usize),
}

/// A per-grid-point observable.  Each measure contributes one or more CSV
/// columns; at most one instance of each measure kind may be requested.
#[derive(Clone, Debug)]
pub enum Measure {
    /// Tangle between the designated qubit (index 0) and the resonator
    /// reduced to its two lowest Fock levels; contributes `tangle_qr` and
    /// the companion `leakage` column.
    QubitResonatorTangle,
    /// Wootters tangle of every qubit pair: `tangle_q1q2` and, for three
    /// qubits, `tangle_q1q3` and `tangle_q2q3`.
    PairwiseTangles,
    /// Convex-roof I-tangle across an arbitrary bipartition; contributes an
    /// `i_tangle` column (not part of the default column set).
    ITangle(BipartitionSpec),
    /// Von Neumann entropy of a subsystem marginal; contributes `entropy`.
    Entropy(EntropyTarget),
}

/// The measures a config records by default: the qubit-resonator tangle for
/// a single qubit, pairwise tangles otherwise, plus the qubit-register
/// entropy.  Mean phonon number and physicality diagnostics are always on.
pub fn default_measures(n_qubits: usize) -> Vec<Measure> {
    let mut m = if n_qubits == 1 {
        vec![Measure::QubitResonatorTangle]
    } else {
        vec![Measure::PairwiseTangles]
    };
    m.push(Measure::Entropy(EntropyTarget::QubitRegister));
    m
}

/// A complete, runnable scenario description.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub initial_qubits: QubitInitial,
    pub initial_resonator: ResonatorInitial,
    pub grid: GridSpec,
    pub method: Method,
    /// Observables recorded per grid point.  Not part of the config-file
    /// grammar: files get [`default_measures`]; API callers may override.
    pub measures: Vec<Measure>,
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
}

fn template_config() -> ScenarioConfig {
    ScenarioConfig {
        model: ModelParams {
            n_qubits: 1,
            nu: 1.0,
            omega: 1.0,
            v_gate: 1.0,
            e_j: 1.0,
            chi: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            gamma_cross: 0.0,
            n_bar: 0.0,
            n_max: 10,
            rwa: false,
        },
        initial_qubits: QubitInitial::Basis("e".to_string()),
        initial_resonator: ResonatorInitial::Vacuum,
        grid: GridSpec {
            t_max: 50.0,
            n_points: 2000,
        },
        method: Method::Direct,
        measures: default_measures(1),
        csv_path: None,
        svg_path: None,
    }
}

/// Keys that must appear in a config file (everything else has a default).
pub const REQUIRED_KEYS: [&str; 8] = [
    "model.n_qubits",
    "model.nu",
    "model.v_gate",
    "model.e_j",
    "numerics.t_max",
    "numerics.n_points",
    "initial.qubits",
    "initial.resonator",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a finite real number",
        })
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a non-negative integer",
        })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "true or false",
        }),
    }
}

fn parse_qubit_initial(key: &str, value: &str) -> Result<QubitInitial> {
    let bad = |expected| ScenarioError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    };
    if let Some(rest) = value.strip_prefix("mixed:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(bad("mixed:a,b,c,f_re,f_im,normalize"));
        }
        let nums: Result<Vec<f64>> = parts[..5].iter().map(|p| parse_f64(key, p)).collect();
        let nums = nums?;
        Ok(QubitInitial::Mixed(MixedTwoQubit {
            a: nums[0],
            b: nums[1],
            c: nums[2],
            f: C64::new(nums[3], nums[4]),
            normalize: parse_bool(key, parts[5])?,
        }))
    } else if !value.is_empty() && value.chars().all(|c| c == 'e' || c == 'g') {
        Ok(QubitInitial::Basis(value.to_string()))
    } else {
        Err(bad("a string over {e,g} or mixed:a,b,c,f_re,f_im,normalize"))
    }
}

fn parse_resonator_initial(key: &str, value: &str) -> Result<ResonatorInitial> {
    if value == "vacuum" {
        Ok(ResonatorInitial::Vacuum)
    } else if let Some(n) = value.strip_prefix("fock:") {
        Ok(ResonatorInitial::Fock(parse_usize(key, n.trim())?))
    } else if let Some(x) = value.strip_prefix("thermal:") {
        Ok(ResonatorInitial::Thermal(parse_f64(key, x.trim())?))
    } else {
        Err(ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "vacuum, fock:N, or thermal:X",
        })
    }
}

/// Set one dotted config key on an existing config.  This is the single
/// source of key semantics, shared by the file parser and by sweeps.
/// Setting `model.n_qubits` re-derives the default measure set.
pub fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "model.n_qubits" => {
            cfg.model.n_qubits = parse_usize(key, value)?;
            cfg.measures = default_measures(cfg.model.n_qubits);
        }
        "model.nu" => cfg.model.nu = parse_f64(key, value)?,
        "model.omega" => cfg.model.omega = parse_f64(key, value)?,
        "model.v_gate" => cfg.model.v_gate = parse_f64(key, value)?,
        "model.e_j" => cfg.model.e_j = parse_f64(key, value)?,
        "model.chi" => cfg.model.chi = parse_f64(key, value)?,
        "dissipation.kappa" => cfg.model.kappa = parse_f64(key, value)?,
        "dissipation.gamma" => cfg.model.gamma = parse_f64(key, value)?,
        "dissipation.gamma_cross" => cfg.model.gamma_cross = parse_f64(key, value)?,
        "dissipation.n_bar" => cfg.model.n_bar = parse_f64(key, value)?,
        "numerics.n_max" => cfg.model.n_max = parse_usize(key, value)?,
        "numerics.t_max" => cfg.grid.t_max = parse_f64(key, value)?,
        "numerics.n_points" => cfg.grid.n_points = parse_usize(key, value)?,
        "numerics.method" => {
            cfg.method = match value {
                "direct" => Method::Direct,
                "exponential" => Method::Exponential,
                _ => {
                    return Err(ScenarioError::BadValue {
                        key: key.to_string(),
                        value: value.to_string(),
                        expected: "direct or exponential",
                    })
                }
            }
        }
        "numerics.rwa" => cfg.model.rwa = parse_bool(key, value)?,
        "initial.qubits" => cfg.initial_qubits = parse_qubit_initial(key, value)?,
        "initial.resonator" => cfg.initial_resonator = parse_resonator_initial(key, value)?,
        "output.csv" => cfg.csv_path = Some(PathBuf::from(value)),
        "output.svg" => cfg.svg_path = Some(PathBuf::from(value)),
        _ => {
            return Err(ScenarioError::UnknownKey {
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

/// Parse the flat `key = value` config format.  Blank lines and lines
/// starting with `#` are ignored; keys must not repeat; the keys in
/// [`REQUIRED_KEYS`] must all be present.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = template_config();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ScenarioError::MalformedLine {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let key = k.trim();
        if !seen.insert(key.to_string()) {
            return Err(ScenarioError::DuplicateKey {
                line: i + 1,
                key: key.to_string(),
            });
        }
        apply_key(&mut cfg, key, v.trim())?;
    }
    for key in REQUIRED_KEYS {
        if !seen.contains(key) {
            return Err(ScenarioError::MissingKey { key });
        }
    }
    cfg.model.validate()?;
    Ok(cfg)
}

/// Emit the config in the canonical key order.  `parse_config` of the
/// output reproduces the config (serialization is idempotent).
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let m = &cfg.model;
    let _ = writeln!(s, "model.n_qubits = {}", m.n_qubits);
    let _ = writeln!(s, "model.nu = {}", m.nu);
    let _ = writeln!(s, "model.omega = {}", m.omega);
    let _ = writeln!(s, "model.v_gate = {}", m.v_gate);
    let _ = writeln!(s, "model.e_j = {}", m.e_j);
    let _ = writeln!(s, "model.chi = {}", m.chi);
    let _ = writeln!(s, "dissipation.kappa = {}", m.kappa);
    let _ = writeln!(s, "dissipation.gamma = {}", m.gamma);
    let _ = writeln!(s, "dissipation.gamma_cross = {}", m.gamma_cross);
    let _ = writeln!(s, "dissipation.n_bar = {}", m.n_bar);
    let _ = writeln!(s, "numerics.n_max = {}", m.n_max);
    let _ = writeln!(s, "numerics.t_max = {}", cfg.grid.t_max);
    let _ = writeln!(s, "numerics.n_points = {}", cfg.grid.n_points);
    let method = match cfg.method {
        Method::Direct => "direct",
        Method::Exponential => "exponential",
    };
    let _ = writeln!(s, "numerics.method = {}", method);
    let _ = writeln!(s, "numerics.rwa = {}", m.rwa);
    let qubits = match &cfg.initial_qubits {
        QubitInitial::Basis(b) => b.clone(),
        QubitInitial::Mixed(mix) => format!(
            "mixed:{},{},{},{},{},{}",
            mix.a, mix.b, mix.c, mix.f.re, mix.f.im, mix.normalize
        ),
    };
    let _ = writeln!(s, "initial.qubits = {}", qubits);
    let resonator = match cfg.initial_resonator {
        ResonatorInitial::Vacuum => "vacuum".to_string(),
        ResonatorInitial::Fock(n) => format!("fock:{}", n),
        ResonatorInitial::Thermal(x) => format!("thermal:{}", x),
    };
    let _ = writeln!(s, "initial.resonator = {}", resonator);
    if let Some(p) = &cfg.csv_path {
        let _ = writeln!(s, "output.csv = {}", p.display());
    }
    if let Some(p) = &cfg.svg_path {
        let _ = writeln!(s, "output.svg = {}", p.display());
    }
    s
}

// ---------------------------------------------------------------------------
// Measure evaluation
// ---------------------------------------------------------------------------

struct ColumnPlan {
    names: Vec<&'static str>,
    qr: bool,
    pairwise: bool,
    entropy: Option<EntropyTarget>,
    itangle: Option<BipartitionSpec>,
}

fn plan_columns(cfg: &ScenarioConfig) -> Result<ColumnPlan> {
    let n = cfg.model.n_qubits;
    let mut qr = false;
    let mut pairwise = false;
    let mut entropy: Option<EntropyTarget> = None;
    let mut itangle: Option<BipartitionSpec> = None;
    for m in &cfg.measures {
        match m {
            Measure::QubitResonatorTangle => {
                if qr {
                    return Err(ScenarioError::DuplicateMeasure { name: "tangle_qr" });
                }
                qr = true;
            }
            Measure::PairwiseTangles => {
                if n < 2 {
                    return Err(ScenarioError::MeasureUnavailable {
                        name: "tangle_q1q2",
                        n,
                    });
                }
                if pairwise {
                    return Err(ScenarioError::DuplicateMeasure {
                        name: "tangle_q1q2",
                    });
                }
                pairwise = true;
            }
            Measure::Entropy(t) => {
                if entropy.is_some() {
                    return Err(ScenarioError::DuplicateMeasure { name: "entropy" });
                }
                if let EntropyTarget::Qubit(i) = t {
                    if *i >= n {
                        return Err(ScenarioError::MeasureUnavailable { name: "entropy", n });
                    }
                }
                entropy = Some(*t);
            }
            Measure::ITangle(spec) => {
                if itangle.is_some() {
                    return Err(ScenarioError::DuplicateMeasure { name: "i_tangle" });
                }
                spec.validate(n + 1)?;
                itangle = Some(spec.clone());
            }
        }
    }
    let mut names = vec!["omega_t"];
    if qr {
        names.push("tangle_qr");
    }
    if pairwise {
        names.push("tangle_q1q2");
        if n == 3 {
            names.push("tangle_q1q3");
            names.push("tangle_q2q3");
        }
    }
    if entropy.is_some() {
        names.push("entropy");
    }
    names.push("mean_n");
    if itangle.is_some() {
        names.push("i_tangle");
    }
    names.push("trace_dev");
    names.push("min_eig");
    if qr {
        names.push("leakage");
    }
    Ok(ColumnPlan {
        names,
        qr,
        pairwise,
        entropy,
        itangle,
    })
}

fn entropy_keep(target: EntropyTarget, n_qubits: usize) -> Vec<usize> {
    match target {
        EntropyTarget::QubitRegister => (0..n_qubits).collect(),
        EntropyTarget::Resonator => vec![n_qubits],
        EntropyTarget::Qubit(i) => vec![i],
    }
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// Execution knobs that are not part of the config-file grammar.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub evolve: EvolveOptions,
    pub roof: RoofOptions,
    /// Run the cutoff-convergence check (re-evolve at a raised cutoff and
    /// compare tangle columns).  On by default.
    pub check_cutoff: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            evolve: EvolveOptions::default(),
            roof: RoofOptions::default(),
            check_cutoff: true,
        }
    }
}

/// Outcome of the Fock cutoff convergence check.
#[derive(Clone, Copy, Debug)]
pub struct CutoffReport {
    pub checked: bool,
    /// None when the check was skipped.
    pub converged: Option<bool>,
    /// The cutoff the reported rows were computed at.
    pub n_max_used: usize,
    pub rounds: usize,
    /// Largest tangle-column deviation seen in the last comparison.
    pub max_delta: Option<f64>,
}

/// The full result table of a scenario run plus its footer metadata.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    /// Column names, first column is always `omega_t`.
    pub header: Vec<&'static str>,
    /// One row per grid point, aligned with `header`.
    pub rows: Vec<Vec<f64>>,
    pub physicality: PhysicalityReport,
    pub cutoff: CutoffReport,
    pub rhs_evals: u64,
    pub n_qubits: usize,
    pub method: Method,
    pub rwa: bool,
    /// Probability mass truncated off the thermal initial state, when the
    /// resonator starts thermal.
    pub thermal_truncated_mass: Option<f64>,
}

impl ScenarioRun {
    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|&h| h == name)
    }

    /// All values of a named column, in grid order.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

struct RunProduct {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
    physicality: PhysicalityReport,
    rhs_evals: u64,
}

fn run_once(cfg: &ScenarioConfig, n_max: usize, opts: &RunOptions) -> Result<RunProduct> {
    let mut model = cfg.model.clone();
    model.n_max = n_max;
    model.validate()?;
    let space = model.space();
    let rho0 = build_initial_state(cfg, &space)?;
    let times = cfg.grid.times()?;
    let plan = plan_columns(cfg)?;
    let traj = evolve(&rho0, &model, &times, cfg.method, &opts.evolve)?;

    let fock_dim = *space.dims().last().expect("resonator factor");
    let n_qubits = model.n_qubits;
    let mut rows = Vec::with_capacity(traj.states.len());
    for (k, state) in traj.states.iter().enumerate() {
        let dm = DensityMatrix {
            matrix: state.clone(),
            space: space.clone(),
        };
        let mut row = Vec::with_capacity(plan.names.len());
        row.push(traj.times[k]);
        let mut leakage = 0.0;
        if plan.qr {
            let red = effective_two_level_reduce(&dm, 0, LEAKAGE_FLAG_BOUND)?;
            row.push(tangle_two_qubit(&red.matrix)?);
            leakage = red.leakage;
        }
        if plan.pairwise {
            let pairs = pairwise_tangles(&dm)?;
            for want in [(0usize, 1usize), (0, 2), (1, 2)] {
                if want.1 >= n_qubits {
                    continue;
                }
                let value = pairs
                    .iter()
                    .find(|(p, _)| *p == want)
                    .map(|(_, v)| *v)
                    .expect("pairwise_tangles covers every qubit pair");
                row.push(value);
            }
        }
        if let Some(target) = plan.entropy {
            let keep = entropy_keep(target, n_qubits);
            let marginal = partial_trace(&dm.matrix, &space, &keep)?;
            row.push(von_neumann_entropy(&marginal)?);
        }
        let mut mean_n = 0.0;
        for idx in 0..dm.matrix.rows() {
            mean_n += dm.matrix.at(idx, idx).re * (idx % fock_dim) as f64;
        }
        row.push(mean_n);
        if let Some(spec) = &plan.itangle {
            row.push(i_tangle_bipartition(&dm, spec, &opts.roof)?.value);
        }
        let d = &traj.diagnostics[k];
        row.push(d.trace_dev);
        row.push(d.min_eig);
        if plan.qr {
            row.push(leakage);
        }
        rows.push(row);
    }
    Ok(RunProduct {
        header: plan.names,
        rows,
        physicality: physicality_report(&traj),
        rhs_evals: traj.rhs_evals,
    })
}

fn tangle_delta(a: &RunProduct, b: &RunProduct) -> f64 {
    let mut delta = 0.0f64;
    for (ci, name) in a.header.iter().enumerate() {
        if !name.contains("tangle") {
            continue;
        }
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            delta = delta.max((ra[ci] - rb[ci]).abs());
        }
    }
    delta
}

/// Run a scenario with default options (cutoff check on) and write any
/// configured output files.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    run_scenario_with(cfg, &RunOptions::default())
}

/// Run a scenario: evolve, evaluate measures per grid point, validate the
/// Fock cutoff by re-running at n_max + 4 (escalating while the tangle
/// columns shift by more than 1e-4), and write CSV/SVG outputs if paths are
/// configured.
pub fn run_scenario_with(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioRun> {
    let mut n_max = cfg.model.n_max;
    let mut base = run_once(cfg, n_max, opts)?;
    let mut cutoff = CutoffReport {
        checked: opts.check_cutoff,
        converged: None,
        n_max_used: n_max,
        rounds: 0,
        max_delta: None,
    };
    if opts.check_cutoff {
        let mut converged = false;
        for _ in 0..CUTOFF_MAX_ROUNDS {
            let probe = run_once(cfg, n_max + CUTOFF_STEP, opts)?;
            let delta = tangle_delta(&base, &probe);
            cutoff.rounds += 1;
            cutoff.max_delta = Some(delta);
            if delta <= CUTOFF_DELTA_TOL {
                converged = true;
                break;
            }
            n_max += CUTOFF_STEP;
            base = probe;
        }
        cutoff.converged = Some(converged);
        cutoff.n_max_used = n_max;
    }
    let mut physicality = base.physicality;
    physicality.cutoff_converged = cutoff.converged;
    let thermal_truncated_mass = match cfg.initial_resonator {
        ResonatorInitial::Thermal(n_bar) => Some(thermal_truncated_mass(n_bar, n_max + 1)),
        _ => None,
    };
    let run = ScenarioRun {
        header: base.header,
        rows: base.rows,
        physicality,
        cutoff,
        rhs_evals: base.rhs_evals,
        n_qubits: cfg.model.n_qubits,
        method: cfg.method,
        rwa: cfg.model.rwa,
        thermal_truncated_mass,
    };
    if let Some(path) = &cfg.csv_path {
        write_csv(&run, path)?;
    }
    if let Some(path) = &cfg.svg_path {
        write_svg(&run, path)?;
    }
    Ok(run)
}

/// Run labeled configs as independent jobs (in parallel when the `parallel`
/// feature is enabled).  Output paths must be unique per job.
pub fn run_labeled(
    runs: &[(String, ScenarioConfig)],
    opts: &RunOptions,
) -> Vec<(String, Result<ScenarioRun>)> {
    #[cfg(feature = "parallel")]
    {
        runs.par_iter()
            .map(|(label, cfg)| (label.clone(), run_scenario_with(cfg, opts)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        runs.iter()
            .map(|(label, cfg)| (label.clone(), run_scenario_with(cfg, opts)))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Sweeps and presets
// ---------------------------------------------------------------------------

fn sweep_label(key: &str, value: &str) -> String {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    format!("{}{}", leaf, value)
}

/// Expand a base config into one config per swept value of a dotted key.
/// Labels embed the key leaf and the value (e.g. `kappa0.1`) for use in
/// output file names.
pub fn sweep_configs(
    base: &ScenarioConfig,
    key: &str,
    values: &[String],
) -> Result<Vec<(String, ScenarioConfig)>> {
    values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            apply_key(&mut cfg, key, v)?;
            Ok((sweep_label(key, v), cfg))
        })
        .collect()
}

/// A named preset: either a single run or a family of sweep runs.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    /// The swept config key, when the preset is a sweep family.
    pub sweep_key: Option<&'static str>,
    /// Labeled configs, one per run.  Single-run presets use the preset
    /// name itself as the label.
    pub runs: Vec<(String, ScenarioConfig)>,
}

fn fmt_value(v: f64) -> String {
    format!("{}", v)
}

/// Construct one of the named presets fig1..fig7.
///
/// fig1: one qubit, excited, vacuum resonator, no qubit damping, resonator
/// decay swept over [`DEFAULT_KAPPA_SWEEP`].  fig2: two qubits starting
/// |eg>, otherwise as fig1.  fig3: two qubits in the mixed initial state
/// (0.1, 0.45, 0.45) with a thermal resonator, sweeping the qubit decay.
/// fig4: |ee> with vacuum, sweeping the qubit-qubit coupling.  fig5: |ee>
/// with a thermal resonator, sweeping the thermal occupation (initial state
/// and bath together).  fig6/fig7: the three-qubit |eee> counterpart of
/// fig5 at thermal occupation 0.5.
pub fn preset(name: &str) -> Result<Preset> {
    fn base(n_qubits: usize, n_max: usize, qubits: &str) -> ScenarioConfig {
        ScenarioConfig {
            model: ModelParams {
                n_qubits,
                nu: 5.0,
                omega: 1.0,
                v_gate: 1.0,
                e_j: 5.0,
                chi: 0.0,
                kappa: 0.0,
                gamma: 0.0,
                gamma_cross: 0.0,
                n_bar: 0.0,
                n_max,
                rwa: false,
            },
            initial_qubits: QubitInitial::Basis(qubits.to_string()),
            initial_resonator: ResonatorInitial::Vacuum,
            grid: GridSpec {
                t_max: 50.0,
                n_points: 2000,
            },
            method: Method::Direct,
            measures: default_measures(n_qubits),
            csv_path: None,
            svg_path: None,
        }
    }
    fn sweep_f64(
        cfg: &ScenarioConfig,
        key: &'static str,
        values: &[f64],
    ) -> Result<Vec<(String, ScenarioConfig)>> {
        let strings: Vec<String> = values.iter().map(|&v| fmt_value(v)).collect();
        sweep_configs(cfg, key, &strings)
    }

    match name {
        "fig1" => {
            let cfg = base(1, 10, "e");
            Ok(Preset {
                name: "fig1",
                sweep_key: Some("dissipation.kappa"),
                runs: sweep_f64(&cfg, "dissipation.kappa", &DEFAULT_KAPPA_SWEEP)?,
            })
        }
        "fig2" => {
            let cfg = base(2, 8, "eg");
            Ok(Preset {
                name: "fig2",
                sweep_key: Some("dissipation.kappa"),
                runs: sweep_f64(&cfg, "dissipation.kappa", &DEFAULT_KAPPA_SWEEP)?,
            })
        }
        "fig3" => {
            let mut cfg = base(2, 8, "ee");
            cfg.model.gamma_cross = 0.001;
            cfg.model.n_bar = 0.5;
            cfg.initial_qubits = QubitInitial::Mixed(MixedTwoQubit {
                a: 0.1,
                b: 0.45,
                c: 0.45,
                f: C64::new(0.0, 0.0),
                normalize: true,
            });
            cfg.initial_resonator = ResonatorInitial::Thermal(0.5);
            Ok(Preset {
                name: "fig3",
                sweep_key: Some("dissipation.gamma"),
                runs: sweep_f64(&cfg, "dissipation.gamma", &[0.01, 0.1, 0.7])?,
            })
        }
        "fig4" => {
            let cfg = base(2, 6, "ee");
            Ok(Preset {
                name: "fig4",
                sweep_key: Some("model.chi"),
                runs: sweep_f64(&cfg, "model.chi", &[30.0, 15.0, 0.01])?,
            })
        }
        "fig5" => {
            let mut cfg = base(2, 8, "ee");
            cfg.model.gamma = 0.01;
            cfg.model.gamma_cross = 0.001;
            // The thermal occupation sets the bath and the initial
            // resonator state together.
            let runs = [0.01, 0.1, 0.5]
                .iter()
                .map(|&nb| {
                    let mut c = cfg.clone();
                    c.model.n_bar = nb;
                    c.initial_resonator = ResonatorInitial::Thermal(nb);
                    (sweep_label("dissipation.n_bar", &fmt_value(nb)), c)
                })
                .collect();
            Ok(Preset {
                name: "fig5",
                sweep_key: Some("dissipation.n_bar"),
                runs,
            })
        }
        "fig6" | "fig7" => {
            let mut cfg = base(3, 6, "eee");
            cfg.model.gamma = 0.01;
            cfg.model.gamma_cross = 0.001;
            cfg.model.n_bar = 0.5;
            cfg.initial_resonator = ResonatorInitial::Thermal(0.5);
            let label = if name == "fig6" { "fig6" } else { "fig7" };
            Ok(Preset {
                name: if name == "fig6" { "fig6" } else { "fig7" },
                sweep_key: None,
                runs: vec![(label.to_string(), cfg)],
            })
        }
        _ => Err(ScenarioError::UnknownPreset {
            name: name.to_string(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Oracle comparison
// ---------------------------------------------------------------------------

/// Result of comparing the full pipeline against the independent
/// single-excitation integrator on the same grid.
#[derive(Clone, Copy, Debug)]
pub struct OracleComparison {
    pub max_abs_dev: f64,
    pub n_points: usize,
}

/// Evolve the configured model through the full pipeline, reduce to the
/// qubit plus two-level resonator, and compare the tangle against the
/// independent single-excitation integrator.  Requires the excited-qubit,
/// vacuum-resonator initial state (the regime the reference integrator
/// covers); the model must be within the reference's scope (one qubit, only
/// resonator decay) and is meaningful with the excitation-conserving
/// Hamiltonian (`numerics.rwa = true`).
pub fn oracle_compare(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<OracleComparison> {
    if cfg.initial_qubits != QubitInitial::Basis("e".to_string())
        || cfg.initial_resonator != ResonatorInitial::Vacuum
    {
        return Err(ScenarioError::OracleScope);
    }
    let times = cfg.grid.times()?;
    let reference = single_excitation_oracle(&cfg.model, &times)?;
    let space = cfg.model.space();
    let rho0 = build_initial_state(cfg, &space)?;
    let traj = evolve(&rho0, &cfg.model, &times, cfg.method, &opts.evolve)?;
    let mut max_abs_dev = 0.0f64;
    for (k, state) in traj.states.iter().enumerate() {
        let dm = DensityMatrix {
            matrix: state.clone(),
            space: space.clone(),
        };
        let red = effective_two_level_reduce(&dm, 0, 1.0)?;
        let tangle = tangle_two_qubit(&red.matrix)?;
        max_abs_dev = max_abs_dev.max((tangle - reference.tangle[k]).abs());
    }
    Ok(OracleComparison {
        max_abs_dev,
        n_points: times.len(),
    })
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Format one table value with 17 significant digits (round-trip exact for
/// binary64).
pub fn format_value(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Render the full CSV document: header row, one data row per grid point,
/// and `#`-prefixed footer metadata lines.
pub fn csv_string(run: &ScenarioRun) -> String {
    let mut s = String::new();
    s.push_str(&run.header.join(","));
    s.push('\n');
    let mut cells: Vec<String> = Vec::with_capacity(run.header.len());
    for row in &run.rows {
        cells.clear();
        cells.extend(row.iter().map(|&v| format_value(v)));
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    let method = match run.method {
        Method::Direct => "direct",
        Method::Exponential => "exponential",
    };
    let _ = writeln!(s, "# n_qubits = {}", run.n_qubits);
    let _ = writeln!(s, "# method = {}", method);
    let _ = writeln!(s, "# rwa = {}", run.rwa);
    let _ = writeln!(s, "# n_max_used = {}", run.cutoff.n_max_used);
    let _ = writeln!(s, "# cutoff_checked = {}", run.cutoff.checked);
    match run.cutoff.converged {
        Some(c) => {
            let _ = writeln!(s, "# cutoff_converged = {}", c);
        }
        None => {
            let _ = writeln!(s, "# cutoff_converged = unchecked");
        }
    }
    if let Some(d) = run.cutoff.max_delta {
        let _ = writeln!(s, "# cutoff_max_delta = {}", format_value(d));
    }
    let _ = writeln!(
        s,
        "# max_trace_dev = {}",
        format_value(run.physicality.max_trace_dev)
    );
    let _ = writeln!(
        s,
        "# max_herm_defect = {}",
        format_value(run.physicality.max_herm_defect)
    );
    let _ = writeln!(
        s,
        "# min_eigenvalue = {}",
        format_value(run.physicality.min_eigenvalue)
    );
    if let Some(mass) = run.thermal_truncated_mass {
        let _ = writeln!(s, "# thermal_truncated_mass = {}", format_value(mass));
    }
    let _ = writeln!(s, "# rhs_evals = {}", run.rhs_evals);
    s
}

/// Write the CSV document to disk.
pub fn write_csv(run: &ScenarioRun, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(run)).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a CSV document produced by [`csv_string`]: returns the header
/// names and the data rows, ignoring footer/comment lines.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match &header {
            None => header = Some(t.split(',').map(|c| c.trim().to_string()).collect()),
            Some(h) => {
                let row: std::result::Result<Vec<f64>, _> =
                    t.split(',').map(|c| c.trim().parse::<f64>()).collect();
                let row = row.map_err(|e| ScenarioError::CsvParse {
                    detail: format!("bad number in `{}`: {}", t, e),
                })?;
                if row.len() != h.len() {
                    return Err(ScenarioError::CsvParse {
                        detail: format!("row has {} cells, header has {}", row.len(), h.len()),
                    });
                }
                rows.push(row);
            }
        }
    }
    header
        .map(|h| (h, rows))
        .ok_or_else(|| ScenarioError::CsvParse {
            detail: "missing header row".to_string(),
        })
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

const SVG_PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn svg_tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.001 && v.abs() < 10000.0 {
        format!("{:.4}", v)
    } else {
        format!("{:.2e}", v)
    }
}

/// Render a minimal line plot of the run: every measure column against
/// omega_t, with axes, tick labels, and a legend.  Diagnostics columns
/// (trace_dev, min_eig, leakage) are not plotted.
pub fn svg_string(run: &ScenarioRun) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 55.0;
    let pw = W - ML - MR;
    let ph = H - MT - MB;

    let skip = ["omega_t", "trace_dev", "min_eig", "leakage"];
    let series: Vec<usize> = (0..run.header.len())
        .filter(|&c| !skip.contains(&run.header[c]))
        .collect();
    let x: Vec<f64> = run.rows.iter().map(|r| r[0]).collect();
    let (x0, x1) = (
        x.iter().copied().fold(f64::INFINITY, f64::min),
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for row in &run.rows {
        for &c in &series {
            y0 = y0.min(row[c]);
            y1 = y1.max(row[c]);
        }
    }
    // Degenerate (constant or empty) ranges get padded so the scale stays
    // finite; the comparison is written to catch NaN bounds as well.
    if y1 <= y0 || y1.is_nan() || y0.is_nan() {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let xs = |v: f64| ML + (v - x0) / (x1 - x0) * pw;
    let ys = |v: f64| MT + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    // Ticks.
    for k in 0..=5 {
        let v = x0 + (x1 - x0) * k as f64 / 5.0;
        let px = xs(v);
        let _ = writeln!(
            s,
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            H - MB + 20.0,
            svg_tick_label(v)
        );
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let py = ys(v);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{ML}\" y2=\"{py:.2}\" stroke=\"black\"/>",
            ML - 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            ML - 9.0,
            py + 4.0,
            svg_tick_label(v)
        );
    }
    // Axis labels.
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">omega_t</text>",
        ML + pw / 2.0,
        H - 12.0
    );
    // Polylines and legend.
    for (si, &c) in series.iter().enumerate() {
        let color = SVG_PALETTE[si % SVG_PALETTE.len()];
        let mut points = String::new();
        for row in &run.rows {
            let _ = write!(points, "{:.2},{:.2} ", xs(row[0]), ys(row[c]));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.trim_end()
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\">{}</text>",
            ML + 10.0 + 120.0 * si as f64,
            MT - 12.0,
            run.header[c]
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Write the SVG line plot to disk.
pub fn write_svg(run: &ScenarioRun, path: &Path) -> Result<()> {
    std::fs::write(path, svg_string(run)).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
