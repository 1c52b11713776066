//! System Hamiltonians: the four-mode bosonic model and its qubit reduction.
//!
//! The bosonic model (in the rotating frame, after the rotating-wave
//! approximation) is
//!
//! ```text
//! H = sum_j [ (w~_j - wrot_j) n_j + K_j n_j^2
//!             + lam_j (a_j e^{+i(w'_j - wrot_j) t} + h.c.) ]
//!     + g (a1+ a2+ a3 a4 + h.c.) + sum_{i<j} J_ij n_i n_j
//! ```
//!
//! with `n_j = a_j+ a_j` and the Kerr term in the printed operator ordering
//! `a+ a a+ a = n^2` (the difference to normal ordering is a linear `n` term
//! absorbable into `w~`). Restricting every mode to two levels and absorbing
//! the linear part of the cross-Kerr couplings into the shifted frequencies
//! `w_j = w~_j + (1/2) sum_{i != j} J_ij` gives the qubit model
//!
//! ```text
//! H0 = sum_j ((w_j - wrot_j)/2) sz_j + (lam/2) sx_1
//!      + g (s+_1 s+_2 s-_3 s-_4 + h.c.) + sum_{i<j} (J_ij/4) sz_i sz_j
//! H_drive(t) = lam2 (s-_2 e^{i d t} + s+_2 e^{-i d t}),  d = w'_2 - wrot_2
//! ```
//!
//! Constant diagonal terms generated by the two-level reduction are dropped,
//! matching the printed qubit model; they shift all eigenvalues equally and
//! cancel in every transition energy.
//!
//! Defaults baked into the constructors (all overridable): `lam_1 = lam/2`,
//! `lam_2 = lam2`, `lam_3 = lam_4 = 0`, `w'_j = w_j`, `wrot_j = w_j`.

use crate::error::{Error, Result};
use crate::operators::{
    embed, is_hermitian, ladder_ops, max_abs, pauli_x, pauli_z, re, sigma_minus, sigma_plus,
    ModeLayout, OperatorMatrix, IM,
};

/// Absolute tolerance (rad/us) on the two rotating-frame sum conditions.
pub const FRAME_TOL: f64 = 1e-9;

/// Minimum pairwise gap (rad/us) between shifted frequencies.
pub const MIN_FREQUENCY_GAP: f64 = 1e-6;

/// Full parameter record for the four-resonator system.
///
/// All frequencies and strengths are angular (rad/us); `gamma` is 1/us.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Bare resonator frequencies `w~_j`.
    pub omega_tilde: [f64; 4],
    /// Shifted frequencies `w_j = w~_j + (1/2) sum_{i != j} J_ij`.
    pub omega: [f64; 4],
    /// Rotating-frame frequencies `wrot_j`.
    pub omega_rot: [f64; 4],
    /// Drive-field frequencies `w'_j` (the probe sweeps `w'_2`).
    pub omega_drive: [f64; 4],
    /// Kerr coefficients `K_j` (bosonic model only).
    pub kerr: [f64; 4],
    /// Per-mode drive strengths `lam_j`.
    pub lambda_drive: [f64; 4],
    /// Rabi drive `lam` on resonator 1 (enters as `lam_1 = lam/2`).
    pub lambda_rabi: f64,
    /// Probe strength `lam2` on resonator 2.
    pub lambda_probe: f64,
    /// Four-body interaction strength `g`.
    pub g: f64,
    /// Symmetric zero-diagonal cross-Kerr matrix `J_ij`.
    pub j: [[f64; 4]; 4],
    /// Single-resonator decay rate `gamma`.
    pub gamma: f64,
}

/// Builds the symmetric zero-diagonal coupling matrix from the six upper
/// entries `(J12, J13, J14, J23, J24, J34)`.
pub fn j_matrix(upper: [f64; 6]) -> [[f64; 4]; 4] {
    let [j12, j13, j14, j23, j24, j34] = upper;
    [
        [0.0, j12, j13, j14],
        [j12, 0.0, j23, j24],
        [j13, j23, 0.0, j34],
        [j14, j24, j34, 0.0],
    ]
}

impl SystemParams {
    /// Builds a parameter record from the *shifted* frequencies `w_j`
    /// (the form quoted alongside the J values), inverting the shift to
    /// recover `w~_j`. Rotating frame and drive frequencies default to
    /// `w_j`; Kerr coefficients default to zero.
    pub fn from_shifted(
        omega: [f64; 4],
        g: f64,
        lambda_rabi: f64,
        lambda_probe: f64,
        gamma: f64,
        j: [[f64; 4]; 4],
    ) -> Result<Self> {
        let mut omega_tilde = [0.0; 4];
        for jj in 0..4 {
            let half_row: f64 = (0..4).filter(|&i| i != jj).map(|i| j[jj][i]).sum::<f64>() / 2.0;
            omega_tilde[jj] = omega[jj] - half_row;
        }
        let params = Self {
            omega_tilde,
            omega,
            omega_rot: omega,
            omega_drive: omega,
            kerr: [0.0; 4],
            lambda_drive: [lambda_rabi / 2.0, lambda_probe, 0.0, 0.0],
            lambda_rabi,
            lambda_probe,
            g,
            j,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    /// Like [`SystemParams::from_shifted`] but starting from the bare
    /// frequencies `w~_j`.
    pub fn from_bare(
        omega_tilde: [f64; 4],
        g: f64,
        lambda_rabi: f64,
        lambda_probe: f64,
        gamma: f64,
        j: [[f64; 4]; 4],
    ) -> Result<Self> {
        let mut draft = Self {
            omega_tilde,
            omega: [0.0; 4],
            omega_rot: [0.0; 4],
            omega_drive: [0.0; 4],
            kerr: [0.0; 4],
            lambda_drive: [lambda_rabi / 2.0, lambda_probe, 0.0, 0.0],
            lambda_rabi,
            lambda_probe,
            g,
            j,
            gamma,
        };
        let omega = shifted_frequencies(&draft);
        draft.omega = omega;
        draft.omega_rot = omega;
        draft.omega_drive = omega;
        draft.validate()?;
        Ok(draft)
    }

    /// Copy with the probe frequency `w'_2` replaced.
    pub fn with_probe_frequency(&self, omega_probe: f64) -> Self {
        let mut p = self.clone();
        p.omega_drive[1] = omega_probe;
        p
    }

    /// Copy with a different rotating frame (the two frame sum conditions
    /// must still hold; callers re-validate).
    pub fn with_rotating_frame(&self, omega_rot: [f64; 4]) -> Result<Self> {
        let mut p = self.clone();
        p.omega_rot = omega_rot;
        p.validate()?;
        Ok(p)
    }

    /// Frame detunings `w_j - wrot_j`.
    pub fn frame_deltas(&self) -> [f64; 4] {
        [
            self.omega[0] - self.omega_rot[0],
            self.omega[1] - self.omega_rot[1],
            self.omega[2] - self.omega_rot[2],
            self.omega[3] - self.omega_rot[3],
        ]
    }

    /// Probe detuning `d = w'_2 - wrot_2` that sets the drive phase.
    pub fn probe_detuning(&self) -> f64 {
        self.omega_drive[1] - self.omega_rot[1]
    }

    /// Checks every recorded invariant, returning the first violation as a
    /// named-constraint error.
    pub fn validate(&self) -> Result<()> {
        let all = self
            .omega_tilde
            .iter()
            .chain(&self.omega)
            .chain(&self.omega_rot)
            .chain(&self.omega_drive)
            .chain(&self.kerr)
            .chain(&self.lambda_drive)
            .chain([&self.lambda_rabi, &self.lambda_probe, &self.g, &self.gamma]);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::Constraint("non-finite parameter value".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::Constraint(format!(
                "decay rate must be non-negative, got gamma = {}",
                self.gamma
            )));
        }
        if self.lambda_rabi < 0.0 || self.lambda_probe < 0.0 {
            return Err(Error::Constraint(
                "drive strengths lambda and lambda2 must be non-negative \
                 (the closed-form mixing angle fixes the 2*theta in (0, pi) branch)"
                    .into(),
            ));
        }
        for a in 0..4 {
            if self.j[a][a] != 0.0 {
                return Err(Error::Constraint(format!(
                    "J must have zero diagonal, got J[{0}][{0}] = {1}",
                    a + 1,
                    self.j[a][a]
                )));
            }
            for b in 0..4 {
                if self.j[a][b] != self.j[b][a] {
                    return Err(Error::Constraint(format!(
                        "J must be symmetric, got J[{}][{}] = {} vs J[{}][{}] = {}",
                        a + 1,
                        b + 1,
                        self.j[a][b],
                        b + 1,
                        a + 1,
                        self.j[b][a]
                    )));
                }
            }
        }
        let w = &self.omega;
        let lhs = w[0] + w[1];
        let rhs = w[2] + w[3];
        if (lhs - rhs).abs() > FRAME_TOL {
            return Err(Error::Constraint(format!(
                "frequency-matching condition violated: omega1 + omega2 = {lhs} rad/us \
                 but omega3 + omega4 = {rhs} rad/us"
            )));
        }
        let r = &self.omega_rot;
        let lhs = r[0] + r[1];
        let rhs = r[2] + r[3];
        if (lhs - rhs).abs() > FRAME_TOL {
            return Err(Error::Constraint(format!(
                "rotating-frame condition violated: omega_rot1 + omega_rot2 = {lhs} rad/us \
                 but omega_rot3 + omega_rot4 = {rhs} rad/us"
            )));
        }
        for a in 0..4 {
            for b in a + 1..4 {
                if (w[a] - w[b]).abs() <= MIN_FREQUENCY_GAP {
                    return Err(Error::Constraint(format!(
                        "shifted frequencies must be pairwise distinct: omega{} = {} and \
                         omega{} = {} differ by less than {MIN_FREQUENCY_GAP} rad/us",
                        a + 1,
                        w[a],
                        b + 1,
                        w[b]
                    )));
                }
            }
        }
        let recomputed = shifted_frequencies(self);
        for jj in 0..4 {
            if (recomputed[jj] - self.omega[jj]).abs() > FRAME_TOL {
                return Err(Error::Constraint(format!(
                    "omega{} = {} is inconsistent with omega_tilde{} + half the J row sum = {}",
                    jj + 1,
                    self.omega[jj],
                    jj + 1,
                    recomputed[jj]
                )));
            }
        }
        Ok(())
    }
}

/// Shifted frequencies `w_j = w~_j + (1/2) sum_{i != j} J_ij`.
pub fn shifted_frequencies(params: &SystemParams) -> [f64; 4] {
    let mut omega = [0.0; 4];
    for jj in 0..4 {
        let half_row: f64 =
            (0..4).filter(|&i| i != jj).map(|i| params.j[jj][i]).sum::<f64>() / 2.0;
        omega[jj] = params.omega_tilde[jj] + half_row;
    }
    omega
}

/// One oscillating drive term `amp * (L e^{+i f t} + L+ e^{-i f t})`.
#[derive(Debug, Clone)]
pub struct DriveTerm {
    /// Lowering operator carrying the `e^{+i f t}` phase.
    pub lower: OperatorMatrix,
    /// Raising operator (adjoint of `lower`) carrying `e^{-i f t}`.
    pub raise: OperatorMatrix,
    /// Drive strength (rad/us).
    pub amplitude: f64,
    /// Drive angular frequency `f` (rad/us); 0 makes the term static.
    pub frequency: f64,
}

/// `H(t) = static_part + sum of drive terms`, Hermitian at every `t`.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    pub static_part: OperatorMatrix,
    pub drives: Vec<DriveTerm>,
}

impl TimeDependentHamiltonian {
    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.static_part.nrows()
    }

    /// Dense Hamiltonian at time `t` (us).
    pub fn evaluate(&self, t: f64) -> OperatorMatrix {
        let mut h = self.static_part.clone();
        for d in &self.drives {
            let phase = (IM * d.frequency * t).exp() * d.amplitude;
            h += &d.lower * phase + &d.raise * phase.conj();
        }
        h
    }

    /// The probe drive (single-drive Hamiltonians only).
    pub fn probe(&self) -> Option<&DriveTerm> {
        self.drives.first()
    }

    /// Frequency of the probe drive, 0 when driveless.
    pub fn drive_frequency(&self) -> f64 {
        self.probe().map_or(0.0, |d| d.frequency)
    }

    /// Amplitude of the probe drive, 0 when driveless.
    pub fn probe_strength(&self) -> f64 {
        self.probe().map_or(0.0, |d| d.amplitude)
    }

    /// Upper bound on `max |H(t)| element` over all t: the static maximum
    /// plus every drive's amplitude-weighted operator maximum.
    pub fn max_element_bound(&self) -> f64 {
        let mut bound = max_abs(&self.static_part);
        for d in &self.drives {
            bound += d.amplitude * max_abs(&d.lower) + d.amplitude * max_abs(&d.raise);
        }
        bound
    }

    /// Largest drive frequency magnitude (rad/us).
    pub fn max_drive_frequency(&self) -> f64 {
        self.drives.iter().map(|d| d.frequency.abs()).fold(0.0, f64::max)
    }
}

/// Builds the static qubit-model Hamiltonian `H0` (16x16).
pub fn build_qubit_h0(params: &SystemParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let layout = ModeLayout::qubits(4);
    let dim = layout.dim();
    let mut h = OperatorMatrix::zeros(dim, dim);

    let deltas = params.frame_deltas();
    let sz = pauli_z();
    for mode in 1..=4 {
        if deltas[mode - 1] != 0.0 {
            h += embed(&sz, mode, &layout)? * re(deltas[mode - 1] / 2.0);
        }
    }

    h += embed(&pauli_x(), 1, &layout)? * re(params.lambda_rabi / 2.0);

    let four_body = sigma_plus()
        .kronecker(&sigma_plus())
        .kronecker(&sigma_minus())
        .kronecker(&sigma_minus());
    h += (&four_body + four_body.adjoint()) * re(params.g);

    for a in 1..=4usize {
        for b in a + 1..=4 {
            let jab = params.j[a - 1][b - 1];
            if jab != 0.0 {
                let zz = embed(&sz, a, &layout)? * embed(&sz, b, &layout)?;
                h += zz * re(jab / 4.0);
            }
        }
    }

    debug_assert!(is_hermitian(&h, 1e-12 * max_abs(&h).max(1.0)));
    Ok(h)
}

/// Builds the qubit model as `H0` plus the oscillating probe on resonator 2:
/// `H_drive(t) = lam2 (s-_2 e^{i d t} + s+_2 e^{-i d t})`, `d = w'_2 - wrot_2`.
pub fn build_probe_drive(params: &SystemParams) -> Result<TimeDependentHamiltonian> {
    let static_part = build_qubit_h0(params)?;
    let layout = ModeLayout::qubits(4);
    let lower = embed(&sigma_minus(), 2, &layout)?;
    let raise = embed(&sigma_plus(), 2, &layout)?;
    Ok(TimeDependentHamiltonian {
        static_part,
        drives: vec![DriveTerm {
            lower,
            raise,
            amplitude: params.lambda_probe,
            frequency: params.probe_detuning(),
        }],
    })
}

/// Builds the bosonic model on `(fock_cutoff + 1)` levels per mode.
///
/// The static part carries detuning, Kerr (`K n^2`, printed ordering),
/// four-body, and cross-Kerr terms; every mode with `lam_j != 0` contributes
/// an oscillating [`DriveTerm`] at frequency `w'_j - wrot_j`.
pub fn build_bosonic_h(params: &SystemParams, fock_cutoff: usize) -> Result<TimeDependentHamiltonian> {
    params.validate()?;
    if fock_cutoff < 1 {
        return Err(Error::InvalidArgument(format!(
            "fock cutoff must be at least 1, got {fock_cutoff}"
        )));
    }
    let local = fock_cutoff + 1;
    let layout = ModeLayout::new(vec![local; 4])?;
    let dim = layout.dim();
    let (lower, raise) = ladder_ops(local)?;
    let number = &raise * &lower;

    let mut h = OperatorMatrix::zeros(dim, dim);
    let mut numbers = Vec::with_capacity(4);
    for mode in 1..=4usize {
        let n_full = embed(&number, mode, &layout)?;
        let detuning = params.omega_tilde[mode - 1] - params.omega_rot[mode - 1];
        h += &n_full * re(detuning);
        h += &n_full * &n_full * re(params.kerr[mode - 1]);
        numbers.push(n_full);
    }

    let four_body = raise
        .kronecker(&raise)
        .kronecker(&lower)
        .kronecker(&lower);
    h += (&four_body + four_body.adjoint()) * re(params.g);

    for a in 0..4 {
        for b in a + 1..4 {
            if params.j[a][b] != 0.0 {
                h += &numbers[a] * &numbers[b] * re(params.j[a][b]);
            }
        }
    }

    let mut drives = Vec::new();
    for mode in 1..=4usize {
        let amp = params.lambda_drive[mode - 1];
        if amp != 0.0 {
            drives.push(DriveTerm {
                lower: embed(&lower, mode, &layout)?,
                raise: embed(&raise, mode, &layout)?,
                amplitude: amp,
                frequency: params.omega_drive[mode - 1] - params.omega_rot[mode - 1],
            });
        }
    }

    Ok(TimeDependentHamiltonian { static_part: h, drives })
}
