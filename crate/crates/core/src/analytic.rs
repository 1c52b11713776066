//! Closed-form eigensystems of the two invariant subspaces that carry the
//! spectroscopic signal, plus the table of probe-accessible transitions.
//!
//! The static qubit Hamiltonian leaves two subspaces invariant:
//!
//! * **subspace A** spanned by `{|up up dn dn>, |dn up dn dn>, |dn dn up up>,
//!   |up dn up up>}` (that basis order is used for all 4-vectors below), with
//!   eigenpairs `E1..E4`;
//! * **subspace B** spanned by `{|up dn dn dn>, |dn dn dn dn>}`, with
//!   eigenpairs `E5, E6`.
//!
//! In subspace A the Hamiltonian reduces to
//!
//! ```text
//!         [ J+   l/2  g    0   ]
//! H~0  =  [ l/2  J-   0    0   ]        l = lambda (Rabi drive)
//!         [ g    0    J+   l/2 ]
//!         [ 0    0    l/2  J-  ]
//! ```
//!
//! whose closed-form eigenvalues are, with `a = g + Jt-`, `b = g - Jt-`,
//! `R+ = sqrt(a^2 + l^2)`, `R- = sqrt(b^2 + l^2)`:
//!
//! ```text
//! E1 = (g + Jt+ + R+)/2      E3 = (g + Jt+ - R+)/2
//! E2 = (-g + Jt+ + R-)/2     E4 = (-g + Jt+ - R-)/2
//! ```
//!
//! The printed eigenvectors divide by `l` and by `a - R+` (or `b - R-`);
//! both middle coefficients of each vector are algebraically equal after
//! rationalization (`(a - R+)/l = -l/(a + R+)`), so the stable forms used
//! here are, with `c+ = l/(a + R+)` and `c- = l/(b + R-)`:
//!
//! ```text
//! v1 = (1, c+, 1, c+)/N+     v3 = (-c+, 1, -c+, 1)/N+
//! v2 = (-c-, -1, c-, 1)/N-   v4 = (-1, c-, 1, -c-)/N-
//! ```
//!
//! When the denominator `a + R+` would cancel (`a < 0`) it is computed as
//! `l^2/(R+ - a)`; at `l = 0` exactly the limit vectors are substituted by
//! eigenvalue continuity.
//!
//! Subspace B reduces to `(eps/2) sz + (l/2) sx + (k/2) 1` with
//! `eps = J+' - J-'`, mixed by the angle `2*theta = atan2(l, eps)`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::hamiltonian::SystemParams;
use crate::operators::{embed, pauli_x, re, ModeLayout, OperatorMatrix, StateVector};

/// Basis indices (in the 16-dimensional computational basis, mode 1 as the
/// most significant bit) of the subspace-A basis states, in the canonical
/// order `|up up dn dn>, |dn up dn dn>, |dn dn up up>, |up dn up up>`.
pub const SUBSPACE_A_INDICES: [usize; 4] = [0b1100, 0b0100, 0b0011, 0b1011];

/// Basis indices of the subspace-B states `|up dn dn dn>, |dn dn dn dn>`.
pub const SUBSPACE_B_INDICES: [usize; 2] = [0b1000, 0b0000];

/// The six signed combinations of the cross-Kerr couplings that appear in
/// the closed forms (diagonal energies of the subspace basis states).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCombos {
    /// `J+ = (J12 - J13 - J14 - J23 - J24 + J34)/4`.
    pub j_plus: f64,
    /// `J- = (-J12 + J13 + J14 - J23 - J24 + J34)/4`.
    pub j_minus: f64,
    /// `J+' = (-J12 - J13 - J14 + J23 + J24 + J34)/4`.
    pub j_plus_prime: f64,
    /// `J-' = (J12 + J13 + J14 + J23 + J24 + J34)/4`.
    pub j_minus_prime: f64,
    /// `Jt+ = J+ + J-`.
    pub jt_plus: f64,
    /// `Jt- = J+ - J-`.
    pub jt_minus: f64,
}

impl CouplingCombos {
    /// Computes all six combinations from the symmetric coupling matrix.
    pub fn from_j(j: &[[f64; 4]; 4]) -> Self {
        let (j12, j13, j14) = (j[0][1], j[0][2], j[0][3]);
        let (j23, j24, j34) = (j[1][2], j[1][3], j[2][3]);
        let j_plus = (j12 - j13 - j14 - j23 - j24 + j34) / 4.0;
        let j_minus = (-j12 + j13 + j14 - j23 - j24 + j34) / 4.0;
        let j_plus_prime = (-j12 - j13 - j14 + j23 + j24 + j34) / 4.0;
        let j_minus_prime = (j12 + j13 + j14 + j23 + j24 + j34) / 4.0;
        Self {
            j_plus,
            j_minus,
            j_plus_prime,
            j_minus_prime,
            jt_plus: j_plus + j_minus,
            jt_minus: j_plus - j_minus,
        }
    }
}

/// One closed-form eigenpair of subspace A (4-vector in the canonical
/// subspace basis order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceAPair {
    pub energy: f64,
    pub state: [f64; 4],
}

/// `a + sqrt(a^2 + l^2)` without cancellation for `a < 0` (where the naive
/// difference loses all significant digits as `l -> 0`).
fn stable_denom(a: f64, lambda: f64) -> f64 {
    let r = a.hypot(lambda);
    if a >= 0.0 {
        a + r
    } else {
        lambda * lambda / (r - a)
    }
}

fn normalize4(v: [f64; 4]) -> [f64; 4] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    [v[0] / n, v[1] / n, v[2] / n, v[3] / n]
}

/// Exact eigenpairs `E1..E4` of subspace A, in label order.
///
/// Requires `lambda >= 0`; at `lambda = 0` exactly, the limit eigenvectors
/// (dressed pairs `(|up up dn dn> pm |dn dn up up>)/sqrt(2)` and bare pairs
/// on `{|dn up dn dn>, |up dn up up>}`) are selected by eigenvalue
/// continuity.
pub fn subspace_a_exact(
    g: f64,
    lambda: f64,
    jt_plus: f64,
    jt_minus: f64,
) -> Result<[SubspaceAPair; 4]> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "subspace-A closed forms require lambda >= 0, got {lambda}"
        )));
    }
    let a = g + jt_minus;
    let b = g - jt_minus;
    let r_plus = a.hypot(lambda);
    let r_minus = b.hypot(lambda);
    let e1 = (g + jt_plus + r_plus) / 2.0;
    let e3 = (g + jt_plus - r_plus) / 2.0;
    let e2 = (-g + jt_plus + r_minus) / 2.0;
    let e4 = (-g + jt_plus - r_minus) / 2.0;

    let s = FRAC_1_SQRT_2;
    let (v1, v3) = if lambda == 0.0 {
        if a >= 0.0 {
            ([s, 0.0, s, 0.0], [0.0, s, 0.0, s])
        } else {
            ([0.0, s, 0.0, s], [-s, 0.0, -s, 0.0])
        }
    } else {
        let c = lambda / stable_denom(a, lambda);
        let n = (2.0 * (1.0 + c * c)).sqrt();
        ([1.0 / n, c / n, 1.0 / n, c / n], [-c / n, 1.0 / n, -c / n, 1.0 / n])
    };
    let (v2, v4) = if lambda == 0.0 {
        if b >= 0.0 {
            ([0.0, -s, 0.0, s], [-s, 0.0, s, 0.0])
        } else {
            ([-s, 0.0, s, 0.0], [0.0, s, 0.0, -s])
        }
    } else {
        let c = lambda / stable_denom(b, lambda);
        let n = (2.0 * (1.0 + c * c)).sqrt();
        (
            [-c / n, -1.0 / n, c / n, 1.0 / n],
            [-1.0 / n, c / n, 1.0 / n, -c / n],
        )
    };

    Ok([
        SubspaceAPair { energy: e1, state: v1 },
        SubspaceAPair { energy: e2, state: v2 },
        SubspaceAPair { energy: e3, state: v3 },
        SubspaceAPair { energy: e4, state: v4 },
    ])
}

/// The subspace-A Hamiltonian `H~0` as a dense 4x4 matrix in the canonical
/// subspace basis order (useful as an independent residual oracle).
pub fn subspace_a_hamiltonian(g: f64, lambda: f64, jt_plus: f64, jt_minus: f64) -> OperatorMatrix {
    let j_plus = (jt_plus + jt_minus) / 2.0;
    let j_minus = (jt_plus - jt_minus) / 2.0;
    let l2 = lambda / 2.0;
    let mut h = OperatorMatrix::zeros(4, 4);
    h[(0, 0)] = re(j_plus);
    h[(1, 1)] = re(j_minus);
    h[(2, 2)] = re(j_plus);
    h[(3, 3)] = re(j_minus);
    h[(0, 1)] = re(l2);
    h[(1, 0)] = re(l2);
    h[(2, 3)] = re(l2);
    h[(3, 2)] = re(l2);
    h[(0, 2)] = re(g);
    h[(2, 0)] = re(g);
    h
}

/// One simplified (first-order-in-lambda) eigenpair with its canonical label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedPair {
    /// Canonical label 1..=4 after the relabeling rule.
    pub label: u8,
    pub energy: f64,
    pub state: [f64; 4],
}

/// Result of the perturbative treatment of subspace A.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedSubspaceA {
    /// Pairs in label order `E1..E4`.
    pub pairs: [SimplifiedPair; 4],
    /// Present when `|g pm Jt-| <= 2 lambda`, where the expansion degrades.
    pub regime_warning: Option<String>,
}

/// Perturbative (`lambda << g`) eigenpairs of subspace A with zeroth-order
/// energies, first-order states, and the canonical relabeling: the dressed
/// level `g + (Jt+ + Jt-)/2` carries label 1 when `g + Jt- >= 0` and label 3
/// otherwise, and symmetrically for labels 2/4 with the sign of `g - Jt-`.
pub fn subspace_a_simplified(
    g: f64,
    lambda: f64,
    jt_plus: f64,
    jt_minus: f64,
) -> Result<SimplifiedSubspaceA> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "subspace-A closed forms require lambda >= 0, got {lambda}"
        )));
    }
    let a = g + jt_minus;
    let b = g - jt_minus;
    let regime_warning = if a.abs() <= 2.0 * lambda || b.abs() <= 2.0 * lambda {
        Some(format!(
            "perturbative regime violated: the expansion needs |g + Jt-| and |g - Jt-| \
             above 2*lambda = {}, got {} and {}",
            2.0 * lambda,
            a.abs(),
            b.abs()
        ))
    } else {
        None
    };

    let e_dressed_plus = g + (jt_plus + jt_minus) / 2.0;
    let e_dressed_minus = -g + (jt_plus + jt_minus) / 2.0;
    let e_bare = (jt_plus - jt_minus) / 2.0;

    let qa = if a != 0.0 { lambda / (2.0 * a) } else { 0.0 };
    let qb = if b != 0.0 { lambda / (2.0 * b) } else { 0.0 };
    let dressed_plus = normalize4([1.0, qa, 1.0, qa]);
    let bare_plus = normalize4([-qa, 1.0, -qa, 1.0]);
    let dressed_minus = normalize4([-1.0, qb, 1.0, -qb]);
    let bare_minus = normalize4([-qb, -1.0, qb, 1.0]);

    let (p1, p3) = if a >= 0.0 {
        (
            SimplifiedPair { label: 1, energy: e_dressed_plus, state: dressed_plus },
            SimplifiedPair { label: 3, energy: e_bare, state: bare_plus },
        )
    } else {
        (
            SimplifiedPair { label: 1, energy: e_bare, state: bare_plus },
            SimplifiedPair { label: 3, energy: e_dressed_plus, state: dressed_plus },
        )
    };
    let (p2, p4) = if b >= 0.0 {
        (
            SimplifiedPair { label: 2, energy: e_bare, state: bare_minus },
            SimplifiedPair { label: 4, energy: e_dressed_minus, state: dressed_minus },
        )
    } else {
        (
            SimplifiedPair { label: 2, energy: e_dressed_minus, state: dressed_minus },
            SimplifiedPair { label: 4, energy: e_bare, state: bare_minus },
        )
    };

    Ok(SimplifiedSubspaceA { pairs: [p1, p2, p3, p4], regime_warning })
}

/// Closed-form solution of subspace B (2-vectors in the basis
/// `|up dn dn dn>, |dn dn dn dn>`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceB {
    pub e5: f64,
    pub e6: f64,
    /// Mixing angle, `2*theta = atan2(lambda, epsilon)` in `(0, pi)`.
    pub theta: f64,
    /// Common diagonal shift `k` (includes the frame detunings).
    pub k: f64,
    /// Diagonal splitting `eps = J+' - J-'`.
    pub epsilon: f64,
    /// `r = sqrt(eps^2 + lambda^2) = E5 - E6`.
    pub r: f64,
    /// `|E5> = cos(theta)|up dn dn dn> + sin(theta)|dn dn dn dn>`.
    pub state5: [f64; 2],
    /// `|E6> = -sin(theta)|up dn dn dn> + cos(theta)|dn dn dn dn>`.
    pub state6: [f64; 2],
}

/// Tolerance (rad/us) on the resonant-Rabi pinning `omega_rot1 = omega1`
/// assumed by the closed forms.
pub const RABI_PIN_TOL: f64 = 1e-6;

/// Solves subspace B exactly:
/// `eps = J+' - J-'`, `k = -(d2 + d3 + d4) + J+' + J-'` with
/// `d_j = omega_j - omega_rot_j`, `E5,6 = (k pm r)/2`.
pub fn subspace_b(params: &SystemParams) -> Result<SubspaceB> {
    params.validate()?;
    let deltas = params.frame_deltas();
    if deltas[0].abs() > RABI_PIN_TOL {
        return Err(Error::Constraint(format!(
            "closed-form subspaces assume the resonant Rabi condition omega_rot1 = omega1; \
             got omega1 - omega_rot1 = {} rad/us",
            deltas[0]
        )));
    }
    let combos = CouplingCombos::from_j(&params.j);
    let lambda = params.lambda_rabi;
    let epsilon = combos.j_plus_prime - combos.j_minus_prime;
    let k = -(deltas[1] + deltas[2] + deltas[3]) + combos.j_plus_prime + combos.j_minus_prime;
    let r = epsilon.hypot(lambda);
    let theta = 0.5 * lambda.atan2(epsilon);
    let (sin, cos) = theta.sin_cos();
    Ok(SubspaceB {
        e5: (k + r) / 2.0,
        e6: (k - r) / 2.0,
        theta,
        k,
        epsilon,
        r,
        state5: [cos, sin],
        state6: [-sin, cos],
    })
}

/// All six closed-form eigenpairs embedded in the 16-dimensional
/// computational basis.
#[derive(Debug, Clone)]
pub struct AnalyticEigensystem {
    /// `E1..E6` (rad/us), indexed by label minus one.
    pub energies: [f64; 6],
    /// Unit eigenvectors matching `energies`.
    pub states: [StateVector; 6],
    /// Subspace-B splitting `eps = J+' - J-'`.
    pub epsilon: f64,
    /// `r = sqrt(eps^2 + lambda^2)`.
    pub r: f64,
    /// Subspace-B mixing angle.
    pub theta: f64,
    /// Subspace-B common shift `k`.
    pub k: f64,
    /// Normalization constants `C1..C4` of the printed (unnormalized)
    /// subspace-A eigenvectors; `1/sqrt(2)` in the `lambda = 0` limit.
    pub normalizers: [f64; 4],
}

impl AnalyticEigensystem {
    /// Evaluates every closed form for one parameter record.
    pub fn compute(params: &SystemParams) -> Result<Self> {
        let combos = CouplingCombos::from_j(&params.j);
        let lambda = params.lambda_rabi;
        let a_pairs = subspace_a_exact(params.g, lambda, combos.jt_plus, combos.jt_minus)?;
        let b = subspace_b(params)?;

        let dim = 16;
        let mut states: [StateVector; 6] = std::array::from_fn(|_| StateVector::zeros(dim));
        for (slot, pair) in a_pairs.iter().enumerate() {
            for (comp, &idx) in SUBSPACE_A_INDICES.iter().enumerate() {
                states[slot][idx] = re(pair.state[comp]);
            }
        }
        for (comp, &idx) in SUBSPACE_B_INDICES.iter().enumerate() {
            states[4][idx] = re(b.state5[comp]);
            states[5][idx] = re(b.state6[comp]);
        }

        let normalizers = if lambda == 0.0 {
            [FRAC_1_SQRT_2; 4]
        } else {
            let c_plus = lambda / stable_denom(params.g + combos.jt_minus, lambda);
            let c_minus = lambda / stable_denom(params.g - combos.jt_minus, lambda);
            let n_plus = (2.0 * (1.0 + c_plus * c_plus)).sqrt();
            let n_minus = (2.0 * (1.0 + c_minus * c_minus)).sqrt();
            // C1/C4 normalize printed vectors with unit outer components;
            // C3/C2 normalize the rationalized partners (outer components
            // 1/c), hence the extra factor c.
            [1.0 / n_plus, c_minus / n_minus, c_plus / n_plus, 1.0 / n_minus]
        };

        Ok(Self {
            energies: [
                a_pairs[0].energy,
                a_pairs[1].energy,
                a_pairs[2].energy,
                a_pairs[3].energy,
                b.e5,
                b.e6,
            ],
            states,
            epsilon: b.epsilon,
            r: b.r,
            theta: b.theta,
            k: b.k,
            normalizers,
        })
    }
}

/// One row of the transition table: `E_n - E_m` and the probe matrix
/// element connecting the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    /// Upper label `n` in 1..=4.
    pub n: u8,
    /// Lower label `m` in {5, 6}.
    pub m: u8,
    /// Transition energy `E_n - E_m` (rad/us): the probe detuning at which
    /// the pair is resonant.
    pub energy: f64,
    /// `<E_n| sx_2 |E_m>` (real by construction; the probe amplitude
    /// `lambda2` multiplies this).
    pub matrix_element: f64,
}

impl TransitionRow {
    /// Human-readable label, e.g. `"E1-E5"`.
    pub fn label(&self) -> String {
        format!("E{}-E{}", self.n, self.m)
    }
}

/// The eight probe-accessible transitions `E_n - E_m` (n = 1..4, m = 5, 6)
/// with their matrix elements, sorted by transition energy.
pub fn transition_table(params: &SystemParams) -> Result<Vec<TransitionRow>> {
    let eig = AnalyticEigensystem::compute(params)?;
    let layout = ModeLayout::qubits(4);
    let sx2 = embed(&pauli_x(), 2, &layout)?;
    let mut rows = Vec::with_capacity(8);
    for n in 0..4usize {
        for m in 4..6usize {
            let amp = (states_dot(&eig.states[n], &(&sx2 * &eig.states[m]))).re;
            rows.push(TransitionRow {
                n: (n + 1) as u8,
                m: (m + 1) as u8,
                energy: eig.energies[n] - eig.energies[m],
                matrix_element: amp,
            });
        }
    }
    rows.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    Ok(rows)
}

fn states_dot(bra: &StateVector, ket: &StateVector) -> num_complex::Complex64 {
    bra.dotc(ket)
}
