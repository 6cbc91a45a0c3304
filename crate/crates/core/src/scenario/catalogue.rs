use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckGroup {
    Eigen,
    Parseval,
    Kernel,
    Transmute,
    Pw,
    Levitan,
    Carleman,
}

impl CheckGroup {
    pub fn all() -> Vec<CheckGroup> {
        use CheckGroup::*;
        vec![Eigen, Parseval, Kernel, Transmute, Pw, Levitan, Carleman]
    }
}

/// How the headline value is compared with the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Pass when `value <= tolerance`.
    AtMost,
    /// Pass when `value >= tolerance`.
    AtLeast,
}

impl Bound {
    pub fn holds(self, value: f64, tol: f64) -> bool {
        match self {
            Bound::AtMost => value <= tol,
            Bound::AtLeast => value >= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckInfo {
    pub name: String,
    pub group: CheckGroup,
    /// The identity the check verifies.
    pub identity: String,
    pub default_tolerance: f64,
    pub bound: Bound,
}

const ENTRIES: &[(&str, CheckGroup, &str, f64, Bound)] = &[
    (
        "eigen-closed-form",
        CheckGroup::Eigen,
        "psi_2(x,k) = cos(sqrt(k^2 - c) x) for q2 = c, k <= 5",
        1e-4,
        Bound::AtMost,
    ),
    ("eigen-order", CheckGroup::Eigen, "error(h) / error(h/4) of the ODE solver (fourth order)", 12.0, Bound::AtLeast),
    ("transform-linearity", CheckGroup::Parseval, "Q(a f + b g) = a Q f + b Q g (seeded a, b)", 1e-12, Bound::AtMost),
    ("parseval-cosine", CheckGroup::Parseval, "int f g dx = int P f P g (2/pi) dk", 1e-2, Bound::AtMost),
    ("parseval-q2", CheckGroup::Parseval, "int f g dx = int Q_2 f Q_2 g dGamma_2", 2e-2, Bound::AtMost),
    ("round-trip-q2", CheckGroup::Parseval, "Q_2^{-1} Q_2 f = f", 1e-2, Bound::AtMost),
    ("transmutation-identity", CheckGroup::Kernel, "psi_2 = (I + K) cos(k .)", 1e-3, Bound::AtMost),
    (
        "kernel-cross-method",
        CheckGroup::Kernel,
        "Goursat K = extrapolated spectral kernel off the diagonal",
        5e-2,
        Bound::AtMost,
    ),
    ("kernel-inversion", CheckGroup::Kernel, "(I + L)(I + K) = I", 1e-6, Bound::AtMost),
    ("intertwining-v", CheckGroup::Transmute, "V Q_2 f = Q_1 V f", 1e-2, Bound::AtMost),
    ("v-vs-kernel", CheckGroup::Transmute, "V f = B* f", 1e-2, Bound::AtMost),
    (
        "factorization",
        CheckGroup::Transmute,
        "P B* = Q, Q Bcal* = P, B = Q~ P, B* = P^{-1} Q, Bcal = P~ Q, Bcal* = Q^{-1} P",
        1e-2,
        Bound::AtMost,
    ),
    ("bcal-inverts-b", CheckGroup::Transmute, "Bcal (P = gamma_2/gamma_1) = (I + L) = B^{-1}", 1e-2, Bound::AtMost),
    (
        "intertwining-bcal-sqrt",
        CheckGroup::Transmute,
        "Q_1 Bcal f = Bcal Q_2 f for P = sqrt(gamma_2/gamma_1)",
        1e-2,
        Bound::AtMost,
    ),
    (
        "transfer-isometry",
        CheckGroup::Transmute,
        "||Q_2 f||_{Gamma_2} <= (1 + tol) ||P f||_{Gamma_1}",
        1e-2,
        Bound::AtMost,
    ),
    ("v-boundedness", CheckGroup::Transmute, "||V|| <= sqrt(sup gamma_1/gamma_2) (1 + tol)", 1e-2, Bound::AtMost),
    ("pw-transfer", CheckGroup::Pw, "supp f in [0, s] <=> supp V f in [0, s] and type(Q_2 f) = s", 0.1, Bound::AtMost),
    ("pw-triangularity", CheckGroup::Pw, "V(x, y) = 0 for x > y (delta probes)", 2e-2, Bound::AtMost),
    ("pw-eigenfunction-transfer", CheckGroup::Pw, "psi_2 = V* psi_1", 5e-2, Bound::AtMost),
    ("pw-classical-baseline", CheckGroup::Pw, "type(P f) = sup supp f (relative)", 5e-2, Bound::AtMost),
    (
        "levitan-oracles",
        CheckGroup::Levitan,
        "a_j for multiplication, derivative, shift; radius independence",
        1e-8,
        Bound::AtMost,
    ),
    ("levitan-transfer-expansion", CheckGroup::Levitan, "Q F = sum_{j <= 8} a_j d^j F (relative)", 5e-2, Bound::AtMost),
    (
        "levitan-eigenfunction-expansion",
        CheckGroup::Levitan,
        "psi_2 = sum_n a_n d^n_lambda psi_1, residual decreasing in J",
        5e-2,
        Bound::AtMost,
    ),
    (
        "carleman-identity",
        CheckGroup::Carleman,
        "Q_2 f = P f + int r_1(nu, .) P f(nu) dGamma_1(nu)",
        1e-2,
        Bound::AtMost,
    ),
];

/// All checks in execution order.
pub fn catalogue() -> Vec<CheckInfo> {
    ENTRIES
        .iter()
        .map(|&(name, group, identity, tol, bound)| CheckInfo {
            name: name.into(),
            group,
            identity: identity.into(),
            default_tolerance: tol,
            bound,
        })
        .collect()
}

pub fn find(name: &str) -> Option<CheckInfo> {
    catalogue().into_iter().find(|c| c.name == name)
}
