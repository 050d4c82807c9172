//! Bell-type inequalities evaluated on spin tomograms.
//!
//! All three functionals are built from joint tomogram values at a handful
//! of direction tuples:
//!
//! * the three-direction probability form
//!   P(a, b) + P(b, c) - P(a, c) >= 0 with P(n1, n2) = w(+1, +1; n1, n2);
//! * the CHSH correlation form
//!   |M(a, b) - M(a, c)| + M(b', b) + M(b', c) <= 2
//!   with M(n1, n2) = sum_m m1 m2 w(m1, m2; n1, n2);
//! * the quadratic correlation form
//!   (M(a, b') + M(a', b))^2 + (M(a, b) - M(a', b'))^2 <= 1
//!   for orthogonal setting pairs a _|_ a', b _|_ b'.
//!
//! Every report carries the same margin convention: `margin > 0` means the
//! classical bound is violated, and `violated` applies a 1e-12 guard so
//! rounding never flips the verdict at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomography::{Direction, TomogramProvider};

/// Margins within this of zero count as saturation, not violation.
pub const VIOLATION_EPS: f64 = 1e-12;

/// Orthogonality tolerance for the quadratic inequality's setting pairs.
pub const ORTHO_TOL: f64 = 1e-10;

/// The supported inequality families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityKind {
    Wigner,
    Chsh,
    Uffink,
}

impl InequalityKind {
    /// Number of measurement directions the functional takes.
    pub fn direction_count(&self) -> usize {
        match self {
            Self::Wigner => 3,
            Self::Chsh | Self::Uffink => 4,
        }
    }

    /// Classical bound of the functional.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Wigner | Self::Chsh => 0.0,
            Self::Uffink => 1.0,
        }
    }
}

impl std::fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Wigner => "wigner",
            Self::Chsh => "chsh",
            Self::Uffink => "uffink",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wigner" => Ok(Self::Wigner),
            "chsh" => Ok(Self::Chsh),
            "uffink" => Ok(Self::Uffink),
            other => Err(Error::Parse(format!(
                "unknown inequality {other:?}, expected wigner, chsh or uffink"
            ))),
        }
    }
}

/// Outcome of evaluating one inequality at fixed directions.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    /// The directions in the order the evaluation function takes them.
    pub directions: Vec<Direction>,
    pub lhs: f64,
    pub bound: f64,
    /// Positive means the classical bound is violated.
    pub margin: f64,
    pub violated: bool,
}

impl InequalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

fn require_two_parties<P: TomogramProvider + ?Sized>(provider: &P) -> Result<()> {
    let dims = provider.party_dims();
    if dims.len() != 2 {
        return Err(Error::Shape(format!(
            "inequalities need a two-party provider, got {} parties",
            dims.len()
        )));
    }
    Ok(())
}

/// Joint probability of both spins projecting to +1.
pub fn wigner_joint_prob<P: TomogramProvider + ?Sized>(
    provider: &P,
    n1: &Direction,
    n2: &Direction,
) -> Result<f64> {
    require_two_parties(provider)?;
    provider.joint_prob(&[1, 1], &[*n1, *n2])
}

/// Full correlation M(n1, n2) = sum over outcomes of m1 m2 w(m1, m2).
pub fn correlation<P: TomogramProvider + ?Sized>(
    provider: &P,
    n1: &Direction,
    n2: &Direction,
) -> Result<f64> {
    require_two_parties(provider)?;
    let t = provider.tomogram(&[*n1, *n2])?;
    let mut m = 0.0;
    for (tuple, &p) in t.outcome_tuples().iter().zip(t.probabilities()) {
        m += (tuple[0] as f64) * (tuple[1] as f64) * p;
    }
    Ok(m)
}

/// Evaluate P(a, b) + P(b, c) - P(a, c) >= 0.
pub fn eval_wigner<P: TomogramProvider + ?Sized>(
    provider: &P,
    a: &Direction,
    b: &Direction,
    c: &Direction,
) -> Result<InequalityReport> {
    let lhs = wigner_joint_prob(provider, a, b)?
        + wigner_joint_prob(provider, b, c)?
        - wigner_joint_prob(provider, a, c)?;
    let margin = -lhs;
    Ok(InequalityReport {
        kind: InequalityKind::Wigner,
        directions: vec![*a, *b, *c],
        lhs,
        bound: 0.0,
        margin,
        violated: margin > VIOLATION_EPS,
    })
}

/// Evaluate |M(a, b) - M(a, c)| + M(b', b) + M(b', c) - 2 <= 0.
///
/// Party 1 measures along `a` or `bprime`, party 2 along `b` or `c`.
pub fn eval_chsh<P: TomogramProvider + ?Sized>(
    provider: &P,
    a: &Direction,
    b: &Direction,
    c: &Direction,
    bprime: &Direction,
) -> Result<InequalityReport> {
    let lhs = (correlation(provider, a, b)? - correlation(provider, a, c)?).abs()
        + correlation(provider, bprime, b)?
        + correlation(provider, bprime, c)?
        - 2.0;
    Ok(InequalityReport {
        kind: InequalityKind::Chsh,
        directions: vec![*a, *b, *c, *bprime],
        lhs,
        bound: 0.0,
        margin: lhs,
        violated: lhs > VIOLATION_EPS,
    })
}

/// Evaluate (M(a, b') + M(a', b))^2 + (M(a, b) - M(a', b'))^2 <= 1.
///
/// The setting pairs must be orthogonal: a _|_ a' and b _|_ b' within 1e-10.
pub fn eval_uffink<P: TomogramProvider + ?Sized>(
    provider: &P,
    a: &Direction,
    aprime: &Direction,
    b: &Direction,
    bprime: &Direction,
) -> Result<InequalityReport> {
    for (label, n1, n2) in [("a", a, aprime), ("b", b, bprime)] {
        let cosine = n1.dot(n2);
        if cosine.abs() > ORTHO_TOL {
            return Err(Error::Domain(format!(
                "settings {label} and {label}' must be orthogonal, cosine is {cosine:.3e}"
            )));
        }
    }
    let sum = correlation(provider, a, bprime)? + correlation(provider, aprime, b)?;
    let diff = correlation(provider, a, b)? - correlation(provider, aprime, bprime)?;
    let lhs = sum * sum + diff * diff;
    Ok(InequalityReport {
        kind: InequalityKind::Uffink,
        directions: vec![*a, *aprime, *b, *bprime],
        lhs,
        bound: 1.0,
        margin: lhs - 1.0,
        violated: lhs - 1.0 > VIOLATION_EPS,
    })
}

/// Dispatch on the inequality kind; `directions` holds
/// (a, b, c) for the probability form, (a, b, c, b') for CHSH and
/// (a, a', b, b') for the quadratic form.
pub fn eval_kind<P: TomogramProvider + ?Sized>(
    kind: InequalityKind,
    provider: &P,
    directions: &[Direction],
) -> Result<InequalityReport> {
    let need = kind.direction_count();
    if directions.len() != need {
        return Err(Error::Shape(format!(
            "{kind} takes {need} directions, got {}",
            directions.len()
        )));
    }
    match kind {
        InequalityKind::Wigner => {
            eval_wigner(provider, &directions[0], &directions[1], &directions[2])
        }
        InequalityKind::Chsh => eval_chsh(
            provider,
            &directions[0],
            &directions[1],
            &directions[2],
            &directions[3],
        ),
        InequalityKind::Uffink => eval_uffink(
            provider,
            &directions[0],
            &directions[1],
            &directions[2],
            &directions[3],
        ),
    }
}
