//! Spin tomograms: probability distributions of spin projections measured
//! along unit-sphere directions.
//!
//! The measurement along direction n with outcome m is represented by a
//! projector-valued kernel ("de-quantizer"):
//!
//! * spin-1/2:  Pi(m, n) = (sigma_0 + m n.sigma) / 2,  m in {+1, -1};
//! * spin-1:    Pi(m, n) = (1 - m^2) Id + (m/2) n.J + (3 m^2/2 - 1)(n.J)^2,
//!   m in {+1, 0, -1}.
//!
//! Both are the spectral projectors of n.sigma and n.J, so the tomogram
//! w(m, n) = tr(rho Pi(m, n)) is the distribution of the spin projection
//! along n. Joint tomograms of two spins use the tensor product of one
//! kernel per party. Outcomes are always enumerated highest projection
//! first, matching the basis ordering of [`crate::states`].

mod reconstruct;

pub use reconstruct::{reconstruct, Reconstruction};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::numfmt;
use crate::states::{bloch_decompose, pauli, spin1_generators, BlochData, DensityMatrix};

/// Probabilities in [-1e-12, 0) are rounding noise and clamp to zero;
/// anything more negative is treated as a broken invariant.
pub const NEG_PROB_CLAMP: f64 = 1e-12;

/// Tomogram rows must sum to 1 within this tolerance.
pub const SUM_TOL: f64 = 1e-10;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A point on the unit sphere, stored as polar angle `theta` in [0, pi] and
/// azimuth `phi` in [0, 2 pi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct DirectionWire {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    /// Normalize arbitrary finite angles onto theta in [0, pi], phi in [0, 2 pi).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::Domain(format!(
                "direction angles must be finite, got ({theta}, {phi})"
            )));
        }
        let mut t = theta.rem_euclid(TAU);
        let mut p = phi;
        if t > std::f64::consts::PI {
            t = TAU - t;
            p += std::f64::consts::PI;
        }
        let p = p.rem_euclid(TAU);
        Ok(Self { theta: t, phi: p })
    }

    /// The +z, +x or +y axis.
    pub fn axis(which: char) -> Self {
        match which {
            'z' => Self { theta: 0.0, phi: 0.0 },
            'x' => Self { theta: std::f64::consts::FRAC_PI_2, phi: 0.0 },
            'y' => Self {
                theta: std::f64::consts::FRAC_PI_2,
                phi: std::f64::consts::FRAC_PI_2,
            },
            _ => panic!("axis must be one of x, y, z"),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        [st * cp, st * sp, ct]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Key for exact-match lookups (normalized angle bits).
    pub(crate) fn bits(&self) -> (u64, u64) {
        (self.theta.to_bits(), self.phi.to_bits())
    }

    pub(crate) fn from_wire(w: &DirectionWire) -> Result<Self> {
        Self::new(w.theta, w.phi)
    }
}

/// Deterministic, roughly equal-area set of `n` sphere points following the
/// golden-angle spiral.
pub fn fibonacci_sphere(n: usize) -> Result<Vec<Direction>> {
    if n == 0 {
        return Err(Error::Domain("a direction grid needs at least one point".into()));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            let phi = (golden_angle * i as f64).rem_euclid(TAU);
            Direction::new(theta, phi)
        })
        .collect()
}

/// SU(2) rotation in Euler angles, the matrix
/// [[cos(t/2) e^{i(p+s)/2}, sin(t/2) e^{i(p-s)/2}],
///  [-sin(t/2) e^{-i(p-s)/2}, cos(t/2) e^{-i(p+s)/2}]].
///
/// Conjugating a projector |m><m| with this matrix only uses the first two
/// angles; the third contributes a global column phase that cancels.
pub fn rotation_spin_half(theta: f64, phi: f64, psi: f64) -> ComplexMatrix {
    let half = theta / 2.0;
    let (s, co) = (half.sin(), half.cos());
    let plus = Complex64::from_polar(1.0, (phi + psi) / 2.0);
    let minus = Complex64::from_polar(1.0, (phi - psi) / 2.0);
    ComplexMatrix::from_entries(
        2,
        2,
        vec![plus * co, minus * s, -minus.conj() * s, plus.conj() * co],
    )
    .unwrap()
}

/// Measurement projector for spin projection `m` in {+1, -1} along `n`.
pub fn dequantizer_qubit(m: i8, n: &Direction) -> Result<ComplexMatrix> {
    if m != 1 && m != -1 {
        return Err(Error::Domain(format!(
            "qubit outcome must be +1 or -1, got {m}"
        )));
    }
    let v = n.unit_vector();
    let mf = m as f64;
    let mut out = pauli(0);
    for (k, &vk) in v.iter().enumerate() {
        out = out.add(&pauli(k + 1).scale(c(mf * vk, 0.)))?;
    }
    Ok(out.scale(c(0.5, 0.)))
}

/// Measurement projector for spin projection `m` in {+1, 0, -1} along `n`.
pub fn dequantizer_qutrit(m: i8, n: &Direction) -> Result<ComplexMatrix> {
    if !matches!(m, -1 | 0 | 1) {
        return Err(Error::Domain(format!(
            "qutrit outcome must be +1, 0 or -1, got {m}"
        )));
    }
    let v = n.unit_vector();
    let [jx, jy, jz] = spin1_generators();
    let nj = jx
        .scale(c(v[0], 0.))
        .add(&jy.scale(c(v[1], 0.)))?
        .add(&jz.scale(c(v[2], 0.)))?;
    let njsq = nj.mul(&nj)?;
    let mf = m as f64;
    let msq = mf * mf;
    ComplexMatrix::identity(3)?
        .scale(c(1.0 - msq, 0.))
        .add(&nj.scale(c(mf / 2.0, 0.)))?
        .add(&njsq.scale(c(1.5 * msq - 1.0, 0.)))
}

/// Projector for one party of the given local dimension.
pub fn dequantizer(party_dim: usize, m: i8, n: &Direction) -> Result<ComplexMatrix> {
    match party_dim {
        2 => dequantizer_qubit(m, n),
        3 => dequantizer_qutrit(m, n),
        d => Err(Error::Domain(format!(
            "de-quantizer defined for local dimensions 2 and 3, got {d}"
        ))),
    }
}

/// Spin projection labels for one party, highest first.
pub fn outcome_labels(party_dim: usize) -> Result<Vec<i8>> {
    match party_dim {
        2 => Ok(vec![1, -1]),
        3 => Ok(vec![1, 0, -1]),
        d => Err(Error::Domain(format!(
            "outcome labels defined for local dimensions 2 and 3, got {d}"
        ))),
    }
}

/// Clamp rounding-level negative probabilities to zero.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if p >= 0.0 {
        Ok(p)
    } else if p >= -NEG_PROB_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Invariant(format!(
            "probability {p:.6e} below the -1e-12 clamp window"
        )))
    }
}

/// Joint spin tomogram at one tuple of measurement directions.
///
/// `probabilities` is row-major over the outcome tuples, outer party first,
/// each party's outcomes ordered highest projection first.
#[derive(Clone, Debug, PartialEq)]
pub struct Tomogram {
    directions: Vec<Direction>,
    party_dims: Vec<usize>,
    probabilities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TomogramWire {
    directions: Vec<DirectionWire>,
    outcome_labels: Vec<Vec<i8>>,
    probabilities: Vec<f64>,
}

impl Tomogram {
    /// Validate outcome count, nonnegativity and normalization.
    pub fn new(
        directions: Vec<Direction>,
        party_dims: Vec<usize>,
        probabilities: Vec<f64>,
    ) -> Result<Self> {
        if directions.len() != party_dims.len() || party_dims.is_empty() {
            return Err(Error::Shape(format!(
                "{} directions for {} parties",
                directions.len(),
                party_dims.len()
            )));
        }
        for &d in &party_dims {
            outcome_labels(d)?;
        }
        let expected: usize = party_dims.iter().product();
        if probabilities.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} outcome probabilities, got {}",
                probabilities.len()
            )));
        }
        let mut clamped = Vec::with_capacity(probabilities.len());
        for &p in &probabilities {
            clamped.push(clamp_probability(p)?);
        }
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Invariant(format!(
                "tomogram probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            directions,
            party_dims,
            probabilities: clamped,
        })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn parties(&self) -> usize {
        self.party_dims.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Row-major index of an outcome tuple.
    pub fn index_of(&self, outcomes: &[i8]) -> Result<usize> {
        if outcomes.len() != self.party_dims.len() {
            return Err(Error::Shape(format!(
                "{} outcomes for {} parties",
                outcomes.len(),
                self.party_dims.len()
            )));
        }
        let mut idx = 0;
        for (k, (&m, &d)) in outcomes.iter().zip(&self.party_dims).enumerate() {
            let labels = outcome_labels(d)?;
            let pos = labels.iter().position(|&l| l == m).ok_or_else(|| {
                Error::Domain(format!("outcome {m} invalid for party {k} of dimension {d}"))
            })?;
            idx = idx * d + pos;
        }
        Ok(idx)
    }

    /// Probability of one outcome tuple.
    pub fn prob(&self, outcomes: &[i8]) -> Result<f64> {
        Ok(self.probabilities[self.index_of(outcomes)?])
    }

    /// All outcome tuples in table order.
    pub fn outcome_tuples(&self) -> Vec<Vec<i8>> {
        enumerate_outcomes(&self.party_dims)
    }

    pub fn to_json(&self) -> String {
        let wire = TomogramWire {
            directions: self
                .directions
                .iter()
                .map(|d| DirectionWire { theta: d.theta, phi: d.phi })
                .collect(),
            outcome_labels: self
                .party_dims
                .iter()
                .map(|&d| outcome_labels(d).unwrap())
                .collect(),
            probabilities: self.probabilities.clone(),
        };
        serde_json::to_string(&wire).expect("tomogram serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: TomogramWire =
            serde_json::from_str(json).map_err(|e| Error::Parse(format!("tomogram: {e}")))?;
        let mut party_dims = Vec::with_capacity(wire.outcome_labels.len());
        for labels in &wire.outcome_labels {
            let d = labels.len();
            if outcome_labels(d).ok().as_deref() != Some(labels.as_slice()) {
                return Err(Error::Parse(format!(
                    "unrecognized outcome labels {labels:?}"
                )));
            }
            party_dims.push(d);
        }
        let directions = wire
            .directions
            .iter()
            .map(Direction::from_wire)
            .collect::<Result<Vec<_>>>()?;
        Self::new(directions, party_dims, wire.probabilities)
    }
}

/// Outcome tuples of a multi-party system in row-major order.
pub fn enumerate_outcomes(party_dims: &[usize]) -> Vec<Vec<i8>> {
    let mut tuples: Vec<Vec<i8>> = vec![vec![]];
    for &d in party_dims {
        let labels = outcome_labels(d).expect("validated party dimension");
        let mut next = Vec::with_capacity(tuples.len() * d);
        for t in &tuples {
            for &m in &labels {
                let mut row = t.clone();
                row.push(m);
                next.push(row);
            }
        }
        tuples = next;
    }
    tuples
}

/// CSV table for tomograms sharing one party structure. Columns:
/// theta/phi per party, outcome per party, probability; `#` lines are
/// comments. Numbers carry 17 significant digits and parse back exactly.
pub fn tomograms_to_csv(tables: &[Tomogram]) -> Result<String> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Shape("no tomograms to serialize".into()))?;
    let parties = first.parties();
    let mut out = String::new();
    for k in 1..=parties {
        out.push_str(&format!("theta{k},phi{k},"));
    }
    for k in 1..=parties {
        out.push_str(&format!("m{k},"));
    }
    out.push_str("probability\n");
    for t in tables {
        if t.party_dims() != first.party_dims() {
            return Err(Error::Shape(
                "tomograms in one table must share the party structure".into(),
            ));
        }
        for (tuple, &p) in t.outcome_tuples().iter().zip(t.probabilities()) {
            let mut row = Vec::new();
            for d in t.directions() {
                row.push(numfmt::g17(d.theta()));
                row.push(numfmt::g17(d.phi()));
            }
            for &m in tuple {
                row.push(m.to_string());
            }
            row.push(numfmt::g17(p));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parse a table written by [`tomograms_to_csv`]; rows are grouped by their
/// direction tuple in order of first appearance.
pub fn tomograms_from_csv(csv: &str) -> Result<Vec<Tomogram>> {
    let mut lines = csv
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty tomogram table".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let parties = cols
        .iter()
        .filter(|c| c.starts_with("theta"))
        .count();
    if parties == 0 || cols.len() != 3 * parties + 1 || cols.last() != Some(&"probability") {
        return Err(Error::Parse(format!("unrecognized tomogram header {header:?}")));
    }

    // Key rows by direction bits, keep first-appearance order.
    let mut order: Vec<Vec<(u64, u64)>> = Vec::new();
    let mut groups: Vec<(Vec<Direction>, Vec<(Vec<i8>, f64)>)> = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row has {} fields, header has {}",
                fields.len(),
                cols.len()
            )));
        }
        let mut dirs = Vec::with_capacity(parties);
        for k in 0..parties {
            let theta = numfmt::parse_f64(fields[2 * k])?;
            let phi = numfmt::parse_f64(fields[2 * k + 1])?;
            dirs.push(Direction::new(theta, phi)?);
        }
        let outcomes: Vec<i8> = fields[2 * parties..3 * parties]
            .iter()
            .map(|f| numfmt::parse_i8(f))
            .collect::<Result<_>>()?;
        let p = numfmt::parse_f64(fields[3 * parties])?;
        let key: Vec<(u64, u64)> = dirs.iter().map(Direction::bits).collect();
        match order.iter().position(|k| *k == key) {
            Some(i) => groups[i].1.push((outcomes, p)),
            None => {
                order.push(key);
                groups.push((dirs, vec![(outcomes, p)]));
            }
        }
    }

    let mut tables = Vec::with_capacity(groups.len());
    for (dirs, rows) in groups {
        // Party dimensions follow from the outcome labels seen in the rows.
        let mut party_dims = Vec::with_capacity(parties);
        for k in 0..parties {
            let has_zero = rows.iter().any(|(o, _)| o[k] == 0);
            party_dims.push(if has_zero { 3 } else { 2 });
        }
        let expected: usize = party_dims.iter().product();
        if rows.len() != expected {
            return Err(Error::Parse(format!(
                "direction tuple has {} outcome rows, expected {expected}",
                rows.len()
            )));
        }
        let mut probs = vec![f64::NAN; expected];
        let probe = Tomogram {
            directions: dirs.clone(),
            party_dims: party_dims.clone(),
            probabilities: vec![0.0; expected],
        };
        for (outcomes, p) in rows {
            let idx = probe.index_of(&outcomes)?;
            if !probs[idx].is_nan() {
                return Err(Error::Parse(format!(
                    "duplicate outcome row {outcomes:?} for one direction tuple"
                )));
            }
            probs[idx] = p;
        }
        tables.push(Tomogram::new(dirs, party_dims, probs)?);
    }
    Ok(tables)
}

/// Tomogram of a single spin measured along `n`.
pub fn tomogram_single(rho: &DensityMatrix, n: &Direction) -> Result<Tomogram> {
    tomogram_multi(rho, std::slice::from_ref(n))
}

/// Joint tomogram of all parties of `rho`, one direction per party.
pub fn tomogram_multi(rho: &DensityMatrix, directions: &[Direction]) -> Result<Tomogram> {
    let party_dims = rho.party_dims();
    if directions.len() != party_dims.len() {
        return Err(Error::Shape(format!(
            "{} directions for {} parties",
            directions.len(),
            party_dims.len()
        )));
    }
    let mut probs = Vec::new();
    for tuple in enumerate_outcomes(&party_dims) {
        let mut kernel: Option<ComplexMatrix> = None;
        for ((&m, &d), n) in tuple.iter().zip(&party_dims).zip(directions) {
            let pi = dequantizer(d, m, n)?;
            kernel = Some(match kernel {
                None => pi,
                Some(k) => k.kron(&pi)?,
            });
        }
        let p = rho
            .matrix()
            .mul(&kernel.expect("at least one party"))?
            .trace()?
            .re;
        probs.push(clamp_probability(p)?);
    }
    Tomogram::new(directions.to_vec(), party_dims, probs)
}

/// Closed-form two-qubit tomogram value from Pauli expectation data:
/// w = (1 + m1 n1.x + m2 n2.y + m1 m2 n1.corr.n2) / 4.
pub fn two_qubit_tomo_closed(
    bloch: &BlochData,
    m1: i8,
    m2: i8,
    n1: &Direction,
    n2: &Direction,
) -> Result<f64> {
    let (y, corr) = match (bloch.y, bloch.corr) {
        (Some(y), Some(corr)) => (y, corr),
        _ => {
            return Err(Error::Shape(
                "closed form needs two-qubit Pauli data (single-qubit data given)".into(),
            ))
        }
    };
    for m in [m1, m2] {
        if m != 1 && m != -1 {
            return Err(Error::Domain(format!(
                "qubit outcome must be +1 or -1, got {m}"
            )));
        }
    }
    let a = n1.unit_vector();
    let b = n2.unit_vector();
    let ax: f64 = (0..3).map(|i| a[i] * bloch.x[i]).sum();
    let by: f64 = (0..3).map(|j| b[j] * y[j]).sum();
    let mut cross = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            cross += a[i] * corr[i][j] * b[j];
        }
    }
    Ok(0.25 * (1.0 + m1 as f64 * ax + m2 as f64 * by + (m1 as f64) * (m2 as f64) * cross))
}

/// Closed-form two-qutrit Werner tomogram value.
pub fn werner_qutrit_tomo_closed(
    phi: f64,
    m1: i8,
    m2: i8,
    n1: &Direction,
    n2: &Direction,
) -> Result<f64> {
    if !(-1.0..=1.0).contains(&phi) || phi.is_nan() {
        return Err(Error::Domain(format!(
            "Werner parameter {phi} outside [-1, 1]"
        )));
    }
    for m in [m1, m2] {
        if !matches!(m, -1 | 0 | 1) {
            return Err(Error::Domain(format!(
                "qutrit outcome must be +1, 0 or -1, got {m}"
            )));
        }
    }
    let a = (m1 as f64) * (m1 as f64);
    let b = (m2 as f64) * (m2 as f64);
    let t = n1.dot(n2);
    // tr(Pi_1 Pi_2) expanded over the spin-1 trace identities.
    let bracket = 3.0 * (1.0 - a) * (1.0 - b)
        + (1.0 - a) * (3.0 * b - 2.0)
        + (1.0 - b) * (3.0 * a - 2.0)
        + (m1 as f64) * (m2 as f64) / 2.0 * t
        + (1.5 * a - 1.0) * (1.5 * b - 1.0) * (1.0 + t * t);
    Ok((3.0 - phi) / 24.0 + (3.0 * phi - 1.0) / 24.0 * bracket)
}

/// True when a two-party tomogram equals the product of its marginals
/// within `tol` at every outcome pair.
pub fn is_factorized(t: &Tomogram, tol: f64) -> Result<bool> {
    if t.parties() != 2 {
        return Err(Error::Shape(format!(
            "factorization check needs two parties, got {}",
            t.parties()
        )));
    }
    let (d1, d2) = (t.party_dims()[0], t.party_dims()[1]);
    let mut left = vec![0.0; d1];
    let mut right = vec![0.0; d2];
    for i in 0..d1 {
        for j in 0..d2 {
            let p = t.probabilities()[i * d2 + j];
            left[i] += p;
            right[j] += p;
        }
    }
    for i in 0..d1 {
        for j in 0..d2 {
            if (t.probabilities()[i * d2 + j] - left[i] * right[j]).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Source of joint tomogram values: an exact state, a closed form, or
/// recorded measurement data.
pub trait TomogramProvider: Sync {
    /// Local dimension of each party.
    fn party_dims(&self) -> Vec<usize>;

    /// Joint probability of one outcome tuple at one direction tuple.
    fn joint_prob(&self, outcomes: &[i8], directions: &[Direction]) -> Result<f64>;

    /// Full outcome table at one direction tuple.
    fn tomogram(&self, directions: &[Direction]) -> Result<Tomogram> {
        let dims = self.party_dims();
        let mut probs = Vec::new();
        for tuple in enumerate_outcomes(&dims) {
            probs.push(self.joint_prob(&tuple, directions)?);
        }
        Tomogram::new(directions.to_vec(), dims, probs)
    }
}

/// Provider that evaluates tr(rho Pi) on a stored density matrix.
pub struct ExactProvider {
    rho: DensityMatrix,
}

impl ExactProvider {
    pub fn new(rho: DensityMatrix) -> Self {
        Self { rho }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }
}

impl TomogramProvider for ExactProvider {
    fn party_dims(&self) -> Vec<usize> {
        self.rho.party_dims()
    }

    fn joint_prob(&self, outcomes: &[i8], directions: &[Direction]) -> Result<f64> {
        let dims = self.party_dims();
        if outcomes.len() != dims.len() || directions.len() != dims.len() {
            return Err(Error::Shape(format!(
                "expected {} outcomes and directions, got {} and {}",
                dims.len(),
                outcomes.len(),
                directions.len()
            )));
        }
        let mut kernel: Option<ComplexMatrix> = None;
        for ((&m, &d), n) in outcomes.iter().zip(&dims).zip(directions) {
            let pi = dequantizer(d, m, n)?;
            kernel = Some(match kernel {
                None => pi,
                Some(k) => k.kron(&pi)?,
            });
        }
        let p = self
            .rho
            .matrix()
            .mul(&kernel.expect("at least one party"))?
            .trace()?
            .re;
        clamp_probability(p)
    }

    fn tomogram(&self, directions: &[Direction]) -> Result<Tomogram> {
        tomogram_multi(&self.rho, directions)
    }
}

/// Closed-form provider for an arbitrary two-qubit state via its Pauli data.
pub struct BlochProvider {
    bloch: BlochData,
}

impl BlochProvider {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::Shape(format!(
                "closed-form provider needs a two-qubit state, got dimension {}",
                rho.dim()
            )));
        }
        Ok(Self { bloch: bloch_decompose(rho)? })
    }

    pub fn from_bloch(bloch: BlochData) -> Result<Self> {
        if bloch.y.is_none() || bloch.corr.is_none() {
            return Err(Error::Shape("closed form needs two-qubit Pauli data".into()));
        }
        Ok(Self { bloch })
    }
}

impl TomogramProvider for BlochProvider {
    fn party_dims(&self) -> Vec<usize> {
        vec![2, 2]
    }

    fn joint_prob(&self, outcomes: &[i8], directions: &[Direction]) -> Result<f64> {
        if outcomes.len() != 2 || directions.len() != 2 {
            return Err(Error::Shape("two parties expected".into()));
        }
        clamp_probability(two_qubit_tomo_closed(
            &self.bloch,
            outcomes[0],
            outcomes[1],
            &directions[0],
            &directions[1],
        )?)
    }
}

/// Closed-form provider for the two-spin Werner family.
pub struct WernerProvider {
    d: usize,
    phi: f64,
    qubit_bloch: Option<BlochData>,
}

impl WernerProvider {
    pub fn new(d: usize, phi: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Domain(format!("Werner states need d in {{2, 3}}, got {d}")));
        }
        if !(-1.0..=1.0).contains(&phi) || phi.is_nan() {
            return Err(Error::Domain(format!(
                "Werner parameter {phi} outside [-1, 1]"
            )));
        }
        let qubit_bloch = (d == 2).then(|| {
            let scale = (2.0 * phi - 1.0) / 3.0;
            let mut corr = [[0.0; 3]; 3];
            for (i, row) in corr.iter_mut().enumerate() {
                row[i] = scale;
            }
            BlochData { x: [0.0; 3], y: Some([0.0; 3]), corr: Some(corr) }
        });
        Ok(Self { d, phi, qubit_bloch })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

impl TomogramProvider for WernerProvider {
    fn party_dims(&self) -> Vec<usize> {
        vec![self.d, self.d]
    }

    fn joint_prob(&self, outcomes: &[i8], directions: &[Direction]) -> Result<f64> {
        if outcomes.len() != 2 || directions.len() != 2 {
            return Err(Error::Shape("two parties expected".into()));
        }
        let p = match &self.qubit_bloch {
            Some(bloch) => two_qubit_tomo_closed(
                bloch,
                outcomes[0],
                outcomes[1],
                &directions[0],
                &directions[1],
            )?,
            None => werner_qutrit_tomo_closed(
                self.phi,
                outcomes[0],
                outcomes[1],
                &directions[0],
                &directions[1],
            )?,
        };
        clamp_probability(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        Direction::new(z.acos(), phi).unwrap()
    }

    #[test]
    fn direction_normalization() {
        let d = Direction::new(-std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        // (-pi/2, 0) points along -x, same as (pi/2, pi).
        let v = d.unit_vector();
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        assert!((d.theta() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((d.phi() - std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(Direction::new(f64::NAN, 0.0), Err(Error::Domain(_))));

        // Normalization preserves the unit vector for arbitrary angles.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let theta: f64 = rng.random_range(-10.0..10.0);
            let phi: f64 = rng.random_range(-10.0..10.0);
            let d = Direction::new(theta, phi).unwrap();
            let st = theta.sin();
            let raw = [st * phi.cos(), st * phi.sin(), theta.cos()];
            let v = d.unit_vector();
            for k in 0..3 {
                assert!((raw[k] - v[k]).abs() < 1e-12);
            }
            assert!((0.0..=std::f64::consts::PI).contains(&d.theta()));
            assert!((0.0..TAU).contains(&d.phi()));
        }
    }

    #[test]
    fn fibonacci_sphere_is_deterministic_and_spread() {
        let a = fibonacci_sphere(20).unwrap();
        let b = fibonacci_sphere(20).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert!(a[i].dot(&a[j]) < 1.0 - 1e-6, "points {i} and {j} coincide");
            }
        }
        assert!(fibonacci_sphere(0).is_err());
    }

    #[test]
    fn rotation_matrix_pinned_values() {
        let u = rotation_spin_half(std::f64::consts::PI, 0.0, 0.0);
        let expect = ComplexMatrix::from_entries(
            2,
            2,
            vec![c(0., 0.), c(1., 0.), c(-1., 0.), c(0., 0.)],
        )
        .unwrap();
        assert!(u.sub(&expect).unwrap().max_abs_entry() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let u = rotation_spin_half(
                rng.random_range(-7.0..7.0),
                rng.random_range(-7.0..7.0),
                rng.random_range(-7.0..7.0),
            );
            let gram = u.dagger().mul(&u).unwrap();
            let id = ComplexMatrix::identity(2).unwrap();
            assert!(gram.sub(&id).unwrap().max_abs_entry() < 1e-14, "unitary");
            let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
            assert!((det - c(1., 0.)).norm() < 1e-14, "unit determinant");
        }
    }

    #[test]
    fn qubit_dequantizer_pinned_values() {
        let z = Direction::axis('z');
        let p = dequantizer_qubit(1, &z).unwrap();
        assert!((p.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!(p.get(1, 1).norm() < 1e-15);

        let x = Direction::axis('x');
        let p = dequantizer_qubit(-1, &x).unwrap();
        for (r, col, expect) in [
            (0, 0, 0.5),
            (1, 1, 0.5),
            (0, 1, -0.5),
            (1, 0, -0.5),
        ] {
            assert!((p.get(r, col) - c(expect, 0.)).norm() < 1e-15);
        }
        assert!(matches!(dequantizer_qubit(0, &z), Err(Error::Domain(_))));
    }

    #[test]
    fn qubit_dequantizer_is_spectral_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = random_direction(&mut rng);
            let v = n.unit_vector();
            let mut nsigma = ComplexMatrix::zeros(2, 2).unwrap();
            for k in 0..3 {
                nsigma = nsigma.add(&pauli(k + 1).scale(c(v[k], 0.))).unwrap();
            }
            let eig = nsigma.hermitian_eigen().unwrap();
            // Eigenvalues of n.sigma are -1 and +1 (ascending).
            assert!((eig.values[0] + 1.0).abs() < 1e-12);
            assert!((eig.values[1] - 1.0).abs() < 1e-12);
            for (m, col) in [(-1i8, 0usize), (1, 1)] {
                let mut proj = ComplexMatrix::zeros(2, 2).unwrap();
                for r in 0..2 {
                    for s in 0..2 {
                        let v1 = eig.vectors.get(r, col);
                        let v2 = eig.vectors.get(s, col).conj();
                        proj.set(r, s, v1 * v2);
                    }
                }
                let pi = dequantizer_qubit(m, &n).unwrap();
                assert!(
                    pi.sub(&proj).unwrap().max_abs_entry() < 1e-12,
                    "eigenprojector mismatch"
                );
            }
        }
    }

    #[test]
    fn qubit_dequantizer_matches_rotated_projector() {
        // The Euler-angle rotation and the direction vector use mirrored
        // azimuth conventions: conjugating |m><m| with the rotation at
        // (theta, pi - phi, any psi) gives the projector along (theta, phi).
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..40 {
            let n = random_direction(&mut rng);
            let psi: f64 = rng.random_range(-7.0..7.0);
            let u = rotation_spin_half(n.theta(), std::f64::consts::PI - n.phi(), psi);
            for (m, idx) in [(1i8, 0usize), (-1, 1)] {
                let mut mm = ComplexMatrix::zeros(2, 2).unwrap();
                mm.set(idx, idx, c(1., 0.));
                let rotated = u.mul(&mm).unwrap().mul(&u.dagger()).unwrap();
                let pi = dequantizer_qubit(m, &n).unwrap();
                assert!(
                    pi.sub(&rotated).unwrap().max_abs_entry() < 1e-12,
                    "rotated projector mismatch at m={m}"
                );
            }
        }
    }

    #[test]
    fn qutrit_dequantizer_pinned_values() {
        let z = Direction::axis('z');
        let p0 = dequantizer_qutrit(0, &z).unwrap();
        for r in 0..3 {
            for s in 0..3 {
                let expect = if r == 1 && s == 1 { 1.0 } else { 0.0 };
                assert!((p0.get(r, s) - c(expect, 0.)).norm() < 1e-15);
            }
        }
        assert!(matches!(dequantizer_qutrit(2, &z), Err(Error::Domain(_))));
    }

    #[test]
    fn qutrit_dequantizer_is_spectral_projector() {
        let [jx, jy, jz] = spin1_generators();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..40 {
            let n = random_direction(&mut rng);
            let v = n.unit_vector();
            let nj = jx
                .scale(c(v[0], 0.))
                .add(&jy.scale(c(v[1], 0.)))
                .unwrap()
                .add(&jz.scale(c(v[2], 0.)))
                .unwrap();
            let eig = nj.hermitian_eigen().unwrap();
            // Ascending eigenvalues -1, 0, +1.
            for (k, expect) in [(0usize, -1.0), (1, 0.0), (2, 1.0)] {
                assert!((eig.values[k] - expect).abs() < 1e-10);
            }
            for (m, col) in [(-1i8, 0usize), (0, 1), (1, 2)] {
                let mut proj = ComplexMatrix::zeros(3, 3).unwrap();
                for r in 0..3 {
                    for s in 0..3 {
                        let val = eig.vectors.get(r, col) * eig.vectors.get(s, col).conj();
                        proj.set(r, s, val);
                    }
                }
                let pi = dequantizer_qutrit(m, &n).unwrap();
                assert!(
                    pi.sub(&proj).unwrap().max_abs_entry() < 1e-10,
                    "eigenprojector mismatch at m={m}"
                );
            }
        }
    }

    #[test]
    fn dequantizers_are_complete_projector_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..25 {
            let n = random_direction(&mut rng);
            for d in [2usize, 3] {
                let mut sum = ComplexMatrix::zeros(d, d).unwrap();
                for m in outcome_labels(d).unwrap() {
                    let pi = dequantizer(d, m, &n).unwrap();
                    // Projector: idempotent and Hermitian.
                    let sq = pi.mul(&pi).unwrap();
                    assert!(sq.sub(&pi).unwrap().max_abs_entry() < 1e-13);
                    assert!(pi.hermiticity_deviation() < 1e-14);
                    sum = sum.add(&pi).unwrap();
                }
                let id = ComplexMatrix::identity(d).unwrap();
                assert!(sum.sub(&id).unwrap().max_abs_entry() < 1e-13, "completeness");
            }
        }
    }

    #[test]
    fn single_qubit_tomogram_is_cos_squared() {
        let rho = DensityMatrix::basis_projector(2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..50 {
            let n = random_direction(&mut rng);
            let t = tomogram_single(&rho, &n).unwrap();
            let expect = (n.theta() / 2.0).cos().powi(2);
            assert!((t.prob(&[1]).unwrap() - expect).abs() < 1e-14);
            assert!((t.prob(&[-1]).unwrap() - (1.0 - expect)).abs() < 1e-14);
        }
    }

    #[test]
    fn singlet_tomogram_is_perfectly_anticorrelated() {
        let rho = DensityMatrix::werner(2, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for _ in 0..20 {
            let n = random_direction(&mut rng);
            let t = tomogram_multi(&rho, &[n, n]).unwrap();
            assert!(t.prob(&[1, 1]).unwrap() < 1e-14);
            assert!(t.prob(&[-1, -1]).unwrap() < 1e-14);
            assert!((t.prob(&[1, -1]).unwrap() - 0.5).abs() < 1e-14);
            assert!((t.prob(&[-1, 1]).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_trace_on_random_two_qubit_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..50 {
            let rho = DensityMatrix::random_ginibre(4, &mut rng).unwrap();
            let bloch = bloch_decompose(&rho).unwrap();
            let n1 = random_direction(&mut rng);
            let n2 = random_direction(&mut rng);
            let table = tomogram_multi(&rho, &[n1, n2]).unwrap();
            for m1 in [1i8, -1] {
                for m2 in [1i8, -1] {
                    let closed = two_qubit_tomo_closed(&bloch, m1, m2, &n1, &n2).unwrap();
                    let exact = table.prob(&[m1, m2]).unwrap();
                    assert!(
                        (closed - exact).abs() < 1e-12,
                        "closed {closed} vs trace {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_rejects_single_qubit_data() {
        let rho = DensityMatrix::basis_projector(2, 0).unwrap();
        let bloch = bloch_decompose(&rho).unwrap();
        let z = Direction::axis('z');
        assert!(matches!(
            two_qubit_tomo_closed(&bloch, 1, 1, &z, &z),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn werner_qutrit_closed_form_pinned_values() {
        let z = Direction::axis('z');
        let x = Direction::axis('x');
        for phi in [-1.0, -0.4, 0.2, 1.0] {
            // Orthogonal directions, both outcomes zero: bracket vanishes.
            let w = werner_qutrit_tomo_closed(phi, 0, 0, &z, &x).unwrap();
            assert!((w - (3.0 - phi) / 24.0).abs() < 1e-15);
        }
        // phi = 1/3 is the maximally mixed state: uniform 1/9.
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..10 {
            let n1 = random_direction(&mut rng);
            let n2 = random_direction(&mut rng);
            for m1 in [-1i8, 0, 1] {
                for m2 in [-1i8, 0, 1] {
                    let w = werner_qutrit_tomo_closed(1.0 / 3.0, m1, m2, &n1, &n2).unwrap();
                    assert!((w - 1.0 / 9.0).abs() < 1e-15);
                }
            }
        }
        assert!(matches!(
            werner_qutrit_tomo_closed(1.5, 0, 0, &z, &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn werner_qutrit_closed_form_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        for _ in 0..10 {
            let phi: f64 = rng.random_range(-1.0..1.0);
            let rho = DensityMatrix::werner(3, phi).unwrap();
            let n1 = random_direction(&mut rng);
            let n2 = random_direction(&mut rng);
            let table = tomogram_multi(&rho, &[n1, n2]).unwrap();
            for m1 in [-1i8, 0, 1] {
                for m2 in [-1i8, 0, 1] {
                    let closed = werner_qutrit_tomo_closed(phi, m1, m2, &n1, &n2).unwrap();
                    let exact = table.prob(&[m1, m2]).unwrap();
                    assert!(
                        (closed - exact).abs() < 1e-12,
                        "phi={phi} m=({m1},{m2}): closed {closed} vs trace {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn product_states_factorize_entangled_do_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(121);
        let a = DensityMatrix::random_ginibre(2, &mut rng).unwrap();
        let b = DensityMatrix::random_ginibre(2, &mut rng).unwrap();
        let prod = DensityMatrix::new(a.matrix().kron(b.matrix()).unwrap()).unwrap();
        let n1 = random_direction(&mut rng);
        let n2 = random_direction(&mut rng);
        let t = tomogram_multi(&prod, &[n1, n2]).unwrap();
        assert!(is_factorized(&t, 1e-10).unwrap());

        let singlet = DensityMatrix::werner(2, -1.0).unwrap();
        let t = tomogram_multi(&singlet, &[n1, n1]).unwrap();
        assert!(!is_factorized(&t, 1e-10).unwrap());

        let single = tomogram_single(&a, &n1).unwrap();
        assert!(matches!(is_factorized(&single, 1e-10), Err(Error::Shape(_))));
    }

    #[test]
    fn providers_agree_on_werner_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        for d in [2usize, 3] {
            for _ in 0..5 {
                let phi: f64 = rng.random_range(-1.0..1.0);
                let exact = ExactProvider::new(DensityMatrix::werner(d, phi).unwrap());
                let closed = WernerProvider::new(d, phi).unwrap();
                let dirs = [random_direction(&mut rng), random_direction(&mut rng)];
                let te = exact.tomogram(&dirs).unwrap();
                let tc = closed.tomogram(&dirs).unwrap();
                for (a, b) in te.probabilities().iter().zip(tc.probabilities()) {
                    assert!((a - b).abs() < 1e-12, "d={d}, phi={phi}");
                }
            }
        }
    }

    #[test]
    fn probability_clamp_window() {
        assert_eq!(clamp_probability(-5e-13).unwrap(), 0.0);
        assert_eq!(clamp_probability(0.25).unwrap(), 0.25);
        assert!(matches!(clamp_probability(-1e-11), Err(Error::Invariant(_))));
    }

    #[test]
    fn tomogram_validation_and_lookup() {
        let z = Direction::axis('z');
        let x = Direction::axis('x');
        let t = Tomogram::new(vec![z, x], vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(t.prob(&[1, 1]).unwrap(), 0.1);
        assert_eq!(t.prob(&[1, -1]).unwrap(), 0.2);
        assert_eq!(t.prob(&[-1, 1]).unwrap(), 0.3);
        assert_eq!(t.prob(&[-1, -1]).unwrap(), 0.4);
        assert!(t.prob(&[0, 1]).is_err());
        assert!(matches!(
            Tomogram::new(vec![z, x], vec![2, 2], vec![0.5, 0.5]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Tomogram::new(vec![z, x], vec![2, 2], vec![0.3, 0.3, 0.3, 0.3]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn tomogram_json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(141);
        let rho = DensityMatrix::random_ginibre(9, &mut rng).unwrap();
        let dirs = [random_direction(&mut rng), random_direction(&mut rng)];
        let t = tomogram_multi(&rho, &dirs).unwrap();
        let back = Tomogram::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn tomogram_csv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(151);
        let rho = DensityMatrix::random_ginibre(4, &mut rng).unwrap();
        let mut tables = Vec::new();
        for _ in 0..3 {
            let dirs = [random_direction(&mut rng), random_direction(&mut rng)];
            tables.push(tomogram_multi(&rho, &dirs).unwrap());
        }
        let csv = tomograms_to_csv(&tables).unwrap();
        let back = tomograms_from_csv(&csv).unwrap();
        assert_eq!(tables, back);

        // Comment lines are ignored.
        let commented = format!("# generated for a test\n{csv}");
        assert_eq!(tomograms_from_csv(&commented).unwrap(), tables);
    }
}
