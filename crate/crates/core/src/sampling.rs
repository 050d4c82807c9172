//! Finite-shot simulation of tomographic measurements.
//!
//! Shots are drawn by inverse-CDF sampling from the exact outcome
//! distribution at a direction tuple. The comparison `u < cumulative` is
//! strict, so outcomes with probability zero can never be selected.
//! Sampling is reproducible: one ChaCha stream per record seed, and
//! multi-setting estimators derive the setting seeds as `seed XOR k` for
//! the 0-based setting index k.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;
use crate::tomography::{
    enumerate_outcomes, outcome_labels, Direction, Tomogram, TomogramProvider,
};

/// Outcome rows of repeated measurements at one direction tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    directions: Vec<Direction>,
    party_dims: Vec<usize>,
    seed: u64,
    shots: Vec<Vec<i8>>,
}

#[derive(Serialize, Deserialize)]
struct ShotRecordWire {
    seed: u64,
    party_dims: Vec<usize>,
    directions: Vec<crate::tomography::DirectionWire>,
    shots: Vec<Vec<i8>>,
}

impl ShotRecord {
    /// Validate every shot against the parties' outcome labels.
    pub fn new(
        directions: Vec<Direction>,
        party_dims: Vec<usize>,
        seed: u64,
        shots: Vec<Vec<i8>>,
    ) -> Result<Self> {
        if directions.len() != party_dims.len() || party_dims.is_empty() {
            return Err(Error::Shape(format!(
                "{} directions for {} parties",
                directions.len(),
                party_dims.len()
            )));
        }
        let labels: Vec<Vec<i8>> = party_dims
            .iter()
            .map(|&d| outcome_labels(d))
            .collect::<Result<_>>()?;
        for shot in &shots {
            if shot.len() != party_dims.len() {
                return Err(Error::Shape(format!(
                    "shot {shot:?} has {} outcomes for {} parties",
                    shot.len(),
                    party_dims.len()
                )));
            }
            for (k, (&m, l)) in shot.iter().zip(&labels).enumerate() {
                if !l.contains(&m) {
                    return Err(Error::Domain(format!(
                        "outcome {m} invalid for party {k} of dimension {}",
                        party_dims[k]
                    )));
                }
            }
        }
        Ok(Self { directions, party_dims, seed, shots })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shots(&self) -> &[Vec<i8>] {
        &self.shots
    }

    /// Outcome counts in tomogram table order.
    pub fn counts(&self) -> Vec<u64> {
        let tuples = enumerate_outcomes(&self.party_dims);
        let mut counts = vec![0u64; tuples.len()];
        for shot in &self.shots {
            let idx = tuples
                .iter()
                .position(|t| t == shot)
                .expect("shots validated on construction");
            counts[idx] += 1;
        }
        counts
    }

    /// CSV: metadata as `#` comments, then one outcome row per shot.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# seed = {}\n", self.seed));
        out.push_str(&format!(
            "# party_dims = {}\n",
            self.party_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        for (k, d) in self.directions.iter().enumerate() {
            out.push_str(&format!(
                "# direction {} = {},{}\n",
                k + 1,
                numfmt::g17(d.theta()),
                numfmt::g17(d.phi())
            ));
        }
        let header: Vec<String> = (1..=self.party_dims.len()).map(|k| format!("m{k}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for shot in &self.shots {
            let row: Vec<String> = shot.iter().map(|m| m.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(csv: &str) -> Result<Self> {
        let mut seed: Option<u64> = None;
        let mut party_dims: Option<Vec<usize>> = None;
        let mut directions: Vec<(usize, Direction)> = Vec::new();
        let mut shots: Vec<Vec<i8>> = Vec::new();
        let mut header_seen = false;
        for line in csv.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("seed =") {
                    seed = Some(v.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad seed {:?}", v.trim()))
                    })?);
                } else if let Some(v) = comment.strip_prefix("party_dims =") {
                    party_dims = Some(
                        v.trim()
                            .split(',')
                            .map(|f| {
                                f.trim()
                                    .parse()
                                    .map_err(|_| Error::Parse(format!("bad party dimension {f:?}")))
                            })
                            .collect::<Result<_>>()?,
                    );
                } else if let Some(rest) = comment.strip_prefix("direction ") {
                    let (idx, angles) = rest
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad direction comment {line:?}")))?;
                    let idx: usize = idx.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad direction index {:?}", idx.trim()))
                    })?;
                    let (theta, phi) = angles
                        .trim()
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("bad direction comment {line:?}")))?;
                    directions.push((
                        idx,
                        Direction::new(numfmt::parse_f64(theta)?, numfmt::parse_f64(phi)?)?,
                    ));
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            shots.push(
                line.split(',')
                    .map(numfmt::parse_i8)
                    .collect::<Result<Vec<i8>>>()?,
            );
        }
        let seed = seed.ok_or_else(|| Error::MissingData("no seed comment in record".into()))?;
        let party_dims = party_dims
            .ok_or_else(|| Error::MissingData("no party_dims comment in record".into()))?;
        directions.sort_by_key(|(idx, _)| *idx);
        let directions: Vec<Direction> = directions.into_iter().map(|(_, d)| d).collect();
        Self::new(directions, party_dims, seed, shots)
    }

    pub fn to_json(&self) -> String {
        let wire = ShotRecordWire {
            seed: self.seed,
            party_dims: self.party_dims.clone(),
            directions: self
                .directions
                .iter()
                .map(|d| crate::tomography::DirectionWire { theta: d.theta(), phi: d.phi() })
                .collect(),
            shots: self.shots.clone(),
        };
        serde_json::to_string(&wire).expect("shot record serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: ShotRecordWire =
            serde_json::from_str(json).map_err(|e| Error::Parse(format!("shot record: {e}")))?;
        let directions = wire
            .directions
            .iter()
            .map(Direction::from_wire)
            .collect::<Result<Vec<_>>>()?;
        Self::new(directions, wire.party_dims, wire.seed, wire.shots)
    }
}

/// Draw `shots` outcome tuples at one direction tuple of `provider`.
pub fn sample<P: TomogramProvider + ?Sized>(
    provider: &P,
    directions: &[Direction],
    shots: u64,
    seed: u64,
) -> Result<ShotRecord> {
    let table = provider.tomogram(directions)?;
    let tuples = table.outcome_tuples();
    let probs = table.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let last_supported = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::Invariant("tomogram has no positive outcome".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = Vec::with_capacity(shots as usize);
    for _ in 0..shots {
        let u: f64 = rng.random_range(0.0..1.0);
        // Strict comparison: a zero-probability outcome adds nothing to the
        // cumulative sum, so no u can land on it.
        let idx = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last_supported);
        drawn.push(tuples[idx].clone());
    }
    ShotRecord::new(directions.to_vec(), table.party_dims().to_vec(), seed, drawn)
}

/// Outcome frequencies of a record as a tomogram table.
pub fn empirical_tomogram(record: &ShotRecord) -> Result<Tomogram> {
    let total = record.shots().len();
    if total == 0 {
        return Err(Error::MissingData("record has no shots".into()));
    }
    let probs: Vec<f64> = record
        .counts()
        .iter()
        .map(|&c| c as f64 / total as f64)
        .collect();
    Tomogram::new(
        record.directions().to_vec(),
        record.party_dims().to_vec(),
        probs,
    )
}

/// Tomogram provider backed by recorded tables, looked up by the exact
/// normalized angles of the direction tuple.
pub struct EmpiricalProvider {
    party_dims: Vec<usize>,
    tables: Vec<(Vec<(u64, u64)>, Tomogram)>,
}

impl EmpiricalProvider {
    /// Pool shot records into frequency tables, merging records that share
    /// a direction tuple.
    pub fn from_records(records: &[ShotRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::MissingData("no shot records given".into()))?;
        let party_dims = first.party_dims().to_vec();
        let mut pooled: Vec<(Vec<(u64, u64)>, Vec<Direction>, Vec<u64>)> = Vec::new();
        for record in records {
            if record.party_dims() != party_dims {
                return Err(Error::Shape(
                    "shot records must share one party structure".into(),
                ));
            }
            let key: Vec<(u64, u64)> = record.directions().iter().map(|d| d.bits()).collect();
            let counts = record.counts();
            match pooled.iter_mut().find(|(k, _, _)| *k == key) {
                Some((_, _, acc)) => {
                    for (a, c) in acc.iter_mut().zip(&counts) {
                        *a += c;
                    }
                }
                None => pooled.push((key, record.directions().to_vec(), counts)),
            }
        }
        let mut tables = Vec::with_capacity(pooled.len());
        for (key, dirs, counts) in pooled {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                return Err(Error::MissingData(format!(
                    "no shots at direction tuple {:?}",
                    dirs.iter().map(|d| (d.theta(), d.phi())).collect::<Vec<_>>()
                )));
            }
            let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
            tables.push((key, Tomogram::new(dirs, party_dims.clone(), probs)?));
        }
        Ok(Self { party_dims, tables })
    }

    /// Use exact tomogram tables directly.
    pub fn from_tomograms(tables: Vec<Tomogram>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::MissingData("no tomograms given".into()))?;
        let party_dims = first.party_dims().to_vec();
        let mut keyed = Vec::with_capacity(tables.len());
        for t in tables {
            if t.party_dims() != party_dims {
                return Err(Error::Shape(
                    "tomograms must share one party structure".into(),
                ));
            }
            let key: Vec<(u64, u64)> = t.directions().iter().map(|d| d.bits()).collect();
            if keyed.iter().any(|(k, _)| *k == key) {
                return Err(Error::Shape("duplicate direction tuple in tables".into()));
            }
            keyed.push((key, t));
        }
        Ok(Self { party_dims, tables: keyed })
    }

    fn lookup(&self, directions: &[Direction]) -> Result<&Tomogram> {
        let key: Vec<(u64, u64)> = directions.iter().map(|d| d.bits()).collect();
        self.tables
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, t)| t)
            .ok_or_else(|| {
                Error::MissingData(format!(
                    "no recorded data at direction tuple {:?}",
                    directions
                        .iter()
                        .map(|d| (d.theta(), d.phi()))
                        .collect::<Vec<_>>()
                ))
            })
    }
}

impl TomogramProvider for EmpiricalProvider {
    fn party_dims(&self) -> Vec<usize> {
        self.party_dims.clone()
    }

    fn joint_prob(&self, outcomes: &[i8], directions: &[Direction]) -> Result<f64> {
        self.lookup(directions)?.prob(outcomes)
    }

    fn tomogram(&self, directions: &[Direction]) -> Result<Tomogram> {
        self.lookup(directions).cloned()
    }
}

/// A sampled statistic with its standard error.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub shots_per_setting: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serialization cannot fail")
    }
}

/// Correlation estimate and its sampling variance from one record.
fn correlation_estimate(record: &ShotRecord) -> (f64, f64) {
    let n = record.shots().len() as f64;
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for shot in record.shots() {
        let v: f64 = shot.iter().map(|&m| m as f64).product();
        mean += v / n;
        mean_sq += v * v / n;
    }
    (mean, (mean_sq - mean * mean) / n)
}

/// Sampled CHSH left side |M(a,b) - M(a,c)| + M(b',b) + M(b',c) - 2 with a
/// delta-method standard error. Setting k is sampled with seed `seed XOR k`.
pub fn estimate_chsh<P: TomogramProvider + ?Sized>(
    provider: &P,
    a: &Direction,
    b: &Direction,
    c: &Direction,
    bprime: &Direction,
    shots_per_setting: u64,
    seed: u64,
) -> Result<Estimate> {
    if shots_per_setting == 0 {
        return Err(Error::Domain("estimation needs at least one shot".into()));
    }
    let settings = [[*a, *b], [*a, *c], [*bprime, *b], [*bprime, *c]];
    let mut means = [0.0; 4];
    let mut variances = [0.0; 4];
    for (k, setting) in settings.iter().enumerate() {
        let record = sample(provider, setting, shots_per_setting, seed ^ k as u64)?;
        let (m, v) = correlation_estimate(&record);
        means[k] = m;
        variances[k] = v;
    }
    let value = (means[0] - means[1]).abs() + means[2] + means[3] - 2.0;
    // All four partial derivatives are +-1, so the variances add.
    let std_error = variances.iter().sum::<f64>().sqrt();
    Ok(Estimate { value, std_error, shots_per_setting, seed })
}
