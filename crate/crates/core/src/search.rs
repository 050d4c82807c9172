//! Maximization of inequality margins over measurement directions.
//!
//! Directions are searched in raw angle space (theta, phi per free
//! direction), where the tomogram is smooth and periodic, so the simplex
//! never needs constraints; angles are normalized onto the sphere only when
//! a result is reported. The quadratic inequality's primed settings are
//! parameterized by one rotation angle inside the tangent plane of the
//! unprimed direction, which keeps the orthogonality constraint exact.
//!
//! Searches restart from `restarts` independent seeded starting simplexes
//! (one deterministic RNG stream per restart) and keep the best margin,
//! breaking ties toward the lower restart index, so results are
//! reproducible regardless of thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::{eval_kind, InequalityKind, InequalityReport, VIOLATION_EPS};
use crate::tomography::{Direction, TomogramProvider, WernerProvider};

/// Bisection stops when the bracket is narrower than this.
const PHI_TOL: f64 = 1e-5;

/// Knobs of the restarted simplex search.
#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    /// Independent seeded starts; the best result wins.
    pub restarts: usize,
    /// Base seed; restart k draws from stream k of this seed.
    pub seed: u64,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Simplex size termination threshold.
    pub xtol: f64,
    /// Objective spread termination threshold.
    pub ftol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            max_iters: 600,
            xtol: 1e-9,
            ftol: 1e-12,
        }
    }
}

/// Best direction tuple found for one inequality on one state.
#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub kind: InequalityKind,
    /// Best directions, in the evaluation order of the inequality.
    pub directions: Vec<Direction>,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub violated: bool,
    pub restarts: usize,
    pub seed: u64,
    /// Total objective evaluations across all restarts.
    pub evaluations: u64,
}

impl SearchResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("search result serialization cannot fail")
    }
}

/// Free parameters per inequality: two angles per unconstrained direction,
/// plus one tangent-plane angle per orthogonality-constrained direction.
fn param_count(kind: InequalityKind) -> usize {
    match kind {
        InequalityKind::Wigner => 6,
        InequalityKind::Chsh => 8,
        InequalityKind::Uffink => 6,
    }
}

fn direction_from_vector(v: [f64; 3]) -> Result<Direction> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]);
    Direction::new(theta, phi)
}

/// Unit vector orthogonal to (theta, phi), rotated by alpha inside the
/// tangent plane spanned by the theta and phi coordinate tangents.
fn orthogonal_direction(theta: f64, phi: f64, alpha: f64) -> Result<Direction> {
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let e1 = [ct * cp, ct * sp, -st];
    let e2 = [-sp, cp, 0.0];
    let (sa, ca) = (alpha.sin(), alpha.cos());
    direction_from_vector([
        ca * e1[0] + sa * e2[0],
        ca * e1[1] + sa * e2[1],
        ca * e1[2] + sa * e2[2],
    ])
}

/// Map raw angles to the inequality's direction tuple.
fn directions_from_params(kind: InequalityKind, params: &[f64]) -> Result<Vec<Direction>> {
    match kind {
        InequalityKind::Wigner | InequalityKind::Chsh => params
            .chunks(2)
            .map(|c| Direction::new(c[0], c[1]))
            .collect(),
        InequalityKind::Uffink => {
            let a = Direction::new(params[0], params[1])?;
            let aprime = orthogonal_direction(params[0], params[1], params[2])?;
            let b = Direction::new(params[3], params[4])?;
            let bprime = orthogonal_direction(params[3], params[4], params[5])?;
            Ok(vec![a, aprime, b, bprime])
        }
    }
}

struct SimplexOutcome {
    best: Vec<f64>,
    evaluations: u64,
}

/// Downhill simplex minimization with the standard reflection, expansion,
/// contraction and shrink coefficients (1, 2, 1/2, 1/2).
fn nelder_mead<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    start: &[f64],
    step: f64,
    max_iters: usize,
    xtol: f64,
    ftol: f64,
) -> Result<SimplexOutcome> {
    let n = start.len();
    let mut evaluations = 0u64;
    let mut eval = |x: &[f64], evals: &mut u64| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v = eval(start, &mut evaluations)?;
    simplex.push((start.to_vec(), v));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evaluations)?;
        simplex.push((x, v));
    }

    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let f_spread = simplex[n].1 - simplex[0].1;
        let x_spread = (0..n)
            .map(|j| {
                simplex
                    .iter()
                    .map(|(x, _)| (x[j] - simplex[0].0[j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread < ftol && x_spread < xtol {
            break;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for j in 0..n {
                centroid[j] += x[j] / n as f64;
            }
        }
        let worst = simplex[n].clone();

        let reflect: Vec<f64> = (0..n)
            .map(|j| centroid[j] + (centroid[j] - worst.0[j]))
            .collect();
        let f_reflect = eval(&reflect, &mut evaluations)?;

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = (0..n)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - worst.0[j]))
                .collect();
            let f_expand = eval(&expand, &mut evaluations)?;
            simplex[n] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
            continue;
        }
        if f_reflect < simplex[n - 1].1 {
            simplex[n] = (reflect, f_reflect);
            continue;
        }

        let (toward, f_toward) = if f_reflect < worst.1 {
            (reflect.as_slice(), f_reflect)
        } else {
            (worst.0.as_slice(), worst.1)
        };
        let contract: Vec<f64> = (0..n)
            .map(|j| centroid[j] + 0.5 * (toward[j] - centroid[j]))
            .collect();
        let f_contract = eval(&contract, &mut evaluations)?;
        if f_contract < f_toward {
            simplex[n] = (contract, f_contract);
            continue;
        }

        // Shrink everything toward the best vertex.
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            for j in 0..n {
                entry.0[j] = best[j] + 0.5 * (entry.0[j] - best[j]);
            }
            entry.1 = eval(&entry.0, &mut evaluations)?;
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(SimplexOutcome {
        best: simplex[0].0.clone(),
        evaluations,
    })
}

/// Maximize the violation margin of `kind` on `provider` over measurement
/// directions, using `config.restarts` independent simplex starts.
pub fn maximize_margin<P: TomogramProvider + ?Sized>(
    kind: InequalityKind,
    provider: &P,
    config: &SearchConfig,
) -> Result<SearchResult> {
    if config.restarts == 0 {
        return Err(Error::Domain("search needs at least one restart".into()));
    }
    let n = param_count(kind);

    let run_restart = |restart: usize| -> Result<(InequalityReport, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let start: Vec<f64> = (0..n)
            .map(|j| {
                if j % 2 == 0 {
                    rng.random_range(0.0..std::f64::consts::PI)
                } else {
                    rng.random_range(0.0..2.0 * std::f64::consts::PI)
                }
            })
            .collect();
        let objective = |params: &[f64]| -> Result<f64> {
            let dirs = directions_from_params(kind, params)?;
            Ok(-eval_kind(kind, provider, &dirs)?.margin)
        };
        let outcome = nelder_mead(
            objective,
            &start,
            0.5,
            config.max_iters,
            config.xtol,
            config.ftol,
        )?;
        let dirs = directions_from_params(kind, &outcome.best)?;
        let report = eval_kind(kind, provider, &dirs)?;
        Ok((report, outcome.evaluations))
    };

    let per_restart: Vec<(InequalityReport, u64)> = (0..config.restarts)
        .into_par_iter()
        .map(run_restart)
        .collect::<Result<Vec<_>>>()?;

    let evaluations: u64 = per_restart.iter().map(|(_, e)| e).sum();
    // Ties break toward the lower restart index; the scan order is fixed.
    let mut best = &per_restart[0].0;
    for (report, _) in &per_restart[1..] {
        if report.margin > best.margin {
            best = report;
        }
    }

    Ok(SearchResult {
        kind,
        directions: best.directions.clone(),
        lhs: best.lhs,
        bound: best.bound,
        margin: best.margin,
        violated: best.violated,
        restarts: config.restarts,
        seed: config.seed,
        evaluations,
    })
}

/// Largest Werner parameter (within [`PHI_TOL`]) below which the inequality
/// is violated, or `None` when no member of the family violates it.
///
/// The best margin is computed by [`maximize_margin`] at each probe. Five
/// spot probes first verify that the violated set is a left interval of the
/// parameter range; a broken pattern is reported as [`Error::Invariant`].
pub fn threshold_phi(d: usize, kind: InequalityKind, config: &SearchConfig) -> Result<Option<f64>> {
    let margin_at = |phi: f64| -> Result<f64> {
        let provider = WernerProvider::new(d, phi)?;
        Ok(maximize_margin(kind, &provider, config)?.margin)
    };
    let violated = |margin: f64| margin > VIOLATION_EPS;

    let spots = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut spot_margins = [0.0; 5];
    for (m, phi) in spot_margins.iter_mut().zip(spots) {
        *m = margin_at(phi)?;
    }
    let mut seen_satisfied = false;
    for (phi, &m) in spots.iter().zip(&spot_margins) {
        if violated(m) {
            if seen_satisfied {
                return Err(Error::Invariant(format!(
                    "violation region is not a left interval: margin {m:.3e} at phi = {phi} \
                     after a satisfied point"
                )));
            }
        } else {
            seen_satisfied = true;
        }
    }

    if !violated(spot_margins[0]) {
        return Ok(None);
    }

    // Invariant: violated at lo, satisfied at hi.
    let (mut lo, mut hi) = (-1.0, 1.0);
    while hi - lo > PHI_TOL {
        let mid = 0.5 * (lo + hi);
        if violated(margin_at(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
