//! Property tests for the library-wide numerical invariants: direction
//! normalization, tomogram normalization and positivity, provider
//! agreement, convexity of separable mixtures, the Tsirelson ceiling,
//! and lossless wire round-trips.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spintomo::inequalities::{correlation, eval_chsh};
use spintomo::sampling::{empirical_tomogram, sample, EmpiricalProvider, ShotRecord};
use spintomo::states::{mix_separable, SeparableSpec};
use spintomo::tomography::{
    clamp_probability, fibonacci_sphere, tomogram_multi, tomograms_from_csv, tomograms_to_csv,
    BlochProvider, Direction, ExactProvider, Tomogram, WernerProvider, NEG_PROB_CLAMP,
};
use spintomo::{DensityMatrix, Error, TomogramProvider};

fn unit_vector_of(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..PI, 0.0..TAU).prop_map(|(t, p)| Direction::new(t, p).unwrap())
}

fn random_state(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DensityMatrix::random_ginibre(dim, &mut rng).unwrap()
}

proptest! {
    /// Any finite angle pair lands in the canonical ranges without moving
    /// the point on the sphere.
    #[test]
    fn direction_normalization_preserves_the_point(theta in -20.0..20.0f64, phi in -20.0..20.0f64) {
        let d = Direction::new(theta, phi).unwrap();
        prop_assert!((0.0..=PI).contains(&d.theta()));
        prop_assert!((0.0..TAU).contains(&d.phi()));
        let got = d.unit_vector();
        let expected = unit_vector_of(theta, phi);
        for (g, e) in got.iter().zip(expected) {
            prop_assert!((g - e).abs() < 1e-9, "{got:?} vs {expected:?}");
        }
        let norm: f64 = got.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    /// Tomograms of random full-rank states normalize and stay nonnegative
    /// for every system shape.
    #[test]
    fn tomograms_normalize(seed in 0u64..1 << 32, which in 0usize..4, d1 in direction(), d2 in direction()) {
        let dim = [2usize, 3, 4, 9][which];
        let rho = random_state(dim, seed);
        let dirs = if rho.parties() == 1 { vec![d1] } else { vec![d1, d2] };
        let table = tomogram_multi(&rho, &dirs).unwrap();
        let sum: f64 = table.probabilities().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        prop_assert!(table.probabilities().iter().all(|&p| p >= 0.0));
    }

    /// The closed-form Werner provider agrees with the brute-force trace
    /// on every outcome.
    #[test]
    fn werner_provider_matches_exact_trace(phi in -1.0..=1.0f64, d in prop::sample::select(vec![2usize, 3]), n1 in direction(), n2 in direction()) {
        let closed = WernerProvider::new(d, phi).unwrap();
        let exact = ExactProvider::new(DensityMatrix::werner(d, phi).unwrap());
        let a = closed.tomogram(&[n1, n2]).unwrap();
        let b = exact.tomogram(&[n1, n2]).unwrap();
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    /// Correlation functions never leave [-1, 1] and the quantum CHSH
    /// combination never exceeds the 2*sqrt(2) ceiling.
    #[test]
    fn chsh_respects_the_tsirelson_ceiling(phi in -1.0..=1.0f64, a in direction(), b in direction(), c in direction(), bp in direction()) {
        let provider = WernerProvider::new(2, phi).unwrap();
        let m = correlation(&provider, &a, &b).unwrap();
        prop_assert!(m.abs() <= 1.0 + 1e-12);
        let report = eval_chsh(&provider, &a, &b, &c, &bp).unwrap();
        prop_assert!(report.lhs + 2.0 <= 2.0 * 2.0_f64.sqrt() + 1e-9);
    }

    /// The tomogram of a separable mixture is the convex sum of the
    /// factorized tomogram products.
    #[test]
    fn mixture_tomogram_is_the_convex_sum(w in 0.05..0.95f64, s1 in 0u64..1 << 20, s2 in 0u64..1 << 20, n1 in direction(), n2 in direction()) {
        let spec = SeparableSpec {
            weights: vec![w, 1.0 - w],
            factors: vec![
                (random_state(2, s1), random_state(2, s1 + 7)),
                (random_state(2, s2 + 13), random_state(2, s2 + 19)),
            ],
        };
        let mixed = mix_separable(&spec).unwrap();
        let table = tomogram_multi(&mixed, &[n1, n2]).unwrap();
        for m1 in [1i8, -1] {
            for m2 in [1i8, -1] {
                let mut expected = 0.0;
                for (weight, (fa, fb)) in spec.weights.iter().zip(&spec.factors) {
                    let pa = tomogram_multi(fa, &[n1]).unwrap().prob(&[m1]).unwrap();
                    let pb = tomogram_multi(fb, &[n2]).unwrap().prob(&[m2]).unwrap();
                    expected += weight * pa * pb;
                }
                prop_assert!((table.prob(&[m1, m2]).unwrap() - expected).abs() < 1e-12);
            }
        }
    }

    /// JSON round-trips reproduce tomograms bit for bit.
    #[test]
    fn tomogram_json_round_trips(seed in 0u64..1 << 32, n1 in direction(), n2 in direction()) {
        let table = tomogram_multi(&random_state(4, seed), &[n1, n2]).unwrap();
        let back = Tomogram::from_json(&table.to_json()).unwrap();
        prop_assert_eq!(back, table);
    }

    /// CSV round-trips reproduce whole tomogram batches bit for bit.
    #[test]
    fn tomogram_csv_round_trips(seed in 0u64..1 << 32, n1 in direction(), n2 in direction(), n3 in direction()) {
        let rho = random_state(9, seed);
        let tables = vec![
            tomogram_multi(&rho, &[n1, n2]).unwrap(),
            tomogram_multi(&rho, &[n2, n3]).unwrap(),
        ];
        let csv = tomograms_to_csv(&tables).unwrap();
        let back = tomograms_from_csv(&csv).unwrap();
        prop_assert_eq!(back, tables);
    }

    /// Shot records survive both wire formats bit for bit.
    #[test]
    fn shot_record_round_trips(phi in -1.0..=1.0f64, seed in 0u64..1 << 32, n1 in direction(), n2 in direction()) {
        let provider = WernerProvider::new(2, phi).unwrap();
        let record = sample(&provider, &[n1, n2], 64, seed).unwrap();
        prop_assert_eq!(ShotRecord::from_csv(&record.to_csv()).unwrap(), record.clone());
        prop_assert_eq!(ShotRecord::from_json(&record.to_json()).unwrap(), record);
    }

    /// Tiny negative rounding residue is clamped to zero; genuine
    /// negativity is refused.
    #[test]
    fn probability_clamp_window(p in 0.0..=1.0f64, residue in 0.0..1.0f64) {
        prop_assert_eq!(clamp_probability(p).unwrap(), p);
        let tiny = -residue * NEG_PROB_CLAMP;
        prop_assert_eq!(clamp_probability(tiny).unwrap(), 0.0);
        let bad = -NEG_PROB_CLAMP * (1.5 + residue);
        prop_assert!(matches!(clamp_probability(bad), Err(Error::Invariant(_))));
    }

    /// Fibonacci-sphere batches are unit, canonical, and pairwise distinct.
    #[test]
    fn fibonacci_sphere_is_well_formed(n in 1usize..150) {
        let points = fibonacci_sphere(n).unwrap();
        prop_assert_eq!(points.len(), n);
        for p in &points {
            let v = p.unit_vector();
            let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
        for i in 0..n {
            for j in 0..i {
                prop_assert!(points[i] != points[j], "points {i} and {j} coincide");
            }
        }
    }
}

/// A broad seeded sweep against the quantum ceiling: no state, Werner or
/// generic, pushes the CHSH combination past 2*sqrt(2).
#[test]
fn tsirelson_ceiling_sweep() {
    let tsirelson = 2.0 * 2.0_f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut providers: Vec<Box<dyn TomogramProvider>> = Vec::new();
    for k in 0..10 {
        providers.push(Box::new(
            WernerProvider::new(2, -1.0 + 0.2 * k as f64).unwrap(),
        ));
    }
    for k in 0..10u64 {
        let rho = random_state(4, 9000 + k);
        providers.push(Box::new(BlochProvider::new(&rho).unwrap()));
    }
    let mut max_combination = f64::NEG_INFINITY;
    for provider in &providers {
        for _ in 0..2500 {
            let mut dir = || {
                let z: f64 = rng.random_range(-1.0..=1.0);
                Direction::new(z.acos(), rng.random_range(0.0..TAU)).unwrap()
            };
            let (a, b, c, bp) = (dir(), dir(), dir(), dir());
            let report = eval_chsh(provider.as_ref(), &a, &b, &c, &bp).unwrap();
            max_combination = max_combination.max(report.lhs + 2.0);
        }
    }
    assert!(
        max_combination <= tsirelson + 1e-9,
        "combination reached {max_combination}, ceiling {tsirelson}"
    );
}

/// Pooling shot records reproduces exact count ratios.
#[test]
fn pooled_records_give_exact_count_ratios() {
    let provider = WernerProvider::new(2, -0.6).unwrap();
    let n1 = Direction::axis('z');
    let n2 = Direction::new(1.0, 2.0).unwrap();
    let first = sample(&provider, &[n1, n2], 30, 5).unwrap();
    let second = sample(&provider, &[n1, n2], 50, 6).unwrap();

    let mut counts = [0u64; 4];
    for record in [&first, &second] {
        for (slot, count) in counts.iter_mut().zip(record.counts()) {
            *slot += count;
        }
    }

    let pooled = EmpiricalProvider::from_records(&[first, second]).unwrap();
    let table = pooled.tomogram(&[n1, n2]).unwrap();
    for (p, count) in table.probabilities().iter().zip(counts) {
        assert_eq!(*p, count as f64 / 80.0);
    }
}

/// An empirical tomogram is a genuine tomogram: normalized, nonnegative,
/// and in table order.
#[test]
fn empirical_tomograms_normalize() {
    let provider = WernerProvider::new(3, 0.3).unwrap();
    let dirs = [Direction::axis('x'), Direction::new(2.2, 5.0).unwrap()];
    let record = sample(&provider, &dirs, 999, 11).unwrap();
    let table = empirical_tomogram(&record).unwrap();
    let sum: f64 = table.probabilities().iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert_eq!(table.probabilities().len(), 9);
    assert_eq!(table.directions(), record.directions());
}
