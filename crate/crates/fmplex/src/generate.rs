//! Deterministic random instance generation for tests and benchmarks.
//!
//! All randomness flows through a caller-supplied [`ChaCha8Rng`], so a seed
//! pins every generated instance byte-for-byte. Instances are drawn with
//! uniform integer coefficients; a configurable fraction is made satisfiable
//! by planting a random rational point and relaxing each bound just enough to
//! include it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rational::{rat, ratio, DeltaRational, Rational};
use crate::smtlib::{Problem, SourceAtom};
use crate::system::{Constraint, LinearSystem, Relation};

/// Shape of one generated instance.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub nvars: usize,
    pub nrows: usize,
    /// Coefficients and right-hand sides are uniform in `-coeff_range..=coeff_range`.
    pub coeff_range: i64,
    /// Probability that an instance gets a planted satisfying point.
    pub sat_bias: f64,
    /// Probability that an individual row is strict.
    pub strict_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nvars: 2,
            nrows: 4,
            coeff_range: 3,
            sat_bias: 0.5,
            strict_prob: 0.0,
        }
    }
}

/// A random point with small rational coordinates, used as a planted solution.
fn random_point(rng: &mut ChaCha8Rng, nvars: usize, coeff_range: i64) -> Vec<Rational> {
    let span = 2 * coeff_range.max(1);
    (0..nvars)
        .map(|_| ratio(rng.gen_range(-span..=span), rng.gen_range(1..=3)))
        .collect()
}

/// A small positive (or, if allowed, zero) slack used to relax a bound past
/// the planted point. Zero slack leaves the bound tight at the point.
fn random_slack(rng: &mut ChaCha8Rng, allow_zero: bool) -> Rational {
    let lo = if allow_zero { 0 } else { 1 };
    ratio(rng.gen_range(lo..=3), rng.gen_range(1..=2))
}

fn random_coeffs(rng: &mut ChaCha8Rng, nvars: usize, coeff_range: i64) -> Vec<Rational> {
    (0..nvars)
        .map(|_| rat(rng.gen_range(-coeff_range..=coeff_range)))
        .collect()
}

fn dot(coeffs: &[Rational], point: &[Rational]) -> Rational {
    coeffs.iter().zip(point).map(|(c, p)| c * p).sum()
}

/// A random problem in source form: variables `x1..xn` and `nrows` atoms over
/// the four inequality relations, with a planted solution at rate `sat_bias`.
pub fn random_problem(rng: &mut ChaCha8Rng, config: &GenConfig) -> Problem {
    let planted = rng.gen::<f64>() < config.sat_bias;
    let point = planted.then(|| random_point(rng, config.nvars, config.coeff_range));
    let mut atoms = Vec::with_capacity(config.nrows);
    for _ in 0..config.nrows {
        let coeffs = random_coeffs(rng, config.nvars, config.coeff_range);
        let strict = rng.gen::<f64>() < config.strict_prob;
        let rel = match (rng.gen::<bool>(), strict) {
            (false, false) => Relation::Le,
            (false, true) => Relation::Lt,
            (true, false) => Relation::Ge,
            (true, true) => Relation::Gt,
        };
        let mut rhs = rat(rng.gen_range(-config.coeff_range..=config.coeff_range));
        if let Some(point) = &point {
            let value = dot(&coeffs, point);
            // Relax the bound just enough that the point satisfies the atom,
            // strictly where the relation demands it.
            match rel {
                Relation::Le if rhs < value => rhs = &value + random_slack(rng, true),
                Relation::Lt if rhs <= value => rhs = &value + random_slack(rng, false),
                Relation::Ge if rhs > value => rhs = &value - random_slack(rng, true),
                Relation::Gt if rhs >= value => rhs = &value - random_slack(rng, false),
                _ => {}
            }
        }
        atoms.push(SourceAtom {
            rel,
            coeffs,
            rhs,
            name: None,
        });
    }
    Problem {
        variables: (1..=config.nvars).map(|i| format!("x{}", i)).collect(),
        atoms,
        check_sat: true,
        get_model: false,
        get_unsat_core: false,
    }
}

/// A random system already in normalized `a·x ≤ b` form (strict rows carry an
/// infinitesimal bound), with a planted solution at rate `sat_bias`.
pub fn random_system(rng: &mut ChaCha8Rng, config: &GenConfig) -> LinearSystem {
    let planted = rng.gen::<f64>() < config.sat_bias;
    let point = planted.then(|| random_point(rng, config.nvars, config.coeff_range));
    let mut rows = Vec::with_capacity(config.nrows);
    for _ in 0..config.nrows {
        let coeffs = random_coeffs(rng, config.nvars, config.coeff_range);
        let strict = rng.gen::<f64>() < config.strict_prob;
        let mut rhs = rat(rng.gen_range(-config.coeff_range..=config.coeff_range));
        if let Some(point) = &point {
            let value = dot(&coeffs, point);
            if strict && rhs <= value {
                rhs = &value + random_slack(rng, false);
            } else if !strict && rhs < value {
                rhs = &value + random_slack(rng, true);
            }
        }
        let bound = if strict {
            DeltaRational::strict(rhs)
        } else {
            DeltaRational::from_real(rhs)
        };
        rows.push(Constraint::new(coeffs, bound));
    }
    LinearSystem::new(config.nvars, rows)
}
