//! Seeded sampling of chain experiments.
//!
//! The generator is SplitMix64 seeded with the raw `u64` seed as its
//! state. Each trial takes one output `w`, keeps `k = w >> 11` (53 bits)
//! and picks the first outcome cell, in the order (0,0), (0,1), (1,0),
//! (1,1), whose cumulative probability `C` satisfies `k < ⌈C·2^53⌉`.
//! Thresholds are computed exactly from rational weights, so a cell of
//! probability 0 or 1 is never or always drawn.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{xy_cells, SettingPair, SurfaceModel};
use crate::prob::Probability;

/// Minimum trial count for the normal approximation in [`frequency_test`].
pub const MIN_TRIALS: u64 = 30;

const SCALE_BITS: u32 = 53;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("setting pair {0} is not an experiment of the model")]
    UnknownSettingPair(SettingPair),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("{trials} trials is below the minimum of {MIN_TRIALS} for a frequency test")]
    TooFewTrials { trials: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub pair: SettingPair,
    pub x: u8,
    pub y: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub pair: SettingPair,
    pub seed: u64,
    pub trials: u64,
    pub matches: u64,
    pub mismatches: u64,
    /// Counts for (0,0), (0,1), (1,0), (1,1).
    pub cells: [u64; 4],
}

impl EmpiricalSummary {
    fn new(pair: SettingPair, seed: u64) -> Self {
        EmpiricalSummary {
            pair,
            seed,
            trials: 0,
            matches: 0,
            mismatches: 0,
            cells: [0; 4],
        }
    }

    fn record(&mut self, t: &TrialRecord) {
        self.trials += 1;
        self.cells[usize::from(t.x) * 2 + usize::from(t.y)] += 1;
        if t.x == t.y {
            self.matches += 1;
        } else {
            self.mismatches += 1;
        }
    }

    pub fn count(&self, statistic: Statistic) -> u64 {
        match statistic {
            Statistic::Match => self.matches,
            Statistic::Mismatch => self.mismatches,
            Statistic::XOne => self.cells[2] + self.cells[3],
            Statistic::YOne => self.cells[1] + self.cells[3],
        }
    }

    pub fn frequency(&self, statistic: Statistic) -> f64 {
        self.count(statistic) as f64 / self.trials as f64
    }
}

/// Event whose frequency is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Match,
    Mismatch,
    XOne,
    YOne,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [Statistic::Match, Statistic::Mismatch, Statistic::XOne, Statistic::YOne];

    /// The model probability of this event in a four-cell table.
    pub fn probability(self, c: &[Probability; 4]) -> Probability {
        match self {
            Statistic::Match => c[0].clone() + c[3].clone(),
            Statistic::Mismatch => c[1].clone() + c[2].clone(),
            Statistic::XOne => c[2].clone() + c[3].clone(),
            Statistic::YOne => c[1].clone() + c[3].clone(),
        }
    }
}

/// `⌈C·2^53⌉` for a cumulative probability `C` in `[0, 1]`.
fn threshold(c: &Probability) -> u64 {
    let full = 1u64 << SCALE_BITS;
    match c.as_rational() {
        Some(r) => {
            let scaled = r * num_rational::BigRational::from_integer(BigInt::one() << SCALE_BITS);
            scaled.ceil().to_integer().to_u64().unwrap_or(full).min(full)
        }
        None => {
            let v = (c.to_f64() * full as f64).ceil();
            if v <= 0.0 {
                0
            } else {
                (v as u64).min(full)
            }
        }
    }
}

/// Iterator of trials for one setting pair.
pub struct TrialStream {
    rng: SplitMix64,
    pair: SettingPair,
    thresholds: [u64; 4],
    next: u64,
}

impl TrialStream {
    pub fn new(model: &SurfaceModel, pair: SettingPair, seed: u64) -> Result<Self, SamplingError> {
        let table = model
            .outcome_table(pair)
            .ok_or(SamplingError::UnknownSettingPair(pair))?;
        let cells = xy_cells(table);
        let mut cumulative = Probability::zero();
        let mut thresholds = [0u64; 4];
        for (t, p) in thresholds.iter_mut().zip(&cells) {
            cumulative = cumulative + p.clone();
            *t = threshold(&cumulative);
        }
        // Float tables may sum to just under 1.
        thresholds[3] = 1u64 << SCALE_BITS;
        Ok(TrialStream {
            rng: SplitMix64::seed_from_u64(seed),
            pair,
            thresholds,
            next: 0,
        })
    }
}

impl Iterator for TrialStream {
    type Item = TrialRecord;

    fn next(&mut self) -> Option<TrialRecord> {
        let k = self.rng.next_u64() >> (64 - SCALE_BITS);
        let cell = self
            .thresholds
            .iter()
            .position(|&t| k < t)
            .expect("last threshold is 2^53");
        let record = TrialRecord {
            index: self.next,
            pair: self.pair,
            x: (cell / 2) as u8,
            y: (cell % 2) as u8,
        };
        self.next += 1;
        Some(record)
    }
}

pub fn sample_runs(
    model: &SurfaceModel,
    pair: SettingPair,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalSummary, SamplingError> {
    if trials == 0 {
        return Err(SamplingError::NoTrials);
    }
    let mut summary = EmpiricalSummary::new(pair, seed);
    for t in TrialStream::new(model, pair, seed)?.take(trials as usize) {
        summary.record(&t);
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTest {
    pub frequency: f64,
    pub expected: f64,
    /// `Some(0)` when an extremal expectation (0 or 1) is met exactly,
    /// `None` when it is missed.
    pub z: Option<f64>,
    pub passed: bool,
}

/// Two-sided binomial z-test of an observed count against `expected`.
pub fn frequency_test(
    summary: &EmpiricalSummary,
    statistic: Statistic,
    expected: &Probability,
    sigmas: f64,
) -> Result<FrequencyTest, SamplingError> {
    if summary.trials < MIN_TRIALS {
        return Err(SamplingError::TooFewTrials { trials: summary.trials });
    }
    let count = summary.count(statistic);
    let frequency = summary.frequency(statistic);
    let e = expected.to_f64();
    let extremal = if expected.is_zero() {
        Some(count == 0)
    } else if expected.is_one() {
        Some(count == summary.trials)
    } else {
        None
    };
    let (z, passed) = match extremal {
        Some(true) => (Some(0.0), true),
        Some(false) => (None, false),
        None => {
            let sd = (e * (1.0 - e) / summary.trials as f64).sqrt();
            let z = (frequency - e).abs() / sd;
            (Some(z), z <= sigmas)
        }
    };
    Ok(FrequencyTest {
        frequency,
        expected: e,
        z,
        passed,
    })
}
