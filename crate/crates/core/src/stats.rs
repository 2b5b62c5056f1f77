// Copyright 2026 The policy-repair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Outcome binning and the two-sample significance test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::repair::MODERATE_FLOOR_PERCENT;

/// p-values above this are rendered as not significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("each sample needs at least two values and at least one sample must vary")]
    DegenerateSample,
}

/// Counts for the complete (100%), moderate (80-99%) and failed (<80%) bins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bins {
    pub complete: usize,
    pub moderate: usize,
    pub failed: usize,
}

impl Bins {
    pub fn total(&self) -> usize {
        self.complete + self.moderate + self.failed
    }

    pub fn add(&mut self, accuracy_percent: f64) {
        if accuracy_percent >= 100.0 {
            self.complete += 1;
        } else if accuracy_percent >= MODERATE_FLOOR_PERCENT {
            self.moderate += 1;
        } else {
            self.failed += 1;
        }
    }

    /// Percentages recomputed from the counts.
    pub fn percentages(&self) -> (f64, f64, f64) {
        let n = self.total().max(1) as f64;
        (
            100.0 * self.complete as f64 / n,
            100.0 * self.moderate as f64 / n,
            100.0 * self.failed as f64 / n,
        )
    }
}

pub fn bin_accuracies(accuracies: impl IntoIterator<Item = f64>) -> Bins {
    let mut bins = Bins::default();
    for a in accuracies {
        bins.add(a);
    }
    bins
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_two_tailed: f64,
}

impl TTest {
    pub fn significant(&self) -> bool {
        self.p_two_tailed <= SIGNIFICANCE_LEVEL
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateSample);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    // sf(|t|) via the lower tail of -|t| keeps precision for large |t|.
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest { t, df, p_two_tailed: p })
}
