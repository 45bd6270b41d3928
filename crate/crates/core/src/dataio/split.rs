use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// Parses `0.8,0.1,0.1`.
    pub fn with_fractions(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| crate::Error::InvalidArgument(format!("bad fractions `{text}`: {e}")))?;
        let [train, val, test] = parts[..] else {
            return invalid_arg("expected three fractions");
        };
        let spec = Self { train, val, test, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|x| !(*x >= 0.0)) {
            return invalid_arg("fractions must be non-negative");
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return invalid_arg(format!("fractions must sum to 1, got {}", f.iter().sum::<f64>()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle of the sorted ids, then contiguous slices; train and val
/// sizes are rounded down and test takes the remainder.
pub fn split(ids: &[String], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n = ids.len() as f64;
    let n_train = (n * spec.train + 1e-9).floor() as usize;
    let n_val = ((n * spec.val + 1e-9).floor() as usize).min(ids.len() - n_train);
    let test = ids.split_off(n_train + n_val);
    let val = ids.split_off(n_train);
    Ok(Split { train: ids, val, test })
}
