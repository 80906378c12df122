//! Deterministic train / validation / test partitioning.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Tag mixed into the split seed so split draws never collide with other
/// streams derived from the same master seed.
const SPLIT_STREAM: u64 = 0x0053_504c_4954;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.64,
            validation: 0.16,
            test: 0.20,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let f = Self {
            train,
            validation,
            test,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Config(format!("split fractions must be positive, got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub fractions: SplitFractions,
    pub repeat_index: u32,
}

impl SplitSpec {
    pub fn new(seed: u64, repeat_index: u32) -> Self {
        Self {
            seed,
            fractions: SplitFractions::default(),
            repeat_index,
        }
    }

    /// Partition sizes for `n` items: validation and test are `round(n*f)`,
    /// train takes the remainder.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.fractions.validate()?;
        let val = (n as f64 * self.fractions.validation).round() as usize;
        let test = (n as f64 * self.fractions.test).round() as usize;
        let train = n.saturating_sub(val + test);
        if n < 5 || train == 0 || val == 0 || test == 0 {
            return Err(Error::Size(format!(
                "{n} faces cannot fill train/validation/test (sizes {train}/{val}/{test}); need at least 5"
            )));
        }
        Ok((train, val, test))
    }
}

/// Index-based partition; each list is in ascending input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with a generator seeded from `(seed, repeat_index)` and
/// cuts it into train / validation / test.
pub fn make_split(n: usize, spec: &SplitSpec) -> Result<Split> {
    let (n_train, n_val, _) = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(derive_seed(spec.seed, &[SPLIT_STREAM, spec.repeat_index as u64]));
    rng.shuffle(&mut order);
    let mut train = order[..n_train].to_vec();
    let mut validation = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        validation,
        test,
    })
}

/// Same as [`make_split`] but returns the items themselves.
pub fn make_split_of<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let s = make_split(items.len(), spec)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    Ok((pick(&s.train), pick(&s.validation), pick(&s.test)))
}
