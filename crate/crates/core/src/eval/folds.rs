//! Expanding-window folds with consecutive validation blocks at the end of training.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Months available for fitting: indices `0..train_len`.
    pub train_len: usize,
    /// Validation block `val_start..val_end` (0-based, end exclusive).
    pub val_start: usize,
    pub val_end: usize,
}

impl Fold {
    /// 1-based index of the first validation month.
    pub fn start_one_based(&self) -> usize {
        self.val_start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub h_val: usize,
    pub folds: Vec<Fold>,
}

/// Fold `i` (1-based) validates from `s_i = T0 - K h + (i - 1) h + 1`, 1-based.
pub fn build_folds(t0: usize, k: usize, h_val: usize) -> Result<FoldPlan> {
    if k == 0 || h_val == 0 || t0 <= k * h_val {
        return Err(Error::TooShort { t0, k, h_val });
    }
    let folds = (1..=k)
        .map(|i| {
            let s = t0 - k * h_val + (i - 1) * h_val + 1;
            Fold {
                train_len: s - 1,
                val_start: s - 1,
                val_end: s - 1 + h_val,
            }
        })
        .collect();
    Ok(FoldPlan { k, h_val, folds })
}
