//! Compensated accumulation and a fixed-shape block reduction.
//!
//! Double sums over `n²` terms lose several digits with naive accumulation.
//! [`Neumaier`] carries a running error term, and [`block_sum`] splits the
//! outer index into fixed blocks whose partial sums are combined in index
//! order, so the result does not depend on how many workers evaluated the
//! blocks.

use rayon::prelude::*;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<Neumaier>().total()
}

/// Rows per block in [`block_sum`]. Part of the reduction shape, so changing
/// it changes low-order bits of results.
pub const BLOCK_ROWS: usize = 64;

/// Sums `row(i)` for `i in 0..rows`, evaluating blocks of rows in parallel and
/// combining block partials in ascending block order.
pub fn block_sum<F>(rows: usize, row: F) -> f64
where
    F: Fn(usize, &mut Neumaier) + Sync,
{
    let blocks = rows.div_ceil(BLOCK_ROWS);
    let partials: Vec<Neumaier> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Neumaier::new();
            let end = ((b + 1) * BLOCK_ROWS).min(rows);
            for i in b * BLOCK_ROWS..end {
                row(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Neumaier::new();
    for p in partials {
        total.merge(p);
    }
    total.total()
}
