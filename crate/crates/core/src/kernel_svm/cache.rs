use std::sync::Arc;

use super::KernelSpec;
use crate::dataset::TwoClassView;

/// Problems up to this size keep every Gram row once computed.
pub const FULL_GRAM_LIMIT: usize = 4096;

/// Row budget (in f64 entries) for the LRU cache used above the limit.
const LRU_BUDGET: usize = 1 << 25;

/// Lazily computed kernel rows `K(x_i, ·)` over a training view.
///
/// Below [`FULL_GRAM_LIMIT`] rows the cache has room for the whole Gram
/// matrix. Above it, rows are evicted least-recently-used first.
pub(crate) struct KernelRows<'a> {
    view: &'a TwoClassView<'a>,
    kernel: KernelSpec,
    rows: Vec<Option<Arc<[f64]>>>,
    stamps: Vec<u64>,
    clock: u64,
    resident: usize,
    capacity: usize,
    diag: Vec<f64>,
}

impl<'a> KernelRows<'a> {
    pub fn new(view: &'a TwoClassView<'a>, kernel: KernelSpec) -> Self {
        let m = view.len();
        let capacity = if m <= FULL_GRAM_LIMIT {
            m
        } else {
            (LRU_BUDGET / m).max(2)
        };
        let diag = (0..m).map(|i| kernel.compute(view.x(i), view.x(i))).collect();
        KernelRows {
            view,
            kernel,
            rows: vec![None; m],
            stamps: vec![0; m],
            clock: 0,
            resident: 0,
            capacity,
            diag,
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&mut self, i: usize) -> Arc<[f64]> {
        self.clock += 1;
        self.stamps[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return Arc::clone(r);
        }
        if self.resident >= self.capacity {
            self.evict();
        }
        let xi = self.view.x(i);
        let row: Arc<[f64]> = (0..self.view.len())
            .map(|j| self.kernel.compute(xi, self.view.x(j)))
            .collect();
        self.rows[i] = Some(Arc::clone(&row));
        self.resident += 1;
        row
    }

    fn evict(&mut self) {
        let victim = (0..self.rows.len())
            .filter(|&j| self.rows[j].is_some())
            .min_by_key(|&j| self.stamps[j]);
        if let Some(v) = victim {
            self.rows[v] = None;
            self.resident -= 1;
        }
    }

    #[cfg(test)]
    fn with_capacity(view: &'a TwoClassView<'a>, kernel: KernelSpec, capacity: usize) -> Self {
        let mut rows = Self::new(view, kernel);
        rows.capacity = capacity;
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{pair_subset, Dataset};

    #[test]
    fn lru_rows_match_direct_evaluation() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.1, (i % 3) as f64]).collect();
        let labels = (0..12).map(|i| i % 2).collect();
        let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let v = pair_subset(&d, 0, 1).unwrap();
        let k = KernelSpec::Rbf { gamma: 0.7 };
        let mut cache = KernelRows::with_capacity(&v, k, 3);
        for &i in &[0, 5, 7, 0, 11, 3, 5, 5, 9] {
            let r = cache.row(i);
            for j in 0..v.len() {
                assert_eq!(r[j], k.compute(v.x(i), v.x(j)));
            }
            assert!(cache.resident <= 3);
        }
    }
}
