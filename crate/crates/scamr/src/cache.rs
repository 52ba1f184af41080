//! Black-box model interface and the memoizing evaluation cache.
//!
//! The cache is the unit of computational cost accounting: every distinct
//! input point is evaluated exactly once and the stored output is returned
//! bit-identically on repeat queries. Point identity uses coordinates
//! quantized to 1e-12 so that last-ulp noise from affine maps cannot defeat
//! reuse; the model is always invoked at the quantized coordinates, keeping
//! keys and evaluation points consistent.

use crate::error::{Result, ScamrError};
use std::collections::BTreeMap;
use std::sync::Mutex;

/// Key precision: coordinates are rounded to multiples of 1e-12.
const KEY_SCALE: f64 = 1e12;

pub type PointKey = Vec<i64>;

pub fn quantize(point: &[f64]) -> PointKey {
    point.iter().map(|&x| (x * KEY_SCALE).round() as i64).collect()
}

pub fn dequantize(key: &[i64]) -> Vec<f64> {
    key.iter().map(|&k| k as f64 / KEY_SCALE).collect()
}

/// A black-box function of an n-dimensional input.
pub trait Model {
    fn dim(&self) -> usize;

    /// Exact model output at `x`. Implementations should return
    /// `ScamrError::Evaluation` for external failures; non-finite outputs are
    /// rejected by the cache.
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

/// Adapt a plain closure into a [`Model`].
pub struct FnModel<F: Fn(&[f64]) -> f64> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnModel<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Model for FnModel<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
}

/// Memoized map from canonicalized input points to exact model outputs.
#[derive(Debug, Default)]
pub struct EvaluationCache {
    map: Mutex<BTreeMap<PointKey, f64>>,
}

impl EvaluationCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct points evaluated so far.
    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Insert-or-get: evaluates the model at the quantized point unless the
    /// point is already stored. The map lock is held across the model call so
    /// each point is evaluated at most once even under concurrent use.
    pub fn eval(&self, model: &dyn Model, point: &[f64]) -> Result<f64> {
        let key = quantize(point);
        let mut map = self.map.lock().unwrap();
        if let Some(&v) = map.get(&key) {
            return Ok(v);
        }
        let canonical = dequantize(&key);
        let value = model.eval(&canonical)?;
        if !value.is_finite() {
            return Err(ScamrError::NonFiniteModelValue {
                value,
                point: canonical,
            });
        }
        map.insert(key, value);
        Ok(value)
    }

    /// Cached value for a point, if present. Never calls the model.
    pub fn get(&self, point: &[f64]) -> Option<f64> {
        self.map.lock().unwrap().get(&quantize(point)).copied()
    }

    /// All cached (point, value) pairs whose coordinates fall inside the given
    /// closed box on dims `box_dims` and match `fixed` exactly (by key) on
    /// every other dimension. Returned points are restricted to `box_dims`,
    /// in deterministic key order. This is the ξ_b predecessor-point harvest.
    pub fn harvest_in_box(
        &self,
        box_dims: &[usize],
        bounds: &[(f64, f64)],
        fixed: &[f64],
    ) -> Vec<(Vec<f64>, f64)> {
        debug_assert_eq!(box_dims.len(), bounds.len());
        let fixed_key = quantize(fixed);
        // Keys sort lexicographically, so the admissible first coordinate
        // bounds a contiguous range of the map; scan only that slab.
        let (lo0, hi0) = match box_dims.iter().position(|&d| d == 0) {
            Some(pos) => {
                let (a, b) = bounds[pos];
                let tol = (1.0 / KEY_SCALE).max(1e-12 * (b - a));
                (
                    ((a - tol) * KEY_SCALE).floor() as i64,
                    ((b + tol) * KEY_SCALE).ceil() as i64,
                )
            }
            None => (fixed_key[0], fixed_key[0]),
        };
        let range = (
            std::ops::Bound::Included(vec![lo0]),
            std::ops::Bound::Excluded(vec![hi0 + 1]),
        );
        let map = self.map.lock().unwrap();
        let mut out = Vec::new();
        'entry: for (key, &value) in map.range::<Vec<i64>, _>(range) {
            if key.len() != fixed.len() {
                continue;
            }
            for (d, &k) in key.iter().enumerate() {
                if let Some(pos) = box_dims.iter().position(|&bd| bd == d) {
                    let x = k as f64 / KEY_SCALE;
                    let (a, b) = bounds[pos];
                    // Quantization already perturbs coordinates by up to half
                    // a key quantum, so the box tolerance needs an absolute
                    // floor of one quantum.
                    let tol = (1.0 / KEY_SCALE).max(1e-12 * (b - a));
                    if x < a - tol || x > b + tol {
                        continue 'entry;
                    }
                } else if k != fixed_key[d] {
                    continue 'entry;
                }
            }
            let sub: Vec<f64> = box_dims.iter().map(|&d| key[d] as f64 / KEY_SCALE).collect();
            out.push((sub, value));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct CountingModel {
        calls: AtomicUsize,
    }

    impl Model for CountingModel {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64]) -> Result<f64> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(x[0] + 10.0 * x[1])
        }
    }

    #[test]
    fn each_point_evaluated_once() {
        let cache = EvaluationCache::new();
        let model = CountingModel {
            calls: AtomicUsize::new(0),
        };
        let v1 = cache.eval(&model, &[0.25, 0.5]).unwrap();
        let v2 = cache.eval(&model, &[0.25, 0.5]).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(model.calls.load(Ordering::SeqCst), 1);
        assert_eq!(cache.len(), 1);

        // A point within the key quantum is the same point.
        let v3 = cache.eval(&model, &[0.25 + 1e-14, 0.5]).unwrap();
        assert_eq!(v3.to_bits(), v1.to_bits());
        assert_eq!(model.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn counter_equals_distinct_points() {
        let cache = EvaluationCache::new();
        let model = FnModel::new(1, |x: &[f64]| x[0]);
        for i in 0..5 {
            let x = i as f64 / 4.0;
            cache.eval(&model, &[x]).unwrap();
            cache.eval(&model, &[x]).unwrap();
        }
        assert_eq!(cache.len(), 5);
    }

    #[test]
    fn non_finite_value_is_reported_with_point() {
        let cache = EvaluationCache::new();
        let model = FnModel::new(1, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { 1.0 });
        assert!(cache.eval(&model, &[0.0]).is_ok());
        match cache.eval(&model, &[1.0]) {
            Err(ScamrError::NonFiniteModelValue { point, .. }) => {
                assert_eq!(point, vec![1.0]);
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
        // Failed evaluations are not cached.
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn harvest_filters_box_and_complement() {
        let cache = EvaluationCache::new();
        let model = FnModel::new(3, |x: &[f64]| x.iter().sum());
        // Points on the slice x2 = 0.5 and one off-slice point.
        cache.eval(&model, &[0.1, 0.2, 0.5]).unwrap();
        cache.eval(&model, &[0.6, 0.9, 0.5]).unwrap();
        cache.eval(&model, &[0.1, 0.2, 0.9]).unwrap();

        let got = cache.harvest_in_box(&[0, 1], &[(0.0, 0.5), (0.0, 1.0)], &[0.0, 0.0, 0.5]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, vec![0.1, 0.2]);
        assert_eq!(got[0].1, 0.8);
    }
}
