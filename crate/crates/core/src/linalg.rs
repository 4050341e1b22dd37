//! Small dense helpers shared by the composer, the trainer and the evaluators.
//!
//! Parameters are stored as `f32` in trained models and as `f64` when running
//! gradient checks; every reduction is accumulated in `f64` either way.

use std::fmt::Debug;

/// Floating point storage type for parameters.
pub trait Real: Copy + Default + Debug + PartialEq + PartialOrd + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(x: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
}

#[inline]
pub fn dot<F: Real, G: Real>(a: &[F], b: &[G]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.to_f64() * y.to_f64()).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<F: Real, G: Real>(alpha: f64, x: &[G], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = F::from_f64(yi.to_f64() + alpha * xi.to_f64());
    }
}

#[inline]
pub fn norm<F: Real>(a: &[F]) -> f64 {
    dot(a, a).sqrt()
}

/// Logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(x))`, computed without overflow.
#[inline]
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}
