//! Scalar abstraction shared by every engine.
//!
//! Ranks, errors and thresholds are all expressed in a [`Scalar`], which is
//! any IEEE float that also has a word-sized atomic twin. The atomic twin is
//! what makes the lock-free engines sound: a reader of a rank cell always
//! observes a complete value some writer stored, never a torn one.

use std::fmt::{Debug, Display, LowerExp};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable as a rank.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Word-sized atomic storage for this scalar.
    type Atomic: AtomicScalar<Self>;

    /// Converts an `f64` constant, panicking only if the type cannot
    /// represent finite values at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar literal out of range")
    }

    /// Raw bit pattern, used for bit-exact comparisons and the binary
    /// report formats.
    fn to_bits_u64(self) -> u64;
}

/// An atomic cell holding a [`Scalar`] by bit pattern.
pub trait AtomicScalar<T>: Send + Sync {
    fn new(value: T) -> Self;
    fn load(&self, order: Ordering) -> T;
    fn store(&self, value: T, order: Ordering);
}

macro_rules! impl_scalar {
    ($float:ty, $name:ident, $atomic:ty) => {
        /// Atomic cell storing the bit pattern of the float.
        pub struct $name($atomic);

        impl AtomicScalar<$float> for $name {
            #[inline]
            fn new(value: $float) -> Self {
                $name(<$atomic>::new(value.to_bits()))
            }

            #[inline]
            fn load(&self, order: Ordering) -> $float {
                <$float>::from_bits(self.0.load(order))
            }

            #[inline]
            fn store(&self, value: $float, order: Ordering) {
                self.0.store(value.to_bits(), order)
            }
        }

        impl Scalar for $float {
            type Atomic = $name;

            #[inline]
            fn to_bits_u64(self) -> u64 {
                self.to_bits() as u64
            }
        }
    };
}

impl_scalar!(f64, AtomicF64, AtomicU64);
impl_scalar!(f32, AtomicF32, AtomicU32);

/// A vector of atomically accessed scalars.
///
/// All accesses use relaxed ordering: the engines only need value integrity
/// of individual cells, and phase ordering (where required) comes from the
/// barrier or from the acquire/release operations of the versioned cells.
pub struct AtomicVec<T: Scalar> {
    cells: Vec<T::Atomic>,
}

impl<T: Scalar> AtomicVec<T> {
    pub fn filled(len: usize, value: T) -> Self {
        AtomicVec {
            cells: (0..len).map(|_| T::Atomic::new(value)).collect(),
        }
    }

    pub fn from_slice(values: &[T]) -> Self {
        AtomicVec {
            cells: values.iter().map(|&v| T::Atomic::new(v)).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        self.cells[i].load(Ordering::Relaxed)
    }

    #[inline]
    pub fn set(&self, i: usize, value: T) {
        self.cells[i].store(value, Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> Vec<T> {
        self.cells
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_roundtrip_preserves_bits() {
        let v = AtomicVec::<f64>::from_slice(&[0.1, -0.0, f64::MIN_POSITIVE]);
        assert_eq!(v.get(0).to_bits(), 0.1f64.to_bits());
        assert_eq!(v.get(1).to_bits(), (-0.0f64).to_bits());
        v.set(2, 3.5);
        assert_eq!(v.snapshot(), vec![0.1, -0.0, 3.5]);

        let w = AtomicVec::<f32>::filled(2, 0.25);
        w.set(1, 1.5);
        assert_eq!(w.snapshot(), vec![0.25f32, 1.5]);
    }

    #[test]
    fn literal_conversion() {
        assert_eq!(<f32 as Scalar>::lit(0.85), 0.85f32);
        assert_eq!(<f64 as Scalar>::lit(1e-16), 1e-16);
    }
}
