//! Real scalar abstraction. All coefficient arithmetic happens in
//! `Complex<S>` for some floating-point `S`; the concrete aliases at the
//! crate root fix `S = f64`, which is what every fixture and the CLI use.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from f64, for tolerances and literal constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in scalar type")
    }
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type C<S> = Complex<S>;

pub fn c_from_f64<S: Scalar>(re: f64, im: f64) -> C<S> {
    Complex::new(S::of(re), S::of(im))
}

pub fn c_one<S: Scalar>() -> C<S> {
    Complex::new(S::one(), S::zero())
}

pub fn c_zero<S: Scalar>() -> C<S> {
    Complex::new(S::zero(), S::zero())
}
