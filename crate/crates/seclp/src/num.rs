//! Scalar abstraction for the exact linear algebra and the simplex core.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed};

/// Field-like scalar the matrix algebra and solver are generic over.
///
/// `num_rational::BigRational` is the scalar used by the encrypted pipeline;
/// `f64` satisfies the same bounds and is handy for quick approximate checks.
pub trait Scalar: Num + Signed + PartialOrd + Clone + Debug + Display + FromPrimitive {}

impl<T> Scalar for T where T: Num + Signed + PartialOrd + Clone + Debug + Display + FromPrimitive {}
