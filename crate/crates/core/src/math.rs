// Float helpers that `core` does not provide without `std`.

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Hölder conjugate `p / (p - 1)`.
#[inline]
pub(crate) fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `x^p` with `0^p = 0` for every `p > 0`.
#[inline]
pub(crate) fn pow_nonneg(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        powf(x, p)
    }
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
