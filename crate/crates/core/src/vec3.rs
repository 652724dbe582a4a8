//! Small fixed-size vector helpers for real and complex 3-vectors.

use num_complex::Complex;
use num_traits::Float;

pub type V3<T> = [T; 3];
pub type CV3<T> = [Complex<T>; 3];

#[inline]
pub fn dot<T: Float>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Float>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Float>(a: &V3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<T: Float>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Float>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Float>(s: T, a: &V3<T>) -> V3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn neg<T: Float>(a: &V3<T>) -> V3<T> {
    [-a[0], -a[1], -a[2]]
}

/// Unit vector along `a`; returns `None` for the zero vector.
pub fn normalize<T: Float>(a: &V3<T>) -> Option<V3<T>> {
    let n = norm(a);
    if n > T::zero() {
        Some(scale(T::one() / n, a))
    } else {
        None
    }
}

/// Bilinear (not sesquilinear) product `a·b` of complex vectors, as in `k·k` or `2k·ξ`.
#[inline]
pub fn cdot<T: Float>(a: &CV3<T>, b: &CV3<T>) -> Complex<T> {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Product of a complex vector with a real one.
#[inline]
pub fn cdot_real<T: Float>(a: &CV3<T>, b: &V3<T>) -> Complex<T> {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn re<T: Float>(a: &CV3<T>) -> V3<T> {
    [a[0].re, a[1].re, a[2].re]
}

#[inline]
pub fn im<T: Float>(a: &CV3<T>) -> V3<T> {
    [a[0].im, a[1].im, a[2].im]
}

#[inline]
pub fn complexify<T: Float>(re: &V3<T>, im: &V3<T>) -> CV3<T> {
    [
        Complex::new(re[0], im[0]),
        Complex::new(re[1], im[1]),
        Complex::new(re[2], im[2]),
    ]
}

#[inline]
pub fn cadd_real<T: Float>(a: &CV3<T>, b: &V3<T>) -> CV3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert_eq!(cross(&x, &y), [0.0, 0.0, 1.0]);
        let xf = [1.0f32, 0.0, 0.0];
        let yf = [0.0f32, 1.0, 0.0];
        assert_eq!(cross(&xf, &yf), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn null_vector_has_zero_square() {
        let k = complexify(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!(cdot(&k, &k), Complex::new(0.0, 0.0));
    }
}
