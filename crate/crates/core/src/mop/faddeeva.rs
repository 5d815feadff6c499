//! Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
//!
//! Upper half-plane: a Weideman rational expansion for moderate `|z|` and
//! the Laplace continued fraction for large `|z|`. The lower half-plane is
//! reached through `w(z) = 2 exp(-z^2) - w(-z)`.

use std::sync::OnceLock;

use num_complex::Complex64;

const TERMS: usize = 64;
const CF_RADIUS: f64 = 8.0;
const CF_DEPTH: usize = 60;

fn weideman_coefficients() -> &'static (f64, [f64; TERMS]) {
    static COEFFS: OnceLock<(f64, [f64; TERMS])> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let half = 2 * TERMS;
        let l = (TERMS as f64 / std::f64::consts::SQRT_2).sqrt();
        let sample = |k: i64| {
            let theta = k as f64 * std::f64::consts::PI / half as f64;
            let t = l * (0.5 * theta).tan();
            (-t * t).exp() * (l * l + t * t)
        };
        let mut out = [0.0; TERMS];
        for (idx, c) in out.iter_mut().enumerate() {
            let order = (idx + 1) as f64;
            let mut acc = 0.0;
            for k in -(half as i64) + 1..half as i64 {
                acc += sample(k) * (std::f64::consts::PI * k as f64 * order / half as f64).cos();
            }
            *c = acc / (2 * half) as f64;
        }
        (l, out)
    })
}

fn upper_weideman(z: Complex64) -> Complex64 {
    let (l, coeffs) = weideman_coefficients();
    let i = Complex64::i();
    let denom = *l - i * z;
    let ratio = (*l + i * z) / denom;
    let mut poly = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        poly = poly * ratio + c;
    }
    2.0 * poly / (denom * denom) + std::f64::consts::FRAC_2_SQRT_PI * 0.5 / denom
}

fn upper_continued_fraction(z: Complex64) -> Complex64 {
    let mut tail = z;
    for k in (1..=CF_DEPTH).rev() {
        tail = z - (0.5 * k as f64) / tail;
    }
    Complex64::i() * std::f64::consts::FRAC_2_SQRT_PI * 0.5 / tail
}

/// `w(z)` on the whole plane; real arguments give the boundary value from
/// above, which is the analytic value.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        let w = upper(-z);
        return 2.0 * (-z * z).exp() - w;
    }
    upper(z)
}

fn upper(z: Complex64) -> Complex64 {
    if z.norm() >= CF_RADIUS {
        upper_continued_fraction(z)
    } else {
        upper_weideman(z)
    }
}

/// `w'(z) = -2 z w(z) + 2i / sqrt(pi)`.
pub fn faddeeva_derivative(z: Complex64) -> Complex64 {
    -2.0 * z * faddeeva(z) + Complex64::i() * std::f64::consts::FRAC_2_SQRT_PI
}
