//! Shared numerical machinery: wide-precision arithmetic, quadrature,
//! interpolation and overflow-safe thermal sums.

pub mod ddouble;
pub mod interp;
pub mod quad;

/// `ln(1 + e^x)` without overflow for any `x`.
pub fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Fermi function `1 / (1 + e^{w/T})`, stable at both tails.
pub fn fermi(w: f64, t: f64) -> f64 {
    let x = w / t;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `ln sum_i e^{x_i}` via the max-shift trick.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.map(|x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_log1pexp() {
        assert!((ln_one_plus_exp(800.0) - 800.0).abs() < 1e-12);
        assert!(ln_one_plus_exp(-800.0) < 1e-300);
        assert!((ln_one_plus_exp(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn fermi_limits() {
        assert!((fermi(-100.0, 0.1) - 1.0).abs() < 1e-15);
        assert!(fermi(100.0, 0.1) < 1e-300);
        assert!((fermi(0.0, 0.37) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lse_matches_direct() {
        let xs = [0.3f64, -1.2, 2.7];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs.iter().copied()) - direct).abs() < 1e-14);
    }
}
