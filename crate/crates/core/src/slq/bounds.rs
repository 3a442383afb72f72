/// A priori bound on the Lanczos error `||exp(-tL) v - Q exp(-tT) e_1||` for
/// a unit vector `v` and a normalized Laplacian (spectrum in `[0, 2]`).
///
/// Returns `f64::INFINITY` when `m < sqrt(2t)`, where no bound applies. When
/// `m == t` both branches hold and the smaller value is returned.
pub fn lanczos_error_bound(t: f64, m: usize) -> f64 {
    assert!(t > 0.0 && m >= 1);
    let mf = m as f64;
    if mf < (2.0 * t).sqrt() {
        return f64::INFINITY;
    }
    let mut bound = f64::INFINITY;
    if mf <= t {
        bound = bound.min(20.0 * (-mf * mf / (2.5 * t)).exp());
    }
    if mf >= t {
        let base = 0.5 * std::f64::consts::E * t / mf;
        bound = bound.min(40.0 / t * (-0.5 * t).exp() * base.powi(m as i32));
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_temperature_branch() {
        // 40 e^{-0.5} (0.05 e)^10
        let want = 40.0 * (-0.5f64).exp() * (0.05 * std::f64::consts::E).powi(10);
        let got = lanczos_error_bound(1.0, 10);
        assert!((got - want).abs() <= 1e-13 * want);
        assert!((got - 5.2e-8).abs() < 0.05e-8);
    }

    #[test]
    fn no_bound_below_sqrt_2t() {
        assert!(lanczos_error_bound(10.0, 4).is_infinite());
    }

    #[test]
    fn large_temperature_branch() {
        let got = lanczos_error_bound(10.0, 5);
        assert!((got - 20.0 / std::f64::consts::E).abs() < 1e-12);
        assert!((got - 7.358).abs() < 1e-3);
    }

    #[test]
    fn finite_for_all_applicable_steps() {
        for &t in &[0.1, 2.575, 5.05, 7.525, 10.0] {
            let first = (2.0 * t as f64).sqrt().ceil() as usize;
            for m in first.max(1)..=20 {
                let b = lanczos_error_bound(t, m);
                assert!(b.is_finite() && b > 0.0, "t={t} m={m}");
            }
        }
    }
}
