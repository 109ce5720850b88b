//! Bernstein basis `p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)`.

use crate::error::{Error, Result};

/// `p_{n,0}(x), ..., p_{n,n}(x)`.
pub fn bernstein_weights(n: usize, x: f64) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::arg("n", "Bernstein degree must be >= 1"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg("x", format!("{x} lies outside [0, 1]")));
    }
    let mut out = vec![0.0; n + 1];
    fill_weights(n, x, &mut out);
    Ok(out)
}

/// Fills `out[..=n]`; `n >= 1`, `x ∈ [0, 1]` are the caller's job.
///
/// The mode term is evaluated in log space and the rest by the ratio
/// recurrence walking outward, so no term underflows before it is negligible.
pub(crate) fn fill_weights(n: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > n);
    out[..=n].fill(0.0);
    if x <= 0.0 {
        out[0] = 1.0;
        return;
    }
    if x >= 1.0 {
        out[n] = 1.0;
        return;
    }
    let y = 1.0 - x;
    let mode = (((n + 1) as f64 * x).floor() as usize).min(n);
    let ln_choose: f64 = (0..mode)
        .map(|j| ((n - j) as f64 / (j + 1) as f64).ln())
        .sum();
    let ln_mode = ln_choose + mode as f64 * x.ln() + (n - mode) as f64 * (-x).ln_1p();
    out[mode] = ln_mode.exp();
    let up = x / y;
    for k in mode..n {
        out[k + 1] = out[k] * ((n - k) as f64 / (k + 1) as f64) * up;
    }
    let down = y / x;
    for k in (1..=mode).rev() {
        out[k - 1] = out[k] * (k as f64 / (n - k + 1) as f64) * down;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct binomial evaluation with exact integer coefficients.
    fn direct(n: usize, x: f64) -> Vec<f64> {
        let mut c: u128 = 1;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    c = c * (n - k + 1) as u128 / k as u128;
                }
                c as f64 * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32)
            })
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(
            bernstein_weights(5, 0.0).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(bernstein_weights(1, 0.5).unwrap(), vec![0.5, 0.5]);
        let w = bernstein_weights(2, 0.5).unwrap();
        for (a, b) in w.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-16);
        }
        assert_eq!(bernstein_weights(3, 1.0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bernstein_weights(0, 0.5).is_err());
        assert!(bernstein_weights(3, -0.1).is_err());
        assert!(bernstein_weights(3, 1.1).is_err());
        assert!(bernstein_weights(3, f64::NAN).is_err());
    }

    #[test]
    fn agrees_with_direct_binomials() {
        for n in 1..=64 {
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                let w = bernstein_weights(n, x).unwrap();
                let d = direct(n, x);
                for (k, (a, b)) in w.iter().zip(&d).enumerate() {
                    assert!(
                        (a - b).abs() <= 1e-13 * b.max(1e-3),
                        "n={n} x={x} k={k}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn no_underflow_collapse_at_high_degree() {
        let w = bernstein_weights(1000, 0.999).unwrap();
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
        assert!(w.iter().all(|v| *v >= 0.0));
    }
}
