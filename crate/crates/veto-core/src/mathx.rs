//! Float helpers routed through libm for platform-independent results.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// log(sum(exp(xs))), stable for large negative entries. Empty input and
/// all-(-inf) input both yield -inf.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &x in xs {
        if x > f64::NEG_INFINITY {
            sum += exp(x - max);
        }
    }
    max + ln(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_of_uniform_log_probs_is_zero() {
        let v = 7usize;
        let xs = alloc::vec![-ln(v as f64); v];
        assert!(logsumexp(&xs).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_handles_neg_infinity() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let x = logsumexp(&[0.0, f64::NEG_INFINITY]);
        assert!(x.abs() < 1e-12);
    }
}
