//! Standard normal density and distribution function.

use std::f64::consts::{PI, SQRT_2};

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cdf_reference_values() {
        assert_abs_diff_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(0.1), 0.53982783727702898, epsilon = 2e-15);
        assert_abs_diff_eq!(norm_cdf(0.5), 0.69146246127401310, epsilon = 2e-15);
        assert_abs_diff_eq!(norm_cdf(1.0), 0.84134474606854295, epsilon = 2e-15);
        assert_abs_diff_eq!(norm_cdf(-1.5), 0.066807201268858066, epsilon = 2e-15);
        assert_abs_diff_eq!(norm_cdf(2.0), 0.97724986805182079, epsilon = 2e-15);
        assert_abs_diff_eq!(norm_cdf(-3.0), 0.0013498980316300945, epsilon = 1e-17);
        assert_abs_diff_eq!(norm_cdf(5.0), 0.99999971334842812, epsilon = 2e-15);
    }

    #[test]
    fn pdf_reference_values() {
        assert_abs_diff_eq!(norm_pdf(0.0), 0.39894228040143268, epsilon = 2e-16);
        assert_abs_diff_eq!(norm_pdf(0.1), 0.39695254747701177, epsilon = 2e-16);
        assert_abs_diff_eq!(norm_pdf(1.0), 0.24197072451914335, epsilon = 2e-16);
        assert_abs_diff_eq!(norm_pdf(-1.5), 0.12951759566589173, epsilon = 2e-16);
    }

    proptest! {
        #[test]
        fn cdf_symmetry(x in -8.0f64..8.0) {
            prop_assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-14);
        }

        #[test]
        fn cdf_monotone(x in -8.0f64..8.0, dx in 1e-6f64..1.0) {
            prop_assert!(norm_cdf(x + dx) >= norm_cdf(x));
        }
    }
}
