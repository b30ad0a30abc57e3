//! Two-sided Welch (unequal-variance) t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t statistic with Welch–Satterthwaite degrees of freedom and a
/// two-sided p-value from the t distribution.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Metric(format!(
            "both samples need >= 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Metric("non-finite sample value".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let sa = va / na;
    let sb = vb / nb;
    if sa + sb == 0.0 {
        return Err(Error::Metric("both samples have zero variance".into()));
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Metric(format!("invalid t distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchResult { t, df, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Reference values frozen from an independent statistics implementation
    /// (`scipy.stats.ttest_ind(a, b, equal_var=False)`, SciPy 1.15.3).
    const FIXTURES: &[(&[f64], &[f64], f64, f64)] = &[
        (
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[2.0, 3.0, 4.0, 5.0, 6.0],
            -1.0,
            0.34659350708733416,
        ),
        (
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            0.0,
            1.0,
        ),
        (
            &[0.5, 0.6, 0.55, 0.62, 0.58],
            &[0.48, 0.52, 0.5, 0.49, 0.51],
            3.1622776601683826,
            0.02575696956554218,
        ),
        (
            &[10.0, 12.0, 9.0, 11.0, 10.0, 13.0],
            &[20.0, 19.0, 21.0, 22.0, 18.0],
            -9.87829161147262,
            6.73156060490139e-6,
        ),
        (
            &[-1.5, 0.3, 2.2, 0.8],
            &[0.1, 0.2, 0.0, 0.15, 0.05],
            0.4574414378247187,
            0.6783257323181376,
        ),
        (
            &[0.823, 0.78, 0.845, 0.799, 0.812, 0.83],
            &[0.469, 0.502, 0.455, 0.48, 0.491, 0.473],
            28.91790501363955,
            2.995258986579207e-10,
        ),
        (&[1.0, 1.1], &[0.9, 1.05], 0.8320502943378428, 0.5038378637419378),
        (
            &[5.0, 5.0, 5.0, 5.0, 6.0],
            &[5.0, 5.0, 5.0, 5.0, 5.0001],
            0.9998999950005003,
            0.37394390204619204,
        ),
        (
            &[100.5, 99.7, 101.2, 100.1],
            &[100.4, 99.9, 101.0, 100.3],
            -0.06371451890119748,
            0.9514836510210372,
        ),
        (
            &[0.01, 0.02, 0.015, 0.017, 0.013, 0.019, 0.016],
            &[0.02, 0.03, 0.025, 0.027, 0.023, 0.029],
            -4.928094096097732,
            0.000545555074698879,
        ),
    ];

    #[test]
    fn matches_reference_implementation_fixtures() {
        for (i, (a, b, t_ref, p_ref)) in FIXTURES.iter().enumerate() {
            let r = welch_ttest(a, b).unwrap();
            assert_abs_diff_eq!(r.t, *t_ref, epsilon = 1e-6);
            assert_abs_diff_eq!(r.p, *p_ref, epsilon = 1e-6);
            let _ = i;
        }
    }

    #[test]
    fn identical_samples_give_p_one() {
        let x = [3.0, 4.0, 5.0, 6.0];
        let r = welch_ttest(&x, &x).unwrap();
        assert_eq!(r.t, 0.0);
        assert_abs_diff_eq!(r.p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn p_is_symmetric_under_swap() {
        let a = [1.0, 2.5, 3.0, 2.2];
        let b = [4.0, 3.8, 5.1];
        let ab = welch_ttest(&a, &b).unwrap();
        let ba = welch_ttest(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.p, ba.p, epsilon = 1e-14);
        assert_abs_diff_eq!(ab.t, -ba.t, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(welch_ttest(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_ttest(&[2.0, 2.0], &[3.0, 3.0]).is_err());
        assert!(welch_ttest(&[f64::NAN, 1.0], &[1.0, 2.0]).is_err());
    }
}
