use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// `p_value < alpha / num_comparisons`.
    pub significant: bool,
}

/// Two-sided paired t-test on `a - b` with `n - 1` degrees of freedom and a
/// Bonferroni-adjusted threshold of `alpha / num_comparisons`.
///
/// Identical samples give `t = 0, p = 1`. A constant non-zero difference
/// has zero variance; it is reported as `t = ±inf, p = 0`.
pub fn paired_t_test_bonferroni(a: &[f64], b: &[f64], num_comparisons: usize, alpha: f64) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::input("a paired t-test needs at least two pairs"));
    }
    if num_comparisons == 0 {
        return Err(Error::config("num_comparisons must be >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must be in (0, 1) (got {alpha})")));
    }
    let threshold = alpha / num_comparisons as f64;

    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        return Ok(PairedTTest {
            t: 0.0,
            p_value: 1.0,
            significant: false,
        });
    }
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let (t, p_value) = if sd == 0.0 {
        (f64::INFINITY.copysign(mean), 0.0)
    } else {
        let t = mean / (sd / n.sqrt());
        let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::Internal(e.to_string()))?;
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(PairedTTest {
        t,
        p_value,
        significant: p_value < threshold,
    })
}
