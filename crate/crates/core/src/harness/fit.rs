use crate::{Error, Result};

/// Least-squares slope of `ys` on `xs` and its standard error. With only two
/// points the standard error is reported as 0.
pub(crate) fn regress(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let k = xs.len();
    if k < 2 || ys.len() != k {
        return Err(Error::data("a regression needs at least two paired points"));
    }
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::data("all abscissae coincide"));
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let stderr = if k > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        (rss / (kf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

/// Slope of `ln value` against `ln n`, with its standard error.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 4 {
        return Err(Error::data(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::data(format!("point ({}, {}) is not positive and finite", p.0, p.1)));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    regress(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::stream_rng;
    use rand::Rng;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = (10..16).map(|e| (2f64.powi(e), 2f64.powi(-e))).collect();
        let (s, se) = fit_slope(&pts).unwrap();
        assert!((s + 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
        for c in [1e-3, 1.0, 7.5e4] {
            let pts: Vec<(f64, f64)> = (10..16).map(|e| (2f64.powi(e), c / 2f64.powi(e).sqrt())).collect();
            assert!((fit_slope(&pts).unwrap().0 + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_inverse_sqrt() {
        let mut rng = stream_rng(7, 0);
        let pts: Vec<(f64, f64)> = (10..=20)
            .map(|e| {
                let n = 2f64.powi(e);
                (n, n.powf(-0.5) * (1.0 + rng.random_range(-0.1..0.1)))
            })
            .collect();
        let (s, se) = fit_slope(&pts).unwrap();
        assert!((s + 0.5).abs() <= 0.05, "{s}");
        assert!(se > 0.0 && se < 0.05);
    }

    #[test]
    fn rejects_bad_points() {
        let ok = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(fit_slope(&ok).is_ok());
        assert!(fit_slope(&ok[..3]).is_err());
        let mut bad = ok;
        bad[2].1 = 0.0;
        assert!(matches!(fit_slope(&bad), Err(Error::Data(_))));
        bad[2].1 = -1.0;
        assert!(fit_slope(&bad).is_err());
        assert!(fit_slope(&[(2.0, 1.0); 4]).is_err());
    }
}
