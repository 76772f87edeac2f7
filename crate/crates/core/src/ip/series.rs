use crate::error::{Error, Result};

/// Centered moving average with Hanning weights
/// `w[n] = 0.5·(1 − cos(2πn/(span − 1)))`. Near the ends the window is
/// truncated and renormalized, so the output has the input's length.
///
/// Spans below 3 give an all-zero Hanning window and leave the series
/// unchanged.
pub fn smooth_hanning(series: &[f64], span: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot smooth an empty series".into(),
        ));
    }
    if span == 0 {
        return Err(Error::InvalidParameter(
            "smoothing span must be at least 1".into(),
        ));
    }
    if span < 3 {
        return Ok(series.to_vec());
    }
    let denom = (span - 1) as f64;
    let weights: Vec<f64> = (0..span)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / denom).cos()))
        .collect();
    let center = (span - 1) / 2;
    let len = series.len() as isize;
    Ok((0..series.len())
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (n, w) in weights.iter().enumerate() {
                let j = i as isize + n as isize - center as isize;
                if (0..len).contains(&j) {
                    acc += w * series[j as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect())
}

/// About `n_points` iteration indices spaced evenly on a log axis over
/// `0..total_iters`. The grid `10^linspace(0, log10(total − 1), n)` is
/// rounded and deduplicated, and its first point is pinned to 0. When
/// `n_points >= total_iters` every index is returned.
pub fn logspace_subsample(n_points: usize, total_iters: usize) -> Result<Vec<usize>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    if n_points >= total_iters {
        return Ok((0..total_iters).collect());
    }
    let top = ((total_iters - 1) as f64).log10();
    let mut out: Vec<usize> = (0..n_points)
        .map(|k| {
            let e = top * k as f64 / (n_points - 1) as f64;
            (10f64.powf(e).round() as usize).min(total_iters - 1)
        })
        .collect();
    out[0] = 0;
    *out.last_mut().expect("n_points >= 2") = total_iters - 1;
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_unchanged() {
        let s = vec![3.25; 40];
        for span in [1, 2, 3, 4, 7, 50, 500] {
            let out = smooth_hanning(&s, span).unwrap();
            assert!(out.iter().all(|v| (v - 3.25).abs() < 1e-12), "span {span}");
        }
    }

    #[test]
    fn span_one_is_identity() {
        let s = [1.0, -2.0, 5.0, 0.5];
        assert_eq!(smooth_hanning(&s, 1).unwrap(), s.to_vec());
    }

    #[test]
    fn impulse_response() {
        let span = 9;
        let mut s = vec![0.0; 41];
        s[20] = 1.0;
        let out = smooth_hanning(&s, span).unwrap();
        // Direct convolution: w = 0.5(1 − cos(2πn/8)), Σw = 4, centre weight 1.
        let w: Vec<f64> = (0..span)
            .map(|n| 0.5 * (1.0 - (std::f64::consts::PI * n as f64 / 4.0).cos()))
            .collect();
        let total: f64 = w.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
        assert!((out[20] - 0.25).abs() < 1e-12);
        for k in 1..=4 {
            assert!((out[20 - k] - out[20 + k]).abs() < 1e-15);
            assert!((out[20 + k] - w[4 + k] / total).abs() < 1e-15);
            assert!(out[20 + k - 1] >= out[20 + k]);
        }
        assert_eq!(out[15], 0.0);
    }

    #[test]
    fn empty_series_rejected() {
        assert!(smooth_hanning(&[], 5).is_err());
        assert!(smooth_hanning(&[1.0], 0).is_err());
    }

    #[test]
    fn logspace_examples() {
        assert_eq!(
            logspace_subsample(10, 10).unwrap(),
            (0..10).collect::<Vec<_>>()
        );
        assert_eq!(
            logspace_subsample(5, 10_000).unwrap(),
            vec![0, 10, 100, 1000, 9999]
        );
        for (n, total) in [(3, 7), (50, 20_000), (2, 2), (8, 100)] {
            let idx = logspace_subsample(n, total).unwrap();
            assert_eq!(idx[0], 0);
            assert_eq!(*idx.last().unwrap(), total - 1);
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(logspace_subsample(1, 10).is_err());
    }
}
