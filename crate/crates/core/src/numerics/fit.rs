/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub n: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        stderr,
        n,
    })
}

/// Observed convergence order from errors on successively refined grids
/// (refinement ratio `ratio`): slope of log(error) against log(ratio^k).
pub fn observed_order(errors: &[f64], ratio: f64) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = (0..errors.len()).map(|k| k as f64 * ratio.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    fit_line(&xs, &ys).map(|f| -f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.stderr < 1e-14);
    }

    #[test]
    fn second_order_sequence() {
        let errs = [1e-2, 2.5e-3, 6.25e-4];
        assert!((observed_order(&errs, 2.0).unwrap() - 2.0).abs() < 1e-12);
    }
}
