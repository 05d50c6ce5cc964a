//! Small numeric helpers shared across modules.

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
///
/// Output order always matches input order, and per-item work is
/// independent, so results are identical for any worker count.
pub fn pmap<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Least-squares line through (xs, ys): returns (slope, intercept, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - slope * x - intercept;
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

/// Slopes of least-squares fits over sliding windows of `window` consecutive
/// points. Used for envelope (limsup/liminf style) exponent estimates.
pub fn window_slopes(xs: &[f64], ys: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 2);
    if xs.len() < window {
        let (s, _, _) = linear_fit(xs, ys);
        return vec![s];
    }
    (0..=xs.len() - window)
        .map(|i| linear_fit(&xs[i..i + window], &ys[i..i + window]).0)
        .collect()
}

/// Geometric grid of `count` points from `min` to `max` inclusive.
pub fn geometric_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1 && min > 0.0 && max >= min);
    if count == 1 {
        return vec![min];
    }
    let r = (max / min).powf(1.0 / (count as f64 - 1.0));
    (0..count).map(|i| min * r.powi(i as i32)).collect()
}

/// Uniform grid of `count` points from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1 && max >= min);
    if count == 1 {
        return vec![min];
    }
    let h = (max - min) / (count as f64 - 1.0);
    (0..count).map(|i| min + h * i as f64).collect()
}

/// Midpoint grid on [0,1): (i + 1/2)/m for i = 0..m.
pub fn torus_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (s, b, r) = linear_fit(&xs, &ys);
        assert!((s - 3.0).abs() < 1e-12);
        assert!((b + 1.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = geometric_grid(10.0, 1000.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[4] - 1000.0).abs() < 1e-9);
        let l = linear_grid(-1.0, 1.0, 3);
        assert_eq!(l, vec![-1.0, 0.0, 1.0]);
    }
}
