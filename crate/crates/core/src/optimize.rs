//! Scalar root bracketing and maximisation.

/// Golden-section maximisation of `f` on `[lo, hi]`, preceded by a coarse
/// log-spaced scan that brackets the best sample so a multi-modal start
/// does not trap the search in a side lobe.
///
/// Returns `(argmax, max)`. Terminates when the bracket is narrower than
/// `rel_width` times its midpoint.
pub fn maximize_scalar<F>(mut f: F, lo: f64, hi: f64, scan_points: usize, rel_width: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo > 0.0 && lo < hi);
    let n = scan_points.max(3);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo * (ratio * i as f64).exp() })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= rel_width * 0.5 * (a + b) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }

    // Endpoints of the scan can beat any interior point of the final bracket.
    let mid = 0.5 * (a + b);
    let candidates = [
        (mid, f(mid)),
        (grid[best], values[best]),
        (lo, values[0]),
        (hi, values[n - 1]),
    ];
    candidates
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// Outcome of [`bisect_decreasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub value: f64,
    pub iterations: u32,
}

/// Bisection for `g(x) = target` where `g` decreases on `[lo, hi]`, given
/// `g(lo) >= target > g(hi)`.
///
/// Stops once the bracket is narrower than `width_tol` and the residual at
/// the midpoint is within `residual_tol`, or after `max_iter` halvings.
pub fn bisect_decreasing<F, E>(
    mut g: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    width_tol: f64,
    residual_tol: f64,
    max_iter: u32,
) -> Result<Bisection, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let value = g(mid)?;
        iterations += 1;
        let converged = (hi - lo) < width_tol && (value - target).abs() <= residual_tol;
        if converged || iterations >= max_iter || mid <= lo || mid >= hi {
            return Ok(Bisection {
                root: mid,
                value,
                iterations,
            });
        }
        if value > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
