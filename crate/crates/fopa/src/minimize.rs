//! Scalar minimization helpers.

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    max_evals: usize,
) -> (f64, f64) {
    const PHI: f64 = 1.618_033_988_749_895;
    const RESP: f64 = 2.0 - PHI;

    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a).abs() > 1e-18 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    let (mut x, mut fx) = if f1 < f2 { (x1, f1) } else { (x2, f2) };

    // Golden section alone stalls at |x - x*| ~ sqrt(eps) because function
    // values become indistinguishable; a parabolic vertex fit recovers the
    // remaining digits.
    for _ in 0..2 {
        let h = 1e-5 * x.abs().max(1.0);
        let (fl, fr) = (f(x - h), f(x + h));
        let denom = fl + fr - 2.0 * fx;
        if !(denom > 0.0) {
            break;
        }
        let step = 0.5 * h * (fl - fr) / denom;
        let cand = x + step.clamp(-h, h);
        let fcand = f(cand);
        if fcand <= fx + 1e-12 * fx.abs() {
            x = cand;
            fx = fcand;
        }
    }
    (x, fx)
}

/// Minimize `f(r)` over `r` in `[lo, hi]` with the search run in `ln r`,
/// which keeps the bracket well-conditioned across decades.
pub fn golden_section_minimize_log(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    max_evals: usize,
) -> (f64, f64) {
    let (lx, fx) = golden_section_minimize(|t| f(t.exp()), lo.ln(), hi.ln(), max_evals);
    (lx.exp(), fx)
}

/// Bisection root of a monotone increasing `f` on `[lo, hi]`.
///
/// Returns `None` when the root is not bracketed.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_parabola_minimum() {
        let (x, fx) = golden_section_minimize(|x| (x - 1.5) * (x - 1.5) + 2.0, -10.0, 10.0, 200);
        assert_abs_diff_eq!(x, 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn log_search_spans_decades() {
        let (x, _) = golden_section_minimize_log(|r| (r.ln() - 100f64.ln()).powi(2), 1e-3, 1e3, 300);
        assert_abs_diff_eq!(x, 100.0, epsilon = 1e-6);
    }

    #[test]
    fn bisect_finds_root() {
        let x = bisect_increasing(|x| x * x * x - 8.0, 0.0, 10.0).unwrap();
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-10);
    }
}
