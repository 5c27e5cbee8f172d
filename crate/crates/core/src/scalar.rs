//! One-dimensional minimization helpers.

const GOLDEN: f64 = 1.618_033_988_749_895;

/// Expands `[a, b]` downhill until it brackets a minimum of `f`.
/// Returns `(lo, mid, hi)` with `f(mid)` no larger than either end.
pub(crate) fn bracket(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> Option<(f64, f64, f64)> {
    let (mut fa, mut fb) = (f(a), f(b));
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLDEN * (b - a);
    let mut fc = f(c);
    for _ in 0..200 {
        if fc >= fb {
            return Some(if a < c { (a, b, c) } else { (c, b, a) });
        }
        a = b;
        b = c;
        fb = fc;
        c = b + GOLDEN * (b - a);
        fc = f(c);
    }
    None
}

/// Golden-section search on `[lo, hi]`; stops once the interval shrinks
/// below `rel_tol` relative to its midpoint magnitude (or absolute 1e-300).
pub(crate) fn golden_section(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let inv = 1.0 / GOLDEN;
    let mut x1 = hi - inv * (hi - lo);
    let mut x2 = lo + inv * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..400 {
        if hi - lo <= rel_tol * (x1.abs() + x2.abs()) + 1e-300 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}
