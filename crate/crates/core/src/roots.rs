//! Scalar bracketing root finders and a golden-section minimizer.

/// Bisects a predicate transition: `pred(lo)` must be true and `pred(hi)`
/// false. Returns the final `(lo, hi)` with `hi - lo <= rel_tol * max(|lo|, |hi|, 1e-300)`
/// or with no representable midpoint left.
pub fn bisect_predicate<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= rel_tol * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
    }
    (lo, hi)
}

/// Root of a continuous `g` with `g(a)` and `g(b)` of opposite sign (or zero).
pub fn bisect_root<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, rel_tol: f64) -> f64 {
    let ga = g(a);
    if ga == 0.0 {
        return a;
    }
    let gb = g(b);
    if gb == 0.0 {
        return b;
    }
    let left_sign = ga > 0.0;
    let (lo, hi) = bisect_predicate(
        |x| {
            let gx = g(x);
            (gx > 0.0) == left_sign && gx != 0.0
        },
        a,
        b,
        rel_tol,
    );
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Golden-section search for a minimum of a unimodal `g` on `[a, b]`.
pub fn golden_min<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    let gx = g(x);
    [(x, gx), (c, gc), (d, gd)]
        .into_iter()
        .fold((x, gx), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Minimizes `g` over `[a, b]`: a coarse scan picks the best cell, then
/// golden-section refines inside the neighbouring cells.
pub fn scan_min<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, cells: usize) -> (f64, f64) {
    let h = (b - a) / cells as f64;
    let mut best = (a, g(a));
    for i in 1..=cells {
        let x = if i == cells { b } else { a + h * i as f64 };
        let gx = g(x);
        if gx < best.1 {
            best = (x, gx);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let refined = golden_min(&g, lo, hi, 1e-14);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_root_of_quadratic() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 3.0, 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn predicate_transition() {
        let (lo, hi) = bisect_predicate(|x| x < 8.0, 2.0, 100.0, 1e-15);
        assert!(lo < 8.0 && hi >= 8.0);
        assert!(hi - lo < 1e-13);
    }

    #[test]
    fn golden_finds_quartic_well() {
        let (x, g) = scan_min(|s| s.powi(4) / 4.0 - s * s / 2.0, 0.0, 2f64.sqrt(), 64);
        assert!((x - 1.0).abs() < 1e-6);
        assert!((g + 0.25).abs() < 1e-12);
    }
}
