//! Adaptive Simpson quadrature, used as an independent numerical oracle.

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `int_a^b f` to within roughly `max(abs_tol, rel_tol |I|)`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Split into pieces first so a crude whole-interval estimate cannot stop
    // the refinement early on peaked integrands.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let mut rough = 0.0;
    let mut parts = Vec::with_capacity(pieces);
    for j in 0..pieces {
        let (x0, x1) = (a + j as f64 * h, if j + 1 == pieces { b } else { a + (j + 1) as f64 * h });
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let s = simpson(f0, fm, f1, x0, x1);
        rough += s;
        parts.push((x0, x1, f0, fm, f1, s));
    }
    let tol = abs_tol.max(rel_tol * rough.abs()) / pieces as f64;
    parts
        .into_iter()
        .map(|(x0, x1, f0, fm, f1, s)| recurse(&f, x0, x1, f0, fm, f1, s, tol, 48))
        .sum()
}
