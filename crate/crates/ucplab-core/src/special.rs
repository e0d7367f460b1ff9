//! The entire exponential integral and a quadrature cross-check.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Ein(z) = ∫₀^z (1 - e^{-t})/t dt` for `z >= 0`.
///
/// Alternating series for `z <= 4`, `E1(z) + ln z + γ` above.
pub fn ein(z: f64) -> f64 {
    assert!(z >= 0.0, "Ein is evaluated on [0, inf) only");
    if z <= 4.0 {
        let mut term = z;
        let mut sum = z;
        let mut k = 1.0;
        loop {
            term *= -z / (k + 1.0);
            k += 1.0;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        e1(z) + z.ln() + EULER_GAMMA
    }
}

/// Exponential integral `E1(z)` for `z > 1` by a modified Lentz continued fraction.
pub fn e1(z: f64) -> f64 {
    assert!(z > 1.0, "continued fraction used for z > 1 only");
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `Ein(z)` by quadrature of `-expm1(-t)/t` on `[0, 1]` and of
/// `1 - exp(-e^s)` in `s = ln t` above.
pub fn ein_quadrature(z: f64) -> f64 {
    let f = |t: f64| if t == 0.0 { 1.0 } else { -(-t).exp_m1() / t };
    let head = adaptive_simpson(&f, 0.0, z.min(1.0), 1e-15);
    if z <= 1.0 {
        return head;
    }
    let g = |s: f64| -(-s.exp()).exp_m1();
    head + adaptive_simpson(&g, 0.0, z.ln(), 1e-15)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_agree() {
        for z in [3.5, 4.0, 4.5, 6.0] {
            let s = {
                let mut term = z;
                let mut sum = z;
                for k in 1..200 {
                    term *= -z / (k as f64 + 1.0);
                    sum += term / (k as f64 + 1.0);
                }
                sum
            };
            assert!((ein(z) - s).abs() < 1e-12, "z = {z}");
        }
        assert!((ein(1.0) - 0.796_599_599_297_053_1).abs() < 1e-15);
    }
}
