//! Independent reference routines shared by the integration tests. Nothing
//! here calls into the library's quadrature.

#![allow(dead_code)]

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `F(r)` through `τ = tan φ`: `∫_0^{atan r} cos^{n−1+s} φ dφ`, a smooth
/// integrand on a bounded interval.
pub fn kernel_f(r: f64, n: usize, s: f64) -> f64 {
    let p = n as f64 - 1.0 + s;
    let end = r.abs().atan();
    let v = simpson(&|phi: f64| phi.cos().powf(p), 0.0, end, 1e-14);
    v.copysign(r)
}

pub fn kernel_f_infinity(n: usize, s: f64) -> f64 {
    let p = n as f64 - 1.0 + s;
    // cos^p φ = sin^p t with t = π/2 − φ; the last stretch t < ε is done by
    // the series sin^p t = t^p (1 − p t²/6 + O(t⁴))
    let eps = 1e-3;
    let head = simpson(&|phi: f64| phi.cos().powf(p), 0.0, std::f64::consts::FRAC_PI_2 - eps, 1e-14);
    head + eps.powf(p + 1.0) / (p + 1.0) - p * eps.powf(p + 3.0) / (6.0 * (p + 3.0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=m {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = m as f64 * (z * q1 - q0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels.
pub fn composite_gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += 0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    acc
}
