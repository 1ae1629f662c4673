//! Bracketing root finder: Brent's method (inverse quadratic and secant
//! steps, bisection fallback) after a coarse scan for a sign change.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop once `|f| ≤ f_tol` and the bracket is narrower than `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_iter: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub bracket: (f64, f64),
}

/// Scans `grid` (increasing) for the first sign change of `f` and refines
/// the root inside it.
pub fn scan_and_solve(
    mut f: impl FnMut(f64) -> Result<f64>,
    grid: &[f64],
    opts: RootOptions,
) -> Result<Root> {
    let mut evaluations = 0;
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let fx = f(x)?;
        evaluations += 1;
        if fx == 0.0 {
            return Ok(Root {
                x,
                fx,
                iterations: 0,
                evaluations,
                bracket: (x, x),
            });
        }
        if let Some((a, fa)) = prev {
            if fa.signum() != fx.signum() {
                let mut root = brent(&mut f, (a, fa), (x, fx), opts)?;
                root.evaluations += evaluations;
                return Ok(root);
            }
        }
        prev = Some((x, fx));
    }
    Err(Error::NoSolution(format!(
        "no sign change on [{}, {}]",
        grid.first().copied().unwrap_or(f64::NAN),
        grid.last().copied().unwrap_or(f64::NAN)
    )))
}

/// Brent's method on a bracket with `f(a) f(b) < 0`.
pub fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    (a0, fa0): (f64, f64),
    (b0, fb0): (f64, f64),
    opts: RootOptions,
) -> Result<Root> {
    if fa0.signum() == fb0.signum() && fa0 != 0.0 && fb0 != 0.0 {
        return Err(Error::NoSolution(format!(
            "f has the same sign at {a0} and {b0}"
        )));
    }
    let (mut a, mut fa, mut b, mut fb) = (a0, fa0, b0, fb0);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    let mut evaluations = 0;
    for it in 0..opts.max_iter {
        let width = (b - a).abs();
        if fb == 0.0 || (fb.abs() <= opts.f_tol && width <= opts.x_tol) || width <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            return Ok(Root {
                x: b,
                fx: fb,
                iterations: it,
                evaluations,
                bracket: (a.min(b), a.max(b)),
            });
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = if lo < b { s > lo && s < b } else { s > b && s < lo };
        let tiny = 1e-15 * b.abs().max(1.0);
        let reject = !between
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= (c - d).abs() / 2.0)
            || (bisected && (b - c).abs() < tiny)
            || (!bisected && (c - d).abs() < tiny);
        if reject {
            s = 0.5 * (a + b);
        }
        bisected = reject;
        let fs = f(s)?;
        evaluations += 1;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(Root {
        x: b,
        fx: fb,
        iterations: opts.max_iter,
        evaluations,
        bracket: (a.min(b), a.max(b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), (0.0, -2.0), (2.0, 6.0), RootOptions::default()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
        assert!(r.iterations < 40);
    }

    #[test]
    fn scan_picks_first_sign_change() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let r = scan_and_solve(|x| Ok((x - 0.25) * (x - 0.75)), &grid, RootOptions::default()).unwrap();
        assert!((r.x - 0.25).abs() < 1e-10);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let grid = [0.0, 0.5, 1.0];
        let err = scan_and_solve(|x| Ok(1.0 + x), &grid, RootOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)));
    }
}
