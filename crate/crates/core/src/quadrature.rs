//! Numerical integration used for state normalization and theoretical CDFs.
//!
//! The integrator is a recursive adaptive Simpson rule with Richardson
//! correction. [`TabulatedCdf`] precomputes cumulative masses on a grid so that
//! CDF lookups at many sample points stay cheap while every cell is still
//! integrated to full tolerance.

/// Absolute tolerance used unless a caller asks for something else.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Integrate over `[a, b]` after splitting it into `pieces` equal panels.
///
/// Oscillating integrands can fool the first Simpson estimate on a long
/// interval; pre-splitting so that each panel holds a fraction of a period
/// avoids that.
pub fn integrate_panels<F>(f: &F, a: f64, b: f64, pieces: usize, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let panel_tol = tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            adaptive_simpson(f, lo, hi, panel_tol)
        })
        .sum()
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a) <= f64::EPSILON * m.abs() {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Cumulative distribution built by integrating a density cell by cell.
///
/// `cdf(x)` is the tabulated mass up to the start of the cell holding `x`
/// plus a Simpson estimate over the partial cell. The total mass is rescaled
/// to one.
pub struct TabulatedCdf<F> {
    density: F,
    start: f64,
    end: f64,
    step: f64,
    cumulative: Vec<f64>,
    total: f64,
}

impl<F> TabulatedCdf<F>
where
    F: Fn(f64) -> f64,
{
    pub fn new(density: F, start: f64, end: f64, cells: usize) -> Self {
        assert!(end > start, "empty CDF support");
        let cells = cells.max(1);
        let step = (end - start) / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let lo = start + step * i as f64;
            acc += adaptive_simpson(&density, lo, lo + step, DEFAULT_TOLERANCE / cells as f64);
            cumulative.push(acc);
        }
        Self {
            density,
            start,
            end,
            step,
            cumulative,
            total: acc,
        }
    }

    /// Mass of the density over the support before rescaling.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn support(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.start {
            return 0.0;
        }
        if x >= self.end {
            return 1.0;
        }
        let pos = (x - self.start) / self.step;
        let cell = (pos.floor() as usize).min(self.cumulative.len() - 2);
        let lo = self.start + self.step * cell as f64;
        let partial = if x > lo {
            let fa = (self.density)(lo);
            let fb = (self.density)(x);
            let fm = (self.density)(0.5 * (lo + x));
            simpson(lo, x, fa, fm, fb)
        } else {
            0.0
        };
        ((self.cumulative[cell] + partial) / self.total).clamp(0.0, 1.0)
    }
}
