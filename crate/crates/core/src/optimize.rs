//! BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    pub grad_tol: f64,
    pub rel_f_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            rel_f_tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    Stalled,
    MaxIterations,
    LineSearch,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub reason: StopReason,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Point {
    alpha: f64,
    f: f64,
    d: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizes `f`, which returns value and gradient.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut hinv = identity(n);
    let mut first = true;

    for it in 0..opts.max_iter {
        if inf_norm(&g) < opts.grad_tol {
            return Ok(BfgsResult {
                x,
                f: fx,
                grad: g,
                iterations: it,
                reason: StopReason::Gradient,
            });
        }
        let mut p = matvec_neg(&hinv, &g);
        let mut d0 = dot(&p, &g);
        if d0 >= 0.0 {
            hinv = identity(n);
            p = g.iter().map(|v| -v).collect();
            d0 = dot(&p, &g);
        }
        let Some(pt) = line_search(&mut f, &x, fx, &p, d0)? else {
            return Ok(BfgsResult {
                x,
                f: fx,
                grad: g,
                iterations: it,
                reason: StopReason::LineSearch,
            });
        };
        let s: Vec<f64> = p.iter().map(|v| v * pt.alpha).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let f_old = fx;
        x = pt.x;
        fx = pt.f;
        g = pt.g;
        if sy > 1e-14 {
            if first {
                let scale = sy / dot(&y, &y);
                hinv = identity(n);
                hinv.iter_mut().for_each(|v| *v *= scale);
                first = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        if (f_old - fx).abs() <= opts.rel_f_tol * f_old.abs().max(1e-300) {
            let reason = if inf_norm(&g) < opts.grad_tol {
                StopReason::Gradient
            } else {
                StopReason::Stalled
            };
            return Ok(BfgsResult {
                x,
                f: fx,
                grad: g,
                iterations: it + 1,
                reason,
            });
        }
    }
    let reason = if inf_norm(&g) < opts.grad_tol {
        StopReason::Gradient
    } else {
        StopReason::MaxIterations
    };
    Ok(BfgsResult {
        x,
        f: fx,
        grad: g,
        iterations: opts.max_iter,
        reason,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn matvec_neg(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| -dot(&m[i * n..(i + 1) * n], v)).collect()
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn eval<F>(f: &mut F, x0: &[f64], p: &[f64], alpha: f64) -> Result<Point>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let x: Vec<f64> = x0.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
    let (fv, g) = f(&x)?;
    Ok(Point {
        alpha,
        f: fv,
        d: dot(&g, p),
        x,
        g,
    })
}

fn line_search<F>(f: &mut F, x0: &[f64], f0: f64, p: &[f64], d0: f64) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut prev = Point {
        alpha: 0.0,
        f: f0,
        d: d0,
        x: x0.to_vec(),
        g: Vec::new(),
    };
    let mut alpha = 1.0;
    for i in 0..30 {
        let cur = eval(f, x0, p, alpha)?;
        if cur.f > f0 + C1 * alpha * d0 || (i > 0 && cur.f >= prev.f) {
            return zoom(f, x0, f0, p, d0, prev, cur);
        }
        if cur.d.abs() <= -C2 * d0 {
            return Ok(Some(cur));
        }
        if cur.d >= 0.0 {
            return zoom(f, x0, f0, p, d0, cur, prev);
        }
        alpha *= 2.0;
        prev = cur;
    }
    Ok(Some(prev).filter(|p| p.alpha > 0.0))
}

fn zoom<F>(f: &mut F, x0: &[f64], f0: f64, p: &[f64], d0: f64, mut lo: Point, mut hi: Point) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    for _ in 0..40 {
        let alpha = cubic_min(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() < 1e-16 {
            break;
        }
        let cur = eval(f, x0, p, alpha)?;
        if cur.f > f0 + C1 * alpha * d0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.d.abs() <= -C2 * d0 {
                return Ok(Some(cur));
            }
            if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, cur);
            } else {
                lo = cur;
            }
        }
    }
    // Accept the best sufficient-decrease point if curvature never settled.
    if lo.alpha > 0.0 && lo.f < f0 {
        if lo.g.is_empty() {
            return Ok(None);
        }
        return Ok(Some(lo));
    }
    Ok(None)
}

/// Minimizer of the cubic through both endpoints, safeguarded to the interior.
fn cubic_min(a: &Point, b: &Point) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha {
        (a.alpha, b.alpha)
    } else {
        (b.alpha, a.alpha)
    };
    let mid = 0.5 * (lo + hi);
    let d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.d * b.d;
    if !disc.is_finite() || disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}
