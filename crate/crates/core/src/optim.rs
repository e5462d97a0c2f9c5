//! Small dense quasi-Newton minimizer shared by the scaling and phase searches.

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the max-norm of the gradient falls below this.
    pub grad_tol: f64,
    /// Measure `grad_tol` relative to `|f|`.
    pub relative: bool,
    /// Box constraint `‖x‖_∞ ≤ bound`; `f64::INFINITY` disables it.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub converged: bool,
    /// An accepted step was clipped by the box.
    pub hit_bound: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest step along `p` that keeps `x + a p` inside the box.
fn max_step(x: &[f64], p: &[f64], bound: f64) -> f64 {
    let mut amax = f64::INFINITY;
    for (xi, pi) in x.iter().zip(p) {
        if *pi > 0.0 {
            amax = amax.min((bound - xi) / pi);
        } else if *pi < 0.0 {
            amax = amax.min((-bound - xi) / pi);
        }
    }
    amax.max(0.0)
}

/// BFGS with Armijo backtracking. `fg` returns value and gradient.
pub(crate) fn bfgs<F>(mut fg: F, x0: &[f64], opts: BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut out = BfgsOutcome { x: x.clone(), f, grad: g.clone(), converged: false, hit_bound: false };
    if n == 0 {
        out.converged = true;
        return out;
    }
    // Inverse Hessian approximation, row-major.
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut first = true;
    let small = |g: &[f64], f: f64| max_abs(g) <= if opts.relative { opts.grad_tol * f.abs() } else { opts.grad_tol };

    for _ in 0..opts.max_iter {
        if small(&g, f) {
            out.converged = true;
            break;
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            reset(&mut h);
            p = g.iter().map(|v| -v).collect();
            slope = dot(&p, &g);
        }
        if first {
            // Scale the first steepest-descent step to a unit move.
            let s = 1.0 / max_abs(&p).max(1e-300);
            if s < 1.0 {
                p.iter_mut().for_each(|v| *v *= s);
                slope *= s;
            }
            first = false;
        }
        let amax = max_step(&x, &p, opts.bound);
        let mut a = 1.0f64.min(amax);
        let clipped = amax <= 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            if a <= 0.0 {
                break;
            }
            let xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + a * pi).collect();
            let (ft, gt) = fg(&xt);
            // Near a minimizer the decrease drops below rounding; then accept
            // any non-increasing step that shrinks the gradient.
            let armijo = ft <= f + 1e-4 * a * slope;
            let flat = ft <= f + 4.0 * f64::EPSILON * f.abs() && max_abs(&gt) < max_abs(&g);
            if ft.is_finite() && (armijo || flat) {
                accepted = Some((xt, ft, gt, a));
                break;
            }
            a *= 0.5;
        }
        let Some((xt, ft, gt, a)) = accepted else {
            break;
        };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let decrease = f - ft;
        x = xt;
        f = ft;
        g = gt;
        if clipped && (a - amax).abs() <= 1e-15 * amax.max(1.0) {
            out.hit_bound = true;
            break;
        }
        if decrease <= 1e-16 * f.abs().max(1e-300) && max_abs(&s) < 1e-14 {
            break;
        }
    }
    if small(&g, f) {
        out.converged = true;
    }
    out.x = x;
    out.f = f;
    out.grad = g;
    out
}
