//! Small dense convex quadratics `f(x) = 1/2 x'Hx - b'x + c` and a projected
//! gradient solver for them. Every row subproblem of the block-coordinate
//! solvers (EMF, NMF) is one of these.
#![allow(clippy::needless_range_loop)]

/// Inner stopping rule: relative objective decrease below this.
pub(crate) const INNER_TOLERANCE: f64 = 1e-8;
pub(crate) const INNER_MAX_ITER: usize = 500;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone)]
pub(crate) struct Quadratic {
    dim: usize,
    h: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl Quadratic {
    /// Ridge term `(lambda/2)|x|^2` with no data yet.
    pub(crate) fn ridge(dim: usize, lambda: f64) -> Self {
        let mut h = vec![0.0; dim * dim];
        for i in 0..dim {
            h[i * dim + i] = lambda;
        }
        Quadratic {
            dim,
            h,
            b: vec![0.0; dim],
            c: 0.0,
        }
    }

    /// Adds `(weight/2)(y - a'x)^2`.
    pub(crate) fn add_residual(&mut self, a: &[f64], y: f64, weight: f64) {
        debug_assert_eq!(a.len(), self.dim);
        for i in 0..self.dim {
            let wa = weight * a[i];
            for j in 0..self.dim {
                self.h[i * self.dim + j] += wa * a[j];
            }
            self.b[i] += wa * y;
        }
        self.c += 0.5 * weight * y * y;
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.dim {
            let row = &self.h[i * self.dim..(i + 1) * self.dim];
            quad += x[i] * row.iter().zip(x).map(|(h, v)| h * v).sum::<f64>();
        }
        0.5 * quad - self.b.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + self.c
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let row = &self.h[i * self.dim..(i + 1) * self.dim];
            out[i] = row.iter().zip(x).map(|(h, v)| h * v).sum::<f64>() - self.b[i];
        }
    }

    fn curvature(&self, s: &[f64]) -> f64 {
        let mut hs = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = &self.h[i * self.dim..(i + 1) * self.dim];
            hs[i] = row.iter().zip(s).map(|(h, v)| h * v).sum::<f64>();
        }
        hs.iter().zip(s).map(|(a, b)| a * b).sum()
    }

    /// Trace of `H`, an upper bound on its largest eigenvalue.
    fn lipschitz(&self) -> f64 {
        (0..self.dim).map(|i| self.h[i * self.dim + i]).sum()
    }
}

/// Minimizes `q` over the set defined by `project`, starting from `x` (which
/// must already be feasible), and returns the final objective.
///
/// Each iteration tries a Barzilai-Borwein step (the safe step `1/L` on the
/// first iteration), then halves it until the Armijo sufficient-decrease
/// condition holds, so the objective never increases.
pub(crate) fn projected_gradient<P>(q: &Quadratic, x: &mut [f64], mut project: P) -> f64
where
    P: FnMut(&mut [f64]),
{
    let dim = x.len();
    let mut f = q.value(x);
    let lipschitz = q.lipschitz();
    if lipschitz <= 0.0 || !lipschitz.is_finite() {
        // Zero quadratic: every feasible point is optimal.
        return f;
    }
    let safe_step = 1.0 / lipschitz;
    let mut trial = safe_step;
    let mut grad = vec![0.0; dim];
    let mut cand = vec![0.0; dim];
    let mut step = vec![0.0; dim];

    for _ in 0..INNER_MAX_ITER {
        q.gradient(x, &mut grad);
        let mut t = trial;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                cand[i] = x[i] - t * grad[i];
            }
            project(&mut cand);
            let mut moved = false;
            let mut slope = 0.0;
            for i in 0..dim {
                step[i] = cand[i] - x[i];
                moved |= step[i] != 0.0;
                slope += grad[i] * step[i];
            }
            if !moved {
                return f;
            }
            let f_cand = q.value(&cand);
            if f_cand <= f + ARMIJO_C * slope {
                accepted = Some(f_cand);
                break;
            }
            t *= 0.5;
        }
        let Some(f_new) = accepted else {
            return f;
        };
        x.copy_from_slice(&cand);
        let decrease = f - f_new;
        f = f_new;

        let ss: f64 = step.iter().map(|s| s * s).sum();
        let sy = q.curvature(&step);
        trial = if sy > 0.0 {
            (ss / sy).clamp(safe_step, 1e6 * safe_step)
        } else {
            safe_step
        };
        if decrease <= INNER_TOLERANCE * f.abs() {
            break;
        }
    }
    f
}
