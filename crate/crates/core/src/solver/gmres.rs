use crate::linalg::{axpy, dot, norm, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// A whole restart cycle made no progress.
    pub stagnated: bool,
    /// Final preconditioned residual relative to the preconditioned
    /// right-hand side.
    pub relative_residual: f64,
}

/// Restarted GMRES with left preconditioning, starting from `x`.
///
/// Stops when `|M^-1 (b - A x)| <= tol |M^-1 b|`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let mut tmp = vec![0.0; n];
    let mut r = vec![0.0; n];
    m.apply(b, &mut r);
    let bnorm = norm(&r);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresOutcome {
            iterations: 0,
            converged: true,
            stagnated: false,
            relative_residual: 0.0,
        };
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut relative;
    loop {
        // r = M^-1 (b - A x)
        a.apply(x, &mut tmp);
        for (t, bi) in tmp.iter_mut().zip(b) {
            *t = bi - *t;
        }
        m.apply(&tmp, &mut r);
        let beta = norm(&r);
        let cycle_start = beta / bnorm;
        relative = cycle_start;
        if relative <= tol || iterations >= max_iterations {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < max_iterations {
            a.apply(&basis[k], &mut tmp);
            let mut w = vec![0.0; n];
            m.apply(&tmp, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                h[i][k] = hik;
                axpy(-hik, v, &mut w);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            if rho == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / rho;
                sn[k] = h[k + 1][k] / rho;
            }
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            relative = g[k].abs() / bnorm;
            if relative <= tol || wn <= 1e-14 * beta {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, x);
        }
        if relative <= tol {
            break;
        }
        if relative >= cycle_start * (1.0 - 1e-12) {
            return GmresOutcome {
                iterations,
                converged: false,
                stagnated: true,
                relative_residual: relative,
            };
        }
    }
    GmresOutcome {
        iterations,
        converged: relative <= tol,
        stagnated: false,
        relative_residual: relative,
    }
}

pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}
