//! Derivative-free local minimization (Nelder-Mead with dimension-adaptive
//! coefficients).

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once the spread of function values across the simplex is below this.
    pub ftol: f64,
    /// ... and every vertex is within this distance of the best one.
    pub xtol: f64,
    pub initial_step: f64,
    /// How many times to rebuild the simplex around the best point after convergence.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            ftol: 1e-15,
            xtol: 1e-10,
            initial_step: 0.3,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = x0.to_vec();
    let mut fbest = f(&best);
    let mut evals = 1;
    let mut converged = false;
    let mut step = opts.initial_step;
    for _ in 0..=opts.restarts {
        let budget = opts.max_evals.saturating_sub(evals);
        if budget == 0 {
            break;
        }
        let run = run_once(&mut f, &best, fbest, step, budget, opts);
        evals += run.evals;
        let improvement = fbest - run.f;
        if run.f <= fbest {
            best = run.x;
            fbest = run.f;
        }
        converged = run.converged;
        if !run.converged || improvement <= opts.ftol {
            break;
        }
        step *= 0.5;
    }
    SimplexResult {
        x: best,
        f: fbest,
        evals,
        converged,
    }
}

fn run_once<F>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    step: f64,
    budget: usize,
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) =
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    vals.push(f0);
    let mut evals = 0;
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        vals.push(f(&p));
        pts.push(p);
        evals += 1;
    }

    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while evals < budget {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (ib, iw, isw) = (order[0], order[n], order[n - 1]);
        let spread = vals[iw] - vals[ib];
        let size = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[ib])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // relative in f: a few ulps of rounding noise must not block convergence
        if spread <= opts.ftol * (1.0 + vals[ib].abs()) && size <= opts.xtol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / nf;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + t * (x - c))
                .collect()
        };

        let xr = along(-alpha, &pts[iw]);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[ib] {
            let xe = along(-alpha * beta, &pts[iw]);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[iw] = xe;
                vals[iw] = fe;
            } else {
                pts[iw] = xr;
                vals[iw] = fr;
            }
            continue;
        }
        if fr < vals[isw] {
            pts[iw] = xr;
            vals[iw] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[iw] {
            let xc = along(-alpha * gamma, &pts[iw]);
            let fc = f(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(gamma, &pts[iw]);
            let fc = f(&xc);
            (xc, fc, fc < vals[iw])
        };
        evals += 1;
        if accept {
            pts[iw] = xc;
            vals[iw] = fc;
            continue;
        }
        let anchor = pts[ib].clone();
        for &i in &order[1..] {
            let p: Vec<f64> = anchor
                .iter()
                .zip(&pts[i])
                .map(|(a, x)| a + delta * (x - a))
                .collect();
            vals[i] = f(&p);
            pts[i] = p;
            evals += 1;
        }
    }
    let ib = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    SimplexResult {
        x: pts[ib].clone(),
        f: vals[ib],
        evals,
        converged,
    }
}
