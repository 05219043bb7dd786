//! Derivative-free Nelder-Mead minimization with restarts.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged when the simplex values agree within `ftol * |f| + fatol`
    pub ftol: f64,
    pub fatol: f64,
    /// and the vertices lie within `xtol * (1 + |x_best|)` of the best one.
    pub xtol: f64,
    pub restarts: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 20_000, ftol: 1e-12, fatol: 1e-300, xtol: 1e-9, restarts: 3, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f`; non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    if dim == 0 {
        let v = eval(x0, &mut evals);
        return NelderMeadResult { x: vec![], f: v, iterations: 0, evaluations: evals, converged: true };
    }

    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut iterations = 0;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let start_f = best_f;
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        let mut values = vec![best_f];
        for i in 0..dim {
            let mut v = best_x.clone();
            v[i] += opts.initial_step * best_x[i].abs().max(1.0);
            values.push(eval(&v, &mut evals));
            simplex.push(v);
        }
        let mut round_converged = false;
        while evals < opts.max_evals {
            iterations += 1;
            let mut idx: Vec<usize> = (0..=dim).collect();
            idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            values = idx.iter().map(|&i| values[i]).collect();

            let spread = values[dim] - values[0];
            let size = simplex[1..]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let xnorm = simplex[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
            if spread.is_finite()
                && spread <= opts.ftol * values[0].abs() + opts.fatol
                && size <= opts.xtol * (1.0 + xnorm)
            {
                round_converged = true;
                break;
            }

            let centroid: Vec<f64> =
                (0..dim).map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[dim]).map(|(c, w)| c + t * (w - c)).collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[dim] = xe;
                    values[dim] = fe;
                } else {
                    simplex[dim] = xr;
                    values[dim] = fr;
                }
            } else if fr < values[dim - 1] {
                simplex[dim] = xr;
                values[dim] = fr;
            } else {
                let (xc, fc) = if fr < values[dim] {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < values[dim].min(fr) {
                    simplex[dim] = xc;
                    values[dim] = fc;
                } else {
                    for i in 1..=dim {
                        let shrunk: Vec<f64> =
                            simplex[i].iter().zip(&simplex[0]).map(|(v, b)| b + 0.5 * (v - b)).collect();
                        values[i] = eval(&shrunk, &mut evals);
                        simplex[i] = shrunk;
                    }
                }
            }
        }
        let k = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        if values[k] <= best_f {
            best_f = values[k];
            best_x = simplex[k].clone();
        }
        if !round_converged {
            converged = false;
            break;
        }
        converged = true;
        // a restart that finds nothing better confirms the optimum
        if round > 0 && start_f - best_f <= opts.ftol * best_f.abs() + opts.fatol {
            break;
        }
    }
    NelderMeadResult { x: best_x, f: best_f, iterations, evaluations: evals, converged }
}
