//! Derivative-free maximization (Nelder–Mead) for the low-dimensional
//! hyperparameter search.

/// Outcome of a budgeted simplex search.
#[derive(Debug, Clone)]
pub struct ModeSearch {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Simplex collapsed below tolerance before the budget ran out.
    pub converged: bool,
}

/// Maximize `f` from `start` with a standard Nelder–Mead simplex
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Deterministic.
pub fn nelder_mead_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    initial_step: &[f64],
    max_evals: usize,
    f_tol: f64,
) -> ModeSearch {
    let dim = start.len();
    assert_eq!(initial_step.len(), dim);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Initial simplex: start plus one step along each axis.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += initial_step[i];
        let v = eval(&p, &mut evals);
        simplex.push((p, v));
    }

    let mut converged = false;
    while evals < max_evals {
        // Sort descending by value (we maximize).
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (best - worst).abs() < f_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(p, _)| p[i]).sum::<f64>() / dim as f64)
            .collect();
        let reflect: Vec<f64> = (0..dim)
            .map(|i| centroid[i] + (centroid[i] - simplex[dim].0[i]))
            .collect();
        let fr = eval(&reflect, &mut evals);

        if fr > simplex[0].1 {
            // Try expanding.
            let expand: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + 2.0 * (centroid[i] - simplex[dim].0[i]))
                .collect();
            let fe = eval(&expand, &mut evals);
            simplex[dim] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            // Contract toward the centroid.
            let contract: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + 0.5 * (simplex[dim].0[i] - centroid[i]))
                .collect();
            let fc = eval(&contract, &mut evals);
            if fc > simplex[dim].1 {
                simplex[dim] = (contract, fc);
            } else {
                // Shrink everything toward the best point.
                let best_p = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = (0..dim)
                        .map(|i| best_p[i] + 0.5 * (item.0[i] - best_p[i]))
                        .collect();
                    let v = eval(&p, &mut evals);
                    *item = (p, v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    ModeSearch {
        argmax: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_maximum() {
        let mut f = |x: &[f64]| -((x[0] - 1.5).powi(2) + 2.0 * (x[1] + 0.5).powi(2));
        let r = nelder_mead_max(&mut f, &[0.0, 0.0], &[0.5, 0.5], 500, 1e-12);
        assert!(r.converged);
        assert!((r.argmax[0] - 1.5).abs() < 1e-4, "{:?}", r.argmax);
        assert!((r.argmax[1] + 0.5).abs() < 1e-4, "{:?}", r.argmax);
    }

    #[test]
    fn respects_budget_and_reports_best_point() {
        let mut count = 0usize;
        let mut f = |x: &[f64]| {
            count += 1;
            -(x[0].powi(2))
        };
        let r = nelder_mead_max(&mut f, &[10.0], &[1.0], 20, 0.0);
        assert!(!r.converged);
        assert!(r.evaluations <= 21); // may finish the step in flight
        assert!(r.value <= 0.0);
        assert!(count >= 20);
    }

    #[test]
    fn handles_nan_objective_regions() {
        let mut f = |x: &[f64]| {
            if x[0] > 2.0 {
                f64::NAN
            } else {
                -(x[0] - 1.0).powi(2)
            }
        };
        let r = nelder_mead_max(&mut f, &[0.0], &[0.8], 300, 1e-12);
        assert!((r.argmax[0] - 1.0).abs() < 1e-3);
    }
}
