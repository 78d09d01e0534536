//! Reference solvers and shared fixtures for the integration tests.
//!
//! Both reference solvers are kept independent of the library's training
//! code: dense data layout, explicit Hessians (LR) and an accelerated
//! projected-gradient method on the equality-constrained dual with a
//! golden-section bias search (SVM). The SVM route self-certifies with its
//! duality gap.

#![allow(dead_code)]

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Primal objective shared by both reference solvers.
pub fn primal_objective(
    hinge: bool,
    x: &[Vec<f64>],
    targets: &[f64],
    costs: &[f64],
    w: &[f64],
    b: f64,
) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = x
        .iter()
        .zip(targets)
        .zip(costs)
        .map(|((xi, &yi), &ci)| {
            let s = yi * (dot(xi, w) + b);
            ci * if hinge { (1.0 - s).max(0.0) } else { softplus(-s) }
        })
        .sum();
    reg + loss
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    let mut sol = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= a[row][k] * sol[k];
        }
        sol[row] = acc / a[row][row];
    }
    sol
}

/// Reference logistic solver: damped Newton with an explicit Hessian.
/// Returns `(w, b, objective)`.
pub fn lr_reference(x: &[Vec<f64>], targets: &[f64], costs: &[f64]) -> (Vec<f64>, f64, f64) {
    let d = x[0].len();
    let dim = d + 1;
    let mut theta = vec![0.0; dim];
    for _ in 0..200 {
        let mut grad = vec![0.0; dim];
        grad[..d].copy_from_slice(&theta[..d]);
        let mut hess = vec![vec![0.0; dim]; dim];
        for (j, row) in hess.iter_mut().enumerate().take(d) {
            row[j] = 1.0;
        }
        for ((xi, &yi), &ci) in x.iter().zip(targets).zip(costs) {
            let s = yi * (dot(xi, &theta[..d]) + theta[d]);
            let coef = -ci * sigmoid(-s) * yi;
            for (j, &v) in xi.iter().enumerate() {
                grad[j] += coef * v;
            }
            grad[d] += coef;
            let h = ci * sigmoid(s) * sigmoid(-s);
            for j in 0..d {
                for k in 0..d {
                    hess[j][k] += h * xi[j] * xi[k];
                }
                hess[j][d] += h * xi[j];
                hess[d][j] += h * xi[j];
            }
            hess[d][d] += h;
        }
        let g_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if g_inf < 1e-12 {
            break;
        }
        let step_dir: Vec<f64> = solve_dense(hess, grad.iter().map(|g| -g).collect());
        let f0 = primal_objective(false, x, targets, costs, &theta[..d], theta[d]);
        let slope: f64 = grad.iter().zip(&step_dir).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step_dir).map(|(p, s)| p + t * s).collect();
            if primal_objective(false, x, targets, costs, &cand[..d], cand[d])
                <= f0 + 1e-4 * t * slope
            {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    let b = theta[d];
    theta.truncate(d);
    let obj = primal_objective(false, x, targets, costs, &theta, b);
    (theta, b, obj)
}

/// Projection onto `{0 <= a_i <= c_i, sum_i y_i a_i = 0}` by bisection on
/// the hyperplane multiplier.
fn project_box_plane(z: &[f64], targets: &[f64], costs: &[f64]) -> Vec<f64> {
    let clipped = |lambda: f64| -> Vec<f64> {
        z.iter()
            .zip(targets)
            .zip(costs)
            .map(|((&zi, &yi), &ci)| (zi - lambda * yi).clamp(0.0, ci))
            .collect()
    };
    let balance = |alpha: &[f64]| -> f64 { alpha.iter().zip(targets).map(|(a, y)| a * y).sum() };

    // balance(clipped(lambda)) is non-increasing in lambda.
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        if balance(&clipped(lo)) >= 0.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..200 {
        if balance(&clipped(hi)) <= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if balance(&clipped(mid)) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clipped(0.5 * (lo + hi))
}

/// Exact 1-D convex minimization of the hinge loss over the bias via golden
/// section (the scores are held fixed).
fn golden_bias(scores: &[f64], targets: &[f64], costs: &[f64]) -> f64 {
    let loss = |b: f64| -> f64 {
        scores
            .iter()
            .zip(targets)
            .zip(costs)
            .map(|((&s, &y), &c)| c * (1.0 - y * (s + b)).max(0.0))
            .sum()
    };
    let reach = 2.0 + scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let (mut lo, mut hi) = (-reach, reach);
    let phi = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut x1 = lo + phi * (hi - lo);
    let mut x2 = hi - phi * (hi - lo);
    let (mut f1, mut f2) = (loss(x1), loss(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + phi * (hi - lo);
            f1 = loss(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - phi * (hi - lo);
            f2 = loss(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Reference hinge solver: FISTA with restarts on the equality-constrained
/// dual, exact projections, and a golden-section bias. Panics unless the
/// duality gap certifies `gap_tol` relative accuracy. Returns
/// `(w, b, primal, dual)`.
pub fn svm_reference(
    x: &[Vec<f64>],
    targets: &[f64],
    costs: &[f64],
    gap_tol: f64,
) -> (Vec<f64>, f64, f64, f64) {
    let n = x.len();
    let d = x[0].len();
    let w_of = |alpha: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; d];
        for ((xi, &yi), &ai) in x.iter().zip(targets).zip(alpha) {
            if ai != 0.0 {
                for (j, &v) in xi.iter().enumerate() {
                    w[j] += ai * yi * v;
                }
            }
        }
        w
    };
    let grad = |alpha: &[f64]| -> Vec<f64> {
        let w = w_of(alpha);
        x.iter().zip(targets).map(|(xi, &yi)| yi * dot(xi, &w) - 1.0).collect()
    };
    let dual_value = |alpha: &[f64]| -> f64 {
        let w = w_of(alpha);
        alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>()
    };

    // Lipschitz constant of the dual gradient by power iteration.
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..80 {
        let w = w_of(&v);
        let u: Vec<f64> = x.iter().zip(targets).map(|(xi, &yi)| yi * dot(xi, &w)).collect();
        let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        lip = norm;
        v = u.iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (1.01 * lip);

    let mut alpha = project_box_plane(&vec![0.0; n], targets, costs);
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    let mut f_prev = -dual_value(&alpha);
    let mut best: Option<(Vec<f64>, f64, f64, f64)> = None;
    for it in 0..1_000_000usize {
        let g = grad(&momentum);
        let moved: Vec<f64> = momentum.iter().zip(&g).map(|(a, gi)| a - step * gi).collect();
        let next = project_box_plane(&moved, targets, costs);
        let f_next = -dual_value(&next);
        if f_next > f_prev {
            momentum = next.clone();
            t = 1.0;
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            momentum = next.iter().zip(&alpha).map(|(nw, old)| nw + beta * (nw - old)).collect();
            t = t_next;
        }
        alpha = next;
        f_prev = f_next;

        if it % 50 == 49 {
            let w = w_of(&alpha);
            let scores: Vec<f64> = x.iter().map(|xi| dot(xi, &w)).collect();
            let b = golden_bias(&scores, targets, costs);
            let primal = primal_objective(true, x, targets, costs, &w, b);
            let dual = dual_value(&alpha);
            let gap = primal - dual;
            if best.as_ref().map_or(true, |(_, _, p, _)| primal < *p) {
                best = Some((w, b, primal, dual));
            }
            if gap <= gap_tol * primal.abs().max(1.0) {
                let (bw, bb, _, _) = best.unwrap();
                return (bw, bb, primal, dual);
            }
        }
    }
    let (_, _, primal, dual) = best.clone().unwrap();
    panic!(
        "svm reference failed to certify: primal {primal}, dual {dual}, gap {}",
        primal - dual
    );
}
