//! Gradient descent with backtracking (Armijo) line search.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f`, which returns the cost and its gradient.
pub fn gradient_descent<F>(x0: Vec<f64>, f: F, max_iter: usize, grad_tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut step = 1.0;
    for it in 0..max_iter {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2.sqrt() <= grad_tol {
            return Minimum { x, cost: fx, iterations: it, converged: true };
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let (fc, gc) = f(&cand);
            if fc <= fx - 1e-4 * step * g2 {
                let improvement = fx - fc;
                x = cand;
                fx = fc;
                g = gc;
                accepted = true;
                step *= 2.0;
                if improvement <= 1e-14 * fx.abs().max(1e-12) {
                    return Minimum { x, cost: fx, iterations: it + 1, converged: true };
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent possible at machine precision
            return Minimum { x, cost: fx, iterations: it, converged: true };
        }
    }
    Minimum {
        x,
        cost: fx,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_a_quadratic_bowl() {
        let f = |x: &[f64]| {
            let c = (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
            (c, vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)])
        };
        let m = gradient_descent(vec![5.0, 5.0], f, 500, 1e-9);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 2.0).abs() < 1e-6);
        assert!(m.converged);
    }
}
