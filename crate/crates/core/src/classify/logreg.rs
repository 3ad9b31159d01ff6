use super::{LabeledExample, Scaler};

const MAX_ITERATIONS: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-8;

/// L2-regularized logistic regression over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// `[w1, w2, bias]` in standardized feature space.
    pub params: [f64; 3],
    pub scaler: Scaler,
    pub lambda: f64,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn probability(&self, features: &[f64; 2]) -> f64 {
        let x = self.scaler.transform(features);
        sigmoid(self.params[0] * x[0] + self.params[1] * x[1] + self.params[2])
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective and gradient at `params = [w1, w2, bias]`:
/// mean logistic loss plus `lambda / (2n) * |w|^2`. The bias is not penalized.
pub fn logreg_objective(params: &[f64; 3], xs: &[[f64; 2]], ys: &[bool], lambda: f64) -> (f64, [f64; 3]) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; 3];
    for (x, &y) in xs.iter().zip(ys) {
        let z = params[0] * x[0] + params[1] * x[1] + params[2];
        let t = if y { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        grad[0] += r * x[0];
        grad[1] += r * x[1];
        grad[2] += r;
    }
    let penalty = lambda / (2.0 * n) * (params[0].powi(2) + params[1].powi(2));
    for g in &mut grad {
        *g /= n;
    }
    grad[0] += lambda / n * params[0];
    grad[1] += lambda / n * params[1];
    (loss / n + penalty, grad)
}

pub(super) fn fit(examples: &[LabeledExample], lambda: f64) -> LogisticModel {
    let scaler = Scaler::fit(examples);
    let xs: Vec<[f64; 2]> = examples.iter().map(|e| scaler.transform(&e.features)).collect();
    let ys: Vec<bool> = examples.iter().map(|e| e.positive).collect();
    let n = xs.len() as f64;

    // Lipschitz bound of the gradient: the Hessian is at most X'X / (4n) + lambda/n,
    // and the trace bounds the top eigenvalue of X'X.
    let trace: f64 = xs.iter().map(|x| x[0] * x[0] + x[1] * x[1] + 1.0).sum();
    let step = 1.0 / (trace / (4.0 * n) + lambda / n);

    let mut params = [0.0; 3];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let (_, grad) = logreg_objective(&params, &xs, &ys, lambda);
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < GRADIENT_TOL {
            break;
        }
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= step * g;
        }
        iterations += 1;
    }
    LogisticModel {
        params,
        scaler,
        lambda,
        iterations,
    }
}
