//! Normal-Inverse-Gamma head: parameter transform, loss and predictive moments.

use statrs::function::gamma::{digamma, ln_gamma};

use super::PosteriorPrediction;

pub(crate) const ALPHA_FLOOR: f64 = 1.0 + 1e-6;
const POSITIVE_FLOOR: f64 = 1e-6;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Maps raw head outputs to `(gamma, nu, alpha, beta)`.
pub(crate) fn nig_params(out: &[f64]) -> (f64, f64, f64, f64) {
    (out[0], softplus(out[1]) + POSITIVE_FLOOR, softplus(out[2]) + ALPHA_FLOOR, softplus(out[3]) + POSITIVE_FLOOR)
}

/// Predictive mean and standard deviation of a NIG distribution.
///
/// The variance is `beta (1 + nu) / (nu (alpha - 1))`; `alpha` is clamped
/// just above one so the variance stays finite.
pub fn nig_moments(gamma: f64, nu: f64, alpha: f64, beta: f64) -> PosteriorPrediction {
    let alpha = alpha.max(ALPHA_FLOOR);
    let var = beta * (1.0 + nu) / (nu * (alpha - 1.0));
    PosteriorPrediction { mean: gamma, std: var.max(0.0).sqrt() }
}

/// Evidential loss (NIG negative log-likelihood plus `lambda |y - gamma| (2 nu + alpha)`)
/// and its gradient with respect to the four raw outputs.
pub(crate) fn evidential_loss(out: &[f64], y: f64, lambda: f64) -> (f64, Vec<f64>) {
    let (gamma, nu, alpha, beta) = nig_params(out);
    let err = y - gamma;
    let omega = 2.0 * beta * (1.0 + nu);
    let s = nu * err * err + omega;

    let nll = 0.5 * (std::f64::consts::PI / nu).ln() - alpha * omega.ln() + (alpha + 0.5) * s.ln() + ln_gamma(alpha)
        - ln_gamma(alpha + 0.5);
    let evidence = 2.0 * nu + alpha;
    let loss = nll + lambda * err.abs() * evidence;

    let d_gamma = (alpha + 0.5) * (-2.0 * nu * err) / s - lambda * err.signum() * evidence;
    let d_nu = -0.5 / nu - alpha * 2.0 * beta / omega
        + (alpha + 0.5) * (err * err + 2.0 * beta) / s
        + lambda * 2.0 * err.abs();
    let d_alpha = -omega.ln() + s.ln() + digamma(alpha) - digamma(alpha + 0.5) + lambda * err.abs();
    let d_beta = -alpha / beta + (alpha + 0.5) * 2.0 * (1.0 + nu) / s;

    let grad = vec![d_gamma, d_nu * sigmoid(out[1]), d_alpha * sigmoid(out[2]), d_beta * sigmoid(out[3])];
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_moments() {
        let p = nig_moments(0.0, 1.0, 2.0, 1.0);
        assert_eq!(p.mean, 0.0);
        assert!((p.std - 2f64.sqrt()).abs() < 1e-15);
        // alpha at or below one is clamped rather than dividing by zero.
        assert!(nig_moments(0.0, 1.0, 1.0, 1.0).std.is_finite());
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let cases = [([0.3, -0.2, 0.5, 0.1], 1.2), ([-1.0, 1.5, -0.7, 0.8], -0.4), ([0.0, 0.0, 0.0, 0.0], 0.25)];
        let h = 1e-6;
        for lambda in [0.0, 0.01, 0.5] {
            for (out, y) in cases {
                let (_, grad) = evidential_loss(&out, y, lambda);
                for k in 0..4 {
                    let mut plus = out;
                    plus[k] += h;
                    let mut minus = out;
                    minus[k] -= h;
                    let numeric =
                        (evidential_loss(&plus, y, lambda).0 - evidential_loss(&minus, y, lambda).0) / (2.0 * h);
                    assert!(
                        (numeric - grad[k]).abs() < 1e-6,
                        "lambda {lambda} out {out:?} k {k}: numeric {numeric} analytic {}",
                        grad[k]
                    );
                }
            }
        }
    }

    #[test]
    fn nll_matches_student_t_density() {
        // The NIG marginal is Student-t with 2 alpha dof, location gamma and
        // scale^2 = beta (1 + nu) / (nu alpha).
        let out = [0.4, 0.3, -0.2, 0.6];
        let y = 1.1;
        let (gamma, nu, alpha, beta) = nig_params(&out);
        let dof = 2.0 * alpha;
        let scale2 = beta * (1.0 + nu) / (nu * alpha);
        let t = (y - gamma) * (y - gamma) / scale2;
        let log_pdf = ln_gamma((dof + 1.0) / 2.0)
            - ln_gamma(dof / 2.0)
            - 0.5 * (dof * std::f64::consts::PI * scale2).ln()
            - (dof + 1.0) / 2.0 * (1.0 + t / dof).ln();
        let (loss, _) = evidential_loss(&out, y, 0.0);
        assert!((loss + log_pdf).abs() < 1e-10, "{loss} vs {}", -log_pdf);
    }
}
