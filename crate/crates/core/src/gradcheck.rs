//! Central finite-difference checks for analytic gradients.

use crate::params::ParamStore;
use crate::tensor::{GradientMap, Tensor, TensorError};

pub const DEFAULT_EPS: f64 = 1e-5;

/// `|a - b| / max(1e-8, |a| + |b|)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Compares the analytic gradient of `f` at `x` against central differences
/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)` and returns the largest
/// relative error over all coordinates.
///
/// `f` returns the function value together with its analytic gradient.
pub fn finite_difference_check<F>(mut f: F, x: &Tensor<f64>, eps: f64) -> Result<f64, TensorError>
where
    F: FnMut(&Tensor<f64>) -> Result<(f64, Tensor<f64>), TensorError>,
{
    if !(eps > 0.0) {
        return Err(TensorError::Contract(format!("eps must be positive, got {eps}")));
    }
    let (_, analytic) = f(x)?;
    if analytic.shape() != x.shape() {
        return Err(TensorError::Shape {
            op: "finite_difference_check",
            left: x.shape().to_vec(),
            right: analytic.shape().to_vec(),
        });
    }
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let (up, _) = f(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let (down, _) = f(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max(relative_error(analytic.data()[i], numeric));
    }
    Ok(worst)
}

/// Outcome of [`check_param_gradients`].
#[derive(Clone, Debug)]
pub struct ParamGradCheck {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// Finite-difference check of every coordinate of every parameter in `store`.
///
/// `f` evaluates the scalar loss on a store and returns it with the analytic
/// parameter gradients; parameters missing from the map are taken to have a
/// zero gradient.
pub fn check_param_gradients<F>(store: &ParamStore<f64>, f: F, eps: f64) -> Result<ParamGradCheck, TensorError>
where
    F: Fn(&ParamStore<f64>) -> Result<(f64, GradientMap<f64>), TensorError>,
{
    let (_, grads) = f(store)?;
    let mut probe = store.clone();
    let mut report = ParamGradCheck {
        max_rel_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    for id in store.ids() {
        for i in 0..store.get(id).len() {
            let orig = store.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + eps;
            let (up, _) = f(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig - eps;
            let (down, _) = f(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.param(id).map_or(0.0, |g| g.data()[i]);
            let err = relative_error(analytic, numeric);
            report.coordinates += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((store.name(id).to_string(), i));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Graph;

    #[test]
    fn square_at_three() {
        let x = Tensor::scalar(3.0);
        let err = finite_difference_check(
            |x| {
                let v = x.data()[0];
                Ok((v * v, Tensor::scalar(2.0 * v)))
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn sigmoid_at_zero_has_slope_quarter() {
        let x = Tensor::scalar(0.0);
        let err = finite_difference_check(
            |x| {
                let mut g = Graph::detached();
                let xi = g.input(x.clone());
                let y = g.sigmoid(xi)?;
                let grads = g.backward(y)?;
                if x.data()[0] == 0.0 {
                    assert_eq!(grads.input(xi).unwrap().data()[0], 0.25);
                }
                Ok((g.value(y).data()[0], grads.input(xi).unwrap().clone()))
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn nonpositive_eps_rejected() {
        let x = Tensor::scalar(1.0);
        assert!(finite_difference_check(|x| Ok((x.data()[0], x.clone())), &x, 0.0).is_err());
    }
}
