//! Adam optimizer state and polyak target-network updates.

use super::{Gradients, MlpNetwork};
use crate::error::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second moment accumulators shaped like the network parameters,
/// plus the update counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub(crate) step: u64,
    pub(crate) m: Vec<MomentPair>,
    pub(crate) v: Vec<MomentPair>,
}

#[derive(Debug, Clone)]
pub(crate) struct MomentPair {
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
}

impl AdamState {
    pub fn new_for(net: &MlpNetwork) -> Self {
        let zeros = |n: usize| vec![0.0; n];
        let make = || {
            net.layers
                .iter()
                .map(|l| MomentPair {
                    weights: zeros(l.weights.len()),
                    biases: zeros(l.out_dim),
                })
                .collect()
        };
        Self {
            step: 0,
            m: make(),
            v: make(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn matches(&self, net: &MlpNetwork) -> bool {
        self.m.len() == net.layers.len()
            && self
                .m
                .iter()
                .zip(&net.layers)
                .all(|(p, l)| p.weights.len() == l.weights.len() && p.biases.len() == l.out_dim)
    }
}

/// One bias-corrected Adam update. A non-finite gradient aborts the update
/// and leaves parameters and optimizer state untouched.
pub fn adam_step(
    net: &mut MlpNetwork,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if grads.layers.len() != net.layers.len()
        || grads
            .layers
            .iter()
            .zip(&net.layers)
            .any(|(g, l)| g.d_weights.len() != l.weights.len() || g.d_biases.len() != l.out_dim)
    {
        return Err(Error::InvalidState("gradient shapes do not match network".into()));
    }
    if !state.matches(net) {
        return Err(Error::InvalidState("optimizer state does not match network".into()));
    }
    if !grads.is_finite() {
        let bad = grads
            .layers
            .iter()
            .position(|l| {
                l.d_weights.iter().any(|v| !v.is_finite())
                    || l.d_biases.iter().any(|v| !v.is_finite())
            })
            .unwrap_or(0);
        return Err(Error::NonFinite(format!("gradient for layer {bad}")));
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);

    for (((layer, grad), m), v) in net
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        update_slice(&mut layer.weights, &grad.d_weights, &mut m.weights, &mut v.weights, lr, bc1, bc2);
        update_slice(&mut layer.biases, &grad.d_biases, &mut m.biases, &mut v.biases, lr, bc1, bc2);
    }
    Ok(())
}

fn update_slice(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, bc1: f64, bc2: f64) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
    }
}

/// Polyak update `target <- tau * online + (1 - tau) * target`.
/// `tau` outside `(0, 1]` is rejected.
pub fn soft_update(target: &mut MlpNetwork, online: &MlpNetwork, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must be in (0, 1], got {tau}")));
    }
    if target.dims != online.dims {
        return Err(Error::InvalidState("target/online network shapes differ".into()));
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (tw, &ow) in t.weights.iter_mut().zip(&o.weights) {
            *tw = tau * ow + (1.0 - tau) * *tw;
        }
        for (tb, &ob) in t.biases.iter_mut().zip(&o.biases) {
            *tb = tau * ob + (1.0 - tau) * *tb;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::OutputHead;
    use crate::rng::rng_from_seed;

    fn scalar_net(value: f64) -> MlpNetwork {
        let mut rng = rng_from_seed(0);
        let mut net = MlpNetwork::new(&[1, 1], OutputHead::Linear, &mut rng).unwrap();
        net.set_weights_row_major(0, &[value]).unwrap();
        net
    }

    fn grad_of(net: &MlpNetwork, w: f64, b: f64) -> Gradients {
        let mut g = net.zeros_gradients();
        g.layers[0].d_weights[0] = w;
        g.layers[0].d_biases[0] = b;
        g
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Closed form: with m=v=0 and unit gradient, the bias-corrected
        // first step is lr * g / (|g| + eps) = -lr to within eps.
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new_for(&net);
        let g = grad_of(&net, 1.0, 0.0);
        adam_step(&mut net, &g, &mut state, 0.01).unwrap();
        let delta = net.get_param(0);
        assert!((delta + 0.01).abs() < 1e-6, "first step {delta}");
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_identity_on_parameters() {
        let mut net = scalar_net(0.37);
        let mut state = AdamState::new_for(&net);
        let g = net.zeros_gradients();
        for _ in 0..5 {
            adam_step(&mut net, &g, &mut state, 0.01).unwrap();
        }
        assert_eq!(net.get_param(0), 0.37);
        assert_eq!(state.step_count(), 5);
    }

    #[test]
    fn two_steps_match_reference_sequence() {
        // Independent hand-rolled Adam on a scalar with constant gradient.
        let g0 = 0.3;
        let lr = 0.01;
        let (mut m, mut v, mut p) = (0.0f64, 0.0f64, 0.5f64);
        for t in 1..=2 {
            m = BETA1 * m + (1.0 - BETA1) * g0;
            v = BETA2 * v + (1.0 - BETA2) * g0 * g0;
            let mh = m / (1.0 - BETA1.powi(t));
            let vh = v / (1.0 - BETA2.powi(t));
            p -= lr * mh / (vh.sqrt() + EPS);
        }

        let mut net = scalar_net(0.5);
        let mut state = AdamState::new_for(&net);
        let g = grad_of(&net, g0, 0.0);
        adam_step(&mut net, &g, &mut state, lr).unwrap();
        adam_step(&mut net, &g, &mut state, lr).unwrap();
        assert!((net.get_param(0) - p).abs() < 1e-10);
    }

    #[test]
    fn non_finite_gradient_aborts_without_touching_state() {
        let mut net = scalar_net(0.5);
        let mut state = AdamState::new_for(&net);
        let g = grad_of(&net, f64::NAN, 0.0);
        assert!(matches!(
            adam_step(&mut net, &g, &mut state, 0.01),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(net.get_param(0), 0.5);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn full_tau_copies_online_exactly() {
        let online = scalar_net(1.25);
        let mut target = scalar_net(-3.0);
        soft_update(&mut target, &online, 1.0).unwrap();
        assert_eq!(target.get_param(0), 1.25);
    }

    #[test]
    fn table_value_tau_moves_one_percent() {
        let online = scalar_net(1.0);
        let mut target = scalar_net(0.0);
        soft_update(&mut target, &online, 0.01).unwrap();
        assert!((target.get_param(0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_tau_rejected() {
        let online = scalar_net(1.0);
        let mut target = scalar_net(0.0);
        assert!(soft_update(&mut target, &online, 0.0).is_err());
        assert!(soft_update(&mut target, &online, 1.5).is_err());
    }

    #[test]
    fn repeated_updates_halve_gap_every_69_steps() {
        // Geometric series oracle: gap scales by (1 - tau)^n; the first n
        // with (0.99)^n <= 0.5 is ln 2 / -ln 0.99 rounded up = 69.
        let online = scalar_net(1.0);
        let mut target = scalar_net(0.0);
        let mut steps = 0;
        while (target.get_param(0) - 1.0).abs() > 0.5 {
            soft_update(&mut target, &online, 0.01).unwrap();
            steps += 1;
        }
        let expected = (2.0f64.ln() / -(0.99f64.ln())).ceil() as i32;
        assert!((steps - expected).abs() <= 1, "halving took {steps} steps");
        assert_eq!(expected, 69);
    }
}
