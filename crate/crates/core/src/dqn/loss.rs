use super::network::{Gradients, QNetwork};
use super::replay::Transition;
use super::DqnError;

/// Quadratic within ±1, linear outside.
pub fn huber(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

pub fn huber_grad(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Bootstrapped target `r + γ·(1 − done)·max Q_target(s')`.
pub fn td_target(target: &QNetwork, t: &Transition, gamma: f64) -> Result<f64, DqnError> {
    if t.done {
        return Ok(t.reward);
    }
    let q = target.forward(&t.next_state)?;
    Ok(t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Mean Huber TD error over `batch` and its gradient with respect to `net`.
pub fn td_loss<T: std::borrow::Borrow<Transition>>(
    net: &QNetwork,
    target: &QNetwork,
    batch: &[T],
    gamma: f64,
) -> Result<(f64, Gradients), DqnError> {
    let mut grads = Gradients::zeros_like(net);
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    let mut loss = 0.0;
    let mut grad_out = vec![0.0; net.output_dim()];
    for t in batch {
        let t = t.borrow();
        if t.action >= net.output_dim() {
            return Err(DqnError::DimensionMismatch(format!("action {} out of range", t.action)));
        }
        let y = td_target(target, t, gamma)?;
        let cache = net.forward_cached(&t.state)?;
        let q = cache.acts.last().expect("non-empty")[t.action];
        let err = q - y;
        loss += huber(err);
        grad_out.iter_mut().for_each(|g| *g = 0.0);
        grad_out[t.action] = huber_grad(err);
        net.backward(&cache, &grad_out, &mut grads);
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((loss / n, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn converged_batch_has_zero_loss() {
        let net = QNetwork::new(&[2, 4, 3], &mut ChaCha8Rng::seed_from_u64(3));
        let s = vec![0.1, -0.2];
        let q = net.forward(&s).unwrap();
        let t = Transition { state: s.clone(), action: 1, reward: q[1], next_state: s, done: true };
        let (loss, grads) = td_loss(&net, &net, &[t], 0.99).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn terminal_target_is_reward() {
        let net = QNetwork::new(&[2, 3], &mut ChaCha8Rng::seed_from_u64(4));
        let t = Transition { state: vec![0.0; 2], action: 0, reward: -0.7, next_state: vec![5.0; 2], done: true };
        assert_eq!(td_target(&net, &t, 0.99).unwrap(), -0.7);
    }

    #[test]
    fn huber_pieces_meet() {
        assert_eq!(huber(1.0), 0.5);
        assert_eq!(huber(-3.0), 2.5);
        assert_eq!(huber_grad(-3.0), -1.0);
        assert_eq!(huber_grad(0.25), 0.25);
    }
}
