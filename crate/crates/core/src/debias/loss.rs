use crate::nn::{Graph, NodeId};

/// Distance of p(yes) and p(no) from one half.
pub fn equalization_loss(p_yes: f64, p_no: f64) -> f64 {
    (p_yes - 0.5).abs() + (p_no - 0.5).abs()
}

/// One minus the probability of the gold answer.
pub fn performance_loss(p_answer: f64) -> f64 {
    1.0 - p_answer
}

/// Equalization loss on a recorded 1×V distribution, summing token sets.
pub fn equalization_node(g: &mut Graph, probs: NodeId, yes: &[usize], no: &[usize]) -> NodeId {
    let py = g.sum_at(probs, yes);
    let pn = g.sum_at(probs, no);
    let dy = g.add_const(py, -0.5);
    let dn = g.add_const(pn, -0.5);
    let ay = g.abs(dy);
    let an = g.abs(dn);
    g.add(ay, an)
}

pub fn performance_node(g: &mut Graph, probs: NodeId, answer: &[usize]) -> NodeId {
    let p = g.sum_at(probs, answer);
    let neg = g.scale(p, -1.0);
    g.add_const(neg, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_values() {
        assert_eq!(equalization_loss(0.5, 0.5), 0.0);
        assert_eq!(equalization_loss(1.0, 0.0), 1.0);
        assert!((equalization_loss(0.7, 0.2) - 0.5).abs() < 1e-15);
        assert_eq!(performance_loss(1.0), 0.0);
        assert_eq!(performance_loss(0.0), 1.0);
        assert!((performance_loss(0.65) - 0.35).abs() < 1e-15);
    }
}
