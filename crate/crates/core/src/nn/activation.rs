use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Linear,
    Relu,
    /// `elu(x) + 1` with α = 1, i.e. `x + 1` for x > 0 and `exp(x)` otherwise.
    BiasedElu,
    Sinus,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::Linear,
        ActivationKind::Relu,
        ActivationKind::BiasedElu,
        ActivationKind::Sinus,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Linear => x,
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::BiasedElu => {
                if x > 0.0 {
                    x + 1.0
                } else {
                    x.exp()
                }
            }
            ActivationKind::Sinus => x.sin(),
        }
    }

    /// dσ/dx given the pre-activation `x` and output `y = σ(x)`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => y * (1.0 - y),
            ActivationKind::Tanh => 1.0 - y * y,
            ActivationKind::Linear => 1.0,
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::BiasedElu => {
                if x > 0.0 {
                    1.0
                } else {
                    y
                }
            }
            ActivationKind::Sinus => x.cos(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_elu_is_positive_on_range() {
        let mut x = -50.0;
        while x <= 50.0 {
            assert!(ActivationKind::BiasedElu.apply(x) > 0.0, "x={x}");
            x += 0.01;
        }
        assert_eq!(ActivationKind::BiasedElu.apply(0.0), 1.0);
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for act in ActivationKind::ALL {
            for &x in &[-2.3, -0.4, 0.7, 1.9] {
                let fd = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
                let an = act.derivative(x, act.apply(x));
                assert!((fd - an).abs() < 1e-8, "{act:?} at {x}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn sigmoid_of_zero() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.5);
        assert_eq!(ActivationKind::Sinus.apply(1.0), 1.0f64.sin());
    }
}
