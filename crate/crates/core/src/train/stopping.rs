use serde::{Deserialize, Serialize};

/// When a phase ends early.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StoppingRule {
    /// Run until the epoch limit.
    Never,
    /// Stop after `epochs` consecutive epochs whose loss is not at least
    /// `min_relative` (a fraction) below the best loss so far.
    RelativeImprovement { min_relative: f64, epochs: usize },
    /// Stop after `patience` consecutive epochs without a new best loss.
    Patience { patience: usize },
}

impl StoppingRule {
    /// 0.1% for three epochs.
    pub fn word_default() -> Self {
        StoppingRule::RelativeImprovement { min_relative: 0.001, epochs: 3 }
    }

    pub fn supervised_default() -> Self {
        StoppingRule::Patience { patience: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// New best loss.
    Improved,
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stopper {
    pub rule: StoppingRule,
    pub best: Option<f64>,
    pub best_epoch: Option<usize>,
    pub stale_epochs: usize,
}

impl Stopper {
    pub fn new(rule: StoppingRule) -> Self {
        Stopper { rule, best: None, best_epoch: None, stale_epochs: 0 }
    }

    /// Records the monitored loss of `epoch`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> Verdict {
        let improved = self.best.map_or(true, |b| loss < b);
        let enough = match (self.rule, self.best) {
            (_, None) => true,
            (StoppingRule::RelativeImprovement { min_relative, .. }, Some(b)) => {
                b > 0.0 && (b - loss) / b >= min_relative
            }
            (_, Some(_)) => improved,
        };
        if improved {
            self.best = Some(loss);
            self.best_epoch = Some(epoch);
        }
        self.stale_epochs = if enough { 0 } else { self.stale_epochs + 1 };
        let limit = match self.rule {
            StoppingRule::Never => usize::MAX,
            StoppingRule::RelativeImprovement { epochs, .. } => epochs,
            StoppingRule::Patience { patience } => patience,
        };
        if self.stale_epochs >= limit {
            Verdict::Stop
        } else if improved {
            Verdict::Improved
        } else {
            Verdict::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_rule_fires_on_third_flat_epoch() {
        let mut s = Stopper::new(StoppingRule::word_default());
        assert_eq!(s.observe(0, 10.0), Verdict::Improved);
        assert_eq!(s.observe(1, 9.0), Verdict::Improved);
        // 0.05% better: improved but not enough
        assert_eq!(s.observe(2, 8.9955), Verdict::Improved);
        assert_eq!(s.observe(3, 8.999), Verdict::Continue);
        assert_eq!(s.observe(4, 8.995), Verdict::Stop);
        assert_eq!(s.best_epoch, Some(4));
    }

    #[test]
    fn relative_rule_resets_on_real_improvement() {
        let mut s = Stopper::new(StoppingRule::word_default());
        s.observe(0, 10.0);
        s.observe(1, 10.0);
        s.observe(2, 10.0);
        assert_eq!(s.observe(3, 9.0), Verdict::Improved);
        assert_eq!(s.stale_epochs, 0);
    }

    #[test]
    fn patience_rule() {
        let mut s = Stopper::new(StoppingRule::Patience { patience: 3 });
        s.observe(0, 1.0);
        assert_eq!(s.observe(1, 1.5), Verdict::Continue);
        assert_eq!(s.observe(2, 1.0), Verdict::Continue);
        assert_eq!(s.observe(3, 0.99999), Verdict::Improved);
        s.observe(4, 2.0);
        s.observe(5, 2.0);
        assert_eq!(s.observe(6, 2.0), Verdict::Stop);
        assert_eq!(s.best_epoch, Some(3));
    }

    #[test]
    fn never_rule() {
        let mut s = Stopper::new(StoppingRule::Never);
        for e in 0..100 {
            assert_ne!(s.observe(e, 1.0), Verdict::Stop);
        }
    }
}
