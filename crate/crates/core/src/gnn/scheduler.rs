/// Multiplies the learning rate by `factor` once the validation loss has
/// gone `patience` consecutive epochs without a strict improvement on the
/// best value seen. The counter restarts after every improvement and every
/// reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    lr: f64,
    factor: f64,
    patience: usize,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize) -> Self {
        PlateauScheduler {
            lr,
            factor,
            patience,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feeds one epoch's validation loss and returns the learning rate to
    /// use from now on.
    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_loss_keeps_lr() {
        let mut s = PlateauScheduler::new(0.01, 0.5, 3);
        for e in 0..50 {
            assert_eq!(s.step(10.0 - e as f64 * 0.1), 0.01);
        }
    }

    #[test]
    fn constant_loss_halves_after_patience() {
        let mut s = PlateauScheduler::new(0.01, 0.5, 100);
        for _ in 0..100 {
            s.step(1.0);
        }
        assert_eq!(s.lr(), 0.01);
        assert_eq!(s.step(1.0), 0.005);
        for _ in 0..99 {
            s.step(1.0);
        }
        assert_eq!(s.lr(), 0.005);
        assert_eq!(s.step(1.0), 0.0025);
    }

    #[test]
    fn nan_counts_as_no_improvement() {
        let mut s = PlateauScheduler::new(1.0, 0.5, 1);
        s.step(1.0);
        assert_eq!(s.step(f64::NAN), 0.5);
    }
}
