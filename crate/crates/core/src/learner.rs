//! The two-algorithm learner contract shared by every hypothesis class.

use crate::measurement::Measurement;
use crate::training::TrainingSet;

/// A learner is a pair: `fit` finds a hypothesis whose predictions are
/// within `eta` of every training value, and `predict` evaluates that
/// hypothesis on any measurement.
pub trait Learner {
    type Hypothesis;
    type Error;

    fn fit(&self, data: &TrainingSet, eta: f64) -> Result<Self::Hypothesis, Self::Error>;

    fn predict(&self, hypothesis: &Self::Hypothesis, m: &Measurement) -> Result<f64, Self::Error>;

    /// Largest `|predict - value|` over the training set.
    fn max_residual(&self, hypothesis: &Self::Hypothesis, data: &TrainingSet) -> Result<f64, Self::Error> {
        let mut worst: f64 = 0.0;
        for ex in data.examples() {
            worst = worst.max((self.predict(hypothesis, &ex.measurement)? - ex.value).abs());
        }
        Ok(worst)
    }
}
