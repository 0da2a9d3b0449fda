//! Loss functions and gradients for the two learning tasks.

use crate::error::{Error, Result};

/// Number of classes in the classification task.
pub const NUM_CLASSES: usize = 4;
/// Input dimension of the classification task.
pub const FEATURE_DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// Fit a constant `theta` to noisy scalar observations under squared loss.
    Regression,
    /// Linear softmax classifier over 2-D points, cross-entropy loss.
    Classification,
}

/// One training or test example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sample {
    Scalar { y: f64 },
    Labeled { x: [f64; FEATURE_DIM], class: usize },
}

/// A task together with its model parameterization.
///
/// Classification parameters are stored row-major as a
/// `(FEATURE_DIM + bias) x NUM_CLASSES` matrix, the optional bias row last.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    kind: TaskKind,
    class_bias: bool,
}

impl TaskSpec {
    pub fn regression() -> Self {
        Self { kind: TaskKind::Regression, class_bias: false }
    }

    pub fn classification(class_bias: bool) -> Self {
        Self { kind: TaskKind::Classification, class_bias }
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn has_class_bias(&self) -> bool {
        self.class_bias
    }

    /// Model dimension.
    pub fn dim(&self) -> usize {
        match self.kind {
            TaskKind::Regression => 1,
            TaskKind::Classification => self.input_rows() * NUM_CLASSES,
        }
    }

    fn input_rows(&self) -> usize {
        FEATURE_DIM + usize::from(self.class_bias)
    }

    fn check(&self, params: &[f64], batch: &[Sample]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        if params.len() != self.dim() {
            return Err(Error::dimension(format!("{} parameters", self.dim()), params.len()));
        }
        Ok(())
    }

    fn logits(&self, params: &[f64], x: &[f64; FEATURE_DIM]) -> [f64; NUM_CLASSES] {
        let mut z = [0.0; NUM_CLASSES];
        for (c, zc) in z.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (f, xf) in x.iter().enumerate() {
                acc += params[f * NUM_CLASSES + c] * xf;
            }
            if self.class_bias {
                acc += params[FEATURE_DIM * NUM_CLASSES + c];
            }
            *zc = acc;
        }
        z
    }

    /// Mean loss over `batch`: squared error or softmax cross-entropy.
    pub fn loss(&self, params: &[f64], batch: &[Sample]) -> Result<f64> {
        self.check(params, batch)?;
        let mut total = 0.0;
        for s in batch {
            total += match (self.kind, s) {
                (TaskKind::Regression, Sample::Scalar { y }) => (params[0] - y).powi(2),
                (TaskKind::Classification, Sample::Labeled { x, class }) => {
                    let z = self.logits(params, x);
                    log_sum_exp(&z) - z[*class]
                }
                _ => return Err(sample_mismatch(self.kind)),
            };
        }
        Ok(total / batch.len() as f64)
    }

    /// Gradient of [`TaskSpec::loss`] with respect to the parameters.
    pub fn gradient(&self, params: &[f64], batch: &[Sample]) -> Result<Vec<f64>> {
        self.check(params, batch)?;
        let mut grad = vec![0.0; self.dim()];
        for s in batch {
            match (self.kind, s) {
                (TaskKind::Regression, Sample::Scalar { y }) => grad[0] += 2.0 * (params[0] - y),
                (TaskKind::Classification, Sample::Labeled { x, class }) => {
                    let probs = softmax(&self.logits(params, x));
                    for (c, pc) in probs.iter().enumerate() {
                        let delta = pc - if c == *class { 1.0 } else { 0.0 };
                        for (f, xf) in x.iter().enumerate() {
                            grad[f * NUM_CLASSES + c] += delta * xf;
                        }
                        if self.class_bias {
                            grad[FEATURE_DIM * NUM_CLASSES + c] += delta;
                        }
                    }
                }
                _ => return Err(sample_mismatch(self.kind)),
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok(grad)
    }

    /// Fraction of correctly classified samples; `None` for regression.
    pub fn accuracy(&self, params: &[f64], samples: &[Sample]) -> Result<Option<f64>> {
        if self.kind == TaskKind::Regression {
            return Ok(None);
        }
        self.check(params, samples)?;
        let mut correct = 0usize;
        for s in samples {
            let Sample::Labeled { x, class } = s else {
                return Err(sample_mismatch(self.kind));
            };
            let z = self.logits(params, x);
            // ties resolve to the lowest class index
            let predicted = (0..NUM_CLASSES).fold(0, |best, c| if z[c] > z[best] { c } else { best });
            correct += usize::from(predicted == *class);
        }
        Ok(Some(correct as f64 / samples.len() as f64))
    }
}

fn sample_mismatch(kind: TaskKind) -> Error {
    Error::Domain(format!("sample type does not match {kind:?} task"))
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = z.map(|v| (v - m).exp());
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Mean gradient of the task loss over a nonempty batch.
pub fn local_gradient(task: &TaskSpec, params: &[f64], batch: &[Sample]) -> Result<Vec<f64>> {
    task.gradient(params, batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_gradient_values() {
        let task = TaskSpec::regression();
        let batch: Vec<Sample> = [1.0, 2.0, 6.0].iter().map(|&y| Sample::Scalar { y }).collect();
        assert_eq!(task.gradient(&[3.0], &batch).unwrap(), vec![0.0]);
        assert_eq!(task.gradient(&[1.0], &[Sample::Scalar { y: 0.0 }]).unwrap(), vec![2.0]);
        assert_eq!(task.loss(&[1.0], &[Sample::Scalar { y: 0.0 }]).unwrap(), 1.0);
        assert!(task.accuracy(&[0.0], &batch).unwrap().is_none());
    }

    #[test]
    fn empty_batch_and_mismatches_are_errors() {
        let task = TaskSpec::regression();
        assert!(matches!(task.gradient(&[0.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(task.gradient(&[0.0, 1.0], &[Sample::Scalar { y: 0.0 }]), Err(Error::Dimension { .. })));
        let labeled = [Sample::Labeled { x: [0.0, 0.0], class: 0 }];
        assert!(task.gradient(&[0.0], &labeled).is_err());
    }

    #[test]
    fn classification_dims() {
        assert_eq!(TaskSpec::classification(true).dim(), 12);
        assert_eq!(TaskSpec::classification(false).dim(), 8);
    }

    #[test]
    fn uniform_logits_give_log4_loss() {
        let task = TaskSpec::classification(true);
        let batch = [Sample::Labeled { x: [0.3, -0.2], class: 2 }];
        let loss = task.loss(&[0.0; 12], &batch).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        // gradient for the bias row is p - onehot = 1/4 - [0,0,1,0]
        let g = task.gradient(&[0.0; 12], &batch).unwrap();
        assert_eq!(&g[8..], &[0.25, 0.25, -0.75, 0.25]);
    }

    #[test]
    fn accuracy_counts_argmax() {
        let task = TaskSpec::classification(true);
        let mut params = vec![0.0; 12];
        params[8 + 1] = 1.0; // always predicts class 1
        let samples = [Sample::Labeled { x: [0.0, 0.0], class: 1 }, Sample::Labeled { x: [1.0, 0.0], class: 0 }];
        assert_eq!(task.accuracy(&params, &samples).unwrap(), Some(0.5));
    }

    #[test]
    fn large_logits_stay_finite() {
        let task = TaskSpec::classification(false);
        let params = vec![1e5, -1e5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let batch = [Sample::Labeled { x: [1.0, 0.0], class: 1 }];
        let loss = task.loss(&params, &batch).unwrap();
        assert!((loss - 2e5).abs() < 1e-6);
        assert!(task.gradient(&params, &batch).unwrap().iter().all(|g| g.is_finite()));
    }
}
