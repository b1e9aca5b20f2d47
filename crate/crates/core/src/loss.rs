//! Training objective: per-map binary cross entropy, the prediction-mass
//! penalty, their weighted total, and the analytic gradient.

use thiserror::Error;

use crate::scalar::{lit, Real};
use crate::types::{Grid, TargetGrid};

/// Predictions are clamped into `[EPS_CLAMP, 1 - EPS_CLAMP]` before any log.
pub const EPS_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("dimension mismatch: target {target:?}, prediction {prediction:?}")]
    DimensionMismatch {
        target: (usize, usize),
        prediction: (usize, usize),
    },
    #[error("non-finite value in prediction")]
    NonFiniteInput,
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
}

/// Weights of the occupancy BCE, the occupancy mass term and the cut BCE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: lit(0.1),
            gamma: T::one(),
        }
    }
}

impl<T: Real> LossWeights<T> {
    pub fn new(alpha: T, beta: T, gamma: T) -> Result<Self, LossError> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < T::zero() {
                return Err(LossError::InvalidWeights(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

fn clamp<T: Real>(v: T) -> T {
    let eps: T = lit(EPS_CLAMP);
    v.max(eps).min(T::one() - eps)
}

fn check_finite<T: Real>(m: &Grid<T>) -> Result<(), LossError> {
    if m.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LossError::NonFiniteInput)
    }
}

fn check_dims<T>(y: &Grid<u8>, yhat: &Grid<T>) -> Result<(), LossError>
where
    T: Copy,
{
    if y.dims() == yhat.dims() {
        Ok(())
    } else {
        Err(LossError::DimensionMismatch {
            target: y.dims(),
            prediction: yhat.dims(),
        })
    }
}

fn count<T: Real>(n: usize) -> T {
    T::from_usize(n.max(1)).unwrap_or_else(T::one)
}

/// Mean binary cross entropy with natural log over clamped predictions.
pub fn bce_loss<T: Real>(y: &Grid<u8>, yhat: &Grid<T>) -> Result<T, LossError> {
    check_dims(y, yhat)?;
    check_finite(yhat)?;
    let total: T = y
        .as_slice()
        .iter()
        .zip(yhat.as_slice())
        .map(|(&t, &p)| {
            let p = clamp(p);
            if t == 1 {
                p.ln()
            } else {
                (T::one() - p).ln()
            }
        })
        .sum();
    Ok(-total / count(y.len()))
}

/// Mean predicted mass. Positive, so minimizing it suppresses predictions.
pub fn sum_loss<T: Real>(yhat: &Grid<T>) -> Result<T, LossError> {
    check_finite(yhat)?;
    let total: T = yhat.as_slice().iter().copied().sum();
    Ok(total / count(yhat.len()))
}

/// Predicted occupancy and cut maps with their binary targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPair<T> {
    target: TargetGrid,
    occ: Grid<T>,
    cut: Grid<T>,
}

impl<T: Real> PredictionPair<T> {
    /// Checks dimensions and finiteness, and clamps both maps.
    pub fn new(target: TargetGrid, occ: Grid<T>, cut: Grid<T>) -> Result<Self, LossError> {
        check_dims(target.occ(), &occ)?;
        check_dims(target.cut(), &cut)?;
        check_finite(&occ)?;
        check_finite(&cut)?;
        Ok(Self {
            target,
            occ: occ.map(clamp),
            cut: cut.map(clamp),
        })
    }

    pub fn target(&self) -> &TargetGrid {
        &self.target
    }
    pub fn occ(&self) -> &Grid<T> {
        &self.occ
    }
    pub fn cut(&self) -> &Grid<T> {
        &self.cut
    }
}

/// `alpha * BCE(occ) + beta * mass(occ) + gamma * BCE(cut)`.
pub fn total_loss<T: Real>(pred: &PredictionPair<T>, w: &LossWeights<T>) -> Result<T, LossError> {
    w.validate()?;
    let occ = bce_loss(pred.target.occ(), &pred.occ)?;
    let mass = sum_loss(&pred.occ)?;
    let cut = bce_loss(pred.target.cut(), &pred.cut)?;
    Ok(w.alpha * occ + w.beta * mass + w.gamma * cut)
}

fn bce_gradient<T: Real>(y: &Grid<u8>, yhat: &Grid<T>, scale: T) -> Vec<T> {
    let n = count::<T>(y.len());
    y.as_slice()
        .iter()
        .zip(yhat.as_slice())
        .map(|(&t, &p)| {
            let t = if t == 1 { T::one() } else { T::zero() };
            -scale / n * (t / p - (T::one() - t) / (T::one() - p))
        })
        .collect()
}

/// Gradient of [`total_loss`] with respect to the occupancy and cut maps.
pub fn loss_gradient<T: Real>(pred: &PredictionPair<T>, w: &LossWeights<T>) -> Result<(Grid<T>, Grid<T>), LossError> {
    w.validate()?;
    let (rows, cols) = pred.occ.dims();
    let n = count::<T>(pred.occ.len());
    let occ: Vec<T> = bce_gradient(pred.target.occ(), &pred.occ, w.alpha)
        .into_iter()
        .map(|g| g + w.beta / n)
        .collect();
    let cut = bce_gradient(pred.target.cut(), &pred.cut, w.gamma);
    let occ = Grid::from_vec(rows, cols, occ).expect("gradient has prediction dims");
    let cut = Grid::from_vec(rows, cols, cut).expect("gradient has prediction dims");
    Ok((occ, cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::GridSpec;

    fn g(rows: usize, cols: usize, v: Vec<f64>) -> Grid<f64> {
        Grid::from_vec(rows, cols, v).unwrap()
    }

    fn y(rows: usize, cols: usize, v: Vec<u8>) -> Grid<u8> {
        Grid::from_vec(rows, cols, v).unwrap()
    }

    #[test]
    fn bce_examples() {
        let l = bce_loss(&y(1, 2, vec![1, 0]), &g(1, 2, vec![0.5, 0.5])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let l = bce_loss(&y(1, 1, vec![1]), &g(1, 1, vec![0.25])).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
        let l = bce_loss(&y(1, 2, vec![1, 0]), &g(1, 2, vec![1.0, 0.0])).unwrap();
        assert!((l - -(1.0 - EPS_CLAMP).ln()).abs() < 1e-15);
        assert!(l > 0.0 && l < 1.1e-7);
    }

    #[test]
    fn bce_errors() {
        assert!(matches!(
            bce_loss(&y(1, 2, vec![1, 0]), &g(2, 1, vec![0.5, 0.5])),
            Err(LossError::DimensionMismatch { .. })
        ));
        assert_eq!(
            bce_loss(&y(1, 1, vec![1]), &g(1, 1, vec![f64::NAN])),
            Err(LossError::NonFiniteInput)
        );
    }

    #[test]
    fn sum_examples() {
        assert_eq!(sum_loss(&g(2, 2, vec![0.0; 4])).unwrap(), 0.0);
        assert_eq!(sum_loss(&g(2, 2, vec![0.5; 4])).unwrap(), 0.5);
        assert_eq!(sum_loss(&g(2, 2, vec![1.0, 0.0, 0.0, 1.0])).unwrap(), 0.5);
    }

    fn pair(occ_t: Vec<u8>, cut_t: Vec<u8>, occ: Vec<f64>, cut: Vec<f64>) -> PredictionPair<f64> {
        let grid = GridSpec::from_cells(2, 2, 1).unwrap();
        let t = TargetGrid::new(y(2, 2, occ_t), y(2, 2, cut_t), grid).unwrap();
        PredictionPair::new(t, g(2, 2, occ), g(2, 2, cut)).unwrap()
    }

    #[test]
    fn total_isolates_terms() {
        let p = pair(
            vec![1, 0, 0, 0],
            vec![1, 0, 0, 0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
        );
        let l = total_loss(&p, &LossWeights::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(l.abs() < 1e-6);
        let p = pair(vec![1, 0, 0, 0], vec![0; 4], vec![0.5; 4], vec![0.3; 4]);
        let l = total_loss(&p, &LossWeights::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let grid = GridSpec::from_cells(1, 1, 1).unwrap();
        let t = TargetGrid::new(y(1, 1, vec![1]), y(1, 1, vec![0]), grid).unwrap();
        let p = PredictionPair::new(t, g(1, 1, vec![0.5]), g(1, 1, vec![0.5])).unwrap();
        let (go, _) = loss_gradient(&p, &LossWeights::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((go.get(0, 0) + 2.0).abs() < 1e-15);

        let p = pair(vec![1, 0, 0, 1], vec![0; 4], vec![0.2, 0.4, 0.6, 0.8], vec![0.5; 4]);
        let (go, gc) = loss_gradient(&p, &LossWeights::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(go.as_slice().iter().all(|&v| v == 0.25));
        assert!(gc.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::new(-1.0, 0.0, 0.0).is_err());
        assert!(LossWeights::new(1.0, f64::NAN, 0.0).is_err());
        let w: LossWeights<f64> = LossWeights::default();
        assert_eq!((w.alpha, w.beta, w.gamma), (1.0, 0.1, 1.0));
    }

    #[test]
    fn f32_instantiation() {
        let l = bce_loss(&y(1, 2, vec![1, 0]), &Grid::from_vec(1, 2, vec![0.5f32, 0.5]).unwrap()).unwrap();
        assert!((l - std::f32::consts::LN_2).abs() < 1e-6);
    }
}
