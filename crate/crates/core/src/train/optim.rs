//! Adadelta and global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{ParamStore, Tensor};

/// Rescales all non-frozen gradients so their joint L2 norm is at most
/// `threshold`. A norm exactly at the threshold is left alone. Returns the
/// norm before scaling and the factor applied.
pub fn clip_global_norm<T: Real>(params: &mut ParamStore<T>, threshold: f64) -> Result<(f64, f64)> {
    let sq: f64 = params
        .iter()
        .filter(|p| !p.frozen)
        .flat_map(|p| p.grad.data().iter())
        .map(|g| g.as_f64() * g.as_f64())
        .sum();
    let norm = sq.sqrt();
    if !norm.is_finite() {
        return Err(Error::Numeric(format!("gradient norm is {norm}")));
    }
    if norm <= threshold {
        return Ok((norm, 1.0));
    }
    let scale = threshold / norm;
    let s = T::of(scale);
    for p in params.iter_mut().filter(|p| !p.frozen) {
        p.grad.data_mut().iter_mut().for_each(|g| *g *= s);
    }
    Ok((norm, scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub eps: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        AdadeltaConfig { rho: 0.9, eps: 1e-6 }
    }
}

/// Running averages of squared gradients (`eg2`) and squared updates
/// (`edx2`), one pair of tensors per parameter in registration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Adadelta<T> {
    pub config: AdadeltaConfig,
    pub eg2: Vec<Tensor<T>>,
    pub edx2: Vec<Tensor<T>>,
}

impl<T: Real> Adadelta<T> {
    pub fn new(config: AdadeltaConfig, params: &ParamStore<T>) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        Adadelta { config, eg2: zeros(), edx2: zeros() }
    }

    /// ```text
    /// Eg2  <- rho Eg2 + (1 - rho) g^2
    /// dx    = -sqrt(Edx2 + eps) / sqrt(Eg2 + eps) * g
    /// Edx2 <- rho Edx2 + (1 - rho) dx^2
    /// x    <- x + dx
    /// ```
    /// Frozen parameters and their accumulators are not touched.
    pub fn step(&mut self, params: &mut ParamStore<T>) -> Result<()> {
        if self.eg2.len() != params.len() {
            return Err(Error::State(format!("optimizer tracks {} tensors, model has {}", self.eg2.len(), params.len())));
        }
        let rho = T::of(self.config.rho);
        let one_minus = T::of(1.0 - self.config.rho);
        let eps = T::of(self.config.eps);
        for ((p, eg2), edx2) in params.iter_mut().zip(&mut self.eg2).zip(&mut self.edx2) {
            if eg2.shape() != p.value.shape() || edx2.shape() != p.value.shape() {
                return Err(Error::State(format!("optimizer state shape mismatch for {:?}", p.name)));
            }
            if p.frozen {
                continue;
            }
            let it = p.value.data_mut().iter_mut().zip(p.grad.data()).zip(eg2.data_mut()).zip(edx2.data_mut());
            for (((x, &g), eg), ed) in it {
                *eg = rho * *eg + one_minus * g * g;
                let dx = -((*ed + eps).sqrt() / (*eg + eps).sqrt()) * g;
                *ed = rho * *ed + one_minus * dx * dx;
                *x += dx;
            }
        }
        Ok(())
    }
}
