use crate::error::{invalid, Result};

/// Weighted particles in phase space. Positions and velocities are stored
/// flat, `dim` coordinates per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub weights: Vec<f64>,
    pub eps: f64,
    pub theta: f64,
}

impl ParticleEnsemble {
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        weights: Vec<f64>,
        eps: f64,
        theta: f64,
    ) -> Result<Self> {
        crate::SpaceDim::new(dim)?;
        let n = weights.len();
        if positions.len() != n * dim || velocities.len() != n * dim {
            return Err(invalid("positions, velocities and weights have inconsistent lengths"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("particle weights must be positive"));
        }
        if positions.iter().chain(&velocities).any(|v| !v.is_finite()) {
            return Err(invalid("particle coordinates must be finite"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid(format!("theta must be nonnegative, got {theta}")));
        }
        Ok(Self {
            dim,
            positions,
            velocities,
            weights,
            eps,
            theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn total_charge(&self) -> f64 {
        crate::kinetic::ordered_sum(&self.weights, |w| *w)
    }
}
