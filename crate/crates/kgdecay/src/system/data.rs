//! Initial data: smooth compact bumps supported in the unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldPair, Grid};
use crate::system::state::SystemState;

/// Radial profile with support in `r < 1` and `f(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Bump {
    /// `(1 - r²)^power`, of class `C^{power-1}` across `r = 1`.
    Poly { power: u32 },
}

impl Default for Bump {
    fn default() -> Self {
        Bump::Poly { power: 6 }
    }
}

impl Bump {
    pub fn validate(&self) -> Result<()> {
        match self {
            Bump::Poly { power } if *power >= 3 => Ok(()),
            Bump::Poly { power } => {
                Err(Error::param("power", format!("need at least 3 for a C² bump, got {power}")))
            }
        }
    }

    /// `(f, f', f'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Bump::Poly { power } => {
                if r >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let p = power as i32;
                let s = 1.0 - r * r;
                let f = s.powi(p);
                let f1 = -2.0 * p as f64 * r * s.powi(p - 1);
                let f2 = -2.0 * p as f64 * s.powi(p - 1)
                    + 4.0 * (p * (p - 1)) as f64 * r * r * s.powi(p - 2);
                (f, f1, f2)
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// 3D Laplacian of the radial function, `f'' + 2 f'/r`.
    pub fn laplacian(&self, r: f64) -> f64 {
        let (_, f1, f2) = self.eval(r);
        if r == 0.0 {
            3.0 * f2
        } else {
            f2 + 2.0 * f1 / r
        }
    }
}

/// Data `(u0, u1, v0, v1) = ε (cu0, cu1, cv0, cv1) · bump(|x - center|)`.
/// `epsilon` is the sup-norm amplitude of the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(flatten)]
    pub bump: Bump,
    pub epsilon: f64,
    #[serde(default)]
    pub u0: f64,
    #[serde(default)]
    pub u1: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub v1: f64,
    /// Box grids only; radial data are always centred.
    #[serde(default)]
    pub center: [f64; 3],
}

impl DataSpec {
    pub fn new(bump: Bump, epsilon: f64, coefs: [f64; 4]) -> Self {
        Self {
            bump,
            epsilon,
            u0: coefs[0],
            u1: coefs[1],
            v0: coefs[2],
            v1: coefs[3],
            center: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bump.validate()?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        let c = [self.u0, self.u1, self.v0, self.v1];
        if c.iter().chain(&self.center).any(|x| !x.is_finite()) {
            return Err(Error::param("data", "coefficients must be finite"));
        }
        Ok(())
    }

    /// Radius of the ball containing the data support.
    pub fn support_radius(&self) -> f64 {
        1.0 + self.center.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Physical samples of the bump on the grid.
    pub fn bump_samples(&self, grid: &Grid) -> Vec<f64> {
        match grid {
            Grid::Radial(g) => g.nodes().iter().map(|&r| self.bump.value(r)).collect(),
            Grid::Box(g) => (0..g.len())
                .map(|i| {
                    let x = g.position(i);
                    let d: f64 = (0..3).map(|a| (x[a] - self.center[a]).powi(2)).sum();
                    self.bump.value(d.sqrt())
                })
                .collect(),
        }
    }

    pub fn initial_state(&self, grid: &Grid, t0: f64) -> Result<SystemState> {
        self.validate()?;
        if matches!(grid, Grid::Radial(_)) && self.center != [0.0; 3] {
            return Err(Error::param("center", "radial data must be centred at the origin"));
        }
        let b = grid.to_native(&self.bump_samples(grid));
        let scaled = |c: f64| b.iter().map(|x| self.epsilon * c * x).collect::<Vec<f64>>();
        Ok(SystemState {
            t: t0,
            u: FieldPair::new(scaled(self.u0), scaled(self.u1))?,
            v: FieldPair::new(scaled(self.v0), scaled(self.v1))?,
        })
    }
}
