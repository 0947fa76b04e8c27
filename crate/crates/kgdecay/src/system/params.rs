use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::Mass;

/// Coupling constants of the model system
///
/// ```text
/// -□u + m² u = M1 v³ + P^α ∂_α(v²)
/// -□v +    v = N1 (∂_t u)² + N2 u³ + N3 u v
/// ```
///
/// `p[0]` is the time component; `p[1..4]` are Cartesian. On radial grids
/// `p[1]` is read as the radial component `P^r` and `p[2]`, `p[3]` must vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub m: Mass,
    #[serde(default)]
    pub m1: f64,
    #[serde(default)]
    pub n1: f64,
    #[serde(default)]
    pub n2: f64,
    #[serde(default)]
    pub n3: f64,
    #[serde(default)]
    pub p: [f64; 4],
}

impl SystemParams {
    pub fn linear(m: Mass) -> Self {
        Self { m, m1: 0.0, n1: 0.0, n2: 0.0, n3: 0.0, p: [0.0; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m1, self.n1, self.n2, self.n3, self.p[0], self.p[1], self.p[2], self.p[3]];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("params", "coupling constants must be finite"));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        [self.m1, self.n1, self.n2, self.n3].iter().all(|x| *x == 0.0)
            && self.p.iter().all(|x| *x == 0.0)
    }
}

/// `c · Q_{αβ}(u, v)` with `Q_{αβ}(u, v) = ∂_α u ∂_β v - ∂_β u ∂_α v`.
/// Index 0 is time, 1..=3 Cartesian; on radial grids 1 means `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullForm {
    pub alpha: usize,
    pub beta: usize,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Model,
    ModelPlusStrongNull {
        forms: Vec<NullForm>,
    },
    /// `u` source `(2 - m²) v² + 2 ∂_α v ∂^α v`, `v` source `qv · v³`.
    Type2Pair {
        #[serde(default = "default_qv")]
        qv: f64,
    },
}

fn default_qv() -> f64 {
    1.0
}

impl Default for Preset {
    fn default() -> Self {
        Preset::Model
    }
}

impl Preset {
    pub fn validate(&self) -> Result<()> {
        match self {
            Preset::Model => Ok(()),
            Preset::ModelPlusStrongNull { forms } => {
                for f in forms {
                    if f.alpha > 3 || f.beta > 3 || !f.coef.is_finite() {
                        return Err(Error::param(
                            "null_forms",
                            format!("bad entry ({}, {}, {})", f.alpha, f.beta, f.coef),
                        ));
                    }
                }
                Ok(())
            }
            Preset::Type2Pair { qv } => {
                if qv.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("qv", "must be finite"))
                }
            }
        }
    }
}
