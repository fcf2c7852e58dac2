//! Confining potential profiles and the uniform sampling grid.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Potential at one point: a finite energy, or an impenetrable wall.
///
/// The wall is a dedicated sentinel the eigensolver turns into a Dirichlet
/// row; it is never a floating-point infinity fed into arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialValue {
    /// Potential energy in joules.
    Finite(f64),
    /// Hard wall: the wavefunction is pinned to zero here.
    HardWall,
}

impl PotentialValue {
    pub fn is_wall(self) -> bool {
        matches!(self, PotentialValue::HardWall)
    }

    /// The finite value, or `None` at a wall.
    pub fn finite(self) -> Option<f64> {
        match self {
            PotentialValue::Finite(v) => Some(v),
            PotentialValue::HardWall => None,
        }
    }
}

/// Sigmoid absorber ceiling, rising with z:
/// v0 / (1 + exp(−(z − z_wall)/diffuseness)).
#[derive(Debug, Clone, PartialEq)]
pub struct WoodSaxonParams {
    /// Barrier height, J.
    pub v0: f64,
    /// Wall midpoint position, m.
    pub z_wall: f64,
    /// Edge softness, m.
    pub diffuseness: f64,
}

impl WoodSaxonParams {
    pub fn new(v0: f64, z_wall: f64, diffuseness: f64) -> Result<Self> {
        for (name, v) in [
            ("v0", v0),
            ("z_wall", z_wall),
            ("diffuseness", diffuseness),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    "WoodSaxonParams",
                    format!("{name} must be finite and > 0, got {v:e}"),
                ));
            }
        }
        Ok(WoodSaxonParams {
            v0,
            z_wall,
            diffuseness,
        })
    }

    /// Barrier contribution at height z, J.
    pub fn barrier(&self, z: f64) -> f64 {
        // exp overflows to +inf far below the wall; v0/inf is a clean 0.
        self.v0 / (1.0 + (-(z - self.z_wall) / self.diffuseness).exp())
    }
}

/// Confining potential configurations.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// Hard walls at z = 0 and z = width; zero inside the open interval.
    InfiniteBox { width: f64 },
    /// Hard mirror at z = 0, linear gravity m·g·z above.
    GravityFloor,
    /// Mirror and gravity plus a soft absorber ceiling. `slit` is the
    /// nominal mirror-absorber gap; the ceiling midpoint sits at
    /// `absorber.z_wall`.
    GravityWithAbsorber {
        slit: f64,
        absorber: WoodSaxonParams,
    },
    /// Piecewise-linear interpolation of (z, V) samples; queries outside
    /// the sampled range are errors.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl PotentialSpec {
    pub fn infinite_box(width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::invalid(
                "PotentialSpec",
                format!("box width must be finite and > 0, got {width:e}"),
            ));
        }
        Ok(PotentialSpec::InfiniteBox { width })
    }

    pub fn gravity_floor() -> Self {
        PotentialSpec::GravityFloor
    }

    pub fn gravity_with_absorber(slit: f64, absorber: WoodSaxonParams) -> Result<Self> {
        if !slit.is_finite() || slit <= 0.0 {
            return Err(Error::invalid(
                "PotentialSpec",
                format!("slit width must be finite and > 0, got {slit:e}"),
            ));
        }
        Ok(PotentialSpec::GravityWithAbsorber { slit, absorber })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(
                "PotentialSpec",
                "tabulated potential needs at least 2 samples",
            ));
        }
        if samples.iter().any(|&(z, v)| !z.is_finite() || !v.is_finite()) {
            return Err(Error::invalid(
                "PotentialSpec",
                "tabulated samples must be finite",
            ));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "PotentialSpec",
                    format!(
                        "tabulated z values must be strictly increasing ({:e} then {:e})",
                        w[0].0, w[1].0
                    ),
                ));
            }
        }
        Ok(PotentialSpec::Tabulated { samples })
    }

    /// Potential energy at height z.
    pub fn evaluate(&self, consts: &PhysicalConstants, z: f64) -> Result<PotentialValue> {
        if !z.is_finite() {
            return Err(Error::NonFinite { what: "z" });
        }
        match self {
            PotentialSpec::InfiniteBox { width } => {
                if z > 0.0 && z < *width {
                    Ok(PotentialValue::Finite(0.0))
                } else {
                    Ok(PotentialValue::HardWall)
                }
            }
            PotentialSpec::GravityFloor => {
                if z < 0.0 {
                    Ok(PotentialValue::HardWall)
                } else {
                    Ok(PotentialValue::Finite(consts.mass * consts.g * z))
                }
            }
            PotentialSpec::GravityWithAbsorber { absorber, .. } => {
                if z < 0.0 {
                    Ok(PotentialValue::HardWall)
                } else {
                    Ok(PotentialValue::Finite(
                        consts.mass * consts.g * z + absorber.barrier(z),
                    ))
                }
            }
            PotentialSpec::Tabulated { samples } => {
                let z_min = samples[0].0;
                let z_max = samples[samples.len() - 1].0;
                if z < z_min || z > z_max {
                    return Err(Error::OutOfDomain { z, z_min, z_max });
                }
                let idx = samples.partition_point(|&(zs, _)| zs <= z);
                if idx == samples.len() {
                    return Ok(PotentialValue::Finite(samples[idx - 1].1));
                }
                let (z0, v0) = samples[idx - 1];
                let (z1, v1) = samples[idx];
                let t = (z - z0) / (z1 - z0);
                Ok(PotentialValue::Finite(v0 + t * (v1 - v0)))
            }
        }
    }
}

/// Uniform grid on [z_min, z_max] with at least 16 points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    z_min: f64,
    z_max: f64,
    n_points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::NonFinite { what: "grid range" });
        }
        if z_max <= z_min {
            return Err(Error::invalid(
                "Grid",
                format!("z_max ({z_max:e}) must exceed z_min ({z_min:e})"),
            ));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::invalid(
                "Grid",
                format!("n_points must be >= {}, got {n_points}", Self::MIN_POINTS),
            ));
        }
        Ok(Grid {
            z_min,
            z_max,
            n_points,
        })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Uniform spacing (z_max − z_min)/(n_points − 1).
    pub fn spacing(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    /// Coordinate of the i-th point.
    pub fn z(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        self.z_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.z(i))
    }

    /// Trapezoidal integral of samples taken on this grid.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.n_points, "sample count must match the grid");
        let h = self.spacing();
        let interior: f64 = f[1..f.len() - 1].iter().sum();
        h * (0.5 * (f[0] + f[f.len() - 1]) + interior)
    }
}
