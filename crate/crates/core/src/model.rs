//! Observations, model specifications and synthetic data.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Rng64, RNG_NAME};

/// A planar observation `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
}

impl Observation {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return invalid(format!("non-finite observation ({x}, {y})"));
        }
        Ok(Self { x, y })
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Theta>,
}

/// An ordered sample of planar observations. Order is significant: every
/// reduction over a dataset iterates in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Observation>,
    pub metadata: Option<Provenance>,
}

impl Dataset {
    pub fn new(points: Vec<Observation>) -> Result<Self> {
        if points.is_empty() {
            return invalid("dataset must contain at least one observation");
        }
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return invalid(format!("non-finite observation ({}, {})", p.x, p.y));
        }
        Ok(Self { points, metadata: None })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return invalid(format!("length mismatch: {} x-values, {} y-values", xs.len(), ys.len()));
        }
        Self::new(xs.iter().zip(ys).map(|(&x, &y)| Observation { x, y }).collect())
    }

    pub fn with_metadata(mut self, metadata: Provenance) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn points(&self) -> &[Observation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    /// True when two observations share the same abscissa.
    pub fn has_repeated_x(&self) -> bool {
        let mut xs = self.xs();
        xs.sort_by(f64::total_cmp);
        xs.windows(2).any(|w| w[0] == w[1])
    }

    /// Applies `f` to every observation, keeping order and metadata.
    pub fn map(&self, f: impl Fn(Observation) -> Observation) -> Result<Self> {
        let mut out = Self::new(self.points.iter().copied().map(f).collect())?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }
}

/// A parameter point. In the planar case `coords = [slope, intercept]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Theta(pub Vec<f64>);

impl Theta {
    pub fn planar(a: f64, b: f64) -> Self {
        Theta(vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn a(&self) -> f64 {
        self.0[0]
    }

    pub fn b(&self) -> f64 {
        self.0[1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Theta) -> f64 {
        self.0.iter().zip(&other.0).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.0.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            invalid(format!("non-finite parameter {:?}", self.0))
        }
    }
}

/// Distribution of the additive noise. Every kind is symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Cauchy { scale: f64 },
    /// Uniform on `[-half_width, half_width]`; `half_width = 0` means no noise.
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                invalid(format!("gaussian sigma must be positive, got {sigma}"))
            }
            NoiseSpec::Cauchy { scale } if !(scale > 0.0 && scale.is_finite()) => {
                invalid(format!("cauchy scale must be positive, got {scale}"))
            }
            NoiseSpec::Uniform { half_width } if !(half_width >= 0.0 && half_width.is_finite()) => {
                invalid(format!("uniform half-width must be nonnegative, got {half_width}"))
            }
            _ => Ok(()),
        }
    }

    /// Bounded, symmetric density with a unique strict mode at zero.
    /// The flat uniform density does not qualify.
    pub fn is_strictly_unimodal(&self) -> bool {
        matches!(self, NoiseSpec::Gaussian { .. } | NoiseSpec::Cauchy { .. })
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            NoiseSpec::Cauchy { scale } => {
                let z = x / scale;
                1.0 / (PI * scale * (1.0 + z * z))
            }
            NoiseSpec::Uniform { half_width } => {
                if half_width == 0.0 {
                    if x == 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else if x.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => 0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2)),
            NoiseSpec::Cauchy { scale } => 0.5 + (x / scale).atan() / PI,
            NoiseSpec::Uniform { half_width } => {
                if half_width == 0.0 {
                    if x >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((x + half_width) / (2.0 * half_width)).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Derivative of the density (zero where the uniform density is flat).
    pub fn density_derivative(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => -x / (sigma * sigma) * self.density(x),
            NoiseSpec::Cauchy { scale } => {
                let z = x / scale;
                let d = 1.0 + z * z;
                -2.0 * x / (PI * scale.powi(3) * d * d)
            }
            NoiseSpec::Uniform { .. } => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut Rng64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseSpec::Cauchy { scale } => {
                // u = 0 maps onto the pole of the tangent
                let u = loop {
                    let u: f64 = rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                };
                scale * (PI * (u - 0.5)).tan()
            }
            NoiseSpec::Uniform { half_width } => {
                if half_width == 0.0 {
                    0.0
                } else {
                    rng.gen_range(-half_width..=half_width)
                }
            }
        }
    }
}

/// Distribution of the regressor `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSpec {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    PointMass { value: f64 },
    /// Resample uniformly from a fixed list of abscissae.
    Empirical { values: Vec<f64> },
    /// Cauchy-distributed design: infinite second moment.
    HeavyTailed { location: f64, scale: f64 },
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DesignSpec::Uniform { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                invalid(format!("uniform design requires lo < hi, got [{lo}, {hi}]"))
            }
            DesignSpec::Gaussian { sd, .. } if !(*sd > 0.0 && sd.is_finite()) => {
                invalid(format!("gaussian design sd must be positive, got {sd}"))
            }
            DesignSpec::PointMass { value } if !value.is_finite() => invalid("point mass must be finite"),
            DesignSpec::Empirical { values } if values.is_empty() || values.iter().any(|v| !v.is_finite()) => {
                invalid("empirical design needs a nonempty list of finite values")
            }
            DesignSpec::HeavyTailed { scale, .. } if !(*scale > 0.0 && scale.is_finite()) => {
                invalid(format!("heavy-tailed design scale must be positive, got {scale}"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut Rng64) -> f64 {
        match self {
            DesignSpec::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            DesignSpec::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            DesignSpec::PointMass { value } => *value,
            DesignSpec::Empirical { values } => values[rng.gen_range(0..values.len())],
            DesignSpec::HeavyTailed { location, scale } => {
                NoiseSpec::Cauchy { scale: *scale }.sample(rng) + location
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            DesignSpec::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            DesignSpec::Gaussian { mean, .. } => Some(*mean),
            DesignSpec::PointMass { value } => Some(*value),
            DesignSpec::Empirical { values } => Some(values.iter().sum::<f64>() / values.len() as f64),
            DesignSpec::HeavyTailed { .. } => None,
        }
    }

    /// `E[X^2]`, or `None` when it is infinite.
    pub fn second_moment(&self) -> Option<f64> {
        match self {
            DesignSpec::Uniform { lo, hi } => Some((lo * lo + lo * hi + hi * hi) / 3.0),
            DesignSpec::Gaussian { mean, sd } => Some(mean * mean + sd * sd),
            DesignSpec::PointMass { value } => Some(value * value),
            DesignSpec::Empirical { values } => {
                Some(values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64)
            }
            DesignSpec::HeavyTailed { .. } => None,
        }
    }
}

/// The planar linear model `Y = a0 X + b0 + noise`, with `X` independent of
/// the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub theta0: Theta,
    pub noise: NoiseSpec,
    pub design: DesignSpec,
}

impl ModelSpec {
    pub fn new(a0: f64, b0: f64, noise: NoiseSpec, design: DesignSpec) -> Self {
        Self { theta0: Theta::planar(a0, b0), noise, design }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta0.dim() != 2 {
            return invalid(format!("planar model needs a 2-dimensional theta0, got {}", self.theta0.dim()));
        }
        self.theta0.check_finite()?;
        self.noise.validate()?;
        self.design.validate()
    }

    /// Noise and design independent with a bounded, symmetric, strictly
    /// unimodal noise density.
    pub fn assumption_b_ok(&self) -> bool {
        self.noise.is_strictly_unimodal()
    }

    /// Same model translated so that `theta0 = 0`; responses become pure noise.
    pub fn centered(&self) -> Self {
        Self { theta0: Theta::planar(0.0, 0.0), ..self.clone() }
    }

    pub(crate) fn require_assumption_b(&self) -> Result<()> {
        if self.assumption_b_ok() {
            Ok(())
        } else {
            Err(Error::AssumptionViolated(format!(
                "noise {:?} is not bounded, symmetric and strictly unimodal",
                self.noise
            )))
        }
    }
}

/// A point of the parameter plane seen as a line: `b = slope * a + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualLine {
    pub slope: f64,
    pub intercept: f64,
}

impl DualLine {
    pub fn at(&self, a: f64) -> f64 {
        self.slope * a + self.intercept
    }
}

/// Draws `n` i.i.d. observations from `spec`. Pure in `(spec, n, seed)`.
pub fn gen_dataset(spec: &ModelSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    spec.validate()?;
    let mut rng = rng::stream(seed);
    let (a0, b0) = (spec.theta0.a(), spec.theta0.b());
    let points = (0..n)
        .map(|_| {
            let x = spec.design.sample(&mut rng);
            let eps = spec.noise.sample(&mut rng);
            Observation { x, y: a0 * x + b0 + eps }
        })
        .collect();
    Ok(Dataset::new(points)?.with_metadata(Provenance {
        generator: format!("gen_dataset/{RNG_NAME}"),
        seed,
        n,
        theta0: Some(spec.theta0.clone()),
    }))
}

/// Appends `k` isotropic Gaussian points with the given mean and per-coordinate
/// variance `cov_scale`. The original points are left untouched.
pub fn contaminate_cluster(data: &Dataset, k: usize, mean: (f64, f64), cov_scale: f64, seed: u64) -> Result<Dataset> {
    if !(cov_scale >= 0.0 && cov_scale.is_finite()) {
        return invalid(format!("cov_scale must be nonnegative, got {cov_scale}"));
    }
    if k == 0 {
        return Ok(data.clone());
    }
    let sd = cov_scale.sqrt();
    let mut rng = rng::stream(seed);
    let mut points = data.points().to_vec();
    for _ in 0..k {
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        points.push(Observation::new(mean.0 + sd * zx, mean.1 + sd * zy)?);
    }
    let mut out = Dataset::new(points)?;
    out.metadata = data.metadata.clone();
    Ok(out)
}

/// One line `b = -x a + y` per observation, in dataset order.
pub fn dual_lines(data: &Dataset) -> Vec<DualLine> {
    data.points().iter().map(|p| DualLine { slope: -p.x, intercept: p.y }).collect()
}

/// Subtracts the mean abscissa. Returns the centered data and the shift.
pub fn center_design(data: &Dataset) -> (Dataset, f64) {
    let shift = data.points().iter().map(|p| p.x).sum::<f64>() / data.len() as f64;
    if shift == 0.0 {
        return (data.clone(), 0.0);
    }
    let centered = data
        .map(|p| Observation { x: p.x - shift, y: p.y })
        .expect("centering keeps observations finite");
    (centered, shift)
}

/// Maps a parameter fitted on centered data back to the original abscissa.
pub fn uncenter_theta(theta: &Theta, shift: f64) -> Theta {
    Theta::planar(theta.a(), theta.b() - theta.a() * shift)
}
