//! Candidate families: the distributions each herding step optimises over.
//!
//! [`ComponentParams`] is the value type (one candidate distribution in
//! optimiser coordinates). The pure queries on it (moments, Jacobians,
//! entropy, sampling, density) are free functions in this module. The
//! behaviour that differs per family during a run (initial state and the
//! stochastic-jump proposal) sits behind [`CandidateFamily`], registered by
//! name in a [`FamilyRegistry`].

pub mod gauss;
pub mod point;
pub mod spin;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap};
use crate::rng::StreamRng;

pub use gauss::SIGMA_FLOOR;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRecord", into = "ParamsRecord")]
pub enum ComponentParams {
    Gauss1D { mu: f64, log_sigma: f64 },
    GaussDiag { mu: Vec<f64>, log_sigma: Vec<f64> },
    SpinBernoulli { logit: Vec<f64> },
    PointMass { x: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    #[serde(rename = "gauss1d")]
    Gauss1D,
    GaussDiag,
    SpinBernoulli,
    PointMass,
}

impl FamilyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Gauss1D => "gauss1d",
            FamilyTag::GaussDiag => "gauss_diag",
            FamilyTag::SpinBernoulli => "spin_bernoulli",
            FamilyTag::PointMass => "point_mass",
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(self, FamilyTag::Gauss1D | FamilyTag::GaussDiag)
    }
}

/// JSON record `{"variant": ..., "params": [...]}`.
#[derive(Serialize, Deserialize)]
struct ParamsRecord {
    variant: FamilyTag,
    params: Vec<f64>,
}

impl From<ComponentParams> for ParamsRecord {
    fn from(p: ComponentParams) -> Self {
        Self {
            variant: p.tag(),
            params: p.coords(),
        }
    }
}

impl TryFrom<ParamsRecord> for ComponentParams {
    type Error = String;

    fn try_from(r: ParamsRecord) -> std::result::Result<Self, String> {
        let p = r.params;
        Ok(match r.variant {
            FamilyTag::Gauss1D => {
                if p.len() != 2 {
                    return Err(format!("gauss1d expects 2 params, got {}", p.len()));
                }
                ComponentParams::Gauss1D {
                    mu: p[0],
                    log_sigma: p[1],
                }
            }
            FamilyTag::GaussDiag => {
                if p.len() % 2 != 0 {
                    return Err("gauss_diag expects an even number of params".into());
                }
                let n = p.len() / 2;
                ComponentParams::GaussDiag {
                    mu: p[..n].to_vec(),
                    log_sigma: p[n..].to_vec(),
                }
            }
            FamilyTag::SpinBernoulli => ComponentParams::SpinBernoulli { logit: p },
            FamilyTag::PointMass => ComponentParams::PointMass { x: p },
        })
    }
}

impl ComponentParams {
    pub fn gauss1d(mu: f64, sigma: f64) -> Self {
        Self::Gauss1D {
            mu,
            log_sigma: sigma.ln(),
        }
    }

    pub fn gauss_diag(mu: Vec<f64>, sigma: &[f64]) -> Self {
        Self::GaussDiag {
            mu,
            log_sigma: sigma.iter().map(|s| s.ln()).collect(),
        }
    }

    pub fn spin_from_probs(p: &[f64]) -> Self {
        Self::SpinBernoulli {
            logit: p.iter().map(|&v| spin::logit(v)).collect(),
        }
    }

    pub fn point(x: Vec<f64>) -> Self {
        Self::PointMass { x }
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            Self::Gauss1D { .. } => FamilyTag::Gauss1D,
            Self::GaussDiag { .. } => FamilyTag::GaussDiag,
            Self::SpinBernoulli { .. } => FamilyTag::SpinBernoulli,
            Self::PointMass { .. } => FamilyTag::PointMass,
        }
    }

    /// Dimension of the space the component lives on.
    pub fn dim(&self) -> usize {
        match self {
            Self::Gauss1D { .. } => 1,
            Self::GaussDiag { mu, .. } => mu.len(),
            Self::SpinBernoulli { logit } => logit.len(),
            Self::PointMass { x } => x.len(),
        }
    }

    /// Optimiser coordinates.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Self::Gauss1D { mu, log_sigma } => vec![*mu, *log_sigma],
            Self::GaussDiag { mu, log_sigma } => mu.iter().chain(log_sigma).copied().collect(),
            Self::SpinBernoulli { logit } => logit.clone(),
            Self::PointMass { x } => x.clone(),
        }
    }

    pub fn set_coords(&mut self, c: &[f64]) {
        match self {
            Self::Gauss1D { mu, log_sigma } => {
                *mu = c[0];
                *log_sigma = c[1];
            }
            Self::GaussDiag { mu, log_sigma } => {
                let n = mu.len();
                mu.copy_from_slice(&c[..n]);
                log_sigma.copy_from_slice(&c[n..]);
            }
            Self::SpinBernoulli { logit } => logit.copy_from_slice(c),
            Self::PointMass { x } => x.copy_from_slice(c),
        }
    }

    /// Location coordinates: Gaussian means or point positions.
    pub fn location(&self) -> Option<Vec<f64>> {
        match self {
            Self::Gauss1D { mu, .. } => Some(vec![*mu]),
            Self::GaussDiag { mu, .. } => Some(mu.clone()),
            Self::PointMass { x } => Some(x.clone()),
            Self::SpinBernoulli { .. } => None,
        }
    }

    /// Enforces `sigma >= 0.01`.
    pub fn clamp_sigma(&mut self) {
        let floor = gauss::log_sigma_floor();
        match self {
            Self::Gauss1D { log_sigma, .. } => *log_sigma = log_sigma.max(floor),
            Self::GaussDiag { log_sigma, .. } => {
                for l in log_sigma.iter_mut() {
                    *l = l.max(floor);
                }
            }
            _ => {}
        }
    }

    /// Per-coordinate standard deviations of a Gaussian component.
    pub fn sigmas(&self) -> Option<Vec<f64>> {
        match self {
            Self::Gauss1D { log_sigma, .. } => Some(vec![log_sigma.exp()]),
            Self::GaussDiag { log_sigma, .. } => Some(log_sigma.iter().map(|l| l.exp()).collect()),
            _ => None,
        }
    }

    /// Per-coordinate `P(x_i = +1)` of a spin component.
    pub fn spin_probs(&self) -> Option<Vec<f64>> {
        match self {
            Self::SpinBernoulli { logit } => Some(spin::probs(logit)),
            _ => None,
        }
    }

    fn means(&self) -> Option<Vec<f64>> {
        match self {
            Self::Gauss1D { mu, .. } => Some(vec![*mu]),
            Self::GaussDiag { mu, .. } => Some(mu.clone()),
            _ => None,
        }
    }
}

/// Whether `params` and `features` form a supported pairing.
pub fn supports(params: &ComponentParams, features: &FeatureMap) -> bool {
    match (params, features.kind()) {
        (ComponentParams::Gauss1D { .. }, FeatureKind::Poly1D { .. }) => true,
        (ComponentParams::GaussDiag { mu, .. }, FeatureKind::CenteredMoments { n_vars, .. }) => {
            mu.len() == *n_vars
        }
        (ComponentParams::SpinBernoulli { logit }, FeatureKind::SpinPairwise { n_spins }) => {
            logit.len() == *n_spins
        }
        (ComponentParams::PointMass { x }, _) => x.len() == features.input_dim(),
        _ => false,
    }
}

fn unsupported(params: &ComponentParams, features: &FeatureMap) -> Error {
    Error::UnsupportedPairing {
        family: params.tag().as_str().to_string(),
        features: features.label(),
    }
}

/// Exact expectations `eta_m(q) = E_q[phi_m]` (raw feature coordinates).
pub fn feature_moments(params: &ComponentParams, features: &FeatureMap) -> Result<Vec<f64>> {
    if !supports(params, features) {
        return Err(unsupported(params, features));
    }
    Ok(match params {
        ComponentParams::Gauss1D { mu, log_sigma } => gauss::moments_1d(*mu, *log_sigma, features),
        ComponentParams::GaussDiag { mu, log_sigma } => gauss::moments_diag(mu, log_sigma, features),
        ComponentParams::SpinBernoulli { logit } => spin::moments(logit, features),
        ComponentParams::PointMass { x } => point::moments(x, features),
    })
}

/// `d eta_m / d coord_k`, one row per feature. Spin components return
/// derivatives with respect to `p_i` (see [`spin::jacobian`]).
pub fn moment_gradients(params: &ComponentParams, features: &FeatureMap) -> Result<Vec<Vec<f64>>> {
    if !supports(params, features) {
        return Err(unsupported(params, features));
    }
    match params {
        ComponentParams::Gauss1D { mu, log_sigma } => Ok(gauss::jacobian_1d(*mu, *log_sigma, features)),
        ComponentParams::GaussDiag { mu, log_sigma } => {
            Ok(gauss::jacobian_diag(mu, log_sigma, features))
        }
        ComponentParams::SpinBernoulli { logit } => Ok(spin::jacobian(logit, features)),
        ComponentParams::PointMass { x } => {
            point::jacobian(x, features).ok_or_else(|| unsupported(params, features))
        }
    }
}

/// Entropy in nats. Point masses are assigned zero.
pub fn entropy(params: &ComponentParams) -> f64 {
    match params {
        ComponentParams::Gauss1D { log_sigma, .. } => gauss::entropy(std::slice::from_ref(log_sigma)),
        ComponentParams::GaussDiag { log_sigma, .. } => gauss::entropy(log_sigma),
        ComponentParams::SpinBernoulli { logit } => spin::entropy(logit),
        ComponentParams::PointMass { .. } => 0.0,
    }
}

/// `dH / d coord` (with respect to `p_i` for spins).
pub fn entropy_gradient(params: &ComponentParams) -> Vec<f64> {
    match params {
        ComponentParams::Gauss1D { .. } => vec![0.0, 1.0],
        ComponentParams::GaussDiag { mu, .. } => {
            let n = mu.len();
            (0..2 * n).map(|k| if k < n { 0.0 } else { 1.0 }).collect()
        }
        ComponentParams::SpinBernoulli { logit } => spin::entropy_gradient(logit),
        ComponentParams::PointMass { x } => vec![0.0; x.len()],
    }
}

pub fn sample<R: Rng + ?Sized>(params: &ComponentParams, rng: &mut R) -> Vec<f64> {
    match params {
        ComponentParams::Gauss1D { mu, log_sigma } => {
            gauss::sample(std::slice::from_ref(mu), std::slice::from_ref(log_sigma), rng)
        }
        ComponentParams::GaussDiag { mu, log_sigma } => gauss::sample(mu, log_sigma, rng),
        ComponentParams::SpinBernoulli { logit } => spin::sample(logit, rng),
        ComponentParams::PointMass { x } => x.clone(),
    }
}

/// Log-density (Gaussian) or log-mass (spin).
pub fn log_density(params: &ComponentParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    match params {
        ComponentParams::Gauss1D { mu, log_sigma } => Ok(gauss::log_density(
            std::slice::from_ref(mu),
            std::slice::from_ref(log_sigma),
            x,
        )),
        ComponentParams::GaussDiag { mu, log_sigma } => Ok(gauss::log_density(mu, log_sigma, x)),
        ComponentParams::SpinBernoulli { logit } => Ok(spin::log_mass(logit, x)),
        ComponentParams::PointMass { .. } => Err(Error::UnsupportedForPointMass),
    }
}

/// Log-probability on a discrete space; point masses put all mass on `x`.
pub fn log_mass(params: &ComponentParams, x: &[f64]) -> Result<f64> {
    match params {
        ComponentParams::PointMass { x: at } => Ok(if at.as_slice() == x {
            0.0
        } else {
            f64::NEG_INFINITY
        }),
        ComponentParams::SpinBernoulli { .. } => log_density(params, x),
        _ => Err(Error::InvalidMixture(
            "probability mass queried on a continuous family".into(),
        )),
    }
}

/// Marginal log-density of coordinate `i` of a Gaussian component.
pub fn marginal_log_density(params: &ComponentParams, i: usize, xi: f64) -> Option<f64> {
    let means = params.means()?;
    let sigmas = params.sigmas()?;
    Some(crate::numeric::normal_ln_pdf(xi, means[i], sigmas[i]))
}

/// Per-coordinate min/max of the location coordinates visited so far in a
/// run; the Gaussian and point jump rules draw uniformly inside it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LocationRange {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl LocationRange {
    pub fn observe(&mut self, params: &ComponentParams) {
        let Some(loc) = params.location() else { return };
        if self.lo.is_empty() {
            self.lo = loc.clone();
            self.hi = loc;
            return;
        }
        for ((lo, hi), v) in self.lo.iter_mut().zip(&mut self.hi).zip(loc) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }

    pub fn bounds(&self, i: usize) -> Option<(f64, f64)> {
        Some((*self.lo.get(i)?, *self.hi.get(i)?))
    }

    fn draw(&self, i: usize, fallback: f64, rng: &mut StreamRng) -> f64 {
        match self.bounds(i) {
            Some((lo, hi)) if hi > lo => rng.random_range(lo..=hi),
            Some((lo, _)) => lo,
            None => fallback,
        }
    }
}

/// Per-family behaviour needed by the herding engines.
pub trait CandidateFamily: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, features: &FeatureMap) -> bool;

    /// Neutral starting component `r^(0)`.
    fn initial(&self, features: &FeatureMap) -> ComponentParams;

    /// Random restart candidate for the stochastic jump.
    fn propose_jump(
        &self,
        current: &ComponentParams,
        seen: &LocationRange,
        features: &FeatureMap,
        rng: &mut StreamRng,
    ) -> ComponentParams;

    /// Warm start of the first inner optimisation. Families whose neutral
    /// start is a stationary point of every objective override this.
    fn break_symmetry(&self, start: &ComponentParams, _rng: &mut StreamRng) -> ComponentParams {
        start.clone()
    }
}

/// `N(0, 1)` start; jumps keep `l` and redraw the mean inside the visited range.
#[derive(Debug, Default)]
pub struct Gauss1DFamily;

impl CandidateFamily for Gauss1DFamily {
    fn name(&self) -> &'static str {
        "gauss1d"
    }

    fn supports(&self, features: &FeatureMap) -> bool {
        matches!(features.kind(), FeatureKind::Poly1D { .. })
    }

    fn initial(&self, _features: &FeatureMap) -> ComponentParams {
        ComponentParams::Gauss1D {
            mu: 0.0,
            log_sigma: 0.0,
        }
    }

    fn propose_jump(
        &self,
        current: &ComponentParams,
        seen: &LocationRange,
        _features: &FeatureMap,
        rng: &mut StreamRng,
    ) -> ComponentParams {
        let ComponentParams::Gauss1D { mu, log_sigma } = current else {
            return current.clone();
        };
        ComponentParams::Gauss1D {
            mu: seen.draw(0, *mu, rng),
            log_sigma: *log_sigma,
        }
    }
}

#[derive(Debug, Default)]
pub struct GaussDiagFamily;

impl CandidateFamily for GaussDiagFamily {
    fn name(&self) -> &'static str {
        "gauss-diag"
    }

    fn supports(&self, features: &FeatureMap) -> bool {
        matches!(features.kind(), FeatureKind::CenteredMoments { .. })
    }

    fn initial(&self, features: &FeatureMap) -> ComponentParams {
        let n = features.input_dim();
        ComponentParams::GaussDiag {
            mu: vec![0.0; n],
            log_sigma: vec![0.0; n],
        }
    }

    fn propose_jump(
        &self,
        current: &ComponentParams,
        seen: &LocationRange,
        _features: &FeatureMap,
        rng: &mut StreamRng,
    ) -> ComponentParams {
        let ComponentParams::GaussDiag { mu, log_sigma } = current else {
            return current.clone();
        };
        ComponentParams::GaussDiag {
            mu: mu.iter().enumerate().map(|(i, m)| seen.draw(i, *m, rng)).collect(),
            log_sigma: log_sigma.clone(),
        }
    }
}

/// `p_i = 1/2` start; jumps randomise the sign of each logit.
#[derive(Debug, Default)]
pub struct SpinFamily;

impl CandidateFamily for SpinFamily {
    fn name(&self) -> &'static str {
        "spin"
    }

    fn supports(&self, features: &FeatureMap) -> bool {
        matches!(features.kind(), FeatureKind::SpinPairwise { .. })
    }

    fn initial(&self, features: &FeatureMap) -> ComponentParams {
        ComponentParams::SpinBernoulli {
            logit: vec![0.0; features.input_dim()],
        }
    }

    fn propose_jump(
        &self,
        current: &ComponentParams,
        _seen: &LocationRange,
        _features: &FeatureMap,
        rng: &mut StreamRng,
    ) -> ComponentParams {
        let ComponentParams::SpinBernoulli { logit } = current else {
            return current.clone();
        };
        ComponentParams::SpinBernoulli {
            logit: logit
                .iter()
                .map(|s| if rng.random::<bool>() { s.abs() } else { -s.abs() })
                .collect(),
        }
    }

    /// At `p_i = 0.5` every pairwise moment has zero gradient and sign flips
    /// are no-ops, so an all-zero start never moves. Small random logits
    /// break the tie.
    fn break_symmetry(&self, start: &ComponentParams, rng: &mut StreamRng) -> ComponentParams {
        match start {
            ComponentParams::SpinBernoulli { logit } if logit.iter().all(|l| *l == 0.0) => {
                ComponentParams::SpinBernoulli {
                    logit: logit.iter().map(|_| rng.random_range(-0.1..0.1)).collect(),
                }
            }
            _ => start.clone(),
        }
    }
}

/// Point masses: origin (or all-up spins) start; jumps redraw the position
/// inside the visited range, or random spins on a spin space.
#[derive(Debug, Default)]
pub struct PointFamily;

impl CandidateFamily for PointFamily {
    fn name(&self) -> &'static str {
        "point"
    }

    fn supports(&self, _features: &FeatureMap) -> bool {
        true
    }

    fn initial(&self, features: &FeatureMap) -> ComponentParams {
        let fill = match features.kind() {
            FeatureKind::SpinPairwise { .. } => 1.0,
            _ => 0.0,
        };
        ComponentParams::PointMass {
            x: vec![fill; features.input_dim()],
        }
    }

    fn propose_jump(
        &self,
        current: &ComponentParams,
        seen: &LocationRange,
        features: &FeatureMap,
        rng: &mut StreamRng,
    ) -> ComponentParams {
        let ComponentParams::PointMass { x } = current else {
            return current.clone();
        };
        let x = match features.kind() {
            FeatureKind::SpinPairwise { .. } => x
                .iter()
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
            _ => x.iter().enumerate().map(|(i, v)| seen.draw(i, *v, rng)).collect(),
        };
        ComponentParams::PointMass { x }
    }
}

/// Name-keyed registry of candidate families.
pub struct FamilyRegistry {
    entries: Vec<Box<dyn CandidateFamily>>,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Gauss1DFamily));
        r.register(Box::new(GaussDiagFamily));
        r.register(Box::new(SpinFamily));
        r.register(Box::new(PointFamily));
        r
    }

    /// Adds `family`, replacing any entry with the same name.
    pub fn register(&mut self, family: Box<dyn CandidateFamily>) {
        self.entries.retain(|f| f.name() != family.name());
        self.entries.push(family);
    }

    pub fn get(&self, name: &str) -> Result<&dyn CandidateFamily> {
        self.entries
            .iter()
            .find(|f| f.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "family",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|f| f.name()).collect()
    }

    /// The smooth family that natively pairs with `features`.
    pub fn default_for(&self, features: &FeatureMap) -> Result<&dyn CandidateFamily> {
        let name = match features.kind() {
            FeatureKind::Poly1D { .. } => "gauss1d",
            FeatureKind::SpinPairwise { .. } => "spin",
            FeatureKind::CenteredMoments { .. } => "gauss-diag",
        };
        self.get(name)
    }
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
