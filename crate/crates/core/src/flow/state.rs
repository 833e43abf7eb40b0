use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{
    band_geometry, reflect_normal, FaceGeometry, NormalProfile, ProfileCurve, RevolutionSurface,
};
use crate::tolerances::DEGENERATE_BAND_REL;

/// Which flow is run and which extra condition closes the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// `a(0) = 1`, `f(k) = 0`.
    PosCone,
    /// `b(0) = 1`, `f(k) = 0`.
    NegCone,
    /// `a(0) = 1`, `b(k) = 1`.
    PosCusp,
    /// `a(0) = 1`, `b(k) = -1`.
    NegCusp,
    /// `PosCone` pins under the unnormalized flow.
    UnnormalizedPosCone,
    /// `PosCusp` pins under the unnormalized flow.
    UnnormalizedPosCusp,
}

/// The pinned condition at the top layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pin {
    /// `f(k) = 0`.
    Cone,
    /// `b(k) = ±1`, equivalently `a(k) = 0` with the sign of `b(k)` fixed.
    Cusp(f64),
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 6] = [
        BoundaryCondition::PosCone,
        BoundaryCondition::NegCone,
        BoundaryCondition::PosCusp,
        BoundaryCondition::NegCusp,
        BoundaryCondition::UnnormalizedPosCone,
        BoundaryCondition::UnnormalizedPosCusp,
    ];

    /// Pinned normal `(a(0), b(0))`.
    pub fn seed(self) -> (f64, f64) {
        match self {
            BoundaryCondition::NegCone => (0.0, 1.0),
            _ => (1.0, 0.0),
        }
    }

    pub fn is_normalized(self) -> bool {
        !matches!(
            self,
            BoundaryCondition::UnnormalizedPosCone | BoundaryCondition::UnnormalizedPosCusp
        )
    }

    pub fn pin(self) -> Pin {
        match self {
            BoundaryCondition::PosCone
            | BoundaryCondition::NegCone
            | BoundaryCondition::UnnormalizedPosCone => Pin::Cone,
            BoundaryCondition::PosCusp | BoundaryCondition::UnnormalizedPosCusp => Pin::Cusp(1.0),
            BoundaryCondition::NegCusp => Pin::Cusp(-1.0),
        }
    }

    /// Same pins with the flow switched between normalized and unnormalized.
    pub fn with_normalized(self, normalized: bool) -> Result<Self> {
        use BoundaryCondition::*;
        Ok(match (self, normalized) {
            (PosCone | UnnormalizedPosCone, true) => PosCone,
            (PosCusp | UnnormalizedPosCusp, true) => PosCusp,
            (PosCone | UnnormalizedPosCone, false) => UnnormalizedPosCone,
            (PosCusp | UnnormalizedPosCusp, false) => UnnormalizedPosCusp,
            (NegCone | NegCusp, true) => self,
            (NegCone | NegCusp, false) => {
                return Err(Error::Config(format!("no unnormalized variant of {self:?}")))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::PosCone => "pos-cone",
            BoundaryCondition::NegCone => "neg-cone",
            BoundaryCondition::PosCusp => "pos-cusp",
            BoundaryCondition::NegCusp => "neg-cusp",
            BoundaryCondition::UnnormalizedPosCone => "unnormalized-pos-cone",
            BoundaryCondition::UnnormalizedPosCusp => "unnormalized-pos-cusp",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundaryCondition::ALL
            .into_iter()
            .find(|bc| bc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown boundary condition {s:?}")))
    }
}

/// Residual above which a state is rejected instead of projected onto its pins.
pub const ACCEPT_RESIDUAL: f64 = 1e-8;

/// The flow unknowns `X = (f(0..=k), Δh(0..k))` plus what is needed to interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    f: Vec<f64>,
    dh: Vec<f64>,
    l: usize,
    bc: BoundaryCondition,
    t: f64,
}

/// Everything the flow needs per layer, derived from `X`.
#[derive(Debug, Clone)]
pub(crate) struct Layers {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub faces: Vec<FaceGeometry>,
}

impl Layers {
    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|g| g.area).sum()
    }

    /// Area-weighted mean of `2K`.
    pub fn r(&self) -> f64 {
        let weighted: f64 = self.faces.iter().map(|g| 2.0 * g.gauss * g.area).sum();
        weighted / self.total_area()
    }
}

/// Normals and face geometry for a raw state vector.
pub(crate) fn evaluate(x: &[f64], k: usize, l: usize, seed: (f64, f64)) -> Result<Layers> {
    let (f, dh) = x.split_at(k + 1);
    let mut a = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    a.push(seed.0);
    b.push(seed.1);
    for n in 0..k {
        if f[n] < 0.0 || !f[n].is_finite() || !dh[n].is_finite() {
            return Err(Error::InvalidProfile(format!("invalid radius f({n}) = {}", f[n])));
        }
        let (an, bn) = reflect_normal(a[n], b[n], f[n + 1] - f[n], dh[n]).ok_or(Error::ZeroEdge(n))?;
        a.push(an);
        b.push(bn);
    }
    if f[k] < 0.0 {
        return Err(Error::InvalidProfile(format!("invalid radius f({k}) = {}", f[k])));
    }
    let scale = f.iter().copied().fold(0.0, f64::max).powi(2);
    let mut h = 0.0;
    let mut faces = Vec::with_capacity(k);
    for n in 0..k {
        let next = h + dh[n];
        faces.push(band_geometry(
            n,
            (f[n], f[n + 1]),
            (h, next),
            (a[n], a[n + 1]),
            (b[n], b[n + 1]),
            l,
            scale,
            DEGENERATE_BAND_REL,
        )?);
        h = next;
    }
    Ok(Layers { a, b, faces })
}

impl FlowState {
    /// Validates the layout and the pinned constraint, then projects onto the pins exactly.
    pub fn new(f: Vec<f64>, dh: Vec<f64>, l: usize, bc: BoundaryCondition) -> Result<Self> {
        let mut state = Self::new_relaxed(f, dh, l, bc)?;
        let layers = state.layers()?;
        let residual = state.residual_with(&layers);
        if residual > ACCEPT_RESIDUAL {
            return Err(Error::Constraint(format!(
                "{} pin violated by {residual:e}",
                bc.name()
            )));
        }
        state.project()?;
        Ok(state)
    }

    /// Checks the layout only; the pins may be violated until [`FlowState::project`].
    pub(crate) fn new_relaxed(f: Vec<f64>, dh: Vec<f64>, l: usize, bc: BoundaryCondition) -> Result<Self> {
        if f.len() < 2 || dh.len() + 1 != f.len() {
            return Err(Error::InvalidProfile(format!(
                "flow state needs k >= 1 with k+1 radii and k height differences, got {} and {}",
                f.len(),
                dh.len()
            )));
        }
        if l < 3 {
            return Err(Error::InvalidProfile(format!("need l >= 3, got {l}")));
        }
        Ok(Self { f, dh, l, bc, t: 0.0 })
    }

    pub fn from_profile(profile: &ProfileCurve, l: usize, bc: BoundaryCondition) -> Result<Self> {
        Self::new(profile.f().to_vec(), profile.height_differences(), l, bc)
    }

    pub(crate) fn from_vector(x: &[f64], like: &FlowState, t: f64) -> Self {
        let k = like.k();
        Self { f: x[..=k].to_vec(), dh: x[k + 1..].to_vec(), l: like.l, bc: like.bc, t }
    }

    pub fn k(&self) -> usize {
        self.dh.len()
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn dh(&self) -> &[f64] {
        &self.dh
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> (f64, f64) {
        self.bc.seed()
    }

    /// Same data, different flow.
    pub fn with_bc(&self, bc: BoundaryCondition) -> Result<Self> {
        Self::new(self.f.clone(), self.dh.clone(), self.l, bc)
    }

    /// `X` as a flat vector of length `2k + 1`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.f.iter().chain(&self.dh).copied().collect()
    }

    /// Absolute heights with `h(0) = 0`.
    pub fn heights(&self) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.f.len());
        h.push(0.0);
        for d in &self.dh {
            h.push(h.last().unwrap() + d);
        }
        h
    }

    pub fn profile(&self) -> Result<ProfileCurve> {
        ProfileCurve::new(self.f.clone(), self.heights())
    }

    pub fn surface(&self) -> Result<RevolutionSurface> {
        RevolutionSurface::new(self.profile()?, self.l)
    }

    pub(crate) fn layers(&self) -> Result<Layers> {
        evaluate(&self.to_vector(), self.k(), self.l, self.seed())
    }

    pub fn normal(&self) -> Result<NormalProfile> {
        let layers = self.layers()?;
        NormalProfile::new_unchecked(layers.a, layers.b)
    }

    pub fn faces(&self) -> Result<Vec<FaceGeometry>> {
        Ok(self.layers()?.faces)
    }

    pub fn total_area(&self) -> Result<f64> {
        Ok(self.layers()?.total_area())
    }

    /// Residual of the pinned top condition: `|f(k)|` for cones, `|b(k) ∓ 1|` for cusps.
    pub fn constraint_residual(&self) -> Result<f64> {
        Ok(self.residual_with(&self.layers()?))
    }

    fn residual_with(&self, layers: &Layers) -> f64 {
        match self.bc.pin() {
            Pin::Cone => self.f[self.k()].abs(),
            Pin::Cusp(target) => (layers.b[self.k()] - target).abs(),
        }
    }

    /// Largest `|K(n) - r/2|`: distance from constant curvature.
    pub fn curvature_spread(&self) -> Result<f64> {
        let layers = self.layers()?;
        let half_r = 0.5 * layers.r();
        Ok(layers.faces.iter().map(|g| (g.gauss - half_r).abs()).fold(0.0, f64::max))
    }

    /// Scales radii and height differences by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.f.iter().map(|v| v * factor).collect(),
            self.dh.iter().map(|v| v * factor).collect(),
            self.l,
            self.bc,
        )
    }

    /// Puts the state exactly on its pins. Cones set `f(k) = 0`; cusps correct
    /// `Δh(k-1)` by Newton steps on `a(k)` until `b(k)` matches the pin.
    pub(crate) fn project(&mut self) -> Result<()> {
        let k = self.k();
        match self.bc.pin() {
            Pin::Cone => self.f[k] = 0.0,
            Pin::Cusp(target) => {
                for _ in 0..30 {
                    let layers = self.layers()?;
                    if (layers.b[k] - target).abs() <= 1e-14 && layers.a[k].abs() <= 1e-12 {
                        break;
                    }
                    let (a_top, slope) = top_normal_slope(&self.f, &self.dh, self.seed());
                    if slope == 0.0 || !slope.is_finite() {
                        return Err(Error::Constraint("cannot correct the cusp pin: flat a(k)".into()));
                    }
                    self.dh[k - 1] -= a_top / slope;
                }
            }
        }
        Ok(())
    }
}

/// `a(k)` and `∂a(k)/∂Δh(k-1)`.
fn top_normal_slope(f: &[f64], dh: &[f64], seed: (f64, f64)) -> (f64, f64) {
    let k = dh.len();
    let (mut a, mut b) = seed;
    for n in 0..k - 1 {
        if let Some(next) = reflect_normal(a, b, f[n + 1] - f[n], dh[n]) {
            (a, b) = next;
        }
    }
    let df = f[k] - f[k - 1];
    let d = dh[k - 1];
    let len2 = df * df + d * d;
    let dot = a * df + b * d;
    let s = 2.0 * dot / len2;
    let ds = 2.0 * b / len2 - 4.0 * dot * d / (len2 * len2);
    (a - s * df, -ds * df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for bc in BoundaryCondition::ALL {
            assert_eq!(bc.name().parse::<BoundaryCondition>().unwrap(), bc);
        }
        assert!("cone".parse::<BoundaryCondition>().is_err());
    }

    #[test]
    fn state_dimension_and_projection() {
        let s = FlowState::new(vec![1.0, 0.5, 1e-10], vec![0.5, 0.5], 12, BoundaryCondition::PosCone).unwrap();
        assert_eq!(s.to_vector().len(), 2 * s.k() + 1);
        assert_eq!(s.f()[2], 0.0);
        assert!(FlowState::new(vec![1.0, 0.5, 0.1], vec![0.5, 0.5], 12, BoundaryCondition::PosCone).is_err());
        assert!(FlowState::new(vec![1.0], vec![], 12, BoundaryCondition::PosCone).is_err());
    }

    #[test]
    fn cusp_projection_reaches_pin() {
        // quarter circle of radius 1 ends with a horizontal normal... perturb the last step
        let k = 4;
        let u: Vec<f64> = (0..=k).map(|n| std::f64::consts::FRAC_PI_2 * n as f64 / k as f64).collect();
        let f: Vec<f64> = u.iter().map(|u| u.cos().max(0.0) + 0.3).collect();
        let mut dh: Vec<f64> = u.windows(2).map(|w| w[1].sin() - w[0].sin()).collect();
        dh[k - 1] += 1e-9;
        let s = FlowState::new(f, dh, 16, BoundaryCondition::PosCusp).unwrap();
        assert!(s.constraint_residual().unwrap() < 1e-14);
        let nu = s.normal().unwrap();
        assert!(nu.a()[k].abs() < 1e-12);
    }
}
