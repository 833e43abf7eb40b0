//! Closed-form discrete surfaces of revolution with constant Gaussian curvature,
//! the discrete catenoid, discrete Delaunay surfaces as parallel surfaces, and the
//! smooth profile curves they are compared against.
//!
//! Every family shares the smooth functions `f(u)` and `a(u)` with its smooth
//! counterpart; the heights follow from `Δh/Δf = Δb/Δa` along each profile edge,
//! summed outward from `h(0) = 0` in both directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::surface::{NormalProfile, ProfileCurve};

/// Absolute tolerance for the smooth height integrals.
pub const SMOOTH_ABS_TOL: f64 = 1e-12;

/// Square-root arguments in `(-ROOT_SLACK, 0)` are treated as zero (rounding at a
/// domain endpoint such as `p sin u = 1`).
const ROOT_SLACK: f64 = 1e-13;

/// Strictly monotonic parameters `u_n` for `n = k1..=k2`, with `n = 0` present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    values: Vec<f64>,
    zero: usize,
}

impl SampleGrid {
    /// `values[i]` is `u_n` with `n = i - zero`.
    pub fn new(values: Vec<f64>, zero: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if zero >= values.len() {
            return Err(Error::InvalidGrid(format!("index 0 is outside the {} samples", values.len())));
        }
        if let Some(bad) = values.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidGrid(format!("sample {bad} is not finite")));
        }
        if values.len() > 1 {
            let increasing = values[1] > values[0];
            let monotone = values
                .windows(2)
                .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
            if !monotone {
                return Err(Error::InvalidGrid("samples are not strictly monotonic".into()));
            }
        }
        Ok(Self { values, zero })
    }

    /// Samples for `n = 0..len`.
    pub fn from_start(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0)
    }

    /// `u_n = u_of(n)` for `n = k1..=k2`.
    pub fn from_fn(k1: i64, k2: i64, u_of: impl Fn(f64) -> f64) -> Result<Self> {
        if k1 > 0 || k2 < 0 {
            return Err(Error::InvalidGrid(format!("range {k1}..={k2} must contain 0")));
        }
        let values = (k1..=k2).map(|n| u_of(n as f64)).collect();
        Self::new(values, (-k1) as usize)
    }

    /// `count` equally spaced samples from `a` to `b`, starting at `n = 0`.
    pub fn linspace(a: f64, b: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid("linspace needs at least two samples".into()));
        }
        let step = (b - a) / (count - 1) as f64;
        Self::from_start((0..count).map(|i| if i + 1 == count { b } else { a + step * i as f64 }).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Lowest index `k1 ≤ 0`.
    pub fn first_index(&self) -> i64 {
        -(self.zero as i64)
    }

    /// Highest index `k2 ≥ 0`.
    pub fn last_index(&self) -> i64 {
        (self.values.len() - 1 - self.zero) as i64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_decreasing(&self) -> bool {
        self.values.len() > 1 && self.values[1] < self.values[0]
    }

    /// `u_n` for the signed index `n`.
    pub fn at(&self, n: i64) -> Option<f64> {
        let i = n + self.zero as i64;
        (0..self.values.len() as i64).contains(&i).then(|| self.values[i as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The parametrized families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CgcFamily {
    /// `K = c > 0`: sphere (`p√c = 1`), spindle (`p√c < 1`) or bulge (`p√c > 1`).
    SpherePositive { p: f64, c: f64 },
    /// `K = -1`, `f = 1/cosh u`.
    Pseudosphere,
    /// `K = -1`, `f = p cosh u`.
    CoshNegative { p: f64 },
    /// `K = -1`, `f = q sinh u`, `0 < q < 1`, sampled with decreasing `u`.
    SinhNegative { q: f64 },
    /// `H = 0`, `f = cosh u`.
    Catenoid,
    /// Parallel surface at distance `ε/√c` of a `K = c` surface; constant `H`.
    Delaunay { p: f64, c: f64, eps: Sign },
}

impl CgcFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DomainViolation(msg));
        match *self {
            CgcFamily::SpherePositive { p, c } | CgcFamily::Delaunay { p, c, .. } => {
                if !(p > 0.0 && p.is_finite()) {
                    return bad(format!("p must be positive, got {p}"));
                }
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("c must be positive, got {c}"));
                }
            }
            CgcFamily::CoshNegative { p } => {
                if !(p > 0.0 && p.is_finite()) {
                    return bad(format!("p must be positive, got {p}"));
                }
            }
            CgcFamily::SinhNegative { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return bad(format!("q must lie in (0, 1), got {q}"));
                }
            }
            CgcFamily::Pseudosphere | CgcFamily::Catenoid => {}
        }
        Ok(())
    }

    /// Constant Gaussian curvature of the family, if it has one.
    pub fn gauss_curvature(&self) -> Option<f64> {
        match *self {
            CgcFamily::SpherePositive { c, .. } => Some(c),
            CgcFamily::Pseudosphere | CgcFamily::CoshNegative { .. } | CgcFamily::SinhNegative { .. } => {
                Some(-1.0)
            }
            CgcFamily::Catenoid | CgcFamily::Delaunay { .. } => None,
        }
    }

    /// Discrete profile and normal on the given grid.
    pub fn discretize(&self, grid: &SampleGrid) -> Result<(ProfileCurve, NormalProfile)> {
        match *self {
            CgcFamily::SpherePositive { p, c } => cgc_positive(p, c, grid),
            CgcFamily::Pseudosphere | CgcFamily::CoshNegative { .. } | CgcFamily::SinhNegative { .. } => {
                cgc_negative(self, grid)
            }
            CgcFamily::Catenoid => catenoid(grid),
            CgcFamily::Delaunay { p, c, eps } => delaunay(p, c, eps, grid),
        }
    }

    /// Smooth profile point at parameter `u`.
    pub fn smooth(&self, u: f64) -> Result<(f64, f64)> {
        smooth_reference(self, u)
    }
}

fn checked_root(arg: f64, what: &str, u: f64) -> Result<f64> {
    if arg >= 0.0 {
        Ok(arg.sqrt())
    } else if arg > -ROOT_SLACK {
        Ok(0.0)
    } else {
        Err(Error::DomainViolation(format!("{what} = {arg} < 0 at u = {u}")))
    }
}

fn snap_radius(f: f64, scale: f64) -> f64 {
    if f.abs() < 1e-14 * scale {
        0.0
    } else {
        f
    }
}

/// Per-family sample functions used by the common builder.
struct Sampled {
    f: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Sums `step(from, to)` outward from the zero index; `step` returns the height
/// increment of the edge `u_from → u_to`.
fn heights(grid: &SampleGrid, mut step: impl FnMut(usize, usize) -> Result<f64>) -> Result<Vec<f64>> {
    let len = grid.len();
    let z = grid.zero_index();
    let mut h = vec![0.0; len];
    for i in z + 1..len {
        h[i] = h[i - 1] + step(i - 1, i)?;
    }
    for i in (0..z).rev() {
        h[i] = h[i + 1] + step(i + 1, i)?;
    }
    Ok(h)
}

fn denominator(d: f64, scale: f64, index: usize) -> Result<f64> {
    if d == 0.0 || d.abs() <= 4.0 * f64::EPSILON * scale {
        Err(Error::DegenerateStep(index))
    } else {
        Ok(d)
    }
}

/// `K = c` family: `f = p cos(√c u)`, `a = √(1 - p²c sin²(√c u))`, `b = p√c sin(√c u)`.
pub fn cgc_positive(p: f64, c: f64, grid: &SampleGrid) -> Result<(ProfileCurve, NormalProfile)> {
    CgcFamily::SpherePositive { p, c }.validate()?;
    let rc = c.sqrt();
    let s = positive_samples(p, c, grid)?;
    let u = grid.values();
    let h = heights(grid, |from, to| {
        let (su0, su1) = ((rc * u[from]).sin(), (rc * u[to]).sin());
        let (cu0, cu1) = ((rc * u[from]).cos(), (rc * u[to]).cos());
        let d = denominator(s.a[to] - s.a[from], 1.0, from.min(to))?;
        Ok((p * rc * su1 - p * rc * su0) * (p * cu1 - p * cu0) / d)
    })?;
    Ok((ProfileCurve::new(s.f, h)?, NormalProfile::new(s.a, s.b)?))
}

fn positive_samples(p: f64, c: f64, grid: &SampleGrid) -> Result<Sampled> {
    let rc = c.sqrt();
    let mut out = Sampled { f: vec![], a: vec![], b: vec![] };
    for &u in grid.values() {
        let (s, co) = (rc * u).sin_cos();
        let f = snap_radius(p * co, p);
        if f < 0.0 {
            return Err(Error::DomainViolation(format!("f = p cos(√c u) < 0 at u = {u}")));
        }
        out.f.push(f);
        out.a.push(checked_root(1.0 - p * p * c * s * s, "1 - p²c sin²(√c u)", u)?);
        out.b.push(p * rc * s);
    }
    Ok(out)
}

/// The three `K = -1` families.
pub fn cgc_negative(family: &CgcFamily, grid: &SampleGrid) -> Result<(ProfileCurve, NormalProfile)> {
    family.validate()?;
    let u = grid.values();
    let (s, h) = match *family {
        CgcFamily::Pseudosphere => {
            require_increasing(grid)?;
            let s = Sampled {
                f: u.iter().map(|u| 1.0 / u.cosh()).collect(),
                a: u.iter().map(|u| u.tanh()).collect(),
                b: u.iter().map(|u| 1.0 / u.cosh()).collect(),
            };
            let h = heights(grid, |from, to| {
                let (c0, c1) = (u[from].cosh(), u[to].cosh());
                let d = denominator((u[to] - u[from]).sinh(), 1.0, from.min(to))?;
                Ok((c1 - c0).powi(2) / (d * c1 * c0))
            })?;
            (s, h)
        }
        CgcFamily::CoshNegative { p } => {
            require_increasing(grid)?;
            let mut s = Sampled { f: vec![], a: vec![], b: vec![] };
            for &ui in u {
                s.f.push(p * ui.cosh());
                s.a.push(checked_root(1.0 - p * p * ui.sinh().powi(2), "1 - p² sinh² u", ui)?);
                s.b.push(-p * ui.sinh());
            }
            let h = heights(grid, |from, to| {
                let d = denominator(s.a[to] - s.a[from], 1.0, from.min(to))?;
                Ok((-p * u[to].sinh() + p * u[from].sinh()) * (p * u[to].cosh() - p * u[from].cosh()) / d)
            })?;
            (s, h)
        }
        CgcFamily::SinhNegative { q } => {
            if grid.len() > 1 && !grid.is_decreasing() {
                return Err(Error::InvalidGrid("the sinh family is sampled with decreasing u".into()));
            }
            let mut s = Sampled { f: vec![], a: vec![], b: vec![] };
            for &ui in u {
                let f = snap_radius(q * ui.sinh(), q);
                if f < 0.0 {
                    return Err(Error::DomainViolation(format!("f = q sinh u < 0 at u = {ui}")));
                }
                s.f.push(f);
                s.a.push(checked_root(1.0 - q * q * ui.cosh().powi(2), "1 - q² cosh² u", ui)?);
                s.b.push(q * ui.cosh());
            }
            let h = heights(grid, |from, to| {
                let d = denominator(s.a[to] - s.a[from], 1.0, from.min(to))?;
                Ok((q * u[to].cosh() - q * u[from].cosh()) * (q * u[to].sinh() - q * u[from].sinh()) / d)
            })?;
            (s, h)
        }
        other => {
            return Err(Error::DomainViolation(format!("{other:?} is not a K = -1 family")));
        }
    };
    Ok((ProfileCurve::new(s.f, h)?, NormalProfile::new(s.a, s.b)?))
}

fn require_increasing(grid: &SampleGrid) -> Result<()> {
    if grid.is_decreasing() {
        Err(Error::InvalidGrid("this family needs increasing u".into()))
    } else {
        Ok(())
    }
}

/// Discrete catenoid `f = cosh u`, `Δh = sinh Δu`, normal `(1/cosh u, -tanh u)`.
pub fn catenoid(grid: &SampleGrid) -> Result<(ProfileCurve, NormalProfile)> {
    require_increasing(grid)?;
    let u = grid.values();
    let f = u.iter().map(|u| u.cosh()).collect();
    let h = heights(grid, |from, to| Ok((u[to] - u[from]).sinh()))?;
    let a = u.iter().map(|u| 1.0 / u.cosh()).collect();
    let b = u.iter().map(|u| -u.tanh()).collect();
    Ok((ProfileCurve::new(f, h)?, NormalProfile::new(a, b)?))
}

/// Parallel surface `x + (ε/√c) ν` of the `K = c` family; it keeps the normal and has
/// constant mean curvature `ε√c / 2`.
pub fn delaunay(p: f64, c: f64, eps: Sign, grid: &SampleGrid) -> Result<(ProfileCurve, NormalProfile)> {
    CgcFamily::Delaunay { p, c, eps }.validate()?;
    let (base, normal) = cgc_positive(p, c, grid)?;
    let t = eps.value() / c.sqrt();
    let scale = base.max_radius().max(t.abs());
    let f: Vec<f64> = base
        .f()
        .iter()
        .zip(normal.a())
        .map(|(f, a)| snap_radius(t * a + f, scale))
        .collect();
    if let Some(n) = f.iter().position(|&v| v < 0.0) {
        return Err(Error::DomainViolation(format!(
            "parallel surface has negative radius {} at sample {n}",
            f[n]
        )));
    }
    let h = base.h().iter().zip(normal.b()).map(|(h, b)| t * b + h).collect();
    Ok((ProfileCurve::new(f, h)?, normal))
}

/// Heights from `h(i) - h(i-1) = (b(i) - b(i-1)) / (a(i) - a(i-1)) · (f(i) - f(i-1))`,
/// summed outward from `h(zero) = 0`.
pub fn telescoped_heights(f: &[f64], a: &[f64], b: &[f64], zero: usize) -> Result<Vec<f64>> {
    let len = f.len();
    if a.len() != len || b.len() != len || zero >= len {
        return Err(Error::InvalidProfile("mismatched array lengths".into()));
    }
    let mut h = vec![0.0; len];
    let step = |from: usize, to: usize| -> Result<f64> {
        let da = a[to] - a[from];
        if da == 0.0 {
            return Err(Error::DegenerateStep(from.min(to)));
        }
        Ok((b[to] - b[from]) / da * (f[to] - f[from]))
    };
    for i in zero + 1..len {
        h[i] = h[i - 1] + step(i - 1, i)?;
    }
    for i in (0..zero).rev() {
        h[i] = h[i + 1] + step(i + 1, i)?;
    }
    Ok(h)
}

/// Smooth profile `(f(u), h(u))` of the family, with elliptic heights by quadrature.
pub fn smooth_reference(family: &CgcFamily, u: f64) -> Result<(f64, f64)> {
    family.validate()?;
    let integrand_error = |what: &str, s: f64| Error::DomainViolation(format!("{what} < 0 at s = {s}"));
    match *family {
        CgcFamily::SpherePositive { p, c } => {
            let rc = c.sqrt();
            let h = positive_height(p, c, u)?;
            Ok((p * (rc * u).cos(), h))
        }
        CgcFamily::Pseudosphere => Ok((1.0 / u.cosh(), u - u.tanh())),
        CgcFamily::CoshNegative { p } => {
            if 1.0 - p * p * u.sinh().powi(2) < -ROOT_SLACK {
                return Err(integrand_error("1 - p² sinh² s", u));
            }
            let h = quadrature::integrate(
                |s| (1.0 - p * p * s.sinh().powi(2)).max(0.0).sqrt(),
                0.0,
                u,
                SMOOTH_ABS_TOL,
            )?;
            Ok((p * u.cosh(), h))
        }
        CgcFamily::SinhNegative { q } => {
            // cosh is increasing in |s|, so the endpoint bounds the integrand domain
            if 1.0 - q * q * u.cosh().powi(2) < -ROOT_SLACK {
                return Err(integrand_error("1 - q² cosh² s", u));
            }
            let h = quadrature::integrate(
                |s| (1.0 - q * q * s.cosh().powi(2)).max(0.0).sqrt(),
                0.0,
                u,
                SMOOTH_ABS_TOL,
            )?;
            Ok((q * u.sinh(), h))
        }
        CgcFamily::Catenoid => Ok((u.cosh(), u)),
        CgcFamily::Delaunay { p, c, eps } => {
            let rc = c.sqrt();
            let t = eps.value() / rc;
            let s = (rc * u).sin();
            let a = checked_root(1.0 - p * p * c * s * s, "1 - p²c sin²(√c u)", u)?;
            let h = positive_height(p, c, u)?;
            Ok((p * (rc * u).cos() + t * a, h + t * p * rc * s))
        }
    }
}

fn positive_height(p: f64, c: f64, u: f64) -> Result<f64> {
    let rc = c.sqrt();
    // sin² is monotone on [0, π/2], so the worst point of the integrand is u itself
    // when √c|u| ≤ π/2; beyond that the full quarter period must be admissible.
    let worst = if rc * u.abs() >= std::f64::consts::FRAC_PI_2 { 1.0 } else { (rc * u).sin().powi(2) };
    if 1.0 - p * p * c * worst < -ROOT_SLACK {
        return Err(Error::DomainViolation(format!("1 - p²c sin²(√c s) < 0 on [0, {u}]")));
    }
    quadrature::integrate(
        |s| (1.0 - p * p * c * (rc * s).sin().powi(2)).max(0.0).sqrt(),
        0.0,
        u,
        SMOOTH_ABS_TOL,
    )
}
