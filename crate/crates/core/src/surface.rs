//! Discrete surfaces of revolution as circular nets.
//!
//! A profile `(f(n), h(n))` rotated through `l` equal angles gives the vertices
//! `x(m, n) = (f(n) cos(2πm/l), f(n) sin(2πm/l), h(n))`. Every face is an isosceles
//! trapezoid, so the net is circular and carries a rotationally symmetric unit normal
//! `ν(m, n) = (a(n) cos(2πm/l), a(n) sin(2πm/l), b(n))` obtained by reflecting the
//! seed normal across each profile edge.
//!
//! Faces are indexed by their lower layer `n ∈ [0, k-1]`; within a face the vertices
//! are `i = x(m, n)`, `j = x(m+1, n)`, `k = x(m+1, n+1)`, `l = x(m, n+1)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{DEGENERATE_BAND_REL, PARALLEL_REL, SEED_UNIT};

pub type Point = Vector3<f64>;

/// Generating curve of a surface of revolution: radii `f` and heights `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct ProfileCurve {
    f: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Deserialize)]
struct RawProfile {
    f: Vec<f64>,
    h: Vec<f64>,
}

impl TryFrom<RawProfile> for ProfileCurve {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        ProfileCurve::new(raw.f, raw.h)
    }
}

impl ProfileCurve {
    pub fn new(f: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::InvalidProfile("profile needs at least one point".into()));
        }
        if f.len() != h.len() {
            return Err(Error::InvalidProfile(format!(
                "f has {} entries but h has {}",
                f.len(),
                h.len()
            )));
        }
        for (n, (&fi, &hi)) in f.iter().zip(&h).enumerate() {
            if !fi.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidProfile(format!("non-finite value at layer {n}")));
            }
            if fi < 0.0 {
                return Err(Error::InvalidProfile(format!("negative radius f({n}) = {fi}")));
            }
        }
        for n in 0..f.len() - 1 {
            let df = f[n + 1] - f[n];
            let dh = h[n + 1] - h[n];
            if df * df + dh * dh == 0.0 {
                return Err(Error::ZeroEdge(n));
            }
        }
        Ok(Self { f, h })
    }

    /// Builds a profile from radii and height differences with `h(0) = 0`.
    pub fn from_differences(f: Vec<f64>, dh: &[f64]) -> Result<Self> {
        if dh.len() + 1 != f.len() {
            return Err(Error::InvalidProfile(format!(
                "{} radii need {} height differences, got {}",
                f.len(),
                f.len().saturating_sub(1),
                dh.len()
            )));
        }
        let mut h = Vec::with_capacity(f.len());
        h.push(0.0);
        for d in dh {
            let last = *h.last().unwrap();
            h.push(last + d);
        }
        Self::new(f, h)
    }

    /// Number of bands; the profile has `k + 1` points.
    pub fn k(&self) -> usize {
        self.f.len() - 1
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn height_differences(&self) -> Vec<f64> {
        self.h.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.f.iter().copied().fold(0.0, f64::max)
    }
}

/// Rotationally symmetric unit normal `(a(n), b(n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalProfile {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl NormalProfile {
    /// Checks lengths and unit length to `1e-9`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let np = Self::new_unchecked(a, b)?;
        if np.max_unit_defect() > 1e-9 {
            return Err(Error::InvalidProfile(format!(
                "normal profile is not unit length (defect {:e})",
                np.max_unit_defect()
            )));
        }
        Ok(np)
    }

    /// Only checks that `a` and `b` have equal nonzero length. Used for fixtures that
    /// deliberately violate the unit-length invariant.
    pub fn new_unchecked(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidProfile(format!(
                "normal arrays have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn max_unit_defect(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a * a + b * b - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Componentwise distance to another normal profile of the same length.
    pub fn max_distance(&self, other: &NormalProfile) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(other.a.iter().zip(&other.b))
            .map(|((a0, b0), (a1, b1))| (a0 - a1).abs().max((b0 - b1).abs()))
            .fold(0.0, f64::max)
    }
}

/// One reflection step of the normal across the profile edge `(df, dh)`.
pub fn reflect_normal(a: f64, b: f64, df: f64, dh: f64) -> Option<(f64, f64)> {
    let len2 = df * df + dh * dh;
    if len2 == 0.0 {
        return None;
    }
    let s = 2.0 * (a * df + b * dh) / len2;
    Some((a - s * df, b - s * dh))
}

/// Propagates the seed normal `(a0, b0)` along the profile by edge reflections.
pub fn propagate_normal(profile: &ProfileCurve, a0: f64, b0: f64) -> Result<NormalProfile> {
    if (a0 * a0 + b0 * b0 - 1.0).abs() > SEED_UNIT {
        return Err(Error::InvalidSeed(a0, b0));
    }
    let (f, h) = (profile.f(), profile.h());
    let mut a = Vec::with_capacity(f.len());
    let mut b = Vec::with_capacity(f.len());
    a.push(a0);
    b.push(b0);
    for n in 0..f.len() - 1 {
        let (an, bn) = reflect_normal(a[n], b[n], f[n + 1] - f[n], h[n + 1] - h[n])
            .ok_or(Error::ZeroEdge(n))?;
        a.push(an);
        b.push(bn);
    }
    Ok(NormalProfile { a, b })
}

/// A profile rotated through `l ≥ 3` equal angles.
#[derive(Debug, Clone, PartialEq)]
pub struct RevolutionSurface {
    profile: ProfileCurve,
    l: usize,
}

impl RevolutionSurface {
    pub fn new(profile: ProfileCurve, l: usize) -> Result<Self> {
        if l < 3 {
            return Err(Error::InvalidProfile(format!("need l >= 3 rotational divisions, got {l}")));
        }
        Ok(Self { profile, l })
    }

    pub fn profile(&self) -> &ProfileCurve {
        &self.profile
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.profile.k()
    }

    fn angle(&self, m: usize) -> (f64, f64) {
        let theta = 2.0 * PI * (m % self.l) as f64 / self.l as f64;
        (theta.cos(), theta.sin())
    }

    /// Vertex `x(m, n)`; `m` is taken modulo `l`.
    pub fn vertex(&self, m: usize, n: usize) -> Point {
        let (c, s) = self.angle(m);
        let f = self.profile.f[n];
        Point::new(f * c, f * s, self.profile.h[n])
    }

    /// Normal `ν(m, n)` of the given normal profile.
    pub fn normal(&self, normal: &NormalProfile, m: usize, n: usize) -> Point {
        let (c, s) = self.angle(m);
        let a = normal.a[n];
        Point::new(a * c, a * s, normal.b[n])
    }

    pub fn quad(&self, m: usize, n: usize) -> Quad {
        Quad {
            i: self.vertex(m, n),
            j: self.vertex(m + 1, n),
            k: self.vertex(m + 1, n + 1),
            l: self.vertex(m, n + 1),
        }
    }

    pub fn normal_quad(&self, normal: &NormalProfile, m: usize, n: usize) -> Quad {
        Quad {
            i: self.normal(normal, m, n),
            j: self.normal(normal, m + 1, n),
            k: self.normal(normal, m + 1, n + 1),
            l: self.normal(normal, m, n + 1),
        }
    }

    pub fn face_geometry(&self, normal: &NormalProfile, n: usize) -> Result<FaceGeometry> {
        face_geometry(self, normal, n)
    }

    /// Geometry of every face `n = 0..k-1`.
    pub fn faces(&self, normal: &NormalProfile) -> Result<Vec<FaceGeometry>> {
        (0..self.k()).map(|n| face_geometry(self, normal, n)).collect()
    }
}

/// Vertex grid in m-major order: index `m * (k + 1) + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexGrid {
    l: usize,
    k: usize,
    points: Vec<Point>,
}

impl VertexGrid {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Periodic in `m`.
    pub fn get(&self, m: usize, n: usize) -> Point {
        self.points[(m % self.l) * (self.k + 1) + n]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

pub fn build_vertices(surface: &RevolutionSurface) -> VertexGrid {
    let (l, k) = (surface.l(), surface.k());
    let points = (0..l)
        .flat_map(|m| (0..=k).map(move |n| (m, n)))
        .map(|(m, n)| surface.vertex(m, n))
        .collect();
    VertexGrid { l, k, points }
}

/// A face `(ijkl)`; may reduce to a triangle when two adjacent vertices coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub i: Point,
    pub j: Point,
    pub k: Point,
    pub l: Point,
}

impl Quad {
    pub fn vertices(&self) -> [Point; 4] {
        [self.i, self.j, self.k, self.l]
    }

    /// `self + t * other`, vertex by vertex.
    pub fn offset(&self, other: &Quad, t: f64) -> Quad {
        Quad {
            i: self.i + other.i * t,
            j: self.j + other.j * t,
            k: self.k + other.k * t,
            l: self.l + other.l * t,
        }
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for p in 0..4 {
            for q in p + 1..4 {
                d = d.max((v[p] - v[q]).norm());
            }
        }
        d
    }
}

/// Discrete partial derivatives `(x_u, x_v)` of a face.
pub fn face_derivatives(q: &Quad) -> (Vector3<f64>, Vector3<f64>) {
    let xu = 0.5 * (q.k - q.j) + 0.5 * (q.l - q.i);
    let xv = 0.5 * (q.k - q.l) + 0.5 * (q.j - q.i);
    (xu, xv)
}

/// Unit face normal oriented so that the mixed area of `(i, j, k, l)` with itself is positive.
///
/// With this orientation `A(x) = det(x_v, x_u, N) = -det(x_u, x_v, N)`.
pub fn face_normal(q: &Quad) -> Vector3<f64> {
    let (xu, xv) = face_derivatives(q);
    xv.cross(&xu).normalize()
}

/// First and second fundamental forms of a face and its shape operator `S = I⁻¹ II`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeOperator {
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
}

impl ShapeOperator {
    pub fn from_faces(x: &Quad, nu: &Quad) -> Self {
        let (xu, xv) = face_derivatives(x);
        let (nu_u, nu_v) = face_derivatives(nu);
        let first = Matrix2::new(xu.dot(&xu), xu.dot(&xv), xv.dot(&xu), xv.dot(&xv));
        let second = Matrix2::new(xu.dot(&nu_u), xu.dot(&nu_v), xv.dot(&nu_u), xv.dot(&nu_v));
        Self { first, second }
    }

    /// `I⁻¹ II`, or `None` if the metric is singular.
    pub fn matrix(&self) -> Option<Matrix2<f64>> {
        self.first.try_inverse().map(|inv| inv * self.second)
    }

    pub fn gauss(&self) -> f64 {
        self.second.determinant() / self.first.determinant()
    }

    pub fn mean(&self) -> f64 {
        let g = &self.first;
        let s = &self.second;
        let det = g.determinant();
        // trace(I⁻¹ II) with the adjugate written out
        0.5 * (g[(1, 1)] * s[(0, 0)] - g[(0, 1)] * s[(1, 0)] - g[(1, 0)] * s[(0, 1)]
            + g[(0, 0)] * s[(1, 1)])
            / det
    }
}

/// Per-face metric, curvatures and area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceGeometry {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    /// Gaussian curvature.
    pub gauss: f64,
    /// Mean curvature.
    pub mean: f64,
    pub area: f64,
}

/// Closed-form metric `(g11, g22)` of a band.
pub fn band_metric(f0: f64, f1: f64, dh: f64, l: usize) -> (f64, f64) {
    let (s, c) = (PI / l as f64).sin_cos();
    let df = f1 - f0;
    let g11 = df * df * c * c + dh * dh;
    let sum = f1 + f0;
    (g11, sum * sum * s * s)
}

/// Geometry of one band from scalar profile and normal data.
///
/// `radius_scale_sq` is `max f²` over the profile and sets the degeneracy threshold.
#[allow(clippy::too_many_arguments)]
pub(crate) fn band_geometry(
    n: usize,
    (f0, f1): (f64, f64),
    (h0, h1): (f64, f64),
    (a0, a1): (f64, f64),
    (b0, b1): (f64, f64),
    l: usize,
    radius_scale_sq: f64,
    degenerate_rel: f64,
) -> Result<FaceGeometry> {
    if f0 == 0.0 && f1 == 0.0 {
        return Err(Error::DegenerateBand(n));
    }
    let (g11, g22) = band_metric(f0, f1, h1 - h0, l);
    let area = (g11 * g22).sqrt();
    let denom = f1 * f1 - f0 * f0;
    let (gauss, mean) = if denom.abs() < degenerate_rel * radius_scale_sq {
        let theta = 2.0 * PI / l as f64;
        let (s, c) = theta.sin_cos();
        let x = Quad {
            i: Point::new(f0, 0.0, h0),
            j: Point::new(f0 * c, f0 * s, h0),
            k: Point::new(f1 * c, f1 * s, h1),
            l: Point::new(f1, 0.0, h1),
        };
        let nu = Quad {
            i: Point::new(a0, 0.0, b0),
            j: Point::new(a0 * c, a0 * s, b0),
            k: Point::new(a1 * c, a1 * s, b1),
            l: Point::new(a1, 0.0, b1),
        };
        let shape = ShapeOperator::from_faces(&x, &nu);
        (shape.gauss(), shape.mean())
    } else {
        ((a1 * a1 - a0 * a0) / denom, (f1 * a1 - f0 * a0) / denom)
    };
    Ok(FaceGeometry { g11, g12: 0.0, g22, gauss, mean, area })
}

/// Closed-form geometry of face `n`, falling back to the shape operator on
/// cylinder-like bands where `f(n+1)² ≈ f(n)²`.
pub fn face_geometry(
    surface: &RevolutionSurface,
    normal: &NormalProfile,
    n: usize,
) -> Result<FaceGeometry> {
    face_geometry_with(surface, normal, n, DEGENERATE_BAND_REL)
}

pub fn face_geometry_with(
    surface: &RevolutionSurface,
    normal: &NormalProfile,
    n: usize,
    degenerate_rel: f64,
) -> Result<FaceGeometry> {
    let k = surface.k();
    if n >= k {
        return Err(Error::InvalidProfile(format!("face index {n} out of range 0..{k}")));
    }
    if normal.len() != k + 1 {
        return Err(Error::InvalidProfile(format!(
            "normal profile has {} entries, profile has {}",
            normal.len(),
            k + 1
        )));
    }
    let p = surface.profile();
    let scale = p.max_radius().powi(2);
    band_geometry(
        n,
        (p.f[n], p.f[n + 1]),
        (p.h[n], p.h[n + 1]),
        (normal.a[n], normal.a[n + 1]),
        (normal.b[n], normal.b[n + 1]),
        surface.l(),
        scale,
        degenerate_rel,
    )
}

/// Geometry of a face assembled from its 3D vertices and normals via the shape operator.
pub fn face_geometry_from_quads(x: &Quad, nu: &Quad) -> FaceGeometry {
    let shape = ShapeOperator::from_faces(x, nu);
    let g = shape.first;
    FaceGeometry {
        g11: g[(0, 0)],
        g12: g[(0, 1)],
        g22: g[(1, 1)],
        gauss: shape.gauss(),
        mean: shape.mean(),
        area: g.determinant().max(0.0).sqrt(),
    }
}

/// Mixed area `A(P, Q)` of two planar polygons with parallel corresponding edges.
pub fn mixed_area(p: &[Point], q: &[Point], normal: &Vector3<f64>) -> Result<f64> {
    mixed_area_with(p, q, normal, PARALLEL_REL)
}

pub fn mixed_area_with(
    p: &[Point],
    q: &[Point],
    normal: &Vector3<f64>,
    parallel_rel: f64,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(p.len(), q.len()));
    }
    let len = p.len();
    let mut sum = 0.0;
    for j in 0..len {
        let next = (j + 1) % len;
        let ep = p[next] - p[j];
        let eq = q[next] - q[j];
        let scale = ep.norm() * eq.norm();
        if scale > 0.0 {
            let sine = ep.cross(&eq).norm() / scale;
            if sine > parallel_rel {
                return Err(Error::NonParallel(j, sine));
            }
        }
        sum += p[j].cross(&q[next]).dot(normal) + q[j].cross(&p[next]).dot(normal);
    }
    Ok(0.25 * sum)
}

/// The three mixed areas of a face and their determinant forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedAreas {
    pub x: f64,
    pub nu: f64,
    pub x_nu: f64,
    pub det_x: f64,
    pub det_nu: f64,
    pub det_x_nu: f64,
}

impl MixedAreas {
    /// Largest relative mismatch between the polygon sums and the determinant forms.
    pub fn max_relative_mismatch(&self) -> f64 {
        let scale = self.x.abs().max(f64::MIN_POSITIVE);
        [(self.x, self.det_x), (self.nu, self.det_nu), (self.x_nu, self.det_x_nu)]
            .iter()
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Evaluates `A(x)`, `A(ν)`, `A(x, ν)` by polygon sums and by the derivative
/// determinants, with `N` from [`face_normal`].
pub fn mixed_area_identities(x: &Quad, nu: &Quad) -> Result<MixedAreas> {
    let n = face_normal(x);
    let (xu, xv) = face_derivatives(x);
    let (nu_u, nu_v) = face_derivatives(nu);
    let det = |a: &Vector3<f64>, b: &Vector3<f64>| a.cross(b).dot(&n);
    let (px, pn) = (x.vertices(), nu.vertices());
    Ok(MixedAreas {
        x: mixed_area(&px, &px, &n)?,
        nu: mixed_area(&pn, &pn, &n)?,
        x_nu: mixed_area(&px, &pn, &n)?,
        det_x: -det(&xu, &xv),
        det_nu: -det(&nu_u, &nu_v),
        det_x_nu: -0.5 * (det(&xu, &nu_v) + det(&nu_u, &xv)),
    })
}

/// `|A(x + tν) - (1 + 2tH + t²K) A(x)|` on one face.
pub fn steiner_check(x: &Quad, nu: &Quad, t: f64, gauss: f64, mean: f64) -> Result<f64> {
    let n = face_normal(x);
    let px = x.vertices();
    let moved = x.offset(nu, t).vertices();
    let area = mixed_area(&px, &px, &n)?;
    let offset_area = mixed_area(&moved, &moved, &n)?;
    Ok((offset_area - (1.0 + 2.0 * t * mean + t * t * gauss) * area).abs())
}

/// Distance of the fourth vertex from the circle through the other three, relative to
/// the face diameter. Triangles (two coincident vertices) are trivially concyclic.
pub fn circularity_residual(q: &Quad) -> f64 {
    let diam = q.diameter();
    if diam == 0.0 {
        return 0.0;
    }
    let mut distinct: Vec<Point> = Vec::with_capacity(4);
    for v in q.vertices() {
        if distinct.iter().all(|w| (w - v).norm() > 1e-14 * diam) {
            distinct.push(v);
        }
    }
    if distinct.len() < 4 {
        return 0.0;
    }
    let (a, b, c) = (distinct[0], distinct[1], distinct[2]);
    let (ab, ac) = (b - a, c - a);
    let w = ab.cross(&ac);
    let w2 = w.norm_squared();
    if w2 == 0.0 {
        return f64::INFINITY;
    }
    let center = a + (ac.norm_squared() * w.cross(&ab) + ab.norm_squared() * ac.cross(&w)) / (2.0 * w2);
    let radius = (a - center).norm();
    ((distinct[3] - center).norm() - radius).abs() / diam
}
