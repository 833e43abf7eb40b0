//! File formats: OBJ meshes, versioned JSON profiles, and CSV tables.
//!
//! Floats are written with 17 significant digits so that every value round-trips.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{BoundaryCondition, FlowState, FlowTrace};
use crate::surface::{NormalProfile, ProfileCurve, RevolutionSurface};

pub const PROFILE_VERSION: u32 = 1;

/// Seed normals read from a profile file must match the boundary condition to this.
const SEED_MATCH: f64 = 1e-12;

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Vertices per layer: one on the axis, `l` otherwise.
fn layer_offsets(surface: &RevolutionSurface) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(surface.k() + 1);
    let mut total = 0;
    for &f in surface.profile().f() {
        offsets.push(total);
        total += if f == 0.0 { 1 } else { surface.l() };
    }
    (offsets, total)
}

/// Writes the surface as an OBJ mesh: layer-major vertices (`m` fastest), quads between
/// rings and triangles fanning into a layer on the axis. Faces follow the `(i, j, k, l)`
/// order of [`RevolutionSurface::quad`].
pub fn write_obj(surface: &RevolutionSurface, mut out: impl Write) -> Result<()> {
    let (k, l) = (surface.k(), surface.l());
    let f = surface.profile().f();
    let (offsets, _) = layer_offsets(surface);
    writeln!(out, "# surface of revolution, k = {k}, l = {l}")?;
    for n in 0..=k {
        let count = if f[n] == 0.0 { 1 } else { l };
        for m in 0..count {
            let p = surface.vertex(m, n);
            writeln!(out, "v {} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z))?;
        }
    }
    let index = |m: usize, n: usize| -> usize {
        let local = if f[n] == 0.0 { 0 } else { m % l };
        offsets[n] + local + 1
    };
    for n in 0..k {
        let (low, high) = (f[n] == 0.0, f[n + 1] == 0.0);
        for m in 0..l {
            let (i, j, kk, ll) = (index(m, n), index(m + 1, n), index(m + 1, n + 1), index(m, n + 1));
            match (low, high) {
                (false, false) => writeln!(out, "f {i} {j} {kk} {ll}")?,
                (false, true) => writeln!(out, "f {i} {j} {kk}")?,
                (true, false) => writeln!(out, "f {i} {kk} {ll}")?,
                (true, true) => {}
            }
        }
    }
    Ok(())
}

pub fn save_obj(surface: &RevolutionSurface, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_obj(surface, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Number of OBJ vertices for the surface.
pub fn obj_vertex_count(surface: &RevolutionSurface) -> usize {
    layer_offsets(surface).1
}

/// `{version: 1, k, l, f, h, a?, b?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub version: u32,
    pub k: usize,
    pub l: usize,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

impl ProfileFile {
    pub fn new(profile: &ProfileCurve, l: usize, normal: Option<&NormalProfile>) -> Self {
        Self {
            version: PROFILE_VERSION,
            k: profile.k(),
            l,
            f: profile.f().to_vec(),
            h: profile.h().to_vec(),
            a: normal.map(|n| n.a().to_vec()),
            b: normal.map(|n| n.b().to_vec()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProfileFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        if self.version != PROFILE_VERSION {
            return Err(Error::Config(format!("unsupported profile version {}", self.version)));
        }
        if self.f.len() != self.k + 1 || self.h.len() != self.k + 1 {
            return Err(Error::Config(format!(
                "k = {} needs {} radii and heights, got {} and {}",
                self.k,
                self.k + 1,
                self.f.len(),
                self.h.len()
            )));
        }
        if self.a.is_some() != self.b.is_some() {
            return Err(Error::Config("normals need both a and b".into()));
        }
        if let (Some(a), Some(b)) = (&self.a, &self.b) {
            if a.len() != self.k + 1 || b.len() != self.k + 1 {
                return Err(Error::Config("normal arrays must have k + 1 entries".into()));
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<ProfileCurve> {
        ProfileCurve::new(self.f.clone(), self.h.clone())
    }

    pub fn normal(&self) -> Result<Option<NormalProfile>> {
        match (&self.a, &self.b) {
            (Some(a), Some(b)) => Ok(Some(NormalProfile::new(a.clone(), b.clone())?)),
            _ => Ok(None),
        }
    }

    /// Initial flow state; stored normals, if any, must start at the boundary condition's seed.
    pub fn flow_state(&self, bc: BoundaryCondition) -> Result<FlowState> {
        if let Some(normal) = self.normal()? {
            let (a0, b0) = bc.seed();
            if (normal.a()[0] - a0).abs() > SEED_MATCH || (normal.b()[0] - b0).abs() > SEED_MATCH {
                return Err(Error::Config(format!(
                    "stored normal ({}, {}) at n = 0 does not match the {} seed ({a0}, {b0})",
                    normal.a()[0],
                    normal.b()[0],
                    bc.name()
                )));
            }
        }
        FlowState::from_profile(&self.profile()?, self.l, bc)
    }
}

fn csv_writer(out: impl Write) -> csv::Writer<impl Write> {
    csv::WriterBuilder::new().from_writer(out)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Profile table with columns `n, u_n, f, h, a, b`; `n` counts from the grid's first index.
pub fn write_profile_csv(
    first_index: i64,
    u: &[f64],
    profile: &ProfileCurve,
    normal: &NormalProfile,
    out: impl Write,
) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["n", "u_n", "f", "h", "a", "b"]).map_err(csv_error)?;
    for i in 0..profile.f().len() {
        let n = first_index + i as i64;
        w.write_record([
            n.to_string(),
            fmt_f64(u[i]),
            fmt_f64(profile.f()[i]),
            fmt_f64(profile.h()[i]),
            fmt_f64(normal.a()[i]),
            fmt_f64(normal.b()[i]),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Trace table with columns `t, n, f, h, a, b, K, H, A, r`, one row per layer and snapshot.
/// `K, H, A` belong to band `n` (layers `n` and `n + 1`) and are empty on the top layer.
pub fn write_trace_csv(trace: &FlowTrace, out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["t", "n", "f", "h", "a", "b", "K", "H", "A", "r"]).map_err(csv_error)?;
    for (state, &r) in trace.states.iter().zip(&trace.r_history) {
        let normal = state.normal()?;
        let faces = state.faces()?;
        let h = state.heights();
        for n in 0..=state.k() {
            let (kk, hh, aa) = match faces.get(n) {
                Some(g) => (fmt_f64(g.gauss), fmt_f64(g.mean), fmt_f64(g.area)),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                fmt_f64(state.time()),
                n.to_string(),
                fmt_f64(state.f()[n]),
                fmt_f64(h[n]),
                fmt_f64(normal.a()[n]),
                fmt_f64(normal.b()[n]),
                kk,
                hh,
                aa,
                fmt_f64(r),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `mesh_00000.obj, mesh_00001.obj, …` for the snapshots at or after multiples of
/// `every` in simulated time (the first snapshot is always written). Returns the paths.
pub fn write_mesh_snapshots(trace: &FlowTrace, every: f64, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if !(every > 0.0) {
        return Err(Error::Config(format!("mesh interval must be positive, got {every}")));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut next = f64::NEG_INFINITY;
    for state in &trace.states {
        if state.time() + 1e-12 >= next {
            let path = dir.join(format!("mesh_{:05}.obj", written.len()));
            save_obj(&state.surface()?, &path)?;
            written.push(path);
            next = if next.is_finite() { next + every } else { state.time() + every };
            while next <= state.time() + 1e-12 {
                next += every;
            }
        }
    }
    Ok(written)
}
