//! Snapshot files.
//!
//! Text layout: one JSON header line, one CSV column line, then one CSV row
//! per particle. Disks `id,x,y,r`; spheres `id,x,y,z,r`; platelets
//! `id,x,y,z,nx,ny,nz,D,t`. Numbers are written in the shortest form that
//! parses back to the same `f64`, so reading and rewriting a file
//! reproduces it byte for byte.
//!
//! Binary layout (little-endian): the 8-byte magic `SRMSNAPB`, the format
//! version as `u32`, the header length as `u32`, the header JSON, then per
//! particle a `u32` id followed by the row's remaining columns as `f64`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use srm_core::geometry::{PeriodicBox, Vector};
use srm_core::shape::Shape;
use srm_core::{Snapshot, Sphere, Spherodisk};

use crate::config::{ShapeKind, SnapshotFormat};
use crate::error::CliError;
use crate::output::atomic_write;

pub const FORMAT_NAME: &str = "srm-snapshot";
pub const FORMAT_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BINARY_MAGIC: &[u8; 8] = b"SRMSNAPB";

/// Default tolerance of [`SnapshotFile::audit`].
pub const AUDIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub format_version: u32,
    pub artifact_version: String,
    pub dimension: usize,
    pub shape: ShapeKind,
    pub box_lengths: Vec<f64>,
    pub count: usize,
    pub seed: u64,
    pub volume_fraction: f64,
    pub iterations: u64,
    /// The resolved run config that produced the file.
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Particles {
    Disks(Vec<Sphere<2>>),
    Spheres(Vec<Sphere<3>>),
    Platelets(Vec<Spherodisk>),
}

impl Particles {
    pub fn len(&self) -> usize {
        match self {
            Particles::Disks(v) => v.len(),
            Particles::Spheres(v) => v.len(),
            Particles::Platelets(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> ShapeKind {
        match self {
            Particles::Disks(_) => ShapeKind::Disk,
            Particles::Spheres(_) => ShapeKind::Sphere,
            Particles::Platelets(_) => ShapeKind::Spherodisk,
        }
    }
}

fn columns(shape: ShapeKind) -> &'static str {
    match shape {
        ShapeKind::Disk => "id,x,y,r",
        ShapeKind::Sphere => "id,x,y,z,r",
        ShapeKind::Spherodisk => "id,x,y,z,nx,ny,nz,D,t",
    }
}

fn field_count(shape: ShapeKind) -> usize {
    columns(shape).split(',').count() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub header: Header,
    pub particles: Particles,
}

impl SnapshotFile {
    pub fn new<const D: usize, S: Shape<D>>(
        snapshot: &Snapshot<D, S>,
        particles: Particles,
        seed: u64,
        params: Map<String, Value>,
    ) -> Self {
        Self {
            header: Header {
                format: FORMAT_NAME.to_string(),
                format_version: FORMAT_VERSION,
                artifact_version: ARTIFACT_VERSION.to_string(),
                dimension: D,
                shape: particles.shape(),
                box_lengths: snapshot.periodic_box.lengths().to_vec(),
                count: particles.len(),
                seed,
                volume_fraction: snapshot.volume_fraction,
                iterations: snapshot.iteration_count,
                params,
            },
            particles,
        }
    }

    pub fn box2(&self) -> Result<PeriodicBox<2>, srm_core::Error> {
        let l = &self.header.box_lengths;
        PeriodicBox::new([l[0], l[1]])
    }

    pub fn box3(&self) -> Result<PeriodicBox<3>, srm_core::Error> {
        let l = &self.header.box_lengths;
        PeriodicBox::new([l[0], l[1], l[2]])
    }

    /// The row of every particle without its id.
    fn rows(&self) -> Vec<(u32, Vec<f64>)> {
        match &self.particles {
            Particles::Disks(v) => v.iter().map(|p| (p.id, vec![p.position[0], p.position[1], p.radius])).collect(),
            Particles::Spheres(v) => v
                .iter()
                .map(|p| (p.id, vec![p.position[0], p.position[1], p.position[2], p.radius]))
                .collect(),
            Particles::Platelets(v) => v
                .iter()
                .map(|p| {
                    let (c, n) = (p.center, p.normal);
                    (p.id, vec![c[0], c[1], c[2], n[0], n[1], n[2], p.diameter, p.thickness])
                })
                .collect(),
        }
    }

    fn header_json(&self) -> String {
        serde_json::to_string(&self.header).expect("header serializes")
    }

    pub fn to_text(&self) -> Vec<u8> {
        let mut s = String::with_capacity(64 * (self.particles.len() + 2));
        s.push_str(&self.header_json());
        s.push('\n');
        s.push_str(columns(self.header.shape));
        s.push('\n');
        for (id, fields) in self.rows() {
            write!(s, "{id}").unwrap();
            for x in fields {
                write!(s, ",{x}").unwrap();
            }
            s.push('\n');
        }
        s.into_bytes()
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let header = self.header_json();
        let width = 4 + 8 * field_count(self.header.shape);
        let mut out = Vec::with_capacity(16 + header.len() + width * self.particles.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for (id, fields) in self.rows() {
            out.extend_from_slice(&id.to_le_bytes());
            for x in fields {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn encode(&self, format: SnapshotFormat) -> Vec<u8> {
        match format {
            SnapshotFormat::Text => self.to_text(),
            SnapshotFormat::Binary => self.to_binary(),
        }
    }

    /// Parses either layout, told apart by the binary magic.
    pub fn decode(bytes: &[u8]) -> Result<(Self, SnapshotFormat), String> {
        if bytes.starts_with(BINARY_MAGIC) {
            Self::from_binary(bytes).map(|s| (s, SnapshotFormat::Binary))
        } else {
            Self::from_text(bytes).map(|s| (s, SnapshotFormat::Text))
        }
    }

    pub fn from_text(bytes: &[u8]) -> Result<Self, String> {
        let text = std::str::from_utf8(bytes).map_err(|_| "not UTF-8 text".to_string())?;
        let mut lines = text.split_terminator('\n');
        let header = parse_header(lines.next().ok_or("empty file")?)?;
        let expected = columns(header.shape);
        match lines.next() {
            Some(c) if c == expected => {}
            Some(c) => return Err(format!("line 2: expected columns `{expected}`, found `{c}`")),
            None => return Err("missing column line".into()),
        }
        let mut rows = Vec::with_capacity(header.count);
        for (k, line) in lines.enumerate() {
            let lineno = k + 3;
            let mut cells = line.split(',');
            let id = cells
                .next()
                .and_then(|c| c.parse::<u32>().ok())
                .ok_or_else(|| format!("line {lineno}: bad particle id"))?;
            let fields = cells
                .map(|c| c.parse::<f64>().map_err(|_| format!("line {lineno}: bad number `{c}`")))
                .collect::<Result<Vec<_>, _>>()?;
            if fields.len() != field_count(header.shape) {
                return Err(format!("line {lineno}: expected {} columns", field_count(header.shape) + 1));
            }
            rows.push((id, fields));
        }
        Self::assemble(header, rows)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self, String> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(8)? != BINARY_MAGIC {
            return Err("missing binary magic".into());
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(format!("unsupported binary format version {version}"));
        }
        let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let header_text = std::str::from_utf8(r.take(len)?).map_err(|_| "header is not UTF-8".to_string())?;
        let header = parse_header(header_text)?;
        let fields = field_count(header.shape);
        let mut rows = Vec::with_capacity(header.count);
        for _ in 0..header.count {
            let id = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
            let row = (0..fields)
                .map(|_| r.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((id, row));
        }
        if r.at != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - r.at));
        }
        Self::assemble(header, rows)
    }

    fn assemble(header: Header, rows: Vec<(u32, Vec<f64>)>) -> Result<Self, String> {
        if rows.len() != header.count {
            return Err(format!("header announces {} particles, found {}", header.count, rows.len()));
        }
        if let Some((id, _)) = rows.iter().find(|(_, f)| f.iter().any(|x| !x.is_finite())) {
            return Err(format!("particle {id} has a non-finite value"));
        }
        let particles = match header.shape {
            ShapeKind::Disk => Particles::Disks(
                rows.iter()
                    .map(|(id, f)| sphere(*id, [f[0], f[1]], f[2]))
                    .collect::<Result<_, _>>()?,
            ),
            ShapeKind::Sphere => Particles::Spheres(
                rows.iter()
                    .map(|(id, f)| sphere(*id, [f[0], f[1], f[2]], f[3]))
                    .collect::<Result<_, _>>()?,
            ),
            ShapeKind::Spherodisk => Particles::Platelets(
                rows.iter()
                    .map(|(id, f)| platelet(*id, [f[0], f[1], f[2]], [f[3], f[4], f[5]], f[6], f[7]))
                    .collect::<Result<_, _>>()?,
            ),
        };
        Ok(Self { header, particles })
    }

    pub fn read(path: &Path) -> Result<(Self, SnapshotFormat), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::decode(&bytes).map_err(|msg| CliError::format(path, msg))
    }

    pub fn write(&self, path: &Path, format: SnapshotFormat) -> Result<(), CliError> {
        atomic_write(path, &self.encode(format))
    }

    /// O(N²) minimum-image audit on surface gaps, independent of the cell
    /// grid. Returns the violating pairs `(i, j, gap)` with `gap < -tol`.
    pub fn audit(&self, tol: f64) -> Result<Vec<(u32, u32, f64)>, srm_core::Error> {
        Ok(match &self.particles {
            Particles::Disks(v) => audit_pairs(v, &self.box2()?, tol),
            Particles::Spheres(v) => audit_pairs(v, &self.box3()?, tol),
            Particles::Platelets(v) => audit_pairs(v, &self.box3()?, tol),
        })
    }
}

fn audit_pairs<const D: usize, S: Shape<D>>(ps: &[S], bx: &PeriodicBox<D>, tol: f64) -> Vec<(u32, u32, f64)> {
    let mut bad = Vec::new();
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let d: Vector<D> = bx.min_image_delta(ps[j].position(), ps[i].position());
            let reach = ps[i].bounding_radius() + ps[j].bounding_radius();
            if srm_core::geometry::norm2(&d) > reach * reach {
                continue;
            }
            let gap = ps[i].surface_gap(&ps[j], &d);
            if gap < -tol {
                bad.push((ps[i].id(), ps[j].id(), gap));
            }
        }
    }
    bad
}

fn sphere<const D: usize>(id: u32, position: Vector<D>, radius: f64) -> Result<Sphere<D>, String> {
    if radius <= 0.0 {
        return Err(format!("particle {id} has non-positive radius"));
    }
    Ok(Sphere::new(id, position, radius))
}

// Kept bit-exact: the stored normal is not renormalized.
fn platelet(id: u32, center: Vector<3>, normal: Vector<3>, diameter: f64, thickness: f64) -> Result<Spherodisk, String> {
    let n2 = srm_core::geometry::norm2(&normal);
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(format!("particle {id} has a non-unit normal"));
    }
    Spherodisk::new(id, center, normal, diameter, thickness).map_err(|e| format!("particle {id}: {e}"))?;
    Ok(Spherodisk {
        id,
        center,
        normal,
        diameter,
        thickness,
    })
}

fn parse_header(line: &str) -> Result<Header, String> {
    let h: Header = serde_json::from_str(line).map_err(|e| format!("header: {e}"))?;
    if h.format != FORMAT_NAME {
        return Err(format!("not a snapshot file (format `{}`)", h.format));
    }
    if h.format_version != FORMAT_VERSION {
        return Err(format!("unsupported format version {}", h.format_version));
    }
    if h.dimension != h.shape.dimension() || h.box_lengths.len() != h.dimension {
        return Err("header dimension, shape and box lengths disagree".into());
    }
    Ok(h)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated file")?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }
}
