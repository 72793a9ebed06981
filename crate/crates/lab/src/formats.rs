//! On-disk formats: radial profiles as CSV, fields as `LDG2` binary
//! containers, spectral reports as JSON and path ensembles as directories.
//!
//! `LDG2` layout, all little endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `LDG2` |
//! | 2     | format version (1) |
//! | 1     | payload tag: 1 radial profile, 2 disk field |
//! | 1     | ansatz code (radial) or 0 |
//! | 4     | k (i32) |
//! | 24    | a2, b2, c2 (f64) |
//! | 8     | radius (f64) |
//! | 8     | n_r (u64) |
//! | 8     | n_phi (u64), 1 for radial payloads |
//! | 8 n   | node values, node-major, five components per node |

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context};
use ldg_core::disk::{DiskField, PolarGrid};
use ldg_core::path::PathEnsemble;
use ldg_core::radial::{Ansatz, RadialGrid, RadialProfile};
use ldg_core::spectra::SpectralReport;
use ldg_core::{MaterialParams, WVector};
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 4] = b"LDG2";
const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum PayloadTag {
    Radial = 1,
    Disk = 2,
}

const ANSATZ_CODES: [Ansatz; 4] = [Ansatz::Z2O2, Ansatz::O2, Ansatz::OddK, Ansatz::Full5];

fn ansatz_code(a: Ansatz) -> u8 {
    ANSATZ_CODES.iter().position(|&b| b == a).expect("listed") as u8 + 1
}

/// A field read back from an `LDG2` container.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Radial(RadialProfile),
    Disk(DiskField),
}

struct Header {
    tag: PayloadTag,
    ansatz: u8,
    k: i32,
    params: [f64; 3],
    radius: f64,
    n_r: u64,
    n_phi: u64,
}

fn write_header(w: &mut impl Write, h: &Header) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[h.tag as u8, h.ansatz])?;
    w.write_all(&h.k.to_le_bytes())?;
    for p in h.params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.write_all(&h.radius.to_le_bytes())?;
    w.write_all(&h.n_r.to_le_bytes())?;
    w.write_all(&h.n_phi.to_le_bytes())
}

fn write_values(w: &mut impl Write, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn params_of(p: &MaterialParams) -> [f64; 3] {
    [p.a2(), p.b2(), p.c2()]
}

pub fn encode_radial(p: &RadialProfile) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 40 * p.values().len());
    let h = Header {
        tag: PayloadTag::Radial,
        ansatz: ansatz_code(p.ansatz()),
        k: p.k(),
        params: params_of(p.params()),
        radius: p.grid().radius(),
        n_r: p.grid().cells() as u64,
        n_phi: 1,
    };
    write_header(&mut out, &h).expect("writing to a Vec");
    write_values(&mut out, p.values().iter().flat_map(|w| w.0)).expect("writing to a Vec");
    out
}

pub fn encode_disk(f: &DiskField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(64 + 8 * f.values().len());
    let h =
        Header { tag: PayloadTag::Disk, ansatz: 0, k: f.k(), params: params_of(f.params()), radius: g.radius(), n_r: g.n_r() as u64, n_phi: g.n_phi() as u64 };
    write_header(&mut out, &h).expect("writing to a Vec");
    write_values(&mut out, f.values().iter().copied()).expect("writing to a Vec");
    out
}

fn take<const N: usize>(r: &mut impl Read) -> anyhow::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).context("truncated LDG2 container")?;
    Ok(b)
}

pub fn decode(bytes: &[u8]) -> anyhow::Result<Payload> {
    let mut r = bytes;
    ensure!(&take::<4>(&mut r)? == MAGIC, "not an LDG2 container");
    let version = u16::from_le_bytes(take(&mut r)?);
    ensure!(version == VERSION, "unsupported LDG2 version {version}");
    let [tag, ansatz] = take::<2>(&mut r)?;
    let k = i32::from_le_bytes(take(&mut r)?);
    let mut params = [0.0; 3];
    for p in &mut params {
        *p = f64::from_le_bytes(take(&mut r)?);
    }
    let radius = f64::from_le_bytes(take(&mut r)?);
    let n_r = u64::from_le_bytes(take(&mut r)?) as usize;
    let n_phi = u64::from_le_bytes(take(&mut r)?) as usize;
    let count = n_r.checked_mul(n_phi).and_then(|n| n.checked_mul(5)).context("size overflow")?;
    ensure!(r.len() == 8 * count, "payload holds {} bytes, header announces {}", r.len(), 8 * count);
    let values: Vec<f64> = r.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let params = MaterialParams::new(params[0], params[1], params[2])?;
    match tag {
        1 => {
            let a = *ANSATZ_CODES.get((ansatz as usize).wrapping_sub(1)).context("unknown ansatz code")?;
            let w = values.chunks_exact(5).map(|c| WVector(c.try_into().expect("5 values"))).collect();
            Ok(Payload::Radial(RadialProfile::from_values(RadialGrid::new(radius, n_r)?, a, k, params, w)?))
        }
        2 => Ok(Payload::Disk(DiskField::from_values(PolarGrid::new(radius, n_r, n_phi, k)?, k, params, values)?)),
        t => bail!("unknown payload tag {t}"),
    }
}

pub fn write_ldg2(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_ldg2(path: &Path) -> anyhow::Result<Payload> {
    decode(&std::fs::read(path).with_context(|| format!("reading {}", path.display()))?)
}

/// Profile table with columns r, w0..w4.
pub fn write_profile_csv(path: &Path, p: &RadialProfile) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "w0", "w1", "w2", "w3", "w4"])?;
    for (i, v) in p.values().iter().enumerate() {
        let mut rec = vec![p.grid().node(i).to_string()];
        rec.extend(v.0.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the node values back; the caller supplies the grid metadata.
pub fn read_profile_csv(path: &Path) -> anyhow::Result<Vec<(f64, WVector)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize::<(f64, f64, f64, f64, f64, f64)>() {
        let (x, a, b, c, d, e) = rec?;
        out.push((x, WVector([a, b, c, d, e])));
    }
    Ok(out)
}

/// Serialisable form of a [`SpectralReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReportJson {
    pub operator: String,
    pub constraint: String,
    pub k: i32,
    pub cells: usize,
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<i32>,
    pub residuals: Vec<f64>,
    pub norm_estimate: f64,
    pub nodes: Vec<f64>,
    pub eigenfunction: Vec<f64>,
}

impl From<&SpectralReport> for SpectralReportJson {
    fn from(s: &SpectralReport) -> Self {
        SpectralReportJson {
            operator: s.operator.clone(),
            constraint: s.constraint.id().to_string(),
            k: s.k,
            cells: s.cells,
            eigenvalues: s.eigenvalues.clone(),
            modes: s.modes.clone(),
            residuals: s.residuals.clone(),
            norm_estimate: s.norm_estimate,
            nodes: s.nodes.clone(),
            eigenfunction: s.eigenfunction.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathManifest {
    pub t: Vec<f64>,
    pub energies: Vec<f64>,
    /// Image file names relative to the directory, in path order.
    pub images: Vec<String>,
    /// Free-form settings of the run that produced the path.
    pub config: serde_json::Value,
}

/// Writes `manifest.json` and one `LDG2` radial payload per image. Returns
/// the written file names relative to `dir`.
pub fn write_path_dir(dir: &Path, path: &PathEnsemble, config: serde_json::Value) -> anyhow::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(path.len());
    for (i, img) in path.images.iter().enumerate() {
        let name = format!("image_{i:03}.ldg2");
        write_ldg2(&dir.join(&name), &encode_radial(img))?;
        names.push(name);
    }
    let m = PathManifest { t: path.t.clone(), energies: path.energies.clone(), images: names.clone(), config };
    write_json(&dir.join("manifest.json"), &m)?;
    names.push("manifest.json".into());
    Ok(names)
}

pub fn read_path_dir(dir: &Path) -> anyhow::Result<(PathEnsemble, PathManifest)> {
    let m: PathManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut images = Vec::with_capacity(m.images.len());
    for name in &m.images {
        match read_ldg2(&dir.join(name))? {
            Payload::Radial(p) => images.push(p),
            Payload::Disk(_) => bail!("{name}: path images must be radial payloads"),
        }
    }
    Ok((PathEnsemble::from_images(m.t.clone(), images)?, m))
}
