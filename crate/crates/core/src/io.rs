//! File formats: portable graymaps, raw little-endian f64 grids with a JSON
//! sidecar, coefficient directories and filter-bank directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::generators::{DecayFit, FourierProfile1D, ProfileKind};
use crate::grid::GridSpec;
use crate::onb::{AtomKind, SliceSpec};
use crate::system::{CoefficientBlock, CoefficientTable, TIE_BREAK_POLICY};

pub const FORMAT_VERSION: u32 = 1;

/// A square image with values in `[0, 1]` when read from a graymap.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub n: usize,
    pub data: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Write `data` (row-major `n x n`) as binary PGM, mapping `[lo, hi]` to the full range.
pub fn write_pgm(path: &Path, data: &[f64], n: usize, bits: u32, lo: f64, hi: f64) -> Result<()> {
    if data.len() != n * n {
        return Err(Error::Shape { expected: n * n, got: data.len() });
    }
    let maxval: u32 = match bits {
        8 => 255,
        16 => 65535,
        _ => return Err(bad(format!("unsupported bit depth {bits}"))),
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{n} {n}\n{maxval}\n").into_bytes();
    for &v in data {
        let q = (((v - lo) / span).clamp(0.0, 1.0) * maxval as f64).round() as u32;
        if bits == 8 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a binary (P5) or ASCII (P2) graymap, scaled to `[0, 1]`. Must be square.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let w: usize = token()?.parse().map_err(|_| bad("bad PGM width"))?;
    let h: usize = token()?.parse().map_err(|_| bad("bad PGM height"))?;
    let maxval: u32 = token()?.parse().map_err(|_| bad("bad PGM maxval"))?;
    if w != h {
        return Err(bad(format!("image is {w}x{h}, must be square")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad(format!("bad PGM maxval {maxval}")));
    }
    let scale = 1.0 / maxval as f64;
    let data = match magic.as_str() {
        "P5" => {
            let body = &bytes[pos + 1..];
            let wide = maxval > 255;
            let need = w * h * if wide { 2 } else { 1 };
            if body.len() < need {
                return Err(bad("truncated PGM body"));
            }
            if wide {
                body[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale).collect()
            } else {
                body[..need].iter().map(|&b| b as f64 * scale).collect()
            }
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let vals: Vec<f64> = text
                .split_ascii_whitespace()
                .take(w * h)
                .map(|t| t.parse::<u32>().map(|v| v as f64 * scale).map_err(|_| bad("bad PGM sample")))
                .collect::<Result<_>>()?;
            if vals.len() != w * h {
                return Err(bad("truncated PGM body"));
            }
            vals
        }
        m => return Err(bad(format!("unsupported graymap type {m}"))),
    };
    Ok(Image { n: w, data })
}

/// Sidecar of a raw array file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub format_version: u32,
    pub dtype: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn f64_bytes(data: impl Iterator<Item = f64>) -> Vec<u8> {
    data.flat_map(|v| v.to_le_bytes()).collect()
}

fn read_f64s(path: &Path, count: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * count {
        return Err(bad(format!("{}: {} bytes, expected {}", path.display(), bytes.len(), 8 * count)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Write a real `n x n` grid as raw f64 plus `<path>.json`.
pub fn write_raw_grid(path: &Path, data: &[f64], n: usize, meta: serde_json::Value) -> Result<()> {
    if data.len() != n * n {
        return Err(Error::Shape { expected: n * n, got: data.len() });
    }
    fs::write(path, f64_bytes(data.iter().copied()))?;
    let hdr = RawHeader { format_version: FORMAT_VERSION, dtype: "f64le".into(), shape: vec![n, n], meta };
    write_json(&sidecar_path(path), &hdr)
}

pub fn read_raw_grid(path: &Path) -> Result<Image> {
    let hdr: RawHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if hdr.dtype != "f64le" || hdr.shape.len() != 2 || hdr.shape[0] != hdr.shape[1] {
        return Err(bad(format!("{}: expected square f64le grid", path.display())));
    }
    let n = hdr.shape[0];
    Ok(Image { n, data: read_f64s(path, n * n)? })
}

/// Write complex values interleaved `re, im` as raw f64 plus sidecar.
pub fn write_complex(path: &Path, data: &[Complex64], shape: Vec<usize>, meta: serde_json::Value) -> Result<()> {
    fs::write(path, f64_bytes(data.iter().flat_map(|v| [v.re, v.im])))?;
    let hdr = RawHeader { format_version: FORMAT_VERSION, dtype: "c128le".into(), shape, meta };
    write_json(&sidecar_path(path), &hdr)
}

pub fn read_complex(path: &Path) -> Result<(Vec<Complex64>, RawHeader)> {
    let hdr: RawHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if hdr.dtype != "c128le" {
        return Err(bad(format!("{}: expected c128le", path.display())));
    }
    let count: usize = hdr.shape.iter().product();
    let v = read_f64s(path, 2 * count)?;
    Ok((v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(), hdr))
}

/// Load a signal by extension: `.pgm` graymap, anything else raw f64 with sidecar.
pub fn load_signal(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") | Some("PGM") => read_pgm(path),
        _ => read_raw_grid(path),
    }
}

/// Save a signal by extension: `.pgm` as 16-bit graymap over its own range,
/// otherwise raw f64.
pub fn save_signal(path: &Path, data: &[f64], n: usize, meta: serde_json::Value) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") | Some("PGM") => {
            let lo = data.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
            let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(1.0);
            write_pgm(path, data, n, 16, lo, hi)
        }
        _ => write_raw_grid(path, data, n, meta),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub file: String,
    pub cone: u8,
    pub shear: String,
    /// `-1` for coarse slices.
    pub j: i32,
    /// Dilation scale of the slice (equals `j0(s)` for coarse slices).
    pub scale: u32,
    pub p: u32,
    /// Array shape `[a, c]`: `m1` in `0..a`, `m2` in `0..c`, row-major.
    pub shape: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientManifest {
    pub format_version: u32,
    pub grid: GridSpec,
    pub jmax: u32,
    /// Truncation: every scale `0..J` and level `0..=P_j` of a complete per-shear basis.
    pub onb_max_scale: u32,
    pub tie_break: String,
    pub dtype: String,
    pub config_hash: Option<String>,
    pub slices: Vec<SliceEntry>,
}

/// Write one binary file per `(cone, shear, j, p)` slice plus `manifest.json`.
pub fn save_coefficients(dir: &Path, table: &CoefficientTable, config_hash: Option<&str>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut slices = Vec::new();
    for (bi, blk) in table.blocks.iter().enumerate() {
        for (k, sl) in blk.slices.iter().enumerate() {
            let j = sl.j_label();
            let file = format!("c{}_s{:03}_j{}_p{}.bin", blk.cone, bi % (table.blocks.len() / 2), j, sl.p);
            let mut f = std::io::BufWriter::new(fs::File::create(dir.join(&file))?);
            for v in blk.slice(k) {
                f.write_all(&v.re.to_le_bytes())?;
                f.write_all(&v.im.to_le_bytes())?;
            }
            f.flush()?;
            slices.push(SliceEntry {
                file,
                cone: blk.cone,
                shear: blk.shear.to_string(),
                j,
                scale: sl.jj,
                p: sl.p,
                shape: [sl.a, sl.c],
            });
        }
    }
    let man = CoefficientManifest {
        format_version: FORMAT_VERSION,
        grid: table.grid,
        jmax: table.jmax,
        onb_max_scale: table.grid.n.trailing_zeros() - 1,
        tie_break: TIE_BREAK_POLICY.into(),
        dtype: "c128le".into(),
        config_hash: config_hash.map(str::to_string),
        slices,
    };
    write_json(&dir.join("manifest.json"), &man)
}

pub fn load_coefficients(dir: &Path) -> Result<(CoefficientTable, CoefficientManifest)> {
    let man: CoefficientManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if man.format_version != FORMAT_VERSION {
        return Err(bad(format!("unsupported coefficient format {}", man.format_version)));
    }
    let mut blocks: Vec<CoefficientBlock> = Vec::new();
    for e in &man.slices {
        let shear = e.shear.parse()?;
        let new_block = blocks.last().is_none_or(|b| b.cone != e.cone || b.shear != shear);
        if new_block {
            blocks.push(CoefficientBlock { cone: e.cone, shear, slices: vec![], offsets: vec![0], data: vec![] });
        }
        let blk = blocks.last_mut().unwrap();
        let kind = if e.j < 0 { AtomKind::Scaling } else { AtomKind::Wavelet };
        blk.slices.push(SliceSpec { kind, jj: e.scale, p: e.p, a: e.shape[0], c: e.shape[1] });
        let vals = read_f64s(&dir.join(&e.file), 2 * e.shape[0] * e.shape[1])?;
        blk.data.extend(vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])));
        blk.offsets.push(blk.data.len());
    }
    Ok((CoefficientTable { grid: man.grid, jmax: man.jmax, blocks }, man))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankManifest {
    pub format_version: u32,
    pub grid: GridSpec,
    pub jmax: u32,
    pub shears: Vec<String>,
    pub files: Vec<String>,
    pub denominator_file: String,
    pub tails: Vec<f64>,
    pub delta_phi: f64,
    pub delta_g: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub lower_bound_cert: f64,
    pub config_hash: Option<String>,
}

/// One raw f64 multiplier file per shear (FFT order) plus `W` and a manifest.
pub fn save_bank(dir: &Path, bank: &FilterBank, config_hash: Option<&str>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, g) in bank.g.iter().enumerate() {
        let f = format!("g_{k:03}.bin");
        fs::write(dir.join(&f), f64_bytes(g.iter().copied()))?;
        files.push(f);
    }
    fs::write(dir.join("w.bin"), f64_bytes(bank.w.iter().copied()))?;
    let man = BankManifest {
        format_version: FORMAT_VERSION,
        grid: bank.grid().spec(),
        jmax: bank.jmax,
        shears: bank.shears.iter().map(|s| s.to_string()).collect(),
        files,
        denominator_file: "w.bin".into(),
        tails: bank.tails.clone(),
        delta_phi: bank.delta_phi,
        delta_g: bank.delta_g,
        a_hat: bank.a_hat,
        b_hat: bank.b_hat,
        lower_bound_cert: bank.lower_bound_cert,
        config_hash: config_hash.map(str::to_string),
    };
    write_json(&dir.join("manifest.json"), &man)
}

/// Read back the multipliers of a saved bank: `(manifest, G_s per shear, W)`.
pub fn load_bank(dir: &Path) -> Result<(BankManifest, Vec<Vec<f64>>, Vec<f64>)> {
    let man: BankManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let len = man.grid.n * man.grid.n;
    let g = man.files.iter().map(|f| read_f64s(&dir.join(f), len)).collect::<Result<Vec<_>>>()?;
    let w = read_f64s(&dir.join(&man.denominator_file), len)?;
    Ok((man, g, w))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub kind: ProfileKind,
    pub order: u32,
    pub depth: u32,
    pub support_radius: f64,
    pub truncation_residual: f64,
    pub delta: Option<f64>,
    pub fit: Option<DecayFit>,
}

/// Profile values (interleaved `re, im`) plus a sidecar holding the sample
/// points and generator metadata.
pub fn save_profile(path: &Path, profile: &FourierProfile1D, delta: Option<f64>, fit: Option<&DecayFit>) -> Result<()> {
    let meta = serde_json::json!({
        "xi": profile.xi,
        "profile": ProfileHeader {
            kind: profile.kind,
            order: profile.order,
            depth: profile.depth,
            support_radius: profile.support_radius,
            truncation_residual: profile.truncation_residual,
            delta,
            fit: fit.cloned(),
        },
    });
    write_complex(path, &profile.values, vec![profile.len()], meta)
}

pub fn load_profile(path: &Path) -> Result<(FourierProfile1D, ProfileHeader)> {
    let (values, hdr) = read_complex(path)?;
    let xi: Vec<f64> = serde_json::from_value(hdr.meta["xi"].clone())?;
    let ph: ProfileHeader = serde_json::from_value(hdr.meta["profile"].clone())?;
    let mut p = FourierProfile1D::from_samples(ph.kind, xi, values)?;
    p.order = ph.order;
    p.depth = ph.depth;
    p.support_radius = ph.support_radius;
    p.truncation_residual = ph.truncation_residual;
    Ok((p, ph))
}

/// Manifest written next to every CLI output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tie_break: String,
    pub norm: String,
    #[serde(default)]
    pub report: serde_json::Value,
}

pub fn write_manifest(path: &Path, man: &RunManifest) -> Result<()> {
    write_json(path, man)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8_and_16() {
        let dir = tempfile::tempdir().unwrap();
        let n = 8;
        let data: Vec<f64> = (0..n * n).map(|i| i as f64 / (n * n - 1) as f64).collect();
        for bits in [8u32, 16] {
            let p = dir.path().join(format!("x{bits}.pgm"));
            write_pgm(&p, &data, n, bits, 0.0, 1.0).unwrap();
            let img = read_pgm(&p).unwrap();
            assert_eq!(img.n, n);
            let tol = if bits == 8 { 0.5 / 255.0 } else { 0.5 / 65535.0 };
            for (a, b) in data.iter().zip(&img.data) {
                assert!((a - b).abs() <= tol + 1e-15);
            }
        }
    }

    #[test]
    fn ascii_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        fs::write(&p, "P2\n# hi\n2 2\n4\n0 1\n2 4\n").unwrap();
        let img = read_pgm(&p).unwrap();
        assert_eq!(img.data, vec![0.0, 0.25, 0.5, 1.0]);
        fs::write(&p, "P2\n2 3\n4\n0 1 2 4 0 0\n").unwrap();
        assert!(read_pgm(&p).is_err());
    }

    #[test]
    fn raw_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.f64");
        let data: Vec<f64> = (0..16).map(|i| (i as f64).sqrt() - 1.3).collect();
        write_raw_grid(&p, &data, 4, serde_json::Value::Null).unwrap();
        assert_eq!(read_raw_grid(&p).unwrap().data, data);
        assert!(sidecar_path(&p).exists());
    }
}
