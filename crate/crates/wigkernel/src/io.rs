//! File formats: WKT tensors, PGM heatmaps, numeric CSV, and the key=value
//! run and Hamiltonian configurations.
//!
//! WKT layout: magic `WGK1`, `u32` rank, `u32` dims, `u32` metadata count,
//! `f64` metadata, then interleaved re/im `f64` values, row-major, all
//! little-endian. `meta[0]` tags what the tensor holds (see [`Kind`]).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fio::Symbol;
use crate::kernel::{OperatorKernel, WignerKernel};
use crate::propagator::{Perturbation, PerturbedHamiltonian, QuadraticHamiltonian};
use crate::signal::{Axis, Grid, PhaseField, Signal, C64};
use crate::symplectic::{RMat, OMEGA};

pub const MAGIC: &[u8; 4] = b"WGK1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Signal = 0,
    Field = 1,
    Operator = 2,
    WignerKernel = 3,
    /// Anything else; metadata is free-form.
    Raw = 9,
}

impl Kind {
    fn from_code(c: f64) -> Result<Kind> {
        Ok(match c as i64 {
            0 => Kind::Signal,
            1 => Kind::Field,
            2 => Kind::Operator,
            3 => Kind::WignerKernel,
            9 => Kind::Raw,
            _ => return Err(Error::Format(format!("unknown tensor kind {c}"))),
        })
    }
}

/// A dense complex tensor with its metadata block.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub meta: Vec<f64>,
    pub values: Vec<C64>,
}

impl Tensor {
    pub fn kind(&self) -> Result<Kind> {
        Kind::from_code(*self.meta.first().ok_or_else(|| Error::Format("empty metadata block".into()))?)
    }

    fn expect(&self, kind: Kind, meta_len: usize) -> Result<()> {
        let k = self.kind()?;
        if k != kind {
            return Err(Error::Format(format!("expected a {kind:?} tensor, found {k:?}")));
        }
        if self.meta.len() < meta_len {
            return Err(Error::Format(format!("{kind:?} tensor needs {meta_len} metadata values")));
        }
        Ok(())
    }

    /// Metadata `[kind, h]`.
    pub fn from_signal(f: &Signal) -> Tensor {
        Tensor { dims: f.grid.shape(), meta: vec![Kind::Signal as i64 as f64, f.grid.h], values: f.values.clone() }
    }

    pub fn to_signal(&self) -> Result<Signal> {
        self.expect(Kind::Signal, 2)?;
        let n = self.dims[0];
        if self.dims.iter().any(|&d| d != n) {
            return Err(Error::Format("signal dims must be equal".into()));
        }
        Signal::new(Grid::with_step(self.dims.len(), n, self.meta[1])?, self.values.clone())
    }

    /// Metadata `[kind, h, d, antiperiodic, n, (step, origin) per axis]`;
    /// the x axes come first.
    pub fn from_field(f: &PhaseField) -> Tensor {
        let mut meta = vec![Kind::Field as i64 as f64, f.grid.h, f.grid.d as f64, f.antiperiodic as u8 as f64, f.grid.n as f64];
        for a in f.x_axes.iter().chain(&f.xi_axes) {
            meta.push(a.step);
            meta.push(a.origin);
        }
        Tensor { dims: f.shape(), meta, values: f.values.clone() }
    }

    pub fn to_field(&self) -> Result<PhaseField> {
        let rank = self.dims.len();
        self.expect(Kind::Field, 5 + 2 * rank)?;
        if rank % 2 != 0 {
            return Err(Error::Format("phase-space fields have even rank".into()));
        }
        let d = self.meta[2] as usize;
        if 2 * d != rank {
            return Err(Error::Format(format!("field of rank {rank} declares d = {d}")));
        }
        let axes: Vec<Axis> =
            (0..rank).map(|i| Axis { len: self.dims[i], step: self.meta[5 + 2 * i], origin: self.meta[6 + 2 * i] }).collect();
        let grid = Grid::with_step(d, self.meta[4] as usize, self.meta[1])?;
        Ok(PhaseField { grid, x_axes: axes[..d].to_vec(), xi_axes: axes[d..].to_vec(), antiperiodic: self.meta[3] != 0.0, values: self.values.clone() })
    }

    /// Metadata `[kind, h]`.
    pub fn from_operator(t: &OperatorKernel) -> Tensor {
        Tensor { dims: vec![t.n(), t.n()], meta: vec![Kind::Operator as i64 as f64, t.grid.h], values: t.matrix.clone() }
    }

    pub fn to_operator(&self) -> Result<OperatorKernel> {
        self.expect(Kind::Operator, 2)?;
        if self.dims.len() != 2 || self.dims[0] != self.dims[1] {
            return Err(Error::Format("operator kernels are square rank-2 tensors".into()));
        }
        OperatorKernel::new(Grid::with_step(1, self.dims[0], self.meta[1])?, self.values.clone())
    }

    /// Axes `(x, xi, y, eta)`; metadata `[kind, h, cell]`.
    pub fn from_wigner_kernel(k: &WignerKernel) -> Tensor {
        let n = k.grid.n;
        Tensor {
            dims: vec![2 * n, n / 2, 2 * n, n / 2],
            meta: vec![Kind::WignerKernel as i64 as f64, k.grid.h, k.cell],
            values: k.values.clone(),
        }
    }

    pub fn to_wigner_kernel(&self) -> Result<WignerKernel> {
        self.expect(Kind::WignerKernel, 3)?;
        let n = self.dims[0] / 2;
        if self.dims != [2 * n, n / 2, 2 * n, n / 2] {
            return Err(Error::Format(format!("bad Wigner kernel dims {:?}", self.dims)));
        }
        Ok(WignerKernel { grid: Grid::with_step(1, n, self.meta[1])?, values: self.values.clone(), cell: self.meta[2] })
    }

    pub fn to_symbol(&self) -> Result<Symbol> {
        Symbol::from_field(self.to_field()?)
    }
}

pub fn write_wkt(w: &mut impl Write, t: &Tensor) -> Result<()> {
    let count: usize = t.dims.iter().product();
    if count != t.values.len() {
        return Err(Error::Format(format!("dims {:?} hold {count} values, got {}", t.dims, t.values.len())));
    }
    w.write_all(MAGIC)?;
    w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
    for &d in &t.dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(t.meta.len() as u32).to_le_bytes())?;
    for m in &t.meta {
        w.write_all(&m.to_le_bytes())?;
    }
    for v in &t.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated WKT file".into())
    } else {
        Error::Io(e)
    }
}

/// Largest tensor a WKT reader accepts, in values.
const MAX_VALUES: usize = 1 << 31;

pub fn read_wkt<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::FormatVersion("file too short for a WKT header".into()))?;
    if &magic != MAGIC {
        return Err(Error::FormatVersion(format!("bad magic {:?}, expected WGK1", String::from_utf8_lossy(&magic))));
    }
    let rank = read_u32(r)? as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::Format(format!("rank {rank} out of range")));
    }
    let dims: Vec<usize> = (0..rank).map(|_| read_u32(r).map(|d| d as usize)).collect::<Result<_>>()?;
    let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).filter(|&c| c <= MAX_VALUES);
    let count = count.ok_or_else(|| Error::Format(format!("dims {dims:?} too large")))?;
    let nmeta = read_u32(r)? as usize;
    if nmeta > 4096 {
        return Err(Error::Format(format!("metadata block of {nmeta} values")));
    }
    let meta: Vec<f64> = (0..nmeta).map(|_| read_f64(r)).collect::<Result<_>>()?;
    // grow with the data rather than trusting the header for the allocation
    let mut bytes = Vec::new();
    r.by_ref().take(count as u64 * 16).read_to_end(&mut bytes)?;
    if bytes.len() != count * 16 {
        return Err(Error::Format("truncated WKT file".into()));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
        .collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after WKT payload".into()));
    }
    Ok(Tensor { dims, meta, values })
}

pub fn save_wkt(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_wkt(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_wkt(path: impl AsRef<Path>) -> Result<Tensor> {
    read_wkt(&mut BufReader::new(File::open(path)?))
}

/// 16-bit P5 PGM of `|values|` on a `rows x cols` raster. In log mode the
/// gray level is `clamp(log10(|v| / max) + 8, 0, 8) / 8`, otherwise `|v| / max`.
pub fn write_pgm(w: &mut impl Write, rows: usize, cols: usize, values: &[C64], log: bool) -> Result<()> {
    if rows * cols != values.len() {
        return Err(Error::Format(format!("{} values for a {rows}x{cols} image", values.len())));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    write!(w, "P5\n{cols} {rows}\n65535\n")?;
    for v in values {
        let r = if max > 0.0 { v.norm() / max } else { 0.0 };
        let level = if log { ((r.log10() + 8.0).clamp(0.0, 8.0)) / 8.0 } else { r };
        let g = (level * 65535.0).round() as u16;
        w.write_all(&g.to_be_bytes())?;
    }
    Ok(())
}

/// Heatmap of a d = 1 field with frequency increasing upwards and position
/// to the right.
pub fn save_field_pgm(path: impl AsRef<Path>, f: &PhaseField, log: bool) -> Result<()> {
    if f.x_axes.len() != 1 {
        return Err(Error::DimMismatch("heatmaps are drawn for d = 1 fields".into()));
    }
    let (nx, nk) = (f.x_axes[0].len, f.xi_axes[0].len);
    let mut raster = Vec::with_capacity(nx * nk);
    for k in (0..nk).rev() {
        for i in 0..nx {
            raster.push(f.values[i * nk + k]);
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(&mut w, nk, nx, &raster, log)?;
    w.flush()?;
    Ok(())
}

/// Numeric rows of a CSV file. `#` starts a comment; a first row that does
/// not parse as numbers is taken as a header and skipped.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().filter(|s| !s.is_empty()).map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) if !row.is_empty() => rows.push(row),
            Ok(_) => {}
            Err(_) if i == 0 => {}
            Err(e) => return Err(Error::Format(format!("{}: row {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Square matrix from a CSV file.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<RMat> {
    let rows = read_csv(&path)?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format(format!("{} does not hold a square matrix", path.as_ref().display())));
    }
    Ok(RMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// All numbers of a CSV file in reading order.
pub fn read_profile_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    Ok(read_csv(path)?.concat())
}

pub fn write_csv(w: &mut impl Write, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for r in rows {
        wr.write_record(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// `key = value` lines; `#` starts a comment.
fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn in_range(key: &str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(v >= lo && v <= hi) {
        return Err(Error::Config(format!("{key} = {v} outside [{lo}, {hi}]")));
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HMode {
    SelfDual,
    /// Uses the `h` key.
    Explicit,
}

/// Run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Samples per axis, even, in `4..=4096`.
    pub n: usize,
    pub h_mode: HMode,
    /// Step for `h_mode = explicit`, in `(0, 10]`.
    pub h: f64,
    /// Moyal tolerance, `(0, 1)`.
    pub tol_moyal: f64,
    /// Intertwining tolerance, `(0, 1)`.
    pub tol_intertwine: f64,
    /// Two-path FIO tolerance, `(0, 1)`.
    pub tol_two_path: f64,
    /// Peak-memory budget in GiB, `(0, 1024]`.
    pub memory_cap_gib: f64,
    /// STFT position stride for norms of large objects, `1..=8`.
    pub decimation: usize,
    /// Flow normalization, `(0, 1e3]`.
    pub omega: f64,
    /// Membership: mass fraction defining the reference radius, `(0, 1)`.
    pub ref_mass: f64,
    /// Membership: tube margin in cells, `[0, 64]`.
    pub margin_cells: f64,
    /// Membership: pass threshold for the off-tube mass, `(0, 1)`.
    pub pass_mass: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 32,
            h_mode: HMode::SelfDual,
            h: 1.0 / 32f64.sqrt(),
            tol_moyal: 1e-8,
            tol_intertwine: 1e-5,
            tol_two_path: 1e-4,
            memory_cap_gib: 2.0,
            decimation: 2,
            omega: OMEGA,
            ref_mass: 1e-4,
            margin_cells: 4.0,
            pass_mass: 1e-3,
            seed: 20240611,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let mut h_set = false;
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "n" => c.n = num(&k, &v)?,
                "h_mode" => {
                    c.h_mode = match v.as_str() {
                        "selfdual" => HMode::SelfDual,
                        "explicit" => HMode::Explicit,
                        _ => return Err(Error::Config(format!("h_mode must be selfdual or explicit, got '{v}'"))),
                    }
                }
                "h" => {
                    c.h = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 10.0)?;
                    h_set = true;
                }
                "tol_moyal" => c.tol_moyal = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1.0)?,
                "tol_intertwine" => c.tol_intertwine = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1.0)?,
                "tol_two_path" => c.tol_two_path = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1.0)?,
                "memory_cap_gib" => c.memory_cap_gib = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1024.0)?,
                "decimation" => c.decimation = in_range(&k, num::<usize>(&k, &v)? as f64, 1.0, 8.0)? as usize,
                "omega" => c.omega = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1e3)?,
                "ref_mass" => c.ref_mass = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1.0)?,
                "margin_cells" => c.margin_cells = in_range(&k, num(&k, &v)?, 0.0, 64.0)?,
                "pass_mass" => c.pass_mass = in_range(&k, num(&k, &v)?, f64::MIN_POSITIVE, 1.0)?,
                "seed" => c.seed = num(&k, &v)?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                _ => return Err(Error::Config(format!("unknown key '{k}'"))),
            }
        }
        if c.n < 4 || c.n > 4096 || c.n % 2 != 0 {
            return Err(Error::Config(format!("n = {} must be even and in 4..=4096", c.n)));
        }
        match c.h_mode {
            HMode::SelfDual => c.h = 1.0 / (c.n as f64).sqrt(),
            HMode::Explicit if !h_set => return Err(Error::Config("h_mode = explicit needs h".into())),
            HMode::Explicit => {}
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_step(1, self.n, self.h)
    }

    pub fn membership(&self) -> crate::fio::MembershipOptions {
        crate::fio::MembershipOptions {
            ref_mass: self.ref_mass,
            margin_cells: self.margin_cells,
            pass_mass: self.pass_mass,
            ..Default::default()
        }
    }
}

/// Hamiltonian configuration for `wig propagate`.
///
/// Keys: `n`; `A`, `B`, `C` (a number or a CSV path, default 0);
/// `omega`; `pert` (`none`, `multiplier`, `fourier_multiplier`,
/// `kn_symbol`); `pert_profile` (CSV of n samples, or a WKT symbol for
/// `kn_symbol`). Relative paths resolve against the file's directory.
#[derive(Clone, Debug, PartialEq)]
pub struct HamConfig {
    pub grid: Grid,
    pub hamiltonian: PerturbedHamiltonian,
}

impl HamConfig {
    pub fn parse(text: &str, base: &Path) -> Result<HamConfig> {
        let mut map = BTreeMap::new();
        for (k, v) in parse_kv(text)? {
            if !matches!(k.as_str(), "n" | "A" | "B" | "C" | "omega" | "pert" | "pert_profile") {
                return Err(Error::Config(format!("unknown key '{k}'")));
            }
            map.insert(k, v);
        }
        let n: usize = map.get("n").map(|v| num("n", v)).transpose()?.unwrap_or(32);
        if n < 4 || n % 4 != 0 || n > 4096 {
            return Err(Error::Config(format!("n = {n} must be a multiple of 4 in 4..=4096")));
        }
        let grid = Grid::new(1, n)?;
        let resolve = |v: &str| base.join(v);
        let block = |key: &str| -> Result<RMat> {
            match map.get(key) {
                None => Ok(RMat::zeros(1, 1)),
                Some(v) => match v.parse::<f64>() {
                    Ok(x) => Ok(RMat::from_element(1, 1, x)),
                    Err(_) => read_matrix_csv(resolve(v)),
                },
            }
        };
        let mut quad = QuadraticHamiltonian::new(block("A")?, block("B")?, block("C")?)?;
        if quad.dim() != 1 {
            return Err(Error::Config("propagation is implemented for d = 1".into()));
        }
        if let Some(v) = map.get("omega") {
            quad = quad.with_omega(in_range("omega", num("omega", v)?, f64::MIN_POSITIVE, 1e3)?);
        }
        let kind = map.get("pert").map(String::as_str).unwrap_or("none");
        let profile = || -> Result<PathBuf> {
            map.get("pert_profile").map(|p| resolve(p)).ok_or_else(|| Error::Config(format!("pert = {kind} needs pert_profile")))
        };
        let pert = match kind {
            "none" => Perturbation::None,
            "multiplier" => Perturbation::Multiplier(read_profile_csv(profile()?)?),
            "fourier_multiplier" => Perturbation::FourierMultiplier(read_profile_csv(profile()?)?),
            "kn_symbol" => Perturbation::KnSymbol(load_wkt(profile()?)?.to_symbol()?),
            _ => return Err(Error::Config(format!("unknown pert kind '{kind}'"))),
        };
        match &pert {
            Perturbation::Multiplier(v) | Perturbation::FourierMultiplier(v) if v.len() != n => {
                return Err(Error::Config(format!("perturbation profile has {} samples, n = {n}", v.len())));
            }
            Perturbation::KnSymbol(s) if s.grid() != grid => {
                return Err(Error::Config("symbol grid differs from n".into()));
            }
            _ => {}
        }
        Ok(HamConfig { grid, hamiltonian: PerturbedHamiltonian::new(quad, pert) })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HamConfig> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        HamConfig::parse(&std::fs::read_to_string(path)?, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::coherent_state;
    use crate::transforms::{stft, wigner};

    fn round_trip(t: &Tensor) -> Tensor {
        let mut buf = Vec::new();
        write_wkt(&mut buf, t).unwrap();
        read_wkt(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn wkt_round_trips_bit_exactly() {
        let g = Grid::new(1, 16).unwrap();
        let f = coherent_state(g, 0.3, -0.2);
        assert_eq!(round_trip(&Tensor::from_signal(&f)).to_signal().unwrap(), f);
        let w = wigner(&f, &f).unwrap();
        assert_eq!(round_trip(&Tensor::from_field(&w)).to_field().unwrap(), w);
        let s = stft(&f, &f).unwrap();
        assert_eq!(round_trip(&Tensor::from_field(&s)).to_field().unwrap(), s);
        let t = OperatorKernel::identity(g);
        assert_eq!(round_trip(&Tensor::from_operator(&t)).to_operator().unwrap(), t);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut buf = Vec::new();
        write_wkt(&mut buf, &Tensor::from_signal(&coherent_state(Grid::new(1, 8).unwrap(), 0.0, 0.0))).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_wkt(&mut bad.as_slice()), Err(Error::FormatVersion(_))));
        assert!(matches!(read_wkt(&mut &buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_wkt(&mut long.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_header_and_levels() {
        let mut buf = Vec::new();
        let vals = [C64::new(1.0, 0.0), C64::new(1e-4, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1e-9)];
        write_pgm(&mut buf, 2, 2, &vals, true).unwrap();
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        let px: Vec<u16> = buf[header.len()..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(px, vec![65535, 32768, 0, 0]);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let c = RunConfig::parse("n = 48\n# comment\nomega = 6.0\n").unwrap();
        assert_eq!(c.n, 48);
        assert!((c.h - 1.0 / 48f64.sqrt()).abs() < 1e-15);
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("n = 7"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("tol_moyal = 2"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("h_mode = explicit"), Err(Error::Config(_))));
        let e = RunConfig::parse("h_mode = explicit\nh = 0.25").unwrap();
        assert_eq!(e.h, 0.25);
    }

    #[test]
    fn ham_config_inline_blocks() {
        let h = HamConfig::parse("n = 16\nB = 1\nC = -1\n", Path::new(".")).unwrap();
        assert_eq!(h.grid.n, 16);
        assert_eq!(h.hamiltonian.quad, QuadraticHamiltonian::harmonic_oscillator());
        assert!(HamConfig::parse("pert = multiplier", Path::new(".")).is_err());
        assert!(HamConfig::parse("D = 1", Path::new(".")).is_err());
    }
}
