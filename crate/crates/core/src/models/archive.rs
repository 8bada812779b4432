//! Little-endian weight archive.
//!
//! Layout: magic `ROPW`, version `u32` (= 1), entry count `u32`, then per
//! entry: name length `u16`, UTF-8 name, `ndim` as `u8`, `ndim` dims as
//! `u32`, then the values as `f32`.

use crate::error::{Error, Result};
use crate::models::network::Network;

pub const MAGIC: &[u8; 4] = b"ROPW";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub name: String,
    pub dims: Vec<u32>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightArchive {
    pub entries: Vec<ArchiveEntry>,
}

fn archive_err(entry: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Archive { entry: entry.into(), reason: reason.into() }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, entry: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            archive_err(entry, format!("truncated at byte {} (needed {n} more)", self.at))
        })?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u8(&mut self, entry: &str) -> Result<u8> {
        Ok(self.take(1, entry)?[0])
    }

    fn u16(&mut self, entry: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, entry)?.try_into().unwrap()))
    }

    fn u32(&mut self, entry: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, entry)?.try_into().unwrap()))
    }
}

impl WeightArchive {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.name.as_str()) {
                return Err(archive_err(&e.name, "duplicate entry name"));
            }
            let name_len = u16::try_from(e.name.len()).map_err(|_| archive_err(&e.name, "name too long"))?;
            let ndim = u8::try_from(e.dims.len()).map_err(|_| archive_err(&e.name, "too many dims"))?;
            let count: u64 = e.dims.iter().map(|&d| d as u64).product();
            if count != e.values.len() as u64 {
                return Err(archive_err(&e.name, format!("dims hold {count} values, entry has {}", e.values.len())));
            }
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.push(ndim);
            for d in &e.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &e.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4, "<header>")? != MAGIC {
            return Err(archive_err("<header>", "bad magic; expected ROPW"));
        }
        let version = r.u32("<header>")?;
        if version != VERSION {
            return Err(archive_err("<header>", format!("unsupported version {version}")));
        }
        let count = r.u32("<header>")?;
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for i in 0..count {
            let placeholder = format!("<entry {i}>");
            let name_len = r.u16(&placeholder)? as usize;
            let name = std::str::from_utf8(r.take(name_len, &placeholder)?)
                .map_err(|_| archive_err(&placeholder, "name is not UTF-8"))?
                .to_string();
            if !seen.insert(name.clone()) {
                return Err(archive_err(&name, "duplicate entry name"));
            }
            let ndim = r.u8(&name)? as usize;
            let dims = (0..ndim).map(|_| r.u32(&name)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().map(|&d| d as usize).product();
            let raw = r.take(n.checked_mul(4).ok_or_else(|| archive_err(&name, "entry too large"))?, &name)?;
            let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            entries.push(ArchiveEntry { name, dims, values });
        }
        if r.at != bytes.len() {
            return Err(archive_err("<trailer>", format!("{} trailing bytes", bytes.len() - r.at)));
        }
        Ok(Self { entries })
    }
}

/// Snapshot of every parameter, narrowed to `f32`.
pub fn save_weights(net: &mut Network) -> Result<Vec<u8>> {
    let entries = net
        .params_mut()
        .into_iter()
        .map(|p| ArchiveEntry {
            name: p.name,
            dims: p.value.shape().iter().map(|&d| d as u32).collect(),
            values: p.value.data().iter().map(|&v| v as f32).collect(),
        })
        .collect();
    WeightArchive { entries }.to_bytes()
}

/// Loads an archive into a network of the same architecture. Nothing is
/// modified unless every entry matches by name and dims.
pub fn load_weights(net: &mut Network, bytes: &[u8]) -> Result<()> {
    let archive = WeightArchive::from_bytes(bytes)?;
    let mut params = net.params_mut();
    if archive.entries.len() > params.len() {
        let extra = &archive.entries[params.len()];
        return Err(archive_err(&extra.name, "unknown entry for this architecture"));
    }
    for (i, p) in params.iter().enumerate() {
        let Some(e) = archive.entries.get(i) else {
            return Err(archive_err(&p.name, "missing from archive"));
        };
        if e.name != p.name {
            return Err(archive_err(&e.name, format!("unknown entry; expected `{}`", p.name)));
        }
        let dims: Vec<u32> = p.value.shape().iter().map(|&d| d as u32).collect();
        if e.dims != dims {
            return Err(archive_err(&e.name, format!("dims {:?} do not match {:?}", e.dims, dims)));
        }
    }
    for (p, e) in params.iter_mut().zip(&archive.entries) {
        for (dst, &v) in p.value.data_mut().iter_mut().zip(&e.values) {
            *dst = v as f64;
        }
    }
    Ok(())
}
