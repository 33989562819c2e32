//! Versioned binary blob of named, shaped arrays.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SCPARAMS"
//! version  u32
//! count    u32
//! entry*   name_len u32 | name (UTF-8) | dtype u8 (0 = f32, 1 = f64)
//!          | ndim u32 | dims u64 × ndim | values (dtype, row-major)
//! ```
//!
//! A plain-text manifest listing `name dtype dims` per line accompanies the
//! blob on disk.

use std::fs;
use std::path::Path;

use crate::error::{AutodiffError, Result};
use crate::scalar::DType;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SCPARAMS";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub entries: Vec<CheckpointEntry>,
}

fn bad(msg: impl Into<String>) -> AutodiffError {
    AutodiffError::Checkpoint(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| bad(format!("truncated at byte {} (need {n} more)", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.push(match e.dtype {
                DType::F32 => 0,
                DType::F64 => 1,
            });
            out.extend_from_slice(&(e.shape.len() as u32).to_le_bytes());
            for &d in &e.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in &e.values {
                match e.dtype {
                    DType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                    DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8).ok() != Some(&CHECKPOINT_MAGIC[..]) {
            return Err(bad("missing magic header"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("version {version} is not supported (expected {CHECKPOINT_VERSION})")));
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| bad("parameter name is not UTF-8"))?
                .to_string();
            let dtype = match r.u8()? {
                0 => DType::F32,
                1 => DType::F64,
                other => return Err(bad(format!("`{name}`: unknown dtype tag {other}"))),
            };
            let ndim = r.u32()? as usize;
            if ndim.saturating_mul(8) > r.remaining() {
                return Err(bad(format!("`{name}`: truncated dimension list")));
            }
            let mut shape = Vec::with_capacity(ndim);
            let mut elems: usize = 1;
            for _ in 0..ndim {
                let d = usize::try_from(r.u64()?).map_err(|_| bad(format!("`{name}`: dimension overflow")))?;
                elems = elems.checked_mul(d).ok_or_else(|| bad(format!("`{name}`: element count overflow")))?;
                shape.push(d);
            }
            let bytes = elems
                .checked_mul(dtype.size())
                .filter(|&b| b <= r.remaining())
                .ok_or_else(|| bad(format!("`{name}`: {elems} values do not fit in the remaining data")))?;
            let raw = r.take(bytes)?;
            let values = match dtype {
                DType::F32 => raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
                DType::F64 => raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            };
            entries.push(CheckpointEntry { name, shape, dtype, values });
        }
        if r.remaining() != 0 {
            return Err(bad(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Checkpoint { entries })
    }

    /// One line per tensor: `name<TAB>dtype<TAB>d0xd1...`.
    pub fn manifest(&self) -> String {
        let mut out = format!("# checkpoint v{CHECKPOINT_VERSION}\n");
        for e in &self.entries {
            let dims: Vec<String> = e.shape.iter().map(usize::to_string).collect();
            out.push_str(&format!("{}\t{}\t{}\n", e.name, e.dtype.name(), dims.join("x")));
        }
        out
    }

    /// Writes the blob to `path` and the manifest next to it with a
    /// `.manifest` suffix appended.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        let mut manifest = path.as_os_str().to_owned();
        manifest.push(".manifest");
        fs::write(manifest, self.manifest())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            entries: vec![
                CheckpointEntry { name: "a.w".into(), shape: vec![2, 3], dtype: DType::F64, values: vec![1.5; 6] },
                CheckpointEntry { name: "b".into(), shape: vec![1, 1], dtype: DType::F32, values: vec![-0.25] },
            ],
        }
    }

    #[test]
    fn manifest_lists_names_and_shapes() {
        let m = sample().manifest();
        assert!(m.contains("a.w\tf64\t2x3\n"));
        assert!(m.contains("b\tf32\t1x1\n"));
    }

    #[test]
    fn wrong_version_is_named() {
        let mut bytes = sample().to_bytes();
        bytes[8] = 9;
        let err = Checkpoint::from_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("version 9"), "{err}");
    }

    #[test]
    fn huge_dimensions_are_rejected_without_allocating() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.push(b'x');
        bytes.push(1);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn f64_blobs_round_trip(values in prop::collection::vec(-1e6f64..1e6, 0..40), name in "[a-z.]{1,12}") {
            let ckpt = Checkpoint {
                entries: vec![CheckpointEntry { name, shape: vec![values.len(), 1], dtype: DType::F64, values }],
            };
            prop_assert_eq!(Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap(), ckpt);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            let _ = Checkpoint::from_bytes(&bytes);
        }
    }
}
