//! Named parameter storage and the `.pkck` binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "PKG1"
//! u32                      parameter count
//! repeated:
//!   u32 name_len, name bytes (UTF-8)
//!   u64 rows, u64 cols
//!   rows*cols f64 values
//! u32 trailer_len, trailer bytes (UTF-8 `key=value` lines)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::mat::Mat;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PKG1";
pub const CHECKPOINT_EXT: &str = "pkck";

/// Anything that owns named learnable tensors.
pub trait Parameters {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, m| n += m.len());
        n
    }

    fn to_store(&self) -> ParamStore {
        let mut store = ParamStore::new();
        self.visit_params(&mut |name, m| {
            store.insert(name, m.clone());
        });
        store
    }

    /// Overwrites every parameter from `store`; names and shapes must match.
    fn load_from(&mut self, store: &ParamStore) -> Result<()> {
        let mut err = None;
        self.visit_params_mut(&mut |name, m| {
            if err.is_some() {
                return;
            }
            match store.get(name) {
                None => {
                    err = Some(Error::Param(format!(
                        "checkpoint has no parameter `{name}`"
                    )))
                }
                Some(src) if src.shape() != m.shape() => {
                    err = Some(Error::Param(format!(
                        "parameter `{name}` has shape {:?} in checkpoint, expected {:?}",
                        src.shape(),
                        m.shape()
                    )))
                }
                Some(src) => *m = src.clone(),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Flat name → tensor map with deterministic (sorted) iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    tensors: BTreeMap<String, Mat>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Mat) -> Option<Mat> {
        self.tensors.insert(name.into(), value)
    }

    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.tensors.get(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn to_bytes(&self, trailer: &str) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, m) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(trailer.len() as u32).to_le_bytes());
        out.extend_from_slice(trailer.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(ParamStore, String)> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                msg: format!("bad magic {magic:?}, expected \"PKG1\""),
            });
        }
        let count = r.u32("parameter count")?;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = r.u32("name length")? as usize;
            let at = r.pos;
            let name = std::str::from_utf8(r.take(name_len, "name")?)
                .map_err(|_| Error::Format {
                    offset: at,
                    msg: "parameter name is not UTF-8".into(),
                })?
                .to_string();
            let rows = r.u64("rows")? as usize;
            let cols = r.u64("cols")? as usize;
            let n = rows.checked_mul(cols).ok_or(Error::Format {
                offset: r.pos,
                msg: format!("shape {rows}x{cols} overflows"),
            })?;
            let raw = r.take(n.saturating_mul(8), "values")?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            store.insert(name, Mat::from_vec(rows, cols, data)?);
        }
        let tlen = r.u32("trailer length")? as usize;
        let at = r.pos;
        let trailer = std::str::from_utf8(r.take(tlen, "trailer")?)
            .map_err(|_| Error::Format {
                offset: at,
                msg: "trailer is not UTF-8".into(),
            })?
            .to_string();
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos,
                msg: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        Ok((store, trailer))
    }

    pub fn save(&self, path: &Path, trailer: &str) -> Result<()> {
        std::fs::write(path, self.to_bytes(trailer)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(ParamStore, String)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

impl Parameters for ParamStore {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        for (k, v) in &self.tensors {
            f(k, v);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        for (k, v) in self.tensors.iter_mut() {
            f(k, v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                msg: format!("truncated while reading {what} ({n} bytes wanted)"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParamStore {
        let mut s = ParamStore::new();
        s.insert(
            "itp.obs.layer_in.A",
            Mat::from_fn(2, 2, |i, j| (i + 2 * j) as f64 - 0.5),
        );
        s.insert(
            "itp.obs.layer_in.W",
            Mat::from_rows(&[vec![f64::MIN_POSITIVE, -0.0, 1e300]]),
        );
        s
    }

    #[test]
    fn bad_magic() {
        let mut bytes = sample().to_bytes("stage=itp\n");
        bytes[0] = b'X';
        match ParamStore::from_bytes(&bytes) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = sample().to_bytes("");
        let cut = &bytes[..bytes.len() - 7];
        match ParamStore::from_bytes(cut) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_from_names_missing_parameter() {
        let mut target = sample();
        target.insert("fp.sim.layer_in.A", Mat::zeros(1, 1));
        let err = target.load_from(&sample()).unwrap_err();
        assert!(err.to_string().contains("fp.sim.layer_in.A"));
    }

    proptest! {
        #[test]
        fn byte_roundtrip_is_exact(
            shapes in proptest::collection::vec((1usize..5, 1usize..5), 1..5),
            seed in any::<u64>(),
            trailer in "[a-z_]{0,8}=[0-9.]{0,6}",
        ) {
            let mut store = ParamStore::new();
            let mut x = seed;
            for (i, (r, c)) in shapes.iter().enumerate() {
                let m = Mat::from_fn(*r, *c, |_, _| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    f64::from_bits(x >> 2)
                });
                store.insert(format!("p{i}"), m);
            }
            let (back, t) = ParamStore::from_bytes(&store.to_bytes(&trailer)).unwrap();
            prop_assert_eq!(t, trailer);
            prop_assert_eq!(back.len(), store.len());
            for (name, m) in store.iter() {
                let b = back.get(name).unwrap();
                prop_assert_eq!(b.shape(), m.shape());
                for (u, v) in b.data().iter().zip(m.data()) {
                    prop_assert_eq!(u.to_bits(), v.to_bits());
                }
            }
        }
    }
}
