//! File cache for reference solutions.
//!
//! Each entry is `<key>.bin` (binary field format), `<key>.json` (solver
//! statistics of the run that produced it) and a `<key>.sha256` sidecar
//! holding the hex digest of the `.bin` bytes followed by the `.json` bytes. The key itself is the
//! SHA-256 of a canonical description of everything that determines the field.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::geometry::Point2;
use crate::io::{read_field_binary, write_field_binary};
use crate::kernel::Material;
use crate::sn::ScalarField;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn entry_digest(bin: &[u8], meta: &str) -> String {
    let mut h = Sha256::new();
    h.update(bin);
    h.update(meta.as_bytes());
    hex::encode(h.finalize())
}

/// Inputs that determine a reference field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub material: Material,
    pub source: f64,
    pub mesh: usize,
    pub sn_order: usize,
    pub si_tol: f64,
}

impl CacheKey {
    pub fn canonical(&self) -> String {
        format!(
            "radtrans-reference-v1;sigma_t={:e};sigma_s={:e};source={:e};domain=unit_square;mesh={};quadrature=LS{};si_tol={:e}",
            self.material.sigma_t, self.material.sigma_s, self.source, self.mesh, self.sn_order, self.si_tol
        )
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit {
        field: ScalarField,
        meta: String,
    },
    Miss,
    /// The entry exists but failed verification; the reason is reported as a warning.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `(.bin, .json, .sha256)` paths of an entry.
    pub fn paths(&self, key: &CacheKey) -> (PathBuf, PathBuf, PathBuf) {
        let d = key.digest();
        (
            self.dir.join(format!("{d}.bin")),
            self.dir.join(format!("{d}.json")),
            self.dir.join(format!("{d}.sha256")),
        )
    }

    pub fn load(&self, key: &CacheKey) -> CacheLookup {
        let (bin, json, sidecar) = self.paths(key);
        if !bin.exists() && !json.exists() && !sidecar.exists() {
            return CacheLookup::Miss;
        }
        let bytes = match fs::read(&bin) {
            Ok(b) => b,
            Err(e) => return CacheLookup::Corrupt(format!("cannot read {}: {e}", bin.display())),
        };
        let meta = match fs::read_to_string(&json) {
            Ok(m) => m,
            Err(e) => return CacheLookup::Corrupt(format!("cannot read {}: {e}", json.display())),
        };
        let expected = match fs::read_to_string(&sidecar) {
            Ok(s) => s.trim().to_string(),
            Err(e) => {
                return CacheLookup::Corrupt(format!("cannot read {}: {e}", sidecar.display()))
            }
        };
        let actual = entry_digest(&bytes, &meta);
        if actual != expected {
            return CacheLookup::Corrupt(format!(
                "hash mismatch for {} (stored {expected}, found {actual})",
                bin.display()
            ));
        }
        match read_field_binary(bytes.as_slice(), Point2::new(0.0, 0.0)) {
            Ok(field) if field.grid().nx == key.mesh && field.grid().ny == key.mesh => {
                CacheLookup::Hit { field, meta }
            }
            Ok(f) => CacheLookup::Corrupt(format!(
                "{} holds a {}x{} field, expected {}x{}",
                bin.display(),
                f.grid().nx,
                f.grid().ny,
                key.mesh,
                key.mesh
            )),
            Err(e) => CacheLookup::Corrupt(format!("{}: {e}", bin.display())),
        }
    }

    pub fn store(&self, key: &CacheKey, field: &ScalarField, meta: &str) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let (bin, json, sidecar) = self.paths(key);
        let mut bytes = Vec::new();
        write_field_binary(&mut bytes, field)?;
        let tmp = bin.with_extension("bin.tmp");
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &bin)?;
        fs::write(&json, meta)?;
        fs::write(&sidecar, format!("{}\n", entry_digest(&bytes, meta)))?;
        Ok(())
    }

    /// Removes every cache entry; returns the number of files deleted.
    pub fn clear(&self) -> Result<usize> {
        if !self.dir.exists() {
            return Ok(0);
        }
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if path.is_file() && matches!(ext, "bin" | "json" | "sha256" | "tmp") {
                fs::remove_file(&path)?;
                n += 1;
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sn::Grid2D;

    fn key(mesh: usize) -> CacheKey {
        CacheKey {
            material: Material::new(1.0, 0.5).unwrap(),
            source: 1.0,
            mesh,
            sn_order: 4,
            si_tol: 1e-10,
        }
    }

    #[test]
    fn store_load_and_detect_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let k = key(4);
        assert_eq!(cache.load(&k), CacheLookup::Miss);
        let f = ScalarField::from_fn(Grid2D::unit_square(4).unwrap(), |i, j| (i * j) as f64 + 0.5);
        cache.store(&k, &f, "{}").unwrap();
        assert_eq!(
            cache.load(&k),
            CacheLookup::Hit {
                field: f.clone(),
                meta: "{}".into()
            }
        );

        let (bin, json, _) = cache.paths(&k);
        fs::write(&json, "{\"x\":1}").unwrap();
        assert!(matches!(cache.load(&k), CacheLookup::Corrupt(_)));
        fs::write(&json, "{}").unwrap();
        let mut bytes = fs::read(&bin).unwrap();
        bytes[40] ^= 1;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(cache.load(&k), CacheLookup::Corrupt(_)));
        assert_eq!(cache.clear().unwrap(), 3);
        assert_eq!(cache.load(&k), CacheLookup::Miss);
    }

    #[test]
    fn keys_separate_inputs() {
        let a = key(4);
        let mut b = a;
        b.si_tol = 1e-9;
        let mut c = a;
        c.sn_order = 6;
        assert_ne!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_ne!(a.digest(), key(8).digest());
        assert_eq!(a.digest(), key(4).digest());
    }
}
