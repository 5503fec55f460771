use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content-addressed store of command results. Each entry carries the hash
/// of its payload, so a damaged file is noticed and recomputed.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    digest: String,
    payload: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    Corrupt,
}

impl Cache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    pub fn key(parts: &impl Serialize) -> String {
        sha256_hex(serde_json::to_string(parts).expect("key is serialisable").as_bytes())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> (Option<T>, Lookup) {
        let Ok(text) = std::fs::read_to_string(self.path(key)) else {
            return (None, Lookup::Miss);
        };
        let Ok(entry) = serde_json::from_str::<Entry>(&text) else {
            return (None, Lookup::Corrupt);
        };
        let body = serde_json::to_string(&entry.payload).unwrap_or_default();
        if sha256_hex(body.as_bytes()) != entry.digest {
            return (None, Lookup::Corrupt);
        }
        match serde_json::from_value(entry.payload) {
            Ok(v) => (Some(v), Lookup::Hit),
            Err(_) => (None, Lookup::Corrupt),
        }
    }

    pub fn put<T: Serialize>(&self, key: &str, value: &T) -> std::io::Result<()> {
        let payload = serde_json::to_value(value)?;
        let digest = sha256_hex(serde_json::to_string(&payload)?.as_bytes());
        let tmp = self.dir.join(format!("{key}.tmp"));
        std::fs::write(&tmp, serde_json::to_string(&Entry { digest, payload })?)?;
        std::fs::rename(tmp, self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = std::env::temp_dir().join(format!("asaireg-cache-{}", std::process::id()));
        let c = Cache::open(&dir).unwrap();
        let key = Cache::key(&("umatrix", 10));
        assert_eq!(c.get::<Vec<u32>>(&key).1, Lookup::Miss);
        c.put(&key, &vec![1u32, 2, 3]).unwrap();
        assert_eq!(c.get::<Vec<u32>>(&key), (Some(vec![1, 2, 3]), Lookup::Hit));
        let path = c.path(&key);
        let text = std::fs::read_to_string(&path).unwrap().replace("[1,2,3]", "[1,2,4]");
        std::fs::write(&path, text).unwrap();
        assert_eq!(c.get::<Vec<u32>>(&key), (None, Lookup::Corrupt));
        std::fs::write(&path, "not json").unwrap();
        assert_eq!(c.get::<Vec<u32>>(&key).1, Lookup::Corrupt);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
