//! Run manifests: what was run, with which seed, on which bytes.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub elapsed_seconds: f64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    fn digests(paths: &[String]) -> io::Result<Value> {
        let mut map = Map::new();
        for p in paths {
            map.insert(p.clone(), Value::String(sha256_file(Path::new(p))?));
        }
        Ok(Value::Object(map))
    }

    pub fn to_json(&self) -> io::Result<Value> {
        Ok(json!({
            "tool": "flmgof",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "threads": self.threads,
            "elapsed_seconds": self.elapsed_seconds,
            "inputs": Self::digests(&self.inputs)?,
            "outputs": Self::digests(&self.outputs)?,
        }))
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()?).map_err(io::Error::other)?;
        fs::write(path, text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("abc.txt");
        fs::write(&f, "abc").unwrap();
        assert_eq!(sha256_file(&f).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let m = Manifest { command: "test".into(), inputs: vec![f.display().to_string()], ..Manifest::default() };
        let v = m.to_json().unwrap();
        assert_eq!(v["inputs"][f.display().to_string()], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
