//! Artifact hashing for reproducibility manifests.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

pub fn render(entries: &[(String, String)]) -> String {
    let mut out = String::from("artifact\tsha256\n");
    for (name, hash) in entries {
        out.push_str(name);
        out.push('\t');
        out.push_str(hash);
        out.push('\n');
    }
    out
}
