//! Key-value run configuration.
//!
//! ```text
//! # comment
//! n = 256
//! K = 4
//! K_g = 4
//! jmax = 7
//! ```
//!
//! Unknown keys are rejected. The hash is sha256 over the canonical
//! `key=value` lines of the resolved configuration, so equivalent files hash
//! the same regardless of comments, spacing or key order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filters::WindowConfig;
use crate::system::SystemConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    /// Generator order.
    pub k: u32,
    /// Window order.
    pub k_g: u32,
    /// Window gain; `None` normalizes the conic floor to one.
    pub gain: Option<f64>,
    /// Largest ONB scale included in subsystem checks and decay probes.
    pub j: Option<u32>,
    /// Largest oversampling level in subsystem checks and decay probes.
    pub p: u32,
    pub jmax: Option<u32>,
    /// Infinite-product truncation depth.
    pub depth: u32,
    pub tol_reconstruction: f64,
    pub tol_parseval: f64,
    pub tol_gram: f64,
    pub tol_partition: f64,
    /// Relative threshold for support fits.
    pub support_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 256,
            k: 4,
            k_g: 4,
            gain: None,
            j: None,
            p: 4,
            jmax: None,
            depth: 24,
            tol_reconstruction: 1e-10,
            tol_parseval: 1e-8,
            tol_gram: 1e-3,
            tol_partition: 1e-11,
            support_threshold: 1e-6,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(Error::Config(format!("duplicate key {k}")));
            }
            match k {
                "n" | "N" => c.n = parse_num(k, v)?,
                "K" | "k" => c.k = parse_num(k, v)?,
                "K_g" | "k_g" => c.k_g = parse_num(k, v)?,
                "gain" => c.gain = Some(parse_num(k, v)?),
                "J" => c.j = Some(parse_num(k, v)?),
                "P" | "p" => c.p = parse_num(k, v)?,
                "jmax" => c.jmax = Some(parse_num(k, v)?),
                "depth" | "T" => c.depth = parse_num(k, v)?,
                "tol_reconstruction" => c.tol_reconstruction = parse_num(k, v)?,
                "tol_parseval" => c.tol_parseval = parse_num(k, v)?,
                "tol_gram" => c.tol_gram = parse_num(k, v)?,
                "tol_partition" => c.tol_partition = parse_num(k, v)?,
                "support_threshold" => c.support_threshold = parse_num(k, v)?,
                _ => return Err(Error::Config(format!("unknown key {k}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system().resolved_jmax()?;
        if !(1..=10).contains(&self.k) || !(1..=10).contains(&self.k_g) {
            return Err(Error::Config("orders K, K_g must be in 1..=10".into()));
        }
        let l = self.n.trailing_zeros();
        if let Some(j) = self.j {
            if j >= l {
                return Err(Error::Config(format!("J = {j} must be below log2 N = {l}")));
            }
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return Err(Error::Config("support_threshold must be in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            n: self.n,
            order: self.k,
            window: WindowConfig { order: self.k_g, gain: self.gain, depth: self.depth },
            jmax: self.jmax,
            depth: self.depth,
        }
    }

    pub fn resolved_j(&self) -> u32 {
        self.j.unwrap_or(self.n.trailing_zeros() - 1)
    }

    /// Canonical text form, one `key=value` per line, keys sorted.
    pub fn canonical(&self) -> String {
        let l = self.n.trailing_zeros();
        let mut m = BTreeMap::new();
        m.insert("J", self.resolved_j().to_string());
        m.insert("K", self.k.to_string());
        m.insert("K_g", self.k_g.to_string());
        m.insert("P", self.p.to_string());
        m.insert("depth", self.depth.to_string());
        m.insert("gain", self.gain.map_or("auto".into(), |g| format!("{g:e}")));
        m.insert("jmax", self.jmax.unwrap_or(l - 1).to_string());
        m.insert("n", self.n.to_string());
        m.insert("support_threshold", format!("{:e}", self.support_threshold));
        m.insert("tol_gram", format!("{:e}", self.tol_gram));
        m.insert("tol_parseval", format!("{:e}", self.tol_parseval));
        m.insert("tol_partition", format!("{:e}", self.tol_partition));
        m.insert("tol_reconstruction", format!("{:e}", self.tol_reconstruction));
        m.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_hash_stable() {
        let a = RunConfig::parse("n = 64\nK=2 # gen\n\njmax=5\n").unwrap();
        let b = RunConfig::parse("jmax: 5\nK = 2\nn=64").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = RunConfig::parse("n = 64\nK=3\n").unwrap();
        assert_ne!(a.hash(), c.hash());
        // implicit default jmax equals explicit L-1
        let d = RunConfig::parse("n = 64\nK=2\n").unwrap();
        assert_eq!(a.hash(), d.hash());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("n = 100").is_err());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("n = 64\nn = 64").is_err());
        assert!(RunConfig::parse("n = 64\njmax = 6").is_err());
        assert!(RunConfig::parse("just words").is_err());
    }

    #[test]
    fn sha_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
