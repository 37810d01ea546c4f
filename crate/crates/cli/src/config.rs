use std::path::PathBuf;

use fracgeom::fields::DEFAULT_THRESHOLDS;
use fracgeom::io::sha256_hex;
use fracgeom::verify::Tolerances;
use serde::Serialize;

/// Sphere grid sizes per dimension.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resolutions {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Default for Resolutions {
    fn default() -> Self {
        Self { n1: 2, n2: 256, n3: 400 }
    }
}

/// Everything that determines the numbers a command produces. The output
/// directory is not part of the digest: it only decides where files land.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub resolution: Resolutions,
    pub samples: usize,
    pub thresholds: usize,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

pub const DEFAULT_SAMPLES: usize = 80_000;

impl RunConfig {
    pub fn new(
        seed: u64,
        resolution: Option<usize>,
        samples: Option<usize>,
        thresholds: Option<usize>,
        tolerances: Tolerances,
        out_dir: PathBuf,
    ) -> Self {
        let resolution = match resolution {
            Some(r) => Resolutions { n1: 2, n2: r, n3: r },
            None => Resolutions::default(),
        };
        Self {
            seed,
            resolution,
            samples: samples.unwrap_or(DEFAULT_SAMPLES),
            thresholds: thresholds.unwrap_or(DEFAULT_THRESHOLDS),
            tolerances,
            out_dir,
        }
    }

    pub fn resolution_for(&self, n: usize) -> usize {
        match n {
            1 => self.resolution.n1,
            2 => self.resolution.n2,
            _ => self.resolution.n3,
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
