//! Scheme bundles: `G.mat`, `M.mat`, `T.mat` and `scheme.json` in one directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tgt_core::{
    construct_disjunct, construct_good, BitMatrix, DisjunctCertificate, GoodCertificate,
    MatrixFile, MatrixKind, Scheme, SchemeParams,
};

use crate::config::{stream_rng, ExperimentConfig, G_STREAM, M_STREAM};
use crate::error::{CliError, Result};

pub const MANIFEST_FORMAT: &str = "tgt-scheme v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub m: u64,
    pub g: u64,
}

/// Contents of `scheme.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeManifest {
    pub format: String,
    pub params: SchemeParams,
    pub seed: u64,
    pub streams: Streams,
    pub c: f64,
    pub c_g: f64,
    pub k: usize,
    pub h: usize,
    pub t: usize,
    pub disjunct: DisjunctCertificate,
    pub good: GoodCertificate,
}

impl SchemeManifest {
    /// Largest number of flips the stored `G` was certified for.
    pub fn certified_errors(&self) -> usize {
        self.good.budget / 2
    }
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub scheme: Scheme,
    pub manifest: SchemeManifest,
}

/// Builds `M` on the M stream and `G` on the G stream of `config.seed`.
pub fn generate(config: &ExperimentConfig) -> Result<Bundle> {
    let params = config.params()?;
    let (m, disjunct) = construct_disjunct(
        params.n,
        params.d,
        &config.disjunct_config(),
        &mut stream_rng(config.seed, M_STREAM),
    )?;
    let (g, good) = construct_good(
        &params,
        &config.good_config(),
        &mut stream_rng(config.seed, G_STREAM),
    )?;
    let scheme = Scheme::build(params, g, m)?;
    let manifest = SchemeManifest {
        format: MANIFEST_FORMAT.into(),
        params,
        seed: config.seed,
        streams: Streams {
            m: M_STREAM,
            g: G_STREAM,
        },
        c: config.c,
        c_g: config.c_g,
        k: scheme.k(),
        h: scheme.h(),
        t: scheme.tests(),
        disjunct,
        good,
    };
    Ok(Bundle { scheme, manifest })
}

impl Bundle {
    fn matrix_files(&self) -> [(&'static str, MatrixFile); 3] {
        let SchemeParams { n, d, u, e, p } = self.manifest.params;
        let (seed, c, c_g) = (self.manifest.seed, self.manifest.c, self.manifest.c_g);
        [
            (
                "M.mat",
                MatrixFile::new(
                    self.scheme.m().clone(),
                    MatrixKind::Disjunct,
                    json!({"n": n, "d": d, "order": d + 1, "seed": seed, "c": c}),
                ),
            ),
            (
                "G.mat",
                MatrixFile::new(
                    self.scheme.g().clone(),
                    MatrixKind::Good,
                    json!({"n": n, "d": d, "u": u, "e": e, "p": p, "seed": seed, "c_g": c_g}),
                ),
            ),
            (
                "T.mat",
                MatrixFile::new(
                    self.scheme.t().clone(),
                    MatrixKind::Final,
                    json!({"n": n, "d": d, "u": u, "e": e, "p": p, "seed": seed, "c": c, "c_g": c_g}),
                ),
            ),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
        for (name, file) in self.matrix_files() {
            let path = dir.join(name);
            fs::write(&path, file.to_text()).map_err(|e| CliError::file(&path, e))?;
        }
        let path = dir.join("scheme.json");
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::file(&path, e))?;
        Ok(())
    }

    /// Loads a bundle, rebuilding `T` from `G` and `M` and checking it against
    /// the stored `T.mat` and the manifest's dimensions.
    pub fn read(dir: &Path) -> Result<Bundle> {
        let path = dir.join("scheme.json");
        let text = fs::read_to_string(&path).map_err(|e| CliError::file(&path, e))?;
        let manifest: SchemeManifest = serde_json::from_str(&text)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(CliError::Usage(format!(
                "{}: unsupported format {:?}",
                path.display(),
                manifest.format
            )));
        }
        let m = read_matrix(&dir.join("M.mat"), MatrixKind::Disjunct)?;
        let g = read_matrix(&dir.join("G.mat"), MatrixKind::Good)?;
        let t = read_matrix(&dir.join("T.mat"), MatrixKind::Final)?;
        let scheme = Scheme::build(manifest.params, g, m)?;
        if scheme.t() != &t {
            return Err(CliError::Verification(
                "T.mat differs from the matrix rebuilt from G and M".into(),
            ));
        }
        if (manifest.k, manifest.h, manifest.t) != (scheme.k(), scheme.h(), scheme.tests()) {
            return Err(CliError::Verification(format!(
                "manifest dimensions k={}, h={}, t={} disagree with matrices k={}, h={}, t={}",
                manifest.k,
                manifest.h,
                manifest.t,
                scheme.k(),
                scheme.h(),
                scheme.tests()
            )));
        }
        Ok(Bundle { scheme, manifest })
    }
}

pub fn read_matrix(path: &Path, kind: MatrixKind) -> Result<BitMatrix> {
    let file = read_matrix_file(path)?;
    if file.kind != kind {
        return Err(CliError::Usage(format!(
            "{}: expected a {} matrix, found {}",
            path.display(),
            kind.as_str(),
            file.kind.as_str()
        )));
    }
    Ok(file.matrix)
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    Ok(MatrixFile::from_text(&text)?)
}
