//! Run manifest: SHA-256 of every artifact a stage read or wrote, plus the
//! seed it ran under. Durations go to a separate timings file so manifests
//! stay byte-identical across reruns.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArtifactKind {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub stage: String,
    pub kind: ArtifactKind,
    pub path: PathBuf,
    pub sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// (stage, milliseconds); informational only.
    pub timings: Vec<(String, u128)>,
    root: PathBuf,
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String, PipelineError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), ..Self::default() }
    }

    fn relative(&self, path: &Path) -> PathBuf {
        path.strip_prefix(&self.root).unwrap_or(path).to_path_buf()
    }

    pub fn record(
        &mut self,
        stage: &str,
        kind: ArtifactKind,
        path: &Path,
        seed: u64,
    ) -> Result<(), PipelineError> {
        let sha256 = sha256_file(path)?;
        self.entries.push(ManifestEntry {
            stage: stage.to_string(),
            kind,
            path: self.relative(path),
            sha256,
            seed,
        });
        Ok(())
    }

    pub fn note_timing(&mut self, stage: &str, millis: u128) {
        self.timings.push((stage.to_string(), millis));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,kind,path,sha256,seed\n");
        for e in &self.entries {
            let kind = match e.kind {
                ArtifactKind::Input => "input",
                ArtifactKind::Output => "output",
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.stage,
                kind,
                e.path.display(),
                e.sha256,
                e.seed
            ));
        }
        out
    }

    /// Writes `manifest.csv` (deterministic) and `timings.txt` (not).
    pub fn write(&self) -> Result<(), PipelineError> {
        let io = |p: &Path, e: std::io::Error| PipelineError::Io {
            path: p.display().to_string(),
            source: e,
        };
        let manifest_path = self.root.join("manifest.csv");
        std::fs::write(&manifest_path, self.to_csv()).map_err(|e| io(&manifest_path, e))?;
        let mut timing_text = String::from("stage,milliseconds\n");
        for (stage, ms) in &self.timings {
            timing_text.push_str(&format!("{stage},{ms}\n"));
        }
        let timings_path = self.root.join("timings.txt");
        std::fs::write(&timings_path, timing_text).map_err(|e| io(&timings_path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_changes_iff_content_changes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let h1 = sha256_file(&path).unwrap();
        let h2 = sha256_file(&path).unwrap();
        assert_eq!(h1, h2);
        std::fs::write(&path, "a,b\n1,3\n").unwrap();
        assert_ne!(h1, sha256_file(&path).unwrap());
    }

    #[test]
    fn manifest_paths_are_relative_and_csv_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "x\n").unwrap();
        let mut manifest = Manifest::new(dir.path());
        manifest.record("clean", ArtifactKind::Output, &path, 42).unwrap();
        manifest.note_timing("clean", 12);
        let csv = manifest.to_csv();
        assert!(csv.contains("clean,output,out.csv,"));
        assert!(csv.ends_with(",42\n"));
        manifest.write().unwrap();
        assert!(dir.path().join("manifest.csv").exists());
        assert!(dir.path().join("timings.txt").exists());
    }
}
