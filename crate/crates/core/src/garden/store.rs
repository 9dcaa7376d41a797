use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{valid_id, GardenConfig, GardenError, GardenMode, GardenSession, GrowthStep};
use crate::graph::{from_graphml, to_graphml};
use crate::metrics::GraphSummary;

pub const GARDEN_FORMAT: &str = "gpfo-garden/1";
pub const STEP_FORMAT: &str = "gpfo-garden-step/1";

#[derive(Serialize, Deserialize)]
struct Meta {
    format: String,
    id: String,
    seed_prompt: String,
    mode: GardenMode,
    max_steps: usize,
    config: GardenConfig,
    step_count: usize,
    node_count: usize,
    edge_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    summary: Option<GraphSummary>,
}

#[derive(Serialize, Deserialize)]
struct StepFile {
    format: String,
    #[serde(flatten)]
    step: GrowthStep,
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> GardenError {
    GardenError::Store(format!("{}: {e}", path.display()))
}

/// Writes via a temporary sibling and a rename so readers never see a
/// half-written file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), GardenError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| store_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| store_err(path, e))
}

/// Directory layout, one directory per garden:
///
/// ```text
/// <root>/<id>/session.json
/// <root>/<id>/steps/000.json, 001.json, …
/// <root>/<id>/integrated.graphml
/// ```
#[derive(Debug, Clone)]
pub struct GardenStore {
    root: PathBuf,
}

impl GardenStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.dir(id).join("session.json").is_file()
    }

    /// Garden ids present in the store, sorted.
    pub fn list(&self) -> Result<Vec<String>, GardenError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(store_err(&self.root, e)),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| self.exists(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Writes step files that are not on disk yet, then the graph and the
    /// metadata (last, so a reader sees a consistent step count).
    pub fn save(&self, garden: &GardenSession) -> Result<(), GardenError> {
        let dir = self.dir(&garden.id);
        let steps = dir.join("steps");
        fs::create_dir_all(&steps).map_err(|e| store_err(&steps, e))?;
        for step in &garden.steps {
            let path = steps.join(format!("{:03}.json", step.index));
            if !path.exists() {
                let file = StepFile { format: STEP_FORMAT.into(), step: step.clone() };
                let text = serde_json::to_vec_pretty(&file).map_err(|e| store_err(&path, e))?;
                write_atomic(&path, &text)?;
            }
        }
        write_atomic(&dir.join("integrated.graphml"), to_graphml(&garden.integrated).as_bytes())?;
        let meta = Meta {
            format: GARDEN_FORMAT.into(),
            id: garden.id.clone(),
            seed_prompt: garden.seed_prompt.clone(),
            mode: garden.mode,
            max_steps: garden.max_steps,
            config: garden.config.clone(),
            step_count: garden.steps.len(),
            node_count: garden.integrated.node_count(),
            edge_count: garden.integrated.edge_count(),
            summary: garden.summary.clone(),
        };
        let path = dir.join("session.json");
        write_atomic(&path, &serde_json::to_vec_pretty(&meta).map_err(|e| store_err(&path, e))?)
    }

    /// Loads a garden and checks that the stored graph equals the fold of
    /// its step subgraphs.
    pub fn load(&self, id: &str) -> Result<GardenSession, GardenError> {
        if !self.exists(id) {
            return Err(GardenError::NotFound(id.to_string()));
        }
        let dir = self.dir(id);
        let path = dir.join("session.json");
        let text = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| store_err(&path, e))?;
        if meta.format != GARDEN_FORMAT {
            return Err(store_err(&path, format!("unsupported format {:?}", meta.format)));
        }
        let mut steps = Vec::with_capacity(meta.step_count);
        for k in 0..meta.step_count {
            let path = dir.join("steps").join(format!("{k:03}.json"));
            let text = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
            let file: StepFile = serde_json::from_str(&text).map_err(|e| store_err(&path, e))?;
            if file.format != STEP_FORMAT || file.step.index != k {
                return Err(store_err(&path, "unexpected format or step index"));
            }
            steps.push(file.step);
        }
        let mut garden = GardenSession {
            id: meta.id,
            seed_prompt: meta.seed_prompt,
            mode: meta.mode,
            max_steps: meta.max_steps,
            config: meta.config,
            steps,
            integrated: Default::default(),
            summary: meta.summary,
        };
        garden.integrated = garden.rebuild_integrated();
        let path = dir.join("integrated.graphml");
        let xml = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
        let stored = from_graphml(&xml).map_err(|e| store_err(&path, e))?;
        if stored != garden.integrated {
            return Err(store_err(&path, "integrated graph differs from the fold of the step subgraphs"));
        }
        Ok(garden)
    }
}
