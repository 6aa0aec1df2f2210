//! Two-stage SFT data orchestration.
//!
//! Stage 1 trains on the non-generative (Type1) tasks alone. Stage 2 mixes
//! every Type1 instance back in as retrospective data alongside all Type2
//! (QA and dialogue) instances.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forge::InstructionInstance;
use crate::jsonl::{self, Registry};
use crate::schema::{DatasetDescriptor, TaskType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageType {
    Type1,
    Type2,
}

impl StageType {
    pub fn of_task(task: TaskType) -> StageType {
        match task {
            TaskType::QaMc | TaskType::QaSqa | TaskType::QaCqa | TaskType::Mrd => StageType::Type2,
            TaskType::Ner
            | TaskType::Re
            | TaskType::Cre
            | TaskType::Ee
            | TaskType::Coref
            | TaskType::Tc
            | TaskType::TpSs
            | TaskType::TpTe
            | TaskType::Mt
            | TaskType::TtDs
            | TaskType::TtTs => StageType::Type1,
        }
    }
}

/// Registry overrides win; general-dialogue rows are Type2; everything else
/// follows the task partition.
pub fn assign_stage(desc: &DatasetDescriptor) -> StageType {
    if let Some(s) = desc.stage_override {
        return s;
    }
    if desc.general_dialogue {
        return StageType::Type2;
    }
    StageType::of_task(desc.task)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePlan {
    pub seed: u64,
    pub stage1_instances: Vec<String>,
    pub stage2_instances: Vec<String>,
    pub stage1_count: usize,
    pub stage2_count: usize,
}

impl StagePlan {
    pub fn instances(&self, stage: u8) -> &[String] {
        if stage == 1 {
            &self.stage1_instances
        } else {
            &self.stage2_instances
        }
    }
}

/// Stage sizes implied by registry split counts alone, without materializing
/// any instances. Uses the `train` split of every row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub stage1_count: u64,
    pub stage2_count: u64,
}

pub fn plan_counts(registry: &Registry) -> StageCounts {
    let mut stage1 = 0;
    let mut total = 0;
    for d in registry.iter() {
        let n = d.split_counts.get("train").copied().unwrap_or(0);
        total += n;
        if assign_stage(d) == StageType::Type1 {
            stage1 += n;
        }
    }
    StageCounts {
        stage1_count: stage1,
        stage2_count: total,
    }
}

/// Stage 1 is every Type1 instance; stage 2 is stage 1 plus every Type2
/// instance. Each stage is one seeded shuffle of its members.
pub fn build_stage_plan(forged: &[InstructionInstance], registry: &Registry, seed: u64) -> Result<StagePlan> {
    let mut stage1 = Vec::new();
    let mut stage2 = Vec::with_capacity(forged.len());
    for inst in forged {
        let desc = registry
            .get(&inst.dataset_id)
            .ok_or_else(|| Error::UnregisteredDataset(inst.dataset_id.clone()))?;
        if assign_stage(desc) == StageType::Type1 {
            stage1.push(inst.instance_id.clone());
        }
        stage2.push(inst.instance_id.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stage1.shuffle(&mut rng);
    stage2.shuffle(&mut rng);
    Ok(StagePlan {
        seed,
        stage1_count: stage1.len(),
        stage2_count: stage2.len(),
        stage1_instances: stage1,
        stage2_instances: stage2,
    })
}

pub const CHECKPOINT_PROTOCOL: &str =
    "pick the checkpoint to carry forward using dev-set scores plus manual review of sampled outputs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub stage: u8,
    pub epochs: u32,
    pub batch_size_per_gpu: u32,
    pub learning_rate: f64,
    pub warmup_ratio: f64,
    pub max_length: u32,
    pub lora_rank: u32,
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub data_path: String,
    pub instance_count: usize,
    pub checkpoint_protocol: String,
}

impl TrainingManifest {
    /// QLoRA hyperparameters shared by both stages; stage 1 runs 5 epochs and
    /// stage 2 runs 3.
    pub fn for_stage(stage: u8, data_path: impl Into<String>, instance_count: usize) -> Result<Self> {
        let epochs = match stage {
            1 => 5,
            2 => 3,
            other => return Err(Error::InvalidManifest(format!("stage must be 1 or 2, got {other}"))),
        };
        Ok(TrainingManifest {
            stage,
            epochs,
            batch_size_per_gpu: 12,
            learning_rate: 0.0002,
            warmup_ratio: 0.1,
            max_length: 1024,
            lora_rank: 64,
            lora_alpha: 16,
            lora_dropout: 0.05,
            data_path: data_path.into(),
            instance_count,
            checkpoint_protocol: CHECKPOINT_PROTOCOL.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.epochs > 0
            && self.batch_size_per_gpu > 0
            && self.learning_rate > 0.0
            && self.warmup_ratio > 0.0
            && self.max_length > 0
            && self.lora_rank > 0
            && self.lora_alpha > 0
            && self.lora_dropout > 0.0;
        if !positive {
            return Err(Error::InvalidManifest("numeric fields must be > 0".into()));
        }
        if self.lora_dropout >= 1.0 {
            return Err(Error::InvalidManifest("lora_dropout must be < 1".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: TrainingManifest = serde_json::from_str(&text).map_err(|source| Error::Json { line: 1, source })?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct StageArtifacts {
    pub manifest: TrainingManifest,
    pub manifest_path: PathBuf,
    pub data_path: PathBuf,
}

/// Writes `stage<k>.jsonl` (instances in plan order) and
/// `stage<k>.manifest.json` under `plan_dir`.
pub fn emit_training_manifest(
    plan: &StagePlan,
    stage: u8,
    forged: &[InstructionInstance],
    plan_dir: &Path,
) -> Result<StageArtifacts> {
    let data_path = plan_dir.join(format!("stage{stage}.jsonl"));
    let manifest_path = plan_dir.join(format!("stage{stage}.manifest.json"));
    let ids = plan.instances(stage);
    let manifest = TrainingManifest::for_stage(stage, format!("stage{stage}.jsonl"), ids.len())?;

    let by_id: std::collections::HashMap<&str, &InstructionInstance> =
        forged.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let rows: Vec<&InstructionInstance> = ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownInstance(id.clone()))
        })
        .collect::<Result<_>>()?;
    jsonl::write_jsonl(&data_path, &rows)?;
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    jsonl::write_string(&manifest_path, &body)?;
    Ok(StageArtifacts {
        manifest,
        manifest_path,
        data_path,
    })
}

/// Checks the retrospective-data rule.
pub fn stage1_within_stage2(plan: &StagePlan) -> bool {
    let s2: HashSet<&str> = plan.stage2_instances.iter().map(String::as_str).collect();
    plan.stage1_instances.iter().all(|id| s2.contains(id.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Language;

    fn inst(id: &str, ds: &str) -> InstructionInstance {
        InstructionInstance {
            instance_id: id.into(),
            dataset_id: ds.into(),
            task: TaskType::Ner,
            language: Language::En,
            template_id: "t".into(),
            instruction: String::new(),
            input: String::new(),
            output: String::new(),
            source_doc_id: id.into(),
        }
    }

    #[test]
    fn partition_matches_task_groups() {
        for t in TaskType::ALL {
            let expected = if t.is_qa() || t == TaskType::Mrd {
                StageType::Type2
            } else {
                StageType::Type1
            };
            assert_eq!(StageType::of_task(t), expected, "{t}");
        }
        let ner = DatasetDescriptor::new("n", TaskType::Ner, Language::En);
        let qa = DatasetDescriptor::new("q", TaskType::QaMc, Language::En);
        let mt = DatasetDescriptor::new("m", TaskType::Mt, Language::Zh);
        assert_eq!(assign_stage(&ner), StageType::Type1);
        assert_eq!(assign_stage(&qa), StageType::Type2);
        assert_eq!(assign_stage(&mt), StageType::Type1);
    }

    #[test]
    fn overrides_win() {
        let mut d = DatasetDescriptor::new("n", TaskType::Ner, Language::En);
        d.stage_override = Some(StageType::Type2);
        assert_eq!(assign_stage(&d), StageType::Type2);
        let mut g = DatasetDescriptor::new("general-zh", TaskType::Mrd, Language::Zh);
        g.general_dialogue = true;
        assert_eq!(assign_stage(&g), StageType::Type2);
        let mut q = DatasetDescriptor::new("q", TaskType::QaMc, Language::Zh);
        q.stage_override = Some(StageType::Type1);
        assert_eq!(assign_stage(&q), StageType::Type1);
    }

    #[test]
    fn plan_without_type2_has_equal_stages() {
        let reg = Registry::from_descriptors([DatasetDescriptor::new("n", TaskType::Ner, Language::En)]).unwrap();
        let forged: Vec<_> = (0..10).map(|i| inst(&format!("n#{i}"), "n")).collect();
        let plan = build_stage_plan(&forged, &reg, 3).unwrap();
        let a: HashSet<_> = plan.stage1_instances.iter().collect();
        let b: HashSet<_> = plan.stage2_instances.iter().collect();
        assert_eq!(a, b);
        assert_eq!(plan.stage1_count, 10);
    }

    #[test]
    fn unregistered_dataset_fails() {
        let reg = Registry::new();
        let err = build_stage_plan(&[inst("x", "ghost")], &reg, 0).unwrap_err();
        assert!(matches!(err, Error::UnregisteredDataset(id) if id == "ghost"));
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::from_descriptors([DatasetDescriptor::new("n", TaskType::Ner, Language::En)]).unwrap();
        let forged: Vec<_> = (0..4).map(|i| inst(&format!("n#{i}"), "n")).collect();
        let plan = build_stage_plan(&forged, &reg, 1).unwrap();
        let art = emit_training_manifest(&plan, 1, &forged, dir.path()).unwrap();
        assert_eq!(TrainingManifest::load(&art.manifest_path).unwrap(), art.manifest);
        let rows: Vec<InstructionInstance> = jsonl::read_jsonl(&art.data_path).unwrap();
        let ids: Vec<_> = rows.iter().map(|r| r.instance_id.clone()).collect();
        assert_eq!(ids, plan.stage1_instances);
    }

    #[test]
    fn bad_stage_rejected() {
        assert!(TrainingManifest::for_stage(3, "x", 0).is_err());
        let mut m = TrainingManifest::for_stage(1, "x", 0).unwrap();
        m.lora_dropout = 1.0;
        assert!(m.validate().is_err());
    }
}
