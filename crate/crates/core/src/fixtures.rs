//! Bundled fixtures: a registry whose rows mirror the published per-task
//! instance counts, and seeded synthetic corpora for every task type.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jsonl::Registry;
use crate::schema::{
    Corpus, DatasetDescriptor, DialogueTurn, EntityMention, EventArgument, EventFrame, Language, QAInstance, QaOption,
    RelationMode, RelationTriple, Speaker, TaskType, TextPairInstance, TranslationPair, UnifiedDocument,
};

fn row(id: &str, task: TaskType, lang: Language, train: u64, description: &str) -> DatasetDescriptor {
    let mut d = DatasetDescriptor::new(id, task, lang).with_split("train", train);
    d.description = description.to_string();
    d
}

/// One row per non-empty cell of the instruction-data statistics table.
pub fn reference_registry() -> Registry {
    use Language::{En, Zh};
    use TaskType::*;
    let mut general = row(
        "general-dialogue-zh",
        Mrd,
        Zh,
        560_000,
        "general conversation and harmlessness data",
    );
    general.general_dialogue = true;
    let rows = vec![
        row("ner-en", Ner, En, 28_603, "English named entity recognition"),
        row("ner-zh", Ner, Zh, 44_667, "Chinese named entity recognition"),
        row("re-en", Re, En, 17_279, "English relation extraction"),
        row("re-zh", Re, Zh, 26_606, "Chinese relation extraction"),
        row("ee-en", Ee, En, 2_022, "English event extraction"),
        row("ee-zh", Ee, Zh, 2_992, "Chinese event extraction"),
        row("tc-en", Tc, En, 40_339, "English text classification"),
        row("tc-zh", Tc, Zh, 37_624, "Chinese text classification"),
        row("tp-en", TpSs, En, 11_237, "English text pair tasks"),
        row("tp-zh", TpTe, Zh, 45_548, "Chinese text pair tasks"),
        row("mt-zh", Mt, Zh, 74_113, "English-Chinese machine translation"),
        row("qa-en", QaMc, En, 57_962, "English biomedical question answering"),
        row("qa-zh", QaMc, Zh, 129_562, "Chinese biomedical question answering"),
        row("mrd-en", Mrd, En, 10_000, "English biomedical multi-round dialogue"),
        row("mrd-zh", Mrd, Zh, 16_391, "Chinese biomedical multi-round dialogue"),
        general,
        row(
            "other-zh",
            TtTs,
            Zh,
            9_370,
            "other additional tasks (composition unspecified)",
        ),
    ];
    Registry::from_descriptors(rows).expect("fixture ids are unique")
}

struct Pools {
    types: [&'static str; 2],
    heads: &'static [&'static str],
    tails: &'static [&'static str],
    filler: &'static [&'static str],
    joiner: &'static str,
}

fn pools(lang: Language) -> Pools {
    match lang {
        Language::En => Pools {
            types: ["Chemical", "Disease"],
            heads: &[
                "aspirin",
                "valproic acid",
                "Valproic acid",
                "ammonia",
                "heparin",
                "warfarin",
                "ibuprofen",
                "cisplatin",
                "metformin",
                "lithium carbonate",
                "caffeine",
                "Phenobarbital",
            ],
            tails: &[
                "epilepsy",
                "influenza",
                "dyskinesia",
                "hepatitis",
                "asthma",
                "type 2 diabetes",
                "hypertension",
                "anemia",
                "Influenza",
                "renal failure",
            ],
            filler: &[
                "patients",
                "treated",
                "with",
                "showed",
                "reduced",
                "the",
                "risk",
                "of",
                "after",
                "study",
                "in",
                "and",
                "was",
                "associated",
                "cohort",
                "dose",
            ],
            joiner: " ",
        },
        Language::Zh => Pools {
            types: ["药物", "疾病"],
            heads: &[
                "阿司匹林",
                "丙戊酸",
                "氨",
                "肝素",
                "华法林",
                "布洛芬",
                "顺铂",
                "二甲双胍",
                "碳酸锂",
            ],
            tails: &[
                "癫痫",
                "流感",
                "运动障碍",
                "肝炎",
                "哮喘",
                "糖尿病",
                "高血压",
                "贫血",
                "肾衰竭",
            ],
            filler: &[
                "患者", "接受", "治疗", "后", "出现", "明显", "降低", "风险", "研究", "显示", "与", "相关",
            ],
            joiner: "",
        },
    }
}

fn relation_labels(lang: Language) -> [&'static str; 2] {
    match lang {
        Language::En => ["CID", "Treats"],
        Language::Zh => ["并发症", "治疗"],
    }
}

fn class_labels(lang: Language) -> &'static [&'static str] {
    match lang {
        Language::En => &[
            "Case Report",
            "Prevention",
            "Transmission",
            "Diagnosis",
            "Mechanism",
            "Treatment",
            "Epidemic Forecasting",
        ],
        Language::Zh => &["治疗或手术", "疾病", "检查", "预防", "病因"],
    }
}

fn event_labels(lang: Language) -> ([&'static str; 2], [&'static str; 2]) {
    match lang {
        Language::En => (["Treatment", "Adverse_event"], ["Drug", "Disorder"]),
        Language::Zh => (["治疗", "不良事件"], ["药物", "疾病"]),
    }
}

/// A descriptor with the vocabularies the synthetic generator draws from.
pub fn synthetic_descriptor(task: TaskType, lang: Language) -> DatasetDescriptor {
    let id = format!("syn-{}-{}", task.tag().to_ascii_lowercase().replace('/', "-"), lang);
    let p = pools(lang);
    let mut d = DatasetDescriptor::new(id, task, lang);
    d.description = "synthetic fixture".into();
    match task {
        TaskType::Ner => d.label_vocab = p.types.iter().map(|s| s.to_string()).collect(),
        TaskType::Re => d.label_vocab = relation_labels(lang).iter().map(|s| s.to_string()).collect(),
        TaskType::Cre => d.label_vocab = vec![if lang == Language::En { "Cause" } else { "导致" }.into()],
        TaskType::Coref => d.label_vocab = vec![if lang == Language::En { "Coreference" } else { "共指" }.into()],
        TaskType::Ee => {
            let (types, roles) = event_labels(lang);
            d.label_vocab = types.iter().map(|s| s.to_string()).collect();
            d.role_vocab = roles.iter().map(|s| s.to_string()).collect();
        }
        TaskType::Tc => d.label_vocab = class_labels(lang).iter().map(|s| s.to_string()).collect(),
        TaskType::TpSs => d.label_vocab = vec!["0".into(), "1".into(), "2".into(), "3".into()],
        TaskType::TpTe => d.label_vocab = vec!["entailment".into(), "neutral".into(), "contradiction".into()],
        _ => {}
    }
    d
}

/// RE in pair mode: one relation, rendered as `[head, tail]`.
pub fn pair_mode_descriptor(lang: Language) -> DatasetDescriptor {
    let mut d = synthetic_descriptor(TaskType::Re, lang);
    d.id.push_str("-pair");
    d.label_vocab.truncate(1);
    d.relation_mode = Some(RelationMode::Pair);
    d
}

/// Tokens joined into text, with the char span of each token.
struct Built {
    text: String,
    spans: Vec<(usize, usize)>,
}

fn build_text(tokens: &[&str], joiner: &str) -> Built {
    let mut text = String::new();
    let mut spans = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            text.push_str(joiner);
            pos += joiner.chars().count();
        }
        let len = t.chars().count();
        spans.push((pos, pos + len));
        text.push_str(t);
        pos += len;
    }
    Built { text, spans }
}

fn sentence(rng: &mut ChaCha8Rng, p: &Pools, words: usize) -> String {
    let tokens: Vec<&str> = (0..words)
        .map(|_| *p.filler.choose(rng).expect("non-empty pool"))
        .collect();
    tokens.join(p.joiner)
}

/// Text with entity mentions from both pools at random positions.
fn annotated_text(rng: &mut ChaCha8Rng, p: &Pools, max_entities: usize) -> (String, Vec<EntityMention>) {
    let n_entities = rng.random_range(0..=max_entities);
    let n_filler = rng.random_range(3..12);
    let mut tokens: Vec<(&str, Option<&str>)> = (0..n_filler).map(|_| (*p.filler.choose(rng).unwrap(), None)).collect();
    for _ in 0..n_entities {
        let (surface, etype) = if rng.random_bool(0.5) {
            (*p.heads.choose(rng).unwrap(), p.types[0])
        } else {
            (*p.tails.choose(rng).unwrap(), p.types[1])
        };
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, (surface, Some(etype)));
    }
    let words: Vec<&str> = tokens.iter().map(|t| t.0).collect();
    let built = build_text(&words, p.joiner);
    let entities = tokens
        .iter()
        .zip(&built.spans)
        .filter_map(|((surface, etype), &(s, e))| etype.map(|t| EntityMention::new(*surface, t, s, e)))
        .collect();
    (built.text, entities)
}

fn option_pool(lang: Language) -> &'static [&'static str] {
    match lang {
        Language::En => &[
            "Aspirin",
            "Heparin",
            "Warfarin",
            "Metformin",
            "Insulin therapy",
            "Beta blockade",
            "Watchful waiting",
            "Surgical resection",
            "Radiotherapy",
            "Oral rehydration",
        ],
        Language::Zh => &[
            "阿司匹林",
            "肝素",
            "华法林",
            "二甲双胍",
            "胰岛素治疗",
            "手术切除",
            "放射治疗",
            "口服补液",
        ],
    }
}

fn one_doc(rng: &mut ChaCha8Rng, desc: &DatasetDescriptor, idx: usize) -> UnifiedDocument {
    let lang = desc.language;
    let p = pools(lang);
    let doc_id = format!("{}", 10_000 + idx);
    let mut doc = UnifiedDocument::new(doc_id, &desc.id, lang, "");
    match desc.task {
        TaskType::Ner => {
            let (text, entities) = annotated_text(rng, &p, 5);
            doc.text = text;
            doc.entities = entities;
        }
        TaskType::Re | TaskType::Cre | TaskType::Coref => {
            let (text, entities) = annotated_text(rng, &p, 5);
            let heads: Vec<&EntityMention> = entities.iter().filter(|e| e.etype == p.types[0]).collect();
            let tails: Vec<&EntityMention> = entities.iter().filter(|e| e.etype == p.types[1]).collect();
            for h in &heads {
                for t in &tails {
                    if rng.random_bool(0.6) {
                        let rtype = desc.label_vocab.choose(rng).expect("relation vocabulary");
                        doc.relations.push(RelationTriple::new(&h.surface, &t.surface, rtype));
                    }
                }
            }
            doc.text = text;
            doc.entities = entities;
        }
        TaskType::Ee => {
            let (text, entities) = annotated_text(rng, &p, 4);
            let trigger = p.filler[0];
            let text = format!("{text}{}{trigger}", p.joiner);
            for e in &entities {
                if rng.random_bool(0.5) {
                    let role = if e.etype == p.types[0] {
                        &desc.role_vocab[0]
                    } else {
                        &desc.role_vocab[1]
                    };
                    doc.events.push(EventFrame {
                        event_type: desc.label_vocab.choose(rng).unwrap().clone(),
                        trigger: trigger.to_string(),
                        arguments: vec![EventArgument {
                            role: role.clone(),
                            filler: e.surface.clone(),
                        }],
                    });
                }
            }
            doc.text = text;
            doc.entities = entities;
        }
        TaskType::Tc => {
            let words = rng.random_range(6..20);
            doc.text = sentence(rng, &p, words);
            if !rng.random_bool(0.1) {
                let k = rng.random_range(1..=2);
                doc.labels = desc.label_vocab.choose_multiple(rng, k).cloned().collect();
            }
        }
        TaskType::QaMc => {
            let pool = option_pool(lang);
            let keys = ["A", "B", "C", "D"];
            let texts: Vec<&&str> = pool.choose_multiple(rng, keys.len()).collect();
            let options: Vec<QaOption> = keys
                .iter()
                .zip(texts)
                .map(|(k, t)| QaOption {
                    key: k.to_string(),
                    text: t.to_string(),
                })
                .collect();
            let answer = keys.choose(rng).unwrap().to_string();
            let question = match lang {
                Language::En => format!("Case {idx}: which option best fits the {}?", sentence(rng, &p, 4)),
                Language::Zh => format!("病例{idx}：以下哪项最适合{}？", sentence(rng, &p, 4)),
            };
            doc.qa = Some(QAInstance {
                question,
                options: Some(options),
                answer_keys: vec![answer],
                context: None,
            });
        }
        TaskType::QaSqa | TaskType::QaCqa => {
            let context = (desc.task == TaskType::QaCqa).then(|| sentence(rng, &p, 12));
            doc.qa = Some(QAInstance {
                question: format!("{} ({idx})?", sentence(rng, &p, 6)),
                options: None,
                answer_keys: vec![sentence(rng, &p, 5)],
                context,
            });
        }
        TaskType::Mrd => {
            let rounds = rng.random_range(1..=3);
            let mut turns = Vec::new();
            for r in 0..rounds {
                turns.push(DialogueTurn {
                    speaker: Speaker::User,
                    text: format!("{} {idx}-{r}", sentence(rng, &p, 5)),
                });
                turns.push(DialogueTurn {
                    speaker: Speaker::Assistant,
                    text: sentence(rng, &p, 8),
                });
            }
            doc.dialogue = Some(turns);
        }
        TaskType::Mt => {
            let other = pools(if lang == Language::En {
                Language::Zh
            } else {
                Language::En
            });
            doc.translation = Some(TranslationPair {
                text_a: format!("{} {idx}", sentence(rng, &p, 8)),
                text_b: sentence(rng, &other, 8),
                source_lang: lang,
                target_lang: if lang == Language::En {
                    Language::Zh
                } else {
                    Language::En
                },
            });
        }
        TaskType::TpSs | TaskType::TpTe => {
            doc.pair = Some(TextPairInstance {
                text_a: format!("{} {idx}", sentence(rng, &p, 7)),
                text_b: sentence(rng, &p, 7),
                label: desc.label_vocab.choose(rng).cloned(),
            });
        }
        TaskType::TtDs | TaskType::TtTs => {
            doc.pair = Some(TextPairInstance {
                text_a: format!("{} {idx}", sentence(rng, &p, 15)),
                text_b: sentence(rng, &p, 4),
                label: None,
            });
        }
    }
    doc
}

/// `n` schema-valid documents for `desc`, fully determined by `seed`.
pub fn synthetic_docs(desc: &DatasetDescriptor, n: usize, seed: u64) -> Vec<UnifiedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs: Vec<UnifiedDocument> = (0..n).map(|i| one_doc(&mut rng, desc, i)).collect();
    if let Some(rel) = desc.prompted_relation() {
        for d in &mut docs {
            for r in &mut d.relations {
                r.rtype = rel.to_string();
            }
        }
    }
    docs
}

pub fn synthetic_corpus(task: TaskType, lang: Language, n: usize, seed: u64) -> Corpus {
    let desc = synthetic_descriptor(task, lang).with_split("train", n as u64);
    let docs = synthetic_docs(&desc, n, seed);
    Corpus::new(desc, docs)
}
