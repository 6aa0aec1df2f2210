//! Built-in bilingual template bank: 15 templates per (task, language) for
//! the templated tasks, one passthrough template per QA and dialogue pair.

use crate::schema::{Language, TaskType};

use super::template::{InstructionTemplate, TemplateBank};

fn leads(task: TaskType, lang: Language) -> [&'static str; 5] {
    use Language::*;
    use TaskType::*;
    match (task, lang) {
        (Ner, En) => [
            "Identify {entity_types} entities from the text",
            "Extract all {entity_types} mentions in the following text",
            "Find the entities of type {entity_types} in this passage",
            "Recognize every {entity_types} entity mentioned in the text",
            "List the {entity_types} entities that appear in the given text",
        ],
        (Ner, Zh) => [
            "从下面文本中识别出指定的实体类型（{entity_types}）",
            "请抽取文本中的{entity_types}实体",
            "找出下列文本中提到的{entity_types}",
            "识别文本中属于{entity_types}的实体",
            "按实体类型（{entity_types}）列出文本中的实体",
        ],
        (Re, En) => [
            "Extract the relation triples of types {labels} from the text",
            "Output the {labels} relations in the following text",
            "Find entity pairs linked by {labels} relations in this passage",
            "Identify relations ({labels}) between the entities in the text",
            "List every {labels} relation expressed in the given text",
        ],
        (Re, Zh) => [
            "实体关系三元组抽取，关系类型标签：{labels}",
            "请从文本中抽取{labels}关系三元组",
            "找出下列文本中具有{labels}关系的实体对",
            "以“(头实体, 尾实体, 关系类型)”格式输出文本中的{labels}关系",
            "识别文本中实体之间的关系（{labels}）",
        ],
        (Cre, En) => [
            "Extract the causal relations from the text",
            "Identify cause and effect pairs in the following text",
            "Find causal links between biomedical entities in this passage",
            "List every causal relation stated in the text",
            "Output the causal relation triples in the given text",
        ],
        (Cre, Zh) => [
            "抽取文本中的因果关系",
            "请找出下列文本中的因果实体对",
            "识别文本中生物医学实体之间的因果联系",
            "列出文本中陈述的所有因果关系",
            "以三元组格式输出文本中的因果关系",
        ],
        (Coref, En) => [
            "Find the mentions that refer to the same entity in the text",
            "Resolve the coreference links in the following text",
            "Identify coreferent mention pairs in this passage",
            "List the pairs of expressions that corefer in the text",
            "Output the coreference relations in the given text",
        ],
        (Coref, Zh) => [
            "找出文本中指代同一实体的提及",
            "请消解下列文本中的共指关系",
            "识别文本中的共指提及对",
            "列出文本中存在共指关系的表达",
            "输出文本中的共指关系",
        ],
        (Ee, En) => [
            "Extract events of types {labels} from the text",
            "Find the {labels} events and their arguments in the following text",
            "Identify event triggers and roles for {labels} events in this passage",
            "List every {labels} event described in the text",
            "Please extract events ({labels}) from the given text",
        ],
        (Ee, Zh) => [
            "找出指定的事件（{labels}）及其论元",
            "请抽取文本中的{labels}事件",
            "识别下列文本中{labels}事件的触发词和论元",
            "列出文本中描述的{labels}事件",
            "从文本中抽取事件，事件类型：{labels}",
        ],
        (Tc, En) => [
            "Sort this passage into the matching categories ({labels})",
            "Assign one or more of these labels to the text: {labels}",
            "Which of the labels {labels} describe this passage",
            "Categorize the text using the label set {labels}",
            "Decide the topic labels ({labels}) of the given text",
        ],
        (Tc, Zh) => [
            "将下面文本分类到指定的类别中（类别标签：{labels}）",
            "请将文本分类至指定类别中：{labels}",
            "判断下列文本属于哪些类别（{labels}）",
            "从类别标签{labels}中为文本选择类别",
            "对文本进行分类，候选类别：{labels}",
        ],
        (TpSs, En) => [
            "Rate the semantic similarity of the two texts",
            "Decide how similar the following two sentences are",
            "Judge whether these two biomedical texts express the same meaning",
            "Score the similarity between the pair of texts",
            "Compare the two sentences and output their similarity label",
        ],
        (TpSs, Zh) => [
            "判断两段文本的语义相似度",
            "请判断下面两个句子的意思是否相同",
            "比较这两段医学文本的语义",
            "给出这对文本的相似度标签",
            "判断下列两句话的相似程度",
        ],
        (TpTe, En) => [
            "Determine whether the first text entails the second",
            "Decide the entailment relation between the two sentences",
            "Does the premise support the hypothesis in the following pair",
            "Label the textual entailment between these two texts",
            "Judge whether the second sentence follows from the first",
        ],
        (TpTe, Zh) => [
            "判断第一段文本是否蕴含第二段文本",
            "请判断两个句子之间的蕴含关系",
            "前提是否支持下面的假设",
            "给出这对文本的蕴含标签",
            "判断第二句话能否由第一句话推出",
        ],
        (Mt, En) => [
            "Machine Translation from {source_lang} to {target_lang}",
            "Translate the following text from {source_lang} into {target_lang}",
            "Render this {source_lang} passage in {target_lang}",
            "Please translate the text into {target_lang}",
            "Give the {target_lang} translation of the {source_lang} text",
        ],
        (Mt, Zh) => [
            "将下面文本翻译成{target_lang}",
            "请把这段{source_lang}文本翻译为{target_lang}",
            "将下列{source_lang}内容译成{target_lang}",
            "把文本从{source_lang}翻译到{target_lang}",
            "给出下面文本的{target_lang}译文",
        ],
        (TtDs, En) => [
            "Summarize the following document",
            "Write a short summary of this text",
            "Generate a concise summary for the passage",
            "Condense the given document into a brief summary",
            "Produce a summary of the biomedical text",
        ],
        (TtDs, Zh) => [
            "请对下面文档进行摘要",
            "为这段文本写一个简短的摘要",
            "生成下列段落的简要总结",
            "将给定文档压缩为简短摘要",
            "总结下面的医学文本",
        ],
        (TtTs, En) => [
            "Convert the following text into the required structured form",
            "Generate the structured output for this text",
            "Write a title for the following passage",
            "Rewrite the text as structured content",
            "Produce the target text for the given input",
        ],
        (TtTs, Zh) => [
            "将下面文本转换为指定的结构化形式",
            "为这段文本生成结构化输出",
            "为下面的段落生成标题",
            "将文本改写为结构化内容",
            "根据输入生成目标文本",
        ],
        (QaMc | QaSqa | QaCqa | Mrd, _) => unreachable!("QA and dialogue tasks are not templated"),
    }
}

fn layouts(lang: Language) -> [&'static str; 3] {
    match lang {
        Language::En => ["{lead}: \"{text}\"", "{lead}.\nText: {text}", "{lead}."],
        Language::Zh => ["{lead}：“{text}”", "{lead}\n文本：{text}", "{lead}"],
    }
}

fn slug(task: TaskType) -> String {
    task.tag().to_ascii_lowercase().replace('/', "-")
}

/// The default bank, in a stable order.
pub fn default_templates() -> Vec<InstructionTemplate> {
    let mut out = Vec::new();
    for task in TaskType::ALL {
        for lang in Language::ALL {
            if task.is_qa() || task == TaskType::Mrd {
                out.push(InstructionTemplate {
                    template_id: format!("{}-{}-direct", slug(task), lang),
                    task,
                    language: lang,
                    instruction_pattern: "{question}".into(),
                    notes: "question passthrough; the original question is the instruction".into(),
                });
                continue;
            }
            let mut n = 0;
            for lead in leads(task, lang) {
                for (li, layout) in layouts(lang).iter().enumerate() {
                    n += 1;
                    out.push(InstructionTemplate {
                        template_id: format!("{}-{}-{:02}", slug(task), lang, n),
                        task,
                        language: lang,
                        instruction_pattern: layout.replace("{lead}", lead),
                        notes: if li == 2 {
                            "text carried in the input field".into()
                        } else {
                            "text inlined in the instruction".into()
                        },
                    });
                }
            }
        }
    }
    out
}

pub fn default_template_bank() -> TemplateBank {
    TemplateBank::new(default_templates()).expect("built-in templates are valid")
}
