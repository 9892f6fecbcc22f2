//! Prompt rendering for the two task templates.

use std::fmt::Write as _;

use super::{LlmError, McqTask, Template};

/// Render a task under the given ordering (prompt position -> canonical
/// option index), dispatching on the task's template.
pub fn build_prompt(task: &McqTask, ordering: &[usize]) -> Result<String, LlmError> {
    match task.template {
        Template::Semantic => build_semantic_prompt(task, ordering),
        Template::WordLevel => build_wordlevel_prompt(task, ordering),
    }
}

/// The semantic-understanding template: the example sentence, the quoted
/// target word, and lettered definition lines.
pub fn build_semantic_prompt(task: &McqTask, ordering: &[usize]) -> Result<String, LlmError> {
    if task.labels.len() > 26 {
        return Err(LlmError::TooManyOptions(task.labels.len()));
    }
    let mut out = String::new();
    let _ = write!(
        out,
        "Read this sentence: \"{}\" Choose the correct meaning of \"{}\" by selecting the most suitable among the following options {}. No other answer is allowed. Only output the respective option letter without any additional comments, notes, or explanations.\n",
        task.context,
        task.target,
        label_list(&task.labels),
    );
    for (position, &index) in ordering.iter().enumerate() {
        let option = &task.options[index];
        let _ = write!(out, "\n{}) {}", task.labels[position], option.definition);
    }
    Ok(out)
}

/// The word-level template: the learner sentence (or essay) with the target
/// in square brackets, numbered options carrying definition, additional
/// information and PoS, and the trailing "None of the other options".
pub fn build_wordlevel_prompt(task: &McqTask, ordering: &[usize]) -> Result<String, LlmError> {
    if !task.context.contains(&format!("[{}]", task.target)) {
        return Err(LlmError::TargetNotFound {
            target: task.target.clone(),
        });
    }
    let unit = match task.context_mode {
        super::ContextMode::Sentence => "sentence",
        super::ContextMode::Essay => "essay",
    };
    let mut out = String::new();
    let _ = write!(out, "Read this L2 learner {unit}: {}\n", task.context);
    let _ = write!(
        out,
        "\nChoose the correct meaning of \"{}\" (in square brackets) by selecting the most suitable among the following options. Also consider the additional information and the PoS of each option. No other answer is allowed. Only output the respective option number without any additional comments, notes, or explanations.\n",
        task.target,
    );
    for (position, &index) in ordering.iter().enumerate() {
        let option = &task.options[index];
        if option.id.is_none() {
            let _ = write!(out, "\n{}. None of the other options.", task.labels[position]);
        } else {
            let pos = option.pos.map(|p| p.as_str()).unwrap_or("other");
            let _ = write!(
                out,
                "\n{}. {} - Additional information: {} (Part of speech: {})",
                task.labels[position], option.definition, option.info, pos,
            );
        }
    }
    Ok(out)
}

fn label_list(labels: &[String]) -> String {
    match labels.len() {
        0 => String::new(),
        1 => labels[0].clone(),
        2 => format!("{} or {}", labels[0], labels[1]),
        n => {
            let head = labels[..n - 1].join(", ");
            format!("{head}, or {}", labels[n - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cefr::{CefrLevel, Pos};
    use crate::lexicon::LexEntry;
    use crate::llm::{ContextMode, LabelStyle};

    fn entry(id: &str, pos: Pos, level: CefrLevel, guideword: &str, definition: &str) -> LexEntry {
        LexEntry {
            id: id.to_string(),
            head: "tough".to_string(),
            pos,
            guideword: guideword.to_string(),
            level,
            definition: definition.to_string(),
            phrase: None,
            ref_words: vec!["tough".to_string()],
            learner_example: None,
            dictionary_example: None,
            topic: None,
        }
    }

    #[test]
    fn semantic_prompt_lists_lettered_options() {
        let entries: Vec<LexEntry> = (0..6)
            .map(|i| {
                entry(
                    &format!("tough.{i}"),
                    Pos::Adjective,
                    CefrLevel::B1,
                    "",
                    &format!("sense number {i}"),
                )
            })
            .collect();
        let refs: Vec<&LexEntry> = entries.iter().collect();
        let task = crate::llm::McqTask::semantic("The hike was tough .", "tough", &refs).unwrap();
        let ordering: Vec<usize> = (0..6).collect();
        let prompt = build_semantic_prompt(&task, &ordering).unwrap();
        assert!(prompt.starts_with("Read this sentence: \"The hike was tough .\""));
        assert!(prompt.contains("options A, B, C, D, E, or F."));
        assert!(prompt.contains("Only output the respective option letter"));
        assert!(prompt.contains("\nA) sense number 0"));
        assert!(prompt.contains("\nF) sense number 5"));
        // Deterministic rendering.
        assert_eq!(prompt, build_semantic_prompt(&task, &ordering).unwrap());
    }

    #[test]
    fn semantic_prompt_two_options() {
        let entries = vec![
            entry("a", Pos::Adjective, CefrLevel::A1, "", "first"),
            entry("b", Pos::Adjective, CefrLevel::B1, "", "second"),
        ];
        let refs: Vec<&LexEntry> = entries.iter().collect();
        let task = crate::llm::McqTask::semantic("ctx", "tough", &refs).unwrap();
        let prompt = build_semantic_prompt(&task, &[0, 1]).unwrap();
        assert!(prompt.contains("options A or B."));
        assert!(prompt.contains("\nA) first"));
        assert!(prompt.contains("\nB) second"));
        assert!(!prompt.contains("\nC)"));
    }

    #[test]
    fn wordlevel_prompt_shape() {
        let entries = vec![
            entry("t1", Pos::Adjective, CefrLevel::B1, "STRONG", "not easily broken"),
            entry("t2", Pos::Adjective, CefrLevel::B2, "FOOD", "difficult to chew"),
        ];
        let refs: Vec<&LexEntry> = entries.iter().collect();
        let task = crate::llm::McqTask::word_level(
            &["It", "was", "tough", "."],
            2,
            &refs,
            ContextMode::Sentence,
            LabelStyle::Numbers,
        )
        .unwrap();
        let ordering: Vec<usize> = (0..3).collect();
        let prompt = build_wordlevel_prompt(&task, &ordering).unwrap();
        assert!(prompt.starts_with("Read this L2 learner sentence: It was [tough] ."));
        assert!(prompt.contains("Only output the respective option number"));
        assert!(prompt.contains(
            "\n1. not easily broken - Additional information: tough (STRONG) (Part of speech: adjective)"
        ));
        assert!(prompt.contains("\n3. None of the other options."));
    }

    #[test]
    fn essay_mode_replaces_sentence_with_essay() {
        let entries = vec![entry("t1", Pos::Adjective, CefrLevel::B1, "", "d")];
        let refs: Vec<&LexEntry> = entries.iter().collect();
        let task = crate::llm::McqTask::word_level(
            &["tough", "times"],
            0,
            &refs,
            ContextMode::Essay,
            LabelStyle::Numbers,
        )
        .unwrap();
        let prompt = build_wordlevel_prompt(&task, &[0, 1]).unwrap();
        assert!(prompt.starts_with("Read this L2 learner essay:"));
        assert!(!prompt.contains("learner sentence"));
    }
}
