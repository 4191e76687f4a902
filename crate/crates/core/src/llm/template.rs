//! Prompt templates and rendering.
//!
//! Templates are data: the shipped ones are TOML assets compiled into the
//! binary, and any template can be replaced by loading another file.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::model::{AspectCluster, ReviewComment};

const ABSA_FEWSHOT: &str = include_str!("../../assets/absa_fewshot.toml");
const KPG_ONESHOT: &str = include_str!("../../assets/kpg_oneshot.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    AbsaFewshot,
    KpgOneshot,
}

impl TemplateName {
    pub fn part_count(&self) -> usize {
        match self {
            TemplateName::AbsaFewshot => 5,
            TemplateName::KpgOneshot => 6,
        }
    }

    /// Index of the part that is followed by the rendered examples.
    fn examples_part(&self) -> usize {
        match self {
            TemplateName::AbsaFewshot => 3,
            TemplateName::KpgOneshot => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPart {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub parts: Vec<PromptPart>,
    #[serde(default)]
    pub fewshot_examples: Vec<FewShotExample>,
}

impl PromptTemplate {
    pub fn absa_default() -> Self {
        Self::from_toml(ABSA_FEWSHOT).expect("bundled ABSA template is valid")
    }

    pub fn kpg_default() -> Self {
        Self::from_toml(KPG_ONESHOT).expect("bundled KPG template is valid")
    }

    pub fn from_toml(source: &str) -> Result<Self, LlmError> {
        let template: PromptTemplate =
            toml::from_str(source).map_err(|e| LlmError::Template(e.to_string()))?;
        template.validate()?;
        Ok(template)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Template(format!("{}: {e}", path.display())))?;
        Self::from_toml(&source)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.parts.len() != self.name.part_count() {
            return Err(LlmError::Template(format!(
                "{:?} template needs {} parts, found {}",
                self.name,
                self.name.part_count(),
                self.parts.len()
            )));
        }
        if self.fewshot_examples.is_empty() {
            return Err(LlmError::Template(format!(
                "{:?} template has no examples",
                self.name
            )));
        }
        Ok(())
    }

    fn expect(&self, name: TemplateName) -> Result<(), LlmError> {
        if self.name != name {
            return Err(LlmError::TemplateMismatch {
                expected: name,
                found: self.name,
            });
        }
        self.validate()
    }

    fn render(&self, example_block: impl Fn(&FewShotExample) -> String, input: &str) -> String {
        let last = self.parts.len() - 1;
        let mut blocks = Vec::with_capacity(self.parts.len() + self.fewshot_examples.len());
        for (idx, part) in self.parts.iter().enumerate() {
            blocks.push(part.text.trim().to_string());
            if idx == self.name.examples_part() {
                blocks.extend(self.fewshot_examples.iter().map(&example_block));
            }
            if idx == last {
                blocks.push(input.to_string());
            }
        }
        blocks.join("\n\n")
    }
}

fn absa_input(text: &str) -> String {
    format!("Sentence: {text}")
}

/// Renders the ABSA prompt for one comment. The comment is the final block.
pub fn render_absa_prompt(
    comment: &ReviewComment,
    template: &PromptTemplate,
) -> Result<String, LlmError> {
    template.expect(TemplateName::AbsaFewshot)?;
    Ok(template.render(
        |ex| format!("{}\nLabel: {}", absa_input(&ex.input), ex.output),
        &absa_input(&comment.text),
    ))
}

/// The cluster input block: sentiment, aspect terms, then numbered member
/// comments ordered by comment id.
pub fn kpg_input(cluster: &AspectCluster, comments: &[&ReviewComment]) -> String {
    let terms: Vec<&str> = cluster.terms.iter().map(|t| t.term.as_str()).collect();
    let mut members: Vec<&&ReviewComment> = comments.iter().collect();
    members.sort_by(|a, b| a.comment_id.cmp(&b.comment_id));
    let mut out = String::new();
    let _ = writeln!(out, "Sentiment: {}", cluster.polarity);
    let _ = writeln!(out, "Aspect terms: {}", terms.join(", "));
    out.push_str("Review sentences:");
    for (i, c) in members.iter().enumerate() {
        let _ = write!(out, "\n{}. {}", i + 1, c.text);
    }
    out
}

/// Renders the key point generation prompt for one cluster.
pub fn render_kpg_prompt(
    cluster: &AspectCluster,
    comments: &[&ReviewComment],
    template: &PromptTemplate,
) -> Result<String, LlmError> {
    template.expect(TemplateName::KpgOneshot)?;
    if comments.is_empty() || cluster.member_comment_ids.is_empty() {
        return Err(LlmError::EmptyCluster);
    }
    Ok(template.render(
        |ex| format!("Input:\n{}\nKey point: {}", ex.input, ex.output),
        &format!("Input:\n{}\nKey point:", kpg_input(cluster, comments)),
    ))
}
