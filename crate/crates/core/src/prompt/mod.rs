//! Prompt assembly: the prefix prompt (instruction + rendered demonstration
//! pairs + SQL seed) and the three-step iterative generation prompt.

mod iterative;
mod templates;

pub use iterative::{
    parse_iterative_response, parse_iterative_response_strict, render_iterative_response,
    IterativePrompt, IterativeResponse, FINAL_KEY, GENERATED_KEY, REVIEW_KEY,
};
pub use templates::{Template, TemplateRegistry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::selection::{DemoOrder, SelectedDemo, SelectedDemos};
use crate::text::estimate_tokens;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("sql seed is empty")]
    EmptySql,
    #[error("prompt estimated at {estimated} tokens exceeds the budget of {budget}")]
    PromptTooLong { estimated: usize, budget: usize },
    #[error("malformed response: step {step} ({reason})")]
    MalformedResponse { step: u8, reason: String },
}

/// Assembled prefix prompt ready for a chat backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
    pub demo_ids: Vec<String>,
    pub estimated_tokens: usize,
}

/// Builder configuration: template registry, context budget and demo order.
pub struct PromptBuilder {
    registry: TemplateRegistry,
    pub token_budget: usize,
    pub demo_order: DemoOrder,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        PromptBuilder {
            registry: TemplateRegistry::builtin(),
            token_budget: 2048,
            demo_order: DemoOrder::SimilarLast,
        }
    }
}

impl PromptBuilder {
    pub fn with_registry(registry: TemplateRegistry) -> Self {
        PromptBuilder {
            registry,
            ..PromptBuilder::default()
        }
    }

    pub fn template(&self, id: &str) -> Result<&Template, PromptError> {
        self.registry
            .get(id)
            .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))
    }

    /// Render the prefix prompt: instruction block, one `SQL:`/`Question:`
    /// pair per demonstration, then the seed block awaiting its question.
    /// An empty demo list renders the zero-shot form.
    pub fn build_icl_prompt(
        &self,
        instruction: Option<&str>,
        demos: &SelectedDemos,
        seed_sql: &str,
        template_id: &str,
    ) -> Result<PromptSpec, PromptError> {
        if seed_sql.trim().is_empty() {
            return Err(PromptError::EmptySql);
        }
        let template = self.template(template_id)?;
        let instruction = instruction.unwrap_or(&template.instruction);

        let arranged = demos.arranged(self.demo_order);
        let mut user_text = String::new();
        user_text.push_str(instruction);
        user_text.push_str("\n\n");
        for SelectedDemo { sql, utterance, .. } in &arranged {
            user_text.push_str(&format!(
                "SQL: {}\nQuestion: {}\n\n",
                sql,
                utterance.as_deref().unwrap_or("")
            ));
        }
        user_text.push_str(&format!("SQL: {seed_sql}\nQuestion:"));

        let estimated = estimate_tokens(&template.system) + estimate_tokens(&user_text);
        if estimated > self.token_budget {
            return Err(PromptError::PromptTooLong {
                estimated,
                budget: self.token_budget,
            });
        }
        Ok(PromptSpec {
            template_id: template_id.to_string(),
            system_text: template.system.clone(),
            user_text,
            demo_ids: arranged.iter().map(|d| d.record_id.clone()).collect(),
            estimated_tokens: estimated,
        })
    }

    /// Render the three-step generate/review/refine prompt for one SQL
    /// query.
    pub fn build_iterative_prompt(&self, sql: &str) -> Result<IterativePrompt, PromptError> {
        if sql.trim().is_empty() {
            return Err(PromptError::EmptySql);
        }
        Ok(IterativePrompt::new(sql))
    }
}
