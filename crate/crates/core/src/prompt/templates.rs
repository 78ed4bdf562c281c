use std::collections::BTreeMap;
use std::path::Path;

/// A chat template: the system message plus the default instruction that
/// opens the user message.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub id: String,
    pub system: String,
    pub instruction: String,
}

/// Template store, loaded once and read-only afterwards.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
}

const GPT4_TEMPLATE: &str = include_str!("../../templates/gpt4.txt");
const DEFAULT_TEMPLATE: &str = include_str!("../../templates/default.txt");
pub(crate) const ITERATIVE_TEMPLATE: &str = include_str!("../../templates/iterative.txt");

impl TemplateRegistry {
    /// The bundled templates: `gpt4` (the verbatim large-model prompt) and
    /// `default` (a plain instruction for small models, not from any
    /// published source).
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        for (id, raw) in [("gpt4", GPT4_TEMPLATE), ("default", DEFAULT_TEMPLATE)] {
            templates.insert(id.to_string(), parse_template(id, raw));
        }
        TemplateRegistry { templates }
    }

    /// Extend the builtin set with `<id>.txt` files from a directory.
    pub fn with_dir(dir: &Path) -> std::io::Result<Self> {
        let mut registry = TemplateRegistry::builtin();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    let raw = std::fs::read_to_string(&path)?;
                    registry
                        .templates
                        .insert(stem.to_string(), parse_template(stem, &raw));
                }
            }
        }
        Ok(registry)
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.get(id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.templates.keys().cloned().collect()
    }
}

/// Template files carry `system:` and `instruction:` lines; anything before
/// the first marker or an unmarked file becomes the instruction with an
/// empty system message.
fn parse_template(id: &str, raw: &str) -> Template {
    enum Section {
        None,
        System,
        Instruction,
    }
    let mut system = String::new();
    let mut instruction = String::new();
    let mut current = Section::None;
    for line in raw.lines() {
        if let Some(rest) = line.strip_prefix("system:") {
            system.push_str(rest.trim_start());
            current = Section::System;
        } else if let Some(rest) = line.strip_prefix("instruction:") {
            instruction.push_str(rest.trim_start());
            current = Section::Instruction;
        } else {
            match current {
                Section::System => {
                    system.push('\n');
                    system.push_str(line);
                }
                Section::Instruction | Section::None => {
                    if !matches!(current, Section::None) {
                        instruction.push('\n');
                    }
                    instruction.push_str(line);
                    if matches!(current, Section::None) {
                        instruction.push('\n');
                    }
                }
            }
        }
    }
    Template {
        id: id.to_string(),
        system: system.trim_end().to_string(),
        instruction: instruction.trim_end().to_string(),
    }
}
