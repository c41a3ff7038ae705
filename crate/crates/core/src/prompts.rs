//! Prompt templates.
//!
//! Defaults ship inside the binary; a template directory may override any of
//! them by file name (`<name>.txt`). Placeholders are `{name}` tokens and
//! substituted values are trimmed.

use std::fs;
use std::io;
use std::path::Path;

use crate::gateway::AnswerStyle;

macro_rules! templates {
    ($($field:ident),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct PromptSet {
            $(pub $field: String,)*
        }

        impl Default for PromptSet {
            fn default() -> Self {
                Self {
                    $($field: include_str!(concat!("../prompts/", stringify!($field), ".txt")).to_string(),)*
                }
            }
        }

        impl PromptSet {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($field)),*];

            pub fn get(&self, name: &str) -> Option<&str> {
                match name {
                    $(stringify!($field) => Some(&self.$field),)*
                    _ => None,
                }
            }

            /// Defaults overridden by any `<name>.txt` present in `dir`.
            pub fn load_dir(dir: &Path) -> io::Result<Self> {
                let mut set = Self::default();
                $(
                    let path = dir.join(concat!(stringify!($field), ".txt"));
                    if path.exists() {
                        set.$field = fs::read_to_string(&path)?;
                    }
                )*
                Ok(set)
            }
        }
    };
}

templates!(
    strategy_judgement,
    claim_judgement,
    evidence_retrieval,
    controversial_retrieval,
    general_responder,
    summarize,
    perspective_synthesis,
    question_generation,
    qa_label,
    self_search_steps,
);

impl PromptSet {
    pub fn retrieval_prompt(&self, style: AnswerStyle) -> &str {
        match style {
            AnswerStyle::Evidence => &self.evidence_retrieval,
            AnswerStyle::Controversial => &self.controversial_retrieval,
            AnswerStyle::General => &self.general_responder,
        }
    }
}

/// Replaces each `{key}` with its trimmed value. Unknown braces are left as is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value.trim());
    }
    out
}

fn is_placeholder(inner: &str) -> bool {
    let name = inner.strip_suffix(".strip()").unwrap_or(inner);
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Markup- and layout-insensitive form of a template, for comparing the
/// shipped text against reference copies. HTML tags are dropped, entities
/// decoded, placeholders emptied, separator and bullet glyphs unified and
/// whitespace collapsed.
pub fn comparable_form(text: &str) -> String {
    let mut plain = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match (in_tag, c) {
            (false, '<') => in_tag = true,
            (true, '>') => {
                in_tag = false;
                plain.push(' ');
            }
            (false, c) => plain.push(c),
            (true, _) => {}
        }
    }
    let plain = plain
        .replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&");
    let mut emptied = String::with_capacity(plain.len());
    let mut rest = plain.as_str();
    while let Some(open) = rest.find('{') {
        emptied.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_placeholder(&after[..close]) => rest = &after[close + 1..],
            _ => {
                emptied.push('{');
                rest = after;
            }
        }
    }
    emptied.push_str(rest);
    emptied
        .split_whitespace()
        .map(|tok| match tok {
            "\u{2013}" | "\u{2014}" | "---" => "---",
            "\u{2022}" | "-" => "-",
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}
