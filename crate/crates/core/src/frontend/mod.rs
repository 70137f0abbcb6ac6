//! Textual model frontend: lexing, parsing, resolution, and diagnostics.
//!
//! Model files use the `.gm` extension and are UTF-8. The grammar and the
//! catalogue of stable diagnostic codes live in `docs/dsl.md`. Parsing is a
//! pure function of the input text: it either returns a structurally
//! complete [`Model`] (not yet validated) or at least one located error.

mod lexer;
mod parser;
mod printer;

pub use printer::print_model;

use crate::ir::Model;
pub use crate::ir::Severity;

/// A location inside a source file. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

/// A located parse-time finding. Codes are stable across releases.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub code: &'static str,
    pub message: String,
}

/// Parse model source text into a [`Model`].
///
/// `file` is used for spans and as the model name (its stem). On failure the
/// returned list contains at least one error, each with a span inside the
/// input.
pub fn parse(file: &str, source: &str) -> Result<Model, Vec<Diagnostic>> {
    let (tokens, mut diags) = lexer::lex(file, source);
    let model = parser::parse_tokens(file, tokens, &mut diags);
    match model {
        Some(model) if diags.iter().all(|d| d.severity != Severity::Error) => Ok(model),
        _ => {
            debug_assert!(!diags.is_empty(), "failed parse must carry a diagnostic");
            Err(diags)
        }
    }
}

/// Render diagnostics human-readably: one block per diagnostic, in span
/// order, each showing the offending source line with a caret underline.
pub fn format_diagnostics(diags: &[Diagnostic], source: &str) -> String {
    let mut sorted: Vec<&Diagnostic> = diags.iter().collect();
    sorted.sort_by_key(|d| (d.span.line, d.span.col));

    let lines: Vec<&str> = source.lines().collect();
    let mut out = String::new();
    for d in sorted {
        out.push_str(&format!(
            "{}:{}:{}: {}[{}]: {}\n",
            d.span.file, d.span.line, d.span.col, d.severity, d.code, d.message
        ));
        // End-of-file spans can point one line past the text; show the last
        // line with the caret past its end instead of dropping the context.
        let shown = (d.span.line as usize - 1).min(lines.len().saturating_sub(1));
        if let Some(text) = lines.get(shown) {
            let col = if shown + 1 == d.span.line as usize {
                d.span.col as usize - 1
            } else {
                text.chars().count()
            };
            out.push_str(&format!("  | {text}\n"));
            let pad = " ".repeat(col);
            let carets = "^".repeat((d.span.len as usize).max(1));
            out.push_str(&format!("  | {pad}{carets}\n"));
        }
    }
    out
}
