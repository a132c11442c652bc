//! Line-anchored rendering of configuration errors.

use std::fmt;
use std::path::{Path, PathBuf};

use boga_core::engine::ConfigError;

/// A configuration problem pinned to a line of the source file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDiagnostic {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub source_line: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path.display(), line, self.message)?,
            None => write!(f, "{}: {}", self.path.display(), self.message)?,
        }
        if let (Some(line), Some(text)) = (self.line, &self.source_line) {
            write!(f, "\n{line:>5} | {text}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigDiagnostic {}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn nth_line(text: &str, line: usize) -> Option<String> {
    text.lines().nth(line.checked_sub(1)?).map(|l| l.trim_end().to_string())
}

fn is_key_line(line: &str, key: &str) -> bool {
    let t = line.trim_start();
    let quoted = format!("\"{key}\"");
    t.strip_prefix(key)
        .or_else(|| t.strip_prefix(quoted.as_str()))
        .map(str::trim_start)
        .is_some_and(|rest| rest.starts_with('=') || rest.starts_with('.'))
}

fn is_header(line: &str, name: &str) -> bool {
    let t = line.trim();
    t == format!("[{name}]") || t == format!("[[{name}]]")
}

/// Best-effort line for a dotted field path such as `schedule[1].k_propose`.
///
/// Walks the path: `name[i]` jumps to the i-th `[[name]]` header, a plain
/// segment to its table header or `key =` line after the current position.
pub fn locate_field(text: &str, field: &str) -> Option<usize> {
    let lines: Vec<&str> = text.lines().collect();
    let mut from = 0usize;
    let mut found = None;
    for segment in field.split('.') {
        let (name, index) = match segment.split_once('[') {
            Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()),
            None => (segment, None),
        };
        let hit = match index {
            Some(i) => lines.iter().enumerate().skip(from).filter(|(_, l)| is_header(l, name)).nth(i).map(|(n, _)| n),
            None => lines
                .iter()
                .enumerate()
                .skip(from)
                .find(|(_, l)| is_header(l, name) || is_key_line(l, name))
                .map(|(n, _)| n),
        };
        match hit {
            Some(n) => {
                found = Some(n + 1);
                from = n + 1;
            }
            None => break,
        }
    }
    found
}

/// Converts a config error into a diagnostic against the file's text.
pub fn diagnose(path: &Path, text: Option<&str>, err: &ConfigError) -> ConfigDiagnostic {
    let line = match (err, text) {
        (ConfigError::Parse(e), Some(t)) => e.span().map(|s| line_of(t, s.start)),
        (ConfigError::Invalid { field, .. }, Some(t)) => locate_field(t, field),
        _ => None,
    };
    let message = match err {
        // The parser's own rendering repeats the source excerpt; keep only its message.
        ConfigError::Parse(e) => e.message().trim().to_string(),
        other => other.to_string(),
    };
    ConfigDiagnostic {
        path: path.to_path_buf(),
        line,
        source_line: line.and_then(|l| text.and_then(|t| nth_line(t, l))),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "n_init = 10\n\n[objective]\nname = \"sheet\"\n\n[[schedule]]\nk_propose = 8\n\n[[schedule]]\nm_select = 2\nk_propose = 1\n";

    #[test]
    fn finds_indexed_array_fields() {
        assert_eq!(locate_field(TEXT, "schedule[1].k_propose"), Some(11));
        assert_eq!(locate_field(TEXT, "schedule[0].k_propose"), Some(7));
        assert_eq!(locate_field(TEXT, "n_init"), Some(1));
        assert_eq!(locate_field(TEXT, "objective.name"), Some(4));
        assert_eq!(locate_field(TEXT, "surrogate"), None);
    }

    #[test]
    fn parse_errors_point_at_the_bad_line() {
        let text = "n_init = 10\nmaster_seed = \"x\"\n";
        let err = boga_core::CampaignConfig::from_toml_str(text).unwrap_err();
        let d = diagnose(Path::new("c.toml"), Some(text), &err);
        assert_eq!(d.line, Some(2));
        assert!(d.to_string().starts_with("c.toml:2: "), "{d}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let text = r#"n_init = 10

[objective]
name = "sheet"
evaluator = { kind = "builtin", landscape = "sheet" }

[[schedule]]
generations = 1
m_select = 2
k_propose = 8

[[schedule]]
generations = 1
m_select = 2
k_propose = 1
"#;
        let err = boga_core::CampaignConfig::from_toml_str(text).unwrap_err();
        let d = diagnose(Path::new("c.toml"), Some(text), &err);
        assert!(d.message.contains("schedule[1].k_propose"), "{d}");
        assert_eq!(d.line, Some(15));
        assert_eq!(d.source_line.as_deref(), Some("k_propose = 1"));
    }
}
