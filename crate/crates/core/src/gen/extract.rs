//! Pulling code out of free-form model output.

use crate::model::{Connection, Endpoint};
use crate::names::is_identifier;

const START_WORDS: [&str; 12] = [
    "couple",
    "discrete",
    "continuous",
    "function",
    "part:",
    "parameter:",
    "value:",
    "port:",
    "connection:",
    "state:",
    "equation:",
    "algorithm:",
];

fn starts_code(line: &str) -> bool {
    let t = line.trim_start();
    START_WORDS.iter().any(|w| {
        t.strip_prefix(w)
            .is_some_and(|rest| w.ends_with(':') || rest.starts_with(char::is_whitespace) || rest.is_empty())
    })
}

/// The code in a model answer: the first fenced block that contains code,
/// else the lines from the first keyword line to the last line ending in
/// `;`. Returns `None` when neither is found.
pub fn extract_code(text: &str) -> Option<String> {
    let mut fenced: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => fenced.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    if let Some(block) = fenced.into_iter().find(|b| b.lines().any(starts_code)) {
        return Some(block);
    }
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| starts_code(l))?;
    let last = (first..lines.len()).rev().find(|&i| lines[i].trim_end().ends_with(';'))?;
    let mut out = lines[first..=last].join("\n");
    out.push('\n');
    Some(out)
}

fn endpoint(s: &str) -> Option<Endpoint> {
    let s = s.trim();
    match s.split_once('.') {
        Some((p, q)) if is_identifier(p.trim()) && is_identifier(q.trim()) => Some(Endpoint::new(p.trim(), q.trim())),
        None if is_identifier(s) => Some(Endpoint::own(s)),
        _ => None,
    }
}

/// Parses one `connect(A.p, B.q)` line; a trailing `;` is optional.
pub fn parse_connection_line(line: &str) -> Option<Connection> {
    let t = line.trim().trim_start_matches(['-', '*']).trim();
    let t = t.strip_suffix(';').unwrap_or(t).trim_end();
    let inner = t.strip_prefix("connect")?.trim_start().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some(Connection::new(endpoint(a)?, endpoint(b)?))
}

/// Connections found in an answer, plus the lines that mention `connect`
/// but do not match the line grammar.
pub fn extract_connections(text: &str) -> (Vec<Connection>, Vec<String>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for line in text.lines().filter(|l| !l.trim_start().starts_with("```")) {
        match parse_connection_line(line) {
            Some(c) => good.push(c),
            None if line.contains("connect") => bad.push(line.trim().to_string()),
            None => {}
        }
    }
    (good, bad)
}
