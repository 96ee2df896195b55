//! Identifier helpers and the name-normalizing equivalence used when
//! comparing models against each other and against documents.

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits a name into lowercase words at whitespace, underscores, hyphens
/// and camel-case boundaries (`AutoPilot`, `auto_pilot` and `auto pilot`
/// all give `["auto", "pilot"]`).
pub fn words(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if c.is_uppercase() && !cur.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Canonical comparison key: case-insensitive, with underscores, spaces and
/// camel-case boundaries treated as equivalent.
pub fn normalize(name: &str) -> String {
    words(name).join("_")
}

pub fn same_name(a: &str, b: &str) -> bool {
    normalize(a) == normalize(b)
}

/// `"power supply"` → `"PowerSupply"`.
pub fn to_class_ident(name: &str) -> String {
    let mut out = String::new();
    for w in words(name) {
        let mut cs = w.chars();
        if let Some(first) = cs.next() {
            out.extend(first.to_uppercase());
            out.push_str(cs.as_str());
        }
    }
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

/// `"AutoPilot"` → `"auto_pilot"`.
pub fn to_instance_ident(name: &str) -> String {
    let out = normalize(name);
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        format!("_{out}")
    } else {
        out
    }
}
