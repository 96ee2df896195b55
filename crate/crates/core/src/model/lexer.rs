use crate::diag::Span;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    /// A character or sequence the lexer cannot classify; surfaced by the
    /// parser as a syntax error so recovery can skip it.
    Bad(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Real(r) => format!("`{r}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Bad(s) => format!("invalid input `{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: [&str; 19] = [
    "==", "!=", "<=", ">=", "&&", "||", ";", ":", ",", ".", "(", ")", "=", "<", ">", "+", "-", "*", "/",
];

/// Splits source text into tokens. `//` line comments and `/* */` block
/// comments (including hole markers) are dropped.
pub(crate) fn tokenize(src: &str) -> Vec<Token> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let (sl, sc) = (line, col);
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    closed = true;
                    break;
                }
                bump!();
            }
            if !closed {
                out.push(Token {
                    tok: Tok::Bad("/*".into()),
                    span: Span::new(sl, sc, line, col),
                });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(text),
                span: Span::new(sl, sc, line, col),
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut is_real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_real = true;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    while i < j {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let span = Span::new(sl, sc, line, col);
            let tok = if is_real {
                text.parse::<f64>().map(Tok::Real).unwrap_or(Tok::Bad(text))
            } else {
                text.parse::<i64>().map(Tok::Int).unwrap_or(Tok::Bad(text))
            };
            out.push(Token { tok, span });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                if ch == '"' {
                    bump!();
                    closed = true;
                    break;
                }
                if ch == '\\' && i + 1 < chars.len() {
                    bump!();
                    let esc = chars[i];
                    s.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                    bump!();
                    continue;
                }
                s.push(ch);
                bump!();
            }
            let tok = if closed { Tok::Str(s) } else { Tok::Bad(format!("\"{s}")) };
            out.push(Token {
                tok,
                span: Span::new(sl, sc, line, col),
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            for _ in 0..sym.len() {
                bump!();
            }
            let tok = match *sym {
                "&&" => Tok::Ident("and".into()),
                "||" => Tok::Ident("or".into()),
                s => Tok::Sym(s),
            };
            out.push(Token {
                tok,
                span: Span::new(sl, sc, line, col),
            });
            continue;
        }
        if c == '!' {
            bump!();
            out.push(Token {
                tok: Tok::Ident("not".into()),
                span: Span::new(sl, sc, line, col),
            });
            continue;
        }
        bump!();
        out.push(Token {
            tok: Tok::Bad(c.to_string()),
            span: Span::new(sl, sc, line, col),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::point(line, col),
    });
    out
}
