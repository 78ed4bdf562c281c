use super::AstError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    /// Identifier or keyword: `[A-Za-z_][A-Za-z0-9_]*`.
    Word(String),
    /// Numeric literal, kept as written.
    Number(String),
    /// Quoted string literal, quotes stripped.
    Str(String),
    /// Operator or punctuation: `( ) , ; . * + - / % = < > <= >= <> !=`.
    Sym(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub kind: TokKind,
    pub pos: usize,
}

pub fn lex(sql: &str) -> Result<Vec<Tok>, AstError> {
    let bytes = sql.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let pos = i;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            toks.push(Tok {
                kind: TokKind::Word(sql[start..i].to_string()),
                pos,
            });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.')
            {
                i += 1;
            }
            toks.push(Tok {
                kind: TokKind::Number(sql[start..i].to_string()),
                pos,
            });
        } else if c == '\'' || c == '"' || c == '`' {
            let quote = c;
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i] as char != quote {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(AstError::ParseError {
                    position: pos,
                    message: format!("unterminated {quote} quoted literal"),
                });
            }
            let content = sql[start..i].to_string();
            i += 1;
            // Backquotes delimit identifiers, not literals.
            if quote == '`' {
                toks.push(Tok {
                    kind: TokKind::Word(content),
                    pos,
                });
            } else {
                toks.push(Tok {
                    kind: TokKind::Str(content),
                    pos,
                });
            }
        } else {
            let two = if i + 1 < bytes.len() {
                &sql[i..i + 2]
            } else {
                ""
            };
            let sym: &'static str = match two {
                "<=" => "<=",
                ">=" => ">=",
                "<>" => "<>",
                "!=" => "!=",
                _ => match c {
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    ';' => ";",
                    '.' => ".",
                    '*' => "*",
                    '+' => "+",
                    '-' => "-",
                    '/' => "/",
                    '%' => "%",
                    '=' => "=",
                    '<' => "<",
                    '>' => ">",
                    _ => {
                        return Err(AstError::ParseError {
                            position: pos,
                            message: format!("unexpected character {c:?}"),
                        })
                    }
                },
            };
            i += sym.len();
            toks.push(Tok {
                kind: TokKind::Sym(sym),
                pos,
            });
        }
    }
    Ok(toks)
}
