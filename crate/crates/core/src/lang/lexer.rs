use super::ast::Span;
use super::LangError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `\old`, `\result`
    Builtin(String),
    /// `//mutGenLimit k`
    Budget(u32),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "{", "}", "(", ")", ";", ":", ",", ".", "=", "<", ">", "+",
    "-", "*", "/", "%", "!", "^",
];

pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            let text: String = chars[start + 2..i].iter().collect();
            col += (i - start) as u32;
            let body = text.trim();
            if let Some(rest) = body.strip_prefix("mutGenLimit") {
                let k = rest.trim().parse::<u32>().map_err(|_| LangError::Syntax {
                    span,
                    msg: format!("malformed budget annotation `{body}`"),
                })?;
                out.push(Token {
                    tok: Tok::Budget(k),
                    span,
                });
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(LangError::Syntax {
                        span,
                        msg: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<i64>().map_err(|_| LangError::Syntax {
                span,
                msg: format!("integer literal `{text}` out of range"),
            })?;
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Int(v),
                span,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '\\' || c == '$' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let tok = if let Some(b) = text.strip_prefix('\\') {
                Tok::Builtin(b.to_string())
            } else {
                Tok::Ident(text)
            };
            out.push(Token { tok, span });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len() as u32;
                out.push(Token {
                    tok: Tok::Sym(s),
                    span,
                });
            }
            None => {
                return Err(LangError::Syntax {
                    span,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_comment_becomes_token() {
        let t = lex("x = 1; //mutGenLimit 2\n").unwrap();
        assert!(t.iter().any(|t| t.tok == Tok::Budget(2)));
    }

    #[test]
    fn ordinary_comments_vanish() {
        let t = lex("// hello\n/* a\n b */ x").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].span, Span { line: 3, col: 7 });
    }

    #[test]
    fn two_char_symbols_win() {
        let t = lex("a<=b").unwrap();
        assert_eq!(t[1].tok, Tok::Sym("<="));
    }
}
