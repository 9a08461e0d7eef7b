use super::{ParseError, Pos, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Nat(u64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] =
    &[":=", "!=", ">=", "->", "{", "}", "(", ")", "[", "]", ",", ";", ".", ":", "=", "+", "*", "_"];

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);
    let pos_at = |offset: usize, line: u32, col: u32| Pos { offset, line, col };

    while i < chars.len() {
        let (off, c) = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1).map(|p| p.1) == Some('/') {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start = pos_at(off, line, col);
        let (tok, len) = if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().map(|p| p.1).collect();
            let n = text.parse::<u64>().map_err(|_| ParseError {
                span: Span { start, end: pos_at(off + text.len(), line, col + text.len() as u32) },
                message: format!("number `{text}` is too large"),
            })?;
            (Tok::Nat(n), j - i)
        } else if c.is_ascii_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|p| word_char(p.1))) {
            let mut j = i;
            while j < chars.len() && word_char(chars[j].1) {
                j += 1;
            }
            (Tok::Word(chars[i..j].iter().map(|p| p.1).collect()), j - i)
        } else {
            let rest = &src[off..];
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => (Tok::Sym(s), s.len()),
                None => {
                    return Err(ParseError {
                        span: Span { start, end: pos_at(off + c.len_utf8(), line, col + 1) },
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        i += len;
        col += len as u32;
        let end_off = chars.get(i).map_or(src.len(), |p| p.0);
        out.push(Token { tok, span: Span { start, end: pos_at(end_off, line, col) } });
    }
    let end = pos_at(src.len(), line, col);
    out.push(Token { tok: Tok::Eof, span: Span { start: end, end } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn words_symbols_numbers() {
        assert_eq!(
            toks("x := y.f(_, 42) // done"),
            vec![
                Tok::Word("x".into()),
                Tok::Sym(":="),
                Tok::Word("y".into()),
                Tok::Sym("."),
                Tok::Word("f".into()),
                Tok::Sym("("),
                Tok::Sym("_"),
                Tok::Sym(","),
                Tok::Nat(42),
                Tok::Sym(")"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn renamed_identifiers_lex_as_words() {
        assert_eq!(toks("x$1 _tmp"), vec![Tok::Word("x$1".into()), Tok::Word("_tmp".into()), Tok::Eof]);
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!((t[1].span.start.line, t[1].span.start.col), (2, 3));
    }
}
