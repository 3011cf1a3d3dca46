use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

/// Token stream plus the position of the last non-blank character, used to
/// anchor end-of-input errors.
#[derive(Debug)]
pub(crate) struct Lexed {
    pub tokens: Vec<Token>,
    pub last: (usize, usize),
}

pub(crate) fn tokenize(text: &str) -> Result<Lexed, ParseError> {
    let mut tokens = Vec::new();
    let mut last = (1, 1);
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            let tok = match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                c if c.is_ascii_digit() || c == '.' => {
                    i = scan_number(&chars, i);
                    let s: String = chars[start..i].iter().collect();
                    let v = s.parse::<f64>().map_err(|_| {
                        ParseError::new(
                            ParseErrorKind::Lexical,
                            line_no,
                            col,
                            format!("malformed number '{s}'"),
                        )
                    })?;
                    tokens.push(Token {
                        tok: Tok::Number(v),
                        line: line_no,
                        column: col,
                    });
                    last = (line_no, i);
                    continue;
                }
                c if c.is_alphabetic() || c == '_' => {
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    tokens.push(Token {
                        tok: Tok::Ident(chars[start..i].iter().collect()),
                        line: line_no,
                        column: col,
                    });
                    last = (line_no, i);
                    continue;
                }
                other => {
                    return Err(ParseError::new(
                        ParseErrorKind::Lexical,
                        line_no,
                        col,
                        format!("unexpected character '{other}'"),
                    ))
                }
            };
            tokens.push(Token {
                tok,
                line: line_no,
                column: col,
            });
            last = (line_no, col);
            i += 1;
        }
    }
    Ok(Lexed { tokens, last })
}

fn scan_number(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
        i += 1;
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}
