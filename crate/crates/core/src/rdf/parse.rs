//! N-Triples and a Turtle subset.
//!
//! Supported Turtle: `@prefix`/`PREFIX`, the `a` keyword, predicate lists
//! (`;`), object lists (`,`), IRIs, prefixed names, `_:` blank node labels,
//! plain/typed/language-tagged literals (short and long quotes), numeric and
//! boolean shorthand. Collections, blank node property lists, quoted triples
//! and base declarations are reported as unsupported.

use std::collections::HashMap;
use std::io::Read;

use super::term::{Iri, Literal, Term, Triple};
use super::vocab::{rdf, xsd};

pub const SKOLEM_PREFIX: &str = "urn:bnode:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdfFormat {
    Turtle,
    NTriples,
}

impl RdfFormat {
    /// Guesses from a file extension: `.nt` is N-Triples, anything else Turtle.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("nt") => RdfFormat::NTriples,
            _ => RdfFormat::Turtle,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported feature at {line}:{column}: {feature}")]
    UnsupportedFeature {
        line: usize,
        column: usize,
        feature: &'static str,
    },
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
}

pub fn parse_rdf(mut input: impl Read, format: RdfFormat) -> Result<Vec<Triple>, ParseError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let prefix = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let prefix = std::str::from_utf8(prefix).unwrap_or_default();
        let line = prefix.matches('\n').count() + 1;
        let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError::Syntax {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        }
    })?;
    parse_str(&text, format)
}

pub fn parse_str(input: &str, format: RdfFormat) -> Result<Vec<Triple>, ParseError> {
    let mut parser = Parser {
        chars: input.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        format,
        prefixes: HashMap::new(),
        blank_nodes: HashMap::new(),
        triples: Vec::new(),
    };
    parser.document()?;
    Ok(parser.triples)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    format: RdfFormat,
    prefixes: HashMap<String, String>,
    blank_nodes: HashMap<String, Iri>,
    triples: Vec<Triple>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn turtle(&self) -> bool {
        self.format == RdfFormat::Turtle
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn looking_at(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    fn unsupported<T>(&self, feature: &'static str) -> PResult<T> {
        Err(ParseError::UnsupportedFeature {
            line: self.line,
            column: self.column,
            feature,
        })
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => self.error(format!("expected '{c}', found '{found}'")),
            None => self.error(format!("expected '{c}', found end of input")),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn document(&mut self) -> PResult<()> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.turtle() && self.directive()? {
                continue;
            }
            self.statement()?;
        }
    }

    /// Returns true when a directive was consumed.
    fn directive(&mut self) -> PResult<bool> {
        if self.looking_at("@prefix") {
            for _ in 0..7 {
                self.bump();
            }
            self.prefix_body()?;
            self.skip_ws();
            self.expect('.')?;
            return Ok(true);
        }
        if self.looking_at("@base") {
            return self.unsupported("base declarations");
        }
        if self.keyword_ci("PREFIX") {
            self.prefix_body()?;
            return Ok(true);
        }
        if self.keyword_ci("BASE") {
            return self.unsupported("base declarations");
        }
        Ok(false)
    }

    /// SPARQL-style keyword, case-insensitive, followed by whitespace.
    fn keyword_ci(&mut self, word: &str) -> bool {
        let n = word.chars().count();
        let matches = word
            .chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i).is_some_and(|p| p.eq_ignore_ascii_case(&c)))
            && self.peek_at(n).is_some_and(char::is_whitespace);
        if matches {
            for _ in 0..n {
                self.bump();
            }
        }
        matches
    }

    fn prefix_body(&mut self) -> PResult<()> {
        self.skip_ws();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_pn_char(c) && c != '.' {
                return self.error(format!("invalid character '{c}' in prefix name"));
            }
            name.push(c);
            self.bump();
        }
        self.expect(':')?;
        self.skip_ws();
        let iri = self.iri_ref()?;
        self.prefixes.insert(name, iri.as_str().to_string());
        Ok(())
    }

    fn statement(&mut self) -> PResult<()> {
        let subject = self.subject()?;
        self.skip_ws();
        loop {
            let predicate = self.predicate()?;
            loop {
                self.skip_ws();
                let object = self.object()?;
                self.triples.push(Triple::new(subject.clone(), predicate.clone(), object));
                self.skip_ws();
                if self.turtle() && self.peek() == Some(',') {
                    self.bump();
                    continue;
                }
                break;
            }
            if self.turtle() && self.peek() == Some(';') {
                // repeated ';' and a trailing ';' before '.' are both legal
                while self.peek() == Some(';') {
                    self.bump();
                    self.skip_ws();
                }
                if self.peek() == Some('.') {
                    break;
                }
                continue;
            }
            break;
        }
        self.skip_ws();
        self.expect('.')
    }

    fn subject(&mut self) -> PResult<Iri> {
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => self.unsupported("quoted triples"),
            Some('<') => self.iri_ref(),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_node(),
            Some('[') if self.turtle() => self.unsupported("blank node property lists"),
            Some('(') if self.turtle() => self.unsupported("collections"),
            Some(_) if self.turtle() => self.prefixed_name(),
            Some(c) => self.error(format!("expected subject, found '{c}'")),
            None => self.error("expected subject, found end of input"),
        }
    }

    fn predicate(&mut self) -> PResult<Iri> {
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some('a') if self.turtle() && self.peek_at(1).is_none_or(|c| !is_pn_char(c) && c != ':' && c != '.') => {
                self.bump();
                Ok(rdf::type_())
            }
            Some(_) if self.turtle() => self.prefixed_name(),
            Some(c) => self.error(format!("expected predicate IRI, found '{c}'")),
            None => self.error("expected predicate, found end of input"),
        }
    }

    fn object(&mut self) -> PResult<Term> {
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => self.unsupported("quoted triples"),
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') if self.peek_at(1) == Some(':') => Ok(Term::Iri(self.blank_node()?)),
            Some('"') => Ok(Term::Literal(self.literal()?)),
            Some('\'') if self.turtle() => Ok(Term::Literal(self.literal()?)),
            Some('[') if self.turtle() => self.unsupported("blank node property lists"),
            Some('(') if self.turtle() => self.unsupported("collections"),
            Some(c) if self.turtle() && (c.is_ascii_digit() || matches!(c, '+' | '-' | '.')) => {
                Ok(Term::Literal(self.numeric()?))
            }
            Some(_) if self.turtle() && (self.boolean_ahead("true") || self.boolean_ahead("false")) => {
                let word = if self.peek() == Some('t') { "true" } else { "false" };
                for _ in 0..word.len() {
                    self.bump();
                }
                Ok(Term::Literal(Literal::new(word, xsd::boolean()).expect("valid boolean")))
            }
            Some(_) if self.turtle() => Ok(Term::Iri(self.prefixed_name()?)),
            Some(c) => self.error(format!("expected object, found '{c}'")),
            None => self.error("expected object, found end of input"),
        }
    }

    fn boolean_ahead(&self, word: &str) -> bool {
        self.looking_at(word)
            && self
                .peek_at(word.len())
                .is_none_or(|c| !is_pn_char(c) && c != ':')
    }

    fn iri_ref(&mut self) -> PResult<Iri> {
        self.expect('<')?;
        let (line, column) = (self.line, self.column);
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => value.push(self.unicode_escape()?),
                Some(c) if c.is_whitespace() => return self.error("whitespace inside IRI"),
                Some(c) => value.push(c),
                None => return self.error("unterminated IRI"),
            }
        }
        Iri::new(value).map_err(|e| ParseError::Syntax {
            line,
            column,
            message: e.to_string(),
        })
    }

    fn unicode_escape(&mut self) -> PResult<char> {
        let len = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return self.error("invalid escape sequence"),
        };
        let mut code = 0u32;
        for _ in 0..len {
            let Some(d) = self.bump().and_then(|c| c.to_digit(16)) else {
                return self.error("invalid unicode escape");
            };
            code = code * 16 + d;
        }
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.error("unicode escape is not a scalar value"),
        }
    }

    fn blank_node(&mut self) -> PResult<Iri> {
        self.bump();
        self.bump();
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if is_pn_char(c) || c == '.' {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        while label.ends_with('.') {
            label.pop();
            self.pos -= 1;
            self.column -= 1;
        }
        if label.is_empty() {
            return self.error("empty blank node label");
        }
        let next = self.blank_nodes.len();
        let iri = self
            .blank_nodes
            .entry(label)
            .or_insert_with(|| Iri::new(format!("{SKOLEM_PREFIX}{next}")).expect("valid skolem IRI"));
        Ok(iri.clone())
    }

    fn prefixed_name(&mut self) -> PResult<Iri> {
        let (line, column) = (self.line, self.column);
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_pn_char(c) && c != '.' {
                return self.error(format!("unexpected character '{c}'"));
            }
            prefix.push(c);
            self.bump();
        }
        if self.peek() != Some(':') {
            return self.error(format!("expected prefixed name, found '{prefix}'"));
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            if is_pn_char(c) || matches!(c, '.' | ':' | '%') {
                local.push(c);
                self.bump();
            } else if c == '\\' {
                self.bump();
                match self.bump() {
                    Some(e) if "_~.-!$&'()*+,;=/?#@%".contains(e) => local.push(e),
                    _ => return self.error("invalid escape in local name"),
                }
            } else {
                break;
            }
        }
        while local.ends_with('.') {
            local.pop();
            self.pos -= 1;
            self.column -= 1;
        }
        let Some(ns) = self.prefixes.get(&prefix) else {
            return Err(ParseError::Syntax {
                line,
                column,
                message: format!("undeclared prefix '{prefix}:'"),
            });
        };
        Iri::new(format!("{ns}{local}")).map_err(|e| ParseError::Syntax {
            line,
            column,
            message: e.to_string(),
        })
    }

    fn literal(&mut self) -> PResult<Literal> {
        let (line, column) = (self.line, self.column);
        let quote = self.peek().expect("caller checked quote");
        let long = self.turtle() && self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        let mut lexical = String::new();
        if long {
            for _ in 0..3 {
                self.bump();
            }
            loop {
                if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    // a closing run may be longer than three quotes; the extras belong to the string
                    if self.peek_at(3) == Some(quote) {
                        lexical.push(quote);
                        self.bump();
                        continue;
                    }
                    for _ in 0..3 {
                        self.bump();
                    }
                    break;
                }
                match self.bump() {
                    Some('\\') => lexical.push(self.string_escape()?),
                    Some(c) => lexical.push(c),
                    None => return self.error("unterminated long string"),
                }
            }
        } else {
            self.bump();
            loop {
                match self.bump() {
                    Some(c) if c == quote => break,
                    Some('\\') => lexical.push(self.string_escape()?),
                    Some('\n') | Some('\r') => return self.error("line break in string literal"),
                    Some(c) => lexical.push(c),
                    None => return self.error("unterminated string literal"),
                }
            }
        }
        let wrap = |e: super::term::TermError| ParseError::Syntax {
            line,
            column,
            message: e.to_string(),
        };
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Literal::lang_string(lexical, tag).map_err(wrap)
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.bump();
                self.bump();
                let datatype = match self.peek() {
                    Some('<') => self.iri_ref()?,
                    _ if self.turtle() => self.prefixed_name()?,
                    _ => return self.error("expected datatype IRI"),
                };
                Literal::new(lexical, datatype).map_err(wrap)
            }
            _ => Ok(Literal::string(lexical)),
        }
    }

    fn string_escape(&mut self) -> PResult<char> {
        match self.peek() {
            Some('t') => {
                self.bump();
                Ok('\t')
            }
            Some('b') => {
                self.bump();
                Ok('\u{8}')
            }
            Some('n') => {
                self.bump();
                Ok('\n')
            }
            Some('r') => {
                self.bump();
                Ok('\r')
            }
            Some('f') => {
                self.bump();
                Ok('\u{c}')
            }
            Some(c @ ('"' | '\'' | '\\')) => {
                self.bump();
                Ok(c)
            }
            Some('u') | Some('U') => self.unicode_escape(),
            _ => self.error("invalid escape sequence in string"),
        }
    }

    fn numeric(&mut self) -> PResult<Literal> {
        let mut text = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            text.push(c);
            self.bump();
        }
        let digits = |p: &mut Parser, text: &mut String| {
            while let Some(c) = p.peek().filter(char::is_ascii_digit) {
                text.push(c);
                p.bump();
            }
        };
        digits(self, &mut text);
        let mut datatype = xsd::integer();
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            self.bump();
            digits(self, &mut text);
            datatype = xsd::decimal();
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            text.push(e);
            self.bump();
            if let Some(c @ ('+' | '-')) = self.peek() {
                text.push(c);
                self.bump();
            }
            digits(self, &mut text);
            datatype = xsd::double();
        }
        Literal::new(text.clone(), datatype).or_else(|_| self.error(format!("invalid number '{text}'")))
    }
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || (!c.is_ascii() && !c.is_whitespace())
}
