//! Recursive-descent parser for the formula DSL.
//!
//! ```text
//! formula := iff
//! iff     := imp ("<->" imp)*
//! imp     := or ("->" or)*
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | quant | atom | "(" formula ")"
//! quant   := ("exists" | "forall") ["[>=" INT "]"] VAR "." unary
//! atom    := REL "(" term {"," term} ")" | term ("<" | "=") term
//! term    := VAR | "@" (INT | LABEL)
//! ```
//!
//! Binary connectives associate to the left. Infix `<` denotes the
//! vocabulary's order relation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::ast::{Formula, Term};
use crate::model::{Element, FiniteStructure, ORDER};

/// Relation arities, the relation behind infix `<`, and element labels.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    pub relations: BTreeMap<String, usize>,
    pub order: Option<String>,
    pub labels: BTreeMap<String, Element>,
    pub universe_size: Option<usize>,
}

impl Vocabulary {
    /// The vocabulary of `s`; `<` is bound to the relation named `<` when
    /// present.
    pub fn of(s: &FiniteStructure) -> Self {
        let relations: BTreeMap<String, usize> = s.signature().into_iter().collect();
        let order = (relations.get(ORDER) == Some(&2)).then(|| ORDER.to_string());
        Vocabulary {
            relations,
            order,
            labels: s.labels().clone(),
            universe_size: Some(s.universe_size()),
        }
    }

    pub fn with_order(mut self, rel: &str) -> Self {
        self.order = Some(rel.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    At,
    LParen,
    RParen,
    Comma,
    Dot,
    Bang,
    Amp,
    Bar,
    Arrow,
    DoubleArrow,
    Less,
    Equals,
    LBracket,
    GreaterEq,
    RBracket,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let value = src[start..i].parse().map_err(|_| Error::Parse {
                offset: start,
                message: "integer too large".into(),
            })?;
            out.push((start, Tok::Int(value)));
            continue;
        } else if src[i..].starts_with("<->") {
            i += 3;
            Tok::DoubleArrow
        } else if src[i..].starts_with("->") {
            i += 2;
            Tok::Arrow
        } else if src[i..].starts_with(">=") {
            i += 2;
            Tok::GreaterEq
        } else {
            i += 1;
            match c {
                b'@' => Tok::At,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                b'.' => Tok::Dot,
                b'!' => Tok::Bang,
                b'&' => Tok::Amp,
                b'|' => Tok::Bar,
                b'<' => Tok::Less,
                b'=' => Tok::Equals,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                _ => {
                    return Err(Error::Parse {
                        offset: start,
                        message: format!("unexpected character `{}`", src[start..].chars().next().unwrap()),
                    })
                }
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'v> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vocab: &'v Vocabulary,
}

const KEYWORDS: [&str; 2] = ["exists", "forall"];

/// Parses DSL text against a vocabulary.
pub fn parse_formula(src: &str, vocab: &Vocabulary) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        end: src.len(),
        vocab,
    };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: &str) -> Error {
        let found = match self.peek() {
            Some(t) => format!("{t:?}"),
            None => "end of input".to_string(),
        };
        Error::Parse {
            offset: self.offset(),
            message: format!("{message} (found {found})"),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut f = self.imp()?;
        while self.eat(&Tok::DoubleArrow) {
            f = Formula::Iff(Box::new(f), Box::new(self.imp()?));
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula> {
        let mut f = self.or()?;
        while self.eat(&Tok::Arrow) {
            f = f.implies(self.or()?);
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.eat(&Tok::Bar) {
            f = f.or(self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat(&Tok::Amp) {
            f = f.and(self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(w)) if KEYWORDS.contains(&w.as_str()) => self.quant(),
            _ => self.atom(),
        }
    }

    fn quant(&mut self) -> Result<Formula> {
        let universal = matches!(self.peek(), Some(Tok::Ident(w)) if w == "forall");
        self.pos += 1;
        let mut count = None;
        if self.peek() == Some(&Tok::LBracket) {
            if universal {
                return Err(self.error("counting is only available for `exists`"));
            }
            self.pos += 1;
            self.expect(Tok::GreaterEq, "`>=`")?;
            let offset = self.offset();
            match self.peek() {
                Some(&Tok::Int(k)) => {
                    self.pos += 1;
                    if k == 0 {
                        return Err(Error::Parse {
                            offset,
                            message: "counting threshold must be at least 1".into(),
                        });
                    }
                    count = Some(k);
                }
                _ => return Err(self.error("expected counting threshold")),
            }
            self.expect(Tok::RBracket, "`]`")?;
        }
        let var = self.variable()?;
        self.expect(Tok::Dot, "`.`")?;
        let body = self.unary()?;
        Ok(match (universal, count) {
            (true, _) => Formula::forall(&var, body),
            (false, None) => Formula::exists(&var, body),
            (false, Some(k)) => Formula::count_exists(k, &var, body),
        })
    }

    fn variable(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error("expected variable")),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        if let (Some(Tok::Ident(name)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            let name = name.clone();
            self.pos += 2;
            let mut args = vec![self.term()?];
            while self.eat(&Tok::Comma) {
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            let arity = *self
                .vocab
                .relations
                .get(&name)
                .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
            if arity != args.len() {
                return Err(Error::ArityMismatch {
                    name,
                    expected: arity,
                    actual: args.len(),
                });
            }
            return Ok(Formula::Atom { rel: name, args });
        }
        let left = self.term()?;
        match self.peek() {
            Some(Tok::Less) => {
                self.pos += 1;
                let right = self.term()?;
                let rel = self
                    .vocab
                    .order
                    .clone()
                    .ok_or_else(|| Error::UnknownRelation("<".into()))?;
                Ok(Formula::Atom {
                    rel,
                    args: vec![left, right],
                })
            }
            Some(Tok::Equals) => {
                self.pos += 1;
                Ok(Formula::Eq(left, self.term()?))
            }
            _ => Err(self.error("expected `<` or `=`")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        if self.eat(&Tok::At) {
            let offset = self.offset();
            let e = match self.peek() {
                Some(&Tok::Int(i)) => i,
                Some(Tok::Ident(label)) => *self.vocab.labels.get(label).ok_or_else(|| Error::Parse {
                    offset,
                    message: format!("unknown element label `{label}`"),
                })?,
                _ => return Err(self.error("expected element index or label after `@`")),
            };
            if let Some(n) = self.vocab.universe_size {
                if e >= n {
                    return Err(Error::ElementOutOfRange { element: e, size: n });
                }
            }
            self.pos += 1;
            return Ok(Term::Const(e));
        }
        Ok(Term::Var(self.variable()?))
    }
}
