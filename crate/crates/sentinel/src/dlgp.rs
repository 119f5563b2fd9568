//! Reader and writer for a small dlgp-style text format.
//!
//! ```text
//! document  := statement*
//! statement := atomlist "." | ("[" LABEL "]")? atomlist ":-" atomlist "."
//! atom      := IDENT "(" term ("," term)* ")"
//! term      := VARIABLE | IDENT
//! ```
//!
//! Rules are written head first. Identifiers starting with an uppercase
//! letter are variables; head variables missing from the body are
//! existential. `%` starts a comment. Variables are standardized apart by
//! appending `@n`, where `n` is the 1-based rule ordinal, and the suffix is
//! dropped again when writing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{base_name, check_arity, Atom, ModelError, Rule, RuleSet, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDocument {
    pub facts: Vec<Atom>,
    pub rules: RuleSet,
    /// Line of each fact, then of each rule, in document order.
    pub fact_lines: Vec<usize>,
    pub rule_lines: Vec<usize>,
}

impl SourceDocument {
    pub fn new(facts: Vec<Atom>, rules: RuleSet) -> SourceDocument {
        SourceDocument { fact_lines: vec![0; facts.len()], rule_lines: vec![0; rules.len()], facts, rules }
    }

    /// Structural equality, ignoring line numbers.
    pub fn same_content(&self, other: &SourceDocument) -> bool {
        self.facts == other.facts && self.rules.rules == other.rules.rules
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Label(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.char_indices().peekable(), src, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, column, message: message.into() }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize, usize)>, ParseError> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(&(_, c)) if c.is_whitespace() => {
                    self.bump();
                }
                Some(&(_, '%')) => {
                    while let Some(&(_, c)) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(_) => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let (start, c) = *self.chars.peek().unwrap();
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            ':' => {
                self.bump();
                if self.bump() != Some('-') {
                    return Err(self.err(line, col, "expected ':-'"));
                }
                Tok::Implies
            }
            '[' => {
                self.bump();
                let mut label = String::new();
                loop {
                    match self.bump() {
                        Some(']') => break,
                        Some('\n') | None => return Err(self.err(line, col, "unterminated rule label")),
                        Some(c) => label.push(c),
                    }
                }
                let label = label.trim().to_owned();
                if label.is_empty() || label.contains(char::is_whitespace) {
                    return Err(self.err(line, col, "rule labels must be a single non-empty word"));
                }
                Tok::Label(label)
            }
            c if is_word(c) => {
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if !is_word(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    self.bump();
                }
                let word = self.src[start..end].to_owned();
                if c.is_uppercase() {
                    Tok::Var(word)
                } else if c.is_lowercase() || c.is_ascii_digit() {
                    Tok::Ident(word)
                } else {
                    return Err(self.err(line, col, format!("identifier {word} must start with a letter or digit")));
                }
            }
            other => return Err(self.err(line, col, format!("unexpected character {other:?}"))),
        };
        Ok(Some((tok, line, col)))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<(Tok, usize, usize)>,
    last: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&Tok>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = self.lex.next()?;
        }
        Ok(self.peeked.as_ref().map(|(t, _, _)| t))
    }

    fn take(&mut self) -> Result<Option<(Tok, usize, usize)>, ParseError> {
        self.peek()?;
        let t = self.peeked.take();
        if let Some((_, l, c)) = &t {
            self.last = (*l, *c);
        }
        Ok(t)
    }

    fn here(&mut self) -> (usize, usize) {
        match &self.peeked {
            Some((_, l, c)) => (*l, *c),
            None => (self.lex.line, self.lex.col),
        }
    }

    fn fail<T>(&mut self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, column) = self.here();
        Err(ParseError { line, column, message: message.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        self.peek()?;
        match self.peeked {
            Some((ref t, _, _)) if *t == want => {
                self.take()?;
                Ok(())
            }
            None => self.fail(format!("unterminated statement: expected {what}")),
            Some(_) => self.fail(format!("expected {what}")),
        }
    }

    fn atom(&mut self, rule_ordinal: Option<usize>) -> Result<(Atom, usize), ParseError> {
        let (pred, line) = match self.take()? {
            Some((Tok::Ident(p), line, _)) => (p, line),
            Some((_, l, c)) => return Err(ParseError { line: l, column: c, message: "expected predicate name".into() }),
            None => return self.fail("unterminated statement: expected atom"),
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            match self.take()? {
                Some((Tok::Ident(c), _, _)) => args.push(Term::constant(&c)),
                Some((Tok::Var(v), l, c)) => match rule_ordinal {
                    Some(n) => args.push(Term::variable(&format!("{v}@{n}"))),
                    None => {
                        return Err(ParseError { line: l, column: c, message: format!("variable {v} in a fact") });
                    }
                },
                Some((_, l, c)) => return Err(ParseError { line: l, column: c, message: "expected term".into() }),
                None => return self.fail("unterminated statement: expected term"),
            }
            match self.take()? {
                Some((Tok::Comma, _, _)) => continue,
                Some((Tok::RParen, _, _)) => break,
                Some((_, l, c)) => return Err(ParseError { line: l, column: c, message: "expected ',' or ')'".into() }),
                None => return self.fail("unterminated statement: expected ')'"),
            }
        }
        Ok((Atom::new(&pred, args), line))
    }

    fn atomlist(&mut self, rule_ordinal: Option<usize>) -> Result<Vec<(Atom, usize)>, ParseError> {
        let mut out = vec![self.atom(rule_ordinal)?];
        while self.peek()? == Some(&Tok::Comma) {
            self.take()?;
            out.push(self.atom(rule_ordinal)?);
        }
        Ok(out)
    }
}

/// Parses a document. Facts and rules keep their source order.
pub fn parse(text: &str) -> Result<SourceDocument, ParseError> {
    let mut p = Parser { lex: Lexer::new(text), peeked: None, last: (1, 1) };
    let mut facts = Vec::new();
    let mut fact_lines = Vec::new();
    let mut rules = Vec::new();
    let mut rule_lines = Vec::new();
    let mut schema = BTreeMap::new();
    let arity = |schema: &mut BTreeMap<_, _>, a: &Atom, line: usize| {
        check_arity(schema, a).map_err(|e| ParseError { line, column: 1, message: e.to_string() })
    };

    while p.peek()?.is_some() {
        let (line, _) = p.here();
        let label = if let Some(Tok::Label(_)) = p.peek()? {
            match p.take()? {
                Some((Tok::Label(l), _, _)) => Some(l),
                _ => unreachable!(),
            }
        } else {
            None
        };
        let ordinal = rules.len() + 1;
        // Statements without ':-' are facts, so variables are only rejected
        // once we know there is no body.
        let head = p.atomlist(Some(ordinal))?;
        match p.take()? {
            Some((Tok::Dot, _, _)) if label.is_none() => {
                for (a, l) in head {
                    if let Some(v) = a.vars().next() {
                        return Err(ParseError { line: l, column: 1, message: format!("variable {} in a fact", base_name(v)) });
                    }
                    arity(&mut schema, &a, l)?;
                    facts.push(a);
                    fact_lines.push(l);
                }
            }
            Some((Tok::Dot, l, c)) => {
                return Err(ParseError { line: l, column: c, message: "labelled statement must be a rule".into() });
            }
            Some((Tok::Implies, _, _)) => {
                let body = p.atomlist(Some(ordinal))?;
                p.expect(Tok::Dot, "'.'")?;
                for (a, l) in head.iter().chain(&body) {
                    arity(&mut schema, a, *l)?;
                }
                let label = label.unwrap_or_else(|| format!("r{ordinal}"));
                let rule = Rule::new(
                    label,
                    body.into_iter().map(|(a, _)| a).collect(),
                    head.into_iter().map(|(a, _)| a).collect(),
                )
                .map_err(|e| ParseError { line, column: 1, message: e.to_string() })?;
                rules.push(rule);
                rule_lines.push(line);
            }
            Some((_, l, c)) => return Err(ParseError { line: l, column: c, message: "expected ',', '.' or ':-'".into() }),
            None => return p.fail("unterminated statement: expected '.'"),
        }
    }
    let rules = RuleSet::new(rules).map_err(|e| {
        let line = match &e {
            ModelError::DuplicateLabel(l) => rules_line(&rule_lines, l, text),
            _ => 0,
        };
        ParseError { line, column: 1, message: e.to_string() }
    })?;
    Ok(SourceDocument { facts, rules, fact_lines, rule_lines })
}

fn rules_line(lines: &[usize], label: &str, text: &str) -> usize {
    let needle = format!("[{label}]");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1).unwrap_or_else(|| lines.last().copied().unwrap_or(0))
}

/// Parses facts only; rules are rejected.
pub fn parse_facts(text: &str) -> Result<Vec<Atom>, ParseError> {
    let doc = parse(text)?;
    if let Some(&line) = doc.rule_lines.first() {
        return Err(ParseError { line, column: 1, message: "expected facts only".into() });
    }
    Ok(doc.facts)
}

fn write_atom(out: &mut String, a: &Atom) {
    write!(out, "{}(", a.pred).unwrap();
    for (i, t) in a.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        match t {
            Term::Variable(v) => out.push_str(base_name(*v)),
            t => write!(out, "{t}").unwrap(),
        }
    }
    out.push(')');
}

fn write_list(out: &mut String, atoms: &[Atom]) {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_atom(out, a);
    }
}

/// Writes facts one per line, then one labelled rule per line.
///
/// Skolem terms cannot be written: the format has no function terms.
pub fn serialize(doc: &SourceDocument) -> String {
    let mut out = String::new();
    for f in &doc.facts {
        serialize_fact(&mut out, f);
    }
    for r in &doc.rules.rules {
        write!(out, "[{}] ", r.label).unwrap();
        write_list(&mut out, &r.head);
        out.push_str(" :- ");
        write_list(&mut out, &r.body);
        out.push_str(".\n");
    }
    out
}

fn serialize_fact(out: &mut String, f: &Atom) {
    assert!(
        !f.args.iter().any(|t| matches!(t, Term::Skolem(_))),
        "skolem terms have no textual form in dlgp: {f}"
    );
    write_atom(out, f);
    out.push_str(".\n");
}

/// Writes a database as facts.
pub fn serialize_facts<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> String {
    let mut out = String::new();
    for a in atoms {
        serialize_fact(&mut out, a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::atom;
    use proptest::prelude::*;

    #[test]
    fn rule_with_existential() {
        let doc = parse("[r1] typeA(X,U), typeA(U,X) :- typeB(X,Y).").unwrap();
        let r = &doc.rules.rules[0];
        assert_eq!(r.label, "r1");
        assert_eq!(r.existentials.len(), 1);
        assert_eq!(base_name(r.existentials[0]), "U");
        assert_eq!(r.body.len(), 1);
        assert_eq!(r.head.len(), 2);
    }

    #[test]
    fn single_fact() {
        let doc = parse("typeB(t,r).").unwrap();
        assert_eq!(doc.facts, vec![atom("typeB", &["t", "r"])]);
        assert!(doc.rules.is_empty());
        assert_eq!(serialize(&doc), "typeB(t,r).\n");
    }

    #[test]
    fn empty_document() {
        let doc = parse("").unwrap();
        assert!(doc.facts.is_empty() && doc.rules.is_empty());
        assert_eq!(serialize(&doc), "");
        assert!(parse("  % only a comment\n").unwrap().facts.is_empty());
    }

    #[test]
    fn rules_are_standardized_apart() {
        let doc = parse("p(X) :- q(X).\nq(X) :- p(X).").unwrap();
        assert_eq!(doc.rules.rules[0].universals[0].as_str(), "X@1");
        assert_eq!(doc.rules.rules[1].universals[0].as_str(), "X@2");
        assert_eq!(doc.rules.rules[1].label, "r2");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("p(a).\np(a,b).").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("arit"), "{e}");
        let e = parse("p(a).\n\np(X).").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("variable"), "{e}");
        let e = parse("p(a).\nq(X) :- p(X)").unwrap_err();
        assert!(e.message.contains("unterminated"), "{e}");
        assert!(parse("[a] p(X) :- q(X).\n[a] q(X) :- p(X).").is_err());
        assert!(parse("p(a) q(b).").is_err());
    }

    #[test]
    fn fixtures_round_trip() {
        for (name, text) in crate::fixtures::ALL {
            let doc = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = parse(&serialize(&doc)).unwrap();
            assert!(doc.same_content(&again), "{name}");
        }
        let doc = parse(crate::fixtures::SIGNALS).unwrap();
        assert_eq!(
            serialize(&doc),
            "[r1] typeA(X,U), typeA(U,X) :- typeB(X,Y).\n[r2] typeB(Z,V) :- typeB(X,Y), typeA(X,Z), typeA(Z,X).\n"
        );
    }

    fn arb_document() -> impl Strategy<Value = String> {
        let preds = ["p", "q", "r", "s"];
        let arity = |p: &str| match p {
            "p" => 1,
            "q" => 2,
            "r" => 2,
            _ => 3,
        };
        let term = prop_oneof![
            prop::sample::select(vec!["a", "b", "c0", "7"]).prop_map(str::to_owned),
            prop::sample::select(vec!["X", "Y", "Z", "W_1"]).prop_map(str::to_owned),
        ];
        let atom = (prop::sample::select(preds.to_vec()), prop::collection::vec(term, 3)).prop_map(move |(p, ts)| {
            format!("{p}({})", ts[..arity(p)].join(","))
        });
        let list = prop::collection::vec(atom, 1..4).prop_map(|v| v.join(", "));
        let stmt = (list.clone(), prop::option::of(list)).prop_map(|(h, b)| match b {
            Some(b) => format!("{h} :- {b}."),
            None => format!("{}.", h.replace(['X', 'Y', 'Z', 'W'], "k")),
        });
        prop::collection::vec(stmt, 0..6).prop_map(|v| v.join("\n"))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn parse_serialize_is_identity(text in arb_document()) {
            let doc = parse(&text).unwrap();
            let again = parse(&serialize(&doc)).unwrap();
            prop_assert!(doc.same_content(&again));
            prop_assert_eq!(serialize(&doc), serialize(&again));
        }
    }
}
