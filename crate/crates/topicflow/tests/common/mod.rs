#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn topicflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicflow")).args(args).output().expect("spawn topicflow")
}

pub fn topicflow_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_topicflow"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn topicflow")
}

pub fn assert_ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Eq,
    Edge(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i + 1 < chars.len() && !(chars[i] == '*' && chars[i + 1] == '/') {
                    i += 1;
                }
                if i + 1 >= chars.len() {
                    return Err("unterminated comment".into());
                }
                i += 2;
            }
            '#' if i == 0 || chars[i - 1] == '\n' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '{' => (out.push(Tok::LBrace), i += 1).1,
            '}' => (out.push(Tok::RBrace), i += 1).1,
            '[' => (out.push(Tok::LBracket), i += 1).1,
            ']' => (out.push(Tok::RBracket), i += 1).1,
            ';' => (out.push(Tok::Semi), i += 1).1,
            ',' => (out.push(Tok::Comma), i += 1).1,
            ':' => (out.push(Tok::Colon), i += 1).1,
            '=' => (out.push(Tok::Eq), i += 1).1,
            '-' if chars.get(i + 1) == Some(&'>') => (out.push(Tok::Edge("->")), i += 2).1,
            '-' if chars.get(i + 1) == Some(&'-') => (out.push(Tok::Edge("--")), i += 2).1,
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') if chars.get(i + 1).is_some() => {
                            s.push('\\');
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Tok::Id(s));
            }
            '<' => {
                let mut depth = 0;
                let start = i;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated HTML string".into()),
                        Some('<') => depth += 1,
                        Some('>') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
                i += 1;
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let num: String = chars[start..i].iter().collect();
                if num == "-" || num == "." || num.matches('.').count() > 1 {
                    return Err(format!("bad numeral {num:?}"));
                }
                out.push(Tok::Id(num));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

/// Counts gathered while parsing a DOT document.
#[derive(Debug, Default, PartialEq)]
pub struct DotSummary {
    pub directed: bool,
    pub node_statements: Vec<String>,
    pub edges: Vec<(String, String, BTreeMap<String, String>)>,
    pub subgraphs: usize,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    summary: DotSummary,
}

const KEYWORDS: [&str; 6] = ["strict", "graph", "digraph", "node", "edge", "subgraph"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.pos).cloned().ok_or("unexpected end of input")?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), String> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(format!("expected {want:?}, found {got:?} at token {}", self.pos - 1))
        }
    }

    fn keyword(&self, k: usize, word: &str) -> bool {
        matches!(self.peek_at(k), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(word))
    }

    fn id(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Id(s) if !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => Ok(s),
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.keyword(0, "strict") {
            self.pos += 1;
        }
        if self.keyword(0, "digraph") {
            self.summary.directed = true;
        } else if !self.keyword(0, "graph") {
            return Err("expected graph or digraph".into());
        }
        self.pos += 1;
        if let Some(Tok::Id(_)) = self.peek() {
            self.id()?;
        }
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::RBrace) | None) {
            self.stmt()?;
            if self.peek() == Some(&Tok::Semi) {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        if self.keyword(0, "graph") || self.keyword(0, "node") || self.keyword(0, "edge") {
            self.pos += 1;
            self.attr_list()?;
            return Ok(());
        }
        if matches!(self.peek_at(1), Some(Tok::Eq)) {
            self.id()?;
            self.expect(Tok::Eq)?;
            self.id()?;
            return Ok(());
        }
        let first = self.endpoint()?;
        if matches!(self.peek(), Some(Tok::Edge(_))) {
            let mut from = first;
            while let Some(Tok::Edge(op)) = self.peek().cloned() {
                let want = if self.summary.directed { "->" } else { "--" };
                if op != want {
                    return Err(format!("edge operator {op} in a graph that needs {want}"));
                }
                self.pos += 1;
                let to = self.endpoint()?;
                self.summary.edges.push((from.clone().unwrap_or_default(), to.clone().unwrap_or_default(), BTreeMap::new()));
                from = to;
            }
            let attrs = self.attr_list_opt()?;
            let n = self.summary.edges.len();
            self.summary.edges[n - 1].2 = attrs;
        } else if let Some(node) = first {
            self.attr_list_opt()?;
            self.summary.node_statements.push(node);
        }
        Ok(())
    }

    /// A node id (returned) or a subgraph (`None`).
    fn endpoint(&mut self) -> Result<Option<String>, String> {
        if self.keyword(0, "subgraph") || self.peek() == Some(&Tok::LBrace) {
            if self.keyword(0, "subgraph") {
                self.pos += 1;
                if let Some(Tok::Id(_)) = self.peek() {
                    self.id()?;
                }
            }
            self.expect(Tok::LBrace)?;
            self.stmt_list()?;
            self.expect(Tok::RBrace)?;
            self.summary.subgraphs += 1;
            return Ok(None);
        }
        let id = self.id()?;
        if self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            self.id()?;
            if self.peek() == Some(&Tok::Colon) {
                self.pos += 1;
                self.id()?;
            }
        }
        Ok(Some(id))
    }

    fn attr_list_opt(&mut self) -> Result<BTreeMap<String, String>, String> {
        if self.peek() == Some(&Tok::LBracket) {
            self.attr_list()
        } else {
            Ok(BTreeMap::new())
        }
    }

    fn attr_list(&mut self) -> Result<BTreeMap<String, String>, String> {
        let mut attrs = BTreeMap::new();
        self.expect(Tok::LBracket)?;
        loop {
            while self.peek() != Some(&Tok::RBracket) {
                let k = self.id()?;
                self.expect(Tok::Eq)?;
                let v = self.id()?;
                attrs.insert(k, v);
                if matches!(self.peek(), Some(Tok::Semi) | Some(Tok::Comma)) {
                    self.pos += 1;
                }
            }
            self.expect(Tok::RBracket)?;
            if self.peek() != Some(&Tok::LBracket) {
                return Ok(attrs);
            }
            self.pos += 1;
        }
    }
}

/// Parses a DOT document against the standard grammar.
pub fn parse_dot(src: &str) -> Result<DotSummary, String> {
    let mut p = Parser { toks: lex(src)?, pos: 0, summary: DotSummary::default() };
    p.graph()?;
    Ok(p.summary)
}
