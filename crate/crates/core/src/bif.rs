//! Reader and writer for the discrete subset of the BIF network format:
//! `network`, `variable` blocks with `type discrete [ n ] { labels }`, and
//! `probability` blocks with either a `table` row (roots) or parenthesized
//! parent-label rows. `property` lines are parsed and ignored. Conditional
//! rows are keyed by their parent-label tuples, not file order; missing or
//! duplicated rows are errors.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::net::{BayesNet, NodeDef};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Pipe,
    Comma,
    Semi,
}

impl Tok {
    fn show(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '+' | '<' | '>' | '=' | '/' | '%')
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '/' if {
                let mut it = chars.clone();
                it.next();
                it.peek() == Some(&'/')
            } =>
            {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '{' => {
                toks.push((Tok::LBrace, line));
                chars.next();
            }
            '}' => {
                toks.push((Tok::RBrace, line));
                chars.next();
            }
            '(' => {
                toks.push((Tok::LParen, line));
                chars.next();
            }
            ')' => {
                toks.push((Tok::RParen, line));
                chars.next();
            }
            '[' => {
                toks.push((Tok::LBracket, line));
                chars.next();
            }
            ']' => {
                toks.push((Tok::RBracket, line));
                chars.next();
            }
            '|' => {
                toks.push((Tok::Pipe, line));
                chars.next();
            }
            ',' => {
                toks.push((Tok::Comma, line));
                chars.next();
            }
            ';' => {
                toks.push((Tok::Semi, line));
                chars.next();
            }
            '"' => {
                // quoted strings appear in property lines; keep them as words
                chars.next();
                let mut w = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    if c == '\n' {
                        line += 1;
                    }
                    w.push(c);
                }
                toks.push((Tok::Word(w), line));
            }
            c if is_word_char(c) => {
                let mut w = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    w.push(c);
                    chars.next();
                }
                match w.parse::<f64>() {
                    Ok(n) => toks.push((Tok::Number(n), line)),
                    Err(_) => toks.push((Tok::Word(w), line)),
                }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|t| t.1)
            .unwrap_or(0)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok> {
        match self.toks.get(self.pos) {
            Some((t, _)) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.fail("unexpected end of input"),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let got = self.next()?;
        if got != want {
            self.pos -= 1;
            return self.fail(format!("expected {}, found {}", want.show(), got.show()));
        }
        Ok(())
    }

    fn word(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Word(w) => Ok(w),
            other => {
                self.pos -= 1;
                self.fail(format!("expected a name, found {}", other.show()))
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next()? {
            Tok::Number(n) => Ok(n),
            other => {
                self.pos -= 1;
                self.fail(format!("expected a number, found {}", other.show()))
            }
        }
    }

    /// Numbers separated by optional commas, up to the terminator.
    fn number_list(&mut self) -> Result<Vec<f64>> {
        let mut out = vec![self.number()?];
        loop {
            match self.peek() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::Number(_)) => {}
                _ => break,
            }
            out.push(self.number()?);
        }
        Ok(out)
    }

    /// Skips a `property ... ;` tail.
    fn skip_property(&mut self) -> Result<()> {
        loop {
            match self.next()? {
                Tok::Semi => return Ok(()),
                Tok::RBrace => return self.fail("unterminated property line"),
                _ => {}
            }
        }
    }
}

struct VarDecl {
    labels: Vec<String>,
    line: usize,
}

struct ProbDecl {
    node: String,
    parents: Vec<String>,
    table: Option<Vec<f64>>,
    rows: Vec<(Vec<String>, Vec<f64>, usize)>,
    line: usize,
}

/// Parses BIF text into a validated [`BayesNet`].
pub fn parse_bif(text: &str) -> Result<BayesNet> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };

    // network <words> { properties }
    let kw = p.word()?;
    if kw != "network" {
        return p.fail("expected `network` header");
    }
    let mut net_name = String::new();
    loop {
        match p.next()? {
            Tok::LBrace => break,
            Tok::Word(w) => {
                if !net_name.is_empty() {
                    net_name.push(' ');
                }
                net_name.push_str(&w);
            }
            other => return p.fail(format!("unexpected {} in network header", other.show())),
        }
    }
    if net_name.is_empty() {
        net_name = "unknown".into();
    }
    loop {
        match p.next()? {
            Tok::RBrace => break,
            Tok::Word(w) if w == "property" => p.skip_property()?,
            other => return p.fail(format!("unexpected {} in network block", other.show())),
        }
    }

    let mut vars: Vec<(String, VarDecl)> = Vec::new();
    let mut probs: Vec<ProbDecl> = Vec::new();

    while p.peek().is_some() {
        let kw = p.word()?;
        match kw.as_str() {
            "variable" => {
                let line = p.line();
                let name = p.word()?;
                p.expect(Tok::LBrace)?;
                let mut labels = None;
                loop {
                    match p.next()? {
                        Tok::RBrace => break,
                        Tok::Word(w) if w == "property" => p.skip_property()?,
                        Tok::Word(w) if w == "type" => {
                            let kind = p.word()?;
                            if kind != "discrete" {
                                return Err(Error::Unsupported {
                                    line: p.line(),
                                    feature: format!("{kind} variable `{name}`"),
                                });
                            }
                            p.expect(Tok::LBracket)?;
                            let n = p.number()? as usize;
                            p.expect(Tok::RBracket)?;
                            p.expect(Tok::LBrace)?;
                            let mut ls = Vec::new();
                            loop {
                                match p.next()? {
                                    Tok::RBrace => break,
                                    Tok::Comma => {}
                                    Tok::Word(w) => ls.push(w),
                                    Tok::Number(x) => ls.push(format!("{x}")),
                                    other => {
                                        return p
                                            .fail(format!("unexpected {} in labels", other.show()))
                                    }
                                }
                            }
                            if ls.len() != n {
                                return p.fail(format!(
                                    "variable {name} declares {n} labels but lists {}",
                                    ls.len()
                                ));
                            }
                            p.expect(Tok::Semi)?;
                            labels = Some(ls);
                        }
                        other => {
                            return p.fail(format!("unexpected {} in variable block", other.show()))
                        }
                    }
                }
                match labels {
                    Some(labels) => vars.push((name, VarDecl { labels, line })),
                    None => return p.fail(format!("variable {name} has no type declaration")),
                }
            }
            "probability" => {
                let line = p.line();
                p.expect(Tok::LParen)?;
                let node = p.word()?;
                let mut parents = Vec::new();
                loop {
                    match p.next()? {
                        Tok::RParen => break,
                        Tok::Pipe | Tok::Comma => {}
                        Tok::Word(w) => parents.push(w),
                        other => {
                            return p
                                .fail(format!("unexpected {} in probability header", other.show()))
                        }
                    }
                }
                p.expect(Tok::LBrace)?;
                let mut decl = ProbDecl {
                    node,
                    parents,
                    table: None,
                    rows: Vec::new(),
                    line,
                };
                loop {
                    match p.next()? {
                        Tok::RBrace => break,
                        Tok::Word(w) if w == "property" => p.skip_property()?,
                        Tok::Word(w) if w == "table" => {
                            let nums = p.number_list()?;
                            p.expect(Tok::Semi)?;
                            if decl.table.replace(nums).is_some() {
                                return p.fail(format!("duplicate table row for {}", decl.node));
                            }
                        }
                        Tok::LParen => {
                            let row_line = p.line();
                            let mut combo = Vec::new();
                            loop {
                                match p.next()? {
                                    Tok::RParen => break,
                                    Tok::Comma => {}
                                    Tok::Word(w) => combo.push(w),
                                    Tok::Number(x) => combo.push(format!("{x}")),
                                    other => {
                                        return p.fail(format!(
                                            "unexpected {} in row key",
                                            other.show()
                                        ))
                                    }
                                }
                            }
                            let nums = p.number_list()?;
                            p.expect(Tok::Semi)?;
                            decl.rows.push((combo, nums, row_line));
                        }
                        other => {
                            return p
                                .fail(format!("unexpected {} in probability block", other.show()))
                        }
                    }
                }
                probs.push(decl);
            }
            other => {
                return p.fail(format!(
                    "expected `variable` or `probability`, found `{other}`"
                ))
            }
        }
    }

    assemble(net_name, vars, probs)
}

fn assemble(
    net_name: String,
    vars: Vec<(String, VarDecl)>,
    probs: Vec<ProbDecl>,
) -> Result<BayesNet> {
    let mut order: Vec<String> = Vec::new();
    let mut decls: HashMap<String, VarDecl> = HashMap::new();
    for (name, d) in vars {
        let line = d.line;
        order.push(name.clone());
        if decls.insert(name.clone(), d).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("variable {name} declared twice"),
            });
        }
    }

    let mut defs: HashMap<String, NodeDef> = HashMap::new();
    for decl in probs {
        let line = decl.line;
        let var = decls.get(&decl.node).ok_or_else(|| Error::Parse {
            line,
            message: format!("probability block for undeclared variable {}", decl.node),
        })?;
        for parent in &decl.parents {
            if !decls.contains_key(parent) {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown parent {parent} of {}", decl.node),
                });
            }
        }
        let cols = var.labels.len();
        let cpt = if decl.parents.is_empty() {
            let table = match (decl.table, decl.rows.is_empty()) {
                (Some(t), true) => t,
                (None, _) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("root {} needs a table row", decl.node),
                    })
                }
                (Some(_), false) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("root {} mixes table and conditional rows", decl.node),
                    })
                }
            };
            if table.len() != cols {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "table for {} has {} entries, expected {cols}",
                        decl.node,
                        table.len()
                    ),
                });
            }
            table
        } else {
            if decl.table.is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("conditional node {} must use parenthesized rows", decl.node),
                });
            }
            // key rows by explicit parent-label tuples
            let parent_labels: Vec<&Vec<String>> =
                decl.parents.iter().map(|pn| &decls[pn].labels).collect();
            let rows: usize = parent_labels.iter().map(|l| l.len()).product();
            let mut cpt = vec![f64::NAN; rows * cols];
            let mut filled = vec![false; rows];
            for (combo, nums, row_line) in decl.rows {
                if combo.len() != decl.parents.len() {
                    return Err(Error::Parse {
                        line: row_line,
                        message: format!(
                            "row for {} names {} parent labels, expected {}",
                            decl.node,
                            combo.len(),
                            decl.parents.len()
                        ),
                    });
                }
                let mut idx = 0usize;
                for (k, label) in combo.iter().enumerate() {
                    let pos =
                        parent_labels[k]
                            .iter()
                            .position(|l| l == label)
                            .ok_or(Error::Parse {
                                line: row_line,
                                message: format!(
                                    "label {label} is not a value of {}",
                                    decl.parents[k]
                                ),
                            })?;
                    idx = idx * parent_labels[k].len() + pos;
                }
                if filled[idx] {
                    return Err(Error::Parse {
                        line: row_line,
                        message: format!("duplicate row ({}) for {}", combo.join(", "), decl.node),
                    });
                }
                if nums.len() != cols {
                    return Err(Error::Parse {
                        line: row_line,
                        message: format!(
                            "row for {} has {} entries, expected {cols}",
                            decl.node,
                            nums.len()
                        ),
                    });
                }
                filled[idx] = true;
                cpt[idx * cols..(idx + 1) * cols].copy_from_slice(&nums);
            }
            if let Some(missing) = filled.iter().position(|f| !f) {
                let mut combo = Vec::new();
                let mut rest = missing;
                for labels in parent_labels.iter().rev() {
                    combo.push(labels[rest % labels.len()].clone());
                    rest /= labels.len();
                }
                combo.reverse();
                return Err(Error::Parse {
                    line,
                    message: format!("missing row ({}) for {}", combo.join(", "), decl.node),
                });
            }
            cpt
        };
        let def = NodeDef {
            name: decl.node.clone(),
            labels: var.labels.clone(),
            parents: decl.parents,
            cpt,
        };
        if defs.insert(decl.node.clone(), def).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate probability block for {}", decl.node),
            });
        }
    }

    let mut nodes = Vec::with_capacity(order.len());
    for name in order {
        match defs.remove(&name) {
            Some(d) => nodes.push(d),
            None => {
                let line = decls[&name].line;
                return Err(Error::Parse {
                    line,
                    message: format!("variable {name} has no probability block"),
                });
            }
        }
    }
    BayesNet::new(net_name, nodes)
}

/// Writes a net back out in the supported BIF subset; floats keep their exact
/// shortest representation so a reparse reproduces the same tables.
pub fn serialize_bif(net: &BayesNet) -> String {
    let mut out = String::new();
    out.push_str(&format!("network {} {{\n}}\n", net.name()));
    for node in net.nodes() {
        out.push_str(&format!("variable {} {{\n", node.name));
        out.push_str(&format!(
            "  type discrete [ {} ] {{ {} }};\n",
            node.labels.len(),
            node.labels.join(", ")
        ));
        out.push_str("}\n");
    }
    for node in net.nodes() {
        let cols = node.card();
        if node.parents.is_empty() {
            out.push_str(&format!("probability ( {} ) {{\n", node.name));
            out.push_str(&format!("  table {};\n", join_nums(&node.cpt)));
            out.push_str("}\n");
        } else {
            out.push_str(&format!(
                "probability ( {} | {} ) {{\n",
                node.name,
                node.parents.join(", ")
            ));
            let parent_labels: Vec<Vec<String>> = node
                .parents
                .iter()
                .map(|p| net.node(p).expect("validated").labels.clone())
                .collect();
            let rows = node.cpt.len() / cols;
            for r in 0..rows {
                let mut combo = Vec::new();
                let mut rest = r;
                for labels in parent_labels.iter().rev() {
                    combo.push(labels[rest % labels.len()].clone());
                    rest /= labels.len();
                }
                combo.reverse();
                out.push_str(&format!(
                    "  ({}) {};\n",
                    combo.join(", "),
                    join_nums(&node.cpt[r * cols..(r + 1) * cols])
                ));
            }
            out.push_str("}\n");
        }
    }
    out
}

fn join_nums(nums: &[f64]) -> String {
    nums.iter()
        .map(|n| format!("{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}
