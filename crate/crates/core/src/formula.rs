//! Temporal-epistemic formulas and their surface syntax.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! impl   := until ("->" impl)?
//! until  := or ("U" until)?
//! or     := and ("|" and)*
//! and    := unary ("&" unary)*
//! unary  := "!" unary | "K[" agent "]" unary | ("G" | "F" | "X") unary | atom | "(" impl ")"
//! atom   := "true" | "false" | name CMP int | "clock" CMP int
//!         | "changes(" name ")" CMP int | "sent(" i "," j ["," v] ")" | "received(" i "," j ["," v] ")"
//! ```
//!
//! Agents are numbered from 1 in the surface syntax and from 0 internally.

use std::fmt;

use crate::error::ParseError;
use crate::kernel::{Declarations, GlobalState, LocalState, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn apply(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    True,
    False,
    Var { var: VarId, name: String, cmp: Cmp, value: i64 },
    Clock { cmp: Cmp, value: i64 },
    Changes { var: VarId, name: String, cmp: Cmp, value: i64 },
    /// Agent `from` has sent to `to` (optionally this payload).
    Sent { from: usize, to: usize, payload: Option<i64> },
    /// Agent `agent` has received from `from` (optionally this payload).
    Received { agent: usize, from: usize, payload: Option<i64> },
}

impl Atom {
    pub fn eval(&self, decls: &Declarations, s: &GlobalState) -> bool {
        match self {
            Atom::True => true,
            Atom::False => false,
            Atom::Var { var, cmp, value, .. } => cmp.apply(s.value(decls, *var), *value),
            Atom::Clock { cmp, value } => cmp.apply(i64::from(s.clock().unwrap_or(0)), *value),
            Atom::Changes { var, cmp, value, .. } => cmp.apply(i64::from(s.counter(decls, *var).unwrap_or(0)), *value),
            Atom::Sent { from, to, payload } => log_has(&s.locals[*from].sent, *to, *payload),
            Atom::Received { agent, from, payload } => log_has(&s.locals[*agent].recv, *from, *payload),
        }
    }

    /// Evaluates against one agent's local state; `None` if the atom mentions
    /// something that local state does not contain.
    pub fn eval_local(&self, decls: &Declarations, agent: usize, l: &LocalState) -> Option<bool> {
        match self {
            Atom::True => Some(true),
            Atom::False => Some(false),
            Atom::Var { var, cmp, value, .. } => {
                decls.layout.agent_slot_of[agent][*var].map(|slot| cmp.apply(l.vars[slot], *value))
            }
            Atom::Clock { cmp, value } => l.clock.map(|c| cmp.apply(i64::from(c), *value)),
            Atom::Changes { .. } => None,
            Atom::Sent { from, to, payload } => (*from == agent).then(|| log_has(&l.sent, *to, *payload)),
            Atom::Received { agent: a, from, payload } => (*a == agent).then(|| log_has(&l.recv, *from, *payload)),
        }
    }
}

fn log_has(log: &std::collections::BTreeSet<(usize, i64)>, peer: usize, payload: Option<i64>) -> bool {
    match payload {
        Some(v) => log.contains(&(peer, v)),
        None => log.range((peer, i64::MIN)..=(peer, i64::MAX)).next().is_some(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Know(usize, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
    Next(Box<Formula>),
    /// Strong until.
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn parse(src: &str, decls: &Declarations) -> Result<Formula, ParseError> {
        Parser::new(src, decls)?.parse_all()
    }

    pub fn truth() -> Formula {
        Formula::Atom(Atom::True)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn know(agent: usize, f: Formula) -> Formula {
        Formula::Know(agent, Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) => vec![],
            Formula::Not(a) | Formula::Know(_, a) | Formula::Always(a) | Formula::Eventually(a) | Formula::Next(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => vec![a, b],
        }
    }

    pub fn any_node(&self, pred: &dyn Fn(&Formula) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any_node(pred))
    }

    pub fn has_know(&self) -> bool {
        self.any_node(&|f| matches!(f, Formula::Know(..)))
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Formula::Always(_) | Formula::Eventually(_) | Formula::Next(_) | Formula::Until(..))
    }

    pub fn has_temporal(&self) -> bool {
        self.any_node(&|f| f.is_temporal())
    }

    /// Know-rooted subformulas not nested under another Know, left to right.
    pub fn outermost_knows(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::Know(..) = f {
                out.push(f);
            } else {
                for c in f.children() {
                    walk(c, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Every atom in the formula, including those under Know.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
            if let Formula::Atom(a) = f {
                out.push(a);
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Atoms not under any Know.
    pub fn bare_atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
            match f {
                Formula::Atom(a) => out.push(a),
                Formula::Know(..) => {}
                _ => f.children().into_iter().for_each(|c| walk(c, out)),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Replaces every outermost Know node by a constant.
    pub fn with_knows_fixed(&self, value: bool) -> Formula {
        match self {
            Formula::Know(..) => Formula::Atom(if value { Atom::True } else { Atom::False }),
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::Not(a) => Formula::not(a.with_knows_fixed(value)),
            Formula::And(a, b) => Formula::and(a.with_knows_fixed(value), b.with_knows_fixed(value)),
            Formula::Or(a, b) => Formula::or(a.with_knows_fixed(value), b.with_knows_fixed(value)),
            Formula::Implies(a, b) => Formula::implies(a.with_knows_fixed(value), b.with_knows_fixed(value)),
            Formula::Always(a) => Formula::always(a.with_knows_fixed(value)),
            Formula::Eventually(a) => Formula::eventually(a.with_knows_fixed(value)),
            Formula::Next(a) => Formula::next(a.with_knows_fixed(value)),
            Formula::Until(a, b) => Formula::until(a.with_knows_fixed(value), b.with_knows_fixed(value)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Until(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            _ => 4,
        }
    }

    fn fmt_child(&self, child: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::True => write!(f, "true"),
            Atom::False => write!(f, "false"),
            Atom::Var { name, cmp, value, .. } => write!(f, "{name}{}{value}", cmp.symbol()),
            Atom::Clock { cmp, value } => write!(f, "clock{}{value}", cmp.symbol()),
            Atom::Changes { name, cmp, value, .. } => write!(f, "changes({name}){}{value}", cmp.symbol()),
            Atom::Sent { from, to, payload } => match payload {
                Some(v) => write!(f, "sent({},{},{v})", from + 1, to + 1),
                None => write!(f, "sent({},{})", from + 1, to + 1),
            },
            Atom::Received { agent, from, payload } => match payload {
                Some(v) => write!(f, "received({},{},{v})", agent + 1, from + 1),
                None => write!(f, "received({},{})", agent + 1, from + 1),
            },
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => {
                write!(f, "!")?;
                self.fmt_child(a, 4, f)
            }
            Formula::Know(i, a) => {
                write!(f, "K[{}] ", i + 1)?;
                self.fmt_child(a, 4, f)
            }
            Formula::Always(a) => {
                write!(f, "G ")?;
                self.fmt_child(a, 4, f)
            }
            Formula::Eventually(a) => {
                write!(f, "F ")?;
                self.fmt_child(a, 4, f)
            }
            Formula::Next(a) => {
                write!(f, "X ")?;
                self.fmt_child(a, 4, f)
            }
            Formula::And(a, b) => {
                self.fmt_child(a, 3, f)?;
                write!(f, " & ")?;
                self.fmt_child(b, 4, f)
            }
            Formula::Or(a, b) => {
                self.fmt_child(a, 2, f)?;
                write!(f, " | ")?;
                self.fmt_child(b, 3, f)
            }
            Formula::Until(a, b) => {
                self.fmt_child(a, 2, f)?;
                write!(f, " U ")?;
                self.fmt_child(b, 1, f)
            }
            Formula::Implies(a, b) => {
                self.fmt_child(a, 1, f)?;
                write!(f, " -> ")?;
                self.fmt_child(b, 0, f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Cmp(Cmp),
    Bang,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let err = |msg: &str, col: usize| ParseError { message: msg.to_string(), column: col + 1, source_text: src.to_string() };
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            '[' => out.push((Tok::LBracket, start)),
            ']' => out.push((Tok::RBracket, start)),
            ',' => out.push((Tok::Comma, start)),
            '&' => out.push((Tok::Amp, start)),
            '|' => out.push((Tok::Bar, start)),
            '=' => out.push((Tok::Cmp(Cmp::Eq), start)),
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                out.push((Tok::Cmp(Cmp::Ne), start));
            }
            '!' => out.push((Tok::Bang, start)),
            '<' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                out.push((Tok::Cmp(Cmp::Le), start));
            }
            '<' => out.push((Tok::Cmp(Cmp::Lt), start)),
            '>' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                out.push((Tok::Cmp(Cmp::Ge), start));
            }
            '>' => out.push((Tok::Cmp(Cmp::Gt), start)),
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                out.push((Tok::Arrow, start));
            }
            '-' | '0'..='9' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let v = text.parse::<i64>().map_err(|_| err("expected integer", start))?;
                out.push((Tok::Int(v), start));
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((Tok::Ident(chars[i..j].iter().collect()), start));
                i = j;
                continue;
            }
            other => return Err(err(&format!("unexpected character `{other}`"), start)),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    decls: &'a Declarations,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, decls: &'a Declarations) -> Result<Self, ParseError> {
        Ok(Parser { src, toks: tokenize(src)?, pos: 0, decls })
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let column = self.toks.get(self.pos).map(|(_, c)| c + 1).unwrap_or(self.src.chars().count() + 1);
        ParseError { message: msg.into(), column, source_text: self.src.to_string() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn parse_all(mut self) -> Result<Formula, ParseError> {
        let f = self.implication()?;
        if self.pos != self.toks.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(f)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.until()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.is_ident("U") {
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn agent(&mut self) -> Result<usize, ParseError> {
        match self.bump() {
            Some(Tok::Int(i)) if i >= 1 && (i as usize) <= self.decls.agent_count() => Ok(i as usize - 1),
            Some(Tok::Int(i)) => {
                self.pos -= 1;
                Err(self.err(format!("unknown agent {i}")))
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected agent number"))
            }
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.err("expected integer"))
            }
        }
    }

    fn cmp(&mut self) -> Result<Cmp, ParseError> {
        match self.bump() {
            Some(Tok::Cmp(c)) => Ok(c),
            _ => {
                self.pos -= 1;
                Err(self.err("expected comparison"))
            }
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "K" => {
                    self.pos += 1;
                    self.expect(Tok::LBracket, "`[` after K")?;
                    let agent = self.agent()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Ok(Formula::know(agent, self.unary()?))
                }
                "G" => {
                    self.pos += 1;
                    Ok(Formula::always(self.unary()?))
                }
                "F" => {
                    self.pos += 1;
                    Ok(Formula::eventually(self.unary()?))
                }
                "X" => {
                    self.pos += 1;
                    Ok(Formula::next(self.unary()?))
                }
                _ => self.atom(),
            },
            _ => Err(self.err("expected formula")),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let Some(Tok::Ident(name)) = self.bump() else {
            self.pos -= 1;
            return Err(self.err("expected atom"));
        };
        let atom = match name.as_str() {
            "true" => Atom::True,
            "false" => Atom::False,
            "clock" => {
                if self.decls.clock.is_none() {
                    self.pos -= 1;
                    return Err(self.err("clock is not enabled in this scenario"));
                }
                let cmp = self.cmp()?;
                Atom::Clock { cmp, value: self.int()? }
            }
            "changes" => {
                self.expect(Tok::LParen, "`(`")?;
                let Some(Tok::Ident(var_name)) = self.bump() else {
                    self.pos -= 1;
                    return Err(self.err("expected variable name"));
                };
                let Some(var) = self.decls.var_id(&var_name) else {
                    self.pos -= 1;
                    return Err(self.err(format!("unknown variable `{var_name}`")));
                };
                if !self.decls.var(var).tracked {
                    self.pos -= 1;
                    return Err(self.err(format!("variable `{var_name}` is not tracked")));
                }
                self.expect(Tok::RParen, "`)`")?;
                let cmp = self.cmp()?;
                Atom::Changes { var, name: var_name, cmp, value: self.int()? }
            }
            "sent" | "received" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.agent()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.agent()?;
                let payload = if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    Some(self.int()?)
                } else {
                    None
                };
                self.expect(Tok::RParen, "`)`")?;
                if name == "sent" {
                    Atom::Sent { from: a, to: b, payload }
                } else {
                    Atom::Received { agent: a, from: b, payload }
                }
            }
            "U" | "K" | "G" | "F" | "X" => {
                self.pos -= 1;
                return Err(self.err(format!("unexpected `{name}`")));
            }
            _ => {
                let Some(var) = self.decls.var_id(&name) else {
                    self.pos -= 1;
                    return Err(self.err(format!("unknown variable `{name}`")));
                };
                let cmp = self.cmp()?;
                Atom::Var { var, name, cmp, value: self.int()? }
            }
        };
        Ok(Formula::Atom(atom))
    }
}
