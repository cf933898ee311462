//! Prefix syntax:
//!
//! ```text
//! formula  := top | bot | eq(t, t) | and(f, ..) | or(f, ..)
//!           | exists([y:A, ..], f) | R | R(t, ..)
//! term     := x | c | f(t, ..)
//! context  := [x:A, ..]
//! sequent  := [x:A, ..] f |- f
//! arrow    := [x:A, .. ; y:B, ..] f
//! ```

use thiserror::Error;

use super::{Formula, FormulaInContext, LogicError, Sequent, Signature, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column within the parsed text.
    pub column: usize,
    pub message: String,
}

pub(crate) fn is_ident_char(c: char) -> bool {
    !c.is_whitespace() && !"()[],;:|#".contains(c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Colon,
    Turnstile,
    Ident(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(t) = single {
            out.push((col, t));
            i += 1;
        } else if c == '|' {
            if chars.get(i + 1) == Some(&'-') {
                out.push((col, Tok::Turnstile));
                i += 2;
            } else {
                return Err(ParseError { column: col, message: "expected `|-`".into() });
            }
        } else if c == '#' {
            return Err(ParseError { column: col, message: "unexpected `#`".into() });
        } else {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().collect())));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    sig: &'a Signature,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
    /// Variable names in scope, by level.
    scope: Vec<(String, Sort)>,
}

impl<'a> Parser<'a> {
    fn new(sig: &'a Signature, text: &str) -> Result<Self, ParseError> {
        Ok(Parser { sig, toks: tokenize(text)?, pos: 0, end_col: text.chars().count() + 1, scope: Vec::new() })
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end_col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.col(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            self.err("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    /// `x:A, y:B` up to (not including) a closing token.
    fn binders(&mut self, stop: &[Tok]) -> Result<Vec<(String, Sort)>, ParseError> {
        let mut out = Vec::new();
        if self.peek().map(|t| stop.contains(t)).unwrap_or(false) {
            return Ok(out);
        }
        loop {
            let col = self.col();
            let name = self.ident()?;
            self.expect(Tok::Colon, "`:`")?;
            let sort_name = self.ident()?;
            let sort = match self.sig.sort_by_name(&sort_name) {
                Some(s) => s,
                None => return Err(ParseError { column: col, message: format!("unknown sort `{sort_name}`") }),
            };
            if out.iter().any(|(n, _): &(String, Sort)| *n == name) {
                return Err(ParseError { column: col, message: format!("variable `{name}` bound twice") });
            }
            out.push((name, sort));
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn args<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, ParseError>) -> Result<Vec<T>, ParseError> {
        let mut out = Vec::new();
        if self.eat(&Tok::Close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(&Tok::Close) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `)`")?;
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let col = self.col();
        let name = self.ident()?;
        if let Some(level) = self.scope.iter().rposition(|(n, _)| *n == name) {
            if self.peek() == Some(&Tok::Open) {
                return self.err(format!("variable `{name}` applied to arguments"));
            }
            return Ok(Term::Var(level));
        }
        let Some(f) = self.sig.function_by_name(&name) else {
            return Err(ParseError { column: col, message: format!("unknown variable or function `{name}`") });
        };
        let args = if self.eat(&Tok::Open) { self.args(|p| p.term())? } else { Vec::new() };
        Ok(Term::App(f, args))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let col = self.col();
        let name = self.ident()?;
        match name.as_str() {
            "top" => Ok(Formula::Top),
            "bot" => Ok(Formula::Bottom),
            "eq" => {
                self.expect(Tok::Open, "`(`")?;
                let a = self.term()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.term()?;
                self.expect(Tok::Close, "`)`")?;
                Ok(Formula::Eq(a, b))
            }
            "and" | "or" => {
                self.expect(Tok::Open, "`(`")?;
                let parts = self.args(|p| p.formula())?;
                Ok(if name == "and" { Formula::and(parts) } else { Formula::or(parts) })
            }
            "exists" => {
                self.expect(Tok::Open, "`(`")?;
                self.expect(Tok::LBrack, "`[`")?;
                let bs = self.binders(&[Tok::RBrack])?;
                self.expect(Tok::RBrack, "`]`")?;
                self.expect(Tok::Comma, "`,`")?;
                let n = bs.len();
                let sorts: Vec<Sort> = bs.iter().map(|b| b.1).collect();
                self.scope.extend(bs);
                let body = self.formula();
                self.scope.truncate(self.scope.len() - n);
                let body = body?;
                self.expect(Tok::Close, "`)`")?;
                Ok(Formula::exists_many(&sorts, body))
            }
            _ => {
                let Some(r) = self.sig.relation_by_name(&name) else {
                    return Err(ParseError { column: col, message: format!("unknown relation `{name}`") });
                };
                let args = if self.eat(&Tok::Open) { self.args(|p| p.term())? } else { Vec::new() };
                Ok(Formula::Rel(r, args))
            }
        }
    }

    fn context(&mut self) -> Result<Vec<Sort>, ParseError> {
        self.expect(Tok::LBrack, "`[`")?;
        let bs = self.binders(&[Tok::RBrack])?;
        self.expect(Tok::RBrack, "`]`")?;
        let sorts = bs.iter().map(|b| b.1).collect();
        self.scope = bs;
        Ok(sorts)
    }
}

fn typed<T>(r: Result<T, ParseError>, check: impl FnOnce(&T) -> Result<(), LogicError>) -> Result<T, LogicError> {
    let v = r?;
    check(&v)?;
    Ok(v)
}

/// A formula whose free variables are the given named, sorted variables.
pub fn parse_formula(sig: &Signature, vars: &[(String, Sort)], text: &str) -> Result<Formula, LogicError> {
    let mut p = Parser::new(sig, text)?;
    p.scope = vars.to_vec();
    let r = p.formula().and_then(|f| p.finish().map(|_| f));
    let ctx: Vec<Sort> = vars.iter().map(|v| v.1).collect();
    typed(r, |f| super::typecheck_formula(sig, &mut ctx.clone(), f)).map(|f| f.normalize())
}

pub fn parse_formula_in_context(sig: &Signature, text: &str) -> Result<FormulaInContext, LogicError> {
    let mut p = Parser::new(sig, text)?;
    let r = p.context().and_then(|ctx| {
        let f = p.formula()?;
        p.finish()?;
        Ok(FormulaInContext::new(ctx, f))
    });
    typed(r, |f| f.typecheck(sig))
}

pub fn parse_sequent(sig: &Signature, text: &str) -> Result<Sequent, LogicError> {
    let mut p = Parser::new(sig, text)?;
    let r = p.context().and_then(|ctx| {
        let a = p.formula()?;
        p.expect(Tok::Turnstile, "`|-`")?;
        let b = p.formula()?;
        p.finish()?;
        Ok(Sequent::new(ctx, a, b))
    });
    typed(r, |s| s.typecheck(sig))
}

/// `[x:A ; y:B] θ`: returns the two contexts and `θ` over their
/// concatenation.
pub fn parse_arrow_formula(sig: &Signature, text: &str) -> Result<(Vec<Sort>, Vec<Sort>, Formula), LogicError> {
    let mut p = Parser::new(sig, text)?;
    let r = (|| {
        p.expect(Tok::LBrack, "`[`")?;
        let dom = p.binders(&[Tok::Semi])?;
        p.expect(Tok::Semi, "`;`")?;
        let cod = p.binders(&[Tok::RBrack])?;
        p.expect(Tok::RBrack, "`]`")?;
        if let Some((n, _)) = dom.iter().find(|(n, _)| cod.iter().any(|(m, _)| m == n)) {
            return p.err(format!("variable `{n}` appears on both sides"));
        }
        let ds: Vec<Sort> = dom.iter().map(|b| b.1).collect();
        let cs: Vec<Sort> = cod.iter().map(|b| b.1).collect();
        p.scope = dom.into_iter().chain(cod).collect();
        let f = p.formula()?;
        p.finish()?;
        Ok((ds, cs, f.normalize()))
    })();
    typed(r, |(d, c, f)| {
        let mut ctx: Vec<Sort> = d.iter().chain(c).copied().collect();
        super::typecheck_formula(sig, &mut ctx, f)
    })
}

/// Variable prefix that cannot be mistaken for a symbol of `sig`.
fn var_prefix(sig: &Signature) -> String {
    let mut prefix = "x".to_string();
    let clashes = |p: &str| {
        sig.functions.iter().map(|f| &f.name).any(|n| {
            n.strip_prefix(p).map(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())).unwrap_or(false)
        })
    };
    while clashes(&prefix) {
        prefix.push('_');
    }
    prefix
}

fn show_term(sig: &Signature, prefix: &str, t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => {
            out.push_str(prefix);
            out.push_str(&v.to_string());
        }
        Term::App(f, args) => {
            out.push_str(&sig.functions[*f].name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    show_term(sig, prefix, a, out);
                }
                out.push(')');
            }
        }
    }
}

fn show_formula(sig: &Signature, prefix: &str, depth: usize, f: &Formula, out: &mut String) {
    match f {
        Formula::Top => out.push_str("top"),
        Formula::Bottom => out.push_str("bot"),
        Formula::Eq(a, b) => {
            out.push_str("eq(");
            show_term(sig, prefix, a, out);
            out.push_str(", ");
            show_term(sig, prefix, b, out);
            out.push(')');
        }
        Formula::Rel(r, args) => {
            out.push_str(&sig.relations[*r].name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    show_term(sig, prefix, a, out);
                }
                out.push(')');
            }
        }
        Formula::And(v) | Formula::Or(v) => {
            out.push_str(if matches!(f, Formula::And(_)) { "and(" } else { "or(" });
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                show_formula(sig, prefix, depth, g, out);
            }
            out.push(')');
        }
        Formula::Exists(..) => {
            let mut sorts = Vec::new();
            let mut body = f;
            while let Formula::Exists(s, b) = body {
                sorts.push(*s);
                body = b;
            }
            out.push_str("exists([");
            for (i, s) in sorts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{prefix}{}:{}", depth + i, sig.sorts[*s]));
            }
            out.push_str("], ");
            show_formula(sig, prefix, depth + sorts.len(), body, out);
            out.push(')');
        }
    }
}

fn show_context(sig: &Signature, prefix: &str, start: usize, ctx: &[Sort]) -> String {
    ctx.iter()
        .enumerate()
        .map(|(i, s)| format!("{prefix}{}:{}", start + i, sig.sorts[*s]))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn show_in_context(sig: &Signature, ctx: &[Sort], body: &Formula) -> String {
    let prefix = var_prefix(sig);
    let mut out = format!("[{}] ", show_context(sig, &prefix, 0, ctx));
    show_formula(sig, &prefix, ctx.len(), body, &mut out);
    out
}

pub(crate) fn show_sequent(sig: &Signature, s: &Sequent) -> String {
    let prefix = var_prefix(sig);
    let mut out = format!("[{}] ", show_context(sig, &prefix, 0, &s.context));
    show_formula(sig, &prefix, s.context.len(), &s.premise, &mut out);
    out.push_str(" |- ");
    show_formula(sig, &prefix, s.context.len(), &s.conclusion, &mut out);
    out
}

/// Display of an arrow formula in the syntax read by `parse_arrow_formula`.
pub fn show_arrow_formula(sig: &Signature, dom: &[Sort], cod: &[Sort], theta: &Formula) -> String {
    let prefix = var_prefix(sig);
    let mut out = format!(
        "[{} ; {}] ",
        show_context(sig, &prefix, 0, dom),
        show_context(sig, &prefix, dom.len(), cod)
    );
    show_formula(sig, &prefix, dom.len() + cod.len(), theta, &mut out);
    out
}
