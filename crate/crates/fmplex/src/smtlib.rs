//! Reading and writing the SMT-LIB 2 fragment the solver handles.
//!
//! A script declares `Real` constants, asserts a conjunction of linear atoms
//! over them, and optionally requests `(check-sat)`, `(get-model)` and
//! `(get-unsat-core)`. Atoms may carry `(! … :named …)` labels, which become
//! the labels reported in unsat cores. Everything outside that fragment —
//! other sorts, boolean structure beyond a top-level `and`, nonlinear terms —
//! is rejected with a positioned [`ParseError`] rather than silently dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::outcome::SolveOutcome;
use crate::rational::{DeltaRational, Rational};
use crate::system::{Assignment, Constraint, LinearSystem, Relation};

/// A 1-based line/column position in the input text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Input that is not well-formed for this fragment.
    Syntax(String),
    /// Well-formed SMT-LIB using a construct the solver does not handle.
    Unsupported(String),
    /// A symbol used before being declared.
    UnknownSymbol(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "{}: {}", self.pos, msg),
            ParseErrorKind::Unsupported(what) => {
                write!(f, "{}: {} is not supported", self.pos, what)
            }
            ParseErrorKind::UnknownSymbol(name) => {
                write!(f, "{}: unknown symbol `{}`", self.pos, name)
            }
        }
    }
}

impl std::error::Error for ParseError {}

fn syntax<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        kind: ParseErrorKind::Syntax(msg.into()),
    })
}

fn unsupported<T>(pos: Pos, what: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        kind: ParseErrorKind::Unsupported(what.into()),
    })
}

/// One asserted atom in its source orientation: `coeffs · x  rel  rhs`.
///
/// Coefficients are indexed by declaration order of the variables; nothing is
/// normalized here, so printing a parsed problem reproduces the input shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceAtom {
    pub rel: Relation,
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    /// Label from a `(! … :named …)` annotation, if any.
    pub name: Option<String>,
}

/// A parsed script: declared variables, asserted atoms, requested outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Problem {
    pub variables: Vec<String>,
    pub atoms: Vec<SourceAtom>,
    pub check_sat: bool,
    pub get_model: bool,
    pub get_unsat_core: bool,
}

impl Problem {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Core label for atom `i`: its `:named` label, or `a<i>` as a fallback.
    pub fn label(&self, i: usize) -> String {
        match self.atoms.get(i).and_then(|a| a.name.clone()) {
            Some(name) => name,
            None => format!("a{}", i),
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Token {
    LParen,
    RParen,
    Symbol(String),
    Keyword(String),
    Number(Rational),
}

fn symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

fn tokenize(input: &str) -> Result<Vec<(Token, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            _ if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                out.push((Token::LParen, pos));
            }
            ')' => {
                chars.next();
                col += 1;
                out.push((Token::RParen, pos));
            }
            _ if c == ':' || symbol_char(c) => {
                let keyword = c == ':';
                if keyword {
                    chars.next();
                    col += 1;
                }
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !symbol_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                if word.is_empty() {
                    return syntax(pos, "empty keyword");
                }
                let token = if keyword {
                    Token::Keyword(word)
                } else if looks_numeric(&word) {
                    Token::Number(parse_number(&word, pos)?)
                } else {
                    Token::Symbol(word)
                };
                out.push((token, pos));
            }
            _ => return syntax(pos, format!("unexpected character `{}`", c)),
        }
    }
    Ok(out)
}

fn looks_numeric(word: &str) -> bool {
    let digits = word.strip_prefix('-').unwrap_or(word);
    digits.starts_with(|c: char| c.is_ascii_digit())
}

/// Parses `123`, `-7`, or a decimal like `2.75` into an exact rational.
fn parse_number(word: &str, pos: Pos) -> Result<Rational, ParseError> {
    let malformed = || ParseError {
        pos,
        kind: ParseErrorKind::Syntax(format!("malformed numeral `{}`", word)),
    };
    let (negative, digits) = match word.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, word),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || (digits.contains('.') && !all_digits(frac_part)) {
        return Err(malformed());
    }
    let mut numer =
        BigInt::from_str(&format!("{}{}", int_part, frac_part)).map_err(|_| malformed())?;
    if negative {
        numer = -numer;
    }
    let denom = BigInt::from(10).pow(frac_part.len() as u32);
    Ok(Rational::new(numer, denom))
}

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Sym(String, Pos),
    Kw(String, Pos),
    Num(Rational, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::Kw(_, p) | Sexp::Num(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn head(&self) -> Option<(&str, Pos)> {
        match self {
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Sym(s, p)) => Some((s.as_str(), *p)),
                _ => None,
            },
            _ => None,
        }
    }
}

fn read_sexps(tokens: Vec<(Token, Pos)>) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut toplevel: Vec<Sexp> = Vec::new();
    for (token, pos) in tokens {
        let sexp = match token {
            Token::LParen => {
                stack.push((pos, Vec::new()));
                continue;
            }
            Token::RParen => {
                let Some((open, items)) = stack.pop() else {
                    return syntax(pos, "unmatched `)`");
                };
                Sexp::List(items, open)
            }
            Token::Symbol(s) => Sexp::Sym(s, pos),
            Token::Keyword(s) => Sexp::Kw(s, pos),
            Token::Number(v) => Sexp::Num(v, pos),
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(sexp),
            None => toplevel.push(sexp),
        }
    }
    if let Some((open, _)) = stack.last() {
        return syntax(*open, "unclosed `(`");
    }
    Ok(toplevel)
}

// ---------------------------------------------------------------------------
// Reader: s-expressions to a Problem
// ---------------------------------------------------------------------------

/// A linear term under construction: `Σ coeffs[j]·x_j + constant`, with zero
/// coefficients pruned so "is constant" is just "coeffs is empty".
struct Affine {
    coeffs: BTreeMap<usize, Rational>,
    constant: Rational,
}

impl Affine {
    fn constant(value: Rational) -> Self {
        Affine {
            coeffs: BTreeMap::new(),
            constant: value,
        }
    }

    fn var(j: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(j, Rational::one());
        Affine {
            coeffs,
            constant: Rational::zero(),
        }
    }

    fn add_scaled(&mut self, other: &Affine, c: &Rational) {
        for (j, a) in &other.coeffs {
            let entry = self.coeffs.entry(*j).or_insert_with(Rational::zero);
            *entry += a * c;
            if entry.is_zero() {
                self.coeffs.remove(j);
            }
        }
        self.constant += &other.constant * c;
    }

    fn scaled(&self, c: &Rational) -> Affine {
        if c.is_zero() {
            return Affine::constant(Rational::zero());
        }
        Affine {
            coeffs: self.coeffs.iter().map(|(j, a)| (*j, a * c)).collect(),
            constant: &self.constant * c,
        }
    }

    fn as_constant(&self) -> Option<&Rational> {
        if self.coeffs.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }
}

struct PendingAtom {
    rel: Relation,
    coeffs: BTreeMap<usize, Rational>,
    rhs: Rational,
    name: Option<String>,
}

#[derive(Default)]
struct Reader {
    variables: Vec<String>,
    index: BTreeMap<String, usize>,
    atoms: Vec<PendingAtom>,
    check_sat: bool,
    get_model: bool,
    get_unsat_core: bool,
    done: bool,
}

impl Reader {
    fn finish(self) -> Problem {
        let width = self.variables.len();
        let atoms = self
            .atoms
            .into_iter()
            .map(|p| {
                let mut coeffs = vec![Rational::zero(); width];
                for (j, c) in p.coeffs {
                    coeffs[j] = c;
                }
                SourceAtom {
                    rel: p.rel,
                    coeffs,
                    rhs: p.rhs,
                    name: p.name,
                }
            })
            .collect();
        Problem {
            variables: self.variables,
            atoms,
            check_sat: self.check_sat,
            get_model: self.get_model,
            get_unsat_core: self.get_unsat_core,
        }
    }

    fn command(&mut self, sexp: &Sexp) -> Result<(), ParseError> {
        let Sexp::List(items, pos) = sexp else {
            return syntax(sexp.pos(), "expected a command");
        };
        let Some((head, head_pos)) = sexp.head() else {
            return syntax(*pos, "expected a command name");
        };
        match head {
            "set-logic" => {
                let [_, logic] = items.as_slice() else {
                    return syntax(*pos, "`set-logic` takes one argument");
                };
                match logic {
                    Sexp::Sym(name, _) if name == "QF_LRA" => Ok(()),
                    Sexp::Sym(name, p) => unsupported(*p, format!("logic {}", name)),
                    _ => syntax(logic.pos(), "expected a logic name"),
                }
            }
            // Metadata commands are accepted and have no effect.
            "set-info" | "set-option" => Ok(()),
            "declare-fun" => {
                let [_, name, args, sort] = items.as_slice() else {
                    return syntax(*pos, "expected `(declare-fun name () Real)`");
                };
                match args {
                    Sexp::List(params, _) if params.is_empty() => {}
                    Sexp::List(_, p) => {
                        return unsupported(*p, "uninterpreted functions with arguments")
                    }
                    _ => return syntax(args.pos(), "expected an argument sort list"),
                }
                self.declare(name, sort)
            }
            "declare-const" => {
                let [_, name, sort] = items.as_slice() else {
                    return syntax(*pos, "expected `(declare-const name Real)`");
                };
                self.declare(name, sort)
            }
            "assert" => {
                let [_, body] = items.as_slice() else {
                    return syntax(*pos, "`assert` takes one argument");
                };
                self.assertion(body)
            }
            "check-sat" => {
                self.check_sat = true;
                Ok(())
            }
            "get-model" => {
                self.get_model = true;
                Ok(())
            }
            "get-unsat-core" => {
                self.get_unsat_core = true;
                Ok(())
            }
            "exit" => {
                self.done = true;
                Ok(())
            }
            other => unsupported(head_pos, format!("command `{}`", other)),
        }
    }

    fn declare(&mut self, name: &Sexp, sort: &Sexp) -> Result<(), ParseError> {
        let Sexp::Sym(name, name_pos) = name else {
            return syntax(name.pos(), "expected a variable name");
        };
        match sort {
            Sexp::Sym(s, _) if s == "Real" => {}
            Sexp::Sym(s, p) => return unsupported(*p, format!("sort {}", s)),
            _ => return syntax(sort.pos(), "expected a sort"),
        }
        if self.index.contains_key(name) {
            return syntax(*name_pos, format!("`{}` is already declared", name));
        }
        self.index.insert(name.clone(), self.variables.len());
        self.variables.push(name.clone());
        Ok(())
    }

    /// An assertion body: a single atom, or an `and` of assertion bodies,
    /// which is flattened into one atom per conjunct.
    fn assertion(&mut self, body: &Sexp) -> Result<(), ParseError> {
        if let Some(("and", _)) = body.head() {
            let Sexp::List(items, pos) = body else {
                unreachable!()
            };
            if items.len() < 2 {
                return syntax(*pos, "`and` takes at least one argument");
            }
            for conjunct in &items[1..] {
                self.assertion(conjunct)?;
            }
            return Ok(());
        }
        let atom = self.atom(body, None)?;
        self.atoms.push(atom);
        Ok(())
    }

    fn atom(&mut self, sexp: &Sexp, name: Option<String>) -> Result<PendingAtom, ParseError> {
        if let Sexp::Sym(s, pos) = sexp {
            if s == "true" || s == "false" {
                return unsupported(*pos, format!("the boolean constant `{}`", s));
            }
        }
        let Sexp::List(items, pos) = sexp else {
            return syntax(sexp.pos(), "expected an atom `(rel term term)`");
        };
        let Some((head, head_pos)) = sexp.head() else {
            return syntax(*pos, "expected an atom `(rel term term)`");
        };
        match head {
            "!" => {
                let [_, inner, key, value] = items.as_slice() else {
                    return syntax(*pos, "expected `(! atom :named label)`");
                };
                match key {
                    Sexp::Kw(k, _) if k == "named" => {}
                    Sexp::Kw(k, p) => return unsupported(*p, format!("the attribute :{}", k)),
                    _ => return syntax(key.pos(), "expected `:named`"),
                }
                let Sexp::Sym(label, _) = value else {
                    return syntax(value.pos(), "expected a label symbol");
                };
                self.atom(inner, Some(label.clone()))
            }
            "<=" | "<" | ">=" | ">" | "=" => {
                let [_, lhs, rhs] = items.as_slice() else {
                    return syntax(*pos, format!("`{}` takes exactly two arguments", head));
                };
                let lhs = self.term(lhs)?;
                let rhs = self.term(rhs)?;
                let rel = match head {
                    "<=" => Relation::Le,
                    "<" => Relation::Lt,
                    ">=" => Relation::Ge,
                    ">" => Relation::Gt,
                    _ => Relation::Eq,
                };
                // Move variables left and constants right.
                let mut lhs = lhs;
                lhs.add_scaled(&rhs, &-Rational::one());
                let constant = -std::mem::replace(&mut lhs.constant, Rational::zero());
                Ok(PendingAtom {
                    rel,
                    coeffs: lhs.coeffs,
                    rhs: constant,
                    name,
                })
            }
            "and" => syntax(*pos, "`and` is only allowed at the top of an assertion"),
            "or" | "not" | "xor" | "=>" | "ite" | "distinct" | "let" | "forall" | "exists" => {
                unsupported(head_pos, format!("`{}`", head))
            }
            "+" | "-" | "*" | "/" => syntax(*pos, "expected an atom, found an arithmetic term"),
            other => Err(ParseError {
                pos: head_pos,
                kind: ParseErrorKind::UnknownSymbol(other.to_string()),
            }),
        }
    }

    fn term(&mut self, sexp: &Sexp) -> Result<Affine, ParseError> {
        match sexp {
            Sexp::Num(v, _) => Ok(Affine::constant(v.clone())),
            Sexp::Sym(s, pos) => {
                if let Some(&j) = self.index.get(s) {
                    Ok(Affine::var(j))
                } else if s == "true" || s == "false" {
                    unsupported(*pos, format!("the boolean constant `{}`", s))
                } else {
                    Err(ParseError {
                        pos: *pos,
                        kind: ParseErrorKind::UnknownSymbol(s.clone()),
                    })
                }
            }
            Sexp::Kw(k, pos) => syntax(*pos, format!("unexpected keyword :{}", k)),
            Sexp::List(items, pos) => {
                let Some((head, head_pos)) = sexp.head() else {
                    return syntax(*pos, "expected a term");
                };
                let args = &items[1..];
                match head {
                    "+" => {
                        if args.is_empty() {
                            return syntax(*pos, "`+` takes at least one argument");
                        }
                        let mut sum = Affine::constant(Rational::zero());
                        for arg in args {
                            let term = self.term(arg)?;
                            sum.add_scaled(&term, &Rational::one());
                        }
                        Ok(sum)
                    }
                    "-" => match args {
                        [] => syntax(*pos, "`-` takes at least one argument"),
                        [only] => Ok(self.term(only)?.scaled(&-Rational::one())),
                        [first, rest @ ..] => {
                            let mut diff = self.term(first)?;
                            for arg in rest {
                                let term = self.term(arg)?;
                                diff.add_scaled(&term, &-Rational::one());
                            }
                            Ok(diff)
                        }
                    },
                    "*" => {
                        if args.len() < 2 {
                            return syntax(*pos, "`*` takes at least two arguments");
                        }
                        // At most one factor may mention a variable.
                        let mut scale = Rational::one();
                        let mut linear: Option<Affine> = None;
                        for arg in args {
                            let term = self.term(arg)?;
                            match term.as_constant() {
                                Some(c) => scale *= c,
                                None if linear.is_none() => linear = Some(term),
                                None => return unsupported(*pos, "nonlinear multiplication"),
                            }
                        }
                        Ok(match linear {
                            Some(term) => term.scaled(&scale),
                            None => Affine::constant(scale),
                        })
                    }
                    "/" => {
                        let [num, den] = args else {
                            return syntax(*pos, "`/` takes exactly two arguments");
                        };
                        let num = self.term(num)?;
                        let den_term = self.term(den)?;
                        let Some(d) = den_term.as_constant() else {
                            return unsupported(den.pos(), "division by a non-constant");
                        };
                        if d.is_zero() {
                            return syntax(den.pos(), "division by zero");
                        }
                        Ok(num.scaled(&d.recip()))
                    }
                    "or" | "not" | "xor" | "=>" | "ite" | "distinct" | "let" | "forall"
                    | "exists" | "and" => unsupported(head_pos, format!("`{}`", head)),
                    "<=" | "<" | ">=" | ">" | "=" => syntax(*pos, "expected a term, found an atom"),
                    other => Err(ParseError {
                        pos: head_pos,
                        kind: ParseErrorKind::UnknownSymbol(other.to_string()),
                    }),
                }
            }
        }
    }
}

/// Parses an SMT-LIB script into a [`Problem`].
pub fn parse(input: &str) -> Result<Problem, ParseError> {
    let sexps = read_sexps(tokenize(input)?)?;
    let mut reader = Reader::default();
    for sexp in &sexps {
        reader.command(sexp)?;
        if reader.done {
            break;
        }
    }
    Ok(reader.finish())
}

// ---------------------------------------------------------------------------
// Witness readers
// ---------------------------------------------------------------------------

/// Evaluates an s-expression that must denote a rational constant: a literal,
/// `(- t)`, or `(/ t t)` — the shapes [`format_rational`] emits.
fn const_term(sexp: &Sexp) -> Option<Rational> {
    match sexp {
        Sexp::Num(v, _) => Some(v.clone()),
        Sexp::List(items, _) => match items.as_slice() {
            [Sexp::Sym(op, _), a] if op == "-" => Some(-const_term(a)?),
            [Sexp::Sym(op, _), a, b] if op == "-" => Some(const_term(a)? - const_term(b)?),
            [Sexp::Sym(op, _), a, b] if op == "/" => {
                let d = const_term(b)?;
                if d.is_zero() {
                    None
                } else {
                    Some(const_term(a)? / d)
                }
            }
            _ => None,
        },
        _ => None,
    }
}

/// Parses a rational from any shape a user or this tool writes one in:
/// `5`, `-5`, `2.5`, `3/4`, `-3/4`, `(- 5)`, `(/ 3 4)`, `(- (/ 3 4))`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.starts_with('(') {
        let sexps = read_sexps(tokenize(text).ok()?).ok()?;
        let [sexp] = sexps.as_slice() else {
            return None;
        };
        return const_term(sexp);
    }
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_number(n.trim(), Pos { line: 1, col: 1 }).ok()?;
        let d = parse_number(d.trim(), Pos { line: 1, col: 1 }).ok()?;
        return if d.is_zero() { None } else { Some(n / d) };
    }
    parse_number(text, Pos { line: 1, col: 1 }).ok()
}

/// Reads a model witness: either the emitted
/// `(model (define-fun x () Real v) …)` block (an optional leading verdict
/// line is skipped), or inline `name=value` pairs separated by commas.
/// Variables the witness does not mention are taken to be 0.
pub fn parse_model(text: &str, problem: &Problem) -> Result<Assignment, String> {
    let mut model = Assignment::new();
    if let Some(start) = text.find("(model") {
        let sexps = read_sexps(tokenize(&text[start..]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let Some(Sexp::List(items, _)) = sexps.first() else {
            return Err("no (model …) block found".into());
        };
        for def in &items[1..] {
            let Sexp::List(parts, _) = def else {
                return Err("malformed (define-fun …) entry".into());
            };
            let [Sexp::Sym(head, _), Sexp::Sym(name, _), Sexp::List(args, _), Sexp::Sym(sort, _), value] =
                parts.as_slice()
            else {
                return Err("malformed (define-fun …) entry".into());
            };
            if head != "define-fun" || !args.is_empty() || sort != "Real" {
                return Err("malformed (define-fun …) entry".into());
            }
            let j = problem
                .var_index(name)
                .ok_or_else(|| format!("model defines unknown variable `{}`", name))?;
            let v = const_term(value)
                .ok_or_else(|| format!("value for `{}` is not a rational constant", name))?;
            model.set(j, DeltaRational::from_real(v));
        }
    } else {
        for pair in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let Some((name, value)) = pair.split_once('=') else {
                return Err(format!("expected `name=value`, got `{}`", pair));
            };
            let name = name.trim();
            let j = problem
                .var_index(name)
                .ok_or_else(|| format!("model assigns unknown variable `{}`", name))?;
            let v = parse_rational(value)
                .ok_or_else(|| format!("value for `{}` is not a rational constant", name))?;
            model.set(j, DeltaRational::from_real(v));
        }
    }
    for j in 0..problem.variables.len() {
        if model.get(j).is_none() {
            model.set(j, DeltaRational::zero());
        }
    }
    Ok(model)
}

/// Reads a core witness: the emitted `(core label…)` line (an optional
/// leading verdict line is skipped), or inline labels/indices separated by
/// commas or whitespace. Labels resolve through `:named` annotations first,
/// then as `a<index>` fallbacks, then as bare indices.
pub fn parse_core(
    text: &str,
    problem: &Problem,
) -> Result<std::collections::BTreeSet<usize>, String> {
    let labels: Vec<String> = if let Some(start) = text.find("(core") {
        let sexps = read_sexps(tokenize(&text[start..]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let Some(Sexp::List(items, _)) = sexps.first() else {
            return Err("no (core …) block found".into());
        };
        items[1..]
            .iter()
            .map(|s| match s {
                Sexp::Sym(name, _) => Ok(name.clone()),
                Sexp::Num(v, _) => Ok(format_rational(v)),
                _ => Err("malformed core entry".to_string()),
            })
            .collect::<Result<_, _>>()?
    } else {
        text.split(|c: char| c == ',' || c.is_whitespace())
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    };
    let mut core = std::collections::BTreeSet::new();
    for label in &labels {
        let index = problem
            .atoms
            .iter()
            .position(|a| a.name.as_deref() == Some(label.as_str()))
            .or_else(|| {
                label
                    .strip_prefix('a')
                    .and_then(|rest| rest.parse::<usize>().ok())
                    .filter(|&i| i < problem.atoms.len() && problem.atoms[i].name.is_none())
            })
            .or_else(|| {
                label
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i < problem.atoms.len())
            })
            .ok_or_else(|| format!("`{}` names no atom of the problem", label))?;
        core.insert(index);
    }
    Ok(core)
}

// ---------------------------------------------------------------------------
// Printers
// ---------------------------------------------------------------------------

/// Renders a rational as an SMT-LIB term: `5`, `(- 5)`, `(/ 1 2)`, `(- (/ 1 2))`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_negative() {
        format!("(- {})", format_rational(&-r))
    } else if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("(/ {} {})", r.numer(), r.denom())
    }
}

fn format_term(coeffs: &[Rational], variables: &[String]) -> String {
    let mut monomials: Vec<String> = Vec::new();
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        monomials.push(if c.is_one() {
            variables[j].clone()
        } else {
            format!("(* {} {})", format_rational(c), variables[j])
        });
    }
    match monomials.len() {
        0 => "0".to_string(),
        1 => monomials.pop().unwrap(),
        _ => format!("(+ {})", monomials.join(" ")),
    }
}

fn format_atom(atom: &SourceAtom, variables: &[String]) -> String {
    let rel = match atom.rel {
        Relation::Le => "<=",
        Relation::Lt => "<",
        Relation::Ge => ">=",
        Relation::Gt => ">",
        Relation::Eq => "=",
    };
    let body = format!(
        "({} {} {})",
        rel,
        format_term(&atom.coeffs, variables),
        format_rational(&atom.rhs)
    );
    match &atom.name {
        Some(name) => format!("(! {} :named {})", body, name),
        None => body,
    }
}

/// Renders a problem back into a script. Parsing the output yields the same
/// [`Problem`] value, so printing is a faithful round trip.
pub fn print_problem(problem: &Problem) -> String {
    let mut out = String::from("(set-logic QF_LRA)\n");
    for v in &problem.variables {
        out.push_str(&format!("(declare-fun {} () Real)\n", v));
    }
    for atom in &problem.atoms {
        out.push_str(&format!(
            "(assert {})\n",
            format_atom(atom, &problem.variables)
        ));
    }
    if problem.check_sat {
        out.push_str("(check-sat)\n");
    }
    if problem.get_model {
        out.push_str("(get-model)\n");
    }
    if problem.get_unsat_core {
        out.push_str("(get-unsat-core)\n");
    }
    out
}

/// Renders a solver verdict, optionally followed by a model or an unsat core.
///
/// Models must have their infinitesimal parts instantiated away (see
/// [`crate::system::instantiate_delta`]) before printing; any variable the
/// model does not mention prints as `0`. Core entries use each atom's
/// `:named` label, falling back to `a<index>`.
pub fn print_result(
    problem: &Problem,
    outcome: &SolveOutcome,
    with_model: bool,
    with_core: bool,
) -> String {
    match outcome {
        SolveOutcome::Sat(model) => {
            let mut out = String::from("sat\n");
            if with_model {
                let defs: Vec<String> = problem
                    .variables
                    .iter()
                    .enumerate()
                    .map(|(j, name)| {
                        let value = match model.get(j) {
                            Some(v) => {
                                debug_assert!(
                                    v.delta.is_zero(),
                                    "instantiate delta before printing a model"
                                );
                                v.real.clone()
                            }
                            None => Rational::zero(),
                        };
                        format!("(define-fun {} () Real {})", name, format_rational(&value))
                    })
                    .collect();
                out.push_str(&format!("(model {})\n", defs.join(" ")));
            }
            out
        }
        SolveOutcome::Unsat { core, .. } => {
            let mut out = String::from("unsat\n");
            if with_core {
                let labels: String = core
                    .iter()
                    .map(|&i| format!(" {}", problem.label(i)))
                    .collect();
                out.push_str(&format!("(core{})\n", labels));
            }
            out
        }
        // Partial verdicts are internal to the search and never escape it.
        SolveOutcome::PartialUnsat { .. } => String::from("unknown\n"),
    }
}

fn format_row(row: &Constraint, variables: &[String]) -> String {
    // Bounds carry at most a negative infinitesimal part, which encodes
    // strictness; the real part is the printed constant either way.
    debug_assert!(!row.bound.delta.is_positive());
    let rel = if row.bound.delta.is_zero() { "<=" } else { "<" };
    format!(
        "({} {} {})",
        rel,
        format_term(&row.coeffs, variables),
        format_rational(&row.bound.real)
    )
}

fn format_conjunction(system: &LinearSystem, variables: &[String]) -> String {
    let atoms: Vec<String> = system
        .rows()
        .iter()
        .map(|r| format_row(r, variables))
        .collect();
    if atoms.is_empty() {
        "true".to_string()
    } else {
        format!("(and {})", atoms.join(" "))
    }
}

/// Renders the disjunction of conjunctions produced by quantifier elimination
/// as a single formula (no trailing newline). An empty disjunction prints as
/// `false`, an empty conjunction as `true`; nonempty conjunctions always get
/// the `(and …)` wrapper, and a lone disjunct stands on its own.
pub fn print_qe(disjuncts: &[LinearSystem], variables: &[String]) -> String {
    let clauses: Vec<String> = disjuncts
        .iter()
        .map(|sys| format_conjunction(sys, variables))
        .collect();
    match clauses.len() {
        0 => "false".to_string(),
        1 => clauses.into_iter().next().unwrap(),
        _ => format!("(or {})", clauses.join(" ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn err_of(result: Result<Problem, ParseError>) -> (ParseErrorKind, Pos) {
        let err = result.expect_err("expected a parse error");
        (err.kind, err.pos)
    }

    #[test]
    fn parses_a_small_script() {
        let problem = parse(
            "(set-logic QF_LRA)\n\
             (declare-fun x () Real)\n\
             (declare-const y Real)\n\
             ; a comment\n\
             (assert (<= (+ x (* 2 y)) 4))\n\
             (assert (and (< (- y) 0.5) (>= x (/ 1 3))))\n\
             (check-sat)\n\
             (get-model)\n",
        )
        .unwrap();
        assert_eq!(problem.variables, vec!["x", "y"]);
        assert!(problem.check_sat && problem.get_model && !problem.get_unsat_core);
        assert_eq!(problem.atoms.len(), 3);
        let a = &problem.atoms[0];
        assert_eq!((a.rel, a.rhs.clone()), (Relation::Le, rat(4)));
        assert_eq!(a.coeffs, vec![rat(1), rat(2)]);
        let b = &problem.atoms[1];
        assert_eq!((b.rel, b.rhs.clone()), (Relation::Lt, ratio(1, 2)));
        assert_eq!(b.coeffs, vec![rat(0), rat(-1)]);
        let c = &problem.atoms[2];
        assert_eq!((c.rel, c.rhs.clone()), (Relation::Ge, ratio(1, 3)));
        assert_eq!(c.coeffs, vec![rat(1), rat(0)]);
    }

    #[test]
    fn moves_variables_left_and_constants_right() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (declare-fun y () Real)\n\
             (assert (<= (+ x 3) (* 2 y)))\n\
             (assert (> (- x y 1) (- 2)))\n",
        )
        .unwrap();
        // x + 3 ≤ 2y becomes x - 2y ≤ -3.
        assert_eq!(problem.atoms[0].coeffs, vec![rat(1), rat(-2)]);
        assert_eq!(problem.atoms[0].rhs, rat(-3));
        // x - y - 1 > -2 becomes x - y > -1.
        assert_eq!(problem.atoms[1].coeffs, vec![rat(1), rat(-1)]);
        assert_eq!(problem.atoms[1].rhs, rat(-1));
    }

    #[test]
    fn named_atoms_keep_their_labels() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (assert (! (= x 1) :named goal))\n\
             (assert (< x 0))\n\
             (get-unsat-core)\n",
        )
        .unwrap();
        assert_eq!(problem.atoms[0].name.as_deref(), Some("goal"));
        assert_eq!(problem.atoms[0].rel, Relation::Eq);
        assert_eq!(problem.atoms[1].name, None);
        assert_eq!(problem.label(0), "goal");
        assert_eq!(problem.label(1), "a1");
        assert!(problem.get_unsat_core);
    }

    #[test]
    fn decimals_and_fractions_are_exact() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (assert (<= (* 0.1 x) (/ -3 6)))\n\
             (assert (<= x -2.5))\n",
        )
        .unwrap();
        assert_eq!(problem.atoms[0].coeffs, vec![ratio(1, 10)]);
        assert_eq!(problem.atoms[0].rhs, ratio(-1, 2));
        assert_eq!(problem.atoms[1].rhs, ratio(-5, 2));
    }

    #[test]
    fn division_folds_constants_only() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (assert (<= (* (/ 2 4) x) 1))\n",
        )
        .unwrap();
        assert_eq!(problem.atoms[0].coeffs, vec![ratio(1, 2)]);
        let (kind, _) = err_of(parse("(declare-fun x () Real)\n(assert (<= (/ 1 x) 1))\n"));
        assert_eq!(
            kind,
            ParseErrorKind::Unsupported("division by a non-constant".into())
        );
        let (kind, _) = err_of(parse("(declare-fun x () Real)\n(assert (<= (/ x 0) 1))\n"));
        assert_eq!(kind, ParseErrorKind::Syntax("division by zero".into()));
    }

    #[test]
    fn rejects_boolean_structure_with_positions() {
        let (kind, pos) = err_of(parse(
            "(declare-fun x () Real)\n(assert (or (< x 0) (< x 1)))\n",
        ));
        assert_eq!(kind, ParseErrorKind::Unsupported("`or`".into()));
        assert_eq!(pos, Pos { line: 2, col: 10 });

        let (kind, pos) = err_of(parse(
            "(declare-fun x () Real)\n(declare-fun y () Real)\n(assert (<= (* x y) 1))\n",
        ));
        assert_eq!(
            kind,
            ParseErrorKind::Unsupported("nonlinear multiplication".into())
        );
        assert_eq!(pos, Pos { line: 3, col: 13 });

        let (kind, _) = err_of(parse("(set-logic QF_LIA)\n"));
        assert_eq!(kind, ParseErrorKind::Unsupported("logic QF_LIA".into()));

        let (kind, _) = err_of(parse("(declare-fun f (Real) Real)\n"));
        assert_eq!(
            kind,
            ParseErrorKind::Unsupported("uninterpreted functions with arguments".into())
        );
    }

    #[test]
    fn reports_unknown_symbols_and_syntax_errors() {
        let (kind, pos) = err_of(parse("(declare-fun x () Real)\n(assert (< z 1))\n"));
        assert_eq!(kind, ParseErrorKind::UnknownSymbol("z".into()));
        assert_eq!(pos, Pos { line: 2, col: 12 });

        let (kind, pos) = err_of(parse("(assert (< x 1)\n"));
        assert_eq!(kind, ParseErrorKind::Syntax("unclosed `(`".into()));
        assert_eq!(pos, Pos { line: 1, col: 1 });

        let (kind, _) = err_of(parse("(declare-fun x () Real))\n"));
        assert_eq!(kind, ParseErrorKind::Syntax("unmatched `)`".into()));

        let (kind, _) = err_of(parse("(declare-fun x () Real)\n(assert (<= 1.2.3 x))\n"));
        assert_eq!(
            kind,
            ParseErrorKind::Syntax("malformed numeral `1.2.3`".into())
        );

        let (kind, _) = err_of(parse("(declare-fun x () Real)\n(declare-fun x () Real)\n"));
        assert_eq!(
            kind,
            ParseErrorKind::Syntax("`x` is already declared".into())
        );
    }

    #[test]
    fn commands_after_exit_are_ignored() {
        let problem = parse("(declare-fun x () Real)\n(exit)\n(this is not a command)\n").unwrap();
        assert_eq!(problem.variables, vec!["x"]);
    }

    #[test]
    fn round_trip_is_identity() {
        let script = "(set-logic QF_LRA)\n\
             (declare-fun x () Real)\n\
             (declare-fun y () Real)\n\
             (assert (! (<= (+ (* 2 x) (* (- 3) y)) (/ 7 2)) :named c0))\n\
             (assert (< y 0.25))\n\
             (assert (= x (- y 1)))\n\
             (check-sat)\n\
             (get-unsat-core)\n";
        let first = parse(script).unwrap();
        let printed = print_problem(&first);
        let second = parse(&printed).unwrap();
        assert_eq!(first, second);
        assert_eq!(printed, print_problem(&second));
    }

    #[test]
    fn formats_rationals_canonically() {
        assert_eq!(format_rational(&rat(5)), "5");
        assert_eq!(format_rational(&rat(0)), "0");
        assert_eq!(format_rational(&rat(-5)), "(- 5)");
        assert_eq!(format_rational(&ratio(1, 2)), "(/ 1 2)");
        assert_eq!(format_rational(&ratio(-9, 6)), "(- (/ 3 2))");
    }

    #[test]
    fn prints_models_and_cores() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (declare-fun y () Real)\n\
             (assert (! (<= x 1) :named low))\n\
             (assert (<= y 2))\n",
        )
        .unwrap();

        let mut model = Assignment::new();
        model.set(0, DeltaRational::from_real(ratio(3, 2)));
        model.set(1, DeltaRational::from_int(-1));
        let sat = SolveOutcome::Sat(model);
        assert_eq!(print_result(&problem, &sat, false, false), "sat\n");
        assert_eq!(
            print_result(&problem, &sat, true, false),
            "sat\n(model (define-fun x () Real (/ 3 2)) (define-fun y () Real (- 1)))\n"
        );

        let unsat = SolveOutcome::Unsat {
            core: [0usize, 1].into_iter().collect(),
            certificate: None,
        };
        assert_eq!(print_result(&problem, &unsat, false, false), "unsat\n");
        assert_eq!(
            print_result(&problem, &unsat, false, true),
            "unsat\n(core low a1)\n"
        );
    }

    #[test]
    fn prints_eliminated_systems() {
        let vars = vec!["x".to_string(), "y".to_string()];
        assert_eq!(print_qe(&[], &vars), "false");
        assert_eq!(print_qe(&[LinearSystem::new(2, vec![])], &vars), "true");

        let weak = LinearSystem::from_ints(2, &[(&[0, 0], 2)]);
        assert_eq!(print_qe(&[weak.clone()], &vars), "(and (<= 0 2))");

        let strict = LinearSystem::new(
            2,
            vec![Constraint::new(
                vec![rat(-1), rat(2)],
                DeltaRational::strict(ratio(1, 2)),
            )],
        );
        let both = LinearSystem::new(
            2,
            vec![
                Constraint::from_ints(&[1, 0], 3),
                Constraint::new(vec![rat(0), rat(1)], DeltaRational::strict(rat(0))),
            ],
        );
        assert_eq!(
            print_qe(&[both, strict], &vars),
            "(or (and (<= x 3) (< y 0)) (and (< (+ (* (- 1) x) (* 2 y)) (/ 1 2))))"
        );
    }

    #[test]
    fn reads_rationals_in_every_accepted_shape() {
        let cases = [
            ("5", rat(5)),
            ("-5", rat(-5)),
            ("2.5", ratio(5, 2)),
            ("3/4", ratio(3, 4)),
            ("-3/4", ratio(-3, 4)),
            ("(- 5)", rat(-5)),
            ("(/ 3 4)", ratio(3, 4)),
            ("(- (/ 3 4))", ratio(-3, 4)),
        ];
        for (text, expect) in cases {
            assert_eq!(parse_rational(text), Some(expect), "parsing {}", text);
        }
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("(+ 1 x)"), None);
    }

    #[test]
    fn reads_back_its_own_witnesses() {
        let problem = parse(
            "(declare-fun x () Real)\n\
             (declare-fun y () Real)\n\
             (assert (! (<= x 1) :named low))\n\
             (assert (<= y 2))\n",
        )
        .unwrap();

        let mut model = Assignment::new();
        model.set(0, DeltaRational::from_real(ratio(-3, 2)));
        model.set(1, DeltaRational::from_int(2));
        let printed = print_result(&problem, &SolveOutcome::Sat(model.clone()), true, false);
        let reread = parse_model(&printed, &problem).unwrap();
        assert_eq!(reread.get(0), model.get(0));
        assert_eq!(reread.get(1), model.get(1));

        let unsat = SolveOutcome::Unsat {
            core: [0usize, 1].into_iter().collect(),
            certificate: None,
        };
        let printed = print_result(&problem, &unsat, false, true);
        let core = parse_core(&printed, &problem).unwrap();
        assert_eq!(core, [0usize, 1].into_iter().collect());
    }

    #[test]
    fn reads_inline_witnesses() {
        let problem = parse(
            "(declare-fun x1 () Real)\n\
             (declare-fun x2 () Real)\n\
             (assert (! (<= x1 1) :named c1))\n\
             (assert (<= x2 2))\n\
             (assert (<= (+ x1 x2) 3))\n",
        )
        .unwrap();

        let model = parse_model("x1=3,x2=-1/2", &problem).unwrap();
        assert_eq!(model.get(0), Some(&DeltaRational::from_int(3)));
        assert_eq!(model.get(1), Some(&DeltaRational::from_real(ratio(-1, 2))));
        // Unmentioned variables default to zero.
        let partial = parse_model("x2=1", &problem).unwrap();
        assert_eq!(partial.get(0), Some(&DeltaRational::zero()));
        assert!(parse_model("z=1", &problem).is_err());

        assert_eq!(
            parse_core("0,2", &problem).unwrap(),
            [0usize, 2].into_iter().collect()
        );
        assert_eq!(
            parse_core("c1 a1", &problem).unwrap(),
            [0usize, 1].into_iter().collect()
        );
        assert!(parse_core("c9", &problem).is_err());
        // `a0` does not address atom 0, which has its own label.
        assert!(parse_core("a0", &problem).is_err());
        assert_eq!(
            parse_core("(core c1 a2)", &problem).unwrap(),
            [0usize, 2].into_iter().collect()
        );
    }

    #[test]
    fn printed_elimination_parses_back() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let system = LinearSystem::new(
            2,
            vec![
                Constraint::new(vec![ratio(1, 2), rat(-1)], DeltaRational::strict(rat(4))),
                Constraint::from_ints(&[0, 3], -6),
            ],
        );
        let formula = print_qe(&[system], &vars);
        let script = format!(
            "(declare-fun x () Real)\n(declare-fun y () Real)\n(assert {})\n",
            formula
        );
        let problem = parse(&script).unwrap();
        assert_eq!(problem.atoms.len(), 2);
        assert_eq!(problem.atoms[0].rel, Relation::Lt);
        assert_eq!(problem.atoms[0].coeffs, vec![ratio(1, 2), rat(-1)]);
        assert_eq!(problem.atoms[0].rhs, rat(4));
        assert_eq!(problem.atoms[1].rel, Relation::Le);
        assert_eq!(problem.atoms[1].coeffs, vec![rat(0), rat(3)]);
    }
}
