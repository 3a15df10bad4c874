//! Rule bases: ion table, per-class membership terms and logic expressions,
//! the text DSL that describes them, and the built-in basalt classifier.
//!
//! ```text
//! rulebase "basalt"
//! option epsilon = 0.2
//! option normalize_excluding = [K]
//! ion Fe = 55.954
//! class AGT "Augite" {
//!     term fe = high(Fe, l = 1, h = 30)
//!     expr = fe
//! }
//! ```

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::fuzzy::{FuzzyExpr, MembershipFn, Polarity};
use crate::spectrum::IonTarget;

/// Window half-width used when a rule base does not set `option epsilon`.
pub const DEFAULT_EPSILON: f64 = 0.2;
/// Minimum membership for a hard assignment when `option nu` is absent.
pub const DEFAULT_NU: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleBaseError {
    #[error("{line}:{col}: {message} (at `{token}`)")]
    ParseError {
        line: usize,
        col: usize,
        token: String,
        message: String,
    },
    #[error("duplicate {kind} `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("class {class}: unknown term `{term}`")]
    UnknownTerm { class: String, term: String },
    #[error("class {class}, term {term}: unknown ion `{ion}`")]
    UnknownIon {
        class: String,
        term: String,
        ion: String,
    },
    #[error("{line}:{col}: invalid thresholds l = {low}, h = {high} (need l < h)")]
    InvalidThresholds {
        line: usize,
        col: usize,
        low: f64,
        high: f64,
    },
    #[error("invalid rule base: {0}")]
    Invalid(String),
}

/// A named membership requirement on one ion.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub ion: String,
    pub membership: MembershipFn,
}

impl Term {
    pub fn new(name: impl Into<String>, ion: impl Into<String>, membership: MembershipFn) -> Self {
        Self {
            name: name.into(),
            ion: ion.into(),
            membership,
        }
    }
}

/// One material class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRule {
    pub code: String,
    pub display_name: String,
    pub terms: Vec<Term>,
    pub expr: FuzzyExpr,
}

impl ClassRule {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleOptions {
    pub epsilon: f64,
    pub nu: f64,
    pub normalize_excluding: Vec<String>,
}

impl Default for RuleOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            nu: DEFAULT_NU,
            normalize_excluding: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    pub name: String,
    pub ions: Vec<IonTarget>,
    pub classes: Vec<ClassRule>,
    pub options: RuleOptions,
}

impl RuleBase {
    pub fn ion(&self, symbol: &str) -> Option<&IonTarget> {
        self.ions.iter().find(|i| i.symbol == symbol)
    }

    pub fn class(&self, code: &str) -> Option<&ClassRule> {
        self.classes.iter().find(|c| c.code == code)
    }

    pub fn class_codes(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.code.as_str()).collect()
    }

    /// Ions excluded from the normalization reference peak.
    pub fn excluded_ions(&self) -> Vec<IonTarget> {
        self.options
            .normalize_excluding
            .iter()
            .filter_map(|s| self.ion(s).cloned())
            .collect()
    }

    /// Canonical DSL text; `parse_rulebase(&rb.to_dsl())` reproduces `rb`.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rulebase {}", quote(&self.name));
        let _ = writeln!(out, "option epsilon = {}", self.options.epsilon);
        let _ = writeln!(out, "option nu = {}", self.options.nu);
        if !self.options.normalize_excluding.is_empty() {
            let _ = writeln!(
                out,
                "option normalize_excluding = [{}]",
                self.options.normalize_excluding.join(", ")
            );
        }
        out.push('\n');
        for ion in &self.ions {
            let _ = writeln!(out, "ion {} = {}", ion.symbol, ion.mz);
        }
        for class in &self.classes {
            out.push('\n');
            let _ = writeln!(out, "class {} {} {{", class.code, quote(&class.display_name));
            for t in &class.terms {
                let _ = writeln!(
                    out,
                    "    term {} = {}({}, l = {}, h = {})",
                    t.name,
                    t.membership.polarity().keyword(),
                    t.ion,
                    t.membership.l(),
                    t.membership.h()
                );
            }
            let _ = writeln!(out, "    expr = {}", class.expr);
            out.push_str("}\n");
        }
        out
    }
}

impl fmt::Display for RuleBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    DuplicateIon(String),
    DuplicateClass(String),
    DuplicateTerm { class: String, term: String },
    UnknownTerm { class: String, term: String },
    UnknownIon { class: String, term: String, ion: String },
    UnknownExcludedIon(String),
    BadIonMass(String),
    EpsilonOutOfRange(f64),
    NuOutOfRange(f64),
    NoClasses,
    UnusedTerm { class: String, term: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind) -> Self {
        Self {
            severity: Severity::Error,
            kind,
        }
    }

    fn warning(kind: DiagnosticKind) -> Self {
        Self {
            severity: Severity::Warning,
            kind,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn into_error(self) -> RuleBaseError {
        match self.kind {
            DiagnosticKind::DuplicateIon(name) => RuleBaseError::DuplicateName { kind: "ion", name },
            DiagnosticKind::DuplicateClass(name) => RuleBaseError::DuplicateName { kind: "class", name },
            DiagnosticKind::DuplicateTerm { term, .. } => {
                RuleBaseError::DuplicateName { kind: "term", name: term }
            }
            DiagnosticKind::UnknownTerm { class, term } => RuleBaseError::UnknownTerm { class, term },
            DiagnosticKind::UnknownIon { class, term, ion } => {
                RuleBaseError::UnknownIon { class, term, ion }
            }
            _ => RuleBaseError::Invalid(self.to_string()),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: ")?;
        match &self.kind {
            DiagnosticKind::DuplicateIon(n) => write!(f, "duplicate ion `{n}`"),
            DiagnosticKind::DuplicateClass(n) => write!(f, "duplicate class `{n}`"),
            DiagnosticKind::DuplicateTerm { class, term } => {
                write!(f, "class {class}: duplicate term `{term}`")
            }
            DiagnosticKind::UnknownTerm { class, term } => {
                write!(f, "class {class}: expression references unknown term `{term}`")
            }
            DiagnosticKind::UnknownIon { class, term, ion } => {
                write!(f, "class {class}, term {term}: unknown ion `{ion}`")
            }
            DiagnosticKind::UnknownExcludedIon(n) => {
                write!(f, "normalize_excluding names undeclared ion `{n}`")
            }
            DiagnosticKind::BadIonMass(n) => write!(f, "ion `{n}` must have a positive m/z"),
            DiagnosticKind::EpsilonOutOfRange(e) => write!(f, "epsilon {e} must be positive"),
            DiagnosticKind::NuOutOfRange(nu) => write!(f, "nu {nu} out of range [0, 1]"),
            DiagnosticKind::NoClasses => write!(f, "rule base declares no classes"),
            DiagnosticKind::UnusedTerm { class, term } => {
                write!(f, "class {class}: unused term `{term}`")
            }
        }
    }
}

/// Checks every rule-base invariant, returning one diagnostic per
/// violation. An empty list means the rule base is valid.
pub fn validate(rb: &RuleBase) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (i, ion) in rb.ions.iter().enumerate() {
        if rb.ions[..i].iter().any(|o| o.symbol == ion.symbol) {
            out.push(Diagnostic::error(DiagnosticKind::DuplicateIon(ion.symbol.clone())));
        }
        if !(ion.mz.is_finite() && ion.mz > 0.0) {
            out.push(Diagnostic::error(DiagnosticKind::BadIonMass(ion.symbol.clone())));
        }
    }
    let eps = rb.options.epsilon;
    if !(eps.is_finite() && eps > 0.0) {
        out.push(Diagnostic::error(DiagnosticKind::EpsilonOutOfRange(eps)));
    }
    let nu = rb.options.nu;
    if !(0.0..=1.0).contains(&nu) {
        out.push(Diagnostic::error(DiagnosticKind::NuOutOfRange(nu)));
    }
    for sym in &rb.options.normalize_excluding {
        if rb.ion(sym).is_none() {
            out.push(Diagnostic::error(DiagnosticKind::UnknownExcludedIon(sym.clone())));
        }
    }
    if rb.classes.is_empty() {
        out.push(Diagnostic::error(DiagnosticKind::NoClasses));
    }

    for (ci, class) in rb.classes.iter().enumerate() {
        if rb.classes[..ci].iter().any(|c| c.code == class.code) {
            out.push(Diagnostic::error(DiagnosticKind::DuplicateClass(class.code.clone())));
        }
        for (ti, term) in class.terms.iter().enumerate() {
            if class.terms[..ti].iter().any(|t| t.name == term.name) {
                out.push(Diagnostic::error(DiagnosticKind::DuplicateTerm {
                    class: class.code.clone(),
                    term: term.name.clone(),
                }));
            }
            if rb.ion(&term.ion).is_none() {
                out.push(Diagnostic::error(DiagnosticKind::UnknownIon {
                    class: class.code.clone(),
                    term: term.name.clone(),
                    ion: term.ion.clone(),
                }));
            }
        }
        let used = class.expr.term_names();
        for name in &used {
            if class.term(name).is_none() {
                out.push(Diagnostic::error(DiagnosticKind::UnknownTerm {
                    class: class.code.clone(),
                    term: name.to_string(),
                }));
            }
        }
        for term in &class.terms {
            if !used.contains(&term.name.as_str()) {
                out.push(Diagnostic::warning(DiagnosticKind::UnusedTerm {
                    class: class.code.clone(),
                    term: term.name.clone(),
                }));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in basalt rule base
// ---------------------------------------------------------------------------

/// The four-phase basalt classifier: ilmenite, augite, plagioclase and
/// olivine.
///
/// Each low-abundance requirement is a single `low` term; the olivine
/// expression does not negate those terms a second time.
pub fn builtin_basalt() -> RuleBase {
    use FuzzyExpr as E;

    let high = |l, h| MembershipFn::high(l, h).expect("static thresholds");
    let low = |l, h| MembershipFn::low(l, h).expect("static thresholds");
    let t = |name: &str| E::term(name);

    let ions = vec![
        IonTarget::new("Mg", 24.312),
        IonTarget::new("Al", 26.982),
        IonTarget::new("Ca", 39.95),
        IonTarget::new("Ti", 47.95),
        IonTarget::new("Mn", 54.938),
        IonTarget::new("Fe", 55.954),
    ];

    let ilm = ClassRule {
        code: "ILM".into(),
        display_name: "Ilmenite".into(),
        terms: vec![
            Term::new("no_al", "Al", low(0.5, 15.0)),
            Term::new("ti", "Ti", high(1.0, 17.0)),
            Term::new("fe", "Fe", high(1.0, 40.0)),
        ],
        expr: E::and(vec![t("fe"), t("ti"), t("no_al")]),
    };
    let agt = ClassRule {
        code: "AGT".into(),
        display_name: "Augite".into(),
        terms: vec![
            Term::new("ca", "Ca", high(50.0, 80.0)),
            Term::new("no_ti", "Ti", low(1.0, 17.0)),
            Term::new("fe", "Fe", high(1.0, 30.0)),
        ],
        expr: E::and(vec![t("fe"), t("no_ti"), t("ca")]),
    };
    let plg = ClassRule {
        code: "PLG".into(),
        display_name: "Plagioclase".into(),
        terms: vec![
            Term::new("al", "Al", high(0.5, 15.0)),
            Term::new("no_ti", "Ti", low(1.0, 17.0)),
            Term::new("no_fe", "Fe", low(10.0, 40.0)),
        ],
        expr: E::and(vec![t("al"), t("no_fe"), t("no_ti")]),
    };
    let olv = ClassRule {
        code: "OLV".into(),
        display_name: "Olivine".into(),
        terms: vec![
            Term::new("mg", "Mg", high(1.0, 50.0)),
            Term::new("no_al", "Al", low(0.5, 15.0)),
            Term::new("no_ti", "Ti", low(1.0, 17.0)),
            Term::new("mn", "Mn", high(10.0, 40.0)),
            Term::new("fe", "Fe", high(10.0, 40.0)),
        ],
        expr: E::and(vec![
            E::or(vec![t("mg"), t("mn"), t("fe")]),
            t("no_ti"),
            t("no_al"),
        ]),
    };

    RuleBase {
        name: "basalt".into(),
        ions,
        classes: vec![ilm, agt, plg, olv],
        options: RuleOptions::default(),
    }
}

/// DSL source equivalent to [`builtin_basalt`].
pub const BASALT_RULES: &str = include_str!("../rules/basalt.rules");

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Punct(c) => write!(f, "{c}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, RuleBaseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, col, token: String, message: &str| RuleBaseError::ParseError {
        line,
        col,
        token,
        message: message.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - begin;
            Tok::Ident(chars[begin..i].iter().collect())
        } else if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let begin = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            col += i - begin;
            let text: String = chars[begin..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Num(v),
                _ => return Err(err(start_line, start_col, text, "malformed number")),
            }
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(start_line, start_col, s, "unterminated string"));
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            other => {
                                let t = other.map(|c| c.to_string()).unwrap_or_default();
                                return Err(err(line, col, format!("\\{t}"), "bad escape"));
                            }
                        };
                        s.push(esc);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            Tok::Str(s)
        } else if "={}()[],".contains(c) {
            i += 1;
            col += 1;
            Tok::Punct(c)
        } else {
            return Err(err(line, col, c.to_string(), "unexpected character"));
        };
        out.push(Token {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

const RESERVED: &[&str] = &[
    "rulebase", "option", "ion", "class", "term", "expr", "high", "low", "medium", "and", "or",
    "not",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> RuleBaseError {
        RuleBaseError::ParseError {
            line: tok.line,
            col: tok.col,
            token: tok.tok.to_string(),
            message: message.into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), RuleBaseError> {
        if self.is_keyword(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.error_at(self.peek(), format!("expected `{kw}`")))
        }
    }

    fn expect_punct(&mut self, p: char) -> Result<(), RuleBaseError> {
        if self.peek().tok == Tok::Punct(p) {
            self.next();
            Ok(())
        } else {
            Err(self.error_at(self.peek(), format!("expected `{p}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, RuleBaseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error_at(self.peek(), format!("expected {what}"))),
        }
    }

    fn string(&mut self) -> Result<String, RuleBaseError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error_at(self.peek(), "expected a quoted string")),
        }
    }

    fn number(&mut self) -> Result<f64, RuleBaseError> {
        match self.peek().tok {
            Tok::Num(v) => {
                self.next();
                Ok(v)
            }
            _ => Err(self.error_at(self.peek(), "expected a number")),
        }
    }

    fn rulebase(&mut self) -> Result<RuleBase, RuleBaseError> {
        self.expect_keyword("rulebase")?;
        let name = self.string()?;
        let mut rb = RuleBase {
            name,
            ions: Vec::new(),
            classes: Vec::new(),
            options: RuleOptions::default(),
        };
        loop {
            let tok = self.peek().clone();
            match &tok.tok {
                Tok::Eof => break,
                Tok::Ident(k) if k == "option" => self.option(&mut rb.options)?,
                Tok::Ident(k) if k == "ion" => {
                    self.next();
                    let symbol = self.ident("an ion symbol")?;
                    self.expect_punct('=')?;
                    let mz = self.number()?;
                    rb.ions.push(IonTarget::new(symbol, mz));
                }
                Tok::Ident(k) if k == "class" => {
                    let class = self.class()?;
                    rb.classes.push(class);
                }
                _ => {
                    return Err(self.error_at(&tok, "expected `option`, `ion` or `class`"));
                }
            }
        }
        Ok(rb)
    }

    fn option(&mut self, opts: &mut RuleOptions) -> Result<(), RuleBaseError> {
        self.expect_keyword("option")?;
        let key_tok = self.peek().clone();
        let key = self.ident("an option name")?;
        self.expect_punct('=')?;
        match key.as_str() {
            "epsilon" => opts.epsilon = self.number()?,
            "nu" => opts.nu = self.number()?,
            "normalize_excluding" => {
                self.expect_punct('[')?;
                let mut list = Vec::new();
                if self.peek().tok != Tok::Punct(']') {
                    list.push(self.ident("an ion symbol")?);
                    while self.peek().tok == Tok::Punct(',') {
                        self.next();
                        list.push(self.ident("an ion symbol")?);
                    }
                }
                self.expect_punct(']')?;
                opts.normalize_excluding = list;
            }
            _ => return Err(self.error_at(&key_tok, "unknown option")),
        }
        Ok(())
    }

    fn class(&mut self) -> Result<ClassRule, RuleBaseError> {
        self.expect_keyword("class")?;
        let code = self.ident("a class code")?;
        let display_name = self.string()?;
        self.expect_punct('{')?;
        let mut terms = Vec::new();
        while self.is_keyword("term") {
            terms.push(self.term()?);
        }
        self.expect_keyword("expr")?;
        self.expect_punct('=')?;
        let expr = self.or_expr()?;
        self.expect_punct('}')?;
        Ok(ClassRule {
            code,
            display_name,
            terms,
            expr,
        })
    }

    fn term(&mut self) -> Result<Term, RuleBaseError> {
        self.expect_keyword("term")?;
        let name = self.ident("a term name")?;
        self.expect_punct('=')?;
        let shape_tok = self.next();
        let polarity = match &shape_tok.tok {
            Tok::Ident(s) if s == "high" => Polarity::High,
            Tok::Ident(s) if s == "low" => Polarity::Low,
            Tok::Ident(s) if s == "medium" => {
                return Err(self.error_at(&shape_tok, "`medium` membership is reserved and not supported"));
            }
            _ => return Err(self.error_at(&shape_tok, "expected `high` or `low`")),
        };
        self.expect_punct('(')?;
        let ion = self.ident("an ion symbol")?;
        self.expect_punct(',')?;
        self.expect_keyword("l")?;
        self.expect_punct('=')?;
        let low_tok = self.peek().clone();
        let low = self.number()?;
        self.expect_punct(',')?;
        self.expect_keyword("h")?;
        self.expect_punct('=')?;
        let high = self.number()?;
        self.expect_punct(')')?;
        let membership = MembershipFn::new(polarity, low, high).map_err(|_| {
            RuleBaseError::InvalidThresholds {
                line: low_tok.line,
                col: low_tok.col,
                low,
                high,
            }
        })?;
        Ok(Term { name, ion, membership })
    }

    fn or_expr(&mut self) -> Result<FuzzyExpr, RuleBaseError> {
        let mut parts = vec![self.and_expr()?];
        while self.is_keyword("or") {
            self.next();
            parts.push(self.and_expr()?);
        }
        Ok(FuzzyExpr::or(parts))
    }

    fn and_expr(&mut self) -> Result<FuzzyExpr, RuleBaseError> {
        let mut parts = vec![self.unary()?];
        while self.is_keyword("and") {
            self.next();
            parts.push(self.unary()?);
        }
        Ok(FuzzyExpr::and(parts))
    }

    fn unary(&mut self) -> Result<FuzzyExpr, RuleBaseError> {
        if self.is_keyword("not") {
            self.next();
            return Ok(FuzzyExpr::not(self.unary()?));
        }
        if self.peek().tok == Tok::Punct('(') {
            self.next();
            let e = self.or_expr()?;
            self.expect_punct(')')?;
            return Ok(e);
        }
        Ok(FuzzyExpr::term(self.ident("a term name")?))
    }
}

/// Parses and validates rule-base DSL text. Warnings are discarded; use
/// [`parse_rulebase_unchecked`] plus [`validate`] to inspect them.
pub fn parse_rulebase(source: &str) -> Result<RuleBase, RuleBaseError> {
    let rb = parse_rulebase_unchecked(source)?;
    if let Some(d) = validate(&rb).into_iter().find(Diagnostic::is_error) {
        return Err(d.into_error());
    }
    Ok(rb)
}

/// Syntax-only parse; semantic invariants are left to [`validate`].
pub fn parse_rulebase_unchecked(source: &str) -> Result<RuleBase, RuleBaseError> {
    let toks = lex(source)?;
    Parser { toks, pos: 0 }.rulebase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
        rulebase "mini"
        ion Fe = 55.954
        class FEX "Iron rich" {
            term fe = high(Fe, l = 1, h = 40)
            expr = fe
        }
    "#;

    #[test]
    fn minimal_program() {
        let rb = parse_rulebase(MINIMAL).unwrap();
        assert_eq!(rb.classes.len(), 1);
        assert_eq!(rb.options, RuleOptions::default());
        assert_eq!(rb.classes[0].expr, FuzzyExpr::term("fe"));
    }

    #[test]
    fn shipped_file_matches_builtin() {
        assert_eq!(parse_rulebase(BASALT_RULES).unwrap(), builtin_basalt());
    }

    #[test]
    fn serializer_round_trips_builtin() {
        let rb = builtin_basalt();
        assert_eq!(parse_rulebase(&rb.to_dsl()).unwrap(), rb);
    }

    #[test]
    fn unknown_term_in_expr() {
        let src = MINIMAL.replace("expr = fe", "expr = fe and missing");
        assert_eq!(
            parse_rulebase(&src).unwrap_err(),
            RuleBaseError::UnknownTerm {
                class: "FEX".into(),
                term: "missing".into()
            }
        );
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let src = MINIMAL.replace("l = 1, h = 40", "l = 40, h = 40");
        assert!(matches!(
            parse_rulebase(&src).unwrap_err(),
            RuleBaseError::InvalidThresholds { line: 5, .. }
        ));
    }

    #[test]
    fn duplicates_rejected() {
        let src = format!("{MINIMAL}\nion Fe = 56.0\n");
        assert_eq!(
            parse_rulebase(&src).unwrap_err(),
            RuleBaseError::DuplicateName {
                kind: "ion",
                name: "Fe".into()
            }
        );
        let class = "class FEX \"again\" { term fe = high(Fe, l = 1, h = 2) expr = fe }";
        let src = format!("{MINIMAL}\n{class}\n");
        assert!(matches!(
            parse_rulebase(&src).unwrap_err(),
            RuleBaseError::DuplicateName { kind: "class", .. }
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_rulebase("rulebase \"x\"\nion Fe 55.9\n").unwrap_err();
        assert_eq!(
            err,
            RuleBaseError::ParseError {
                line: 2,
                col: 8,
                token: "55.9".into(),
                message: "expected `=`".into()
            }
        );
        let err = parse_rulebase("rulebase \"x\"\n  option bogus = 1").unwrap_err();
        assert!(matches!(err, RuleBaseError::ParseError { line: 2, col: 10, .. }));
        let src = MINIMAL.replace("high(Fe", "medium(Fe");
        assert!(matches!(parse_rulebase(&src).unwrap_err(), RuleBaseError::ParseError { .. }));
    }

    #[test]
    fn options_parse() {
        let src = r#"
            rulebase "k"
            option epsilon = 0.05
            option nu = 0.7
            option normalize_excluding = [K, Na]
            ion K = 38.964
            ion Na = 22.99
            ion Fe = 55.954
            class A "a" { term fe = high(Fe, l = 1, h = 2) expr = fe }
        "#;
        let rb = parse_rulebase(src).unwrap();
        assert_eq!(rb.options.epsilon, 0.05);
        assert_eq!(rb.options.nu, 0.7);
        assert_eq!(rb.options.normalize_excluding, vec!["K", "Na"]);
        assert_eq!(rb.excluded_ions().len(), 2);
        assert_eq!(parse_rulebase(&rb.to_dsl()).unwrap(), rb);
    }

    #[test]
    fn precedence_and_parentheses() {
        let src = MINIMAL.replace(
            "term fe = high(Fe, l = 1, h = 40)\n            expr = fe",
            "term a = high(Fe, l = 1, h = 2)\n term b = low(Fe, l = 1, h = 2)\n term c = high(Fe, l = 3, h = 4)\n expr = a or b and not c",
        );
        let rb = parse_rulebase(&src).unwrap();
        let t = FuzzyExpr::term;
        assert_eq!(
            rb.classes[0].expr,
            FuzzyExpr::or(vec![t("a"), FuzzyExpr::and(vec![t("b"), FuzzyExpr::not(t("c"))])])
        );
    }

    #[test]
    fn validate_builtin_is_clean() {
        assert!(validate(&builtin_basalt()).is_empty());
    }

    #[test]
    fn validate_reports_range_and_unused() {
        let mut rb = builtin_basalt();
        rb.options.nu = 1.5;
        let d = validate(&rb);
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error());
        assert_eq!(d[0].kind, DiagnosticKind::NuOutOfRange(1.5));

        let mut rb = builtin_basalt();
        rb.classes[0].expr = FuzzyExpr::and(vec![FuzzyExpr::term("fe"), FuzzyExpr::term("ti")]);
        let d = validate(&rb);
        assert_eq!(
            d,
            vec![Diagnostic::warning(DiagnosticKind::UnusedTerm {
                class: "ILM".into(),
                term: "no_al".into()
            })]
        );
        // warnings do not block parsing
        assert!(parse_rulebase(&rb.to_dsl()).is_ok());
    }

    #[test]
    fn validate_excluded_ion_must_exist() {
        let mut rb = builtin_basalt();
        rb.options.normalize_excluding = vec!["K".into()];
        assert_eq!(
            validate(&rb)[0].kind,
            DiagnosticKind::UnknownExcludedIon("K".into())
        );
    }

    fn arb_rulebase() -> impl Strategy<Value = RuleBase> {
        let ion_names = ["Mg", "Al", "Ca", "Ti"];
        let term = (0usize..4, any::<bool>(), 0.0f64..50.0, 0.01f64..50.0);
        let class = prop::collection::vec(term, 1..4);
        (
            prop::collection::vec(class, 1..4),
            0.01f64..1.0,
            0.0f64..=1.0,
            "[a-zA-Z \"\\\\]{0,12}",
        )
            .prop_map(move |(classes, epsilon, nu, name)| {
                let ions = ion_names
                    .iter()
                    .enumerate()
                    .map(|(i, s)| IonTarget::new(*s, 20.0 + 7.25 * i as f64))
                    .collect();
                let classes = classes
                    .into_iter()
                    .enumerate()
                    .map(|(ci, terms)| {
                        let terms: Vec<Term> = terms
                            .into_iter()
                            .enumerate()
                            .map(|(ti, (ion, hi, l, w))| {
                                let pol = if hi { Polarity::High } else { Polarity::Low };
                                Term::new(
                                    format!("t{ti}"),
                                    ion_names[ion],
                                    MembershipFn::new(pol, l, l + w).unwrap(),
                                )
                            })
                            .collect();
                        let names: Vec<FuzzyExpr> =
                            terms.iter().map(|t| FuzzyExpr::term(&t.name)).collect();
                        let expr = if names.len() > 2 {
                            let mut it = names.into_iter();
                            let first = it.next().unwrap();
                            FuzzyExpr::and(vec![
                                FuzzyExpr::or(vec![first, it.next().unwrap()]),
                                FuzzyExpr::not(FuzzyExpr::and(it.collect())),
                            ])
                        } else {
                            FuzzyExpr::and(names)
                        };
                        ClassRule {
                            code: format!("C{ci}"),
                            display_name: format!("class {ci}"),
                            terms,
                            expr,
                        }
                    })
                    .collect();
                RuleBase {
                    name,
                    ions,
                    classes,
                    options: RuleOptions {
                        epsilon,
                        nu,
                        normalize_excluding: vec!["Ca".into()],
                    },
                }
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(rb in arb_rulebase()) {
            let text = rb.to_dsl();
            let parsed = parse_rulebase(&text).unwrap();
            prop_assert_eq!(&parsed, &rb);
            prop_assert_eq!(parse_rulebase(&parsed.to_dsl()).unwrap(), parsed);
        }
    }
}
