use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::{CrnSpec, ExternalSpecies, FinitenessConstraint, ReactionDecl, MAX_COEFFICIENT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UndeclaredSpecies(String),
    DuplicateSpecies(String),
    DuplicateReaction(String),
    NonPositiveRate { reaction: String, which: &'static str },
    NonPositiveConcentration(String),
    ZeroNetStep(String),
    CoefficientTooLarge(u64),
    ExternalInConstraint(String),
    NoInternalSpecies,
    NoReactions,
    InvalidScalar(&'static str),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UndeclaredSpecies(n) => write!(f, "undeclared species `{n}`"),
            ParseErrorKind::DuplicateSpecies(n) => write!(f, "duplicate species `{n}`"),
            ParseErrorKind::DuplicateReaction(n) => write!(f, "duplicate reaction id `{n}`"),
            ParseErrorKind::NonPositiveRate { reaction, which } => {
                write!(f, "reaction `{reaction}`: rate constant {which} must be positive")
            }
            ParseErrorKind::NonPositiveConcentration(n) => {
                write!(f, "external species `{n}` needs a positive concentration")
            }
            ParseErrorKind::ZeroNetStep(n) => {
                write!(f, "reaction `{n}` has a zero net change of internal species")
            }
            ParseErrorKind::CoefficientTooLarge(c) => {
                write!(f, "stoichiometric coefficient {c} exceeds {MAX_COEFFICIENT}")
            }
            ParseErrorKind::ExternalInConstraint(n) => {
                write!(f, "constraint refers to external species `{n}`")
            }
            ParseErrorKind::NoInternalSpecies => write!(f, "no internal species declared"),
            ParseErrorKind::NoReactions => write!(f, "no reactions declared"),
            ParseErrorKind::InvalidScalar(what) => write!(f, "{what} must be a positive number"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Colon,
    Plus,
    Star,
    Arrow,
    Semi,
    Eq,
    Le,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Arrow => write!(f, "`<->`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Le => write!(f, "`<=`"),
        }
    }
}

/// Token with its one-based column.
type Spanned = (Tok, usize);

fn lex(line: &str, line_no: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError {
        line: line_no,
        column: col,
        kind: ParseErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if c.is_ascii_digit()
            || c == '.'
            || (c == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == '.'))
        {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let after_exp = matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || (after_exp && (d == '+' || d == '-')) {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Number(chars[start..i].iter().collect()), col));
        } else if c == '<' {
            match (chars.get(i + 1), chars.get(i + 2)) {
                (Some('-'), Some('>')) => {
                    out.push((Tok::Arrow, col));
                    i += 3;
                }
                (Some('='), _) => {
                    out.push((Tok::Le, col));
                    i += 2;
                }
                _ => return Err(err(col, "expected `<->` or `<=`".into())),
            }
        } else {
            let t = match c {
                ':' => Tok::Colon,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                ';' => Tok::Semi,
                '=' => Tok::Eq,
                _ => return Err(err(col, format!("unexpected character `{c}`"))),
            };
            out.push((t, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Line<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Line<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        self.error_at(self.col(), kind)
    }

    fn error_at(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, column, kind }
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!(", found {t}"),
            None => ", found end of line".into(),
        };
        self.error(ParseErrorKind::Syntax(format!("{}{found}", msg.into())))
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected {want}")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok((s.clone(), col))
            }
            _ => Err(self.syntax("expected a name")),
        }
    }

    fn float(&mut self) -> Result<(f64, usize), ParseError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| self.error(ParseErrorKind::Syntax(format!("malformed number `{s}`"))))?;
                if !v.is_finite() {
                    return Err(self.error(ParseErrorKind::Syntax(format!("non-finite number `{s}`"))));
                }
                self.pos += 1;
                Ok((v, col))
            }
            _ => Err(self.syntax("expected a number")),
        }
    }

    fn uint(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v: u64 = s
                    .parse()
                    .map_err(|_| self.error(ParseErrorKind::Syntax(format!("expected a nonnegative integer, found `{s}`"))))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.syntax("expected an integer")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.syntax("unexpected trailing input"))
        }
    }
}

enum SpeciesRef {
    Internal(usize),
    External(usize),
}

struct Builder {
    internal: Vec<String>,
    external: Vec<ExternalSpecies>,
    seen: HashSet<String>,
}

impl Builder {
    fn lookup(&self, name: &str) -> Option<SpeciesRef> {
        if let Some(j) = self.internal.iter().position(|s| s == name) {
            return Some(SpeciesRef::Internal(j));
        }
        self.external
            .iter()
            .position(|s| s.name == name)
            .map(SpeciesRef::External)
    }
}

/// Parses a network document. Species declarations may appear anywhere in
/// the file; everything else refers to them by name.
pub fn parse_crn(text: &str) -> Result<CrnSpec, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let toks = lex(content, i + 1)?;
        if !toks.is_empty() {
            lines.push((i + 1, content.chars().count() + 1, toks));
        }
    }

    let mut b = Builder { internal: Vec::new(), external: Vec::new(), seen: HashSet::new() };

    // Pass 1: species.
    for (line, end_col, toks) in &lines {
        let mut p = Line { toks, pos: 0, line: *line, end_col: *end_col };
        if !matches!(p.peek(), Some(Tok::Ident(s)) if s == "species") {
            continue;
        }
        p.next();
        let (kind, kcol) = p.ident()?;
        match kind.as_str() {
            "internal" => {
                if p.at_end() {
                    return Err(p.syntax("expected at least one species name"));
                }
                while !p.at_end() {
                    let (name, col) = p.ident()?;
                    if !b.seen.insert(name.clone()) {
                        return Err(p.error_at(col, ParseErrorKind::DuplicateSpecies(name)));
                    }
                    b.internal.push(name);
                }
            }
            "external" => {
                if p.at_end() {
                    return Err(p.syntax("expected at least one NAME=VALUE"));
                }
                while !p.at_end() {
                    let (name, col) = p.ident()?;
                    p.expect(Tok::Eq)?;
                    let (v, _) = p.float()?;
                    if !b.seen.insert(name.clone()) {
                        return Err(p.error_at(col, ParseErrorKind::DuplicateSpecies(name)));
                    }
                    if v <= 0.0 {
                        return Err(p.error_at(col, ParseErrorKind::NonPositiveConcentration(name)));
                    }
                    b.external.push(ExternalSpecies { name, concentration: v });
                }
            }
            _ => {
                return Err(p.error_at(
                    kcol,
                    ParseErrorKind::Syntax(format!("expected `internal` or `external`, found `{kind}`")),
                ))
            }
        }
    }

    let n2 = b.internal.len();
    let n1 = b.external.len();
    let mut reactions: Vec<ReactionDecl> = Vec::new();
    let mut constraints = Vec::new();
    let mut omega = 1.0;
    let mut kbt = 1.0;

    // Pass 2: everything else.
    for (line, end_col, toks) in &lines {
        let mut p = Line { toks, pos: 0, line: *line, end_col: *end_col };
        let (head, hcol) = p.ident()?;
        match head.as_str() {
            "species" => continue,
            "reaction" => {
                let (id, idcol) = p.ident()?;
                p.expect(Tok::Colon)?;
                let (rx, ry) = parse_side(&mut p, &b)?;
                p.expect(Tok::Arrow)?;
                let (px, py) = parse_side(&mut p, &b)?;
                p.expect(Tok::Semi)?;
                let mut kf = None;
                let mut kr = None;
                while !p.at_end() {
                    let (key, kcol) = p.ident()?;
                    p.expect(Tok::Eq)?;
                    let (v, vcol) = p.float()?;
                    let which = match key.as_str() {
                        "kf" => "kf",
                        "kr" => "kr",
                        _ => {
                            return Err(p.error_at(
                                kcol,
                                ParseErrorKind::Syntax(format!("expected `kf` or `kr`, found `{key}`")),
                            ))
                        }
                    };
                    if v <= 0.0 {
                        return Err(p.error_at(vcol, ParseErrorKind::NonPositiveRate { reaction: id.clone(), which }));
                    }
                    let slot = if which == "kf" { &mut kf } else { &mut kr };
                    if slot.replace(v).is_some() {
                        return Err(p.error_at(kcol, ParseErrorKind::Syntax(format!("`{which}` given twice"))));
                    }
                }
                let kf = kf.ok_or_else(|| p.syntax("missing `kf=`"))?;
                let kr = kr.ok_or_else(|| p.syntax("missing `kr=`"))?;
                if reactions.iter().any(|r| r.id == id) {
                    return Err(p.error_at(idcol, ParseErrorKind::DuplicateReaction(id)));
                }
                if ry == py {
                    return Err(p.error_at(idcol, ParseErrorKind::ZeroNetStep(id)));
                }
                reactions.push(ReactionDecl {
                    id,
                    reactant_y: ry,
                    product_y: py,
                    reactant_x: rx,
                    product_x: px,
                    kf,
                    kr,
                });
            }
            "conserve" => {
                let mut species = Vec::new();
                loop {
                    let (name, col) = p.ident()?;
                    let j = internal_ref(&p, &b, &name, col)?;
                    if species.contains(&j) {
                        return Err(p.error_at(col, ParseErrorKind::Syntax(format!("`{name}` listed twice"))));
                    }
                    species.push(j);
                    if p.peek() == Some(&Tok::Plus) {
                        p.next();
                    } else {
                        break;
                    }
                }
                p.expect(Tok::Eq)?;
                let total = p.uint()?;
                p.finish()?;
                constraints.push(FinitenessConstraint::Conserve { species, total });
            }
            "bound" => {
                let (name, col) = p.ident()?;
                let j = internal_ref(&p, &b, &name, col)?;
                p.expect(Tok::Le)?;
                let max = p.uint()?;
                p.finish()?;
                constraints.push(FinitenessConstraint::Bound { species: j, max });
            }
            "omega" | "kbt" => {
                let (v, vcol) = p.float()?;
                p.finish()?;
                let what = if head == "omega" { "omega" } else { "kbt" };
                if v <= 0.0 {
                    return Err(p.error_at(vcol, ParseErrorKind::InvalidScalar(what)));
                }
                if head == "omega" {
                    omega = v;
                } else {
                    kbt = v;
                }
            }
            _ => {
                return Err(p.error_at(
                    hcol,
                    ParseErrorKind::Syntax(format!("unknown directive `{head}`")),
                ))
            }
        }
    }

    let eof = ParseError { line: text.lines().count().max(1), column: 1, kind: ParseErrorKind::NoInternalSpecies };
    if n2 == 0 {
        return Err(eof);
    }
    if reactions.is_empty() {
        return Err(ParseError { kind: ParseErrorKind::NoReactions, ..eof });
    }
    debug_assert!(reactions.iter().all(|r| r.reactant_x.len() == n1));

    Ok(CrnSpec {
        internal_species: b.internal,
        external_species: b.external,
        reactions,
        constraints,
        omega,
        kbt,
    })
}

fn internal_ref(p: &Line<'_>, b: &Builder, name: &str, col: usize) -> Result<usize, ParseError> {
    match b.lookup(name) {
        Some(SpeciesRef::Internal(j)) => Ok(j),
        Some(SpeciesRef::External(_)) => {
            Err(p.error_at(col, ParseErrorKind::ExternalInConstraint(name.to_string())))
        }
        None => Err(p.error_at(col, ParseErrorKind::UndeclaredSpecies(name.to_string()))),
    }
}

/// SIDE ::= "0" | TERM ("+" TERM)* ; TERM ::= [INT "*"] NAME.
/// Returns (external, internal) coefficient vectors.
fn parse_side(p: &mut Line<'_>, b: &Builder) -> Result<(Vec<u32>, Vec<u32>), ParseError> {
    let mut x = vec![0u64; b.external.len()];
    let mut y = vec![0u64; b.internal.len()];
    if let Some(Tok::Number(s)) = p.peek() {
        if s == "0" && !matches!(p.toks.get(p.pos + 1).map(|t| &t.0), Some(Tok::Star)) {
            p.next();
            return Ok((vec![0; x.len()], vec![0; y.len()]));
        }
    }
    loop {
        let coeff = if matches!(p.peek(), Some(Tok::Number(_))) {
            let c = p.uint()?;
            p.expect(Tok::Star)?;
            if c == 0 {
                return Err(p.error(ParseErrorKind::Syntax("zero coefficient".into())));
            }
            c
        } else {
            1
        };
        let (name, col) = p.ident()?;
        let slot = match b.lookup(&name) {
            Some(SpeciesRef::Internal(j)) => &mut y[j],
            Some(SpeciesRef::External(i)) => &mut x[i],
            None => return Err(p.error_at(col, ParseErrorKind::UndeclaredSpecies(name))),
        };
        *slot += coeff;
        if *slot > MAX_COEFFICIENT as u64 {
            return Err(p.error_at(col, ParseErrorKind::CoefficientTooLarge(*slot)));
        }
        if p.peek() == Some(&Tok::Plus) {
            p.next();
        } else {
            break;
        }
    }
    let cast = |v: Vec<u64>| v.into_iter().map(|c| c as u32).collect();
    Ok((cast(x), cast(y)))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::TRI;
    use super::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse_crn(text).unwrap_err().kind
    }

    #[test]
    fn tri_dimensions() {
        let spec = parse_crn(TRI).unwrap();
        assert_eq!(spec.n_external(), 2);
        assert_eq!(spec.n_internal(), 3);
        assert_eq!(spec.n_reactions(), 3);
        assert_eq!(spec.omega, 1.0);
        assert_eq!(spec.kbt, 1.0);
        assert_eq!(spec.reactions[0].reactant_x, vec![1, 0]);
        assert_eq!(spec.reactions[2].product_x, vec![0, 1]);
        assert_eq!(spec.reactions[1].kr, 2.0);
    }

    #[test]
    fn zero_net_step_is_rejected() {
        let text = "species internal Y1\nreaction R1: Y1 <-> Y1 ; kf=1 kr=1\n";
        assert_eq!(kind(text), ParseErrorKind::ZeroNetStep("R1".into()));
    }

    #[test]
    fn undeclared_species_names_the_culprit() {
        let text = "species internal Y1\nreaction R1: X9 + Y1 <-> 0 ; kf=1 kr=1\n";
        let err = parse_crn(text).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UndeclaredSpecies("X9".into()));
        assert_eq!((err.line, err.column), (2, 14));
    }

    #[test]
    fn non_positive_rate() {
        let text = "species internal A B\nreaction r: A <-> B ; kf=1 kr=0\n";
        assert!(matches!(kind(text), ParseErrorKind::NonPositiveRate { which: "kr", .. }));
        let text = "species internal A B\nreaction r: A <-> B ; kf=-2 kr=1\n";
        assert!(matches!(kind(text), ParseErrorKind::NonPositiveRate { which: "kf", .. }));
    }

    #[test]
    fn duplicates() {
        assert_eq!(kind("species internal A A\n"), ParseErrorKind::DuplicateSpecies("A".into()));
        assert_eq!(
            kind("species internal A\nspecies external A=1\n"),
            ParseErrorKind::DuplicateSpecies("A".into())
        );
        let text = "species internal A B\nreaction r: A <-> B ; kf=1 kr=1\nreaction r: B <-> 0 ; kf=1 kr=1\n";
        assert_eq!(kind(text), ParseErrorKind::DuplicateReaction("r".into()));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_crn("species internal A B\nreaction r: A -> B ; kf=1 kr=1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 15);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn coefficients_and_empty_side() {
        let spec = parse_crn(
            "species internal A B\nspecies external S=0.5\nreaction r: 2*A + S <-> 0 ; kf=1e-1 kr=3\nreaction q: A + A <-> B ; kf=1 kr=1\nbound A <= 4\nbound B <= 2\nomega 10\nkbt 2.5 # comment\n",
        )
        .unwrap();
        assert_eq!(spec.reactions[0].reactant_y, vec![2, 0]);
        assert_eq!(spec.reactions[0].reactant_x, vec![1]);
        assert_eq!(spec.reactions[0].product_y, vec![0, 0]);
        assert_eq!(spec.reactions[0].kf, 0.1);
        assert_eq!(spec.reactions[1].reactant_y, vec![2, 0]);
        assert_eq!(spec.omega, 10.0);
        assert_eq!(spec.kbt, 2.5);
        assert_eq!(spec.constraints.len(), 2);
    }

    #[test]
    fn constraint_on_external_species() {
        let text = "species internal A\nspecies external S=1\nreaction r: S <-> A ; kf=1 kr=1\nbound S <= 3\n";
        assert_eq!(kind(text), ParseErrorKind::ExternalInConstraint("S".into()));
    }

    #[test]
    fn missing_sections() {
        assert_eq!(kind("omega 2\n"), ParseErrorKind::NoInternalSpecies);
        assert_eq!(kind("species internal A\n"), ParseErrorKind::NoReactions);
        assert_eq!(kind("species external S=0\n"), ParseErrorKind::NonPositiveConcentration("S".into()));
    }
}
