//! Reader for the grounded PDDL subset the compiler emits: zero-parameter
//! actions over nullary predicates `z<k>`, `and`/`or`/`not` formulas and
//! `when` effects. Symbols are case-insensitive; `;` starts a comment.

use thiserror::Error;

use crate::bits::BitVector;
use crate::formula::{negate, simplify, Formula};

use super::GroundAction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unsupported construct `{construct}`")]
    Unsupported {
        line: usize,
        column: usize,
        construct: String,
    },
    #[error("problem refers to domain {found:?} but the domain is {expected:?}")]
    DomainMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Atom(..) => None,
        }
    }

    /// Head symbol of a list.
    fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexp::atom)
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn unsupported(pos: Pos, construct: impl Into<String>) -> ParseError {
    ParseError::Unsupported {
        line: pos.line,
        column: pos.column,
        construct: construct.into(),
    }
}

fn read_sexp(text: &str) -> Result<Sexp, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 0);
    let mut atom: Option<(String, Pos)> = None;

    fn flush(
        atom: &mut Option<(String, Pos)>,
        stack: &mut [(Vec<Sexp>, Pos)],
    ) -> Result<(), ParseError> {
        if let Some((s, p)) = atom.take() {
            match stack.last_mut() {
                Some((items, _)) => items.push(Sexp::Atom(s, p)),
                None => return Err(syntax(p, format!("symbol `{s}` outside any list"))),
            }
        }
        Ok(())
    }

    while let Some(c) = chars.next() {
        column += 1;
        let pos = Pos { line, column };
        match c {
            '\n' => {
                flush(&mut atom, &mut stack)?;
                line += 1;
                column = 0;
            }
            ';' => {
                flush(&mut atom, &mut stack)?;
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        column = 0;
                        break;
                    }
                }
            }
            '(' => {
                flush(&mut atom, &mut stack)?;
                if done.is_some() {
                    return Err(syntax(pos, "content after the top-level expression"));
                }
                stack.push((Vec::new(), pos));
            }
            ')' => {
                flush(&mut atom, &mut stack)?;
                let (items, open) = stack.pop().ok_or_else(|| syntax(pos, "unbalanced `)`"))?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => done = Some(list),
                }
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack)?,
            c => match &mut atom {
                Some((s, _)) => s.extend(c.to_lowercase()),
                None => {
                    if done.is_some() {
                        return Err(syntax(pos, "content after the top-level expression"));
                    }
                    atom = Some((c.to_lowercase().collect(), pos));
                }
            },
        }
    }
    flush(&mut atom, &mut stack)?;
    if let Some((_, open)) = stack.last() {
        return Err(syntax(*open, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax(Pos { line, column }, "empty input"))
}

/// Index `k` of the predicate `z<k>`.
fn proposition(name: &str, pos: Pos) -> Result<usize, ParseError> {
    name.strip_prefix('z')
        .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| unsupported(pos, format!("predicate {name}")))
}

/// `(z<k>)` as an atom list.
fn atom_index(e: &Sexp) -> Result<usize, ParseError> {
    match e.list() {
        Some([Sexp::Atom(name, p)]) => proposition(name, *p),
        Some([_, extra, ..]) => Err(unsupported(extra.pos(), "predicate arguments")),
        _ => Err(syntax(e.pos(), "expected an atom `(z<k>)`")),
    }
}

fn check_width(index: usize, width: usize, pos: Pos) -> Result<usize, ParseError> {
    if index >= width {
        return Err(syntax(pos, format!("proposition z{index} is not declared")));
    }
    Ok(index)
}

fn formula(e: &Sexp, width: usize) -> Result<Formula, ParseError> {
    let items = e
        .list()
        .ok_or_else(|| syntax(e.pos(), "expected a formula"))?;
    let Some(first) = items.first() else {
        return Err(syntax(e.pos(), "empty formula `()`"));
    };
    let Some(head) = first.atom() else {
        return Err(syntax(first.pos(), "expected a connective or predicate"));
    };
    match head {
        "and" | "or" => {
            let children = items[1..]
                .iter()
                .map(|c| formula(c, width))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if head == "and" {
                Formula::and(children)
            } else {
                Formula::or(children)
            })
        }
        "not" => match &items[1..] {
            [inner] => Ok(negate(&formula(inner, width)?)),
            _ => Err(syntax(e.pos(), "`not` takes exactly one argument")),
        },
        "imply" | "forall" | "exists" | "when" | "=" => Err(unsupported(first.pos(), head)),
        _ => Ok(Formula::var(check_width(atom_index(e)?, width, e.pos())?)),
    }
}

/// A literal `(z<k>)` or `(not (z<k>))`: `(index, positive)`.
fn effect_literal(e: &Sexp, width: usize) -> Result<(usize, bool), ParseError> {
    match e.head() {
        Some("not") => match &e.list().unwrap()[1..] {
            [inner] => Ok((check_width(atom_index(inner)?, width, inner.pos())?, false)),
            _ => Err(syntax(e.pos(), "`not` takes exactly one argument")),
        },
        Some("when") => Err(unsupported(e.pos(), "nested when")),
        Some(h @ ("forall" | "increase" | "decrease" | "assign")) => Err(unsupported(e.pos(), h)),
        _ => Ok((check_width(atom_index(e)?, width, e.pos())?, true)),
    }
}

/// `condition` is `Some` inside a `when`.
fn effects(
    e: &Sexp,
    width: usize,
    condition: Option<&Formula>,
    action: &mut GroundAction,
) -> Result<(), ParseError> {
    match e.head() {
        Some("and") => {
            for c in &e.list().unwrap()[1..] {
                effects(c, width, condition, action)?;
            }
            Ok(())
        }
        Some("when") => {
            if condition.is_some() {
                return Err(unsupported(e.pos(), "nested when"));
            }
            match &e.list().unwrap()[1..] {
                [c, body] => {
                    let c = simplify(&formula(c, width)?);
                    effects(body, width, Some(&c), action)
                }
                _ => Err(syntax(e.pos(), "`when` takes a condition and an effect")),
            }
        }
        _ => {
            let (bit, positive) = effect_literal(e, width)?;
            let entry = (condition.cloned().unwrap_or_else(Formula::top), bit);
            if positive {
                action.add.push(entry);
            } else {
                action.del.push(entry);
            }
            Ok(())
        }
    }
}

fn expect_define<'a>(e: &'a Sexp, kind: &str) -> Result<(&'a [Sexp], String), ParseError> {
    let items = e
        .list()
        .ok_or_else(|| syntax(e.pos(), "expected `(define ...)`"))?;
    if items.first().and_then(Sexp::atom) != Some("define") {
        return Err(syntax(e.pos(), "expected `(define ...)`"));
    }
    let name = match items.get(1).and_then(Sexp::list) {
        Some([Sexp::Atom(k, _), Sexp::Atom(n, _)]) if k == kind => n.clone(),
        _ => return Err(syntax(e.pos(), format!("expected `({kind} <name>)`"))),
    };
    Ok((&items[2..], name))
}

#[derive(Debug, Clone)]
pub struct ParsedDomain {
    pub name: String,
    /// Number of declared propositions.
    pub width: usize,
    pub actions: Vec<GroundAction>,
}

pub fn parse_domain(text: &str) -> Result<ParsedDomain, ParseError> {
    let root = read_sexp(text)?;
    let (sections, name) = expect_define(&root, "domain")?;
    let mut width = None;
    let mut action_sections = Vec::new();
    for s in sections {
        match s.head() {
            Some(":requirements") => {
                for r in &s.list().unwrap()[1..] {
                    match r.atom() {
                        Some(
                            ":strips"
                            | ":negative-preconditions"
                            | ":disjunctive-preconditions"
                            | ":conditional-effects",
                        ) => {}
                        Some(other) => return Err(unsupported(r.pos(), other)),
                        None => return Err(syntax(r.pos(), "expected a requirement flag")),
                    }
                }
            }
            Some(":predicates") => {
                let preds = &s.list().unwrap()[1..];
                let mut seen = vec![false; preds.len()];
                for p in preds {
                    let k = atom_index(p)?;
                    if k >= preds.len() || seen[k] {
                        return Err(syntax(
                            p.pos(),
                            "predicates must be z0 .. z(F-1), each once",
                        ));
                    }
                    seen[k] = true;
                }
                width = Some(preds.len());
            }
            Some(":action") => action_sections.push(s),
            Some(other) => return Err(unsupported(s.pos(), other)),
            None => return Err(syntax(s.pos(), "expected a domain section")),
        }
    }
    let width = width.ok_or_else(|| syntax(root.pos(), "missing `:predicates`"))?;
    let actions = action_sections
        .into_iter()
        .map(|s| parse_action(s, width))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedDomain {
        name,
        width,
        actions,
    })
}

fn parse_action(s: &Sexp, width: usize) -> Result<GroundAction, ParseError> {
    let items = s.list().unwrap();
    let name = items
        .get(1)
        .and_then(Sexp::atom)
        .ok_or_else(|| syntax(s.pos(), "action needs a name"))?
        .to_string();
    let mut action = GroundAction {
        name,
        precondition: Formula::top(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let Some(key_name) = key.atom() else {
            return Err(syntax(key.pos(), "expected an action keyword"));
        };
        let value = rest
            .next()
            .ok_or_else(|| syntax(key.pos(), format!("`{key_name}` needs a value")))?;
        match key_name {
            ":parameters" => {
                if value.list().is_none_or(|l| !l.is_empty()) {
                    return Err(unsupported(value.pos(), "action parameters"));
                }
            }
            ":precondition" => action.precondition = simplify(&formula(value, width)?),
            ":effect" => effects(value, width, None, &mut action)?,
            other => return Err(unsupported(key.pos(), other)),
        }
    }
    Ok(action)
}

#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub name: String,
    pub domain: String,
    pub init: BitVector,
    pub goal: Formula,
}

/// Parses a problem against a domain of `width` propositions.
pub fn parse_problem(text: &str, width: usize) -> Result<ParsedProblem, ParseError> {
    let root = read_sexp(text)?;
    let (sections, name) = expect_define(&root, "problem")?;
    let mut domain = None;
    let mut init = None;
    let mut goal = None;
    for s in sections {
        let items = s.list().unwrap_or(&[]);
        match s.head() {
            Some(":domain") => match items {
                [_, Sexp::Atom(d, _)] => domain = Some(d.clone()),
                _ => return Err(syntax(s.pos(), "expected `(:domain <name>)`")),
            },
            Some(":init") => {
                let mut state = BitVector::zeros(width);
                for a in &items[1..] {
                    if a.head() == Some("not") {
                        return Err(unsupported(a.pos(), "negative initial fact"));
                    }
                    state.set(check_width(atom_index(a)?, width, a.pos())?, true);
                }
                init = Some(state);
            }
            Some(":goal") => match items {
                [_, g] => goal = Some(simplify(&formula(g, width)?)),
                _ => return Err(syntax(s.pos(), "expected `(:goal <formula>)`")),
            },
            Some(other) => return Err(unsupported(s.pos(), other)),
            None => return Err(syntax(s.pos(), "expected a problem section")),
        }
    }
    Ok(ParsedProblem {
        name,
        domain: domain.ok_or_else(|| syntax(root.pos(), "missing `:domain`"))?,
        init: init.ok_or_else(|| syntax(root.pos(), "missing `:init`"))?,
        goal: goal.ok_or_else(|| syntax(root.pos(), "missing `:goal`"))?,
    })
}

/// A domain with one of its problems.
#[derive(Debug, Clone)]
pub struct Task {
    pub domain: ParsedDomain,
    pub problem: ParsedProblem,
}

impl Task {
    pub fn actions(&self) -> &[GroundAction] {
        &self.domain.actions
    }
    pub fn init(&self) -> &BitVector {
        &self.problem.init
    }
    pub fn goal(&self) -> &Formula {
        &self.problem.goal
    }
}

pub fn parse(domain_text: &str, problem_text: &str) -> Result<Task, ParseError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text, domain.width)?;
    if problem.domain != domain.name {
        return Err(ParseError::DomainMismatch {
            expected: domain.name,
            found: problem.domain,
        });
    }
    Ok(Task { domain, problem })
}
