//! Grounded PDDL output.
//!
//! Each action `a<id>` has no parameters, its precondition formula, and for
//! every bit `f` the pair `(when E (z<f>))` / `(when (not E) (not (z<f>)))`
//! where `E` is the action's effect condition for that bit. Output is
//! byte-deterministic with LF line endings.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::bits::BitVector;
use crate::formula::Formula;

pub const REQUIREMENTS: &str =
    ":strips :negative-preconditions :disjunctive-preconditions :conditional-effects";

pub const METRICS_CSV_HEADER: &str = "action,precondition_nodes,mean_effect_nodes,action_bytes";

#[derive(Debug, Clone)]
pub struct ActionSchema {
    pub id: usize,
    /// Over current-state variables only.
    pub precondition: Formula,
    /// One effect condition per state bit.
    pub effects: Vec<Formula>,
}

impl ActionSchema {
    pub fn name(&self) -> String {
        format!("a{}", self.id)
    }
}

#[derive(Debug, Clone)]
pub struct PddlDocument {
    pub domain_name: String,
    pub width: usize,
    /// Emitted in this order.
    pub actions: Vec<ActionSchema>,
}

fn decimal_len(n: usize) -> u64 {
    n.to_string().len() as u64
}

fn header(doc: &PddlDocument) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", doc.domain_name).unwrap();
    writeln!(out, " (:requirements {REQUIREMENTS})").unwrap();
    out.push_str(" (:predicates");
    for i in 0..doc.width {
        write!(out, " (z{i})").unwrap();
    }
    out.push_str(")\n");
    out
}

/// Writes the domain without building it in memory.
pub fn write_domain(doc: &PddlDocument, w: &mut impl Write) -> io::Result<()> {
    w.write_all(header(doc).as_bytes())?;
    for a in &doc.actions {
        write_action(a, w)?;
    }
    w.write_all(b")\n")
}

fn write_action(a: &ActionSchema, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, " (:action {}", a.name())?;
    writeln!(w, "  :parameters ()")?;
    writeln!(w, "  :precondition {}", a.precondition)?;
    write!(w, "  :effect (and")?;
    for (f, e) in a.effects.iter().enumerate() {
        write!(w, "\n   (when {e} (z{f}))")?;
        write!(w, "\n   (when (not {e}) (not (z{f})))")?;
    }
    writeln!(w, "))")
}

/// Byte length of the emitted text of one action block.
fn action_len(a: &ActionSchema) -> u64 {
    let name = 1 + decimal_len(a.id);
    // " (:action " + name + "\n"
    let mut len = 10 + name + 1;
    // "  :parameters ()\n"
    len += 17;
    // "  :precondition " + formula + "\n"
    len = len.saturating_add(16 + a.precondition.text_len() + 1);
    // "  :effect (and"
    len += 14;
    for (f, e) in a.effects.iter().enumerate() {
        let z = 3 + decimal_len(f);
        // "\n   (when " + e + " " + z + ")"
        let positive = 10 + e.text_len() + 1 + z + 1;
        // "\n   (when (not " + e + ") (not " + z + "))"
        let negative = 15 + e.text_len() + 7 + z + 2;
        len = len.saturating_add(positive).saturating_add(negative);
    }
    // "))\n"
    len + 3
}

/// Byte length of [`emit_domain`]'s output, computed without rendering.
pub fn domain_len(doc: &PddlDocument) -> u64 {
    let mut len = header(doc).len() as u64 + 2;
    for a in &doc.actions {
        len = len.saturating_add(action_len(a));
    }
    len
}

pub fn emit_domain(doc: &PddlDocument) -> String {
    let mut buf = Vec::with_capacity(domain_len(doc).min(1 << 30) as usize);
    write_domain(doc, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("emitted PDDL is ASCII")
}

/// Problem with closed-world initial state `init` and the full state `goal`.
pub fn emit_problem(
    problem_name: &str,
    domain_name: &str,
    init: &BitVector,
    goal: &BitVector,
) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {problem_name})").unwrap();
    writeln!(out, " (:domain {domain_name})").unwrap();
    out.push_str(" (:init");
    for i in init.iter_ones() {
        write!(out, " (z{i})").unwrap();
    }
    out.push_str(")\n (:goal (and");
    for (i, b) in goal.iter().enumerate() {
        if b {
            write!(out, " (z{i})").unwrap();
        } else {
            write!(out, " (not (z{i}))").unwrap();
        }
    }
    out.push_str(")))\n");
    out
}

/// One row per action: tree-expanded node counts and emitted bytes.
pub fn format_metrics_csv(doc: &PddlDocument) -> String {
    let mut out = String::new();
    writeln!(out, "{METRICS_CSV_HEADER}").unwrap();
    for a in &doc.actions {
        let effect_nodes: u64 = a.effects.iter().map(|e| e.metrics().node_count).sum();
        let mean = if a.effects.is_empty() {
            0.0
        } else {
            effect_nodes as f64 / a.effects.len() as f64
        };
        writeln!(
            out,
            "{},{},{:.3},{}",
            a.id,
            a.precondition.metrics().node_count,
            mean,
            action_len(a)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::tests::{nv, v};
    use crate::formula::{conjoin, disjoin};

    const GOLDEN_ONE_BIT: &str = "(define (domain tiny)
 (:requirements :strips :negative-preconditions :disjunctive-preconditions :conditional-effects)
 (:predicates (z0))
 (:action a0
  :parameters ()
  :precondition (and)
  :effect (and
   (when (z0) (z0))
   (when (not (z0)) (not (z0)))))
)
";

    #[test]
    fn one_bit_domain_matches_golden_text() {
        let doc = PddlDocument {
            domain_name: "tiny".into(),
            width: 1,
            actions: vec![ActionSchema {
                id: 0,
                precondition: Formula::top(),
                effects: vec![v(0)],
            }],
        };
        assert_eq!(emit_domain(&doc), GOLDEN_ONE_BIT);
        assert_eq!(domain_len(&doc), GOLDEN_ONE_BIT.len() as u64);
    }

    #[test]
    fn predicted_length_matches_output() {
        let doc = PddlDocument {
            domain_name: "lengths".into(),
            width: 12,
            actions: (0..11)
                .map(|id| ActionSchema {
                    id: id * 7,
                    precondition: disjoin(vec![conjoin(vec![v(id), nv(11)]), v(3)]),
                    effects: (0..12)
                        .map(|f| {
                            if f % 3 == 0 {
                                Formula::bottom()
                            } else {
                                disjoin(vec![v(f), nv(id)])
                            }
                        })
                        .collect(),
                })
                .collect(),
        };
        let text = emit_domain(&doc);
        assert_eq!(domain_len(&doc), text.len() as u64);
        assert!(text.is_ascii());
        assert!(!text.contains('\r'));
    }

    #[test]
    fn problem_lists_full_goal() {
        let init: BitVector = "101".parse().unwrap();
        let goal: BitVector = "010".parse().unwrap();
        let text = emit_problem("p1", "d", &init, &goal);
        assert_eq!(
            text,
            "(define (problem p1)\n (:domain d)\n (:init (z0) (z2))\n (:goal (and (not (z0)) (z1) (not (z2)))))\n"
        );
    }

    #[test]
    fn metrics_csv_rows() {
        let doc = PddlDocument {
            domain_name: "m".into(),
            width: 2,
            actions: vec![ActionSchema {
                id: 3,
                precondition: conjoin(vec![v(0), v(1)]),
                effects: vec![v(0), Formula::top()],
            }],
        };
        let csv = format_metrics_csv(&doc);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(METRICS_CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..3], &["3", "3", "1.000"]);
    }
}
