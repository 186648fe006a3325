//! Blind forward search with exact duplicate detection.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use crate::bits::BitVector;
use crate::formula::{Circuit, Formula};

use super::{CompiledActions, GroundAction};

/// Wall-clock is checked once per this many expansions.
const CLOCK_INTERVAL: u64 = 256;

pub const PLAN_CSV_HEADER: &str = "instance,walk_length,outcome,plan_length,expanded,generated";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Breadth-first; goal test on generation.
    Bfs,
    /// A* with the zero heuristic; goal test on expansion.
    AstarBlind,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Bfs => "bfs",
            Algorithm::AstarBlind => "astar_blind",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bfs" => Ok(Algorithm::Bfs),
            "astar_blind" | "astar" => Ok(Algorithm::AstarBlind),
            other => Err(format!(
                "unknown search algorithm {other:?} (expected bfs or astar_blind)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_expanded: u64,
    pub max_seconds: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_expanded: 1_000_000,
            max_seconds: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Expanded,
    Time,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Expanded => "expanded",
            Limit::Time => "time",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Plan(Vec<String>),
    /// Every reachable state was expanded without meeting the goal.
    Unreachable,
    ResourceExhausted {
        expanded: u64,
        limit: Limit,
    },
}

impl Outcome {
    pub fn plan(&self) -> Option<&[String]> {
        match self {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> String {
        match self {
            Outcome::Plan(_) => "plan".into(),
            Outcome::Unreachable => "unreachable".into(),
            Outcome::ResourceExhausted { limit, .. } => format!("resource_exhausted_{limit}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

struct Space {
    states: Vec<BitVector>,
    /// `(parent, action)` per state; the root has none.
    parents: Vec<Option<(usize, usize)>>,
    index: HashMap<BitVector, usize>,
}

impl Space {
    fn new(init: &BitVector) -> Space {
        Space {
            states: vec![init.clone()],
            parents: vec![None],
            index: HashMap::from([(init.clone(), 0)]),
        }
    }

    /// Id of a newly seen state, or `None` for a duplicate.
    fn insert(&mut self, s: BitVector, parent: usize, action: usize) -> Option<usize> {
        match self.index.entry(s) {
            Entry::Occupied(_) => None,
            Entry::Vacant(v) => {
                let id = self.states.len();
                self.states.push(v.key().clone());
                v.insert(id);
                self.parents.push(Some((parent, action)));
                Some(id)
            }
        }
    }

    fn plan(&self, mut id: usize, actions: &[GroundAction]) -> Vec<String> {
        let mut names = Vec::new();
        while let Some((parent, a)) = self.parents[id] {
            names.push(actions[a].name.clone());
            id = parent;
        }
        names.reverse();
        names
    }
}

/// Shortest plan (unit costs) from `init` to a state satisfying `goal`.
///
/// # Panics
/// If an action or the goal references a proposition outside `init`'s width.
pub fn search(
    actions: &[GroundAction],
    init: &BitVector,
    goal: &Formula,
    algorithm: Algorithm,
    limits: &Limits,
) -> SearchResult {
    let width = init.width();
    assert!(
        actions
            .iter()
            .all(|a| a.max_index().is_none_or(|m| m < width))
            && goal.max_var().is_none_or(|m| m < width),
        "action or goal references a proposition outside the state width {width}"
    );
    let start = Instant::now();
    let compiled = CompiledActions::new(actions);
    let goal = Circuit::new([goal]);
    let mut scratch = Vec::new();
    let mut space = Space::new(init);
    let mut stats = SearchStats::default();
    let deadline = Duration::from_secs_f64(limits.max_seconds.max(0.0));

    let finish = |outcome: Outcome, mut stats: SearchStats| {
        stats.seconds = start.elapsed().as_secs_f64();
        SearchResult { outcome, stats }
    };
    // Checked before each expansion.
    let exhausted = |stats: &SearchStats| -> Option<Limit> {
        if stats.expanded >= limits.max_expanded {
            Some(Limit::Expanded)
        } else if stats.expanded.is_multiple_of(CLOCK_INTERVAL) && start.elapsed() >= deadline {
            Some(Limit::Time)
        } else {
            None
        }
    };

    if algorithm == Algorithm::Bfs && goal.eval_first(init) {
        return finish(Outcome::Plan(Vec::new()), stats);
    }

    match algorithm {
        Algorithm::Bfs => {
            let mut open = VecDeque::from([0usize]);
            while let Some(id) = open.pop_front() {
                if let Some(limit) = exhausted(&stats) {
                    let outcome = Outcome::ResourceExhausted {
                        expanded: stats.expanded,
                        limit,
                    };
                    return finish(outcome, stats);
                }
                stats.expanded += 1;
                for a in 0..compiled.len() {
                    let Some(next) = compiled.successor(a, &space.states[id], &mut scratch) else {
                        continue;
                    };
                    stats.generated += 1;
                    let reached = goal.eval_first(&next);
                    if let Some(child) = space.insert(next, id, a) {
                        if reached {
                            return finish(Outcome::Plan(space.plan(child, actions)), stats);
                        }
                        open.push_back(child);
                    }
                }
            }
        }
        Algorithm::AstarBlind => {
            // (g, insertion order, state id); ties expand first-generated first.
            let mut open = BinaryHeap::from([Reverse((0usize, 0usize, 0usize))]);
            let mut g = vec![0usize];
            let mut closed = vec![false];
            let mut seq = 1usize;
            while let Some(Reverse((cost, _, id))) = open.pop() {
                if closed[id] {
                    continue;
                }
                closed[id] = true;
                if goal.eval_first(&space.states[id]) {
                    return finish(Outcome::Plan(space.plan(id, actions)), stats);
                }
                if let Some(limit) = exhausted(&stats) {
                    let outcome = Outcome::ResourceExhausted {
                        expanded: stats.expanded,
                        limit,
                    };
                    return finish(outcome, stats);
                }
                stats.expanded += 1;
                for a in 0..compiled.len() {
                    let Some(next) = compiled.successor(a, &space.states[id], &mut scratch) else {
                        continue;
                    };
                    stats.generated += 1;
                    // Unit costs and FIFO tie-breaking: the first path found is
                    // never improved on, so duplicates can be dropped.
                    if let Some(child) = space.insert(next, id, a) {
                        g.push(cost + 1);
                        closed.push(false);
                        open.push(Reverse((g[child], seq, child)));
                        seq += 1;
                    }
                }
            }
        }
    }
    finish(Outcome::Unreachable, stats)
}

/// Plan file: one action name per line, then a `;` stats footer.
pub fn format_plan(result: &SearchResult) -> String {
    let mut out = String::new();
    match &result.outcome {
        Outcome::Plan(names) => {
            for n in names {
                writeln!(out, "{n}").unwrap();
            }
        }
        other => writeln!(out, "; {}", other.tag()).unwrap(),
    }
    let s = &result.stats;
    // wall-clock time is left out so reruns give identical files
    writeln!(out, "; expanded {} generated {}", s.expanded, s.generated).unwrap();
    out
}

/// Action names of a plan file; `;` lines and blank lines are skipped.
pub fn parse_plan(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';'))
        .map(|l| {
            l.trim_start_matches('(')
                .trim_end_matches(')')
                .trim()
                .to_lowercase()
        })
        .collect()
}

/// One [`PLAN_CSV_HEADER`] row. Timing is left out so rows are reproducible.
pub fn format_plan_csv_row(instance: usize, walk_length: usize, result: &SearchResult) -> String {
    let length = result
        .outcome
        .plan()
        .map_or(String::new(), |p| p.len().to_string());
    format!(
        "{instance},{walk_length},{},{length},{},{}",
        result.outcome.tag(),
        result.stats.expanded,
        result.stats.generated
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_lights_out, GroundTruthDomain};
    use crate::formula::conjoin;
    use crate::formula::tests::{nv, v};

    /// LightsOut actions written directly as toggles.
    fn lights_out_actions(n: usize) -> (Vec<GroundAction>, usize) {
        let d = make_lights_out(n).unwrap();
        let actions = (0..d.action_count())
            .map(|a| {
                let bits: Vec<usize> = d.mask(a).iter_ones().collect();
                GroundAction {
                    name: format!("a{a}"),
                    precondition: Formula::top(),
                    add: bits.iter().map(|&b| (nv(b), b)).collect(),
                    del: bits.iter().map(|&b| (v(b), b)).collect(),
                }
            })
            .collect();
        (actions, d.width())
    }

    fn state_goal(s: &BitVector) -> Formula {
        conjoin(
            s.iter()
                .enumerate()
                .map(|(i, b)| if b { v(i) } else { nv(i) })
                .collect(),
        )
    }

    fn replay(actions: &[GroundAction], init: &BitVector, plan: &[String]) -> BitVector {
        plan.iter().fold(init.clone(), |s, name| {
            let a = actions.iter().find(|a| &a.name == name).unwrap();
            a.successor(&s).unwrap()
        })
    }

    /// Oracle breadth-first distances from `goal` over the simulator.
    fn oracle_distances(d: &dyn GroundTruthDomain) -> HashMap<BitVector, usize> {
        let goal = d.goal_state();
        let mut dist = HashMap::from([(goal.clone(), 0)]);
        let mut queue = VecDeque::from([goal]);
        while let Some(s) = queue.pop_front() {
            let k = dist[&s];
            for a in d.applicable_actions(&s) {
                let n = d.apply(&s, a).unwrap();
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), k + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    #[test]
    fn goal_at_init_gives_empty_plan() {
        let (actions, w) = lights_out_actions(2);
        let s = BitVector::zeros(w);
        for algo in [Algorithm::Bfs, Algorithm::AstarBlind] {
            let r = search(&actions, &s, &state_goal(&s), algo, &Limits::default());
            assert_eq!(r.outcome, Outcome::Plan(vec![]));
        }
    }

    #[test]
    fn plans_are_shortest_on_lights_out_2() {
        let d = make_lights_out(2).unwrap();
        let (actions, w) = lights_out_actions(2);
        let dist = oracle_distances(&d);
        let goal = state_goal(&d.goal_state());
        for x in 0..16u64 {
            let s = BitVector::from_u64(w, x);
            for algo in [Algorithm::Bfs, Algorithm::AstarBlind] {
                let r = search(&actions, &s, &goal, algo, &Limits::default());
                let plan = r.outcome.plan().expect("every state is solvable");
                assert_eq!(plan.len(), dist[&s], "state {s} with {algo}");
                assert_eq!(replay(&actions, &s, plan), d.goal_state());
            }
        }
    }

    #[test]
    fn exhausted_space_is_unreachable() {
        // bit 0 can only be set, never cleared
        let actions = vec![GroundAction {
            name: "set".into(),
            precondition: Formula::top(),
            add: vec![(Formula::top(), 0)],
            del: vec![],
        }];
        let init = BitVector::zeros(2);
        let r = search(&actions, &init, &v(1), Algorithm::Bfs, &Limits::default());
        assert_eq!(r.outcome, Outcome::Unreachable);
        assert_eq!(r.stats.expanded, 2);
    }

    #[test]
    fn expansion_limit_is_reported() {
        let (actions, w) = lights_out_actions(3);
        let init = BitVector::ones(w);
        let limits = Limits {
            max_expanded: 5,
            ..Limits::default()
        };
        for algo in [Algorithm::Bfs, Algorithm::AstarBlind] {
            let r = search(
                &actions,
                &init,
                &state_goal(&BitVector::zeros(w)),
                algo,
                &limits,
            );
            assert_eq!(
                r.outcome,
                Outcome::ResourceExhausted {
                    expanded: 5,
                    limit: Limit::Expanded
                }
            );
        }
    }

    #[test]
    fn time_limit_is_reported() {
        let (actions, w) = lights_out_actions(4);
        let limits = Limits {
            max_expanded: u64::MAX,
            max_seconds: 0.0,
        };
        let r = search(
            &actions,
            &BitVector::ones(w),
            &Formula::bottom(),
            Algorithm::Bfs,
            &limits,
        );
        assert!(matches!(
            r.outcome,
            Outcome::ResourceExhausted {
                limit: Limit::Time,
                ..
            }
        ));
    }

    #[test]
    fn plan_file_round_trip() {
        let r = SearchResult {
            outcome: Outcome::Plan(vec!["a1".into(), "a7".into()]),
            stats: SearchStats {
                expanded: 3,
                generated: 9,
                seconds: 0.25,
            },
        };
        let text = format_plan(&r);
        assert_eq!(text, "a1\na7\n; expanded 3 generated 9\n");
        assert_eq!(parse_plan(&text), vec!["a1", "a7"]);
        assert_eq!(parse_plan("(A2)\n\n; cost 1\n"), vec!["a2"]);
        assert_eq!(format_plan_csv_row(4, 7, &r), "4,7,plan,2,3,9");
        let u = SearchResult {
            outcome: Outcome::Unreachable,
            ..r
        };
        assert_eq!(format_plan_csv_row(0, 14, &u), "0,14,unreachable,,3,9");
        assert!(parse_plan(&format_plan(&u)).is_empty());
    }
}
