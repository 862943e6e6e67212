/*!
Partial colorings and the residual view.

Node status is one of Uncolored, Colored(c), Deferred, or PutAside. The
residual reading used everywhere in the pipeline:

- a Colored neighbor is gone from the residual degree and its color is gone
  from the residual palette;
- a Deferred neighbor is gone from the residual degree but blocks no color
  (it will be re-colored later against whatever is on the board then);
- a PutAside neighbor reads exactly like a Deferred one, but it is resolved
  greedily at the end of its own level rather than recursed on. Put-aside
  sets are independent, so the greedy step never blocks.

Slack is residual palette size minus residual degree; it never decreases as
neighbors become Colored or Deferred, which several success predicates rely
on.
*/

use std::fmt;

use crate::graph::NodeId;
use crate::instance::{Color, D1LCInstance, Palette};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Uncolored,
    Colored(Color),
    Deferred,
    PutAside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringState {
    status: Vec<NodeStatus>,
}

impl ColoringState {
    pub fn new(n: usize) -> Self {
        ColoringState {
            status: vec![NodeStatus::Uncolored; n],
        }
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    pub fn get(&self, v: NodeId) -> NodeStatus {
        self.status[v as usize]
    }

    pub fn set(&mut self, v: NodeId, s: NodeStatus) {
        self.status[v as usize] = s;
    }

    pub fn color_of(&self, v: NodeId) -> Option<Color> {
        match self.status[v as usize] {
            NodeStatus::Colored(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_uncolored(&self, v: NodeId) -> bool {
        matches!(self.status[v as usize], NodeStatus::Uncolored)
    }

    pub fn is_deferred(&self, v: NodeId) -> bool {
        matches!(self.status[v as usize], NodeStatus::Deferred)
    }

    pub fn is_put_aside(&self, v: NodeId) -> bool {
        matches!(self.status[v as usize], NodeStatus::PutAside)
    }

    /// (uncolored, colored, deferred, put_aside)
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let mut unc = 0;
        let mut col = 0;
        let mut def = 0;
        let mut put = 0;
        for s in &self.status {
            match s {
                NodeStatus::Uncolored => unc += 1,
                NodeStatus::Colored(_) => col += 1,
                NodeStatus::Deferred => def += 1,
                NodeStatus::PutAside => put += 1,
            }
        }
        (unc, col, def, put)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeStatus)> + '_ {
        self.status
            .iter()
            .enumerate()
            .map(|(v, &s)| (v as NodeId, s))
    }
}

/// Residual palette of `v`: its list minus the colors of Colored neighbors.
pub fn residual_palette(inst: &D1LCInstance, coloring: &ColoringState, v: NodeId) -> Palette {
    let mut used: Vec<Color> = inst
        .graph
        .neighbors(v)
        .iter()
        .filter_map(|&u| coloring.color_of(u))
        .collect();
    used.sort_unstable();
    used.dedup();
    inst.palette(v).minus(&used)
}

/// Residual degree of `v`: Uncolored neighbors only (Deferred excluded).
pub fn residual_degree(inst: &D1LCInstance, coloring: &ColoringState, v: NodeId) -> usize {
    inst.graph
        .neighbors(v)
        .iter()
        .filter(|&&u| coloring.is_uncolored(u))
        .count()
}

/// Slack: residual palette size minus residual degree. Always >= 1 on a valid
/// instance (palette >= degree+1 beats any split of neighbors into colored,
/// deferred, and live).
pub fn compute_slack(inst: &D1LCInstance, coloring: &ColoringState, v: NodeId) -> i64 {
    residual_palette(inst, coloring, v).len() as i64
        - residual_degree(inst, coloring, v) as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Uncolored(NodeId),
    Deferred(NodeId),
    PutAside(NodeId),
    OffPalette { node: NodeId, color: Color },
    Monochromatic { u: NodeId, v: NodeId, color: Color },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Uncolored(v) => write!(f, "node {v} is uncolored"),
            Violation::Deferred(v) => write!(f, "node {v} is deferred"),
            Violation::PutAside(v) => write!(f, "node {v} is still put aside"),
            Violation::OffPalette { node, color } => {
                write!(f, "node {node} wears color {color} outside its palette")
            }
            Violation::Monochromatic { u, v, color } => {
                write!(f, "edge {u}-{v} monochromatic in color {color}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Violation),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Full verification: completeness, palette membership, properness. Reports
/// the first violation in node order. This is the only authority on validity;
/// nothing in the pipeline self-certifies.
pub fn verify_coloring(inst: &D1LCInstance, coloring: &ColoringState) -> Verdict {
    assert_eq!(inst.n(), coloring.len());
    for v in 0..inst.n() as NodeId {
        match coloring.get(v) {
            NodeStatus::Uncolored => return Verdict::Invalid(Violation::Uncolored(v)),
            NodeStatus::Deferred => return Verdict::Invalid(Violation::Deferred(v)),
            NodeStatus::PutAside => return Verdict::Invalid(Violation::PutAside(v)),
            NodeStatus::Colored(c) => {
                if !inst.palette(v).contains(c) {
                    return Verdict::Invalid(Violation::OffPalette { node: v, color: c });
                }
                for &u in inst.graph.neighbors(v) {
                    if u > v {
                        if let Some(cu) = coloring.color_of(u) {
                            if cu == c {
                                return Verdict::Invalid(Violation::Monochromatic {
                                    u: v,
                                    v: u,
                                    color: c,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Verdict::Valid
}

/// Check only that no Colored node clashes with a Colored neighbor or wears an
/// off-palette color (partial colorings allowed). Used as a mid-run guard.
pub fn partial_coloring_proper(inst: &D1LCInstance, coloring: &ColoringState) -> Option<Violation> {
    for v in 0..inst.n() as NodeId {
        if let NodeStatus::Colored(c) = coloring.get(v) {
            if !inst.palette(v).contains(c) {
                return Some(Violation::OffPalette { node: v, color: c });
            }
            for &u in inst.graph.neighbors(v) {
                if u > v && coloring.color_of(u) == Some(c) {
                    return Some(Violation::Monochromatic { u: v, v: u, color: c });
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImproperInput(pub Violation);

impl fmt::Display for ImproperInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "partial coloring is improper: {}", self.0)
    }
}

impl std::error::Error for ImproperInput {}

/// Residual instance on the Uncolored and Deferred nodes, with used colors
/// stripped from palettes. Returns the instance plus the new-id -> old-id map.
///
/// The result is again a valid instance: a kept node loses exactly its
/// Colored neighbors from the degree and at most that many colors from its
/// palette, so palette' >= degree' + 1 survives.
pub fn reduce_instance(
    inst: &D1LCInstance,
    coloring: &ColoringState,
) -> Result<(D1LCInstance, Vec<NodeId>), ImproperInput> {
    let keep: Vec<NodeId> = (0..inst.n() as NodeId)
        .filter(|&v| {
            assert!(
                !coloring.is_put_aside(v),
                "node {v} is put aside; finalize its level before reducing"
            );
            !matches!(coloring.get(v), NodeStatus::Colored(_))
        })
        .collect();
    reduce_instance_on(inst, coloring, &keep)
}

/// Residual instance induced on an explicit node subset. Every kept node's
/// palette is stripped of its colored neighbors' colors; the degree+1
/// guarantee survives because the subset's induced degree only counts a
/// subset of the residual neighbors.
pub fn reduce_instance_on(
    inst: &D1LCInstance,
    coloring: &ColoringState,
    keep: &[NodeId],
) -> Result<(D1LCInstance, Vec<NodeId>), ImproperInput> {
    if let Some(viol) = partial_coloring_proper(inst, coloring) {
        return Err(ImproperInput(viol));
    }
    debug_assert!(keep
        .iter()
        .all(|&v| !matches!(coloring.get(v), NodeStatus::Colored(_))));
    let (graph, map) = inst.graph.induced(keep);
    let palettes = keep
        .iter()
        .map(|&v| residual_palette(inst, coloring, v))
        .collect();
    let reduced = D1LCInstance::new_inherited(graph, palettes)
        .expect("reduction preserves the degree+1 guarantee");
    Ok((reduced, map))
}

/// Coloring file text: one `v: c` line per colored node, ascending ids.
/// Uncolored/deferred/put-aside nodes get no line, so an incomplete state
/// round-trips as incomplete.
pub fn coloring_text(state: &ColoringState) -> String {
    let mut s = String::new();
    for v in 0..state.len() as NodeId {
        if let NodeStatus::Colored(c) = state.get(v) {
            s.push_str(&format!("{v}: {c}\n"));
        }
    }
    s
}

/// Parse `v: c` lines ('#' comments, blank lines ignored) into a state
/// over `n` nodes; absent nodes stay Uncolored.
pub fn parse_coloring(text: &str, n: usize) -> Result<ColoringState, String> {
    let mut state = ColoringState::new(n);
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (node, color) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected `v: c`", idx + 1))?;
        let v: NodeId = node
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad node id {node:?}", idx + 1))?;
        if v as usize >= n {
            return Err(format!("line {}: node {v} outside 0..{n}", idx + 1));
        }
        let c: Color = color
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad color {color:?}", idx + 1))?;
        if matches!(state.get(v), NodeStatus::Colored(_)) {
            return Err(format!("line {}: node {v} colored twice", idx + 1));
        }
        state.set(v, NodeStatus::Colored(c));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::instance::Palette;

    fn path3() -> D1LCInstance {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        D1LCInstance::with_default_palettes(g).unwrap()
    }

    #[test]
    fn slack_isolated_node() {
        // isolated v with palette {5} -> slack 1
        let g = Graph::from_edges(3, &[(1, 2)]).unwrap();
        let inst = D1LCInstance::new(
            g,
            vec![
                Palette::new(vec![5]),
                Palette::new(vec![0, 1]),
                Palette::new(vec![0, 1]),
            ],
        )
        .unwrap();
        let coloring = ColoringState::new(3);
        assert_eq!(compute_slack(&inst, &coloring, 0), 1);
    }

    #[test]
    fn slack_deferred_neighbor_blocks_nothing() {
        // v with 2 neighbors, one Deferred, palette size 3 -> slack 2
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let inst = D1LCInstance::new(
            g,
            vec![
                Palette::new(vec![0, 1, 2]),
                Palette::new(vec![0, 1]),
                Palette::new(vec![0, 1]),
            ],
        )
        .unwrap();
        let mut coloring = ColoringState::new(3);
        coloring.set(1, NodeStatus::Deferred);
        assert_eq!(compute_slack(&inst, &coloring, 0), 2);
    }

    #[test]
    fn colored_neighbor_strips_palette_and_degree() {
        let inst = path3();
        let mut coloring = ColoringState::new(3);
        coloring.set(0, NodeStatus::Colored(1));
        assert_eq!(residual_palette(&inst, &coloring, 1).colors(), &[0, 2]);
        assert_eq!(residual_degree(&inst, &coloring, 1), 1);
        assert_eq!(compute_slack(&inst, &coloring, 1), 1);
    }

    #[test]
    fn verify_flags_each_violation_kind() {
        let inst = path3();
        let mut c = ColoringState::new(3);
        assert_eq!(
            verify_coloring(&inst, &c),
            Verdict::Invalid(Violation::Uncolored(0))
        );
        c.set(0, NodeStatus::Colored(0));
        c.set(1, NodeStatus::Colored(0));
        c.set(2, NodeStatus::Colored(1));
        assert_eq!(
            verify_coloring(&inst, &c),
            Verdict::Invalid(Violation::Monochromatic { u: 0, v: 1, color: 0 })
        );
        c.set(1, NodeStatus::Colored(9));
        assert!(matches!(
            verify_coloring(&inst, &c),
            Verdict::Invalid(Violation::OffPalette { node: 1, color: 9 })
        ));
        c.set(1, NodeStatus::Colored(2));
        assert_eq!(verify_coloring(&inst, &c), Verdict::Valid);
    }

    #[test]
    fn reduce_keeps_deferred_and_strips_colors() {
        let inst = path3();
        let mut c = ColoringState::new(3);
        c.set(0, NodeStatus::Colored(1));
        c.set(2, NodeStatus::Deferred);
        let (red, map) = reduce_instance(&inst, &c).unwrap();
        assert_eq!(map, vec![1, 2]);
        assert_eq!(red.palette(0).colors(), &[0, 2]); // node 1 lost color 1
        assert_eq!(red.palette(1).colors(), &[0, 1]); // node 2 untouched
        assert_eq!(red.graph.m(), 1);
    }

    #[test]
    fn reduce_rejects_improper_input() {
        let inst = path3();
        let mut c = ColoringState::new(3);
        c.set(0, NodeStatus::Colored(0));
        c.set(1, NodeStatus::Colored(0));
        assert!(reduce_instance(&inst, &c).is_err());
    }

    #[test]
    fn empty_graph_roundtrip() {
        let g = Graph::empty(0);
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let c = ColoringState::new(0);
        assert_eq!(verify_coloring(&inst, &c), Verdict::Valid);
        let (red, map) = reduce_instance(&inst, &c).unwrap();
        assert_eq!(red.n(), 0);
        assert!(map.is_empty());
    }
}
