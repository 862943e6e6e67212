/*!
List-coloring instances.

A (degree+1)-list-coloring instance pairs a graph with one palette per node,
where every palette holds at least degree+1 colors out of the universe
`[0, n^2)`. That size guarantee is the whole game: it survives arbitrary
partial colorings (see `coloring::reduce_instance`), which is what makes the
recursive pipeline sound.
*/

use std::fmt;

use crate::graph::{Graph, NodeId};

pub type Color = u32;

/// Sorted, deduplicated color list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette(Vec<Color>);

impl Palette {
    pub fn new(mut colors: Vec<Color>) -> Self {
        colors.sort_unstable();
        colors.dedup();
        Palette(colors)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: Color) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn colors(&self) -> &[Color] {
        &self.0
    }

    /// Colors with `removed` (sorted) taken out.
    pub fn minus(&self, removed: &[Color]) -> Palette {
        Palette(
            self.0
                .iter()
                .copied()
                .filter(|c| removed.binary_search(c).is_err())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    PaletteTooSmall {
        node: NodeId,
        palette: usize,
        degree: usize,
    },
    ColorOutOfRange {
        node: NodeId,
        color: Color,
        universe: u64,
    },
    PaletteForUnknownNode {
        node: NodeId,
        n: usize,
    },
    Graph(String),
    Parse(String),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::PaletteTooSmall {
                node,
                palette,
                degree,
            } => write!(f, "node {node}: palette size {palette} <= degree {degree}"),
            InstanceError::ColorOutOfRange {
                node,
                color,
                universe,
            } => write!(f, "node {node}: color {color} outside [0, {universe})"),
            InstanceError::PaletteForUnknownNode { node, n } => {
                write!(f, "palette line for node {node} but n = {n}")
            }
            InstanceError::Graph(msg) => write!(f, "graph: {msg}"),
            InstanceError::Parse(msg) => write!(f, "parse: {msg}"),
        }
    }
}

impl std::error::Error for InstanceError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D1LCInstance {
    pub graph: Graph,
    pub palettes: Vec<Palette>,
}

impl D1LCInstance {
    /// Universe bound for colors: n^2 (ids only; palettes may use any subset).
    pub fn universe(n: usize) -> u64 {
        (n as u64) * (n as u64)
    }

    /// Validate palette sizes and color range.
    pub fn new(graph: Graph, palettes: Vec<Palette>) -> Result<Self, InstanceError> {
        let universe = Self::universe(graph.n());
        let inst = Self::new_inherited(graph, palettes)?;
        for v in 0..inst.graph.n() {
            if let Some(&c) = inst.palettes[v].colors().last() {
                if (c as u64) >= universe {
                    return Err(InstanceError::ColorOutOfRange {
                        node: v as NodeId,
                        color: c,
                        universe,
                    });
                }
            }
        }
        Ok(inst)
    }

    /// Validate only the degree+1 bound. For instances derived from a
    /// parent problem — residuals, degree-partition parts — whose colors
    /// live in the parent's universe, wider than this node count implies.
    pub fn new_inherited(graph: Graph, palettes: Vec<Palette>) -> Result<Self, InstanceError> {
        assert_eq!(graph.n(), palettes.len(), "one palette per node");
        for v in 0..graph.n() {
            let p = &palettes[v];
            let d = graph.degree(v as NodeId);
            if p.len() <= d {
                return Err(InstanceError::PaletteTooSmall {
                    node: v as NodeId,
                    palette: p.len(),
                    degree: d,
                });
            }
        }
        Ok(D1LCInstance { graph, palettes })
    }

    /// Default palette for a node of degree d: the colors 0..=d.
    pub fn with_default_palettes(graph: Graph) -> Result<Self, InstanceError> {
        let palettes = (0..graph.n())
            .map(|v| Palette::new((0..=graph.degree(v as NodeId) as Color).collect()))
            .collect();
        Self::new(graph, palettes)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn palette(&self, v: NodeId) -> &Palette {
        &self.palettes[v as usize]
    }

    pub fn total_palette_words(&self) -> u64 {
        self.palettes.iter().map(|p| p.len() as u64).sum()
    }
}

/// Parse a palette file: lines of `v: c1 c2 ...`, `#` comments. Nodes without
/// a line get the default palette `0..=degree(v)`.
pub fn parse_palettes(text: &str, graph: &Graph) -> Result<Vec<Palette>, InstanceError> {
    let n = graph.n();
    let mut given: Vec<Option<Palette>> = vec![None; n];
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = line
            .split_once(':')
            .ok_or_else(|| InstanceError::Parse(format!("line {}: missing ':'", idx + 1)))?;
        let v: NodeId = head
            .trim()
            .parse()
            .map_err(|_| InstanceError::Parse(format!("line {}: bad node id", idx + 1)))?;
        if v as usize >= n {
            return Err(InstanceError::PaletteForUnknownNode { node: v, n });
        }
        let mut colors = Vec::new();
        for tok in tail.split_whitespace() {
            let c: Color = tok
                .parse()
                .map_err(|_| InstanceError::Parse(format!("line {}: bad color {tok:?}", idx + 1)))?;
            colors.push(c);
        }
        given[v as usize] = Some(Palette::new(colors));
    }
    Ok(given
        .into_iter()
        .enumerate()
        .map(|(v, p)| {
            p.unwrap_or_else(|| Palette::new((0..=graph.degree(v as NodeId) as Color).collect()))
        })
        .collect())
}

pub fn write_palettes(inst: &D1LCInstance) -> String {
    let mut out = String::new();
    for v in 0..inst.n() {
        out.push_str(&format!("{v}:"));
        for &c in inst.palettes[v].colors() {
            out.push_str(&format!(" {c}"));
        }
        out.push('\n');
    }
    out
}

/// Load an instance from edge-list text and optional palette text.
pub fn load_instance(graph_text: &str, palette_text: Option<&str>) -> Result<D1LCInstance, InstanceError> {
    let graph = crate::graph::parse_edge_list(graph_text, 0).map_err(InstanceError::Graph)?;
    let palettes = match palette_text {
        Some(t) => parse_palettes(t, &graph)?,
        None => (0..graph.n())
            .map(|v| Palette::new((0..=graph.degree(v as NodeId) as Color).collect()))
            .collect(),
    };
    D1LCInstance::new(graph, palettes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;

    #[test]
    fn default_palettes_have_degree_plus_one() {
        let g = parse_edge_list("0 1\n1 2\n", 0).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        assert_eq!(inst.palette(1).colors(), &[0, 1, 2]);
        assert_eq!(inst.palette(0).colors(), &[0, 1]);
    }

    #[test]
    fn palette_too_small_rejected() {
        let g = parse_edge_list("0 1\n", 0).unwrap();
        let err = D1LCInstance::new(g, vec![Palette::new(vec![3]), Palette::new(vec![3, 4])])
            .unwrap_err();
        assert_eq!(
            err,
            InstanceError::PaletteTooSmall {
                node: 0,
                palette: 1,
                degree: 1
            }
        );
    }

    #[test]
    fn color_universe_enforced() {
        // n = 2 => universe [0, 4)
        let g = parse_edge_list("0 1\n", 0).unwrap();
        let err =
            D1LCInstance::new(g, vec![Palette::new(vec![0, 4]), Palette::new(vec![0, 1])])
                .unwrap_err();
        assert!(matches!(err, InstanceError::ColorOutOfRange { color: 4, .. }));
    }

    #[test]
    fn palette_file_defaults_absent_lines() {
        let g = parse_edge_list("0 1\n1 2\n", 0).unwrap();
        let pals = parse_palettes("0: 5 3\n# rest default\n", &g).unwrap();
        assert_eq!(pals[0].colors(), &[3, 5]);
        assert_eq!(pals[1].colors(), &[0, 1, 2]);
        assert_eq!(pals[2].colors(), &[0, 1]);
    }

    #[test]
    fn isolated_node_takes_singleton_default() {
        // Node 2 exists only via the palette-side hint: use n via edge ids.
        let g = parse_edge_list("0 1\n2 3\n", 0).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        assert_eq!(inst.palette(2).len(), 2);
    }
}
