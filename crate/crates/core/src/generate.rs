//! Seeded instance generators: random graphs, planted-clique unions,
//! hypercubes, and star forests, with default or randomized palettes.
//! Same spec + seed always yields the same instance, byte for byte.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::graph::{Graph, NodeId};
use crate::instance::{Color, D1LCInstance, Palette};

#[derive(Debug, Clone, PartialEq)]
pub enum GenKind {
    /// Each of the n-choose-2 pairs is an edge independently with
    /// probability p.
    Gnp { n: usize, p: f64 },
    /// `count` disjoint cliques of `clique_size` nodes each, plus
    /// cross-clique edges with probability `bridge_p`.
    Planted {
        clique_size: usize,
        count: usize,
        bridge_p: f64,
    },
    /// The dim-dimensional hypercube: 2^dim nodes, edges between ids at
    /// Hamming distance 1.
    Hypercube { dim: u32 },
    /// `centers` disjoint stars with `leaves` leaves each — the canonical
    /// uneven instance (leaves see a much higher-degree neighbor).
    StarForest { centers: usize, leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaletteMode {
    /// Every node gets [0, d(v)] — the tightest legal palette.
    Default,
    /// d(v)+1+extra distinct colors drawn from [0, n^2).
    Random { extra: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub seed: u64,
    pub palette: PaletteMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    BadParams(String),
}

impl std::fmt::Display for GenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenError::BadParams(why) => write!(f, "bad generator parameters: {why}"),
        }
    }
}

impl std::error::Error for GenError {}

fn gen_graph(kind: &GenKind, rng: &mut ChaCha20Rng) -> Result<Graph, GenError> {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let n = match *kind {
        GenKind::Gnp { n, p } => {
            if n == 0 {
                return Err(GenError::BadParams("gnp needs at least 1 node".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::BadParams(format!("p = {p} outside [0, 1]")));
            }
            for u in 0..n as NodeId {
                for v in (u + 1)..n as NodeId {
                    if rng.gen_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            n
        }
        GenKind::Planted {
            clique_size,
            count,
            bridge_p,
        } => {
            if clique_size == 0 || count == 0 {
                return Err(GenError::BadParams(
                    "planted needs clique_size >= 1 and count >= 1".into(),
                ));
            }
            if !(0.0..=1.0).contains(&bridge_p) {
                return Err(GenError::BadParams(format!(
                    "bridge_p = {bridge_p} outside [0, 1]"
                )));
            }
            let n = clique_size * count;
            for c in 0..count {
                let base = (c * clique_size) as NodeId;
                for i in 0..clique_size as NodeId {
                    for j in (i + 1)..clique_size as NodeId {
                        edges.push((base + i, base + j));
                    }
                }
            }
            if bridge_p > 0.0 {
                for u in 0..n as NodeId {
                    for v in (u + 1)..n as NodeId {
                        if u as usize / clique_size != v as usize / clique_size
                            && rng.gen_bool(bridge_p)
                        {
                            edges.push((u, v));
                        }
                    }
                }
            }
            n
        }
        GenKind::Hypercube { dim } => {
            if dim == 0 || dim > 20 {
                return Err(GenError::BadParams(format!(
                    "hypercube dim = {dim} outside 1..=20"
                )));
            }
            let n = 1usize << dim;
            for u in 0..n as NodeId {
                for b in 0..dim {
                    let v = u ^ (1 << b);
                    if u < v {
                        edges.push((u, v));
                    }
                }
            }
            n
        }
        GenKind::StarForest { centers, leaves } => {
            if centers == 0 {
                return Err(GenError::BadParams("star forest needs a center".into()));
            }
            let stride = leaves + 1;
            for c in 0..centers {
                let center = (c * stride) as NodeId;
                for l in 1..=leaves as NodeId {
                    edges.push((center, center + l));
                }
            }
            centers * stride
        }
    };
    Graph::from_edges(n, &edges).map_err(|e| GenError::BadParams(e.to_string()))
}

fn gen_palettes(
    graph: &Graph,
    mode: PaletteMode,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Palette>, GenError> {
    let n = graph.n();
    match mode {
        PaletteMode::Default => Ok((0..n as NodeId)
            .map(|v| Palette::new((0..=graph.degree(v) as Color).collect()))
            .collect()),
        PaletteMode::Random { extra } => {
            let universe = (n as u64) * (n as u64);
            if universe > u64::from(u32::MAX) {
                return Err(GenError::BadParams(format!(
                    "color universe {universe} exceeds the 32-bit color type"
                )));
            }
            let mut palettes = Vec::with_capacity(n);
            for v in 0..n as NodeId {
                let want = graph.degree(v) + 1 + extra;
                if want as u64 > universe {
                    return Err(GenError::BadParams(format!(
                        "node {v} needs {want} colors but the universe holds {universe}"
                    )));
                }
                let mut set: BTreeSet<Color> = BTreeSet::new();
                while set.len() < want {
                    set.insert(rng.gen_range(0..universe as Color));
                }
                palettes.push(Palette::new(set.into_iter().collect()));
            }
            Ok(palettes)
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<D1LCInstance, GenError> {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let graph = gen_graph(&spec.kind, &mut rng)?;
    let palettes = gen_palettes(&graph, spec.palette, &mut rng)?;
    D1LCInstance::new(graph, palettes).map_err(|e| GenError::BadParams(e.to_string()))
}

/// Edge-list text: one `u v` line per edge plus a node-count header the
/// loader understands (isolated nodes would otherwise be lost).
pub fn graph_text(graph: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# nodes: {}", graph.n());
    for u in 0..graph.n() as NodeId {
        for &v in graph.neighbors(u) {
            if u < v {
                let _ = writeln!(s, "{u} {v}");
            }
        }
    }
    s
}

/// Palette text: `v: c1 c2 ...` per node.
pub fn palette_text(inst: &D1LCInstance) -> String {
    let mut s = String::new();
    for v in 0..inst.n() as NodeId {
        let _ = write!(s, "{v}:");
        for &c in inst.palette(v).colors() {
            let _ = write!(s, " {c}");
        }
        let _ = writeln!(s);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let spec = GenSpec {
            kind: GenKind::Gnp { n: 100, p: 0.1 },
            seed: 1,
            palette: PaletteMode::Random { extra: 2 },
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(graph_text(&a.graph), graph_text(&b.graph));
        assert_eq!(palette_text(&a), palette_text(&b));
        let c = generate(&GenSpec { seed: 2, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn planted_cliques_are_disjoint_complete() {
        let spec = GenSpec {
            kind: GenKind::Planted {
                clique_size: 8,
                count: 4,
                bridge_p: 0.0,
            },
            seed: 7,
            palette: PaletteMode::Default,
        };
        let inst = generate(&spec).unwrap();
        assert_eq!(inst.n(), 32);
        assert_eq!(inst.graph.m(), 4 * 28);
        for v in 0..32 {
            assert_eq!(inst.graph.degree(v), 7);
            for &u in inst.graph.neighbors(v) {
                assert_eq!(u / 8, v / 8, "edge {u}-{v} crosses cliques");
            }
        }
    }

    #[test]
    fn hypercube_degrees_match_dim() {
        let inst = generate(&GenSpec {
            kind: GenKind::Hypercube { dim: 5 },
            seed: 0,
            palette: PaletteMode::Default,
        })
        .unwrap();
        assert_eq!(inst.n(), 32);
        for v in 0..32 {
            assert_eq!(inst.graph.degree(v), 5);
        }
    }

    #[test]
    fn star_forest_shape() {
        let inst = generate(&GenSpec {
            kind: GenKind::StarForest {
                centers: 3,
                leaves: 4,
            },
            seed: 0,
            palette: PaletteMode::Default,
        })
        .unwrap();
        assert_eq!(inst.n(), 15);
        let centers = (0..15).filter(|&v| inst.graph.degree(v) == 4).count();
        let leaves = (0..15).filter(|&v| inst.graph.degree(v) == 1).count();
        assert_eq!((centers, leaves), (3, 12));
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..5 {
            let inst = generate(&GenSpec {
                kind: GenKind::Gnp { n: 60, p: 0.2 },
                seed,
                palette: PaletteMode::Random { extra: 0 },
            })
            .unwrap();
            for v in 0..inst.n() as NodeId {
                assert!(inst.palette(v).len() > inst.graph.degree(v));
            }
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        assert!(generate(&GenSpec {
            kind: GenKind::Gnp { n: 10, p: 1.5 },
            seed: 0,
            palette: PaletteMode::Default,
        })
        .is_err());
        assert!(generate(&GenSpec {
            kind: GenKind::Hypercube { dim: 0 },
            seed: 0,
            palette: PaletteMode::Default,
        })
        .is_err());
    }
}
