use super::layout::{build_layout, search_layout, TreeLayout};
use super::records::*;
use crate::efx_exact::{brute_force_efx_orientation, count_efx_orientations, ExactConfig};
use crate::generators::{gadget_x, random_graph_instance, random_monotone_graph, RandomParams};
use crate::instance::{AgentId, GraphInstance};
use crate::rational::Rational;
use crate::rng::SplitMix64;
use crate::verify::{check_efx, check_orientation};

fn graph(n: usize, edges: &[(usize, usize, i128)]) -> GraphInstance {
    GraphInstance::symmetric(
        (0..n).map(|i| format!("v{i}")).collect(),
        edges
            .iter()
            .enumerate()
            .map(|(k, &(u, v, w))| (u, v, format!("e{k}"), Rational::from_integer(w)))
            .collect(),
        false,
    )
    .unwrap()
}

fn brute(g: &GraphInstance) -> bool {
    brute_force_efx_orientation(g, &ExactConfig::default()).unwrap().is_some()
}

fn assert_agrees(g: &GraphInstance, layout: &TreeLayout) {
    let out = decide_efx(g, layout, true).unwrap();
    assert_eq!(
        out.exists,
        brute(g),
        "layout {} graph {}",
        layout.to_json(g),
        crate::instance::io::serialize_instance(g.instance())
    );
    if let Some(w) = out.witness {
        let a = g.orientation_allocation(&w).unwrap();
        assert!(check_efx(g.instance(), &a).holds, "witness not EFX");
        assert!(check_orientation(g.instance(), &a).holds);
    }
}

/// A random spanning tree of `G` plus a few random extra edges, random root.
fn random_layout(g: &GraphInstance, rng: &mut SplitMix64, extra: usize) -> TreeLayout {
    let n = g.vertex_count();
    let mut h: Vec<(usize, usize)> = g.all_endpoints().iter().map(|&(u, v)| (u.0, v.0)).collect();
    let mut added = Vec::new();
    for _ in 0..extra {
        let (a, b) = (rng.index(n), rng.index(n));
        if a != b {
            added.push((AgentId(a), AgentId(b)));
            h.push((a, b));
        }
    }
    // Connect everything so a spanning tree exists.
    for v in 1..n {
        added.push((AgentId(v - 1), AgentId(v)));
        h.push((v - 1, v));
    }
    rng.shuffle(&mut h);
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(d: &mut [usize], x: usize) -> usize {
        if d[x] != x {
            let r = find(d, d[x]);
            d[x] = r;
        }
        d[x]
    }
    let mut adj = vec![Vec::new(); n];
    for (a, b) in h {
        let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, b));
        if ra != rb {
            dsu[ra] = rb;
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let root = rng.index(n);
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(AgentId(v));
                stack.push(w);
            }
        }
    }
    build_layout(g, &added, &parent, AgentId(root)).unwrap()
}

#[test]
fn gadget_is_a_no_instance() {
    let g = gadget_x(Rational::from_integer(3)).unwrap();
    let l = search_layout(&g, 100_000).unwrap();
    assert!(!decide_efx(&g, &l, true).unwrap().exists);
    assert_eq!(count_efx_orientations(&g, &ExactConfig::default()).unwrap(), 0);
}

#[test]
fn unit_triangle_gives_a_cyclic_witness() {
    let g = graph(3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
    let l = search_layout(&g, 1000).unwrap();
    let out = decide_efx(&g, &l, true).unwrap();
    assert!(out.exists);
    let a = g.orientation_allocation(&out.witness.unwrap()).unwrap();
    assert!(a.bundles().iter().all(|b| b.len() == 1));
}

#[test]
fn weighted_path() {
    let g = graph(3, &[(0, 1, 2), (1, 2, 1)]);
    assert_agrees(&g, &search_layout(&g, 1000).unwrap());
}

#[test]
fn star_root_holds_the_empty_record() {
    let g = graph(4, &[(0, 1, 1), (0, 2, 1), (0, 3, 1)]);
    let parent = vec![None, Some(AgentId(0)), Some(AgentId(0)), Some(AgentId(0))];
    let l = build_layout(&g, &[], &parent, AgentId(0)).unwrap();
    let sets = all_record_sets(&g, &l).unwrap();
    assert!(sets[0].contains(&Record { r: 0, s: 0 }));
    assert!(brute(&g));
}

#[test]
fn single_edge_leaf_records() {
    // Leaf v1 under root v0; crossing edge e0, boundary [0, 1].
    let g = graph(2, &[(0, 1, 1)]);
    let l = build_layout(&g, &[], &[None, Some(AgentId(0))], AgentId(0)).unwrap();
    let got = leaf_records(&g, &l, AgentId(1)).unwrap().sorted();
    // r = 0: v0 holds the edge and v1 envies it, so S = {v0}.
    // r = 1: v1 holds it; S ⊆ {v1}.
    let want = vec![Record { r: 0, s: 0b01 }, Record { r: 1, s: 0 }, Record { r: 1, s: 0b10 }];
    assert_eq!(got, want);
}

#[test]
fn isolated_leaf_has_only_the_empty_record() {
    let g = graph(3, &[(0, 1, 1)]);
    let l = search_layout(&g, 1000).unwrap();
    assert_eq!(leaf_records(&g, &l, AgentId(2)).unwrap().sorted(), vec![Record { r: 0, s: 0 }]);
}

#[test]
fn empty_child_set_empties_the_parent() {
    let g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
    let l = build_layout(&g, &[], &[None, Some(AgentId(0)), Some(AgentId(1))], AgentId(0)).unwrap();
    let empty = RecordSet::default();
    assert!(combine_records(&g, &l, AgentId(1), &[&empty]).unwrap().is_empty());
}

#[test]
fn combining_without_children_matches_leaf_enumeration() {
    let mut rng = SplitMix64::new(7);
    for seed in 0..200u64 {
        let p = RandomParams {
            agents: 5,
            items: 1 + (seed % 8) as usize,
            max_weight: 3,
            ..RandomParams::default()
        };
        let g = random_graph_instance(&p, false, seed).unwrap();
        let l = random_layout(&g, &mut rng, 1);
        for v in l.postorder() {
            if l.children(v).next().is_none() && !l.is_closed(v) {
                let a = leaf_records(&g, &l, v).unwrap().sorted();
                let b = combine_records(&g, &l, v, &[]).unwrap().sorted();
                assert_eq!(a, b, "seed {seed} vertex {}", v.0);
            }
        }
    }
}

#[test]
fn closed_children_keep_canonical_records() {
    let mut rng = SplitMix64::new(3);
    for seed in 0..100u64 {
        let p = RandomParams {
            agents: 6,
            items: 6,
            max_weight: 3,
            ..RandomParams::default()
        };
        let g = random_graph_instance(&p, false, seed).unwrap();
        let l = random_layout(&g, &mut rng, 0);
        let sets = all_record_sets(&g, &l).unwrap();
        for v in l.postorder() {
            if l.is_closed(v) {
                assert!(sets[v.0].len() <= 4);
                for rec in sets[v.0].records() {
                    let b = l.boundary(v);
                    let p = l.parent(v).unwrap().0;
                    let pb = 1u64 << b.binary_search(&p).unwrap();
                    let cb = 1u64 << b.binary_search(&v.0).unwrap();
                    let ok = matches!((rec.r, rec.s), (0, 0) | (1, 0)) || (rec.r, rec.s) == (0, pb) || (rec.r, rec.s) == (1, cb);
                    assert!(ok, "{rec:?}");
                }
            }
        }
    }
}

#[test]
fn small_catalog_matches_brute_force() {
    let catalog: Vec<(usize, Vec<(usize, usize)>)> = vec![
        (2, vec![(0, 1)]),
        (3, vec![(0, 1), (1, 2)]),
        (3, vec![(0, 1), (1, 2), (2, 0)]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
        (4, vec![(0, 1), (0, 2), (0, 3)]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
        (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        (5, vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]),
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (0, 3)]),
        (6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3), (1, 4), (2, 5)]),
    ];
    let mut rng = SplitMix64::new(11);
    for (n, edges) in &catalog {
        for _ in 0..20 {
            let weighted: Vec<(usize, usize, i128)> =
                edges.iter().map(|&(u, v)| (u, v, rng.range(0, 4) as i128)).collect();
            let g = graph(*n, &weighted);
            assert_agrees(&g, &search_layout(&g, 100_000).unwrap());
            assert_agrees(&g, &random_layout(&g, &mut rng, 2));
        }
    }
}

#[test]
fn random_graphs_match_brute_force() {
    let mut rng = SplitMix64::new(5);
    for seed in 0..300u64 {
        let p = RandomParams {
            agents: 3 + (seed % 5) as usize,
            items: 0,
            max_weight: 4,
            ..RandomParams::default()
        };
        let max_edges = p.agents * (p.agents - 1) / 2;
        let p = RandomParams {
            items: 1 + rng.index(max_edges.min(10)),
            ..p
        };
        let g = random_graph_instance(&p, false, seed).unwrap();
        assert_agrees(&g, &search_layout(&g, 20_000).unwrap());
        if seed % 3 == 0 {
            assert_agrees(&g, &random_layout(&g, &mut rng, 2));
        }
    }
}

#[test]
fn monotone_tables_match_brute_force() {
    let mut rng = SplitMix64::new(9);
    for seed in 0..150u64 {
        let p = RandomParams {
            agents: 3 + (seed % 4) as usize,
            items: 0,
            max_weight: 3,
            ..RandomParams::default()
        };
        let max_edges = p.agents * (p.agents - 1) / 2;
        let p = RandomParams {
            items: 1 + rng.index(max_edges.min(8)),
            ..p
        };
        let g = random_monotone_graph(&p, seed).unwrap();
        assert_agrees(&g, &search_layout(&g, 20_000).unwrap());
        assert_agrees(&g, &random_layout(&g, &mut rng, 1));
    }
}

#[test]
fn witness_edges_are_all_oriented() {
    let g = graph(5, &[(0, 1, 1), (1, 2, 2), (2, 3, 1), (3, 4, 2)]);
    let l = search_layout(&g, 1000).unwrap();
    let w = decide_efx(&g, &l, true).unwrap().witness.unwrap();
    assert_eq!(w.0.len(), 4);
}

