//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p fdcolor --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::time::Instant;

use fdcolor_core::decomp::{break_cycles, marked_edges, random_functional_digraph};
use fdcolor_core::graph::Graph;
use fdcolor_core::line::{
    exact_line_distribution, sample_line, sample_line_rejection, Topology,
};
use fdcolor_core::pipeline::{color, flatten, Variant};
use fdcolor_core::randomness::{mix64, ComponentStream, VertexRandomness};
use fdcolor_core::verify::{
    check_k_dependence_exact, check_properness, check_window_pair, exact_pipeline_distribution,
    key_from_tuples, qualifying_pairs, singleton_dependence_horizon, ExactCaps,
};
use fdcolor::mc::{check_k_dependence_mc, McConfig, PipelineSampler};

fn announce(criterion: usize, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion:02} [{tag}] {detail}");
    assert!(pass, "criterion {criterion}: {detail}");
}

fn test_graphs() -> Vec<(&'static str, Graph)> {
    vec![
        ("P10", Graph::path(10).unwrap()),
        ("C9", Graph::cycle(9).unwrap()),
        ("torus5x5", Graph::torus(5, 5).unwrap()),
        ("random3regular50", Graph::random_regular(50, 3, 0xfdc0).unwrap()),
        ("tree3depth4", Graph::truncated_tree(3, 4).unwrap()),
    ]
}

/// Criteria 1 and 2: zero-tolerance properness over 10^4 samples per variant
/// per graph, and the flattened palette bound q^(d(d+1)/2).
#[test]
fn acceptance_01_02_properness_and_palette() {
    let started = Instant::now();
    let graphs = test_graphs();
    let results: Vec<(String, bool, bool, usize, u64)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (name, g) in &graphs {
            for variant in [Variant::Invariant, Variant::Fiid] {
                handles.push(scope.spawn(move || {
                    let master = VertexRandomness::new(0xacce_55ed ^ mix64(variant.palette() as u64));
                    let mut all_proper = true;
                    let mut distinct: BTreeSet<u64> = BTreeSet::new();
                    for trial in 0..10_000u64 {
                        let a = color(g, variant, &master.derive_trial(trial)).unwrap();
                        if !a.is_proper(g) {
                            all_proper = false;
                            break;
                        }
                        for c in flatten(&a).unwrap() {
                            distinct.insert(c);
                        }
                    }
                    let d = g.max_degree_bound();
                    let bound = (variant.palette() as u64).pow((d * (d + 1) / 2) as u32);
                    let within = (distinct.len() as u64) <= bound;
                    (format!("{name}/{}", variant.name()), all_proper, within, distinct.len(), bound)
                }));
            }
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let elapsed = started.elapsed();
    for (label, proper, within, seen, bound) in &results {
        assert!(*proper, "improper sample on {label}");
        assert!(*within, "{label}: {seen} distinct colors exceeds {bound}");
    }
    let all = results.iter().all(|r| r.1 && r.2);
    announce(
        1,
        all,
        &format!("10^4 samples per variant on 5 graphs all proper ({elapsed:.2?})"),
    );
    announce(
        2,
        all && elapsed.as_secs() < 60,
        &format!(
            "palette bounds hold on every graph, e.g. {}",
            results
                .iter()
                .map(|(l, _, _, s, b)| format!("{l}:{s}<={b}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
}

/// Criterion 3: exact line dependence for paths. q=4 is 1-dependent for all
/// n <= 8 with discrepancy exactly zero; q=3 is 2-dependent, and fails
/// 1-dependence for some n <= 8 (the negative control).
#[test]
fn acceptance_03_path_oracle_dependence() {
    let results: Vec<(u8, usize, bool, bool)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for q in [4u8, 3] {
            for n in 1..=8usize {
                handles.push(scope.spawn(move || {
                    let dist = exact_line_distribution(Topology::Path, n, q).unwrap();
                    let k = if q == 4 { 1 } else { 2 };
                    let holds = dist.check_k_dependence(k).holds;
                    let one_dep = if q == 3 { dist.check_k_dependence(1).holds } else { true };
                    (q, n, holds, one_dep)
                }));
            }
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let q4_all = results.iter().filter(|r| r.0 == 4).all(|r| r.2);
    let q3_all = results.iter().filter(|r| r.0 == 3).all(|r| r.2);
    let q3_one_dep_fails = results.iter().any(|r| r.0 == 3 && !r.3);
    announce(
        3,
        q4_all && q3_all && q3_one_dep_fails,
        &format!(
            "q=4 paths 1-dependent (n<=8): {q4_all}; q=3 paths 2-dependent: {q3_all}; \
             q=3 1-dependence fails somewhere (negative control): {q3_one_dep_fails}"
        ),
    );
}

/// Criterion 4: the cyclic insertion measure with q=4 is exactly 1-dependent
/// on cycles of length 3..=7. A failure here is a finding about the chosen
/// realization of the cycle coloring, not a tolerance issue.
#[test]
fn acceptance_04_cycle_oracle_dependence() {
    let results: Vec<(usize, bool)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (3..=7usize)
            .map(|n| {
                scope.spawn(move || {
                    let dist = exact_line_distribution(Topology::Cycle, n, 4).unwrap();
                    (n, dist.check_k_dependence(1).holds)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let all = results.iter().all(|r| r.1);
    announce(
        4,
        all,
        &format!(
            "q=4 cyclic insertion measure 1-dependent with zero discrepancy for n=3..7: {:?}",
            results
        ),
    );
}

/// Criterion 5: marginalizing either endpoint of the exact path distribution
/// of length n gives exactly the length n-1 distribution, for n <= 9. This
/// is what justifies coloring finite paths directly instead of embedding
/// them into longer ones.
#[test]
fn acceptance_05_path_consistency() {
    let mut all = true;
    for q in [3u8, 4] {
        for n in 2..=9usize {
            let big = exact_line_distribution(Topology::Path, n, q).unwrap();
            let small = exact_line_distribution(Topology::Path, n - 1, q).unwrap();
            let last = big.marginalize_endpoint(true).unwrap().same_law(&small);
            let first = big.marginalize_endpoint(false).unwrap().same_law(&small);
            if !(last && first) {
                all = false;
                println!("  consistency broke at q={q} n={n}: last={last} first={first}");
            }
        }
    }
    announce(5, all, "endpoint marginalization is exact for n<=9, q in {3,4}");
}

/// Criterion 6: over 10^4 random functional digraphs the local-maximum
/// marking leaves no directed cycle, no isolated vertex, never marks two
/// consecutive edges, and is radius-2 local in the xi values.
#[test]
fn acceptance_06_cycle_breaking_lemma() {
    let mut state = 0x6c_656d_6d61u64;
    let mut next = || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix64(state)
    };
    let mut checked = 0usize;
    let mut ok = true;
    for round in 0..10_000usize {
        let n = 2 + (next() % 999) as usize;
        let d = random_functional_digraph(n, next());
        let rng = VertexRandomness::new(next());
        let keys: Vec<u64> = (0..n).map(|v| rng.word(v, "xi", 0)).collect();
        let marked = marked_edges(&d, &|v: usize| keys[v]).unwrap();
        let broken = break_cycles(&d, &rng, 0).unwrap();
        if broken.has_directed_cycle() {
            ok = false;
            println!("  directed cycle survived at round {round}");
            break;
        }
        if !broken.isolated_vertices(&vec![true; n]).is_empty() {
            ok = false;
            println!("  isolated vertex at round {round}");
            break;
        }
        for (x, e) in d.out.iter().enumerate() {
            if marked[x] && marked[e.unwrap().head] {
                ok = false;
                println!("  consecutive marked edges at round {round}");
                break;
            }
        }
        checked += 1;
    }
    // Radius-2 locality by perturbation, on a subsample.
    let mut locality_ok = true;
    'outer: for round in 0..100usize {
        let n = 30;
        let d = random_functional_digraph(n, round as u64);
        let rng = VertexRandomness::new(round as u64 ^ 0xfeed);
        let keys: Vec<u64> = (0..n).map(|v| rng.word(v, "xi", 0)).collect();
        let marked = marked_edges(&d, &|v: usize| keys[v]).unwrap();
        // distance in the undirected functional graph
        let edges: Vec<(usize, usize)> = d
            .directed_edges()
            .iter()
            .map(|&(x, y, _)| (x.min(y), x.max(y)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let und = Graph::from_edges(n, &edges).unwrap();
        let v = (mix64(round as u64) % n as u64) as usize;
        let dist = und.bfs(&[v]);
        for salt in 1..=5u64 {
            let mut perturbed = keys.clone();
            for (u, p) in perturbed.iter_mut().enumerate() {
                if dist[u].is_none_or(|du| du > 2) {
                    *p = mix64(keys[u] ^ salt);
                }
            }
            let marked2 = marked_edges(&d, &|u: usize| perturbed[u]).unwrap();
            if marked[v] != marked2[v] {
                locality_ok = false;
                break 'outer;
            }
            for (x, e) in d.out.iter().enumerate() {
                if e.unwrap().head == v && marked[x] != marked2[x] {
                    locality_ok = false;
                    break 'outer;
                }
            }
        }
    }
    announce(
        6,
        ok && checked == 10_000 && locality_ok,
        &format!(
            "{checked}/10^4 functional digraphs: acyclic, no isolated vertices, \
             no consecutive marks; radius-2 locality held on 100 perturbed digraphs"
        ),
    );
}

fn permutations_upto(n: usize) -> Vec<Vec<usize>> {
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for p in &perms {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        perms = next;
    }
    perms
}

/// All connected graphs with <= max_n vertices and max degree <= max_deg,
/// one labeled representative per isomorphism class.
fn small_connected_graphs(max_n: usize, max_deg: usize) -> Vec<Graph> {
    let mut reps = Vec::new();
    for n in 1..=max_n {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
        let perms = permutations_upto(n);
        let mut seen = BTreeSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = (0..pairs.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| pairs[i])
                .collect();
            let g = Graph::from_edges(n, &edges).unwrap();
            if g.max_degree_bound() > max_deg || !g.is_connected() {
                continue;
            }
            let canon = perms
                .iter()
                .map(|p| {
                    let mut remapped: Vec<(usize, usize)> = edges
                        .iter()
                        .map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b])))
                        .collect();
                    remapped.sort_unstable();
                    remapped
                })
                .min()
                .unwrap();
            if seen.insert(canon) {
                reps.push(g);
            }
        }
    }
    reps
}

/// Criterion 7: exact pipeline dependence on every connected graph with at
/// most 5 vertices and max degree at most 3. The invariant variant must be
/// exactly 2-dependent; the finitary variant exactly 4-dependent. No window
/// pair on 5 vertices reaches distance > 4, so that claim is vacuous here
/// and is additionally exercised on P6, where distance 5 exists.
#[test]
fn acceptance_07_exact_pipeline_dependence() {
    let started = Instant::now();
    let graphs = small_connected_graphs(5, 3);
    // Curated 6-vertex instances; P6 is the only 6-vertex graph with
    // diameter 5, so the finitary side gains nothing beyond it. Everything
    // runs sequentially: one exact joint in memory at a time.
    let spider = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)]).unwrap();
    let six_vertex = [Graph::path(6).unwrap(), Graph::cycle(6).unwrap(), spider];
    let mut results: Vec<(String, bool, usize, bool, usize)> = Vec::new();
    for g in &graphs {
        let desc = format!("n={} edges={:?}", g.vertex_count(), g.edges());
        let mut inv =
            exact_pipeline_distribution(g, Variant::Invariant, ExactCaps::default()).unwrap();
        let inv_report = check_k_dependence_exact(&mut inv, 2, 2).unwrap();
        drop(inv);
        let mut fiid = exact_pipeline_distribution(g, Variant::Fiid, ExactCaps::default()).unwrap();
        let fiid_report = check_k_dependence_exact(&mut fiid, 4, 2).unwrap();
        results.push((
            desc,
            inv_report.verdict,
            inv_report.pairs.len(),
            fiid_report.verdict,
            fiid_report.pairs.len(),
        ));
    }
    let mut six_ok = true;
    let mut six_pairs = 0usize;
    for g6 in &six_vertex {
        for (a, b, _) in qualifying_pairs(g6, 2, 2) {
            let mut j6 =
                exact_pipeline_distribution(g6, Variant::Invariant, ExactCaps::default()).unwrap();
            let disc = check_window_pair(&mut j6, &a, &b).unwrap();
            six_pairs += 1;
            if !disc.is_zero() {
                six_ok = false;
                println!("  6-vertex dependence failure on {:?}: {a:?} vs {b:?}", g6.edges());
            }
        }
    }
    let mut inv_pairs = 0usize;
    let mut fiid_pairs = 0usize;
    let mut all = true;
    for (desc, inv_ok, inv_n, fiid_ok, fiid_n) in &results {
        inv_pairs += inv_n;
        fiid_pairs += fiid_n;
        if !(inv_ok & fiid_ok) {
            all = false;
            println!("  dependence failure on {desc}");
        }
    }
    // Distance > 4 does not exist on <= 5 connected vertices; the finitary
    // claim gets a real pair on P6.
    let p6 = Graph::path(6).unwrap();
    let mut joint = exact_pipeline_distribution(&p6, Variant::Fiid, ExactCaps::default()).unwrap();
    let p6_report = check_k_dependence_exact(&mut joint, 4, 2).unwrap();
    // Measured horizons: the largest distance at which some singleton pair
    // still shows exact dependence. Reported as observations; no claim about
    // smaller k is asserted.
    let mut p5_inv =
        exact_pipeline_distribution(&Graph::path(5).unwrap(), Variant::Invariant, ExactCaps::default())
            .unwrap();
    let inv_horizon = singleton_dependence_horizon(&mut p5_inv).unwrap();
    let fiid_horizon = singleton_dependence_horizon(&mut joint).unwrap();
    let elapsed = started.elapsed();
    announce(
        7,
        all && fiid_pairs == 0 && p6_report.pairs.len() == 1 && p6_report.verdict
            && six_ok && inv_horizon <= 2 && fiid_horizon <= 4,
        &format!(
            "{} graphs: invariant k=2 zero discrepancy over {inv_pairs} window pairs; \
             fiid k=4 vacuous on <=5 vertices ({fiid_pairs} pairs) and exact on P6 \
             (1 pair at distance 5); 6-vertex extras (P6, C6, spider) add {six_pairs} \
             zero-discrepancy invariant pairs; measured singleton dependence horizon: \
             invariant/P5 = {inv_horizon}, fiid/P6 = {fiid_horizon} ({elapsed:.2?})",
            results.len()
        ),
    );
}

/// Criterion 8: Monte Carlo dependence at scale. All qualifying window TV
/// estimates stay inside their noise radii, and adjacent-window controls
/// detect dependence, confirming the test has power.
#[test]
fn acceptance_08_monte_carlo_at_scale() {
    let cfg = McConfig { trials: 100_000, ..McConfig::default() };

    let torus = Graph::torus(5, 5).unwrap();
    let torus_sampler = PipelineSampler {
        graph: &torus,
        variant: Variant::Fiid,
        master: VertexRandomness::new(0x70f5),
    };
    let torus_report = check_k_dependence_mc(&torus, &torus_sampler, 4, 0x70f5, &cfg).unwrap();

    let tree = Graph::truncated_tree(3, 4).unwrap();
    let tree_sampler = PipelineSampler {
        graph: &tree,
        variant: Variant::Invariant,
        master: VertexRandomness::new(0x7213),
    };
    let tree_report = check_k_dependence_mc(&tree, &tree_sampler, 2, 0x7213, &cfg).unwrap();

    let torus_ok = torus_report.verdict && torus_report.control_dependence_detected;
    // The 5x5 torus has diameter 4, so no window pair sits at distance > 4;
    // the PASS is vacuous there and the control carries the information.
    let tree_ok = tree_report.verdict
        && tree_report.control_dependence_detected
        && !tree_report.pairs.is_empty();
    let tightest = tree_report
        .pairs
        .iter()
        .max_by(|a, b| (a.tv - a.radius).partial_cmp(&(b.tv - b.radius)).unwrap())
        .unwrap();
    announce(
        8,
        torus_ok && tree_ok,
        &format!(
            "torus5x5 fiid k=4: verdict={} over {} pairs (diameter 4 makes the claim vacuous; \
             control TV {:.4} > radius {:.4}); tree3depth4 invariant k=2: verdict={} over {} pairs \
             (tightest pair tv {:.4} within its radius {:.4}; control detected={})",
            torus_report.verdict,
            torus_report.pairs.len(),
            torus_report.controls[0].tv,
            torus_report.controls[0].radius,
            tree_report.verdict,
            tree_report.pairs.len(),
            tightest.tv,
            tightest.radius,
            tree_report.control_dependence_detected,
        ),
    );
}

/// Criterion 9: byte-identical replays of every CLI command with the same
/// seed.
#[test]
fn acceptance_09_cli_determinism() {
    let run = |args: &[&str]| -> (Option<i32>, Vec<u8>) {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_fdcolor"))
            .args(args)
            .env_remove("FDCOLOR_SEED")
            .output()
            .expect("binary runs");
        (out.status.code(), out.stdout)
    };
    let commands: Vec<Vec<&str>> = vec![
        vec!["sample", "--gen", "path:10", "--variant", "fiid", "--seed", "7"],
        vec!["sample", "--gen", "torus:4x4", "--variant", "invariant", "--seed", "9"],
        vec!["verify", "--gen", "cycle:5", "--variant", "invariant", "--k", "2", "--exact", "--seed", "3"],
        vec![
            "verify", "--gen", "tree:3,3", "--variant", "fiid", "--k", "4", "--mc", "--trials",
            "2000", "--seed", "11", "--jobs", "3",
        ],
        vec!["oracle", "--topology", "cycle", "--n", "5", "--q", "4"],
    ];
    let mut all = true;
    for args in &commands {
        let (code1, out1) = run(args);
        let (code2, out2) = run(args);
        if code1 != code2 || out1 != out2 {
            all = false;
            println!("  replay diverged for {args:?}");
        }
    }
    // different seeds give different colorings
    let (_, a) = run(&["sample", "--gen", "path:10", "--variant", "fiid", "--seed", "7"]);
    let (_, b) = run(&["sample", "--gen", "path:10", "--variant", "fiid", "--seed", "8"]);
    announce(
        9,
        all && a != b,
        "5 CLI commands replay byte-identically; distinct seeds differ",
    );
}

/// Criterion 10: empirical frequencies from 10^5 samples match exact
/// probabilities within 4-sigma multinomial bounds on every oracle-capped
/// instance in the corpus (line measures and tiny pipeline joints).
#[test]
fn acceptance_10_empirical_exact_agreement() {
    let trials = 100_000u64;
    let mut all = true;
    let mut worst: f64 = 0.0;

    // Line instances.
    let line_instances = [
        (Topology::Path, 2usize, 3u8),
        (Topology::Path, 4, 3),
        (Topology::Path, 6, 3),
        (Topology::Path, 2, 4),
        (Topology::Path, 4, 4),
        (Topology::Path, 6, 4),
        (Topology::Cycle, 3, 4),
        (Topology::Cycle, 5, 4),
        (Topology::Cycle, 5, 3),
    ];
    for (topo, n, q) in line_instances {
        let dist = exact_line_distribution(topo, n, q).unwrap();
        let verts: Vec<usize> = (0..n).collect();
        let master = VertexRandomness::new(0x10aa ^ mix64(n as u64 * 31 + q as u64));
        let mut counts: std::collections::HashMap<Vec<u8>, u64> = std::collections::HashMap::new();
        for t in 0..trials {
            let rng = master.derive_trial(t);
            let mut stream = ComponentStream::new(&rng, &verts, "agree");
            let sample = match topo {
                Topology::Path => sample_line(topo, n, q, &mut stream).unwrap(),
                Topology::Cycle => {
                    sample_line_rejection(topo, n, q, &mut stream, 10_000_000).unwrap()
                }
            };
            *counts.entry(sample.colors).or_insert(0) += 1;
        }
        for (seq, w) in dist.support() {
            let p = w as f64 / dist.total() as f64;
            let freq = counts.get(seq).copied().unwrap_or(0) as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let z = (freq - p).abs() / sigma;
            worst = worst.max(z);
            if (freq - p).abs() >= 4.0 * sigma + 1.0 / trials as f64 {
                all = false;
                println!("  line {topo} n={n} q={q}: seq {seq:?} off by {z:.2} sigma");
            }
        }
    }

    // Tiny pipeline instances against the exact joint. The per-cell 4-sigma
    // band needs expected counts commensurate with the trial budget, so on
    // the three-vertex instances the comparison runs on projections (each
    // level block jointly over all vertices, and each vertex's full tuple);
    // membership in the exact support stays zero-tolerance on the full keys.
    let pipeline_instances: Vec<(&str, Graph, Variant)> = vec![
        ("edge/invariant", Graph::from_edges(2, &[(0, 1)]).unwrap(), Variant::Invariant),
        ("edge/fiid", Graph::from_edges(2, &[(0, 1)]).unwrap(), Variant::Fiid),
        ("P3/invariant", Graph::path(3).unwrap(), Variant::Invariant),
        ("triangle/invariant", Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap(), Variant::Invariant),
    ];
    for (name, g, variant) in pipeline_instances {
        let n = g.vertex_count();
        let d = g.max_degree_bound();
        let arity = d * (d + 1) / 2;
        let mut joint = exact_pipeline_distribution(&g, variant, ExactCaps::default()).unwrap();
        let full = joint.full_joint().unwrap();
        let s: Vec<usize> = (0..n).collect();
        // Projections: the full key when small, else per-level blocks plus
        // per-vertex tuples.
        let mut projections: Vec<(String, Vec<usize>)> = Vec::new();
        let key_len = n * arity;
        if full.map.len() <= 1000 {
            projections.push(("full".into(), (0..key_len).collect()));
        } else {
            let mut offset = 0usize;
            for bound in (1..=d).rev() {
                projections.push((
                    format!("level{bound}"),
                    (offset..offset + n * bound).collect(),
                ));
                offset += n * bound;
            }
            for v in 0..n {
                let mut slots = Vec::new();
                let mut offset = 0usize;
                for bound in (1..=d).rev() {
                    slots.extend(offset + v * bound..offset + (v + 1) * bound);
                    offset += n * bound;
                }
                projections.push((format!("vertex{v}"), slots));
            }
        }
        let master = VertexRandomness::new(0xa9fe ^ mix64(name.len() as u64));
        let mut counts: std::collections::HashMap<Vec<u8>, u64> = std::collections::HashMap::new();
        let mut outside_support = 0u64;
        for t in 0..trials {
            let a = color(&g, variant, &master.derive_trial(t)).unwrap();
            assert!(check_properness(&g, &a.tuples).unwrap());
            let key = key_from_tuples(&s, d, &a.tuples);
            if !full.map.contains_key(&key) {
                outside_support += 1;
            }
            *counts.entry(key).or_insert(0) += 1;
        }
        if outside_support > 0 {
            all = false;
            println!("  pipeline {name}: {outside_support} samples outside the exact support");
        }
        use num_traits::ToPrimitive;
        for (proj_name, slots) in &projections {
            let mut exact_proj: std::collections::HashMap<Vec<u8>, f64> =
                std::collections::HashMap::new();
            let den = full.den.to_f64().unwrap();
            for (key, num) in &full.map {
                let sub: Vec<u8> = slots.iter().map(|&i| key[i]).collect();
                *exact_proj.entry(sub).or_insert(0.0) += num.to_f64().unwrap() / den;
            }
            let mut emp_proj: std::collections::HashMap<Vec<u8>, u64> =
                std::collections::HashMap::new();
            for (key, c) in &counts {
                let sub: Vec<u8> = slots.iter().map(|&i| key[i]).collect();
                *emp_proj.entry(sub).or_insert(0) += c;
            }
            for (sub, p) in &exact_proj {
                let freq = emp_proj.get(sub).copied().unwrap_or(0) as f64 / trials as f64;
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                let z = (freq - p).abs() / sigma;
                worst = worst.max(z);
                if (freq - p).abs() >= 4.0 * sigma + 1.0 / trials as f64 {
                    all = false;
                    println!("  pipeline {name}/{proj_name}: outcome {sub:?} off by {z:.2} sigma");
                }
            }
        }
    }
    announce(
        10,
        all,
        &format!("10^5-sample frequencies within 4-sigma bands on 13 instances (worst z={worst:.2})"),
    );
}
