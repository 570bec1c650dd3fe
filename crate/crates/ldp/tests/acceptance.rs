//! Acceptance gate: one test per release criterion, each printing a
//! single PASS line (run with `cargo test --test acceptance -- --nocapture`
//! to see them). Every check compares against the exhaustive oracles or a
//! stated contract with a pinned tolerance.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ldp::cut_factor::{CutEdge, CutFactor, CutVar};
use ldp::decomposition::Decomposition;
use ldp::flow::{Direction, FlowFactor, FlowVar};
use ldp::generate::{generate_instance, random_instance};
use ldp::instance::{compute_reachability, Instance, NodeId};
use ldp::interval::{solve_interval, IntervalConfig};
use ldp::oracle::{
    enumerate_cut_factor, enumerate_flow_factor, enumerate_path_factor, evaluate_paths, exact_ldp,
};
use ldp::path_factor::{PathEdge, PathFactor};
use ldp::primal::{local_search, Solution};
use ldp::separation::{extract_separation_costs, install_candidates, separate_cuts, separate_paths};
use ldp::solver::{run, SolverConfig};

const TOL: f64 = 1e-9;

fn random_flow_factors(seed_range: std::ops::Range<u64>, want: usize) -> Vec<FlowFactor> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut out = Vec::new();
    for seed in seed_range {
        let inst = random_instance(4, 2, seed);
        let reach = compute_reachability(&inst, u32::MAX);
        for dir in [Direction::Outflow, Direction::Inflow] {
            for v in 0..inst.num_nodes {
                let mut f = FlowFactor::new(&inst, &reach, v, dir);
                if f.subgraph_size() > 8 {
                    continue;
                }
                f.node_theta = rng.gen_range(-1.0..=1.0);
                for s in f.base.iter_mut() {
                    s.theta = rng.gen_range(-1.0..=1.0);
                }
                for s in f.lifted.iter_mut() {
                    s.theta = rng.gen_range(-1.0..=1.0);
                }
                out.push(f);
                if out.len() == want {
                    return out;
                }
            }
        }
    }
    panic!("not enough small flow factors in the seed range");
}

fn random_path_factor(rng: &mut ChaCha8Rng) -> PathFactor {
    let len = rng.gen_range(1..=5);
    let edges: Vec<PathEdge> = (0..len)
        .map(|i| PathEdge {
            edge_id: 100 + i,
            tail: i,
            head: i + 1,
            lifted: rng.gen_bool(0.3),
            strong: rng.gen_bool(0.5),
            theta: rng.gen_range(-1.0..=1.0),
        })
        .collect();
    PathFactor::new((0, len), edges, 99, rng.gen_range(-1.0..=1.0))
}

fn random_cut_factor(rng: &mut ChaCha8Rng) -> CutFactor {
    let ne = rng.gen_range(1..=5);
    let mut edges = Vec::new();
    for i in 0..ne {
        let tail = if i == 0 { 0 } else { rng.gen_range(0..4) };
        let head = if i == 0 && rng.gen_bool(0.4) {
            10
        } else {
            rng.gen_range(10..14)
        };
        edges.push(CutEdge {
            edge_id: 200 + i,
            tail,
            head,
            theta: rng.gen_range(-1.0..=1.0),
        });
    }
    edges.sort_by_key(|e| (e.tail, e.head));
    edges.dedup_by_key(|e| (e.tail, e.head));
    CutFactor::new(0, (0, 10), rng.gen_range(-1.5..=1.5), edges)
}

/// Criterion 1: every subproblem optimizer matches exhaustive enumeration
/// on 200 random factors of each kind, within 1e-9, in under 10 seconds.
#[test]
fn criterion_1_factor_optimizers_exact() {
    let start = Instant::now();
    for f in random_flow_factors(0..100, 200) {
        let brute = enumerate_flow_factor(&f, 8)
            .unwrap()
            .iter()
            .map(|l| l.value)
            .fold(f64::INFINITY, f64::min);
        assert!((f.optimize().opt - brute).abs() < TOL);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let f = random_path_factor(&mut rng);
        let brute = enumerate_path_factor(&f, 16)
            .unwrap()
            .iter()
            .map(|&(v, _)| v)
            .fold(f64::INFINITY, f64::min);
        assert!((f.optimize() - brute).abs() < TOL);
    }
    for _ in 0..200 {
        let f = random_cut_factor(&mut rng);
        let brute = enumerate_cut_factor(&f, 16)
            .unwrap()
            .iter()
            .map(|&(v, _)| v)
            .fold(f64::INFINITY, f64::min);
        assert!((f.optimize() - brute).abs() < TOL);
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "took {secs:.1}s");
    println!("PASS criterion 1: factor optimizers exact on 3x200 random factors ({secs:.2}s)");
}

/// Criterion 2: flow-factor min-marginals match the naive constrained
/// definition on 100 random factors, one variable at a time and as
/// sequentially exact batches, within 1e-9, in under 10 seconds.
#[test]
fn criterion_2_min_marginals_exact() {
    let start = Instant::now();
    for f in random_flow_factors(100..200, 100) {
        let mut vars = vec![FlowVar::Node];
        vars.extend((0..f.base.len() as u32).map(FlowVar::Base));
        vars.extend((0..f.lifted.len() as u32).map(FlowVar::Lifted));
        for &var in &vars {
            assert!((f.min_marginal(var) - f.min_marginal_naive(var)).abs() < TOL);
        }
        // Batched lifted marginals replayed against the naive definition.
        let batch = f.all_lifted_min_marginals();
        let mut g = f.clone();
        for &slot in &batch.order {
            let naive = g.min_marginal_naive(FlowVar::Lifted(slot));
            assert!((batch.gamma[slot as usize] - naive).abs() < TOL);
            g.lifted[slot as usize].theta -= naive;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "took {secs:.1}s");
    println!("PASS criterion 2: min-marginals exact on 100 random flow factors ({secs:.2}s)");
}

/// Criterion 3: the certified lower bound never decreases over the run,
/// on 50 random instances of up to 12 nodes and 5 frames.
#[test]
fn criterion_3_dual_monotonicity() {
    for seed in 0..50u64 {
        let frames = 3 + (seed % 3) as u32;
        let inst = random_instance(frames, 2, seed);
        let report = run(&inst, &SolverConfig::default());
        for w in report.iterations.windows(2) {
            assert!(
                w[1].lower_bound >= w[0].lower_bound - TOL,
                "seed {seed}: bound dropped {} -> {}",
                w[0].lower_bound,
                w[1].lower_bound
            );
        }
    }
    println!("PASS criterion 3: lower bound monotone on 50 random instances");
}

/// Criterion 4: weak duality holds everywhere and on at least 45 of 50
/// random instances the primal objective is within 2% of the exact
/// optimum, with default settings, in under 60 seconds.
#[test]
fn criterion_4_bound_sandwich_and_quality() {
    let start = Instant::now();
    let mut close = 0;
    for seed in 0..50u64 {
        let inst = random_instance(5, 2, seed);
        let (opt, _) = exact_ldp(&inst, 14).unwrap();
        let report = run(&inst, &SolverConfig::default());
        assert!(report.lower_bound <= opt + TOL, "seed {seed}: lb above optimum");
        assert!(
            report.solution.objective >= opt - TOL,
            "seed {seed}: ub below optimum"
        );
        assert!(report.solution.validate(&inst), "seed {seed}: invalid solution");
        let rel = (report.solution.objective - opt) / opt.abs().max(1.0);
        if rel <= 0.02 {
            close += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(close >= 45, "only {close}/50 within 2%");
    assert!(secs < 60.0, "took {secs:.1}s");
    println!("PASS criterion 4: weak duality on 50/50, within 2% on {close}/50 ({secs:.2}s)");
}

/// Criterion 5: without lifted edges the duality gap closes to 1e-9 by
/// the first primal round, on 20 random pure-flow instances.
#[test]
fn criterion_5_pure_flow_exact() {
    for seed in 0..20u64 {
        let lifted = random_instance(6, 2, seed);
        let inst = Instance::new(
            lifted.frame_of.clone(),
            lifted.node_cost.clone(),
            lifted.base_edges.clone(),
            vec![],
        )
        .unwrap();
        let report = run(&inst, &SolverConfig::default());
        let first = &report.iterations[0];
        let gap = first.upper_bound - first.lower_bound;
        assert!(gap.abs() <= TOL, "seed {seed}: first-round gap {gap}");
    }
    println!("PASS criterion 5: pure-flow gap closed in round one on 20/20 instances");
}

/// Criterion 6: installing the top separation candidate improves the
/// bound by at least its reported priority, on 20 instances that admit
/// a candidate.
#[test]
fn criterion_6_separation_improves_bound() {
    let mut checked = 0;
    for seed in 0..200u64 {
        if checked == 20 {
            break;
        }
        let inst = random_instance(4, 2, seed);
        let mut dec = Decomposition::initialize(&inst);
        let costs = extract_separation_costs(&dec);
        let mut cands = separate_paths(&dec, &costs, 1e-4);
        cands.extend(separate_cuts(&dec, &costs, 1e-4));
        cands.sort_by(|a, b| b.priority.partial_cmp(&a.priority).unwrap());
        let Some(top) = cands.into_iter().next() else {
            continue;
        };
        let before = dec.lower_bound();
        let priority = top.priority;
        install_candidates(&mut dec, &costs, vec![top]);
        let after = dec.lower_bound();
        assert!(
            after - before >= priority - TOL,
            "seed {seed}: improvement {} below priority {priority}",
            after - before
        );
        checked += 1;
    }
    assert_eq!(checked, 20, "not enough instances with candidates");
    println!("PASS criterion 6: bound gain >= candidate priority on 20/20 installs");
}

fn random_solution(inst: &Instance, rng: &mut ChaCha8Rng) -> Solution {
    let mut used = vec![false; inst.num_nodes];
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    for v in inst.nodes_by_frame() {
        if used[v] || rng.gen_bool(0.4) {
            continue;
        }
        let mut p = vec![v];
        used[v] = true;
        let mut cur = v;
        loop {
            let nexts: Vec<NodeId> = inst.out_edges[cur]
                .iter()
                .map(|&e| inst.base_edges[e].head.node().unwrap())
                .filter(|&w| !used[w])
                .collect();
            if nexts.is_empty() || rng.gen_bool(0.3) {
                break;
            }
            cur = nexts[rng.gen_range(0..nexts.len())];
            used[cur] = true;
            p.push(cur);
        }
        paths.push(p);
    }
    let objective = evaluate_paths(inst, &paths);
    Solution { paths, objective }
}

/// Criterion 7: local search never worsens a solution and reports a
/// consistent objective, on 100 random starting solutions.
#[test]
fn criterion_7_local_search_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..100u64 {
        let inst = random_instance(4 + (seed % 3) as u32, 2, seed);
        let start = random_solution(&inst, &mut rng);
        let before = start.objective;
        let out = local_search(&inst, start, 0.5, 5);
        assert!(out.objective <= before + TOL, "seed {seed}: search went uphill");
        assert!(out.validate(&inst), "seed {seed}: invalid output");
        let recomputed = evaluate_paths(&inst, &out.paths);
        assert!((out.objective - recomputed).abs() < TOL, "seed {seed}: stale objective");
    }
    println!("PASS criterion 7: local search monotone and consistent on 100/100 starts");
}

/// Criterion 8: windowed solving stays within 5% of the direct solve on
/// 10 planted 12-frame instances, and reproduces it bit for bit when a
/// single window covers the whole span.
#[test]
fn criterion_8_windowed_solving() {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let (inst, _) = generate_instance(12, 3, 2, 0.1, seed);
        let direct = run(&inst, &SolverConfig::default());
        let windowed = solve_interval(
            &inst,
            &IntervalConfig {
                interval_length: 6,
                max_edge_frames: 2,
                solver: SolverConfig::default(),
            },
        )
        .unwrap();
        assert!(windowed.validate(&inst));
        let rel = (windowed.objective - direct.solution.objective)
            / direct.solution.objective.abs().max(1.0);
        assert!(rel <= 0.05, "seed {seed}: windowed off by {rel:.4}");
        worst = worst.max(rel);

        let single = solve_interval(
            &inst,
            &IntervalConfig {
                interval_length: 12,
                max_edge_frames: 2,
                solver: SolverConfig::default(),
            },
        )
        .unwrap();
        assert_eq!(single.paths, direct.solution.paths, "seed {seed}");
        assert_eq!(
            single.objective.to_bits(),
            direct.solution.objective.to_bits(),
            "seed {seed}"
        );
    }
    println!("PASS criterion 8: windowed within 5% (worst {worst:.4}) and bit-equal at full span");
}

fn report_bytes(inst: &Instance) -> String {
    let report = run(inst, &SolverConfig::default());
    let mut s = String::new();
    for it in &report.iterations {
        s.push_str(&format!(
            "{} {:x} {:x} {}\n",
            it.iter,
            it.lower_bound.to_bits(),
            it.upper_bound.to_bits(),
            it.num_factors
        ));
    }
    s.push_str(&format!("{:x}\n", report.lower_bound.to_bits()));
    s.push_str(&report.solution.serialize());
    s
}

/// Criterion 9: repeated runs produce byte-identical reports.
#[test]
fn criterion_9_determinism() {
    for seed in 0..5u64 {
        let inst = random_instance(5, 2, seed);
        assert_eq!(report_bytes(&inst), report_bytes(&inst), "seed {seed}");
        let (planted, _) = generate_instance(9, 3, 2, 0.1, seed);
        let cfg = IntervalConfig {
            interval_length: 6,
            max_edge_frames: 2,
            solver: SolverConfig::default(),
        };
        let a = solve_interval(&planted, &cfg).unwrap();
        let b = solve_interval(&planted, &cfg).unwrap();
        assert_eq!(a.serialize(), b.serialize(), "seed {seed}");
    }
    println!("PASS criterion 9: byte-identical reports on repeated runs");
}
