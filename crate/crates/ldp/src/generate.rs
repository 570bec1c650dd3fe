//! Deterministic instance generators used by the CLI and the test suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{BaseEdge, Endpoint, Instance, LiftedEdge, NodeId};

/// Tracking-style instance with planted trajectories.
///
/// Detection `d` of frame `f` has id `f * detections_per_frame + d`.
/// Detections with `d < trajectories` belong to planted trajectory `d`;
/// pairs on the same planted trajectory get negative base/lifted costs,
/// all other pairs positive ones, each perturbed by `noise` times a
/// uniform draw from `[-1, 1]`. Returns the instance together with the
/// planted trajectories as node id lists.
pub fn generate_instance(
    frames: u32,
    detections_per_frame: usize,
    trajectories: usize,
    noise: f64,
    seed: u64,
) -> (Instance, Vec<Vec<NodeId>>) {
    assert!(frames >= 1 && detections_per_frame >= 1);
    assert!(trajectories <= detections_per_frame);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |rng: &mut ChaCha8Rng| noise * rng.gen_range(-1.0..=1.0);

    let det = detections_per_frame;
    let n = frames as usize * det;
    let id = |f: u32, d: usize| f as usize * det + d;
    let mut frame_of = Vec::with_capacity(n);
    let mut node_cost = Vec::with_capacity(n);
    for f in 0..frames {
        for d in 0..det {
            frame_of.push(f + 1);
            let planted = d < trajectories;
            node_cost.push(if planted { -0.2 } else { 0.2 } + 0.1 * jitter(&mut rng));
        }
    }

    let mut base = Vec::new();
    let mut lifted = Vec::new();
    for f in 0..frames.saturating_sub(1) {
        for d in 0..det {
            for d2 in 0..det {
                let same = d == d2 && d < trajectories;
                let cost = if same { -1.0 } else { 0.5 } + jitter(&mut rng);
                base.push(BaseEdge {
                    tail: Endpoint::Node(id(f, d)),
                    head: Endpoint::Node(id(f + 1, d2)),
                    cost,
                });
            }
        }
    }
    for f in 0..frames.saturating_sub(2) {
        for d in 0..det {
            for d2 in 0..det {
                let same = d == d2 && d < trajectories;
                let cost = if same { -1.0 } else { 0.5 } + jitter(&mut rng);
                lifted.push(LiftedEdge {
                    tail: id(f, d),
                    head: id(f + 2, d2),
                    cost,
                });
            }
        }
    }

    let inst = Instance::new(frame_of, node_cost, base, lifted).expect("generated instance valid");
    let truth = (0..trajectories)
        .map(|d| (0..frames).map(|f| id(f, d)).collect())
        .collect();
    (inst, truth)
}

/// Unstructured random instance: base edges between frames at gap one or
/// two with probability `0.8` / `0.4`, lifted edges on a random subset of
/// base-reachable pairs, all costs uniform in `[-1, 1]`.
pub fn random_instance(frames: u32, detections_per_frame: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let det = detections_per_frame;
    let n = frames as usize * det;
    let id = |f: u32, d: usize| f as usize * det + d;
    let mut frame_of = Vec::with_capacity(n);
    let mut node_cost = Vec::with_capacity(n);
    for f in 0..frames {
        for _ in 0..det {
            frame_of.push(f + 1);
            node_cost.push(rng.gen_range(-1.0..=1.0) * 0.3);
        }
    }
    let mut base = Vec::new();
    for f in 0..frames {
        for gap in 1..=2u32 {
            if f + gap >= frames {
                break;
            }
            let p = if gap == 1 { 0.8 } else { 0.4 };
            for d in 0..det {
                for d2 in 0..det {
                    if rng.gen_bool(p) {
                        base.push(BaseEdge {
                            tail: Endpoint::Node(id(f, d)),
                            head: Endpoint::Node(id(f + gap, d2)),
                            cost: rng.gen_range(-1.0..=1.0),
                        });
                    }
                }
            }
        }
    }
    // Pick lifted edges among base-reachable pairs at frame gap >= 2.
    let skeleton = Instance::new(frame_of.clone(), node_cost.clone(), base.clone(), vec![])
        .expect("base skeleton valid");
    let reach = crate::instance::compute_reachability(&skeleton, u32::MAX);
    let mut lifted = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v
                && frame_of[v] > frame_of[u] + 1
                && reach.reachable(u, v)
                && rng.gen_bool(0.5)
            {
                lifted.push(LiftedEdge {
                    tail: u,
                    head: v,
                    cost: rng.gen_range(-1.0..=1.0),
                });
            }
        }
    }
    Instance::new(frame_of, node_cost, base, lifted).expect("random instance valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_generation_has_unique_negative_chain() {
        let (inst, truth) = generate_instance(2, 2, 1, 0.0, 1);
        assert_eq!(truth, vec![vec![0, 2]]);
        for (_, u, v, c) in inst.inner_base_edges() {
            if (u, v) == (0, 2) {
                assert_eq!(c, -1.0);
            } else {
                assert!(c > 0.0);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, _) = generate_instance(4, 3, 2, 0.3, 42);
        let (b, _) = generate_instance(4, 3, 2, 0.3, 42);
        assert_eq!(a.serialize(), b.serialize());
        let c = random_instance(4, 2, 7);
        let d = random_instance(4, 2, 7);
        assert_eq!(c.serialize(), d.serialize());
    }
}
