use proptest::prelude::*;

use ldp::decomposition::Decomposition;
use ldp::generate::random_instance;
use ldp::instance::Instance;
use ldp::oracle::{evaluate_paths, exact_ldp};
use ldp::separation::separate_and_install;
use ldp::solver::{run, SolverConfig};

proptest! {
    // The text format round-trips exactly: Display of f64 prints the
    // shortest representation that parses back to the same bits.
    #[test]
    fn instance_roundtrip(frames in 2u32..6, det in 1usize..4, seed in 0u64..500) {
        let inst = random_instance(frames, det, seed);
        let text = inst.serialize();
        let back = Instance::parse(&text).unwrap();
        prop_assert_eq!(text, back.serialize());
    }

    // Splitting the objective into factors and moving separation costs
    // around never changes the total represented cost.
    #[test]
    fn decomposition_conserves_costs(seed in 0u64..200) {
        let inst = random_instance(4, 2, seed);
        let mut dec = Decomposition::initialize(&inst);
        prop_assert!(dec.max_conservation_error() <= 1e-9);
        separate_and_install(&mut dec, 1e-4, 0.5);
        prop_assert!(dec.max_conservation_error() <= 1e-9);
    }

    // The initial lower bound and every later one stay below the exact
    // optimum, and the reported solution evaluates to its objective.
    #[test]
    fn bounds_bracket_exact_optimum(seed in 0u64..100) {
        let inst = random_instance(4, 2, seed);
        let (opt, _) = exact_ldp(&inst, 14).unwrap();
        let report = run(&inst, &SolverConfig::default());
        for it in &report.iterations {
            prop_assert!(it.lower_bound <= opt + 1e-9);
            prop_assert!(it.upper_bound >= opt - 1e-9);
        }
        let val = evaluate_paths(&inst, &report.solution.paths);
        prop_assert!((val - report.solution.objective).abs() <= 1e-9);
    }
}
