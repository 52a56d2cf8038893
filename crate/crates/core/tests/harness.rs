use hopnet::harness::{run_grid, run_grid_with, run_trial, Execution, ExperimentConfig, IntRange};
use hopnet::{RuleKind, RuleSpec};

fn config(kind: RuleKind, n: usize, p: IntRange, k: IntRange, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        n,
        p_range: p,
        k_range: k,
        trials,
        master_seed: 5,
        ..ExperimentConfig::desk(RuleSpec::defaults(kind, false))
    }
}

#[test]
fn undistorted_single_pattern_is_recalled_by_every_rule() {
    for kind in RuleKind::ALL {
        for incremental in [true, false] {
            let cfg = ExperimentConfig {
                rule: RuleSpec::defaults(kind, incremental),
                ..config(kind, 32, IntRange::single(1), IntRange::single(0), 5)
            };
            for t in 0..cfg.trials {
                let rec = run_trial(&cfg, 1, 0, t).unwrap();
                assert_eq!(rec.overlap, 1.0, "{kind} incremental={incremental} trial {t}");
                assert!(rec.converged);
            }
        }
    }
}

#[test]
fn pseudoinverse_recalls_undistorted_patterns_below_capacity() {
    let cfg = config(RuleKind::PseudoInverse, 16, IntRange { start: 1, end: 15 }, IntRange::single(0), 4);
    let grid = run_grid(&cfg).unwrap();
    assert!(grid.records.iter().all(|r| r.overlap == 1.0));
}

#[test]
fn single_cell_grid() {
    let cfg = config(RuleKind::Hebbian, 8, IntRange::single(2), IntRange::single(1), 7);
    let grid = run_grid(&cfg).unwrap();
    assert_eq!(grid.p_values, vec![2]);
    assert_eq!(grid.k_values, vec![1]);
    assert_eq!(grid.records.len(), 7);
    let mean = grid.records.iter().map(|r| r.overlap).sum::<f64>() / 7.0;
    assert_eq!(grid.mean(2, 1), Some(mean));
    assert_eq!(grid.mean(3, 1), None);
}

#[test]
fn hebbian_recall_degrades_with_distortion() {
    let cfg = config(RuleKind::Hebbian, 32, IntRange::single(2), IntRange { start: 0, end: 16 }, 100);
    let grid = run_grid(&cfg).unwrap();
    let means: Vec<f64> = grid.k_values.iter().map(|&k| grid.mean(2, k).unwrap()).collect();
    for pair in means.windows(2) {
        assert!(pair[1] <= pair[0] + 0.02, "{means:?}");
    }
}

#[test]
fn grids_are_deterministic_across_runs_and_schedulers() {
    let cfg = config(RuleKind::Storkey, 12, IntRange { start: 1, end: 6 }, IntRange { start: 0, end: 3 }, 5);
    let a = run_grid_with(&cfg, Execution::Sequential).unwrap();
    let b = run_grid_with(&cfg, Execution::Sequential).unwrap();
    let c = run_grid_with(&cfg, Execution::Parallel { workers: 3 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn cells_do_not_depend_on_the_rest_of_the_grid() {
    let small = config(RuleKind::DescentL2, 10, IntRange::single(3), IntRange::single(2), 3);
    let large = config(RuleKind::DescentL2, 10, IntRange { start: 1, end: 5 }, IntRange { start: 0, end: 4 }, 6);
    let small = run_grid(&small).unwrap();
    let large = run_grid(&large).unwrap();
    for rec in &small.records {
        let twin = large
            .records
            .iter()
            .find(|r| (r.p, r.k_flips, r.trial_index) == (rec.p, rec.k_flips, rec.trial_index))
            .unwrap();
        assert_eq!(rec, twin);
    }
}

#[test]
fn master_seed_changes_the_draws() {
    let a = config(RuleKind::Hebbian, 16, IntRange::single(4), IntRange::single(3), 10);
    let b = ExperimentConfig { master_seed: 6, ..a.clone() };
    let (a, b) = (run_grid(&a).unwrap(), run_grid(&b).unwrap());
    assert!(a.records.iter().zip(&b.records).all(|(x, y)| x.seed != y.seed));
}

#[test]
fn invalid_configurations_are_rejected() {
    let base = config(RuleKind::Hebbian, 8, IntRange::single(2), IntRange::single(1), 2);
    let bad = [
        ExperimentConfig { epsilon: 0.0, ..base.clone() },
        ExperimentConfig { epsilon: 1.2, ..base.clone() },
        ExperimentConfig { p_range: IntRange::single(9), ..base.clone() },
        ExperimentConfig { k_range: IntRange::single(5), ..base.clone() },
        ExperimentConfig { trials: 0, ..base.clone() },
    ];
    for cfg in bad {
        assert!(run_grid(&cfg).is_err());
    }
}
