mod common;

#[test]
fn every_op_matches_finite_differences() {
    for (name, check) in common::op_checks() {
        for seed in 0..3 {
            let err = check(seed).unwrap();
            assert!(err < 1e-4, "{name} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn composite_loss_matches_finite_differences() {
    let err = common::composite(1).unwrap();
    assert!(err < 1e-3, "{err:e}");
}
