use bemas_bench::{default_cases, run_case, GoldenFactory, RunConfig, Tier, TierPair};
use bemas_orchestrator::{Adherence, Mode};

fn pair() -> TierPair {
    TierPair::new(Tier::Api, Tier::S)
}

#[test]
fn every_case_scores_perfectly_in_every_mode() {
    let cases = default_cases();
    let f = GoldenFactory::new();
    let mut bad = Vec::new();
    for mode in Mode::ALL {
        for c in &cases {
            let r = run_case(c, &RunConfig::new(mode, pair()), &f);
            let ok = !r.crashed && r.error.is_none() && r.accuracies().iter().all(|&a| (a - 1.0).abs() < 1e-12);
            if !ok {
                bad.push(format!("{} {mode}: {:?} {:?}", c.test_id, r.accuracies(), r.error));
            }
            if mode.is_centralized() {
                assert_eq!(r.adherence, Some(Adherence::Followed), "{} {mode}", c.test_id);
            } else {
                assert_eq!(r.adherence, None);
            }
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}
