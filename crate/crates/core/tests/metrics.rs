use fairmargin::metrics::*;
use fairmargin::rng::Stream;
use proptest::prelude::*;

struct Confusion {
    // [group][label][pred]
    counts: [[[usize; 2]; 2]; 2],
}

fn confusion(preds: &[usize], labels: &[usize], groups: &[usize]) -> Confusion {
    let mut counts = [[[0; 2]; 2]; 2];
    for i in 0..preds.len() {
        counts[groups[i]][labels[i]][preds[i]] += 1;
    }
    Confusion { counts }
}

impl Confusion {
    fn total(&self, label: usize, pred: usize) -> usize {
        self.counts[0][label][pred] + self.counts[1][label][pred]
    }

    fn macro_f(&self) -> f64 {
        let f = |c: usize| {
            let tp = self.total(c, c) as f64;
            let fp = self.total(1 - c, c) as f64;
            let fn_ = self.total(c, 1 - c) as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        };
        (f(0) + f(1)) / 2.0
    }

    fn rate(&self, g: usize, label: usize) -> f64 {
        let hit = self.counts[g][label][label];
        let all = hit + self.counts[g][label][1 - label];
        if all == 0 {
            1.0
        } else {
            hit as f64 / all as f64
        }
    }
}

fn random_case(s: &mut Stream) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = 1 + (s.uniform() * 60.0) as usize;
    let bias = s.uniform();
    let mut draw = |p: f64| usize::from(s.uniform() < p);
    let labels: Vec<usize> = (0..n).map(|_| draw(0.5)).collect();
    let groups: Vec<usize> = (0..n).map(|_| draw(0.5)).collect();
    let preds: Vec<usize> = labels
        .iter()
        .map(|&y| if draw(bias) == 1 { y } else { 1 - y })
        .collect();
    (preds, labels, groups)
}

#[test]
fn metrics_match_confusion_oracle_on_random_cases() {
    let mut s = Stream::new(2024);
    for _ in 0..1000 {
        let (preds, labels, groups) = random_case(&mut s);
        let oracle = confusion(&preds, &labels, &groups);
        assert_eq!(macro_f(&preds, &labels, 2).unwrap(), oracle.macro_f());
        let rates = group_rates(&preds, &labels, &groups, 2).unwrap();
        for g in 0..2 {
            assert_eq!(rates.tpr[g], oracle.rate(g, 1));
            assert_eq!(rates.tnr[g], oracle.rate(g, 0));
        }
        let want = ((oracle.rate(0, 1) - oracle.rate(1, 1)).abs()
            + (oracle.rate(0, 0) - oracle.rate(1, 0)).abs())
            / 2.0;
        assert_eq!(gap(&rates).unwrap(), want);
        let report = EvalReport::compute(&preds, &labels, &groups).unwrap();
        assert!((0.0..=1.0).contains(&report.gap));
        assert_eq!(report.one_minus_gap, 1.0 - report.gap);
    }
}

fn dominated_oracle(p: &TradeoffPoint, all: &[TradeoffPoint]) -> bool {
    all.iter().any(|q| {
        q.f >= p.f && q.fairness >= p.fairness && (q.f > p.f || q.fairness > p.fairness)
    })
}

#[test]
fn frontier_matches_pairwise_oracle_on_random_sets() {
    let mut s = Stream::new(77);
    for _ in 0..200 {
        let n = 1 + (s.uniform() * 50.0) as usize;
        // Coarse grid so ties and duplicates are common.
        let points: Vec<TradeoffPoint> = (0..n)
            .map(|i| TradeoffPoint {
                f: (s.uniform() * 10.0).floor() / 10.0,
                fairness: (s.uniform() * 10.0).floor() / 10.0,
                config_id: i,
            })
            .collect();
        let front = pareto_frontier(&points);
        for p in &front {
            assert!(!dominated_oracle(p, &points));
        }
        for p in &points {
            let kept = front.iter().any(|q| q.f == p.f && q.fairness == p.fairness);
            assert_eq!(kept, !dominated_oracle(p, &points));
        }
        for (i, a) in front.iter().enumerate() {
            for b in &front[i + 1..] {
                assert!(!(a.f == b.f && a.fairness == b.fairness));
            }
        }
    }
}

proptest! {
    #[test]
    fn selection_ignores_candidate_order(
        vals in prop::collection::vec((0u8..5, 0u8..5), 1..20),
        rot in 0usize..20,
        policy_ix in 0usize..4,
    ) {
        let points: Vec<TradeoffPoint> = vals
            .iter()
            .enumerate()
            .map(|(i, &(f, g))| TradeoffPoint { f: f as f64 / 4.0, fairness: g as f64 / 4.0, config_id: i })
            .collect();
        let policy = [
            SelectionPolicy::BestDevF,
            SelectionPolicy::FairestDev,
            SelectionPolicy::HarmonicMean,
            SelectionPolicy::FFloorThenMinGap { floor: 0.25 },
        ][policy_ix];
        let mut rotated = points.clone();
        rotated.rotate_left(rot % points.len());
        rotated.reverse();
        let a = select_model(&points, policy);
        let b = select_model(&rotated, policy);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "selection succeeded for only one order"),
        }
    }
}

#[test]
fn randomized_two_hundred_instance_rates() {
    let mut s = Stream::new(5);
    let labels: Vec<usize> = (0..200).map(|_| usize::from(s.uniform() < 0.4)).collect();
    let groups: Vec<usize> = (0..200).map(|_| usize::from(s.uniform() < 0.3)).collect();
    let preds: Vec<usize> = (0..200).map(|_| usize::from(s.uniform() < 0.5)).collect();
    let oracle = confusion(&preds, &labels, &groups);
    let rates = group_rates(&preds, &labels, &groups, 2).unwrap();
    assert_eq!(rates.tpr, vec![oracle.rate(0, 1), oracle.rate(1, 1)]);
    assert_eq!(rates.tnr, vec![oracle.rate(0, 0), oracle.rate(1, 0)]);
    assert!(!rates.undefined);
}
