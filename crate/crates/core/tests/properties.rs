mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sorites_core::chain::{build_chain, qm_surface_model, xy_table, LinkKind};
use sorites_core::files::{LoadedModel, ModelFile, NumberMode, ReportBody, ReportFile};
use sorites_core::montecarlo::sample_runs;
use sorites_core::prob::{Probability, Tolerance};
use sorites_core::sorites::{chain_marginal_bound, cr_gap_bound, LinkSlack};
use sorites_core::theorems::run_stronger_theorem;

fn cells() -> impl Strategy<Value = [Probability; 4]> {
    prop::array::uniform4(0i64..12)
        .prop_filter("nonzero", |c| c.iter().sum::<i64>() > 0)
        .prop_map(|c| {
            let t: i64 = c.iter().sum();
            c.map(|v| Probability::ratio(v, t))
        })
}

proptest! {
    #[test]
    fn rational_text_round_trip(n in 0i64..1000, d in 1i64..1000) {
        prop_assume!(n <= d);
        let p = Probability::ratio(n, d);
        let back: Probability = p.to_string().parse().unwrap();
        prop_assert!(back.is_exact());
        prop_assert_eq!(back, p);
    }

    #[test]
    fn marginals_and_conditionals_normalize(c in cells()) {
        let joint = xy_table(c).unwrap();
        prop_assert!(joint.total().is_one());
        for var in ["X", "Y"] {
            prop_assert!(joint.marginalize(&[var]).unwrap().total().is_one());
        }
        for x in [0, 1] {
            if let Ok(cond) = joint.condition(&[("X", x)]) {
                prop_assert!(cond.total().is_one());
                let lhs = joint.prob_of(&[("X", x), ("Y", 1)]).unwrap();
                let rhs = cond.prob_of(&[("Y", 1)]).unwrap() * joint.prob_of(&[("X", x)]).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn gap_never_exceeds_mismatch(c in cells()) {
        let g = cr_gap_bound(&xy_table(c).unwrap()).unwrap();
        prop_assert!(g.gap <= g.bound);
    }

    #[test]
    fn slack_bound_is_half_the_total_slack(eps in prop::collection::vec(0i64..10, 4..=8)) {
        prop_assume!(eps.len() % 2 == 0);
        let last = eps.len() - 1;
        let slacks: Vec<LinkSlack> = eps
            .iter()
            .enumerate()
            .map(|(i, e)| LinkSlack {
                kind: if i == last { LinkKind::Dashed } else { LinkKind::Solid },
                epsilon: Probability::ratio(*e, 100),
            })
            .collect();
        let b = chain_marginal_bound(&slacks).unwrap();
        let total: i64 = eps.iter().sum();
        prop_assert_eq!(b, Probability::ratio(total, 200));
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), link in 0usize..6, trials in 1u64..500) {
        let c = build_chain(5).unwrap();
        let m = qm_surface_model(&c, false);
        let pair = c.links()[link].pair;
        let a = sample_runs(&m, pair, trials, seed).unwrap();
        prop_assert_eq!(a.cells.iter().sum::<u64>(), trials);
        prop_assert_eq!(a.matches + a.mismatches, trials);
        prop_assert_eq!(a, sample_runs(&m, pair, trials, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_files_round_trip(seed in any::<u64>()) {
        let chain = build_chain(3).unwrap();
        let m = common::random_hidden_model(&chain, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = ModelFile::from_hidden(&m, "generated").to_json();
        let back = ModelFile::parse(&text, NumberMode::Exact).unwrap();
        prop_assert_eq!(back.to_json(), text);
        match back.into_model(64).unwrap() {
            LoadedModel::Hidden(h) => prop_assert_eq!(h, m),
            LoadedModel::Surface(_) => prop_assert!(false, "hidden model read as surface"),
        }
    }

    #[test]
    fn derivation_reports_round_trip(seed in any::<u64>()) {
        let chain = build_chain(3).unwrap();
        let m = common::random_hidden_model(&chain, &mut ChaCha8Rng::seed_from_u64(seed));
        let r = run_stronger_theorem(&m, Tolerance::EXACT).unwrap();
        let f = ReportFile::new(ReportBody::Derivation(r));
        prop_assert_eq!(ReportFile::parse(&f.to_json()).unwrap(), f);
    }
}
