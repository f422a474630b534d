use super::*;
use crate::chain::{build_chain, qm_surface_model, xy_table};

fn r(n: i64, d: i64) -> Probability {
    Probability::ratio(n, d)
}

fn scale(cells: [Probability; 4], w: &Probability) -> [Probability; 4] {
    cells.map(|c| c * w.clone())
}

fn perfect(q: Probability) -> [Probability; 4] {
    [q.complement(), r(0, 1), r(0, 1), q]
}

fn anti(q: Probability) -> [Probability; 4] {
    [r(0, 1), q.complement(), q, r(0, 1)]
}

fn det(x: i64, y: i64) -> [Probability; 4] {
    let mut c = [r(0, 1), r(0, 1), r(0, 1), r(0, 1)];
    c[(x * 2 + y) as usize] = r(1, 1);
    c
}

fn surface_with_weights(n: i64, weights: &[(SettingPair, Probability)]) -> SurfaceModel {
    let c = build_chain(n).unwrap();
    let qm = qm_surface_model(&c, true);
    let schema = qm.setting_weights().schema().clone();
    let settings = JointDistribution::from_positional(
        schema,
        weights
            .iter()
            .map(|(p, w)| (vec![p.alice as Value, p.bob as Value], w.clone())),
    )
    .unwrap();
    SurfaceModel::new(c, settings, qm.outcome_tables().clone()).unwrap()
}

/// Every witness of a failed universal verdict must fail its relation.
fn assert_witnesses_recheck(v: &AssumptionVerdict) {
    assert_eq!(v.holds, v.witnesses.is_empty());
    if v.assumption != Assumption::ImprovedPredictions {
        for w in &v.witnesses {
            assert!(!w.relation_holds(Tolerance::EXACT), "{w}");
        }
    }
}

#[test]
fn weak_surface_autonomy() {
    let c = build_chain(3).unwrap();
    let v = check_weak_surface_autonomy(&qm_surface_model(&c, true));
    assert!(v.holds);

    let s = c.settings();
    let m = surface_with_weights(3, &[(s[0], r(1, 3)), (s[1], r(1, 3)), (s[2], r(1, 3))]);
    let v = check_weak_surface_autonomy(&m);
    assert!(!v.holds);
    assert_eq!(v.witnesses.len(), 1);
    assert_eq!(v.witnesses[0].pair(), Some(SettingPair::new(3, 0)));
    assert_witnesses_recheck(&v);

    let m = surface_with_weights(3, &[(s[1], r(1, 1))]);
    let v = check_weak_surface_autonomy(&m);
    assert_eq!(v.witnesses.len(), 3);
}

#[test]
fn surface_locality() {
    let c = build_chain(3).unwrap();
    let qm = qm_surface_model(&c, true);
    assert!(check_surface_locality(&qm, Tolerance::EXACT).unwrap().holds);
    assert!(
        check_surface_locality(&qm_surface_model(&c, false), Tolerance::EXACT)
            .unwrap()
            .holds
    );

    let mut tables = qm.outcome_tables().clone();
    tables.insert(
        SettingPair::new(1, 2),
        xy_table([r(1, 3), r(1, 3), r(0, 1), r(1, 3)]).unwrap(),
    );
    let m = SurfaceModel::new(c, qm.setting_weights().clone(), tables).unwrap();
    let v = check_surface_locality(&m, Tolerance::EXACT).unwrap();
    assert!(!v.holds);
    assert!(v
        .witnesses
        .iter()
        .any(|w| w.pair() == Some(SettingPair::new(1, 2)) && w.lhs == r(1, 3)));
    assert!(v
        .witnesses
        .iter()
        .any(|w| w.pair() == Some(SettingPair::new(1, 0)) && w.lhs == r(1, 2)));
    assert_witnesses_recheck(&v);

    let s = c.settings();
    let sparse = surface_with_weights(3, &[(s[0], r(1, 2)), (s[1], r(1, 2))]);
    assert!(matches!(
        check_surface_locality(&sparse, Tolerance::EXACT),
        Err(AssumptionError::UndefinedConditional(_))
    ));
}

#[test]
fn locality_vacuous_when_angles_unshared() {
    let c = build_chain(3).unwrap();
    let qm = qm_surface_model(&c, true);
    let mut tables = BTreeMap::new();
    tables.insert(
        SettingPair::new(1, 0),
        xy_table([r(1, 1), r(0, 1), r(0, 1), r(0, 1)]).unwrap(),
    );
    tables.insert(
        SettingPair::new(3, 2),
        xy_table([r(0, 1), r(0, 1), r(0, 1), r(1, 1)]).unwrap(),
    );
    let v = check_locality_on(&tables, &BTreeMap::new(), Tolerance::EXACT);
    assert!(v.holds);
    // The same two tables inside the full chain break locality.
    let mut full = qm.outcome_tables().clone();
    full.extend(tables);
    let m = SurfaceModel::new(c, qm.setting_weights().clone(), full).unwrap();
    assert!(!check_surface_locality(&m, Tolerance::EXACT).unwrap().holds);
}

fn independent_model(n: i64, lambda_weights: &[Probability]) -> HiddenModel {
    let c = build_chain(n).unwrap();
    HiddenModel::from_blocks(c, independent_blocks(n, lambda_weights), &[]).unwrap()
}

fn independent_blocks(n: i64, lambda_weights: &[Probability]) -> Vec<((Value, SettingPair), [Probability; 4])> {
    let c = build_chain(n).unwrap();
    let ns = c.experiment_count() as i64;
    let mut blocks = Vec::new();
    for (l, w) in lambda_weights.iter().enumerate() {
        for link in c.links() {
            let table = match link.kind {
                LinkKind::Solid => perfect(r(1, 2)),
                LinkKind::Dashed => anti(r(1, 2)),
            };
            blocks.push(((l as Value, link.pair), scale(table, &(w.clone() * r(1, ns)))));
        }
    }
    blocks
}

#[test]
fn weak_hidden_autonomy() {
    let m = independent_model(3, &[r(1, 3), r(2, 3)]);
    assert!(check_weak_hidden_autonomy(&m).holds);

    // λ=1 only ever appears with (A=Δθ, B=0).
    let c = build_chain(3).unwrap();
    let mut blocks = Vec::new();
    for link in c.links() {
        let w = if link.pair == SettingPair::new(1, 0) {
            r(1, 8)
        } else {
            r(1, 4)
        };
        let t = if link.kind == LinkKind::Dashed {
            anti(r(1, 2))
        } else {
            perfect(r(1, 2))
        };
        blocks.push(((0, link.pair), scale(t, &w)));
    }
    blocks.push(((1, SettingPair::new(1, 0)), scale(perfect(r(1, 2)), &r(1, 8))));
    let m = HiddenModel::from_blocks(c, blocks.clone(), &[]).unwrap();
    let v = check_weak_hidden_autonomy(&m);
    assert!(!v.holds);
    assert!(v
        .witnesses
        .iter()
        .any(|w| w.lambda == Some(1) && w.pair() == Some(SettingPair::new(1, 2))));
    assert_eq!(v.witnesses.len(), 3);
    assert_witnesses_recheck(&v);

    // A zero-weight hidden value has empty support and is allowed.
    let m = HiddenModel::from_blocks(c, independent_blocks(3, &[r(1, 1)]), &[2]).unwrap();
    assert_eq!(m.lambdas(), &[0, 2]);
    assert!(check_weak_hidden_autonomy(&m).holds);
}

#[test]
fn hidden_autonomy() {
    let m = independent_model(3, &[r(1, 4), r(3, 4)]);
    assert!(check_hidden_autonomy(&m, Tolerance::EXACT).unwrap().holds);

    // λ tracks Alice's angle: λ=0 only with A=Δθ, λ=1 only with A=90°.
    let c = build_chain(3).unwrap();
    let blocks = c.links().into_iter().map(|l| {
        let lambda = if l.pair.alice == 1 { 0 } else { 1 };
        let t = if l.kind == LinkKind::Dashed {
            anti(r(1, 2))
        } else {
            perfect(r(1, 2))
        };
        ((lambda, l.pair), scale(t, &r(1, 4)))
    });
    let m = HiddenModel::from_blocks(c, blocks, &[]).unwrap();
    let v = check_hidden_autonomy(&m, Tolerance::EXACT).unwrap();
    assert!(!v.holds);
    assert_witnesses_recheck(&v);
    assert!(!check_weak_hidden_autonomy(&m).holds);

    // Full support, setting-dependent weights: Weak H.A. holds, H.A. fails.
    let blocks = c.links().into_iter().flat_map(|l| {
        let w0 = if l.pair == SettingPair::new(1, 0) {
            r(1, 3)
        } else {
            r(2, 3)
        };
        let t = if l.kind == LinkKind::Dashed {
            anti(r(1, 2))
        } else {
            perfect(r(1, 2))
        };
        [
            ((0, l.pair), scale(t.clone(), &(w0.clone() * r(1, 4)))),
            ((1, l.pair), scale(t, &(w0.complement() * r(1, 4)))),
        ]
    });
    let m = HiddenModel::from_blocks(c, blocks, &[]).unwrap();
    assert!(check_weak_hidden_autonomy(&m).holds);
    assert!(!check_hidden_autonomy(&m, Tolerance::EXACT).unwrap().holds);

    let s = c.settings();
    let sparse = HiddenModel::lift(&surface_with_weights(3, &[(s[0], r(1, 1))]));
    assert!(check_hidden_autonomy(&sparse, Tolerance::EXACT).is_err());
}

/// λ ranges over local deterministic strategies given as bit per angle.
fn deterministic_model(n: i64, strategies: &[Vec<i64>]) -> HiddenModel {
    let c = build_chain(n).unwrap();
    let w = r(1, (strategies.len() * c.experiment_count()) as i64);
    let blocks = strategies.iter().enumerate().flat_map(|(l, s)| {
        let w = w.clone();
        c.links().into_iter().map(move |link| {
            let x = s[link.pair.alice as usize];
            let y = s[link.pair.bob as usize];
            ((l as Value, link.pair), scale(det(x, y), &w))
        })
    });
    HiddenModel::from_blocks(c, blocks.collect::<Vec<_>>(), &[]).unwrap()
}

#[test]
fn parameter_independence() {
    let m = deterministic_model(3, &[vec![0, 0, 0, 0], vec![1, 1, 0, 1], vec![0, 1, 1, 0]]);
    assert!(check_parameter_independence(&m, Tolerance::EXACT).holds);

    // λ-conditional P(X=1 | A=Δθ) depends on Bob's setting.
    let c = build_chain(3).unwrap();
    let blocks = c.links().into_iter().map(|l| {
        let t = match (l.kind, l.pair) {
            (_, p) if p == SettingPair::new(1, 2) => det(1, 1),
            (LinkKind::Dashed, _) => det(0, 1),
            _ => det(0, 0),
        };
        ((0, l.pair), scale(t, &r(1, 4)))
    });
    let m = HiddenModel::from_blocks(c, blocks, &[]).unwrap();
    let v = check_parameter_independence(&m, Tolerance::EXACT);
    assert!(!v.holds);
    assert_witnesses_recheck(&v);

    let lift = HiddenModel::lift(&qm_surface_model(&c, true));
    assert!(check_parameter_independence(&lift, Tolerance::EXACT).holds);
}

#[test]
fn outcome_independence() {
    let m = deterministic_model(3, &[vec![0, 1, 0, 1], vec![1, 1, 1, 0]]);
    assert!(check_outcome_independence(&m, Tolerance::EXACT).holds);

    let c = build_chain(3).unwrap();
    let lift = HiddenModel::lift(&qm_surface_model(&c, true));
    let v = check_outcome_independence(&lift, Tolerance::EXACT);
    assert!(!v.holds);
    let w = v
        .witnesses
        .iter()
        .find(|w| w.quantity.starts_with("P(X=1,Y=1"))
        .unwrap();
    assert_eq!((w.lhs.clone(), w.rhs.clone()), (r(1, 2), r(1, 4)));
    assert_witnesses_recheck(&v);

    // Independent coins per λ.
    let blocks = (0..2).flat_map(|l| {
        let (px, py) = if l == 0 { (r(1, 3), r(1, 5)) } else { (r(3, 4), r(1, 2)) };
        c.links().into_iter().map(move |link| {
            let cells = [
                px.complement() * py.complement(),
                px.complement() * py.clone(),
                px.clone() * py.complement(),
                px.clone() * py.clone(),
            ];
            ((l, link.pair), scale(cells, &r(1, 8)))
        })
    });
    let m = HiddenModel::from_blocks(c, blocks.collect::<Vec<_>>(), &[]).unwrap();
    assert!(check_outcome_independence(&m, Tolerance::EXACT).holds);
}

#[test]
fn improved_predictions() {
    let c = build_chain(3).unwrap();
    let lift = HiddenModel::lift(&qm_surface_model(&c, true));
    let v = check_improved_predictions(&lift, Tolerance::EXACT).unwrap();
    assert!(!v.holds);
    assert!(!v.witnesses.is_empty());
    assert!(v.witnesses.iter().all(|w| w.lhs == w.rhs));

    let m = deterministic_model(3, &[vec![0, 0, 0, 0], vec![1, 1, 1, 1]]);
    let v = check_improved_predictions(&m, Tolerance::EXACT).unwrap();
    assert!(v.holds && v.witnesses.is_empty() && !v.evidence.is_empty());

    // At (A=Δθ, B=0) the λ-conditionals of X=1 are 3/5 and 2/5 around a
    // surface value of 1/2; everywhere else conditionals equal the surface.
    let target = SettingPair::new(1, 0);
    let blocks = c.links().into_iter().flat_map(|l| {
        let (t0, t1) = if l.pair == target {
            (
                [r(1, 5), r(1, 5), r(1, 5), r(2, 5)],
                [r(2, 5), r(1, 5), r(1, 5), r(1, 5)],
            )
        } else if l.kind == LinkKind::Dashed {
            (anti(r(1, 2)), anti(r(1, 2)))
        } else {
            (perfect(r(1, 2)), perfect(r(1, 2)))
        };
        [((0, l.pair), scale(t0, &r(1, 8))), ((1, l.pair), scale(t1, &r(1, 8)))]
    });
    let m = HiddenModel::from_blocks(c, blocks, &[]).unwrap();
    let v = check_improved_predictions(&m, Tolerance::EXACT).unwrap();
    assert!(v.holds);
    assert!(v.evidence.iter().all(|w| w.pair() == Some(target)));
    assert!(v
        .evidence
        .iter()
        .any(|w| w.lambda == Some(0) && w.quantity.starts_with("P(X=1|") && w.lhs == r(3, 5) && w.rhs == r(1, 2)));
    // Within a loose tolerance the shift is not an improvement.
    let v = check_improved_predictions(&m.to_float(), Tolerance::new(0.2).unwrap()).unwrap();
    assert!(!v.holds);
}

#[test]
fn qm_agreement() {
    let c = build_chain(45).unwrap();
    let full = qm_surface_model(&c, false);
    let simple = qm_surface_model(&c, true);
    assert!(check_qm_agreement(&full, &full, Tolerance::EXACT).unwrap().holds);
    let v = check_qm_agreement(&simple, &full, Tolerance::EXACT).unwrap();
    assert!(!v.holds);
    let largest = v
        .witnesses
        .iter()
        .map(|w| w.lhs.abs_diff(&w.rhs).to_f64())
        .fold(0.0, f64::max);
    // sin²(2°), high-precision reference.
    assert!((largest - 0.001_217_974_870_087_876).abs() < 1e-12, "{largest}");
    assert!(
        check_qm_agreement(&simple, &full, Tolerance::new(0.002).unwrap())
            .unwrap()
            .holds
    );

    let other = qm_surface_model(&build_chain(3).unwrap(), true);
    assert!(matches!(
        check_qm_agreement(&other, &full, Tolerance::EXACT),
        Err(AssumptionError::ChainMismatch { .. })
    ));
}

#[test]
fn conditional_qm_agreement() {
    let c = build_chain(3).unwrap();
    let lift = HiddenModel::lift(&qm_surface_model(&c, true));
    assert!(check_conditional_qm_agreement(&lift, Tolerance::EXACT).holds);
    let m = deterministic_model(3, &[vec![0, 0, 0, 0]]);
    let v = check_conditional_qm_agreement(&m, Tolerance::EXACT);
    assert_eq!(v.witnesses.len(), 1);
    assert_eq!(v.witnesses[0].pair(), Some(c.dashed_link().pair));
    assert_witnesses_recheck(&v);
}

#[test]
fn surface_correlation_detection() {
    let c = build_chain(3).unwrap();
    assert!(surface_correlation(&qm_surface_model(&c, true), Tolerance::EXACT).is_some());
    let m = independent_model(3, &[r(1, 1)]);
    assert!(surface_correlation(m.surface(), Tolerance::EXACT).is_some());
}

#[test]
fn verdicts_serialize() {
    let c = build_chain(3).unwrap();
    let lift = HiddenModel::lift(&qm_surface_model(&c, true));
    let v = check_outcome_independence(&lift, Tolerance::EXACT);
    let text = serde_json::to_string(&v).unwrap();
    let back: AssumptionVerdict = serde_json::from_str(&text).unwrap();
    assert_eq!(back, v);
}
