use accel_admm::schedule::{growth_b, ScheduleRule, ScheduleVariant};

const HORIZON: usize = 100_000;

fn rules() -> Vec<ScheduleRule<f64>> {
    let mut out = Vec::new();
    for t1 in [1.0, 2.0, 7.5] {
        out.push(ScheduleRule::recurrence_exact(t1));
        for a in [0.1, 1.0, 3.0, 40.0] {
            out.push(ScheduleRule::sqrt_cap(a, t1));
            out.push(ScheduleRule::min_cap(a, t1));
        }
    }
    for v in [
        ScheduleVariant::LinearShift { alpha: 3.0 },
        ScheduleVariant::LinearShift { alpha: 7.0 },
        ScheduleVariant::HalfK,
        ScheduleVariant::TsengShift,
        ScheduleVariant::ChambolleDossal { alpha: 3.0 },
        ScheduleVariant::AttouchCabot { alpha: 4.0 },
    ] {
        out.push(ScheduleRule::closed_form(v));
    }
    out
}

#[test]
fn sequences_are_nondecreasing() {
    for rule in rules() {
        let t = rule.sequence(HORIZON);
        assert!(t.windows(2).all(|w| w[1] >= w[0]), "{rule:?}");
    }
}

#[test]
fn admissible_rules_grow_by_at_most_one() {
    for rule in rules() {
        if !rule.admissible_basic(HORIZON).admissible {
            continue;
        }
        let t = rule.sequence(HORIZON);
        assert!(t.windows(2).all(|w| w[1] <= w[0] + 1.0 + 1e-12), "{rule:?}");
    }
}

#[test]
fn growth_lower_bounds_hold() {
    for rule in rules().into_iter().filter(ScheduleRule::is_recursive) {
        for (i, &t) in rule.sequence(HORIZON).iter().enumerate() {
            let bound = rule.growth_lower_bound(i + 1).unwrap();
            assert!(t >= bound, "{rule:?} at k = {}: {t} < {bound}", i + 1);
        }
    }
}

#[test]
fn growth_bounds_match_direct_formulas() {
    let re = ScheduleRule::recurrence_exact(1.0);
    assert_eq!(re.growth_lower_bound(5).unwrap(), 3.0);
    let sc = ScheduleRule::sqrt_cap(1.0f64, 1.0);
    assert!((growth_b(1.0f64, 1.0) - 0.4).abs() < 1e-15);
    assert!((sc.growth_lower_bound(11).unwrap() - 5.0).abs() < 1e-12);
    for rule in rules().into_iter().filter(ScheduleRule::is_recursive) {
        assert_eq!(rule.growth_lower_bound(1).unwrap(), rule.t1);
    }
}

#[test]
fn recurrence_saturates_the_basic_condition() {
    let mut t: f64 = 1.0;
    let seq = ScheduleRule::recurrence_exact(1.0).sequence(10_001);
    for (k, &tk) in seq.iter().enumerate().take(10_000) {
        // Independent evaluation of the recurrence.
        assert!((tk - t).abs() <= 1e-12 * t, "k = {}", k + 1);
        let tn = seq[k + 1];
        assert!(
            (tn * tn - tk * tk - tn).abs() <= 1e-10 * tn.max(1.0),
            "k = {}",
            k + 1
        );
        t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
    }
}

#[test]
fn admissibility_examples() {
    assert!(
        ScheduleRule::recurrence_exact(1.0)
            .admissible_basic(1000)
            .admissible
    );
    let linear = ScheduleRule::closed_form(ScheduleVariant::LinearShift { alpha: 3.0 });
    assert!(linear.admissible_basic(1000).admissible);
    let half = ScheduleRule::<f64>::closed_form(ScheduleVariant::HalfK);
    assert!(half.admissible_basic(1000).admissible);
    let s = half.initial_state();
    assert!((s.t_next.powi(2) - s.t_k.powi(2) - s.t_next + 0.25).abs() < 1e-15);
    // t_k = k − 1: margin k − 1 > 0 from k = 2 on.
    let steep = ScheduleRule::closed_form(ScheduleVariant::LinearShift { alpha: 2.0 });
    assert!(steep.validate().is_err());
    assert_eq!(steep.admissible_basic(100).first_violation, Some(2));
    let rec = ScheduleRule::recurrence_exact(1.0).admissible_strong(1.0, 100);
    assert_eq!(rec.first_violation, Some(1));
    for a in [0.5, 1.0, 4.0] {
        assert!(
            ScheduleRule::sqrt_cap(a, 1.0)
                .admissible_strong(a, 1000)
                .admissible
        );
        assert!(
            ScheduleRule::min_cap(a, 1.0)
                .admissible_strong(a, 1000)
                .admissible
        );
        assert!(
            ScheduleRule::min_cap(a, 1.0)
                .admissible_basic(1000)
                .admissible
        );
    }
}

#[test]
fn first_values() {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    assert!((ScheduleRule::recurrence_exact(1.0).initial_state().t_next - phi).abs() < 1e-12);
    assert!((ScheduleRule::sqrt_cap(1.0, 1.0).initial_state().t_next - 2f64.sqrt()).abs() < 1e-12);
    assert!((ScheduleRule::min_cap(1.0, 1.0).initial_state().t_next - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn attouch_cabot_is_rejected_for_consumers_needing_t_at_least_one() {
    let rule = ScheduleRule::closed_form(ScheduleVariant::AttouchCabot { alpha: 3.0 });
    assert_eq!(rule.first_t(), 0.0);
    assert!(rule.initial_state_checked().is_err());
}
