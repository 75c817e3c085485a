//! Phase structure of the two-photon Dicke mean field with strong spin dissipation.

use qcrit_core::dissipative::*;

fn spec(n: usize, gamma: f64, steps: usize) -> PhaseDiagramSpec {
    PhaseDiagramSpec {
        omega: 1.0,
        n,
        rates: DissipationRates::new(1.0, gamma, gamma).unwrap(),
        g_range: (0.05, 4.0),
        g_steps: steps,
        omega_q_range: (0.05, 4.0),
        omega_q_steps: steps,
    }
}

#[test]
fn superradiant_region_shrinks_with_n_at_moderate_dissipation() {
    let areas: Vec<f64> = [10, 50, 100]
        .iter()
        .map(|&n| phase_diagram(&spec(n, 1.5, 30)).unwrap().superradiant_stable_fraction())
        .collect();
    assert!(areas[0] > areas[1] && areas[1] >= areas[2], "{areas:?}");
    assert!(areas[0] > 0.0);
}

#[test]
fn strong_dissipation_has_bistable_region() {
    let d = phase_diagram(&spec(100, 3.0, 30)).unwrap();
    assert!(d.points.iter().any(|p| p.label == DissipativePhase::Bistable));
    // Every stable superradiant point is inside the physical Bloch ball.
    for p in &d.points {
        if matches!(p.label, DissipativePhase::Superradiant | DissipativePhase::Bistable) {
            assert_eq!(p.superradiant_physical, Some(true));
        }
    }
}

#[test]
fn stability_onset_in_gamma_is_sharp() {
    let gammas: Vec<f64> = (0..=40).map(|k| 0.5 + k as f64 * 0.075).collect();
    let mut onsets = Vec::new();
    for o in [1.0, 1.5, 2.0, 2.5, 3.0] {
        for g in [1.5, 2.0, 2.5, 3.0] {
            let base = TwoPhotonParams {
                omega: 1.0,
                omega_q: o,
                g,
                n: 100,
                rates: DissipationRates::new(1.0, 1.0, 1.0).unwrap(),
            };
            if let Some(x) = superradiant_stability_onset(&base, &gammas).unwrap() {
                onsets.push(x);
            }
        }
    }
    onsets.sort_by(f64::total_cmp);
    let median = onsets[onsets.len() / 2];
    assert!((median - 1.6).abs() <= 0.2, "{onsets:?}");
}
