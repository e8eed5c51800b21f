use proptest::prelude::*;
use socialdao_core::agents::{
    AceLayer, CaseFeatures, MentalHealthBand, RiskBand, Rubric, SituationBand,
};

// Field order: minor, explicit, threats, deadline, self_harm, prior, monetary.
const WEIGHTS: [u32; 7] = [3, 2, 2, 1, 4, 1, 1];

fn features(bits: u8) -> CaseFeatures {
    CaseFeatures::from_bits(bits)
}

fn bit(bits: u8, i: usize) -> bool {
    bits & (1 << i) != 0
}

fn oracle_score(bits: u8) -> u32 {
    (0..7).filter(|i| bit(bits, *i)).map(|i| WEIGHTS[i]).sum()
}

fn oracle_band(score: u32) -> RiskBand {
    match score {
        0..=2 => RiskBand::Low,
        3..=5 => RiskBand::Elevated,
        6..=8 => RiskBand::High,
        _ => RiskBand::Critical,
    }
}

fn oracle_actions(bits: u8) -> Vec<&'static str> {
    let band = oracle_band(oracle_score(bits));
    let mut out = Vec::new();
    if band == RiskBand::Critical {
        out.push("CrisisProtocol");
    }
    out.push("PreserveEvidence");
    if bit(bits, 2) || bit(bits, 0) {
        out.push("ReportToPolice");
    }
    if band >= RiskBand::Elevated {
        out.push("EngagePsychologist");
    }
    out
}

fn oracle_legal(bits: u8) -> Vec<&'static str> {
    let mut out = Vec::new();
    if bit(bits, 2) {
        out.extend(["FileComplaint", "RequestRestrainingInfo"]);
    }
    if bit(bits, 0) {
        out.push("NotifyChildProtection");
    }
    if bit(bits, 6) {
        out.push("DocumentPaymentDemands");
    }
    out.push("EvidencePreservationGuide");
    out
}

#[test]
fn feature_bits_follow_field_order() {
    let f = features(0b101_0101);
    assert!(f.minor_involved && f.threats_made && f.self_harm_indicators && f.monetary_demand);
    assert!(!f.explicit_content_shared && !f.deadline_pressure && !f.prior_relationship);
}

#[test]
fn all_feature_vectors_match_brute_force() {
    let r = Rubric::bundled();
    for bits in 0..128u8 {
        let v = r.diagnose_sextortion(&features(bits));
        assert_eq!(v.score, oracle_score(bits), "bits {bits:07b}");
        assert_eq!(v.band, oracle_band(v.score));
        assert_eq!(v.recommended_actions, oracle_actions(bits));
        assert!(v.trace.is_well_formed());
        assert_eq!(v.trace.entries()[0].layer_name, AceLayer::Aspirational);
        assert_eq!(v.trace.entries()[5].output, serde_json::json!(v.recommended_actions));

        let legal = r.diagnose_legal_aid(&features(bits), "generic");
        assert_eq!(legal.actions, oracle_legal(bits));
        assert!(!legal.resources.is_empty());
        assert!(legal.trace.is_well_formed());
    }
}

#[test]
fn flipping_any_feature_on_never_lowers_the_score() {
    let r = Rubric::bundled();
    for bits in 0..128u8 {
        for i in 0..7 {
            if !bit(bits, i) {
                let lo = r.diagnose_sextortion(&features(bits)).score;
                let hi = r.diagnose_sextortion(&features(bits | (1 << i))).score;
                assert!(hi >= lo);
                assert!(r.diagnose_sextortion(&features(bits | (1 << i))).band >= r.diagnose_sextortion(&features(bits)).band);
            }
        }
    }
}

#[test]
fn worked_examples() {
    let r = Rubric::bundled();
    let v = r.diagnose_sextortion(&CaseFeatures::default());
    assert_eq!((v.score, v.band, v.recommended_actions.clone()), (0, RiskBand::Low, vec!["PreserveEvidence".to_string()]));
    let f = CaseFeatures { self_harm_indicators: true, minor_involved: true, threats_made: true, ..Default::default() };
    let v = r.diagnose_sextortion(&f);
    assert_eq!((v.score, v.band), (9, RiskBand::Critical));
    assert_eq!(v.recommended_actions[0], "CrisisProtocol");
    let f = CaseFeatures { threats_made: true, monetary_demand: true, ..Default::default() };
    assert_eq!(r.diagnose_legal_aid(&f, "generic").actions.len(), 4);
    let unknown = r.diagnose_legal_aid(&f, "atlantis");
    assert_eq!(unknown.jurisdiction, "generic");
    assert!(!unknown.resources.is_empty());
}

fn mh_band(total: u32) -> MentalHealthBand {
    match total {
        0..=10 => MentalHealthBand::Stable,
        11..=20 => MentalHealthBand::Strained,
        21..=30 => MentalHealthBand::Distressed,
        _ => MentalHealthBand::Crisis,
    }
}

fn sit_band(total: u32) -> SituationBand {
    match total {
        0..=8 => SituationBand::Low,
        9..=16 => SituationBand::Moderate,
        17..=24 => SituationBand::Severe,
        _ => SituationBand::Emergency,
    }
}

/// An answer vector of `len` items in 0..=4 that sums to `total`.
fn vector_with_total(len: usize, total: u32) -> Vec<i64> {
    let mut left = total;
    (0..len)
        .map(|_| {
            let a = left.min(4);
            left -= a;
            a as i64
        })
        .collect()
}

#[test]
fn every_achievable_total_lands_in_exactly_one_band() {
    let r = Rubric::bundled();
    for total in 0..=40 {
        let res = r.score_mental_health_assessment(&vector_with_total(10, total)).unwrap();
        assert_eq!((res.total, res.band), (total, mh_band(total)));
        assert!(!res.guidance.is_empty());
        if res.band == MentalHealthBand::Crisis {
            assert_eq!(res.guidance[0], "immediate-help");
        }
    }
    for total in 0..=32 {
        let res = r.score_situation_assessment(&vector_with_total(8, total)).unwrap();
        assert_eq!((res.total, res.band), (total, sit_band(total)));
        if res.band == SituationBand::Emergency {
            assert!(res.guidance.iter().any(|g| g == "report-to-police"));
        }
    }
}

#[test]
fn malformed_answers_are_refused() {
    let r = Rubric::bundled();
    assert_eq!(r.score_mental_health_assessment(&[0; 9]).unwrap_err().code(), "BadAnswerCount");
    assert_eq!(r.score_situation_assessment(&[0; 9]).unwrap_err().code(), "BadAnswerCount");
    assert_eq!(r.score_situation_assessment(&[0, 0, 0, 5, 0, 0, 0, 0]).unwrap_err().code(), "OutOfRange");
    assert_eq!(r.score_mental_health_assessment(&[0, 0, 0, 0, 0, 0, 0, 0, -1, 0]).unwrap_err().code(), "OutOfRange");
}

#[test]
fn role_information_bundles() {
    let r = Rubric::bundled();
    let info = r.role_information("victim", SituationBand::Emergency).unwrap();
    let cats: Vec<&str> = info.resources.iter().map(|x| x.category.as_str()).collect();
    assert!(cats.contains(&"legal_aid") && cats.contains(&"police"), "{cats:?}");
    for band in SituationBand::ALL {
        assert!(!r.role_information("legal_aid_provider", band).unwrap().resources.is_empty());
    }
    assert_eq!(r.role_information("astronaut", SituationBand::Low).unwrap_err().code(), "UnknownRole");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn assessments_equal_summation(
        mh in prop::collection::vec(0..=4i64, 10),
        sit in prop::collection::vec(0..=4i64, 8),
    ) {
        let r = Rubric::bundled();
        let a = r.score_mental_health_assessment(&mh).unwrap();
        let total: u32 = mh.iter().sum::<i64>() as u32;
        prop_assert_eq!((a.total, a.band), (total, mh_band(total)));
        let b = r.score_situation_assessment(&sit).unwrap();
        let total: u32 = sit.iter().sum::<i64>() as u32;
        prop_assert_eq!((b.total, b.band), (total, sit_band(total)));
    }
}
