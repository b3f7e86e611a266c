from __future__ import annotations

import random
from collections import Counter

import pytest

from esgminer.corpus import LabeledHeadline
from esgminer.pipeline import (
    MENTIONED,
    NO_COMPANY,
    NOT_MENTIONED,
    SCORED,
    STAGE_COMPANY,
    STAGE_DOMAIN,
    STAGE_RELEVANCE,
    STAGE_SENTIMENT,
    TERMINAL_IRRELEVANT,
    Correction,
    PipelineError,
    PipelineResult,
    StageOutcome,
    Terminal,
    compute_score,
    propagation_report,
    result_from_record,
    result_to_record,
    run_pipeline,
    validate_label,
)


def headline(hid, text):
    return LabeledHeadline(id=hid, text=text, tags=frozenset(), gold_label="Irrelevant")


def scored_result(hid, domain, sentiment):
    outcomes = (
        StageOutcome(STAGE_COMPANY, MENTIONED, {}),
        StageOutcome(STAGE_RELEVANCE, "relevant", {}),
        StageOutcome(STAGE_DOMAIN, domain, {}),
        StageOutcome(STAGE_SENTIMENT, sentiment, {}),
    )
    return PipelineResult(hid, "TestCorp", outcomes, Terminal(SCORED, domain, sentiment))


FIXTURE = [
    # 4 without the company, 3 irrelevant, 3 scored.
    headline("n1", "quiet markets today"),
    headline("n2", "weather mild this week"),
    headline("n3", "Shell reports earnings"),
    headline("n4", "sports roundup chatter"),
    headline("i1", "TestCorp chatter continues"),
    headline("i2", "TestCorp sponsors chatter event"),
    headline("i3", "TestCorp chatter persists"),
    headline("s1", "TestCorp envtopic negtone spill"),
    headline("s2", "TestCorp soctopic postone award"),
    headline("s3", "TestCorp govtopic neutone filing"),
]


@pytest.fixture()
def results(gazetteer, relevance_clf, domain_clf, sentiment_clf):
    return run_pipeline(
        FIXTURE, "TestCorp", gazetteer, relevance_clf, domain_clf, sentiment_clf
    )


def test_no_company_terminal_has_one_outcome(results):
    by_id = {r.headline_id: r for r in results}
    assert by_id["n1"].terminal.kind == NO_COMPANY
    assert len(by_id["n1"].outcomes) == 1
    assert by_id["n1"].company is None


def test_other_company_mention_is_not_ours(results):
    by_id = {r.headline_id: r for r in results}
    assert by_id["n3"].terminal.kind == NO_COMPANY


def test_irrelevant_terminal_has_two_outcomes(results):
    by_id = {r.headline_id: r for r in results}
    assert by_id["i1"].terminal.kind == TERMINAL_IRRELEVANT
    assert len(by_id["i1"].outcomes) == 2


def test_scored_terminal_has_four_outcomes(results):
    by_id = {r.headline_id: r for r in results}
    assert by_id["s1"].terminal == Terminal(SCORED, "Environmental", "negative")
    assert by_id["s2"].terminal == Terminal(SCORED, "Social", "positive")
    assert by_id["s3"].terminal == Terminal(SCORED, "Governance", "neutral")
    assert len(by_id["s1"].outcomes) == 4


def test_disposition_partition(results):
    kinds = Counter(r.terminal.kind for r in results)
    assert kinds == {NO_COMPANY: 4, TERMINAL_IRRELEVANT: 3, SCORED: 3}
    assert sum(kinds.values()) == len(FIXTURE)


def test_unknown_company_rejected(gazetteer, relevance_clf, domain_clf, sentiment_clf):
    with pytest.raises(PipelineError, match="NoSuchCo"):
        run_pipeline(
            FIXTURE, "NoSuchCo", gazetteer, relevance_clf, domain_clf, sentiment_clf
        )


def test_untrained_model_rejected_before_work(gazetteer, relevance_clf, domain_clf):
    with pytest.raises(PipelineError, match="sentiment"):
        run_pipeline(FIXTURE, "TestCorp", gazetteer, relevance_clf, domain_clf, None)


def test_score_all_neutral_is_zero():
    results = [scored_result(f"h{i}", "Environmental", "neutral") for i in range(4)]
    score = compute_score(results)
    assert score.domains["Environmental"].score == 0.0


def test_score_mean_formula():
    sentiments = ["negative", "negative", "positive", "neutral"]
    results = [
        scored_result(f"h{i}", "Social", s) for i, s in enumerate(sentiments)
    ]
    score = compute_score(results)
    assert score.domains["Social"].score == pytest.approx(-0.25)
    assert score.domains["Social"].n_negative == 2


def test_score_pooled_case_study_counts():
    # 54 negative, 15 positive, 6 neutral in one domain: (-54 + 15) / 75.
    results = (
        [scored_result(f"n{i}", "Environmental", "negative") for i in range(54)]
        + [scored_result(f"p{i}", "Environmental", "positive") for i in range(15)]
        + [scored_result(f"u{i}", "Environmental", "neutral") for i in range(6)]
    )
    score = compute_score(results)
    assert score.domains["Environmental"].score == pytest.approx(-0.52)


def test_score_empty_domain_absent(results):
    score = compute_score([r for r in results if r.terminal.kind != SCORED])
    assert score.domains == {}
    assert score.n_scored == 0


def test_score_counts_by_terminal(results):
    score = compute_score(results)
    assert score.n_scored == 3
    assert score.n_irrelevant == 3
    assert score.n_no_company == 4
    assert set(score.domains) == {"Environmental", "Social", "Governance"}


def test_score_sign_matches_count_difference():
    rng = random.Random(0)
    for _ in range(50):
        n_neg, n_neu, n_pos = rng.randint(0, 5), rng.randint(0, 5), rng.randint(0, 5)
        if n_neg + n_neu + n_pos == 0:
            continue
        results = (
            [scored_result(f"a{i}", "Social", "negative") for i in range(n_neg)]
            + [scored_result(f"b{i}", "Social", "neutral") for i in range(n_neu)]
            + [scored_result(f"c{i}", "Social", "positive") for i in range(n_pos)]
        )
        domain = compute_score(results).domains["Social"]
        assert -1.0 <= domain.score <= 1.0
        if n_pos > n_neg:
            assert domain.score > 0
        elif n_pos < n_neg:
            assert domain.score < 0
        else:
            assert domain.score == 0


def test_correction_overrides_relevance_downstream(
    gazetteer, relevance_clf, domain_clf, sentiment_clf
):
    overrides = {("i1", STAGE_RELEVANCE): Correction("relevant", "reviewer", "t1")}
    base = run_pipeline(
        FIXTURE, "TestCorp", gazetteer, relevance_clf, domain_clf, sentiment_clf
    )
    corrected = run_pipeline(
        FIXTURE,
        "TestCorp",
        gazetteer,
        relevance_clf,
        domain_clf,
        sentiment_clf,
        overrides=overrides,
    )
    base_by_id = {r.headline_id: r for r in base}
    corr_by_id = {r.headline_id: r for r in corrected}
    assert corr_by_id["i1"].terminal.kind == SCORED
    assert len(corr_by_id["i1"].outcomes) == 4
    assert corr_by_id["i1"].outcomes[1].correction.author == "reviewer"
    # Every other result is untouched.
    for hid in base_by_id:
        if hid != "i1":
            assert corr_by_id[hid] == base_by_id[hid]


def test_correction_to_irrelevant_removes_from_scores(
    gazetteer, relevance_clf, domain_clf, sentiment_clf
):
    overrides = {("s1", STAGE_RELEVANCE): Correction("irrelevant", "reviewer", "t1")}
    corrected = run_pipeline(
        FIXTURE,
        "TestCorp",
        gazetteer,
        relevance_clf,
        domain_clf,
        sentiment_clf,
        overrides=overrides,
    )
    by_id = {r.headline_id: r for r in corrected}
    assert by_id["s1"].terminal.kind == TERMINAL_IRRELEVANT
    score = compute_score(corrected)
    assert "Environmental" not in score.domains


def test_sentiment_correction_moves_score():
    results = [scored_result("h0", "Governance", "negative"),
               scored_result("h1", "Governance", "negative")]
    assert compute_score(results).domains["Governance"].score == -1.0
    flipped = [
        results[0],
        PipelineResult(
            "h1",
            "TestCorp",
            results[1].outcomes[:3]
            + (
                StageOutcome(
                    STAGE_SENTIMENT,
                    "negative",
                    {},
                    Correction("positive", "reviewer", "t2"),
                ),
            ),
            Terminal(SCORED, "Governance", "positive"),
        ),
    ]
    assert compute_score(flipped).domains["Governance"].score == 0.0


def test_validate_label():
    validate_label(STAGE_DOMAIN, "Social")
    with pytest.raises(PipelineError):
        validate_label(STAGE_DOMAIN, "positive")
    with pytest.raises(PipelineError):
        validate_label("NoStage", "x")


def test_propagation_perfect_models(results):
    gold = {
        STAGE_COMPANY: {
            r.headline_id: r.outcomes[0].effective for r in results
        },
        STAGE_RELEVANCE: {
            r.headline_id: r.outcomes[1].effective
            for r in results
            if len(r.outcomes) > 1
        },
        STAGE_DOMAIN: {
            r.headline_id: r.outcomes[2].effective
            for r in results
            if len(r.outcomes) > 2
        },
        STAGE_SENTIMENT: {
            r.headline_id: r.outcomes[3].effective
            for r in results
            if len(r.outcomes) > 3
        },
    }
    report = propagation_report(results, gold)
    for stage in report.stages:
        assert stage.fp_forwarded == 0
        assert stage.fn_dropped == 0
        assert stage.metrics.accuracy == 1.0


def test_propagation_flow_conserves_items(results):
    gold = {
        STAGE_COMPANY: {r.headline_id: MENTIONED if r.company else NOT_MENTIONED for r in results},
        STAGE_RELEVANCE: {
            r.headline_id: r.outcomes[1].effective
            for r in results
            if len(r.outcomes) > 1
        },
        STAGE_DOMAIN: {
            r.headline_id: r.outcomes[2].effective
            for r in results
            if len(r.outcomes) > 2
        },
        STAGE_SENTIMENT: {
            r.headline_id: r.outcomes[3].effective
            for r in results
            if len(r.outcomes) > 3
        },
    }
    report = propagation_report(results, gold)
    stages = {s.stage: s for s in report.stages}
    assert stages[STAGE_COMPANY].n_reached == len(FIXTURE)
    assert stages[STAGE_RELEVANCE].n_reached == stages[STAGE_COMPANY].n_forwarded
    assert stages[STAGE_DOMAIN].n_reached == stages[STAGE_RELEVANCE].n_forwarded
    assert stages[STAGE_SENTIMENT].n_reached == stages[STAGE_DOMAIN].n_forwarded
    assert (
        stages[STAGE_COMPANY].n_reached
        == stages[STAGE_COMPANY].n_forwarded + stages[STAGE_COMPANY].n_dropped
    )


def test_propagation_hand_enumerated_fixture(
    gazetteer, relevance_clf, domain_clf, sentiment_clf
):
    # Gold disagrees with the forced predictions in known places:
    # - f1 mentions TestCorp but gold says it should not (stage-1 FP).
    # - f2 has no detectable mention but gold says it should (stage-1 FN).
    # - f3 is predicted relevant but gold says irrelevant (stage-2 FP).
    # - f4 is predicted irrelevant but gold says relevant (stage-2 FN).
    # - f5 is classified Environmental but gold says Social (stage-3 miss).
    fixture = [
        headline("f1", "TestCorp envtopic negtone update"),
        headline("f2", "the testcorp story nobody capitalized"),
        headline("f3", "TestCorp soctopic postone gala"),
        headline("f4", "TestCorp chatter tonight"),
        headline("f5", "TestCorp envtopic neutone report"),
        headline("f6", "unrelated quiet day"),
    ]
    results = run_pipeline(
        fixture, "TestCorp", gazetteer, relevance_clf, domain_clf, sentiment_clf
    )
    gold = {
        STAGE_COMPANY: {
            "f1": NOT_MENTIONED,
            "f2": MENTIONED,
            "f3": MENTIONED,
            "f4": MENTIONED,
            "f5": MENTIONED,
            "f6": NOT_MENTIONED,
        },
        STAGE_RELEVANCE: {
            "f1": "none",
            "f3": "irrelevant",
            "f4": "relevant",
            "f5": "relevant",
        },
        STAGE_DOMAIN: {"f1": "none", "f3": "none", "f5": "Social"},
        STAGE_SENTIMENT: {"f1": "none", "f3": "none", "f5": "neutral"},
    }
    report = propagation_report(results, gold)
    stages = {s.stage: s for s in report.stages}

    s1 = stages[STAGE_COMPANY]
    assert s1.n_reached == 6
    assert s1.n_forwarded == 4  # f1, f3, f4, f5
    assert s1.fp_forwarded == 1  # f1
    assert s1.fn_dropped == 1  # f2

    s2 = stages[STAGE_RELEVANCE]
    assert s2.n_reached == 4
    assert s2.n_forwarded == 3  # f1, f3, f5 predicted relevant
    assert s2.fp_forwarded == 2  # f1 (gold none), f3 (gold irrelevant)
    assert s2.fn_dropped == 1  # f4

    s3 = stages[STAGE_DOMAIN]
    assert s3.n_reached == 3
    assert s3.n_forwarded == 3  # domain classification forwards everything
    assert s3.fp_forwarded == 3  # f1, f3 polluted; f5 misclassified
    assert s3.fn_dropped == 0
    assert s3.metrics_excluding_none is not None
    assert s3.metrics_excluding_none.accuracy == 0.0  # f5 wrong

    s4 = stages[STAGE_SENTIMENT]
    assert s4.n_reached == 3
    assert s4.metrics_excluding_none.accuracy == 1.0  # f5 neutral correct


def test_propagation_missing_gold_names_item(results):
    gold = {STAGE_COMPANY: {}}
    with pytest.raises(PipelineError, match="n1"):
        propagation_report(results, gold)


def test_result_record_roundtrip(results):
    for result in results:
        assert result_from_record(result_to_record(result)) == result
