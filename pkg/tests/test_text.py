"""Tokenizer, vocabulary, and template realization."""

import numpy as np
import pytest

from taskdial.errors import ConfigurationError, ContractError
from taskdial.kb import EntityRecord, KBResult
from taskdial.ontology import SystemAction, movie_ontology
from taskdial.simulator import UserAct, UserGoal
from taskdial.templates import load_asset_templates, realize_system_action, realize_user_act
from taskdial.tokens import BOS, EOS, UNK, build_vocab, tokenize

ONT = movie_ontology()
LIB = load_asset_templates("movie")

GOAL = UserGoal(values={"num_tickets": "2", "movie": "inception", "theater": "regal",
                        "date": "friday", "time": "7pm"})


def test_tokenize_empty():
    vocab = build_vocab(["hello"])
    assert tokenize("", vocab) == [BOS, EOS]


def test_tokenize_punctuation_and_case():
    vocab = build_vocab(["two tickets please"])
    ids = tokenize("Two tickets, please!", vocab)
    assert ids == [BOS, vocab.lookup("two"), vocab.lookup("tickets"),
                   vocab.lookup("please"), EOS]
    assert UNK not in ids


def test_tokenize_oov_maps_to_unk():
    vocab = build_vocab(["two tickets please"])
    ids = tokenize("two zyzzyva please", vocab)
    assert ids == [BOS, vocab.lookup("two"), UNK, vocab.lookup("please"), EOS]


def test_build_vocab_threshold():
    v1 = build_vocab(["a a b"], min_count=1)
    assert "a" in v1 and "b" in v1
    v2 = build_vocab(["a a b"], min_count=2)
    assert "a" in v2 and "b" not in v2


def test_build_vocab_deterministic():
    corpus = ["the cat sat", "the dog ran", "a cat ran fast"]
    v1 = build_vocab(corpus)
    v2 = build_vocab(corpus)
    assert v1.id_to_token == v2.id_to_token
    assert v1.token_to_id == v2.token_to_id


def test_build_vocab_empty_corpus():
    with pytest.raises(ConfigurationError):
        build_vocab([])


def test_system_greet_and_request_fixed_text():
    greet = realize_system_action(SystemAction("greet"), [], None, None, LIB, ONT)
    assert greet == "hello , how can i help you ?"
    req = realize_system_action(SystemAction("request", "date"), [], None, None, LIB, ONT)
    assert req == "what date would you like ?"


def test_offer_fills_all_placeholders():
    entity = EntityRecord("e1", {"movie": "inception", "theater": "regal",
                                 "date": "friday", "time": "7pm"}, 4)
    text = realize_system_action(SystemAction("offer"), [], entity,
                                 KBResult(("e1",), 1, True), LIB, ONT)
    assert "inception" in text and "regal" in text and "7pm" in text
    assert "{" not in text and "}" not in text


def test_offer_without_entity_is_contract_error():
    with pytest.raises(ContractError):
        realize_system_action(SystemAction("offer"), [], None, KBResult((), 1, False),
                              LIB, ONT)


def test_user_inform_single_and_multi_slot():
    rng = np.random.default_rng(0)
    text = realize_user_act(UserAct("inform", ("movie",), ("inception",)), GOAL,
                            LIB.user_train, rng)
    assert "inception" in text and "{" not in text
    multi = realize_user_act(UserAct("inform", ("time", "movie"), ("7pm", "inception")),
                             GOAL, LIB.user_train, rng)
    assert "7pm" in multi and "inception" in multi and " and " in multi


def test_user_affirm_from_fixture():
    rng = np.random.default_rng(1)
    texts = {realize_user_act(UserAct("affirm"), GOAL, LIB.user_train, rng)
             for _ in range(50)}
    assert texts == {"yes that works", "yes please book it"}


def test_unknown_user_act_rejected():
    with pytest.raises(ContractError):
        realize_user_act(UserAct("negotiate"), GOAL, LIB.user_train,
                         np.random.default_rng(0))


def test_extended_is_strict_superset():
    for act, train_templates in LIB.user_train.templates.items():
        extended = LIB.user_extended.templates[act]
        assert set(train_templates) < set(extended), act


def test_extended_coverage_all_variants_observed():
    rng = np.random.default_rng(7)
    seen = set()
    options = LIB.user_extended.for_act("inform_movie")
    for _ in range(10_000):
        seen.add(realize_user_act(UserAct("inform", ("movie",), ("dune",)),
                                  UserGoal(values={**GOAL.values, "movie": "dune"}),
                                  LIB.user_extended, rng))
    assert len(seen) == len(options)


def _train_corpus_texts():
    """Every train-set realization for a fixed goal, across all user acts."""
    rng = np.random.default_rng(3)
    texts = []
    for act_key, templates in LIB.user_train.templates.items():
        for _ in range(20 * len(templates)):
            if act_key.startswith("inform_"):
                slot = act_key.removeprefix("inform_")
                act = UserAct("inform", (slot,), (GOAL.values[slot],))
            elif act_key.startswith("extra_"):
                continue  # fragments surface through multi-slot informs
            else:
                act = UserAct(act_key)
            texts.append(realize_user_act(act, GOAL, LIB.user_train, rng))
    return texts


def test_extended_set_guarantees_distribution_shift():
    """Each act has an extended-only variant with an UNK or unseen bigram."""
    train_texts = _train_corpus_texts()
    vocab = build_vocab(train_texts)
    train_bigrams = set()
    for text in train_texts:
        ids = tokenize(text, vocab)
        train_bigrams.update(zip(ids, ids[1:]))
    for act_key in LIB.user_train.templates:
        if act_key.startswith("extra_"):
            continue
        extended_only = (set(LIB.user_extended.templates[act_key])
                         - set(LIB.user_train.templates[act_key]))
        assert extended_only, act_key
        shifted = False
        for template in extended_only:
            text = template.format(**GOAL.values)
            ids = tokenize(text, vocab)
            bigrams = set(zip(ids, ids[1:]))
            if UNK in ids or not bigrams <= train_bigrams:
                shifted = True
                break
        assert shifted, f"extended variants of {act_key} are not a distribution shift"


def test_realize_deterministic_given_template_index():
    rng1, rng2 = np.random.default_rng(5), np.random.default_rng(5)
    act = UserAct("inform", ("movie",), ("inception",))
    assert (realize_user_act(act, GOAL, LIB.user_extended, rng1)
            == realize_user_act(act, GOAL, LIB.user_extended, rng2))
