from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import trigram_cosine
from stubs import embedding_stub
from flowsmith.similarity import (
    EmbeddingConfig,
    EmbeddingServiceError,
    EmbeddingSimilarity,
    NgramSimilarity,
)

TEXTS = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), max_codepoint=0x4FF),
    max_size=24,
)


class TestNgram:
    def test_identity(self):
        assert NgramSimilarity().sim("restart", "restart") == 1.0

    def test_disjoint_trigrams_score_zero(self):
        assert NgramSimilarity().sim("abc", "xyz") == 0.0

    def test_force_shutdown_pair_matches_frozen_oracle_value(self):
        # computed by the brute-force trigram oracle before the implementation
        expected = 0.8280786712108251
        got = NgramSimilarity().sim("force shutdown", "forced shutdown")
        assert got == pytest.approx(expected, abs=1e-12)
        assert trigram_cosine("force shutdown", "forced shutdown") == pytest.approx(
            expected, abs=1e-12
        )

    def test_agrees_with_oracle_on_random_pairs(self):
        rng = random.Random(17)
        words = ["force", "shutdown", "restart", "watchdog", "check", "health"]
        provider = NgramSimilarity()
        for _ in range(300):
            a = " ".join(rng.choices(words, k=rng.randint(0, 4)))
            b = " ".join(rng.choices(words, k=rng.randint(0, 4)))
            assert provider.sim(a, b) == pytest.approx(
                trigram_cosine(a, b), abs=1e-12
            )

    def test_empty_string_rules(self):
        provider = NgramSimilarity()
        assert provider.sim("", "") == 1.0
        assert provider.sim("x", "") == 0.0
        assert provider.sim("", "x") == 0.0

    def test_case_and_whitespace_normalization(self):
        provider = NgramSimilarity()
        assert provider.sim("Force  Shutdown", "force shutdown") == pytest.approx(1.0)

    @settings(max_examples=150, deadline=None)
    @given(TEXTS, TEXTS)
    def test_contract_properties(self, a, b):
        provider = NgramSimilarity()
        score = provider.sim(a, b)
        assert 0.0 <= score <= 1.0
        assert score == provider.sim(b, a)
        assert provider.sim(a, a) == 1.0


class TestEmbedding:
    def _provider(self, url, **overrides):
        config = EmbeddingConfig(url=url, backoff=0.0, **overrides)
        return EmbeddingSimilarity(config)

    def test_identity_without_service_roundtrip(self):
        provider = self._provider("http://127.0.0.1:9/never-reached")
        assert provider.sim("anything", "anything") == 1.0
        assert provider.sim("", "") == 1.0
        assert provider.sim("x", "") == 0.0

    def test_orthogonal_vectors_map_to_half(self):
        table = {"u": [1.0, 0.0], "v": [0.0, 1.0], "w": [-1.0, 0.0]}
        with embedding_stub(table, dimension=2) as (url, _):
            provider = self._provider(url)
            assert provider.sim("u", "v") == pytest.approx(0.5)
            assert provider.sim("u", "w") == pytest.approx(0.0)

    def test_contract_on_arbitrary_texts(self):
        rng = random.Random(3)
        with embedding_stub(dimension=16) as (url, _):
            provider = self._provider(url)
            for _ in range(25):
                a = "".join(rng.choices("abcdef ", k=rng.randint(1, 10)))
                b = "".join(rng.choices("abcdef ", k=rng.randint(1, 10)))
                score = provider.sim(a, b)
                assert 0.0 <= score <= 1.0
                assert score == provider.sim(b, a)

    def test_vectors_cached_per_text(self):
        with embedding_stub({"a": [1.0, 0.0], "b": [0.0, 1.0]}, dimension=2) as (
            url,
            state,
        ):
            provider = self._provider(url)
            first = provider.sim("a", "b")
            requests_after_first = state["requests"]
            assert provider.sim("a", "b") == first
            assert provider.sim("b", "a") == first
            assert state["requests"] == requests_after_first

    def test_cached_and_fresh_providers_agree(self):
        table = {"a": [0.6, 0.8], "b": [1.0, 0.0]}
        with embedding_stub(table, dimension=2) as (url, _):
            warmed = self._provider(url)
            warmed.sim("a", "b")  # prime the cache
            fresh = self._provider(url)
            assert warmed.sim("a", "b") == fresh.sim("a", "b")

    def test_batching_splits_requests(self):
        with embedding_stub(dimension=4) as (url, state):
            provider = self._provider(url, batch_size=2)
            provider.vectors([f"t{i}" for i in range(5)])
            assert state["requests"] == 3

    def test_retries_then_succeeds(self):
        with embedding_stub({"a": [1.0], "b": [1.0]}, dimension=1, fail_first=2) as (
            url,
            state,
        ):
            provider = self._provider(url, retries=3)
            assert provider.sim("a", "b") == pytest.approx(1.0)
            assert state["requests"] == 3

    def test_exhausted_retries_raise_with_attempts(self):
        with embedding_stub(fail_first=10) as (url, _):
            provider = self._provider(url, retries=2)
            with pytest.raises(EmbeddingServiceError, match="3 attempt"):
                provider.sim("a", "b")

    def test_dimension_mismatch_is_an_error(self):
        with embedding_stub(dimension=4, wrong_dimension=True) as (url, _):
            provider = self._provider(url, retries=1, dimension=4)
            with pytest.raises(EmbeddingServiceError, match="dimension mismatch"):
                provider.sim("a", "b")

    def test_unreachable_service_raises(self):
        provider = self._provider("http://127.0.0.1:9/unreachable", retries=1)
        with pytest.raises(EmbeddingServiceError, match="transport"):
            provider.sim("a", "b")
