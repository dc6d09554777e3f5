import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coastlines.correlation import (
    CorrelationSeries,
    SourceWindow,
    SynthSpec,
    filter_category,
    filter_degree,
    ingest_windows,
    max_degree_band,
    mean_self_correlation,
    self_correlation,
    synth_population,
    synth_windows,
    windows_to_jsonl,
)
from coastlines.errors import DegenerateReferenceError, DomainError, DuplicateWindowError, ParseError


def window(t, sources, categories=None):
    return SourceWindow.from_mapping(t, sources, categories)


class TestIngest:
    def test_one_line_two_sources(self):
        ws = ingest_windows(b'{"t": 0, "sources": {"a": 1, "b": 5}}\n', "jsonl")
        assert len(ws) == 1
        assert ws[0].sources == {"a": 1, "b": 5}

    def test_repeated_id_counts_merge(self):
        ws = ingest_windows('{"t": 0, "sources": {"a": 1, "a": 2}}', "jsonl")
        assert ws[0].sources == {"a": 3}

    def test_repeated_id_counts_merge_csv(self):
        ws = ingest_windows("t,source_id,count\n0,a,1\n0,a,2\n0,b,1\n", "csv")
        assert ws[0].sources == {"a": 3, "b": 1}

    @pytest.mark.parametrize("fmt", ["jsonl", "csv"])
    def test_empty_stream(self, fmt):
        assert ingest_windows(io.BytesIO(b""), fmt) == []

    def test_parse_error_carries_line(self):
        text = '{"t": 0, "sources": {"a": 1}}\n\n{"t": 1, "sources": {"a": 0}}\n'
        with pytest.raises(ParseError) as exc:
            ingest_windows(text, "jsonl")
        assert exc.value.line == 3

    def test_malformed_json(self):
        with pytest.raises(ParseError) as exc:
            ingest_windows('{"t": 0, "sources": {"a": 1}}\n{"t": 1,', "jsonl")
        assert exc.value.line == 2

    def test_csv_bad_count(self):
        with pytest.raises(ParseError) as exc:
            ingest_windows("0,a,1\n0,b,x\n", "csv")
        assert exc.value.line == 2

    def test_duplicate_window(self):
        with pytest.raises(DuplicateWindowError):
            ingest_windows('{"t": 4, "sources": {"a": 1}}\n{"t": 4, "sources": {"b": 1}}\n', "jsonl")

    def test_categories_and_order(self):
        text = '{"t": 9, "sources": {"x": 2}}\n{"t": 3, "sources": {"a": 1, "b": 1}, "categories": {"a": "benign"}}\n'
        ws = ingest_windows(text, "jsonl")
        assert [w.t_start for w in ws] == [3, 9]
        assert ws[0].categories == {"a": "benign"}

    def test_jsonl_round_trip(self):
        ws = [window(0, {"a": 3, "b": 1}, {"b": "malicious"}), window(60, {"c": 8})]
        back = ingest_windows(windows_to_jsonl(ws), "jsonl")
        assert [(w.t_start, w.sources, w.categories) for w in back] == [(w.t_start, w.sources, w.categories) for w in ws]


class TestFilters:
    W = window(0, {"a": 1, "b": 2, "c": 3, "d": 4})

    def test_band_one(self):
        assert set(filter_degree(self.W, 1).sources) == {"b", "c"}

    def test_band_zero(self):
        assert set(filter_degree(self.W, 0).sources) == {"a"}

    def test_band_beyond_counts(self):
        assert len(filter_degree(self.W, 20)) == 0

    def test_negative_band(self):
        with pytest.raises(DomainError):
            filter_degree(self.W, -1)

    def test_category(self):
        w = window(0, {"a": 1, "b": 1}, {"a": "benign", "b": "malicious"})
        assert set(filter_category(w, "benign").sources) == {"a"}
        assert filter_category(w, "total") is w

    def test_category_without_metadata(self):
        assert len(filter_category(self.W, "malicious")) == 0

    def test_unknown_tag(self):
        with pytest.raises(DomainError):
            filter_category(self.W, "evil")

    @settings(max_examples=60)
    @given(st.dictionaries(st.text("abcdefgh", min_size=1, max_size=4), st.integers(1, 2**40), max_size=40))
    def test_bands_partition_sources(self, sources):
        w = window(0, sources)
        bands = [filter_degree(w, i) for i in range(max_degree_band([w]) + 1)]
        union = {}
        for b in bands:
            assert not set(b.sources) & set(union)
            union.update(b.sources)
        assert union == w.sources


class TestSelfCorrelation:
    def test_half_overlap(self):
        s = self_correlation([window(0, dict.fromkeys("abcd", 1)), window(60, {"a": 1, "b": 1})], 0)
        assert s.lags.tolist() == [0, 60]
        assert s.values.tolist() == [1.0, 0.5]

    def test_disjoint(self):
        s = self_correlation([window(0, {"a": 1}), window(-5, {"z": 1})], 0)
        assert s.lags.tolist() == [-5, 0]
        assert s.values.tolist() == [0.0, 1.0]

    def test_empty_reference(self):
        with pytest.raises(DegenerateReferenceError):
            self_correlation([window(0, {}), window(1, {"a": 1})], 0)
        with pytest.raises(DegenerateReferenceError):
            self_correlation([window(1, {"a": 1})], 0)

    def test_mean_over_references(self):
        ws = [window(0, {"a": 1, "b": 1}), window(1, {"a": 1})]
        s = mean_self_correlation(ws)
        assert dict(zip(s.lags.tolist(), s.values.tolist())) == {-1: 1.0, 0: 1.0, 1: 0.5}

    @settings(max_examples=40)
    @given(st.lists(st.sets(st.integers(0, 30), max_size=20), min_size=1, max_size=6))
    def test_lag_zero_is_one_and_values_bounded(self, sets):
        ws = [window(60 * k, dict.fromkeys(s, 1)) for k, s in enumerate(sets)]
        ws[0] = window(0, {**ws[0].sources, 99: 1})
        s = self_correlation(ws, 0)
        assert s.values[s.lags == 0].tolist() == [1.0]
        assert np.all((s.values >= 0) & (s.values <= 1))
        for w, v in zip(ws, s.values):
            assert v == len(set(w.sources) & set(ws[0].sources)) / len(ws[0])

    @settings(max_examples=30)
    @given(
        st.lists(st.dictionaries(st.integers(0, 40), st.integers(1, 64), min_size=1, max_size=25), min_size=2, max_size=5),
        st.integers(0, 6),
    )
    def test_filter_then_correlate_commutes(self, maps, band):
        ws = [window(k, m) for k, m in enumerate(maps)]
        pre = [window(w.t_start, filter_degree(w, band).sources) for w in ws]
        filtered = [filter_degree(w, band) for w in ws]
        try:
            a = self_correlation(filtered, 0)
        except DegenerateReferenceError:
            with pytest.raises(DegenerateReferenceError):
                self_correlation(pre, 0)
            return
        b = self_correlation(pre, 0)
        np.testing.assert_array_equal(a.lags, b.lags)
        np.testing.assert_array_equal(a.values, b.values)

    def test_series_csv_round_trip(self):
        s = CorrelationSeries([-60, 0, 60], [0.25, 1.0, 1 / 3], 3)
        text = s.to_csv()
        assert text.splitlines()[0] == "lag_seconds,correlation"
        back = CorrelationSeries.from_csv(text)
        np.testing.assert_array_equal(back.values, s.values)
        np.testing.assert_array_equal(back.lags, s.lags)


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(5000, 0.5, 1.0, n_windows=7)
        a, b = synth_windows(spec, 11), synth_windows(spec, 11)
        assert windows_to_jsonl(a) == windows_to_jsonl(b)
        assert windows_to_jsonl(synth_windows(spec, 12)) != windows_to_jsonl(a)

    def test_lag_zero_exact(self):
        spec = SynthSpec(2000, 0.5, 1.0, n_windows=9, symmetric=True)
        s = self_correlation(synth_windows(spec, 3), 0)
        assert s.lags.tolist() == list(range(-4, 5))
        assert s.values[4] == 1.0

    def test_unit_lag_mean(self):
        spec = SynthSpec(10**6, 1.0, 1.0, n_windows=2)
        s = self_correlation(synth_windows(spec, 2024), 0)
        assert s.values[1] == pytest.approx(0.5, abs=0.0015)

    def test_degree_band_counts(self):
        spec = SynthSpec(1000, 0.5, 1.0, n_windows=3, degree_band=4)
        for w in synth_windows(spec, 1):
            assert np.all((w.counts >= 16) & (w.counts < 32))

    def test_population_ids_disjoint(self):
        specs = [SynthSpec(300, 0.5, 1.0, n_windows=4, category="benign"), SynthSpec(200, 0.3, 2.0, n_windows=4, category="malicious")]
        ws = synth_population(specs, 5)
        assert len(ws[0]) == 500
        assert len(filter_category(ws[0], "malicious")) == 200

    def test_invalid_spec(self):
        with pytest.raises(DomainError):
            SynthSpec(0, 0.5, 1.0)

    def test_fidelity_within_three_sigma(self):
        n = 10**6
        spec = SynthSpec(n, 0.5, 1.0, n_windows=11, window_spacing=3)
        inside = total = 0
        for seed in range(20):
            s = self_correlation(synth_windows(spec, seed), 0)
            p = spec.retention(s.lags)
            sigma = np.sqrt(p * (1 - p) / n)
            nz = s.lags != 0
            inside += int(np.sum(np.abs(s.values[nz] - p[nz]) <= 3 * sigma[nz]))
            total += int(np.sum(nz))
        assert inside >= 0.99 * total
