"""
Tests for log collection, binning, normalization and the evidence window.
"""

import logging

import numpy as np
import pytest

from pairagent.errors import SchemaMismatchError
from pairagent.logs.collect import NO_ANCHOR, LogDelta, advance_anchors, collect_incremental
from pairagent.logs.evidence import merge_rounds
from pairagent.logs.features import (
    MISSING,
    OTHER_INDICATOR,
    Column,
    ColumnKind,
    FeatureMatrix,
    fit_bins,
    normalize,
)
from pairagent.sim.continuum import build_continuum, step_round
from pairagent.sim.models import LogEntry, MetricModel


def _entry(node, ts, event_type="heartbeat", round_=0, **metrics):
    return LogEntry(
        node=node,
        ts=ts,
        round=round_,
        event_id=f"{node}/{ts}",
        event_type=event_type,
        metrics=metrics,
    )


def _matrix(rounds, rows_per_round, columns=None, node_prefix="n"):
    columns = columns or (Column("a", ColumnKind.HW, 2),)
    keys = [(f"{node_prefix}{i}", r) for r in rounds for i in range(rows_per_round)]
    values = np.zeros((len(keys), len(columns)), dtype=np.int64)
    return FeatureMatrix(columns=columns, values=values, keys=keys, round=max(rounds, default=0))


class TestCollectIncremental:
    """Test checkpoint-anchored collection."""

    def test_only_entries_after_anchor(self, small_scenario):
        state = build_continuum(small_scenario)
        state.logs["edge-1"] = [_entry("edge-1", ts) for ts in range(5, 16)]
        delta = collect_incremental(state, {"edge-1": 10})
        assert [e.ts for e in delta.entries["edge-1"]] == [11, 12, 13, 14, 15]

    def test_pure_read(self, small_scenario):
        state = build_continuum(small_scenario)
        step_round(state, small_scenario.truth, 0)
        anchors = {"edge-1": NO_ANCHOR}
        collect_incremental(state, anchors)
        assert anchors == {"edge-1": NO_ANCHOR}
        assert state.round == 1

    def test_no_new_entries(self, small_scenario):
        state = build_continuum(small_scenario)
        step_round(state, small_scenario.truth, 0)
        first = collect_incremental(state, {})
        anchors = advance_anchors({}, first)
        second = collect_incremental(state, anchors, round_label=7)
        assert second.is_empty
        assert second.round == 7
        assert len(second) == 0

    def test_duplicates_returned_once(self, small_scenario):
        state = build_continuum(small_scenario)
        entry = _entry("edge-1", 3)
        state.logs["edge-1"] = [entry, entry]
        delta = collect_incremental(state, {})
        assert delta.entries["edge-1"] == [entry]

    def test_unreachable_node_catches_up_later(self, small_scenario):
        state = build_continuum(small_scenario)
        step_round(state, small_scenario.truth, 0)
        delta = collect_incremental(state, {}, unreachable={"fog-1"})
        assert delta.entries["fog-1"] == []
        anchors = advance_anchors({}, delta)
        assert "fog-1" not in anchors

        step_round(state, small_scenario.truth, 0)
        later = collect_incremental(state, anchors)
        assert {e.round for e in later.entries["fog-1"]} == {0, 1}

    def test_deltas_disjoint_and_complete(self, crash_scenario):
        state = build_continuum(crash_scenario)
        anchors: dict[str, int] = {}
        collected = []
        for _ in range(6):
            step_round(state, crash_scenario.truth, 2)
            delta = collect_incremental(state, anchors)
            collected.extend(delta.all_entries())
            anchors = advance_anchors(anchors, delta)
        keys = [e.key for e in collected]
        assert len(keys) == len(set(keys))
        assert set(keys) == {e.key for e in state.entries()}


class TestFitBins:
    """Test quantile discretization."""

    def test_linear_quantiles(self):
        entries = [_entry("n", i, exec_time=float(i)) for i in range(1, 10)]
        bins = fit_bins(entries, 3)
        assert bins.thresholds["exec_time"] == pytest.approx([11 / 3, 19 / 3])
        assert bins.bin("exec_time", 7.0) == 2
        assert bins.bin("exec_time", 1.0) == 0

    def test_value_on_threshold_goes_up(self):
        entries = [_entry("n", i, m=float(i)) for i in range(1, 10)]
        bins = fit_bins(entries, 2)
        assert bins.thresholds["m"] == [5.0]
        assert bins.bin("m", 5.0) == 1

    def test_constant_metric_is_degenerate(self, caplog):
        entries = [_entry("n", i, power=50.0) for i in range(10)]
        with caplog.at_level(logging.WARNING):
            bins = fit_bins(entries, 3)
        assert "power" in bins.degenerate
        assert bins.arity("power") == 1
        assert bins.schema()[0].degenerate
        assert "degenerate" in caplog.text

    def test_single_bin(self):
        entries = [_entry("n", i, m=float(i)) for i in range(5)]
        bins = fit_bins(entries, 1)
        assert bins.thresholds["m"] == []
        assert bins.arity("m") == 1

    def test_metric_models_fix_order_and_kind(self):
        models = [
            MetricModel(name="zeta", kind="sw-context", mean=0, std=1, nominal="high"),
            MetricModel(name="alpha", kind="hw-context", mean=0, std=1),
        ]
        entries = [_entry("n", i, zeta=float(i), alpha=float(-i)) for i in range(9)]
        bins = fit_bins(entries, 3, models)
        assert bins.metrics == ["zeta", "alpha"]
        assert bins.kinds["zeta"] == ColumnKind.SW
        assert bins.nominal_bin("zeta") == 2
        assert bins.nominal_bin("alpha") == 0


class TestNormalize:
    """Test the (node, round) feature matrix."""

    def _bins(self):
        return fit_bins([_entry("n", i, exec_time=float(i)) for i in range(1, 10)], 3)

    def test_binning_and_indicators(self):
        bins = self._bins()
        delta = LogDelta(
            round=4,
            entries={
                "a": [
                    _entry("a", 1, round_=4, exec_time=7.0),
                    _entry("a", 2, "crash", round_=4),
                ],
                "b": [_entry("b", 1, round_=4, exec_time=2.0)],
            },
        )
        matrix = normalize(delta, bins)
        assert matrix.keys == [("a", 4), ("b", 4)]
        assert matrix.row(0)["exec_time"] == 2
        assert matrix.row(0)["node_crash"] == 1
        assert matrix.row(1)["node_crash"] == 0
        assert matrix.round == 4

    def test_absent_metric_is_missing(self):
        delta = LogDelta(round=0, entries={"a": [_entry("a", 1, "crash")]})
        matrix = normalize(delta, self._bins())
        assert matrix.row(0)["exec_time"] == MISSING

    def test_empty_delta_keeps_schema(self):
        bins = self._bins()
        matrix = normalize(LogDelta(round=0), bins)
        assert matrix.n_rows == 0
        assert matrix.columns == bins.schema()
        assert all(c.arity == 2 for c in matrix.columns if c.is_fault)

    def test_unknown_event_goes_to_other(self, caplog):
        delta = LogDelta(round=0, entries={"a": [_entry("a", 1, "cosmic-ray")]})
        with caplog.at_level(logging.WARNING):
            matrix = normalize(delta, self._bins())
        assert matrix.row(0)[OTHER_INDICATOR] == 1
        assert "cosmic-ray" in caplog.text

    def test_deterministic(self, crash_scenario):
        state = build_continuum(crash_scenario)
        for _ in range(5):
            step_round(state, crash_scenario.truth, 1)
        delta = collect_incremental(state, {})
        bins = fit_bins(delta.all_entries(), 3, crash_scenario.metrics)
        assert normalize(delta, bins).to_table() == normalize(delta, bins).to_table()

    def test_table_export_header(self):
        matrix = normalize(
            LogDelta(round=0, entries={"a": [_entry("a", 1, exec_time=7.0)]}), self._bins()
        )
        header, columns, row = matrix.to_table().splitlines()
        assert header.startswith("# schema exec_time:hw-context:3 node_crash:fault-indicator:2")
        assert columns.split("\t")[:3] == ["node", "round", "exec_time"]
        assert row.split("\t")[:3] == ["a", "0", "2"]


class TestMergeRounds:
    """Test the sliding evidence window."""

    def test_unbounded_window_concatenates(self):
        history = merge_rounds(None, _matrix([0, 1], 3), None)
        merged = merge_rounds(history, _matrix([2], 3), None)
        assert merged.n_rows == 9

    def test_window_of_one(self):
        history = merge_rounds(None, _matrix([0, 1], 3), None)
        merged = merge_rounds(history, _matrix([2], 4), 1)
        assert merged.n_rows == 4
        assert merged.rounds == [2]

    def test_window_keeps_most_recent_rounds(self):
        history = merge_rounds(None, _matrix(list(range(8)), 5), None)
        assert history.n_rows == 40
        merged = merge_rounds(history, _matrix([8], 10), 8)
        assert merged.n_rows == 45
        assert merged.rounds == list(range(1, 9))

    def test_schema_mismatch(self):
        history = merge_rounds(None, _matrix([0], 2), None)
        other = _matrix([1], 2, columns=(Column("b", ColumnKind.SW, 3),))
        with pytest.raises(SchemaMismatchError):
            merge_rounds(history, other, None)

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            merge_rounds(None, _matrix([0], 1), 0)
