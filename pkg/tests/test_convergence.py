import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgder.convergence import (
    PlateauDetector,
    RestartController,
    RestartDecision,
    Stop,
    StopReason,
    Verdict,
    should_stop,
)
from sgder.errors import DataError


def rescan_trigger(losses, patience):
    """Oracle: first index i whose distance to the latest strict running
    minimum at or before i equals ``patience``; None if it never happens."""
    for i in range(len(losses)):
        last_improve = max(j for j in range(i + 1) if all(losses[j] < losses[m] for m in range(j)))
        if i - last_improve == patience:
            return i
    return None


def first_plateau(losses, patience, min_delta=0.0):
    det = PlateauDetector(patience, min_delta)
    for i, x in enumerate(losses):
        if det.observe(x) is Verdict.PLATEAU:
            return i
    return None


class TestObserve:
    def test_strict_improvement_never_fires(self):
        det = PlateauDetector(3)
        assert [det.observe(x) for x in (1.0, 0.9, 0.8)] == [Verdict.CONTINUE] * 3

    def test_flat_sequence_fires_after_patience(self):
        det = PlateauDetector(3)
        verdicts = [det.observe(1.0) for _ in range(4)]
        assert verdicts == [Verdict.CONTINUE] * 3 + [Verdict.PLATEAU]

    def test_min_delta_hand_trace(self):
        # best=1.0; 0.97 misses 0.95 (counter 1); 0.96 misses again (counter 2 == patience)
        det = PlateauDetector(2, min_delta=0.05)
        assert [det.observe(x) for x in (1.0, 0.97, 0.96)] == [Verdict.CONTINUE, Verdict.CONTINUE, Verdict.PLATEAU]

    def test_min_delta_improvement_resets(self):
        # 0.94 < 1.0 - 0.05, so it counts as an improvement and resets the counter
        det = PlateauDetector(2, min_delta=0.05)
        assert [det.observe(x) for x in (1.0, 0.97, 0.94)] == [Verdict.CONTINUE] * 3
        assert det.best_loss == 0.94 and det.epochs_since_improve == 0

    def test_nan_is_rejected(self):
        with pytest.raises(DataError):
            PlateauDetector(3).observe(math.nan)

    def test_reset_keeps_best(self):
        det = PlateauDetector(1)
        det.observe(0.5)
        assert det.observe(0.6) is Verdict.PLATEAU
        det.reset_counter()
        assert det.best_loss == 0.5 and det.epochs_since_improve == 0


@given(st.lists(st.integers(0, 6), min_size=1, max_size=40), st.integers(1, 8))
def test_trigger_matches_rescan_oracle(values, patience):
    losses = [float(v) for v in values]
    assert first_plateau(losses, patience) == rescan_trigger(losses, patience)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=40), st.integers(1, 8), st.floats(0, 1))
def test_detector_invariants(losses, patience, min_delta):
    det = PlateauDetector(patience, min_delta)
    best = math.inf
    for x in losses:
        verdict = det.observe(x)
        assert det.best_loss <= best
        best = det.best_loss
        if verdict is Verdict.CONTINUE:
            assert det.epochs_since_improve < patience
        else:
            det.reset_counter()


class TestShouldStop:
    @pytest.mark.parametrize(
        "bests,elapsed,expected",
        [
            ([0.5], 10, False),
            ([0.5, 0.45], 10, False),
            ([0.5, 0.45, 0.47], 10, True),
            ([0.5, 0.5], 10, True),
            ([0.5], 100, True),
        ],
    )
    def test_examples(self, bests, elapsed, expected):
        assert should_stop(bests, elapsed, 100) is expected


class TestOnPlateau:
    def test_first_restart_doubles_lr(self):
        ctrl, det = RestartController(0.01, 500), PlateauDetector(2)
        for x in (0.5, 0.6, 0.6):
            ctrl.record(x)
            verdict = det.observe(x)
        assert verdict is Verdict.PLATEAU
        decision = ctrl.on_plateau(det)
        assert decision == RestartDecision(1, 0.02)
        assert det.epochs_since_improve == 0 and det.best_loss == 0.5

    def test_stop_when_segment_fails(self):
        ctrl = RestartController(0.01, 500, restart_count=2, segment_bests=[0.5, 0.4, 0.45], epochs_elapsed=90)
        assert ctrl.on_plateau(PlateauDetector(5)) == Stop(StopReason.NO_IMPROVEMENT)

    def test_stop_at_budget(self):
        ctrl = RestartController(0.01, 50, segment_bests=[0.3], epochs_elapsed=50)
        assert ctrl.on_plateau(PlateauDetector(5)) == Stop(StopReason.BUDGET_EXHAUSTED)

    def test_issued_lrs_are_escalating(self):
        ctrl, det = RestartController(0.01, 10_000), PlateauDetector(1)
        lrs, loss = [], 1.0
        for _ in range(6):
            loss -= 0.1
            ctrl.record(loss)
            det.observe(loss)
            ctrl.record(loss)
            assert det.observe(loss) is Verdict.PLATEAU
            lrs.append(ctrl.on_plateau(det).new_lr)
        assert lrs == pytest.approx([0.01 * k for k in range(2, 8)], rel=1e-15)

    def test_segment_bests_track_minimum(self):
        ctrl = RestartController(0.01, 100)
        for x in (0.9, 0.7, 0.8):
            ctrl.record(x)
        assert ctrl.segment_bests == [0.7] and ctrl.global_best == 0.7


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=12), st.integers(1, 30))
def test_stopping_is_sticky(bests, extra):
    # once true, appending more epochs or keeping the same bests keeps it true
    for i in range(1, len(bests) + 1):
        if should_stop(bests[:i], 0, 10**6):
            assert should_stop(bests[:i], extra, 10**6)
            assert should_stop(bests[:i], 10**6 + extra, 10**6)
