"""Clock-arrival skew measurement on leaf waveforms."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .engine import Direction, Waveform, crossing_times
from .errors import PreconditionError


@dataclass(frozen=True)
class SkewReport:
    arrivals: Tuple[Tuple[str, float], ...]
    skew: float
    threshold: float
    direction: str = "rising"

    @property
    def earliest(self) -> float:
        return min(t for _, t in self.arrivals)

    @property
    def latest(self) -> float:
        return max(t for _, t in self.arrivals)


def first_crossing(w: Waveform, threshold: float,
                   window: Optional[Tuple[float, float]] = None) -> Optional[float]:
    lo, hi = window if window is not None else (-float("inf"), float("inf"))
    for t in crossing_times(w, threshold, Direction.RISING):
        if lo <= t < hi:
            return t
    return None


def measure_skew(leaf_waveforms: Sequence[Waveform], threshold: float,
                 window: Optional[Tuple[float, float]] = None) -> SkewReport:
    """First rising crossing of ``threshold`` per leaf inside ``window``;
    skew is the spread between earliest and latest."""
    if not leaf_waveforms:
        raise PreconditionError("no leaf waveforms")
    arrivals = []
    for w in leaf_waveforms:
        t = first_crossing(w, threshold, window)
        if t is None:
            raise PreconditionError(f"leaf {w.node!r} never crosses {threshold!r} V "
                                    "rising in the measurement window")
        arrivals.append((w.node, t))
    times = [t for _, t in arrivals]
    return SkewReport(arrivals=tuple(arrivals), skew=max(times) - min(times),
                      threshold=threshold)
