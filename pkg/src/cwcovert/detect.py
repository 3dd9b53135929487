"""Timing-footprint analysis: how far do keyed durations drift from a reference?

Reports only.  Nothing here decides whether a channel is "detectable".
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .keying import KeyingStatistics
from .morse import Element


def ecdf(sample: Sequence[float], points: np.ndarray) -> np.ndarray:
    """Fraction of ``sample`` at or below each of ``points``."""
    xs = np.sort(np.asarray(sample, dtype=float))
    return np.searchsorted(xs, points, side="right") / xs.size


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    """Largest vertical gap between the two empirical CDFs."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    return float(np.max(np.abs(ecdf(a, pooled) - ecdf(b, pooled))))


def ks_one_sample(sample: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("sample must be non-empty")
    f = cdf(xs)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def normal_cdf(mu: float, sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: ndtr((np.asarray(x) - mu) / sigma)


def wrapped_normal_cdf(mu: float, sigma: float, terms: int = 12) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of mu + sigma*z folded into [mu - sigma, mu + sigma) with period 2*sigma."""
    shifts = 2 * np.arange(-terms, terms + 1)

    def cdf(x):
        u = np.clip((np.asarray(x, dtype=float) - mu) / sigma, -1.0, 1.0)
        mass = ndtr(u[..., None] + shifts) - ndtr(-1.0 + shifts)
        return np.clip(mass.sum(axis=-1), 0.0, 1.0)

    return cdf


def critical_value(n: int, m: Optional[int] = None, c_alpha: float = 1.36) -> float:
    """Large-sample 5% KS critical value (one-sample if ``m`` is None)."""
    if m is None:
        return c_alpha / math.sqrt(n)
    return c_alpha * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class ClassReport:
    element: str
    count: int
    mean: float
    std: float
    ks_statistic: float
    critical_value: float
    outside_fraction: float
    reference_count: Optional[int] = None


@dataclass(frozen=True)
class DetectabilityReport:
    reference: str
    classes: tuple[ClassReport, ...]

    def to_dict(self) -> dict:
        return {"reference": self.reference, "classes": [asdict(c) for c in self.classes]}


def split_by_class(elements: Sequence[Element], durations: Sequence[float]) -> dict[Element, np.ndarray]:
    durations = np.asarray(durations, dtype=float)
    is_dot = np.array([e is Element.DOT for e in elements], dtype=bool)
    return {Element.DOT: durations[is_dot], Element.DASH: durations[~is_dot]}


def detectability_report(
    durations: dict[Element, np.ndarray],
    stats: KeyingStatistics,
    reference: Optional[dict[Element, np.ndarray]] = None,
    model: str = "wrapped",
) -> DetectabilityReport:
    """Compare per-class on-durations with a reference recording or a model.

    Without ``reference``, each class is tested against the distribution an
    unmodulated keyed sender would produce: ``model="wrapped"`` for the
    folded normal, ``"normal"`` for plain N(mean, std).  The outside fraction
    counts durations beyond [mean - 3 std, mean + 4 std].
    """
    if model not in ("wrapped", "normal"):
        raise ValueError("model must be 'wrapped' or 'normal'")
    classes = []
    for elem in (Element.DOT, Element.DASH):
        sample = np.asarray(durations.get(elem, ()), dtype=float)
        if sample.size == 0:
            continue
        mu, sigma = stats.mean(elem), stats.std(elem)
        ref_count = None
        if reference is not None:
            ref = np.asarray(reference.get(elem, ()), dtype=float)
            if ref.size == 0:
                continue
            ks = ks_two_sample(sample, ref)
            crit = critical_value(sample.size, ref.size)
            ref_count = int(ref.size)
        else:
            cdf = wrapped_normal_cdf(mu, sigma) if model == "wrapped" else normal_cdf(mu, sigma)
            ks = ks_one_sample(sample, cdf)
            crit = critical_value(sample.size)
        outside = float(np.mean((sample < mu - 3 * sigma) | (sample > mu + 4 * sigma)))
        classes.append(ClassReport(
            element=elem.name.lower(),
            count=int(sample.size),
            mean=float(sample.mean()),
            std=float(sample.std(ddof=1)) if sample.size > 1 else 0.0,
            ks_statistic=ks,
            critical_value=crit,
            outside_fraction=outside,
            reference_count=ref_count,
        ))
    return DetectabilityReport("recording" if reference is not None else f"{model} model", tuple(classes))
