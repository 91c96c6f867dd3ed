import logging
import math
from typing import Dict, Hashable, Sequence

import numpy as np

from graypixel.models import EvalStats

logger = logging.getLogger(__name__)


def angular_error(est, gt) -> float:
    """Angle in degrees between two RGB directions; scale-free in both arguments."""
    a = np.asarray(est, dtype=np.float64)
    b = np.asarray(gt, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if not (na > 0 and nb > 0):
        raise ValueError("angular error is undefined for a zero vector")
    cosine = float(np.dot(a, b) / (na * nb))
    return math.degrees(math.acos(min(1.0, max(-1.0, cosine))))


def summarize(errors: Sequence[float]) -> EvalStats:
    """
    Mean, median, trimean, best-25% and worst-25% of angular errors.

    Quartiles use linear interpolation on the sorted sample; the best and
    worst quarters average floor(n/4) values, at least one.
    """
    values = np.sort(np.asarray(errors, dtype=np.float64))
    if values.size == 0:
        raise ValueError("cannot summarize an empty error list")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    quarter = max(1, values.size // 4)
    mean = float(values.mean())
    best = float(values[:quarter].mean())
    worst = float(values[-quarter:].mean())
    # keep float noise from breaking best25 <= mean <= worst25 on constant lists
    mean = min(max(mean, best), worst)
    return EvalStats(
        mean=mean,
        median=float(median),
        trimean=float((q1 + 2.0 * median + q3) / 4.0),
        best25=best,
        worst25=worst,
        count=int(values.size),
    )


def summarize_by_group(errors: Sequence[float], groups: Sequence[Hashable]) -> Dict[str, EvalStats]:
    """Summary per group label, keyed in sorted label order."""
    if len(errors) != len(groups):
        raise ValueError("errors and groups differ in length")
    buckets: Dict[str, list] = {}
    for err, group in zip(errors, groups):
        buckets.setdefault(str(group), []).append(err)
    return {key: summarize(buckets[key]) for key in sorted(buckets)}
