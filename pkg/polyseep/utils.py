import re
import time

import numpy as np
from typing import (  # noqa
    Sequence,
    Tuple,
)

from polyseep.exceptions import InvalidConfig

# Monitor points on the command line: NAME=(x,y)
MONITOR_RE = re.compile(r"""
^\s*
(?P<name>[A-Za-z_][\w.-]*)
\s*=\s*\(?\s*
(?P<x>[-+0-9.eE]+)\s*,\s*(?P<y>[-+0-9.eE]+)
\s*\)?\s*$
""", re.VERBOSE)


def parse_monitor(text):
    # type: (str) -> Tuple[str, float, float]
    """Parse a ``NAME=(x,y)`` monitor point"""
    match = MONITOR_RE.match(text)
    if not match:
        raise InvalidConfig("Invalid monitor point: {!r}".format(text))
    try:
        return (match.group("name"), float(match.group("x")),
                float(match.group("y")))
    except ValueError:
        raise InvalidConfig("Invalid monitor point: {!r}".format(text))


def format_matrix(name, matrix):
    # type: (str, np.ndarray) -> str
    """Plain-text matrix dump, one row per line, full precision"""
    matrix = np.atleast_2d(np.asarray(matrix))
    lines = ["{} {}x{}".format(name, *matrix.shape)]
    for row in matrix:
        lines.append(" ".join(repr(float(v)) for v in np.real(row)))
    return "\n".join(lines) + "\n"


def relative_norm(a, b):
    # type: (np.ndarray, np.ndarray) -> float
    """||a|| / ||b||, zero when both vanish"""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if nb == 0.0:
        return 0.0 if na == 0.0 else np.inf
    return float(na / nb)


def segment_param(p, a, b):
    # type: (np.ndarray, np.ndarray, np.ndarray) -> Tuple[float, float]
    """Parameter of the projection of ``p`` on segment a-b and its
    distance to the infinite line"""
    d = b - a
    length2 = float(d @ d)
    t = float((p - a) @ d) / length2
    dist = abs(float(d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0]))) / \
        np.sqrt(length2)
    return t, dist


def ms_time():
    # type: () -> int
    """Return current time.time call as ms and a Python int"""
    return int(time.time() * 1000)


def elapsed_ms(start):
    # type: (float) -> float
    return (time.time() - start) * 1000.0


def diameter(points):
    # type: (Sequence) -> float
    pts = np.asarray(points, dtype=float)
    if not len(pts):
        return 0.0
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
