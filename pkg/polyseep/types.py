"""Common types"""
from typing import Any, Dict, Sequence, Tuple  # noqa

JSONDict = Dict[str, Any]

Point = Tuple[float, float]

Polyline = Sequence[Point]

# (node id, node id) of an element or boundary edge
EdgeKey = Tuple[int, int]
