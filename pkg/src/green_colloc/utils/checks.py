import math
from typing import Optional, Sequence, Tuple

import torch
from packaging import version


def torch_version_compare(op, v):
    return getattr(version.parse(torch.__version__).release, f"__{op}__")(version.parse(v).release)


def validate_subinterval_count(n) -> Tuple[bool, str]:
    if isinstance(n, bool) or not isinstance(n, int):
        return False, f"Expected an integer subinterval count, but got n: {n!r} instead."
    if n < 1:
        return False, f"Expected n >= 1, but got n: {n} instead."
    return True, ""


def validate_offsets(offsets: Optional[Sequence[float]], r: int) -> Tuple[bool, str]:
    if isinstance(r, bool) or not isinstance(r, int) or r < 0:
        return False, f"Expected a non-negative integer r, but got r: {r!r} instead."
    if offsets is None:
        return True, ""
    offsets = [float(z) for z in offsets]
    if len(offsets) != 2 * r + 1:
        return False, f"Expected 2r+1 = {2 * r + 1} offsets, but got {len(offsets)} instead."
    for z in offsets:
        if not math.isfinite(z) or z < 0.0 or z > 1.0:
            return False, f"Expected offsets in [0, 1], but got offset: {z} instead."
    for a, b in zip(offsets, offsets[1:]):
        if not a < b:
            return False, f"Expected strictly increasing offsets, but got {a} followed by {b}."
    return True, ""


def validate_confluent_points(
    points: Sequence[float], derivatives: Optional[Sequence[Optional[float]]]
) -> Tuple[bool, str]:
    seen = set()
    multiplicity = 1
    for i, z in enumerate(points):
        if i > 0 and z == points[i - 1]:
            multiplicity += 1
            if multiplicity > 2:
                return False, f"NYI: point {z} repeated more than twice"
            if derivatives is None or derivatives[i] is None:
                return False, f"Missing derivative data for repeated point {z}"
            continue
        if z in seen:
            return False, f"Repeated point {z} is not adjacent to its first occurrence"
        seen.add(z)
        multiplicity = 1
    return True, ""


def validate_n_list(n_list: Sequence[int]) -> Tuple[bool, str]:
    if len(n_list) == 0:
        return False, "Expected a non-empty n-sequence"
    for n in n_list:
        valid, reason = validate_subinterval_count(n)
        if not valid:
            return False, reason
    for a, b in zip(n_list, n_list[1:]):
        if not b > a:
            return False, f"Expected a strictly increasing n-sequence, but got {a} followed by {b}."
        if b % a != 0:
            return False, f"Expected each n to be a multiple of the previous one, but got {a} followed by {b}."
    return True, ""
