"""Utility helpers: the shard worker pool and argument parsing."""
import concurrent.futures
import logging
import re
from typing import Callable, List, Sequence, Tuple, TypeVar

from sympy import multiplicity

_LOG = logging.getLogger(__name__)

S = TypeVar("S")
R = TypeVar("R")

_TERM = re.compile(r"^(?:(-?\d+)\*?)?p(?:\^(-?\d+))?$")


def map_shards(fn: Callable[[S], R], shards: Sequence[S], workers: int = 1) -> List[R]:
    """Apply ``fn`` to every shard and return the results in shard order.

    Results are collected by index, so the fold a caller performs afterwards
    does not depend on completion order or on the number of workers.
    """
    shards = list(shards)
    if workers <= 1 or len(shards) <= 1:
        return [fn(s) for s in shards]
    results: List[R] = [None] * len(shards)  # type: ignore[list-item]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
        futures = {ex.submit(fn, s): idx for idx, s in enumerate(shards)}
        for fut in concurrent.futures.as_completed(futures):
            results[futures[fut]] = fut.result()
    _LOG.debug("ran %d shards on %d workers", len(shards), workers)
    return results


def split_p_power(n: int, p: int) -> Tuple[int, int]:
    """Write a nonzero integer as (unit, exponent) with n = unit * p^exponent."""
    if n == 0:
        raise ValueError("zero has no p-adic unit part")
    e = int(multiplicity(p, abs(n)))
    return n // p ** e, e


def parse_diagonal(text: str, p: int) -> List[Tuple[int, int]]:
    """Parse diagonal shorthand such as ``1,p,p^3``, ``2p^2`` or ``1,3,27``.

    Returns (unit, exponent) pairs.
    """
    terms = []
    for raw in text.split(","):
        token = raw.strip().replace(" ", "")
        if not token:
            continue
        match = _TERM.match(token)
        if match:
            unit = int(match.group(1)) if match.group(1) else 1
            exponent = int(match.group(2)) if match.group(2) else 1
            u, extra = split_p_power(unit, p)
            terms.append((u, exponent + extra))
            continue
        try:
            value = int(token)
        except ValueError:
            raise ValueError(f"cannot parse diagonal entry {raw!r}") from None
        terms.append(split_p_power(value, p))
    if not terms:
        raise ValueError("empty diagonal")
    return terms


def parse_int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]

