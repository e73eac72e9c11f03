"""Finite binary relations between an estimand space and an observation space."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import UnreachableObservation
from .values import Value, memo_value


@dataclass(frozen=True)
class PropertyReport:
    injective: bool
    surjective: bool
    functional: bool
    left_total: bool

    @property
    def is_function(self) -> bool:
        return self.functional and self.left_total


class BinaryRelation:
    """A set of ``(theta, lam)`` pairs with explicit spaces on both sides.

    Immutable after construction.  ``preimage`` is served from an index
    ``lam -> {theta}`` built once here.
    """

    def __init__(self, pairs, theta_space=None, lambda_space=None):
        pairs = frozenset((Value.of(t), Value.of(l)) for t, l in pairs)
        if theta_space is None:
            theta_space = {t for t, _ in pairs}
        if lambda_space is None:
            lambda_space = {l for _, l in pairs}
        self.theta_space = frozenset(Value.of(t) for t in theta_space)
        self.lambda_space = frozenset(Value.of(l) for l in lambda_space)
        self.pairs = pairs
        by_lambda: dict[Value, set] = {}
        by_theta: dict[Value, set] = {}
        for t, l in pairs:
            if t not in self.theta_space or l not in self.lambda_space:
                raise ValueError(f"pair ({t!r}, {l!r}) lies outside the declared spaces")
            by_lambda.setdefault(l, set()).add(t)
            by_theta.setdefault(t, set()).add(l)
        self._by_lambda = {l: frozenset(ts) for l, ts in by_lambda.items()}
        self._by_theta = {t: frozenset(ls) for t, ls in by_theta.items()}

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        t, l = pair
        return (Value.of(t), Value.of(l)) in self.pairs

    def __eq__(self, other):
        if not isinstance(other, BinaryRelation):
            return NotImplemented
        return (
            self.pairs == other.pairs
            and self.theta_space == other.theta_space
            and self.lambda_space == other.lambda_space
        )

    def __hash__(self):
        return hash((self.pairs, self.theta_space, self.lambda_space))

    def __repr__(self):
        return (
            f"BinaryRelation(|pairs|={len(self.pairs)}, |Theta|={len(self.theta_space)}, "
            f"|Lambda|={len(self.lambda_space)})"
        )

    def image(self, theta) -> frozenset:
        return self._by_theta.get(Value.of(theta), frozenset())

    def preimage(self, l0) -> frozenset:
        l0 = Value.of(l0)
        if l0 not in self.lambda_space:
            raise UnreachableObservation(f"{l0.to_python()!r} is not in the observation space")
        return self._by_lambda.get(l0, frozenset())

    def check_properties(self) -> PropertyReport:
        return PropertyReport(
            injective=all(len(ts) <= 1 for ts in self._by_lambda.values()),
            surjective=all(l in self._by_lambda for l in self.lambda_space),
            functional=all(len(ls) <= 1 for ls in self._by_theta.values()),
            left_total=all(t in self._by_theta for t in self.theta_space),
        )

    def identifiable_at(self, l0) -> bool:
        return len(self.preimage(l0)) == 1

    def identifiable_everywhere(self) -> bool:
        return self.check_properties().injective


def check_properties(r: BinaryRelation) -> PropertyReport:
    return r.check_properties()


def preimage(r: BinaryRelation, l0) -> frozenset:
    return r.preimage(l0)


def identifiable_at(r: BinaryRelation, l0) -> bool:
    return r.identifiable_at(l0)


def identifiable_everywhere(r: BinaryRelation) -> bool:
    return r.identifiable_everywhere()


def default_workers() -> int:
    """Worker count from ``IDENT_ENGINE_THREADS`` (default 1)."""
    raw = os.environ.get("IDENT_ENGINE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def induce(universe, cap=None, workers=None) -> BinaryRelation:
    """The relation ``{(theta(S), lambda(S)) : S in universe}``.

    With several workers the base index range is split into contiguous
    chunks; the resulting pair set does not depend on the split.
    """
    from .universe import DEFAULT_CAP, check_cap

    cap = DEFAULT_CAP if cap is None else cap
    size = check_cap(universe, cap)
    workers = default_workers() if workers is None else max(1, workers)
    theta, lam = universe.estimand, universe.observation

    def scan(start, stop):
        key = memo_value()
        return {(key(theta(s)), key(lam(s))) for s in universe.iter_range(start, stop)}

    if workers == 1 or size < 2 * workers:
        pairs = scan(0, size)
    else:
        bounds = [size * k // workers for k in range(workers + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(lambda k: scan(bounds[k], bounds[k + 1]), range(workers))
            pairs = set().union(*chunks)
    return BinaryRelation(pairs)
