"""Canonical, hashable values for estimand and observation spaces.

Relation membership needs exact equality, so every scalar is snapped onto a
grid of step ``eps`` (round-half-even) before it is keyed.  Two values are
equal iff their canonical byte keys are identical.
"""

from __future__ import annotations

import contextlib
import numbers
from collections.abc import Mapping
from fractions import Fraction

DEFAULT_EPS = Fraction(1, 10**9)

_eps = DEFAULT_EPS
_scale = 10**9  # 1/eps when that is an integer, else None

_SCALAR, _MISSING, _LABEL, _TUPLE, _MAP = range(5)


class _Missing:
    """Token for an unobserved cell or an undefined conditional."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __reduce__(self):
        return (_Missing, ())


MISSING = _Missing()


def get_eps() -> Fraction:
    return _eps


def set_eps(eps) -> None:
    """Set the global equality step used by :func:`quantize`."""
    global _eps, _scale
    eps = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    _eps = eps
    inv = 1 / eps
    _scale = inv.numerator if inv.denominator == 1 else None


@contextlib.contextmanager
def equality_tolerance(eps):
    old = _eps
    set_eps(eps)
    try:
        yield
    finally:
        set_eps(old)


def quantize(x) -> int:
    """Index of the grid point nearest to ``x`` (ties to even)."""
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        if _scale is not None:
            return x * _scale
        return round(x / _eps)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(f"cannot quantize {x!r}")
        if _scale is not None and -1e3 < x < 1e3:
            q = x * _scale
            r = round(q)
            # float product is within 3e-4 of the exact one here
            if abs(abs(q - r) - 0.5) > 1e-3:
                return int(r)
        return round(Fraction(x) / _eps)
    if isinstance(x, numbers.Rational):
        return round(Fraction(x) / _eps)
    if isinstance(x, numbers.Real):
        return quantize(float(x))
    raise TypeError(f"not a real scalar: {x!r}")


def dequantize(n: int):
    """Grid point ``n * eps`` as a float."""
    return float(n * _eps)


def canonical(obj):
    """Hashable, ordered canonical form of a payload."""
    if isinstance(obj, Value):
        return obj.canon
    if obj is MISSING or obj is None:
        return (_MISSING,)
    if isinstance(obj, str):
        return (_LABEL, obj)
    if isinstance(obj, (numbers.Real, bool)):
        return (_SCALAR, quantize(obj))
    if isinstance(obj, Mapping):
        items = sorted((str(k), canonical(v)) for k, v in obj.items())
        return (_MAP, tuple(items))
    if isinstance(obj, (tuple, list)):
        return (_TUPLE, tuple(canonical(v) for v in obj))
    if hasattr(obj, "tolist"):  # numpy arrays and scalars
        return canonical(obj.tolist())
    raise TypeError(f"unsupported value payload: {obj!r}")


def _decode(canon):
    tag = canon[0]
    if tag == _SCALAR:
        return dequantize(canon[1])
    if tag == _MISSING:
        return MISSING
    if tag == _LABEL:
        return canon[1]
    if tag == _TUPLE:
        return tuple(_decode(c) for c in canon[1])
    return {k: _decode(v) for k, v in canon[1]}


class Value:
    """An element of an estimand or observation space.

    ``payload`` is kept as given (so exact fractions survive for display);
    equality, hashing and ordering go through the quantized canonical form.
    """

    __slots__ = ("payload", "canon", "_key")

    def __init__(self, payload):
        if isinstance(payload, Value):
            payload = payload.payload
        self.payload = payload
        self.canon = canonical(payload)
        self._key = None

    @classmethod
    def of(cls, obj) -> "Value":
        return obj if isinstance(obj, Value) else cls(obj)

    @property
    def key(self) -> bytes:
        if self._key is None:
            self._key = repr(self.canon).encode()
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Value):
            return NotImplemented
        return self.canon == other.canon

    def __hash__(self):
        return hash(self.canon)

    def __lt__(self, other):
        return self.canon < other.canon

    def __repr__(self):
        return f"Value({self.payload!r})"

    def to_python(self):
        """Payload snapped to the grid: floats, tuples, dicts, labels."""
        return _decode(self.canon)

    def scalar(self):
        """Numeric payload; raises for non-scalar values."""
        if self.canon[0] != _SCALAR:
            raise TypeError(f"{self!r} is not a scalar")
        p = self.payload
        return p if isinstance(p, (int, float, Fraction)) else float(p)

    @property
    def is_scalar(self) -> bool:
        return self.canon[0] == _SCALAR


def memo_value(limit: int = 1 << 20):
    """A ``Value`` constructor memoized on hashable raw payloads.

    Equal raw payloads always canonicalize identically, so scans that see
    the same payload many times skip the quantization work.
    """
    cache: dict = {}

    def make(payload):
        try:
            return cache[payload]
        except KeyError:
            v = Value(payload)
            if len(cache) < limit:
                cache[payload] = v
            return v
        except TypeError:
            return Value(payload)

    return make
