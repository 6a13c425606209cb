"""Named analytic field families and their JSON form.

Every builder evaluates to an array of shape ``z.shape + (n, n)``.  JSON
configs describe builders as ``{"kind": ..., ...}``; complex matrix entries
are written as numbers or strings such as ``"0.5-2j"``, and a bare scalar
``s`` stands for ``s * I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError


def parse_complex(value) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"not a complex number: {value!r}") from exc
    raise ConfigError(f"not a complex number: {value!r}")


def parse_matrix(value, n: int | None = None) -> np.ndarray:
    """Scalar -> scalar * I (needs ``n``); nested list -> square matrix."""
    if isinstance(value, np.ndarray):
        m = value.astype(np.complex128)
    elif isinstance(value, (list, tuple)):
        try:
            m = np.array([[parse_complex(v) for v in row] for row in value], dtype=np.complex128)
        except TypeError as exc:
            raise ConfigError(f"matrix must be a list of rows: {value!r}") from exc
    else:
        s = parse_complex(value)
        if n is None:
            return np.array([[s]])
        return s * np.eye(n, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        if m.shape == (1, 1):
            return m[0, 0] * np.eye(n, dtype=np.complex128)
        raise ConfigError(f"matrix of size {m.shape[0]} does not match N={n}")
    return m


def _matrix_for(value, n: int) -> np.ndarray:
    return parse_matrix(value, n)


class FieldBuilder:
    """Base class; subclasses implement ``evaluate(z, n)``."""

    def evaluate(self, z: np.ndarray, n: int) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, as_builder(other)))

    def __matmul__(self, other):
        return Product((self, as_builder(other)))


def _bcast(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.broadcast_to(m, z.shape + m.shape).copy()


@dataclass(frozen=True)
class Zero(FieldBuilder):
    def evaluate(self, z, n):
        return np.zeros(z.shape + (n, n), dtype=np.complex128)


@dataclass(frozen=True)
class Identity(FieldBuilder):
    def evaluate(self, z, n):
        return _bcast(np.eye(n, dtype=np.complex128), z)


@dataclass(frozen=True)
class Constant(FieldBuilder):
    matrix: object

    def evaluate(self, z, n):
        return _bcast(_matrix_for(self.matrix, n), z)


@dataclass(frozen=True)
class HolomorphicPolynomial(FieldBuilder):
    """Sum of ``c_k z^k``."""

    coeffs: Sequence

    def _variable(self, z):
        return z

    def evaluate(self, z, n):
        w = self._variable(z)
        out = np.zeros(z.shape + (n, n), dtype=np.complex128)
        # Horner on matrix coefficients
        for c in reversed(list(self.coeffs)):
            out = out * w[..., None, None] + _matrix_for(c, n)
        return out


@dataclass(frozen=True)
class AntiholomorphicPolynomial(HolomorphicPolynomial):
    """Sum of ``c_k zbar^k``."""

    def _variable(self, z):
        return np.conj(z)


@dataclass(frozen=True)
class GaussianBump(FieldBuilder):
    """``M exp(-|z - center|^2 / sigma^2)``."""

    matrix: object = 1.0
    center: complex = 0j
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("gaussian-bump needs sigma > 0")

    def evaluate(self, z, n):
        w = np.exp(-np.abs(z - complex(self.center)) ** 2 / self.sigma ** 2)
        return w[..., None, None] * _matrix_for(self.matrix, n)


@dataclass(frozen=True)
class AntiholomorphicExp(FieldBuilder):
    """``expm(-M zbar)``: solves dbar g + M g = 0 for constant ``M``."""

    matrix: object = 1.0

    def evaluate(self, z, n):
        m = _matrix_for(self.matrix, n)
        if n == 1:
            return np.exp(-m[0, 0] * np.conj(z))[..., None, None]
        flat = np.conj(z).ravel()
        out = np.stack([expm(-m * w) for w in flat])
        return out.reshape(z.shape + (n, n))


@dataclass(frozen=True)
class IndicatorDisk(FieldBuilder):
    """``M`` inside the closed disk ``|z - center| <= radius``, else 0."""

    matrix: object = 1.0
    center: complex = 0j
    radius: float = 1.0

    def evaluate(self, z, n):
        inside = (np.abs(z - complex(self.center)) <= self.radius).astype(float)
        return inside[..., None, None] * _matrix_for(self.matrix, n)


@dataclass(frozen=True)
class Sum(FieldBuilder):
    terms: tuple

    def evaluate(self, z, n):
        if not self.terms:
            return Zero().evaluate(z, n)
        return sum(as_builder(t).evaluate(z, n) for t in self.terms)


@dataclass(frozen=True)
class Product(FieldBuilder):
    """Nodewise matrix product, left to right."""

    factors: tuple

    def evaluate(self, z, n):
        out = Identity().evaluate(z, n)
        for f in self.factors:
            out = out @ as_builder(f).evaluate(z, n)
        return out


def _center(value) -> complex:
    if value is None:
        return 0j
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError("center must be [x, y]")
        return complex(float(value[0]), float(value[1]))
    return parse_complex(value)


def builder_from_config(cfg) -> FieldBuilder:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"builder must be an object with a 'kind': {cfg!r}")
    kind = cfg["kind"]
    try:
        if kind == "zero":
            return Zero()
        if kind in ("identity", "identity-constant"):
            return Identity()
        if kind == "constant":
            return Constant(cfg["matrix"])
        if kind == "holomorphic-polynomial":
            return HolomorphicPolynomial(tuple(cfg["coeffs"]))
        if kind == "antiholomorphic-polynomial":
            return AntiholomorphicPolynomial(tuple(cfg["coeffs"]))
        if kind == "gaussian-bump":
            return GaussianBump(cfg.get("matrix", 1.0), _center(cfg.get("center")),
                                float(cfg.get("sigma", 1.0)))
        if kind == "antiholomorphic-exp":
            return AntiholomorphicExp(cfg.get("matrix", 1.0))
        if kind == "indicator-disk":
            return IndicatorDisk(cfg.get("matrix", 1.0), _center(cfg.get("center")),
                                 float(cfg.get("radius", 1.0)))
        if kind == "sum":
            return Sum(tuple(builder_from_config(t) for t in cfg["terms"]))
        if kind == "product":
            return Product(tuple(builder_from_config(t) for t in cfg["factors"]))
    except KeyError as exc:
        raise ConfigError(f"builder {kind!r} is missing parameter {exc.args[0]!r}") from exc
    raise ConfigError(f"unknown builder kind {kind!r}")


def as_builder(obj) -> FieldBuilder:
    if isinstance(obj, FieldBuilder):
        return obj
    if isinstance(obj, dict):
        return builder_from_config(obj)
    if callable(obj):
        return _Callable(obj)
    raise ConfigError(f"cannot interpret {obj!r} as a field builder")


@dataclass(frozen=True)
class _Callable(FieldBuilder):
    """Adapter for ``fn(z, n) -> array`` callables."""

    fn: object

    def evaluate(self, z, n):
        out = np.asarray(self.fn(z, n), dtype=np.complex128)
        if out.shape == z.shape:
            out = out[..., None, None] * np.eye(n)
        if out.shape != z.shape + (n, n):
            raise ConfigError(f"builder callable returned shape {out.shape}")
        return out
