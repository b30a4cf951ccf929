"""Osgood comparison bounds for ``rho' <= gamma(t) mu(rho)``.

Two moduli are provided: ``mu(r) = r`` (Gronwall) and
``mu(r) = r ln(e + c/r)``. For a modulus with ``M(x) = int_x^a dr/mu(r)``,
any solution satisfies ``M(rho(t)) >= M(rho0) - int_0^t gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

__all__ = [
    "OsgoodModulus",
    "osgood_M",
    "gronwall_bound",
    "log_osgood_bound",
    "log_osgood_display_bound",
    "osgood_bound",
    "ComparisonTriple",
    "comparison_corpus",
    "integrate_comparison",
    "comparison_slack",
]

E = math.e
BISECT_TOL = 1e-10


@dataclass(frozen=True)
class OsgoodModulus:
    """``kind`` is ``"linear"`` or ``"logarithmic"``; ``c`` is used by the latter only."""

    kind: str = "linear"
    a: float = 1.0
    c: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "logarithmic"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if not self.a > 0:
            raise ValueError("range bound a must be positive")
        if self.kind == "logarithmic" and not (self.c is not None and self.c > 0):
            raise ValueError("logarithmic modulus needs c > 0")

    def mu(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "linear":
            return r
        with np.errstate(divide="ignore"):
            return np.where(r > 0, r * np.log(E + self.c / np.where(r > 0, r, 1.0)), 0.0)


def _log_integrand(r: float, c: float) -> float:
    return 1.0 / (r * math.log(E + c / r))


def _M(x: float, mod: OsgoodModulus) -> float:
    """``int_x^a dr/mu``, signed, for any ``x > 0`` (negative when ``x > a``)."""
    if mod.kind == "linear":
        return math.log(mod.a) - math.log(x)
    lo, hi, sign = (x, mod.a, 1.0) if x <= mod.a else (mod.a, x, -1.0)
    # integrate in log r: the integrand becomes 1/ln(e + c/r), smooth and bounded
    val, _ = quad(
        lambda s: 1.0 / math.log(E + mod.c * math.exp(-s)),
        math.log(lo), math.log(hi), epsabs=0.0, epsrel=1e-12, limit=400,
    )
    return sign * val


def osgood_M(x: float, mod: OsgoodModulus) -> float:
    """``M(x) = int_x^a dr / mu(r)`` for ``0 < x <= a``.

    Closed form ``ln a - ln x`` for the linear modulus, adaptive quadrature
    otherwise.
    """
    if not 0 < x <= mod.a:
        raise ValueError(f"need 0 < x <= a = {mod.a}, got {x}")
    return _M(x, mod)


def gronwall_bound(rho0: float, gamma_int: float) -> float:
    if rho0 < 0 or gamma_int < 0:
        raise ValueError("rho0 and gamma_int must be nonnegative")
    return rho0 * math.exp(gamma_int)


def log_osgood_bound(rho0: float, gamma_int: float, c: float) -> float:
    """Explicit bound ``rho0 c e^G / (c - rho0 (e^G - e))`` for ``mu(r) = r ln(e + c/r)``.

    When ``rho0 <= c / (2 (e^G - e))`` (and ``e^G > e``) the value is at most
    ``2 rho0 e^G``. Note: this closed form is not a valid comparison bound for
    the logarithmic modulus; for ``G <= 1`` it is even below ``rho0 e^G``,
    which every solution exceeds. :func:`log_osgood_display_bound` and
    :func:`osgood_bound` are sound.

    Raises:
        ValueError: if the denominator is not positive.
    """
    if rho0 < 0 or gamma_int < 0 or not c > 0:
        raise ValueError("need rho0 >= 0, gamma_int >= 0, c > 0")
    if rho0 == 0:
        return 0.0
    eg = math.exp(gamma_int)
    den = c - rho0 * (eg - E)
    if den <= 0:
        raise ValueError("denominator <= 0: smallness condition violated, bound blows up")
    bound = rho0 * c * eg / den
    if eg > E and rho0 <= c / (2 * (eg - E)):
        assert bound <= 2 * rho0 * eg * (1 + 1e-15)
    return bound


def log_osgood_display_bound(rho0: float, gamma_int: float, c: float) -> float:
    """Bound ``c / ((e + c/rho0)^{e^-G} - e)`` from ``ln ln(e + c/rho0) - ln ln(e + c/rho) <= G``.

    Returns ``inf`` when the denominator is not positive.
    """
    if rho0 < 0 or gamma_int < 0 or not c > 0:
        raise ValueError("need rho0 >= 0, gamma_int >= 0, c > 0")
    if rho0 == 0:
        return 0.0
    den = math.exp(math.exp(-gamma_int) * math.log(E + c / rho0)) - E
    return c / den if den > 0 else math.inf


def osgood_bound(rho0: float, gamma_int: float, mod: OsgoodModulus) -> float:
    """Largest ``rho`` allowed by ``M(rho) >= M(rho0) - G``, by bisection on ``M``.

    ``M`` is strictly decreasing, so the bound is the root of
    ``M(rho) = M(rho0) - G``; it may exceed ``a``. Absolute bracket tolerance
    is ``1e-10`` times the root scale.
    """
    if rho0 < 0 or gamma_int < 0:
        raise ValueError("rho0 and gamma_int must be nonnegative")
    if rho0 == 0:
        return 0.0
    if mod.kind == "linear":
        return gronwall_bound(rho0, gamma_int)
    target = _M(rho0, mod) - gamma_int
    lo, hi = rho0, rho0 * math.exp(gamma_int)
    # the log modulus dominates r, so the root is at least rho0 e^G; expand upward
    while _M(hi, mod) > target:
        lo, hi = hi, hi * 2.0
    while hi - lo > BISECT_TOL * hi:
        mid = 0.5 * (lo + hi)
        if _M(mid, mod) > target:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class ComparisonTriple:
    """Seed value, piecewise-constant rate on ``[0, 1]`` and modulus."""

    rho0: float
    gammas: tuple[float, ...]
    mod: OsgoodModulus
    breaks: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.breaks:
            m = len(self.gammas)
            object.__setattr__(self, "breaks", tuple(np.linspace(0.0, 1.0, m + 1)))

    def gamma_int(self, t: float) -> float:
        total = 0.0
        for g, t0, t1 in zip(self.gammas, self.breaks[:-1], self.breaks[1:]):
            total += g * max(0.0, min(t, t1) - t0)
        return total


def comparison_corpus(seed: int = 0, count: int = 100, kind: str = "logarithmic") -> list[ComparisonTriple]:
    """Seeded triples; ``rho0`` is drawn inside the smallness window of the log bound."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = float(rng.uniform(0.5, 5.0))
        gammas = tuple(float(g) for g in rng.uniform(0.0, 2.5, size=4))
        mod = OsgoodModulus(kind, a=1.0, c=c if kind == "logarithmic" else None)
        G = sum(gammas) / len(gammas)
        eg = math.exp(G)
        cap = c / (2 * (eg - E)) if eg > E else 1.0
        rho0 = float(10 ** rng.uniform(-6, math.log10(min(cap, 0.5))))
        out.append(ComparisonTriple(rho0, gammas, mod))
    return out


def integrate_comparison(triple: ComparisonTriple, nodes: int = 21) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``rho' = gamma(t) mu(rho)`` on ``[0, 1]`` piece by piece; return ``(t, rho)``."""
    ts = np.linspace(0.0, 1.0, nodes)
    rho = np.empty(nodes)
    rho[0] = triple.rho0
    y = triple.rho0
    mod = triple.mod
    pieces = list(zip(triple.gammas, triple.breaks[:-1], triple.breaks[1:]))
    for i in range(1, nodes):
        a, b = ts[i - 1], ts[i]
        for g, t0, t1 in pieces:
            lo, hi = max(a, t0), min(b, t1)
            if hi <= lo or y == 0:
                continue
            sol = solve_ivp(lambda t, r: g * mod.mu(r), (lo, hi), [y], method="DOP853",
                            rtol=1e-12, atol=1e-300)
            y = float(sol.y[0, -1])
        rho[i] = y
    return ts, rho


def comparison_slack(triple: ComparisonTriple, bound_fn, nodes: int = 21) -> float:
    """Minimum over nodes of ``bound(rho0, G(t)) - rho(t)``; negative means the bound failed."""
    ts, rho = integrate_comparison(triple, nodes)
    return min(bound_fn(triple.rho0, triple.gamma_int(t)) - r for t, r in zip(ts, rho))
