"""Kernel families {phi_r} on the circle and the approximate-identity axioms."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from .circle import (
    TWO_PI,
    CircleGrid,
    PeriodicFunction,
    check_resolution,
    grid_for,
    reduce_angle,
)


def poisson_raw(r: float, x):
    """Unnormalized Poisson kernel (1 - r^2) / (1 - 2 r cos x + r^2)."""
    x = np.asarray(x, dtype=float)
    s = np.sin(0.5 * x)
    return (1.0 - r * r) / ((1.0 - r) ** 2 + 4.0 * r * s * s)


def _peak_breaks(r: float, upper: float = math.pi) -> list[float]:
    # geometric breakpoints resolving the (1 - r)-wide peak for adaptive quadrature
    eps = 1.0 - r
    pts = [0.0]
    t = eps / 8.0
    while t < upper:
        pts.append(t)
        t *= 4.0
    pts.append(upper)
    return pts


def _quad_pieces(func, pts) -> float:
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = sp_integrate.quad(func, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total


def normalizer(alpha: float, r: float, grid: Optional[CircleGrid] = None) -> float:
    """c_alpha(r) = integral over T of P_r(t)^alpha.

    With a grid: periodic trapezoid (the grid must satisfy the resolution
    rule).  Without one: adaptive quadrature on a geometric partition of
    [0, pi], usable for r far beyond any feasible grid.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    if r == 0.0:
        return TWO_PI
    if grid is not None:
        check_resolution(grid, r)
        return float(grid.h * np.sum(poisson_raw(r, grid.nodes) ** alpha))
    return 2.0 * _quad_pieces(lambda t: poisson_raw(r, t) ** alpha, _peak_breaks(r))


@dataclass(frozen=True)
class KernelFamily:
    """A parametrized family {phi_r}: poisson, frac_poisson(alpha) or custom.

    Custom families take either a vectorized ``rule(r, x)`` or a table
    {r: (x_nodes, values)} interpolated linearly and periodically in x.
    """

    kind: str
    alpha: float = 1.0
    rule: Optional[Callable] = field(default=None, compare=False)
    table: Optional[dict] = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("poisson", "frac_poisson", "custom"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "frac_poisson" and not 0.0 < self.alpha <= 1.0:
            raise ValueError("frac_poisson needs alpha in (0, 1]")
        if self.kind == "custom" and self.rule is None and self.table is None:
            raise ValueError("custom families need a rule or a table")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "frac_poisson":
            return f"frac_poisson({self.alpha:g})"
        return self.kind

    @property
    def builtin(self) -> bool:
        return self.kind != "custom"

    def slice(self, r: float, grid: Optional[CircleGrid] = None) -> "KernelSlice":
        if self.kind == "poisson":
            return poisson_slice(r)
        if self.kind == "frac_poisson":
            return frac_poisson_slice(self.alpha, r, grid)
        return KernelSlice(self, r, grid)

    def to_spec(self) -> dict:
        if self.kind == "poisson":
            return {"kind": "poisson"}
        if self.kind == "frac_poisson":
            return {"kind": "frac_poisson", "alpha": self.alpha}
        return {"kind": "custom", "name": self.label}


POISSON = KernelFamily("poisson")


def frac_poisson(alpha: float = 0.5) -> KernelFamily:
    return KernelFamily("frac_poisson", alpha=float(alpha))


def custom_family(rule: Callable, name: str = "custom") -> KernelFamily:
    return KernelFamily("custom", rule=rule, name=name)


def load_kernel_table(path) -> KernelFamily:
    """Custom family from a CSV with header ``r,x,value``."""
    rows: dict[float, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["r", "x", "value"]:
            raise ValueError(f"{path}: kernel table header must be r,x,value")
        for row in reader:
            rows.setdefault(float(row["r"]), []).append((float(row["x"]), float(row["value"])))
    table = {}
    for r, pts in rows.items():
        pts.sort()
        xs = np.array([p[0] for p in pts])
        vs = np.array([p[1] for p in pts])
        table[r] = (xs, vs)
    return KernelFamily("custom", table=table, name=Path(path).stem)


def family_from_spec(spec) -> KernelFamily:
    """Parse a kernel spec: a dict, a JSON string, or a path to a JSON file."""
    if isinstance(spec, KernelFamily):
        return spec
    if isinstance(spec, str):
        p = Path(spec)
        spec = json.loads(p.read_text()) if p.suffix == ".json" and p.exists() else json.loads(spec)
    kind = spec.get("kind")
    if kind == "poisson":
        return POISSON
    if kind == "frac_poisson":
        return frac_poisson(float(spec.get("alpha", 0.5)))
    if kind == "custom":
        if "table" not in spec:
            raise ValueError("custom kernel spec needs a 'table' CSV path")
        return load_kernel_table(spec["table"])
    raise ValueError(f"unknown kernel spec {spec!r}")


class KernelSlice:
    """One member phi_r of a family, with memoized norms."""

    def __init__(self, family: KernelFamily, r: float, grid: Optional[CircleGrid] = None):
        if not 0.0 < r < 1.0 and not (family.kind == "custom" and r == 0.0):
            raise ValueError(f"r must lie in (0, 1), got {r}")
        self.family = family
        self.r = float(r)
        self.grid = grid
        self._majorants: dict[int, np.ndarray] = {}
        if family.kind == "custom" and family.table is not None:
            key = min(family.table, key=lambda t: abs(t - r))
            if abs(key - r) > 1e-12:
                raise ValueError(f"r={r} not present in the kernel table")
            self._tab = family.table[key]

    def __repr__(self) -> str:
        return f"KernelSlice({self.family.label}, r={self.r:g})"

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.family.kind
        if kind == "poisson":
            out = poisson_raw(self.r, x) / TWO_PI
        elif kind == "frac_poisson":
            out = poisson_raw(self.r, x) ** self.family.alpha / self.c
        elif self.family.table is not None:
            xs, vs = self._tab
            out = np.interp(np.mod(x, TWO_PI), np.mod(xs, TWO_PI), vs, period=TWO_PI)
        else:
            out = np.asarray(self.family.rule(self.r, reduce_angle(x)), dtype=float)
            out = np.broadcast_to(out, x.shape).astype(float)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def as_function(self) -> PeriodicFunction:
        return PeriodicFunction("analytic", self.evaluate, name=repr(self))

    @property
    def monotone(self) -> bool:
        """Even and non-increasing in |x| (true for the built-in families)."""
        return self.family.builtin

    def _grid(self, grid: Optional[CircleGrid]) -> CircleGrid:
        g = grid or self.grid or grid_for(self.r, 1024)
        check_resolution(g, self.r)
        return g

    # -- normalization and norms ---------------------------------------------

    @cached_property
    def c(self) -> float:
        """Normalizing constant: 2 pi for Poisson, c_alpha(r) for frac_poisson, 1 otherwise."""
        if self.family.kind == "poisson":
            return TWO_PI
        if self.family.kind == "frac_poisson":
            return normalizer(self.family.alpha, self.r, self.grid)
        return 1.0

    @cached_property
    def sup_norm(self) -> float:
        kind = self.family.kind
        if kind == "poisson":
            return (1.0 + self.r) / (TWO_PI * (1.0 - self.r))
        if kind == "frac_poisson":
            return ((1.0 + self.r) / (1.0 - self.r)) ** self.family.alpha / self.c
        g = self._grid(None)
        vals = np.abs(self.evaluate(g.nodes))
        j = int(np.argmax(vals))
        x = g.nodes
        h = g.h
        best = _golden_max(lambda t: abs(self.evaluate(t)), x[j] - h, x[j], x[j] + h)
        return max(float(vals[j]), best)

    def majorant_samples(self, grid: Optional[CircleGrid] = None) -> np.ndarray:
        """phi_r^* at the grid nodes (suffix maximum of the folded |phi_r|)."""
        g = self._grid(grid)
        if g.n not in self._majorants:
            vals = np.abs(self.evaluate(g.nodes))
            half = g.n // 2
            j = np.arange(half + 1)
            folded = np.maximum(vals[j], vals[(g.n - j) % g.n])
            suffix = np.maximum.accumulate(folded[::-1])[::-1]
            full = suffix[np.minimum(np.arange(g.n), g.n - np.arange(g.n))]
            self._majorants[g.n] = full
        return self._majorants[g.n]

    def majorant_at(self, x, grid: Optional[CircleGrid] = None):
        """phi_r^*(x) = sup of |phi_r(t)| over |x| <= |t| <= pi."""
        x = np.abs(reduce_angle(x))
        if self.monotone:
            return np.abs(self.evaluate(x))
        g = self._grid(grid)
        m = self.majorant_samples(g)
        nxt = np.minimum(np.ceil(x / g.h).astype(np.int64), g.n // 2)
        local = np.maximum(np.abs(self.evaluate(x)), np.abs(self.evaluate(-x)))
        out = np.maximum(local, m[nxt])
        return out if np.ndim(out) else float(out)

    def q_norm(self, q: float, grid: Optional[CircleGrid] = None) -> float:
        if q == math.inf:
            return self.sup_norm
        if q < 1:
            raise ValueError("q must be >= 1")
        g = self._grid(grid)
        return float((g.h * np.sum(np.abs(self.evaluate(g.nodes)) ** q)) ** (1.0 / q))

    def mass(self, a: float) -> float:
        """Integral of phi_r over [-a, a] (a clipped to pi)."""
        a = min(max(float(a), 0.0), math.pi)
        if a == 0.0:
            return 0.0
        r = self.r
        if self.family.kind == "poisson":
            if a >= math.pi:
                return 1.0
            return (2.0 / math.pi) * math.atan((1.0 + r) / (1.0 - r) * math.tan(0.5 * a))
        if self.family.kind == "frac_poisson":
            alpha = self.family.alpha
            val = _quad_pieces(lambda t: poisson_raw(r, t) ** alpha, _peak_breaks(r, a))
            return 2.0 * val / self.c
        g = self._grid(None)
        fine = np.linspace(-a, a, 4 * int(a / g.h) + 9)
        return float(np.trapezoid(self.evaluate(fine), fine))

    def abs_mass(self, a: float) -> float:
        if self.monotone:
            return self.mass(a)
        a = min(max(float(a), 0.0), math.pi)
        g = self._grid(None)
        fine = np.linspace(-a, a, 4 * int(a / g.h) + 9)
        return float(np.trapezoid(np.abs(self.evaluate(fine)), fine))


def _golden_max(func, a: float, b: float, c: float, iterations: int = 40) -> float:
    """Golden-section refinement of a maximum bracketed by a < b < c."""
    fa, fb, fc = func(a), func(b), func(c)
    if fb >= fa and fb >= fc:
        res = optimize.minimize_scalar(lambda t: -func(t), bracket=(a, b, c), method="golden",
                                       options={"maxiter": iterations})
        return max(float(-res.fun), fb)
    res = optimize.minimize_scalar(lambda t: -func(t), bounds=(a, c), method="bounded",
                                   options={"maxiter": iterations, "xatol": 1e-14})
    return max(float(-res.fun), fa, fb, fc)


def poisson_slice(r: float) -> KernelSlice:
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    return KernelSlice(POISSON, r)


def frac_poisson_slice(alpha: float, r: float, grid: Optional[CircleGrid] = None) -> KernelSlice:
    if grid is not None:
        check_resolution(grid, r)
    return KernelSlice(frac_poisson(alpha), r, grid)


def majorant(slice_: KernelSlice, grid: CircleGrid) -> PeriodicFunction:
    return PeriodicFunction("sampled", samples=slice_.majorant_samples(grid),
                            name=f"majorant({slice_!r})")


def sup_norm(slice_: KernelSlice) -> float:
    return slice_.sup_norm


def q_norm(slice_: KernelSlice, q: float, grid: Optional[CircleGrid] = None) -> float:
    return slice_.q_norm(q, grid)


GridRule = Callable[[float], CircleGrid]


def default_grid_rule(min_n: int = 1024) -> GridRule:
    return lambda r: grid_for(r, min_n)


def majorant_mass(slice_: KernelSlice, grid: Optional[CircleGrid] = None) -> float:
    g = slice_._grid(grid)
    return float(g.h * np.sum(slice_.majorant_samples(g)))


def c_phi_estimate(family: KernelFamily, r_seq: Sequence[float],
                   grid_rule: Optional[GridRule] = None) -> float:
    """max over r_seq of ||phi_r^*||_1."""
    r_seq = list(r_seq)
    if not r_seq:
        raise ValueError("r_seq must be non-empty")
    rule = grid_rule or default_grid_rule()
    return max(majorant_mass(family.slice(r, rule(r)), rule(r)) for r in r_seq)


@dataclass
class AxiomReport:
    r_values: np.ndarray
    x_probes: np.ndarray
    phi1_deviation: np.ndarray        # |int phi_r - 1| per r
    phi2_profile: np.ndarray          # phi_r^*(x) per (probe, r)
    phi3_sup: float                   # running sup of ||phi_r^*||_1
    phi3_values: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flags

    def rows(self):
        for i, r in enumerate(self.r_values):
            yield {
                "r": float(r),
                "phi1_deviation": float(self.phi1_deviation[i]),
                "phi3_mass": float(self.phi3_values[i]),
                **{f"phi2_x{k}": float(self.phi2_profile[k, i]) for k in range(len(self.x_probes))},
            }


def check_identity_axioms(family: KernelFamily, r_seq: Sequence[float],
                          x_probes: Sequence[float] = (math.pi / 4,),
                          grid_rule: Optional[GridRule] = None,
                          phi1_tol: float = 1e-6) -> AxiomReport:
    r_seq = np.asarray(list(r_seq), dtype=float)
    x_probes = np.asarray(list(x_probes), dtype=float)
    if np.any(np.diff(r_seq) <= 0):
        raise ValueError("r_seq must be increasing")
    if np.any(x_probes <= 0) or np.any(x_probes > math.pi):
        raise ValueError("x probes must lie in (0, pi]")
    rule = grid_rule or default_grid_rule()
    dev = np.empty(len(r_seq))
    masses = np.empty(len(r_seq))
    prof = np.empty((len(x_probes), len(r_seq)))
    for i, r in enumerate(r_seq):
        g = rule(r)
        s = family.slice(r, g)
        dev[i] = abs(g.h * np.sum(s.evaluate(g.nodes)) - 1.0)
        masses[i] = majorant_mass(s, g)
        prof[:, i] = s.majorant_at(x_probes, g)
    flags = []
    if np.any(dev > phi1_tol):
        flags.append(f"Phi1: max |int phi_r - 1| = {dev.max():.3g} exceeds {phi1_tol:g}")
    if len(r_seq) > 1 and np.any(np.diff(prof, axis=1) > 0):
        flags.append("Phi2: majorant profile not decreasing along r_seq")
    if not np.all(np.isfinite(masses)):
        flags.append("Phi3: non-finite majorant mass")
    return AxiomReport(r_seq, x_probes, dev, prof, float(np.max(masses)), masses, flags)
