"""Numeric substrate on the circle T = R / 2piZ.

Grids, periodic functions, periodic trapezoid quadrature, L^p norms,
local means and total variation.  Every other module works on top of
these objects.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# nodes per unit of (1 - r) demanded by the resolution rule for peaked kernels
RESOLUTION_FACTOR = 64.0

# Gauss-Legendre rule used for cell integrals of functions without a primitive
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def reduce_angle(x):
    """Map radians to the representative in (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    y = x - TWO_PI * np.round(x / TWO_PI)
    y = np.where(y <= -math.pi, y + TWO_PI, y)
    return y if y.ndim else float(y)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CircleGrid:
    """Uniform partition x_j = 2 pi j / n of [0, 2 pi)."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or not _is_power_of_two(int(self.n)):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(self.n)

    @property
    def folded_nodes(self) -> np.ndarray:
        """|x_j| with x_j taken in (-pi, pi]."""
        return np.abs(reduce_angle(self.nodes))

    def refined(self, factor: int = 2) -> "CircleGrid":
        return CircleGrid(self.n * factor)


def make_grid(n: int) -> CircleGrid:
    return CircleGrid(int(n) if isinstance(n, (np.integer,)) else n)


def required_n(r: float) -> int:
    """Smallest power-of-two grid size allowed for a kernel slice at ``r``."""
    need = RESOLUTION_FACTOR / (1.0 - r)
    return max(8, 1 << int(math.ceil(math.log2(need - 1e-9))))


def check_resolution(grid: CircleGrid, r: float) -> None:
    if grid.n * (1.0 - r) < RESOLUTION_FACTOR * (1.0 - 1e-12):
        raise ValueError(
            f"grid n={grid.n} too coarse for r={r}: need n >= 64/(1-r) = "
            f"{RESOLUTION_FACTOR / (1.0 - r):.1f}"
        )


def grid_for(r: float, min_n: int = 8) -> CircleGrid:
    """Default grid rule: the coarsest admissible grid, but never below ``min_n``."""
    return CircleGrid(max(required_n(r), int(min_n)))


@dataclass(frozen=True)
class QuadratureReport:
    value: float
    refinement_error: float

    def __float__(self) -> float:
        return self.value


class PeriodicFunction:
    """A 2pi-periodic real function.

    ``rule`` is a vectorized callable on arguments already reduced to
    (-pi, pi].  ``breakpoints`` lists the points (in (-pi, pi]) where the
    function jumps or is singular; they switch quadrature from node sampling
    to cell averages.  ``primitive`` is an optional antiderivative of the
    function on [-pi, pi], used for exact interval integrals.  Sampled
    functions carry node values on their own grid and interpolate linearly.
    """

    KINDS = ("analytic", "piecewise_constant", "piecewise_smooth", "sampled")

    def __init__(
        self,
        kind: str,
        rule: Optional[Callable] = None,
        *,
        breakpoints: Sequence[float] = (),
        primitive: Optional[Callable] = None,
        samples: Optional[np.ndarray] = None,
        abs_power: Optional[Callable[[float], "PeriodicFunction"]] = None,
        name: str = "",
    ):
        if kind not in self.KINDS:
            raise ValueError(f"unknown function kind {kind!r}")
        if kind == "sampled":
            if samples is None:
                raise ValueError("sampled functions need node values")
            samples = np.asarray(samples, dtype=float)
            CircleGrid(len(samples))
        elif rule is None:
            raise ValueError(f"{kind} functions need an evaluation rule")
        if kind in ("piecewise_constant", "piecewise_smooth") and breakpoints is None:
            raise ValueError("piecewise functions need a breakpoint list")
        self.kind = kind
        self.rule = rule
        self.breakpoints = tuple(sorted(float(reduce_angle(b)) for b in breakpoints))
        self.primitive = primitive
        self.samples = samples
        self._abs_power = abs_power
        self.name = name
        self._table = None

    def __repr__(self) -> str:
        label = self.name or self.kind
        return f"PeriodicFunction({label})"

    @property
    def sample_grid(self) -> Optional[CircleGrid]:
        return None if self.samples is None else CircleGrid(len(self.samples))

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sampled":
            n = len(self.samples)
            u = np.mod(x, TWO_PI) / (TWO_PI / n)
            i0 = np.floor(u).astype(np.int64) % n
            frac = u - np.floor(u)
            out = (1.0 - frac) * self.samples[i0] + frac * self.samples[(i0 + 1) % n]
        else:
            out = np.asarray(self.rule(reduce_angle(x)), dtype=float)
            out = np.broadcast_to(out, x.shape).astype(float)
        return out if out.ndim else float(out)

    # -- integrals ---------------------------------------------------------

    def _primitive_periodic(self, x):
        """Continuous antiderivative G on R with G(x + 2pi) = G(x) + total."""
        F = self.primitive
        lo, hi = F(np.asarray(-math.pi)), F(np.asarray(math.pi))
        total = float(hi - lo)
        x = np.asarray(x, dtype=float)
        red = reduce_angle(x)
        k = np.round((x - red) / TWO_PI)
        return np.asarray(F(red), dtype=float) - float(lo) + total * k

    def _cumulative_table(self):
        # fine cumulative integral from -pi, with exact splitting at breakpoints
        if self._table is None:
            m = 1 << 15
            edges = np.linspace(-math.pi, math.pi, m + 1)
            cells = _cell_integrals_gl(self, edges)
            self._table = (edges, np.concatenate(([0.0], np.cumsum(cells))))
        return self._table

    def _antiderivative(self, x):
        if self.primitive is not None:
            return self._primitive_periodic(x)
        edges, cum = self._cumulative_table()
        total = cum[-1]
        x = np.asarray(x, dtype=float)
        red = reduce_angle(x)
        k = np.round((x - red) / TWO_PI)
        return np.interp(red, edges, cum) + total * k

    def interval_integral(self, a, b):
        """Integral of the function over [a, b] (vectorized, b >= a allowed to wrap)."""
        if self.kind == "sampled":
            return _sampled_interval_integral(self.samples, a, b)
        return self._antiderivative(b) - self._antiderivative(a)

    def cell_values(self, grid: CircleGrid) -> np.ndarray:
        """Quadrature weights w_j such that h * sum w_j g(x_j) integrates f g.

        Smooth functions are sampled at the nodes (periodic trapezoid);
        functions with breakpoints are averaged over the cell around each
        node, which integrates jumps and integrable singularities exactly
        when a primitive is known.
        """
        if self.kind == "sampled":
            if len(self.samples) == grid.n:
                return self.samples.copy()
            return np.asarray(self.evaluate(grid.nodes))
        if self.kind == "analytic" and not self.breakpoints:
            return np.asarray(self.evaluate(grid.nodes), dtype=float)
        x = grid.nodes
        h = grid.h
        if self.primitive is not None:
            return np.asarray(self.interval_integral(x - h / 2, x + h / 2)) / h
        edges = np.concatenate((x - h / 2, [x[-1] + h / 2]))
        return _cell_integrals_gl(self, edges) / h

    def abs_pow(self, p: float = 1.0) -> "PeriodicFunction":
        """|f|^p as a new function (keeps exact primitives when known)."""
        if self._abs_power is not None:
            return self._abs_power(p)
        if self.kind == "sampled":
            return PeriodicFunction("sampled", samples=np.abs(self.samples) ** p,
                                    name=f"|{self.name}|^{p:g}")
        rule = self.rule
        return PeriodicFunction(
            self.kind,
            lambda x: np.abs(rule(x)) ** p,
            breakpoints=self.breakpoints,
            name=f"|{self.name}|^{p:g}",
        )


def _cell_integrals_gl(f: PeriodicFunction, edges: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integral over each [edges[i], edges[i+1]], split at breakpoints."""
    a, b = edges[:-1], edges[1:]
    out = _gl(f.rule, a, b)
    lo, hi = edges[0], edges[-1]
    splits: dict[int, list[float]] = {}
    for bp in f.breakpoints:
        k0 = math.floor((lo - bp) / TWO_PI)
        c = bp + k0 * TWO_PI
        while c < hi:
            if c > lo:
                i = int(np.searchsorted(edges, c)) - 1
                if 0 <= i < len(a) and a[i] < c < b[i]:
                    splits.setdefault(i, []).append(c)
            c += TWO_PI
    for i, cs in splits.items():
        pts = np.array([a[i]] + sorted(cs) + [b[i]])
        out[i] = _gl(f.rule, pts[:-1], pts[1:]).sum()
    return out


def _gl(rule, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(rule(reduce_angle(pts)), dtype=float)
    vals = np.broadcast_to(vals, pts.shape)
    return half * (vals @ _GL_W)


def _sampled_interval_integral(samples, a, b):
    # exact integral of the piecewise-linear interpolant
    n = len(samples)
    h = TWO_PI / n
    trap = 0.5 * (samples + np.roll(samples, -1)) * h
    cum = np.concatenate(([0.0], np.cumsum(trap)))
    total = cum[-1]

    def G(x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x / TWO_PI)
        u = (x - k * TWO_PI) / h
        i = np.minimum(np.floor(u).astype(np.int64), n - 1)
        s = u - i
        v0 = samples[i]
        v1 = samples[(i + 1) % n]
        part = h * (v0 * s + 0.5 * (v1 - v0) * s * s)
        return cum[i] + part + total * k

    return G(b) - G(a)


# -- constructors -----------------------------------------------------------


def constant(c: float) -> PeriodicFunction:
    c = float(c)
    return PeriodicFunction(
        "analytic",
        lambda x: np.full(np.shape(x), c),
        primitive=lambda x: c * np.asarray(x, dtype=float),
        abs_power=lambda p: constant(abs(c) ** p),
        name=f"const({c:g})",
    )


def cosine(k: int = 1, amplitude: float = 1.0) -> PeriodicFunction:
    """amplitude * cos(k t)."""
    k = int(k)
    if k == 0:
        return constant(amplitude)
    return PeriodicFunction(
        "analytic",
        lambda x: amplitude * np.cos(k * x),
        primitive=lambda x: amplitude * np.sin(k * np.asarray(x)) / k,
        name=f"{amplitude:g}*cos({k}t)",
    )


def indicator(a: float, b: float, height: float = 1.0) -> PeriodicFunction:
    """height on the arc [a, b] (taken counterclockwise from a), zero elsewhere."""
    length = float(b) - float(a)
    if not 0.0 < length <= TWO_PI:
        raise ValueError("arc length must lie in (0, 2pi]")
    a0 = float(a)

    def rule(x):
        return height * (np.mod(np.asarray(x) - a0, TWO_PI) <= length)

    def primitive(x):
        # measure of the arc inside [-pi, x]
        x = np.asarray(x, dtype=float)
        s = np.mod(a0 + math.pi, TWO_PI)  # arc start measured from -pi
        e = s + length
        t = x + math.pi
        wrap = max(e - TWO_PI, 0.0)
        m = np.clip(t - s, 0.0, length) + np.clip(t, 0.0, wrap)
        return height * m

    return PeriodicFunction(
        "piecewise_constant",
        rule,
        breakpoints=(a0, a0 + length) if length < TWO_PI else (),
        primitive=primitive,
        abs_power=lambda p: indicator(a0, a0 + length, abs(height) ** p),
        name=f"{height:g}*1[{a0:g},{a0 + length:g}]",
    )


def power_singularity(beta: float, center: float = 0.0, scale: float = 1.0) -> PeriodicFunction:
    """scale * |t - center|^(-beta), distance measured on the circle; beta < 1."""
    if beta >= 1.0:
        raise ValueError("beta must be < 1 for local integrability")
    c0 = float(center)

    def rule(x):
        d = np.abs(reduce_angle(np.asarray(x) - c0))
        with np.errstate(divide="ignore"):
            return scale * d ** (-beta)

    def base_primitive(u):
        # antiderivative of |u|^(-beta) on [-pi, pi], odd
        u = np.asarray(u, dtype=float)
        return np.sign(u) * np.abs(u) ** (1.0 - beta) / (1.0 - beta)

    def primitive(x):
        x = np.asarray(x, dtype=float)
        # shift so the singularity sits at 0; unwrap with the base primitive
        u = x - c0
        red = reduce_angle(u)
        k = np.round((u - red) / TWO_PI)
        total = 2.0 * math.pi ** (1.0 - beta) / (1.0 - beta)
        return scale * (base_primitive(red) + total * k)

    def abs_power(p):
        if beta * p >= 1.0:
            return PeriodicFunction("piecewise_smooth", lambda x: np.abs(rule(x)) ** p,
                                    breakpoints=(c0,), name=f"|t|^(-{beta * p:g})")
        return power_singularity(beta * p, c0, abs(scale) ** p)

    return PeriodicFunction(
        "piecewise_smooth",
        rule,
        breakpoints=(c0,),
        primitive=primitive,
        abs_power=abs_power,
        name=f"{scale:g}*|t-{c0:g}|^(-{beta:g})",
    )


def sampled(values) -> PeriodicFunction:
    return PeriodicFunction("sampled", samples=np.asarray(values, dtype=float), name="sampled")


def linear_combination(coeffs: Sequence[float], funcs: Sequence[PeriodicFunction]) -> PeriodicFunction:
    """sum c_i f_i; exact primitives survive when every term has one."""
    coeffs = [float(c) for c in coeffs]
    funcs = list(funcs)
    if len(coeffs) != len(funcs) or not funcs:
        raise ValueError("need matching, non-empty coefficient and function lists")
    if any(f.kind == "sampled" for f in funcs):
        raise ValueError("sampled functions cannot be combined symbolically")

    def rule(x):
        return sum(c * f.rule(x) for c, f in zip(coeffs, funcs))

    primitive = None
    if all(f.primitive is not None for f in funcs):
        def primitive(x):
            return sum(c * f.primitive(x) for c, f in zip(coeffs, funcs))

    kinds = {f.kind for f in funcs}
    if kinds == {"analytic"}:
        kind = "analytic"
    elif kinds == {"piecewise_constant"}:
        kind = "piecewise_constant"
    else:
        kind = "piecewise_smooth"
    bps = sorted({b for f in funcs for b in f.breakpoints})
    return PeriodicFunction(kind, rule, breakpoints=bps, primitive=primitive, name="combination")


# -- operations -------------------------------------------------------------


def _trapezoid(f: PeriodicFunction, grid: CircleGrid) -> float:
    w = f.cell_values(grid)
    bad = ~np.isfinite(w)
    if bad.any():
        j = int(np.argmax(bad))
        raise ValueError(f"non-finite value of {f!r} at node {j} (x={grid.nodes[j]:.6g})")
    return float(grid.h * np.sum(w))


def integrate(f: PeriodicFunction, grid: CircleGrid) -> QuadratureReport:
    """Periodic trapezoid integral over T, with the n -> 2n refinement gap."""
    coarse = _trapezoid(f, grid)
    fine = _trapezoid(f, grid.refined())
    return QuadratureReport(fine, abs(fine - coarse))


def lp_norm(f: PeriodicFunction, p: float, grid: CircleGrid) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return integrate(f.abs_pow(p), grid).value ** (1.0 / p)


def total_variation(f: PeriodicFunction, grid: CircleGrid) -> float:
    """Total variation over one period.

    Piecewise kinds: jumps at the breakpoints plus the variation of every
    smooth piece (a dense chain on each piece).  Analytic rules: grid-chain
    lower bound, refined by doubling until it settles.
    """
    if f.kind == "sampled":
        raise ValueError("variation of sampled data is not reliably recoverable")
    if f.kind == "analytic" and not f.breakpoints:
        n = grid.n
        prev = None
        while True:
            v = f.evaluate(TWO_PI * np.arange(n + 1) / n)
            tv = float(np.sum(np.abs(np.diff(v))))
            if prev is not None and abs(tv - prev) <= 1e-12 * max(1.0, tv):
                return tv
            if n >= grid.n * 16:
                return tv
            prev, n = tv, 2 * n
    bps = np.array(f.breakpoints)
    if len(bps) == 0:
        bps = np.array([-math.pi])
    tv = 0.0
    eps = 1e-12
    pieces = list(zip(bps, np.append(bps[1:], bps[0] + TWO_PI)))
    for lo, hi in pieces:
        # jump at lo
        left = f.evaluate(lo - eps)
        right = f.evaluate(lo + eps)
        if np.isfinite(left) and np.isfinite(right):
            tv += abs(right - left)
        if f.kind == "piecewise_constant":
            continue
        m = max(64, int(grid.n * (hi - lo) / TWO_PI))
        xs = np.linspace(lo + eps, hi - eps, m + 1)
        v = f.evaluate(xs)
        if not np.all(np.isfinite(v)):
            return math.inf
        tv += float(np.sum(np.abs(np.diff(v))))
    return tv


def local_mean(f: PeriodicFunction, y, t):
    """Average of |f| over [y - t, y + t]; 0 < t <= pi."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or np.any(t_arr > math.pi):
        raise ValueError("local_mean radius must satisfy 0 < t <= pi")
    g = f.abs_pow(1.0)
    y = np.asarray(y, dtype=float)
    out = g.interval_integral(y - t_arr, y + t_arr) / (2.0 * t_arr)
    return out if np.ndim(out) else float(out)


def function_from_spec(spec) -> PeriodicFunction:
    """Build a test function from a dict or JSON string.

    {"kind": "constant", "c": 1} | {"kind": "cos", "k": 1, "amplitude": 1}
    | {"kind": "indicator", "a": -0.3, "b": 0.3, "height": 1}
    | {"kind": "power", "beta": 0.25, "center": 0, "scale": 1}
    """
    if isinstance(spec, PeriodicFunction):
        return spec
    if isinstance(spec, str):
        spec = json.loads(spec)
    kind = spec.get("kind")
    if kind == "constant":
        return constant(spec.get("c", 1.0))
    if kind == "cos":
        return cosine(spec.get("k", 1), spec.get("amplitude", 1.0))
    if kind == "indicator":
        return indicator(spec.get("a", -0.3), spec.get("b", 0.3), spec.get("height", 1.0))
    if kind == "power":
        return power_singularity(spec.get("beta", 0.25), spec.get("center", 0.0), spec.get("scale", 1.0))
    raise ValueError(f"unknown function spec {spec!r}")
