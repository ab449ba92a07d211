"""Scalar functionals of a kernel family and convergence regions lambda(r).

The limsup/liminf proxies are read off a finite ladder of r values: the
tail value of a :class:`FunctionalEstimate` is the max (or min, for
liminf-type functionals) over the last quarter of the ladder.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .circle import CircleGrid
from .kernels import (
    GridRule,
    KernelFamily,
    KernelSlice,
    _golden_max,
    c_phi_estimate,
    default_grid_rule,
)


def default_ladder(j_min: int = 3, j_max: int = 14) -> np.ndarray:
    """r_j = 1 - 2^-j."""
    return 1.0 - 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)


class RegionFunction:
    """lambda(r): power_log(c, a, b), tabulated or synthesized.

    power_log is c (1-r)^a (log 1/(1-r))^b.  Tables interpolate log lambda
    linearly in log(1-r) and extrapolate with the end slopes.  Values are
    clamped to pi, which stands for the whole circle.
    """

    def __init__(self, form: str, *, c: float = 1.0, a: float = 1.0, b: float = 0.0,
                 r_table=None, lam_table=None, meta: Optional[dict] = None):
        if form not in ("power_log", "tabulated", "synthesized"):
            raise ValueError(f"unknown region form {form!r}")
        self.form = form
        self.meta = dict(meta or {})
        if form == "power_log":
            if c <= 0 or a <= 0:
                raise ValueError("power_log needs c > 0 and a > 0 so that lambda(r) -> 0")
            self.c, self.a, self.b = float(c), float(a), float(b)
        else:
            r_table = np.asarray(r_table, dtype=float)
            lam_table = np.asarray(lam_table, dtype=float)
            if r_table.ndim != 1 or r_table.shape != lam_table.shape or len(r_table) < 2:
                raise ValueError("tabulated regions need matching r and lambda arrays (>= 2 rows)")
            order = np.argsort(r_table)
            r_table, lam_table = r_table[order], lam_table[order]
            if np.any(np.diff(r_table) <= 0):
                raise ValueError("tabulated r values must be distinct")
            if np.any(lam_table <= 0) or not np.all(np.isfinite(lam_table)):
                raise ValueError("tabulated lambda values must be positive and finite")
            self.r_table, self.lam_table = r_table, lam_table
            # log(1-r) decreases with r; keep the interpolation abscissae ascending
            self._u = np.log1p(-r_table)[::-1]
            self._v = np.log(lam_table)[::-1]

    def __repr__(self) -> str:
        if self.form == "power_log":
            return f"RegionFunction(power_log c={self.c:g} a={self.a:g} b={self.b:g})"
        return f"RegionFunction({self.form}, {len(self.r_table)} rows)"

    def raw(self, r):
        r = np.asarray(r, dtype=float)
        if self.form == "power_log":
            eps = 1.0 - r
            out = self.c * eps ** self.a * np.log(1.0 / eps) ** self.b
        else:
            u = np.log1p(-r)
            v = np.interp(u, self._u, self._v)
            s_lo = (self._v[1] - self._v[0]) / (self._u[1] - self._u[0])
            s_hi = (self._v[-1] - self._v[-2]) / (self._u[-1] - self._u[-2])
            v = np.where(u < self._u[0], self._v[0] + (u - self._u[0]) * s_lo, v)
            v = np.where(u > self._u[-1], self._v[-1] + (u - self._u[-1]) * s_hi, v)
            out = np.exp(v)
        return out if out.ndim else float(out)

    def __call__(self, r):
        out = np.minimum(self.raw(r), math.pi)
        return out if np.ndim(out) else float(out)

    def to_spec(self) -> dict:
        if self.form == "power_log":
            return {"form": "power_log", "c": self.c, "a": self.a, "b": self.b}
        return {"form": self.form, "r": self.r_table.tolist(), "lambda": self.lam_table.tolist()}

    def write_csv(self, path) -> None:
        r = self.r_table if self.form != "power_log" else default_ladder()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "lambda"])
            for ri in r:
                w.writerow([repr(float(ri)), repr(float(self(ri)))])


def power_log(c: float, a: float, b: float) -> RegionFunction:
    return RegionFunction("power_log", c=c, a=a, b=b)


def tabulated(r_values, lam_values) -> RegionFunction:
    return RegionFunction("tabulated", r_table=r_values, lam_table=lam_values)


def load_region_table(path) -> RegionFunction:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["r", "lambda"]:
            raise ValueError(f"{path}: region table header must be r,lambda")
        rows = [(float(row["r"]), float(row["lambda"])) for row in reader]
    return tabulated([p[0] for p in rows], [p[1] for p in rows])


def region_from_spec(spec) -> RegionFunction:
    if isinstance(spec, RegionFunction):
        return spec
    if isinstance(spec, str):
        p = Path(spec)
        spec = json.loads(p.read_text()) if p.suffix == ".json" and p.exists() else json.loads(spec)
    form = spec.get("form")
    if form == "power_log":
        return power_log(spec.get("c", 1.0), spec.get("a", 1.0), spec.get("b", 0.0))
    if form == "tabulated":
        return load_region_table(spec["table"])
    raise ValueError(f"unknown region spec {spec!r}")


@dataclass
class FunctionalEstimate:
    r_values: np.ndarray
    values: np.ndarray
    tail_value: float
    sup_value: float
    tail_rule: str = "max over last quarter"

    @property
    def per_r(self):
        return list(zip(self.r_values.tolist(), self.values.tolist()))

    def growth(self) -> float:
        """Last value over first value along the ladder."""
        return float(self.values[-1] / self.values[0])


def _tail_slice(m: int) -> slice:
    return slice(m - max(1, int(math.ceil(m / 4))), m)


def _estimate(r_seq, values, liminf: bool = False) -> FunctionalEstimate:
    r_seq = np.asarray(r_seq, dtype=float)
    values = np.asarray(values, dtype=float)
    tail = values[_tail_slice(len(values))]
    if liminf:
        return FunctionalEstimate(r_seq, values, float(tail.min()), float(values.max()),
                                  "min over last quarter")
    return FunctionalEstimate(r_seq, values, float(tail.max()), float(values.max()))


# -- per-slice functionals ---------------------------------------------------


def phi_star_moment(slice_: KernelSlice, grid: Optional[CircleGrid] = None) -> float:
    """sup over x of |x phi_r^*(x)|.

    On a grid: node maximum of |x_j| phi^*(x_j) refined by golden section in
    the bracketing cells.  Without a grid (built-in families only) the same
    maximization runs on a log-spaced probe set, which reaches r far
    beyond any feasible grid.
    """
    if grid is None and slice_.grid is None and slice_.monotone:
        eps = 1.0 - slice_.r
        xs = np.unique(np.concatenate((np.geomspace(eps * 1e-3, math.pi, 4001), [math.pi])))
        vals = xs * np.abs(slice_.evaluate(xs))
        j = int(np.argmax(vals))
        f = lambda t: t * abs(slice_.evaluate(t))
        lo = xs[max(j - 1, 0)]
        hi = xs[min(j + 1, len(xs) - 1)]
        return _golden_max(f, lo, xs[j], hi) if lo < xs[j] < hi else float(vals[j])
    g = slice_._grid(grid)
    half = g.n // 2
    x = g.h * np.arange(half + 1)
    m = slice_.majorant_samples(g)[: half + 1]
    vals = x * m
    j = int(np.argmax(vals))
    best = float(vals[j])

    def on_cell(t):
        # majorant between nodes: the kernel itself, floored by the next node's suffix max
        k = min(int(math.ceil(t / g.h)), half)
        return t * max(abs(slice_.evaluate(t)), abs(slice_.evaluate(-t)), m[k] if t < x[k] else 0.0)

    lo, hi = x[max(j - 1, 0)], x[min(j + 1, half)]
    if lo < x[j] < hi:
        best = max(best, _golden_max(on_cell, lo, x[j], hi))
    return best


def mu_of_r(slice_: KernelSlice, grid: Optional[CircleGrid] = None) -> float:
    s = slice_.sup_norm
    if s <= 0:
        raise ValueError("mu(r) undefined for a vanishing kernel")
    return phi_star_moment(slice_, grid) / s


def _grid_or_none(family: KernelFamily, grid_rule: Optional[GridRule], r: float):
    if grid_rule is None:
        return None if family.builtin else default_grid_rule()(r)
    return grid_rule(r)


def slice_quantities(family: KernelFamily, r: float, grid_rule: Optional[GridRule] = None) -> dict:
    """sup norm, phi_*, mu and the central mass ratio at one r."""
    g = _grid_or_none(family, grid_rule, r)
    s = family.slice(r, g)
    phi_star = phi_star_moment(s, g)
    sup = s.sup_norm
    mu = phi_star / sup
    return {"r": r, "slice": s, "grid": g, "sup_norm": sup, "phi_star": phi_star, "mu": mu,
            "central_ratio": s.abs_mass(mu) / phi_star}


def pi_functional(kind: str, lam: RegionFunction, family: KernelFamily, r_seq: Sequence[float],
                  p: float = 1.0, grid_rule: Optional[GridRule] = None) -> FunctionalEstimate:
    """lambda(r) ||phi_r||_inf phi_*(r)^(p-1) along r_seq.

    kind "plain" drops the moment factor; "p" reads the tail as the limsup
    proxy, "tilde_p" reads sup_value as the sup over r.
    """
    if kind not in ("plain", "p", "tilde_p"):
        raise ValueError(f"unknown functional kind {kind!r}")
    if kind != "plain" and p < 1:
        raise ValueError("p must be >= 1")
    r_seq = np.asarray(list(r_seq), dtype=float)
    if np.any(np.diff(r_seq) <= 0):
        raise ValueError("r_seq must be increasing")
    vals = []
    for r in r_seq:
        q = slice_quantities(family, r, grid_rule)
        v = lam(r) * q["sup_norm"]
        if kind != "plain":
            v *= q["phi_star"] ** (p - 1.0)
        vals.append(v)
    return _estimate(r_seq, vals)


def pi_infinity(lam: RegionFunction, family: KernelFamily, delta_seq: Sequence[float],
                r_seq: Sequence[float], grid_rule: Optional[GridRule] = None) -> np.ndarray:
    """Table of the kernel mass over [-delta lambda(r), delta lambda(r)], rows delta, cols r."""
    delta_seq = np.asarray(list(delta_seq), dtype=float)
    if np.any(delta_seq <= 0) or np.any(delta_seq > 1):
        raise ValueError("delta values must lie in (0, 1]")
    r_seq = np.asarray(list(r_seq), dtype=float)
    out = np.empty((len(delta_seq), len(r_seq)))
    for jr, r in enumerate(r_seq):
        s = family.slice(r, _grid_or_none(family, grid_rule, r))
        lr = lam(r)
        for i, d in enumerate(delta_seq):
            out[i, jr] = s.mass(d * lr)
    return out


def small_c_phi(family: KernelFamily, r_seq: Sequence[float],
                grid_rule: Optional[GridRule] = None) -> FunctionalEstimate:
    """(1/phi_*(r)) times the mass of |phi_r| on [-mu(r), mu(r)]; tail = liminf proxy."""
    r_seq = np.asarray(list(r_seq), dtype=float)
    vals = [slice_quantities(family, r, grid_rule)["central_ratio"] for r in r_seq]
    return _estimate(r_seq, vals, liminf=True)


def synthesize_region(family: KernelFamily, p: float, target: float, mode: str,
                      r_probe: Sequence[float], grid_rule: Optional[GridRule] = None) -> RegionFunction:
    """Largest region with the moment or Holder functional pinned at ``target``.

    moment: lambda(r) = target / (||phi_r||_inf phi_*(r)^(p-1))
    holder: lambda(r) = target ||phi_r||_q^-p, q = p/(p-1) (q = inf at p = 1)
    """
    if target <= 0:
        raise ValueError("target must be positive")
    if mode not in ("moment", "holder"):
        raise ValueError(f"unknown synthesis mode {mode!r}")
    if p < 1:
        raise ValueError("p must be >= 1")
    r_probe = np.asarray(list(r_probe), dtype=float)
    lam = []
    for r in r_probe:
        if mode == "moment":
            q = slice_quantities(family, r, grid_rule)
            v = target / (q["sup_norm"] * q["phi_star"] ** (p - 1.0))
        else:
            qexp = math.inf if p == 1 else p / (p - 1.0)
            g = grid_rule(r) if grid_rule else default_grid_rule()(r)
            s = family.slice(r, g if qexp != math.inf or not family.builtin else None)
            v = target * s.q_norm(qexp, g) ** (-p)
        lam.append(v)
    lam = np.asarray(lam)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("non-finite functional values during synthesis")
    return RegionFunction("synthesized", r_table=r_probe, lam_table=lam,
                          meta={"family": family.label, "p": p, "target": target, "mode": mode})


@dataclass
class PhiStarBoundsReport:
    r_values: np.ndarray
    phi_star: np.ndarray
    sup_norm: np.ndarray
    lower_bound: np.ndarray
    c_phi: float
    lower_ok: np.ndarray
    upper_ok: np.ndarray
    hypothesis_ok: np.ndarray          # ||phi_r||_inf > e
    c: float = 0.2
    node_rectangle_ok: bool = True

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lower_ok) and np.all(self.upper_ok))

    def rows(self):
        for i, r in enumerate(self.r_values):
            yield {"r": float(r), "phi_star": float(self.phi_star[i]),
                   "sup_norm": float(self.sup_norm[i]), "lower_bound": float(self.lower_bound[i]),
                   "c_phi": self.c_phi, "lower_ok": bool(self.lower_ok[i]),
                   "upper_ok": bool(self.upper_ok[i]), "hypothesis_ok": bool(self.hypothesis_ok[i])}


def lemma_phi_star_bounds_check(family: KernelFamily, r_seq: Sequence[float],
                                grid_rule: Optional[GridRule] = None, c: float = 0.2
                                ) -> PhiStarBoundsReport:
    """c / log ||phi_r||_inf <= phi_*(r) <= C_phi at every r of the ladder.

    Also checks the rectangle step of the upper bound node by node:
    |x| phi^*(x) <= integral of phi^* over |t| <= |x|.
    """
    r_seq = np.asarray(list(r_seq), dtype=float)
    rule = grid_rule or default_grid_rule()
    c_phi = c_phi_estimate(family, r_seq, rule)
    ps, sn, rect = [], [], True
    for r in r_seq:
        q = slice_quantities(family, r, grid_rule)
        ps.append(q["phi_star"])
        sn.append(q["sup_norm"])
        g = rule(r)
        m = q["slice"].majorant_samples(g)
        half = g.n // 2
        x = g.h * np.arange(half + 1)
        # integral of the majorant over |t| <= x_j with right-endpoint (lower) sums
        inner = 2.0 * g.h * np.concatenate(([0.0], np.cumsum(m[1: half + 1])))
        rect &= bool(np.all(x * m[: half + 1] <= inner + 1e-12))
    ps, sn = np.array(ps), np.array(sn)
    with np.errstate(divide="ignore"):
        lower = c / np.log(sn)
    return PhiStarBoundsReport(r_seq, ps, sn, lower, c_phi, ps >= lower, ps <= c_phi,
                               sn > math.e, c, rect)
