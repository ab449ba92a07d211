"""Hardy-Littlewood and region maximal operators, the pointwise maximal
bound with its explicit constant, weak-type ratios, and numerical checks
of the auxiliary estimates (tail, T_A, annulus and Holder bounds).

Fields live on a coarse output grid.  Every radius r is convolved on its
own fine grid (fine enough for the kernel, and a refinement of the output
grid), windowed maxima are taken there, and the result is read back at the
output nodes.  All suprema run over finite probe sets, so every left-hand
side is a lower bound of the true supremum: a negative margin is a genuine
violation, a positive one is evidence.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d

from .circle import CircleGrid, PeriodicFunction, grid_for, integrate
from .convolution import cyclic_convolve
from .functionals import RegionFunction, pi_functional, slice_quantities
from .kernels import KernelFamily, c_phi_estimate, default_grid_rule


# -- windowed maxima ------------------------------------------------------------


def window_max(values: np.ndarray, k: int) -> np.ndarray:
    """max over the circular window |i - j| <= k."""
    n = len(values)
    if k < 0:
        raise ValueError("window half-width must be >= 0")
    if 2 * k + 1 >= n:
        return np.full(n, values.max())
    return maximum_filter1d(values, size=2 * k + 1, mode="wrap")


def shifted_window_max(values: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """max over the circular window j in [i + lo, i + hi]."""
    n = len(values)
    if hi < lo:
        raise ValueError("empty window")
    length = hi - lo + 1
    if length >= n:
        return np.full(n, values.max())
    base = maximum_filter1d(values, size=length, mode="wrap", origin=-(length // 2))
    return np.roll(base, -lo)


def open_halfwidth(lam: float, h: float) -> int:
    """Largest k with k h < lam."""
    return max(int(math.ceil(lam / h)) - 1, 0)


# -- containers -------------------------------------------------------------------


@dataclass
class MaximalField:
    grid: CircleGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("maximal field values must be nonnegative")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(self.grid.nodes, self.values):
                w.writerow([repr(float(x)), repr(float(v))])


@dataclass
class BoundReport:
    """Per-node comparison lhs <= rhs of one inequality."""

    name: str
    x: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant_used: float
    r_count: int
    theta_count: int
    skipped: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def min_margin(self) -> float:
        m = self.margin
        m = m[np.isfinite(m)]
        return float(m.min()) if m.size else math.inf

    @property
    def passed(self) -> bool:
        return self.min_margin >= 0.0

    def summary(self) -> dict:
        return {
            "name": self.name,
            "min_margin": self.min_margin,
            "constant_used": self.constant_used,
            "passed": self.passed,
            "skipped_nodes": self.skipped,
            "probes": {"r_count": self.r_count, "theta_count": self.theta_count},
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: min margin {self.min_margin:.6g}"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "lhs", "rhs", "margin"])
            for row in zip(self.x, self.lhs, self.rhs, self.margin):
                w.writerow([repr(float(v)) for v in row])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- Hardy-Littlewood -------------------------------------------------------------


def hl_radii(grid: CircleGrid, radii_count: int = 128, min_radius: Optional[float] = None) -> np.ndarray:
    if radii_count < 32:
        raise ValueError("radii_count must be at least 32")
    t0 = grid.h / 2 if min_radius is None else min(float(min_radius), grid.h / 2)
    return np.unique(np.append(np.geomspace(t0, math.pi, radii_count), math.pi))


def hl_maximal(f: PeriodicFunction, grid: CircleGrid, radii_count: int = 128,
               min_radius: Optional[float] = None) -> MaximalField:
    """Mf(x_j) = sup over probed t of the mean of |f| on [x_j - t, x_j + t].

    Interval integrals come from the primitive of |f| (exact when known,
    otherwise a fine cumulative table), so each mean costs two lookups.
    """
    g = f.abs_pow(1.0)
    t = hl_radii(grid, radii_count, min_radius)
    x = grid.nodes[:, None]
    means = g.interval_integral(x - t, x + t) / (2.0 * t)
    vals = np.max(means, axis=1)
    if g.breakpoints:
        # for piecewise data the best radius often puts an endpoint on a breakpoint
        b = np.asarray(g.breakpoints)[None, :]
        d = np.abs(np.mod(b - x + math.pi, 2 * math.pi) - math.pi)
        d = np.clip(d, t[0], math.pi)
        extra = g.interval_integral(x - d, x + d) / (2.0 * d)
        vals = np.maximum(vals, np.max(extra, axis=1))
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite local mean; is f locally integrable?")
    return MaximalField(grid, np.maximum(vals, 0.0),
                        {"operator": "M", "radii_count": len(t), "min_radius": float(t[0])})


# -- region suprema -----------------------------------------------------------------


class _FineCache:
    """Per fine-grid-size quadrature weights of f."""

    def __init__(self, f: PeriodicFunction):
        self.f = f
        self._w: dict[int, np.ndarray] = {}

    def weights(self, g: CircleGrid) -> np.ndarray:
        if g.n not in self._w:
            w = np.asarray(self.f.cell_values(g), dtype=float)
            if not np.all(np.isfinite(w)):
                raise ValueError(f"non-finite quadrature weight for {self.f!r}")
            self._w[g.n] = w
        return self._w[g.n]


def _fine_grid(r: float, out: CircleGrid) -> CircleGrid:
    return grid_for(r, out.n)


@dataclass
class _RegionPiece:
    """Kernel restriction for one r: the t-mask and the window radius."""

    mask: Callable[[np.ndarray], np.ndarray]
    window: float


def _region_sup(family: KernelFamily, f: PeriodicFunction, grid: CircleGrid,
                r_seq: Sequence[float], piece: Callable[[float, dict], _RegionPiece],
                absolute: bool = True):
    """sup over r and |theta - x| < window(r) of |int mask(t) phi_r(t) f(theta - t) dt|.

    Returns (field over r, per-r matrix, theta probe count per node).
    """
    cache = _FineCache(f)
    per_r = np.zeros((len(r_seq), grid.n))
    theta_count = 0
    for i, r in enumerate(r_seq):
        g = _fine_grid(r, grid)
        q = slice_quantities(family, r)
        pc = piece(r, q)
        s = q["slice"]
        t = g.folded_nodes
        kern = s.evaluate(g.nodes) * pc.mask(t)
        conv = cyclic_convolve(kern, cache.weights(g), g.h)
        vals = np.abs(conv) if absolute else conv
        k = open_halfwidth(pc.window, g.h) if pc.window < math.pi else g.n
        theta_count += min(2 * k + 1, g.n)
        per_r[i] = window_max(vals, k)[:: g.n // grid.n]
    return per_r.max(axis=0), per_r, theta_count


def _ladder(r_seq) -> np.ndarray:
    r_seq = np.asarray(list(r_seq), dtype=float)
    if len(r_seq) == 0:
        raise ValueError("r_seq must be non-empty")
    if np.any(np.diff(r_seq) <= 0):
        raise ValueError("r_seq must be increasing")
    return r_seq


def _finest_h(r_seq, grid) -> float:
    return min(_fine_grid(r, grid).h for r in r_seq)


def phi_lambda_star(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction,
                    grid: CircleGrid, r_seq: Sequence[float]) -> MaximalField:
    """sup over r in r_seq and fine nodes y with |x_j - y| < lambda(r) of |Phi_r(y, f)|."""
    r_seq = _ladder(r_seq)
    everything = lambda t: np.ones_like(t)
    vals, _, theta = _region_sup(family, f, grid, r_seq,
                                 lambda r, q: _RegionPiece(everything, lam(r)))
    return MaximalField(grid, vals, {"operator": "Phi_lambda_star", "family": family.label,
                                     "lambda": repr(lam), "r_seq": r_seq.tolist(),
                                     "r_count": len(r_seq), "theta_count": theta})


def split_sups(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction,
               grid: CircleGrid, r_seq: Sequence[float]) -> dict:
    """Node-wise sups of |I1|, |I2|, |I3| (central, annulus and tail parts) and of |Phi|.

    The parts cut the kernel at mu(r) and lambda(r): |t| <= mu (and < lambda),
    mu < |t| < lambda, and |t| >= lambda.  They partition the quadrature nodes,
    so the total never exceeds the sum of the three sups.
    """
    r_seq = _ladder(r_seq)
    out = {}
    cuts = {
        "I1": lambda r, q: (lambda t: (t <= q["mu"]) & (t < lam(r))),
        "I2": lambda r, q: (lambda t: (t > q["mu"]) & (t < lam(r))),
        "I3": lambda r, q: (lambda t: t >= lam(r)),
        "total": lambda r, q: (lambda t: np.ones_like(t, dtype=bool)),
    }
    for key, cut in cuts.items():
        out[key] = _region_sup(family, f, grid, r_seq,
                               lambda r, q, cut=cut: _RegionPiece(cut(r, q), lam(r)),
                               absolute=True)[0]
    return out


def theorem2_constant(p: float, tilde_pi_p: float, c_phi_cap: float) -> float:
    """2 T^(1/p) + 4 T^(1/p) / (2^(1/p) - 1) + 8 C_phi."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if tilde_pi_p <= 0 or c_phi_cap <= 0:
        raise ValueError("the functional and C_phi must be positive")
    root = tilde_pi_p ** (1.0 / p)
    return 2.0 * root + 4.0 * root / (2.0 ** (1.0 / p) - 1.0) + 8.0 * c_phi_cap


def measured_constants(family: KernelFamily, lam: RegionFunction, p: float,
                       r_seq: Sequence[float]) -> dict:
    """Measured sup functional, C_phi, and the normalized functional max(T, C_phi^p)."""
    r_seq = _ladder(r_seq)
    tilde = pi_functional("tilde_p", lam, family, r_seq, p=p).sup_value
    c_phi = c_phi_estimate(family, r_seq, default_grid_rule())
    norm = max(tilde, c_phi ** p)
    return {"tilde_pi_p": tilde, "c_phi": c_phi, "tilde_pi_p_normalized": norm,
            "constant": theorem2_constant(p, norm, c_phi)}


def pointwise_bound_check(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction,
                          p: float, grid: CircleGrid, r_seq: Sequence[float],
                          radii_count: int = 128) -> BoundReport:
    """Phi_lambda^*(x) <= C (M|f|^p(x))^(1/p) at every node of ``grid``."""
    r_seq = _ladder(r_seq)
    consts = measured_constants(family, lam, p, r_seq)
    field_ = phi_lambda_star(family, f, lam, grid, r_seq)
    m = hl_maximal(f.abs_pow(p), grid, radii_count, _finest_h(r_seq, grid) / 2)
    rhs = consts["constant"] * m.values ** (1.0 / p)
    return BoundReport("pointwise maximal bound Phi* <= C (M|f|^p)^(1/p)", grid.nodes,
                       field_.values, rhs, consts["constant"], len(r_seq),
                       field_.meta["theta_count"], extra={**consts, "field": field_})


def weak_type_ratio(field_: MaximalField, f: PeriodicFunction, p: float,
                    t_seq: Optional[Sequence[float]] = None,
                    grid: Optional[CircleGrid] = None) -> float:
    """sup over t of t^p |{field > t}| / ||f||_p^p, with |.| = node count times h.

    The default t-sequence sits just below every distinct field value, where
    t^p times the level-set measure is largest.
    """
    g = grid or field_.grid
    norm = integrate(f.abs_pow(p), g).value
    if norm <= 0:
        raise ValueError("||f||_p vanishes")
    v = np.asarray(field_.values)
    if t_seq is None:
        t = np.nextafter(np.unique(v), 0.0)
        t = t[t > 0]
    else:
        t = np.asarray(list(t_seq), dtype=float)
    if t.size == 0:
        return 0.0
    vs = np.sort(v)
    counts = len(vs) - np.searchsorted(vs, t, side="right")
    return float(np.max(t ** p * counts * field_.grid.h) / norm)


def tail_bound_check(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction,
                     grid: CircleGrid, r_seq: Sequence[float], radii_count: int = 128
                     ) -> BoundReport:
    """Tail part |t| >= lambda(r) against 8 C_phi M|f|(x)."""
    r_seq = _ladder(r_seq)
    fa = f.abs_pow(1.0)
    c_phi = c_phi_estimate(family, r_seq, default_grid_rule())
    lhs, _, theta = _region_sup(family, fa, grid, r_seq,
                                lambda r, q: _RegionPiece(lambda t: t >= lam(r), lam(r)))
    m = hl_maximal(fa, grid, radii_count, _finest_h(r_seq, grid) / 2)
    return BoundReport("tail bound (|t| >= lambda) <= 8 C_phi Mf", grid.nodes, lhs,
                       8.0 * c_phi * m.values, 8.0 * c_phi, len(r_seq), theta,
                       extra={"c_phi": c_phi})


def _lemma_lambda(q: dict, p: float, C: float) -> tuple[float, bool]:
    lam = C * q["mu"] * q["phi_star"] ** (-p)
    return min(lam, math.pi), lam > math.pi


def annulus_bound_check(family: KernelFamily, f: PeriodicFunction, p: float, grid: CircleGrid,
                        r_seq: Sequence[float], C: float = 1.0, radii_count: int = 128
                        ) -> BoundReport:
    """Annulus part mu(r) <= |t| <= lambda(r) against 4 C^(1/p)/(2^(1/p) - 1) (M|f|^p)^(1/p).

    lambda(r) = C mu(r) phi_*(r)^-p, clamped to pi (clamps are counted).
    """
    if C < 1:
        raise ValueError("C must be >= 1")
    r_seq = _ladder(r_seq)
    fa = f.abs_pow(1.0)
    clamps = []

    def piece(r, q):
        lam, clamped = _lemma_lambda(q, p, C)
        clamps.append(clamped)
        if lam < q["mu"]:
            raise ValueError(f"lambda < mu at r={r}: C={C} is too small for this kernel")
        return _RegionPiece(lambda t: (t >= q["mu"]) & (t <= lam), lam)

    lhs, _, theta = _region_sup(family, fa, grid, r_seq, piece)
    const = 4.0 * C ** (1.0 / p) / (2.0 ** (1.0 / p) - 1.0)
    m = hl_maximal(f.abs_pow(p), grid, radii_count, _finest_h(r_seq, grid) / 2)
    return BoundReport(f"annulus bound (C={C:g}) (mu <= |t| <= lambda) <= 4C^(1/p)/(2^(1/p)-1) (M|f|^p)^(1/p)",
                       grid.nodes, lhs, const * m.values ** (1.0 / p), const, len(r_seq), theta,
                       extra={"C": C, "clamped_r": int(sum(clamps))})


def t_a_check(family: KernelFamily, f: PeriodicFunction, p: float, A: float, grid: CircleGrid,
              r_seq: Sequence[float], C: float = 1.0, radii_count: int = 128) -> BoundReport:
    """T_A f(x) <= (C M|f|^p(x) / A)^(1/p).

    T_A f(x) is the sup of phi_*(r) m_f(y, A mu(r)) over probed r and fine
    nodes y with A mu(r) < |x - y| < lambda(r); lambda as in the annulus check.
    Nodes whose probe set is empty for every r are skipped and counted.
    """
    if A < 1:
        raise ValueError("A must be >= 1")
    r_seq = _ladder(r_seq)
    fa = f.abs_pow(1.0)
    lhs = np.zeros(grid.n)
    probed = np.zeros(grid.n, dtype=bool)
    theta = 0
    for r in r_seq:
        q = slice_quantities(family, r)
        lam, _ = _lemma_lambda(q, p, C)
        rad = A * q["mu"]
        if rad >= math.pi:
            continue
        g = _fine_grid(r, grid)
        lo = int(math.floor(rad / g.h)) + 1
        hi = int(math.ceil(lam / g.h)) - 1 if lam < math.pi else g.n // 2
        if lo > hi:
            continue
        y = g.nodes
        vals = q["phi_star"] * fa.interval_integral(y - rad, y + rad) / (2.0 * rad)
        right = shifted_window_max(vals, lo, hi)
        left = shifted_window_max(vals, -hi, -lo)
        lhs = np.maximum(lhs, np.maximum(left, right)[:: g.n // grid.n])
        probed[:] = True
        theta += 2 * (hi - lo + 1)
    m = hl_maximal(f.abs_pow(p), grid, radii_count, _finest_h(r_seq, grid) / 2)
    rhs = (C * m.values / A) ** (1.0 / p)
    lhs = np.where(probed, lhs, np.nan)
    return BoundReport(f"T_A bound (A={A:g}) T_A f <= (C M|f|^p / A)^(1/p)", grid.nodes, lhs, rhs,
                       C, len(r_seq), theta, skipped=int((~probed).sum()), extra={"A": A, "C": C})


def holder_bound_check(family: KernelFamily, f: PeriodicFunction, p: float, lam: RegionFunction,
                       grid: CircleGrid, r_seq: Sequence[float], radii_count: int = 128
                       ) -> BoundReport:
    """Central part |t| <= lambda(r) against sup_r ||phi_r||_q (4 lambda(r))^(1/p) (M|f|^p)^(1/p)."""
    if p <= 1:
        raise ValueError("the Holder bound needs p > 1")
    r_seq = _ladder(r_seq)
    qexp = p / (p - 1.0)
    fa = f.abs_pow(1.0)
    consts, holder = [], []
    for r in r_seq:
        g = _fine_grid(r, grid)
        qn = family.slice(r, g).q_norm(qexp, g)
        consts.append(qn * (4.0 * lam(r)) ** (1.0 / p))
        holder.append(lam(r) * qn ** p)
    C = max(consts)
    lhs, _, theta = _region_sup(family, fa, grid, r_seq,
                                lambda r, q: _RegionPiece(lambda t: t <= lam(r), lam(r)))
    m = hl_maximal(f.abs_pow(p), grid, radii_count, _finest_h(r_seq, grid) / 2)
    return BoundReport("Holder bound (|t| <= lambda) <= C (M|f|^p)^(1/p)", grid.nodes, lhs,
                       C * m.values ** (1.0 / p), C, len(r_seq), theta,
                       extra={"sup_lambda_q_norm_p": max(holder), "q": qexp})
