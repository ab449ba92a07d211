"""Divergence construction for regions with an infinite moment functional.

Blocks f_r are scaled indicators of comb sets (n(r) equally spaced teeth of
half-width mu(r)); a few of them, at rapidly approaching radii, are summed
with weights 2^-k.  The divergence profile then measures how the windowed
sup of Phi_{r_k}(., f) grows with k, together with the three pieces of the
standard split (earlier blocks, own block, later blocks).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circle import TWO_PI, CircleGrid, PeriodicFunction, grid_for, integrate
from .functionals import RegionFunction, default_ladder, slice_quantities, small_c_phi
from .kernels import KernelFamily, c_phi_estimate, default_grid_rule

PRECISION_CEILING = 40     # radii satisfy 1 - r >= 2^-40
BISECTION_STEPS = 30
MEAN_PROBES = 257


class ConstructionError(RuntimeError):
    """A step of the construction could not be carried out; the message names the bound."""


# -- comb sets ------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSet:
    """Union of the teeth [2 pi j / n - delta, 2 pi j / n + delta], j = 0..n-1."""

    n: int
    delta: float

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("tooth count must be positive")
        if not 0.0 < self.delta < math.pi / self.n:
            raise ValueError(f"teeth overlap: delta={self.delta:.6g} must lie in (0, pi/n={math.pi / self.n:.6g})")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.spacing * np.arange(self.n)

    @property
    def measure(self) -> float:
        return 2.0 * self.n * self.delta

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.mod(x + self.spacing / 2, self.spacing) - self.spacing / 2
        return np.abs(u) <= self.delta

    def _cumulative(self, x):
        # measure of the comb inside [-s/2, x], extended additively to all of R
        x = np.asarray(x, dtype=float)
        s = self.spacing
        k = np.floor((x + s / 2) / s)
        v = x - k * s
        return k * 2 * self.delta + np.clip(v + self.delta, 0.0, 2 * self.delta)

    def indicator(self, height: float = 1.0) -> PeriodicFunction:
        h = float(height)
        edges = np.concatenate((self.centers - self.delta, self.centers + self.delta))
        return PeriodicFunction(
            "piecewise_constant",
            lambda x: h * self.contains(x),
            breakpoints=edges,
            primitive=lambda x: h * self._cumulative(x),
            abs_power=lambda p: self.indicator(abs(h) ** p),
            name=f"{h:.4g}*comb(n={self.n}, delta={self.delta:.3g})",
        )


# -- single blocks ------------------------------------------------------------------


def n_of_r(lam: RegionFunction, r: float) -> int:
    """n(r) = floor(4 pi / lambda(r))."""
    lr = float(lam(r))
    if not lr > 0:
        raise ValueError(f"lambda({r}) = {lr} must be positive")
    return int(math.floor(4.0 * math.pi / lr))


def lambda_cap(family: KernelFamily, lam: RegionFunction, p: float, r: float) -> float:
    """Lambda(r) = lambda(r) ||phi_r||_inf phi_*(r)^(p-1)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    q = slice_quantities(family, r)
    return float(lam(r)) * q["sup_norm"] * q["phi_star"] ** (p - 1.0)


@dataclass
class Block:
    """Everything the construction needs about one radius."""

    r: float
    lam: float
    n: int
    mu: float
    phi_star: float
    sup_norm: float
    Lambda: float
    central_ratio: float
    comb: Optional[DeltaSet]
    p: float

    @property
    def height(self) -> float:
        return self.Lambda ** (1.0 / self.p) / self.phi_star

    @property
    def disjoint(self) -> bool:
        return self.mu < math.pi / self.n

    def lp_chain(self) -> tuple[float, float, float]:
        """(||f_r||_p^p, Lambda |Delta| / phi_*^p with |Delta| = 2 mu n, 8 pi)."""
        val = self.Lambda / self.phi_star ** self.p * self.comb.measure
        chain = self.Lambda / self.phi_star ** self.p * 2 * self.mu * self.n
        return val, chain, 8.0 * math.pi


def block_data(family: KernelFamily, lam: RegionFunction, p: float, r: float) -> Block:
    q = slice_quantities(family, r)
    lr = float(lam(r))
    n = n_of_r(lam, r)
    Lam = lr * q["sup_norm"] * q["phi_star"] ** (p - 1.0)
    comb = DeltaSet(n, q["mu"]) if q["mu"] < math.pi / n else None
    return Block(r, lr, n, q["mu"], q["phi_star"], q["sup_norm"], Lam, q["central_ratio"],
                 comb, p)


def _sign_rule(family: KernelFamily, blk: Block, r: float):
    s = family.slice(r)

    def sign(x):
        x = np.mod(np.asarray(x, dtype=float), TWO_PI)
        k0 = np.floor(x / blk.comb.spacing)
        return np.sign(s.evaluate(blk.comb.spacing * k0 - x))

    return sign


def build_fr(family: KernelFamily, lam: RegionFunction, p: float, r: float,
             grid: Optional[CircleGrid] = None, block: Optional[Block] = None) -> PeriodicFunction:
    """f_r = Lambda^(1/p)/phi_* times the comb indicator, times the sign factor.

    The sign factor uses k_0(x), the cell [2 pi k/n, 2 pi (k+1)/n) holding x;
    for nonnegative (built-in) kernels it is identically 1 and the block keeps
    an exact primitive.
    """
    blk = block or block_data(family, lam, p, r)
    if blk.comb is None:
        raise ConstructionError(
            f"tooth disjointness mu(r) < pi/n(r) fails at r={r}: mu={blk.mu:.6g}, pi/n={math.pi / blk.n:.6g}")
    base = blk.comb.indicator(blk.height)
    if family.builtin:
        base.name = f"f_r(r={r:.6g})"
        return base
    sign = _sign_rule(family, blk, r)
    cells = blk.comb.spacing * np.arange(blk.n)
    return PeriodicFunction("piecewise_constant", lambda x: base.rule(x) * sign(x),
                            breakpoints=tuple(base.breakpoints) + tuple(cells),
                            name=f"f_r(r={r:.6g}, signed)")


def _anchor(n: int, x: float) -> tuple[float, float]:
    s = TWO_PI / n
    xm = x % TWO_PI
    k0 = math.floor(xm / s)
    return k0 * s, xm - k0 * s


def _block_grid(r: float, mu: float, grid: Optional[CircleGrid]) -> CircleGrid:
    g = grid_for(r, 1024 if grid is None else grid.n)
    while g.h > mu / 4:
        g = g.refined()
    return g


@dataclass
class BlockBound:
    r: float
    x: float
    anchor: float
    theta: float
    ratio: float
    required: float
    theta_bound_ok: bool

    @property
    def passed(self) -> bool:
        return self.ratio >= self.required and self.theta_bound_ok


def block_lower_bound(family: KernelFamily, lam: RegionFunction, p: float, r: float, x: float,
                      grid: Optional[CircleGrid] = None, c_small: Optional[float] = None,
                      block: Optional[Block] = None) -> BlockBound:
    """Phi_r(anchor, f_r) / Lambda^(1/p)(r) against c_phi/2, with the anchor offset bound.

    anchor = 2 pi k_0 / n(r) for the cell holding x; theta = x - anchor must
    satisfy |theta| < 2 pi / n(r) < lambda(r).
    """
    blk = block or block_data(family, lam, p, r)
    if c_small is None:
        c_small = small_c_phi(family, default_ladder()).tail_value
    fr = build_fr(family, lam, p, r, block=blk)
    g = _block_grid(r, blk.mu, grid)
    anchor, theta = _anchor(blk.n, x)
    s = family.slice(r, g)
    w = fr.cell_values(g)
    val = g.h * float(np.dot(s.evaluate(anchor - g.nodes), w))
    ok = abs(theta) < TWO_PI / blk.n < blk.lam
    return BlockBound(r, x, anchor, theta, val / blk.Lambda ** (1.0 / p), c_small / 2.0, ok)


# -- Lemma-1 means ------------------------------------------------------------------


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def comb_mean(kernel_abs, comb: DeltaSet, theta) -> np.ndarray:
    """(1/|Delta|) * integral over Delta of kernel(theta - t) dt, 8-point Gauss per tooth."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t = (comb.centers[:, None] + comb.delta * _GL_X[None, :]).ravel()
    w = np.tile(comb.delta * _GL_W, comb.n)
    out = np.empty(len(theta))
    for i, th in enumerate(theta):
        out[i] = np.dot(kernel_abs(th - t), w)
    return out / comb.measure


def uniform_mean_sup(family: KernelFamily, r_kernel: float, comb: DeltaSet,
                     probes: int = MEAN_PROBES) -> float:
    """sup over theta of the comb mean of phi_r^*; the comb is invariant under its spacing."""
    s = family.slice(r_kernel)
    ker = (lambda u: np.abs(s.evaluate(u))) if s.monotone else \
        (lambda u: s.majorant_at(u, default_grid_rule()(r_kernel)))
    th = np.linspace(0.0, comb.spacing, probes)
    vals = comb_mean(ker, comb, th)
    return float(vals.max())


# -- radii selection ------------------------------------------------------------------


@dataclass
class RadiusRecord:
    k: int
    block: Block
    threshold: float
    mean_sups: list = field(default_factory=list)   # (j, sup of earlier kernel mean over new comb)
    big_lambda_ok: bool = False                     # Lambda(r_k) > 4 C_phi^p


def strict_threshold(k: int, c_phi: float, c_small: float, p: float, previous: Sequence[Block]) -> float:
    prev = max((b.height for b in previous), default=0.0)
    return (2.0 ** (k + 1) * c_phi / c_small * (8.0 * math.pi + k + prev)) ** p


def _structural(blk: Block, c_small: float) -> Optional[str]:
    if blk.lam >= math.pi:
        return "lambda(r) < pi"
    if blk.comb is None:
        return "tooth disjointness mu(r) < pi/n(r)"
    if blk.central_ratio < c_small / 2.0:
        return "central mass condition (c_phi/2 lower bound)"
    return None


def select_radii(family: KernelFamily, lam: RegionFunction, p: float, K: int,
                 mode: str = "demo", growth: float = 4.0,
                 r_probe: Optional[Sequence[float]] = None,
                 c_phi: Optional[float] = None, c_small: Optional[float] = None,
                 bisect: bool = True) -> list[RadiusRecord]:
    """Choose r_1 < ... < r_K.

    strict: Lambda(r_k) > [2^(k+1) C_phi / c_phi (8 pi + k + max_j<k Lambda^(1/p)(r_j)/phi_*(r_j))]^p.
    demo:   Lambda(r_k) >= growth * Lambda(r_(k-1)); r_1 is the first admissible rung.

    Every r_k must also pass the structural conditions (lambda < pi, disjoint
    teeth, central mass >= c_phi/2) and, against every earlier kernel, the
    uniform comb-mean bound sup_theta mean_Delta(r_k) phi^*_(r_j) <= C_phi.
    The search walks the ladder 1 - 2^-j and bisects in log2(1 - r) between
    the last failing and the first passing rung.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if p <= 1:
        raise ValueError("the construction needs p > 1")
    if mode not in ("strict", "demo"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "demo" and growth <= 1:
        raise ValueError("demo growth factor must exceed 1")
    ladder = default_ladder()
    if c_phi is None:
        c_phi = c_phi_estimate(family, ladder, default_grid_rule())
    if c_small is None:
        c_small = small_c_phi(family, ladder).tail_value
    exps = np.arange(3.0, PRECISION_CEILING + 1.0) if r_probe is None else \
        -np.log2(1.0 - np.asarray(list(r_probe), dtype=float))
    records: list[RadiusRecord] = []

    def check(u: float, k: int):
        r = 1.0 - 2.0 ** (-u)
        blk = block_data(family, lam, p, r)
        why = _structural(blk, c_small)
        prev = [rec.block for rec in records]
        if mode == "strict":
            thr = strict_threshold(k, c_phi, c_small, p, prev)
        else:
            thr = growth * prev[-1].Lambda if prev else 0.0
        if why is None and not blk.Lambda >= thr:
            why = f"Lambda threshold {thr:.6g} (got {blk.Lambda:.6g})"
        means = []
        if why is None:
            for j, b in enumerate(prev, start=1):
                m = uniform_mean_sup(family, b.r, blk.comb)
                means.append((j, m))
                if m > c_phi:
                    why = f"uniform comb-mean bound against r_{j} ({m:.6g} > C_phi={c_phi:.6g})"
                    break
        return why, blk, thr, means

    u_floor = 0.0
    for k in range(1, K + 1):
        cands = [u for u in exps if u > u_floor]
        last_fail, found, reason = None, None, "r ladder empty"
        for u in cands:
            why, blk, thr, means = check(u, k)
            if why is None:
                found = (u, blk, thr, means)
                break
            last_fail, reason = u, why
        if found is None:
            raise ConstructionError(
                f"radius r_{k}: search exhausted 1 - r >= 2^-{exps.max():g}; blocked by {reason}")
        if bisect and last_fail is not None:
            lo, hi = last_fail, found[0]
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                res = check(mid, k)
                if res[0] is None:
                    hi, found = mid, (mid, *res[1:])
                else:
                    lo = mid
        u, blk, thr, means = found
        rec = RadiusRecord(k, blk, thr, means, blk.Lambda > 4.0 * c_phi ** p)
        records.append(rec)
        u_floor = u
    return records


# -- assembly -------------------------------------------------------------------------


@dataclass
class CounterexampleSpec:
    family: KernelFamily
    lam: RegionFunction
    p: float
    mode: str
    growth: Optional[float]
    records: list
    c_phi: float
    c_small: float
    blocks: list = field(default_factory=list)     # PeriodicFunction per k

    def __post_init__(self):
        radii = [rec.block.r for rec in self.records]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must increase strictly")
        for rec in self.records:
            if not rec.block.disjoint:
                raise ValueError(f"teeth overlap at r_{rec.k}")
            val, chain, cap = rec.block.lp_chain()
            if val > cap * (1 + 1e-12) or chain > cap * (1 + 1e-12):
                raise ValueError(f"||f_r||_p^p exceeds 8 pi at r_{rec.k}")
        if not self.blocks:
            self.blocks = [build_fr(self.family, self.lam, self.p, rec.block.r, block=rec.block)
                           for rec in self.records]

    @property
    def K(self) -> int:
        return len(self.records)

    @property
    def radii(self) -> list:
        return [rec.block.r for rec in self.records]

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_spec(),
            "region": self.lam.to_spec(),
            "p": self.p,
            "mode": self.mode,
            "growth_factor": self.growth,
            "c_phi": self.c_phi,
            "c_phi_small": self.c_small,
            "radii": self.radii,
            "one_minus_r": [1.0 - r for r in self.radii],
            "n": [rec.block.n for rec in self.records],
            "mu": [rec.block.mu for rec in self.records],
            "Lambda": [rec.block.Lambda for rec in self.records],
            "threshold": [rec.threshold for rec in self.records],
            "Lambda_exceeds_4_c_phi_p": [rec.big_lambda_ok for rec in self.records],
            "comb_mean_sups": [[[j, m] for j, m in rec.mean_sups] for rec in self.records],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_spec(family: KernelFamily, lam: RegionFunction, p: float, K: int, mode: str = "demo",
               growth: float = 4.0, r_probe=None, bisect: bool = True) -> CounterexampleSpec:
    ladder = default_ladder()
    c_phi = c_phi_estimate(family, ladder, default_grid_rule())
    c_small = small_c_phi(family, ladder).tail_value
    recs = select_radii(family, lam, p, K, mode, growth, r_probe, c_phi, c_small, bisect)
    return CounterexampleSpec(family, lam, p, mode, growth if mode == "demo" else None, recs,
                              c_phi, c_small)


def assemble(spec: CounterexampleSpec) -> PeriodicFunction:
    """f = sum over k <= K of 2^-k f_(r_k), with the triangle-inequality check on ||f||_p."""
    coeffs = [2.0 ** -(k + 1) for k in range(spec.K)]
    blocks = spec.blocks
    prims = [b.primitive for b in blocks]

    def rule(x):
        return sum(c * b.rule(x) for c, b in zip(coeffs, blocks))

    primitive = None
    if all(pr is not None for pr in prims):
        def primitive(x):
            return sum(c * pr(x) for c, pr in zip(coeffs, prims))

    bps = sorted({bp for b in blocks for bp in b.breakpoints})
    f = PeriodicFunction("piecewise_constant", rule, breakpoints=bps, primitive=primitive,
                         name=f"counterexample(K={spec.K})")
    bound = sum(c * (8.0 * math.pi) ** (1.0 / spec.p) for c in coeffs)
    norm = assembled_norm(spec)
    if norm > bound * (1 + 1e-9):
        raise ConstructionError(f"||f||_p = {norm:.6g} exceeds sum 2^-k (8 pi)^(1/p) = {bound:.6g}")
    return f


def assembled_norm(spec: CounterexampleSpec) -> float:
    """||f||_p, exact when the block supports are pairwise disjoint, else by quadrature."""
    p = spec.p
    combs = [rec.block.comb for rec in spec.records]
    heights = [2.0 ** -(k + 1) * rec.block.height for k, rec in enumerate(spec.records)]
    if _supports_disjoint(combs):
        return sum(h ** p * c.measure for h, c in zip(heights, combs)) ** (1.0 / p)
    mu_min = min(c.delta for c in combs)
    g = grid_for(max(spec.radii), 1024)
    while g.h > mu_min / 4:
        g = g.refined()
    total = np.zeros(g.n)
    for h, c in zip(heights, combs):
        total += h * np.asarray(c.indicator(1.0).cell_values(g))
    return float((g.h * np.sum(np.abs(total) ** p)) ** (1.0 / p))


def _supports_disjoint(combs: Sequence[DeltaSet]) -> bool:
    for i, a in enumerate(combs):
        for b in combs[i + 1:]:
            fine, coarse = (a, b) if a.delta <= b.delta else (b, a)
            lo = coarse.contains(fine.centers - fine.delta) | coarse.contains(fine.centers + fine.delta)
            if np.any(lo) or np.any(fine.contains(coarse.centers)):
                return False
    return True


# -- divergence profile ---------------------------------------------------------------


@dataclass
class DivergenceProfile:
    mode: str
    x: np.ndarray
    sup: np.ndarray        # (K, len(x))
    S1: np.ndarray         # sup |S1| over the window
    S2: np.ndarray         # sup S2
    S3: np.ndarray         # sup |S3|
    bounds: dict
    c_phi: float

    @property
    def K(self) -> int:
        return self.sup.shape[0]

    def decomposition_ok(self) -> bool:
        return bool(np.all(self.sup >= self.S2 - self.S1 - self.S3 - 1e-9 * (1 + np.abs(self.S2))))

    def s3_ok(self) -> bool:
        return bool(np.all(self.S3 <= 8.0 * math.pi * self.c_phi))

    def fraction_increasing(self) -> float:
        """Share of sample points where the sup increases strictly at every step k-1 -> k."""
        if self.K < 2:
            return 1.0
        inc = np.all(np.diff(self.sup, axis=0) > 0, axis=0)
        return float(np.mean(inc))

    def growth_factor(self, quantile: float = 0.1) -> float:
        """g' such that sup_k >= g' sup_(k-1) for every k at (1 - quantile) of the samples."""
        if self.K < 2:
            return math.inf
        ratios = np.min(self.sup[1:] / self.sup[:-1], axis=0)
        return float(np.quantile(ratios, quantile, method="lower"))

    def strict_ok(self) -> bool:
        k = np.arange(1, self.K + 1)[:, None]
        return bool(np.all(self.sup >= self.c_phi * k))

    @property
    def passed(self) -> bool:
        base = self.decomposition_ok() and self.s3_ok()
        if self.mode == "strict":
            return base and self.strict_ok()
        return base and self.growth_factor() > 1.0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "x", "sup", "S1", "S2", "S3"])
            for k in range(self.K):
                for i, x in enumerate(self.x):
                    w.writerow([k + 1, repr(float(x)), repr(float(self.sup[k, i])),
                                repr(float(self.S1[k, i])), repr(float(self.S2[k, i])),
                                repr(float(self.S3[k, i]))])


def _window_sup(vals: np.ndarray, g: CircleGrid, x: np.ndarray, lam: float, absolute: bool):
    out = np.empty(len(x))
    k = max(int(math.ceil(lam / g.h)) - 1, 0)
    for i, xi in enumerate(x):
        c = int(round(xi / g.h))
        idx = np.arange(c - k, c + k + 1)
        idx = idx[np.abs(idx * g.h - xi) < lam] % g.n
        v = vals[idx]
        out[i] = np.max(np.abs(v)) if absolute else np.max(v)
    return out


def divergence_profile(spec: CounterexampleSpec, f: Optional[PeriodicFunction] = None,
                       x_grid: Optional[Sequence[float]] = None, min_n: int = 1024
                       ) -> DivergenceProfile:
    """Windowed sups of Phi_(r_k)(., f) and of its three pieces, per k and sample x.

    Each radius is evaluated on a grid fine enough for its kernel and for the
    teeth of its own block; thinner teeth of later blocks enter through exact
    cell averages.
    """
    if x_grid is None:
        x_grid = TWO_PI * (np.arange(16) + 0.5) / 16
    x = np.mod(np.asarray(list(x_grid), dtype=float), TWO_PI)
    K = spec.K
    sup = np.zeros((K, len(x)))
    S1, S2, S3 = np.zeros_like(sup), np.zeros_like(sup), np.zeros_like(sup)
    coeffs = [2.0 ** -(k + 1) for k in range(K)]
    for k, rec in enumerate(spec.records):
        blk = rec.block
        g = _block_grid(blk.r, blk.mu, CircleGrid(min_n))
        kern = spec.family.slice(blk.r, g).evaluate(g.nodes)
        kf = np.fft.rfft(kern)
        parts = []
        for j, b in enumerate(spec.blocks):
            w = np.asarray(b.cell_values(g), dtype=float)
            parts.append(coeffs[j] * g.h * np.fft.irfft(kf * np.fft.rfft(w), g.n))
        zero = np.zeros(g.n)
        s1 = sum(parts[:k], zero)
        s2 = parts[k]
        s3 = sum(parts[k + 1:], zero)
        total = s1 + s2 + s3
        sup[k] = _window_sup(total, g, x, blk.lam, absolute=False)
        S1[k] = _window_sup(s1, g, x, blk.lam, absolute=True)
        S2[k] = _window_sup(s2, g, x, blk.lam, absolute=False)
        S3[k] = _window_sup(s3, g, x, blk.lam, absolute=True)
        del parts, s1, s2, s3, total
    heights = [rec.block.height for rec in spec.records]
    bounds = {
        "S1": [spec.c_phi * max(heights[:k], default=0.0) for k in range(K)],
        "S3": 8.0 * math.pi * spec.c_phi,
        "strict_total": [spec.c_phi * (k + 1) for k in range(K)],
    }
    return DivergenceProfile(spec.mode, x, sup, S1, S2, S3, bounds, spec.c_phi)


# -- Lemma 1 -------------------------------------------------------------------------


@dataclass
class BVMeanReport:
    n: int
    delta: float
    max_error: float
    bound: float
    variation: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.bound + 1e-9


def bv_mean_check(phi: PeriodicFunction, n: int, delta: float, theta_grid=MEAN_PROBES,
                  grid: Optional[CircleGrid] = None) -> BVMeanReport:
    """max over theta of |comb mean of phi(theta + .) - circle mean| against 2 V(phi) / n."""
    from .circle import total_variation

    comb = DeltaSet(n, delta)
    g = grid or CircleGrid(4096)
    try:
        V = total_variation(phi, g)
    except ValueError as exc:
        raise ValueError(f"variation unavailable: {exc}") from exc
    if not math.isfinite(V):
        raise ValueError("variation unavailable: infinite")
    theta = np.linspace(-math.pi, math.pi, theta_grid) if np.isscalar(theta_grid) else \
        np.asarray(theta_grid, dtype=float)
    circle_mean = integrate(phi, g).value / TWO_PI
    lo = comb.centers[None, :] - delta + theta[:, None]
    hi = comb.centers[None, :] + delta + theta[:, None]
    means = np.sum(phi.interval_integral(lo, hi), axis=1) / comb.measure if (
        phi.primitive is not None or phi.kind == "sampled") else \
        comb_mean(lambda u: phi.evaluate(-u), comb, -theta)
    err = float(np.max(np.abs(means - circle_mean)))
    return BVMeanReport(n, delta, err, 2.0 * V / n, V)
