"""Convolution integrals Phi_r(x, f) and lambda(r)-convergence diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circle import CircleGrid, PeriodicFunction, QuadratureReport, check_resolution, grid_for, reduce_angle
from .functionals import RegionFunction
from .kernels import GridRule, KernelFamily, KernelSlice, _golden_max, default_grid_rule

MIN_THETA_PROBES = 129


def _weights(f: PeriodicFunction, grid: CircleGrid) -> np.ndarray:
    w = np.asarray(f.cell_values(grid), dtype=float)
    if not np.all(np.isfinite(w)):
        j = int(np.argmax(~np.isfinite(w)))
        raise ValueError(f"non-finite quadrature weight for {f!r} at node {j}")
    return w


def _direct(slice_: KernelSlice, w: np.ndarray, grid: CircleGrid, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes = grid.nodes
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        out[i] = grid.h * np.dot(slice_.evaluate(xi - nodes), w)
    return out


def convolve_at(slice_: KernelSlice, f: PeriodicFunction, x: float, grid: CircleGrid,
                report: bool = False):
    """Phi_r(x, f) = integral of phi_r(x - t) f(t) dt by periodic quadrature.

    With ``report=True`` a :class:`QuadratureReport` carries the gap to the
    doubled grid as a refinement error.
    """
    check_resolution(grid, slice_.r)
    val = float(_direct(slice_, _weights(f, grid), grid, x)[0])
    if not report:
        return val
    g2 = grid.refined()
    fine = float(_direct(slice_, _weights(f, g2), g2, x)[0])
    return QuadratureReport(fine, abs(fine - val))


def cyclic_convolve(kernel_samples: np.ndarray, weights: np.ndarray, h: float) -> np.ndarray:
    """h * sum_j k[i - j] w[j] for all i, by real FFT."""
    n = len(weights)
    return h * np.fft.irfft(np.fft.rfft(kernel_samples) * np.fft.rfft(weights), n)


def convolve_grid(slice_: KernelSlice, f: PeriodicFunction, grid: CircleGrid) -> PeriodicFunction:
    """Phi_r(x_j, f) at every node as a sampled function."""
    if not isinstance(grid, CircleGrid):
        grid = CircleGrid(grid)
    check_resolution(grid, slice_.r)
    vals = cyclic_convolve(slice_.evaluate(grid.nodes), _weights(f, grid), grid.h)
    return PeriodicFunction("sampled", samples=vals, name=f"Phi({slice_!r}, {f.name})")


def _window_nodes(grid: CircleGrid, x: float, lam: float) -> np.ndarray:
    """Indices of nodes y with |y - x| < lam (circular distance)."""
    if lam >= math.pi:
        return np.arange(grid.n)
    lo = int(math.floor((x - lam) / grid.h)) + 1
    hi = int(math.ceil((x + lam) / grid.h)) - 1
    idx = np.arange(lo, hi + 1)
    d = np.abs(idx * grid.h - x)
    return np.mod(idx[d < lam], grid.n)


def lambda_sup_deviation(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction,
                         x: float, r: float, grid: Optional[CircleGrid] = None,
                         target: Optional[float] = None) -> float:
    """sup over theta in [x - lambda(r), x + lambda(r)] of |Phi_r(theta, f) - f(x)|.

    Node values come from the FFT when the window holds at least 129 grid
    nodes, otherwise from 129 direct probes; the best probe is then refined
    by golden section on its neighbours.  The result is a lower bound.
    """
    lr = float(lam(r))
    if not math.isfinite(lr) or lr <= 0:
        raise ValueError(f"lambda({r}) = {lr} is not a positive finite number")
    g = grid or grid_for(r, 1024)
    s = family.slice(r, g)
    w = _weights(f, g)
    a = float(f.evaluate(x)) if target is None else float(target)
    if not math.isfinite(a):
        raise ValueError(f"f({x}) is not finite")
    idx = _window_nodes(g, x, lr)
    if len(idx) >= MIN_THETA_PROBES:
        phi = cyclic_convolve(s.evaluate(g.nodes), w, g.h)
        dev = np.abs(phi[idx] - a)
        k = int(np.argmax(dev))
        # unwrap the node position so the refinement bracket sits around x
        theta = x + float(reduce_angle(idx[k] * g.h - x))
        step = g.h
    else:
        span = min(lr, math.pi)
        thetas = x + span * np.linspace(-1.0, 1.0, MIN_THETA_PROBES)[1:-1]
        dev = np.abs(_direct(s, w, g, thetas) - a)
        k = int(np.argmax(dev))
        theta = thetas[k]
        step = thetas[1] - thetas[0]
    best = float(dev[k])
    lo = max(theta - step, x - lr * (1 - 1e-12))
    hi = min(theta + step, x + lr * (1 - 1e-12))
    if lo < theta < hi:
        dfun = lambda t: abs(float(_direct(s, w, g, t)[0]) - a)
        best = max(best, _golden_max(dfun, lo, theta, hi))
    return best


@dataclass
class ConvergenceTrace:
    x: float
    r: np.ndarray
    lam: np.ndarray
    sup_deviation: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("trace rows must have increasing r")
        if np.any(self.lam <= 0):
            raise ValueError("lambda entries must be positive")

    @property
    def rows(self):
        return list(zip(self.r.tolist(), self.lam.tolist(), self.sup_deviation.tolist()))

    def monotone_tail(self, count: int = 5) -> bool:
        """True when the deviation strictly decreases over the last ``count`` rows."""
        tail = self.sup_deviation[-count:]
        return bool(np.all(np.diff(tail) < 0))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "lambda", "sup_deviation"])
            for row in self.rows:
                w.writerow([repr(v) for v in row])


def convergence_trace(family: KernelFamily, f: PeriodicFunction, lam: RegionFunction, x: float,
                      r_seq: Sequence[float], grid_rule: Optional[GridRule] = None,
                      target: Optional[float] = None) -> ConvergenceTrace:
    """One lambda_sup_deviation row per r."""
    r_seq = np.asarray(list(r_seq), dtype=float)
    if np.any(np.diff(r_seq) <= 0):
        raise ValueError("r_seq must be increasing")
    rule = grid_rule or default_grid_rule()
    devs = [lambda_sup_deviation(family, f, lam, x, r, rule(r), target) for r in r_seq]
    return ConvergenceTrace(float(x), r_seq, np.asarray(lam(r_seq), dtype=float), np.asarray(devs))
