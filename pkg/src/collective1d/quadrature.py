"""Quadrature backbone: adaptive Gauss panels, the analytically continued
half-line integral, rotated-ray kernels for Fourier-type integrands, and a
Filon integrator for strongly oscillatory transforms.

Every integral in this package is one of

    int_0^inf f(k) dk,                int_0^inf f(k) / (z - k)^m dk,

with f analytic near the positive half-line. The continued variant follows
the retarded (+) branch: the plain integral above the real axis, principal
value minus i*pi*f on it, and plain minus 2*pi*i*f(z) below it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "ContinuationDomainError",
    "adaptive_integral",
    "halfline_integral",
    "continued_halfline_integral",
    "RayKernel",
    "fourier_halfline",
]

_NODES_HI, _WEIGHTS_HI = np.polynomial.legendre.leggauss(15)
_NODES_LO, _WEIGHTS_LO = np.polynomial.legendre.leggauss(7)
_RAY_NODES, _RAY_WEIGHTS = np.polynomial.legendre.leggauss(32)

_AXIS_TOL = 1e-13


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ContinuationDomainError(ValueError):
    """z lies where the + continuation is not defined by this routine."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Cutoff and tolerance budget for half-line quadratures.

    cutoff     : upper limit of the resolved range; the [cutoff, inf) tail is
                 folded in by a 1/k substitution, so cutoff only needs to
                 dominate the structured part of the integrand (>= 50*omegaM).
    rel_tol, abs_tol : accepted error, max(abs_tol, rel_tol*|I|).
    max_panels : subdivision budget before QuadratureError.
    """

    cutoff: float = 1000.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_panels: int = 24000

    @classmethod
    def for_params(cls, params, **overrides) -> "QuadratureSpec":
        kwargs = {"cutoff": 200.0 * params.omegaM}
        kwargs.update(overrides)
        return cls(**kwargs)

    def check_cutoff(self, omegaM: float) -> None:
        if self.cutoff < 50.0 * omegaM:
            raise QuadratureError(
                f"cutoff {self.cutoff} below 50*omegaM = {50.0 * omegaM}; "
                "tail truncation would exceed the tolerance budget"
            )


_NODES_BOTH = np.concatenate([_NODES_HI, _NODES_LO])


def _panel_estimates(f, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * _NODES_BOTH[None, :]
    vals = np.asarray(f(x.ravel())).reshape(x.shape)
    fine = (vals[:, : _NODES_HI.size] * _WEIGHTS_HI[None, :]).sum(axis=1) * half
    coarse = (vals[:, _NODES_HI.size :] * _WEIGHTS_LO[None, :]).sum(axis=1) * half
    return fine, np.abs(fine - coarse)


def adaptive_integral(f, a: float, b: float, spec: QuadratureSpec, seed_edges=None,
                      soft_cap: float = 0.0) -> complex:
    """Adaptive 15/7 Gauss panels on [a, b]; f vectorized, may return complex.

    soft_cap > 0 allows a best-effort return when the panel budget runs out
    but the error estimate is below soft_cap (used for tail pieces whose
    contribution is already near the tolerance floor)."""
    if seed_edges is None:
        edges = np.linspace(a, b, 17)
    else:
        edges = np.unique(np.clip(np.asarray(seed_edges, dtype=float), a, b))
        edges = np.union1d(edges, [a, b])
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    vals, errs = _panel_estimates(f, lo, hi)
    while True:
        total = vals.sum()
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if errs.sum() <= tol:
            return total
        if lo.size >= spec.max_panels:
            if errs.sum() <= soft_cap:
                return total
            raise QuadratureError(
                f"quadrature non-convergence: {lo.size} panels, error {errs.sum():.2e} > {tol:.2e}"
            )
        # split every panel whose error exceeds its equal share
        share = tol / max(1, lo.size) * 0.5
        split = errs > share
        if not split.any():
            split = errs >= errs.max() * 0.5
        mid = 0.5 * (lo[split] + hi[split])
        lo = np.concatenate([lo[~split], lo[split], mid])
        hi = np.concatenate([hi[~split], mid, hi[split]])
        vals, errs = _panel_estimates(f, lo, hi)


def _tail_integral(f, spec: QuadratureSpec) -> complex:
    """int_cutoff^inf f(k) dk via k = cutoff/u, u in (0, 1].

    Oscillations of f are unresolvable arbitrarily far out, but by parts they
    die at least one power of k faster than the envelope, so a best-effort
    pass capped at ~1e4*abs_tol of estimated error is an honest tail bound.
    """
    lam = spec.cutoff

    def g(u):
        u = np.asarray(u)
        return f(lam / u) * lam / u**2

    return adaptive_integral(g, 1e-9, 1.0, spec, soft_cap=1e4 * spec.abs_tol)


def halfline_integral(f, spec: QuadratureSpec) -> complex:
    """int_0^inf f(k) dk for f decaying at least like k^-2."""
    return adaptive_integral(f, 0.0, spec.cutoff, spec) + _tail_integral(f, spec)


def continued_halfline_integral(f, z: complex, spec: QuadratureSpec,
                                include_tail: bool = True) -> complex:
    """The + branch of int_0^inf f(k)/(z-k) dk.

    Im z > 0 : plain integral.
    Im z = 0 : principal value minus i*pi*f(z) (boundary value from above).
    Im z < 0 : plain integral minus 2*pi*i*f(z).

    f must be evaluable at complex arguments near z (the subtraction and the
    continuation term both need f(z)). z on the negative real axis is
    rejected: the k=0 endpoint is a fixed feature of the integration ray and
    its treatment belongs to the caller. include_tail=False truncates at the
    cutoff (the only sensible reading for non-decaying f, e.g. the constant-f
    closed form c*[ln(z) - ln(z - cutoff)]).
    """
    z = complex(z)
    lam = spec.cutoff
    if abs(z.imag) <= _AXIS_TOL and z.real <= _AXIS_TOL:
        raise ContinuationDomainError("z on the negative real axis; handle the k=0 endpoint in the caller")

    if abs(z.imag) <= _AXIS_TOL:
        omega = z.real
        if omega >= lam:
            raise ContinuationDomainError("real z beyond the quadrature cutoff")
        f_at = complex(np.asarray(f(np.array([omega + 0j])))[0])
        h = 1e-7 * max(1.0, abs(omega))
        df_at = complex(
            (np.asarray(f(np.array([omega + h + 0j])))[0] - np.asarray(f(np.array([omega - h + 0j])))[0]) / (2 * h)
        )

        def subtracted(k):
            k = np.asarray(k)
            out = np.empty(k.shape, dtype=complex)
            d = omega - k
            near = np.abs(d) < 1e-9 * max(1.0, abs(omega))
            out[~near] = (np.asarray(f(k[~near])) - f_at) / d[~near]
            out[near] = -df_at
            return out

        pv = adaptive_integral(subtracted, 0.0, lam, spec, seed_edges=[0.0, omega, lam])
        pv += f_at * (np.log(omega) - np.log(lam - omega))
        if include_tail:
            pv += _tail_integral(lambda k: f(k) / (omega - k), spec)
        return pv - 1j * np.pi * f_at

    def integrand(k):
        k = np.asarray(k)
        return np.asarray(f(k)) / (z - k)

    seeds = [0.0, lam]
    if 0.0 < z.real < lam:
        w = abs(z.imag)
        seeds += [z.real - 5 * w, z.real, z.real + 5 * w, z.real - 50 * w, z.real + 50 * w]
    plain = adaptive_integral(integrand, 0.0, lam, spec, seed_edges=seeds)
    if include_tail:
        plain += _tail_integral(integrand, spec)
    if z.imag < 0:
        f_at = complex(np.asarray(f(np.array([z])))[0])
        plain -= 2j * np.pi * f_at
    return plain


class RayKernel:
    """Pole integrals of numer(k) e^{i k c} along the ray arg k = sign(c) * pi/4.

    Rotating the half-line by +-45 degrees turns the e^{ikc} oscillation into
    exponential decay while keeping the form-factor poles at +-i*omegaM off
    the contour; for c == 0 the rotation just moves the contour away from the
    resonance region. The kernel precomputes numer * jacobian * Gauss weights
    at fixed nodes, so evaluating

        I_m(z) = int numer(k) e^{ikc} / (z - k)^m dk     (m = 1, 2)

    for a batch of z costs one broadcasted division per m.

    Validity: any z off the chosen ray. Continuation corrections are NOT
    included here; callers add the residue terms appropriate to their branch.
    """

    def __init__(self, numer, c: float, scale: float, n_panels: int = 24):
        sign = 1.0 if c >= 0 else -1.0
        phase = np.exp(1j * sign * np.pi / 4)
        edges = np.linspace(0.0, 1.0, n_panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        t = (mid[:, None] + half[:, None] * _RAY_NODES[None, :]).ravel()
        gw = (half[:, None] * _RAY_WEIGHTS[None, :]).ravel()
        r = scale * t / (1.0 - t)
        self.nodes = r * phase
        jac = scale / (1.0 - t) ** 2
        osc = np.exp(1j * self.nodes * c) if c != 0.0 else 1.0
        self.weights = numer(self.nodes) * osc * jac * phase * gw
        self.c = c
        self.ray_sign = sign

    def integrals(self, z, second: bool = False):
        """I_1(z) (and I_2(z) if second) for scalar or array z."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        i1 = np.empty(zz.shape, dtype=complex)
        i2 = np.empty(zz.shape, dtype=complex) if second else None
        # chunk to keep the (nz, nodes) broadcast under ~32 MB
        step = max(1, int(2.0e6 / self.nodes.size))
        for start in range(0, zz.size, step):
            block = zz[start : start + step, None] - self.nodes[None, :]
            inv = 1.0 / block
            i1[start : start + step] = inv @ self.weights
            if second:
                i2[start : start + step] = (inv * inv) @ self.weights
        if np.isscalar(z) or np.asarray(z).ndim == 0:
            return (complex(i1[0]), complex(i2[0])) if second else complex(i1[0])
        return (i1, i2) if second else i1


def ray_scale(c: float, omegaM: float) -> float:
    """Transform scale so the nodes concentrate where the integrand lives."""
    if c == 0.0:
        return omegaM
    return min(omegaM, 12.0 / abs(c) + 0.2)


def fourier_halfline(kgrid: np.ndarray, fvals: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """int f(k) e^{-i k t} dk on a fixed grid, exact for the piecewise-linear
    interpolant of f (Filon-type: the oscillation is integrated analytically,
    so accuracy is set by the grid's resolution of f, not of e^{-ikt})."""
    k0 = kgrid[:-1]
    h = np.diff(kgrid)
    f0 = fvals[:-1]
    f1 = fvals[1:]
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty(ts.shape, dtype=complex)
    for i, t in enumerate(ts):
        if t == 0.0:
            out[i] = np.sum(0.5 * (f0 + f1) * h)
            continue
        theta = t * h
        w0 = np.empty(h.shape, dtype=complex)
        w1 = np.empty(h.shape, dtype=complex)
        big = np.abs(theta) > 1e-3
        tb = theta[big]
        eb = np.exp(-1j * tb)
        w1[big] = (eb * (1.0 + 1j * tb) - 1.0) / tb**2
        w0[big] = 1j * (eb - 1.0) / tb - w1[big]
        tsm = theta[~big]
        w0[~big] = 0.5 - 1j * tsm / 6.0 - tsm**2 / 24.0 + 1j * tsm**3 / 120.0
        w1[~big] = 0.5 - 1j * tsm / 3.0 - tsm**2 / 8.0 + 1j * tsm**3 / 30.0
        out[i] = np.sum(h * np.exp(-1j * t * k0) * (f0 * w0 + f1 * w1))
    return out
