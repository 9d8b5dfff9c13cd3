"""Two-cavity electron waveguide: dispersion E_{k,l} = k^2/pi^2 + l^2/W^2 in
place of omega_k = |k|, a discrete channel index l, and the trap condition
1 + sigma cos(k0 x21) = 0 that pins an electron between the cavities even
though a single cavity would leak.

Quantitative couplings V0_{k,l} depend on the cavity-lead geometry and are
not modelled here; the coupling is a pluggable callable and the shipped
default is a smooth single-peak model concentrated on the open channel, so
every check in this module is structural (self-consistency, parity, signs)
rather than a numeric prediction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .greens import ComplexEnergy, ConvergenceError
from .quadrature import QuadratureSpec, adaptive_integral

__all__ = [
    "WaveguideParams",
    "WaveguideError",
    "TrapSolution",
    "ExistenceReport",
    "default_coupling",
    "cavity_energy",
    "lead_energy",
    "open_channel_momentum",
    "trap_distance",
    "existence_check",
    "solve_trap",
    "collective_pole_wg",
    "trap_report_to_json",
]


class WaveguideError(ValueError):
    pass


def default_coupling(g0: float = 0.1, k_c: float = 2.0, channel_decay: float = 0.2):
    """Invented smooth coupling v0(k, l) = g0 k/(1+(k/k_c)^2) * w^(l-1).

    Linear in k at the channel threshold so the existence integral converges;
    real on the real axis and analytic in k (needed by the pole solver);
    geometric decay across closed channels keeps the channel sum summable
    with a sign-definite tail.
    """
    def v0(k, l: int):
        return g0 * k / (1.0 + (k / k_c) ** 2) * channel_decay ** (l - 1)

    return v0


@dataclass(frozen=True)
class WaveguideParams:
    D: float = 1.0              # cavity vertical dimension
    W: float = 1.0              # lead vertical dimension
    m0: int = 1                 # trapped-mode horizontal index
    n0: int = 1                 # trapped-mode vertical index
    x1: float = 0.0
    x2: float = 1.0
    l_max: int = 10             # channel truncation (>= 2: keep a closed channel)
    coupling: object = field(default_factory=default_coupling)

    @property
    def xi0(self) -> float:
        return cavity_energy(self.m0, self.n0, self.D)

    @property
    def threshold(self) -> float:
        """Open-channel threshold E_{0,1}."""
        return lead_energy(0.0, 1, self.W)

    def validate(self) -> "WaveguideParams":
        if self.l_max < 2:
            raise WaveguideError("l_max must be >= 2 (keep at least one closed channel)")
        if not (self.threshold < self.xi0 < lead_energy(0.0, 2, self.W)):
            raise WaveguideError(
                f"single-open-channel window violated: need E_01={self.threshold} < "
                f"xi0={self.xi0} < E_02={lead_energy(0.0, 2, self.W)}")
        return self


def cavity_energy(m: int, n: int, D: float) -> float:
    """Closed-cavity mode energy m^2 + n^2/D^2 (m, n positive integers)."""
    if m < 1 or n < 1:
        raise WaveguideError("cavity mode indices must be >= 1")
    return m**2 + n**2 / D**2


def lead_energy(k, l: int, W: float):
    """Lead dispersion k^2/pi^2 + l^2/W^2 for channel l >= 1."""
    if l < 1:
        raise WaveguideError("lead channel index must be >= 1")
    return np.asarray(k) ** 2 / np.pi**2 + l**2 / W**2


def open_channel_momentum(E, W: float):
    """k0(E) = pi sqrt(E - E_{0,1}) on the open channel (principal branch
    for complex E)."""
    E01 = 1.0 / W**2
    return np.pi * np.sqrt(np.asarray(E, dtype=complex) - E01)


def trap_distance(xi: float, n: int, sector, W: float) -> float:
    """g(xi) = n / sqrt(xi - E_{0,1}); n odd for the symmetric sector, even
    for the antisymmetric, which is exactly what makes
    1 + sigma cos(k0(xi) g(xi)) = 0."""
    from .greens import as_sector

    sector = as_sector(sector)
    if sector is None:
        raise WaveguideError("trap_distance needs a two-cavity sector")
    if (n % 2 == 0) == (sector.sigma > 0):
        raise WaveguideError(
            f"parity mismatch: n={n} requires the "
            f"{'antisymmetric' if n % 2 == 0 else 'symmetric'} sector")
    E01 = 1.0 / W**2
    if xi <= E01:
        raise WaveguideError(f"xi={xi} at or below the channel threshold {E01}")
    return n / np.sqrt(xi - E01)


_WG_QUAD = QuadratureSpec(cutoff=800.0, rel_tol=1e-11, abs_tol=1e-13, max_panels=4000)


def _k_top(wg: WaveguideParams, quad: QuadratureSpec) -> float:
    return quad.cutoff


def _closed_channel_sum(wg: WaveguideParams, quad: QuadratureSpec, integrand_for_l) -> float:
    """Sum over l = 2..l_max of smooth channel integrals, with a geometric
    tail estimate (terms are sign-definite below threshold)."""
    total = 0.0
    prev = None
    for l in range(2, wg.l_max + 1):
        term = float(np.real(adaptive_integral(integrand_for_l(l), 1e-12, _k_top(wg, quad), quad)))
        total += term
        prev = term
    if prev is not None and abs(prev) > 0:
        # channel decay ratio from the coupling model itself
        tail = abs(prev)
        if tail > 1e3 * quad.abs_tol:
            import warnings

            warnings.warn(f"closed-channel tail after l_max={wg.l_max} may exceed tolerance "
                          f"(last term {prev:.2e})", stacklevel=3)
    return total


@dataclass
class ExistenceReport:
    ok: bool
    margin: float


def existence_check(wg: WaveguideParams, quad: QuadratureSpec = _WG_QUAD) -> ExistenceReport:
    """Margin xi0 - E_{0,1} - 2 sum_l int |v0|^2 / (E_{k,l} - E_{0,1}) dk;
    positive means the trap equation has a solution (the structural analogue
    of the one-atom instability condition)."""
    wg.validate()
    E01 = wg.threshold
    v0 = wg.coupling

    def open_integrand(k):
        return v0(k, 1) ** 2 * np.pi**2 / k**2     # E_{k,1} - E01 = k^2/pi^2

    total = float(np.real(adaptive_integral(open_integrand, 1e-12, _k_top(wg, quad), quad)))
    total += _closed_channel_sum(
        wg, quad, lambda l: (lambda k: v0(k, l) ** 2 / (lead_energy(k, l, wg.W) - E01)))
    margin = wg.xi0 - E01 - 2.0 * total
    return ExistenceReport(bool(margin > 0), float(margin))


@dataclass
class TrapSolution:
    sector: str
    n: int
    xi0: float
    xi_tilde: float
    x21_trap: float
    residual: float


def solve_trap(wg: WaveguideParams, n: int, sector,
               quad: QuadratureSpec = _WG_QUAD,
               tol: float = 1e-12, max_iter: int = 300) -> TrapSolution:
    """Self-consistent trapped energy xi_tilde and distance x21 = g(xi_tilde).

    Damped fixed point of the principal-value trap equation; the open-channel
    PV uses subtraction around k0 (the leftover PV of 1/(k0^2 - k^2) over the
    half-line is exactly zero).
    """
    from .greens import as_sector

    sector = as_sector(sector)
    wg.validate()
    report = existence_check(wg, quad)
    if not report.ok:
        raise WaveguideError(f"existence condition violated (margin {report.margin:.3e})")
    trap_distance(wg.xi0, n, sector, wg.W)   # parity/threshold validation
    E01 = wg.threshold
    v0 = wg.coupling
    sigma = sector.sigma
    xi = wg.xi0
    residual = np.inf
    for _ in range(max_iter):
        g = trap_distance(xi, n, sector, wg.W)
        k0 = np.pi * np.sqrt(xi - E01)

        def h_open(k):
            return v0(k, 1) ** 2 * (1.0 + sigma * np.cos(k * g))

        h0 = h_open(k0)

        def subtracted(k):
            return (h_open(k) - h0) * np.pi**2 / (k0**2 - k**2)

        seeds = [0.0, 0.5 * k0, k0, 1.5 * k0, 3 * k0, _k_top(wg, quad)]
        total = float(np.real(adaptive_integral(subtracted, 1e-12, _k_top(wg, quad), quad,
                                                seed_edges=seeds)))
        total += _closed_channel_sum(
            wg, quad,
            lambda l: (lambda k: v0(k, l) ** 2 * (1.0 + sigma * np.cos(k * g))
                       / (xi - lead_energy(k, l, wg.W))))
        xi_new = wg.xi0 + 2.0 * total
        if not (E01 < xi_new < lead_energy(0.0, 2, wg.W)):
            raise WaveguideError(f"trap fixed point left the single-channel window: {xi_new}")
        residual = abs(xi_new - xi)
        if residual < tol:
            xi = xi_new
            break
        xi = 0.5 * (xi + xi_new)
    else:
        raise ConvergenceError(f"trap fixed point stalled at residual {residual:.2e}")
    return TrapSolution(sector.tag, n, wg.xi0, float(xi),
                        float(trap_distance(xi, n, sector, wg.W)), float(residual))


def _eta_wg(z: complex, wg: WaveguideParams, sigma: int, x21: float,
            quad: QuadratureSpec) -> complex:
    """z - xi0 - 2 sum_l J_l(z) on the + branch.

    Open channel: substituting E = E_{k,1} makes the continuation correction
    -2 pi i |v0(k0,1)|^2 (1+sigma cos k0 x21) dk/dE; folded into the single
    analytic expression J_1 = int (h - h(kz))/(z - E_{k,1}) dk
    - i pi^3 h(kz)/(2 kz), kz = pi sqrt(z - E01), valid on both sides of the
    axis. Closed channels have no crossing for Re z inside the window and
    stay plain integrals.
    """
    E01 = wg.threshold
    v0 = wg.coupling
    kz = np.pi * np.sqrt(complex(z) - E01)
    hz = v0(kz, 1) ** 2 * (1.0 + sigma * np.cos(kz * x21))

    def subtracted(k):
        h = v0(k, 1) ** 2 * (1.0 + sigma * np.cos(k * x21))
        return (h - hz) * np.pi**2 / (kz**2 - k**2)

    k0r = abs(kz)
    seeds = [0.0, 0.5 * k0r, k0r, 1.5 * k0r, 3 * k0r, _k_top(wg, quad)]
    j1 = adaptive_integral(subtracted, 1e-12, _k_top(wg, quad), quad, seed_edges=seeds)
    j1 = j1 - 1j * np.pi**3 * hz / (2.0 * kz)
    total = j1
    for l in range(2, wg.l_max + 1):
        if z.real >= lead_energy(0.0, l, wg.W):
            raise WaveguideError("Re z crosses a closed-channel threshold; single-open-channel "
                                 "assumption violated")
        total += adaptive_integral(
            lambda k: v0(k, l) ** 2 * (1.0 + sigma * np.cos(k * x21)) / (z - lead_energy(k, l, wg.W)),
            1e-12, _k_top(wg, quad), quad)
    return z - wg.xi0 - 2.0 * total


def collective_pole_wg(wg: WaveguideParams, sector, x21: float,
                       quad: QuadratureSpec = _WG_QUAD,
                       seed: complex | None = None, tol: float = 1e-11) -> ComplexEnergy:
    """Collective pole of the waveguide pair at separation x21 (Newton with a
    numerical derivative). gamma vanishes to solver tolerance exactly at
    x21 = g(xi_tilde) from solve_trap."""
    from .greens import as_sector

    sector = as_sector(sector)
    wg.validate()
    z = complex(seed) if seed is not None else complex(wg.xi0, -1e-4)
    step = 1e-7
    f = _eta_wg(z, wg, sector.sigma, x21, quad)
    for _ in range(80):
        df = (_eta_wg(z + step, wg, sector.sigma, x21, quad)
              - _eta_wg(z - step, wg, sector.sigma, x21, quad)) / (2 * step)
        z = z - f / df
        f = _eta_wg(z, wg, sector.sigma, x21, quad)
        if abs(f) < tol:
            break
    else:
        raise ConvergenceError(f"waveguide pole Newton stalled (|eta|={abs(f):.2e})")
    dfe = (_eta_wg(z + step, wg, sector.sigma, x21, quad)
           - _eta_wg(z - step, wg, sector.sigma, x21, quad)) / (2 * step)
    return ComplexEnergy.from_root(z, sector, 0, 1.0 / dfe, gamma_tol=1e-9)


def trap_report_to_json(solution: TrapSolution, pole: ComplexEnergy,
                        report: ExistenceReport, path) -> None:
    payload = {
        "sector": solution.sector,
        "n": solution.n,
        "xi0": solution.xi0,
        "xi_tilde": solution.xi_tilde,
        "x21_trap": solution.x21_trap,
        "gamma_residual": pole.gamma,
        "margin": report.margin,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
