"""Cell-centered advection-dispersion transport with pluggable sinks.

One kernel drives the aqueous TCE plume (Stage 2), CMC and aqueous nZVI
(Stages 3-4).  Advection is first-order upwind, dispersion is the scalar
D = Dd + alpha*|v| evaluated at faces, both explicit with automatic
sub-stepping.  Dissolution of the NAPL source zone is an analytic per-cell
relaxation toward solubility, capped by the available NAPL mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import FlowField


class TransportError(RuntimeError):
    """Negative concentrations or broken kernel invariants."""


@dataclass(frozen=True)
class TransportParams:
    diffusion: float       # molecular diffusion Dd (m^2/s)
    dispersivity: float    # alpha_L (m)

    def __post_init__(self) -> None:
        if self.diffusion < 0 or self.dispersivity < 0:
            raise ValueError("diffusion and dispersivity must be >= 0")


@dataclass(frozen=True)
class DissolutionParams:
    kl: float              # lumped volumetric mass-transfer coefficient (1/s)
    cs: float = 1.27       # solubility (kg/m^3)

    def __post_init__(self) -> None:
        if self.kl < 0:
            raise ValueError("mass-transfer coefficient must be >= 0")


class TransportKernel:
    """Explicit FV transport on a frozen flow field.

    Lateral boundaries are open: advective boundary fluxes use the boundary
    cell's own concentration (zero-gradient), dispersive boundary fluxes are
    zero.  ``well_sources`` maps (i, j) to volumetric rates; injected
    concentrations are passed per step so one kernel serves many species.
    """

    def __init__(
        self,
        grid,
        theta: np.ndarray,
        flow: FlowField,
        params: TransportParams,
        cfl: float = 0.9,
        well_sources: dict | None = None,
    ):
        self.grid = grid
        self.theta = theta
        self.pv = theta * grid.cell_volume
        self.well_sources = dict(well_sources or {})
        dx, dy = grid.dx, grid.dy

        self.fx = flow.qx * dy          # (ny, nx+1) volumetric face flow (m^3/s)
        self.fy = flow.qy * dx          # (ny+1, nx)
        self.gx = (params.diffusion + params.dispersivity * np.abs(flow.qx[:, 1:-1])) * dy / dx
        self.gy = (params.diffusion + params.dispersivity * np.abs(flow.qy[1:-1, :])) * dx / dy

        # positivity / CFL bound: dt <= cfl * pv / (sum outflux + sum conductance)
        out = np.zeros_like(self.pv)
        fxi, fyi = self.fx[:, 1:-1], self.fy[1:-1, :]
        out[:, :-1] += np.maximum(fxi, 0.0) + self.gx
        out[:, 1:] += np.maximum(-fxi, 0.0) + self.gx
        out[:-1, :] += np.maximum(fyi, 0.0) + self.gy
        out[1:, :] += np.maximum(-fyi, 0.0) + self.gy
        out[:, 0] += np.maximum(-self.fx[:, 0], 0.0)
        out[:, -1] += np.maximum(self.fx[:, -1], 0.0)
        out[0, :] += np.maximum(-self.fy[0, :], 0.0)
        out[-1, :] += np.maximum(self.fy[-1, :], 0.0)
        for (i, j), rate in self.well_sources.items():
            if rate < 0:
                out[j, i] += -rate
        with np.errstate(divide="ignore"):
            self.stable_dt = float(cfl * np.where(out > 0, self.pv / out, np.inf).min())
        self.boundary_export = 0.0  # net advected mass out of the domain (kg)

    def step(self, c: np.ndarray, dt: float, well_conc: dict | None = None) -> np.ndarray:
        """Advance by dt (sub-stepping internally); returns the new field."""
        n_sub = max(1, int(np.ceil(dt / self.stable_dt))) if np.isfinite(self.stable_dt) else 1
        sub = dt / n_sub
        well_conc = well_conc or {}
        for _ in range(n_sub):
            c = self._substep(c, sub, well_conc)
        if c.min() < -1e-12:
            raise TransportError(f"negative concentration {c.min():.3e}")
        return c

    def _substep(self, c, dt, well_conc):
        m = self.pv * c
        fxi = self.fx[:, 1:-1]
        flux_x = fxi * np.where(fxi > 0, c[:, :-1], c[:, 1:]) - self.gx * (c[:, 1:] - c[:, :-1])
        m[:, :-1] -= dt * flux_x
        m[:, 1:] += dt * flux_x
        fyi = self.fy[1:-1, :]
        flux_y = fyi * np.where(fyi > 0, c[:-1, :], c[1:, :]) - self.gy * (c[1:, :] - c[:-1, :])
        m[:-1, :] -= dt * flux_y
        m[1:, :] += dt * flux_y
        # open lateral boundaries, zero-gradient concentration
        for f, col in ((self.fx[:, 0], 0), (-self.fx[:, -1], -1)):
            bflux = f * c[:, col]           # positive = into the domain
            m[:, col] += dt * bflux
            self.boundary_export -= dt * float(bflux.sum())
        for f, row in ((self.fy[0, :], 0), (-self.fy[-1, :], -1)):
            bflux = f * c[row, :]
            m[row, :] += dt * bflux
            self.boundary_export -= dt * float(bflux.sum())
        for (i, j), rate in self.well_sources.items():
            if rate > 0:
                m[j, i] += dt * rate * well_conc.get((i, j), 0.0)
            else:
                m[j, i] += dt * rate * c[j, i]
        return m / self.pv


def advect_disperse_step(c, flow, theta, grid, params, dt, source_fn=None, cfl=0.9):
    """One-shot functional form of the kernel; ``source_fn(c) -> dc/dt``
    is applied explicitly after transport."""
    kernel = TransportKernel(grid, theta, flow, params, cfl=cfl)
    c = kernel.step(c, dt)
    if source_fn is not None:
        c = c + dt * source_fn(c)
        if c.min() < -1e-12:
            raise TransportError(f"negative concentration {c.min():.3e}")
    return c


# ---------------------------------------------------------------------------
# NAPL dissolution (stagnant-film / LEA)
# ---------------------------------------------------------------------------

def dissolution_flux(sn, c, params: DissolutionParams):
    """Unclipped volumetric transfer rate q = Kl (Cs - c) where NAPL exists."""
    return np.where(np.asarray(sn) > 0, params.kl * (params.cs - np.asarray(c)), 0.0)


def deplete_source(sn, q, theta, rho_n, dt):
    """NAPL saturation decrease for a given transfer rate, floored at zero."""
    return np.maximum(sn - q * dt / (theta * rho_n), 0.0)


def dissolution_substep(c, sn, rho_n, params: DissolutionParams, dt):
    """Analytic relaxation of c toward Cs with exact NAPL mass transfer.

    Returns (c', sn').  The transfer is capped so a step never dissolves
    more NAPL than the cell holds, and never drives c past Cs.
    """
    active = sn > 0
    dc = np.where(active, (params.cs - c) * (-np.expm1(-params.kl * dt)), 0.0)
    dc = np.minimum(dc, np.maximum(sn, 0.0) * rho_n)
    return c + dc, sn - dc / rho_n


def probe(c: np.ndarray, cell: tuple[int, int]) -> float:
    """Concentration at a monitoring-well screen cell (i, j)."""
    i, j = cell
    return float(c[j, i])
