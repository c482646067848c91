"""Single-phase Darcy pressure solver (TPFA finite volume).

Used by Stages 2-4: Dirichlet heads on the lateral boundaries, no-flow top
and bottom, optional well sources, spatially varying permeability and
viscosity.  Face transmissibilities use the harmonic mean of the cell
mobilities, which keeps the scheme locally conservative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Singular system or unacceptable linear-solve residual."""


@dataclass(frozen=True)
class FlowBC:
    """Lateral Dirichlet heads (m); None disables that side. Top/bottom are no-flow."""

    head_left: float | None
    head_right: float | None
    # volumetric sources per cell, m^3/s per unit thickness: {(i, j): rate}
    well_sources: dict = field(default_factory=dict)


@dataclass
class FlowField:
    pressure: np.ndarray   # (ny, nx) Pa
    qx: np.ndarray         # (ny, nx+1) face Darcy velocity, +x (m/s)
    qy: np.ndarray         # (ny+1, nx) face Darcy velocity, +y (m/s)

    def cell_velocity(self) -> tuple[np.ndarray, np.ndarray]:
        vx = 0.5 * (self.qx[:, :-1] + self.qx[:, 1:])
        vy = 0.5 * (self.qy[:-1, :] + self.qy[1:, :])
        return vx, vy

    def velocity_magnitude(self) -> np.ndarray:
        vx, vy = self.cell_velocity()
        return np.hypot(vx, vy)

    def divergence(self, dx: float, dy: float) -> np.ndarray:
        """Net volumetric outflow per cell (m^3/s per unit thickness)."""
        return (self.qx[:, 1:] - self.qx[:, :-1]) * dy + (self.qy[1:, :] - self.qy[:-1, :]) * dx


def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def solve_pressure(
    grid,
    k_field: np.ndarray,
    mu_field: np.ndarray,
    bc: FlowBC,
    rho: float = 1000.0,
    g: float = 9.81,
    mobility_scale: np.ndarray | None = None,
    rtol: float = 1e-10,
) -> FlowField:
    """Solve div( (k/mu) (grad p + rho g e_z) ) = sources with TPFA.

    ``mobility_scale`` multiplies k/mu cellwise (relative-permeability
    scaling in the presence of trapped NAPL).
    """
    nx, ny, dx, dy = grid.nx, grid.ny, grid.dx, grid.dy
    if np.any(k_field <= 0) or np.any(mu_field <= 0):
        raise ValueError("permeability and viscosity must be positive everywhere")
    if bc.head_left is None and bc.head_right is None:
        raise SolverError("all-no-flow problem is singular: need a Dirichlet head")

    lam = k_field / mu_field
    if mobility_scale is not None:
        lam = lam * mobility_scale

    n = nx * ny
    idx = np.arange(n).reshape(ny, nx)
    yc = grid.yc

    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    diag = np.zeros(n)

    def add_face(o, nb, t, grav):
        # outflow o->nb: F = -t * (p_nb - p_o + grav); sum of outflows = Q_o
        rows.append(o)
        cols.append(nb)
        vals.append(-t)
        np.add.at(diag, o, t)
        np.add.at(rhs, o, t * grav)

    # interior x-faces
    t_x = _harmonic(lam[:, :-1], lam[:, 1:]) * dy / dx
    o, nb = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    tx = t_x.ravel()
    zero = np.zeros_like(tx)
    add_face(o, nb, tx, zero)
    add_face(nb, o, tx, zero)

    # interior y-faces: gravity term rho*g*(z_nb - z_o)
    t_y = _harmonic(lam[:-1, :], lam[1:, :]) * dx / dy
    o, nb = idx[:-1, :].ravel(), idx[1:, :].ravel()
    ty = t_y.ravel()
    add_face(o, nb, ty, np.full_like(ty, rho * g * dy))
    add_face(nb, o, ty, np.full_like(ty, -rho * g * dy))

    # lateral Dirichlet boundaries (boundary face at the cell-center elevation)
    for side, head in (("left", bc.head_left), ("right", bc.head_right)):
        if head is None:
            continue
        cells = idx[:, 0] if side == "left" else idx[:, -1]
        lam_b = lam[:, 0] if side == "left" else lam[:, -1]
        t_b = lam_b * dy / (dx / 2.0)
        p_b = rho * g * (head - yc)
        np.add.at(diag, cells, t_b)
        np.add.at(rhs, cells, t_b * p_b)

    for (i, j), rate in bc.well_sources.items():
        rhs[idx[j, i]] += rate

    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    a = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    p = spla.spsolve(a, rhs)
    scale = max(np.abs(rhs).max(), np.abs(a @ p).max(), 1e-300)
    residual = np.abs(a @ p - rhs).max() / scale
    if not np.isfinite(p).all() or residual > rtol:
        raise SolverError(f"pressure solve residual {residual:.3e} exceeds {rtol:.1e}")

    pm = p.reshape(ny, nx)
    qx = np.zeros((ny, nx + 1))
    qy = np.zeros((ny + 1, nx))
    lam_fx = _harmonic(lam[:, :-1], lam[:, 1:])
    qx[:, 1:-1] = -lam_fx * (pm[:, 1:] - pm[:, :-1]) / dx
    lam_fy = _harmonic(lam[:-1, :], lam[1:, :])
    qy[1:-1, :] = -lam_fy * ((pm[1:, :] - pm[:-1, :]) / dy + rho * g)
    if bc.head_left is not None:
        p_b = rho * g * (bc.head_left - yc)
        qx[:, 0] = -lam[:, 0] * (pm[:, 0] - p_b) / (dx / 2.0)
    if bc.head_right is not None:
        p_b = rho * g * (bc.head_right - yc)
        qx[:, -1] = -lam[:, -1] * (p_b - pm[:, -1]) / (dx / 2.0)

    return FlowField(pressure=pm, qx=qx, qy=qy)


def hydrostatic_state(grid, water_table_head: float, rho: float = 1000.0, g: float = 9.81) -> FlowField:
    """Fully saturated hydrostatic state: p = rho g (h - y), zero fluxes."""
    _, yv = grid.cell_centers()
    return FlowField(
        pressure=rho * g * (water_table_head - yv),
        qx=np.zeros((grid.ny, grid.nx + 1)),
        qy=np.zeros((grid.ny + 1, grid.nx)),
    )


def mass_balance_error(flow: FlowField, grid, bc: FlowBC) -> float:
    """Relative closure of boundary + well fluxes against internal divergence."""
    div = flow.divergence(grid.dx, grid.dy)
    src = np.zeros_like(div)
    for (i, j), rate in bc.well_sources.items():
        src[j, i] += rate
    influx = np.abs(flow.qx[:, 0]).sum() * grid.dy + np.abs(flow.qx[:, -1]).sum() * grid.dy
    influx += sum(abs(r) for r in bc.well_sources.values())
    if influx == 0:
        return float(np.abs(div - src).max())
    return float(np.abs(div - src).max() / influx)
