"""Stage runners: each advances the shared state bundle over one stage of
the remediation timeline and returns a checkpoint plus diagnostics.

Stage 1  NAPL release and redistribution (two-phase IMPES)
Stage 2  source dissolution and plume migration (single-phase transport)
Stage 3  CMC-nZVI injection with filtration and clogging feedback
Stage 4  contaminant degradation on the emplaced iron

The stages communicate only through :class:`StageCheckpoint`, so any stage
can restart from a file produced by the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nzvi as nz
from .checkpoint import StageCheckpoint
from .flow import FlowBC, solve_pressure
from .reaction import KineticParams, reactive_step
from .scenario import Scenario
from .solute import (
    DissolutionParams,
    TransportKernel,
    TransportParams,
    dissolution_substep,
    probe,
)
from .twophase import (
    ImpesStepper,
    Numerics,
    TwoPhaseBC,
    hydrostatic_two_phase,
    rel_perm,
    source_zone_stats,
)

DAY = 86400.0


@dataclass
class StageResult:
    stage: int
    checkpoint: StageCheckpoint
    diagnostics: dict
    audit: dict                      # name -> relative closure error
    snapshots: list = field(default_factory=list)   # (t_stage, {name: array})
    series: list = field(default_factory=list)      # rows of time series


def _make_checkpoint(scn: Scenario, stage: int, clock: float, **fields) -> StageCheckpoint:
    g = scn.grid
    return StageCheckpoint(
        stage=stage,
        clock=clock,
        nx=g.nx,
        ny=g.ny,
        seed=scn.seed,
        config_hash=scn.config.config_hash,
        fields=fields,
    )


def _chunks(duration: float, marks) -> list[float]:
    """Sorted unique stop times in (0, duration]."""
    times = {float(t) for t in marks if 0.0 < t <= duration}
    times.add(duration)
    return sorted(times)


def _water_mobility(sw, material):
    """Water relative permeability with trapped NAPL (mobility scale)."""
    se = np.clip((sw - material.swr) / (1.0 - material.swr - material.snr), 0.0, 1.0)
    krw, _ = rel_perm(se, material.bc_lambda)
    return np.maximum(krw, 1e-6)


# ---------------------------------------------------------------------------
# Stage 1
# ---------------------------------------------------------------------------

def run_stage1(scn: Scenario, duration: float | None = None) -> StageResult:
    cfg, g, m = scn.config, scn.grid, scn.material
    duration = cfg.stage_durations[0] if duration is None else duration
    numerics = Numerics(se_clamp=cfg.se_clamp, cfl=cfg.two_phase_cfl)
    # equal lateral heads: ambient groundwater flow is off during the release
    head0 = g.height
    state = hydrostatic_two_phase(g, scn.fluids, head0)

    bc_on = TwoPhaseBC(head0, head0, napl_source=scn.napl_source_field())
    bc_off = TwoPhaseBC(head0, head0)
    stepper_on = ImpesStepper(g, m, scn.fluids, bc_on, numerics)
    stepper_off = ImpesStepper(g, m, scn.fluids, bc_off, numerics)

    marks = set(cfg.snapshots[0]) | {cfg.infil_duration, duration - 10.0 * DAY}
    snapshots, series = [], []
    sn_near_end = state.sn
    t = 0.0
    for t_stop in _chunks(duration, marks):
        stepper = stepper_on if t_stop <= cfg.infil_duration else stepper_off
        while state.clock < t_stop - 1e-6:
            stepper.substep(state, t_stop - state.clock)
        t = t_stop
        stats_t = source_zone_stats(state.sn, m, g, scn.fluids.rho_n, cfg.pool_threshold)
        series.append([t, stats_t.total_mass, stats_t.pool_fraction,
                       stats_t.ganglia_fraction, stats_t.upper_fraction,
                       stats_t.lower_fraction])
        if t in set(cfg.snapshots[0]):
            snapshots.append((t, {"sn": state.sn.copy(), "sw": state.sw.copy()}))
        if abs(t - (duration - 10.0 * DAY)) < 1.0:
            sn_near_end = state.sn.copy()

    injected = stepper_on.injected_mass
    in_domain = stepper_off.napl_mass(state)
    audit = {"napl": abs(in_domain - injected) / max(injected, 1e-300)}
    stats = source_zone_stats(state.sn, m, g, scn.fluids.rho_n, cfg.pool_threshold)
    ckpt = _make_checkpoint(
        scn, 1, t,
        sw=state.sw, sn=state.sn, pw=state.pw,
        theta_m=m.porosity.copy(), k=m.k.copy(),
    )
    diagnostics = {
        "injected_mass": injected,
        "napl_mass": in_domain,
        "source_zone": stats,
        "near_static_max_dsn": float(np.abs(state.sn - sn_near_end).max()),
        "series_header": ["t", "napl_mass", "pool_fraction", "ganglia_fraction",
                          "upper_fraction", "lower_fraction"],
    }
    return StageResult(1, ckpt, diagnostics, audit, snapshots, series)


# ---------------------------------------------------------------------------
# Stage 2
# ---------------------------------------------------------------------------

def run_stage2(scn: Scenario, ckpt: StageCheckpoint, duration: float | None = None,
               dt_outer: float = 1.0 * DAY) -> StageResult:
    cfg, g, m = scn.config, scn.grid, scn.material
    duration = cfg.stage_durations[1] if duration is None else duration
    f = ckpt.fields
    sn = f["sn"].copy()
    sw = f["sw"].copy()
    c = f["c_tce"].copy()
    theta = f["theta_m"].copy()
    k = f["k"].copy()

    flow = solve_pressure(
        g, k, np.full_like(k, scn.fluids.mu_w),
        FlowBC(cfg.head_left, cfg.head_right),
        rho=scn.fluids.rho_w, g=scn.fluids.g,
        mobility_scale=_water_mobility(sw, m),
    )
    tp = TransportParams(cfg.diffusion, cfg.dispersivity)
    dp = DissolutionParams(cfg.mass_transfer, cfg.solubility)
    kernel = TransportKernel(g, theta, flow, tp, cfl=cfg.transport_cfl)
    pv = theta * g.cell_volume

    napl0 = float((pv * sn).sum()) * scn.fluids.rho_n
    aq0 = float((pv * c).sum())
    mon = scn.monitoring_cells()
    marks = set(cfg.snapshots[1])
    snapshots, series = [], []
    t = 0.0
    while t < duration - 1e-6:
        t_stop = min(duration, min((s for s in marks if s > t + 1e-6), default=duration))
        while t < t_stop - 1e-6:
            dt = min(dt_outer, t_stop - t)
            c = kernel.step(c, dt)
            c, sn = dissolution_substep(c, sn, scn.fluids.rho_n, dp, dt)
            t += dt
            napl_mass = float((pv * sn).sum()) * scn.fluids.rho_n
            series.append([t, napl_mass, napl_mass / max(napl0, 1e-300)]
                          + [probe(c, cell) for cell in mon.values()])
        t = t_stop
        if t in marks:
            snapshots.append((t, {"c_tce": c.copy(), "sn": sn.copy()}))

    napl_end = float((pv * sn).sum()) * scn.fluids.rho_n
    aq_end = float((pv * c).sum())
    dissolved = napl0 - napl_end
    closure = abs((aq0 + dissolved) - (aq_end + kernel.boundary_export))
    audit = {"tce": closure / max(napl0 + aq0, 1e-300)}
    ckpt_out = _make_checkpoint(
        scn, 2, ckpt.clock + t,
        sw=sw, sn=sn, pw=flow.pressure, c_tce=c, theta_m=theta, k=k,
        s_bulk=f["s_bulk"].copy(), c_cmc=f["c_cmc"].copy(), c_nzvi=f["c_nzvi"].copy(),
    )
    diagnostics = {
        "napl_initial": napl0,
        "napl_final": napl_end,
        "undissolved_fraction": napl_end / max(napl0, 1e-300),
        "flow": flow,
        "series_header": ["t", "napl_mass", "napl_fraction", *mon],
    }
    return StageResult(2, ckpt_out, diagnostics, audit, snapshots, series)


# ---------------------------------------------------------------------------
# Stage 3
# ---------------------------------------------------------------------------

def run_stage3(scn: Scenario, ckpt: StageCheckpoint, duration: float | None = None,
               dt_outer: float = 300.0) -> StageResult:
    cfg, g, m = scn.config, scn.grid, scn.material
    duration = cfg.stage_durations[2] if duration is None else duration
    f = ckpt.fields
    sn = f["sn"].copy()
    sw = f["sw"].copy()
    c_tce = f["c_tce"].copy()
    c_cmc = f["c_cmc"].copy()
    c_nzvi = f["c_nzvi"].copy()
    s_bulk = f["s_bulk"].copy()
    theta0 = m.porosity
    k0 = m.k
    a0_field = np.full_like(k0, cfg.a0)

    nzp = nz.NzviParams(
        particle_diameter=cfg.particle_diameter,
        particle_density=cfg.particle_density,
        attachment_efficiency=cfg.attachment_efficiency,
        hamaker=cfg.hamaker,
        temperature=cfg.temperature,
        fluid_density=scn.fluids.rho_w,
        g=scn.fluids.g,
    )
    clog = nz.CloggingParams(cfg.a0, cfg.zvi_specific_area, cfg.gamma)
    cmcp = nz.CmcParams(cfg.cmc_concentration, cfg.cmc_viscosity, scn.fluids.mu_w)
    tp = TransportParams(cfg.diffusion, cfg.dispersivity)
    dp = DissolutionParams(cfg.mass_transfer, cfg.solubility)

    # clean-bed collector diameter is frozen at the pre-injection state
    dc = nz.collector_diameter(k0, theta0)
    theta_m, k, _ = nz.clogging_update(s_bulk, k0, theta0, a0_field, clog, cfg.particle_density)

    sources = scn.injection_sources()
    conc_nzvi = {cell: cfg.nzvi_concentration for cell in sources}
    conc_cmc = {cell: cfg.cmc_concentration for cell in sources}
    q_total = sum(sources.values())
    mobility = _water_mobility(sw, m)
    well = scn.wells["injection"]
    screen = (well.x, g.height - well.depth)
    iw, jw = scn.well_cells["injection"][0]
    flux_reversed = False

    marks = set(cfg.snapshots[2])
    snapshots, series = [], []
    injected = {"nzvi": 0.0, "cmc": 0.0}
    exported = {"nzvi": 0.0, "cmc": 0.0}
    nzvi0 = float((theta_m * c_nzvi + s_bulk).sum()) * g.cell_volume
    cmc0 = float((theta_m * c_cmc).sum()) * g.cell_volume
    napl0 = float((theta_m * sn).sum()) * g.cell_volume * scn.fluids.rho_n
    tce0 = float((theta_m * c_tce).sum()) * g.cell_volume
    t = 0.0
    while t < duration - 1e-6:
        t_stop = min(duration, min((s for s in marks if s > t + 1e-6), default=duration))
        while t < t_stop - 1e-6:
            dt = min(dt_outer, t_stop - t)
            mu = nz.cmc_viscosity(c_cmc, cmcp)
            flow = solve_pressure(
                g, k, mu, FlowBC(cfg.head_left, cfg.head_right, well_sources=sources),
                rho=scn.fluids.rho_w, g=scn.fluids.g, mobility_scale=mobility,
            )
            # background flow is +x; injection pushes the upgradient faces back
            if flow.qx[jw, max(iw - 2, 0): iw + 1].min() < 0:
                flux_reversed = True
            kernel = TransportKernel(
                g, theta_m, flow, tp, cfl=cfg.transport_cfl, well_sources=sources
            )
            c_cmc = kernel.step(c_cmc, dt, conc_cmc)
            exported["cmc"] += kernel.boundary_export
            kernel.boundary_export = 0.0
            c_nzvi = kernel.step(c_nzvi, dt, conc_nzvi)
            exported["nzvi"] += kernel.boundary_export
            kernel.boundary_export = 0.0
            c_tce = kernel.step(c_tce, dt)
            injected["cmc"] += q_total * cfg.cmc_concentration * dt
            injected["nzvi"] += q_total * cfg.nzvi_concentration * dt

            c_tce, sn = dissolution_substep(c_tce, sn, scn.fluids.rho_n, dp, dt)
            katt = nz.attachment_rate(dc, theta_m, flow.velocity_magnitude(), mu, nzp)
            c_nzvi, s_bulk = nz.deposit_step(c_nzvi, s_bulk, katt, theta_m, dt)
            theta_m, k, _ = nz.clogging_update(
                s_bulk, k0, theta0, a0_field, clog, cfg.particle_density
            )
            t += dt
        t = t_stop
        roi = nz.radius_of_influence(s_bulk, g, screen, cfg.roi_threshold)
        series.append([t, roi, float(s_bulk.max()), float(1.0 - (k / k0).min())])
        if t in marks:
            snapshots.append(
                (t, {"c_nzvi": c_nzvi.copy(), "s_bulk": s_bulk.copy(),
                     "c_cmc": c_cmc.copy(), "k": k.copy()})
            )

    audit = {}
    for name, c_end, s_end, exp in (
        ("nzvi", c_nzvi, s_bulk, exported["nzvi"]),
        ("cmc", c_cmc, None, exported["cmc"]),
    ):
        m0 = nzvi0 if name == "nzvi" else cmc0
        m_end = float((theta_m * c_end).sum()) * g.cell_volume
        if s_end is not None:
            m_end += float(s_end.sum()) * g.cell_volume
        closure = abs(m0 + injected[name] - (m_end + exp))
        audit[name] = closure / max(injected[name], 1e-300)
    # TCE closure over the (short) injection window
    napl_end = float((theta_m * sn).sum()) * g.cell_volume * scn.fluids.rho_n
    tce_end = float((theta_m * c_tce).sum()) * g.cell_volume

    diagnostics = {
        "roi": nz.radius_of_influence(s_bulk, g, screen, cfg.roi_threshold),
        "roi_upper": nz.radius_of_influence(
            s_bulk, g, screen, cfg.roi_threshold, m.layer_mask(upper=True)
        ),
        "roi_lower": nz.radius_of_influence(
            s_bulk, g, screen, cfg.roi_threshold, m.layer_mask(upper=False)
        ),
        "flux_reversed": flux_reversed,
        "max_k_reduction": float(1.0 - (k / k0).min()),
        "max_theta_reduction": float(1.0 - (theta_m / theta0).min()),
        "retained_mass": float(s_bulk.sum()) * g.cell_volume,
        "injected_nzvi": injected["nzvi"],
        "tce_drift": abs((tce0 + (napl0 - napl_end)) - tce_end),
        "series_header": ["t", "roi", "max_s_bulk", "max_k_reduction"],
    }
    ckpt_out = _make_checkpoint(
        scn, 3, ckpt.clock + t,
        sw=sw, sn=sn, pw=flow.pressure, c_tce=c_tce, c_cmc=c_cmc,
        c_nzvi=c_nzvi, s_bulk=s_bulk, theta_m=theta_m, k=k,
        rho_m=s_bulk / theta_m,
    )
    return StageResult(3, ckpt_out, diagnostics, audit, snapshots, series)


# ---------------------------------------------------------------------------
# Stage 4
# ---------------------------------------------------------------------------

def run_stage4(scn: Scenario, ckpt: StageCheckpoint, duration: float | None = None,
               dt_outer: float = 1.0 * DAY, reactive: bool = True) -> StageResult:
    cfg, g, m = scn.config, scn.grid, scn.material
    duration = cfg.stage_durations[3] if duration is None else duration
    f = ckpt.fields
    sn = f["sn"].copy()
    sw = f["sw"].copy()
    c_tce = f["c_tce"].copy()
    c_cmc = f["c_cmc"].copy()
    theta_m = f["theta_m"].copy()
    k = f["k"].copy()
    rho_m = f["rho_m"].copy()

    kin = KineticParams(
        k_sa=cfg.k_sa if reactive else 0.0,
        specific_area=cfg.alpha_s,
        stoichiometry=cfg.stoichiometry,
    )
    cmcp = nz.CmcParams(cfg.cmc_concentration, cfg.cmc_viscosity, scn.fluids.mu_w)
    tp = TransportParams(cfg.diffusion, cfg.dispersivity)
    dp = DissolutionParams(cfg.mass_transfer, cfg.solubility)
    mobility = _water_mobility(sw, m)
    pv = theta_m * g.cell_volume

    iron0 = float((rho_m * pv).sum())
    napl0 = float((pv * sn).sum()) * scn.fluids.rho_n
    aq0 = float((pv * c_tce).sum())
    mon = scn.monitoring_cells()
    marks = set(cfg.snapshots[3])
    snapshots, series = [], []
    degraded = 0.0
    exported = 0.0
    t = 0.0
    while t < duration - 1e-6:
        t_stop = min(duration, min((s for s in marks if s > t + 1e-6), default=duration))
        while t < t_stop - 1e-6:
            dt = min(dt_outer, t_stop - t)
            mu = nz.cmc_viscosity(c_cmc, cmcp)
            flow = solve_pressure(
                g, k, mu, FlowBC(cfg.head_left, cfg.head_right),
                rho=scn.fluids.rho_w, g=scn.fluids.g, mobility_scale=mobility,
            )
            kernel = TransportKernel(g, theta_m, flow, tp, cfl=cfg.transport_cfl)
            c_tce = kernel.step(c_tce, dt)
            exported += kernel.boundary_export   # TCE-only; CMC export untracked
            kernel.boundary_export = 0.0
            c_cmc = kernel.step(c_cmc, dt)
            c_tce, sn = dissolution_substep(c_tce, sn, scn.fluids.rho_n, dp, dt)
            pre = float((pv * c_tce).sum())
            c_tce, rho_m = reactive_step(c_tce, rho_m, kin, dt)
            degraded += pre - float((pv * c_tce).sum())
            t += dt
            iron_frac = float((rho_m * pv).sum()) / max(iron0, 1e-300)
            series.append([t, iron_frac] + [probe(c_tce, cell) for cell in mon.values()])
        t = t_stop
        if t in marks:
            snapshots.append((t, {"c_tce": c_tce.copy(), "rho_m": rho_m.copy()}))

    napl_end = float((pv * sn).sum()) * scn.fluids.rho_n
    aq_end = float((pv * c_tce).sum())
    dissolved = napl0 - napl_end
    closure = abs((aq0 + dissolved) - (aq_end + degraded + exported))
    audit = {"tce": closure / max(aq0 + napl0, 1e-300)}
    s_bulk = rho_m * theta_m
    ckpt_out = _make_checkpoint(
        scn, 4, ckpt.clock + t,
        sw=sw, sn=sn, pw=flow.pressure, c_tce=c_tce, c_cmc=c_cmc,
        c_nzvi=f["c_nzvi"].copy(), s_bulk=s_bulk, rho_m=rho_m,
        theta_m=theta_m, k=k,
    )
    diagnostics = {
        "iron_initial": iron0,
        "iron_final": float((rho_m * pv).sum()),
        "degraded_mass": degraded,
        "series_header": ["t", "iron_fraction", *mon],
    }
    return StageResult(4, ckpt_out, diagnostics, audit, snapshots, series)


def run_transport_continuation(scn: Scenario, ckpt: StageCheckpoint,
                               duration: float | None = None,
                               dt_outer: float = 1.0 * DAY) -> StageResult:
    """Post-injection evolution with the reaction operator removed entirely:
    the no-remediation trajectory a zeroed rate constant must reproduce."""
    return run_stage4(scn, ckpt, duration, dt_outer, reactive=False)
