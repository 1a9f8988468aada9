"""Scaling ``u0 -> lambda u0(lambda x)`` on the periodic box.

The rescaled field lives on the box of side ``L / lambda`` with the same
samples multiplied by ``lambda``, so no resampling error enters the test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from nsap.monitor.norms import kappa, lp_norm
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import make_grid

logger = logging.getLogger(__name__)

INVARIANCE_TOL = 1e-10


def require_power_of_two(lam: float) -> int:
    """Return ``k`` with ``lam = 2**k``; ``k >= 0``."""
    if not lam >= 1 or not float(lam).is_integer():
        raise ValueError(f"scaling factor must be a power of 2 (>= 1), got {lam!r}")
    k = int(lam).bit_length() - 1
    if 2**k != int(lam):
        raise ValueError(f"scaling factor must be a power of 2 (>= 1), got {lam!r}")
    return k


def rescale_field(u: VectorField, lam: float) -> VectorField:
    require_power_of_two(lam)
    grid = make_grid(u.grid.dim, u.grid.n, u.grid.box_length / lam)
    return VectorField.from_values(grid, np.asarray(u.values) * lam, solenoidal=u.solenoidal)


def _relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


@dataclass(frozen=True)
class ScalingReport:
    lam: float
    p: float
    dim: int
    kappa_delta: float
    critical_delta: float
    l2_delta: float
    tolerance: float = INVARIANCE_TOL

    @property
    def invariant(self) -> bool:
        return max(self.kappa_delta, self.critical_delta, self.l2_delta) <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "p": self.p,
            "N": self.dim,
            "kappa_delta": self.kappa_delta,
            "lN_delta": self.critical_delta,
            "l2_scaling_delta": self.l2_delta,
            "tolerance": self.tolerance,
            "invariant": self.invariant,
        }


def scaling_test(u0: VectorField, lam: float, p: float, tolerance: float = INVARIANCE_TOL) -> ScalingReport:
    """Relative changes of ``kappa_p`` and ``||.||_N``; ``||.||_2`` is compared to ``lambda^(1-N/2)``."""
    dim = u0.grid.dim
    scaled = rescale_field(u0, lam)
    before, after = kappa(u0, p), kappa(scaled, p)
    l2_expected = lp_norm(u0, 2) * lam ** (1.0 - dim / 2)
    report = ScalingReport(
        lam=float(lam),
        p=float(p),
        dim=dim,
        kappa_delta=_relative(before.value, after.value),
        critical_delta=_relative(lp_norm(u0, dim), lp_norm(scaled, dim)),
        l2_delta=_relative(lp_norm(scaled, 2), l2_expected),
        tolerance=tolerance,
    )
    logger.info("Scaling test lambda=%g p=%g: %s", lam, p, report.to_dict())
    return report


def scaled_config(config: SolverConfig, lam: float) -> SolverConfig:
    """Time axis of the rescaled problem: every time divided by ``lambda^2``."""
    factor = lam**2
    update: dict[str, Any] = {
        "dt": config.dt / factor,
        "t_end": config.t_end / factor,
        "snapshot_interval": config.snapshot_interval / factor,
    }
    if config.snapshot_times is not None:
        update["snapshot_times"] = [t / factor for t in config.snapshot_times]
    return config.model_copy(update=update)


def trajectory_scaling_gap(u0: VectorField, config: SolverConfig, lam: float) -> float:
    """``max_x |u_lam(x, t/lam^2) - lam u(lam x, t)| / max |lam u|`` at the final time."""
    base = run(u0, config, keep_snapshots=False, scenario_id="scaling/base")
    scaled = run(rescale_field(u0, lam), scaled_config(config, lam), keep_snapshots=False, scenario_id="scaling/lam")
    expected = lam * np.asarray(base.final.u.values)
    scale = float(np.max(np.abs(expected)))
    gap = float(np.max(np.abs(np.asarray(scaled.final.u.values) - expected)))
    return 0.0 if scale == 0.0 else gap / scale
