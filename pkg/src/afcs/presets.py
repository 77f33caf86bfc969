"""Named experiment setups for the published curves and tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Tuple

from .gaussian import saturation_factor
from .model import SystemParams

# over-modulation probability that puts the saturation factor at exactly 4
MU_ALPHA4 = math.erfc(4.0 / math.sqrt(2.0))

FIG4_SIGMA_XI_SQ = (0.03, 0.01, 0.003, 0.001)


def _set(key):
    def configure(base: SystemParams, value) -> SystemParams:
        return replace(base, **{key: value})
    return configure


def threshold_config(base: SystemParams, n_star) -> SystemParams:
    """Threshold-mode system with ``n_star`` cycles per sample.

    Channel band is widened to ``F0 = n_star * F`` and the input noise is set
    so that the MSE floor is reached after exactly ``n_star`` cycles.
    """
    n_star = int(n_star)
    alpha = saturation_factor(base.mu)
    A = base.A0 * base.gamma / base.r
    F0 = n_star * base.F
    Q_sq = (A / alpha) ** 2 / (base.N_xi * F0)
    sigma_v_sq = base.sigma0_sq * (1.0 + Q_sq) ** (-n_star)
    return replace(base, F0=F0, n_cycles=n_star, sigma_v_sq=sigma_v_sq, sigma_xi_sq=None)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    base: SystemParams
    sweep_key: str
    sweep_values: Tuple
    mode: str = "optimal"
    outputs: Tuple[str, ...] = ("mse",)
    configure: Callable = field(default=None, compare=False, repr=False)
    extra: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.sweep_values:
            raise ValueError("sweep must have at least one value")
        for v in self.sweep_values:
            if not math.isfinite(v):
                raise ValueError("sweep values must be finite")
        if self.configure is None:
            object.__setattr__(self, "configure", _set(self.sweep_key))

    def configurations(self):
        return [(v, self.configure(self.base, v)) for v in self.sweep_values]


def fig4_base(n_cycles: int) -> SystemParams:
    s0 = 1.25 ** 2
    return SystemParams(
        x0=0.0, sigma0_sq=s0, sigma_v_sq=1e-8 * s0, A0=1.25, gamma=1.0, r=1.0,
        N_xi=1.0, F0=1.0, mu=MU_ALPHA4, n_cycles=n_cycles, sigma_xi_sq=FIG4_SIGMA_XI_SQ[1],
    )


def fig5_base() -> SystemParams:
    return SystemParams(
        x0=0.0, sigma0_sq=62.5e-3, sigma_v_sq=0.0, A0=5e-3, gamma=1.0, r=1.0,
        N_xi=1e-10, F0=2500.0, F=2500.0, mu=MU_ALPHA4,
    )


def preset_catalog() -> Dict[str, ExperimentPreset]:
    presets = [
        ExperimentPreset(
            "fig4a", "MSE vs cycles, fixed-depth link without feedback",
            fig4_base(100), "sigma_xi_sq", FIG4_SIGMA_XI_SQ, mode="fixed-depth",
        ),
        ExperimentPreset(
            "fig4b", "MSE vs cycles, optimal adaptive feedback link",
            fig4_base(30), "sigma_xi_sq", FIG4_SIGMA_XI_SQ,
        ),
        ExperimentPreset(
            "fig3", "output bit-rate vs cycles",
            fig4_base(30), "sigma_xi_sq", FIG4_SIGMA_XI_SQ, outputs=("mse", "rate"),
        ),
        ExperimentPreset(
            "fig5", "threshold-mode efficiency points",
            fig5_base(), "n_star", tuple(range(2, 11)), outputs=("mse", "efficiency"),
            configure=threshold_config,
        ),
        ExperimentPreset(
            "table1", "bit-rate gain vs threshold cycle count",
            fig5_base(), "n_star", (1, 2, 3, 4, 5), outputs=("rho",),
            configure=threshold_config, extra={"reference_rho": (1.0, 2.6, 4.4, 6.4, 8.6)},
        ),
        ExperimentPreset(
            "appendixA", "recovery after a forced over-modulation",
            fig4_base(20), "sigma_xi_sq", (0.001,), outputs=("mse", "overmod"),
            extra={"k_force": (1, 2, 3, 15, 18)},
        ),
    ]
    return {p.name: p for p in presets}
