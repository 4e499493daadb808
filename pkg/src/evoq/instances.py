"""Bundled desk-scale instances: heat, wave and Maxwell analogues.

These mirror the three builder stencils with fixed coefficients and are used
by the verification suites, the acceptance runner and the shipped example
configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .material import MaterialLaw
from .signals import TimeGrid
from .spatial import (
    SpatialOperator,
    build_heat_block,
    build_maxwell_block,
    build_wave_block,
)

__all__ = ["Instance", "make_heat_instance", "make_wave_instance",
           "make_maxwell_instance", "bundled_instances"]


@dataclass(frozen=True)
class Instance:
    name: str
    nu: float
    grid: TimeGrid
    law: MaterialLaw
    A: SpatialOperator
    pad_fraction: float = 0.25

    @property
    def m(self) -> int:
        return self.A.m


def make_heat_instance(k: int = 4, n: int = 512, t_half: float = 8.0,
                       nu: float = 1.0, a: float = 2.0,
                       pad_fraction: float = 0.25) -> Instance:
    A, law = build_heat_block(k, a, nu=nu)
    return Instance("heat", nu, TimeGrid(-t_half, t_half, n), law, A, pad_fraction)


def make_wave_instance(k: int = 4, n: int = 512, t_half: float = 8.0,
                       nu: float = 1.0, t_elast: float = 2.0,
                       pad_fraction: float = 0.25) -> Instance:
    A, law = build_wave_block(k, t_elast, nu=nu)
    return Instance("wave", nu, TimeGrid(-t_half, t_half, n), law, A, pad_fraction)


def make_maxwell_instance(k: int = 4, n: int = 512, t_half: float = 8.0,
                          nu: float = 1.0, eps: float = 1.0, mu: float = 1.0,
                          sigma: float = 0.5,
                          pad_fraction: float = 0.25) -> Instance:
    A, law = build_maxwell_block(k, eps, mu, sigma, nu=nu)
    return Instance("maxwell", nu, TimeGrid(-t_half, t_half, n), law, A, pad_fraction)


def bundled_instances(n: int = 512, **kwargs) -> list:
    return [
        make_heat_instance(n=n, **kwargs),
        make_wave_instance(n=n, **kwargs),
        make_maxwell_instance(n=n, **kwargs),
    ]
