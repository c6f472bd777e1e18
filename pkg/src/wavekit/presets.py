"""Named parameter points: the explicit kernels and the sum-of-two-squares constructions."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .kernel import sigma_constant
from .trivial import TrivialParameters


@dataclass(frozen=True)
class Preset:
    name: str
    params: TrivialParameters
    modes: tuple
    notes: str

    @property
    def kappa(self) -> float:
        return self.params.kappa


def _ek1() -> Preset:
    return Preset("ek1", TrivialParameters(1.0, -1.0, 0.5 * math.pi, 1.0), (1,),
                  "one-dimensional explicit kernel, phi_1 = cos(x) s")


def _ek2() -> Preset:
    k = sigma_constant() / math.sqrt(3.0)
    return Preset("ek2", TrivialParameters(1.0 / (2.0 * k), -4.0 * k * k, 0.5 * math.pi, k), (1, 2),
                  "two-dimensional explicit kernel with n2 = 2 n1, kappa = sigma/sqrt(3)")


def _ek3() -> Preset:
    k = sigma_constant() / math.sqrt(5.0)
    return Preset("ek3", TrivialParameters(1.0 / (3.0 * k), -9.0 * k * k, 0.5 * math.pi, k), (2, 3),
                  "two-dimensional explicit kernel with coprime modes, kappa = sigma/sqrt(5)")


def _from_H(name: str, H: int, note: str):
    def build() -> Preset:
        from .diophantine import construct_kernel_from_H
        ck = construct_kernel_from_H(H)
        return Preset(name, ck.params, tuple(ck.target_modes), note)
    return build


_BUILDERS = {
    "ek1": _ek1,
    "ek2": _ek2,
    "ek3": _ek3,
    "h325": _from_H("h325", 325, "H = 325 = 5^2 * 13, three-dimensional kernel"),
    "h1105": _from_H("h1105", 1105, "H = 1105 = 5 * 13 * 17, four-dimensional kernel"),
    "h3125": _from_H("h3125", 3125, "H = 5^5, three-dimensional kernel from N = 3, p = 5"),
}

PRESET_NAMES = tuple(_BUILDERS)


def load_preset(name: str) -> Preset:
    """Build a preset; sigma is solved for at load time."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
