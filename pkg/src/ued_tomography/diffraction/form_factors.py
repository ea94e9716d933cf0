"""Tabulated atomic form factors for X-ray and electron probes.

X-ray factors are four-Gaussian fits in q = sinθ/λ = s/(4π).  Electron
factors follow from the Mott–Bethe relation f_e(s) = 2(Z − f_X(s))/(a₀ s²),
in Å with s = 4π sinθ/λ in Å⁻¹.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml
from pydantic import BaseModel, field_validator, model_validator
from scipy import constants

from ued_tomography.config.settings import get_settings
from ued_tomography.errors import SingularMomentumTransferError, ValidationError

BOHR_RADIUS_ANGSTROM = constants.physical_constants["Bohr radius"][0] * 1e10
_S_EPSILON = 1e-12


class FormFactorEntry(BaseModel):
    """One element of the coefficient table."""

    atomic_number: int
    a: list[float]
    b: list[float]
    c: float

    @field_validator("a", "b")
    @classmethod
    def four_terms(cls, values: list[float]) -> list[float]:
        if len(values) != 4:
            raise ValueError("expected four Gaussian coefficients")
        return values

    @model_validator(mode="after")
    def positive_at_origin(self) -> "FormFactorEntry":
        if sum(self.a) + self.c <= 0:
            raise ValueError("form factor must be positive at s=0")
        return self


@dataclass(frozen=True)
class AtomicFormFactor:
    element: str
    atomic_number: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    c: float

    def xray(self, s: np.ndarray | float) -> np.ndarray:
        """f_X(s) in electrons for |s| in Å⁻¹."""
        q2 = (np.asarray(s, dtype=float) / (4.0 * np.pi)) ** 2
        return sum(ai * np.exp(-bi * q2) for ai, bi in zip(self.a, self.b)) + self.c

    def electron(self, s: np.ndarray | float) -> np.ndarray:
        """f_e(s) in Å.

        Raises:
            SingularMomentumTransferError: If any |s| is zero.
        """
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) < _S_EPSILON):
            raise SingularMomentumTransferError("singular s=0: electron form factor diverges")
        return 2.0 * (self.atomic_number - self.xray(s)) / (BOHR_RADIUS_ANGSTROM * s * s)

    def amplitude(self, s: np.ndarray | float, probe: str) -> np.ndarray:
        if probe == "xray":
            return self.xray(s)
        if probe == "electron":
            return self.electron(s)
        raise ValidationError(f"unknown probe {probe!r}")


@lru_cache
def _load_table(path: Path) -> dict[str, AtomicFormFactor]:
    try:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ValidationError(f"cannot read form factor table {path}: {e}") from e

    table = {}
    for element, data in raw.items():
        try:
            entry = FormFactorEntry(**data)
        except ValueError as e:
            raise ValidationError(f"invalid form factor entry {element}: {e}") from e
        table[element] = AtomicFormFactor(
            element=element,
            atomic_number=entry.atomic_number,
            a=tuple(entry.a),
            b=tuple(entry.b),
            c=entry.c,
        )
    return table


def load_form_factors(path: Path | None = None) -> dict[str, AtomicFormFactor]:
    """Coefficient table keyed by element symbol; defaults to the packaged file."""
    return _load_table(Path(path) if path is not None else get_settings().form_factor_table)


def form_factor(element: str, path: Path | None = None) -> AtomicFormFactor:
    table = load_form_factors(path)
    if element not in table:
        raise ValidationError(f"no form factor for element {element!r}; known: {sorted(table)}")
    return table[element]
