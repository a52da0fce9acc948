"""Experiment configuration: the pydantic schema, the built-in presets and the YAML loader."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from app.errors import ConfigError
from app.solvers.algebraic import ALGEBRAIC_PRECONDITIONERS
from app.solvers.precond import BIOT_PRECONDITIONERS, DARCY_PRECONDITIONERS
from app.trace.logger import logger
from app.utils import ALGEBRAIC_MAX_SIZE_EXPONENT, BIOT_MAX_H_EXPONENT, BOUNDARY_TAGS, DARCY_MAX_H_EXPONENT

BoundaryTag = Literal["left", "right", "top", "bottom"]

DARCY_K_VALUES = [1.0, 1e-2, 1e-4, 1e-6, 1e-8]
BIOT_K_VALUES = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8]

_VALID_PRECONDITIONERS = {
    "darcy": DARCY_PRECONDITIONERS,
    "biot": BIOT_PRECONDITIONERS,
    "algebraic": ALGEBRAIC_PRECONDITIONERS,
}
_SIZE_CAPS = {
    "darcy": DARCY_MAX_H_EXPONENT,
    "biot": BIOT_MAX_H_EXPONENT,
    "algebraic": ALGEBRAIC_MAX_SIZE_EXPONENT,
}


class ExperimentConfig(BaseModel):
    experiment: str = Field(default="custom", description="Preset id, or 'custom' for a hand-written sweep.")
    problem: Literal["darcy", "biot", "algebraic"] = Field(
        description="Saddle system to assemble; 'algebraic' draws random [[alpha A, B^T], [B, 0]] systems."
    )
    metric: Literal["cond", "infsup"] = Field(
        default="cond", description="Condition number of B A, or the discrete inf-sup constant."
    )
    conductivity: Literal["constant", "jump", "tensor"] = Field(
        default="constant", description="Conductivity model; Biot always uses a constant K."
    )
    k_values: list[float] = Field(
        description="K (constant), K0 (jump and tensor) or alpha (algebraic) values: one table row each."
    )
    thetas: list[float] = Field(default=[0.0], description="Tensor rotation angles in radians.")
    h_exponents: list[int] = Field(
        description="Mesh sizes h = 2^-e, or block sizes n = 2^e for algebraic systems: one table column each."
    )
    preconditioners: list[str] = Field(
        default=[], description="Preconditioner ids (B1, B2; plus B1K, B2K for Biot)."
    )
    pressure_mode: Literal["dg", "exact_schur", "both"] = Field(
        default="both", description="Pressure operator of the Darcy B2 block; 'both' renders 'x(y)'."
    )
    flux_bc: Optional[list[BoundaryTag]] = Field(
        default=None,
        description="Sides with an essential flux condition; the others carry the natural pressure condition.",
    )
    seed: int = Field(default=0, ge=0, description="Random draw of A and B for algebraic systems.")
    minres: bool = Field(default=False, description="Also report MINRES iteration counts with rhs A 1.")
    minres_rtol: float = Field(default=1e-8, gt=0.0, description="Relative MINRES tolerance.")
    minres_maxit: int = Field(default=1500, ge=1, description="MINRES iteration cap.")
    output_format: Literal["md", "csv"] = Field(default="md", description="Table format.")
    jobs: int = Field(default=1, ge=1, description="Grid points evaluated concurrently.")
    allow_large: bool = Field(default=False, description="Lift the desk-scale cap on h.")

    @field_validator("k_values")
    @classmethod
    def _check_k(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("at least one K value is needed")
        bad = [k for k in values if not 0.0 < k <= 1.0]
        if bad:
            raise ValueError(f"K values must lie in (0, 1], got {bad}")
        return values

    @field_validator("h_exponents")
    @classmethod
    def _check_h(cls, values: list[int]) -> list[int]:
        if not values:
            raise ValueError("at least one h exponent is needed")
        if min(values) < 1:
            raise ValueError(f"h exponents must be >= 1, got {values}")
        return sorted(set(values))

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        valid = _VALID_PRECONDITIONERS[self.problem]
        unknown = [p for p in self.preconditioners if p not in valid]
        if unknown:
            raise ValueError(f"unknown {self.problem} preconditioners {unknown}; choose from {valid}")
        if self.metric == "cond" and not self.preconditioners:
            raise ValueError("a condition number sweep needs at least one preconditioner")
        if self.conductivity != "tensor" and self.thetas != [0.0]:
            raise ValueError("thetas only apply to the tensor conductivity")
        if self.problem in ("biot", "algebraic"):
            if self.conductivity != "constant":
                raise ValueError(f"the {self.problem} system uses a constant scalar parameter")
            if self.flux_bc is not None:
                raise ValueError(f"the {self.problem} boundary layout is fixed")
        if self.metric == "infsup" and (self.problem != "darcy" or self.conductivity != "constant"):
            raise ValueError("inf-sup sweeps are defined for Darcy with a constant conductivity")

        cap = _SIZE_CAPS[self.problem]
        if max(self.h_exponents) > cap and not self.allow_large:
            raise ValueError(
                f"h = 2^-{max(self.h_exponents)} exceeds the dense-spectrum cap 2^-{cap} for {self.problem}; "
                "pass --allow-large to run it anyway"
            )
        return self

    @property
    def essential_flux_tags(self) -> tuple[str, ...]:
        """Flux-essential sides: all four for constant K, left/right for jump and tensor."""
        if self.flux_bc is not None:
            return tuple(sorted(set(self.flux_bc)))
        if self.conductivity == "constant":
            return BOUNDARY_TAGS
        return ("left", "right")


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESETS: dict[str, dict] = {
    "table1-left": {
        "problem": "darcy",
        "conductivity": "constant",
        "k_values": DARCY_K_VALUES,
        "h_exponents": [2, 3, 4, 5],
        "preconditioners": ["B1", "B2"],
    },
    "table1-right": {
        "problem": "darcy",
        "conductivity": "jump",
        "k_values": DARCY_K_VALUES,
        "h_exponents": [2, 3, 4, 5],
        "preconditioners": ["B1", "B2"],
    },
    "table2": {
        "problem": "darcy",
        "conductivity": "tensor",
        "k_values": DARCY_K_VALUES,
        "thetas": [0.0, math.pi / 4],
        "h_exponents": [3, 4, 5],
        "preconditioners": ["B1", "B2"],
    },
    "table3": {
        "problem": "biot",
        "k_values": BIOT_K_VALUES,
        "h_exponents": [2, 3, 4],
        "preconditioners": ["B1", "B2", "B1K", "B2K"],
    },
    "infsup": {
        "problem": "darcy",
        "metric": "infsup",
        "k_values": DARCY_K_VALUES,
        "h_exponents": [2, 3, 4],
    },
    "algebraic": {
        "problem": "algebraic",
        "k_values": DARCY_K_VALUES,
        "h_exponents": [4, 5, 6],
        "preconditioners": list(ALGEBRAIC_PRECONDITIONERS),
    },
}

PRESET_DESCRIPTIONS: dict[str, str] = {
    "table1-left": "Darcy, constant K: B1 and B2 (DG and exact Schur pressure)",
    "table1-right": "Darcy, K jumping from 1 to K0 across x = 1/2: B1 and B2",
    "table2": "Darcy, rotated tensor diag(1, K0) at theta 0 and pi/4: B1 and B2",
    "table3": "Simplified Biot: B1, B2 and their K-scaled variants",
    "infsup": "Discrete inf-sup constant in the K-weighted flux and pressure norms",
    "algebraic": "Random saddle systems [[alpha A, B^T], [B, 0]]: Schur and augmented B1, B2",
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return ExperimentConfig.model_validate({"experiment": name, **PRESETS[name]})


def _raw_config(source: str | Path) -> dict:
    if str(source) in PRESETS:
        return {"experiment": str(source), **PRESETS[str(source)]}

    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"{source!r} is neither a preset ({', '.join(PRESETS)}) nor a config file")
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a key/value mapping")
    logger.info("Loaded config %s (experiment=%s)", path, data.get("experiment", "custom"))
    return {**PRESETS.get(data.get("experiment", "custom"), {}), **data}


def load_config(
    source: str | Path,
    overrides: Optional[dict] = None,
    max_h_exponent: Optional[int] = None,
) -> ExperimentConfig:
    """Resolve a preset id or a YAML file, apply command-line overrides, then validate.

    A YAML file naming a preset in ``experiment`` starts from that preset and
    overrides the keys it sets; otherwise every required field must be present.
    ``None`` overrides are ignored; ``max_h_exponent`` drops the finer mesh columns.
    """
    data = _raw_config(source)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if max_h_exponent is not None:
        kept = [e for e in data.get("h_exponents", []) if e <= max_h_exponent]
        if not kept:
            raise ConfigError(f"max h exponent {max_h_exponent} leaves no mesh of {data.get('h_exponents')}")
        data["h_exponents"] = kept
    return ExperimentConfig.model_validate(data)
