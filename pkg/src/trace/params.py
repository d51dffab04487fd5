"""
Parameters and presets for the synthetic workload generator.
"""

import logging
from typing import Any, Dict

from pydantic import BaseModel, Field, ValidationError, field_validator

from src.core.errors import GeneratorParameterError
from src.isa.models import IsaKind

logger = logging.getLogger(__name__)

BRANCH_MIX_KINDS = ("nonbranch", "cond", "uncond")
MAX_CALL_DEPTH = 4


class GenParams(BaseModel):
    """
    Shape of a synthetic workload.

    Hot functions are called round-robin by a driver loop. Each hot function
    co-locates cold functions in the head of its entry line and the tail of
    its return line, and holds guard branches that rarely divert into stubs
    calling those cold functions.
    """

    preset: str = Field(default="hot-cold", description="Preset the parameters started from")
    isa: IsaKind = Field(default=IsaKind.SVL, description="Instruction set to emit")
    seed: int = Field(default=7, description="Generator seed")
    instruction_count: int = Field(default=100000, description="Committed instructions to emit")
    base_address: int = Field(default=0x400000, description="Load address of the code segment")

    function_count: int = Field(default=640, description="Hot plus cold functions")
    hot_fraction: float = Field(default=0.2, description="Share of functions that are hot")
    colocation: int = Field(default=4, description="Cold functions co-located per hot function")
    instructions_per_function: int = Field(default=12, description="Body slots per hot function")
    guard_sites: int = Field(default=4, description="Rarely taken guard branches per hot function")
    cold_call_probability: float = Field(default=1 / 16, description="Chance a guard diverts to its stub")
    leaf_calls_per_function: int = Field(default=0, description="Calls to hot leaf functions per body")
    leaf_functions: int = Field(default=8, description="Distinct hot leaf functions")
    call_depth_weights: Dict[int, float] = Field(
        default_factory=lambda: {1: 1.0},
        description="Weights of leaf call chain depths; a depth-d site calls d nested leaves"
    )
    branch_mix: Dict[str, float] = Field(
        default_factory=lambda: {"nonbranch": 1.0, "cond": 0.0, "uncond": 0.0},
        description="Weights of body slot kinds"
    )
    body_cond_taken_probability: float = Field(default=0.5, description="Taken rate of body conditionals")
    isolate_driver_calls: bool = Field(
        default=False,
        description="Place every driver call at the end of its own line"
    )

    @field_validator('instruction_count', 'function_count', 'instructions_per_function', 'leaf_functions')
    @classmethod
    def validate_count(cls, v):
        if v < 1:
            raise ValueError('Counts must be at least 1')
        return v

    @field_validator('hot_fraction', 'cold_call_probability', 'body_cond_taken_probability')
    @classmethod
    def validate_fraction(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError('Fractions must lie in [0, 1]')
        return v

    @field_validator('colocation', 'guard_sites')
    @classmethod
    def validate_line_budget(cls, v):
        """Co-located code must fit in the shadow of a single line."""
        if not 0 <= v <= 4:
            raise ValueError('Must be between 0 and 4')
        return v

    @field_validator('leaf_calls_per_function')
    @classmethod
    def validate_leaf_calls(cls, v):
        if not 0 <= v <= 8:
            raise ValueError('Leaf calls per function must be between 0 and 8')
        return v

    @field_validator('call_depth_weights')
    @classmethod
    def validate_call_depths(cls, v):
        if not v or any(not 1 <= depth <= MAX_CALL_DEPTH for depth in v):
            raise ValueError(f'Call depths must be between 1 and {MAX_CALL_DEPTH}')
        if any(weight < 0 for weight in v.values()):
            raise ValueError('Call depth weights must be non-negative')
        if sum(v.values()) <= 0:
            raise ValueError('Call depth weights must not all be zero')
        return {depth: float(weight) for depth, weight in sorted(v.items())}

    @field_validator('branch_mix')
    @classmethod
    def validate_branch_mix(cls, v):
        unknown = set(v) - set(BRANCH_MIX_KINDS)
        if unknown:
            raise ValueError(f'Unknown branch mix kinds: {sorted(unknown)}')
        if any(weight < 0 for weight in v.values()):
            raise ValueError('Branch mix weights must be non-negative')
        if sum(v.values()) <= 0:
            raise ValueError('Branch mix weights must not all be zero')
        return {kind: float(v.get(kind, 0.0)) for kind in BRANCH_MIX_KINDS}

    @property
    def max_call_depth(self) -> int:
        return max(depth for depth, weight in self.call_depth_weights.items() if weight > 0)

    @property
    def hot_count(self) -> int:
        return int(round(self.function_count * self.hot_fraction))

    @property
    def cold_count(self) -> int:
        return self.function_count - self.hot_count


PRESETS: Dict[str, Dict[str, Any]] = {
    "hot-cold": {},
    "no-shadow": {
        "function_count": 128,
        "hot_fraction": 1.0,
        "colocation": 0,
        "guard_sites": 0,
        "branch_mix": {"nonbranch": 1.0},
        "isolate_driver_calls": True,
    },
    "return-heavy": {
        "leaf_calls_per_function": 2,
        "guard_sites": 2,
    },
}


def make_gen_params(preset: str = "hot-cold", **overrides: Any) -> GenParams:
    """
    Build generator parameters from a preset plus overrides (None values skipped).

    Raises:
        GeneratorParameterError: For unknown presets or invalid values
    """
    if preset not in PRESETS:
        raise GeneratorParameterError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}")
    values = dict(PRESETS[preset])
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return GenParams(preset=preset, **values)
    except ValidationError as e:
        raise GeneratorParameterError(f"Invalid generator parameters: {e}") from e
