"""
Conditional branch direction predictors.

The oracle isolates BTB/SBB effects by replaying the committed outcome on
the correct path. Gshare exists for sensitivity runs.
"""

import logging
from typing import Optional

import numpy as np

from src.core.config import DirectionPredictorKind, SimConfig

logger = logging.getLogger(__name__)


class DirectionPredictor:
    """Base class for direction predictors."""

    name = "base"

    def predict(self, pc: int, truth: Optional[bool] = None) -> bool:
        """
        Predict a conditional branch.

        Args:
            pc: Branch address
            truth: Committed outcome when the IAG is on the correct path,
                None on the wrong path
        """
        raise NotImplementedError

    def update(self, pc: int, taken: bool) -> None:
        """Train on a committed conditional branch."""
        pass


class OracleDirectionPredictor(DirectionPredictor):
    """Correct on-path, not-taken off-path (no wrong-path labels exist)."""

    name = "oracle"

    def predict(self, pc: int, truth: Optional[bool] = None) -> bool:
        return bool(truth) if truth is not None else False


class GshareDirectionPredictor(DirectionPredictor):
    """
    Gshare: 2-bit saturating counters indexed by pc XOR global history.

    History and counters are updated at commit, so predictions never see
    wrong-path outcomes.
    """

    name = "gshare"

    def __init__(self, history_bits: int = 12):
        self.history_bits = history_bits
        self.mask = (1 << history_bits) - 1
        self.history = 0
        # Weakly not-taken
        self.counters = np.full(1 << history_bits, 1, dtype=np.int8)

    def _index(self, pc: int) -> int:
        return (pc ^ self.history) & self.mask

    def predict(self, pc: int, truth: Optional[bool] = None) -> bool:
        return bool(self.counters[self._index(pc)] >= 2)

    def update(self, pc: int, taken: bool) -> None:
        idx = self._index(pc)
        if taken:
            self.counters[idx] = min(3, self.counters[idx] + 1)
        else:
            self.counters[idx] = max(0, self.counters[idx] - 1)
        self.history = ((self.history << 1) | int(taken)) & self.mask


def make_direction_predictor(config: SimConfig) -> DirectionPredictor:
    if config.direction_predictor == DirectionPredictorKind.GSHARE:
        logger.debug(f"Using gshare with {config.gshare_history_bits} history bits")
        return GshareDirectionPredictor(config.gshare_history_bits)
    return OracleDirectionPredictor()
