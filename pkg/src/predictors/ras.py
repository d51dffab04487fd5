"""
Return address stack.
"""

from collections import deque
from typing import Optional, Tuple


class ReturnAddressStack:
    """Bounded stack; pushing onto a full stack drops the oldest address."""

    def __init__(self, depth: int = 32):
        if depth < 1:
            raise ValueError("RAS depth must be at least 1")
        self.depth = depth
        self._stack = deque(maxlen=depth)

    def push(self, address: int) -> None:
        self._stack.append(address)

    def pop(self) -> Optional[int]:
        return self._stack.pop() if self._stack else None

    def peek(self) -> Optional[int]:
        return self._stack[-1] if self._stack else None

    def snapshot(self) -> Tuple[int, ...]:
        """Checkpoint taken before speculating down a predicted path."""
        return tuple(self._stack)

    def restore(self, snapshot: Tuple[int, ...]) -> None:
        self._stack = deque(snapshot, maxlen=self.depth)

    def __len__(self) -> int:
        return len(self._stack)
