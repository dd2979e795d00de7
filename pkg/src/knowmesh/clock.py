"""Per-node Lamport logical clock.

Not locked internally: the owning node serializes all mutations through its
single writer, and replay happens before the node is shared.
"""

from __future__ import annotations


class LamportClock:
    __slots__ = ("value",)

    def __init__(self, value: int = 0):
        self.value = value

    def tick(self) -> int:
        self.value += 1
        return self.value

    def observe(self, other: int) -> int:
        """Advance to at least ``other`` (receipt rule, without the +1)."""
        if other > self.value:
            self.value = other
        return self.value

    def __repr__(self) -> str:
        return f"LamportClock({self.value})"
