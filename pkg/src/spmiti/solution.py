"""Deployed protections and solutions, the payload shared by every stage."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property


@dataclass(frozen=True, order=True)
class DeployedProtection:
    """A concrete protection applied to one artifact."""

    cp_id: str
    artifact_id: str

    def __str__(self) -> str:
        return f"{self.cp_id}({self.artifact_id})"


@dataclass(frozen=True)
class Solution:
    """Ordered list of deployed protections; the empty tuple is the vanilla solution."""

    dsps: tuple[DeployedProtection, ...] = ()

    @classmethod
    def of(cls, *pairs: tuple[str, str]) -> Solution:
        return cls(tuple(DeployedProtection(cp, art) for cp, art in pairs))

    @cached_property
    def key(self) -> str:
        """Order-sensitive canonical hash."""
        h = hashlib.blake2b(digest_size=12)
        for d in self.dsps:
            h.update(f"{d.cp_id}\x1f{d.artifact_id}\x1e".encode())
        return h.hexdigest()

    def on(self, artifact_id: str) -> tuple[str, ...]:
        """CP ids deployed on ``artifact_id``, in deployment order."""
        return tuple(d.cp_id for d in self.dsps if d.artifact_id == artifact_id)

    def __len__(self) -> int:
        return len(self.dsps)

    def __iter__(self):
        return iter(self.dsps)

    def __add__(self, other: Solution) -> Solution:
        return Solution(self.dsps + other.dsps)

    def __str__(self) -> str:
        return "[" + ", ".join(map(str, self.dsps)) + "]"

    def to_json(self) -> list[dict[str, str]]:
        return [{"cp": d.cp_id, "artifact": d.artifact_id} for d in self.dsps]

    @classmethod
    def from_json(cls, items) -> Solution:
        return cls(tuple(DeployedProtection(i["cp"], i["artifact"]) for i in items))


VANILLA = Solution()
