"""Scheduling policies: pick the next active task a server should serve.

Every policy is expressed as a sort key over queue entries; the smallest key
wins. All keys end with ``(injection_time, sequence, task_id)``, which makes
the order total and the choice independent of queue presentation order.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable


class PolicyId(enum.Enum):
    FIFO = "FIFO"
    LIFO = "LIFO"
    LIS = "LIS"
    NTG = "NTG"
    FFS = "FFS"
    LCT_LIS = "LCT-LIS"
    SAD_NFS = "SAD-NFS"

    @classmethod
    def parse(cls, name: "str | PolicyId") -> "PolicyId":
        if isinstance(name, PolicyId):
            return name
        norm = str(name).strip().upper().replace("_", "-")
        for p in cls:
            if p.value == norm:
                return p
        raise ValueError(f"unknown policy {name!r}; expected one of {[p.value for p in cls]}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class QueueEntry:
    """An active task waiting at a server."""

    injection_time: Fraction
    sequence: int
    task_id: int
    arrival: Fraction  # instant the task became active
    activation_delay: Fraction
    processing_time: Fraction
    layer: int
    job_layers: int

    @property
    def from_source(self) -> int:
        return self.layer - 1

    @property
    def to_go(self) -> int:
        return self.job_layers - self.layer


def priority_key(entry: QueueEntry, policy: PolicyId) -> tuple:
    tail = (entry.injection_time, entry.sequence, entry.task_id)
    if policy is PolicyId.FIFO:
        return (entry.arrival,) + tail
    if policy is PolicyId.LIFO:
        return (-entry.arrival,) + tail
    if policy is PolicyId.LIS:
        return tail
    if policy is PolicyId.NTG:
        return (entry.to_go,) + tail
    if policy is PolicyId.FFS:
        return (-entry.from_source,) + tail
    if policy is PolicyId.LCT_LIS:
        return (-entry.processing_time,) + tail
    if policy is PolicyId.SAD_NFS:
        return (entry.activation_delay, entry.from_source) + tail
    raise ValueError(policy)


def select(view: Iterable[QueueEntry], policy: PolicyId | str) -> QueueEntry:
    policy = PolicyId.parse(policy)
    entries = list(view)
    if not entries:
        raise ValueError("select() needs at least one active task")
    return min(entries, key=lambda e: priority_key(e, policy))
