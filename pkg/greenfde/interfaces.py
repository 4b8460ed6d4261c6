from __future__ import annotations

from typing import Optional, Protocol


class StepCallback(Protocol):
    def __call__(self, k: int, residual: float) -> None:
        """Called after iteration k with max |Psi_k - Psi_{k-1}|."""


class ProgressReporter(Protocol):
    """Live status of a grid sweep; one task per solve."""

    def start(self) -> None:  # pragma: no cover - simple pass-through
        ...

    def stop(self) -> None:  # pragma: no cover - simple pass-through
        ...

    def add_task(self, description: str) -> Optional[int]:
        """Open a task for one solve and return its id (None when nothing is displayed)."""

    def record_step(self, task_id: Optional[int], k: int, residual: float) -> None:
        """Show the latest iteration count and residual of a running solve."""

    def complete_task(self, task_id: Optional[int], outcome: Optional[str] = None) -> None:
        """Close the task; ``outcome`` is a short status such as 'K=3'."""
