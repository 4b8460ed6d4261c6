from __future__ import annotations

import logging
from typing import Dict, Optional

from rich.console import Console
from rich.markup import escape
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Column

from greenfde.interfaces import ProgressReporter

_log = logging.getLogger(__name__)


class NoOpProgressReporter(ProgressReporter):
    def __enter__(self) -> "NoOpProgressReporter":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        return False

    def start(self) -> None:
        return

    def stop(self) -> None:
        return

    def add_task(self, description: str) -> Optional[int]:
        return None

    def record_step(self, task_id: Optional[int], k: int, residual: float) -> None:
        return

    def complete_task(self, task_id: Optional[int], outcome: Optional[str] = None) -> None:
        return


class RichProgressReporter(ProgressReporter):
    """Spinner per grid solve with the running residual, rendered on stderr.

    Finished solves are printed as one line each so the sweep leaves a trace
    once the live display is gone.
    """

    def __init__(self, console: Optional[Console] = None, transient: bool = True):
        self._progress: Optional[Progress] = None
        self._transient = transient
        self._labels: Dict[int, str] = {}
        self.console: Console = console or Console(stderr=True, soft_wrap=True)

    def __enter__(self) -> "RichProgressReporter":
        self.start()
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.stop()
        return False

    def start(self) -> None:
        if self._progress is None:
            self._progress = Progress(
                SpinnerColumn(style="green"),
                TextColumn(
                    "{task.description}",
                    table_column=Column(ratio=1, no_wrap=True, overflow="ellipsis"),
                ),
                TextColumn("{task.fields[status]}", style="grey50"),
                TimeElapsedColumn(),
                console=self.console,
                transient=self._transient,
                expand=True,
            )
            self._progress.start()

    def stop(self) -> None:
        if self._progress is not None:
            self._progress.stop()
            self._progress = None

    def add_task(self, description: str) -> Optional[int]:
        if self._progress is None:
            self.start()
        task_id = int(self._progress.add_task(description, total=None, status=""))
        self._labels[task_id] = description
        return task_id

    def record_step(self, task_id: Optional[int], k: int, residual: float) -> None:
        if self._progress is None or task_id is None:
            return
        self._progress.update(task_id, status=f"k={k} residual={residual:.2e}")

    def complete_task(self, task_id: Optional[int], outcome: Optional[str] = None) -> None:
        if self._progress is None or task_id is None:
            return
        label = self._labels.pop(task_id, "")
        self._progress.remove_task(task_id)
        if outcome:
            line = f"[green]✓[/green] {escape(label)} {escape(outcome)}"
            self._progress.console.print(line, highlight=False)
        _log.debug("finished %s %s", label, outcome or "")
