import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)


class SweepCellError(Exception):
    """A sweep cell raised; carries the cell key so the failure can be named."""

    def __init__(self, key: Tuple, cause: BaseException):
        super().__init__(f"cell {key} failed: {type(cause).__name__}: {cause}")
        self.key = key
        self.cause = cause


@dataclass
class SweepCell:
    """One independent unit of work, identified by its coordinates."""
    key: Tuple
    func: Callable[..., Any]
    args: Tuple = ()
    kwargs: Dict[str, Any] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return "/".join(str(k) for k in self.key)


class SweepController:
    """
    Caps the number of sweep cells in flight.

    With max_concurrency > 1 cells run in a process pool; otherwise inline in
    the event loop's thread. Results always come back ordered by cell key, so
    output files do not depend on the worker count.
    """

    def __init__(self, max_concurrency: int = 1):
        self.max_concurrency = max(1, int(max_concurrency))
        self.semaphore = asyncio.Semaphore(self.max_concurrency)
        self.active_count = 0

    async def acquire_slot(self, cell_name: str):
        await self.semaphore.acquire()
        self.active_count += 1
        logger.debug(f"🚦 [Traffic] Acquired: {cell_name} (Active: {self.active_count}/{self.max_concurrency})")

    def release_slot(self, cell_name: str):
        self.active_count -= 1
        self.semaphore.release()
        logger.debug(f"🚦 [Traffic] Released: {cell_name} (Active: {self.active_count}/{self.max_concurrency})")

    async def _run_cell(self, cell: SweepCell, executor: Optional[ProcessPoolExecutor]) -> Any:
        await self.acquire_slot(cell.name)
        try:
            if executor is None:
                return cell.func(*cell.args, **cell.kwargs)
            loop = asyncio.get_running_loop()
            return await loop.run_in_executor(executor, _call, cell.func, cell.args, cell.kwargs)
        except Exception as e:
            logger.error(f"🚦 [Traffic] Cell {cell.name} failed: {e}")
            raise SweepCellError(cell.key, e) from e
        finally:
            self.release_slot(cell.name)

    async def run_cells(self, cells: List[SweepCell]) -> List[Tuple[Tuple, Any]]:
        """Run all cells and return (key, result) pairs sorted by key."""
        keys = [c.key for c in cells]
        if len(set(keys)) != len(keys):
            raise ValueError("Sweep cell keys must be unique")
        logger.info(f"🚀 [Traffic] Dispatching {len(cells)} cells on {self.max_concurrency} worker(s)")
        executor = ProcessPoolExecutor(max_workers=self.max_concurrency) if self.max_concurrency > 1 else None
        try:
            results = await asyncio.gather(*(self._run_cell(c, executor) for c in cells))
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return sorted(zip(keys, results), key=lambda item: item[0])


def _call(func: Callable[..., Any], args: Tuple, kwargs: Dict[str, Any]) -> Any:
    return func(*args, **kwargs)
