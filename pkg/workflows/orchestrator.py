"""Async batch orchestration using Academy agents."""
from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Sequence

from academy.exchange import LocalExchangeFactory
from academy.manager import Manager

try:
    from ..academy_agents import SimulationAgent
    from ..config import BATCH_DEFAULTS, OUTPUT_DEFAULTS
    from ..models import RunSummary
    from .. import utils
except ImportError:
    from academy_agents import SimulationAgent
    from config import BATCH_DEFAULTS, OUTPUT_DEFAULTS
    from models import RunSummary
    import utils

logger = logging.getLogger(__name__)

__all__ = ["run_batch"]


async def run_batch(
    *,
    presets: Sequence[str] = (),
    configs: Sequence[str] = (),
    out_root: str | Path = "runs",
    workers: int = BATCH_DEFAULTS["max_workers"],
    check_convergence: bool = False,
    verbose: bool = True,
) -> list[RunSummary]:
    """Run every preset and config file concurrently, one agent per run.

    Each run writes into its own directory under ``out_root``; the batch
    log records one event per launch and per result. Failures are returned
    as unsuccessful summaries rather than raised.
    """

    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    batch_log_path = out_root / f"batch_{timestamp}_{OUTPUT_DEFAULTS['events_file']}"

    def _log_event(stage: str, message: str, metadata: dict | None = None) -> None:
        utils.append_event_log(batch_log_path, stage, message, metadata or {})

    jobs = [("preset", name, name) for name in presets]
    jobs += [("config", path, Path(path).stem) for path in configs]
    if not jobs:
        return []
    _log_event("batch", f"launching {len(jobs)} runs", {"workers": workers})

    # every launched agent holds an executor thread; the semaphore bounds concurrent integrations
    executor = ThreadPoolExecutor(max_workers=len(jobs))
    slots = asyncio.Semaphore(workers)
    async with await Manager.from_exchange_factory(
        factory=LocalExchangeFactory(), executors=executor
    ) as manager:
        agents = [await manager.launch(SimulationAgent) for _ in jobs]
        await asyncio.gather(
            *(agent.configure(verbose=verbose, check_convergence=check_convergence) for agent in agents)
        )

        async def _one(agent, kind: str, source: str, stem: str) -> RunSummary:
            out_dir = str(out_root / stem)
            _log_event("launch", f"{kind} {source}", {"out_dir": out_dir})
            async with slots:
                if kind == "preset":
                    result = await agent.run_preset(source, out_dir)
                else:
                    result = await agent.run_config(source, out_dir)
            summary = RunSummary.from_dict(result)
            _log_event(
                "result",
                f"{stem}: {'ok' if summary.success else summary.error_type}",
                {"exit_code": summary.exit_code, "wall_time": summary.wall_time, "message": summary.message},
            )
            if verbose:
                logger.info("%s finished (success=%s)", stem, summary.success)
            return summary

        summaries = await asyncio.gather(
            *(_one(agent, kind, source, stem) for agent, (kind, source, stem) in zip(agents, jobs))
        )

    failed = [s.name for s in summaries if not s.success]
    _log_event("batch", f"{len(summaries) - len(failed)} of {len(summaries)} runs succeeded", {"failed": failed})
    return list(summaries)
