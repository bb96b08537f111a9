"""Academy agent that runs simulations for the batch workflow."""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

from academy.agent import Agent, action

try:
    from . import utils
    from .errors import ConfigError, exit_code_for
    from .models import RunSummary, SimConfig
    from .presets import get_preset
    from .runner import run_experiment
except ImportError:
    import utils
    from errors import ConfigError, exit_code_for
    from models import RunSummary, SimConfig
    from presets import get_preset
    from runner import run_experiment

logger = logging.getLogger(__name__)

__all__ = ["SimulationAgent"]


class SimulationAgent(Agent):
    """Runs one experiment per request; the integration runs off the event loop."""

    def __init__(self, *, verbose: bool = True, check_convergence: bool = False) -> None:
        super().__init__()
        self.verbose = verbose
        self.check_convergence = check_convergence
        self.completed = 0

    @action
    async def configure(self, verbose: bool | None = None, check_convergence: bool | None = None) -> None:
        if verbose is not None:
            self.verbose = verbose
        if check_convergence is not None:
            self.check_convergence = check_convergence

    @action
    async def set_verbose(self, verbose: bool) -> None:
        self.verbose = verbose

    async def _run(self, name: str, load, out_dir: str) -> dict:
        loop = asyncio.get_running_loop()

        def work() -> RunSummary:
            try:
                config = load()
            except KeyError as exc:
                raise ConfigError([str(exc.args[0])]) from None
            return run_experiment(
                config,
                out_dir,
                check_convergence=self.check_convergence,
                verbose=self.verbose,
            )

        try:
            summary = await loop.run_in_executor(None, work)
        except Exception as exc:
            logger.error("%s failed: %s: %s", name, type(exc).__name__, exc)
            summary = RunSummary(
                name=name,
                success=False,
                output_dir=out_dir,
                error_type=type(exc).__name__,
                message=str(exc),
                exit_code=exit_code_for(exc),
            )
        self.completed += 1
        return summary.to_dict()

    @action
    async def run_preset(self, name: str, out_dir: str) -> dict:
        return await self._run(name, lambda: get_preset(name), out_dir)

    @action
    async def run_config(self, path: str, out_dir: str) -> dict:
        return await self._run(Path(path).stem, lambda: utils.load_config(path), out_dir)

    @action
    async def run_inline(self, config: dict, out_dir: str) -> dict:
        name = str(config.get("name", "inline"))
        return await self._run(name, lambda: SimConfig.from_dict(config), out_dir)
