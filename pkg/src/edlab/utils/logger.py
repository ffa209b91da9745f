import logging
import os

from rich.console import Console
from rich.logging import RichHandler

LOG_LEVEL_ENV = "EDLAB_LOG_LEVEL"


def get_logger(level: str = "INFO", console: Console = None) -> logging.Logger:
    """Attach a RichHandler to the 'edlab' logger; EDLAB_LOG_LEVEL wins over `level`."""
    name = os.getenv(LOG_LEVEL_ENV, level).upper()
    resolved = logging.getLevelName(name)
    logger = logging.getLogger("edlab")
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=console or Console(stderr=True), show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(resolved if isinstance(resolved, int) else logging.INFO)
    return logger
