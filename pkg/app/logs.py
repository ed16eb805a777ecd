from __future__ import annotations

import logging
import os
from typing import Optional

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Configure root logging once for the CLI / server process.
    Level comes from the argument, else KPALIGN_LOG_LEVEL, else INFO.
    """
    use_level = (level or os.getenv("KPALIGN_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, use_level, logging.INFO), format=LOG_FORMAT)
    logging.getLogger("app").setLevel(getattr(logging, use_level, logging.INFO))
