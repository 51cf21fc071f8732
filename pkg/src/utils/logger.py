import logging
import sys
from ..config import settings

def setup_logging():
    if settings.environment == "development":
        level = logging.DEBUG
    else:
        level = getattr(logging, settings.log_level.upper(), logging.INFO)

    # stdout carries the reports
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stderr)
        ]
    )

    logging.getLogger("sympy").setLevel(logging.WARNING)
    logging.getLogger("numpy").setLevel(logging.WARNING)
