# main.py
import logging
import sys

from core.api import run
from core.config import settings

logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT)


def main() -> None:
    sys.exit(run())


if __name__ == '__main__':
    main()
