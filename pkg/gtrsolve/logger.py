import logging, sys
from typing import IO, Optional


def setup_logging(level = logging.INFO, stream: Optional[IO[str]] = None):
	"""
	Configure the root logger for command-line use.
	Logs go to stderr by default so stdout only carries reports.
	Calling it again replaces the handler installed by the previous call.
	"""
	root_logger = logging.getLogger()
	root_logger.setLevel(level)

	for old in [h for h in root_logger.handlers if getattr(h, "_gtrs_handler", False)]:
		root_logger.removeHandler(old)

	handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
	handler._gtrs_handler = True

	formatter = logging.Formatter(
		"[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s",
		datefmt="%H:%M:%S"
	)
	handler.setFormatter(formatter)
	root_logger.addHandler(handler)
