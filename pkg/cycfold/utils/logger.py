# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import atexit
import functools
import logging
import sys

from iopath.common.file_io import g_pathmgr

from cycfold.utils.misc import makedir


# cache the opened file object, so that repeated `setup_logging` calls in one
# process append to the same log file.
@functools.lru_cache(maxsize=None)
def _cached_log_stream(filename):
    # small buffer so that a crashed batch run still leaves its reports behind
    log_buffer_kb = 10 * 1024  # 10KB
    io = g_pathmgr.open(filename, mode="a", buffering=log_buffer_kb)
    atexit.register(io.close)
    return io


def setup_logging(name, output_dir=None, log_level="WARNING"):
    """
    Log to stderr and, when `output_dir` is given, to `output_dir/log.txt`.
    Stdout is left to the command output.
    """
    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    FORMAT = "%(levelname)s %(asctime)s %(filename)s:%(lineno)4d: %(message)s"
    formatter = logging.Formatter(FORMAT)

    # Cleanup any existing handlers
    for h in logger.handlers:
        logger.removeHandler(h)
    logger.root.handlers = []

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if output_dir and makedir(output_dir):
        file_handler = logging.StreamHandler(_cached_log_stream(f"{output_dir}/log.txt"))
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logging.root = logger


def shutdown_logging():
    """
    Flush and close every handler installed by `setup_logging`.
    """
    logging.debug("Shutting down loggers...")
    for handler in logging.root.handlers:
        handler.close()
