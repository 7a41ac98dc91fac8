# -*- coding: utf-8 -*-
###################################################################################
#
#  logger.py
#
#  Logging front-end and exception types shared by every qpqlab module.
#
###################################################################################

import logging

import config

_logger = logging.getLogger("qpqlab")


def configure(level: str = None):
    """Attach a stream handler to the qpqlab logger (idempotent)."""
    level = (level or config.LOG_LEVEL).upper()
    _logger.setLevel(getattr(logging, level, logging.INFO))
    if not any(isinstance(h, logging.StreamHandler) for h in _logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        _logger.addHandler(handler)


class QLogger:
    @classmethod
    def error(cls, *args):
        message = ""
        for x in args:
            message += str(x)
        _logger.error(message)

    @classmethod
    def log(cls, *args):
        message = ""
        for x in args:
            message += str(x)
        _logger.debug(message)

    @classmethod
    def message(cls, *args):
        message = ""
        for x in args:
            message += str(x)
        _logger.info(message)

    @classmethod
    def warning(cls, *args):
        message = ""
        for x in args:
            message += str(x)
        _logger.warning(message)



class QStateException(Exception):
    pass

class ProtocolException(Exception):
    pass

class AdversaryException(Exception):
    pass

class BaselineException(Exception):
    pass

class InterrogationException(Exception):
    pass

class ConfigException(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
