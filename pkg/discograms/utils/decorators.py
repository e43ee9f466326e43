"""
Decorators shared by the command-line commands.
"""

import functools
import json
import logging

import click

from discograms.utils.exceptions import SCHEMA_VERSION, DiscoGraMSError


logger = logging.getLogger(__name__)

RUNTIME_ERROR_EXIT = 1


def error_payload(code: str, message: str, details: dict = None) -> dict:
    return {'schema_version': SCHEMA_VERSION, 'error': code, 'message': message, 'details': details or {}}


def cli_errors(func):
    """
    Turn pipeline errors into an error JSON on stderr and exit code 1.

    Usage errors stay with click, which exits with code 2.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except DiscoGraMSError as e:
            logger.error(f"{e.code}: {e.message}")
            payload = e.to_dict()
        except ValueError as e:
            logger.error(f"Invalid argument: {e}")
            payload = error_payload('InvalidArgument', str(e))
        click.echo(json.dumps(payload, ensure_ascii=False, default=str), err=True)
        click.get_current_context().exit(RUNTIME_ERROR_EXIT)

    return wrapper
