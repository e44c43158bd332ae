import os
import logging
from dataclasses import dataclass
from fractions import Fraction

# Load environment variables
from dotenv import load_dotenv
load_dotenv()


class ENV_KEYS:
    THREADS = "SMOOTHABLE_THREADS"
    LOG_LEVEL = "SMOOTHABLE_LOG_LEVEL"
    THETA_TOL = "SMOOTHABLE_THETA_TOL"


class SmoothableError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SmoothableError, ValueError):
    """Bad input: malformed matrices, invalid tags, violated preconditions."""


class OracleViolation(SmoothableError):
    """A checked mathematical statement failed on valid input."""


@dataclass(frozen=True)
class Settings:
    threads: int
    log_level: str
    theta_tol: float


def get_settings():
    """
    Read the runtime settings from the environment.

    Returns:
        Settings: worker cap, log level and theta tail tolerance
    """
    raw_threads = os.environ.get(ENV_KEYS.THREADS, "1")
    try:
        threads = int(raw_threads)
    except ValueError:
        raise ValidationError(f"{ENV_KEYS.THREADS} must be a positive integer, got {raw_threads!r}")
    if threads < 1:
        raise ValidationError(f"{ENV_KEYS.THREADS} must be a positive integer, got {threads}")

    log_level = os.environ.get(ENV_KEYS.LOG_LEVEL, "WARNING").upper()

    raw_tol = os.environ.get(ENV_KEYS.THETA_TOL, "1e-15")
    try:
        theta_tol = float(raw_tol)
    except ValueError:
        raise ValidationError(f"{ENV_KEYS.THETA_TOL} must be a float, got {raw_tol!r}")
    if not 0.0 < theta_tol < 1.0:
        raise ValidationError(f"{ENV_KEYS.THETA_TOL} must lie in (0, 1), got {theta_tol}")

    return Settings(threads=threads, log_level=log_level, theta_tol=theta_tol)


def get_worker_count():
    """Number of worker threads the fan-outs may use."""
    return get_settings().threads


_configured = False


def get_logger(name):
    """
    Get a module logger, configuring the package root logger on first use.

    Args:
        name (str): Logger name, usually __name__

    Returns:
        logging.Logger: the configured logger
    """
    global _configured
    if not _configured:
        root = logging.getLogger("smoothable")
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
        level = os.environ.get(ENV_KEYS.LOG_LEVEL, "WARNING").upper()
        root.setLevel(getattr(logging, level, logging.WARNING))
        root.propagate = False
        _configured = True
    return logging.getLogger(f"smoothable.{name}")


def to_fraction(value):
    """
    Convert user input into an exact rational.

    Accepts ints, Fractions and strings written `p` or `p/q`. Floats are
    rejected so that no rounding can sneak into an exact path.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            num, _, den = text.partition("/")
            if den:
                return Fraction(int(num), int(den))
            return Fraction(int(num))
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"not a rational: {value!r}")
    raise ValidationError(f"not a rational: {value!r}")


def format_rational(value):
    """Format a rational as `p` or `p/q`."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_float(value):
    """Fixed float formatting used by every numeric output."""
    return "%.12e" % value
