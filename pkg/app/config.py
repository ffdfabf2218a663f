import os
from dotenv import load_dotenv

from app.markov.errors import InvalidConfig
from app.markov.scalar import Arithmetic

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise InvalidConfig(f"{raw!r} is not an integer", flag=name) from None


def _mode_env(name: str) -> Arithmetic:
    raw = os.getenv(name, Arithmetic.EXACT.value).strip().lower()
    try:
        return Arithmetic(raw)
    except ValueError:
        raise InvalidConfig(f"{raw!r} is not 'exact' or 'float'", flag=name) from None


DATABASE_URL = os.getenv("DATABASE_URL", "sqlite:///./markov_runs.db")
LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()


# Read on every call; invalid values raise InvalidConfig.
def default_mode() -> Arithmetic:
    return _mode_env("MARKOV_ARITHMETIC")


def default_max_steps() -> int:
    return _int_env("MARKOV_MAX_STEPS", 10_000)


def default_samples() -> int:
    return _int_env("MARKOV_SAMPLES", 100_000)


def default_seed() -> int:
    return _int_env("MARKOV_SEED", 20240101)


def check_settings() -> None:
    default_mode()
    default_max_steps()
    default_samples()
    default_seed()


def resolve_mode(value) -> Arithmetic:
    """Explicit flag or request value wins over MARKOV_ARITHMETIC."""
    if value is None:
        return default_mode()
    if isinstance(value, Arithmetic):
        return value
    return Arithmetic(value)
