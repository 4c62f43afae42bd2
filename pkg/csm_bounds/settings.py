"""
Process-wide configuration. Every knob can be overridden through a CSM_* environment
variable or a .env file in the working directory.
"""
import logging
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class CsmSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="CSM_", env_file=".env", extra="ignore")

    # pauli-trace memory cap (number of Pauli strings in one expression)
    term_cap: int = 10_000_000
    # dense matrices are built for at most this many sites (central spin included)
    dense_max_sites: int = 13
    # composed dense operators kept in memory, least recently used evicted first
    dense_cache_entries: int = 16
    eig_cutoff: float = 1e-12
    residual_tol: float = 1e-8
    degeneracy_tol: float = 1e-10
    # 53 = float64; anything larger switches small problems to mpmath
    precision_bits: int = 53
    gaussian_dps: int = 60
    workers: int = 1
    mc_shards: int = 8
    cache_dir: Path = Path.home() / ".cache" / "csm_bounds"
    log_level: str = "INFO"


_settings: Optional[CsmSettings] = None


def get_settings() -> CsmSettings:
    global _settings
    if _settings is None:
        _settings = CsmSettings()
        logger.debug(f"Loaded settings: {_settings.model_dump()}")
    return _settings


def reset_settings() -> None:
    global _settings
    _settings = None
