"""
Pydantic settings and configuration helpers.

Loads process-level settings from environment variables, falling back to
field defaults.
"""

from __future__ import annotations

from typing import Optional, Sequence

import os

from pydantic import BaseModel, Field


class AppSettings(BaseModel):
    app_title: str = Field(default="Video Captioning Engine")
    log_level: str = Field(default="INFO")
    debug_mode: bool = Field(default=False)
    log_file: str = Field(default="logs/vidcap.log")

    default_seed: int = Field(default=0)
    default_threads: int = Field(default=1, ge=1)

    @staticmethod
    def _read_env_variants(names: Sequence[str]) -> Optional[str]:
        """Try multiple environment variable names, first non-empty wins."""
        for n in names:
            v = os.getenv(n)
            if v is not None and v.strip():
                return v.strip()
        return None

    @classmethod
    def _read_bool_variants(cls, names: Sequence[str], default: bool = False) -> bool:
        val = cls._read_env_variants(names)
        if val is None:
            return default
        normalized = val.strip().lower()
        if normalized in {"1", "true", "yes", "on"}:
            return True
        if normalized in {"0", "false", "no", "off"}:
            return False
        return default

    @classmethod
    def _read_int_variants(cls, names: Sequence[str], default: int) -> int:
        val = cls._read_env_variants(names)
        if val is None:
            return default
        try:
            return int(val)
        except ValueError:
            return default

    @classmethod
    def load(cls) -> "AppSettings":
        return cls(
            log_level=(cls._read_env_variants(["VIDCAP_LOG_LEVEL", "LOG_LEVEL"]) or "INFO").upper(),
            debug_mode=cls._read_bool_variants(["VIDCAP_DEBUG_MODE", "DEBUG_MODE"], default=False),
            log_file=cls._read_env_variants(["VIDCAP_LOG_FILE"]) or "logs/vidcap.log",
            default_seed=cls._read_int_variants(["VIDCAP_DEFAULT_SEED"], 0),
            default_threads=max(1, cls._read_int_variants(["VIDCAP_DEFAULT_THREADS"], 1)),
        )


settings = AppSettings.load()
