"""
Pydantic model for a resolved command-line invocation.
"""

from __future__ import annotations

from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, Field

ValueSource = Literal["default", "file", "flag"]


class CliConfig(BaseModel):
    """Subcommand plus every option after merging defaults, config file and flags."""
    command: str
    values: Dict[str, Any] = Field(default_factory=dict)
    sources: Dict[str, ValueSource] = Field(default_factory=dict)
    config_path: Optional[str] = None

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        value = self.values.get(key)
        return default if value is None else value

    def resolved(self) -> Dict[str, Any]:
        return {k: (f"{v} ({self.sources[k]})" if k in self.sources else v) for k, v in self.values.items()}
