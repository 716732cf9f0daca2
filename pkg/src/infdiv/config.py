"""Flat dotted-key configuration files for the experiment CLI.

Format: one ``section.key = value`` per line, ``#`` starts a comment.  Every
key a command resolves (including applied defaults) is recorded, so the
effective configuration written next to the outputs reproduces the run
byte-for-byte.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigurationError
from .model import ModelParams

__all__ = ["Config"]


class Config:
    def __init__(self, values: dict[str, str], source: str = "<memory>"):
        self._values = dict(values)
        self._effective: dict[str, str] = {}
        self.source = source

    @classmethod
    def from_file(cls, path) -> "Config":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        values: dict[str, str] = {}
        for ln, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
            values[key.strip()] = val.strip()
        return cls(values, source=str(path))

    def _resolve(self, key: str, default) -> str:
        if key in self._values:
            raw = self._values[key]
        elif default is not None:
            raw = str(default)
        else:
            raise ConfigurationError(f"missing required config key {key!r} in {self.source}")
        self._effective[key] = raw
        return raw

    def get_str(self, key: str, default: str | None = None) -> str:
        return self._resolve(key, default)

    def get_float(self, key: str, default: float | None = None) -> float:
        raw = self._resolve(key, default)
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key!r} must be a number, got {raw!r}")

    def get_int(self, key: str, default: int | None = None) -> int:
        raw = self._resolve(key, default)
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key!r} must be an integer, got {raw!r}")

    def get_float_list(self, key: str, default: str | None = None) -> list[float]:
        raw = self._resolve(key, default)
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigurationError(f"config key {key!r} must be a list of numbers, got {raw!r}")

    def model_params(self) -> ModelParams:
        return ModelParams(
            mu=self.get_float("model.mu"),
            eta=self.get_float("model.eta"),
            rho=self.get_float("model.rho"),
            q=self.get_float("model.q"),
        )

    def effective_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in sorted(self._effective.items()))
