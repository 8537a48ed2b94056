"""実行設定（既定値・JSON ファイル・環境変数）"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

from . import __version__
from .errors import InvalidArgumentError


@dataclass
class RunConfig:
    """1 回の実行の解決済み設定"""
    command: str = ""
    q_budget: int = 10 ** 7
    y_budget: int = 10 ** 6
    precision_bits: int = 256
    max_precision_bits: int = 4096
    certificate_margin: Fraction = Fraction(1, 1000)
    c2_tolerance: Fraction = Fraction(1, 50)
    workers: int = 1
    seed: int = 0
    max_growth: int = 64
    output_dir: str = "."
    log_level: str = "INFO"
    parameters: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        for name in ("q_budget", "y_budget", "precision_bits", "max_precision_bits", "workers", "max_growth"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"Invalid {name}: {getattr(self, name)}")
        if self.precision_bits < 8:
            raise InvalidArgumentError(f"Invalid precision_bits: {self.precision_bits} (8 ビット以上)")
        if self.max_precision_bits < self.precision_bits:
            raise InvalidArgumentError("max_precision_bits は precision_bits 以上が必要です")
        if not 0 < self.certificate_margin < 1:
            raise InvalidArgumentError(f"Invalid certificate_margin: {self.certificate_margin}")
        if not 0 < self.c2_tolerance < 1:
            raise InvalidArgumentError(f"Invalid c2_tolerance: {self.c2_tolerance}")
        return self

    def to_json(self) -> Dict[str, Any]:
        data = asdict(self)
        data["certificate_margin"] = str(self.certificate_margin)
        data["c2_tolerance"] = str(self.c2_tolerance)
        data["parameters"] = {k: _plain(v) for k, v in sorted(self.parameters.items())}
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def manifest(self) -> Dict[str, Any]:
        return {"version": __version__, "config": self.to_json(), "config_hash": self.config_hash()}


def _plain(value: Any) -> Any:
    if isinstance(value, (Fraction, Path)):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


_COERCE = {
    "certificate_margin": Fraction,
    "c2_tolerance": Fraction,
}


def _apply(config: RunConfig, values: Dict[str, Any]) -> None:
    known = {f.name: f for f in fields(RunConfig)}
    for key, value in values.items():
        if value is None:
            continue
        if key not in known:
            raise InvalidArgumentError(f"不明な設定項目: {key}")
        try:
            if key in _COERCE:
                value = _COERCE[key](value)
            elif known[key].type in (int, "int"):
                value = int(value)
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise InvalidArgumentError(f"Invalid {key}: {value!r}") from e
        setattr(config, key, value)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """既定値 < JSON ファイル < 環境変数 < 明示的な引数 の順に解決する"""
    config = RunConfig()
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidArgumentError(f"設定ファイルを読めません ({path}): {e}") from e
        if not isinstance(data, dict):
            raise InvalidArgumentError("設定ファイルは JSON オブジェクトである必要があります")
        _apply(config, data)

    env = {
        "workers": os.getenv("DIRICHLET_SPECTRUM_WORKERS"),
        "q_budget": os.getenv("DIRICHLET_SPECTRUM_Q_BUDGET"),
        "precision_bits": os.getenv("DIRICHLET_SPECTRUM_PRECISION_BITS"),
        "max_precision_bits": os.getenv("DIRICHLET_SPECTRUM_MAX_PRECISION_BITS"),
        "log_level": os.getenv("DIRICHLET_SPECTRUM_LOG_LEVEL"),
    }
    try:
        _apply(config, env)
    except ValueError as e:
        raise InvalidArgumentError(f"環境変数の値が不正です: {e}") from e
    _apply(config, overrides or {})
    return config.validate()
