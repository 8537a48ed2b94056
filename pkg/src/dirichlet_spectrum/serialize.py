"""レポートの書き出しと読み込み（JSON / CSV）"""

import csv
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from . import __version__
from .config import RunConfig
from .construct import ConstructedVector, SequenceRecord
from .errors import InvalidArgumentError
from .numkit import Enclosure

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def to_plain(value: Any) -> Any:
    """JSON に載せられる形へ（大きな整数と有理数は 10 進文字列）"""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return value if abs(value) < 2 ** 53 else str(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Enclosure):
        return value.to_json()
    if hasattr(value, "to_json"):
        return to_plain(value.to_json())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def dumps(payload: Any) -> str:
    return json.dumps(to_plain(payload), ensure_ascii=False, indent=2, sort_keys=True)


def _stamp(payload: Dict[str, Any], config: Optional[RunConfig]) -> Dict[str, Any]:
    stamped = dict(payload)
    stamped["version"] = __version__
    if config is not None:
        stamped["config_hash"] = config.config_hash()
    return stamped


def write_manifest(directory: PathLike, config: RunConfig) -> Path:
    path = Path(directory) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(config.manifest()) + "\n", encoding="utf-8")
    return path


def write_json(path: PathLike, payload: Dict[str, Any], config: Optional[RunConfig] = None) -> Path:
    """バージョンと設定ハッシュを埋め込んで書き、隣に manifest.json を置く"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(_stamp(payload, config)) + "\n", encoding="utf-8")
    if config is not None:
        write_manifest(path.parent, config)
    logger.info(f"書き出し: {path}")
    return path


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]],
              config: Optional[RunConfig] = None) -> Path:
    """RFC-4180 の CSV。各行の末尾に version と config_hash の列を付ける"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    config_hash = config.config_hash() if config is not None else ""
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(list(header) + ["version", "config_hash"])
        for row in rows:
            writer.writerow([_cell(v) for v in row] + [__version__, config_hash])
    if config is not None:
        write_manifest(path.parent, config)
    logger.info(f"書き出し: {path}")
    return path


def _cell(value: Any) -> str:
    if isinstance(value, Enclosure):
        return str(value.upper)
    if value is None:
        return ""
    return str(value)


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidArgumentError(f"JSON を読めません ({path}): {e}") from e
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"JSON オブジェクトではありません: {path}")
    return data


def read_vector(path: PathLike) -> ConstructedVector:
    data = read_json(path)
    try:
        return ConstructedVector.from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"ベクトルの形式が不正です ({path}): {e}") from e


def read_sequence(path: PathLike) -> SequenceRecord:
    data = read_json(path)
    try:
        return SequenceRecord.from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"数列の形式が不正です ({path}): {e}") from e


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
