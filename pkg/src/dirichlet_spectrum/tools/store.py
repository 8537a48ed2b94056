"""ツール間で共有する構成物の保管場所"""

import json
import uuid
from typing import Any, Dict

from ..construct import ConstructedVector, SequenceRecord
from ..digit_family import DigitSetFamily
from ..errors import InvalidArgumentError
from ..serialize import to_plain


class ObjectStore:
    """数列・ベクトル・桁集合族を ID で保持する"""

    def __init__(self):
        self.sequences: Dict[str, SequenceRecord] = {}
        self.vectors: Dict[str, ConstructedVector] = {}
        self.families: Dict[str, DigitSetFamily] = {}
        # ベクトル ID → 元になった数列 ID
        self.sources: Dict[str, str] = {}

    def add_sequence(self, seq: SequenceRecord) -> str:
        seq_id = str(uuid.uuid4())
        self.sequences[seq_id] = seq
        return seq_id

    def add_vector(self, vec: ConstructedVector, seq_id: str = "") -> str:
        vec_id = str(uuid.uuid4())
        self.vectors[vec_id] = vec
        if seq_id:
            self.sources[vec_id] = seq_id
        return vec_id

    def add_family(self, family: DigitSetFamily) -> str:
        family_id = str(uuid.uuid4())
        self.families[family_id] = family
        return family_id

    def sequence(self, seq_id: str) -> SequenceRecord:
        if seq_id not in self.sequences:
            raise InvalidArgumentError(f"数列 {seq_id} が見つかりません")
        return self.sequences[seq_id]

    def vector(self, vec_id: str) -> ConstructedVector:
        if vec_id not in self.vectors:
            raise InvalidArgumentError(f"ベクトル {vec_id} が見つかりません")
        return self.vectors[vec_id]

    def sequence_for(self, vec_id: str) -> SequenceRecord:
        if vec_id not in self.sources:
            raise InvalidArgumentError(f"ベクトル {vec_id} には元の数列がありません")
        return self.sequence(self.sources[vec_id])

    def family(self, family_id: str) -> DigitSetFamily:
        if family_id not in self.families:
            raise InvalidArgumentError(f"桁集合族 {family_id} が見つかりません")
        return self.families[family_id]


def success(payload: Dict[str, Any]) -> str:
    result = dict(payload)
    result["status"] = "success"
    return json.dumps(to_plain(result), ensure_ascii=False, indent=2)


def failure(error: Exception) -> str:
    return json.dumps({"error": str(error), "status": "failed"}, ensure_ascii=False, indent=2)
