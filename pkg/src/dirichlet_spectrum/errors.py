"""ツールキット共通の例外"""

from typing import Any, Optional


class ToolkitError(Exception):
    """ツールキットの基底例外"""


class InvalidArgumentError(ToolkitError, ValueError):
    """引数が定義域外"""


class PreconditionError(ToolkitError, ValueError):
    """事前条件違反"""


class OutOfDomainError(ToolkitError, ValueError):
    """関数の定義域外での評価"""


class OutOfScopeError(ToolkitError, ValueError):
    """実装範囲外のパラメータ"""


class UnsupportedError(ToolkitError):
    """未対応の構成"""


class ConstructionInfeasibleError(ToolkitError):
    """成長予算内で証明書が通らなかった"""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class TruncationInsufficientError(ToolkitError):
    """打ち切り段数が足りない"""

    def __init__(self, message: str, required_level: Optional[int] = None):
        super().__init__(message)
        self.required_level = required_level


class BudgetExceededError(ToolkitError):
    """探索予算の超過"""

    def __init__(self, message: str, count: int, budget: int):
        super().__init__(message)
        self.count = count
        self.budget = budget


class IndeterminateComparisonError(ToolkitError):
    """精度予算内で大小が決まらない"""

    def __init__(self, message: str, bits: int):
        super().__init__(message)
        self.bits = bits
