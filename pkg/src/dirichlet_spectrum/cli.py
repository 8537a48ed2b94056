"""コマンドラインの入口"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .config import RunConfig, load_config
from .construct import (
    ConstructionMode,
    ConstructionPlan,
    GrowthPolicy,
    assemble_vector,
    build_sequence,
    construct_in_cantor_set,
)
from .digit_family import build_digit_family, sample_member
from .dims import dims_formula
from .errors import (
    BudgetExceededError,
    ConstructionInfeasibleError,
    IndeterminateComparisonError,
    InvalidArgumentError,
    OutOfDomainError,
    OutOfScopeError,
    PreconditionError,
    ToolkitError,
    TruncationInsufficientError,
    UnsupportedError,
)
from .numkit import as_int, as_rational, bit_budget
from .phi import parse_phi
from .serialize import dumps, read_sequence, read_vector, write_csv, write_json
from .transfer import Direction, TransferParams, fr_chain, german_map, kappa_bt, round_trip_constants, transfer_verify
from .verify import (
    SWEEP_CSV_HEADER,
    NormDescriptor,
    check_C1,
    check_C3,
    checkpoint_C2,
    lambda_estimate,
    psi,
    psi_linear_form,
    psi_sweep,
    sweep_csv_row,
    theta_estimate,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_TRUNCATION = 3
EXIT_USAGE = 64
EXIT_DOMAIN = 65

_DOMAIN_ERRORS = (
    InvalidArgumentError,
    OutOfDomainError,
    OutOfScopeError,
    PreconditionError,
    BudgetExceededError,
    UnsupportedError,
)

# 設定ファイルと環境変数で上書きできる大域オプション
_GLOBAL_KEYS = ("workers", "q_budget", "y_budget", "seed", "log_level", "output_dir", "certificate_margin",
                "max_growth", "precision_bits", "max_precision_bits", "config")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """使い方の誤りを終了コード 64 にする"""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text: str) -> List[int]:
    return [as_int(x) for x in text.split(",") if x.strip()]


def _rational_list(text: str) -> List[Fraction]:
    return [as_rational(x) for x in text.split(",") if x.strip()]


def _digit_sets(text: str) -> List[tuple]:
    """`0,2;1,2` → [(0, 2), (1, 2)]"""
    return [tuple(_int_list(part)) for part in text.split(";")]


def _emit(payload: Any) -> None:
    sys.stdout.write(dumps(payload) + "\n")


def _out(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


# construct

def cmd_construct(args: argparse.Namespace, config: RunConfig) -> int:
    fn = parse_phi(args.phi)
    plan = ConstructionPlan(
        m=args.m,
        fn=fn,
        mode=ConstructionMode(args.mode),
        growth=GrowthPolicy(args.growth),
        depth=args.depth,
        q_budget=config.q_budget,
        base=args.base,
        digit_sets=_digit_sets(args.digit_sets) if args.digit_sets else None,
        explicit_m=_int_list(args.explicit_m) if args.explicit_m else None,
        margin=config.certificate_margin,
        max_growth=config.max_growth,
        uniform_quotients=args.uniform,
        exponent_growth=as_rational(args.exponent_growth),
    )
    level = args.depth if args.truncation is None else args.truncation
    vector = None
    if plan.mode is ConstructionMode.CANTOR and plan.growth is not GrowthPolicy.EXPONENT_ONLY:
        R = as_rational(args.R) if args.R else None
        seq, vector = construct_in_cantor_set(plan, level, R)
    else:
        seq = build_sequence(plan)
        if seq.materialized:
            vector = assemble_vector(seq, level)

    write_json(_out(config, "sequence.json"), seq.to_json(), config)
    write_json(_out(config, "certificates.json"),
               {"certificates": [c.to_json() for c in seq.certificates]}, config)
    summary: Dict[str, Any] = {"sequence": seq.to_json()}
    if vector is not None:
        write_json(_out(config, "vector.json"), vector.to_json(), config)
        summary["vector"] = {"components": [str(c) for c in vector.components],
                             "q_max_valid": vector.q_max_valid}
    del summary["sequence"]["certificates"]
    _emit(summary)
    passed = all(c.passed for c in seq.certificates)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


# verify

def _load_seq(args: argparse.Namespace):
    path = args.seq or str(Path(args.vec).with_name("sequence.json"))
    return read_sequence(path)


def _phi_for(args: argparse.Namespace, seq=None):
    if args.phi:
        return parse_phi(args.phi)
    if seq is not None and seq.fn_descriptor:
        return parse_phi(seq.fn_descriptor)
    raise InvalidArgumentError("--phi が必要です")


def _report(args: argparse.Namespace, config: RunConfig, payload: Dict[str, Any]) -> None:
    if args.report:
        write_json(args.report, payload, config)
    _emit(payload)


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    vec = read_vector(args.vec)
    norm = NormDescriptor.parse(args.norm)
    budget = {"q_budget": config.q_budget, "workers": config.workers}
    check = args.check

    if check == "sweep" or (check == "psi" and args.qmax is not None):
        Q_max = args.qmax if args.qmax is not None else args.Q
        if Q_max is None:
            raise UsageError("--qmax が必要です")
        points = psi_sweep(vec, Q_max, norm, **budget)
        if args.report:
            write_csv(args.report, SWEEP_CSV_HEADER, [sweep_csv_row(p, vec.m) for p in points], config)
        _emit({"Q_max": Q_max, "drops": len(points), "last": points[-1].to_json() if points else None})
        return EXIT_OK

    if check == "psi":
        if args.Q is None:
            raise UsageError("--Q か --qmax が必要です")
        _report(args, config, psi(vec, args.Q, norm, **budget).to_json())
        return EXIT_OK

    if check == "c1":
        seq = read_sequence(args.seq) if args.seq else None
        fn = _phi_for(args, seq)
        Q_to = args.to if args.to is not None else vec.q_max_valid
        if Q_to is None:
            raise UsageError("--to が必要です")
        factor = as_rational(args.factor) if args.factor else Fraction(1)
        report = check_C1(vec, fn, args.from_, Q_to, norm, factor, **budget)
        _report(args, config, report.to_json())
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED

    if check == "checkpoint":
        seq = _load_seq(args)
        report = checkpoint_C2(vec, seq, args.f, _phi_for(args, seq), config.c2_tolerance, norm, **budget)
        _report(args, config, report.to_json())
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED

    if check == "c3":
        seq = _load_seq(args)
        levels = _int_list(args.levels) if args.levels else list(range(1, seq.depth + 1))
        verdicts = check_C3(vec, seq, as_rational(args.N), levels)
        _report(args, config, {"verdicts": verdicts})
        return EXIT_CHECK_FAILED if any(v["verdict"] == "fail" for v in verdicts) else EXIT_OK

    if check == "theta":
        seq = _load_seq(args)
        _report(args, config, theta_estimate(vec, seq, norm, **budget))
        return EXIT_OK

    if check == "lambda":
        scope = args.qmax if args.qmax is not None else _load_seq(args)
        _report(args, config, lambda_estimate(vec, scope, norm, **budget))
        return EXIT_OK

    if check == "linform":
        if args.Q_star is None:
            raise UsageError("--Q-star が必要です")
        result = psi_linear_form(vec, args.Q_star, y_budget=config.y_budget, workers=config.workers)
        _report(args, config, result.to_json())
        return EXIT_OK

    raise UsageError(f"不明な検証: {check}")


# dims / transfer

_DIMS_NAMES = {"omega": "omega_cantor", "rem": "lemma_rem", "gamma-b": "gamma_b"}


def cmd_dims(args: argparse.Namespace, config: RunConfig) -> int:
    name = _DIMS_NAMES.get(args.formula, args.formula)
    params: Dict[str, Any] = {}
    for key in ("m", "b", "gamma1", "gamma2", "tau", "gamma", "R", "r_exponent", "depth"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.lam is not None:
        params["lambda"] = args.lam
    if args.good is not None:
        params["good"] = args.good
    if args.P:
        params["P"] = _int_list(args.P)
    if args.eps:
        params["eps"] = _rational_list(args.eps)
    _emit(dims_formula(name, **params))
    return EXIT_OK


def cmd_transfer(args: argparse.Namespace, config: RunConfig) -> int:
    action = args.action
    if action == "german":
        result = german_map(TransferParams(args.m, Direction(args.direction),
                                           as_rational(args.X), as_rational(args.U)))
        _emit(result.to_json())
        return EXIT_OK
    if action == "fr":
        chain = fr_chain(args.m, c=args.c, c_star=args.c_star, c_tilde=args.c_tilde)
        _emit(chain.to_json())
        return EXIT_OK
    if action == "kappa":
        _emit(kappa_bt(args.m, c_star=args.c_star, log_c_star=args.log_c_star))
        return EXIT_OK
    if action == "roundtrip":
        result = round_trip_constants(args.m, args.c, args.X)
        _emit(result)
        return EXIT_OK if result["passed"] else EXIT_CHECK_FAILED
    if action == "verify":
        if not args.vec or not args.Q_star:
            raise UsageError("--vec と --Q-star が必要です")
        vec = read_vector(args.vec)
        report = transfer_verify(vec, args.c, _int_list(args.Q_star),
                                 y_budget=config.y_budget, workers=config.workers)
        if args.report:
            write_json(args.report, report, config)
        _emit(report)
        return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED
    raise UsageError(f"不明な transfer コマンド: {action}")


# digits

def cmd_digits(args: argparse.Namespace, config: RunConfig) -> int:
    if args.exponents:
        exponents = _int_list(args.exponents)
    elif args.seq:
        seq = read_sequence(args.seq)
        if not seq.exponents:
            raise InvalidArgumentError("数列に指数列がありません")
        exponents = seq.exponents
    else:
        raise UsageError("--exponents か --seq が必要です")
    params: Dict[str, Any] = {}
    for key in ("gamma", "eps", "gamma1", "gamma2"):
        value = getattr(args, key)
        if value is not None:
            params[key] = as_rational(value)
    if args.psi:
        params["psi"] = parse_phi(args.psi)
    family = build_digit_family(args.kind, exponents, args.m, args.depth, args.base, **params)
    if args.action == "family":
        payload = family.to_json()
        payload["falconer"] = [
            {"coordinate": i, "P": [str(p) for p in family.falconer_data(i)[0]]}
            for i in range(1, family.m + 1)
        ]
        if args.report:
            write_json(args.report, payload, config)
        _emit(payload)
        return EXIT_OK
    vector = sample_member(family, config.seed)
    write_json(_out(config, "vector.json"), vector.to_json(), config)
    _emit({"components": [str(c) for c in vector.components], "seed": config.seed})
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="dirichlet-spectrum", description="ディリクレ・スペクトル検証ツールキット")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON 設定ファイル")
    parser.add_argument("--workers", type=int, help="検証カーネルのプロセス数")
    parser.add_argument("--q-budget", dest="q_budget", type=int, help="ψ の q の探索上限")
    parser.add_argument("--y-budget", dest="y_budget", type=int, help="一次形式の y の探索上限")
    parser.add_argument("--seed", type=int, help="サンプラーの乱数シード")
    parser.add_argument("--margin", dest="certificate_margin", help="証明書の余裕（有理数）")
    parser.add_argument("--max-growth", dest="max_growth", type=int, help="M_n の探索上限")
    parser.add_argument("--precision-bits", dest="precision_bits", type=int, help="比較を始める精度（ビット）")
    parser.add_argument("--max-bits", dest="max_precision_bits", type=int, help="比較の精度の上限（ビット）")
    parser.add_argument("--log-level", dest="log_level", help="ログレベル")
    parser.add_argument("--out", dest="output_dir", help="出力ディレクトリ")
    commands = parser.add_subparsers(dest="command", required=True)

    construct = commands.add_parser("construct", help="数列とベクトルを作る")
    construct.add_argument("--m", type=int, required=True)
    construct.add_argument("--phi", required=True, help="power:c=9/10,tau=1/2 など")
    construct.add_argument("--depth", type=int, default=1)
    construct.add_argument("--mode", choices=[x.value for x in ConstructionMode], default="general")
    construct.add_argument("--growth", choices=[x.value for x in GrowthPolicy], default="minimal-certified")
    construct.add_argument("--explicit-m", dest="explicit_m")
    construct.add_argument("--base", type=int)
    construct.add_argument("--digit-sets", dest="digit_sets", help="0,2;1,2")
    construct.add_argument("--uniform", action="store_true")
    construct.add_argument("--truncation", type=int)
    construct.add_argument("--exponent-growth", dest="exponent_growth", default="2")
    construct.add_argument("--R")
    construct.set_defaults(handler=cmd_construct)

    verify = commands.add_parser("verify", help="総当たり検証")
    verify.add_argument("check", choices=["psi", "sweep", "c1", "checkpoint", "c3", "theta", "lambda", "linform"])
    verify.add_argument("--vec", required=True)
    verify.add_argument("--seq")
    verify.add_argument("--phi")
    verify.add_argument("--norm", default="max")
    verify.add_argument("--Q", type=int)
    verify.add_argument("--qmax", type=int)
    verify.add_argument("--from", dest="from_", type=int, default=1)
    verify.add_argument("--to", type=int)
    verify.add_argument("--factor")
    verify.add_argument("--f", type=int, default=1)
    verify.add_argument("--N", default="2")
    verify.add_argument("--levels")
    verify.add_argument("--Q-star", dest="Q_star", type=int)
    verify.add_argument("--report")
    verify.set_defaults(handler=cmd_verify)

    dims = commands.add_parser("dims", help="次元の公式と定数")
    dims.add_argument("formula", choices=["falconer", "gs0", "ohlele", "hdd", "cosinus", "beides",
                                          "sigma", "omega", "rem", "packing", "gamma-b"])
    dims.add_argument("--m", type=int)
    dims.add_argument("--b", type=int)
    dims.add_argument("--gamma1")
    dims.add_argument("--gamma2")
    dims.add_argument("--lambda", dest="lam")
    dims.add_argument("--tau")
    dims.add_argument("--gamma")
    dims.add_argument("--R")
    dims.add_argument("--r-exponent", dest="r_exponent")
    dims.add_argument("--P")
    dims.add_argument("--eps")
    dims.add_argument("--depth", type=int)
    dims.add_argument("--good", dest="good", action="store_true", default=None)
    dims.add_argument("--not-good", dest="good", action="store_false")
    dims.set_defaults(handler=cmd_dims)

    transfer = commands.add_parser("transfer", help="移行定理の写像と定数")
    transfer.add_argument("action", choices=["german", "fr", "kappa", "verify", "roundtrip"])
    transfer.add_argument("--m", type=int, default=2)
    transfer.add_argument("--direction", choices=[x.value for x in Direction], default="sim-to-lin")
    transfer.add_argument("--X")
    transfer.add_argument("--U")
    transfer.add_argument("--c")
    transfer.add_argument("--c-star", dest="c_star")
    transfer.add_argument("--c-tilde", dest="c_tilde")
    transfer.add_argument("--log-c-star", dest="log_c_star")
    transfer.add_argument("--vec")
    transfer.add_argument("--Q-star", dest="Q_star", help="10,20,40")
    transfer.add_argument("--report")
    transfer.set_defaults(handler=cmd_transfer)

    digits = commands.add_parser("digits", help="桁集合族")
    digits.add_argument("action", choices=["family", "sample"])
    digits.add_argument("--kind", choices=["S", "Qfamily", "Q1star", "Jschedule"], required=True)
    digits.add_argument("--m", type=int, required=True)
    digits.add_argument("--depth", type=int, default=1)
    digits.add_argument("--base", type=int, default=2)
    digits.add_argument("--exponents")
    digits.add_argument("--seq")
    digits.add_argument("--gamma")
    digits.add_argument("--eps")
    digits.add_argument("--gamma1")
    digits.add_argument("--gamma2")
    digits.add_argument("--psi")
    digits.add_argument("--report")
    digits.set_defaults(handler=cmd_digits)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, key) for key in _GLOBAL_KEYS if key != "config"}
    overrides["command"] = args.command
    overrides["parameters"] = {
        key: value for key, value in sorted(vars(args).items())
        if key not in _GLOBAL_KEYS and key not in ("command", "handler")
        and isinstance(value, (str, int, float, bool)) and value is not None
    }
    return load_config(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"エラー: {e}\n")
        return EXIT_USAGE

    try:
        config = _resolve_config(args)
    except ToolkitError as e:
        sys.stderr.write(f"エラー: {e}\n")
        return EXIT_DOMAIN
    logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.INFO), stream=sys.stderr)

    handler: Callable[[argparse.Namespace, RunConfig], int] = args.handler
    try:
        with bit_budget(config.precision_bits, config.max_precision_bits):
            return handler(args, config)
    except UsageError as e:
        sys.stderr.write(f"エラー: {e}\n")
        return EXIT_USAGE
    except ConstructionInfeasibleError as e:
        failed = e.report.failed_checks if e.report is not None else []
        logger.error(f"構成失敗: {e} (失敗した証明書: {failed})")
        return EXIT_CHECK_FAILED
    except TruncationInsufficientError as e:
        logger.error(f"打ち切り不足: {e} (必要な段: {e.required_level})")
        return EXIT_TRUNCATION
    except IndeterminateComparisonError as e:
        logger.error(f"比較が決定できません: {e}")
        return EXIT_CHECK_FAILED
    except _DOMAIN_ERRORS as e:
        logger.error(f"入力エラー: {e}")
        return EXIT_DOMAIN
    except (OSError, KeyError, ValueError) as e:
        logger.error(f"入力を読めません: {e!r}")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
