"""Command-line interface.

Subcommands: ``retract`` (orthonormalize a matrix), ``path`` (sample the
homotopy), ``qr`` (positive-diagonal QR), ``check`` (equivariance reports)
and ``selftest`` (the full invariant suite). Matrices are read and written in
the shared JSON/CSV formats with round-trip-exact numbers.

Exit codes: 0 success, 1 property failure, 2 parse error, 3 rank failure,
4 shape mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import selftest as selftest_mod
from .core import orthonormality_defect, validate_injective
from .equivariance import (
    DEFAULT_T_SAMPLES,
    check_equivariance,
    random_rotation,
    report_to_json_obj,
)
from .errors import (
    DimensionError,
    InternalRankLossError,
    MatrixFormatError,
    NonFiniteError,
    NumericalRankLossError,
    RankDeficientError,
    StiefelRetractError,
)
from .gram_schmidt import qr_decompose, retract
from .homotopy import path_to_csv, path_to_json_obj, trace_path
from .matio import (
    format_matrix_blocks_csv,
    format_matrix_csv,
    matrix_to_object,
    parse_matrix_csv,
    parse_matrix_json,
)
from .sampling import generate_injective

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_PARSE = 2
EXIT_RANK = 3
EXIT_SHAPE = 4

THREADS_ENV = "STIEFEL_RETRACT_THREADS"


@dataclass
class RunConfig:
    subcommand: str
    input_path: str | None = None
    output_path: str | None = None
    format: str = "json"
    seed: int | None = None
    steps: int = 11
    tolerance: float = 1e-9
    dims: tuple[int, int] | None = None
    batch: int = 1


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        m_str, d_str = text.lower().split("x")
        m, d = int(m_str), int(d_str)
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like MxD, got {text!r}")
    if m < 1 or d < 1:
        raise argparse.ArgumentTypeError(f"dims must be positive, got {text!r}")
    return m, d


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stiefel-retract",
        description="Gram-Schmidt retraction onto the Stiefel manifold, "
        "its straight-line homotopy, positive-diagonal QR and "
        "rotation-equivariance checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_io(p, with_steps=False, with_batch=False):
        p.add_argument("--input", dest="input_path", metavar="PATH")
        p.add_argument("--dims", type=_parse_dims, metavar="MxD")
        p.add_argument("--output", dest="output_path", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int)
        p.add_argument("--tolerance", type=float, default=1e-9)
        if with_steps:
            p.add_argument("--steps", type=int, default=11)
        if with_batch:
            p.add_argument("--batch", type=int, default=1)

    add_io(sub.add_parser("retract", help="orthonormalize a matrix"))
    add_io(sub.add_parser("path", help="sample the homotopy"), with_steps=True)
    add_io(sub.add_parser("qr", help="positive-diagonal QR of a square matrix"))
    add_io(sub.add_parser("check", help="equivariance reports"), with_batch=True)
    st = sub.add_parser("selftest", help="run the full invariant suite")
    st.add_argument("--seed", type=int)
    return parser


def parse_config(argv) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(subcommand=ns.subcommand)
    for field in ("input_path", "output_path", "format", "seed", "steps", "tolerance", "dims", "batch"):
        if hasattr(ns, field):
            value = getattr(ns, field)
            if value is not None:
                setattr(cfg, field, value)
    if cfg.subcommand in ("retract", "path", "qr", "check"):
        if (cfg.input_path is None) == (cfg.dims is None):
            parser.error("provide exactly one of --input and --dims")
        if cfg.dims is not None and cfg.seed is None:
            parser.error("--seed is required when generating from --dims")
    if cfg.steps < 2:
        parser.error("--steps must be at least 2")
    if cfg.tolerance <= 0.0:
        parser.error("--tolerance must be positive")
    if cfg.batch < 1:
        parser.error("--batch must be at least 1")
    return cfg


def _max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _load_matrix(cfg: RunConfig) -> np.ndarray:
    text = Path(cfg.input_path).read_text()
    if cfg.format == "json":
        return parse_matrix_json(text)
    return parse_matrix_csv(text)


def _obtain_input(cfg: RunConfig) -> np.ndarray:
    if cfg.input_path is not None:
        return _load_matrix(cfg)
    m, d = cfg.dims
    rng = np.random.default_rng(cfg.seed)
    alpha, resamples = generate_injective(rng, m, d)
    if resamples:
        print(f"resampled {resamples} draw(s) that failed validation", file=sys.stderr)
    return alpha.matrix


def _write_output(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_retract(cfg: RunConfig) -> int:
    alpha = validate_injective(_obtain_input(cfg))
    frame = retract(alpha)
    diagnostics = {
        "ortho_defect": orthonormality_defect(frame.matrix),
        "condition_estimate": alpha.condition_estimate,
    }
    if cfg.format == "json":
        payload = json.dumps({"frame": matrix_to_object(frame.matrix), "diagnostics": diagnostics})
        _write_output(cfg, payload + "\n")
    else:
        _write_output(cfg, format_matrix_csv(frame.matrix))
        print(json.dumps(diagnostics), file=sys.stderr)
    return EXIT_OK


def cmd_path(cfg: RunConfig) -> int:
    alpha = validate_injective(_obtain_input(cfg))
    path = trace_path(alpha, cfg.steps)
    if cfg.format == "json":
        _write_output(cfg, json.dumps(path_to_json_obj(path)) + "\n")
    else:
        _write_output(cfg, path_to_csv(path))
    return EXIT_OK


def cmd_qr(cfg: RunConfig) -> int:
    raw = _obtain_input(cfg)
    if raw.shape[0] != raw.shape[1]:
        raise DimensionError("qr requires a square matrix")
    alpha = validate_injective(raw)
    q, r = qr_decompose(alpha)
    defect = float(np.max(np.abs(q.matrix @ r.to_dense() - alpha.matrix)))
    if cfg.format == "json":
        payload = json.dumps(
            {
                "q": matrix_to_object(q.matrix),
                "r": matrix_to_object(r.to_dense()),
                "reconstruction_defect": defect,
            }
        )
        _write_output(cfg, payload + "\n")
    else:
        _write_output(cfg, format_matrix_blocks_csv([q.matrix, r.to_dense()]))
        print(json.dumps({"reconstruction_defect": defect}), file=sys.stderr)
    return EXIT_OK


def _check_item(cfg: RunConfig, index: int, fixed: np.ndarray | None):
    seed = (cfg.seed or 0) + index
    rng = np.random.default_rng(seed)
    if fixed is None:
        m, d = cfg.dims
        alpha, _ = generate_injective(rng, m, d)
    else:
        alpha = validate_injective(fixed)
    rotation_seed = int(rng.integers(0, 2**63))
    o = random_rotation(alpha.matrix.shape[0], rotation_seed)
    return check_equivariance(alpha, o, DEFAULT_T_SAMPLES, cfg.tolerance)


def cmd_check(cfg: RunConfig) -> int:
    fixed = _load_matrix(cfg) if cfg.input_path is not None else None
    indices = range(cfg.batch)
    if cfg.batch > 1 and _max_workers() > 1:
        with ThreadPoolExecutor(max_workers=min(_max_workers(), cfg.batch)) as pool:
            reports = list(pool.map(lambda i: _check_item(cfg, i, fixed), indices))
    else:
        reports = [_check_item(cfg, i, fixed) for i in indices]
    lines = [json.dumps(report_to_json_obj(rep)) for rep in reports]
    _write_output(cfg, "\n".join(lines) + "\n")
    passed = sum(rep.passed for rep in reports)
    print(f"passed {passed}/{len(reports)}")
    return EXIT_OK if passed == len(reports) else EXIT_PROPERTY


def cmd_selftest(cfg: RunConfig) -> int:
    seed = cfg.seed if cfg.seed is not None else selftest_mod.DEFAULT_SEED
    results = selftest_mod.run_all(seed)
    print(selftest_mod.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


DISPATCH = {
    "retract": cmd_retract,
    "path": cmd_path,
    "qr": cmd_qr,
    "check": cmd_check,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    cfg = parse_config(argv)
    try:
        return DISPATCH[cfg.subcommand](cfg)
    except (MatrixFormatError, NonFiniteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (RankDeficientError, NumericalRankLossError, InternalRankLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StiefelRetractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
