import contextlib
import contextvars
import logging
import sys
import time
from collections.abc import Iterator, Sequence
from pathlib import Path
from typing import Annotated, TextIO

import cyclopts
from rich.console import Console
from rich.markup import escape
from rich.traceback import install as install_rich_traceback

from . import config, equivalence, flags, gallery, output, service
from .conformal_projective import DimensionError, Verdict
from .expr import ExprError
from .sampling import PointError
from .spec_types import SpecError
from .structure import StructureError

error_console = Console(stderr=True)
install_rich_traceback(console=error_console)

app = cyclopts.App(
    name="statcurv",
    help="Numerical checks of curvature identities on statistical manifolds",
    error_console=error_console,
)

app.register_install_completion_command()

gallery_app = cyclopts.App(name="gallery", help="Built-in example structures")
app.command(gallery_app)

SpecArgument = Annotated[
    str,
    cyclopts.Parameter(
        help="A spec file path, or gallery:<name> for a built-in structure",
    ),
]

# Exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

_INPUT_ERRORS = (
    config.ConfigError,
    SpecError,
    ExprError,
    PointError,
    StructureError,
    DimensionError,
    equivalence.TransformError,
    gallery.GalleryError,
    service.AppError,
)

_command: contextvars.ContextVar[tuple[str, ...]] = contextvars.ContextVar(
    "command", default=()
)


class ChecksFailed(Exception): ...


@app.command(name="validate")
def validate(
    spec: SpecArgument,
    *,
    tol: flags.StructureToleranceFlag = None,
    common_flags: flags.CommonFlags = flags.CommonFlags(),
    plan_flags: flags.PlanFlags = flags.PlanFlags(),
) -> None:
    """Check SPD, torsion-freeness, Codazzi symmetry and duality on sample points"""
    started = time.perf_counter()
    _setup_logging(common_flags.log_level)
    lab = _get_lab_service(common_flags, plan_flags, tolerance=tol)
    report = lab.validate(spec)
    _finish(report, common_flags, started)


@app.command(name="curvature")
def curvature(
    spec: SpecArgument,
    *,
    at: Annotated[
        str,
        cyclopts.Parameter(
            name=["--at"],
            help="Chart point as comma-separated coordinates, e.g. 0.1,0,0,0",
        ),
    ],
    common_flags: flags.CommonFlags = flags.CommonFlags(),
) -> None:
    """Show R, R*, Ricci tensors and operators, σ, σ* and L, L* at one point"""
    started = time.perf_counter()
    _setup_logging(common_flags.log_level)
    report = _get_lab_service(common_flags).curvature_at_point(spec, _parse_point(at))
    _finish(report, common_flags, started)


@app.command(name="identities")
def identities(
    spec: SpecArgument,
    *,
    identity_tol: flags.IdentityToleranceFlag = None,
    common_flags: flags.CommonFlags = flags.CommonFlags(),
    plan_flags: flags.PlanFlags = flags.PlanFlags(),
) -> None:
    """Run the σ = σ*, R/R*, W/W* and W-forms identity checks"""
    started = time.perf_counter()
    _setup_logging(common_flags.log_level)
    lab = _get_lab_service(common_flags, plan_flags, identity_tolerance=identity_tol)
    report = lab.identities(spec)
    _finish(report, common_flags, started)


@app.command(name="flatness")
def flatness(
    spec: SpecArgument,
    *,
    tol: flags.FlatnessToleranceFlag = None,
    expect: Annotated[
        Verdict | None,
        cyclopts.Parameter(
            name=["--expect"],
            help="Fail with exit code 1 unless the verdict matches",
        ),
    ] = None,
    common_flags: flags.CommonFlags = flags.CommonFlags(),
    plan_flags: flags.PlanFlags = flags.PlanFlags(),
) -> None:
    """Decide conformal-projective flatness (W = 0) on sample points"""
    started = time.perf_counter()
    _setup_logging(common_flags.log_level)
    lab = _get_lab_service(common_flags, plan_flags, flatness_tolerance=tol)
    report = lab.flatness(spec, expect=expect)
    _finish(report, common_flags, started)


@app.command(name="transform")
def transform(
    spec: SpecArgument,
    *,
    phi: Annotated[
        str | None,
        cyclopts.Parameter(name=["--phi"], help="The function φ (expression)"),
    ] = None,
    psi: Annotated[
        str | None,
        cyclopts.Parameter(
            name=["--psi"],
            help="The function ψ of a conformal-projective change (expression)",
        ),
    ] = None,
    alpha: Annotated[
        float | None,
        cyclopts.Parameter(
            name=["--alpha"],
            help="Apply an α-conformal change with φ instead of a conformal-projective one",
        ),
    ] = None,
    emit: Annotated[
        Path | None,
        cyclopts.Parameter(
            name=["--emit"],
            help="Write the transformed structure as a spec file, when it has a closed form",
        ),
    ] = None,
    tol: flags.StructureToleranceFlag = None,
    common_flags: flags.CommonFlags = flags.CommonFlags(),
    plan_flags: flags.PlanFlags = flags.PlanFlags(),
) -> None:
    """Apply a conformal-projective or α-conformal change and check the result"""
    started = time.perf_counter()
    _setup_logging(common_flags.log_level)
    params = _get_transform_params(phi, psi, alpha)
    lab = _get_lab_service(common_flags, plan_flags, tolerance=tol)
    report = lab.transform(spec, params, emit)
    _finish(report, common_flags, started)


@gallery_app.default
@gallery_app.command(name="list")
def gallery_list(
    *,
    common_flags: flags.CommonFlags = flags.CommonFlags(),
) -> None:
    """List the built-in structures"""
    _setup_logging(common_flags.log_level)
    listings = _get_lab_service(common_flags).gallery_list()
    with _open_out(common_flags.out) as f:
        output.get_output(common_flags.output_format, f).print_gallery(listings)


@gallery_app.command(name="emit")
def gallery_emit(
    name: Annotated[
        str,
        cyclopts.Parameter(
            help="Gallery entry, e.g. poincare_ball4 or perturbed_euclidean4"
        ),
    ],
    *,
    out: Annotated[
        Path | None,
        cyclopts.Parameter(name=["--out"], help="Write the spec to this file"),
    ] = None,
    log_level: flags.LogLevelFlag = flags.DEFAULT_LOG_LEVEL,
) -> None:
    """Write a built-in structure as a spec file"""
    _setup_logging(log_level)
    text = service.LabService(config.Settings()).gallery_emit(name)
    with _open_out(out) as f:
        f.write(text + "\n")


def _setup_logging(log_level: str) -> None:
    logging.basicConfig(
        level=log_level.upper(),
        format="%(levelname)s [%(name)s] %(message)s",
    )


def _get_lab_service(
    common_flags: flags.CommonFlags,
    plan_flags: flags.PlanFlags = flags.PlanFlags(),
    *,
    tolerance: float | None = None,
    identity_tolerance: float | None = None,
    flatness_tolerance: float | None = None,
) -> service.LabService:
    settings = config.get_settings(
        threads=common_flags.threads,
        seed=plan_flags.seed,
        points=plan_flags.points,
        trials=plan_flags.trials,
        tolerance=tolerance,
        identity_tolerance=identity_tolerance,
        flatness_tolerance=flatness_tolerance,
    )
    return service.LabService(settings)


def _get_transform_params(
    phi: str | None, psi: str | None, alpha: float | None
) -> equivalence.CPParams | equivalence.AlphaParams:
    if alpha is None:
        return equivalence.CPParams(phi=phi or "0", psi=psi or "0")
    if psi is not None:
        raise service.AppError("--psi cannot be combined with --alpha")
    return equivalence.AlphaParams(alpha=alpha, phi=phi or "0")


def _parse_point(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as e:
        raise PointError(f"invalid point {text!r}: {e}") from e


@contextlib.contextmanager
def _open_out(path: Path | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    try:
        f = open(path, "w")
    except OSError as e:
        raise service.AppError(f"cannot write {path}: {e.strerror}") from e
    with f:
        yield f


def _finish(
    report: service.RunReport, common_flags: flags.CommonFlags, started: float
) -> None:
    wall_time = time.perf_counter() - started if common_flags.timing else None
    report = report.model_copy(
        update={"command": list(_command.get()), "wall_time_seconds": wall_time}
    )
    with _open_out(common_flags.out) as f:
        output.get_output(common_flags.output_format, f).print_report(report)
    if not report.passed:
        raise ChecksFailed(f"checks failed for {report.spec}")


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    tokens = list(argv) if argv is not None else sys.argv[1:]
    token = _command.set(("statcurv", *tokens))
    try:
        app(tokens, exit_on_error=False)
    except cyclopts.CycloptsError:
        # cyclopts has already printed the usage error
        return EXIT_INPUT_ERROR
    except ChecksFailed as e:
        error_console.print(f"[red]{escape(str(e))}[/red]")
        return EXIT_CHECK_FAILED
    except _INPUT_ERRORS as e:
        error_console.print(f"[red]Error:[/red] {escape(str(e))}")
        return EXIT_INPUT_ERROR
    except SystemExit as e:
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_INPUT_ERROR
    finally:
        _command.reset(token)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
