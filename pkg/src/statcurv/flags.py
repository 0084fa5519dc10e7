import dataclasses
from pathlib import Path
from typing import Annotated

import cyclopts

from .output import OutputFormat

LogLevelFlag = Annotated[
    str,
    cyclopts.Parameter(
        name=["--log-level"],
        help="Log level (debug, info, warning, error, critical)",
    ),
]

DEFAULT_LOG_LEVEL = "warning"

StructureToleranceFlag = Annotated[
    float | None,
    cyclopts.Parameter(
        name=["--tol"],
        help="Tolerance for the torsion, Codazzi and duality residuals (default 1e-9). Set via the .statcurv.toml config file or the --tol flag",
    ),
]

IdentityToleranceFlag = Annotated[
    float | None,
    cyclopts.Parameter(
        name=["--identity-tol"],
        help="Tolerance for the σ = σ*, R/R*, W/W* and W-forms residuals (default 1e-9). Set via the .statcurv.toml config file or the --identity-tol flag",
    ),
]

FlatnessToleranceFlag = Annotated[
    float | None,
    cyclopts.Parameter(
        name=["--tol"],
        help="Flatness tolerance on the normalized W residual (default 1e-8). Set via the .statcurv.toml config file or the --tol flag",
    ),
]


@cyclopts.Parameter(name="*")
@dataclasses.dataclass(frozen=True)
class PlanFlags:
    """Flags for the sample plan (seed, points, trials)."""

    seed: Annotated[
        int | None,
        cyclopts.Parameter(
            name=["--seed"],
            help="Seed for the random test vectors. Set via the STATCURV_SEED environment variable, the .statcurv.toml config file or the --seed flag",
        ),
    ] = None
    points: Annotated[
        int | None,
        cyclopts.Parameter(
            name=["--points"],
            help="Number of low-discrepancy sample points. Set via the STATCURV_POINTS environment variable, the .statcurv.toml config file or the --points flag",
        ),
    ] = None
    trials: Annotated[
        int | None,
        cyclopts.Parameter(
            name=["--trials"],
            help="Random vector quadruples per point. Set via the STATCURV_TRIALS environment variable, the .statcurv.toml config file or the --trials flag",
        ),
    ] = None


@cyclopts.Parameter(name="*")
@dataclasses.dataclass(frozen=True)
class CommonFlags:
    """Flags shared by every command."""

    threads: Annotated[
        int | None,
        cyclopts.Parameter(
            name=["--threads"],
            help="Worker threads for point sweeps. Set via the STATCURV_THREADS environment variable, the .statcurv.toml config file or the --threads flag",
        ),
    ] = None
    output_format: Annotated[
        OutputFormat,
        cyclopts.Parameter(
            name=["--output-format", "-o"],
            help="Output format",
        ),
    ] = OutputFormat.json
    out: Annotated[
        Path | None,
        cyclopts.Parameter(
            name=["--out"],
            help="Write the report to this file instead of stdout",
        ),
    ] = None
    timing: Annotated[
        bool,
        cyclopts.Parameter(
            name=["--timing"],
            help="Include wall time in the report (reports are then no longer reproducible byte for byte)",
            negative=(),
        ),
    ] = False
    log_level: LogLevelFlag = DEFAULT_LOG_LEVEL
