"""Forward spectrum simulation and recovery of shifts/couplings from a trace.

The forward problem maps Hamiltonian parameters to a broadened spectrum; the
inverse problem adjusts a chosen subset of those parameters until the
simulated trace matches a target trace in the least-squares sense.

Fitting works on broadened traces rather than line lists, so no line
assignment is needed. The optimizer is a bounded Nelder-Mead simplex run in
sweeps: each sweep restarts from the best point so far with a fresh,
smaller simplex, and fitting stops once a sweep improves the objective by
less than ``tol_f``. Parameters are scaled to Hz internally (shifts by the
isotope frequency in MHz) so one simplex tolerance fits all of them.

Narrow lines make the raw objective flat away from the answer and full of
local minima. The fit therefore runs coarse to fine: in each stage both the
simulated and the target trace are convolved with the same extra Lorentzian
(``smoothing_hz``), which keeps the true parameters a zero of the objective
while widening its basin. The last stage always uses the unsmoothed
objective.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyChannel,
    GridMismatch,
    InvalidParameter,
    NoFreeParameters,
    NonFiniteObjective,
    UnknownLabel,
)
from .hamiltonian import CouplingMode
from .spectrum import SpectrumTrace, exact_lines, lorentzian, render_lineshape
from .spinsys import SpinSystem, get_isotope

__all__ = [
    "FreeParameter",
    "ParameterSpec",
    "FitSettings",
    "FitResult",
    "parse_parameter",
    "apply_parameters",
    "forward_trace",
    "objective",
    "fit_parameters",
]


@dataclass(frozen=True)
class FreeParameter:
    kind: str  # "shift" (ppm) or "j" (Hz)
    labels: tuple[str, ...]
    initial: float
    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.kind not in ("shift", "j"):
            raise InvalidParameter(f"unknown parameter kind {self.kind!r}")
        if len(self.labels) != (1 if self.kind == "shift" else 2):
            raise InvalidParameter(f"wrong number of labels for {self.kind} parameter")
        if not self.lower <= self.initial <= self.upper:
            raise InvalidParameter(f"{self.name}: need lower <= initial <= upper")

    @property
    def name(self) -> str:
        return f"{self.kind}:{'-'.join(self.labels)}"


@dataclass(frozen=True)
class ParameterSpec:
    params: tuple[FreeParameter, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))

    def __len__(self):
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def initial(self) -> np.ndarray:
        return np.array([p.initial for p in self.params], dtype=float)

    def check(self, sys: SpinSystem) -> None:
        if not self.params:
            raise NoFreeParameters("no free parameters given")
        for p in self.params:
            for lab in p.labels:
                sys.nucleus(lab)
            if p.kind == "j" and not sys.has_coupling(*p.labels):
                raise UnknownLabel("-".join(p.labels))

    def scales(self, sys: SpinSystem) -> np.ndarray:
        out = []
        for p in self.params:
            if p.kind == "shift":
                out.append(sys.isotope_frequency_mhz(sys.nucleus(p.labels[0]).isotope))
            else:
                out.append(1.0)
        return np.array(out)


_PARAM_RE = re.compile(
    r"^(?P<kind>shift|j):(?P<labels>[A-Za-z0-9_']+(?:-[A-Za-z0-9_']+)?)"
    r"(?:=(?P<init>[^:]*)(?::(?P<lo>[^:]+):(?P<hi>[^:]+))?)?$"
)


def parse_parameter(text: str, sys: SpinSystem, rel_width: float = 0.5) -> FreeParameter:
    """Parse ``kind:labels[=initial[:lower:upper]]``.

    Examples: ``j:HA-HB``, ``j:HA-HB=12``, ``shift:HA=0.1:0.0:0.2``. A missing
    initial value is taken from ``sys``; missing bounds default to
    ``initial +- rel_width*|initial|`` (at least 1 Hz or 0.01 ppm).
    """
    m = _PARAM_RE.match(text.strip())
    if not m:
        raise InvalidParameter(f"cannot parse parameter {text!r}")
    kind = m["kind"]
    labels = tuple(m["labels"].split("-"))
    for lab in labels:
        sys.nucleus(lab)
    try:
        if m["init"]:
            init = float(m["init"])
        elif kind == "shift":
            init = sys.nucleus(labels[0]).shift_ppm
            if init is None:
                raise InvalidParameter(f"{text}: no shift in the file to start from")
        else:
            if len(labels) != 2 or not sys.has_coupling(*labels):
                raise UnknownLabel("-".join(labels))
            init = sys.j(*labels)
        if m["lo"] is not None:
            lo, hi = float(m["lo"]), float(m["hi"])
        else:
            width = max(rel_width * abs(init), 0.01 if kind == "shift" else 1.0)
            lo, hi = init - width, init + width
    except ValueError:
        raise InvalidParameter(f"bad number in {text!r}") from None
    return FreeParameter(kind, labels, init, lo, hi)


@dataclass(frozen=True)
class FitSettings:
    carrier_ppm: Mapping[str, float] = field(default_factory=lambda: {"1H": 0.0})
    channel: str = "1H"
    fwhm_hz: float = 0.5
    mode: CouplingMode = CouplingMode.ISOTROPIC
    grid: Sequence[float] | None = None
    tol_x: float = 1e-4
    tol_f: float = 1e-12
    max_iterations: int = 5000
    max_sweeps: int = 50
    smoothing_hz: tuple[float, ...] = (16.0, 4.0, 1.0)
    starts: int = 1
    seed: int = 0


@dataclass
class FitResult:
    names: list[str]
    values: dict[str, float]
    initial: dict[str, float]
    objective: float
    initial_objective: float
    iterations: int
    sweeps: int
    converged: bool
    history: list[float]  # best objective so far, initially and after each start
    at_lower: dict[str, bool]
    at_upper: dict[str, bool]

    def report(self) -> str:
        lines = []
        for name in self.names:
            lines.append(f"param={name}")
            lines.append(f"value={self.values[name]!r}")
            lines.append(f"initial={self.initial[name]!r}")
            lines.append(f"at_lower={str(self.at_lower[name]).lower()}")
            lines.append(f"at_upper={str(self.at_upper[name]).lower()}")
        lines.append(f"objective={self.objective!r}")
        lines.append(f"initial_objective={self.initial_objective!r}")
        lines.append(f"iterations={self.iterations}")
        lines.append(f"sweeps={self.sweeps}")
        lines.append(f"converged={str(self.converged).lower()}")
        return "\n".join(lines) + "\n"


def apply_parameters(template: SpinSystem, spec: ParameterSpec, values: Sequence[float]) -> SpinSystem:
    shifts, js = {}, {}
    for p, v in zip(spec.params, values):
        if p.kind == "shift":
            shifts[p.labels[0]] = float(v)
        else:
            js[p.labels] = float(v)
    out = template
    if shifts:
        out = out.with_shifts(shifts)
    if js:
        out = out.with_couplings(js)
    return out


def forward_trace(
    sys: SpinSystem,
    carrier_ppm: Mapping[str, float],
    channel,
    fwhm_hz: float,
    grid: Sequence[float],
    mode: CouplingMode | str = CouplingMode.ISOTROPIC,
) -> SpectrumTrace:
    """Exact spectrum rendered with Lorentzian lines on ``grid``.

    A channel without nuclei gives a flat zero trace.
    """
    try:
        lines = exact_lines(sys, carrier_ppm, channel, mode)
    except EmptyChannel:
        lines = ()
    return render_lineshape(lines, fwhm_hz, grid=grid)


def _simulate(template, spec, values, target, settings) -> SpectrumTrace:
    sys = apply_parameters(template, spec, values)
    return forward_trace(
        sys, settings.carrier_ppm, settings.channel, settings.fwhm_hz, target.grid, settings.mode
    )


def _check_grid(target: SpectrumTrace, settings: FitSettings) -> None:
    if settings.grid is not None:
        grid = np.asarray(settings.grid, dtype=float)
        if grid.shape != target.grid.shape or not np.allclose(grid, target.grid, rtol=0, atol=1e-9):
            raise GridMismatch("simulation grid differs from the target grid")


def objective(
    template: SpinSystem,
    spec: ParameterSpec,
    values: Sequence[float],
    target: SpectrumTrace,
    settings: FitSettings,
) -> float:
    """Sum of squared amplitude differences over the target grid."""
    _check_grid(target, settings)
    sim = _simulate(template, spec, values, target, settings)
    return float(np.sum((sim.amplitude - target.amplitude) ** 2))


def _smoother(grid: np.ndarray, extra_fwhm: float):
    """Convolution with a unit-area Lorentzian on a uniform grid, or None."""
    from scipy.signal import fftconvolve  # lazy: scipy dominates CLI startup

    steps = np.diff(grid)
    if extra_fwhm <= 0 or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        return None
    n = len(grid)
    dx = steps[0]
    kernel = lorentzian(np.arange(-(n - 1), n) * dx, 0.0, extra_fwhm) * dx
    return lambda y: fftconvolve(y, kernel, mode="same")


def _run_start(f, x0, lo, hi, step0, settings, budget, rng):
    """Sweeps of bounded Nelder-Mead from one start point."""
    from scipy.optimize import minimize

    best_x = x0.copy()
    best_f = f(best_x)
    history = [best_f]
    iterations = sweeps = 0
    converged = False
    step = step0.copy()
    while sweeps < settings.max_sweeps and iterations < budget:
        start = best_x.copy()
        if sweeps > 0:
            start = np.clip(start + rng.uniform(-0.5, 0.5, len(start)) * step, lo, hi)
        simplex = [start]
        for i in range(len(start)):
            v = start.copy()
            v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
            simplex.append(v)
        res = minimize(
            f,
            start,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options=dict(
                xatol=settings.tol_x,
                fatol=settings.tol_f,
                maxiter=budget - iterations,
                initial_simplex=np.array(simplex),
            ),
        )
        iterations += int(res.nit)
        sweeps += 1
        before = best_f
        if res.fun < best_f:
            best_f = float(res.fun)
            best_x = np.asarray(res.x, dtype=float)
        history.append(best_f)
        if before - best_f < settings.tol_f:
            converged = True
            break
        step = np.maximum(step * 0.2, 10 * settings.tol_x)
    return best_x, best_f, iterations, sweeps, converged, history


def fit_parameters(
    template: SpinSystem,
    spec: ParameterSpec,
    target: SpectrumTrace,
    settings: FitSettings | None = None,
) -> FitResult:
    """Least-squares fit of the free parameters in ``spec`` to ``target``.

    With ``settings.starts > 1`` extra starts are drawn uniformly within the
    bounds from ``settings.seed``; the best result wins (ties: earliest start).
    """
    settings = settings or FitSettings()
    spec.check(template)
    get_isotope(settings.channel)
    scale = spec.scales(template)
    lo = np.array([p.lower for p in spec.params]) * scale
    hi = np.array([p.upper for p in spec.params]) * scale
    x0 = spec.initial * scale

    def values_of(x):
        return np.asarray(x, dtype=float) / scale

    def residual(x):
        values = values_of(x)
        sim = _simulate(template, spec, values, target, settings)
        diff = sim.amplitude - target.amplitude
        if not np.all(np.isfinite(diff)):
            raise NonFiniteObjective(dict(zip(spec.names, map(float, values))))
        return diff

    def f(x):
        return float(np.sum(residual(x) ** 2))

    _check_grid(target, settings)
    stages = []
    for w in settings.smoothing_hz:
        smooth = _smoother(target.grid, w)
        if smooth is not None:
            stages.append(lambda x, smooth=smooth: float(np.sum(smooth(residual(x)) ** 2)))
    stages.append(f)

    width = hi - lo
    step0 = np.where(width > 0, 0.05 * width, 10 * settings.tol_x)
    rng = np.random.default_rng(settings.seed)
    starts = [x0] + [rng.uniform(lo, hi) for _ in range(max(settings.starts, 1) - 1)]

    initial_objective = f(x0)
    best_x, best_f = x0, initial_objective
    converged = False
    total_iter = total_sweeps = 0
    history = [initial_objective]
    for k, start in enumerate(starts):
        x, conv = start, False
        # nothing to gain from smoothing when already at a zero of the objective
        todo = stages if f(start) > settings.tol_f else stages[-1:]
        for g in todo:
            budget = settings.max_iterations - total_iter
            if budget <= 0:
                conv = False
                break
            x, _, nit, nsw, conv, _ = _run_start(g, x, lo, hi, step0, settings, budget, rng)
            total_iter += nit
            total_sweeps += nsw
        current = f(x)
        # strict improvement only, so ties keep the earliest start
        if current < best_f or k == 0:
            if current < best_f:
                best_x, best_f = x, current
            converged = conv
        history.append(best_f)

    values = values_of(best_x)
    names = spec.names
    tol = 1e-12
    return FitResult(
        names=names,
        values=dict(zip(names, map(float, values))),
        initial=dict(zip(names, map(float, spec.initial))),
        objective=float(best_f),
        initial_objective=float(initial_objective),
        iterations=total_iter,
        sweeps=total_sweeps,
        converged=bool(converged),
        history=[float(h) for h in history],
        at_lower={n: bool(v - p.lower <= tol * max(1.0, abs(p.lower))) for n, v, p in zip(names, values, spec.params)},
        at_upper={n: bool(p.upper - v <= tol * max(1.0, abs(p.upper))) for n, v, p in zip(names, values, spec.params)},
    )
