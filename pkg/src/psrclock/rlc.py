"""Closed-form series-RLC relations for the resonant clock tank.

A tank is the branch's inductor in series with the lumped resistance of
switch, wiring and coil, loaded by the aggregated tree capacitance. The
functions here are the analytic side of the package: they set the target
values for tuning and serve as the oracle the numerical engine is checked
against.
"""

import enum
import math
from dataclasses import dataclass

from .errors import UnsupportedRegimeError, ValidationError

INFINITE_Q = math.inf

# relative tolerance for declaring R^2 == 4L/C
CRITICAL_RTOL = 1e-12


class Damping(enum.Enum):
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"


@dataclass(frozen=True)
class RlcTank:
    """Series RLC tank: ``inductance`` [H], ``capacitance`` [F],
    ``resistance`` [ohm]."""

    inductance: float
    capacitance: float
    resistance: float = 0.0

    def __post_init__(self):
        if not self.inductance > 0:
            raise ValidationError(f"non-positive inductance: {self.inductance!r}")
        if not self.capacitance > 0:
            raise ValidationError(f"non-positive capacitance: {self.capacitance!r}")
        if not self.resistance >= 0:
            raise ValidationError(f"negative resistance: {self.resistance!r}")

    @property
    def alpha(self) -> float:
        """Neper frequency R/(2L)."""
        return self.resistance / (2.0 * self.inductance)

    @property
    def omega0(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)

    @property
    def omega_d(self) -> float:
        """Damped angular frequency; zero unless underdamped."""
        w2 = self.omega0 ** 2 - self.alpha ** 2
        return math.sqrt(w2) if w2 > 0 else 0.0

    def ring_period(self) -> float:
        """Time for the inductor current to return to zero after a full
        swing: the damped period when underdamped, else ``1/f_res``."""
        wd = self.omega_d
        if classify_damping(self) is Damping.UNDERDAMPED and wd > 0:
            return 2.0 * math.pi / wd
        return 1.0 / resonant_frequency(self)

    def metrics(self) -> "TankMetrics":
        f = resonant_frequency(self)
        return TankMetrics(f_res=f, t_res=1.0 / f, q=quality_factor(self),
                           damping=classify_damping(self))


@dataclass(frozen=True)
class TankMetrics:
    f_res: float
    t_res: float
    q: float
    damping: Damping


@dataclass(frozen=True)
class SwingResult:
    v_oh: float
    v_ol: float
    swing: float


@dataclass(frozen=True)
class TankState:
    v_c: float
    i_l: float

    def energy(self, tank: RlcTank) -> float:
        return (0.5 * tank.capacitance * self.v_c ** 2
                + 0.5 * tank.inductance * self.i_l ** 2)


def resonant_frequency(tank: RlcTank) -> float:
    return 1.0 / (2.0 * math.pi * math.sqrt(tank.inductance * tank.capacitance))


def quality_factor(tank: RlcTank) -> float:
    """sqrt(L / (C R^2)); ``INFINITE_Q`` for a lossless tank."""
    if tank.resistance == 0:
        return INFINITE_Q
    return math.sqrt(tank.inductance / (tank.capacitance * tank.resistance ** 2))


def free_swing(vdd: float, q: float) -> SwingResult:
    """Resonant high/low levels reached without the supply.

    ``v_oh`` is where the node lands after a full resonant cycle from vdd,
    ``v_ol`` the bottom of the half cycle; the supply only has to top up
    ``vdd - v_oh``.
    """
    if not vdd > 0:
        raise ValidationError(f"non-positive vdd: {vdd!r}")
    if not q > 0:
        raise ValidationError(f"non-positive quality factor: {q!r}")
    if math.isinf(q):
        full = half = 1.0
    else:
        full = math.exp(-math.pi / q)
        half = math.exp(-math.pi / (2.0 * q))
    v_oh = 0.5 * vdd * (1.0 + full)
    v_ol = 0.5 * vdd * (1.0 - half)
    return SwingResult(v_oh=v_oh, v_ol=v_ol, swing=v_oh - v_ol)


def pulse_width(l: float, c: float) -> float:
    """Half the resonant period, pi*sqrt(LC)."""
    if not (l > 0 and c > 0):
        raise ValidationError("pulse_width needs positive l and c")
    return math.pi * math.sqrt(l * c)


def classify_damping(tank: RlcTank) -> Damping:
    r2 = tank.resistance ** 2
    crit = 4.0 * tank.inductance / tank.capacitance
    if abs(r2 - crit) <= CRITICAL_RTOL * crit:
        return Damping.CRITICAL
    return Damping.UNDERDAMPED if r2 < crit else Damping.OVERDAMPED


def segment_solution(tank: RlcTank, initial: TankState, drive: float,
                     t: float) -> TankState:
    """Exact state of a constant-voltage-driven series RLC after time ``t``.

    Loop equations: C dv/dt = i, L di/dt = drive - v - R i. With
    x = v - drive the response is a damped sinusoid
    x(t) = e^(-a t) (x0 cos(wd t) + (x0' + a x0)/wd sin(wd t)).
    """
    if classify_damping(tank) is not Damping.UNDERDAMPED:
        raise UnsupportedRegimeError(
            "segment_solution supports underdamped tanks only "
            f"(R={tank.resistance!r}, 2*sqrt(L/C)={2 * math.sqrt(tank.inductance / tank.capacitance)!r})")
    if t < 0:
        raise ValidationError("t must be non-negative")
    if t == 0:
        return initial
    a = tank.alpha
    wd = tank.omega_d
    c = tank.capacitance
    x0 = initial.v_c - drive
    dx0 = initial.i_l / c
    b = (dx0 + a * x0) / wd
    decay = math.exp(-a * t)
    cs = math.cos(wd * t)
    sn = math.sin(wd * t)
    x = decay * (x0 * cs + b * sn)
    dx = decay * ((-a * x0 + wd * b) * cs + (-a * b - wd * x0) * sn)
    return TankState(v_c=drive + x, i_l=c * dx)


def rc_charge_solution(v0: float, v_supply: float, resistance: float,
                       capacitance: float, t: float) -> float:
    """Capacitor voltage after charging through ``resistance`` for ``t``."""
    tau = resistance * capacitance
    if tau == 0:
        return v_supply
    return v_supply + (v0 - v_supply) * math.exp(-t / tau)
