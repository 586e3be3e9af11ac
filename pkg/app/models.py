"""
Pydantic models for Triwell.
"""
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# Mode labels in column order of the frame V = (v_g, v_o, v_e)
MODES = ("g", "o", "e")
# Site labels in row order of every site-basis vector
SITES = (1, 0, -1)
SITE_TAGS = ("p1", "0", "m1")

# Hopping energy; every energy is stored in units of J, every time in 1/J
HOPPING_J = 1.0


# ============================================================
# Physical Parameters
# ============================================================

class ModelParams(BaseModel):
    """Constants of the triple-well + reservoir Hamiltonian."""
    model_config = ConfigDict(frozen=True)

    delta: float = Field(gt=0, description="Reservoir bandwidth Delta")
    beta: float = Field(gt=0, description="Inverse temperature")
    gbar_before: float = Field(ge=0)
    gbar_after: float = Field(ge=0)
    n_total: float = Field(gt=0, description="Initial total particle number")
    mu: Optional[float] = None
    offdiagonal_counterterm: bool = True

    @property
    def band_guard(self) -> float:
        """Distance from either band edge inside which kernels refuse to evaluate."""
        return 1e-6 * self.delta


# ============================================================
# Solver Configuration
# ============================================================

class EvolutionConfig(BaseModel):
    """Time-stepping controls."""
    model_config = ConfigDict(frozen=True)

    dt: float = Field(default=0.01, gt=0)
    t_max: float = Field(default=300.0, gt=0)
    sc_tol: float = Field(default=1e-12, gt=0)
    sc_max_iter: int = Field(default=50, ge=1)
    output_stride: int = Field(default=100, ge=1)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


class EquilibriumConfig(BaseModel):
    """Damped fixed-point controls for the t < 0 initialization."""
    model_config = ConfigDict(frozen=True)

    damping: float = Field(default=0.5, gt=0, le=1)
    max_iter: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-12, gt=0)


class MemoryCheckConfig(BaseModel):
    """Quadrature budget for the frozen-history memory integrals."""
    model_config = ConfigDict(frozen=True)

    epsilons: tuple[float, ...] = (0.01, 0.005, 0.0025)
    k_points: int = Field(default=2000, ge=16)
    s_step: float = Field(default=0.005, gt=0)
    window_factor: float = Field(default=50.0, gt=0)
    ir_fraction: float = Field(default=0.5, gt=0, lt=1)
    accuracy_tol: float = Field(default=1e-3, gt=0)


class Scenario(str, Enum):
    INIT_EQ = "init-eq"
    SWEEP_G = "sweep-g"
    QUENCH = "quench"
    VALIDATE = "validate"
    MEMORY_CHECK = "memory-check"


class RunConfig(BaseModel):
    """
    Flat run description as read from a `key = value` file.

    Physical keys are mandatory; everything else falls back to Settings.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    # Physical (mandatory)
    n_total: float = Field(alias="N_total", gt=0)
    beta: float = Field(gt=0)
    delta: float = Field(alias="Delta", gt=0)
    gbar_before: float = Field(ge=0)
    gbar_after: float = Field(ge=0)

    # Evolution
    dt: float = Field(gt=0)
    t_max: float = Field(gt=0)
    sc_tol: float = Field(gt=0)
    sc_max_iter: int = Field(ge=1)
    output_stride: int = Field(ge=1)

    # Equilibrium
    eq_damping: float = Field(gt=0, le=1)
    eq_max_iter: int = Field(ge=1)
    eq_tol: float = Field(gt=0)

    # Memory check
    memory_epsilons: tuple[float, ...]
    memory_k_points: int = Field(ge=16)
    memory_s_step: float = Field(gt=0)
    memory_window_factor: float = Field(gt=0)
    memory_ir_fraction: float = Field(gt=0, lt=1)
    memory_accuracy_tol: float = Field(gt=0)

    # Sweep / variants
    gbar_list: tuple[float, ...]
    offdiagonal_counterterm: bool = True

    scenario: Scenario = Scenario.QUENCH
    output_dir: str = "output"

    def model_params(self) -> ModelParams:
        return ModelParams(
            delta=self.delta,
            beta=self.beta,
            gbar_before=self.gbar_before,
            gbar_after=self.gbar_after,
            n_total=self.n_total,
            offdiagonal_counterterm=self.offdiagonal_counterterm,
        )

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            dt=self.dt,
            t_max=self.t_max,
            sc_tol=self.sc_tol,
            sc_max_iter=self.sc_max_iter,
            output_stride=self.output_stride,
        )

    def equilibrium_config(self) -> EquilibriumConfig:
        return EquilibriumConfig(
            damping=self.eq_damping,
            max_iter=self.eq_max_iter,
            tol=self.eq_tol,
        )

    def memory_config(self) -> MemoryCheckConfig:
        return MemoryCheckConfig(
            epsilons=self.memory_epsilons,
            k_points=self.memory_k_points,
            s_step=self.memory_s_step,
            window_factor=self.memory_window_factor,
            ir_fraction=self.memory_ir_fraction,
            accuracy_tol=self.memory_accuracy_tol,
        )


# ============================================================
# Solver State
# ============================================================

class Overlaps(BaseModel):
    """I_l = sum_x v_{x l}, one complex number per mode."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @property
    def g(self) -> complex:
        return complex(self.values[0])

    @property
    def o(self) -> complex:
        return complex(self.values[1])

    @property
    def e(self) -> complex:
        return complex(self.values[2])


class EquilibriumSolution(BaseModel):
    """Self-consistent t < 0 state for one coupling."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gbar: float
    mu: float
    omega: np.ndarray
    frame: np.ndarray
    n0: np.ndarray
    delta_omega_ell: np.ndarray
    residual: float
    iterations: int

    @property
    def abs_u_ground(self) -> tuple[float, float]:
        """(|u_{1g}|, |u_{-1g}|)"""
        return float(abs(self.frame[0, 0])), float(abs(self.frame[2, 0]))


class SystemState(BaseModel):
    """Snapshot of the coupled frame / occupation / counter-term system."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    frame: np.ndarray
    n: np.ndarray
    omega: np.ndarray
    delta_omega_ell: np.ndarray
    sc_iters: int = 0


# ============================================================
# Output Records
# ============================================================

class TimeSeriesRecord(BaseModel):
    """One row of timeseries.csv."""
    tJ: float
    abs_v: list[list[float]]
    n: list[float]
    omega: list[float]
    delta_omega_upper: list[complex]
    sc_iters: int

    @classmethod
    def from_state(cls, state: SystemState) -> "TimeSeriesRecord":
        rows, cols = np.triu_indices(3)
        return cls(
            tJ=state.t,
            abs_v=np.abs(state.frame).tolist(),
            n=state.n.tolist(),
            omega=state.omega.tolist(),
            delta_omega_upper=[complex(z) for z in state.delta_omega_ell[rows, cols]],
            sc_iters=state.sc_iters,
        )

    @staticmethod
    def csv_header() -> list[str]:
        header = ["tJ"]
        header += [f"abs_v_{x}_{ell}" for x in SITE_TAGS for ell in MODES]
        header += [f"n_{ell}" for ell in MODES]
        header += [f"omega_{ell}" for ell in MODES]
        rows, cols = np.triu_indices(3)
        for r, c in zip(rows, cols):
            pair = f"{MODES[r]}{MODES[c]}"
            header += [f"re_dw_{pair}", f"im_dw_{pair}"]
        header.append("sc_iters")
        return header

    def csv_row(self) -> list[float]:
        row: list[float] = [self.tJ]
        row += [value for site in self.abs_v for value in site]
        row += self.n
        row += self.omega
        for z in self.delta_omega_upper:
            row += [z.real, z.imag]
        row.append(self.sc_iters)
        return row


class SweepRow(BaseModel):
    """One coupling point of the equilibrium sweep."""
    gbar: float
    abs_u_p1_g: Optional[float] = None
    abs_u_m1_g: Optional[float] = None
    omega: Optional[list[float]] = None
    mu: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class MemoryCheckRow(BaseModel):
    """Frozen-history evaluation at one regulator value."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    epsilon: Optional[float] = None
    delta_omega: np.ndarray
    n_dot: np.ndarray


class MemoryCheckResult(BaseModel):
    """Regulator ladder, its epsilon -> 0 extrapolation and the Markovian reference."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: list[MemoryCheckRow]
    extrapolated: MemoryCheckRow
    markovian: MemoryCheckRow
    delta_omega_rel_error: float
    n_dot_rel_error: float


class CheckResult(BaseModel):
    """One line of validate.txt."""
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail}"


class RunMetadata(BaseModel):
    """Contents of metadata.json."""
    version: str
    scenario: Scenario
    mu: Optional[float] = None
    gbar_before: float
    gbar_after: float
    wall_time_s: float
    n_g_infinity_proxy: Optional[str] = None
    checks_failed: Optional[int] = None
    memory_delta_omega_rel_error: Optional[float] = None
    memory_n_dot_rel_error: Optional[float] = None
    files: list[str] = []
