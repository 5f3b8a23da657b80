"""
Pydantic models for solver tolerances and experiment result records.
"""
from typing import List, Dict, Optional
from enum import Enum

from pydantic import BaseModel, Field


class BackendType(str, Enum):
    """Available solver backends."""
    EXACT = "exact"
    WKB0 = "wkb0"
    WKB1 = "wkb1"
    RWKB0 = "rwkb0"
    RWKB1 = "rwkb1"
    HJ0 = "hj0"
    HJ1 = "hj1"
    ADIABATIC = "adiabatic"


class RowStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class ThresholdStatus(str, Enum):
    """Outcome of a threshold scan."""
    FOUND = "found"
    NON_MONOTONE_TAIL = "non_monotone_tail"
    AT_SCAN_FLOOR = "at_scan_floor"


class QuadratureSpec(BaseModel):
    """Tolerances for adaptive quadrature."""
    abs_tol: float = Field(default=1e-10, gt=0, description="Absolute error target")
    rel_tol: float = Field(default=1e-10, gt=0, description="Relative error target")
    max_subdivisions: int = Field(default=2000, ge=1, description="Subinterval budget")


class OdeSpec(BaseModel):
    """Tolerances and work limits for the embedded Runge-Kutta integrator."""
    abs_tol: float = Field(default=1e-11, gt=0)
    rel_tol: float = Field(default=1e-11, gt=0)
    initial_step: Optional[float] = Field(default=None, gt=0, description="First step; chosen automatically when unset")
    max_steps: int = Field(default=5_000_000, ge=1, description="Upper bound on accepted plus rejected steps")


class LineFit(BaseModel):
    slope: float
    intercept: float
    r_squared: float = Field(..., ge=0.0, le=1.0)


class DynamicsRow(BaseModel):
    """One sampled point of one backend's trajectory."""
    r: float
    s: float
    backend: str
    psi_re: float
    psi_im: float
    phi_re: float
    phi_im: float
    pop_marked: float
    norm: float
    trace_dist_vs_exact: Optional[float] = None


class PgsRow(BaseModel):
    """Final marked-state population for one (n, alpha, backend, t_f) cell."""
    n: int
    alpha: int
    backend: str
    t_f: float
    p_gs: Optional[float] = None
    norm: Optional[float] = None
    status: RowStatus = RowStatus.OK
    error: Optional[str] = None


class ThresholdResult(BaseModel):
    n: int
    alpha: int
    backend: str
    p_th: float = Field(default=0.95, gt=0.0, lt=1.0)
    t_f_th: float
    horizon_factor: float
    grid_spec: str = Field(..., description="Scan grid description")
    status: ThresholdStatus = ThresholdStatus.FOUND
    evaluations: int = 0


class ScalingResult(BaseModel):
    alpha: int
    backend: str
    p_th: float
    ns: List[int]
    t_f_ths: List[float]
    fit: LineFit
    residuals: List[float] = Field(default_factory=list, description="log2 t_f^Th minus the fitted line, per n")
    thresholds: List[ThresholdResult] = Field(default_factory=list)


class DistanceRow(BaseModel):
    """Time-averaged trace distance of a backend against the exact evolution."""
    n: int
    alpha: int
    backend: str
    t_f: float
    avg_distance: Optional[float] = None
    min_norm: Optional[float] = None
    status: RowStatus = RowStatus.OK
    error: Optional[str] = None


class AsymptoteRow(BaseModel):
    t_f: float
    excited_population: float
    leading_term: float
    scaled: float = Field(..., description="excited population times 4 t_f^2")
    difference: float


class RenormalizationRow(BaseModel):
    n: int
    alpha: int
    t_f: float
    avg_distance_wkb0: float
    avg_distance_rwkb0: float
    gain: float = Field(..., description="rwkb0 minus wkb0 time-averaged distance")


class ComparisonSummary(BaseModel):
    n: int
    alpha: int
    t_f: float
    avg_distance: Dict[str, float] = Field(default_factory=dict)
    min_norm: Dict[str, float] = Field(default_factory=dict)
