"""Resonance decomposition for the three-point boundary condition.

The problem couples the endpoint to an interior node through a bounded
operator A:

    D^alpha x = f(t, x, D^(alpha-1) x),
    I^(2-alpha) x(0) = 0,      x(1) = A x(xi).

Writing x(t) = c t^(alpha-1) + I^alpha y(t) (the left condition is then
exact by construction), the right condition reduces to the linear
equation  R c = h(y)  with the resonance matrix

    R = I - xi^(alpha-1) A

and the boundary functional

    h(y) = (A / Gamma(a)) int_0^xi (xi-s)^(a-1) y ds
         - (1 / Gamma(a)) int_0^1  (1-s)^(a-1) y ds.

The problem is resonant when R is singular.  This module builds the
pseudoinverse-based splitting used by the solver: projections that
isolate the kernel part of c and the unsolvable part of y, and the
partial inverse that undoes the derivative on solvable data.

The scalar in front of the obstruction projection is pinned by
idempotency.  For y = c t^(a-1) the boundary functional evaluates
exactly to

    h(c t^(a-1)) = (Gamma(a)/Gamma(2a)) (xi^(2a-1) A - I) c,

and (I - R R^+)(xi^(2a-1) A - I) = (xi^a - 1)(I - R R^+), so the unique
scale kappa making the projection idempotent is

    kappa = Gamma(2a) / (Gamma(a) (xi^a - 1)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fracops import (
    GridFn,
    Order,
    PowerFn,
    cumulative_integral,
    frac_derivative,
    frac_integral,
    gamma,
    power_rule,
)
from .linops import kernel_basis, operator_norm, pinv

__all__ = [
    "NonResonantError",
    "ProblemSpec",
    "ResonanceData",
    "DomainElement",
    "build_resonance",
    "boundary_functional",
    "boundary_functional_power",
    "project_obstruction",
    "project_kernel",
    "partial_inverse",
    "evaluate",
    "derivative_trace",
    "StructureReport",
    "verify_structure",
]

RhsCallback = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


class NonResonantError(ValueError):
    """The resonance matrix is invertible; the splitting scheme does not apply."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ProblemSpec:
    """A complete finite-truncation problem instance.

    ``rhs(t, u, v)`` implements f(t, x(t), D^(alpha-1) x(t)) and must
    return a finite n-vector for finite inputs.  ``grid_n`` is the
    number of uniform subintervals; xi must land on a grid node.
    """

    ord: Order
    xi: float
    a_op: np.ndarray
    rhs: RhsCallback
    grid_n: int

    def __post_init__(self) -> None:
        if not (0.0 < self.xi < 1.0):
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        a = np.asarray(self.a_op, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"boundary operator must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("boundary operator has non-finite entries")
        if self.grid_n < 4:
            raise ValueError(f"grid_n must be at least 4, got {self.grid_n}")
        if abs(self.xi * self.grid_n - round(self.xi * self.grid_n)) > 1e-9:
            raise ValueError(
                f"xi = {self.xi} does not lie on the grid with N = {self.grid_n}"
            )
        object.__setattr__(self, "a_op", _frozen(a))

    @property
    def dim(self) -> int:
        return self.a_op.shape[0]

    @property
    def xi_node(self) -> int:
        return int(round(self.xi * self.grid_n))


@dataclass(frozen=True)
class ResonanceData:
    """Pseudoinverse splitting of the resonance matrix.

    ``kernel`` and ``cokernel`` are orthonormal bases of ker(matrix) and
    ker(matrix^T); the cokernel basis is rotated (orthogonal Procrustes)
    to line up with the kernel basis, so ``kernel_map`` - the isomorphism
    carrying obstruction coordinates to kernel coordinates - is the
    identity matrix.  ``ep_defect`` measures how much of the kernel lies
    inside the range; the two bases coincide exactly when it vanishes,
    which is the regime where the splitting is a genuine direct sum.
    ``proj_scale`` is the idempotency-pinned coefficient of the
    obstruction projection.
    """

    matrix: np.ndarray
    pinv: np.ndarray
    rank: int
    range_proj: np.ndarray
    corange_proj: np.ndarray
    kernel: np.ndarray
    cokernel: np.ndarray
    dim_ker: int
    kernel_map: np.ndarray
    ep_defect: float
    proj_scale: float
    rank_ambiguous: bool

    def __post_init__(self) -> None:
        for name in ("matrix", "pinv", "range_proj", "corange_proj", "kernel", "cokernel", "kernel_map"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def offrange_proj(self) -> np.ndarray:
        """I - R R^+, the orthogonal projector onto the cokernel."""
        return np.eye(self.dim) - self.range_proj

    @property
    def kernel_proj(self) -> np.ndarray:
        """I - R^+ R, the orthogonal projector onto the kernel."""
        return np.eye(self.dim) - self.corange_proj

    def kernel_lift(self, coef: np.ndarray) -> np.ndarray:
        """Map an obstruction vector (in R^n) to its kernel vector via J."""
        coords = self.cokernel.T @ coef
        return self.kernel @ (self.kernel_map @ coords)


@dataclass(frozen=True)
class DomainElement:
    """Pair (coef, source) representing x(t) = coef t^(alpha-1) + I^alpha source.

    The left boundary condition I^(2-alpha) x(0) = 0 holds identically in
    this representation, and the derivative trace is exact:
    D^(alpha-1) x(t) = Gamma(alpha) coef + int_0^t source.  Membership in
    the domain of the derivative operator additionally requires
    R coef = h(source); that defect is a computed diagnostic.
    """

    coef: np.ndarray
    source: GridFn

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coef, dtype=float))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("coefficient must be a finite vector")
        if c.shape[0] != self.source.dim:
            raise ValueError(
                f"coefficient dim {c.shape[0]} != source dim {self.source.dim}"
            )
        object.__setattr__(self, "coef", _frozen(c))

    @classmethod
    def zero(cls, n_intervals: int, dim: int) -> "DomainElement":
        return cls(np.zeros(dim), GridFn.zeros(n_intervals, dim))


def build_resonance(spec: ProblemSpec, tol: float = 0.0) -> ResonanceData:
    """Assemble the splitting data for R = I - xi^(alpha-1) A.

    Raises ``NonResonantError`` when R is invertible at the rank
    tolerance.  A singular value within a factor 10 of the tolerance
    makes the kernel dimension ill-determined; that is reported through
    ``rank_ambiguous`` and a warning.
    """
    n = spec.dim
    r = np.eye(n) - spec.xi ** spec.ord.alpha_m1 * spec.a_op
    pr = pinv(r, tol)
    dim_ker = n - pr.rank
    if dim_ker == 0:
        raise NonResonantError(
            "the boundary operator is non-resonant (kernel is trivial); "
            "the projection scheme does not apply"
        )
    # Only singular values above the machine-noise floor can make the
    # rank genuinely tolerance-sensitive; eps-scale representations of
    # exact zeros always sit near any reasonable tolerance.
    s = pr.singular_values
    noise_floor = np.finfo(float).eps * max(r.shape) * (s[0] if s.size else 0.0)
    ambiguous = bool(
        np.any((s > noise_floor) & (s > pr.tol_used / 10) & (s < pr.tol_used * 10))
    )
    if ambiguous:
        warnings.warn(
            "kernel dimension is tolerance-sensitive: a singular value lies "
            f"within a decade of the rank tolerance {pr.tol_used:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    ker = kernel_basis(r, tol)
    coker = kernel_basis(r.T, tol)
    if coker.shape[1] != dim_ker:
        raise ValueError("kernel and cokernel dimensions disagree")
    # Procrustes alignment: closest orthogonal rotation of the cokernel
    # basis onto the kernel basis, so the coordinate map J is the identity
    # (and exactly so when the two subspaces coincide).
    u, _, vt = np.linalg.svd(coker.T @ ker)
    coker = coker @ (u @ vt)
    ep_defect = float(np.linalg.norm(pr.range_proj @ ker, 2)) if dim_ker else 0.0
    alpha = spec.ord.alpha
    scale = gamma(2.0 * alpha) / (gamma(alpha) * (spec.xi**alpha - 1.0))
    return ResonanceData(
        matrix=r,
        pinv=pr.pinv,
        rank=pr.rank,
        range_proj=pr.range_proj,
        corange_proj=pr.corange_proj,
        kernel=ker,
        cokernel=coker,
        dim_ker=dim_ker,
        kernel_map=np.eye(dim_ker),
        ep_defect=ep_defect,
        proj_scale=scale,
        rank_ambiguous=ambiguous,
    )


def boundary_functional(y: GridFn, spec: ProblemSpec) -> np.ndarray:
    """h(y) = A (I^alpha y)(xi) - (I^alpha y)(1) by product quadrature.

    xi must lie on a node of y's grid; the two kernel integrals are read
    off one fractional-integral sweep.
    """
    if y.dim != spec.dim:
        raise ValueError(f"grid dim {y.dim} != operator dim {spec.dim}")
    n = y.n_intervals
    jxi = spec.xi * n
    if abs(jxi - round(jxi)) > 1e-9:
        raise ValueError(f"xi = {spec.xi} is not a node of the N = {n} grid")
    iv = frac_integral(y, spec.ord.alpha).values
    return spec.a_op @ iv[int(round(jxi))] - iv[n]


def boundary_functional_power(p: PowerFn, spec: ProblemSpec) -> np.ndarray:
    """Exact boundary functional of c t^beta via the beta integral.

    int_0^T (T-s)^(a-1) s^beta ds = Gamma(a) power_rule(beta, a) T^(beta+a)
    gives  h(c t^beta) = power_rule(beta, alpha) (xi^(beta+alpha) A c - c).
    """
    if p.dim != spec.dim:
        raise ValueError(f"power dim {p.dim} != operator dim {spec.dim}")
    alpha = spec.ord.alpha
    pr = power_rule(p.exponent, alpha)
    return pr * (spec.xi ** (p.exponent + alpha) * (spec.a_op @ p.coef) - p.coef)


def project_obstruction(y: GridFn | PowerFn, spec: ProblemSpec, rdata: ResonanceData) -> PowerFn:
    """Project y onto the unsolvable directions, as an exact power function.

    Returns kappa (I - R R^+) h(y) * t^(alpha-1) with the idempotency
    scale kappa = Gamma(2a)/(Gamma(a)(xi^a - 1)).  Power inputs take the
    exact beta-integral route, grid inputs the product quadrature.
    """
    if isinstance(y, PowerFn):
        hy = boundary_functional_power(y, spec)
    else:
        hy = boundary_functional(y, spec)
    coef = rdata.proj_scale * (rdata.offrange_proj @ hy)
    return PowerFn(coef, spec.ord.alpha_m1)


def project_kernel(x: DomainElement, rdata: ResonanceData) -> DomainElement:
    """Extract the kernel component of a domain element.

    Uses the exact trace identity D^(alpha-1) x(0) = Gamma(alpha) coef,
    so no numerical differentiation occurs: the result is
    ((I - R^+ R) coef, 0).
    """
    c = rdata.kernel_proj @ x.coef
    return DomainElement(c, GridFn.zeros(x.source.n_intervals, x.source.dim))


def partial_inverse(y: GridFn, spec: ProblemSpec, rdata: ResonanceData) -> DomainElement:
    """Right-inverse of the derivative operator on solvable data.

    Returns (R^+ h(y), y), i.e. x = R^+ h(y) t^(alpha-1) + I^alpha y.
    The kernel projection of the output vanishes identically because
    (I - R^+ R) R^+ = 0, and the derivative trace is available exactly
    as Gamma(alpha) R^+ h(y) + int_0^t y.
    """
    return DomainElement(rdata.pinv @ boundary_functional(y, spec), y)


def evaluate(x: DomainElement, ord: Order) -> GridFn:
    """Grid samples of x(t) = coef t^(alpha-1) + (I^alpha source)(t)."""
    iv = frac_integral(x.source, ord.alpha).values
    power = PowerFn(x.coef, ord.alpha_m1).sample(x.source.nodes)
    return GridFn(power + iv)


def derivative_trace(x: DomainElement, ord: Order) -> GridFn:
    """Exact-trace samples of D^(alpha-1) x = Gamma(alpha) coef + int_0^t source."""
    iv = cumulative_integral(x.source).values
    return GridFn(gamma(ord.alpha) * x.coef[None, :] + iv)


@dataclass(frozen=True)
class StructureReport:
    """Residuals of the structural identities behind the splitting.

    All checks report; none throws.  The derivative round trip is
    grid-limited: ``left_inverse_residual`` covers all nodes except two
    at each end and saturates at a small N-independent boundary-layer
    value, while ``left_inverse_window`` (t in [0.1, 0.9]) decays with
    the grid.  The remaining checks are algebraic or exact-route and sit
    near rounding error whenever ``ep_defect`` vanishes.
    """

    identity_residual: float
    obstruction_idem_residual: float
    obstruction_on_image_residual: float
    kernel_fix_residual: float
    left_inverse_residual: float
    left_inverse_window: float
    ep_defect: float


def verify_structure(
    spec: ProblemSpec,
    rdata: ResonanceData,
    samples: int = 10,
    seed: int = 0,
) -> StructureReport:
    """Exercise the splitting identities on random data.

    (a) (I - RR^+)(xi^(2a-1) A - I) = (xi^a - 1)(I - RR^+) in matrix
        algebra; (b) idempotency of the obstruction projection;
    (c) the projection annihilates constructed solvable data;
    (d) kernel power elements are fixed up to an ep_defect-sized error;
    (e) differentiating the partial inverse returns the data
        (numerical derivative, loose grid tolerance).
    """
    rng = np.random.default_rng(seed)
    n = spec.dim
    ngrid = spec.grid_n
    alpha = spec.ord.alpha
    offr = rdata.offrange_proj
    lhs = offr @ (spec.xi ** (2 * alpha - 1) * spec.a_op - np.eye(n))
    rhs = (spec.xi**alpha - 1.0) * offr
    identity_res = float(np.linalg.norm(lhs - rhs, 2))

    idem = 0.0
    on_image = 0.0
    left_inv = 0.0
    left_win = 0.0
    t = np.linspace(0.0, 1.0, ngrid + 1)
    window = slice(max(2, ngrid // 10), min(ngrid - 1, (9 * ngrid) // 10))
    for _ in range(samples):
        # Smooth random data; the derivative round trip is meaningless on
        # node-wise noise.
        c0, c1, c2 = rng.standard_normal((3, n))
        y = GridFn(c0 + np.outer(t, c1) + np.outer(np.sin(3.0 * t), c2))
        q = project_obstruction(y, spec, rdata)
        qq = project_obstruction(q, spec, rdata)
        idem = max(idem, float(np.linalg.norm(qq.coef - q.coef)))
        # Solvable member constructed as y minus its obstruction part; the
        # power part stays on the exact route so the projection of the
        # pair is evaluated without quadrature error.
        h_member = boundary_functional(y, spec) - boundary_functional_power(q, spec)
        q_member = rdata.proj_scale * (offr @ h_member)
        on_image = max(on_image, float(np.linalg.norm(q_member)))
        # Derivative round trip on the grid realization of the member.
        # The power part of the partial inverse differentiates to zero
        # exactly, so only the I^alpha part is re-differentiated.
        member = GridFn(y.values - q.sample(y.nodes))
        dx = frac_derivative(frac_integral(member, alpha), spec.ord)
        res = np.abs(dx.values - member.values)
        left_inv = max(left_inv, float(res[2 : ngrid - 1].max()))
        left_win = max(left_win, float(res[window].max()))

    kernel_fix = 0.0
    for _ in range(samples):
        z = rng.standard_normal(rdata.dim_ker)
        z /= np.linalg.norm(z)
        c = rdata.kernel @ z  # unit kernel vector, residual comparable to ep_defect
        q = project_obstruction(PowerFn(c, spec.ord.alpha_m1), spec, rdata)
        kernel_fix = max(kernel_fix, float(np.linalg.norm(q.coef - c)))

    return StructureReport(
        identity_residual=identity_res,
        obstruction_idem_residual=idem,
        obstruction_on_image_residual=on_image,
        kernel_fix_residual=kernel_fix,
        left_inverse_residual=left_inv,
        left_inverse_window=left_win,
        ep_defect=rdata.ep_defect,
    )
