"""Certified test functions and the generators acting on them.

Spatial test functions are compactly supported polynomial bumps

    phi(x) = A * max(0, 1 - (x-c)^T B (x-c))^3

with SPD shape matrix B, so values, gradients and Hessians have closed forms
and phi is C^2 with compact support. Each entry carries certified upper bounds
for the norms that govern admissibility in the dual metrics:

    C1  = max(sup|phi|, sup|grad phi|)
    C2  = max(sup|phi|, sup|grad phi|, sup|hess phi|_F)
    C2w = sup|phi| + sup (1+|x|)|grad phi| + sup (1+|x|^2)|hess phi|_F

Certificates come from dense probe maximization times a 1.05 safety factor;
rescaling an entry scales every norm linearly, so normalized entries keep
exact certificates. Outer functions (for cylinder functionals of measures)
use the same bump family on R^k with coordinate-sum seminorm certificates

    S_h = sup_y sum over h-index tuples of |partial^h Psi(y)|.

The generator L phi = b . grad phi + 1/2 a : hess phi acts on test functions;
its lift K acts on cylinder functions F = Psi(integral of phi_1, ..., phi_k)
by K F = sum_i dPsi_i * L phi_i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure, integrate
from .seeds import stream

__all__ = [
    "TestFunction",
    "Dictionary",
    "TimeTestFunction",
    "OuterFunction",
    "CylinderFunction",
    "Coefficients",
    "build_dictionary",
    "time_test_functions",
    "identity_outer",
    "constant_outer",
    "bump_outer",
    "product_outer",
    "build_outer_family",
    "product_cylinder",
    "apply_L",
    "apply_K",
    "leibniz_gap",
]

CERT_SLACK = 1e-12
_SAFETY = 1.05


# ---------------------------------------------------------------------------
# bump kernels (shared by spatial test functions and outer functions)


def _bump_eval(center, B, amp, X):
    z = np.asarray(X, dtype=float) - center
    u = np.einsum("...i,...i->...", z @ B, z)
    s = np.clip(1.0 - u, 0.0, None)
    return amp * s**3


def _bump_grad(center, B, amp, X):
    z = np.asarray(X, dtype=float) - center
    Bz = z @ B
    u = np.einsum("...i,...i->...", Bz, z)
    s = np.clip(1.0 - u, 0.0, None)
    return (-6.0 * amp) * s[..., None] ** 2 * Bz


def _bump_hess(center, B, amp, X):
    z = np.asarray(X, dtype=float) - center
    Bz = z @ B
    u = np.einsum("...i,...i->...", Bz, z)
    s = np.clip(1.0 - u, 0.0, None)
    outer = Bz[..., :, None] * Bz[..., None, :]
    return 24.0 * amp * s[..., None, None] * outer - 6.0 * amp * (s**2)[..., None, None] * B


def _ellipsoid_probes(center, B, rng, n_random):
    """Deterministic probe cloud covering the support ellipsoid."""
    w, V = np.linalg.eigh(B)
    radii = 1.0 / np.sqrt(w)
    d = center.shape[0]
    pts = [center[None, :]]
    ts = np.linspace(-1.0, 1.0, 801)[:, None]
    for j in range(d):
        axis = (V[:, j] * radii[j])[None, :]
        pts.append(center[None, :] + ts * axis)
    dirs = rng.standard_normal((n_random, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = rng.random(n_random) ** (1.0 / d)
    ball = dirs * rad[:, None]
    pts.append(center[None, :] + ball @ (V * radii).T)
    return np.concatenate(pts, axis=0)


def _certify_bump(center, B, amp, rng, n_random=12000):
    X = _ellipsoid_probes(center, B, rng, n_random)
    f = np.abs(_bump_eval(center, B, amp, X))
    g = np.linalg.norm(_bump_grad(center, B, amp, X), axis=-1)
    h = np.linalg.norm(_bump_hess(center, B, amp, X), axis=(-2, -1))
    r = np.linalg.norm(X, axis=-1)
    m0, m1, m2 = f.max(), g.max(), h.max()
    mw1 = ((1.0 + r) * g).max()
    mw2 = ((1.0 + r**2) * h).max()
    return {
        "C1": _SAFETY * max(m0, m1),
        "C2": _SAFETY * max(m0, m1, m2),
        "C2w": _SAFETY * (m0 + mw1 + mw2),
    }


def _seminorms_bump(center, B, amp, rng, n_random=12000):
    X = _ellipsoid_probes(center, B, rng, n_random)
    f = np.abs(_bump_eval(center, B, amp, X))
    g1 = np.abs(_bump_grad(center, B, amp, X)).sum(axis=-1)
    h1 = np.abs(_bump_hess(center, B, amp, X)).sum(axis=(-2, -1))
    return {
        "S0": _SAFETY * float(f.max()),
        "S1": _SAFETY * float(g1.max()),
        "S2": _SAFETY * float(h1.max()),
    }


# ---------------------------------------------------------------------------
# spatial test functions


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Compactly supported C^2 bump with certified norm bounds."""

    center: np.ndarray
    shape: np.ndarray       # SPD matrix B in (x-c)^T B (x-c)
    amplitude: float
    certificates: dict      # norm name -> certified upper bound
    support_radius: float   # phi vanishes outside |x| <= support_radius
    label: str = ""

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        shape = np.asarray(self.shape, dtype=float)
        if shape.shape != (center.shape[0], center.shape[0]):
            raise ValueError("shape matrix must be d x d")
        asym = np.abs(shape - shape.T).max()
        if asym > 1e-10:
            raise ValueError(f"shape matrix asymmetry {asym}")
        center.setflags(write=False)
        shape.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)

    @property
    def d(self) -> int:
        return self.center.shape[0]

    def eval(self, x):
        return _bump_eval(self.center, self.shape, self.amplitude, x)

    __call__ = eval

    def grad(self, x):
        return _bump_grad(self.center, self.shape, self.amplitude, x)

    def hess(self, x):
        return _bump_hess(self.center, self.shape, self.amplitude, x)

    def to_doc(self) -> dict:
        return {
            "type": "test_function",
            "center": self.center.tolist(),
            "shape": self.shape.tolist(),
            "amplitude": self.amplitude,
            "certificates": dict(self.certificates),
            "support_radius": self.support_radius,
            "label": self.label,
        }

    @staticmethod
    def from_doc(doc: dict) -> "TestFunction":
        return TestFunction(
            np.asarray(doc["center"], dtype=float),
            np.asarray(doc["shape"], dtype=float),
            float(doc["amplitude"]),
            {k: float(v) for k, v in doc["certificates"].items()},
            float(doc["support_radius"]),
            str(doc.get("label", "")),
        )


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Ordered, certificate-normalized test-function family.

    norm_kind names the certificate that governs admissibility; construction
    rescales every entry so that certificate equals 1. Entry order is stable:
    index k is coordinate k of the sequence-space embedding.
    """

    entries: tuple
    norm_kind: str
    ell: int
    weighted: bool
    d: int
    seed: int

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("dictionary must be nonempty")
        for k, e in enumerate(entries):
            cert = e.certificates.get(self.norm_kind)
            if cert is None or cert > 1.0 + CERT_SLACK:
                raise ValueError(f"entry {k} governing certificate {cert!r} exceeds 1")
            if e.d != self.d:
                raise ValueError("entry dimension mismatch")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k) -> TestFunction:
        return self.entries[k]

    def __iter__(self):
        return iter(self.entries)

    @property
    def dict_id(self) -> str:
        return (f"dict-ell{self.ell}-w{int(self.weighted)}-d{self.d}"
                f"-n{len(self.entries)}-s{self.seed}")

    def admissible(self, norm_kind: str) -> list:
        """Indices of entries whose certificate for norm_kind is <= 1."""
        return [k for k, e in enumerate(self.entries)
                if e.certificates.get(norm_kind, np.inf) <= 1.0 + CERT_SLACK]

    def to_doc(self) -> dict:
        return {
            "type": "dictionary",
            "norm_kind": self.norm_kind,
            "ell": self.ell,
            "weighted": self.weighted,
            "d": self.d,
            "seed": self.seed,
            "entries": [e.to_doc() for e in self.entries],
        }

    @staticmethod
    def from_doc(doc: dict) -> "Dictionary":
        if doc.get("type") != "dictionary":
            raise ValueError("not a dictionary document")
        return Dictionary(
            tuple(TestFunction.from_doc(e) for e in doc["entries"]),
            doc["norm_kind"], int(doc["ell"]), bool(doc["weighted"]),
            int(doc["d"]), int(doc["seed"]),
        )


def build_dictionary(ell: int, weighted: bool, d: int, size: int, seed: int, *,
                     center_box: float = 2.5,
                     radius_range: tuple = (0.6, 3.0)) -> Dictionary:
    """Seeded dictionary of bumps at varied centers, scales and orientations.

    Entries are rescaled so the governing certificate (C-ell, or the weighted
    C2 norm when weighted=True) is exactly 1. Deterministic in seed.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    if weighted and ell != 2:
        raise ValueError("weighted dictionaries pair with ell=2")
    norm_kind = "C2w" if weighted else f"C{ell}"
    entries = []
    for k in range(size):
        rng = stream(seed, "dict-entry", k)
        center = rng.uniform(-center_box, center_box, size=d)
        radii = rng.uniform(radius_range[0], radius_range[1], size=d)
        if d > 1:
            q, r = np.linalg.qr(rng.standard_normal((d, d)))
            q = q * np.sign(np.diag(r))
        else:
            q = np.eye(1)
        B = (q * radii**-2) @ q.T
        B = 0.5 * (B + B.T)
        certs = _certify_bump(center, B, 1.0, stream(seed, "dict-cert", k))
        g0 = certs[norm_kind]
        entry = TestFunction(
            center=center,
            shape=B,
            amplitude=1.0 / g0,
            certificates={name: val / g0 for name, val in certs.items()},
            support_radius=float(np.linalg.norm(center) + radii.max()),
            label=f"phi{k:02d}",
        )
        entries.append(entry)
    return Dictionary(tuple(entries), norm_kind, ell, weighted, d, seed)


# ---------------------------------------------------------------------------
# time test functions


def _polyval(coeffs, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _polyder(coeffs):
    return [c * (i + 1) for i, c in enumerate(coeffs[1:])]


@dataclass(frozen=True, eq=False)
class TimeTestFunction:
    """xi(t) = scale * T^4 * w^2 p(w) with w = u(1-u), u = t/T.

    Vanishes at 0 and T exactly (w^2 factor). Everything is a polynomial in
    w, so xi is symmetric about T/2 and xi' antisymmetric: on a uniform grid
    the trapezoid node sums of xi' cancel pairwise, and stationary curves
    produce residuals at round-off instead of at the quadrature-error floor.
    """

    horizon: float
    poly: tuple        # coefficients of p in increasing powers of w
    scale: float
    label: str = ""

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        T = self.horizon
        u = t / T
        w = u * (1.0 - u)
        return self.scale * T**4 * w**2 * _polyval(self.poly, w)

    __call__ = eval

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        T = self.horizon
        u = t / T
        w = u * (1.0 - u)
        p = _polyval(self.poly, w)
        dp = _polyval(_polyder(list(self.poly)), w)
        dq = 2.0 * w * p + w**2 * dp  # d/dw of w^2 p(w)
        return self.scale * T**3 * dq * (1.0 - 2.0 * u)


def time_test_functions(horizon: float, n: int, seed: int) -> list:
    """Seeded family of normalized time test functions; entry 0 has p = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    fine = np.linspace(0.0, horizon, 2001)
    for i in range(n):
        if i == 0:
            poly = (1.0,)
        else:
            rng = stream(seed, "xi", i)
            poly = tuple(rng.uniform(-1.0, 1.0, size=3))
        raw = TimeTestFunction(horizon, poly, 1.0)
        m = max(np.abs(raw.eval(fine)).max(), np.abs(raw.deriv(fine)).max())
        out.append(TimeTestFunction(horizon, poly, 1.0 / m, label=f"xi{i}"))
    return out


# ---------------------------------------------------------------------------
# outer functions and cylinder functions


@dataclass(frozen=True, eq=False)
class OuterFunction:
    """Map on R^k with gradient; optional coordinate-sum seminorm certificates."""

    k: int
    eval_fn: object
    grad_fn: object
    certificates: dict | None = None
    label: str = ""

    def eval(self, y):
        return self.eval_fn(np.asarray(y, dtype=float))

    def grad(self, y):
        return self.grad_fn(np.asarray(y, dtype=float))

    def admissible(self, h: int) -> bool:
        """True when all seminorms up to order h are certified <= 1."""
        if self.certificates is None:
            return False
        return all(self.certificates.get(f"S{j}", np.inf) <= 1.0 + CERT_SLACK
                   for j in range(h + 1))


def identity_outer() -> OuterFunction:
    return OuterFunction(
        k=1,
        eval_fn=lambda y: y[..., 0],
        grad_fn=lambda y: np.ones_like(y),
        certificates=None,
        label="id",
    )


def constant_outer(c: float) -> OuterFunction:
    return OuterFunction(
        k=1,
        eval_fn=lambda y: np.full(y.shape[:-1], float(c)),
        grad_fn=lambda y: np.zeros_like(y),
        certificates={"S0": abs(float(c)), "S1": 0.0, "S2": 0.0},
        label=f"const{c}",
    )


def bump_outer(center, shape_matrix, amplitude: float, seminorms: dict | None = None,
               label: str = "") -> OuterFunction:
    center = np.asarray(center, dtype=float)
    B = np.asarray(shape_matrix, dtype=float)
    return OuterFunction(
        k=center.shape[0],
        eval_fn=lambda y: _bump_eval(center, B, amplitude, y),
        grad_fn=lambda y: _bump_grad(center, B, amplitude, y),
        certificates=seminorms,
        label=label,
    )


def product_outer(f: OuterFunction, g: OuterFunction) -> OuterFunction:
    """Outer function of the product cylinder: block coordinates, product rule."""
    kf = f.k

    def ev(y):
        return f.eval(y[..., :kf]) * g.eval(y[..., kf:])

    def gr(y):
        vf = f.eval(y[..., :kf])
        vg = g.eval(y[..., kf:])
        gf = f.grad(y[..., :kf])
        gg = g.grad(y[..., kf:])
        return np.concatenate([gf * vg[..., None], vf[..., None] * gg], axis=-1)

    return OuterFunction(k=f.k + g.k, eval_fn=ev, grad_fn=gr,
                         certificates=None, label=f"({f.label})*({g.label})")


def build_outer_family(size: int, seed: int, *, k_max: int = 3,
                       center_box: float = 1.1,
                       radius_range: tuple = (0.9, 4.0)) -> list:
    """Certified outer bumps with arities cycling 1..k_max.

    Entries are normalized by max(S0, S1), so all are admissible at order 1;
    wide entries (entry 0 per arity is forced wide) also satisfy S2 <= 1,
    keeping the order-2 admissible subset nonempty.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    out = []
    for i in range(size):
        k = 1 + i % k_max
        rng = stream(seed, "outer", i)
        if i < k_max:
            center = np.zeros(k)
            radii = np.full(k, 4.0 * np.sqrt(k))
        else:
            center = rng.uniform(-center_box, center_box, size=k)
            radii = rng.uniform(radius_range[0], radius_range[1], size=k)
        B = np.diag(radii**-2.0)
        semis = _seminorms_bump(center, B, 1.0, stream(seed, "outer-cert", i))
        g0 = max(semis["S0"], semis["S1"])
        out.append(bump_outer(
            center, B, 1.0 / g0,
            seminorms={name: val / g0 for name, val in semis.items()},
            label=f"psi{i:02d}",
        ))
    return out


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """F(mu) = Psi(integral of phi_1 d mu, ..., integral of phi_k d mu)."""

    inner: tuple
    outer: OuterFunction
    label: str = ""

    def __post_init__(self):
        inner = tuple(self.inner)
        if len(inner) != self.outer.k:
            raise ValueError("outer arity must match number of inner functions")
        ds = {phi.d for phi in inner}
        if len(ds) != 1:
            raise ValueError("inner functions must share one dimension")
        object.__setattr__(self, "inner", inner)

    @property
    def k(self) -> int:
        return len(self.inner)

    @property
    def d(self) -> int:
        return self.inner[0].d

    def inner_integrals(self, mu: EmpiricalMeasure) -> np.ndarray:
        return np.array([integrate(mu, phi) for phi in self.inner])

    def value(self, mu: EmpiricalMeasure) -> float:
        return float(self.outer.eval(self.inner_integrals(mu)))


def product_cylinder(F: CylinderFunction, G: CylinderFunction) -> CylinderFunction:
    """The product FG as a cylinder function: concatenated inner list, product outer."""
    return CylinderFunction(F.inner + G.inner, product_outer(F.outer, G.outer),
                            label=f"({F.label})*({G.label})")


# ---------------------------------------------------------------------------
# coefficients and generators


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Drift b(t, x, mu) and diffusion sigma(t, x, mu); a = sigma sigma^T.

    b maps (t, X, mu) with X of shape (..., d) to an array broadcastable to
    X's shape; sigma to (d, m) or (..., d, m). Forming a from sigma keeps it
    symmetric positive semidefinite by construction.
    """

    b: object
    sigma: object
    d: int
    m: int
    lipschitz: float | None = None
    bounded: bool = True
    label: str = ""

    def drift(self, t, X, mu) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        bv = np.asarray(self.b(t, X, mu), dtype=float)
        try:
            bv = np.broadcast_to(bv, X.shape)
        except ValueError:
            raise ValueError(f"drift output shape {bv.shape} does not broadcast "
                             f"to state shape {X.shape}") from None
        if not np.all(np.isfinite(bv)):
            bad = np.argwhere(~np.isfinite(bv))[0]
            raise ValueError(f"drift non-finite at t={t!r}, entry index {tuple(bad)}")
        return bv

    def diffusion(self, t, X, mu) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        sv = np.asarray(self.sigma(t, X, mu), dtype=float)
        if sv.shape[-2:] != (self.d, self.m):
            raise ValueError(f"diffusion output must end in (d,m)=({self.d},{self.m}), "
                             f"got {sv.shape}")
        if not np.all(np.isfinite(sv)):
            raise ValueError(f"diffusion non-finite at t={t!r}")
        return sv

    def a(self, t, X, mu) -> np.ndarray:
        sv = self.diffusion(t, X, mu)
        return np.einsum("...dm,...em->...de", sv, sv)


def apply_L(phi, coeffs: Coefficients, t, x, mu: EmpiricalMeasure):
    """Generator on test functions: b . grad phi + 1/2 a : hess phi at (t, x, mu).

    x may be a single point (d,) or a batch (..., d); the return matches the
    leading shape (a float for single points).
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    g = phi.grad(X)
    H = phi.hess(X)
    bv = coeffs.drift(t, X, mu)
    av = coeffs.a(t, X, mu)
    val = np.einsum("...d,...d->...", bv, g) + 0.5 * np.einsum("...de,...de->...", av, H)
    return float(val) if single else val


def apply_K(F: CylinderFunction, coeffs: Coefficients, t, x, mu: EmpiricalMeasure):
    """Lifted generator on cylinder functions: sum_i dPsi_i(L_Phi(mu)) L phi_i."""
    levels = F.inner_integrals(mu)
    dPsi = np.asarray(F.outer.grad(levels), dtype=float)
    out = 0.0
    for i, phi in enumerate(F.inner):
        out = out + dPsi[i] * apply_L(phi, coeffs, t, x, mu)
    return out


def leibniz_gap(F: CylinderFunction, G: CylinderFunction, coeffs: Coefficients,
                t, x, mu: EmpiricalMeasure):
    """|K(FG) - F KG - G KF| at (t, x, mu); the product rule makes this ~0."""
    FG = product_cylinder(F, G)
    gap = (apply_K(FG, coeffs, t, x, mu)
           - F.value(mu) * apply_K(G, coeffs, t, x, mu)
           - G.value(mu) * apply_K(F, coeffs, t, x, mu))
    return float(np.max(np.abs(gap)))
