"""Gaussian coefficient draws and the random processes built on them.

Every process of the laboratory is a linear combination of a shared
pair of standard Gaussian coefficient vectors (a, b):

* F_n — eigenfunction sum over the two boundary families,
* f_n — sqrt(omega) * F_n,
* X_n — half-frequency trigonometric sum in the variable Omega(x),
* X_n_raw — X_n / sqrt(omega) (the unweighted comparison process),
* T_n / C_n — classic stationary trigonometric polynomials,
* perturbed — T_n with per-frequency perturbation terms.

Coefficients come from a counter-based generator keyed by
(master_seed, n, replicate_id, stream), so draws are reproducible and
independent of evaluation or scheduling order.  Eigenfunction sums
interpolate their stored (psi, psi') samples with a cubic Hermite
rule between grid points; the trigonometric kinds evaluate in closed
form.  All evaluators are deterministic and vectorized, and every
kind has an analytic derivative.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .weights import TWO_PI, default_grid, omega_map

KINDS = ("F_n", "f_n", "X_n", "X_n_raw", "T_n", "C_n", "perturbed")


@dataclass(frozen=True, eq=False)
class CoefficientDraw:
    master_seed: int
    n: int
    replicate_id: int
    a: np.ndarray
    b: np.ndarray
    seed: int  # derived record seed, for provenance columns

    def same_draw(self, other):
        return (self.master_seed == other.master_seed and self.n == other.n
                and self.replicate_id == other.replicate_id)


def sample_coefficients(master_seed, n, replicate_id):
    """2n standard Gaussians from a counter-based derivation of
    (master_seed, n, replicate_id); streams 0/1 feed a/b."""
    if n < 1 or int(n) != n:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    if master_seed < 0 or replicate_id < 0:
        raise PreconditionError("master_seed and replicate_id must be non-negative")
    n = int(n)

    def stream(tag):
        ss = np.random.SeedSequence(entropy=int(master_seed),
                                    spawn_key=(n, int(replicate_id), tag))
        return np.random.Generator(np.random.Philox(ss)).standard_normal(n)

    ss_rec = np.random.SeedSequence(entropy=int(master_seed),
                                    spawn_key=(n, int(replicate_id)))
    seed = int(ss_rec.generate_state(1, dtype=np.uint64)[0])
    return CoefficientDraw(master_seed=int(master_seed), n=n,
                           replicate_id=int(replicate_id),
                           a=stream(0), b=stream(1), seed=seed)


@dataclass(frozen=True)
class PerturbationFamily:
    """Per-frequency perturbations (eps_k, eta_k) with their declared
    bound constants: |eps_k| <= c0/k and |d/dx eps_k| <= c1, same for
    eta_k.  The closures take (k, x) and must broadcast."""

    name: str
    eps: object
    eta: object
    deps: object
    deta: object
    c0: float = 0.5
    c1: float = 1.0


def default_perturbation(c0=0.5, c1=1.0):
    """eps_k(x) = sin((k+1)x)/(2k), eta_k(x) = cos((k+1)x)/(2k):
    smooth, oscillatory, with |eps_k| <= 1/(2k) and |eps_k'| <= 1."""
    return PerturbationFamily(
        name="default",
        eps=lambda k, x: np.sin((k + 1) * x) / (2.0 * k),
        eta=lambda k, x: np.cos((k + 1) * x) / (2.0 * k),
        deps=lambda k, x: (k + 1) * np.cos((k + 1) * x) / (2.0 * k),
        deta=lambda k, x: -(k + 1) * np.sin((k + 1) * x) / (2.0 * k),
        c0=float(c0), c1=float(c1),
    )


def verify_perturbation(family, n, points=None):
    """Check the declared bounds by sampling; raises a precondition
    error with a bound report naming the first offending (k, bound)."""
    x = points if points is not None else np.linspace(0.0, TWO_PI, 257)
    k = np.arange(1, n + 1, dtype=float)[:, None]
    checks = (
        ("|eps_k|", np.abs(family.eps(k, x[None, :])), family.c0 / k),
        ("|eta_k|", np.abs(family.eta(k, x[None, :])), family.c0 / k),
        ("|eps_k'|", np.abs(family.deps(k, x[None, :])), np.full_like(k, family.c1)),
        ("|eta_k'|", np.abs(family.deta(k, x[None, :])), np.full_like(k, family.c1)),
    )
    slack = 1e-12
    for label, got, allowed in checks:
        bad = got > allowed + slack
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise PreconditionError(
                "perturbation %r violates its bound: %s = %.6g at k=%d, "
                "x=%.6f exceeds %.6g"
                % (family.name, label, got[i, j], i + 1, x[j], allowed[i, 0]))


def _hermite_weights(x, h, n_cells):
    xs = np.asarray(x, dtype=float)
    idx = np.clip((xs / h).astype(int), 0, n_cells - 1)
    s = xs / h - idx
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    d00 = (6.0 * s * s - 6.0 * s) / h
    d10 = 3.0 * s * s - 4.0 * s + 1.0
    d01 = (6.0 * s - 6.0 * s * s) / h
    d11 = 3.0 * s * s - 2.0 * s
    return idx, (h00, h10 * h, h01, h11 * h), (d00, d10, d01, d11)


def hermite_rows(funcs, dfuncs, h, x, want_deriv=False):
    """Evaluate every row of (funcs, dfuncs) samples at the points x
    with the cubic Hermite rule.  Returns (vals, derivs or None) of
    shape (rows, len(x))."""
    idx, wv, wd = _hermite_weights(x, h, funcs.shape[1] - 1)
    f0 = funcs[:, idx]
    f1 = funcs[:, idx + 1]
    g0 = dfuncs[:, idx]
    g1 = dfuncs[:, idx + 1]
    vals = wv[0] * f0 + wv[1] * g0 + wv[2] * f1 + wv[3] * g1
    if not want_deriv:
        return vals, None
    ders = wd[0] * f0 + wd[1] * g0 + wd[2] * f1 + wd[3] * g1
    return vals, ders


class _HalfFreqPoly:
    """Stationary pullback: (1/sqrt n) sum a_k cos(k y/2) + b_k sin(k y/2)."""

    def __init__(self, draw):
        self.draw = draw
        self.n = draw.n
        self._freq = 0.5 * np.arange(1, draw.n + 1)
        self._root = 1.0 / math.sqrt(draw.n)

    def _eval(self, y, deriv):
        ys = np.asarray(y, dtype=float)
        scalar = ys.ndim == 0
        ph = np.atleast_1d(ys)[:, None] * self._freq
        c, s = np.cos(ph), np.sin(ph)
        if deriv:
            out = (c @ (self.draw.b * self._freq) - s @ (self.draw.a * self._freq))
        else:
            out = c @ self.draw.a + s @ self.draw.b
        out *= self._root
        return float(out[0]) if scalar else out

    def value(self, y):
        return self._eval(y, False)

    def deriv(self, y):
        return self._eval(y, True)


class RandomProcess:
    """One evaluable Gaussian random function bound to a draw.

    Use build_process() to construct; value(x) and deriv(x) are
    vectorized and deterministic given the fields.
    """

    def __init__(self, kind, n, draw, weight=None, basis=None,
                 perturbation=None, grid=None):
        self.kind = kind
        self.n = n
        self.draw = draw
        self.weight = weight
        self.basis = basis
        self.perturbation = perturbation
        self.grid = grid if grid is not None else default_grid()
        self._root = 1.0 / math.sqrt(n)
        if kind in ("X_n", "X_n_raw"):
            self._omap = omega_map(weight, self.grid)
        if kind in ("T_n", "C_n", "perturbed"):
            self._freq = np.arange(1, n + 1, dtype=float)
        elif kind in ("X_n", "X_n_raw"):
            self._freq = 0.5 * np.arange(1, n + 1)

    # -- evaluation ----------------------------------------------------

    def value(self, x):
        return self._dispatch(x, False)

    def deriv(self, x):
        return self._dispatch(x, True)

    def omega(self, x):
        """Omega(x) for the kinds built on the change of variables."""
        return self._omap.forward(x)

    def stationary_pullback(self):
        """The half-frequency polynomial this process reduces to in
        the variable y = Omega(x) (shares the coefficient draw)."""
        if self.kind not in ("X_n", "X_n_raw"):
            raise DomainError("stationary_pullback needs an X-kind process, "
                              "got %r" % (self.kind,))
        return _HalfFreqPoly(self.draw)

    def _dispatch(self, x, deriv):
        xs = np.asarray(x, dtype=float)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        out = getattr(self, "_eval_" + self.kind)(xs, deriv)
        return float(out[0]) if scalar else out

    def _basis_sum(self, xs, deriv):
        bc_c, bc_d = self.basis
        h = bc_c.grid.h
        u, du = hermite_rows(bc_c.funcs[:self.n], bc_c.dfuncs[:self.n], h, xs, deriv)
        v, dv = hermite_rows(bc_d.funcs[:self.n], bc_d.dfuncs[:self.n], h, xs, deriv)
        val = (self.draw.a @ u + self.draw.b @ v) * self._root
        if not deriv:
            return val, None
        der = (self.draw.a @ du + self.draw.b @ dv) * self._root
        return val, der

    def _eval_F_n(self, xs, deriv):
        val, der = self._basis_sum(xs, deriv)
        return der if deriv else val

    def _eval_f_n(self, xs, deriv):
        val, der = self._basis_sum(xs, deriv)
        om = np.asarray(self.weight.eval(xs), dtype=float)
        root = np.sqrt(om)
        if not deriv:
            return root * val
        om1 = np.asarray(self.weight.deriv1(xs), dtype=float)
        # need the value too for the product rule
        plain, _ = self._basis_sum(xs, False)
        return 0.5 * om1 / root * plain + root * der

    def _x_parts(self, xs, deriv):
        ph = self._omap.forward(xs)[:, None] * self._freq
        c, s = np.cos(ph), np.sin(ph)
        val = (c @ self.draw.a + s @ self.draw.b) * self._root
        if not deriv:
            return val, None
        om = np.asarray(self.weight.eval(xs), dtype=float)
        der = om * (c @ (self.draw.b * self._freq)
                    - s @ (self.draw.a * self._freq)) * self._root
        return val, der

    def _eval_X_n(self, xs, deriv):
        val, der = self._x_parts(xs, deriv)
        return der if deriv else val

    def _eval_X_n_raw(self, xs, deriv):
        om = np.asarray(self.weight.eval(xs), dtype=float)
        root = np.sqrt(om)
        if not deriv:
            val, _ = self._x_parts(xs, False)
            return val / root
        val, der = self._x_parts(xs, True)
        om1 = np.asarray(self.weight.deriv1(xs), dtype=float)
        return der / root - 0.5 * val * om1 / (om * root)

    def _trig_parts(self, xs, deriv):
        ph = xs[:, None] * self._freq
        c, s = np.cos(ph), np.sin(ph)
        if deriv:
            return (c @ (self.draw.b * self._freq)
                    - s @ (self.draw.a * self._freq)) * self._root, c, s
        return (c @ self.draw.a + s @ self.draw.b) * self._root, c, s

    def _eval_T_n(self, xs, deriv):
        out, _, _ = self._trig_parts(xs, deriv)
        return out

    def _eval_C_n(self, xs, deriv):
        ph = xs[:, None] * self._freq
        if deriv:
            return -(np.sin(ph) @ (self.draw.a * self._freq)) * self._root
        return (np.cos(ph) @ self.draw.a) * self._root

    def _eval_perturbed(self, xs, deriv):
        out, _, _ = self._trig_parts(xs, deriv)
        fam = self.perturbation
        k = np.arange(1, self.n + 1, dtype=float)[None, :]
        if deriv:
            extra = (fam.deps(k, xs[:, None]) @ self.draw.a
                     + fam.deta(k, xs[:, None]) @ self.draw.b)
        else:
            extra = (fam.eps(k, xs[:, None]) @ self.draw.a
                     + fam.eta(k, xs[:, None]) @ self.draw.b)
        return out + extra * self._root


def build_process(kind, n, draw, weight=None, basis_pair=None,
                  perturbation=None, grid=None):
    """Construct a RandomProcess, checking the preconditions of the
    requested kind."""
    if kind not in KINDS:
        raise DomainError("unknown process kind %r (choose from %s)"
                          % (kind, ", ".join(KINDS)))
    if draw.n != n:
        raise PreconditionError("draw has n=%d but the process wants n=%d"
                                % (draw.n, n))
    basis = None
    if kind in ("F_n", "f_n"):
        if basis_pair is None:
            raise PreconditionError("kind %r needs the (C, D) eigenbasis pair" % kind)
        bc_c, bc_d = basis_pair
        if bc_c.bc.value != "C" or bc_d.bc.value != "D":
            raise PreconditionError("basis_pair must be ordered (C family, D family)")
        if bc_c.k_max < n or bc_d.k_max < n:
            raise PreconditionError(
                "eigenbasis too small: need %d pairs, have (%d, %d)"
                % (n, bc_c.k_max, bc_d.k_max))
        if bc_c.grid.count != bc_d.grid.count:
            raise PreconditionError("the two family bases use different grids")
        weight = weight if weight is not None else bc_c.weight
        basis = (bc_c, bc_d)
        grid = bc_c.grid
    if kind in ("X_n", "X_n_raw", "f_n") and weight is None:
        raise PreconditionError("kind %r needs a weight" % kind)
    pert = None
    if kind == "perturbed":
        pert = perturbation if perturbation is not None else default_perturbation()
        verify_perturbation(pert, n)
    return RandomProcess(kind, n, draw, weight=weight, basis=basis,
                         perturbation=pert, grid=grid)


# -- thin wrappers matching the operation vocabulary -------------------

def _expect_kind(proc, kind):
    if proc.kind != kind:
        raise PreconditionError("expected a %s process, got %r" % (kind, proc.kind))


def eval_F(proc, x, deriv=False):
    _expect_kind(proc, "F_n")
    return proc.deriv(x) if deriv else proc.value(x)


def eval_f(proc, x, deriv=False):
    _expect_kind(proc, "f_n")
    return proc.deriv(x) if deriv else proc.value(x)


def eval_X(proc, x, deriv=False):
    if proc.kind not in ("X_n", "X_n_raw"):
        raise PreconditionError("expected an X-kind process, got %r" % (proc.kind,))
    return proc.deriv(x) if deriv else proc.value(x)


def eval_T(proc, x, deriv=False):
    _expect_kind(proc, "T_n")
    return proc.deriv(x) if deriv else proc.value(x)


def eval_C(proc, x, deriv=False):
    _expect_kind(proc, "C_n")
    return proc.deriv(x) if deriv else proc.value(x)


def eval_perturbed(proc, x, deriv=False):
    _expect_kind(proc, "perturbed")
    return proc.deriv(x) if deriv else proc.value(x)


def eval_epsilon(proc_f, proc_X, x):
    """eps_n(x) = f_n(x) - X_n(x) for processes sharing one draw."""
    _expect_kind(proc_f, "f_n")
    _expect_kind(proc_X, "X_n")
    if not proc_f.draw.same_draw(proc_X.draw):
        raise PreconditionError("eval_epsilon needs processes with a shared draw")
    return proc_f.value(x) - proc_X.value(x)


def eval_epsilon_sup(proc_f, proc_X):
    """sup of |eps_n| over the storage grid."""
    x = proc_f.grid.points
    return float(np.max(np.abs(eval_epsilon(proc_f, proc_X, x))))
