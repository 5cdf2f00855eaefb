"""Sampled verification of the geometry identities and constant inequalities.

Each check draws random vectors and reports the worst violation against
its tolerance.  Identities use relative tolerances scaled by
(1 + magnitude of the operands); inequality checks use absolute slack.
The suite doubles as the empirical validation of mu = 1/(p-1) and
kappa = sqrt((q-1)/2): a run fails if either constant were wrong.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    SpaceDescriptor,
    duality_map_coords,
    inverse_duality_map_coords,
    lyapunov_coords,
)

__all__ = ["CheckResult", "constant_checks", "IDENTITY_TOL", "INEQUALITY_SLACK"]

IDENTITY_TOL = 1e-9
INEQUALITY_SLACK = 1e-12
INVERSE_PAIR_TOL = 1e-9
DEFINING_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    p: float
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def constant_checks(p: float, samples: int, seed: int,
                    dims: tuple[int, ...] = (2, 10, 200)) -> list[CheckResult]:
    """Run every geometry check for one exponent; vectors drawn U(-1, 1)."""
    rng = np.random.default_rng(seed)
    space_cache = {n: SpaceDescriptor(n, p) for n in dims}
    per_dim = max(1, samples // len(dims))

    worst = {
        "inverse pair": 0.0,
        "defining property <Jx,x> = ||x||^2": 0.0,
        "defining property ||Jx||_q = ||x||_p": 0.0,
        "three-point identity": 0.0,
        "two-point identity": 0.0,
        "V equals phi after J^{-1}": 0.0,
        "homogeneity J(tx) = tJx": 0.0,
        "lower bound (1/mu)||x-y||^2 <= phi(x,y)": 0.0,
        "dual smoothness with 2 kappa^2": 0.0,
        "V perturbation bound": 0.0,
    }

    for n, space in space_cache.items():
        mu = space.mu
        kappa = space.kappa
        for _ in range(per_dim):
            x = rng.uniform(-1.0, 1.0, n)
            y = rng.uniform(-1.0, 1.0, n)
            z = rng.uniform(-1.0, 1.0, n)

            jx = duality_map_coords(space, x)
            jy = duality_map_coords(space, y)
            jz = duality_map_coords(space, z)

            back = inverse_duality_map_coords(space, jx)
            nx = space.primal_norm(x)
            worst["inverse pair"] = max(
                worst["inverse pair"],
                space.primal_norm(back - x) / (1.0 + nx),
            )

            pair = float(jx @ x)
            worst["defining property <Jx,x> = ||x||^2"] = max(
                worst["defining property <Jx,x> = ||x||^2"],
                abs(pair - nx * nx) / (1.0 + nx * nx),
            )
            njx = space.dual_norm(jx)
            worst["defining property ||Jx||_q = ||x||_p"] = max(
                worst["defining property ||Jx||_q = ||x||_p"],
                abs(njx - nx) / (1.0 + nx),
            )

            phi_xy = lyapunov_coords(space, x, y)
            phi_xz = lyapunov_coords(space, x, z)
            phi_zy = lyapunov_coords(space, z, y)
            three = phi_xz + phi_zy + 2.0 * float((x - z) @ (jz - jy))
            scale = 1.0 + abs(phi_xy) + abs(three)
            worst["three-point identity"] = max(
                worst["three-point identity"], abs(phi_xy - three) / scale
            )

            phi_yx = lyapunov_coords(space, y, x)
            two = 2.0 * float((x - y) @ (jx - jy))
            scale = 1.0 + abs(phi_xy + phi_yx) + abs(two)
            worst["two-point identity"] = max(
                worst["two-point identity"], abs(phi_xy + phi_yx - two) / scale
            )

            # V(x, x*) computed directly vs phi through the inverse map
            xs = rng.uniform(-1.0, 1.0, n)
            ns = space.dual_norm(xs)
            v_direct = nx * nx - 2.0 * float(x @ xs) + ns * ns
            v_via_phi = lyapunov_coords(space, x, inverse_duality_map_coords(space, xs))
            scale = 1.0 + abs(v_direct) + abs(v_via_phi)
            worst["V equals phi after J^{-1}"] = max(
                worst["V equals phi after J^{-1}"], abs(v_direct - v_via_phi) / scale
            )

            t = float(rng.uniform(0.1, 3.0))
            jt = duality_map_coords(space, t * x)
            worst["homogeneity J(tx) = tJx"] = max(
                worst["homogeneity J(tx) = tJx"],
                space.dual_norm(jt - t * jx) / (1.0 + t * space.dual_norm(jx)),
            )

            d = space.primal_norm(x - y)
            worst["lower bound (1/mu)||x-y||^2 <= phi(x,y)"] = max(
                worst["lower bound (1/mu)||x-y||^2 <= phi(x,y)"],
                d * d / mu - phi_xy,
            )

            # Lemma of 2-uniform smoothness applied in the dual lq
            u = rng.uniform(-1.0, 1.0, n)
            v = rng.uniform(-1.0, 1.0, n)
            ju = inverse_duality_map_coords(space, u)  # duality map of lq at u
            nu = space.dual_norm(u)
            nv = space.dual_norm(v)
            nuv = space.dual_norm(u + v)
            lhs = nuv * nuv
            rhs = nu * nu + 2.0 * float(v @ ju) + 2.0 * kappa**2 * nv * nv
            worst["dual smoothness with 2 kappa^2"] = max(
                worst["dual smoothness with 2 kappa^2"], lhs - rhs
            )

            ys = rng.uniform(-1.0, 1.0, n)
            jinv_xs = inverse_duality_map_coords(space, xs)
            v_base = nx * nx - 2.0 * float(x @ xs) + ns * ns
            nsy = space.dual_norm(xs + ys)
            v_shift = nx * nx - 2.0 * float(x @ (xs + ys)) + nsy * nsy
            lhs = v_base + 2.0 * float((jinv_xs - x) @ ys)
            worst["V perturbation bound"] = max(worst["V perturbation bound"], lhs - v_shift)

    tolerances = {
        "inverse pair": INVERSE_PAIR_TOL,
        "defining property <Jx,x> = ||x||^2": DEFINING_TOL,
        "defining property ||Jx||_q = ||x||_p": DEFINING_TOL,
        "three-point identity": IDENTITY_TOL,
        "two-point identity": IDENTITY_TOL,
        "V equals phi after J^{-1}": IDENTITY_TOL,
        "homogeneity J(tx) = tJx": IDENTITY_TOL,
        "lower bound (1/mu)||x-y||^2 <= phi(x,y)": INEQUALITY_SLACK,
        "dual smoothness with 2 kappa^2": INEQUALITY_SLACK,
        "V perturbation bound": INEQUALITY_SLACK,
    }
    return [CheckResult(name, p, worst[name], tolerances[name]) for name in worst]
