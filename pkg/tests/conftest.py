"""Shared builders for the test suite.

Cached pipeline pieces (problems, solver runs, exact projections) are
treated as read-only by every test; anything that needs a modified
trajectory builds a fresh object from arithmetic on the cached ones.
"""

import functools

import numpy as np

import maxbound as mb


@functools.lru_cache(maxsize=None)
def cavity_setup(n, nt, T=1.0, m=1, mode_n=1):
    """(problem, leapfrog output, exact projection) for the standing mode."""
    grid = mb.GridSpec(n, n, n, 1.0, 1.0, 1.0, nt, T)
    case = mb.cavity_mode(m=m, n=mode_n)
    p = mb.assemble_problem(grid, case=case)
    approx = mb.leapfrog_solve(p)
    exact = mb.project_exact(case, grid)
    return p, approx, exact


@functools.lru_cache(maxsize=None)
def polynomial_setup(n, nt, T=1.0):
    """(problem, exact projection) for the residual-free polynomial case."""
    grid = mb.GridSpec(n, n, n, 1.0, 1.0, 1.0, nt, T)
    case = mb.polynomial_source()
    p = mb.assemble_problem(grid, case=case)
    exact = mb.project_exact(case, grid)
    return p, exact


def random_edge_interior(grid, rng):
    """Random edge field with zero tangential trace."""
    f = mb.StaggeredField.zeros(grid, mb.EDGE)
    f.x[...] = rng.standard_normal(f.x.shape)
    f.y[...] = rng.standard_normal(f.y.shape)
    f.z[...] = rng.standard_normal(f.z.shape)
    from maxbound.operators import zero_tangential

    return zero_tangential(f)


def random_face(grid, rng):
    f = mb.StaggeredField.zeros(grid, mb.FACE)
    f.x[...] = rng.standard_normal(f.x.shape)
    f.y[...] = rng.standard_normal(f.y.shape)
    f.z[...] = rng.standard_normal(f.z.shape)
    return f


def smooth_edge(grid):
    """Smooth edge field with zero tangential trace on the box boundary."""
    import math

    bx = math.pi / grid.lx
    by = math.pi / grid.ly
    bz = math.pi / grid.lz
    return mb.StaggeredField.sample(
        grid,
        mb.EDGE,
        lambda X, Y, Z: np.sin(by * Y) * np.sin(bz * Z) * (1.0 + 0.3 * np.cos(bx * X)),
        lambda X, Y, Z: np.sin(bx * X) * np.sin(bz * Z) * np.cos(0.5 * by * Y),
        lambda X, Y, Z: np.sin(bx * X) * np.sin(by * Y) * (0.5 + np.sin(bz * Z)),
    )
