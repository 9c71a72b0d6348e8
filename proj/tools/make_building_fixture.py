#!/usr/bin/env python3
"""Synthetic 8-floor, 3-DOF-per-floor building model (n = 48).

Shear chain with eccentric stories, so x, y and torsion couple. Rayleigh
damping. State is [q; dq/dt], output is the x velocity of the first floor
(state 25), input is a lateral force pattern. Writes build.mat (A stored
sparse, zlib compressed) for `tsmor convert`.
"""
import argparse
import pathlib

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse

FLOORS = 8


def assemble():
    rng = np.random.default_rng(20240105)
    m = 1.0 + 0.05 * np.arange(FLOORS)[::-1] + 0.02 * rng.standard_normal(FLOORS)
    j = m * (1.1 + 0.03 * rng.standard_normal(FLOORS))
    kx = 975.0 * (1.0 - 0.04 * np.arange(FLOORS)) * (1 + 0.03 * rng.standard_normal(FLOORS))
    ky = 1237.5 * (1.0 - 0.035 * np.arange(FLOORS)) * (1 + 0.03 * rng.standard_normal(FLOORS))
    kt = 1950.0 * (1.0 - 0.03 * np.arange(FLOORS)) * (1 + 0.03 * rng.standard_normal(FLOORS))
    ex = 0.12 + 0.03 * rng.standard_normal(FLOORS)
    ey = 0.09 + 0.03 * rng.standard_normal(FLOORS)

    dof = 3 * FLOORS
    M = np.zeros((dof, dof))
    K = np.zeros((dof, dof))
    for i in range(FLOORS):
        M[3 * i:3 * i + 3, 3 * i:3 * i + 3] = np.diag([m[i], m[i], j[i]])
        ks = np.array([
            [kx[i], 0.0, -kx[i] * ey[i]],
            [0.0, ky[i], ky[i] * ex[i]],
            [-kx[i] * ey[i], ky[i] * ex[i], kt[i] + kx[i] * ey[i] ** 2 + ky[i] * ex[i] ** 2],
        ])
        a = slice(3 * i, 3 * i + 3)
        K[a, a] += ks
        if i > 0:
            b = slice(3 * i - 3, 3 * i)
            K[b, b] += ks
            K[a, b] -= ks
            K[b, a] -= ks
    # Reorder to [x_1..x_8, y_1..y_8, theta_1..theta_8].
    perm = np.concatenate([np.arange(0, dof, 3), np.arange(1, dof, 3), np.arange(2, dof, 3)])
    M = M[np.ix_(perm, perm)]
    K = K[np.ix_(perm, perm)]
    D = 1.2 * M + 2.0e-4 * K

    Minv = np.linalg.inv(M)
    A = np.block([[np.zeros((dof, dof)), np.eye(dof)], [-Minv @ K, -Minv @ D]])
    f = np.zeros(dof)
    f[:FLOORS] = np.linspace(0.3, 1.0, FLOORS)
    f[FLOORS:2 * FLOORS] = 0.25 * np.linspace(1.0, 0.4, FLOORS)
    f[2 * FLOORS:] = 0.1
    B = np.concatenate([np.zeros(dof), Minv @ f]).reshape(-1, 1)
    C = np.zeros((1, 2 * dof))
    C[0, dof] = 1.0
    return A, B, C


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/building")
    args = ap.parse_args()
    A, B, C = assemble()
    ev = np.linalg.eigvals(A)
    print("max Re eig:", ev.real.max())
    print("natural freqs:", np.sort(np.abs(ev[ev.imag > 0])).round(2))
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A[np.abs(A) < 1e-14] = 0.0
    scipy.io.savemat(out / "build.mat", {"A": scipy.sparse.csc_matrix(A), "B": B, "C": C},
                     do_compression=True, oned_as="column")


if __name__ == "__main__":
    main()
