"""Shared fixtures: the acceptance-criterion reporter and dense-matrix
reference builders used as oracles by several test modules."""

import numpy as np
import pytest

from cavityspin import spinfock

_criteria = []


@pytest.fixture
def criterion():
    """Record one named acceptance check; summarized at the end of the run."""

    def record(name, ok, detail=""):
        _criteria.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _criteria:
        flag = "PASS" if ok else "FAIL"
        line = f"[{flag}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def dense_hamiltonian(basis):
    """g=1 exchange Hamiltonian built directly from kron embeddings."""
    f = spinfock.field_matrices(basis.photon_cut)
    s = spinfock.spin_matrices(basis.total_spin)
    a = spinfock.joint_field_op(basis, f["a"])
    sp = spinfock.joint_spin_op(basis, s["S+"])
    sm = spinfock.joint_spin_op(basis, s["S-"])
    return a @ sp + a.T @ sm


def dense_lindblad_rhs(basis, gamma_f, gamma_a, g=1.0):
    """Reference master-equation right-hand side from explicit matrices."""
    H = g * dense_hamiltonian(basis)
    f = spinfock.field_matrices(basis.photon_cut)
    s = spinfock.spin_matrices(basis.total_spin)
    a = spinfock.joint_field_op(basis, f["a"])
    sm = spinfock.joint_spin_op(basis, s["S-"])

    def rhs(rho):
        out = -1j * (H @ rho - rho @ H)
        for gamma, c in ((gamma_f, a), (gamma_a, sm)):
            if gamma:
                cd = c.conj().T
                out += gamma * (c @ rho @ cd
                                - 0.5 * (cd @ c @ rho + rho @ cd @ c))
        return out

    return rhs


def random_density(dim, rng):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def random_pure(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
