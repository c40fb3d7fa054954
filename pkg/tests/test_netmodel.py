"""Network model: matrix assembly, validation, certificate."""

import numpy as np
import pytest

from phgrid.errors import StructuralError
from phgrid.netmodel import (
    GROUND,
    Admittance,
    LineParams,
    PowerNetwork,
    RlBranch,
    SgParams,
    ShuntParams,
    assemble_network_matrix,
    contraction_certificate,
    edges,
    reference_frequency,
    rl_admittance,
    validate_network,
)

from _oracles import damping_blockdiag, hessian_blockdiag, kcl_kvl_rows, random_radial_network

# Published interconnection of the two-machine system over the ports
# (sg1, sg2, sh3, sh4, sh5, ln6, ln7); RL-load ports are appended after it.
W_TWO_MACHINE_7 = np.array(
    [
        [0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0],
        [-1, 0, 0, 0, 0, -1, 0],
        [0, -1, 0, 0, 0, 0, -1],
        [0, 0, 0, 0, 0, 1, 1],
        [0, 0, 1, 0, -1, 0, 0],
        [0, 0, 0, 1, -1, 0, 0],
    ],
    dtype=np.int64,
)


def _simple_sg(**kw):
    base = dict(J=2.0, F=1.0, T0=10.0, Rs=0.01, Ls=0.05, psi=3.0)
    base.update(kw)
    return SgParams(**base)


def test_two_machine_matrix_reproduces_published_block(two_machine):
    nm = assemble_network_matrix(two_machine)
    assert nm.labels == ("sg1", "sg2", "sh3", "sh4", "sh5", "ln6", "ln7", "ld8", "ld9", "ld10")
    assert np.array_equal(nm.W[:7, :7], W_TWO_MACHINE_7)
    # load ports mirror the SG sign structure on their buses
    assert nm.W[7, 2] == 1 and nm.W[2, 7] == -1
    assert nm.W[8, 3] == 1 and nm.W[3, 8] == -1
    assert nm.W[9, 4] == 1 and nm.W[4, 9] == -1


def test_single_sg_single_bus_matrix():
    net = PowerNetwork(
        n_bus=1,
        sgs=((0, _simple_sg()),),
        shunts=((0, ShuntParams(C=1.0, load=Admittance(G=0.5))),),
    )
    nm = assemble_network_matrix(net)
    assert np.array_equal(nm.W, np.array([[0, 1], [-1, 0]]))


def test_random_radial_networks_skew_and_kcl_kvl():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        net = random_radial_network(rng)
        assert validate_network(net) == []
        W = assemble_network_matrix(net).W
        assert np.array_equal(W, -W.T)
        assert set(np.unique(W)).issubset({-1, 0, 1})
        assert kcl_kvl_rows(net, W, rng) < 1e-12


def test_edge_reordering_permutes_matrix():
    rng = np.random.default_rng(7)
    net = random_radial_network(rng)
    while len(net.lines) < 2 or len(net.sgs) < 2:
        net = random_radial_network(rng)
    permuted = PowerNetwork(
        n_bus=net.n_bus,
        sgs=tuple(reversed(net.sgs)),
        shunts=net.shunts,
        lines=tuple(reversed(net.lines)),
    )
    W1 = assemble_network_matrix(net).W
    W2 = assemble_network_matrix(permuted).W

    # sigma[k] = index in `net` edge order of permuted edge k
    key = lambda e: (e.kind, e.frm, e.to, e.params)
    pos = {key(e): i for i, e in enumerate(edges(net))}
    sigma = [pos[key(e)] for e in edges(permuted)]
    P = np.zeros_like(W1)
    for k, s in enumerate(sigma):
        P[k, s] = 1
    assert np.array_equal(W2, P @ W1 @ P.T)


def test_validate_two_machine_clean(two_machine):
    assert validate_network(two_machine) == []


def test_validate_flags_zero_capacitance(two_machine):
    bad = PowerNetwork(
        n_bus=3,
        sgs=two_machine.sgs,
        shunts=(
            two_machine.shunts[0],
            two_machine.shunts[1],
            (2, ShuntParams(C=0.0, load=RlBranch(4.0, 1.0))),
        ),
        lines=two_machine.lines,
    )
    v = validate_network(bad)
    assert len(v) == 1 and "bus 2" in v[0] and "C=0.0" in v[0]


def test_validate_flags_duplicate_capacitor(two_machine):
    bad = PowerNetwork(
        n_bus=3,
        sgs=two_machine.sgs,
        shunts=two_machine.shunts + ((2, ShuntParams(C=0.01, load=Admittance(G=1.0))),),
        lines=two_machine.lines,
    )
    v = validate_network(bad)
    assert any("hosts 2 shunt capacitors" in s for s in v)


def test_validate_flags_missing_capacitor_and_bad_endpoint():
    net = PowerNetwork(
        n_bus=2,
        sgs=((0, _simple_sg()),),
        shunts=((0, ShuntParams(C=1.0, load=Admittance(G=1.0))),),
        lines=((0, 5, LineParams(R=1.0, L=1.0)),),
    )
    v = validate_network(net)
    assert any("bus 1 lacks a shunt capacitor" in s for s in v)
    assert any("undefined endpoint" in s for s in v)


def test_validate_flags_disconnected_graph():
    net = PowerNetwork(
        n_bus=2,
        sgs=((0, _simple_sg()),),
        shunts=(
            (0, ShuntParams(C=1.0, load=Admittance(G=1.0))),
            (1, ShuntParams(C=1.0, load=Admittance(G=1.0))),
        ),
    )
    assert any("disconnected" in s for s in validate_network(net))


def test_assemble_raises_on_invalid():
    net = PowerNetwork(n_bus=1, sgs=((0, _simple_sg()),))
    with pytest.raises(StructuralError):
        assemble_network_matrix(net)


def test_certificate_synthetic_minima():
    # Hessian diagonal {2, 3} and damping diagonal {4, 5}:
    # shunt C=1/2 with G=4, line to ground L=1/3 with R=5.
    net = PowerNetwork(
        n_bus=1,
        shunts=((0, ShuntParams(C=0.5, load=Admittance(G=4.0))),),
        lines=((0, GROUND, LineParams(R=5.0, L=1.0 / 3.0)),),
    )
    cert = contraction_certificate(net)
    assert cert.hessian_floor_a == pytest.approx(2.0, rel=1e-15)
    assert cert.lambda_min_R == pytest.approx(4.0, rel=1e-15)
    assert cert.rate_c == pytest.approx(8.0, rel=1e-15)


def test_certificate_matches_dense_eigen_oracle(two_machine):
    cert = contraction_certificate(two_machine)
    a_oracle = float(np.linalg.eigvalsh(hessian_blockdiag(two_machine)).min())
    lam_oracle = float(np.linalg.eigvalsh(damping_blockdiag(two_machine)).min())
    assert abs(cert.hessian_floor_a - a_oracle) <= 1e-12 * a_oracle
    assert abs(cert.lambda_min_R - lam_oracle) <= 1e-12 * lam_oracle
    assert cert.rate_c == pytest.approx(a_oracle * lam_oracle, rel=1e-12)
    assert cert.rate_c > 0
    assert cert.undamped_cap_slots  # RL loads leave capacitor slots undamped


def test_certificate_remark_estimate_two_machine(two_machine):
    # min Re{Y} over the loads at omega_ref = T0/F, divided by the largest J.
    # Direct arithmetic: the center (4 ohm, 1 H) branch has the smallest Re Y.
    w = 1e4 / 85.5601
    y_end = 1000.0 / (1000.0**2 + (w * 10.0) ** 2)
    y_mid = 4.0 / (4.0**2 + (w * 1.0) ** 2)
    expect = min(y_end, y_mid) / 2.846e4
    cert = contraction_certificate(two_machine)
    assert cert.omega_ref == pytest.approx(w, rel=1e-15)
    assert cert.remark_estimate == pytest.approx(expect, rel=1e-12)
    assert y_mid < y_end  # the heavy center load sets the estimate


def test_certificate_invariant_under_relabeling():
    rng = np.random.default_rng(3)
    net = random_radial_network(rng)
    permuted = PowerNetwork(
        n_bus=net.n_bus,
        sgs=tuple(reversed(net.sgs)),
        shunts=tuple(reversed(net.shunts)),
        lines=tuple(reversed(net.lines)),
    )
    c1 = contraction_certificate(net)
    c2 = contraction_certificate(permuted)
    assert c1.rate_c == c2.rate_c
    assert c1.hessian_floor_a == c2.hessian_floor_a
    assert c1.lambda_min_R == c2.lambda_min_R


def test_rl_admittance_conversion():
    y = rl_admittance(3.0, 4.0, 2.0)
    assert y == pytest.approx(1.0 / complex(3.0, 8.0), rel=1e-15)


def test_reference_frequency(two_machine):
    assert reference_frequency(two_machine) == pytest.approx(1e4 / 85.5601, rel=1e-15)
    assert np.isnan(reference_frequency(PowerNetwork(n_bus=0)))
