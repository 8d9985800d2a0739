import numpy as np
import pytest
import scipy.linalg

from anatra.exceptions import InvalidShots
from anatra.qaoa import (
    Graph,
    QaoaCircuit,
    _apply_mixer,
    brute_force_maxcut,
    cut_values,
    exact_expectation,
    load_graph,
    shot_oracle,
    statevector,
)

C6 = QaoaCircuit(Graph.c6(), 5)
CHVATAL = QaoaCircuit(Graph.chvatal(), 5)


def test_maxcut_values():
    assert brute_force_maxcut(Graph.c6()) == 6
    assert brute_force_maxcut(Graph.chvatal()) == 20
    assert cut_values(Graph.chvatal()).max() == 20


def test_chvatal_is_four_regular():
    g = Graph.chvatal()
    deg = np.bincount(np.array(g.edges).ravel(), minlength=12)
    assert g.n == 12 and len(g.edges) == 24 and np.all(deg == 4)


def test_zero_parameters_give_half_the_edges():
    assert exact_expectation(C6, np.zeros(10)) == pytest.approx(3.0, abs=1e-12)
    assert exact_expectation(CHVATAL, np.zeros(10)) == pytest.approx(12.0, abs=1e-12)


def test_norm_preserved_per_layer():
    rng = np.random.default_rng(0)
    g = Graph.chvatal()
    cut = cut_values(g)
    psi = np.full(2**g.n, 2.0 ** (-g.n / 2), dtype=complex)
    for gamma, beta in rng.uniform(0, 2 * np.pi, (5, 2)):
        psi *= np.exp(-1j * gamma * cut)
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)
        psi = _apply_mixer(psi, g.n, beta)
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)


def test_single_edge_matches_matrix_product():
    circuit = QaoaCircuit(Graph(2, ((0, 1),)), 1)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    I2 = np.eye(2)
    C = 0.5 * (np.eye(4) - np.kron(Z, Z))
    B = np.kron(X, I2) + np.kron(I2, X)
    plus = np.full(4, 0.5, dtype=complex)
    for gamma, beta in [(0.3, 0.7), (1.9, -0.4), (4.0, 2.5)]:
        psi = scipy.linalg.expm(-1j * beta * B) @ scipy.linalg.expm(-1j * gamma * C) @ plus
        expected = float(np.real(psi.conj() @ C @ psi))
        assert exact_expectation(circuit, np.array([gamma, beta])) == pytest.approx(expected, abs=1e-10)


def test_mixer_acts_on_correct_qubit():
    # e^{-i pi/2 X} on every qubit maps |000> to (-i)^3 |111>
    psi = np.zeros(8, dtype=complex)
    psi[0] = 1.0
    out = _apply_mixer(psi, 3, np.pi / 2)
    assert abs(out[7]) == pytest.approx(1.0)


def test_gamma_periodicity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        theta = rng.uniform(0, 2 * np.pi, 10)
        shifted = theta.copy()
        shifted[::2] += 2 * np.pi
        assert exact_expectation(C6, shifted) == pytest.approx(exact_expectation(C6, theta), abs=1e-9)


def test_shot_mean_converges():
    theta = np.random.default_rng(2).uniform(0, 2 * np.pi, 10)
    exact = exact_expectation(C6, theta)
    hits = 0
    for seed in range(100):
        ev = shot_oracle(C6, 100_000, seed).evaluate(theta)
        hits += abs(-ev.value - exact) <= 4 * ev.std_error
    assert hits >= 95


def test_shot_mean_unbiased():
    theta = np.random.default_rng(3).uniform(0, 2 * np.pi, 10)
    exact = exact_expectation(C6, theta)
    evs = [shot_oracle(C6, 200, seed).evaluate(theta) for seed in range(200)]
    grand = -np.mean([e.value for e in evs])
    pooled = np.sqrt(np.mean([e.std_error**2 for e in evs]) / len(evs))
    assert abs(grand - exact) <= 3 * pooled


def test_std_error_bounds():
    oracle = shot_oracle(C6, 50, 0)
    rng = np.random.default_rng(4)
    for _ in range(20):
        ev = oracle.evaluate(rng.uniform(0, 2 * np.pi, 10))
        assert 0.0 < ev.std_error <= 6 / np.sqrt(50)
        assert -6.0 <= ev.value <= 0.0


def test_deterministic_replay():
    thetas = np.random.default_rng(5).uniform(0, 2 * np.pi, (10, 10))
    a = shot_oracle(CHVATAL, 64, 11)
    b = shot_oracle(CHVATAL, 64, 11)
    assert [a(t) for t in thetas] == [b(t) for t in thetas]


def test_true_value_is_negated_expectation():
    theta = np.linspace(0, 1, 10)
    assert shot_oracle(C6, 10, 0).true_value(theta) == -exact_expectation(C6, theta)


@pytest.mark.parametrize("shots", [0, 1])
def test_invalid_shots(shots):
    with pytest.raises(InvalidShots):
        shot_oracle(C6, shots)


def test_parameter_shape_checked():
    with pytest.raises(ValueError):
        statevector(C6, np.zeros(9))


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 5),)])
def test_invalid_graphs(edges):
    with pytest.raises(ValueError):
        Graph(3, edges)


def test_graph_size_limit():
    with pytest.raises(ValueError):
        Graph(21, ())


def test_load_graph_file(tmp_path):
    path = tmp_path / "k4.txt"
    path.write_text("4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n")
    g = load_graph(str(path))
    assert g.n == 4 and len(g.edges) == 6
    assert brute_force_maxcut(g) == 4
    assert load_graph("c6") == Graph.c6()
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError):
        load_graph(str(bad))
