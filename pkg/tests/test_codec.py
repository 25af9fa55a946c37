import numpy as np
import pytest

from statecoord.codec import (
    BlockCodeParams,
    CodebookSizeError,
    _array_pmf,
    decode_symbol,
    generate_codebooks,
    is_typical,
    make_codec_laws,
    rate_region_check,
    run_simulation,
)
from statecoord.probability import Alphabet, CondPmf, JointPmf
from statecoord.state_comm import StateCommProblem

AX2 = Alphabet(2)


def h2(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def bsc_rows(e):
    return np.array([[1 - e, e], [e, 1 - e]])


def binary_problem(e, rho=(0.5, 0.5)):
    prior = JointPmf((AX2,), np.asarray(rho, float))
    ch = np.broadcast_to(bsc_rows(e), (2, 2, 2)).copy()
    channel = CondPmf((AX2, AX2), (AX2,), ch)
    delta = np.array([[0.0, 1.0], [1.0, 0.0]])
    return StateCommProblem(prior, channel, delta, 1.0)


def chain_law(alpha=None, beta=None, rho=(0.5, 0.5)):
    """Joint Q(x0,u,v,x1): u = BSC(beta) of x0 (constant if beta is None),
    v = x1 = BSC(alpha) of x0 (constant if alpha is None)."""
    rho = np.asarray(rho, float)
    pu = bsc_rows(beta) if beta is not None else np.ones((2, 1))
    px1 = bsc_rows(alpha) if alpha is not None else np.ones((2, 1))
    nu, nx1 = pu.shape[1], px1.shape[1]
    law = np.zeros((2, nu, nx1, nx1))
    for x0 in range(2):
        for u in range(nu):
            for x1 in range(nx1):
                law[x0, u, x1, x1] = rho[x0] * pu[x0, u] * px1[x0, x1]
    return law


def std_params(n, B, r, rt, seed=0, ladder=(0.25, 0.4, 0.55, 0.7, 0.85)):
    e1, e2, e3, et, e = ladder
    return BlockCodeParams(n=n, B=B, R=r, R_tilde=rt, eps1=e1, eps2=e2,
                           eps3=e3, eps_tilde=et, eps=e, seed=seed)


# ---------------------------------------------------------------------------
# typicality
# ---------------------------------------------------------------------------


def test_is_typical_exact_type():
    law = JointPmf((AX2,), np.array([0.5, 0.5]))
    assert is_typical((np.array([0, 1, 0, 1]),), law, 1e-9)
    pair_law = JointPmf((AX2, AX2), np.array([[0.5, 0.0], [0.0, 0.5]]))
    seq = np.array([0, 1, 1, 0])
    assert is_typical((seq, seq), pair_law, 1e-9)


def test_is_typical_zero_prob_symbol():
    law = JointPmf((AX2,), np.array([1.0, 0.0]))
    assert not is_typical((np.array([0, 0, 1, 0]),), law, 0.5)


def test_is_typical_eps_window():
    law = JointPmf((AX2,), np.array([0.5, 0.5]))
    seq = np.array([0] * 6 + [1] * 4)
    assert is_typical((seq,), law, 0.2)
    assert not is_typical((seq,), law, 0.1)


def test_is_typical_length_mismatch():
    law = JointPmf((AX2, AX2), np.full((2, 2), 0.25))
    with pytest.raises(ValueError):
        is_typical((np.zeros(3, int), np.zeros(4, int)), law, 0.1)


def test_is_typical_bernoulli_monte_carlo():
    law = JointPmf((AX2,), np.array([0.5, 0.5]))
    rng = np.random.default_rng(0)
    hits = sum(
        is_typical((rng.integers(0, 2, size=1000),), law, 0.1)
        for _ in range(1000))
    assert hits / 1000 >= 0.99


# ---------------------------------------------------------------------------
# codebooks
# ---------------------------------------------------------------------------


def test_codebook_counts():
    params = std_params(10, 3, 0.5, 0.3)
    q = np.array([0.5, 0.5])
    books = generate_codebooks(params, q, q)
    assert params.num_u == 32
    assert params.num_v_per_j == 8
    for b in range(3):
        assert books.u[b].shape == (32, 10)
        assert books.v[b].shape == (256, 10)
    # per-block independence: different blocks differ
    assert not np.array_equal(books.u[0], books.u[1])


def test_codebook_determinism():
    params = std_params(10, 2, 0.5, 0.3, seed=42)
    q = np.array([0.3, 0.7])
    a = generate_codebooks(params, q, q)
    b = generate_codebooks(params, q, q)
    for blk in range(2):
        assert np.array_equal(a.u[blk], b.u[blk])
        assert np.array_equal(a.v[blk], b.v[blk])


def test_codebook_size_guard():
    params = std_params(800, 8, 0.5, 0.3)
    with pytest.raises(CodebookSizeError):
        generate_codebooks(params, np.array([0.5, 0.5]),
                           np.array([0.5, 0.5]))


# ---------------------------------------------------------------------------
# rate region
# ---------------------------------------------------------------------------


def law5_of(problem, law):
    return _array_pmf(make_codec_laws(problem, law, np.zeros(
        (law.shape[1], problem.ny), int)).q5)


def test_rate_region_midpoint_arithmetic():
    problem = binary_problem(0.05)
    law5 = law5_of(problem, chain_law(alpha=0.2))
    rc = rate_region_check(law5, (0.05, 0.05, 0.05))
    i2 = 1 - h2(0.2)
    i3 = 1 - h2(0.05)
    gap = (i3 - 0.05) - 0.05 - (i2 + 0.05)
    assert rc.feasible
    assert rc.i_x0_u == pytest.approx(0.0, abs=1e-9)
    assert rc.i_v_x0u == pytest.approx(i2, abs=1e-9)
    assert rc.i_v_yu == pytest.approx(i3, abs=1e-9)
    assert rc.gap == pytest.approx(gap, abs=1e-9)
    assert rc.r == pytest.approx(0.05 + gap / 3, abs=1e-9)
    assert rc.r_tilde == pytest.approx(i2 + 0.05 + gap / 3, abs=1e-9)


def test_rate_region_constant_infeasible():
    problem = binary_problem(0.05)
    law5 = law5_of(problem, chain_law())  # u, v, x1 all constant
    rc = rate_region_check(law5, (0.05, 0.05, 0.05))
    assert not rc.feasible


def test_rate_region_chain_rule_identity():
    rng = np.random.default_rng(3)
    for _ in range(30):
        arr = rng.gamma(1.0, 1.0, size=(2, 2, 2, 2, 2))
        law5 = _array_pmf(arr)
        rc = rate_region_check(law5)
        diff = rc.i_v_yu - rc.i_v_x0u
        cmi = (law5.conditional_mutual_information([2], [4], [1])
               - law5.conditional_mutual_information([2], [0], [1]))
        assert diff == pytest.approx(cmi, abs=1e-10)


# ---------------------------------------------------------------------------
# encoder / decoder behavior
# ---------------------------------------------------------------------------


def test_point_mass_state_and_u_never_fails_covering():
    problem = binary_problem(0.05, rho=(1.0, 0.0))
    law = chain_law(rho=(1.0, 0.0))  # everything constant
    g = np.array([[0, 0]])
    params = std_params(50, 4, 0.1, 0.1, seed=1)
    for seed in range(5):
        res = run_simulation(problem, law, g,
                             std_params(50, 4, 0.1, 0.1, seed=seed))
        assert res.event_counts["e0"] == 0
        assert np.all(res.trace["i"] == 0)


def test_covering_failure_regime():
    # R sits 0.2 bits below I(X0;U): the i-search never succeeds
    beta = 0.24
    i_x0u = 1 - h2(beta)
    assert 0.2 < i_x0u < 0.21
    problem = binary_problem(0.05)
    law = chain_law(alpha=None, beta=beta)
    g = np.array([[0, 1], [0, 1]])
    fails = total = 0
    for seed in range(20):
        params = std_params(800, 2, i_x0u - 0.2, 0.0, seed=seed)
        res = run_simulation(problem, law, g, params)
        fails += res.event_counts["e0"]
        total += params.B
    assert fails / total >= 0.9


def test_covering_success_regime():
    # R sits 0.2 bits above I(X0;U) + delta: the i-search succeeds
    beta = 0.45
    i_x0u = 1 - h2(beta)
    problem = binary_problem(0.05)
    law = chain_law(alpha=None, beta=beta)
    g = np.array([[0, 1], [0, 1]])
    fails = total = 0
    for seed in range(20):
        params = std_params(60, 2, i_x0u + 0.05 + 0.2, 0.0, seed=seed)
        res = run_simulation(problem, law, g, params)
        fails += res.event_counts["e0"]
        total += params.B
    assert fails / total <= 0.1


def test_e0_frequency_monotone_in_rate():
    beta = 0.35
    i_x0u = 1 - h2(beta)
    problem = binary_problem(0.05)
    law = chain_law(alpha=None, beta=beta)
    g = np.array([[0, 1], [0, 1]])
    freqs = []
    for r in (0.01, i_x0u + 0.03, 0.15):
        fails = total = 0
        for seed in range(10):
            res = run_simulation(problem, law, g,
                                 std_params(100, 2, r, 0.0, seed=seed))
            fails += res.event_counts["e0"]
            total += 2
        freqs.append(fails / total)
    assert freqs[0] >= freqs[1] >= freqs[2]
    assert freqs[0] > freqs[2]


def test_packing_failure_regime_wrong_index():
    # R + R~ exceeds I(V;Y,U) by 0.2: spurious typical pairs appear
    alpha, e = 0.3, 0.25
    i_vyu = 1 - h2(e)
    problem = binary_problem(e)
    law = chain_law(alpha=alpha)
    g = np.array([[0, 1]])
    rt = i_vyu + 0.2 - 0.15
    wrong = total = 0
    for seed in range(10):
        res = run_simulation(problem, law, g,
                             std_params(40, 4, 0.15, rt, seed=seed))
        wrong += res.event_counts["e3"]
        total += 4
    assert wrong / total >= 0.5


def test_packing_success_regime_wrong_index():
    # R + R~ sits 0.2 below I(V;Y,U) - delta: spurious pairs are rare
    alpha, e = 0.3, 0.1
    i_vyu = 1 - h2(e)
    problem = binary_problem(e)
    law = chain_law(alpha=alpha)
    g = np.array([[0, 1]])
    total_rate = i_vyu - 0.05 - 0.2
    r = 0.1
    wrong = total = 0
    for seed in range(10):
        res = run_simulation(problem, law, g,
                             std_params(50, 4, r, total_rate - r, seed=seed))
        wrong += res.event_counts["e3"]
        total += 4
    assert wrong / total <= 0.1


def test_decoder_causality_truncation():
    problem = binary_problem(0.25)
    law = chain_law(alpha=0.3)
    g = np.array([[0, 1]])
    params = std_params(40, 3, 0.1, 0.25, seed=5)
    res = run_simulation(problem, law, g, params)
    # rebuild x2 symbol by symbol from the traced indices and y-independent
    # prefix information only
    from statecoord.codec import generate_codebooks, make_codec_laws

    laws = make_codec_laws(problem, law, g)
    books = generate_codebooks(params, laws.q_u, laws.q_v)
    emp = res.empirical_type.probs
    # decode_symbol is memoryless in y: feeding a truncated stream gives the
    # same prefix of outputs
    u_row = books.u[0][res.trace["i_hat"][0]]
    y_block = np.array([0, 1] * 20)
    full = [decode_symbol(t, y_block[t], u_row, g) for t in range(40)]
    trunc = [decode_symbol(t, y_block[t], u_row, g) for t in range(20)]
    assert full[:20] == trunc


def test_simulation_deterministic():
    problem = binary_problem(0.25)
    law = chain_law(alpha=0.3)
    g = np.array([[0, 1]])
    params = std_params(40, 4, 0.1, 0.25, seed=9)
    a = run_simulation(problem, law, g, params)
    b = run_simulation(problem, law, g, params)
    assert a.to_json_dict() == b.to_json_dict()


def test_single_block_has_no_e4():
    problem = binary_problem(0.25)
    law = chain_law(alpha=0.3)
    g = np.array([[0, 1]])
    res = run_simulation(problem, law, g,
                         std_params(40, 1, 0.1, 0.25, seed=2))
    assert res.event_counts["e4"] == 0


def test_end_to_end_distortion_tracks_composite_noise():
    # decoder g(y) = y: distortion = P(y != x0) = alpha*(1-e) + (1-alpha)*e
    alpha, e = 0.3, 0.25
    problem = binary_problem(e)
    law = chain_law(alpha=alpha)
    g = np.array([[0, 1]])
    expect = alpha * (1 - e) + (1 - alpha) * e
    dists = []
    for seed in range(5):
        res = run_simulation(problem, law, g,
                             std_params(40, 6, 0.1, 0.25, seed=seed))
        dists.append(res.distortion)
    assert abs(np.median(dists) - expect) <= 0.07


def test_scaled_success_regime_events_and_distortion():
    """Whole-pipeline success demonstration at tractable codebook sizes.

    The typicality windows must simultaneously (a) accept the true coupling
    (needs eps3 * n * q_min >> sqrt(n q)) and (b) reject the independent
    coupling in the packing search (needs eps3 below the relative gap
    between the true and product cells); both hold here with a weak
    state-input correlation and a strong channel, which is the only corner
    where the codebooks also stay small."""
    alpha, e = 0.49, 0.1
    problem = binary_problem(e)
    law = chain_law(alpha=alpha)
    g = np.array([[0, 1]])
    rc = rate_region_check(law5_of(problem, law), (0.001, 0.001, 0.001))
    assert rc.feasible
    fracs, dists = [], []
    for seed in range(5):
        params = BlockCodeParams(n=2000, B=8, R=0.002, R_tilde=0.0025,
                                 eps1=0.1, eps2=0.2, eps3=0.3,
                                 eps_tilde=0.4, eps=0.5, seed=seed)
        res = run_simulation(problem, law, g, params)
        fracs.append(res.block_error_fraction())
        dists.append(res.distortion)
    d_target = alpha * (1 - e) + (1 - alpha) * e
    assert np.median(fracs) <= 0.15
    assert abs(np.median(dists) - d_target) <= 0.03


def test_sim_result_serialization():
    problem = binary_problem(0.25)
    law = chain_law(alpha=0.3)
    g = np.array([[0, 1]])
    res = run_simulation(problem, law, g,
                         std_params(40, 3, 0.1, 0.25, seed=0))
    d = res.to_json_dict()
    assert set(d["event_counts"]) == {"e0", "e1", "e2", "e3", "e4"}
    assert len(d["events"]) == 3
    csv_text = res.per_block_csv()
    assert csv_text.splitlines()[0] == "block,e0,e1,e2,e3,e4,distortion"
    assert len(csv_text.splitlines()) == 4


def test_params_validation():
    with pytest.raises(ValueError):
        BlockCodeParams(n=10, B=2, R=0.1, R_tilde=0.1,
                        eps1=0.3, eps2=0.2, eps3=0.4, eps_tilde=0.5, eps=0.6)
    with pytest.raises(ValueError):
        BlockCodeParams(n=0, B=2, R=0.1, R_tilde=0.1)
    with pytest.raises(ValueError):
        BlockCodeParams(n=10, B=2, R=-0.1, R_tilde=0.1)
