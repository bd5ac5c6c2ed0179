from collections import Counter
from fractions import Fraction
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filtra.arith import Q5
from filtra.graph import (
    ROOT,
    Edge,
    GradedGraph,
    ValidationError,
    build_glimm,
    build_pascal,
    build_words_Z,
    central_equipment,
    check_path,
    enumerate_paths,
)
from filtra.measures import (
    AgreeingMeasure,
    cocycle_value,
    fibonacci_chain_measure,
    golden_lambda,
    load_measure,
    mixture,
    pascal_bernoulli_measure,
    rwrs_words_sample,
    sample_path,
    sample_paths,
    save_measure,
    two_state_chain_measure,
    uniform_path_measure,
    words_Z_uniform_measure,
)


def built_measures():
    pascal = build_pascal(8)
    glimm = build_glimm([2, 3, 2, 2, 2, 3, 2, 2])
    return [
        pascal_bernoulli_measure(pascal, Fraction(1, 3)),
        uniform_path_measure(pascal),
        uniform_path_measure(glimm),
        two_state_chain_measure(Fraction(3, 4), 8)[2],
        fibonacci_chain_measure(8)[2],
        words_Z_uniform_measure(6),
    ]


@pytest.mark.parametrize("measure", built_measures(), ids=lambda m: m.graph.family)
def test_constructors_are_consistent_and_cylinders_sum_to_one(measure):
    measure.check()
    for n in range(measure.depth + 1):
        total = 0
        for v in measure.graph.levels[n]:
            for p in enumerate_paths(measure.graph, v):
                total += measure.cylinder_prob(p)
        assert total == 1


def test_cylinder_examples():
    g = build_pascal(3)
    m = pascal_bernoulli_measure(g, Fraction(1, 3))
    left = ((ROOT, "1,0", 0), ("1,0", "2,0", 0), ("2,0", "3,0", 0))
    assert m.cylinder_prob(left) == Fraction(2, 3) ** 3
    assert m.cylinder_prob(()) == 1
    glimm = build_glimm([2] * 6)
    u = uniform_path_measure(glimm)
    for n in range(7):
        p = enumerate_paths(glimm, glimm.levels[n][0])[0]
        assert u.cylinder_prob(p) == Fraction(1, 2**n)
    with pytest.raises(ValidationError):
        m.cylinder_prob(((ROOT, "1,0", 0), ("1,1", "2,1", 0)))


def test_bernoulli_half_is_uniform_and_bounds():
    g = build_pascal(6)
    assert pascal_bernoulli_measure(g, Fraction(1, 2)).levels == uniform_path_measure(g).levels
    for bad in (0, 1, Fraction(3, 2)):
        with pytest.raises(ValueError):
            pascal_bernoulli_measure(g, bad)


def test_mixture_stays_consistent():
    g = build_pascal(7)
    a = pascal_bernoulli_measure(g, Fraction(1, 4))
    b = pascal_bernoulli_measure(g, Fraction(3, 4))
    mixture([a, b], [Fraction(1, 2), Fraction(1, 2)]).check()


def test_inconsistent_measure_rejected():
    g = build_pascal(2)
    eq = central_equipment(g)
    bad = AgreeingMeasure(eq, [{ROOT: 1}, {"1,0": Fraction(1, 2), "1,1": Fraction(1, 2)}, {"2,0": Fraction(1, 4), "2,1": Fraction(3, 4)}])
    with pytest.raises(ValidationError):
        bad.check()


def test_two_state_chain_lambdas():
    g, eq, m = two_state_chain_measure(Fraction(3, 4), 4)
    assert eq.lam[("2:0", "3:0")] == (Fraction(3, 4),)
    assert eq.lam[("2:1", "3:0")] == (Fraction(1, 4),)
    assert all(x == Fraction(1, 2) for lv in m.levels[1:] for x in lv.values())
    g2, eq2, _ = two_state_chain_measure(Fraction(1, 2), 4)
    assert eq2.lam == central_equipment(g2).lam


def test_fibonacci_lambda():
    lam = golden_lambda()
    assert lam * lam + lam == 1
    assert abs(golden_lambda(exact=False) - 0.6180339) < 1e-7
    g, eq, m = fibonacci_chain_measure(5)
    assert isinstance(m.levels[3]["3:0"], Q5)
    g, eq, mf = fibonacci_chain_measure(5, exact=False)
    mf.check(tol=1e-12)


def _all_top_paths(measure, n):
    return [p for v in measure.graph.levels[n] for p in enumerate_paths(measure.graph, v)]


def test_cocycle_examples():
    g = build_glimm([2, 2, 2, 2])
    eq = central_equipment(g)
    paths = enumerate_paths(g, "4")
    for s in paths:
        assert cocycle_value(eq, s, s) == 1
        for t in paths:
            assert cocycle_value(eq, s, t) == 1

    g, eq, _ = two_state_chain_measure(Fraction(3, 4), 4)
    seen = set()
    for v in g.levels[4]:
        ps = enumerate_paths(g, v)
        for s, t in itertools.product(ps, ps):
            if sum(a != b for a, b in zip(s, t)) == 1:
                seen.add(cocycle_value(eq, s, t))
    assert seen <= {Fraction(3), Fraction(1, 3), Fraction(1)}
    assert {Fraction(3), Fraction(1, 3)} <= seen
    with pytest.raises(ValueError):
        cocycle_value(eq, enumerate_paths(g, "3:0")[0], enumerate_paths(g, "3:1")[0])


def test_cocycle_identities():
    for g, eq in [two_state_chain_measure(Fraction(2, 7), 4)[:2], fibonacci_chain_measure(5)[:2]]:
        top = g.levels[-1][0]
        ps = enumerate_paths(g, top)
        for s, t, z in itertools.product(ps[:6], repeat=3):
            assert cocycle_value(eq, t, s) * cocycle_value(eq, s, t) == 1
            assert cocycle_value(eq, s, t) == cocycle_value(eq, z, t) * cocycle_value(eq, s, z)


def _sigma_ok(hits, count, p, k):
    return abs(hits - count * p) <= k * math.sqrt(count * p * (1 - p))


def test_sampler_glimm_first_coordinate():
    g = build_glimm([2] * 6)
    u = uniform_path_measure(g)
    paths = sample_paths(u, 6, 10_000, seed=11)
    for p in paths:
        check_path(g, p)
    assert _sigma_ok(sum(p[0][2] == 0 for p in paths), 10_000, 0.5, 3)


def test_sampler_deterministic_line_and_seed():
    line = GradedGraph([[ROOT]] + [[str(n)] for n in range(1, 6)], [Edge(ROOT, "1")] + [Edge(str(n), str(n + 1)) for n in range(1, 5)])
    u = uniform_path_measure(line)
    assert sample_path(u, 5, seed=3) == enumerate_paths(line, "5")[0]
    g = build_pascal(10)
    m = pascal_bernoulli_measure(g, Fraction(1, 3))
    assert sample_paths(m, 10, 5, seed=1) == sample_paths(m, 10, 5, seed=1)


def test_sampler_pascal_mean():
    g = build_pascal(20)
    m = pascal_bernoulli_measure(g, Fraction(1, 3))
    paths = sample_paths(m, 20, 10_000, seed=5)
    ks = np.array([g.payloads[p[-1][1]][1] / 20 for p in paths])
    sd = math.sqrt((1 / 3) * (2 / 3) / 20 / 10_000)
    assert abs(ks.mean() - 1 / 3) <= 3 * sd


def test_sampler_cylinder_frequencies_within_4_sigma():
    m = two_state_chain_measure(Fraction(3, 4), 3)[2]
    paths = sample_paths(m, 3, 10_000, seed=2)
    counts = Counter(paths)
    for p in _all_top_paths(m, 3):
        prob = float(m.cylinder_prob(p))
        assert _sigma_ok(counts[p], 10_000, prob, 4)


def test_rwrs_paths_valid_and_balanced():
    g = build_words_Z(10)
    inner = Counter()
    total = 0
    for i in range(10_000):
        p = rwrs_words_sample(i, 10_000 + i, 10)
        check_path(g, p)
        # which of the two incoming copies of the top vertex was used: prefix copy 0 or the other
        top_step = p[-1]
        inner[top_step[0] == top_step[1][:-1] and top_step[2] == 0] += 1
        total += 1
    assert _sigma_ok(inner[True], total, 0.5, 4)
    ones = Counter(rwrs_words_sample(s, s + 1, 1)[0][1] for s in range(2000))
    assert set(ones) == {"0", "1"}
    assert _sigma_ok(ones["1"], 2000, 0.5, 4)


def test_json_round_trip(tmp_path):
    g, eq, m = fibonacci_chain_measure(6)
    path = tmp_path / "m.json"
    save_measure(path, m)
    assert load_measure(path, eq).levels == m.levels
    g = build_pascal(5)
    b = pascal_bernoulli_measure(g, Fraction(2, 5))
    save_measure(path, b)
    assert load_measure(path, central_equipment(g)).levels == b.levels


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=100), st.integers(1, 9))
def test_bernoulli_consistency_property(p, n):
    pascal_bernoulli_measure(build_pascal(n), p).check()
